#include "edl/model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace edl {
namespace {

constexpr double kLogTwoPi = 1.8378770664093453;
constexpr const char* kCheckpointMagic = "edl-checkpoint";
constexpr int kCheckpointVersion = 1;

}  // namespace

std::string to_string(HeadKind kind) { return kind == HeadKind::Direct ? "direct" : "density"; }

HeadKind parse_head_kind(const std::string& name) {
  if (name == "direct") return HeadKind::Direct;
  if (name == "density") return HeadKind::Density;
  throw std::invalid_argument("unknown head '" + name + "' (expected direct, density)");
}

MetaModel::MetaModel(Architecture arch, std::vector<double> alpha0, std::uint64_t seed)
    : arch_(std::move(arch)), alpha0_(std::move(alpha0)) {
  if (arch_.classes < 2) throw std::invalid_argument("MetaModel: need at least two classes");
  if (arch_.input_dim == 0) throw std::invalid_argument("MetaModel: zero input dimension");
  if (alpha0_.empty()) alpha0_.assign(arch_.classes, 1.0);
  if (alpha0_.size() != arch_.classes) throw std::invalid_argument("MetaModel: alpha0 length");
  for (double a : alpha0_) {
    if (!(a > 0.0)) throw std::invalid_argument("MetaModel: alpha0 must be positive");
  }
  if (!(arch_.dropout >= 0.0 && arch_.dropout < 1.0)) {
    throw std::invalid_argument("MetaModel: dropout rate must lie in [0,1)");
  }
  if (arch_.head == HeadKind::Density && arch_.latent_dim == 0) {
    throw std::invalid_argument("MetaModel: density head needs a latent dimension");
  }
  class_counts_.assign(arch_.classes, 1.0);
  layout();
  initialize(seed);
}

void MetaModel::layout() {
  layers_.clear();
  std::size_t offset = 0;
  std::size_t in = arch_.input_dim;
  auto add = [&](std::size_t out) {
    Affine a{in, out, offset, offset + in * out};
    offset += in * out + out;
    layers_.push_back(a);
    in = out;
  };
  for (std::size_t width : arch_.hidden) add(width);
  add(arch_.output_dim());
  if (arch_.head == HeadKind::Density) {
    density_means_ = offset;
    offset += arch_.classes * arch_.latent_dim;
    density_logvars_ = offset;
    offset += arch_.classes * arch_.latent_dim;
  }
  params_.assign(offset, 0.0);
}

void MetaModel::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (const Affine& a : layers_) {
    const double bound = std::sqrt(6.0 / static_cast<double>(a.in));
    for (std::size_t i = 0; i < a.in * a.out; ++i) params_[a.weight + i] = rng.uniform(-bound, bound);
  }
  if (arch_.head == HeadKind::Density) {
    for (std::size_t i = 0; i < arch_.classes * arch_.latent_dim; ++i) {
      params_[density_means_ + i] = rng.uniform(-1.0, 1.0);
    }
  }
}

void MetaModel::set_class_counts(std::vector<double> counts) {
  if (counts.size() != arch_.classes) throw std::invalid_argument("set_class_counts: length");
  class_counts_ = std::move(counts);
}

void MetaModel::set_class_density(std::size_t k, std::span<const double> mean,
                                  std::span<const double> logvar) {
  if (arch_.head != HeadKind::Density) throw std::logic_error("set_class_density: direct head");
  const std::size_t dim = arch_.latent_dim;
  if (k >= arch_.classes || mean.size() != dim || logvar.size() != dim) {
    throw std::invalid_argument("set_class_density: shape mismatch");
  }
  std::copy(mean.begin(), mean.end(), params_.begin() + static_cast<std::ptrdiff_t>(density_means_ + k * dim));
  std::copy(logvar.begin(), logvar.end(),
            params_.begin() + static_cast<std::ptrdiff_t>(density_logvars_ + k * dim));
}

void MetaModel::run_backbone(std::span<const double> x, Tape& tape, Rng* dropout_rng) const {
  if (x.size() != arch_.input_dim) {
    throw std::invalid_argument("MetaModel::forward: expected input of dimension " +
                                std::to_string(arch_.input_dim) + ", got " +
                                std::to_string(x.size()));
  }
  const std::size_t n_hidden = arch_.hidden.size();
  tape.activations.resize(n_hidden + 1);
  tape.masks.resize(n_hidden);
  tape.activations[0].assign(x.begin(), x.end());
  const bool drop = dropout_rng != nullptr && arch_.dropout > 0.0;
  const double keep_scale = drop ? 1.0 / (1.0 - arch_.dropout) : 1.0;

  for (std::size_t l = 0; l <= n_hidden; ++l) {
    const Affine& a = layers_[l];
    const std::vector<double>& h = tape.activations[l];
    std::vector<double>& out = l < n_hidden ? tape.activations[l + 1] : tape.output;
    out.resize(a.out);
    const double* w = params_.data() + a.weight;
    const double* b = params_.data() + a.bias;
    for (std::size_t o = 0; o < a.out; ++o) {
      double acc = b[o];
      const double* row = w + o * a.in;
      for (std::size_t i = 0; i < a.in; ++i) acc += row[i] * h[i];
      out[o] = acc;
    }
    if (l == n_hidden) break;
    std::vector<double>& mask = tape.masks[l];
    if (drop) {
      mask.resize(a.out);
      for (std::size_t o = 0; o < a.out; ++o) {
        mask[o] = dropout_rng->bernoulli(arch_.dropout) ? 0.0 : keep_scale;
      }
    } else {
      mask.clear();
    }
    for (std::size_t o = 0; o < a.out; ++o) {
      double v = out[o] < 0.0 ? 0.0 : out[o];  // NaN passes through
      if (drop) v *= mask[o];
      out[o] = v;
    }
  }
}

void MetaModel::apply_head(Tape& tape) const {
  const std::size_t c = arch_.classes;
  tape.alpha.resize(c);
  tape.saturated.assign(c, false);
  if (arch_.head == HeadKind::Direct) {
    tape.evidence.clear();
    for (std::size_t k = 0; k < c; ++k) {
      double logit = tape.output[k];
      if (logit > arch_.clamp || logit < -arch_.clamp) {
        tape.saturated[k] = true;
        logit = std::clamp(logit, -arch_.clamp, arch_.clamp);
      }
      tape.alpha[k] = std::exp(logit);
    }
    return;
  }
  const std::size_t dim = arch_.latent_dim;
  tape.evidence.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    const double* mu = params_.data() + density_means_ + k * dim;
    const double* logvar = params_.data() + density_logvars_ + k * dim;
    double logp = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = tape.output[j] - mu[j];
      logp -= 0.5 * (d * d * std::exp(-logvar[j]) + logvar[j] + kLogTwoPi);
    }
    double ev = 0.0;
    if (class_counts_[k] > 0.0) {
      double log_ev = std::log(class_counts_[k]) + logp;
      if (log_ev > arch_.clamp) {
        tape.saturated[k] = true;
        log_ev = arch_.clamp;
      }
      ev = std::exp(log_ev);
    }
    tape.evidence[k] = ev;
    tape.alpha[k] = alpha0_[k] + ev;
  }
}

Dirichlet MetaModel::forward(std::span<const double> x) const {
  Tape tape;
  return forward(x, tape);
}

Dirichlet MetaModel::forward(std::span<const double> x, Tape& tape, Rng* dropout_rng) const {
  run_backbone(x, tape, dropout_rng);
  apply_head(tape);
  return Dirichlet(tape.alpha);
}

std::vector<double> MetaModel::logits(std::span<const double> x, Rng* dropout_rng) const {
  Tape tape;
  run_backbone(x, tape, dropout_rng);
  return tape.output;
}

void MetaModel::backward(const Tape& tape, std::span<const double> dloss_dalpha,
                         std::span<double> grad) const {
  const std::size_t c = arch_.classes;
  if (dloss_dalpha.size() != c || grad.size() != params_.size()) {
    throw std::invalid_argument("MetaModel::backward: shape mismatch");
  }
  std::vector<double> d_out(arch_.output_dim(), 0.0);
  if (arch_.head == HeadKind::Direct) {
    for (std::size_t k = 0; k < c; ++k) {
      if (!tape.saturated[k]) d_out[k] = dloss_dalpha[k] * tape.alpha[k];
    }
  } else {
    const std::size_t dim = arch_.latent_dim;
    for (std::size_t k = 0; k < c; ++k) {
      if (tape.saturated[k] || tape.evidence[k] == 0.0) continue;
      // d alpha_k / d log p(z|k) = evidence_k
      const double g = dloss_dalpha[k] * tape.evidence[k];
      const double* mu = params_.data() + density_means_ + k * dim;
      const double* logvar = params_.data() + density_logvars_ + k * dim;
      double* g_mu = grad.data() + density_means_ + k * dim;
      double* g_logvar = grad.data() + density_logvars_ + k * dim;
      for (std::size_t j = 0; j < dim; ++j) {
        const double d = tape.output[j] - mu[j];
        const double prec = std::exp(-logvar[j]);
        d_out[j] -= g * d * prec;
        g_mu[j] += g * d * prec;
        g_logvar[j] += g * 0.5 * (d * d * prec - 1.0);
      }
    }
  }
  backward_output(tape, d_out, grad);
}

void MetaModel::backward_output(const Tape& tape, std::span<const double> dloss_doutput,
                                std::span<double> grad) const {
  if (dloss_doutput.size() != arch_.output_dim() || grad.size() != params_.size()) {
    throw std::invalid_argument("MetaModel::backward_output: shape mismatch");
  }
  std::vector<double> delta(dloss_doutput.begin(), dloss_doutput.end());
  std::vector<double> below;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Affine& a = layers_[l];
    const std::vector<double>& h = tape.activations[l];
    const double* w = params_.data() + a.weight;
    double* gw = grad.data() + a.weight;
    double* gb = grad.data() + a.bias;
    for (std::size_t o = 0; o < a.out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      if (d == 0.0) continue;
      double* row = gw + o * a.in;
      for (std::size_t i = 0; i < a.in; ++i) row[i] += d * h[i];
    }
    if (l == 0) break;
    below.assign(a.in, 0.0);
    for (std::size_t o = 0; o < a.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = w + o * a.in;
      for (std::size_t i = 0; i < a.in; ++i) below[i] += row[i] * d;
    }
    // h = mask * relu(pre); h > 0 exactly where the unit passed gradient.
    const std::vector<double>& mask = tape.masks[l - 1];
    for (std::size_t i = 0; i < a.in; ++i) {
      if (h[i] <= 0.0) {
        below[i] = 0.0;
      } else if (!mask.empty()) {
        below[i] *= mask[i];
      }
    }
    delta.swap(below);
  }
}

void MetaModel::save(std::ostream& out) const {
  std::ostringstream s;
  s << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  s << "input_dim " << arch_.input_dim << '\n';
  s << "hidden " << arch_.hidden.size();
  for (std::size_t h : arch_.hidden) s << ' ' << h;
  s << '\n';
  s << "classes " << arch_.classes << '\n';
  s << "head " << to_string(arch_.head) << '\n';
  s << std::hexfloat;
  s << "clamp " << arch_.clamp << '\n';
  s << "latent_dim " << std::dec << arch_.latent_dim << '\n' << std::hexfloat;
  s << "dropout " << arch_.dropout << '\n';
  s << "alpha0";
  for (double a : alpha0_) s << ' ' << a;
  s << '\n';
  s << "class_counts";
  for (double n : class_counts_) s << ' ' << n;
  s << '\n';
  s << "params " << std::dec << params_.size() << '\n' << std::hexfloat;
  for (double p : params_) s << p << '\n';
  out << s.str();
}

namespace {

void expect_key(std::istream& in, const char* key) {
  std::string word;
  if (!(in >> word) || word != key) {
    throw std::runtime_error(std::string("checkpoint: expected '") + key + "', got '" + word + "'");
  }
}

double read_hex(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw std::runtime_error("checkpoint: truncated");
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (*end != '\0') throw std::runtime_error("checkpoint: bad number '" + token + "'");
  return v;
}

}  // namespace

MetaModel MetaModel::load(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kCheckpointMagic) {
    throw std::runtime_error("checkpoint: not an edl checkpoint");
  }
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  MetaModel m;
  Architecture& a = m.arch_;
  std::size_t n_hidden = 0;
  std::string head;
  expect_key(in, "input_dim");
  in >> a.input_dim;
  expect_key(in, "hidden");
  in >> n_hidden;
  a.hidden.resize(n_hidden);
  for (auto& h : a.hidden) in >> h;
  expect_key(in, "classes");
  in >> a.classes;
  expect_key(in, "head");
  in >> head;
  a.head = parse_head_kind(head);
  expect_key(in, "clamp");
  a.clamp = read_hex(in);
  expect_key(in, "latent_dim");
  in >> a.latent_dim;
  expect_key(in, "dropout");
  a.dropout = read_hex(in);
  expect_key(in, "alpha0");
  m.alpha0_.resize(a.classes);
  for (auto& v : m.alpha0_) v = read_hex(in);
  expect_key(in, "class_counts");
  m.class_counts_.resize(a.classes);
  for (auto& v : m.class_counts_) v = read_hex(in);
  expect_key(in, "params");
  std::size_t count = 0;
  in >> count;
  if (!in) throw std::runtime_error("checkpoint: malformed header");
  m.layout();
  if (count != m.params_.size()) {
    throw std::runtime_error("checkpoint: parameter count does not match architecture");
  }
  for (auto& p : m.params_) p = read_hex(in);
  return m;
}

void AdamState::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || params.size() != first.size()) {
    throw std::invalid_argument("AdamState::step: shape mismatch");
  }
  ++steps;
  const double t = static_cast<double>(steps);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    first[i] = beta1 * first[i] + (1.0 - beta1) * g;
    second[i] = beta2 * second[i] + (1.0 - beta2) * g * g;
    const double m_hat = first[i] / c1;
    const double v_hat = second[i] / c2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
  }
}

}  // namespace edl
