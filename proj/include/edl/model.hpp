#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "edl/dirichlet.hpp"
#include "edl/random.hpp"

namespace edl {

enum class HeadKind { Direct, Density };

std::string to_string(HeadKind kind);
HeadKind parse_head_kind(const std::string& name);

/// Shape of a meta-model: ReLU MLP backbone followed by a Dirichlet head.
struct Architecture {
  std::size_t input_dim = 2;
  std::vector<std::size_t> hidden{64, 64, 64};
  std::size_t classes = 3;
  HeadKind head = HeadKind::Direct;
  /// Direct head: logits are clamped to [-clamp, clamp] before exp.
  /// Density head: log-evidence is capped at clamp.
  double clamp = 15.0;
  /// Density head latent dimension.
  std::size_t latent_dim = 6;
  /// Inverted-dropout rate on hidden activations; only active when a
  /// dropout generator is passed to forward.
  double dropout = 0.0;

  std::size_t output_dim() const { return head == HeadKind::Direct ? classes : latent_dim; }
  bool operator==(const Architecture&) const = default;
};

/// Intermediate values of one forward pass, consumed by backward.
struct Tape {
  std::vector<std::vector<double>> activations;  // input, then each hidden layer post-ReLU
  std::vector<std::vector<double>> masks;        // dropout scale per hidden unit (empty if off)
  std::vector<double> output;                    // logits (direct) or latent z (density)
  std::vector<double> alpha;
  std::vector<double> evidence;                  // density head: alpha - alpha0
  std::vector<bool> saturated;                   // clamp active per class
};

/// Feed-forward network mapping x to Dirichlet concentrations alpha(x).
class MetaModel {
 public:
  MetaModel(Architecture arch, std::vector<double> alpha0, std::uint64_t seed);

  const Architecture& architecture() const { return arch_; }
  std::size_t classes() const { return arch_.classes; }
  std::span<const double> alpha0() const { return alpha0_; }

  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params() { return params_; }
  std::size_t param_count() const { return params_.size(); }

  /// Density head: per-class training counts N_y.
  void set_class_counts(std::vector<double> counts);
  std::span<const double> class_counts() const { return class_counts_; }
  /// Density head: overwrite class k's latent Gaussian (means, log-variances).
  void set_class_density(std::size_t k, std::span<const double> mean,
                         std::span<const double> logvar);

  Dirichlet forward(std::span<const double> x) const;
  Dirichlet forward(std::span<const double> x, Tape& tape, Rng* dropout_rng = nullptr) const;

  /// Raw (unclamped) final-layer outputs; logits for a direct head.
  std::vector<double> logits(std::span<const double> x, Rng* dropout_rng = nullptr) const;

  /// Accumulates dL/dparams into grad given dL/dalpha for the taped pass.
  void backward(const Tape& tape, std::span<const double> dloss_dalpha,
                std::span<double> grad) const;
  /// Same, starting from dL/d(output) of the final affine layer.
  void backward_output(const Tape& tape, std::span<const double> dloss_doutput,
                       std::span<double> grad) const;

  void save(std::ostream& out) const;
  static MetaModel load(std::istream& in);

  bool operator==(const MetaModel&) const = default;

 private:
  struct Affine {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t weight = 0;  // offset of out x in row-major weights
    std::size_t bias = 0;
    bool operator==(const Affine&) const = default;
  };

  MetaModel() = default;
  void layout();
  void initialize(std::uint64_t seed);
  void run_backbone(std::span<const double> x, Tape& tape, Rng* dropout_rng) const;
  void apply_head(Tape& tape) const;

  Architecture arch_;
  std::vector<double> alpha0_;
  std::vector<double> class_counts_;
  std::vector<Affine> layers_;
  std::size_t density_means_ = 0;    // classes x latent
  std::size_t density_logvars_ = 0;  // classes x latent
  std::vector<double> params_;
};

/// Bias-corrected adaptive-moment optimizer without weight decay.
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<double> first;
  std::vector<double> second;
  std::uint64_t steps = 0;

  explicit AdamState(std::size_t n, double lr = 1e-3)
      : learning_rate(lr), first(n, 0.0), second(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grads);
};

}  // namespace edl
