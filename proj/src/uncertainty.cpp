#include "edl/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "edl/csv.hpp"

namespace edl {

UQReport report(const Dirichlet& d) {
  const ProbVector m = d.mean();
  UQReport r;
  r.ent = shannon_entropy(m.values());
  r.aleatoric = d.expected_cat_entropy();
  // Clipping mi would break ent = mi + aleatoric; push residue into aleatoric.
  r.mi = r.ent - r.aleatoric;
  if (r.mi < 0.0) {
    r.mi = 0.0;
    r.aleatoric = r.ent;
  }
  r.dent = d.diff_entropy();
  r.maxp = m.max();
  r.energy = d.energy();
  return r;
}

UQReport ensemble_report(std::span<const double> members, std::size_t classes) {
  if (classes == 0 || members.empty() || members.size() % classes != 0) {
    throw std::invalid_argument("ensemble_report: members must be rows of length C");
  }
  const std::size_t m = members.size() / classes;
  std::vector<double> mean(classes, 0.0);
  double member_entropy = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const auto row = members.subspan(j * classes, classes);
    member_entropy += shannon_entropy(row);
    for (std::size_t k = 0; k < classes; ++k) mean[k] += row[k];
  }
  for (double& v : mean) v /= static_cast<double>(m);
  member_entropy /= static_cast<double>(m);
  UQReport r;
  r.ent = shannon_entropy(mean);
  r.aleatoric = std::min(member_entropy, r.ent);
  r.mi = r.ent - r.aleatoric;
  r.maxp = *std::max_element(mean.begin(), mean.end());
  r.dent = std::numeric_limits<double>::quiet_NaN();
  r.energy = std::numeric_limits<double>::quiet_NaN();
  return r;
}

void write_report_csv(std::ostream& out, std::span<const UQReport> rows) {
  out << "sample_id,mi,dent,ent,maxp,aleatoric,energy\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const UQReport& r = rows[i];
    out << i << ',' << csv::format(r.mi) << ',' << csv::format(r.dent) << ','
        << csv::format(r.ent) << ',' << csv::format(r.maxp) << ',' << csv::format(r.aleatoric)
        << ',' << csv::format(r.energy) << '\n';
  }
}

}  // namespace edl
