#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "edl/dirichlet.hpp"

namespace edl {

/// Per-sample uncertainty scores in nats. Metrics that do not apply to a
/// source (dent and energy of an ensemble) are NaN.
struct UQReport {
  double mi = 0.0;         // epistemic: mutual information
  double dent = 0.0;       // epistemic: differential entropy of the meta distribution
  double ent = 0.0;        // total: entropy of the predictive distribution
  double maxp = 0.0;       // confidence: max predictive probability
  double aleatoric = 0.0;  // expected categorical entropy
  double energy = 0.0;     // -log sum alpha
};

UQReport report(const Dirichlet& d);

/// Reference uncertainty of a finite set of categorical predictions:
/// entropy of the mean, mean member entropy, and their difference.
/// `members` is row-major (M x C).
UQReport ensemble_report(std::span<const double> members, std::size_t classes);

/// CSV `sample_id,mi,dent,ent,maxp,aleatoric,energy`.
void write_report_csv(std::ostream& out, std::span<const UQReport> rows);

}  // namespace edl
