#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "finsler/spec.hpp"
#include "finsler/types.hpp"

namespace finsler {

/// One sampled support element with its admissibility diagnostics.
struct ValidationRecord {
  Vec x, y;
  double F = 0.0;
  double homogeneity = 0.0;  ///< worst relative scaling error over lambda set
  double min_eig_rel = 0.0;  ///< min eigenvalue of g over its mean eigenvalue
  bool ok = false;
  std::string failure;  ///< empty when ok
};

struct ValidationReport {
  bool ok = false;
  int samples_requested = 0;
  int samples_used = 0;   ///< draws that evaluated without a domain error
  int rejected = 0;       ///< draws the expression itself could not evaluate
  double worst_homogeneity = 0.0;
  double min_F = 0.0;
  double min_eig_rel = 0.0;
  std::vector<std::string> failures;  ///< distinct failure descriptions
  std::vector<ValidationRecord> records;
};

/// Samples the declared region and checks, at every draw: F > 0, positive
/// 1-homogeneity of F in y, and positive-definiteness of the metric tensor.
/// Domain errors raised by the expression are counted as rejections; an
/// entirely inadmissible region throws SpecError.
ValidationReport validate_spec(const MetricSpec& spec, int samples,
                               std::uint64_t seed);

}  // namespace finsler
