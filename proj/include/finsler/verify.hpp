#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "finsler/fields.hpp"
#include "finsler/spaces.hpp"
#include "finsler/spec.hpp"
#include "finsler/tensors.hpp"

namespace finsler {

/// Implication statements exercised by the harness.  T1-T5 pair a special
/// torsion form with a semi-concurrent field; T6/C1 relate the T-tensor (or
/// its trace) to vanishing torsion under the conformal condition; L1 is the
/// independence statement for semi-concurrent fields.
enum class TheoremId { T1, T2, T3, T4, T5, T6, C1, L1 };

enum class TheoremVerdict { Consistent, Vacuous, Violated };

std::string theorem_id_name(TheoremId id);
std::optional<TheoremId> parse_theorem_id(std::string_view token);
std::string verdict_name(TheoremVerdict v);

struct NamedValue {
  std::string name;
  double value = 0.0;
};

struct TheoremReport {
  TheoremId id = TheoremId::T1;
  std::string title;
  std::vector<NamedValue> hypothesis_residuals;
  std::vector<NamedValue> side_conditions;  ///< margins for the "!= 0" provisos
  std::vector<NamedValue> step_residuals;   ///< intermediate identities, reported not asserted
  std::string conclusion_name;
  double conclusion_residual = 0.0;
  TheoremVerdict verdict = TheoremVerdict::Vacuous;
  std::vector<std::string> notes;
  int samples_used = 0;
};

struct VerifyContext {
  const MetricSpec* metric = nullptr;
  std::span<const TensorBundle> bundles;
  const VectorFieldSpec* field = nullptr;  ///< candidate semi-concurrent B^i
  const VectorFieldSpec* sigma = nullptr;  ///< conformal gradient sigma_h
  ToleranceSet tols;
  double side_margin = 1e-3;
};

/// Evaluates one implication over the sampled support elements.  Absent
/// inputs make the affected direction vacuous (with a note) rather than
/// raising; verdict "violated" requires satisfied hypotheses, side
/// conditions clear of their margins, and a failing conclusion.
TheoremReport run_theorem(TheoremId id, const VerifyContext& ctx);

std::vector<TheoremReport> run_all_theorems(const VerifyContext& ctx);

/// One unconditional identity evaluated across the samples.  Entries with
/// asserted=false are known discrepancies reported for transparency only.
struct IdentityCheck {
  std::string name;
  double residual = 0.0;
  double tol = 0.0;
  bool asserted = true;
  bool pass = true;
};

/// The always-true cross-checks: homogeneity/indicatory contractions, the
/// two metric routes, inverse consistency, the 3D frame split, the
/// finite-difference agreement of the hv-curvature (capped at fd_samples
/// support elements), and the dual-route trace of the T-tensor.
std::vector<IdentityCheck> identity_suite(const MetricSpec& spec,
                                          std::span<const TensorBundle> bundles,
                                          int fd_samples = 10);

}  // namespace finsler
