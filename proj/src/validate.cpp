#include "finsler/validate.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <span>

#include "finsler/errors.hpp"
#include "finsler/expr.hpp"
#include "finsler/sampling.hpp"
#include "finsler/tensors.hpp"

namespace finsler {
namespace {

constexpr double kHomogeneityTol = 1e-9;
constexpr double kLambdas[] = {0.5, 2.0, 3.7};

void note_failure(ValidationReport& rep, const std::string& msg) {
  if (std::find(rep.failures.begin(), rep.failures.end(), msg) ==
      rep.failures.end())
    rep.failures.push_back(msg);
}

}  // namespace

ValidationReport validate_spec(const MetricSpec& spec, int samples,
                               std::uint64_t seed) {
  if (samples <= 0) throw SpecError("sample count must be positive");
  ValidationReport rep;
  rep.samples_requested = samples;
  rep.min_F = std::numeric_limits<double>::infinity();
  rep.min_eig_rel = std::numeric_limits<double>::infinity();

  SampleRng rng(seed);
  Vec x, y;
  const int max_draws = samples * 50;
  int draws = 0;
  while (rep.samples_used < samples && draws < max_draws) {
    ++draws;
    draw_candidate(spec.region, rng, x, y);
    ValidationRecord rec;
    rec.x = x;
    rec.y = y;
    try {
      std::span<const double> xs(x.data(), std::size_t(spec.dim));
      std::span<const double> ys(y.data(), std::size_t(spec.dim));
      rec.F = eval_double(*spec.expr, xs, ys, spec.params);
      rec.ok = true;

      if (!(rec.F > 0.0)) {
        rec.ok = false;
        rec.failure = "F is not positive on the declared region";
      }

      Vec scaled = y;
      for (const double lam : kLambdas) {
        scaled = y * lam;
        std::span<const double> ss(scaled.data(), std::size_t(spec.dim));
        const double fs = eval_double(*spec.expr, xs, ss, spec.params);
        const double rel =
            std::abs(fs - lam * rec.F) / (1.0 + std::abs(lam * rec.F));
        rec.homogeneity = std::max(rec.homogeneity, rel);
      }
      if (rec.ok && rec.homogeneity > kHomogeneityTol) {
        rec.ok = false;
        rec.failure = "F is not positively 1-homogeneous in y";
      }

      const DerivTable table = DerivTable::from_jet(spec, x, y);
      Mat g(spec.dim, spec.dim);
      for (int i = 0; i < spec.dim; ++i)
        for (int j = i; j < spec.dim; ++j) {
          g(i, j) = 0.5 * table.w(-1, {i, j});
          g(j, i) = g(i, j);
        }
      const Eigen::SelfAdjointEigenSolver<Mat> eig(g);
      const double mean_eig = g.trace() / double(spec.dim);
      rec.min_eig_rel =
          eig.eigenvalues().minCoeff() / (mean_eig > 0.0 ? mean_eig : 1.0);
      if (rec.ok && (mean_eig <= 0.0 || rec.min_eig_rel <= kPdRelEig)) {
        rec.ok = false;
        rec.failure = "metric tensor is not positive-definite";
      }

      ++rep.samples_used;
      rep.worst_homogeneity = std::max(rep.worst_homogeneity, rec.homogeneity);
      rep.min_F = std::min(rep.min_F, rec.F);
      rep.min_eig_rel = std::min(rep.min_eig_rel, rec.min_eig_rel);
      if (!rec.ok) note_failure(rep, rec.failure);
      rep.records.push_back(std::move(rec));
    } catch (const EvalError& err) {
      ++rep.rejected;
      note_failure(rep, std::string("evaluation rejected a draw: ") +
                            err.what());
    }
  }

  if (rep.samples_used == 0)
    throw SpecError("the declared region yields no evaluable support element");
  rep.ok = true;
  for (const auto& r : rep.records) rep.ok = rep.ok && r.ok;
  return rep;
}

}  // namespace finsler
