#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "finsler/errors.hpp"
#include "finsler/fields.hpp"
#include "finsler/report.hpp"
#include "finsler/sampling.hpp"
#include "finsler/spaces.hpp"
#include "finsler/spec.hpp"
#include "finsler/tensors.hpp"
#include "finsler/validate.hpp"
#include "finsler/verify.hpp"

namespace {

using namespace finsler;

struct Options {
  std::string metric_path;
  std::string field_path;
  std::string sigma_path;
  std::string at;
  std::string theorem;
  std::string out;
  int samples = 100;
  std::uint64_t seed = 42;
  bool find_field = false;
  double nullspace_threshold = 1e-8;
  double side_margin = 1e-3;
  std::vector<std::string> tol_overrides;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ReportInput input_entry(const std::string& role, const std::string& path) {
  return ReportInput{role, path, content_hash(slurp(path))};
}

Vec parse_number_list(const std::string& text, const std::string& what) {
  Vec out(0);
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    const std::string token = text.substr(pos, next - pos);
    try {
      std::size_t used = 0;
      values.push_back(std::stod(token, &used));
      while (used < token.size() && std::isspace(unsigned(token[used])))
        ++used;
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw SpecError("--at: cannot parse " + what + " component '" + token +
                      "'");
    }
    pos = next + 1;
  }
  out.resize(int(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) out[int(i)] = values[i];
  return out;
}

/// Grammar: x=<v>,<v>,...;y=<v>,<v>,...
std::pair<Vec, Vec> parse_at(const std::string& text, int dim) {
  const std::size_t split = text.find(';');
  if (split == std::string::npos)
    throw SpecError("--at: expected 'x=...;y=...'");
  std::string xs = text.substr(0, split);
  std::string ys = text.substr(split + 1);
  const auto strip = [](std::string& s, const char* prefix) {
    while (!s.empty() && std::isspace(unsigned(s.front()))) s.erase(0, 1);
    if (s.rfind(prefix, 0) != 0)
      throw SpecError(std::string("--at: expected '") + prefix +
                      "' before a component list");
    s.erase(0, 2);
  };
  strip(xs, "x=");
  strip(ys, "y=");
  const Vec x = parse_number_list(xs, "x");
  const Vec y = parse_number_list(ys, "y");
  if (int(x.size()) != dim || int(y.size()) != dim)
    throw SpecError("--at: expected " + std::to_string(dim) +
                    " components for x and y");
  return {x, y};
}

std::map<std::string, double> parse_tol_overrides(
    const std::vector<std::string>& entries) {
  std::map<std::string, double> out;
  for (const std::string& e : entries) {
    const std::size_t eq = e.find('=');
    if (eq == std::string::npos || eq == 0)
      throw SpecError("--tol: expected name=value, got '" + e + "'");
    const std::string name = e.substr(0, eq);
    const std::string value = e.substr(eq + 1);
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size() || !(v > 0.0))
        throw std::invalid_argument(value);
      out[name] = v;
    } catch (const std::exception&) {
      throw SpecError("--tol: value for '" + name +
                      "' must be a positive number, got '" + value + "'");
    }
  }
  return out;
}

/// Deterministic support directions for the constant-field search: y draws
/// from the declared region at one fixed chart point.
std::vector<Vec> draw_directions(const MetricSpec& spec, std::uint64_t seed,
                                 int count) {
  SampleRng rng(seed);
  std::vector<Vec> out;
  Vec x, y;
  for (int i = 0; i < count; ++i) {
    draw_candidate(spec.region, rng, x, y);
    out.push_back(y);
  }
  return out;
}

VectorFieldSpec constant_field(const Vec& v, int dim, std::string name) {
  VectorFieldSpec f;
  f.name = std::move(name);
  f.dim = dim;
  for (int i = 0; i < dim; ++i) {
    auto node = std::make_shared<Expr>();
    node->kind = Expr::Kind::Number;
    node->number = v[i];
    f.components.push_back(std::move(node));
  }
  return f;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

void emit(const Json& report, const Options& opt) {
  write_report(report, opt.out);
  if (!opt.out.empty())
    std::cerr << "report written to " << opt.out << "\n";
}

// --- subcommands -----------------------------------------------------------

int cmd_validate(const Options& opt) {
  const MetricSpec spec = load_metric_file(opt.metric_path);
  const ValidationReport rep = validate_spec(spec, opt.samples, opt.seed);
  const ToleranceSet tols =
      resolve_tolerances(spec, parse_tol_overrides(opt.tol_overrides));
  Json results;
  results["validation"] = to_json(rep);
  emit(build_report("validate", {input_entry("metric", opt.metric_path)},
                    opt.seed, opt.samples, tols, std::move(results)),
       opt);
  std::cerr << "validate " << spec.name << ": "
            << (rep.ok ? "ok" : "FAILED") << " (" << rep.samples_used << "/"
            << rep.samples_requested << " samples, worst homogeneity "
            << fmt(rep.worst_homogeneity) << ", min F " << fmt(rep.min_F)
            << ")\n";
  for (const auto& f : rep.failures) std::cerr << "  failure: " << f << "\n";
  return rep.ok ? 0 : 1;
}

int cmd_tensors(const Options& opt) {
  const MetricSpec spec = load_metric_file(opt.metric_path);
  const ToleranceSet tols =
      resolve_tolerances(spec, parse_tol_overrides(opt.tol_overrides));
  Json results;
  if (!opt.at.empty()) {
    const auto [x, y] = parse_at(opt.at, spec.dim);
    const TensorBundle b = build_bundle(spec, x, y);
    results["at_bundle"] = to_json(b);
    emit(build_report("tensors", {input_entry("metric", opt.metric_path)},
                      opt.seed, opt.samples, tols, std::move(results)),
         opt);
    std::cerr << "tensors " << spec.name << " at the requested element: F="
              << fmt(b.at.F) << " |C|=" << fmt(b.C_lo.frobenius())
              << " |P|=" << fmt(b.P_lo.frobenius())
              << " |T|=" << fmt(b.T.frobenius()) << "\n";
    return 0;
  }
  const std::vector<TensorBundle> bundles =
      sample_bundles(spec, opt.samples, opt.seed);
  Json per_sample = Json::array();
  double c_max = 0.0, p_max = 0.0, t_max = 0.0;
  for (std::size_t s = 0; s < bundles.size(); ++s) {
    const TensorBundle& b = bundles[s];
    Json row;
    row["id"] = int(s);
    row["F"] = b.at.F;
    row["C_norm"] = b.C_lo.frobenius();
    row["C_norm2"] = b.C_norm2;
    row["P_norm"] = b.P_lo.frobenius();
    row["T_norm"] = b.T.frobenius();
    row["min_eig"] = b.min_eig;
    per_sample.push_back(std::move(row));
    c_max = std::max(c_max, b.C_lo.frobenius());
    p_max = std::max(p_max, b.P_lo.frobenius());
    t_max = std::max(t_max, b.T.frobenius());
  }
  Json aggregates;
  aggregates["C_norm_max"] = c_max;
  aggregates["P_norm_max"] = p_max;
  aggregates["T_norm_max"] = t_max;
  results["aggregates"] = std::move(aggregates);
  results["per_sample"] = std::move(per_sample);
  emit(build_report("tensors", {input_entry("metric", opt.metric_path)},
                    opt.seed, opt.samples, tols, std::move(results)),
       opt);
  std::cerr << "tensors " << spec.name << ": " << bundles.size()
            << " samples, max|C|=" << fmt(c_max) << " max|P|=" << fmt(p_max)
            << " max|T|=" << fmt(t_max) << "\n";
  return 0;
}

int cmd_classify(const Options& opt) {
  const MetricSpec spec = load_metric_file(opt.metric_path);
  const ToleranceSet tols =
      resolve_tolerances(spec, parse_tol_overrides(opt.tol_overrides));
  const std::vector<TensorBundle> bundles =
      sample_bundles(spec, opt.samples, opt.seed);
  const std::vector<ConditionVerdict> verdicts = classify_all(bundles, tols);
  Json rows = Json::array();
  for (const auto& v : verdicts) rows.push_back(to_json(v));
  Json results;
  results["classification"] = std::move(rows);
  emit(build_report("classify", {input_entry("metric", opt.metric_path)},
                    opt.seed, opt.samples, tols, std::move(results)),
       opt);
  std::cerr << "classify " << spec.name << ":\n";
  for (const auto& v : verdicts) {
    std::cerr << "  " << condition_name(v.condition) << ": "
              << (v.holds ? "holds" : "fails") << " (residual "
              << fmt(v.residual_rel) << (v.degenerate ? ", degenerate" : "")
              << (v.dim_warning ? ", dimension-limited" : "") << ")\n";
  }
  return 0;
}

int cmd_fields(const Options& opt) {
  const MetricSpec spec = load_metric_file(opt.metric_path);
  const ToleranceSet tols =
      resolve_tolerances(spec, parse_tol_overrides(opt.tol_overrides));
  if (opt.field_path.empty() && opt.sigma_path.empty() && !opt.find_field)
    throw SpecError("fields command needs --field, --sigma, or --find-field");

  const std::vector<TensorBundle> bundles =
      sample_bundles(spec, opt.samples, opt.seed);
  std::vector<ReportInput> inputs = {input_entry("metric", opt.metric_path)};
  Json results;

  if (!opt.field_path.empty()) {
    const VectorFieldSpec field = load_field_file(opt.field_path);
    inputs.push_back(input_entry("field", opt.field_path));
    const FieldCheckResult sc =
        check_sc(spec, field, bundles, tols.get("semi_concurrent"));
    const FieldCheckResult conc =
        check_concurrent(spec, field, bundles, tols.get("concurrent"));
    const Lemma1Report lem =
        lemma1_independence(spec, field, bundles, tols.get("semi_concurrent"),
                            opt.side_margin, tols.get("riemannian"));
    results["sc_check"] = to_json(sc);
    results["concurrent_check"] = to_json(conc);
    results["independence"] = to_json(lem);
    std::cerr << "field " << field.name << " on " << spec.name
              << ": semi_concurrent " << (sc.holds ? "holds" : "fails")
              << " (residual " << fmt(sc.residual_rel) << "), concurrent "
              << (conc.holds ? "holds" : "fails") << " (residual "
              << fmt(conc.residual_rel) << ")\n";
  }
  if (!opt.sigma_path.empty()) {
    const VectorFieldSpec sigma = load_field_file(opt.sigma_path);
    inputs.push_back(input_entry("sigma", opt.sigma_path));
    const FieldCheckResult cc =
        check_cc(spec, sigma, bundles, tols.get("contra_cc"));
    results["cc_check"] = to_json(cc);
    std::cerr << "covector " << sigma.name << " on " << spec.name
              << ": contra_cc " << (cc.holds ? "holds" : "fails")
              << " (residual " << fmt(cc.residual_rel) << ")\n";
  }
  if (opt.find_field) {
    Vec x0 = bundles.front().at.x;
    if (!opt.at.empty()) x0 = parse_at(opt.at, spec.dim).first;
    const std::vector<Vec> dirs =
        draw_directions(spec, opt.seed, std::min(opt.samples, 64));
    const NullspaceResult ns =
        find_sc_field(spec, x0, dirs, opt.nullspace_threshold);
    Json search = to_json(ns);
    search["x"] = [&x0] {
      Json a = Json::array();
      for (int i = 0; i < int(x0.size()); ++i) a.push_back(x0[i]);
      return a;
    }();
    results["sc_field_search"] = std::move(search);
    std::cerr << "sc field search on " << spec.name << ": basis size "
              << ns.basis.cols() << " (smallest singular value "
              << fmt(ns.singular_values.back()) << ", threshold "
              << fmt(ns.threshold) << ")\n";
  }

  emit(build_report("fields", inputs, opt.seed, opt.samples, tols,
                    std::move(results)),
       opt);
  return 0;
}

int cmd_verify(const Options& opt) {
  const MetricSpec spec = load_metric_file(opt.metric_path);
  const ToleranceSet tols =
      resolve_tolerances(spec, parse_tol_overrides(opt.tol_overrides));
  const std::vector<TensorBundle> bundles =
      sample_bundles(spec, opt.samples, opt.seed);
  std::vector<ReportInput> inputs = {input_entry("metric", opt.metric_path)};
  Json results;

  const std::vector<IdentityCheck> identities =
      identity_suite(spec, bundles, 8);
  bool identity_failed = false;
  {
    Json rows = Json::array();
    int asserted = 0, passed = 0;
    for (const auto& c : identities) {
      rows.push_back(to_json(c));
      if (c.asserted) {
        ++asserted;
        if (c.pass)
          ++passed;
        else
          identity_failed = true;
      }
    }
    results["identity_suite"] = std::move(rows);
    std::cerr << "identity suite on " << spec.name << ": " << passed << "/"
              << asserted << " asserted identities pass\n";
    for (const auto& c : identities)
      if (c.asserted && !c.pass)
        std::cerr << "  FAILED identity " << c.name << ": residual "
                  << fmt(c.residual) << " > tol " << fmt(c.tol) << "\n";
  }

  std::optional<VectorFieldSpec> field;
  std::optional<VectorFieldSpec> sigma;
  if (!opt.field_path.empty()) {
    field = load_field_file(opt.field_path);
    inputs.push_back(input_entry("field", opt.field_path));
  }
  if (!opt.sigma_path.empty()) {
    sigma = load_field_file(opt.sigma_path);
    inputs.push_back(input_entry("sigma", opt.sigma_path));
  }
  if (opt.find_field) {
    const std::vector<Vec> dirs =
        draw_directions(spec, opt.seed, std::min(opt.samples, 64));
    const NullspaceResult ns = find_sc_field(
        spec, bundles.front().at.x, dirs, opt.nullspace_threshold);
    results["sc_field_search"] = to_json(ns);
    if (ns.basis.cols() > 0) {
      field = constant_field(ns.basis.col(0), spec.dim, "sc_basis_0");
      std::cerr << "sc field search: using the first of "
                << ns.basis.cols() << " null directions as the field\n";
    } else {
      std::cerr << "sc field search: no semi-concurrent field found "
                   "(smallest singular value "
                << fmt(ns.singular_values.back()) << ")\n";
    }
  }

  VerifyContext ctx;
  ctx.metric = &spec;
  ctx.bundles = bundles;
  ctx.field = field ? &*field : nullptr;
  ctx.sigma = sigma ? &*sigma : nullptr;
  ctx.tols = tols;
  ctx.side_margin = opt.side_margin;

  std::vector<TheoremReport> reports;
  if (!opt.theorem.empty()) {
    const auto id = parse_theorem_id(opt.theorem);
    if (!id)
      throw SpecError("unknown theorem id '" + opt.theorem +
                      "' (expected one of T1..T6, C1, L1)");
    reports.push_back(run_theorem(*id, ctx));
  } else {
    reports = run_all_theorems(ctx);
  }

  bool violated = false;
  Json rows = Json::array();
  for (const auto& r : reports) {
    rows.push_back(to_json(r));
    violated = violated || r.verdict == TheoremVerdict::Violated;
    std::cerr << "  " << theorem_id_name(r.id) << ": "
              << verdict_name(r.verdict) << " (conclusion "
              << r.conclusion_name << " residual "
              << fmt(r.conclusion_residual) << ")\n";
    for (const auto& n : r.notes) std::cerr << "      " << n << "\n";
  }
  results["theorems"] = std::move(rows);

  emit(build_report("verify", inputs, opt.seed, opt.samples, tols,
                    std::move(results)),
       opt);
  return (violated || identity_failed) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Finsler metric workbench: tensor evaluation, special-space "
      "classification, vector-field conditions, and implication checks"};
  app.require_subcommand(1);

  Options opt;
  std::string command;
  const auto add_common = [&opt](CLI::App* sub) {
    sub->add_option("--metric", opt.metric_path, "metric spec file (.fml)")
        ->required();
    sub->add_option("--samples", opt.samples, "support elements to sample")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--seed", opt.seed, "sampling seed")
        ->capture_default_str();
    sub->add_option("--tol", opt.tol_overrides,
                    "tolerance override name=value (repeatable)");
    sub->add_option("--out", opt.out,
                    "report file path (default: stdout)");
  };

  CLI::App* validate = app.add_subcommand(
      "validate", "check positivity, homogeneity, and convexity");
  add_common(validate);

  CLI::App* tensors =
      app.add_subcommand("tensors", "evaluate the tensor family");
  add_common(tensors);
  tensors->add_option("--at", opt.at,
                      "support element 'x=a,b,...;y=c,d,...' for a full dump");

  CLI::App* classify = app.add_subcommand(
      "classify", "test the special-space conditions");
  add_common(classify);

  CLI::App* fields = app.add_subcommand(
      "fields", "test vector/covector field conditions");
  add_common(fields);
  fields->add_option("--field", opt.field_path, "vector field file (.vfl)");
  fields->add_option("--sigma", opt.sigma_path,
                     "conformal gradient covector file (.vfl)");
  fields->add_flag("--find-field", opt.find_field,
                   "search for constant semi-concurrent directions");
  fields->add_option("--at", opt.at, "chart point for --find-field");
  fields->add_option("--nullspace-threshold", opt.nullspace_threshold,
                     "relative singular-value cutoff for --find-field")
      ->capture_default_str();

  CLI::App* verify = app.add_subcommand(
      "verify", "run the identity suite and implication checks");
  add_common(verify);
  verify->add_option("--field", opt.field_path, "vector field file (.vfl)");
  verify->add_option("--sigma", opt.sigma_path,
                     "conformal gradient covector file (.vfl)");
  verify->add_flag("--find-field", opt.find_field,
                   "search for a semi-concurrent field and use it");
  verify->add_option("--theorem", opt.theorem,
                     "single implication id (T1..T6, C1, L1)");
  verify->add_option("--side-margin", opt.side_margin,
                     "margin for the '!= 0' side conditions")
      ->capture_default_str();
  verify->add_option("--nullspace-threshold", opt.nullspace_threshold,
                     "relative singular-value cutoff for --find-field")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (validate->parsed()) return cmd_validate(opt);
    if (tensors->parsed()) return cmd_tensors(opt);
    if (classify->parsed()) return cmd_classify(opt);
    if (fields->parsed()) return cmd_fields(opt);
    if (verify->parsed()) return cmd_verify(opt);
    std::cerr << "no command given\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const SpecError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const MetricError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const EvalError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  (void)command;
}
