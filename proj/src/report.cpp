#include "finsler/report.hpp"

#include <fstream>
#include <iostream>

#include "finsler/errors.hpp"
#include "finsler/sampling.hpp"

namespace finsler {
namespace {

Json vec_json(const Vec& v) {
  Json out = Json::array();
  for (int i = 0; i < int(v.size()); ++i) out.push_back(v[i]);
  return out;
}

Json mat_json(const Mat& m) {
  Json out = Json::array();
  for (int i = 0; i < int(m.rows()); ++i) {
    Json row = Json::array();
    for (int j = 0; j < int(m.cols()); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Json tensor3_json(const Tensor3& t) {
  const int n = t.dim();
  Json out = Json::array();
  for (int i = 0; i < n; ++i) {
    Json plane = Json::array();
    for (int j = 0; j < n; ++j) {
      Json row = Json::array();
      for (int k = 0; k < n; ++k) row.push_back(t(i, j, k));
      plane.push_back(std::move(row));
    }
    out.push_back(std::move(plane));
  }
  return out;
}

Json tensor4_json(const Tensor4& t) {
  const int n = t.dim();
  Json out = Json::array();
  for (int h = 0; h < n; ++h) {
    Json cube = Json::array();
    for (int i = 0; i < n; ++i) {
      Json plane = Json::array();
      for (int j = 0; j < n; ++j) {
        Json row = Json::array();
        for (int k = 0; k < n; ++k) row.push_back(t(h, i, j, k));
        plane.push_back(std::move(row));
      }
      cube.push_back(std::move(plane));
    }
    out.push_back(std::move(cube));
  }
  return out;
}

Json named_values_json(const std::vector<NamedValue>& values) {
  Json out = Json::object();
  for (const auto& v : values) out[v.name] = v.value;
  return out;
}

}  // namespace

Json to_json(const ValidationReport& rep) {
  Json out;
  out["ok"] = rep.ok;
  out["samples_requested"] = rep.samples_requested;
  out["samples_used"] = rep.samples_used;
  out["rejected"] = rep.rejected;
  out["worst_homogeneity"] = rep.worst_homogeneity;
  out["min_F"] = rep.min_F;
  out["min_eig_rel"] = rep.min_eig_rel;
  out["failures"] = rep.failures;
  return out;
}

Json to_json(const ConditionVerdict& v) {
  Json out;
  out["condition"] = condition_name(v.condition);
  out["residual_rel"] = v.residual_rel;
  out["tol"] = v.tol;
  out["holds"] = v.holds;
  out["degenerate"] = v.degenerate;
  out["dim_warning"] = v.dim_warning;
  out["samples_used"] = v.samples_used;
  if (!v.fitted.empty()) {
    Json fitted = Json::object();
    for (const auto& [k, val] : v.fitted) fitted[k] = val;
    out["fitted"] = std::move(fitted);
  }
  return out;
}

Json to_json(const FieldSample& s) {
  Json out;
  out["id"] = s.id;
  out["residual"] = s.residual;
  for (const auto& [k, v] : s.extra) out[k] = v;
  return out;
}

Json to_json(const FieldCheckResult& r) {
  Json out;
  out["condition"] = field_condition_name(r.condition);
  out["residual_rel"] = r.residual_rel;
  out["tol"] = r.tol;
  out["holds"] = r.holds;
  out["zero_field"] = r.zero_field;
  for (const auto& [k, v] : r.extra) out[k] = v;
  Json samples = Json::array();
  for (const auto& s : r.per_sample) samples.push_back(to_json(s));
  out["per_sample"] = std::move(samples);
  return out;
}

Json to_json(const NullspaceResult& r) {
  Json out;
  Json basis = Json::array();
  for (int c = 0; c < int(r.basis.cols()); ++c)
    basis.push_back(vec_json(r.basis.col(c)));
  out["basis"] = std::move(basis);
  out["basis_size"] = int(r.basis.cols());
  out["singular_values"] = r.singular_values;
  out["threshold"] = r.threshold;
  out["scale"] = r.scale;
  out["y_samples_used"] = r.y_samples_used;
  return out;
}

Json to_json(const Lemma1Report& r) {
  Json out;
  out["precondition_sc"] = r.precondition_sc;
  out["nonzero_field"] = r.nonzero_field;
  out["sc_residual"] = r.sc_residual;
  out["min_margin"] = r.min_margin;
  out["per_sample_margin"] = r.per_sample_margin;
  out["independent"] = r.independent;
  out["margin_threshold"] = r.margin_threshold;
  out["degenerate_metric"] = r.degenerate_metric;
  return out;
}

Json to_json(const TheoremReport& r) {
  Json out;
  out["id"] = theorem_id_name(r.id);
  out["title"] = r.title;
  out["verdict"] = verdict_name(r.verdict);
  out["hypothesis_residuals"] = named_values_json(r.hypothesis_residuals);
  out["side_conditions"] = named_values_json(r.side_conditions);
  out["step_residuals"] = named_values_json(r.step_residuals);
  Json conclusion;
  conclusion["name"] = r.conclusion_name;
  conclusion["residual"] = r.conclusion_residual;
  out["conclusion"] = std::move(conclusion);
  out["notes"] = r.notes;
  out["samples_used"] = r.samples_used;
  return out;
}

Json to_json(const IdentityCheck& c) {
  Json out;
  out["name"] = c.name;
  out["residual"] = c.residual;
  out["tol"] = c.tol;
  out["asserted"] = c.asserted;
  out["pass"] = c.pass;
  return out;
}

Json to_json(const TensorBundle& b) {
  Json out;
  out["x"] = vec_json(b.at.x);
  out["y"] = vec_json(b.at.y);
  out["F"] = b.at.F;
  out["g"] = mat_json(b.g);
  out["g_inv"] = mat_json(b.g_inv);
  out["h"] = mat_json(b.h);
  out["l_lo"] = vec_json(b.l_lo);
  out["min_eig"] = b.min_eig;
  out["C_lo"] = tensor3_json(b.C_lo);
  out["C_mixed"] = tensor3_json(b.C_mixed);
  out["C_mean"] = vec_json(b.C_mean);
  out["C_norm2"] = b.C_norm2;
  out["G_spray"] = vec_json(b.G_spray);
  out["N"] = mat_json(b.N);
  out["G_berwald"] = tensor3_json(b.G_berwald);
  out["Gamma"] = tensor3_json(b.Gamma);
  out["C_hder"] = tensor4_json(b.C_hder);
  out["C_hder0"] = tensor3_json(b.C_hder0);
  out["P"] = tensor4_json(b.P);
  out["P_lo"] = tensor3_json(b.P_lo);
  out["P_mean"] = vec_json(b.P_mean);
  out["T"] = tensor4_json(b.T);
  out["T2"] = mat_json(b.T2);
  return out;
}

Json build_report(const std::string& command,
                  const std::vector<ReportInput>& inputs, std::uint64_t seed,
                  int samples, const ToleranceSet& tols, Json results) {
  Json out;
  out["schema"] = kReportSchema;
  Json tool;
  tool["name"] = kToolName;
  tool["version"] = kToolVersion;
  out["tool"] = std::move(tool);
  out["command"] = command;
  Json ins = Json::array();
  for (const auto& in : inputs) {
    Json entry;
    entry["role"] = in.role;
    entry["path"] = in.path;
    entry["hash"] = in.hash;
    ins.push_back(std::move(entry));
  }
  out["inputs"] = std::move(ins);
  Json sampling;
  sampling["generator"] = kSamplerVersion;
  sampling["seed"] = seed;
  sampling["samples"] = samples;
  out["sampling"] = std::move(sampling);
  Json tol = Json::object();
  for (const auto& [k, v] : tols.values) tol[k] = v;
  out["tolerances"] = std::move(tol);
  out["results"] = std::move(results);
  return out;
}

std::string render_report(const Json& report) {
  return report.dump(2) + "\n";
}

void write_report(const Json& report, const std::string& path) {
  const std::string text = render_report(report);
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SpecError("cannot open report file for writing: " + path);
  out << text;
  out.flush();
  if (!out) throw SpecError("failed while writing report file: " + path);
}

}  // namespace finsler
