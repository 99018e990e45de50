#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "finsler/fields.hpp"
#include "finsler/spaces.hpp"
#include "finsler/validate.hpp"
#include "finsler/verify.hpp"

namespace finsler {

inline constexpr const char* kReportSchema = "finsler-report/1";
inline constexpr const char* kToolName = "finsler";
inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::ordered_json;

/// One input file recorded in a report: role is "metric", "field", or
/// "sigma"; hash is the content hash of the file bytes.
struct ReportInput {
  std::string role;
  std::string path;
  std::string hash;
};

Json to_json(const ValidationReport& rep);
Json to_json(const ConditionVerdict& v);
Json to_json(const FieldSample& s);
Json to_json(const FieldCheckResult& r);
Json to_json(const NullspaceResult& r);
Json to_json(const Lemma1Report& r);
Json to_json(const TheoremReport& r);
Json to_json(const IdentityCheck& c);
Json to_json(const TensorBundle& b);

/// Deterministic envelope: schema, tool, command line, inputs with hashes,
/// sampling configuration, tolerances, and the command-specific results.
Json build_report(const std::string& command,
                  const std::vector<ReportInput>& inputs, std::uint64_t seed,
                  int samples, const ToleranceSet& tols, Json results);

/// Serializes with a fixed layout (2-space indent, '\n' line ends, trailing
/// newline) so identical inputs give byte-identical files.
std::string render_report(const Json& report);

/// Writes to the path, or to stdout when path is empty. Failures carry the
/// path in the exception message.
void write_report(const Json& report, const std::string& path);

}  // namespace finsler
