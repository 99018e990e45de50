#include "finsler/spec.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace finsler {
namespace {

struct Line {
  int number = 0;
  std::string section;  // active [section], empty at top level
  std::string key;
  std::string value;  // raw text, quotes stripped for strings
  bool quoted = false;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& origin, int line,
                       const std::string& message) {
  throw SpecError(origin + ":" + std::to_string(line) + ": " + message);
}

std::vector<Line> read_lines(std::string_view text, const std::string& origin) {
  std::vector<Line> out;
  std::string section;
  int number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string raw(text.substr(
        pos, nl == std::string_view::npos ? text.size() - pos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++number;

    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) {
      // '#' inside a quoted value is content, not a comment.
      const std::size_t q1 = raw.find('"');
      const std::size_t q2 = q1 == std::string::npos ? std::string::npos
                                                     : raw.find('"', q1 + 1);
      if (!(q1 != std::string::npos && q2 != std::string::npos && q1 < hash &&
            hash < q2))
        raw = raw.substr(0, hash);
    }
    const std::string line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        fail(origin, number, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail(origin, number, "empty section name");
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(origin, number, "expected key = value");
    Line entry;
    entry.number = number;
    entry.section = section;
    entry.key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (entry.key.empty()) fail(origin, number, "empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      entry.quoted = true;
      value = value.substr(1, value.size() - 2);
    }
    entry.value = value;
    out.push_back(std::move(entry));
  }
  return out;
}

double parse_number(const Line& l, const std::string& origin,
                    const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    fail(origin, l.number, "expected a number, got '" + t + "'");
  return v;
}

std::vector<std::string> parse_list(const Line& l, const std::string& origin) {
  const std::string t = trim(l.value);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']')
    fail(origin, l.number, "expected a [..] list");
  std::vector<std::string> items;
  std::string body = t.substr(1, t.size() - 2);
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim(item));
  if (items.size() == 1 && items[0].empty()) items.clear();
  return items;
}

Vec parse_coords(const Line& l, const std::string& origin, int dim) {
  Vec out(dim);
  if (!l.value.empty() && l.value.front() == '[') {
    const auto items = parse_list(l, origin);
    if (int(items.size()) != dim)
      fail(origin, l.number,
           "expected " + std::to_string(dim) + " entries, got " +
               std::to_string(items.size()));
    for (int i = 0; i < dim; ++i)
      out[i] = parse_number(l, origin, items[std::size_t(i)]);
  } else {
    out.setConstant(parse_number(l, origin, l.value));
  }
  return out;
}

int parse_dim(const Line& l, const std::string& origin) {
  const double v = parse_number(l, origin, l.value);
  const int dim = int(v);
  if (double(dim) != v || dim < 2 || dim > kMaxDim)
    fail(origin, l.number,
         "dim must be an integer in [2, " + std::to_string(kMaxDim) + "]");
  return dim;
}

void check_params_bound(const ExprPtr& expr, const ParamMap& params,
                        const std::string& origin) {
  std::set<std::string> used;
  collect_params(*expr, used);
  for (const auto& name : used)
    if (!params.count(name))
      throw SpecError(origin + ": unbound parameter '" + name +
                      "' (add it to [params])");
}

}  // namespace

MetricSpec parse_metric_spec(std::string_view text,
                             const std::string& origin) {
  MetricSpec spec;
  std::string f_text;
  int f_line = 0;
  bool have_dim = false, have_f = false;
  bool region_touched = false;
  Vec x_min, x_max;
  bool have_xmin = false, have_xmax = false;
  std::vector<AxisSign> y_signs;
  double y_radius = 1.0;
  std::vector<Line> deferred_coords;

  for (const Line& l : read_lines(text, origin)) {
    if (l.section.empty()) {
      if (l.key == "name") {
        spec.name = l.value;
      } else if (l.key == "dim") {
        spec.dim = parse_dim(l, origin);
        have_dim = true;
      } else if (l.key == "F") {
        if (!l.quoted)
          fail(origin, l.number, "F must be a quoted expression string");
        f_text = l.value;
        f_line = l.number;
        have_f = true;
      } else {
        fail(origin, l.number, "unknown top-level key '" + l.key + "'");
      }
    } else if (l.section == "params") {
      spec.params[l.key] = parse_number(l, origin, l.value);
    } else if (l.section == "sample_region") {
      region_touched = true;
      if (!have_dim)
        fail(origin, l.number, "dim must appear before [sample_region]");
      if (l.key == "x_min") {
        x_min = parse_coords(l, origin, spec.dim);
        have_xmin = true;
      } else if (l.key == "x_max") {
        x_max = parse_coords(l, origin, spec.dim);
        have_xmax = true;
      } else if (l.key == "y_signs") {
        const auto items = parse_list(l, origin);
        if (int(items.size()) != spec.dim)
          fail(origin, l.number,
               "y_signs needs " + std::to_string(spec.dim) + " entries");
        for (const auto& s : items) {
          if (s == "free") y_signs.push_back(AxisSign::Free);
          else if (s == "pos") y_signs.push_back(AxisSign::Pos);
          else if (s == "neg") y_signs.push_back(AxisSign::Neg);
          else
            fail(origin, l.number,
                 "y_signs entries must be free|pos|neg, got '" + s + "'");
        }
      } else if (l.key == "y_radius") {
        y_radius = parse_number(l, origin, l.value);
        if (y_radius <= 0.0)
          fail(origin, l.number, "y_radius must be positive");
      } else {
        fail(origin, l.number, "unknown sample_region key '" + l.key + "'");
      }
    } else if (l.section == "tolerances") {
      const double v = parse_number(l, origin, l.value);
      if (v <= 0.0) fail(origin, l.number, "tolerances must be positive");
      spec.tolerances[l.key] = v;
    } else {
      fail(origin, l.number, "unknown section [" + l.section + "]");
    }
  }

  if (spec.name.empty()) throw SpecError(origin + ": missing name");
  if (!have_dim) throw SpecError(origin + ": missing dim");
  if (!have_f) throw SpecError(origin + ": missing F");
  (void)region_touched;

  try {
    spec.expr = parse_expr(f_text, spec.dim);
  } catch (const ParseError& e) {
    throw SpecError(origin + ":" + std::to_string(f_line) + ": in F: " +
                    e.what());
  }
  check_params_bound(spec.expr, spec.params, origin);

  spec.region.x_min = have_xmin ? x_min : Vec::Constant(spec.dim, -1.0);
  spec.region.x_max = have_xmax ? x_max : Vec::Constant(spec.dim, 1.0);
  spec.region.y_signs =
      y_signs.empty() ? std::vector<AxisSign>(std::size_t(spec.dim),
                                              AxisSign::Free)
                      : y_signs;
  spec.region.y_radius = y_radius;
  for (int i = 0; i < spec.dim; ++i)
    if (spec.region.x_min[i] > spec.region.x_max[i])
      throw SpecError(origin + ": empty sample region (x_min > x_max at axis " +
                      std::to_string(i + 1) + ")");
  return spec;
}

MetricSpec load_metric_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot open metric file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_metric_spec(buffer.str(), path);
}

VectorFieldSpec parse_field_spec(std::string_view text,
                                 const std::string& origin) {
  VectorFieldSpec field;
  bool have_dim = false;
  std::map<int, std::pair<std::string, int>> components;  // index -> (text, line)

  for (const Line& l : read_lines(text, origin)) {
    if (!l.section.empty())
      fail(origin, l.number, "field files have no sections");
    if (l.key == "name") {
      field.name = l.value;
    } else if (l.key == "dim") {
      field.dim = parse_dim(l, origin);
      have_dim = true;
    } else if (l.key.size() >= 2 && l.key[0] == 'B') {
      int idx = 0;
      for (std::size_t i = 1; i < l.key.size(); ++i) {
        if (l.key[i] < '0' || l.key[i] > '9') { idx = -1; break; }
        idx = idx * 10 + (l.key[i] - '0');
      }
      if (idx < 1) fail(origin, l.number, "unknown key '" + l.key + "'");
      if (!l.quoted)
        fail(origin, l.number, l.key + " must be a quoted expression string");
      components[idx] = {l.value, l.number};
    } else {
      fail(origin, l.number, "unknown key '" + l.key + "'");
    }
  }

  if (field.name.empty()) throw SpecError(origin + ": missing name");
  if (!have_dim) throw SpecError(origin + ": missing dim");
  field.components.resize(std::size_t(field.dim));
  for (int i = 1; i <= field.dim; ++i) {
    auto it = components.find(i);
    if (it == components.end())
      throw SpecError(origin + ": missing component B" + std::to_string(i));
    ExprPtr e;
    try {
      e = parse_expr(it->second.first, field.dim);
    } catch (const ParseError& err) {
      throw SpecError(origin + ":" + std::to_string(it->second.second) +
                      ": in B" + std::to_string(i) + ": " + err.what());
    }
    if (references_y(*e))
      throw SpecError(origin + ": component B" + std::to_string(i) +
                      " must not reference fiber coordinates y");
    field.components[std::size_t(i - 1)] = e;
  }
  for (const auto& [idx, unused] : components) {
    (void)unused;
    if (idx > field.dim)
      throw SpecError(origin + ": component B" + std::to_string(idx) +
                      " exceeds dim " + std::to_string(field.dim));
  }
  return field;
}

VectorFieldSpec load_field_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot open field file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_field_spec(buffer.str(), path);
}

Vec eval_field(const VectorFieldSpec& field, const Vec& x) {
  Vec out(field.dim);
  const std::span<const double> xs(x.data(), std::size_t(field.dim));
  const std::span<const double> ys;
  ParamMap none;
  for (int i = 0; i < field.dim; ++i)
    out[i] = eval_double(*field.components[std::size_t(i)], xs, ys, none);
  return out;
}

Mat eval_field_jacobian(const VectorFieldSpec& field, const Vec& x) {
  const int n = field.dim;
  auto layout = JetLayout::get(n);
  std::vector<Jet> jx, jy;
  for (int i = 0; i < n; ++i) jx.push_back(Jet::seed_x(layout, i, x[i]));
  for (int i = 0; i < n; ++i) jy.push_back(Jet::constant(layout, 0.0));
  ParamMap none;
  Mat out(n, n);
  for (int i = 0; i < n; ++i) {
    const Jet ji =
        eval_jet_expr(*field.components[std::size_t(i)], jx, jy, none, layout);
    for (int j = 0; j < n; ++j) out(i, j) = ji.derivative(j, {});
  }
  return out;
}

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = hex[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string("fnv1a64:") + buf;
}

}  // namespace finsler
