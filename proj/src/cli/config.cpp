#include "nagflow/cli/config.hpp"

#include "nagflow/cli/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace nagflow::cli {

namespace {

struct Value {
  bool isList = false;
  std::string scalar;
  std::vector<Value> items;
};

struct Entry {
  std::string text;
  std::string where;  ///< "line N" or "override"
};

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "scenario", "seed",
      "field.Q", "field.kind", "field.weight",
      "restart.eta", "restart.T0", "restart.T", "restart.c_upper", "restart.enforce_window",
      "restart.auto_iterations",
      "initial.x0", "initial.v0", "initial.q0", "initial.p0", "initial.tau0", "initial.y0",
      "initial.z0", "initial.zeta0", "initial.psi0",
      "run.out", "run.step", "run.stride", "run.t_end", "run.t_end_plain", "run.s_end",
      "run.s_end_slow", "run.blowup_cap", "run.quadrature_nodes", "run.degeneracy_tol",
      "run.write_lyapunov",
      "validate.samples", "validate.radius"};
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

int bracket_depth(const std::string& s) {
  int depth = 0;
  bool quoted = false;
  for (char c : s) {
    if (c == '"') quoted = !quoted;
    if (quoted) continue;
    if (c == '[') ++depth;
    if (c == ']') --depth;
  }
  return depth;
}

bool is_identifier(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

class ValueParser {
 public:
  ValueParser(const std::string& text, const std::string& context) : s_(text), ctx_(context) {}

  Value parse() {
    Value v = value();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing text");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(ctx_ + ": " + what);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  Value value() {
    skip();
    if (pos_ >= s_.size()) fail("missing value");
    if (s_[pos_] == '[') return list();
    return scalar();
  }

  Value list() {
    Value v;
    v.isList = true;
    ++pos_;
    skip();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return v;
    }
    while (true) {
      v.items.push_back(value());
      skip();
      if (pos_ >= s_.size()) fail("unterminated array");
      if (s_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (s_[pos_] == ']') {
        ++pos_;
        return v;
      }
      fail("expected ',' or ']' in array");
    }
  }

  Value scalar() {
    Value v;
    if (s_[pos_] == '"') {
      const auto end = s_.find('"', pos_ + 1);
      if (end == std::string::npos) fail("unterminated string");
      v.scalar = s_.substr(pos_ + 1, end - pos_ - 1);
      pos_ = end + 1;
      return v;
    }
    const auto start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '[') ++pos_;
    v.scalar = trim(s_.substr(start, pos_ - start));
    if (v.scalar.empty()) fail("empty value");
    return v;
  }

  const std::string& s_;
  std::string ctx_;
  std::size_t pos_ = 0;
};

using Document = std::map<std::string, Entry>;

Document read_document(const std::string& text) {
  Document doc;
  std::istringstream in(text);
  std::string raw, section, pendingKey, pendingValue;
  int lineNo = 0, pendingLine = 0;

  auto store = [&](const std::string& key, const std::string& value, int line) {
    const std::string full = section.empty() ? key : section + "." + key;
    const std::string where = "line " + std::to_string(line);
    if (!known_keys().count(full)) throw ConfigError(where + ": unknown key '" + full + "'");
    if (doc.count(full)) throw ConfigError(where + ": duplicate key '" + full + "'");
    doc[full] = {trim(value), where};
  };

  while (std::getline(in, raw)) {
    ++lineNo;
    const std::string line = trim(strip_comment(raw));
    if (!pendingKey.empty()) {
      pendingValue += ' ' + line;
      if (bracket_depth(pendingValue) <= 0) {
        store(pendingKey, pendingValue, pendingLine);
        pendingKey.clear();
      }
      continue;
    }
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && is_identifier(line.substr(1, line.size() - 2))) {
      section = line.substr(1, line.size() - 2);
      static const std::set<std::string> sections = {"field", "restart", "initial", "run",
                                                     "validate"};
      if (!sections.count(section)) {
        throw ConfigError("line " + std::to_string(lineNo) + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineNo) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!is_identifier(key)) {
      throw ConfigError("line " + std::to_string(lineNo) + ": invalid key '" + key + "'");
    }
    if (bracket_depth(value) > 0) {
      pendingKey = key;
      pendingValue = value;
      pendingLine = lineNo;
      continue;
    }
    store(key, value, lineNo);
  }
  if (!pendingKey.empty()) {
    throw ConfigError("line " + std::to_string(pendingLine) + ": unterminated array for '" +
                      pendingKey + "'");
  }
  return doc;
}

void apply_override(Document& doc, const std::string& item) {
  const auto eq = item.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + item + "': expected key=value");
  const std::string key = trim(item.substr(0, eq));
  if (!known_keys().count(key)) throw ConfigError("override: unknown key '" + key + "'");
  doc[key] = {trim(item.substr(eq + 1)), "override"};
}

class Reader {
 public:
  explicit Reader(const Document& doc) : doc_(doc) {}

  bool has(const std::string& key) const { return doc_.count(key) != 0; }

  std::string context(const std::string& key) const {
    const auto it = doc_.find(key);
    return it == doc_.end() ? key : it->second.where + ": " + key;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(context(key) + ": " + what);
  }

  Value value(const std::string& key) const {
    return ValueParser(doc_.at(key).text, context(key)).parse();
  }

  bool isAuto(const std::string& key) const {
    if (!has(key)) return false;
    const Value v = value(key);
    return !v.isList && v.scalar == "auto";
  }

  double toNumber(const Value& v, const std::string& key) const {
    if (v.isList) fail(key, "expected a number, got an array");
    double x = 0;
    const char* b = v.scalar.data();
    const char* e = b + v.scalar.size();
    if (*b == '+') ++b;
    const auto res = std::from_chars(b, e, x);
    if (res.ec != std::errc() || res.ptr != e) fail(key, "'" + v.scalar + "' is not a number");
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
  }

  double number(const std::string& key, double fallback) const {
    return has(key) ? toNumber(value(key), key) : fallback;
  }

  std::optional<double> numberOrAuto(const std::string& key, std::optional<double> fallback) const {
    if (!has(key)) return fallback;
    if (isAuto(key)) return std::nullopt;
    return toNumber(value(key), key);
  }

  long long integer(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    const Value v = value(key);
    if (v.isList) fail(key, "expected an integer");
    long long x = 0;
    const auto res = std::from_chars(v.scalar.data(), v.scalar.data() + v.scalar.size(), x);
    if (res.ec != std::errc() || res.ptr != v.scalar.data() + v.scalar.size()) {
      fail(key, "'" + v.scalar + "' is not an integer");
    }
    return x;
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Value v = value(key);
    if (!v.isList && v.scalar == "true") return true;
    if (!v.isList && v.scalar == "false") return false;
    fail(key, "expected true or false");
  }

  std::string string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const Value v = value(key);
    if (v.isList) fail(key, "expected a string");
    return v.scalar;
  }

  Vector vector(const std::string& key) const {
    const Value v = value(key);
    if (!v.isList) fail(key, "expected an array");
    Vector out(static_cast<Index>(v.items.size()));
    for (std::size_t i = 0; i < v.items.size(); ++i) out(static_cast<Index>(i)) = toNumber(v.items[i], key);
    return out;
  }

  Matrix matrix(const std::string& key) const {
    const Value v = value(key);
    if (!v.isList || v.items.empty()) fail(key, "expected a non-empty array of rows");
    const std::size_t rows = v.items.size();
    std::size_t cols = 0;
    for (const auto& row : v.items) {
      if (!row.isList) fail(key, "each row must be an array");
      if (cols == 0) cols = row.items.size();
      if (row.items.size() != cols || cols == 0) fail(key, "rows must have equal, non-zero length");
    }
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        m(static_cast<Index>(i), static_cast<Index>(j)) = toNumber(v.items[i].items[j], key);
      }
    }
    return m;
  }

 private:
  const Document& doc_;
};

Vector alternating(Index n, double amplitude) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = (i % 2 == 0) ? amplitude : -amplitude;
  return v;
}

Vector sized(const Reader& r, const std::string& key, Index len, const Vector& fallback) {
  if (!r.has(key)) return fallback;
  Vector v = r.vector(key);
  if (v.size() != len) {
    r.fail(key, "expected " + std::to_string(len) + " entries, got " + std::to_string(v.size()));
  }
  return v;
}

std::string format_vector(const Vector& v) {
  std::string s = "[";
  for (Index i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_number(v(i));
  }
  return s + "]";
}

std::string format_matrix(const Matrix& m) {
  std::string s = "[";
  for (Index i = 0; i < m.rows(); ++i) {
    if (i) s += ", ";
    s += format_vector(m.row(i).transpose());
  }
  return s + "]";
}

std::string format_auto(const std::optional<double>& x) {
  return x ? format_number(*x) : std::string("auto");
}

using Section = std::vector<std::pair<std::string, std::string>>;

std::vector<std::pair<std::string, Section>> sections_of(const ScenarioConfig& c) {
  return {
      {"",
       {{"scenario", c.scenario}, {"seed", std::to_string(c.seed)}}},
      {"field",
       {{"Q", format_matrix(c.Q)}, {"kind", c.fieldKind}, {"weight", format_number(c.weight)}}},
      {"restart",
       {{"eta", format_number(c.eta)},
        {"T0", format_number(c.T0)},
        {"T", format_auto(c.T)},
        {"c_upper", format_auto(c.cUpper)},
        {"enforce_window", c.enforceWindow ? "true" : "false"},
        {"auto_iterations", std::to_string(c.autoIterations)}}},
      {"initial",
       {{"x0", format_vector(c.x0)},
        {"v0", format_vector(c.v0)},
        {"q0", format_vector(c.q0)},
        {"p0", format_vector(c.p0)},
        {"tau0", format_auto(c.tau0)},
        {"y0", format_vector(c.y0)},
        {"z0", format_vector(c.z0)},
        {"zeta0", format_vector(c.zeta0)},
        {"psi0", format_vector(c.psi0)}}},
      {"run",
       {{"out", "\"" + c.out + "\""},
        {"step", format_number(c.step)},
        {"stride", std::to_string(c.stride)},
        {"t_end", format_number(c.tEnd)},
        {"t_end_plain", format_number(c.tEndPlain)},
        {"s_end", format_number(c.sEnd)},
        {"s_end_slow", format_auto(c.sEndSlow)},
        {"blowup_cap", format_number(c.blowupCap)},
        {"quadrature_nodes", std::to_string(c.quadratureNodes)},
        {"degeneracy_tol", format_number(c.degeneracyTol)},
        {"write_lyapunov", c.writeLyapunov ? "true" : "false"}}},
      {"validate",
       {{"samples", std::to_string(c.validateSamples)},
        {"radius", format_number(c.validateRadius)}}},
  };
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  Document doc = read_document(text);
  for (const auto& o : overrides) apply_override(doc, o);
  const Reader r(doc);

  ScenarioConfig c;
  if (!r.has("scenario")) throw ConfigError("scenario: missing required key");
  c.scenario = r.string("scenario", "");
  const auto& names = scenario_names();
  if (std::find(names.begin(), names.end(), c.scenario) == names.end()) {
    r.fail("scenario", "unknown scenario '" + c.scenario + "'");
  }
  const long long seed = r.integer("seed", static_cast<long long>(c.seed));
  if (seed < 0) r.fail("seed", "must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);

  if (!r.has("field.Q")) throw ConfigError("field.Q: missing required key");
  c.Q = r.matrix("field.Q");
  if (c.Q.rows() != c.Q.cols()) r.fail("field.Q", "matrix must be square");
  c.fieldKind = r.string("field.kind", c.fieldKind);
  if (c.fieldKind != "linear" && c.fieldKind != "arctan") {
    r.fail("field.kind", "must be 'linear' or 'arctan'");
  }
  c.weight = r.number("field.weight", c.weight);
  if (c.weight < 0) r.fail("field.weight", "must be >= 0");

  c.eta = r.number("restart.eta", c.eta);
  if (!(c.eta > 0 && c.eta <= 1)) r.fail("restart.eta", "must lie in (0, 1]");
  c.T0 = r.number("restart.T0", c.T0);
  if (!(c.T0 > 0)) r.fail("restart.T0", "must be > 0");
  c.T = r.numberOrAuto("restart.T", std::nullopt);
  if (c.T && !(*c.T > c.T0)) r.fail("restart.T", "invariant T > T0 violated");
  c.cUpper = r.numberOrAuto("restart.c_upper", std::nullopt);
  if (c.cUpper && !(*c.cUpper > 0)) r.fail("restart.c_upper", "must be > 0");
  c.enforceWindow = r.boolean("restart.enforce_window", c.enforceWindow);
  const long long iters = r.integer("restart.auto_iterations", c.autoIterations);
  if (iters < 0 || iters > 100) r.fail("restart.auto_iterations", "must lie in [0, 100]");
  c.autoIterations = static_cast<int>(iters);

  const Index n = c.dim();
  c.x0 = sized(r, "initial.x0", n, alternating(n, 1e4));
  c.v0 = sized(r, "initial.v0", n, alternating(n, 1e4));
  c.q0 = sized(r, "initial.q0", n, alternating(n, 1e4));
  c.p0 = sized(r, "initial.p0", n, alternating(n, 1e4));
  c.tau0 = r.numberOrAuto("initial.tau0", std::nullopt);
  if (c.tau0) {
    if (*c.tau0 < c.T0) r.fail("initial.tau0", "must be >= T0");
    if (c.T && *c.tau0 > *c.T) r.fail("initial.tau0", "must be <= T");
  }
  Vector y0 = Vector::Zero(2 * n);
  y0.head(n) = alternating(n, 0.1);
  c.y0 = sized(r, "initial.y0", 2 * n, y0);
  c.z0 = sized(r, "initial.z0", 2 * n, c.y0);
  c.zeta0 = sized(r, "initial.zeta0", 2 * n, c.z0);
  c.psi0 = sized(r, "initial.psi0", 2 * n, c.y0);

  c.out = r.string("run.out", "out/" + c.scenario);
  if (c.out.empty()) r.fail("run.out", "must not be empty");
  c.step = r.number("run.step", c.step);
  if (!(c.step > 0)) r.fail("run.step", "must be > 0");
  const long long stride = r.integer("run.stride", 1);
  if (stride < 1) r.fail("run.stride", "must be >= 1");
  c.stride = static_cast<std::size_t>(stride);
  c.tEnd = r.number("run.t_end", c.tEnd);
  if (!(c.tEnd > 0)) r.fail("run.t_end", "must be > 0");
  c.tEndPlain = r.number("run.t_end_plain", c.tEndPlain);
  if (!(c.tEndPlain > 0)) r.fail("run.t_end_plain", "must be > 0");
  c.sEnd = r.number("run.s_end", c.sEnd);
  if (!(c.sEnd > 0)) r.fail("run.s_end", "must be > 0");
  c.sEndSlow = r.numberOrAuto("run.s_end_slow", std::nullopt);
  if (c.sEndSlow && !(*c.sEndSlow > 0)) r.fail("run.s_end_slow", "must be > 0");
  c.blowupCap = r.number("run.blowup_cap", c.blowupCap);
  if (!(c.blowupCap > 0)) r.fail("run.blowup_cap", "must be > 0");
  const long long nodes = r.integer("run.quadrature_nodes", c.quadratureNodes);
  if (nodes < 64 || nodes % 2 != 0 || nodes > (1 << 24)) {
    r.fail("run.quadrature_nodes", "must be even and in [64, 2^24]");
  }
  c.quadratureNodes = static_cast<int>(nodes);
  c.degeneracyTol = r.number("run.degeneracy_tol", c.degeneracyTol);
  if (!(c.degeneracyTol > 0)) r.fail("run.degeneracy_tol", "must be > 0");
  c.writeLyapunov = r.boolean("run.write_lyapunov", c.writeLyapunov);

  const long long samples = r.integer("validate.samples", c.validateSamples);
  if (samples < 1 || samples > 10000000) r.fail("validate.samples", "must lie in [1, 1e7]");
  c.validateSamples = static_cast<int>(samples);
  c.validateRadius = r.number("validate.radius", c.validateRadius);
  if (!(c.validateRadius > 0)) r.fail("validate.radius", "must be > 0");
  return c;
}

std::string resolved_text(const ScenarioConfig& cfg) {
  std::string s;
  for (const auto& [name, entries] : sections_of(cfg)) {
    if (!name.empty()) s += "\n[" + name + "]\n";
    for (const auto& [key, value] : entries) s += key + " = " + value + "\n";
  }
  return s;
}

std::string resolved_report_lines(const ScenarioConfig& cfg) {
  std::string s;
  for (const auto& [name, entries] : sections_of(cfg)) {
    for (const auto& [key, value] : entries) {
      s += "config." + (name.empty() ? key : name + "." + key) + ": " + value + "\n";
    }
  }
  return s;
}

}  // namespace nagflow::cli
