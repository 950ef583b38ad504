#include "fewbit/qtable.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "fewbit/dp_solver.hpp"
#include "fewbit/refiner.hpp"

namespace fewbit {

void QuantizationTable::validate() const {
  if (bits < 1 || bits > 8) throw TableError("bits must be in [1, 8]");
  if (levels.empty()) throw TableError("table has no levels");
  if (levels.size() > (std::size_t{1} << bits)) {
    throw TableError("num_levels " + std::to_string(levels.size()) + " exceeds 2^bits = " +
                     std::to_string(1u << bits));
  }
  if (boundaries.size() + 1 != levels.size()) {
    throw TableError("need exactly num_levels - 1 boundaries");
  }
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    if (!std::isfinite(boundaries[i])) throw TableError("non-finite boundary");
    if (i > 0 && !(boundaries[i] > boundaries[i - 1])) {
      throw TableError("boundaries must be strictly increasing");
    }
  }
  for (double y : levels) {
    if (!std::isfinite(y)) throw TableError("non-finite level");
  }
  if (exploit_symmetry) {
    if (!boundaries.empty() && boundaries.front() < 0.0) {
      throw TableError("symmetric table boundaries must be nonnegative");
    }
    if (!get_activation(activation).even_derivative) {
      throw TableError("symmetric table for an activation without even derivative");
    }
  }
  try {
    weight.validate();
  } catch (const std::invalid_argument& e) {
    throw TableError(e.what());
  }
}

ApproxTarget table_target(const QuantizationTable& table) {
  const auto& act = get_activation(table.activation);
  return table.exploit_symmetry ? ApproxTarget::folded(act, table.weight)
                                : ApproxTarget::full(act, table.weight);
}

TableBuild build_table_detailed(const ActivationSpec& act, const WeightSpec& weight, int bits,
                                const TableBuildOptions& options) {
  if (bits < 1 || bits > 8) throw std::invalid_argument("bits must be in [1, 8]");
  const ApproxTarget target = options.exploit_symmetry ? ApproxTarget::folded(act, weight)
                                                       : ApproxTarget::full(act, weight);
  const auto grid = build_grid(target, options.grid_n);
  const std::size_t K = std::size_t{1} << bits;
  const DPResult dp = dp_solve(grid, K);

  BoundaryVector s(dp.boundaries);
  std::size_t steps = 0;
  if (options.refine_steps > 0 && dp.error > 0.0) {
    RefineOptions ro;
    ro.steps = options.refine_steps;
    ro.learning_rate = options.learning_rate;
    s = refine(target, s, ro).boundaries;
    steps = options.refine_steps;
  }

  QuantizationTable t;
  t.activation = act.name;
  t.bits = bits;
  t.exploit_symmetry = options.exploit_symmetry;
  t.weight = weight;
  t.boundaries.assign(s.interior().begin(), s.interior().end());
  t.levels = optimal_levels(target, s);
  t.achieved_error = objective_with_levels(target, s, t.levels);
  t.grid_n = options.grid_n;
  t.refine_steps = steps;
  t.validate();
  const double refined = t.achieved_error;
  return {std::move(t), dp.error, refined};
}

QuantizationTable build_table(const ActivationSpec& act, const WeightSpec& weight, int bits,
                              const TableBuildOptions& options) {
  return build_table_detailed(act, weight, bits, options).table;
}

std::size_t lookup_index(const QuantizationTable& table, double x) {
  if (std::isnan(x)) throw std::invalid_argument("lookup_index: NaN input");
  const double key = table.exploit_symmetry ? std::fabs(x) : x;
  // Left-closed segments: a key equal to boundary j belongs to segment j + 1.
  return static_cast<std::size_t>(
      std::upper_bound(table.boundaries.begin(), table.boundaries.end(), key) -
      table.boundaries.begin());
}

double lookup_level(const QuantizationTable& table, std::size_t index) {
  if (index >= table.levels.size()) {
    throw std::out_of_range("level index " + std::to_string(index) + " out of range");
  }
  return table.levels[index];
}

double table_error(const QuantizationTable& table) {
  const auto& act = get_activation(table.activation);
  const WeightSpec& w = table.weight;
  std::vector<double> breaks;
  for (double b : table.boundaries) {
    breaks.push_back(b);
    if (table.exploit_symmetry) breaks.push_back(-b);
  }
  for (double k : act.kinks) breaks.push_back(k);
  if (table.exploit_symmetry) breaks.push_back(0.0);
  std::sort(breaks.begin(), breaks.end());
  double sum = 0.0;
  for_each_node(w.a, w.b, breaks, 0.125, [&](double x, double qw) {
    const double d = act.df(x) - table.levels[lookup_index(table, x)];
    sum += qw * w.density(x) * d * d;
  });
  return sum;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_array(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    s += (i ? " " : "") + fmt_double(v[i]);
  }
  return s + "]";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view s, std::string_view key) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw TableError("bad number '" + std::string(s) + "' for " + std::string(key));
  }
  return v;
}

long long parse_int(std::string_view s, std::string_view key) {
  s = trim(s);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw TableError("bad integer '" + std::string(s) + "' for " + std::string(key));
  }
  return v;
}

bool parse_bool(std::string_view s, std::string_view key) {
  s = trim(s);
  if (s == "true") return true;
  if (s == "false") return false;
  throw TableError("bad boolean '" + std::string(s) + "' for " + std::string(key));
}

std::vector<double> parse_array(std::string_view s, std::string_view key) {
  s = trim(s);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
    throw TableError("expected [ ... ] for " + std::string(key));
  }
  std::vector<double> out;
  std::istringstream in{std::string(s.substr(1, s.size() - 2))};
  std::string tok;
  while (in >> tok) out.push_back(parse_double(tok, key));
  return out;
}

}  // namespace

std::string format_table(const QuantizationTable& t) {
  std::ostringstream o;
  o << "format_version = " << kTableFormatVersion << "\n"
    << "activation = " << t.activation << "\n"
    << "bits = " << t.bits << "\n"
    << "num_levels = " << t.num_levels() << "\n"
    << "exploit_symmetry = " << (t.exploit_symmetry ? "true" : "false") << "\n"
    << "weight_kind = " << to_string(t.weight.kind) << "\n"
    << "weight_A = " << fmt_double(t.weight.a) << "\n"
    << "weight_B = " << fmt_double(t.weight.b) << "\n"
    << "boundaries = " << fmt_array(t.boundaries) << "\n"
    << "levels = " << fmt_array(t.levels) << "\n"
    << "achieved_error = " << fmt_double(t.achieved_error) << "\n"
    << "grid_n = " << t.grid_n << "\n"
    << "refine_steps = " << t.refine_steps << "\n";
  return o.str();
}

QuantizationTable parse_table(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view l = trim(line);
    if (l.empty() || l.front() == '#') continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) throw TableError("expected key = value: " + std::string(l));
    const std::string key{trim(l.substr(0, eq))};
    if (!kv.emplace(key, std::string(trim(l.substr(eq + 1)))).second) {
      throw TableError("duplicate key " + key);
    }
  }
  auto get = [&](std::string_view key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw TableError("missing key " + std::string(key));
    return it->second;
  };

  const long long version = parse_int(get("format_version"), "format_version");
  if (version != kTableFormatVersion) {
    throw TableError("unsupported format_version " + std::to_string(version));
  }
  QuantizationTable t;
  t.activation = get("activation");
  try {
    get_activation(t.activation);
  } catch (const std::invalid_argument& e) {
    throw TableError(e.what());
  }
  t.bits = static_cast<int>(parse_int(get("bits"), "bits"));
  const long long num_levels = parse_int(get("num_levels"), "num_levels");
  t.exploit_symmetry = parse_bool(get("exploit_symmetry"), "exploit_symmetry");
  try {
    t.weight.kind = weight_kind_from_string(get("weight_kind"));
  } catch (const std::invalid_argument& e) {
    throw TableError(e.what());
  }
  t.weight.a = parse_double(get("weight_A"), "weight_A");
  t.weight.b = parse_double(get("weight_B"), "weight_B");
  t.boundaries = parse_array(get("boundaries"), "boundaries");
  t.levels = parse_array(get("levels"), "levels");
  t.achieved_error = parse_double(get("achieved_error"), "achieved_error");
  const long long grid_n = parse_int(get("grid_n"), "grid_n");
  const long long steps = parse_int(get("refine_steps"), "refine_steps");
  if (grid_n < 0 || steps < 0) throw TableError("grid_n and refine_steps must be >= 0");
  t.grid_n = static_cast<std::size_t>(grid_n);
  t.refine_steps = static_cast<std::size_t>(steps);
  if (num_levels < 0 || static_cast<std::size_t>(num_levels) != t.levels.size()) {
    throw TableError("num_levels does not match the levels array");
  }
  t.validate();
  return t;
}

void save_table(const QuantizationTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_table(table);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

QuantizationTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_table(buf.str());
}

}  // namespace fewbit
