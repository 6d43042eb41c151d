#ifndef TBC_CONFIG_HPP
#define TBC_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tbc/errors.hpp"
#include "tbc/functionals.hpp"
#include "tbc/params.hpp"

namespace tbc {

struct EstimateBlock {
  FunctionalKind kind = FunctionalKind::Volume;
  std::size_t M = 100000;
  std::size_t reps = 1;
};

struct CltBlock {
  FunctionalKind kind = FunctionalKind::Volume;
  std::vector<double> sizes{4.0, 8.0, 16.0};
  std::size_t N = 1000;
  std::size_t M = 100000;
  std::size_t intersect_pairs = 1000000;
};

struct OracleBlock {
  double resolution = 0.0;  // 0: r / 20
};

/// Everything a CLI run needs; parsed from an INI file.
struct RunConfig {
  ModelParams params;
  EstimateBlock estimate;
  CltBlock clt;
  OracleBlock oracle;
  std::uint64_t seed = 0;
  std::string out;
  unsigned threads = 0;
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"model", {"d", "gamma", "r", "T", "h", "s", "law", "directions", "weights", "direction"}},
      {"stacking", {"times", "q"}},
      {"run", {"seed", "out", "threads"}},
      {"estimate", {"kind", "points", "reps"}},
      {"clt", {"kind", "sizes", "reps", "points", "intersect_pairs"}},
      {"oracle", {"resolution"}},
  };
  return schema;
}

template <typename T>
T parse_scalar(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  T value{};
  is >> value;
  std::string rest;
  if (is.fail() || (is >> rest)) throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  return value;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text, char sep = ',') {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(parse_scalar<double>(key, item.substr(b, item.find_last_not_of(" \t") - b + 1)));
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

/// "a,b,c" as a direction, normalised to unit length.
inline Vec parse_direction(const std::string& key, const std::string& text) {
  const std::vector<double> xs = parse_list(key, text);
  if (xs.size() > static_cast<std::size_t>(Vec::kCapacity))
    throw ConfigError("config key '" + key + "': too many components");
  Vec v(static_cast<int>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) v[static_cast<int>(i)] = xs[i];
  const double n = norm(v);
  if (!(n > 0.0)) throw ConfigError("config key '" + key + "': zero direction");
  v *= 1.0 / n;
  return v;
}

}  // namespace detail

/// Parses INI text. Unknown sections or keys and invalid values raise
/// ConfigError naming the key.
inline RunConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  const auto& schema = detail::config_schema();
  for (const auto& [section, body] : tree) {
    auto it = schema.find(section);
    if (it == schema.end() || body.data().size() > 0)
      throw ConfigError("unknown config key '" + section + "'");
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ConfigError("unknown config key '" + section + "." + key + "'");
  }

  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return *v;
    return std::nullopt;
  };
  auto num = [&](const std::string& path, double fallback) {
    const auto v = get(path);
    return v ? detail::parse_scalar<double>(path, *v) : fallback;
  };
  auto count = [&](const std::string& path, std::size_t fallback) {
    const auto v = get(path);
    if (!v) return fallback;
    const double x = detail::parse_scalar<double>(path, *v);
    if (!(x >= 0.0) || x != std::floor(x)) throw ConfigError("config key '" + path + "': expected a count");
    return static_cast<std::size_t>(x);
  };
  auto kind = [&](const std::string& path, FunctionalKind fallback) {
    const auto v = get(path);
    if (!v) return fallback;
    try {
      return parse_kind(*v);
    } catch (const ContractViolation&) {
      throw ConfigError("config key '" + path + "': unknown functional '" + *v + "'");
    }
  };

  RunConfig c;
  ModelParams& p = c.params;
  p.d = static_cast<int>(count("model.d", 2));
  p.gamma = num("model.gamma", p.gamma);
  p.r = num("model.r", p.r);
  p.T = num("model.T", p.T);
  p.h = num("model.h", p.h);
  p.s = num("model.s", p.s);
  const std::string law = get("model.law").value_or("uniform_cap");
  if (law == "uniform_cap") {
    p.law = UniformCap{};
  } else if (law == "degenerate") {
    const auto dir = get("model.direction");
    if (!dir) throw ConfigError("config key 'model.direction' is required for law = degenerate");
    p.law = DegenerateLaw{detail::parse_direction("model.direction", *dir)};
  } else if (law == "discrete") {
    const auto dirs = get("model.directions");
    const auto ws = get("model.weights");
    if (!dirs) throw ConfigError("config key 'model.directions' is required for law = discrete");
    if (!ws) throw ConfigError("config key 'model.weights' is required for law = discrete");
    DiscreteLaw dl;
    std::stringstream ss(*dirs);
    std::string item;
    while (std::getline(ss, item, ';')) dl.directions.push_back(detail::parse_direction("model.directions", item));
    dl.weights = detail::parse_list("model.weights", *ws);
    p.law = dl;
  } else {
    throw ConfigError("config key 'model.law': unknown law '" + law + "'");
  }
  if (get("stacking.times") || get("stacking.q")) {
    StackingSchedule sched;
    if (const auto t = get("stacking.times")) sched.times = detail::parse_list("stacking.times", *t);
    sched.q = num("stacking.q", 0.0);
    p.stacking = sched;
  }
  try {
    p.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("config section 'model': ") + e.what());
  }

  if (const auto v = get("run.seed")) c.seed = detail::parse_scalar<std::uint64_t>("run.seed", *v);
  c.out = get("run.out").value_or("");
  c.threads = static_cast<unsigned>(count("run.threads", 0));

  c.estimate.kind = kind("estimate.kind", c.estimate.kind);
  c.estimate.M = count("estimate.points", c.estimate.M);
  c.estimate.reps = count("estimate.reps", c.estimate.reps);
  if (c.estimate.M == 0) throw ConfigError("config key 'estimate.points' must be >= 1");

  c.clt.kind = kind("clt.kind", c.clt.kind);
  if (const auto v = get("clt.sizes")) c.clt.sizes = detail::parse_list("clt.sizes", *v);
  c.clt.N = count("clt.reps", c.clt.N);
  c.clt.M = count("clt.points", c.clt.M);
  c.clt.intersect_pairs = count("clt.intersect_pairs", c.clt.intersect_pairs);
  if (c.clt.N < 2) throw ConfigError("config key 'clt.reps' must be >= 2");

  c.oracle.resolution = num("oracle.resolution", 0.0);
  if (c.oracle.resolution < 0.0) throw ConfigError("config key 'oracle.resolution' must be >= 0");
  return c;
}

}  // namespace tbc

#endif  // TBC_CONFIG_HPP
