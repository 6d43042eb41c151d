#ifndef TBC_IO_HPP
#define TBC_IO_HPP

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tbc/analytic.hpp"
#include "tbc/experiments.hpp"
#include "tbc/functionals.hpp"
#include "tbc/sampling.hpp"

namespace tbc {

inline constexpr int kSchemaVersion = 1;

using json = nlohmann::ordered_json;

/// Filesystem failure while reading or writing an artifact.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json to_json(const Vec& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

inline Vec vec_from_json(const json& j) {
  if (!j.is_array() || j.empty() || j.size() > static_cast<std::size_t>(Vec::kCapacity))
    throw ContractViolation("expected a non-empty numeric array");
  Vec v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

inline json to_json(const ModelParams& p) {
  json j;
  j["d"] = p.d;
  j["gamma"] = p.gamma;
  j["r"] = p.r;
  j["T"] = p.T;
  j["h"] = p.h;
  j["s"] = p.s;
  json law;
  law["type"] = law_name(p.law);
  if (const auto* dl = std::get_if<DiscreteLaw>(&p.law)) {
    law["directions"] = json::array();
    for (const Vec& v : dl->directions) law["directions"].push_back(to_json(v));
    law["weights"] = dl->weights;
  } else if (const auto* g = std::get_if<DegenerateLaw>(&p.law)) {
    law["direction"] = to_json(g->direction);
  }
  j["direction_law"] = law;
  if (p.stacking) {
    j["stacking"] = {{"times", p.stacking->times}, {"q", p.stacking->q}};
  } else {
    j["stacking"] = nullptr;
  }
  return j;
}

inline ModelParams params_from_json(const json& j) {
  ModelParams p;
  p.d = j.at("d").get<int>();
  p.gamma = j.at("gamma").get<double>();
  p.r = j.at("r").get<double>();
  p.T = j.at("T").get<double>();
  p.h = j.at("h").get<double>();
  p.s = j.at("s").get<double>();
  const json& law = j.at("direction_law");
  const std::string type = law.at("type").get<std::string>();
  if (type == "uniform_cap") {
    p.law = UniformCap{};
  } else if (type == "discrete") {
    DiscreteLaw dl;
    for (const json& v : law.at("directions")) dl.directions.push_back(vec_from_json(v));
    dl.weights = law.at("weights").get<std::vector<double>>();
    p.law = dl;
  } else if (type == "degenerate") {
    p.law = DegenerateLaw{vec_from_json(law.at("direction"))};
  } else {
    throw ContractViolation("unknown direction law '" + type + "'");
  }
  if (j.contains("stacking") && !j["stacking"].is_null())
    p.stacking = StackingSchedule{j["stacking"].at("times").get<std::vector<double>>(),
                                  j["stacking"].at("q").get<double>()};
  p.validate();
  return p;
}

inline json to_json(const Body& b) {
  json j;
  if (const auto* c = std::get_if<Cylinder>(&b)) {
    j["p"] = to_json(c->basepoint());
    j["v"] = to_json(c->direction().v());
  } else {
    const auto& st = std::get<CylinderStack>(b);
    j["p"] = to_json(st.basepoint());
    const auto& bp = st.breakpoints();
    j["times"] = std::vector<double>(bp.begin() + 1, bp.end() - 1);
    j["V"] = json::array();
    for (const Direction& d : st.directions()) j["V"].push_back(to_json(d.v()));
  }
  return j;
}

inline json to_json(const CylinderSample& s) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["params"] = to_json(s.params);
  j["cylinders"] = json::array();
  for (const Body& b : s.cylinders) j["cylinders"].push_back(to_json(b));
  j["dilated_halfwidth"] = s.dilated_halfwidth();
  j["seed"] = s.seed;
  j["replication_index"] = s.replication_index;
  return j;
}

/// Directions are stored to full precision; a tiny renormalisation absorbs
/// round-off from external writers.
inline Direction direction_from_json(const json& j, double h) {
  Vec v = vec_from_json(j);
  const double n = norm(v);
  if (std::abs(n - 1.0) > 1e-9) throw ContractViolation("direction is not a unit vector");
  v *= 1.0 / n;
  return Direction(v, h);
}

inline CylinderSample sample_from_json(const json& j) {
  CylinderSample s;
  s.params = params_from_json(j.at("params"));
  s.seed = j.value("seed", std::uint64_t{0});
  s.replication_index = j.value("replication_index", std::uint64_t{0});
  for (const json& c : j.at("cylinders")) {
    const Vec p = vec_from_json(c.at("p"));
    if (p.size() != s.params.d) throw ContractViolation("basepoint has wrong dimension");
    if (c.contains("V")) {
      StackingSchedule sched{c.at("times").get<std::vector<double>>(), 0.0};
      std::vector<Direction> dirs;
      for (const json& v : c.at("V")) dirs.push_back(direction_from_json(v, s.params.h));
      s.cylinders.push_back(CylinderStack(p, sched.breakpoints(s.params.T), dirs, s.params.r));
    } else {
      s.cylinders.push_back(Cylinder(p, direction_from_json(c.at("v"), s.params.h), s.params.r, s.params.T));
    }
  }
  return s;
}

inline json to_json(const FunctionalResult& r) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = kind_name(r.kind);
  j["value"] = r.value;
  json meta;
  meta["M"] = r.meta.M;
  meta["se"] = r.meta.se;
  meta["nerve_size"] = r.meta.nerve_size;
  meta["indeterminate"] = r.meta.indeterminate;
  meta["indeterminate_simplices"] = r.meta.indeterminate_simplices;
  meta["alternative_value"] = r.meta.alternative_value ? json(*r.meta.alternative_value) : json(nullptr);
  meta["experimental"] = r.meta.experimental;
  j["meta"] = meta;
  return j;
}

inline json to_json(const BoundReport& b) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = kind_name(b.kind);
  j["kappa_d"] = b.kappa_d;
  j["kappa_{d+1}"] = b.kappa_d1;
  j["R_h"] = b.R_h;
  j["R"] = b.R;
  j["hit_prob_point"] = b.hit_prob_point;
  j["expected_volume"] = b.expected_volume;
  j["cyl_hit_lower"] = b.cyl_hit_lower;
  j["cyl_hit_upper"] = b.cyl_hit_upper;
  j["iso_intensity_lower"] = b.iso_intensity_lower;
  j["iso_intensity_upper"] = b.iso_intensity_upper;
  j["tau"] = b.tau;
  j["c1"] = b.c1;
  j["c2"] = b.c2;
  j["c3"] = b.c3;
  j["c_dRT"] = b.c_dRT;
  j["wasserstein_c"] = b.wasserstein_c;
  j["variance_upper"] = b.variance_upper;
  if (b.c1_estimated) {
    j["c1_estimated"] = true;
    j["p_intersect"] = b.p_intersect;
    j["p_intersect_se"] = b.p_intersect_se;
    j["c4"] = b.c4;
    j["c5"] = b.c5;
  }
  return j;
}

inline json to_json(const SizeBlock& b) {
  json j;
  j["s"] = b.s;
  j["N"] = b.N;
  j["window_volume"] = b.window_volume;
  j["mean"] = b.mean;
  j["variance"] = b.variance;
  j["ks"] = b.ks;
  j["w1"] = b.w1;
  j["lag1_autocorrelation"] = b.lag1_autocorrelation;
  j["expected_value"] = b.expected_value ? json(*b.expected_value) : json(nullptr);
  j["variance_bracket"] = {b.variance_lower, b.variance_upper};
  j["rate_bound"] = b.rate_bound;
  j["indeterminate_replications"] = b.indeterminate_replications;
  j["values"] = b.values;
  j["standardized"] = b.standardized;
  return j;
}

inline json to_json(const CltReport& r) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = kind_name(r.kind);
  j["model"] = r.model();
  j["params"] = to_json(r.params);
  j["seed"] = r.seed;
  j["M"] = r.M;
  j["sizes"] = json::array();
  for (const SizeBlock& b : r.sizes) j["sizes"].push_back(to_json(b));
  j["w1_slope"] = r.w1_slope ? json(*r.w1_slope) : json(nullptr);
  const std::vector<bool> bracket = variance_bracket_check(r);
  j["variance_bracket_pass"] = bracket;
  j["constants"] = to_json(r.constants);
  return j;
}

inline std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

/// Columns: functional,s,replication,value.
inline void write_clt_csv(std::ostream& os, const CltReport& r) {
  os << "functional,s,replication,value\n";
  for (const SizeBlock& b : r.sizes)
    for (std::size_t i = 0; i < b.values.size(); ++i)
      os << kind_name(r.kind) << ',' << format_double(b.s) << ',' << i << ',' << format_double(b.values[i]) << '\n';
}

struct EstimateRow {
  double s = 0.0;
  std::uint64_t replication = 0;
  FunctionalResult result;
};

/// Columns: kind,s,replication,value,se,M,nerve_size,indeterminate.
inline void write_estimate_csv(std::ostream& os, const std::vector<EstimateRow>& rows) {
  os << "kind,s,replication,value,se,M,nerve_size,indeterminate\n";
  for (const EstimateRow& row : rows) {
    const FunctionalResult& f = row.result;
    os << kind_name(f.kind) << ',' << format_double(row.s) << ',' << row.replication << ','
       << format_double(f.value) << ',' << format_double(f.meta.se) << ',' << f.meta.M << ',' << f.meta.nerve_size
       << ',' << (f.meta.indeterminate ? 1 : 0) << '\n';
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline CylinderSample load_sample(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw IoError("'" + path + "' is not valid JSON: " + e.what());
  }
  return sample_from_json(j);
}

}  // namespace tbc

#endif  // TBC_IO_HPP
