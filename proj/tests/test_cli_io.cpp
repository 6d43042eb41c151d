#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "tbc/tbc.hpp"

using namespace tbc;
namespace fs = std::filesystem;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("tbc_cli_io_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path_of(const std::string& name) { return (scratch() / name).string(); }

std::string write_file(const std::string& name, const std::string& text) {
  const std::string p = path_of(name);
  std::ofstream(p) << text;
  return p;
}

struct CliRun {
  int code = -1;
  std::string err;
};

CliRun run_cli(const std::string& args, const std::string& env = "") {
  const std::string err = path_of("stderr.txt");
  const std::string cmd = env + (env.empty() ? "" : " ") + std::string(TBC_CLI_PATH) + " " + args + " 2> " + err;
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = read_text(err);
  return r;
}

const char* kSmall =
    "[model]\nd = 1\ngamma = 1\nr = 0.3\nT = 1\nh = 0.5\ns = 4\n"
    "[run]\nseed = 5\n";

}  // namespace

TEST(Config, Defaults) {
  const RunConfig c = parse_config("");
  EXPECT_EQ(c.params.d, 2);
  EXPECT_EQ(c.clt.sizes, (std::vector<double>{4, 8, 16}));
  EXPECT_EQ(c.clt.N, 1000u);
}

TEST(Config, ParsesSections) {
  const RunConfig c = parse_config(
      "[model]\nd = 1\ngamma = 2\nr = 0.2\nT = 1.5\nh = 0.4\ns = 6\n"
      "[stacking]\ntimes = 0.5, 1.0\nq = 0.3\n"
      "[estimate]\nkind = euler\npoints = 500\nreps = 3\n"
      "[clt]\nkind = isolated\nsizes = 10, 20\nreps = 50\n"
      "[oracle]\nresolution = 0.01\n"
      "[run]\nseed = 9\nthreads = 2\nout = x.json\n");
  EXPECT_EQ(c.params.d, 1);
  EXPECT_EQ(c.params.gamma, 2.0);
  ASSERT_TRUE(c.params.stacking.has_value());
  EXPECT_EQ(c.params.stacking->times, (std::vector<double>{0.5, 1.0}));
  EXPECT_EQ(c.estimate.kind, FunctionalKind::EulerCharacteristic);
  EXPECT_EQ(c.estimate.M, 500u);
  EXPECT_EQ(c.clt.kind, FunctionalKind::IsolatedCount);
  EXPECT_EQ(c.clt.sizes, (std::vector<double>{10, 20}));
  EXPECT_EQ(c.clt.N, 50u);
  EXPECT_EQ(c.oracle.resolution, 0.01);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.threads, 2u);
  EXPECT_EQ(c.out, "x.json");
}

TEST(Config, DiscreteLawIsNormalized) {
  const RunConfig c = parse_config("[model]\nd = 1\nlaw = discrete\ndirections = 0,2; 1,1\nweights = 0.5, 0.5\n");
  const auto& dl = std::get<DiscreteLaw>(c.params.law);
  ASSERT_EQ(dl.directions.size(), 2u);
  EXPECT_NEAR(norm(dl.directions[1]), 1.0, 1e-15);
  EXPECT_EQ(dl.directions[0], (Vec{0.0, 1.0}));
}

TEST(Config, UnknownKeyIsNamed) {
  try {
    parse_config("[model]\ngama = 1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("model.gama"), std::string::npos);
  }
  EXPECT_THROW(parse_config("[nonsense]\nx = 1\n"), ConfigError);
}

TEST(Config, InvalidValues) {
  EXPECT_THROW(parse_config("[model]\nh = 1.5\n"), ConfigError);
  EXPECT_THROW(parse_config("[model]\nr = abc\n"), ConfigError);
  EXPECT_THROW(parse_config("[estimate]\nkind = area\n"), ConfigError);
  EXPECT_THROW(parse_config("[model]\nlaw = degenerate\n"), ConfigError);
}

TEST(Json, SampleRoundTrip) {
  ModelParams p;
  p.d = 2;
  p.s = 4.0;
  const CylinderSample s = sample_tbc(p, 3, 2);
  const CylinderSample back = sample_from_json(json::parse(to_json(s).dump()));
  ASSERT_EQ(back.size(), s.size());
  EXPECT_EQ(back.seed, 3u);
  EXPECT_EQ(back.replication_index, 2u);
  EstimatorSettings st;
  st.M = 5000;
  for (FunctionalKind k :
       {FunctionalKind::Volume, FunctionalKind::IsolatedCount, FunctionalKind::EulerCharacteristic})
    EXPECT_EQ(evaluate_functional(k, s, st).value, evaluate_functional(k, back, st).value);
}

TEST(Json, StackedSampleRoundTrip) {
  ModelParams p;
  p.d = 1;
  p.s = 4.0;
  p.stacking = StackingSchedule{{0.3, 0.6}, 0.5};
  const CylinderSample s = sample_tbc(p, 4, 0);
  const CylinderSample back = sample_from_json(json::parse(to_json(s).dump()));
  ASSERT_TRUE(back.params.stacking.has_value());
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    EXPECT_EQ(std::get<CylinderStack>(back.cylinders[i]).segments(), std::get<CylinderStack>(s.cylinders[i]).segments());
  EXPECT_EQ(euler_characteristic(s).value, euler_characteristic(back).value);
}

TEST(Json, BoundReportFields) {
  ModelParams p;
  const json j = to_json(volume_clt_constants(p));
  for (const char* key : {"kind", "kappa_d", "kappa_{d+1}", "R_h", "R", "tau", "c1", "c2", "c3", "c_dRT",
                          "wasserstein_c", "variance_upper"})
    EXPECT_TRUE(j.contains(key)) << key;
}

TEST(Json, LoadRejectsGarbage) {
  EXPECT_THROW(load_sample(write_file("garbage.json", "{not json")), IoError);
  EXPECT_THROW(load_sample(path_of("missing.json")), IoError);
}

TEST(Csv, CltColumns) {
  CltReport r;
  r.kind = FunctionalKind::Volume;
  SizeBlock b;
  b.s = 4;
  b.values = {1.5, 2.5};
  r.sizes.push_back(b);
  std::ostringstream os;
  write_clt_csv(os, r);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "functional,s,replication,value");
  EXPECT_NE(os.str().find("volume,4,1,2.5"), std::string::npos);
}

TEST(Cli, SampleEmptyForZeroIntensity) {
  const std::string cfg = write_file("zero.ini", "[model]\ngamma = 0\n");
  const std::string out = path_of("zero.json");
  ASSERT_EQ(run_cli("sample --config " + cfg + " --out " + out).code, 0);
  const json j = json::parse(read_text(out));
  EXPECT_EQ(j["schema_version"], kSchemaVersion);
  EXPECT_TRUE(j["cylinders"].empty());
}

TEST(Cli, SampleIsByteIdenticalOnRerun) {
  const std::string cfg = write_file("small.ini", kSmall);
  ASSERT_EQ(run_cli("sample --config " + cfg + " --out " + path_of("a.json")).code, 0);
  ASSERT_EQ(run_cli("sample --config " + cfg + " --out " + path_of("b.json")).code, 0);
  EXPECT_EQ(read_text(path_of("a.json")), read_text(path_of("b.json")));
}

TEST(Cli, SeedPrecedence) {
  const std::string cfg = write_file("small.ini", kSmall);
  auto seed_of = [&](const std::string& args, const std::string& env) {
    const std::string out = path_of("seed.json");
    EXPECT_EQ(run_cli("sample --config " + cfg + " --out " + out + args, env).code, 0);
    return json::parse(read_text(out))["seed"].get<std::uint64_t>();
  };
  EXPECT_EQ(seed_of("", ""), 5u);
  EXPECT_EQ(seed_of("", "TBC_SEED=11"), 11u);
  EXPECT_EQ(seed_of(" --seed 13", "TBC_SEED=11"), 13u);
  EXPECT_EQ(run_cli("sample --config " + cfg, "TBC_SEED=zz").code, 2);
}

TEST(Cli, MalformedKeyExitsTwoAndNamesIt) {
  const std::string cfg = write_file("bad.ini", "[model]\nradius = 1\n");
  const CliRun r = run_cli("sample --config " + cfg);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("model.radius"), std::string::npos);
  EXPECT_EQ(run_cli("sample --bogus-flag").code, 2);
  EXPECT_EQ(run_cli("estimate --kind area").code, 2);
}

TEST(Cli, IoErrorExitsThree) {
  EXPECT_EQ(run_cli("sample --config " + path_of("no_such.ini")).code, 3);
  const std::string cfg = write_file("small.ini", kSmall);
  EXPECT_EQ(run_cli("sample --config " + cfg + " --out /nonexistent_dir/x.json").code, 3);
}

TEST(Cli, EstimateRowsAndVolumeCap) {
  const std::string cfg = write_file("small.ini", kSmall);
  const std::string out = path_of("est.csv");
  ASSERT_EQ(run_cli("estimate --config " + cfg + " --reps 3 --points 2000 --out " + out).code, 0);
  std::istringstream is(read_text(out));
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "kind,s,replication,value,se,M,nerve_size,indeterminate");
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    ASSERT_EQ(f.size(), 8u);
    EXPECT_LE(std::stod(f[3]), 4.0 * 1.0);
  }
  EXPECT_EQ(rows, 3);
  ASSERT_EQ(run_cli("estimate --config " + cfg + " --reps 1 --out " + out).code, 0);
  const std::string one = read_text(out);
  EXPECT_EQ(std::count(one.begin(), one.end(), '\n'), 2);
}

TEST(Cli, EstimateFlagsTangentSample) {
  ModelParams p;
  p.d = 1;
  p.r = 0.3;
  p.s = 4.0;
  CylinderSample s;
  s.params = p;
  s.cylinders = {Cylinder(Vec{0.0}, Direction::vertical(1), p.r, p.T),
                 Cylinder(Vec{0.6}, Direction::vertical(1), p.r, p.T)};
  const std::string in = path_of("tangent.json");
  write_json(in, to_json(s));
  const std::string out = path_of("tangent.csv");
  ASSERT_EQ(run_cli("estimate --kind euler --sample " + in + " --out " + out).code, 0);
  std::istringstream is(read_text(out));
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(row.substr(row.rfind(',') + 1), "1");
}

TEST(Cli, EstimateRoundTripMatchesLibrary) {
  const std::string cfg = write_file("small.ini", kSmall);
  const std::string smp = path_of("rt.json");
  ASSERT_EQ(run_cli("sample --config " + cfg + " --replication 2 --out " + smp).code, 0);
  const std::string out = path_of("rt.csv");
  ASSERT_EQ(run_cli("estimate --kind isolated --sample " + smp + " --out " + out).code, 0);
  const CylinderSample s = load_sample(smp);
  const double direct = isolated_count(s).value;
  const std::string text = read_text(out);
  const std::string row = text.substr(text.find('\n') + 1);
  std::vector<std::string> f;
  std::stringstream ls(row);
  for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
  EXPECT_EQ(std::stod(f[3]), direct);
}

TEST(Cli, CltReportAndCsv) {
  const std::string cfg = write_file("small.ini", kSmall);
  const std::string out = path_of("clt.json"), csv = path_of("clt.csv");
  ASSERT_EQ(run_cli("clt --config " + cfg + " --sizes 4,8 --reps 100 --points 500 --out " + out + " --csv " + csv).code,
            0);
  const json j = json::parse(read_text(out));
  EXPECT_EQ(j["sizes"].size(), 2u);
  EXPECT_EQ(j["model"], "TBC");
  EXPECT_EQ(read_text(csv).substr(0, 31), "functional,s,replication,value\n");
}

TEST(Cli, CltDeterministic) {
  const std::string cfg = write_file("small.ini", kSmall);
  ASSERT_EQ(run_cli("clt --config " + cfg + " --sizes 4 --reps 30 --points 300 --out " + path_of("c1.json")).code, 0);
  ASSERT_EQ(
      run_cli("clt --config " + cfg + " --sizes 4 --reps 30 --points 300 --threads 1 --out " + path_of("c2.json")).code,
      0);
  EXPECT_EQ(read_text(path_of("c1.json")), read_text(path_of("c2.json")));
}

TEST(Cli, CltIsolatedSmallWindowExitsFour) {
  const std::string cfg = write_file("small.ini", kSmall);
  const CliRun r = run_cli("clt --config " + cfg + " --kind isolated --sizes 4 --reps 10");
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("6(R_h + r)"), std::string::npos);
}

TEST(Cli, CltStackedVolumeIsFlagged) {
  const std::string cfg =
      write_file("stacked.ini", std::string(kSmall) + "[stacking]\ntimes = 0.25, 0.5, 0.75\nq = 0.5\n");
  const std::string out = path_of("stacked.json");
  ASSERT_EQ(run_cli("clt --config " + cfg + " --sizes 4 --reps 20 --points 300 --out " + out).code, 0);
  EXPECT_EQ(json::parse(read_text(out))["model"], "sTBC");
}

TEST(Cli, BoundsTableAndJson) {
  const std::string cfg = write_file("b.ini", "[model]\nd = 2\ngamma = 1\nr = 0.3\nT = 1\nh = 0.5\ns = 16\n");
  const std::string out = path_of("bounds.json");
  const std::string table = path_of("bounds.txt");
  ASSERT_EQ(run_cli("bounds --config " + cfg + " --out " + out + " > " + table).code, 0);
  const json j = json::parse(read_text(out));
  EXPECT_EQ(j["reports"].size(), 3u);
  const std::string t = read_text(table);
  EXPECT_NE(t.find("[volume]"), std::string::npos);
  EXPECT_NE(t.find("lower <= upper: cyl_hit yes, iso_intensity yes"), std::string::npos);
}

TEST(Cli, BoundsZeroRadius) {
  const std::string cfg = write_file("r0.ini", "[model]\nr = 0\ns = 4\n");
  const std::string out = path_of("r0.json");
  ASSERT_EQ(run_cli("bounds --config " + cfg + " --out " + out + " > /dev/null").code, 0);
  const json j = json::parse(read_text(out));
  EXPECT_EQ(j["reports"][0]["hit_prob_point"], 0.0);
  EXPECT_EQ(j["reports"][0]["cyl_hit_upper"], 0.0);
}

TEST(Cli, OracleAgreesOnSmallSample) {
  const std::string cfg = write_file("small.ini", kSmall);
  const std::string out = path_of("oracle.json");
  ASSERT_EQ(run_cli("oracle --config " + cfg + " --out " + out).code, 0);
  const json j = json::parse(read_text(out));
  if (!j["voxel"]["unreliable"].get<bool>() && !j["nerve"]["meta"]["indeterminate"].get<bool>()) {
    EXPECT_TRUE(j["agree"].get<bool>());
  }
  EXPECT_EQ(run_cli("oracle --config " + write_file("d3.ini", "[model]\nd = 3\n")).code, 2);
}
