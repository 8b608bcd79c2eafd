#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>

#include "gfflab/cli.hpp"
#include "gfflab/errors.hpp"
#include "gfflab/snapshot.hpp"
#include "json.hpp"

using namespace gfflab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class Workspace {
 public:
  Workspace() {
    dir_ = fs::temp_directory_path() / ("gfflab_cli_" + std::to_string(counter_++) + "_" +
                                        std::to_string(static_cast<long>(::testing::UnitTest::GetInstance()->random_seed())));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }

  fs::path file(const std::string& name, const std::string& text) const {
    write_file(dir_ / name, text);
    return dir_ / name;
  }
  fs::path path(const std::string& name) const { return dir_ / name; }

 private:
  static inline int counter_ = 0;
  fs::path dir_;
};

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(const std::string& sub, const fs::path& config, const fs::path& output,
              std::optional<std::uint64_t> seed = std::nullopt, std::string format = "both") {
  cli::Options o;
  o.subcommand = sub;
  o.config_path = config.string();
  o.output = output.string();
  o.seed = seed;
  o.threads = 1;
  o.format = format;
  std::ostringstream out, err;
  const int code = cli::run(o, out, err);
  return {code, out.str(), err.str()};
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

const char* kScan = R"({"experiment": "annulus-scan", "grid": {"nx": 64, "ny": 64}, "xi": 0.3, "sigma": 0.1,
  "C": 8, "scales": [12, 6, 3], "replicates": 5, "seed": 3})";

}  // namespace

TEST(Cli, AnnulusScanRowsAndDeterminism) {
  Workspace ws;
  const auto cfg = ws.file("scan.json", kScan);
  const Result a = invoke("annulus-scan", cfg, ws.path("a"));
  ASSERT_EQ(a.code, 0) << a.err;
  const Result b = invoke("annulus-scan", cfg, ws.path("b"));
  ASSERT_EQ(b.code, 0) << b.err;
  const std::string ea = read_file(ws.path("a") / "events.csv");
  EXPECT_EQ(ea, read_file(ws.path("b") / "events.csv"));
  EXPECT_EQ(count_lines(ea), 1u + 5 * 3);
  EXPECT_EQ(ea.substr(0, ea.find('\n')), "replicate,scale_index,r,event,across,diameter");

  const json summary = json::parse(read_file(ws.path("a") / "summary.json"));
  EXPECT_EQ(summary["estimates"]["p_hat"].size(), 3u);
  EXPECT_EQ(summary["confidence"]["method"], "wilson");
  ASSERT_FALSE(summary["warnings"].empty());

  const Result c = invoke("annulus-scan", cfg, ws.path("c"), 4);
  ASSERT_EQ(c.code, 0);
  EXPECT_NE(ea, read_file(ws.path("c") / "events.csv"));
}

TEST(Cli, ManifestChecksumsMatchFiles) {
  Workspace ws;
  const Result r = invoke("annulus-scan", ws.file("scan.json", kScan), ws.path("out"));
  ASSERT_EQ(r.code, 0) << r.err;
  const json m = json::parse(read_file(ws.path("out") / "manifest.json"));
  EXPECT_EQ(m["version"], cli::kVersion);
  EXPECT_EQ(m["seed"], 3);
  EXPECT_EQ(m["config_hash"].get<std::string>().size(), 16u);
  EXPECT_TRUE(m.contains("started") && m.contains("finished"));
  ASSERT_EQ(m["outputs"].size(), 2u);
  for (const auto& o : m["outputs"]) {
    const std::string bytes = read_file(ws.path("out") / o["file"].get<std::string>());
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    EXPECT_EQ(o["fnv1a64"], hex);
    EXPECT_EQ(o["bytes"], bytes.size());
  }
}

TEST(Cli, FormatSelectsArtifacts) {
  Workspace ws;
  const auto cfg = ws.file("scan.json", kScan);
  ASSERT_EQ(invoke("annulus-scan", cfg, ws.path("csv"), std::nullopt, "csv").code, 0);
  EXPECT_TRUE(fs::exists(ws.path("csv") / "events.csv"));
  EXPECT_FALSE(fs::exists(ws.path("csv") / "summary.json"));
  ASSERT_EQ(invoke("annulus-scan", cfg, ws.path("json"), std::nullopt, "json").code, 0);
  EXPECT_FALSE(fs::exists(ws.path("json") / "events.csv"));
  EXPECT_TRUE(fs::exists(ws.path("json") / "summary.json"));
  EXPECT_EQ(invoke("annulus-scan", cfg, ws.path("x"), std::nullopt, "xml").code, cli::kExitValidation);
}

TEST(Cli, ValidationErrorsExitTwo) {
  Workspace ws;
  struct Case {
    const char* sub;
    const char* text;
  };
  const Case cases[] = {
      {"annulus-scan", R"({"experiment": "annulus-scan", "grid": {"nx": 64, "ny": 64}, "scales": [8], "replicates": 0})"},
      {"annulus-scan", R"({"experiment": "annulus-scan", "grid": {"nx": 64, "ny": 64}, "scales": [8], "replicate": 3})"},
      {"annulus-scan", R"({"experiment": "iterate", "grid": {"nx": 64, "ny": 64}, "scales": [8], "replicates": 3})"},
      {"annulus-scan", R"({"experiment": "annulus-scan", "grid": {"nx": 64}, "replicates": 3})"},
      {"annulus-scan", R"({"experiment": "annulus-scan", "grid": {"nx": 64, "ny": 64}, "scales": [8], "replicates": 2,)"},
      {"annulus-scan", R"({"experiment": "annulus-scan", "grid": {"nx": 64, "ny": 64}, "scales": "big", "replicates": 2})"},
      {"warp", R"({"grid": {"nx": 64, "ny": 64}})"},
  };
  for (const auto& c : cases) {
    const Result r = invoke(c.sub, ws.file("bad.json", c.text), ws.path("out"));
    EXPECT_EQ(r.code, cli::kExitValidation) << c.text;
    const json e = json::parse(r.err);
    EXPECT_EQ(e["exit_code"], cli::kExitValidation);
    EXPECT_TRUE(e.contains("error") && e.contains("message"));
  }
  EXPECT_EQ(invoke("sample", ws.path("missing.json"), ws.path("out")).code, cli::kExitValidation);
}

TEST(Cli, GeometryErrorsExitThree) {
  Workspace ws;
  const auto cfg = ws.file("far.json", R"({"experiment": "annulus-scan", "grid": {"nx": 32, "ny": 32},
    "scales": [12], "center": [4, 4], "replicates": 2})");
  const Result r = invoke("annulus-scan", cfg, ws.path("out"));
  EXPECT_EQ(r.code, cli::kExitNumerical) << r.err;
  EXPECT_EQ(json::parse(r.err)["exit_code"], cli::kExitNumerical);
}

TEST(Cli, DistBatchWithMasks) {
  Workspace ws;
  ws.file("q.txt", "# u v\n1 1 10 10\n\n2 2 12 3 box\n1 1 12 12 box\n");
  const auto cfg = ws.file("dist.json", R"({"experiment": "dist", "grid": {"nx": 16, "ny": 16}, "field": "zero_boundary",
    "queries": "q.txt", "masks": {"box": {"type": "rect", "i0": 0, "j0": 0, "i1": 12, "j1": 12}},
    "geodesics": true, "seed": 1})");
  const Result r = invoke("dist", cfg, ws.path("out"));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = read_file(ws.path("out") / "distances.csv");
  EXPECT_EQ(count_lines(csv), 4u);
  EXPECT_TRUE(fs::exists(ws.path("out") / "geodesic_0.csv"));
  EXPECT_TRUE(fs::exists(ws.path("out") / "geodesic_2.csv"));

  ws.file("q.txt", "1 1 14 14 box\n");
  EXPECT_EQ(invoke("dist", cfg, ws.path("out1")).code, cli::kExitNumerical);

  ws.file("bad.txt", "1 1 2\n");
  const auto bad = ws.file("bad.json", R"({"experiment": "dist", "grid": {"nx": 16, "ny": 16}, "queries": "bad.txt"})");
  const Result e = invoke("dist", bad, ws.path("out2"));
  EXPECT_EQ(e.code, cli::kExitValidation);
  EXPECT_NE(e.err.find("line 1"), std::string::npos);
}

TEST(Cli, SampleWritesLoadableSnapshots) {
  Workspace ws;
  const auto cfg = ws.file("s.json", R"({"experiment": "sample", "grid": {"nx": 16, "ny": 12}, "field": "torus",
    "replicates": 2, "seed": 8})");
  ASSERT_EQ(invoke("sample", cfg, ws.path("out")).code, 0);
  const FieldSample f = load_snapshot(ws.path("out") / "field_1.gffm");
  EXPECT_EQ(f.spec.nx, 16);
  EXPECT_EQ(f.spec.ny, 12);
  EXPECT_EQ(count_lines(read_file(ws.path("out") / "samples.csv")), 3u);
}

TEST(Cli, IterateLocalityAndEfronStein) {
  Workspace ws;
  const auto it = ws.file("it.json", R"({"experiment": "iterate", "grid": {"nx": 8, "ny": 8}, "synthetic_p": 0.7,
    "k_max": 12, "b": 0.4, "replicates": 300})");
  ASSERT_EQ(invoke("iterate", it, ws.path("it")).code, 0);
  const json s = json::parse(read_file(ws.path("it") / "summary.json"));
  EXPECT_EQ(s["estimates"]["tail"].size(), 12u);
  EXPECT_EQ(count_lines(read_file(ws.path("it") / "iteration.csv")), 1u + 300 * 12);

  const auto loc = ws.file("loc.json", R"({"experiment": "locality-check", "grid": {"nx": 32, "ny": 32},
    "pin_radius": 6, "replicates": 3})");
  const Result r = invoke("locality-check", loc, ws.path("loc"));
  ASSERT_EQ(r.code, 0) << r.err;
  const json checks = json::parse(read_file(ws.path("loc") / "locality.json"));
  ASSERT_EQ(checks.size(), 2u);
  for (const auto& c : checks) {
    EXPECT_TRUE(c["pass"].get<bool>());
    EXPECT_TRUE(c.contains("parameters") && c.contains("discrepancy") && c.contains("seeds"));
  }

  const auto es = ws.file("es.json", R"({"experiment": "efron-stein", "grid": {"nx": 20, "ny": 20},
    "field": "zero_boundary", "epsilon_ladder": [8, 4], "replicates": 2})");
  const Result e = invoke("efron-stein", es, ws.path("es"));
  ASSERT_EQ(e.code, 0) << e.err;
  const json esum = json::parse(read_file(ws.path("es") / "summary.json"));
  EXPECT_TRUE(esum["partition_exact"].get<bool>());
  EXPECT_TRUE(esum["one_sided_bound_holds"].get<bool>());
}

TEST(Cli, BinaryReportsUsageErrors) {
  const std::string bin = GFFLAB_CLI_PATH;
  EXPECT_EQ(WEXITSTATUS(std::system((bin + " sample > /dev/null 2>&1").c_str())), cli::kExitValidation);
  EXPECT_EQ(WEXITSTATUS(std::system((bin + " --version > /dev/null 2>&1").c_str())), 0);
}

TEST(Cli, ParseBatchAndNumbers) {
  const auto q = cli::parse_batch("0 0 1 1\n# c\n2 3 4 5 m\n");
  ASSERT_EQ(q.size(), 2u);
  EXPECT_EQ(*q[1].mask, "m");
  EXPECT_THROW(cli::parse_batch("0 0 1 1 m extra\n"), ParseError);
  EXPECT_EQ(cli::format_number(0.1), "0.1");
  EXPECT_EQ(cli::format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(std::strtod(cli::format_number(1.0 / 3).c_str(), nullptr), 1.0 / 3);
}
