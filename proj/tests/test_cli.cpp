#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
};

Result rwz(const std::string& args) {
  static int counter = 0;
  const fs::path log = fs::temp_directory_path() / ("rwz_cli_" + std::to_string(::getpid()) + "_" +
                                                    std::to_string(counter++) + ".log");
  const std::string cmd = std::string(RWZ_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  fs::remove(log);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

int rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  int n = -1;  // header
  while (std::getline(in, line)) ++n;
  return n;
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int k = 0;
    path = fs::temp_directory_path() / ("rwz_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(k++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& sub = "") const { return (sub.empty() ? path : path / sub).string(); }
};

json fake_report(const std::string& name, bool pass) {
  return {{"experiment", name}, {"model", "poisson"}, {"oracle", 1.0}, {"mc_variance", 1.01},
          {"verdict", {{"rule", "x"}, {"pass", pass}}}};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("sample: poisson writes points and meta") {
    TempDir d;
    auto r = rwz("sample --model poisson --intensity 1 --radius 50 --seed 42 --out " + d.str("a"));
    REQUIRE(r.code == 0);
    CHECK(slurp(d.path / "a" / "points.csv").rfind("re,im\n", 0) == 0);
    auto meta = load(d.path / "a" / "meta.json");
    CHECK(meta["model"] == "poisson");
    CHECK(meta["seed"] == 42);
    CHECK(meta.contains("version"));
    CHECK(meta["n_points"] == rows(d.path / "a" / "points.csv"));
    // same seed, same file
    REQUIRE(rwz("sample --model poisson --intensity 1 --radius 50 --seed 42 --out " + d.str("b")).code == 0);
    CHECK(slurp(d.path / "a" / "points.csv") == slurp(d.path / "b" / "points.csv"));
  }

  TEST_CASE("sample: ginibre row count and gef residual") {
    TempDir d;
    REQUIRE(rwz("sample --model ginibre --n 900 --seed 7 --out " + d.str("g")).code == 0);
    CHECK(rows(d.path / "g" / "points.csv") == 900);
    REQUIRE(rwz("sample --model gef --radius 8 --seed 3 --out " + d.str("f")).code == 0);
    auto meta = load(d.path / "f" / "meta.json");
    REQUIRE(meta.contains("root_residual"));
    CHECK(meta["root_residual"].is_number());
  }

  TEST_CASE("sample: usage errors exit 2") {
    TempDir d;
    CHECK(rwz("sample --seed 1 --out " + d.str("x")).code == 2);
    CHECK(rwz("sample --model nonsense --radius 5 --seed 1 --out " + d.str("x")).code == 2);
    CHECK(rwz("sample --model poisson --seed 1 --out " + d.str("x")).code == 2);
    CHECK(rwz("sample --model poisson --intensity -1 --radius 5 --seed 1 --out " + d.str("x")).code == 2);
    CHECK(rwz("frobnicate").code == 2);
  }

  TEST_CASE("verify: flux identity passes and writes its files") {
    TempDir d;
    auto r = rwz("verify flux-identity --model poisson --intensity 1 --r 5 --R 45 --seed 1 --out " + d.str());
    CHECK(r.code == 0);
    auto rep = load(d.path / "flux-identity.report.json");
    for (const char* k : {"experiment", "model", "params", "n_reps", "base_seed", "oracle", "mc_mean", "mc_variance",
                          "stderr", "verdict"})
      CHECK(rep.contains(k));
    CHECK(rep["verdict"]["pass"] == true);
    CHECK(rep["checks"][0]["detail"]["max_abs_error"].get<double>() <= 1e-6);
    CHECK(rows(d.path / "flux-identity.replicates.csv") == 300);
    auto meta = load(d.path / "flux-identity.meta.json");
    CHECK(meta["params"]["R"] == 45.0);
    CHECK(meta.contains("version"));
  }

  TEST_CASE("verify: condition (a) for Poisson reports DIVERGES") {
    TempDir d;
    CHECK(rwz("verify condition-a --model poisson --out " + d.str()).code == 0);
    auto rep = load(d.path / "condition-a.report.json");
    CHECK(rep["oracle"] == "DIVERGES");
    CHECK(rep["checks"][0]["pass"] == true);
  }

  TEST_CASE("verify: bessel suite exit code follows the report") {
    TempDir d;
    auto r = rwz("verify bessel-suite --out " + d.str());
    auto rep = load(d.path / "bessel-suite.report.json");
    CHECK(r.code == (rep["verdict"]["pass"].get<bool>() ? 0 : 1));
    int passed = 0;
    for (const auto& c : rep["checks"])
      if (c["pass"].get<bool>()) ++passed;
    // every check except the order-0 near-zero law at 1e-10
    CHECK(passed == int(rep["checks"].size()) - 1);
    CHECK(rep["checks"][0]["pass"] == false);
  }

  TEST_CASE("verify: usage errors") {
    TempDir d;
    CHECK(rwz("verify no-such-experiment --out " + d.str()).code == 2);
    CHECK(rwz("verify psi3-mean --set bogus=1 --out " + d.str()).code == 2);
    CHECK(rwz("verify psi3-mean --set n_reps=\\\"many\\\" --out " + d.str()).code == 2);
    CHECK(rwz("verify psi3-mean --r 3 --out " + d.str()).code == 2);  // knob not in this experiment
    CHECK(rwz("verify flux-identity --model nope --out " + d.str()).code == 2);
    CHECK(rwz("verify psi3-mean --config " + d.str("missing.json")).code == 2);
  }

  TEST_CASE("verify: config file with flag override; reproducible from meta") {
    TempDir d;
    write(d.path / "cfg.json", R"({"experiment": "psi3-mean", "params": {"n_reps": 60, "R": 16, "seed": 5}})");
    REQUIRE(rwz("verify --config " + d.str("cfg.json") + " --seed 9 --out " + d.str("o1")).code <= 1);
    auto meta = load(d.path / "o1" / "psi3-mean.meta.json");
    CHECK(meta["params"]["seed"] == 9.0);
    CHECK(meta["params"]["n_reps"] == 60);
    CHECK(meta["params"]["R"] == 16);
    // re-run from the recorded params, on a different thread count
    write(d.path / "cfg2.json", json{{"experiment", "psi3-mean"}, {"params", meta["params"]}}.dump());
    REQUIRE(rwz("verify --config " + d.str("cfg2.json") + " --threads 2 --out " + d.str("o2")).code <= 1);
    CHECK(slurp(d.path / "o1" / "psi3-mean.replicates.csv") == slurp(d.path / "o2" / "psi3-mean.replicates.csv"));
    auto a = load(d.path / "o1" / "psi3-mean.report.json"), b = load(d.path / "o2" / "psi3-mean.report.json");
    CHECK(a["mc_mean"] == b["mc_mean"]);
    CHECK(a["mc_variance"] == b["mc_variance"]);
  }

  TEST_CASE("infrastructure failure exits 3") {
    TempDir d;
    write(d.path / "file", "x");
    CHECK(rwz("verify condition-a --model poisson --out " + d.str("file") + "/sub").code == 3);
  }

  TEST_CASE("report: aggregation rules") {
    TempDir d;
    fs::create_directories(d.path / "empty");
    auto r = rwz("report " + d.str("empty"));
    CHECK(r.code == 0);
    CHECK(rows(d.path / "empty" / "summary.csv") == 0);

    fs::create_directories(d.path / "mixed");
    write(d.path / "mixed" / "a.json", fake_report("lunar", true).dump());
    write(d.path / "mixed" / "b.json", fake_report("psi2-limit", false).dump());
    r = rwz("report " + d.str("mixed"));
    CHECK(r.code == 1);
    CHECK(rows(d.path / "mixed" / "summary.csv") == 2);
    CHECK(r.out.find("lunar") != std::string::npos);
    CHECK(r.out.find("psi2-limit") != std::string::npos);

    fs::create_directories(d.path / "dup");
    write(d.path / "dup" / "a.json", fake_report("lunar", true).dump());
    write(d.path / "dup" / "b.json", fake_report("lunar", true).dump());
    write(d.path / "dup" / "c.json", "{not json");
    write(d.path / "dup" / "d.json", R"({"experiment": 3})");
    r = rwz("report " + d.str("dup"));
    CHECK(r.code == 0);
    const std::string csv = slurp(d.path / "dup" / "summary.csv");
    CHECK(csv.find("\nlunar,") != std::string::npos);
    CHECK(csv.find("\nlunar#2,") != std::string::npos);
    CHECK(rows(d.path / "dup" / "summary.csv") == 2);
    CHECK(r.out.find("warning: skipping malformed report") != std::string::npos);
    CHECK(r.out.find("c.json") != std::string::npos);
    CHECK(r.out.find("d.json") != std::string::npos);

    CHECK(rwz("report " + d.str("nowhere")).code == 2);
  }
}
