#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "clse/estimators.hpp"
#include "clse/report.hpp"
#include "clse/simulate.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace clse;

namespace {

/// Fresh scratch directory per test case, removed on scope exit.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("clse_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& f) const { return (dir / f).string(); }
  std::size_t entries() const {
    return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir), fs::directory_iterator()));
  }
};

/// Runs clse_lab with `args`, stdout and stderr to `log`; returns the exit status.
int lab(const std::string& args, const std::string& log = "/dev/null") {
  const std::string cmd = std::string(CLSE_LAB_PATH) + " " + args + " >" + log + " 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::size_t data_rows(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::size_t rows = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    ++rows;
  }
  return rows;
}

}  // namespace

TEST_CASE("simulate writes one row per generation") {
  Scratch tmp("simulate");
  CHECK(lab("simulate --model bgw --offspring binary:0.5 --n0 1 --steps 50 --seed 7 -o " + (tmp / "t.csv")) == 0);
  CHECK(data_rows(tmp / "t.csv") == 51);
  const Trajectory t = load_trajectory(tmp / "t.csv");
  CHECK(t.steps() == 50);
  CHECK(t.seed == 7);
  CHECK(slurp(tmp / "t.csv").rfind("# config: ", 0) == 0);
}

TEST_CASE("simulate matches the library sampler") {
  Scratch tmp("simulate_lib");
  REQUIRE(lab("simulate --model pcr-m1 --params K=500 --n0 20 --steps 40 --seed 11 -o " + (tmp / "t.csv")) == 0);
  const Trajectory cli = load_trajectory(tmp / "t.csv");
  const Trajectory lib = simulate_pcr(PcrKind::m1, make_params({500.0}), 20, 40, 11);
  CHECK(cli.counts == lib.counts);
}

TEST_CASE("usage errors exit 2 and write nothing") {
  Scratch tmp("usage");
  CHECK(lab("simulate --model bgw --steps 5 --bogus 1 -o " + (tmp / "t.csv")) == 2);
  CHECK(lab("estimate --no-such-flag -i x.csv -o " + (tmp / "r.json")) == 2);
  CHECK(lab("") == 2);
  CHECK(lab("simulate --model pcr-m1 --steps 5 -o " + (tmp / "t.csv")) == 2);  // K missing
  CHECK(tmp.entries() == 0);
}

TEST_CASE("missing input and output directory exit 3") {
  Scratch tmp("io");
  CHECK(lab("estimate -i " + (tmp / "absent.csv") + " -o " + (tmp / "r.json")) == 3);
  CHECK(lab("simulate --model bgw --steps 5 -o " + (tmp / "no/such/dir/t.csv")) == 3);
  CHECK(lab("mc --config " + (tmp / "absent.json")) == 3);
  CHECK(tmp.entries() == 0);
}

TEST_CASE("estimate reproduces the library CLSE on a golden trajectory") {
  Scratch tmp("estimate");
  const Trajectory golden = make_count_trajectory("bgw-binary", {5, 8, 12, 17, 26, 41, 60, 93, 139, 205, 310}, 1);
  save_trajectory(tmp / "golden.csv", golden);
  REQUIRE(lab("estimate -i " + (tmp / "golden.csv") + " -o " + (tmp / "r.json")) == 0);
  const Json out = Json::parse(slurp(tmp / "r.json"));

  const auto model = make_model("bgw-binary");
  const auto lib = clse::clse(golden, *model, Window{0, golden.steps()}, make_box({1.001}, {1.999}), OptimizerConfig{});
  CHECK(dump(out.at("result")) == dump(to_json(lib)));

  double num = 0.0, den = 0.0;
  for (std::size_t k = 1; k < golden.values.size(); ++k) {
    num += golden.values[k];
    den += golden.values[k - 1];
  }
  CHECK(std::abs(out.at("result").at("theta_hat")[0].get<double>() - num / den) <= 1e-8 * num / den);
  CHECK(out.at("config").at("input") == tmp / "golden.csv");
}

TEST_CASE("flags override the config file and the effective config is echoed") {
  Scratch tmp("precedence");
  {
    std::ofstream cfg(tmp / "c.json");
    cfg << R"({"model": "bgw", "offspring": "binary:0.5", "n0": 4, "steps": 30, "seed": 1})";
  }
  REQUIRE(lab("simulate --config " + (tmp / "c.json") + " --seed 9 -o " + (tmp / "t.csv")) == 0);
  const Trajectory t = load_trajectory(tmp / "t.csv");
  CHECK(t.seed == 9);
  CHECK(t.counts.front() == 4);
  const std::string head = slurp(tmp / "t.csv").substr(0, slurp(tmp / "t.csv").find('\n'));
  CHECK(head.find("\"seed\":9") != std::string::npos);
}

TEST_CASE("every subcommand reruns byte-identically") {
  Scratch tmp("idempotent");
  // rerunning the same command overwrites the artifact with identical bytes
  const auto rerun_same = [&](const std::string& args, const std::vector<std::string>& files) {
    REQUIRE(lab(args) == 0);
    std::vector<std::string> first;
    for (const auto& f : files) first.push_back(slurp(f));
    REQUIRE(lab(args) == 0);
    for (std::size_t i = 0; i < files.size(); ++i) {
      CHECK_FALSE(first[i].empty());
      CHECK(slurp(files[i]) == first[i]);
    }
  };
  rerun_same("simulate --model pcr-m2 --params K=500,C=1,S=20 --n0 20 --steps 60 --seed 5 -o " + (tmp / "a.csv"),
             {tmp / "a.csv"});
  rerun_same("estimate -i " + (tmp / "a.csv") + " --freeze C=1,S=20 -o " + (tmp / "e.json"), {tmp / "e.json"});
  rerun_same("diagnose -i " + (tmp / "a.csv") + " --freeze C=1,S=20 --resolution 9 --plot " + (tmp / "p.csv") +
                 " -o " + (tmp / "d.json"),
             {tmp / "d.json", tmp / "p.csv"});
  CHECK(slurp(tmp / "p.csv").rfind("series,x,y\n", 0) == 0);

  Scenario s;
  s.name = "cli";
  s.model_id = "bgw-binary";
  s.truth = {{"m", 1.5}};
  s.initial = 3;
  s.n = 20;
  s.box = make_box({1.001}, {1.999});
  s.scaling = ScalingKind::psi_bgw;
  s.replicates = 12;
  s.seed = 8;
  {
    std::ofstream cfg(tmp / "s.json");
    cfg << dump(to_json(s));
  }
  rerun_same("mc --config " + (tmp / "s.json") + " --samples " + (tmp / "x1.csv") + " -o " + (tmp / "m1.json"),
             {tmp / "m1.json", tmp / "x1.csv"});
  // the mc summary echoes only the scenario, so the worker count leaves no trace
  REQUIRE(lab("mc --config " + (tmp / "s.json") + " --workers 3 --samples " + (tmp / "x2.csv") + " -o " +
              (tmp / "m2.json")) == 0);
  CHECK(slurp(tmp / "m1.json") == slurp(tmp / "m2.json"));
  CHECK(slurp(tmp / "x1.csv") == slurp(tmp / "x2.csv"));
  CHECK(slurp(tmp / "m1.json").find("wall_seconds") == std::string::npos);
}

TEST_CASE("mc dry run prints the plan without simulating") {
  Scratch tmp("dry");
  Scenario s;
  s.name = "plan";
  s.model_id = "pcr-m1";
  s.truth = {{"K", 500.0}};
  s.initial = 20;
  s.n = 3000;
  s.box = make_box({1.0}, {1e4});
  s.scaling = ScalingKind::sqrt_n;
  s.scale_variance = 500.0;
  s.replicates = 300;
  s.seed = 42;
  {
    std::ofstream cfg(tmp / "s.json");
    cfg << dump(to_json(s));
  }
  REQUIRE(lab("mc --dry-run --config " + (tmp / "s.json") + " -o " + (tmp / "m.json"), tmp / "plan.txt") == 0);
  const std::string plan = slurp(tmp / "plan.txt");
  CHECK(plan.find("300 replicates") != std::string::npos);
  CHECK(plan.find("seed " + std::to_string(mix_seed(42, 0))) != std::string::npos);
  CHECK_FALSE(fs::exists(tmp / "m.json"));

  s.replicates = 0;
  {
    std::ofstream cfg(tmp / "bad.json");
    cfg << dump(to_json(s));
  }
  CHECK(lab("mc --dry-run --config " + (tmp / "bad.json")) == 2);
}
