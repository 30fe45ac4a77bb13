#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "massdeath/infer.hpp"
#include "massdeath/io.hpp"
#include "massdeath/sim.hpp"

using namespace massdeath;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(MASSDEATH_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return {-1, {}};
  std::string out;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "massdeath_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli("--help").code, 0);
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("--theta 2 --mu 1 --tol 1 equilibrium").code, 1);
  EXPECT_EQ(cli("--theta 2 equilibrium").code, 1);
  EXPECT_EQ(cli("--theta 2 --mu 1 transition --x 1").code, 1);
  EXPECT_EQ(cli("--theta 2 --mu 1 --format xml equilibrium").code, 1);
  EXPECT_EQ(cli("estimate --input /nonexistent/file").code, 1);

  const auto q = scratch("improbable.json");
  std::ofstream(q) << R"({"lambda": 3, "mu": 1, "tau": {"family": "point", "x": 0},
    "record": {"times": [0.01], "magnitudes": [30]}})";
  EXPECT_EQ(cli("predict --query " + q.string()).code, 2);
}

TEST(Cli, ReproducibleWithoutTimestamp) {
  const std::string args = "--theta 1.5 --mu 2 --seed 11 --no-timestamp simulate --horizon 50";
  const auto a = cli(args), b = cli(args);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, cli("--theta 1.5 --mu 2 --seed 12 --no-timestamp simulate --horizon 50").out);
  EXPECT_NE(cli("--theta 2 --mu 1 equilibrium").out.find("# created="), std::string::npos);
}

TEST(Cli, SimulationMatchesLibrary) {
  const auto r = cli("--theta 1.5 --mu 2 --seed 11 --no-timestamp simulate --tau point:3 --horizon 50");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  const auto path = read_path(in);
  const auto lib = sample_path(ChainParams::from_ratio(1.5, 2.0), StateDistribution::point_mass(3), 50.0, 11);
  EXPECT_EQ(path.states, lib.states);
  EXPECT_EQ(path.jump_times, lib.jump_times);
  EXPECT_EQ(path.seed, 11u);
}

TEST(Cli, EstimateMatchesLibrary) {
  const auto file = scratch("mags.txt");
  ASSERT_EQ(cli("--theta 4 --seed 3 --no-timestamp --out " + file.string() +
                " simulate --iid-magnitudes 5000").code, 0);
  std::ifstream in(file);
  const auto draws = read_magnitudes(in);
  EXPECT_EQ(draws, sample_magnitudes(4.0, 5000, 3));
  const auto lib = estimate_theta(draws);
  const auto r = cli("--format json --no-timestamp estimate --input " + file.string());
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["theta_hat"].get<double>(), lib.theta_hat);
  EXPECT_EQ(j["n"].get<std::size_t>(), 5000u);
  EXPECT_TRUE(j["mu_hat"].is_null());
  EXPECT_EQ(j["meta"]["command"], "estimate");
}

TEST(Cli, TransitionRowSumsToOne) {
  const auto r = cli("--lambda 2 --mu 1 --no-timestamp transition --x 4 --t 0.3");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  const auto meta = Metadata::read(in);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "y,p,tail");
  double sum = 0.0, first_tail = 0.0;
  bool first = true;
  while (std::getline(in, line)) {
    const auto a = line.find(','), b = line.rfind(',');
    sum += std::stod(line.substr(a + 1, b - a - 1));
    if (first) first_tail = std::stod(line.substr(b + 1));
    first = false;
  }
  EXPECT_NEAR(sum + std::stod(meta.get("tail_mass")), 1.0, 1e-12);
  EXPECT_NEAR(first_tail, 1.0, 1e-12);  // R_t(x, 0) = 1
}
