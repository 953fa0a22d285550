#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "jmlgm_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(JMLGM_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("simulate is deterministic for a seed") {
  fs::remove_all(kRoot / "det");
  REQUIRE(run("--seed 11 simulate --out " + q(kRoot / "det/a")) == 0);
  REQUIRE(run("--seed 11 simulate --out " + q(kRoot / "det/b")) == 0);
  REQUIRE(run("--seed 12 simulate --out " + q(kRoot / "det/c")) == 0);
  for (const char* f : {"long.csv", "surv.csv", "truth.json"}) {
    CHECK(slurp(kRoot / "det/a" / f) == slurp(kRoot / "det/b" / f));
  }
  CHECK(slurp(kRoot / "det/a/surv.csv") != slurp(kRoot / "det/c/surv.csv"));
}

TEST_CASE("a short horizon censors everyone") {
  fs::remove_all(kRoot / "hz");
  write(kRoot / "hz/sc.json", R"({"n_subjects": 50, "horizon": 0.01, "seed": 2})");
  REQUIRE(run("simulate --config " + q(kRoot / "hz/sc.json") + " --out " + q(kRoot / "hz/d")) == 0);
  std::ifstream in(kRoot / "hz/d/surv.csv");
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.substr(line.rfind(',') + 1).find('0') == 0);
  }
  CHECK(rows == 50);
}

TEST_CASE("bad inputs exit with code 2") {
  fs::remove_all(kRoot / "bad");
  write(kRoot / "bad/long.csv", "id,time,y\n1,0,abc\n");
  CHECK(run("fit --long " + q(kRoot / "bad/long.csv") + " --out " + q(kRoot / "bad/out")) == 2);
  CHECK(run("predict --fit " + q(kRoot / "bad/missing.json") + " --out " + q(kRoot / "bad/out")) == 2);
  CHECK(run("nonsense") == 2);
  write(kRoot / "bad/sc.json", R"({"random_effects": "sometimes"})");
  CHECK(run("simulate --config " + q(kRoot / "bad/sc.json") + " --out " + q(kRoot / "bad/out")) == 2);
}

TEST_CASE("separate association reports two nu and predict writes per-subject curves") {
  fs::remove_all(kRoot / "e7");
  write(kRoot / "e7/sc.json",
        R"({"n_subjects": 40, "association": "eq7", "nu": [0.5, -0.3], "random_effects": "intercept_slope", "seed": 3})");
  write(kRoot / "e7/m.json", R"({"association": "eq7", "random_effects": "intercept_slope", "spline": {"n_knots": 6}})");
  const auto d = kRoot / "e7/d";
  REQUIRE(run("simulate --config " + q(kRoot / "e7/sc.json") + " --out " + q(d)) == 0);
  REQUIRE(run("fit --long " + q(d / "long.csv") + " --surv " + q(d / "surv.csv") + " --config " +
              q(kRoot / "e7/m.json") + " --out " + q(kRoot / "e7/f")) == 0);
  const auto fit = nlohmann::json::parse(slurp(kRoot / "e7/f/fit.json"));
  std::vector<std::string> names;
  for (const auto& h : fit.at("hyperparameters")) names.push_back(h.at("name").get<std::string>());
  CHECK(std::count(names.begin(), names.end(), "nu1") == 1);
  CHECK(std::count(names.begin(), names.end(), "nu2") == 1);
  CHECK(std::count(names.begin(), names.end(), "nu") == 0);

  REQUIRE(run("predict --fit " + q(kRoot / "e7/f/fit.json") + " --long " + q(d / "long.csv") + " --surv " +
              q(d / "surv.csv") + " --subjects 8,15 --out " + q(kRoot / "e7/p")) == 0);
  CHECK(fs::exists(kRoot / "e7/p/subject_8.csv"));
  CHECK(fs::exists(kRoot / "e7/p/subject_15.csv"));

  std::ifstream in(kRoot / "e7/p/km.csv");
  std::string line;
  std::getline(in, line);
  double prev = 2.0;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find("KaplanMeier") == std::string::npos) continue;
    const double t = std::stod(line.substr(0, line.find(',')));
    const double s = std::stod(line.substr(line.find(',') + 1));
    if (first) {
      CHECK(t == 0.0);
      CHECK(s == 1.0);
      first = false;
    }
    CHECK(s <= prev);
    prev = s;
  }
  CHECK_FALSE(first);

  CHECK(run("predict --fit " + q(kRoot / "e7/f/fit.json") + " --surv " + q(d / "surv.csv") +
            " --subjects 9999 --out " + q(kRoot / "e7/p2")) == 2);
}
