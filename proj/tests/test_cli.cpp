#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("OPERA_CLI");
  REQUIRE_MESSAGE(p != nullptr, "OPERA_CLI must point at the opera binary");
  return p;
}

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run_cli(const std::string& args) {
  const std::string out_file = "/tmp/opera_cli_test/last_output.txt";
  fs::create_directories("/tmp/opera_cli_test");
  const std::string cmd = cli_path() + " " + args + " > " + out_file + " 2>&1";
  const int status = std::system(cmd.c_str());
  CommandResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream f(out_file);
  std::stringstream ss;
  ss << f.rdbuf();
  r.output = ss.str();
  return r;
}

std::string write_config(const std::string& name, const std::string& body) {
  fs::create_directories("/tmp/opera_cli_test");
  const std::string path = "/tmp/opera_cli_test/" + name;
  std::ofstream f(path);
  f << body;
  return path;
}

const char* kConfig = R"(
kernel = induced(gaussian:0.5)
support = -1,-0.5,0,0.5,1
f_rho = 0.9,-0.3,0.5,-0.7,0.1
noise_half_width = 0.1
mode = opera-reduced
T = 30
theta = 2/3
mu = auto
n_trials = 2
seed = 7
record_at = 2,8,31
output = /tmp/opera_cli_test/out/run
)";

int count_lines(const std::string& path) {
  std::ifstream f(path);
  int n = 0;
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) ++n;
  return n;
}

}  // namespace

TEST_CASE("cli: missing config exits 2") {
  const CommandResult r = run_cli("run /tmp/opera_cli_test/nonexistent.cfg");
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli: run produces csv with the expected row count") {
  const std::string cfg = write_config("run.cfg", kConfig);
  const CommandResult r = run_cli("run " + cfg);
  CHECK(r.exit_code == 0);
  // header + n_trials * |record_at| rows; record set {2, 8, 31} already
  // contains the milestone T+1 = 31
  CHECK(count_lines("/tmp/opera_cli_test/out/run.csv") == 1 + 2 * 3);
  CHECK(fs::exists("/tmp/opera_cli_test/out/run.summary.json"));
  CHECK(r.output.find("config_digest") != std::string::npos);
}

TEST_CASE("cli: overrides supersede the file and show up in the digest") {
  const std::string cfg = write_config("run.cfg", kConfig);
  const CommandResult base = run_cli("run " + cfg);
  const CommandResult with_override = run_cli("run " + cfg + " --theta=0.75");
  CHECK(with_override.exit_code == 0);
  auto digest_of = [](const CommandResult& r) {
    const auto pos = r.output.find("config_digest: ");
    REQUIRE(pos != std::string::npos);
    return r.output.substr(pos + 15, 16);
  };
  CHECK(digest_of(base) != digest_of(with_override));

  const CommandResult bad = run_cli("run " + cfg + " --mystery=1");
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("mystery") != std::string::npos);
}

TEST_CASE("cli: OPERA_SEED overrides the base seed") {
  const std::string cfg = write_config("seeded.cfg", kConfig);
  const CommandResult a = run_cli("run " + cfg);
  fs::copy_file("/tmp/opera_cli_test/out/run.csv", "/tmp/opera_cli_test/out/a.csv",
                fs::copy_options::overwrite_existing);
  const std::string prev_cmd = "OPERA_SEED=999 " + cli_path() + " run " + cfg +
                               " > /tmp/opera_cli_test/seeded.txt 2>&1";
  REQUIRE(std::system(prev_cmd.c_str()) == 0);
  std::ifstream f1("/tmp/opera_cli_test/out/a.csv"), f2("/tmp/opera_cli_test/out/run.csv");
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(a.exit_code == 0);
  CHECK(s1.str() != s2.str());
}

TEST_CASE("cli: verify suites") {
  CHECK(run_cli("verify nonsense").exit_code == 2);

  const CommandResult iso =
      run_cli("verify isometry --count 50 --out /tmp/opera_cli_test/iso.json");
  CHECK(iso.exit_code == 0);
  CHECK(fs::exists("/tmp/opera_cli_test/iso.json"));

  const CommandResult eq = run_cli(
      "verify equivalence --T 60 --seeds 1 --out /tmp/opera_cli_test/eq.json");
  CHECK(eq.exit_code == 0);
  CHECK(eq.output.find("max deviation") != std::string::npos);

  const CommandResult lem = run_cli(
      "verify lemmas --theta 0.75 --tmax 300 --out /tmp/opera_cli_test/lem.json");
  CHECK(lem.exit_code == 0);
}

TEST_CASE("cli: compare requires two modes") {
  const std::string cfg = write_config("one_mode.cfg", kConfig);
  CHECK(run_cli("compare " + cfg).exit_code == 2);

  std::string two = kConfig;
  two += "\nR = 100000\neta = match\n";
  const std::string cfg2 = write_config("two_modes.cfg", two);
  const CommandResult r = run_cli("compare " + cfg2 + " --mode=opera-direct,pogd");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("pogd") != std::string::npos);
}

TEST_CASE("cli: report") {
  fs::create_directories("/tmp/opera_cli_test/empty");
  CHECK(run_cli("report /tmp/opera_cli_test/empty").exit_code == 2);

  const std::string cfg = write_config("run.cfg", kConfig);
  REQUIRE(run_cli("run " + cfg).exit_code == 0);
  const CommandResult ok = run_cli("report /tmp/opera_cli_test/out");
  CHECK(ok.exit_code == 0);
  CHECK(fs::exists("/tmp/opera_cli_test/out/report_summary.json"));

  // a mixed-mode directory gets the paired opera/pogd table
  std::string mixed = kConfig;
  mixed += "\nR = 100000\neta = match\n";
  const std::string mixed_cfg = write_config("mixed.cfg", mixed);
  REQUIRE(run_cli("compare " + mixed_cfg +
                  " --mode=opera-direct,pogd --output=/tmp/opera_cli_test/out/paired")
              .exit_code == 0);
  const CommandResult paired = run_cli("report /tmp/opera_cli_test/out");
  CHECK(paired.exit_code == 0);
  CHECK(paired.output.find("opera") != std::string::npos);
  CHECK(paired.output.find("pogd") != std::string::npos);
  fs::remove("/tmp/opera_cli_test/out/paired.csv");
  fs::remove("/tmp/opera_cli_test/out/paired.summary.json");

  {
    std::ofstream f("/tmp/opera_cli_test/out/broken.csv");
    f << "trial,seed\n1\n";
  }
  const CommandResult bad = run_cli("report /tmp/opera_cli_test/out");
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("broken.csv") != std::string::npos);
  fs::remove("/tmp/opera_cli_test/out/broken.csv");
}

TEST_CASE("cli: rates needs three recorded milestones") {
  std::string cfg_text = kConfig;
  const std::string cfg = write_config("rates.cfg", cfg_text);
  // only {2, 8, 31} recorded but t_min filtering leaves < 3 points
  CHECK(run_cli("rates " + cfg).exit_code == 2);

  const CommandResult ok = run_cli("rates " + cfg + " --T=40,80,160 --record_at=log2 --t_min=8");
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("rate fit: slope") != std::string::npos);
}
