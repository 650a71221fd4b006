#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + EARLYSTOP_CLI + "\" " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 512> buffer{};
  while (fgets(buffer.data(), buffer.size(), pipe)) r.out += buffer.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("exit codes") {
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("--version").code == 0);
  CHECK(run_cli("estimate tsvd --no-such-flag").code == 1);
  CHECK(run_cli("estimate tsvd --n 0").code == 1);
  CHECK(run_cli("estimate tsvd --problem phillips --n 10").code == 1);
  CHECK(run_cli("replicate tsvd --problem phillips --n 40 --mc-runs 2 --out /nonexistent/dir/x.csv").code == 2);
}

TEST_CASE("config file with command line precedence") {
  const auto path = std::filesystem::temp_directory_path() / "earlystop_cli_test.cfg";
  {
    std::ofstream cfg(path);
    cfg << "# comment\nproblem=phillips\nn=40\ndelta=0.1\n";
  }
  const Result from_file = run_cli("estimate tsvd --config " + path.string());
  const Result direct = run_cli("estimate tsvd --problem phillips --n 40 --delta 0.1");
  const Result overridden = run_cli("estimate tsvd --config " + path.string() + " --delta 0.5");
  const Result direct_override = run_cli("estimate tsvd --problem phillips --n 40 --delta 0.5");
  std::filesystem::remove(path);
  CHECK(from_file.code == 0);
  CHECK(from_file.out == direct.out);
  CHECK(overridden.out == direct_override.out);
  CHECK(overridden.out != from_file.out);
  CHECK(run_cli("estimate tsvd --config /nonexistent.cfg").code == 1);
}

TEST_CASE("datagen writes csv files") {
  const auto dir = std::filesystem::temp_directory_path() / "earlystop_cli_datagen";
  std::filesystem::create_directories(dir);
  const std::string prefix = (dir / "lin").string();
  CHECK(run_cli("datagen --problem linear --n 20 --p 30 --seed 2 --out " + prefix).code == 0);
  for (const char* suffix : {"_covariates.csv", "_coefficients.csv", "_response.csv"})
    CHECK(std::filesystem::exists(prefix + suffix));
  std::filesystem::remove_all(dir);
}

}
