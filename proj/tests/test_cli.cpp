#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "langevin");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = langevin::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int count(const std::string& s, const std::string& needle) {
  int n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + needle.size())) ++n;
  return n;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("langevin-cli-" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("table1 reproduces the non-contractive placement") {
  const Run r = run({"table1", "--kappa", "1e9"});
  REQUIRE(r.code == 0);
  // Mantissa-exponent and plain columns each mark the same 8 cells.
  CHECK(count(r.out, "***") == 16);
  CHECK(r.out.rfind("kappa,h,EE[1/L],UBU[1/L]", 0) == 0);
  CHECK(r.out.find("5.000(-10)") != std::string::npos);

  const Run j = run({"table1", "--kappa", "1e9", "--format", "json"});
  REQUIRE(j.code == 0);
  CHECK(nlohmann::json::accept(j.out));
}

TEST_CASE("eigencurves and plan output shapes") {
  const Run e = run({"eigencurves", "--L", "10", "--h", "1", "--grid", "5"});
  REQUIRE(e.code == 0);
  CHECK(e.out.rfind("h,H,lambda_plus,lambda_minus,tilde_plus,tilde_minus,flag\n", 0) == 0);
  CHECK(count(e.out, "\n") == 6);

  const Run p = run({"plan", "--scheme", "ubu", "--eps", "0.01", "--kappa", "100", "--d", "50"});
  REQUIRE(p.code == 0);
  const auto j = nlohmann::json::parse(p.out);
  CHECK(j["n"].get<long>() >= 1);
  CHECK(j["bound"].get<double>() <= 0.01);
  CHECK(j["inputs"]["d"] == 50);
  CHECK(j["L"] == 100.0);
}

TEST_CASE("check-model reads a JSON description") {
  TempDir tmp;
  const fs::path model = tmp.path / "model.json";
  const std::string body = R"("A": [[-2, 0], [1, 0]], "B": [[-0.5], [0]], "C": [[0, 1]],
                              "sigma": [[1.4142135623730951], [0]], "c": 0.5)";
  std::ofstream(model) << R"({"kind": "custom", "S": [[2, 0], [0, 0]], )" << body << "}";
  const Run r = run({"check-model", "--from", model.string()});
  CHECK(r.code == 0);
  INFO(r.out << r.err);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["report"]["pass"] == true);

  const fs::path wrong = tmp.path / "wrong.json";
  std::ofstream(wrong) << R"({"kind": "custom", "S": [[3, 0], [0, 0]], )" << body << "}";
  const Run bad = run({"check-model", "--from", wrong.string()});
  CHECK(bad.code == 0);
  CHECK(nlohmann::json::parse(bad.out)["report"]["pass"] == false);
  CHECK(run({"check-model", "--from", (tmp.path / "missing.json").string()}).code == 2);

  const Run shipped = run({"check-model", "--model", "overdamped", "--c", "0.25"});
  CHECK(shipped.code == 0);
  CHECK(nlohmann::json::parse(shipped.out)["report"]["pass"] == true);
}

TEST_CASE("usage and parameter errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"table1", "--bogus", "1"}).code == 2);
  CHECK(run({"couple", "--L", "10", "--kappa", "10", "--seed", "1"}).code == 2);
  const Run seedless = run({"order-test", "--L", "10"});
  CHECK(seedless.code == 2);
  CHECK(seedless.err.find("--seed") != std::string::npos);
  CHECK(run({"plan", "--scheme", "ee", "--eps", "-1"}).code == 2);
  CHECK(run({"plan", "--scheme", "bub", "--eps", "0.1"}).code == 2);
  CHECK(run({"table1", "--format", "xml"}).code == 2);
  CHECK(run({"check-model", "--format", "csv"}).code == 2);
  CHECK(run({"table1", "--help"}).code == 0);
}

TEST_CASE("numerical failures exit with 1") {
  const Run r = run({"bias-scan", "--h", "2", "--L", "1e6", "--seed", "1", "--schemes", "ee"});
  CHECK(r.code == 1);
  CHECK_FALSE(r.err.empty());
  CHECK(run({"bound", "--scheme", "ubu", "--L", "10", "--L1", "0", "--h", "1.9", "--n", "10"}).code == 1);
}

TEST_CASE("--out is deterministic and atomic") {
  TempDir tmp;
  const fs::path a = tmp.path / "a.csv", b = tmp.path / "b.csv";
  const std::vector<std::string> base = {"sample", "--target", "logistic", "--d", "2", "--paths", "20", "--steps", "15",
                                         "--thin", "5", "--seed", "77", "--out"};
  auto with = [&](const fs::path& p) {
    auto v = base;
    v.push_back(p.string());
    return v;
  };
  REQUIRE(run(with(a)).code == 0);
  REQUIRE(run(with(b)).code == 0);
  CHECK(fs::file_size(a) > 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(count(slurp(a), "\n") == 1 + 3 * 20);

  const Run stdout_run = run({"order-test", "--L", "10", "--paths", "50", "--h", "0.5,0.25", "--seed", "4"});
  const Run again = run({"order-test", "--L", "10", "--paths", "50", "--h", "0.5,0.25", "--seed", "4"});
  CHECK(stdout_run.code == 0);
  CHECK(stdout_run.out == again.out);

  const fs::path failed = tmp.path / "failed.csv";
  CHECK(run({"bias-scan", "--h", "2", "--L", "1e6", "--seed", "1", "--schemes", "ee", "--out", failed.string()}).code == 1);
  CHECK_FALSE(fs::exists(failed));
  CHECK_FALSE(fs::exists(tmp.path / "failed.csv.partial"));
}

TEST_CASE("coupling summary") {
  const Run r = run({"couple", "--L", "10", "--seed", "3", "--steps", "200"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["contractive"] == true);
  CHECK(j["max_ratio"].get<double>() <= j["rho_sqrt"].get<double>() * (1 + 1e-12));
}
