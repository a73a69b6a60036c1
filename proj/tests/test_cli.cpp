#include <doctest.h>

#include <sstream>

#include "interop/cli.hpp"
#include "support.hpp"

using interop::cli::run_cli;
using testsupport::ScratchDir;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "interop");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// CSV without the timing column, which legitimately varies.
std::string without_durations(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    const auto last = line.rfind(',');
    const auto prev = line.rfind(',', last - 1);
    out += line.substr(0, prev) + line.substr(last) + "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"gen-dataset", "--bogus"}).code == 1);
  CHECK(cli({"run"}).code == 1);  // --dataset is required
  CHECK(cli({"run", "--dataset", "x", "--backend-kind", "gpu"}).code == 1);
  CHECK(cli({"compare", "--a", "v1:m:direct"}).code == 1);
  CHECK(cli({"compare", "--a", "nonsense", "--b", "1/2"}).code == 1);
  CHECK(cli({"gen-dataset", "--version", "v7"}).code == 1);
  ::unsetenv("INTEROP_BACKEND_URL");
  CHECK(cli({"run", "--dataset", "x", "--backend-kind", "http", "--model", "m"}).code == 1);
}

TEST_CASE("help exits with 0") {
  const auto r = cli({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("gen-dataset") != std::string::npos);
  const auto sub = cli({"run", "--help"});
  CHECK(sub.code == 0);
  CHECK(sub.out.find("--num-tolerance") != std::string::npos);
}

TEST_CASE("execution errors exit with 2") {
  ScratchDir dir;
  CHECK(cli({"run", "--dataset", (dir / "missing").string(), "--out", (dir / "r").string()}).code == 2);
  CHECK(cli({"analyze", "--results", (dir / "missing").string()}).code == 2);
  CHECK(cli({"compare", "--results", dir.path().string(), "--a", "v1:m:direct", "--b", "v2:m:direct"}).code == 2);
}

TEST_CASE("compare on literal counts") {
  const auto r = cli({"compare", "--a", "620/666", "--b", "597/666"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("comparison\tz\tp_value\th\tpower\treject_H0\n", 0) == 0);
  CHECK(r.out.find("620/666 vs 597/666\t") != std::string::npos);
  CHECK(r.out.find("\t0.03185\t") != std::string::npos);
  CHECK(r.out.find("\ttrue\n") != std::string::npos);
  const auto v4 = cli({"compare", "--a", "664/666", "--b", "0/666"});
  CHECK(v4.out.find("< 2.2e-16") != std::string::npos);
  const auto raw = cli({"compare", "--a", "664/666", "--b", "663/666", "--no-correction"});
  CHECK(raw.out.find("\t1\t") == std::string::npos);
}

TEST_CASE("end-to-end workflow") {
  ScratchDir dir;
  const auto data = (dir / "data").string();
  const auto results = (dir / "results").string();

  auto r = cli({"gen-dataset", "--count", "15", "--seed", "42", "--out", data});
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir / "data" / "v4" / "target.txt"));

  r = cli({"gen-dataset", "--count", "15", "--version", "v2", "--out", (dir / "only-v2").string()});
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir / "only-v2" / "target.txt"));

  r = cli({"validate-dataset", "--dataset", data + "/v1", "--dataset", data + "/v4"});
  CHECK(r.code == 0);
  CHECK(r.out.find("15/15\tok") != std::string::npos);

  r = cli({"run", "--dataset", data + "/v1", "--dataset", data + "/v4", "--strategy", "direct", "--backend-kind",
           "oracle", "--model", "oracle", "--runs", "3", "--temperature", "0.9", "--out", results});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("v1:oracle:direct\t3\t1.0000;1.0000;1.0000\t1.0000\tcomplete") != std::string::npos);
  CHECK(r.out.find("v4:oracle:direct\t3\t") != std::string::npos);

  r = cli({"run", "--dataset", data + "/v1", "--backend-kind", "noisy", "--model", "noisy", "--error-rate", "0.5",
           "--seed", "3", "--out", results});
  REQUIRE(r.code == 0);

  const auto csv_path = (dir / "records.csv").string();
  r = cli({"analyze", "--results", results, "--csv", csv_path, "--summary-csv", (dir / "summary.csv").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("v1:noisy:direct") != std::string::npos);
  CHECK(testsupport::slurp(csv_path).rfind("dataset_version,entry_id,", 0) == 0);
  CHECK(std::filesystem::exists(dir / "summary.csv"));

  r = cli({"compare", "--results", results, "--a", "v1:oracle:direct", "--b", "v4:oracle:direct"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("v1:oracle:direct vs v4:oracle:direct\t0.0000\t1\t0.0000\t") != std::string::npos);

  r = cli({"compare", "--results", results, "--a", "v1:noisy:direct@1", "--b", "v1:noisy:direct@2"});
  CHECK(r.code == 0);
  r = cli({"compare", "--results", results, "--a", "v1:noisy:direct@9", "--b", "v1:noisy:direct@2"});
  CHECK(r.code == 2);

  r = cli({"failures", "--results", results, "--strategy", "direct"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("strategy\tfailure_cause\tcount\tpercent\n", 0) == 0);
  CHECK(r.out.find("DIRECT\t") != std::string::npos);

  // Re-running the same command does nothing new.
  r = cli({"run", "--dataset", data + "/v1", "--out", results, "--model", "oracle"});
  REQUIRE(r.code == 0);
  CHECK(r.err.find("attempted 0, skipped 45") != std::string::npos);
}

TEST_CASE("identical flags give identical results") {
  ScratchDir a, b;
  for (const auto* d : {&a, &b}) {
    REQUIRE(cli({"gen-dataset", "--count", "20", "--version", "v3", "--out", (*d / "data").string()}).code == 0);
    REQUIRE(cli({"run", "--dataset", (*d / "data").string(), "--backend-kind", "noisy", "--error-rate", "0.3",
                 "--seed", "11", "--jobs", "3", "--out", (*d / "results").string()})
                .code == 0);
    REQUIRE(cli({"analyze", "--results", (*d / "results").string(), "--csv", (*d / "r.csv").string()}).code == 0);
  }
  for (const auto& name : {"001", "010", "020"}) {
    for (const auto& entry : std::filesystem::directory_iterator(a / "data")) {
      const auto file = entry.path().filename().string();
      if (file.rfind(name, 0) == 0) CHECK(testsupport::slurp(entry.path()) == testsupport::slurp(b / "data" / file));
    }
  }
  CHECK(without_durations(testsupport::slurp(a / "r.csv")) == without_durations(testsupport::slurp(b / "r.csv")));
}

TEST_CASE("codegen through the command line with a custom runner") {
  ScratchDir dir;
  REQUIRE(cli({"gen-dataset", "--count", "3", "--version", "v4", "--out", (dir / "data").string()}).code == 0);
  const auto r = cli({"run", "--dataset", (dir / "data").string(), "--strategy", "codegen", "--runs", "1", "--runner",
                      std::string(INTEROP_TEST_PYTHON) + " " + INTEROP_TEST_STUB_RUNNER, "--out",
                      (dir / "results").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("v4:oracle:codegen\t1\t1.0000\t1.0000\tcomplete") != std::string::npos);
}

TEST_CASE("prompt templates from a directory") {
  ScratchDir dir;
  REQUIRE(cli({"gen-dataset", "--count", "3", "--version", "v1", "--out", (dir / "data").string()}).code == 0);
  std::filesystem::create_directories(dir / "prompts");
  testsupport::spit(dir / "prompts" / "direct.txt", "Input:\n{INPUT}\nTarget:\n{TARGET_EXAMPLE}\n");
  auto r = cli({"run", "--dataset", (dir / "data").string(), "--prompt-dir", (dir / "prompts").string(), "--runs",
                "1", "--out", (dir / "results").string()});
  CHECK(r.code == 0);
  testsupport::spit(dir / "prompts" / "direct.txt", "no placeholders");
  r = cli({"run", "--dataset", (dir / "data").string(), "--prompt-dir", (dir / "prompts").string(), "--out",
           (dir / "r2").string()});
  CHECK(r.code == 2);
}
