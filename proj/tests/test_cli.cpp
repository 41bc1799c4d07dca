#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include "baxq/config.hpp"
#include "baxq/io.hpp"
#include "json.hpp"

using namespace baxq;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

fs::path scratch_root() {
  static const fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "baxq_cli_tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(BAXQ_CLI_PATH) + " " + args + " > " +
                          log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

const char* kFastConfig =
    "q=0.6+0.25i\n"
    "phi=0.35\n"
    "L=2\n"
    "trunc_N=20\n"
    "lambda_grid=0.7+0.3i,-0.2+0.9i\n"
    "relations=commutativity,tq\n";

json load_report(const fs::path& dir) {
  return json::parse(read_text_file((dir / "report.json").string()));
}

// Volatile-by-design keys removed before byte comparison.
std::string stable_dump(json j) {
  j.erase("timestamp");
  j.erase("runtime_sec");
  return j.dump(2);
}

}  // namespace

TEST_CASE("complex literals parse and round trip") {
  CHECK(parse_complex("0.7+0.3i") == Complex(0.7, 0.3));
  CHECK(parse_complex("1.1-0.4i") == Complex(1.1, -0.4));
  CHECK(parse_complex("-0.2+0.9i") == Complex(-0.2, 0.9));
  CHECK(parse_complex("0.5") == Complex(0.5, 0.0));
  CHECK(parse_complex(" 2e-3-4e-4i ") == Complex(2e-3, -4e-4));
  const Complex z(-0.12345678901234567, 3.9e-7);
  CHECK(parse_complex(format_complex(z)) == z);
  CHECK_THROWS_AS(parse_complex(""), ModelError);
  CHECK_THROWS_AS(parse_complex("abc"), ModelError);
  CHECK_THROWS_AS(parse_complex("3i"), ModelError);
  CHECK_THROWS_AS(parse_complex("1+2"), ModelError);
}

TEST_CASE("config text dump is a fixed point of parsing") {
  RunConfig cfg = RunConfig::defaults();
  cfg.params.q = Complex(0.55, 0.18);
  cfg.params.lambda_grid = {Complex(0.7, 0.3), Complex(-1.0, 0.125)};
  cfg.relations = {"tq", "fusion"};
  cfg.sweep_key = "phi";
  cfg.sweep_values = {"0.2", "0.3"};
  cfg.out_matrices = true;
  const std::string d1 = dump_config(cfg);
  const std::string d2 = dump_config(parse_config_text(d1));
  CHECK(d1 == d2);
}

TEST_CASE("config parsing handles comments and rejects malformed lines") {
  const RunConfig cfg = parse_config_text(
      "# leading comment\n\nL=3\n  q = 0.5+0.1i  \nj_list=1,2.5,4\n");
  CHECK(cfg.params.L == 3);
  CHECK(cfg.params.q == Complex(0.5, 0.1));
  REQUIRE(cfg.j_list.size() == 3);
  CHECK(cfg.j_list[1] == 2.5);
  CHECK_THROWS_AS(parse_config_text("just words\n"), ModelError);
  CHECK_THROWS_AS(parse_config_text("bogus_key=1\n"), ModelError);
  RunConfig base = RunConfig::defaults();
  CHECK_THROWS_AS(apply_override(base, "unknown", "1"), ModelError);
  CHECK_THROWS_AS(apply_override(base, "out_matrices", "yes"), ModelError);
  CHECK_THROWS_AS(apply_override(base, "lambda_grid", ""), ModelError);
  apply_override(base, "seed", "123");
  CHECK(base.params.seed == 123ull);
  CHECK_THROWS_AS(apply_override(base, "seed", "12x"), ModelError);
}

TEST_CASE("matrix text files round trip") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix A(3, 5);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 5; ++c) A(r, c) = Complex(u(gen), u(gen));
  const fs::path f = scratch_root() / "roundtrip.txt";
  write_matrix_text(f.string(), A);
  const Matrix B = read_matrix_text(f.string());
  REQUIRE(B.rows() == 3);
  REQUIRE(B.cols() == 5);
  CHECK(rel_residual(A, B) < 1e-15);
}

TEST_CASE("filename tokens stay shell safe") {
  CHECK(sanitize_token("a b/c:d") == "a_b_c_d");
  CHECK(sanitize_token("q0.6+0.25i") == "q0.6+0.25i");
  CHECK(short_complex(Complex(0.6, 0.25)) == "0.6+0.25i");
  CHECK(short_complex(Complex(-1.0, -0.5)) == "-1-0.5i");
  ModelParams p = ModelParams::defaults();
  const std::string name = curve_filename("tq", p);
  CHECK(name.find("tq") == 0);
  for (char c : name)
    CHECK((std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
           c == '_' || c == '+' || c == '-'));
}

TEST_CASE("verify command produces a passing deterministic report") {
  const fs::path root = scratch_root();
  const fs::path cfg = root / "fast.cfg";
  write_text_file(cfg.string(), kFastConfig);

  const fs::path out1 = root / "out1";
  const fs::path out2 = root / "out2";
  const int rc1 =
      run_cli("verify --config " + cfg.string() + " --out " + out1.string(),
              root / "log1.txt");
  REQUIRE(rc1 == 0);
  const json rep1 = load_report(out1);
  CHECK(rep1.at("verdict") == "pass");
  CHECK(rep1.at("command") == "verify");
  REQUIRE(rep1.contains("relations"));
  CHECK(rep1.at("relations").size() >= 2);
  for (const auto& chk : rep1.at("relations"))
    CHECK(chk.at("verdict") == "pass");

  const int rc2 =
      run_cli("verify --config " + cfg.string() + " --out " + out2.string(),
              root / "log2.txt");
  REQUIRE(rc2 == 0);
  CHECK(stable_dump(rep1) == stable_dump(load_report(out2)));

  // Every curve file must be reproduced byte for byte.
  int csv_count = 0;
  for (const auto& entry : fs::directory_iterator(out1)) {
    if (entry.path().extension() != ".csv") continue;
    ++csv_count;
    const fs::path twin = out2 / entry.path().filename();
    REQUIRE(fs::exists(twin));
    CHECK(read_text_file(entry.path().string()) ==
          read_text_file(twin.string()));
  }
  CHECK(csv_count >= 2);
}

TEST_CASE("override flag reshapes the run") {
  const fs::path root = scratch_root();
  const fs::path cfg = root / "fast2.cfg";
  write_text_file(cfg.string(), kFastConfig);
  const fs::path out = root / "out_override";
  const int rc = run_cli("verify --config " + cfg.string() + " --out " +
                             out.string() + " --override relations=commutativity",
                         root / "log_ov.txt");
  REQUIRE(rc == 0);
  const json rep = load_report(out);
  CHECK(rep.at("relations").size() == 1);
  CHECK(rep.at("config").at("relations") == "commutativity");
}

TEST_CASE("limits command writes study curves") {
  const fs::path root = scratch_root();
  const fs::path cfg = root / "lim.cfg";
  write_text_file(cfg.string(),
                  "q=0.6+0.25i\nphi=0.35\nL=2\ntrunc_N=20\n"
                  "lambda_grid=0.7+0.3i\nj_list=1,2,3\n");
  const fs::path out = root / "out_lim";
  const int rc = run_cli(
      "limits --config " + cfg.string() + " --out " + out.string(),
      root / "log_lim.txt");
  REQUIRE(rc == 0);
  const json rep = load_report(out);
  CHECK(rep.at("command") == "limits");
  int csv_count = 0;
  for (const auto& entry : fs::directory_iterator(out))
    if (entry.path().extension() == ".csv") ++csv_count;
  CHECK(csv_count >= 2);
}

TEST_CASE("config errors exit with the dedicated code") {
  const fs::path root = scratch_root();
  const fs::path bad1 = root / "bad1.cfg";
  write_text_file(bad1.string(), "bogus_key=1\n");
  CHECK(run_cli("verify --config " + bad1.string(), root / "b1.txt") == 2);

  const fs::path bad2 = root / "bad2.cfg";
  write_text_file(bad2.string(), "q=0+0i\n");
  CHECK(run_cli("verify --config " + bad2.string(), root / "b2.txt") == 2);

  CHECK(run_cli("verify --config " + (root / "missing.cfg").string(),
                root / "b3.txt") == 2);
  CHECK(run_cli("verify", root / "b4.txt") == 2);

  const fs::path ok = root / "ok.cfg";
  write_text_file(ok.string(), kFastConfig);
  CHECK(run_cli("verify --config " + ok.string() + " --override nope=1",
                root / "b5.txt") == 2);
}
