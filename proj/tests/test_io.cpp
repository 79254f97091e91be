#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nb/config.hpp"
#include "nb/io.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

using namespace nb;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "nb_test_io";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool bit_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

int config_error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("basis files round-trip bit-exactly") {
  const std::vector<EigenBasis> bases = {build_interval_basis(std::numbers::pi, 32, 128),
                                         build_rectangle_basis(1.0, 2.0, 40, 16, 32),
                                         build_fd_basis(Domain::l_shape(), 0.125, 12)};
  int n = 0;
  for (const EigenBasis& b : bases) {
    const fs::path p = scratch("basis" + std::to_string(n++) + ".nbb");
    save_basis(b, p);
    const EigenBasis c = load_basis(p);
    CHECK(c.domain().shape() == b.domain().shape());
    CHECK(c.analytic() == b.analytic());
    CHECK(c.lambda_max() == b.lambda_max());
    CHECK(bit_equal(c.eigenvalues(), b.eigenvalues()));
    CHECK(bit_equal(c.modes(), b.modes()));
    CHECK(bit_equal(c.grid().weights, b.grid().weights));
    CHECK(bit_equal(c.grid().nodes, b.grid().nodes));
    CHECK(grid_id(c.grid()) == grid_id(b.grid()));
    CHECK(c.gradient_modes().size() == b.gradient_modes().size());
    for (std::size_t a = 0; a < b.gradient_modes().size(); ++a)
      CHECK(bit_equal(c.gradient_modes()[a], b.gradient_modes()[a]));
    // Saving the loaded basis reproduces the file byte for byte.
    const fs::path q = scratch("again.nbb");
    save_basis(c, q);
    CHECK(slurp(p) == slurp(q));
  }
}

TEST_CASE("corrupt basis files are rejected") {
  const fs::path p = scratch("short.nbb");
  save_basis(build_interval_basis(1.0, 8, 32), p);
  const std::string bytes = slurp(p);
  {
    std::ofstream out(p, std::ios::binary);
    out << bytes.substr(0, bytes.size() / 2);
  }
  CHECK_THROWS(load_basis(p));
  {
    std::ofstream out(p, std::ios::binary);
    out << "NOTABASIS" << bytes.substr(9);
  }
  CHECK_THROWS(load_basis(p));
  CHECK_THROWS(load_basis(scratch("missing.nbb")));
}

TEST_CASE("kernel files round-trip bit-exactly") {
  const EigenBasis b = build_interval_basis(1.0, 16, 64);
  const OperatorKernel k = heat_kernel(0.01, b);
  const fs::path p = scratch("heat.nbk");
  save_kernel(k, p);
  const OperatorKernel c = load_kernel(p);
  CHECK(c.tag == k.tag);
  CHECK(c.grid_id == grid_id(b.grid()));
  CHECK(c.tail_bound == k.tail_bound);
  CHECK(bit_equal(c.matrix, k.matrix));
  CHECK(bit_equal(c.row_weights, k.row_weights));
  CHECK(bit_equal(c.col_weights, k.col_weights));
}

TEST_CASE("raw double streams") {
  std::stringstream s;
  io::write_header(s, "NBTEST01", "{\"n\":3}");
  const double values[3] = {1.5, -0.0, std::numeric_limits<double>::denorm_min()};
  io::write_doubles(s, values, 3);
  CHECK(io::read_header(s, "NBTEST01") == "{\"n\":3}");
  double back[3];
  io::read_doubles(s, back, 3);
  CHECK(std::memcmp(values, back, sizeof values) == 0);
  std::stringstream wrong;
  io::write_header(wrong, "NBTEST01", "{}");
  CHECK_THROWS(io::read_header(wrong, "NBTEST02"));
}

TEST_CASE("least squares and report JSON") {
  const double x[4] = {0, 1, 2, 3}, y[4] = {1, 3, 5, 7};
  const Fit f = least_squares(x, y, "line");
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.residual < 1e-14);
  CHECK(f.count == 4);

  EstimateReport r;
  r.id = "demo";
  r.seed = 5;
  r.check("value", 1.0, "<=", 2.0);
  r.check("unbounded", kInf, "<", 1.0);
  r.fits.push_back(f);
  r.table("points", {"x", "y"}).add({1.0, 2.0});
  CHECK(r.verdict() == Verdict::fail);
  CHECK(r.find_check("value")->pass);
  const nlohmann::json j = to_json(r);
  CHECK(j["verdict"] == "fail");
  CHECK(j["seed"] == 5);
  CHECK(j["checks"][1]["value"] == "inf");
  CHECK(j["fit"].is_null());
  CHECK(j["fits"][0]["slope"] == 2.0);

  const fs::path dir = scratch("report");
  write_report(r, dir);
  CHECK(fs::exists(dir / "demo.json"));
  CHECK(slurp(dir / "demo_points.csv") == "x,y\n1,2\n");
  CHECK(fs::exists(dir / "demo_points.dat"));

  EstimateReport ok;
  ok.check("fine", 0.0, "<=", 1.0);
  ok.inconclusive = true;
  CHECK(ok.verdict() == Verdict::inconclusive);
  CHECK(verdict_from_string(to_string(Verdict::inconclusive)) == Verdict::inconclusive);
}

TEST_CASE("config parsing") {
  const RunConfig c = parse_config(R"({
  "seed": 9,
  "pou": "perturbed",
  "output": "out",
  "jobs": 2,
  "experiments": ["exp_partition", {"id": "exp_heat_l2", "params": {"basis": {"shape": "interval", "L": 1.0, "N": 64, "K": 16}}}]
})");
  CHECK(c.seed == 9);
  CHECK(c.pou == PartitionVariant::perturbed);
  CHECK(c.output == fs::path("out"));
  CHECK(c.jobs == 2);
  const auto specs = c.specs();
  REQUIRE(specs.size() == 2);
  CHECK(specs[1].params["basis"]["N"] == 64);
  CHECK(specs[1].seed == 9);
  CHECK(specs[0].variant == PartitionVariant::perturbed);

  const RunConfig all = parse_config("{}");
  for (const auto& s : all.specs()) CHECK_FALSE(find_experiment(s.id)->negative_control);
  CHECK(all.specs().size() == 14);

  const RunConfig domain = parse_config(R"({"domain": {"shape": "rectangle", "Lx": 1, "Ly": 1},
                                            "resolution": {"Nx": 16, "Ny": 16, "K": 20},
                                            "experiments": ["exp_heat_l2", "exp_reconstruction"]})");
  CHECK(domain.specs()[0].params["basis"]["shape"] == "rectangle");
  CHECK(domain.specs()[0].params["basis"]["Nx"] == 16);
  // Experiments with their own pair of bases keep them.
  CHECK_FALSE(domain.specs()[1].params.contains("basis"));
}

TEST_CASE("config errors carry line numbers") {
  CHECK(config_error_line("{\n  \"seed\": 1,\n  \"colour\": 2\n}") == 3);
  CHECK(config_error_line("{\n  \"seed\": 1,\n  \"pou\": \"fancy\"\n}") == 3);
  CHECK(config_error_line("{\n  \"seed\": 1\n  \"pou\": \"standard\"\n}") == 3);
  CHECK(config_error_line("{\n\n  \"experiments\": [\n    \"exp_nothing\"\n  ]\n}") == 4);
  CHECK(config_error_line("{\n  \"experiments\": [\n    {\"id\": \"exp_heat_l2\",\n     \"params\": {\"speed\": 1}}\n  ]\n}") ==
        4);
  CHECK(config_error_line("{\"domain\": {\"shape\": \"circle\"}}") == 1);
  CHECK(config_error_line("{\"jobs\": -1}") == 1);
  try {
    parse_config("{\n  \"seed\": -4\n}");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).rfind("config line 2:", 0) == 0);
  }
  const nlohmann::json schema = nlohmann::json::parse(config_schema());
  CHECK(schema["additionalProperties"] == false);
  CHECK(schema["properties"].contains("experiments"));
}

TEST_CASE("experiment specs validate overrides") {
  CHECK_THROWS(make_spec("exp_nothing"));
  CHECK_THROWS(make_spec("exp_heat_l2", {{"speed", 1}}));
  CHECK_THROWS(make_spec("exp_heat_l2", {{"basis", {{"shape", "interval"}, {"colour", 1}}}}));
  const ExperimentSpec s = make_spec("exp_heat_l2");
  CHECK(s.params.contains("basis"));

  BasisSpec b;
  b.shape = "interval";
  b.N = 256;
  b.K = 64;
  const BasisSpec r = b.refined();
  CHECK(r.N == 512);
  CHECK(r.K == 128);
  CHECK(BasisSpec::from_json(r.to_json()).to_json() == r.to_json());
  CHECK(max_resolved_modes(b) == 129);
}
