// nb: batch front-end for bases, norms, multipliers and the verification suite.
//
// Exit codes: 0 pass, 1 usage or config error, 2 inconclusive, 3 failed verdict.

#include "nb/config.hpp"
#include "nb/experiments.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

constexpr int kExitPass = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitFail = 3;

double parse_exponent(const std::string& text) {
  if (text == "inf" || text == "infinity") return nb::kInf;
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw std::invalid_argument("bad number '" + text + "'");
  return v;
}

// Function files are whitespace-separated numbers. A first line "# grid" or
// "# coefficients" fixes the meaning; otherwise the count decides (N values
// are grid samples, K values are coefficients).
Eigen::VectorXd read_function(const std::filesystem::path& path, const nb::EigenBasis& basis) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read function file " + path.string());
  std::string kind;
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      std::istringstream tag(line.substr(hash + 1));
      if (kind.empty() && values.empty()) tag >> kind;
      line = line.substr(0, hash);
    }
    std::istringstream row(line);
    std::string token;
    while (row >> token) values.push_back(parse_exponent(token));
  }
  const auto count = static_cast<nb::Index>(values.size());
  Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(values.data(), count);
  if (kind.empty()) {
    if (count == basis.grid_size()) kind = "grid";
    else if (count == basis.size()) kind = "coefficients";
  }
  if (kind == "grid") {
    nb::require(count == basis.grid_size(), "function file has " + std::to_string(count) + " grid values, basis has " +
                                                std::to_string(basis.grid_size()) + " nodes");
    return v;
  }
  if (kind == "coefficients") {
    nb::require(count == basis.size(), "function file has " + std::to_string(count) + " coefficients, basis has " +
                                           std::to_string(basis.size()) + " modes");
    return nb::synthesize(basis, v);
  }
  throw std::invalid_argument("function file: " + std::to_string(count) +
                              " values match neither the grid nor the mode count");
}

void write_function(const std::filesystem::path& path, const Eigen::VectorXd& f) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  nb::require(out.good(), "cannot write " + path.string());
  out << "# grid\n" << std::setprecision(17);
  for (nb::Index i = 0; i < f.size(); ++i) out << f(i) << '\n';
}

std::string format_exponent(double p) {
  std::ostringstream s;
  if (std::isinf(p)) s << "inf";
  else s << p;
  return s.str();
}

void print_endpoint_norms(const nb::OperatorKernel& k) {
  const nb::EndpointNorms e = nb::endpoint_norms(k);
  std::cout << std::setprecision(10) << "kernel " << k.tag << " (" << k.rows() << " x " << k.cols() << ")\n"
            << "  L1->L1     " << e.l1_l1 << "\n"
            << "  L1->Linf   " << e.l1_linf << "\n"
            << "  Linf->Linf " << e.linf_linf << "\n"
            << "  L2->L2     " << e.l2_l2 << "\n"
            << "  tail_bound " << k.tail_bound << "\n";
}

int exit_code_for(const std::vector<nb::Verdict>& verdicts) {
  if (std::count(verdicts.begin(), verdicts.end(), nb::Verdict::fail)) return kExitFail;
  if (std::count(verdicts.begin(), verdicts.end(), nb::Verdict::inconclusive)) return kExitInconclusive;
  return kExitPass;
}

void print_summary_row(const std::string& id, const std::string& verdict, std::size_t passed, std::size_t total,
                       double seconds) {
  std::cout << std::left << std::setw(30) << id << std::setw(14) << verdict << std::right << std::setw(4) << passed
            << "/" << std::left << std::setw(6) << total << std::right << std::fixed << std::setprecision(2)
            << std::setw(9) << seconds << "s\n"
            << std::defaultfloat;
}

// Options shared by the commands that describe a basis.
struct BasisOptions {
  std::string shape = "interval";
  double L = 3.141592653589793, Lx = 3.141592653589793, Ly = 3.141592653589793, h = 1.0 / 32.0;
  long N = 512, Nx = 32, Ny = 32, K = 64;
  std::vector<CLI::Option*> options;

  void attach(CLI::App* app) {
    options = {app->add_option("--shape", shape, "interval | rectangle | lshape")
                   ->check(CLI::IsMember({"interval", "rectangle", "lshape"})),
               app->add_option("--L", L, "interval length"),
               app->add_option("--Lx", Lx, "rectangle width"),
               app->add_option("--Ly", Ly, "rectangle height"),
               app->add_option("--N", N, "interval grid nodes"),
               app->add_option("--Nx", Nx, "rectangle nodes along x"),
               app->add_option("--Ny", Ny, "rectangle nodes along y"),
               app->add_option("--h", h, "finite-difference mesh width (lshape)"),
               app->add_option("--K", K, "number of modes (<= 0: all resolved, analytic shapes)")};
  }

  nb::BasisSpec spec(const std::optional<nlohmann::json>& base) const {
    nlohmann::json j = base ? *base : nlohmann::json::object();
    const nlohmann::json flags = {{"shape", shape}, {"L", L}, {"Lx", Lx}, {"Ly", Ly}, {"N", N},
                                  {"Nx", Nx},       {"Ny", Ny}, {"h", h}, {"K", K}};
    for (const CLI::Option* o : options) {
      const std::string key = o->get_name().substr(2);
      if (o->count() > 0) j[key] = flags[key];
    }
    return nb::BasisSpec::from_json(j);
  }
};

nb::RunConfig config_or_default(const std::string& path) {
  if (path.empty()) {
    nb::RunConfig c;
    c.output = nb::default_output_directory();
    return c;
  }
  return nb::load_config(path);
}

int cmd_basis(const BasisOptions& b, const std::string& config, const std::string& file, const std::string& output) {
  nb::RunConfig c = config_or_default(config);
  if (!output.empty()) c.output = output;
  const nb::BasisSpec spec = b.spec(c.basis_override);
  const nb::EigenBasis basis = spec.build();
  std::filesystem::path path = file;
  if (path.empty()) path = c.output / ("basis_" + spec.shape + "_K" + std::to_string(basis.size()) + ".nbb");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  nb::save_basis(basis, path);
  std::cout << "basis " << spec.to_json().dump() << "\n"
            << "nodes " << basis.grid_size() << ", modes " << basis.size() << ", Lambda_max " << std::setprecision(10)
            << basis.lambda_max() << ", gram defect " << basis.gram_defect() << "\n";
  for (nb::Index k = 0; k < std::min<nb::Index>(10, basis.size()); ++k)
    std::cout << "lambda_" << k + 1 << " " << std::setprecision(15) << basis.eigenvalues()(k) << "\n";
  std::cout << "wrote " << path.string() << "\n";
  return kExitPass;
}

struct NormOptions {
  std::string basis, input, kind = "besov", s = "0", p = "2", q = "2", pou = "standard", csv;
  int M = 0;
  double theta = 1.0;
  std::optional<int> j_min, j_max;
};

int cmd_norm(const NormOptions& o) {
  const nb::EigenBasis basis = nb::load_basis(o.basis);
  const Eigen::VectorXd f = read_function(o.input, basis);
  const nb::PartitionOfUnity pou(nb::partition_variant_from_string(o.pou));
  const double s = parse_exponent(o.s), p = parse_exponent(o.p), q = parse_exponent(o.q);
  nb::NormValue v;
  std::string params;
  nb::BesovParams bp{s, p, q, o.j_min, o.j_max};
  if (o.kind == "besov") {
    v = nb::besov_inhom(f, bp, pou, basis);
    params = "s=" + o.s + ";p=" + format_exponent(p) + ";q=" + format_exponent(q);
  } else if (o.kind == "besov_hom") {
    v = nb::besov_hom(f, bp, pou, basis);
    params = "s=" + o.s + ";p=" + format_exponent(p) + ";q=" + format_exponent(q);
  } else if (o.kind == "lp") {
    v.value = nb::lp_norm(basis.grid(), f, p);
    params = "p=" + format_exponent(p);
  } else if (o.kind == "pM") {
    v = nb::seminorm_pM(f, o.M, pou, basis);
    params = "M=" + std::to_string(o.M);
  } else if (o.kind == "qM") {
    v = nb::seminorm_qM(f, o.M, pou, basis);
    params = "M=" + std::to_string(o.M);
  } else if (o.kind == "amalgam") {
    v.value = nb::amalgam_norm(basis.grid(), f, {p, q, o.theta});
    params = "p=" + format_exponent(p) + ";q=" + format_exponent(q) + ";theta=" + std::to_string(o.theta);
  }
  params += ";pou=" + o.pou;
  if (!v.resolved) {
    std::cerr << "nb norm: band violation: " << v.note << "\n";
    return kExitUsage;
  }
  const nb::NormRow row{o.kind, params, v.value, v.tail_bound};
  nb::write_norm_csv_header(std::cout);
  nb::write_norm_csv_row(std::cout, row);
  if (!v.note.empty()) std::cerr << "note: " << v.note << "\n";
  if (!o.csv.empty()) {
    const bool fresh = !std::filesystem::exists(o.csv);
    std::ofstream out(o.csv, std::ios::app);
    nb::require(out.good(), "cannot append to " + o.csv);
    if (fresh) nb::write_norm_csv_header(out);
    nb::write_norm_csv_row(out, row);
  }
  return kExitPass;
}

struct MultiplierOptions {
  std::string basis, symbol = "heat", pou = "standard", kernel_out, input, out;
  double alpha = 0.0, t = 1.0, beta = 1.0, M = 1.0, theta = 1.0;
  int j = 0;
  bool project = false;
};

nb::Symbol make_symbol(const MultiplierOptions& o) {
  const nb::PartitionOfUnity pou(nb::partition_variant_from_string(o.pou));
  nb::Symbol s;
  if (o.symbol == "heat") s = nb::Symbol::heat(o.t);
  else if (o.symbol == "power") s = nb::Symbol::power(o.alpha);
  else if (o.symbol == "resolvent") s = nb::Symbol::resolvent(o.beta, o.M, o.theta);
  else if (o.symbol == "block") s = nb::Symbol::block(pou, o.j, o.alpha);
  else if (o.symbol == "lowpass") s = nb::Symbol::low_pass(pou, o.theta);
  else if (o.symbol == "bump") s = nb::Symbol::bump(pou, o.theta);
  else throw std::invalid_argument("unknown symbol '" + o.symbol + "'");
  return o.project ? nb::Symbol::projected(s) : s;
}

int run_multiplier(const MultiplierOptions& o, const nb::Symbol& symbol, const nb::EigenBasis& basis) {
  const nb::OperatorKernel k = nb::multiplier_kernel(symbol, basis);
  print_endpoint_norms(k);
  if (!o.kernel_out.empty()) {
    nb::save_kernel(k, o.kernel_out);
    std::cout << "wrote " << o.kernel_out << "\n";
  }
  if (!o.input.empty()) {
    nb::require(!o.out.empty(), "--input needs --out");
    write_function(o.out, nb::apply_multiplier(symbol, read_function(o.input, basis), basis));
    std::cout << "wrote " << o.out << "\n";
  }
  return kExitPass;
}

int cmd_multiplier(const MultiplierOptions& o) {
  const nb::EigenBasis basis = nb::load_basis(o.basis);
  return run_multiplier(o, make_symbol(o), basis);
}

int cmd_heat(const MultiplierOptions& o) {
  const nb::EigenBasis basis = nb::load_basis(o.basis);
  nb::OperatorKernel pk = nb::multiplier_kernel(nb::Symbol::projected(nb::Symbol::heat(o.t)), basis);
  pk.spectral_l2.reset();
  const double lambda2 = basis.size() > 1 ? basis.eigenvalues()(1) : 0.0;
  const int code = run_multiplier(o, nb::Symbol::heat(o.t), basis);
  std::cout << std::setprecision(15) << "||P e^{-tH}||_{2->2} " << nb::norm_l2_l2(pk) << "\n"
            << "exp(-lambda_2 t)     " << std::exp(-lambda2 * o.t) << "\n";
  return code;
}

struct VerifyOptions {
  std::string config, pou, output;
  std::vector<std::string> only;
  int jobs = -1;
  long long seed = -1;
  bool list = false, schema = false;
};

int cmd_verify(const VerifyOptions& o) {
  if (o.schema) {
    std::cout << nb::config_schema();
    return kExitPass;
  }
  if (o.list) {
    for (const auto& e : nb::experiment_registry())
      std::cout << std::left << std::setw(30) << e.id << (e.negative_control ? "[negative control] " : "") << e.summary
                << "\n";
    return kExitPass;
  }
  nb::RunConfig c = config_or_default(o.config);
  if (!o.pou.empty()) c.pou = nb::partition_variant_from_string(o.pou);
  if (!o.output.empty()) c.output = o.output;
  if (o.jobs >= 0) c.jobs = o.jobs;
  if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
  if (!o.only.empty()) {
    std::vector<nb::ExperimentRequest> selected;
    for (const auto& id : o.only) {
      if (!nb::find_experiment(id)) throw std::invalid_argument("unknown experiment '" + id + "'");
      nb::ExperimentRequest req{id, nlohmann::json::object()};
      for (const auto& r : c.experiments)
        if (r.id == id) req = r;
      selected.push_back(req);
    }
    c.experiments = selected;
  }
  const std::vector<nb::ExperimentSpec> specs = c.specs();
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers =
      std::min<std::size_t>(specs.size(), c.jobs > 0 ? static_cast<std::size_t>(c.jobs) : cores);

  // Reports land in spec order regardless of completion order.
  std::vector<nb::EstimateReport> reports(specs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) reports[i] = nb::run_experiment(specs[i]);
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::vector<nb::Verdict> verdicts;
  nlohmann::json summary = nlohmann::json::array();
  std::cout << std::left << std::setw(30) << "experiment" << std::setw(14) << "verdict" << "checks      runtime\n";
  for (const auto& r : reports) {
    nb::write_report(r, c.output);
    const nb::Verdict v = r.verdict();
    verdicts.push_back(v);
    const auto passed = static_cast<std::size_t>(
        std::count_if(r.checks.begin(), r.checks.end(), [](const nb::Check& k) { return k.pass; }));
    print_summary_row(r.id, nb::to_string(v), passed, r.checks.size(), r.runtime_seconds);
    for (const auto& k : r.checks)
      if (!k.pass) std::cout << "    failed: " << k.name << " (" << k.value << " " << k.relation << " " << k.threshold
                             << ")\n";
    summary.push_back({{"id", r.id}, {"verdict", nb::to_string(v)}, {"checks", r.checks.size()}, {"passed", passed},
                       {"runtime_seconds", r.runtime_seconds}});
  }
  std::ofstream(c.output / "summary.json") << summary.dump(2) << '\n';
  const int code = exit_code_for(verdicts);
  std::cout << "exit " << code << "\n";
  return code;
}

int cmd_report(const std::string& directory) {
  const std::filesystem::path dir = directory.empty() ? nb::default_output_directory() : std::filesystem::path(directory);
  nb::require(std::filesystem::is_directory(dir), "no report directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".json" && entry.path().filename() != "summary.json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  nb::require(!files.empty(), "no reports in " + dir.string());
  std::vector<nb::Verdict> verdicts;
  std::cout << std::left << std::setw(30) << "experiment" << std::setw(14) << "verdict" << "checks      runtime\n";
  for (const auto& path : files) {
    std::ifstream in(path);
    const nlohmann::json j = nlohmann::json::parse(in);
    const nb::Verdict v = nb::verdict_from_string(j.at("verdict").get<std::string>());
    verdicts.push_back(v);
    std::size_t passed = 0;
    for (const auto& c : j.at("checks")) passed += c.at("pass").get<bool>() ? 1 : 0;
    print_summary_row(j.at("id").get<std::string>(), nb::to_string(v), passed, j.at("checks").size(),
                      j.at("runtime_seconds").get<double>());
  }
  return exit_code_for(verdicts);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nb: Besov-space and spectral-multiplier computations on Neumann domains"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);
  std::function<int()> run;

  BasisOptions basis_opts;
  std::string basis_config, basis_file, basis_output;
  auto* basis = app.add_subcommand("basis", "build and save an eigenbasis");
  basis_opts.attach(basis);
  basis->add_option("--config", basis_config, "JSON run config (domain/resolution sections)");
  basis->add_option("--file", basis_file, "basis file to write (default: <output>/basis_<shape>_K<K>.nbb)");
  basis->add_option("--output", basis_output, "output directory (default: $NB_OUT or nb_out)");
  basis->callback([&] { run = [&] { return cmd_basis(basis_opts, basis_config, basis_file, basis_output); }; });

  NormOptions norm_opts;
  auto* norm = app.add_subcommand("norm", "compute a norm of a function file");
  norm->add_option("--basis", norm_opts.basis, "basis file")->required();
  norm->add_option("--input", norm_opts.input, "function file (grid values or coefficients)")->required();
  norm->add_option("--kind", norm_opts.kind, "besov | besov_hom | lp | pM | qM | amalgam")
      ->check(CLI::IsMember({"besov", "besov_hom", "lp", "pM", "qM", "amalgam"}));
  norm->add_option("--s", norm_opts.s, "smoothness");
  norm->add_option("--p", norm_opts.p, "integrability (number or inf)");
  norm->add_option("--q", norm_opts.q, "summability (number or inf)");
  norm->add_option("--M", norm_opts.M, "order for pM / qM");
  norm->add_option("--theta", norm_opts.theta, "amalgam scale");
  norm->add_option("--j-min", norm_opts.j_min, "lowest dyadic block (homogeneous)");
  norm->add_option("--j-max", norm_opts.j_max, "highest dyadic block");
  norm->add_option("--pou", norm_opts.pou, "partition variant")->check(CLI::IsMember({"standard", "perturbed"}));
  norm->add_option("--csv", norm_opts.csv, "CSV file to append the row to");
  norm->callback([&] { run = [&] { return cmd_norm(norm_opts); }; });

  MultiplierOptions mult_opts;
  auto* mult = app.add_subcommand("multiplier", "build a spectral multiplier kernel and report its norms");
  mult->add_option("--basis", mult_opts.basis, "basis file")->required();
  mult->add_option("--symbol", mult_opts.symbol, "heat | power | resolvent | block | lowpass | bump")
      ->check(CLI::IsMember({"heat", "power", "resolvent", "block", "lowpass", "bump"}));
  mult->add_option("--t", mult_opts.t, "heat time");
  mult->add_option("--alpha", mult_opts.alpha, "power of lambda");
  mult->add_option("--beta", mult_opts.beta, "resolvent power");
  mult->add_option("--M", mult_opts.M, "resolvent shift");
  mult->add_option("--theta", mult_opts.theta, "scale");
  mult->add_option("--j", mult_opts.j, "dyadic block index");
  mult->add_flag("--project", mult_opts.project, "compose with the projection P");
  mult->add_option("--pou", mult_opts.pou, "partition variant")->check(CLI::IsMember({"standard", "perturbed"}));
  mult->add_option("--kernel-out", mult_opts.kernel_out, "write the kernel to this file");
  mult->add_option("--input", mult_opts.input, "function file to apply the multiplier to");
  mult->add_option("--out", mult_opts.out, "output function file");
  mult->callback([&] { run = [&] { return cmd_multiplier(mult_opts); }; });

  MultiplierOptions heat_opts;
  auto* heat = app.add_subcommand("heat", "heat semigroup kernel norms and the projected L2 decay");
  heat->add_option("--basis", heat_opts.basis, "basis file")->required();
  heat->add_option("--t", heat_opts.t, "time")->required()->check(CLI::PositiveNumber);
  heat->add_option("--kernel-out", heat_opts.kernel_out, "write the kernel to this file");
  heat->add_option("--input", heat_opts.input, "function file to evolve");
  heat->add_option("--out", heat_opts.out, "output function file");
  heat->callback([&] { run = [&] { return cmd_heat(heat_opts); }; });

  VerifyOptions verify_opts;
  auto* verify = app.add_subcommand("verify", "run experiments and write reports");
  verify->add_option("--config", verify_opts.config, "JSON run config");
  verify->add_option("--only", verify_opts.only, "experiment ids to run")->delimiter(',');
  verify->add_option("--jobs", verify_opts.jobs, "parallel experiments (default: available cores)")
      ->check(CLI::NonNegativeNumber);
  verify->add_option("--pou", verify_opts.pou, "partition variant")->check(CLI::IsMember({"standard", "perturbed"}));
  verify->add_option("--seed", verify_opts.seed, "random seed")->check(CLI::NonNegativeNumber);
  verify->add_option("--output", verify_opts.output, "report directory (default: $NB_OUT or nb_out)");
  verify->add_flag("--list", verify_opts.list, "list experiments and exit");
  verify->add_flag("--schema", verify_opts.schema, "print the config JSON schema and exit");
  verify->callback([&] { run = [&] { return cmd_verify(verify_opts); }; });

  std::string report_dir;
  auto* report = app.add_subcommand("report", "summarize the reports in a directory");
  report->add_option("--output", report_dir, "report directory (default: $NB_OUT or nb_out)");
  report->callback([&] { run = [&] { return cmd_report(report_dir); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }
  try {
    return run();
  } catch (const nb::ConfigError& e) {
    std::cerr << "nb: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "nb: " << e.what() << "\n";
    return kExitUsage;
  }
}
