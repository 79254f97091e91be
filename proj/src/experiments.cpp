#include "nb/experiments.hpp"
#include "experiment_util.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

namespace nb {

using namespace detail;

namespace {

constexpr double kPi = std::numbers::pi;

const std::set<std::string> kBasisKeys = {"shape", "L", "Lx", "Ly", "N", "Nx", "Ny", "h", "K"};

}  // namespace

Index max_resolved_modes(const BasisSpec& s) {
  if (s.shape == "interval") return s.N / 2 + 1;
  if (s.shape == "rectangle") {
    const double h = std::max(s.Lx / static_cast<double>(s.Nx), s.Ly / static_cast<double>(s.Ny));
    const double cutoff = std::pow(kPi / (2.0 * h), 2);
    Index count = 0;
    for (Index a = 0; a <= s.Nx / 2; ++a)
      for (Index b = 0; b <= s.Ny / 2; ++b)
        if (std::pow(a * kPi / s.Lx, 2) + std::pow(b * kPi / s.Ly, 2) <= cutoff * (1.0 + 1e-12)) ++count;
    return count;
  }
  return std::numeric_limits<Index>::max();
}

EigenBasis BasisSpec::build() const {
  const Index modes = K > 0 ? K : max_resolved_modes(*this);
  if (shape == "interval") return build_interval_basis(L, modes, N);
  if (shape == "rectangle") return build_rectangle_basis(Lx, Ly, modes, Nx, Ny);
  if (shape == "lshape") {
    require(K > 0, "lshape basis needs an explicit mode count K");
    return build_fd_basis(Domain::l_shape(), h, K);
  }
  throw std::invalid_argument("unknown basis shape '" + shape + "'");
}

BasisSpec BasisSpec::refined() const {
  BasisSpec r = *this;
  r.N *= 2;
  r.Nx *= 2;
  r.Ny *= 2;
  r.h /= 2.0;
  if (K > 0 && shape != "lshape") r.K = std::min(2 * K, max_resolved_modes(r));
  return r;
}

nlohmann::json BasisSpec::to_json() const {
  nlohmann::json j;
  j["shape"] = shape;
  if (shape == "interval") {
    j["L"] = L;
    j["N"] = N;
  } else if (shape == "rectangle") {
    j["Lx"] = Lx;
    j["Ly"] = Ly;
    j["Nx"] = Nx;
    j["Ny"] = Ny;
  } else {
    j["h"] = h;
  }
  j["K"] = K;
  return j;
}

BasisSpec BasisSpec::from_json(const nlohmann::json& j) {
  require(j.is_object(), "basis spec must be a JSON object");
  for (const auto& [key, value] : j.items())
    require(kBasisKeys.count(key) == 1, "unknown basis key '" + key + "'");
  BasisSpec s;
  s.shape = j.value("shape", s.shape);
  require(s.shape == "interval" || s.shape == "rectangle" || s.shape == "lshape",
          "basis shape must be interval, rectangle or lshape");
  s.L = j.value("L", s.L);
  s.Lx = j.value("Lx", s.Lx);
  s.Ly = j.value("Ly", s.Ly);
  s.N = j.value("N", s.N);
  s.Nx = j.value("Nx", s.Nx);
  s.Ny = j.value("Ny", s.Ny);
  s.h = j.value("h", s.h);
  s.K = j.value("K", s.K);
  return s;
}

namespace {

BasisSpec interval_spec(Index n, Index k, double length = kPi) {
  BasisSpec s;
  s.shape = "interval";
  s.L = length;
  s.N = n;
  s.K = k;
  return s;
}

BasisSpec rectangle_spec(Index nx, Index ny, Index k, double lx = kPi, double ly = kPi) {
  BasisSpec s;
  s.shape = "rectangle";
  s.Lx = lx;
  s.Ly = ly;
  s.Nx = nx;
  s.Ny = ny;
  s.K = k;
  return s;
}

BasisSpec lshape_spec(double h, Index k) {
  BasisSpec s;
  s.shape = "lshape";
  s.h = h;
  s.K = k;
  return s;
}

}  // namespace

// exp_partition ---------------------------------------------------------------

EstimateReport exp_partition(const ExperimentSpec& spec) {
  EstimateReport r;
  const int count = param_int(spec, "samples");
  const BasisSpec bs = param_basis(spec, "basis");
  const double lambda_max = bs.build().lambda_max();
  const std::vector<double> samples = log_spaced(param_double(spec, "lambda_min"), lambda_max, count);
  r.params["lambda_max"] = lambda_max;

  auto& table = r.table("deviation", {"lambda", "dyadic_standard", "psi_standard", "dyadic_perturbed", "psi_perturbed"});
  for (const PartitionVariant v : {PartitionVariant::standard, PartitionVariant::perturbed}) {
    const PartitionOfUnity pou(v);
    const PartitionCheck c = check_partition(pou, samples);
    const std::string name = to_string(v);
    r.check(name + ": max |sum_j phi_j - 1|", c.dyadic_deviation, "<", 1e-10);
    r.check(name + ": max |psi(l^2) + sum_{j>=1} phi_j - 1|", c.psi_deviation, "<", 1e-10);
    r.check(name + ": sampled |phi_0''| bound", c.max_second_difference, "<", 1e3);

    double paley = 0.0;
    int most_active = 0;
    for (const double lambda : samples) {
      const int top = PartitionOfUnity::top_block(lambda);
      int active = 0, last = 0;
      bool consecutive = true;
      for (int j = top - 4; j <= top + 1; ++j) {
        const double phi = pou.phi(j, lambda);
        paley = std::max(paley, std::abs(pou.Phi(j, lambda) * phi - phi));
        if (phi != 0.0) {
          if (active > 0 && j != last + 1) consecutive = false;
          ++active;
          last = j;
        }
      }
      most_active = std::max(most_active, consecutive ? active : 99);
    }
    r.check(name + ": max |Phi_j phi_j - phi_j|", paley, "<", 1e-14);
    r.check(name + ": most nonzero blocks at one lambda (consecutive)", most_active, "<=", 2);
    r.check(name + ": phi_0(0.4) + phi_0(2.1)", pou.phi0(0.4) + pou.phi0(2.1), "<=", 0.0);
    r.check(name + ": |psi(0) - 1|", std::abs(pou.psi(0.0) - 1.0), "<=", 0.0);
  }
  const PartitionOfUnity standard(PartitionVariant::standard), perturbed(PartitionVariant::perturbed);
  const int stride = std::max(1, count / 200);
  for (int i = 0; i < count; i += stride) {
    const double lambda = samples[static_cast<std::size_t>(i)];
    auto deviations = [lambda](const PartitionOfUnity& pou) {
      const std::array<double, 1> one = {lambda};
      const PartitionCheck c = check_partition(pou, one);
      return std::make_pair(c.dyadic_deviation, c.psi_deviation);
    };
    const auto [ds, ps] = deviations(standard);
    const auto [dp, pp] = deviations(perturbed);
    table.add({lambda, ds, ps, dp, pp});
  }

  // Negative control: the broken bump must be caught, with its location.
  const PartitionCheck broken = check_partition(PartitionOfUnity(PartitionVariant::broken), samples);
  r.require_true("negative control: broken partition rejected", !broken.pass);
  r.note("broken partition worst lambda " + fmt(broken.worst_lambda) + ", deviation " +
         fmt(std::max(broken.dyadic_deviation, broken.psi_deviation)));
  return r;
}

// exp_reconstruction ----------------------------------------------------------

namespace {

struct ReconstructionResidual {
  double inhomogeneous = 0.0;
  double homogeneous = 0.0;
  double mean_defect = 0.0;
};

ReconstructionResidual reconstruction_residuals(const EigenBasis& basis, const PartitionOfUnity& pou,
                                                const Eigen::VectorXd& f) {
  ReconstructionResidual out;
  const Grid& g = basis.grid();
  const int j_max = default_j_max(basis);
  const int j_lo = std::min(0, lowest_active_block(basis));
  const BlockPieces pieces = decompose_blocks(f, pou, basis, j_lo, j_max);
  const double size = lp_norm(g, f, 2.0);
  Eigen::VectorXd high = pieces.psi_piece;
  for (int j = 1; j <= j_max; ++j) high += pieces.pieces.col(j - j_lo);
  out.inhomogeneous = lp_norm(g, Eigen::VectorXd(f - high), 2.0) / size;
  const Eigen::VectorXd all = pieces.pieces.rowwise().sum();
  const MeanDecomposition d = decompose_mean(f, g);
  // Blocks annihilate the zero mode: the homogeneous sum reconstructs P f.
  out.homogeneous = lp_norm(g, Eigen::VectorXd(d.orthogonal - all), 2.0) / std::max(lp_norm(g, d.orthogonal, 2.0), 1e-300);
  const double residual = lp_norm(g, Eigen::VectorXd(f - all), 2.0) / size;
  out.mean_defect = std::abs(residual - d.zero_mode / size);
  return out;
}

}  // namespace

EstimateReport exp_reconstruction(const ExperimentSpec& spec) {
  EstimateReport r;
  const int count = param_int(spec, "functions");
  const PartitionOfUnity pou(spec.variant);
  std::mt19937_64 rng(spec.seed);
  auto& table = r.table("residuals", {"sample", "basis", "inhomogeneous", "homogeneous", "mean_defect"});
  int basis_index = 0;
  for (const char* key : {"interval", "rectangle"}) {
    const EigenBasis basis = param_basis(spec, key).build();
    ReconstructionResidual worst;
    for (int s = 0; s < count; ++s) {
      const Eigen::VectorXd c = random_coefficients(basis.size(), basis.size(), rng, false);
      const ReconstructionResidual res = reconstruction_residuals(basis, pou, synthesize(basis, c));
      worst.inhomogeneous = std::max(worst.inhomogeneous, res.inhomogeneous);
      worst.homogeneous = std::max(worst.homogeneous, res.homogeneous);
      worst.mean_defect = std::max(worst.mean_defect, res.mean_defect);
      table.add({static_cast<double>(s), static_cast<double>(basis_index), res.inhomogeneous, res.homogeneous,
                 res.mean_defect});
    }
    const std::string name = std::string(key) + " (K=" + std::to_string(basis.size()) + ")";
    r.check(name + ": max inhomogeneous residual", worst.inhomogeneous, "<", 1e-8);
    r.check(name + ": max homogeneous residual (mean-zero part)", worst.homogeneous, "<", 1e-8);
    r.check(name + ": | residual - |f_0| / ||f|| | with mean present", worst.mean_defect, "<", 1e-10);
    ++basis_index;
  }
  {
    const EigenBasis basis = param_basis(spec, "interval").build();
    const Eigen::VectorXd f = synthesize(basis, random_coefficients(basis.size(), basis.size(), rng, true));
    const ReconstructionResidual broken =
        reconstruction_residuals(basis, PartitionOfUnity(PartitionVariant::broken), f);
    r.check("negative control: broken partition residual", broken.homogeneous, ">", 1e-8);
  }
  r.note("interval functions: seeded Gaussian coefficients on all retained modes");
  return r;
}

// exp_heat_l2 -----------------------------------------------------------------

EstimateReport exp_heat_l2(const ExperimentSpec& spec) {
  EstimateReport r;
  const std::vector<double> times =
      log_spaced(param_double(spec, "t_min"), param_double(spec, "t_max"), param_int(spec, "t_count"));
  auto& table = r.table("decay", {"t", "basis", "measured", "exp(-lambda_2 t)", "difference"});
  int index = 0;
  for (const char* key : {"basis", "fd_basis"}) {
    const EigenBasis basis = param_basis(spec, key).build();
    const double lambda2 = basis.eigenvalues()(1);
    double worst = 0.0, worst_e2 = 0.0, mass = 0.0;
    const Eigen::VectorXd e2 = basis.modes().col(1);
    std::mt19937_64 rng(spec.seed);
    const Eigen::VectorXd f = synthesize(basis, random_coefficients(basis.size(), basis.size(), rng, false));
    for (const double t : times) {
      OperatorKernel k = multiplier_kernel(Symbol::projected(Symbol::heat(t)), basis);
      k.spectral_l2.reset();
      const double measured = norm_l2_l2(k);
      const double exact = std::exp(-lambda2 * t);
      worst = std::max(worst, std::abs(measured - exact));
      const Eigen::VectorXd pe2 = project_P(heat(t, e2, basis), basis.grid());
      worst_e2 = std::max(worst_e2, std::abs(lp_norm(basis.grid(), pe2, 2.0) - exact));
      mass = std::max(mass, std::abs(basis.grid().weights.dot(heat(t, f, basis)) - basis.grid().weights.dot(f)));
      table.add({t, static_cast<double>(index), measured, exact, measured - exact});
    }
    const std::string name = std::string(key == std::string("basis") ? "analytic" : "fd") + " " +
                             to_string(basis.domain().shape());
    r.check(name + ": max |||P e^{-tH}||_{2->2} - e^{-lambda_2 t}|", worst, "<=", 1e-10);
    r.check(name + ": max |||P e^{-tH} e_2||_2 - e^{-lambda_2 t}|", worst_e2, "<=", 1e-10);
    r.check(name + ": mass conservation defect", mass, "<=", 1e-10);
    ++index;
  }
  r.note("operator norms from the eigenvalues of the weighted kernel matrix, not from the symbol");
  return r;
}

// exp_heat_gaussian -----------------------------------------------------------

namespace {

// Max kernel value per lattice displacement minus the numerical floor (a lower
// bound for the untruncated kernel), in log form; nonpositive entries dropped.
struct DisplacementMaxima {
  double t = 0.0;
  std::vector<double> d2;
  std::vector<double> log_value;
};

DisplacementMaxima displacement_maxima(const Eigen::MatrixXd& k, const Grid& g, double t, double floor) {
  const int ex = g.extent.x();
  const int ey = g.dim == 2 ? g.extent.y() : 1;
  std::vector<double> best(static_cast<std::size_t>(ex) * ey, -1.0);
  for (Index j = 0; j < k.cols(); ++j) {
    for (Index i = 0; i < k.rows(); ++i) {
      const int dx = std::abs(g.cells(i, 0) - g.cells(j, 0));
      const int dy = g.dim == 2 ? std::abs(g.cells(i, 1) - g.cells(j, 1)) : 0;
      double& b = best[static_cast<std::size_t>(dx + ex * dy)];
      b = std::max(b, std::abs(k(i, j)));
    }
  }
  DisplacementMaxima out;
  out.t = t;
  for (int dy = 0; dy < ey; ++dy) {
    for (int dx = 0; dx < ex; ++dx) {
      const double v = best[static_cast<std::size_t>(dx + ex * dy)];
      if (v <= floor) continue;
      const double hx = g.spacing(0), hy = g.dim == 2 ? g.spacing(1) : 0.0;
      out.d2.push_back(std::pow(dx * hx, 2) + std::pow(dy * hy, 2));
      out.log_value.push_back(std::log(v - floor));
    }
  }
  return out;
}

struct GaussianFit {
  double C = 0.0;
  double c = 0.0;
};

// Smallest C for each candidate c with value <= C g(t) exp(-d^2 / (c t)); the
// reported pair minimizes C c^{n/2}.
GaussianFit fit_gaussian(const std::vector<DisplacementMaxima>& data, int n,
                         const std::function<double(double)>& log_envelope, const std::vector<double>& candidates) {
  GaussianFit best;
  double objective = kInf;
  for (const double c : candidates) {
    double log_c = -kInf;
    for (const auto& m : data) {
      const double envelope = log_envelope(m.t);
      for (std::size_t b = 0; b < m.d2.size(); ++b)
        log_c = std::max(log_c, m.log_value[b] + m.d2[b] / (c * m.t) - envelope);
    }
    const double value = log_c + 0.5 * n * std::log(c);
    if (value < objective) {
      objective = value;
      best = {std::exp(log_c), c};
    }
  }
  return best;
}

Index count_violations(const std::vector<DisplacementMaxima>& data, const std::function<double(double)>& log_envelope,
                       const GaussianFit& fit) {
  Index bad = 0;
  for (const auto& m : data)
    for (std::size_t b = 0; b < m.d2.size(); ++b)
      if (m.log_value[b] > std::log(fit.C) + log_envelope(m.t) - m.d2[b] / (fit.c * m.t) + 1e-12) ++bad;
  return bad;
}

struct HeatRun {
  std::map<double, DisplacementMaxima> gauss;      // kept t only
  std::map<double, DisplacementMaxima> projected;  // kept t only
  std::map<double, double> max_projected;
  std::vector<double> dropped;
  double worst_positivity = 0.0;  // max over kept t of (-min K) - allowance
  double worst_l2 = 0.0;
  double volume = 0.0;
  double lambda2 = 0.0;
  int dim = 1;
};

HeatRun heat_run(const EigenBasis& basis, const std::vector<double>& times, double tail_ratio, PointTable& table,
                 double level) {
  HeatRun run;
  run.volume = basis.domain().volume();
  run.lambda2 = basis.eigenvalues()(1);
  run.dim = basis.dim();
  const double h2 = std::pow(basis.grid().h(), 2);
  for (const double t : times) {
    if (t < h2 * (1.0 - 1e-12)) continue;
    const OperatorKernel k = heat_kernel(t, basis);
    const double top = k.matrix.maxCoeff();
    const double ratio = k.tail_bound / top;
    const Eigen::MatrixXd pk = k.matrix.array() - 1.0 / run.volume;
    const double max_pk = pk.cwiseAbs().maxCoeff();
    const bool kept = ratio <= tail_ratio;
    table.add({t, level, top, k.matrix.minCoeff(), k.tail_bound, max_pk, kept ? 1.0 : 0.0});
    if (!kept) {
      run.dropped.push_back(t);
      continue;
    }
    const double floor = k.tail_bound + 1e-12 * top;
    run.worst_positivity = std::max(run.worst_positivity, -k.matrix.minCoeff() - floor);
    run.gauss.emplace(t, displacement_maxima(k.matrix, basis.grid(), t, floor));
    run.projected.emplace(t, displacement_maxima(pk, basis.grid(), t, floor));
    run.max_projected[t] = max_pk;
    OperatorKernel pkern = multiplier_kernel(Symbol::projected(Symbol::heat(t)), basis);
    run.worst_l2 = std::max(run.worst_l2, std::abs(*pkern.spectral_l2 - std::exp(-run.lambda2 * t)));
  }
  return run;
}

std::vector<DisplacementMaxima> select(const std::map<double, DisplacementMaxima>& all, const std::set<double>& keep) {
  std::vector<DisplacementMaxima> out;
  for (const auto& [t, m] : all)
    if (keep.count(t)) out.push_back(m);
  return out;
}

}  // namespace

EstimateReport exp_heat_gaussian(const ExperimentSpec& spec) {
  EstimateReport r;
  const double tail_ratio = param_double(spec, "tail_ratio");
  const double stability = param_double(spec, "stability");
  const std::vector<double> candidates =
      log_spaced(param_double(spec, "c_min"), param_double(spec, "c_max"), param_int(spec, "c_count"));
  std::vector<std::string> keys = {"basis"};
  if (spec.params.at("include_2d").get<bool>()) keys.push_back("basis_2d");

  for (const auto& key : keys) {
    const BasisSpec coarse_spec = param_basis(spec, key);
    const EigenBasis coarse = coarse_spec.build();
    const EigenBasis fine = coarse_spec.refined().build();
    const double h2 = std::pow(fine.grid().h(), 2);
    const double t_max = param_double(spec, "t_max");
    std::vector<double> times = log_spaced(h2, 1.0, param_int(spec, "t_count"));
    for (const double t : log_spaced(1.0, t_max, 6)) times.push_back(t);
    times.erase(std::unique(times.begin(), times.end()), times.end());

    const std::string label = to_string(coarse.domain().shape());
    auto& table = r.table("kernel_" + label, {"t", "level", "max_kernel", "min_kernel", "tail_bound",
                                               "max_projected", "kept"});
    const HeatRun runs[2] = {heat_run(coarse, times, tail_ratio, table, 0.0),
                             heat_run(fine, times, tail_ratio, table, 1.0)};
    const int n = coarse.dim();
    auto gauss_envelope = [n](double t) { return std::max(-0.5 * n * std::log(t), 0.0); };

    GaussianFit own[2];
    for (int level = 0; level < 2; ++level) {
      const HeatRun& run = runs[level];
      const std::string name = label + (level ? " fine" : " coarse");
      std::set<double> all;
      for (const auto& [t, m] : run.gauss) all.insert(t);
      if (all.size() < 4) {
        r.inconclusive = true;
        r.note(name + ": fewer than 4 usable t values");
        continue;
      }
      const auto data = select(run.gauss, all);
      own[level] = fit_gaussian(data, n, gauss_envelope, candidates);
      r.fits.push_back({name + " Gaussian fit (slope=C4, intercept=C3)", own[level].c, own[level].C, 0.0,
                        static_cast<int>(data.size())});
      r.check(name + ": Gaussian bound violations with fitted (C3, C4)",
              static_cast<double>(count_violations(data, gauss_envelope, own[level])), "<=", 0.0);
      r.check(name + ": positivity defect beyond tail allowance", run.worst_positivity, "<=", 0.0);
      r.check(name + ": max |||P e^{-tH}||_{2->2} - e^{-lambda_2 t}|", run.worst_l2, "<=", 1e-10);
      r.check(name + ": C3 >= |Omega|^{-1}", own[level].C * run.volume, ">=", 1.0);
      if (!run.dropped.empty())
        r.note(name + ": dropped " + std::to_string(run.dropped.size()) + " t values below " +
               fmt(*std::max_element(run.dropped.begin(), run.dropped.end()) * 1.0001) +
               " (kernel truncation tail above " + fmt(tail_ratio) + " of the kernel maximum)");

      // Decay rate of the projected kernel from t in [1, t_max].
      std::vector<double> xs, ys;
      for (const auto& [t, v] : run.max_projected)
        if (t >= 1.0 - 1e-12) {
          xs.push_back(t);
          ys.push_back(std::log(v * std::pow(t, 0.5 * n)));
        }
      if (xs.size() < 2) {
        r.inconclusive = true;
        r.note(name + ": not enough t >= 1 to fit mu");
        continue;
      }
      const Fit decay = least_squares(xs, ys, name + " log(max|PK_t| t^{n/2}) vs t");
      r.fits.push_back(decay);
      const double mu = -decay.slope;
      r.check(name + ": fitted mu / lambda_2", mu / run.lambda2, ">=", 0.5);
      auto projected_envelope = [n, mu](double t) { return -0.5 * n * std::log(t) - mu * t; };
      const auto pdata = select(run.projected, all);
      const GaussianFit p = fit_gaussian(pdata, n, projected_envelope, candidates);
      r.fits.push_back({name + " projected Gaussian fit (slope=C6, intercept=C5)", p.c, p.C, 0.0, static_cast<int>(pdata.size())});
      r.check(name + ": projected Gaussian bound violations with fitted (C5, C6, mu)",
              static_cast<double>(count_violations(pdata, projected_envelope, p)), "<=", 0.0);
      if (level == 0) {
        GaussianFit shrunk = own[0];
        shrunk.c /= 4.0;
        r.check("negative control " + name + ": violations with C4 / 4",
                static_cast<double>(count_violations(data, gauss_envelope, shrunk)), ">", 0.0);
      }
    }

    // Stability: both levels fitted on the t values both of them keep.
    std::set<double> common;
    for (const auto& [t, m] : runs[0].gauss)
      if (runs[1].gauss.count(t)) common.insert(t);
    if (common.size() < 4) {
      r.inconclusive = true;
      r.note(label + ": fewer than 4 common t values for the refinement comparison");
      continue;
    }
    const GaussianFit a = fit_gaussian(select(runs[0].gauss, common), n, gauss_envelope, candidates);
    const GaussianFit b = fit_gaussian(select(runs[1].gauss, common), n, gauss_envelope, candidates);
    r.check(label + ": refinement drift of C3", std::abs(b.C / a.C - 1.0), "<=", stability);
    r.check(label + ": refinement drift of C4", std::abs(b.c / a.c - 1.0), "<=", stability);
    r.note(label + ": common t range [" + fmt(*common.begin()) + ", " + fmt(*common.rbegin()) + "], " +
           std::to_string(common.size()) + " values; C3 " + fmt(a.C) + " -> " + fmt(b.C) + ", C4 " + fmt(a.c) +
           " -> " + fmt(b.c));
  }
  r.note("each pair is fitted with max|K| - floor, floor = tail_bound + 1e-12 max K; pairs at or below the floor "
         "are unconstrained");
  return r;
}

// exp_gradient ----------------------------------------------------------------

EstimateReport exp_gradient(const ExperimentSpec& spec) {
  EstimateReport r;
  const EigenBasis basis = param_basis(spec, "basis").build();
  require(basis.analytic(), "exp_gradient needs an analytic basis");
  const PartitionOfUnity pou(spec.variant);
  const double factor = param_double(spec, "variation");
  const int n = basis.dim();

  // Blocks.
  auto& blocks = r.table("blocks", {"j", "norm_2", "ratio_2", "norm_1", "ratio_1", "norm_inf", "ratio_inf"});
  std::vector<double> ratio2, ratio1, ratioinf, js, logs;
  double exact_gap = 0.0;
  const int j_first = lowest_active_block(basis);
  for (int j = j_first; j <= default_j_max(basis); ++j) {
    if (!block_usable(pou, basis, j)) continue;
    const Symbol symbol = Symbol::block(pou, j);
    const Eigen::VectorXd m = symbol_values(symbol, basis);
    if (m.cwiseAbs().maxCoeff() == 0.0) continue;
    const auto g = gradient_kernels(symbol, basis);
    const double n2 = vector_norm_l2_l2(g);
    const double ninf = vector_norm_linf_linf(g);
    // L^1 -> L^1 of the vector field operator: max over y of int |G(x, y)| dx.
    Eigen::MatrixXd magnitude = Eigen::MatrixXd::Zero(g[0].rows(), g[0].cols());
    for (const auto& c : g) magnitude += c.matrix.cwiseAbs2();
    const double n1 = (g[0].row_weights.transpose() * magnitude.cwiseSqrt()).maxCoeff();
    double exact = 0.0;
    for (Index k = 0; k < basis.size(); ++k) exact = std::max(exact, std::sqrt(basis.eigenvalues()(k)) * std::abs(m(k)));
    exact_gap = std::max(exact_gap, std::abs(n2 - exact) / exact);
    const double scale = std::ldexp(1.0, -j);
    blocks.add({double(j), n2, n2 * scale, n1, n1 * scale, ninf, ninf * scale});
    ratio2.push_back(n2 * scale);
    ratio1.push_back(n1 * scale);
    ratioinf.push_back(ninf * scale);
    if (j >= 1) {
      js.push_back(j);
      logs.push_back(std::log2(n2));
    }
  }
  if (ratio2.size() < 3 || js.size() < 2) {
    r.inconclusive = true;
    r.note("too few usable blocks");
  } else {
    r.check("2^{-j} ||∇phi_j(√H)||_{2->2}: max/min over j", variation(ratio2), "<", factor);
    r.check("2^{-j} ||∇phi_j(√H)||_{1->1}: max/min over j", variation(ratio1), "<", factor);
    r.check("2^{-j} ||∇phi_j(√H)||_{inf->inf}: max/min over j", variation(ratioinf), "<", factor);
    r.check("kernel 2->2 norm vs max_k sqrt(lambda_k)|phi_j| (relative)", exact_gap, "<=", 1e-8);
    const Fit slope = least_squares(js, logs, "log2 ||∇phi_j||_{2->2} vs j, j >= 1");
    r.fit = slope;
    r.check("slope of log2 ||∇phi_j||_{2->2} (j >= 1)", slope.slope, "<=", 1.15);
  }

  // Heat semigroup.
  const double h2 = std::pow(basis.grid().h(), 2);
  const std::vector<double> times = log_spaced(h2, param_double(spec, "t_max"), param_int(spec, "t_count"));
  auto& heat_table = r.table("heat", {"t", "norm_inf", "t^{1/2} norm", "tail_bound", "kept"});
  std::vector<double> small, large;
  int dropped = 0;
  double constant_gradient = 0.0;
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(basis.grid_size());
  for (const double t : times) {
    const auto g = gradient_kernels(Symbol::heat(t), basis);
    const double norm = vector_norm_linf_linf(g);
    const double tail = g[0].tail_bound;
    const bool kept = tail * basis.domain().volume() <= 1e-6 * norm;
    heat_table.add({t, norm, std::sqrt(t) * norm, tail, kept ? 1.0 : 0.0});
    constant_gradient = std::max(constant_gradient, gradient(heat(t, one, basis), basis).cwiseAbs().maxCoeff());
    if (!kept) {
      ++dropped;
      continue;
    }
    (t <= 1.0 ? small : large).push_back(std::sqrt(t) * norm);
  }
  if (dropped) r.note(std::to_string(dropped) + " small t values dropped: gradient-kernel truncation tail above 1e-6");
  if (small.size() < 3) {
    r.inconclusive = true;
    r.note("too few usable t <= 1");
  } else {
    r.check("t^{1/2} ||∇e^{-tH}||_{inf->inf}: max/min over kept t <= 1", variation(small), "<", factor);
    const double sup_small = *std::max_element(small.begin(), small.end());
    const double sup_large = large.empty() ? 0.0 : *std::max_element(large.begin(), large.end());
    r.check("sup_{t in [1, t_max]} t^{1/2} ||∇e^{-tH}|| / sup_{t <= 1}", sup_large / sup_small, "<=", 1.0);
  }
  r.check("max |∇ e^{-tH} 1|", constant_gradient, "<=", 1e-10);

  double green = 0.0;
  for (Index k = 0; k < basis.size(); ++k) {
    const Eigen::MatrixXd d = gradient(basis.modes().col(k), basis);
    double energy = 0.0;
    for (int a = 0; a < n; ++a) energy += basis.grid().weights.dot(d.col(a).cwiseAbs2());
    green = std::max(green, std::abs(energy - basis.eigenvalues()(k)) / std::max(1.0, basis.eigenvalues()(k)));
  }
  r.check("max |||∇e_k||_2^2 - lambda_k| / max(1, lambda_k)", green, "<=", 1e-6);
  r.note("blocks that vanish on the retained spectrum (below the spectral gap) are excluded from the j range");
  return r;
}

// exp_low_freq_decay ----------------------------------------------------------

namespace {

// Block norms ||phi_j(√H)||_{1->inf} for j in [j_min, 0] and the gap-scale test.
void low_frequency_blocks(EstimateReport& r, const EigenBasis& basis, const std::string& label,
                          const PartitionOfUnity& pou, int j_min, bool record_examples) {
  auto& table = r.table("blocks_" + label, {"j", "2^{-j}", "norm_1_inf"});
  const double gap_scale = 0.5 * kPi / basis.domain().diameter();
  std::vector<double> xs, ys;
  int must_vanish_violations = 0;
  int last_zero = j_min - 1;
  for (int j = j_min; j <= 0; ++j) {
    double v = psd_kernel_sup(Symbol::block(pou, j), basis);
    if (v < 1e-300 && v > 0.0) {
      r.note(label + ": block " + std::to_string(j) + " clipped at the 1e-300 underflow guard");
      v = 0.0;
    }
    table.add({double(j), std::ldexp(1.0, -j), v});
    if (std::ldexp(1.0, j + 1) <= gap_scale && v != 0.0) ++must_vanish_violations;
    if (v == 0.0) last_zero = j;
    else {
      xs.push_back(std::ldexp(1.0, -j));
      ys.push_back(std::log(v));
    }
  }
  r.check(label + ": nonzero blocks with 2^{j+1} <= pi / (2 diam)", must_vanish_violations, "<=", 0.0);
  if (last_zero >= j_min)
    r.note(label + ": vacuous range j <= " + std::to_string(last_zero) + " (blocks vanish identically, lambda_2 = " +
           fmt(basis.eigenvalues()(1)) + ")");
  if (xs.size() >= 2) {
    const Fit f = least_squares(xs, ys, label + " log norm vs 2^{-j}");
    r.fits.push_back(f);
    r.note(label + ": fitted mu = " + fmt(-f.slope) + " over " + std::to_string(xs.size()) + " nonzero blocks");
  } else {
    r.note(label + ": mu unconstrained (fewer than 2 nonzero blocks with j <= 0); any mu > 0 works");
  }
  if (record_examples) {
    const double lambda2 = basis.eigenvalues()(1);
    // Blocks with 2^{j+1} < sqrt(lambda_2) are zero on the retained spectrum.
    int bad = 0;
    for (int j = j_min; j <= 0; ++j)
      if (std::ldexp(1.0, j + 1) < std::sqrt(lambda2) && psd_kernel_sup(Symbol::block(pou, j), basis) != 0.0) ++bad;
    r.check(label + ": nonzero blocks below the spectral gap", bad, "<=", 0.0);
  }
}

}  // namespace

EstimateReport exp_low_freq_decay(const ExperimentSpec& spec) {
  EstimateReport r;
  const PartitionOfUnity pou(spec.variant);
  for (const auto& item : spec.params.at("bases")) {
    const BasisSpec bs = BasisSpec::from_json(item);
    const EigenBasis basis = bs.build();
    const std::string label = bs.shape + "_" + std::to_string(static_cast<long long>(basis.grid_size()));
    low_frequency_blocks(r, basis, label, pou, default_j_min(basis), true);
    if (bs.shape == "interval" && std::abs(basis.eigenvalues()(1) - 1.0) < 1e-12) {
      double low = 0.0;
      for (int j = default_j_min(basis); j <= -1; ++j) low = std::max(low, psd_kernel_sup(Symbol::block(pou, j), basis));
      r.check(label + ": max block norm for j <= -1 (lambda_2 = 1)", low, "<=", 0.0);
    }
    if (bs.shape == "rectangle" && std::abs(basis.eigenvalues()(1) - 0.25) < 1e-12) {
      const double minus1 = psd_kernel_sup(Symbol::block(pou, -1), basis);
      double low = 0.0;
      for (int j = default_j_min(basis); j <= -3; ++j) low = std::max(low, psd_kernel_sup(Symbol::block(pou, j), basis));
      r.check(label + ": j = -1 block norm (lambda_2 = 1/4)", minus1, ">", 0.0);
      r.check(label + ": max block norm for j <= -3", low, "<=", 0.0);
    }
  }
  // Negative control: an artificial eigenvalue 2^-12 must break the test.
  const EigenBasis real = param_basis(spec, "fake_basis").build();
  Eigen::VectorXd lambda = real.eigenvalues();
  lambda(1) = std::ldexp(1.0, -12);
  const EigenBasis fake = with_eigenvalues(real, lambda);
  EstimateReport control;
  low_frequency_blocks(control, fake, "fake", pou, default_j_min(fake), false);
  r.require_true("negative control: fake eigenvalue 2^-12 flagged", control.verdict() == Verdict::fail);
  return r;
}

EstimateReport neg_fake_gap(const ExperimentSpec& spec) {
  EstimateReport r;
  const PartitionOfUnity pou(spec.variant);
  const EigenBasis real = param_basis(spec, "basis").build();
  Eigen::VectorXd lambda = real.eigenvalues();
  lambda(1) = param_double(spec, "fake_eigenvalue");
  const EigenBasis fake = with_eigenvalues(real, lambda);
  low_frequency_blocks(r, fake, "fake", pou, default_j_min(fake), true);
  r.note("lambda_2 replaced by " + fmt(lambda(1)) + "; eigenfunctions unchanged");
  return r;
}

EstimateReport neg_broken_partition(const ExperimentSpec& spec) {
  EstimateReport r;
  const PartitionOfUnity broken(PartitionVariant::broken);
  const BasisSpec bs = param_basis(spec, "basis");
  const EigenBasis basis = bs.build();
  const std::vector<double> samples = log_spaced(1e-6, basis.lambda_max(), param_int(spec, "samples"));
  const PartitionCheck c = check_partition(broken, samples);
  r.check("max |sum_j phi_j - 1|", c.dyadic_deviation, "<", 1e-10);
  r.check("max |psi(l^2) + sum_{j>=1} phi_j - 1|", c.psi_deviation, "<", 1e-10);
  std::mt19937_64 rng(spec.seed);
  const Eigen::VectorXd f = synthesize(basis, random_coefficients(basis.size(), basis.size(), rng, false));
  const ReconstructionResidual res = reconstruction_residuals(basis, broken, f);
  r.check("inhomogeneous reconstruction residual", res.inhomogeneous, "<", 1e-8);
  r.note("worst lambda " + fmt(c.worst_lambda));
  return r;
}

// Registry ------------------------------------------------------------------

const std::vector<ExperimentInfo>& experiment_registry() {
  using nlohmann::json;
  static const std::vector<ExperimentInfo> registry = [] {
    std::vector<ExperimentInfo> r;
    r.push_back({"exp_partition", "partition-of-unity identities, both variants", exp_partition,
                 {{"samples", 10000}, {"lambda_min", 1e-6}, {"basis", interval_spec(512, 64).to_json()}}});
    r.push_back({"exp_reconstruction", "f = psi f + sum phi_j f and f = sum_Z phi_j f", exp_reconstruction,
                 {{"functions", 100},
                  {"interval", interval_spec(512, 64).to_json()},
                  {"rectangle", rectangle_spec(32, 32, 200).to_json()}}});
    r.push_back({"exp_heat_l2", "||P e^{-tH}||_{2->2} = e^{-lambda_2 t}", exp_heat_l2,
                 {{"t_min", 0.01},
                  {"t_max", 10.0},
                  {"t_count", 20},
                  {"basis", interval_spec(128, 64).to_json()},
                  {"fd_basis", lshape_spec(0.125, 24).to_json()}}});
    r.push_back({"exp_multiplier_scaling", "||H^a phi_j(√H)||_{p->q} ~ 2^{n(1/p-1/q)j + 2aj}", exp_multiplier_scaling,
                 {{"basis", interval_spec(512, 257).to_json()},
                  {"x_basis_2d", interval_spec(256, 129).to_json()},
                  {"j_lo", 2},
                  {"j_hi", 6},
                  {"alphas", {0.0, 0.5, 1.0, -0.5}},
                  {"slope_tolerance", 0.15},
                  {"ratio_bound", 4.0}}});
    r.push_back({"exp_low_freq_decay", "low-frequency blocks and the spectral gap", exp_low_freq_decay,
                 {{"bases", json::array({interval_spec(256, 65).to_json(), rectangle_spec(16, 32, 0, kPi, 2 * kPi).to_json(),
                                         lshape_spec(0.125, 24).to_json()})},
                  {"fake_basis", interval_spec(256, 65).to_json()}}});
    r.push_back({"exp_heat_gaussian", "Gaussian upper bounds for e^{-tH} and P e^{-tH}", exp_heat_gaussian,
                 {{"basis", interval_spec(128, 0).to_json()},
                  {"basis_2d", rectangle_spec(16, 16, 0).to_json()},
                  {"include_2d", true},
                  {"t_count", 24},
                  {"t_max", 10.0},
                  {"tail_ratio", "inf"},
                  {"c_min", 0.5},
                  {"c_max", 500.0},
                  {"c_count", 200},
                  {"stability", 0.2}}});
    r.push_back({"exp_gradient", "||∇phi_j(√H)|| <= C 2^j and ||∇e^{-tH}|| <= C t^{-1/2}", exp_gradient,
                 {{"basis", interval_spec(256, 129).to_json()}, {"t_count", 24}, {"t_max", 10.0}, {"variation", 3.0}}});
    r.push_back({"exp_embeddings", "Besov embeddings, lifting and L^p comparisons", exp_embeddings,
                 {{"basis", interval_spec(512, 64).to_json()}, {"functions", 100}, {"stability", 0.1}}});
    r.push_back({"exp_duality", "|<f, g>| <= C ||f||_{B^s_{p,q}} ||g||_{B^-s_{p',q'}}", exp_duality,
                 {{"basis", interval_spec(512, 64).to_json()}, {"functions", 100}, {"stability", 0.1}}});
    r.push_back({"exp_leibniz", "fractional Leibniz rule in Besov norms", exp_leibniz,
                 {{"basis", interval_spec(256, 64).to_json()},
                  {"pairs", 100},
                  {"low_modes", 16},
                  {"stability", 0.25}}});
    r.push_back({"exp_partition_independence", "Besov norms under a change of partition", exp_partition_independence,
                 {{"basis", interval_spec(512, 64).to_json()}, {"functions", 100}, {"bound", 3.0}, {"stability", 0.1}}});
    r.push_back({"exp_amalgam", "resolvent into l^p(L^q)_theta and triple-norm scaling", exp_amalgam,
                 {{"basis", interval_spec(512, 257).to_json()},
                  {"theta_count", 8},
                  {"beta", 1.0},
                  {"M", 1.0},
                  {"p", 1.0},
                  {"q", 2.0},
                  {"alpha", 1.0},
                  {"slope_tolerance", 0.2},
                  {"probes", 64}}});
    r.push_back({"exp_resolvent_gamma", "(H + M)^{-beta} by the Gamma integral", exp_resolvent_gamma,
                 {{"basis", interval_spec(256, 129).to_json()},
                  {"betas", {0.5, 0.75, 1.0, 2.0}},
                  {"shifts", {0.5, 1.0, 2.0}},
                  {"nodes", 400},
                  {"tolerance", 1e-6}}});
    r.push_back({"exp_moment_decay", "vanishing moments vs low-frequency decay on the line", exp_moment_decay,
                 {{"R", 16384.0}, {"dx", 0.25}, {"j_lo", -8}, {"j_hi", -3}, {"max_order", 4}, {"tolerance", 0.5}, {"leakage", 1e-4}}});
    r.push_back({"neg_broken_partition", "phi_0 with support [0.4, 2]", neg_broken_partition,
                 {{"samples", 10000}, {"basis", interval_spec(512, 64).to_json()}}, true});
    r.push_back({"neg_fake_gap", "artificial eigenvalue 2^-12", neg_fake_gap,
                 {{"basis", interval_spec(256, 65).to_json()}, {"fake_eigenvalue", std::ldexp(1.0, -12)}}, true});
    r.push_back({"neg_reversed_inequality", "||f||_{B^1} <= C ||f||_{B^0}", neg_reversed_inequality,
                 {{"basis", interval_spec(512, 64).to_json()}, {"functions", 100}, {"stability", 0.1}}, true});
    return r;
  }();
  return registry;
}

const ExperimentInfo* find_experiment(const std::string& id) {
  for (const auto& e : experiment_registry())
    if (e.id == id) return &e;
  return nullptr;
}

ExperimentSpec make_spec(const std::string& id, const nlohmann::json& overrides) {
  const ExperimentInfo* info = find_experiment(id);
  require(info != nullptr, "unknown experiment '" + id + "'");
  ExperimentSpec spec;
  spec.id = id;
  spec.params = info->defaults;
  require(overrides.is_object(), "experiment overrides must be an object");
  for (const auto& [key, value] : overrides.items()) {
    require(spec.params.contains(key), "unknown parameter '" + key + "' for " + id);
    if (value.is_object() && spec.params[key].is_object()) BasisSpec::from_json(value);
    spec.params[key] = value;
  }
  return spec;
}

EstimateReport run_experiment(const ExperimentSpec& spec) {
  const ExperimentInfo* info = find_experiment(spec.id);
  require(info != nullptr, "unknown experiment '" + spec.id + "'");
  const auto start = std::chrono::steady_clock::now();
  EstimateReport r;
  try {
    r = info->run(spec);
  } catch (const std::exception& e) {
    r = EstimateReport{};
    r.require_true(std::string("completed without error: ") + e.what(), false);
  }
  r.id = spec.id;
  r.seed = spec.seed;
  nlohmann::json params = spec.params;
  for (const auto& [key, value] : r.params.items()) params[key] = value;
  params["pou"] = to_string(spec.variant);
  r.params = params;
  r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace nb
