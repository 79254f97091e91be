// Acceptance run: one PASS/FAIL line per criterion. Experiments come from the
// library registry; tolerances and time limits are re-applied here to the raw
// check values. The nb executable (first argument) drives the negative controls.
#include "nb/experiments.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

using namespace nb;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int number;
  std::string title;
  double time_limit;  // seconds; 0 means no limit
  std::function<Outcome()> evaluate;
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

// Gathers checks whose names contain every fragment and compares them with a
// criterion tolerance. An empty selection fails, so renamed checks cannot pass
// silently.
class Selection {
 public:
  Selection(const EstimateReport& r, std::vector<std::string> fragments) {
    for (const Check& c : r.checks) {
      bool match = true;
      for (const auto& f : fragments) match = match && contains(c.name, f);
      if (match) values_.push_back(c.value);
    }
  }

  // Every value in [lo, hi].
  void within(Outcome& o, double lo, double hi, const std::string& label) const {
    if (values_.empty()) {
      o.pass = false;
      o.detail += label + ": no matching checks; ";
      return;
    }
    double mn = values_.front(), mx = values_.front();
    for (double v : values_) {
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    const bool ok = mn >= lo && mx <= hi;
    o.pass = o.pass && ok;
    o.detail += label + " " + (values_.size() > 1 ? "[" + num(mn) + ", " + num(mx) + "]" : num(mx)) + "; ";
  }
  void below(Outcome& o, double hi, const std::string& label) const {
    within(o, -std::numeric_limits<double>::infinity(), hi, label + " (< " + num(hi) + ")");
  }

 private:
  std::vector<double> values_;
};

EstimateReport run(const std::string& id, Outcome& o) {
  EstimateReport r = run_experiment(make_spec(id));
  if (r.verdict() != Verdict::pass) {
    o.pass = false;
    o.detail += id + " verdict " + to_string(r.verdict()) + "; ";
  }
  return r;
}

std::string g_nb;

int run_cli(const std::string& args) {
  const std::string command = "'" + g_nb + "' " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<Criterion> criteria() {
  return {
      {1, "partition identities, both variants", 1.0,
       [] {
         Outcome o;
         const EstimateReport r = run("exp_partition", o);
         Selection(r, {"max |sum_j phi_j - 1|"}).below(o, 1e-10, "sum phi_j");
         Selection(r, {"max |psi(l^2) + sum_{j>=1} phi_j - 1|"}).below(o, 1e-10, "psi + sum");
         o.detail += "samples " + r.params["samples"].dump() + "; ";
         return o;
       }},
      {2, "reconstruction residuals, interval and rectangle", 30.0,
       [] {
         Outcome o;
         const EstimateReport r = run("exp_reconstruction", o);
         Selection(r, {"interval", "max", "residual"}).below(o, 1e-8, "interval");
         Selection(r, {"rectangle", "max", "residual"}).below(o, 1e-8, "rectangle");
         return o;
       }},
      {3, "projected semigroup L2 decay", 1.0,
       [] {
         Outcome o;
         const EstimateReport r = run("exp_heat_l2", o);
         Selection(r, {"max |||P e^{-tH}||_{2->2} - e^{-lambda_2 t}|"}).below(o, 1e-10, "|norm - e^{-lambda_2 t}|");
         o.detail += "t values " + r.params["t_count"].dump() + "; ";
         return o;
       }},
      {4, "multiplier L1->Linf scaling, 1-D and 2-D", 120.0,
       [] {
         Outcome o;
         const EstimateReport r = run("exp_multiplier_scaling", o);
         Selection(r, {"1d (p,q,alpha)=(1,inf", "|slope"}).below(o, 0.15, "1-D |slope - (n+2a)|");
         Selection(r, {"2d (p,q,alpha)=(1,inf", "|slope"}).below(o, 0.15, "2-D |slope - (n+2a)|");
         return o;
       }},
      {5, "heat Gaussian bound and refinement stability", 120.0,
       [] {
         Outcome o;
         const EstimateReport r = run("exp_heat_gaussian", o);
         Selection(r, {": Gaussian bound violations"}).below(o, 0.5, "violations");
         Selection(r, {"refinement drift of C"}).below(o, 0.2, "drift");
         return o;
       }},
      {6, "gradient bounds finite with variation below 3", 120.0,
       [] {
         Outcome o;
         const EstimateReport r = run("exp_gradient", o);
         Selection(r, {"2^{-j} ||∇phi_j(√H)||_{2->2}: max/min"}).within(o, 1.0, 3.0, "blocks max/min");
         Selection(r, {"t^{1/2} ||∇e^{-tH}||_{inf->inf}: max/min"}).within(o, 1.0, 3.0, "heat max/min");
         Selection(r, {"sup_{t in [1, t_max]}"}).below(o, 1.0, "large-t sup / small-t sup");
         return o;
       }},
      {7, "partition independence of Besov norms", 120.0,
       [] {
         Outcome o;
         const EstimateReport r = run("exp_partition_independence", o);
         Selection(r, {"||f||_perturbed / ||f||_standard"}).within(o, 1.0 / 3.0, 3.0, "ratios");
         Selection(r, {"max refinement drift"}).below(o, 0.1, "drift");
         return o;
       }},
      {8, "fractional Leibniz constant stability", 300.0,
       [] {
         Outcome o;
         const EstimateReport r = run("exp_leibniz", o);
         // C / C_ref <= 1.25 also means no refined or swapped sample exceeds 1.25 C_ref.
         Selection(r, {"max C / C_ref"}).within(o, 0.0, 1.25, "max C/C_ref");
         Selection(r, {"min C / C_ref"}).within(o, 1.0 / 1.25, 1e300, "min C/C_ref");
         o.detail += "pairs " + r.params["pairs"].dump() + "; ";
         return o;
       }},
      {9, "amalgam and resolvent theta slopes", 180.0,
       [] {
         Outcome o;
         const EstimateReport r = run("exp_amalgam", o);
         Selection(r, {"resolvent L^1 -> l^1(L^2): |slope"}).below(o, 0.2, "amalgam slope error");
         Selection(r, {"triple norm (alpha", "|slope"}).below(o, 0.2, "triple-norm slope error");
         return o;
       }},
      {10, "low-frequency decay vs vanishing moments", 60.0,
       [] {
         Outcome o;
         const EstimateReport r = run("exp_moment_decay", o);
         for (int m = 0; m <= 3; ++m)
           Selection(r, {"M=" + std::to_string(m) + ":", "|decay exponent - M|"})
               .below(o, 0.5, "M=" + std::to_string(m));
         return o;
       }},
      {11, "resolvent Gamma formula", 10.0,
       [] {
         Outcome o;
         const EstimateReport r = run("exp_resolvent_gamma", o);
         Selection(r, {"max relative L^2 error"}).below(o, 1e-6, "relative error");
         o.detail += "betas " + r.params["betas"].dump() + " shifts " + r.params["shifts"].dump() + "; ";
         return o;
       }},
      {12, "negative controls exit 3 through the CLI", 0.0,
       [] {
         Outcome o;
         const fs::path out = fs::temp_directory_path() / "nb_acceptance";
         for (const std::string id : {"neg_broken_partition", "neg_fake_gap", "neg_reversed_inequality"}) {
           const int code = run_cli("verify --only " + id + " --output '" + (out / id).string() + "'");
           o.pass = o.pass && code == 3;
           o.detail += id + " exit " + std::to_string(code) + "; ";
         }
         return o;
       }},
  };
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path to nb>\n";
    return 1;
  }
  g_nb = fs::absolute(argv[1]).string();
  int failures = 0;
  for (const Criterion& c : criteria()) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.evaluate();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what() + "; ";
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.time_limit <= 0.0 || seconds < c.time_limit;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("%s %2d %s: %s%.2f s%s\n", pass ? "PASS" : "FAIL", c.number, c.title.c_str(), o.detail.c_str(),
                seconds, c.time_limit > 0.0 ? (" (limit " + num(c.time_limit) + " s)").c_str() : "");
    std::fflush(stdout);
  }
  std::printf("%d of 12 criteria passed\n", 12 - failures);
  return failures == 0 ? 0 : 1;
}
