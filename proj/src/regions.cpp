#include "wiretap/regions.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>
#include <utility>

namespace wiretap {
namespace {

int env_threads() {
  const char* s = std::getenv("WIRETAP_OPT_THREADS");
  if (!s) return 1;
  char* end = nullptr;
  long v = std::strtol(s, &end, 10);
  if (end == s || v < 1) return 1;
  return static_cast<int>(std::min<long>(v, 64));
}

bool solved(const SecrecySolution& sol) {
  return sol.status == SolveStatus::optimal || sol.status == SolveStatus::iteration_limit;
}

// Floors at or below the receiver noise power are vacuous and left out.
PowerSpec floors_spec(const WiretapChannel& ch, double p, double e1, double e2) {
  PowerSpec spec = PowerSpec::unconstrained(p);
  if (e1 > ch.ne()) spec.set_eve(ch, BoundKind::min, e1);
  if (e2 > ch.nr()) spec.set_bob(ch, BoundKind::min, e2);
  return spec;
}

// Preference between a warm-started sample and its cold re-solve: a solved run
// beats an unsolved one, a certified one beats an iteration-limited one, then
// the higher rate wins.
bool better_sample(const SecrecySolution& a, const SecrecySolution& b) {
  if (solved(a) != solved(b)) return solved(a);
  if (!solved(a)) return false;
  if ((a.status == SolveStatus::optimal) != (b.status == SolveStatus::optimal))
    return a.status == SolveStatus::optimal;
  return a.rate_nats > b.rate_nats;
}

}  // namespace

RegionCurve sweep_energy(const WiretapChannel& ch, double p, const std::vector<double>& e_grid,
                         Scheme scheme, Receiver r, BoundKind kind, const SolverConfig& cfg) {
  for (std::size_t i = 1; i < e_grid.size(); ++i)
    if (e_grid[i] < e_grid[i - 1])
      throw std::invalid_argument("sweep_energy: e_grid must be ascending");

  RegionCurve curve;
  curve.scheme = scheme;
  curve.swept = r;
  curve.kind = kind;
  curve.samples.resize(e_grid.size());

  auto spec_at = [&](double level) {
    PowerSpec spec = PowerSpec::unconstrained(p);
    if (r == Receiver::eve)
      spec.set_eve(ch, kind, level);
    else
      spec.set_bob(ch, kind, level);
    return spec;
  };

  const int threads = std::min<int>(env_threads(), static_cast<int>(e_grid.size()));
  if (threads > 1) {
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= e_grid.size()) return;
        curve.samples[i].e_level = e_grid[i];
        curve.samples[i].sol = solve_secrecy(ch, spec_at(e_grid[i]), scheme, cfg);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  } else {
    std::optional<CovariancePair> prev;
    double prev_rate = std::nan("");
    for (std::size_t i = 0; i < e_grid.size(); ++i) {
      PowerSpec spec = spec_at(e_grid[i]);
      SecrecySolution sol;
      bool warm_ok = false;
      if (prev) {
        SolverConfig warm = cfg;
        warm.start = prev;
        warm.restarts = 0;
        sol = solve_secrecy(ch, spec, scheme, warm);
        // A sharp one-step drop may be a lost branch rather than the curve
        // bending; confirm it against a cold multistart.
        bool drop = solved(sol) && std::isfinite(prev_rate) &&
                    sol.rate_nats < prev_rate - 0.2 * (1 + std::abs(prev_rate));
        warm_ok = sol.status == SolveStatus::optimal && !drop;
      }
      if (!warm_ok) {
        SecrecySolution cold = solve_secrecy(ch, spec, scheme, cfg);
        if (!prev || !better_sample(sol, cold)) sol = std::move(cold);
      }
      if (solved(sol)) {
        prev = sol.pair;
        prev_rate = sol.rate_nats;
      } else {
        prev.reset();
        prev_rate = std::nan("");
      }
      curve.samples[i].e_level = e_grid[i];
      curve.samples[i].sol = std::move(sol);
    }
  }

  double last = std::nan("");
  for (const auto& sample : curve.samples) {
    if (!solved(sample.sol)) continue;
    double rate = sample.sol.rate_nats;
    if (std::isfinite(last)) {
      bool bad = kind == BoundKind::min ? rate > last + 1e-6 : rate < last - 1e-6;
      if (bad) curve.monotone = false;
    }
    last = rate;
  }
  return curve;
}

RegionCurve sweep_min_energy(const WiretapChannel& ch, double p, const std::vector<double>& e_grid,
                             Scheme scheme, const SolverConfig& cfg) {
  return sweep_energy(ch, p, e_grid, scheme, Receiver::eve, BoundKind::min, cfg);
}

SecrecySolution solve_dual_min(const WiretapChannel& ch, double p, double e1, double e2,
                               Scheme scheme, const SolverConfig& cfg) {
  return solve_secrecy(ch, floors_spec(ch, p, e1, e2), scheme, cfg);
}

SecrecySolution solve_max_constraints(const WiretapChannel& ch, double p, double e1_cap,
                                      double e2_cap, const SolverConfig& cfg) {
  if (e1_cap < ch.ne() || e2_cap < ch.nr())
    throw std::invalid_argument(
        "solve_max_constraints: caps must be at least the receiver noise power");
  PowerSpec spec = PowerSpec::unconstrained(p);
  spec.set_eve(ch, BoundKind::max, e1_cap);
  spec.set_bob(ch, BoundKind::max, e2_cap);
  return solve_secrecy(ch, spec, Scheme::plain, cfg);
}

std::vector<WeightedPoint> bc_dpc_region(const WiretapChannel& ch, double p, double e1, double e2,
                                         int weight_count, const SolverConfig& cfg) {
  if (weight_count < 2)
    throw std::invalid_argument("bc_dpc_region: weight_count must be at least 2");
  PowerSpec spec = floors_spec(ch, p, e1, e2);
  std::vector<WeightedPoint> out;
  out.reserve(2 * static_cast<std::size_t>(weight_count));
  const DpcOrder orders[] = {DpcOrder::user1_first, DpcOrder::user2_first};
  std::optional<CovariancePair> prev[2];
  for (int i = 0; i < weight_count; ++i) {
    double a1 = static_cast<double>(i) / (weight_count - 1);
    double a2 = 1 - a1;
    for (int k = 0; k < 2; ++k) {
      WeightedPoint pt;
      pt.a1 = a1;
      pt.a2 = a2;
      pt.order = orders[k];
      SecrecySolution sol;
      bool warm_ok = false;
      if (prev[k]) {
        SolverConfig warm = cfg;
        warm.start = prev[k];
        warm.restarts = 0;
        sol = solve_bc_weighted(ch, spec, a1, a2, orders[k], warm);
        warm_ok = sol.status == SolveStatus::optimal;
      }
      if (!warm_ok) {
        SecrecySolution cold = solve_bc_weighted(ch, spec, a1, a2, orders[k], cfg);
        if (!prev[k] || !better_sample(sol, cold)) sol = std::move(cold);
      }
      if (solved(sol)) {
        prev[k] = sol.pair;
        pt.pair = sol.pair;
        pt.rates = dpc_rates(ch, sol.pair, orders[k]);
      } else {
        prev[k].reset();
      }
      pt.status = sol.status;
      out.push_back(std::move(pt));
    }
  }
  return out;
}

BccmCorner bccm_corner(const WiretapChannel& ch, double p, double e1, double e2,
                       const SolverConfig& cfg) {
  BccmCorner out;
  out.r1_solve = solve_secrecy(ch, floors_spec(ch, p, e1, e2), Scheme::mean, cfg);
  out.status = out.r1_solve.status;
  if (!solved(out.r1_solve)) return out;

  const CovariancePair& pair = out.r1_solve.pair;
  out.rates = bccm_rates(ch, pair);
  Mat s = pair.s();
  // The pair's second rate equals the first plus a log-det offset that depends
  // only on the total covariance.
  double offset = rate_mean(swap_roles(ch), s);
  out.decomposition_residual = std::abs(out.rates.r2 - (out.rates.r1 + offset));
  out.r2_standalone = solve_mean_under_total(swap_roles(ch), s, cfg).objective_raw;
  return out;
}

}  // namespace wiretap
