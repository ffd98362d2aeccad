#include <doctest.h>

#include <cstdlib>

#include <omp.h>

#include "langevin/contractivity.hpp"
#include "langevin/integrators.hpp"
#include "langevin/parallel.hpp"
#include "langevin/targets.hpp"

using namespace langevin;

namespace {

// Oversubscribes on purpose so the parallel path really splits the work.
struct ThreadScope {
  int saved = omp_get_max_threads();
  explicit ThreadScope(int n) { omp_set_num_threads(n); }
  ~ThreadScope() { omp_set_num_threads(saved); }
};

bool same_state(const ChainState& a, const ChainState& b) {
  return a.v == b.v && a.x == b.x && a.n == b.n;
}

bool same_chains(const std::vector<ChainState>& a, const std::vector<ChainState>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same_state(a[i], b[i])) return false;
  return true;
}

Target logistic_target() {
  const LogisticData data = synthetic_logistic_data(30, 3, 8);
  return make_ridge_logistic_target(data.features, data.labels, 0.5);
}

}  // namespace

TEST_CASE("parallel simulate is bit-identical to the serial reference") {
  ThreadScope threads(4);
  const Target t = logistic_target();
  for (Scheme s : {Scheme::EM, Scheme::EE, Scheme::UBU, Scheme::BUB}) {
    const SchemeStep st = make_scheme(s, 2.0, 1.0 / t.L(), 0.3);
    const InitialSampler init = gaussian_initial(3, s != Scheme::EM, 1.0 / t.L(), 1.0);
    const Ensemble par = simulate(st, t, init, 60, 37, 2024);
    const Ensemble ser = simulate_serial(st, t, init, 60, 37, 2024);
    CHECK(same_chains(par.chains, ser.chains));

    SimulationOptions thin;
    thin.thin = 7;
    SimulationOptions thin_serial = thin;
    thin_serial.parallel = false;
    const Ensemble a = simulate(st, t, init, 60, 37, 2024, thin);
    const Ensemble b = simulate(st, t, init, 60, 37, 2024, thin_serial);
    REQUIRE(a.snapshots.size() == 8);
    CHECK(a.snapshot_steps == b.snapshot_steps);
    for (std::size_t k = 0; k < a.snapshots.size(); ++k) CHECK(same_chains(a.snapshots[k], b.snapshots[k]));
    CHECK(same_chains(a.chains, ser.chains));
  }
}

TEST_CASE("results do not depend on the thread count") {
  Vector spec(2);
  spec << 1, 9;
  const Target t = make_gaussian_target(spec);
  const SchemeStep st = make_scheme(Scheme::UBU, 2.0, 1.0 / 9, 0.5);
  const InitialSampler init = gaussian_initial(2, true, 1.0 / 9, 1.0);
  std::vector<ChainState> first;
  for (int n : {1, 2, 3, 8}) {
    ThreadScope threads(n);
    const Ensemble e = simulate(st, t, init, 40, 25, 5);
    if (first.empty())
      first = e.chains;
    else
      CHECK(same_chains(first, e.chains));
  }
}

TEST_CASE("parallel rate table matches the serial one") {
  ThreadScope threads(4);
  const std::vector<CChoice> cs = {CChoice::parse("1/L"), CChoice::parse("2/(L+m)")};
  const std::vector<double> hs = {1.0, 0.25};
  const auto par = table1({1e3, 1e9}, cs, hs, 1.0, 2.0, {Scheme::EE, Scheme::UBU}, true);
  const auto ser = table1({1e3, 1e9}, cs, hs, 1.0, 2.0, {Scheme::EE, Scheme::UBU}, false);
  REQUIRE(par.size() == ser.size());
  for (std::size_t k = 0; k < par.size(); ++k) {
    REQUIRE(par[k].cells.size() == ser[k].cells.size());
    for (std::size_t i = 0; i < par[k].cells.size(); ++i) {
      CHECK(par[k].cells[i].report.rate == ser[k].cells[i].report.rate);
      CHECK(par[k].cells[i].report.contractive == ser[k].cells[i].report.contractive);
    }
  }
}

TEST_CASE("parallel strong-order harness matches the serial one") {
  ThreadScope threads(4);
  const Target t = logistic_target();
  StrongOrderOptions serial;
  serial.parallel = false;
  const ForceScale c(1.0 / t.L());
  const StrongOrderReport a = strong_order_test(Scheme::UBU, 2.0, c, t, {0.4, 0.2}, 64, 1.6, 3);
  const StrongOrderReport b = strong_order_test(Scheme::UBU, 2.0, c, t, {0.4, 0.2}, 64, 1.6, 3, serial);
  CHECK(a.rms_error == b.rms_error);
  CHECK(a.slope == b.slope);
}

TEST_CASE("thread limit from the environment") {
  const int saved = omp_get_max_threads();
  setenv("LANGEVIN_THREADS", "3", 1);
  CHECK(apply_thread_limit_from_env() == 3);
  CHECK(max_threads() == 3);
  setenv("LANGEVIN_THREADS", "zero", 1);
  CHECK(apply_thread_limit_from_env() == 3);
  setenv("LANGEVIN_THREADS", "-2", 1);
  CHECK(apply_thread_limit_from_env() == 3);
  setenv("LANGEVIN_THREADS", "2x", 1);
  CHECK(apply_thread_limit_from_env() == 3);
  unsetenv("LANGEVIN_THREADS");
  omp_set_num_threads(saved);
  CHECK(apply_thread_limit_from_env() == saved);
}
