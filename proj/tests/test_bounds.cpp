#include <doctest.h>

#include <cmath>

#include "langevin/bounds.hpp"
#include "langevin/errors.hpp"
#include "langevin/rng.hpp"

using namespace langevin;

TEST_CASE("absolute constants") {
  CHECK(constant_K() == doctest::Approx((1 + std::sqrt(5.0)) / 3).epsilon(1e-15));
  CHECK(constant_K() == doctest::Approx(1.0786893).epsilon(1e-7));
  CHECK(constant_K0() == doctest::Approx(std::sqrt(2 * std::sqrt(2.0) / (3 - std::sqrt(5.0)))));
  CHECK(constant_K1() == doctest::Approx(std::sqrt(3.0) / 12));
}

TEST_CASE("EE constants") {
  const double L = 40;
  const BoundParams b = constants_ee(1 / L, L, 9);
  CHECK(b.p == 1);
  CHECK(b.C0 == 0.0);
  CHECK(b.C1 == 0.0);
  CHECK(b.C2 == doctest::Approx(constant_K() * 3 / std::sqrt(L)).epsilon(1e-14));
  CHECK(b.h0 == 1.0);
  CHECK(constants_ee(1 / L, L, 0).C2 == 0.0);
  CHECK_THROWS_AS(constants_ee(0.0, L, 1), InvalidParameter);
}

TEST_CASE("UBU constants") {
  const double L = 25;
  const BoundParams b = constants_ubu(1 / L, L, 0.0, 4);
  CHECK(b.p == 2);
  CHECK(b.h0 == 2.0);
  CHECK(b.C0 == doctest::Approx(3 * constant_K0()).epsilon(1e-15));
  CHECK(b.C1 == doctest::Approx(constant_K1() * 2 / std::sqrt(L)).epsilon(1e-14));
  const double sum = 1 + 4 * std::sqrt(3.0) + 3 + std::sqrt(42.0) / 2 + 6;
  CHECK(b.C2 == doctest::Approx(constant_K2() * sum * 2 / std::sqrt(L)).epsilon(1e-14));
  CHECK(constants_ubu(1 / L, L, 7.0, 4).C2 > b.C2);

  const BoundParams f = constants_ubu(1 / L, L, std::nullopt, 4);
  CHECK(f.p == 1);
  CHECK(f.C0 == 0.0);
  CHECK(f.C1 == 0.0);
  CHECK(f.C2 > 0.0);
  // The order-one constant scales like d^{1/2} / sqrt(L) at c = 1/L.
  CHECK(constants_ubu(1 / (4 * L), 4 * L, std::nullopt, 16).C2 == doctest::Approx(f.C2).epsilon(1e-13));
  CHECK(constants_ubu(1 / L, L, 0.0, 0).C2 == 0.0);
  CHECK_THROWS_AS(constants_ubu(1 / L, L, -1.0, 4), InvalidParameter);
}

TEST_CASE("R_h example and properties") {
  BoundParams b;
  b.r = 0.5;
  b.C0 = 1.0;
  CHECK(b.R(0.1) == doctest::Approx((1 - std::sqrt(0.9025 + 0.01)) / 0.1).epsilon(1e-14));
  CHECK(b.R(0.1) == doctest::Approx(0.447513).epsilon(1e-6));

  b.C0 = 0.0;
  for (double h : {1e-6, 0.1, 1.0, 1.9}) CHECK(b.R(h) == doctest::Approx(0.5).epsilon(1e-14));

  GaussianStream sm(3, 0);
  for (int trial = 0; trial < 200; ++trial) {
    BoundParams q;
    q.r = 0.01 + 0.48 * sm.uniform();
    q.C0 = 1e-3 + 3 * sm.uniform();
    double prev = -INFINITY;
    for (double h = 1.0; h > 1e-6; h /= 3) {
      const double R = q.R(h);
      CHECK(R < q.r);
      CHECK(R > prev);
      prev = R;
    }
    CHECK(q.R(1e-9) == doctest::Approx(q.r).epsilon(1e-6));
  }
}

TEST_CASE("mixing bound") {
  BoundParams pure;
  pure.r = 0.3;
  pure.h0 = 1.0;
  for (int n : {0, 1, 10, 200})
    CHECK(mixing_bound(pure, 2.5, 0.5, n) == doctest::Approx(std::pow(1 - 0.15, n) * 2.5).epsilon(1e-13));

  BoundParams b = constants_ubu(0.1, 10, 1.0, 3, 0.045);
  b.h0 = 0.5;
  const double h = 0.005;
  double prev = INFINITY;
  for (int n = 0; n < 3000; n += 37) {
    const double v = mixing_bound(b, 1.0, h, n);
    CHECK(v >= 0.0);
    CHECK(v <= prev);
    prev = v;
  }
  CHECK(mixing_bound(b, 1.0, h, 1'000'000'000) == doctest::Approx(b.bias(h)).epsilon(1e-12));
  CHECK(mixing_bound(b, 2.0, h, 50) >= mixing_bound(b, 1.0, h, 50));
  BoundParams more = b;
  more.C1 *= 2;
  CHECK(mixing_bound(more, 1.0, h, 50) >= mixing_bound(b, 1.0, h, 50));
  more = b;
  more.C2 *= 2;
  CHECK(mixing_bound(more, 1.0, h, 50) >= mixing_bound(b, 1.0, h, 50));

  CHECK_THROWS_AS(mixing_bound(b, 1.0, 0.6, 10), InvalidParameter);
  BoundParams blow = b;
  blow.C0 = 100;
  CHECK_THROWS_AS(mixing_bound(blow, 1.0, 0.5, 10), BoundUnavailable);
}

TEST_CASE("plans re-substitute below eps") {
  for (Scheme s : {Scheme::EE, Scheme::UBU})
    for (double eps : {1e-4, 1e-2, 0.5})
      for (double kappa : {1.0, 10.0, 1e3})
        for (int d : {1, 50}) {
          PlanRequest q;
          q.scheme = s;
          q.eps = eps;
          q.kappa = kappa;
          q.d = d;
          q.W0 = 3.0;
          if (s == Scheme::UBU && d == 50) q.L1 = 0.0;
          const MixingPlan p = plan(q);
          CHECK(p.n >= 1);
          CHECK(p.h > 0.0);
          CHECK(p.h <= p.params.h0);
          CHECK(p.bound <= eps);
          CHECK(mixing_bound(p.params, q.W0, p.h, p.n) <= eps);
          CHECK(p.bound == doctest::Approx(p.contraction + p.bias).epsilon(1e-12));
        }
}

TEST_CASE("plan examples") {
  PlanRequest q;
  q.scheme = Scheme::EE;
  q.eps = 1e-3;
  q.kappa = 100;
  q.d = 4;
  const MixingPlan small = plan(q);
  q.d = 16;
  const MixingPlan big = plan(q);
  CHECK(small.limiting == "bias");
  CHECK(big.h == doctest::Approx(small.h / 2).epsilon(1e-12));
  CHECK(static_cast<double>(big.n) / small.n == doctest::Approx(2.0).epsilon(1e-6));

  PlanRequest loose;
  loose.eps = 1e12;
  for (Scheme s : {Scheme::EE, Scheme::UBU}) {
    loose.scheme = s;
    const MixingPlan p = plan(loose);
    CHECK(p.n == 1);
    CHECK(p.h == p.params.h0);
    CHECK(p.limiting == "h0");
  }

  PlanRequest ubu;
  ubu.scheme = Scheme::UBU;
  ubu.L1 = 0.0;
  ubu.eps = 1e-6;
  ubu.kappa = 10;
  const MixingPlan u = plan(ubu);
  REQUIRE(u.K_bar.has_value());
  CHECK(*u.K_bar > 0.0);
  ubu.L1.reset();
  CHECK_FALSE(plan(ubu).K_bar.has_value());

  PlanRequest computed = ubu;
  computed.use_computed_rate = true;
  const MixingPlan c = plan(computed);
  CHECK(c.rate_iterations >= 1);
  CHECK(c.bound <= computed.eps);

  PlanRequest bad;
  bad.eps = 0.0;
  CHECK_THROWS_AS(plan(bad), InvalidParameter);
  bad = PlanRequest{};
  bad.r_bar = 0.5;
  CHECK_THROWS_AS(plan(bad), InvalidParameter);
  bad = PlanRequest{};
  bad.scheme = Scheme::BUB;
  CHECK_THROWS_AS(plan(bad), InvalidParameter);
}

TEST_CASE("plan JSON echoes inputs") {
  PlanRequest q;
  q.scheme = Scheme::EE;
  q.eps = 0.02;
  q.kappa = 30;
  q.d = 7;
  const nlohmann::json j = to_json(plan(q));
  CHECK(j["inputs"]["scheme"] == "EE");
  CHECK(j["inputs"]["eps"] == 0.02);
  CHECK(j["inputs"]["d"] == 7);
  CHECK(j["inputs"]["L1"].is_null());
  CHECK(j["L"] == 30.0);
  CHECK(j.contains("constants"));
  CHECK(j["K_bar"].is_null());
}

TEST_CASE("recursion lemma") {
  const RecursionCheck exact = gronwall_recursion_check(0.2, 0.0, 0.0, 5.0, 40);
  for (int k = 0; k <= 40; ++k) {
    CHECK(exact.z[k] == doctest::Approx(5.0 * std::pow(0.8, k)).epsilon(1e-13));
    CHECK(exact.bound[k] == doctest::Approx(exact.z[k]).epsilon(1e-13));
  }
  CHECK(exact.holds);

  const RecursionCheck ex = gronwall_recursion_check(0.1, 0.01, 0.001, 1.0, 500);
  CHECK(ex.holds);
  CHECK(ex.z.size() == 501);
  for (std::size_t k = 0; k < ex.z.size(); ++k) CHECK(ex.z[k] <= ex.bound[k]);

  GaussianStream sm(11, 0);
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double A = 1e-3 + 0.998 * sm.uniform();
    const double B = std::pow(10.0, -6 + 6 * sm.uniform());
    const double C = std::pow(10.0, -6 + 6 * sm.uniform());
    const double z0 = 10 * sm.uniform();
    failures += gronwall_recursion_check(A, B, C, z0, 200).holds ? 0 : 1;
  }
  CHECK(failures == 0);

  CHECK_THROWS_AS(gronwall_recursion_check(0.0, 1, 1, 1, 10), InvalidParameter);
  CHECK_THROWS_AS(gronwall_recursion_check(1.0, 1, 1, 1, 10), InvalidParameter);
  CHECK_THROWS_AS(gronwall_recursion_check(0.5, -1, 1, 1, 10), InvalidParameter);
}
