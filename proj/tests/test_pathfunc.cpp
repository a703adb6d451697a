#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

#include "rwre/pathfunc.hpp"

using namespace rwre;

namespace {

Eigen::VectorXd vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> random_walk_array(Xoshiro256& rng, std::size_t n, bool integer_steps) {
  std::vector<double> v(n);
  double x = 0.0;
  for (auto& e : v) {
    x += integer_steps ? double(int(rng() % 5) - 2) : rng.uniform() - 0.5;
    e = x;
  }
  return v;
}

PotentialPath path_from(const std::vector<double>& v) {
  PotentialPath p;
  p.values = vec(v);
  p.scaled_brownian = p.values;
  return p;
}

}  // namespace

TEST_CASE("draw functionals on small arrays") {
  CHECK(drawup(vec({5, 4, 3})) == 0.0);
  CHECK(drawup(vec({0, -1, 2, 0, 3})) == 4.0);
  CHECK(drawup(vec({2, 2, 2})) == 0.0);
  CHECK(drawdown(vec({3, 4, 5})) == 0.0);
  CHECK(drawdown(vec({0, -1, 2, 0, 3})) == 2.0);
  CHECK_THROWS_AS(drawup(Eigen::VectorXd()), ArgumentError);
  CHECK_THROWS_AS(drawdown(Eigen::VectorXd()), ArgumentError);
}

TEST_CASE("draw functionals match the brute-force definitions") {
  Xoshiro256 rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng() % 300;
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform() * 10.0 - 5.0;
    const auto e = vec(v);
    REQUIRE(drawup(e) == oracle::drawup(v));
    REQUIRE(drawdown(e) == oracle::drawdown(v));
    DrawupAccumulator<double> acc(v[0]);
    for (std::size_t i = 1; i < n; ++i) acc.push(v[i]);
    REQUIRE(acc.value() == drawup(e));
  }
}

TEST_CASE("draw functional symmetries and range bound") {
  Xoshiro256 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto v = random_walk_array(rng, 1 + rng() % 200, false);
    const auto e = vec(v);
    const Eigen::VectorXd rev = e.reverse();
    const Eigen::VectorXd neg = -e;
    const Eigen::VectorXd shifted = e.array() + 3.0;
    CHECK(drawdown(e) == drawup(rev));
    CHECK(drawup(e) == drawdown(neg));
    CHECK(drawup(shifted) == doctest::Approx(drawup(e)));
    CHECK(drawdown(shifted) == doctest::Approx(drawdown(e)));
    const auto st = interval_stats(e);
    CHECK(st.max_draw() <= e.maxCoeff() - e.minCoeff());
    CHECK(st.drawup >= 0.0);
    CHECK(st.drawdown >= 0.0);
  }
}

TEST_CASE("interval statistics") {
  const auto v = interval_stats(vec({2, 0, 2}));
  CHECK(v.drawup == 2.0);
  CHECK(v.drawdown == 2.0);
  CHECK(v.barrier() == 2.0);
  CHECK(v.max_draw() == 2.0);
  CHECK(v.argmax_index == 0);
  CHECK(interval_stats(vec({1, 2, 3, 4})).barrier() == 0.0);
  CHECK(interval_stats(vec({0, 5, 1, 5, 5}), 1, 4).argmax_index == 1);
  CHECK(interval_stats(vec({9, 1, 3, 3}), 1, 3).argmax_index == 2);
  CHECK_THROWS_AS(interval_stats(vec({1, 2}), 1, 0), ArgumentError);
  CHECK_THROWS_AS(interval_stats(vec({1, 2}), 0, 2), RangeError);
  // Works on integer-valued Eigen expressions too.
  Eigen::VectorXi iv(4);
  iv << 3, 1, 4, 1;
  CHECK(drawup(iv) == 3);
  CHECK(drawdown(iv.cast<double>()) == 3.0);
}

TEST_CASE("greedy partition equals the exhaustive search") {
  CHECK(oracle::partition_exists({0, -3, 0, -3, 0}, 0, 4, 2, 2.0, false));
  CHECK(greedy_partition_count(vec({0, -3, 0, -3, 0}), 0, 4, DrawKind::down, 2.0, 2) == 2);
  Xoshiro256 rng(77);
  int positives = 0;
  for (std::size_t n = 2; n <= 30; ++n) {
    for (int trial = 0; trial < 60; ++trial) {
      const auto v = random_walk_array(rng, n, trial % 2 == 0);
      const auto e = vec(v);
      for (int pieces = 1; pieces <= 3; ++pieces) {
        for (double thr : {0.5, 1.0, 2.0, 3.0}) {
          for (bool up : {true, false}) {
            const bool greedy =
                greedy_partition_count(e, 0, Eigen::Index(n - 1), up ? DrawKind::up : DrawKind::down, thr, pieces) >=
                pieces;
            const bool exhaustive = oracle::partition_exists(v, 0, n - 1, pieces, thr, up);
            REQUIRE(greedy == exhaustive);
            positives += exhaustive;
          }
        }
      }
    }
  }
  CHECK(positives > 1000);  // the sweep exercises both outcomes
}

TEST_CASE("N = 1 partition is the whole-interval functional") {
  Xoshiro256 rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    const auto v = random_walk_array(rng, 2 + rng() % 100, false);
    const auto e = vec(v);
    const double thr = 2.0 * rng.uniform();
    CHECK((greedy_partition_count(e, 0, e.size() - 1, DrawKind::down, thr, 1) == 1) == (drawdown(e) > thr));
    CHECK((greedy_partition_count(e, 0, e.size() - 1, DrawKind::up, thr, 1) == 1) == (drawup(e) > thr));
  }
}

TEST_CASE("scale function") {
  ScaleParams p{0.4, 1.0, 1.0};
  CHECK(p.cstar() == doctest::Approx(4.0));
  CHECK(ScaleParams{0.25, 0.75, 1.0}.cstar() == doctest::Approx(0.75));
  // cstar = 1 at alpha = 0.4 needs b = 0.25
  const ScaleParams unit{0.4, 0.25, 1.0};
  CHECK(unit.cstar() == doctest::Approx(1.0));
  CHECK(scale_s(unit, std::exp(std::exp(1.0))) == doctest::Approx(std::exp(2.5)).epsilon(1e-13));
  CHECK_THROWS_AS(scale_s(p, std::exp(1.0)), DomainError);
  CHECK_THROWS_AS(scale_s(p, 2.0), DomainError);
  double prev = 0.0;
  for (double lt = std::exp(2.0); lt < 700.0; lt *= 1.05) {
    const double s = scale_s(p, std::exp(lt));
    CHECK(s > prev);
    prev = s;
    const double back = std::pow(s, p.alpha) * std::log(lt) / lt;
    CHECK(std::abs(back / p.cstar() - 1.0) <= 1e-12);
  }
  CHECK(scale_s(p, 1e6) == doctest::Approx(2032.0).epsilon(1e-3));
}

TEST_CASE("tangent drift is the derivative of the drift term") {
  CHECK(tangent_drift({0.5 - 1e-12, 1.0, 1.0}, 1e6, 4.0) == doctest::Approx(-0.5));
  CHECK_THROWS_AS(tangent_drift({0.4, 1.0, 1.0}, 1e6, 0.0), DomainError);
  CHECK(tangent_drift({0.4, 1.0, 1.0}, 1e6, 1e12) < 0.0);
  CHECK(tangent_drift({0.4, 1.0, 1.0}, 1e6, 1e12) > -1e-4);
  for (double alpha : {0.1, 0.25, 0.4}) {
    const ScaleParams p{alpha, 1.7, 1.0};
    for (double anchor : {3.0, 100.0, 2032.0 * 0.5, 2032.0 * 1.25}) {
      const double h = 1e-4 * anchor;
      const double fd = (-power_drift(p.b, alpha, anchor + h) + power_drift(p.b, alpha, anchor - h)) / (2 * h);
      CHECK(std::abs(tangent_drift(p, 1e6, anchor) / fd - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("lemma events on deterministic paths") {
  const ScaleParams p{0.4, 1.0, 1.0};
  const double t = 1e6;
  const double eps = 0.5, delta = 0.05;
  const double need = events_required_length(p, t, eps);
  const auto drift_only = sample_potential_path(0.0, 1.0, 0.4, need + 1, 1.0, 1);
  CHECK(check_event_A(drift_only, p, t, eps, delta));
  CHECK(check_event_G(drift_only, p, t));
  // The drift alone falls by more than the event-B threshold over the window.
  CHECK(check_event_B(drift_only, p, t, eps, delta, 1));
  CHECK_FALSE(check_event_C(drift_only, p, t, eps, delta, 1));
  SUBCASE("negative threshold fails for any path with positive drawup") {
    const auto noisy = sample_potential_path(1.0, 1.0, 0.4, need + 1, 1.0, 2);
    CHECK_FALSE(check_event_A(noisy, p, t, eps, 1.5));
  }
  SUBCASE("zero path and huge path for event G") {
    PotentialPath zero = drift_only;
    zero.values.setZero();
    CHECK(check_event_G(zero, p, t));
    PotentialPath huge = sample_potential_path(1.0, 1.0, 0.4, need + 1, 1.0, 3);
    huge.values *= 1e9;
    CHECK_FALSE(check_event_G(huge, p, t));
  }
  SUBCASE("coverage") {
    const auto short_path = sample_potential_path(1.0, 1.0, 0.4, 100.0, 1.0, 4);
    CHECK_THROWS_AS(check_event_A(short_path, p, t, eps, delta), RangeError);
    CHECK_THROWS_AS(check_event_C(short_path, p, t, eps, delta, 1), RangeError);
  }
}

TEST_CASE("events B and C read the right windows") {
  const ScaleParams p{0.4, 1.0, 1.0};
  const double t = 1e4;
  const double s = scale_s(p, t);
  const double thr = 1.1 * std::log(t);
  const auto n = static_cast<std::size_t>(std::ceil(1.6 * s)) + 2;
  // Flat path with two drops inside [(1-eps)s, (1-eps/2)s] and two rises inside [s, (1+eps)s].
  std::vector<double> v(n, 0.0);
  auto set_from = [&](double x, double level) {
    for (auto i = static_cast<std::size_t>(std::ceil(x)); i < n; ++i) v[i] = level;
  };
  set_from(0.55 * s, -2 * thr);
  set_from(0.6 * s, 0.0);
  set_from(0.65 * s, -2 * thr);
  set_from(0.7 * s, 0.0);
  set_from(1.1 * s, 2 * thr);
  set_from(1.15 * s, 0.0);
  set_from(1.2 * s, 2 * thr);
  const auto path = path_from(v);
  CHECK(check_event_B(path, p, t, 0.5, 0.1, 2));
  CHECK_FALSE(check_event_B(path, p, t, 0.5, 0.1, 3));
  CHECK(check_event_C(path, p, t, 0.5, 0.1, 2));
  CHECK_FALSE(check_event_C(path, p, t, 0.5, 0.1, 3));
  // C on the path is B on the negated path only when the windows coincide; here they do not.
  const auto neg = path_from(std::vector<double>(n, 0.0));
  CHECK_FALSE(check_event_B(neg, p, t, 0.5, 0.1, 1));
  CHECK_FALSE(check_event_C(neg, p, t, 0.5, 0.1, 1));
  CHECK_THROWS_AS(check_event_B(path, p, t, 0.5, 0.1, 0), ArgumentError);
}

TEST_CASE("delta limits") {
  CHECK(event_a_delta_limit(0.4, 0.5) == doctest::Approx(1.0 - std::pow(0.5, 0.4)));
  CHECK(event_c_delta_limit(0.4, 0.5) == doctest::Approx(std::pow(1.25, 0.4) - 1.0));
}
