#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <functional>
#include <numeric>
#include <random>

#include "hym/filtration.hpp"

using namespace hym;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent projection oracle: E (E* H E)^{-1} E* H with E the first s columns of I.
Mat projection_oracle(const Mat& h, int s) {
  const int r = static_cast<int>(h.rows());
  const Mat e = Mat::Identity(r, r).leftCols(s);
  const Mat gram = e.adjoint() * h * e;
  return e * gram.inverse() * e.adjoint() * h;
}

}  // namespace

TEST_CASE("projection examples") {
  const TorusGeometry geo = make_geometry({0.0, 1.0}, 16);
  const ModelBundle b = make_bundle(geo, {2, 1, 0}, {});
  SUBCASE("diagonal metric") {
    GridField g = GridField::identity(geo, b.degrees);
    for (std::size_t p = 0; p < g.size(); ++p) g[p].diagonal() << 2.0, 0.5, 3.0;
    const GridField pi = projection(MetricField(g), 2);
    Mat expected = Mat::Zero(3, 3);
    expected(0, 0) = expected(1, 1) = 1.0;
    for (std::size_t p = 0; p < pi.size(); ++p) CHECK((pi[p] - expected).norm() < 1e-15);
  }
  SUBCASE("full flag") {
    const GridField pi = projection(random_metric(b, 2, 0.7), 3);
    for (std::size_t p = 0; p < pi.size(); ++p) CHECK((pi[p] - Mat::Identity(3, 3)).norm() == 0.0);
  }
  SUBCASE("2x2 Gram formula") {
    const ModelBundle b2 = make_bundle(geo, {1, 0}, {});
    const MetricField h = random_metric(b2, 5, 0.9);
    const GridField pi = projection(h, 1);
    for (std::size_t p = 0; p < pi.size(); ++p) {
      const Mat& m = h.field()[p];
      CHECK(std::abs(pi[p](0, 1) - m(0, 1) / m(0, 0)) < 1e-14);
      CHECK(std::abs(pi[p](0, 0) - 1.0) == 0.0);
      CHECK(pi[p].row(1).norm() == 0.0);
    }
  }
  CHECK_THROWS_AS(projection(MetricField::background(b), 0), FiltrationError);
  CHECK_THROWS_AS(projection(MetricField::background(b), 4), FiltrationError);
}

TEST_CASE("projection axioms and nesting over random metrics") {
  const TorusGeometry geo = make_geometry({0.3, 1.1}, 16);
  const ModelBundle b = make_bundle(geo, {1, 1, 0, -1}, {CocycleKind::kTheta, 1.0});
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const MetricField h = random_metric(b, seed, 1.0);
    std::vector<GridField> pis;
    for (int s = 1; s <= 4; ++s) pis.push_back(projection(h, s));
    double idem = 0, herm = 0, trace = 0, nest = 0, oracle = 0;
    for (std::size_t p = 0; p < h.field().size(); ++p) {
      const Mat& g = h.field()[p];
      for (int s = 1; s <= 4; ++s) {
        const Mat& pi = pis[s - 1][p];
        idem = std::max(idem, (pi * pi - pi).cwiseAbs().maxCoeff());
        const Mat gp = g * pi;
        herm = std::max(herm, (gp - gp.adjoint()).cwiseAbs().maxCoeff());
        trace = std::max(trace, std::abs(pi.trace() - double(s)));
        oracle = std::max(oracle, (pi - projection_oracle(g, s)).cwiseAbs().maxCoeff());
        if (s > 1) {
          const Mat& lo = pis[s - 2][p];
          nest = std::max(nest, (pi * lo - lo).cwiseAbs().maxCoeff());
          nest = std::max(nest, (lo * pi - lo).cwiseAbs().maxCoeff());
        }
      }
    }
    CHECK(idem <= 1e-11);
    CHECK(herm <= 1e-11);
    CHECK(trace <= 1e-11);
    CHECK(nest <= 1e-11);
    CHECK(oracle <= 1e-11);
  }
}

TEST_CASE("psi") {
  const TorusGeometry geo = make_geometry({0.0, 1.0}, 16);
  SUBCASE("split L1 + L0 at the background metric") {
    const ModelBundle b = make_bundle(geo, {1, 0}, {});
    const GridField ps = psi(MetricField::background(b), hn_filtration(b));
    Mat expected = Mat::Zero(2, 2);
    expected(0, 0) = 1.0;
    for (std::size_t p = 0; p < ps.size(); ++p) CHECK((ps[p] - expected).norm() < 1e-15);
  }
  SUBCASE("semistable") {
    const ModelBundle b = make_bundle(geo, {1, 1}, {CocycleKind::kTheta, 1.0});
    const GridField ps = psi(random_metric(b, 1, 0.5), hn_filtration(b));
    for (std::size_t p = 0; p < ps.size(); ++p) CHECK((ps[p] - Mat::Identity(2, 2)).norm() < 1e-15);
  }
  SUBCASE("L2 norm, trace and square identity over ten random metrics") {
    const ModelBundle b = make_bundle(geo, {2, 1, 0}, {CocycleKind::kTheta, 1.0});
    const FiltrationSpec hn = hn_filtration(b);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const MetricField h = random_metric(b, seed, 1.0);
      const GridField ps = psi(h, hn);
      const double norm = integrate(geo, [&](std::size_t p) { return (ps[p] * ps[p]).trace().real(); });
      CHECK(std::abs(norm - 5.0) < 1e-9);
      for (std::size_t p = 0; p < ps.size(); ++p) CHECK(std::abs(ps[p].trace() - 3.0) < 1e-10);
      CHECK(psi_squared_identity(h, hn) <= 1e-10);
    }
  }
  SUBCASE("rank one") {
    const ModelBundle b = make_bundle(geo, {3}, {});
    CHECK(psi_squared_identity(random_metric(b, 2, 0.5), hn_filtration(b)) == 0.0);
  }
}

TEST_CASE("second fundamental form") {
  const TorusGeometry geo = make_geometry({0.3, 1.1}, 32);
  SUBCASE("split bundle at the background metric") {
    const ModelBundle b = make_bundle(geo, {1, 0}, {});
    CHECK(second_fundamental_form_norm(b, MetricField::background(b), 1) == 0.0);
  }
  SUBCASE("nonsplit extension at the background metric equals the cocycle norm") {
    const ModelBundle b = make_bundle(geo, {1, 0}, {CocycleKind::kTheta, 1.0});
    // Oracle: (Im tau / pi) * mean |theta_1 * bump|^2 by direct quadrature.
    double acc = 0.0;
    for (int j = 0; j < geo.n_grid; ++j)
      for (int i = 0; i < geo.n_grid; ++i)
        acc += std::norm(theta_unitary(geo, 1, geo.x(i), geo.y(j)) * cocycle_bump(geo.x(i), geo.y(j)));
    const double expected = 1.1 / kPi * acc / geo.size();
    CHECK(expected > 0.05);
    CHECK(second_fundamental_form_norm(b, MetricField::background(b), 1) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(second_fundamental_form_norm(b, random_metric(b, 1, 0.5), 2) == 0.0);
  }
}

TEST_CASE("Chern-Weil degrees of standard flags") {
  SUBCASE("split, background metric") {
    const TorusGeometry geo = make_geometry({0.0, 1.0}, 16);
    const ModelBundle b = make_bundle(geo, {1, 0}, {});
    CHECK(chern_weil_degree(b, MetricField::background(b), 1) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("nonsplit extension at n = 64") {
    const TorusGeometry geo = make_geometry({0.0, 1.0}, 64);
    const ModelBundle b = make_bundle(geo, {1, 0}, {CocycleKind::kTheta, 1.0});
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const MetricField h = random_metric(b, seed, 0.5);
      CHECK(std::abs(chern_weil_degree(b, h, 1) - 1.0) < 5e-3);
      CHECK(std::abs(chern_weil_degree(b, h, 2) - 1.0) < 1e-8);
    }
  }
}

TEST_CASE("hn_type_bruteforce") {
  const TorusGeometry geo = make_geometry({0.0, 1.0}, 32);
  SUBCASE("(2,1,0) split") {
    const ModelBundle b = make_bundle(geo, {2, 1, 0}, {});
    CHECK(hn_type_bruteforce(b, MetricField::background(b)).mu == std::vector<double>{2, 1, 0});
  }
  SUBCASE("(1,0) nonsplit") {
    const ModelBundle b = make_bundle(geo, {1, 0}, {CocycleKind::kTheta, 1.0});
    const FiltrationSpec f = hn_filtration_bruteforce(b, random_metric(b, 4, 0.5));
    CHECK(f.type().mu == std::vector<double>{1, 0});
    CHECK(f.flags == std::vector<int>{1, 2});
  }
  SUBCASE("(0,0) is one semistable block") {
    const ModelBundle b = make_bundle(geo, {0, 0}, {});
    const FiltrationSpec f = hn_filtration_bruteforce(b, random_metric(b, 4, 0.5));
    CHECK(f.flags == std::vector<int>{2});
    CHECK(f.type().mu == std::vector<double>{0, 0});
  }
  SUBCASE("agrees with the declared filtration") {
    for (auto degrees : {std::vector<int>{1, 1, 0}, {2, 0, 0, -1}, {1, 1, 1, 1}, {3, 1, 1, 0}}) {
      const ModelBundle b = make_bundle(geo, degrees, {CocycleKind::kTheta, 0.5});
      const FiltrationSpec f = hn_filtration_bruteforce(b, random_metric(b, 1, 0.3));
      CHECK(f.flags == hn_filtration(b).flags);
      CHECK(f.type() == hn_filtration(b).type());
    }
  }
}

TEST_CASE("dominance examples") {
  CHECK(dominance_leq({{1, 0}}, {{2, -1}}));
  CHECK_FALSE(dominance_leq({{2, -1}}, {{1, 0}}));
  CHECK(dominance_leq({{1, 0}}, {{1, 0}}));
  CHECK_THROWS_AS(dominance_leq({{1, 0}}, {{1, 0, 0}}), FiltrationError);
  CHECK_THROWS_AS(dominance_leq({{1, 0}}, {{1, 1}}), FiltrationError);
}

TEST_CASE("dominance is a partial order on fixed-sum vectors") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(1, 4), num(-12, 12);
  auto sample = [&](int n, int total4) {
    // Sorted rational vector with denominator 4 and the given sum.
    std::vector<int> v(n);
    for (int& x : v) x = num(rng);
    v.back() = total4 - std::accumulate(v.begin(), v.end() - 1, 0);
    std::sort(v.begin(), v.end(), std::greater<>());
    HNType t;
    for (int x : v) t.mu.push_back(x / 4.0);
    return t;
  };
  int comparable = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(rng);
    const int total = num(rng);
    const HNType a = sample(n, total), b = sample(n, total), c = sample(n, total);
    CHECK(dominance_leq(a, a));
    if (dominance_leq(a, b) && dominance_leq(b, a)) {
      for (int k = 0; k < n; ++k) CHECK(a.mu[k] == doctest::Approx(b.mu[k]).epsilon(1e-12));
    }
    if (dominance_leq(a, b) && dominance_leq(b, c)) {
      ++comparable;
      CHECK(dominance_leq(a, c));
    }
  }
  CHECK(comparable > 20);
}

TEST_CASE("phi_squared") {
  CHECK(phi_squared(make_filtration({1, 2}, {1.0, 0.0})) == 1.0);
  CHECK(phi_squared(make_filtration({3}, {0.5})) == doctest::Approx(0.75));
  SUBCASE("supremum over slope-decreasing standard flags of (2,1,0)") {
    const int degrees[] = {2, 1, 0};
    double best = -1.0;
    std::vector<int> best_flags;
    for (const auto& f : standard_filtrations(degrees)) {
      if (!f.slope_decreasing()) continue;
      if (phi_squared(f) > best) {
        best = phi_squared(f);
        best_flags = f.flags;
      }
    }
    CHECK(best == doctest::Approx(5.0));
    CHECK(best_flags == std::vector<int>{1, 2, 3});
  }
  SUBCASE("HN flag attains the supremum on every sorted degree vector up to rank 4") {
    const TorusGeometry geo = make_geometry({0.0, 1.0}, 16);
    for (int r = 1; r <= 4; ++r) {
      std::vector<int> degrees(r, 0);
      // All non-increasing vectors with entries in [-2, 2].
      std::function<void(int, int)> rec = [&](int pos, int hi) {
        if (pos == r) {
          const ModelBundle b = make_bundle(geo, degrees, {});
          const double hn = phi_squared(hn_filtration(b));
          for (const auto& f : standard_filtrations(degrees))
            if (f.slope_decreasing()) CHECK(phi_squared(f) <= hn + 1e-12);
          return;
        }
        for (int d = hi; d >= -2; --d) {
          degrees[pos] = d;
          rec(pos + 1, d);
        }
      };
      rec(0, 2);
    }
  }
  CHECK_THROWS_AS(make_filtration({2, 1}, {0.0, 0.0}), FiltrationError);
}
