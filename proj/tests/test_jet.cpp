#include <cmath>
#include <vector>

#include "doctest.h"
#include "edskit/errors.hpp"
#include "edskit/generator.hpp"
#include "edskit/jet.hpp"
#include "edskit/random.hpp"

using namespace edskit;

namespace {

JetPoint random_point(SplitMix64& rng, int q, int np = 0) {
  JetPoint p = JetPoint::zeros(q, np);
  auto flat = p.flat();
  for (auto& c : flat) c = rng.uniform(-1.0, 1.0);
  return JetPoint::from_flat(q, flat);
}

// A few nonpolynomial test fields over q = 3.
std::vector<ScalarField> sample_fields(const JetLayoutPtr& jet) {
  auto c = [&](int i) { return ScalarField::coordinate(jet, i); };
  std::vector<ScalarField> out;
  out.push_back(c(jet->x(0)) * c(jet->v(1)) + c(0) * c(jet->vp(2)));
  out.push_back(ScalarField(
      jet, 2,
      [jet](std::span<const TaylorScalar> b) {
        return sin(b[jet->x(0)] * b[jet->v(1)]) + exp(b[0]) * b[jet->vp(0)] / (2.0 + b[jet->v(2)] * b[jet->v(2)]);
      },
      "f2"));
  out.push_back(ScalarField(
      jet, 3,
      [jet](std::span<const TaylorScalar> b) {
        auto r = 1.0 + b[jet->v(0)] * b[jet->v(0)] + b[jet->v(1)] * b[jet->v(1)];
        return pow(r, 1.5) * b[jet->vpp(1)] + cos(b[jet->x(2)]) * sqrt(r);
      },
      "f3"));
  return out;
}

}  // namespace

TEST_CASE("layout numbering") {
  auto jet = JetLayout::make(3, {"s0", "m"});
  CHECK(jet->size() == 15);
  CHECK(jet->coordinate_name(jet->vp(1)) == "vp2");
  CHECK(jet->coordinate_name(jet->param(1)) == "m");
  CHECK(jet->order_of(jet->vpp(2)) == 3);
  CHECK(jet->order_of(jet->x(0)) == 0);
}

TEST_CASE("taylor_lift seeds") {
  auto p = JetPoint::zeros(1);
  p.t = 2.0;
  const int active[] = {0};
  auto b = taylor_lift(p, 1, active);
  CHECK(b[0].value() == 2.0);
  CHECK(b[0].gradient(0) == 1.0);
  CHECK(b[1].is_scalar());
  CHECK_THROWS_AS(taylor_lift(p, kMaxTaylorDegree + 1, active), ConfigurationError);
}

TEST_CASE("lifted bilinear and cubic fields") {
  auto jet = JetLayout::make(1);
  auto x = ScalarField::coordinate(jet, jet->x(0));
  auto v = ScalarField::coordinate(jet, jet->v(0));
  auto p = JetPoint::zeros(1);
  p.x[0] = 3.0;
  p.v[0] = 5.0;
  const int xv[] = {jet->x(0), jet->v(0)};
  auto r = (x * v).evaluate(taylor_lift(p, 2, xv));
  CHECK(r.value() == 15.0);
  CHECK(r.gradient(0) == 5.0);
  CHECK(r.gradient(1) == 3.0);
  const std::uint8_t e11[] = {1, 1};
  CHECK(r.derivative(e11) == 1.0);

  p.x[0] = 1.0;
  const int xs[] = {jet->x(0)};
  auto cube = (x * x * x).evaluate(taylor_lift(p, 3, xs));
  CHECK(cube.coefficient(0) == 1.0);
  CHECK(cube.coefficient(1) == 3.0);
  CHECK(cube.coefficient(2) == 3.0);
  CHECK(cube.coefficient(3) == 1.0);
}

TEST_CASE("total derivative examples") {
  auto jet = JetLayout::make(1);
  auto x = ScalarField::coordinate(jet, jet->x(0));
  auto v = ScalarField::coordinate(jet, jet->v(0));
  auto t = ScalarField::coordinate(jet, 0);
  auto p = JetPoint::zeros(1);
  p.t = 2.0;
  p.x[0] = 3.0;
  p.v[0] = 5.0;
  p.vp[0] = 7.0;
  CHECK(total_derivative(x)(p) == 5.0);
  CHECK(total_derivative(v)(p) == 7.0);
  CHECK(total_derivative(t * x)(p) == 13.0);
  CHECK(total_derivative(total_derivative(x * x))(p) == doctest::Approx(2 * 25.0 + 2 * 3.0 * 7.0));
  CHECK_THROWS_AS(total_derivative(ScalarField::coordinate(jet, jet->vpp(0))), ConfigurationError);
}

TEST_CASE("Leibniz rule for total derivatives") {
  auto jet = JetLayout::make(3);
  auto fields = sample_fields(jet);
  SplitMix64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    auto p = random_point(rng, 3);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      for (std::size_t j = 0; j < fields.size(); ++j) {
        const auto& f = fields[i];
        const auto& g = fields[j];
        const int level = std::max({f.order(), g.order(), 1});
        if (level > 3 || f.order() == 3 || g.order() == 3) continue;
        const double lhs = total_derivative(f * g, level)(p);
        const double rhs = f(p) * total_derivative(g, level)(p) + g(p) * total_derivative(f, level)(p);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
      }
    }
  }
}

TEST_CASE("degree-1 coefficients match central differences") {
  auto jet = JetLayout::make(3);
  auto fields = sample_fields(jet);
  const std::size_t base = fields.size();
  for (std::size_t i = 0; i < base; ++i)
    if (fields[i].order() < 3) fields.push_back(total_derivative(fields[i]));
  SplitMix64 rng(9);
  const double h = 1e-5;
  int draws = 0;
  while (draws < 100) {
    const auto& f = fields[rng.next() % fields.size()];
    auto p = random_point(rng, 3);
    if (f.order() > 3) continue;
    auto grad = f.gradient(p);
    auto flat = p.flat();
    for (int z = 0; z < jet->size(); ++z) {
      auto plus = flat, minus = flat;
      plus[z] += h;
      minus[z] -= h;
      const double fd = (f(JetPoint::from_flat(3, plus)) - f(JetPoint::from_flat(3, minus))) / (2 * h);
      CHECK(std::abs(grad[z] - fd) <= 1e-6 * std::max(1.0, std::abs(grad[z])));
    }
    ++draws;
  }
}

namespace {

Generator rotation(const JetLayoutPtr& jet, const double n[3]) {
  Generator g = Generator::zero(jet);
  auto x = [&](int a) { return ScalarField::coordinate(jet, jet->x(a)); };
  auto k = [&](double c) { return ScalarField::constant(jet, c); };
  g.xi[0] = k(n[1]) * x(2) - k(n[2]) * x(1);
  g.xi[1] = k(n[2]) * x(0) - k(n[0]) * x(2);
  g.xi[2] = k(n[0]) * x(1) - k(n[1]) * x(0);
  return g;
}

Generator boost(const JetLayoutPtr& jet, const double q[3]) {
  Generator g = Generator::zero(jet);
  auto x = [&](int a) { return ScalarField::coordinate(jet, jet->x(a)); };
  auto k = [&](double c) { return ScalarField::constant(jet, c); };
  auto t = ScalarField::coordinate(jet, 0);
  g.tau = -(k(q[0]) * x(0) + k(q[1]) * x(1) + k(q[2]) * x(2));
  for (int a = 0; a < 3; ++a) g.xi[a] = k(q[a]) * t;
  return g;
}

std::vector<double> cross(const double n[3], const std::vector<double>& v) {
  return {n[1] * v[2] - n[2] * v[1], n[2] * v[0] - n[0] * v[2], n[0] * v[1] - n[1] * v[0]};
}

double dot3(const double* a, const std::vector<double>& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

}  // namespace

TEST_CASE("prolongation reproduces rotation and boost families") {
  auto jet = JetLayout::make(3);
  SplitMix64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    double n[3], q[3];
    for (int i = 0; i < 3; ++i) n[i] = rng.uniform(-1, 1), q[i] = rng.uniform(-1, 1);
    auto rot = prolong(rotation(jet, n), 3);
    auto bst = prolong(boost(jet, q), 2);
    auto p = random_point(rng, 3);
    auto nv = cross(n, p.v), nvp = cross(n, p.vp), nvpp = cross(n, p.vpp);
    const double qv = dot3(q, p.v), qvp = dot3(q, p.vp);
    for (int a = 0; a < 3; ++a) {
      CHECK(std::abs(rot.coeff(1, a)(p) - nv[a]) <= 1e-14);
      CHECK(std::abs(rot.coeff(2, a)(p) - nvp[a]) <= 1e-14);
      CHECK(std::abs(rot.coeff(3, a)(p) - nvpp[a]) <= 1e-14);
      CHECK(std::abs(bst.coeff(1, a)(p) - (q[a] + qv * p.v[a])) <= 1e-14);
      CHECK(std::abs(bst.coeff(2, a)(p) - (2 * qv * p.vp[a] + qvp * p.v[a])) <= 1e-14);
    }
  }
}

TEST_CASE("zero and time-translation generators") {
  auto jet = JetLayout::make(2);
  SplitMix64 rng(4);
  auto zero = prolong(Generator::zero(jet), 3);
  auto tt = prolong(Generator::time_translation(jet), 3);
  CHECK(tt.components().size() == 1);
  CHECK(zero.components().empty());
  auto p = random_point(rng, 2);
  for (int j = 1; j <= 3; ++j)
    for (int a = 0; a < 2; ++a) {
      CHECK(zero.coeff(j, a)(p) == 0.0);
      CHECK(tt.coeff(j, a)(p) == 0.0);
    }
  auto f = ScalarField::coordinate(jet, jet->x(0)) * ScalarField::coordinate(jet, jet->vp(1));
  CHECK(apply_generator(zero, f, p) == 0.0);
  CHECK(apply_generator(tt, f, p) == 0.0);
}

TEST_CASE("apply_generator on a coordinate returns the coefficient") {
  auto jet = JetLayout::make(3);
  const double n[3] = {0, 0, 1};
  auto rot = prolong(rotation(jet, n), 1);
  auto p = JetPoint::zeros(3);
  p.x = {0, 1, 0};
  CHECK(apply_generator(rot, ScalarField::coordinate(jet, jet->x(0)), p) == -1.0);
  CHECK(apply_generator(rot, ScalarField::coordinate(jet, jet->x(0)), p) == rot.base().xi[0](p));
}

TEST_CASE("flow_step examples") {
  auto jet = JetLayout::make(3);
  SplitMix64 rng(8);
  auto p = random_point(rng, 3);

  auto tt = prolong(Generator::time_translation(jet), 3);
  auto s = flow_step(tt, p, 0.25);
  CHECK(s.point.t == doctest::Approx(p.t + 0.25));
  CHECK(s.point.x == p.x);
  CHECK((s.jacobian - Eigen::MatrixXd::Identity(jet->size(), jet->size())).norm() < 1e-15);

  const double n[3] = {0.3, -0.2, 0.9};
  auto rot = prolong(rotation(jet, n), 3);
  auto norm = [](const std::vector<double>& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); };
  for (double h : {1e-2, 1e-3}) {
    auto r = flow_step(rot, p, h);
    CHECK(std::abs(norm(r.point.x) - norm(p.x)) < 10 * std::pow(h, 5));
    CHECK(std::abs(norm(r.point.v) - norm(p.v)) < 10 * std::pow(h, 5));
  }

  // Jacobian against central differences of the flow map
  const double q[3] = {0.4, 0.1, -0.3};
  auto bst = prolong(boost(jet, q), 3);
  auto step = flow_step(bst, p, 0.1);
  const double h = 1e-6;
  auto flat = p.flat();
  for (int j = 0; j < jet->size(); ++j) {
    auto plus = flat, minus = flat;
    plus[j] += h;
    minus[j] -= h;
    auto fp = flow_step(bst, JetPoint::from_flat(3, plus), 0.1).point.flat();
    auto fm = flow_step(bst, JetPoint::from_flat(3, minus), 0.1).point.flat();
    for (int i = 0; i < jet->size(); ++i) {
      const double fd = (fp[i] - fm[i]) / (2 * h);
      CHECK(std::abs(step.jacobian(i, j) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }

  // first-order agreement with apply_generator on coordinates
  const double eps = 1e-4;
  auto fwd = flow_step(bst, p, eps).point.flat();
  auto bwd = flow_step(bst, p, -eps).point.flat();
  auto coeff = bst.evaluate(p);
  for (int i = 0; i < jet->size(); ++i) {
    const double fd = (fwd[i] - bwd[i]) / (2 * eps);
    const double ag = apply_generator(bst, ScalarField::coordinate(jet, i), p);
    CHECK(ag == doctest::Approx(coeff[i]));
    CHECK(std::abs(ag - fd) <= 1e-6 * std::max(1.0, std::abs(ag)));
  }
}
