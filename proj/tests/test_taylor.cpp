#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "edskit/errors.hpp"
#include "edskit/random.hpp"
#include "edskit/taylor.hpp"

using namespace edskit;

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

TaylorScalar random_poly(const TaylorLayout* layout, SplitMix64& rng) {
  TaylorScalar out(layout, 0.0);
  for (auto& c : out.coefficients()) c = rng.uniform(-1.0, 1.0);
  return out;
}

}  // namespace

TEST_CASE("coefficient count is the binomial C(n+d, d)") {
  for (int n = 1; n <= 6; ++n)
    for (int d = 0; d <= kMaxTaylorDegree; ++d)
      CHECK(TaylorLayout::dense(n, d)->size() == static_cast<int>(binomial(n + d, d)));
  CHECK_THROWS_AS(TaylorLayout::dense(2, kMaxTaylorDegree + 1), ConfigurationError);
}

TEST_CASE("layouts are interned") {
  CHECK(TaylorLayout::dense(3, 2) == TaylorLayout::get({{3, 2}}));
  CHECK(TaylorLayout::dense(3, 2)->with_group({1, 1}) == TaylorLayout::get({{3, 2}, {1, 1}}));
  CHECK(TaylorLayout::get({{0, 3}, {2, 0}}) == TaylorLayout::scalar());
}

TEST_CASE("seeded variable") {
  auto* l = TaylorLayout::dense(1, 1);
  auto t = TaylorScalar::variable(l, 0, 2.0);
  CHECK(t.value() == 2.0);
  CHECK(t.gradient(0) == 1.0);
}

TEST_CASE("bilinear product x*v") {
  auto* l = TaylorLayout::dense(2, 2);
  auto x = TaylorScalar::variable(l, 0, 3.0);
  auto v = TaylorScalar::variable(l, 1, 5.0);
  auto f = x * v;
  CHECK(f.value() == 15.0);
  CHECK(f.gradient(0) == 5.0);
  CHECK(f.gradient(1) == 3.0);
  const std::uint8_t e11[] = {1, 1};
  CHECK(f.derivative(e11) == 1.0);
}

TEST_CASE("cube has binomial coefficients") {
  auto* l = TaylorLayout::dense(1, 3);
  auto x = TaylorScalar::variable(l, 0, 1.0);
  auto f = x * x * x;
  for (int k = 0; k <= 3; ++k) {
    const std::uint8_t e[] = {static_cast<std::uint8_t>(k)};
    CHECK(f.coefficient(e) == doctest::Approx(binomial(3, k)));
  }
  CHECK(pow(x, 3).coefficients()[3] == 1.0);
}

TEST_CASE("product is commutative, associative and distributive") {
  SplitMix64 rng(11);
  for (auto* l : {TaylorLayout::dense(3, 3), TaylorLayout::get({{1, 3}, {4, 1}}),
                  TaylorLayout::get({{2, 2}, {1, 1}, {1, 1}})}) {
    for (int trial = 0; trial < 20; ++trial) {
      auto a = random_poly(l, rng), b = random_poly(l, rng), c = random_poly(l, rng);
      auto ab = a * b, ba = b * a;
      auto abc1 = (a * b) * c, abc2 = a * (b * c);
      auto d1 = a * (b + c), d2 = a * b + a * c;
      for (int i = 0; i < l->size(); ++i) {
        CHECK(std::abs(ab.coefficient(i) - ba.coefficient(i)) <= 1e-14);
        CHECK(std::abs(abc1.coefficient(i) - abc2.coefficient(i)) <= 1e-14);
        CHECK(std::abs(d1.coefficient(i) - d2.coefficient(i)) <= 1e-14);
      }
    }
  }
}

TEST_CASE("product of polynomials inside the budget is exact") {
  // (1 + 2x - y)(3 + x*y) on total degree 3
  auto* l = TaylorLayout::dense(2, 3);
  auto x = TaylorScalar::variable(l, 0, 0.0);
  auto y = TaylorScalar::variable(l, 1, 0.0);
  auto f = (1.0 + 2.0 * x - y) * (3.0 + x * y);
  auto coef = [&](int i, int j) {
    const std::uint8_t e[] = {static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(j)};
    return f.coefficient(e);
  };
  CHECK(coef(0, 0) == 3.0);
  CHECK(coef(1, 0) == 6.0);
  CHECK(coef(0, 1) == -3.0);
  CHECK(coef(1, 1) == 1.0);
  CHECK(coef(2, 1) == 2.0);
  CHECK(coef(1, 2) == -1.0);
}

TEST_CASE("reciprocal and division invert multiplication") {
  SplitMix64 rng(5);
  auto* l = TaylorLayout::dense(3, 4);
  for (int trial = 0; trial < 10; ++trial) {
    auto a = random_poly(l, rng);
    a.coefficients()[0] = 2.0 + rng.uniform();
    auto one = a * reciprocal(a);
    CHECK(one.value() == doctest::Approx(1.0));
    for (int i = 1; i < l->size(); ++i) CHECK(std::abs(one.coefficient(i)) < 1e-13);
  }
  auto z = TaylorScalar::variable(l, 0, 0.0);
  CHECK_THROWS_AS(1.0 / z, SingularDenominator);
}

TEST_CASE("math functions match closed-form series") {
  auto* l = TaylorLayout::dense(1, 4);
  auto x = TaylorScalar::variable(l, 0, 0.3);
  auto check = [&](const TaylorScalar& f, const std::function<double(double)>& g) {
      // derivatives by central differences of g at 0.3
    const double h1 = 1e-5, h2 = 1e-4;
    const double d1 = (g(0.3 + h1) - g(0.3 - h1)) / (2 * h1);
    const double d2 = (g(0.3 + h2) - 2 * g(0.3) + g(0.3 - h2)) / (h2 * h2);
    CHECK(f.value() == doctest::Approx(g(0.3)).epsilon(1e-14));
    CHECK(f.coefficient(1) == doctest::Approx(d1).epsilon(1e-4));
    CHECK(2.0 * f.coefficient(2) == doctest::Approx(d2).epsilon(1e-4));
  };
  check(exp(x), [](double t) { return std::exp(t); });
  check(sin(x), [](double t) { return std::sin(t); });
  check(cos(x), [](double t) { return std::cos(t); });
  check(sqrt(x), [](double t) { return std::sqrt(t); });
  check(pow(x, 1.5), [](double t) { return std::pow(t, 1.5); });
  check(pow(x, -2), [](double t) { return std::pow(t, -2); });
  check(abs(-x), [](double t) { return std::abs(t); });
  auto s = sqrt(x);
  auto back = s * s;
  for (int i = 0; i < l->size(); ++i) CHECK(back.coefficient(i) == doctest::Approx(x.coefficient(i)));
}

TEST_CASE("domain errors") {
  auto* l = TaylorLayout::dense(1, 2);
  CHECK_THROWS_AS(sqrt(TaylorScalar::variable(l, 0, -1.0)), DomainError);
  CHECK_THROWS_AS(sqrt(TaylorScalar::variable(l, 0, 0.0)), DomainError);
  CHECK_THROWS_AS(pow(TaylorScalar::variable(l, 0, -1.0), 0.5), DomainError);
  CHECK(pow(TaylorScalar::variable(l, 0, -1.0), 2.0).value() == 1.0);
  CHECK(sqrt(TaylorScalar(0.0)).value() == 0.0);
}

TEST_CASE("scalar values broadcast and embed") {
  auto* l = TaylorLayout::dense(2, 2);
  auto x = TaylorScalar::variable(l, 0, 1.5);
  TaylorScalar c(2.0);
  auto f = c * x + c;
  CHECK(f.layout() == l);
  CHECK(f.value() == 5.0);
  auto* ext = l->with_group({1, 1});
  auto e = f.embed(ext);
  CHECK(e.value() == 5.0);
  CHECK(e.gradient(0) == 2.0);
  auto eps = TaylorScalar::variable(ext, 2, 0.0);
  auto g = e * eps;
  auto slice = g.last_variable_slice(l, 1);
  for (int i = 0; i < l->size(); ++i) CHECK(slice.coefficient(i) == f.coefficient(i));
  CHECK_THROWS_AS(x + TaylorScalar::variable(TaylorLayout::dense(3, 1), 0, 0.0), ConfigurationError);
}
