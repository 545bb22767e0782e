#include "edskit/generator.hpp"

#include <cmath>

#include "edskit/errors.hpp"

namespace edskit {

namespace {

void require_point_field(const ScalarField& f, const std::string& name) {
  if (!f.valid()) return;
  if (f.order() > 0) throw JetOrderViolation(name, "jet order " + std::to_string(f.order()));
}

}  // namespace

void Generator::validate() const {
  if (!tau.valid()) throw ConfigurationError("generator without tau");
  if (static_cast<int>(xi.size()) != jet()->q())
    throw ConfigurationError("generator has " + std::to_string(xi.size()) + " xi components, q = " +
                             std::to_string(jet()->q()));
  require_point_field(tau, "tau");
  for (std::size_t a = 0; a < xi.size(); ++a) require_point_field(xi[a], "xi" + std::to_string(a + 1));
  if (!param_action.empty() && static_cast<int>(param_action.size()) != jet()->num_params())
    throw ConfigurationError("param_action size does not match the parameter list");
  for (std::size_t k = 0; k < param_action.size(); ++k)
    require_point_field(param_action[k], "param_action." + jet()->params()[k]);
}

Generator Generator::zero(JetLayoutPtr jet) {
  Generator g;
  g.tau = ScalarField::constant(jet, 0.0);
  g.xi.assign(jet->q(), ScalarField::constant(jet, 0.0));
  return g;
}

Generator Generator::time_translation(JetLayoutPtr jet) {
  Generator g = zero(jet);
  g.tau = ScalarField::constant(jet, 1.0);
  return g;
}

ProlongedGenerator::ProlongedGenerator(Generator base, int order, std::vector<std::vector<ScalarField>> coeffs)
    : base_(std::move(base)), order_(order), coeffs_(std::move(coeffs)) {
  const auto& jet = base_.jet();
  auto add = [&](int coord, const ScalarField& f) {
    if (f.valid() && !f.is_zero()) components_.push_back({coord, f});
  };
  add(JetLayout::t(), base_.tau);
  for (int a = 0; a < jet->q(); ++a) add(jet->x(a), base_.xi[a]);
  for (int j = 1; j <= order_; ++j)
    for (int a = 0; a < jet->q(); ++a) add(jet->level(j, a), coeffs_[j - 1][a]);
  for (std::size_t k = 0; k < base_.param_action.size(); ++k)
    add(jet->param(static_cast<int>(k)), base_.param_action[k]);
}

std::vector<double> ProlongedGenerator::evaluate(const JetPoint& p) const {
  std::vector<double> out(jet()->size(), 0.0);
  auto b = constant_bindings(p);
  for (const auto& c : components_) out[c.coord] = c.coefficient.evaluate(b).value();
  return out;
}

ProlongedGenerator prolong(const Generator& g, int order) {
  g.validate();
  if (order < 1 || order > 3) throw ConfigurationError("prolongation order must be in 1..3");
  const auto& jet = g.jet();
  const ScalarField d_tau = total_derivative(g.tau, 1);
  std::vector<std::vector<ScalarField>> coeffs;
  for (int j = 1; j <= order; ++j) {
    std::vector<ScalarField> level(jet->q());
    for (int a = 0; a < jet->q(); ++a) {
      const ScalarField& prev = j == 1 ? g.xi[a] : coeffs[j - 2][a];
      ScalarField c = total_derivative(prev.with_order(std::max(prev.order(), j - 1)), j) -
                      ScalarField::coordinate(jet, jet->level(j, a)) * d_tau;
      level[a] = c.with_order(j);
    }
    coeffs.push_back(std::move(level));
  }
  return ProlongedGenerator(g, order, std::move(coeffs));
}

double apply_generator(const ProlongedGenerator& pg, const ScalarField& f, const JetPoint& p) {
  if (f.order() > pg.order())
    throw ConfigurationError("field of jet order " + std::to_string(f.order()) +
                             " needs a prolongation of at least that order");
  const auto grad = f.gradient(p);
  const auto coeff = pg.evaluate(p);
  double sum = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) sum += coeff[i] * grad[i];
  return sum;
}

FlowStep flow_step(const ProlongedGenerator& pg, const JetPoint& p, double epsilon) {
  const int n = pg.jet()->size();
  std::vector<int> active(n);
  for (int i = 0; i < n; ++i) active[i] = i;
  const std::vector<TaylorScalar> z0 = taylor_lift(p, 1, active);
  const TaylorLayout* layout = z0.front().layout();

  auto field = [&](const std::vector<TaylorScalar>& z) {
    std::vector<TaylorScalar> k(n, TaylorScalar(layout, 0.0));
    for (const auto& c : pg.components()) {
      TaylorScalar val = c.coefficient.evaluate(z).on(layout);
      for (double coef : val.coefficients())
        if (!std::isfinite(coef)) throw FlowDivergence("nonfinite generator value at " + pg.jet()->coordinate_name(c.coord));
      k[c.coord] = std::move(val);
    }
    return k;
  };
  auto axpy = [&](const std::vector<TaylorScalar>& z, double h, const std::vector<TaylorScalar>& k) {
    std::vector<TaylorScalar> out = z;
    for (int i = 0; i < n; ++i) out[i] += k[i] * h;
    return out;
  };

  const auto k1 = field(z0);
  const auto k2 = field(axpy(z0, 0.5 * epsilon, k1));
  const auto k3 = field(axpy(z0, 0.5 * epsilon, k2));
  const auto k4 = field(axpy(z0, epsilon, k3));
  std::vector<double> flat(n);
  Eigen::MatrixXd jac(n, n);
  for (int i = 0; i < n; ++i) {
    TaylorScalar zi = z0[i] + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (epsilon / 6.0);
    zi = zi.on(layout);
    flat[i] = zi.value();
    for (int j = 0; j < n; ++j) jac(i, j) = zi.gradient(j);
    if (!std::isfinite(flat[i]) || !jac.row(i).allFinite())
      throw FlowDivergence("flow step produced a nonfinite " + pg.jet()->coordinate_name(i));
  }
  return {JetPoint::from_flat(pg.jet()->q(), flat), std::move(jac)};
}

}  // namespace edskit
