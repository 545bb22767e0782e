#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edskit/jet.hpp"

namespace edskit {

/// Point-transformation generator tau d_t + xi^a d_{x^a}, optionally acting on
/// the layout parameters. Coefficients may read t, x and parameters only.
struct Generator {
  ScalarField tau;
  std::vector<ScalarField> xi;
  /// One entry per layout parameter; an empty field means no action.
  std::vector<ScalarField> param_action;

  const JetLayoutPtr& jet() const { return tau.jet(); }
  /// Throws JetOrderViolation when a coefficient reads v, vp or vpp.
  void validate() const;

  static Generator zero(JetLayoutPtr jet);
  static Generator time_translation(JetLayoutPtr jet);
};

/// Generator prolonged to jet order k: coeffs[j - 1] holds the q coefficient
/// fields of d/dv^(j) for j = 1..k.
class ProlongedGenerator {
 public:
  ProlongedGenerator(Generator base, int order, std::vector<std::vector<ScalarField>> coeffs);

  const Generator& base() const noexcept { return base_; }
  int order() const noexcept { return order_; }
  const JetLayoutPtr& jet() const { return base_.jet(); }
  /// Coefficient of d/dv^(j)_a, j = 1..order.
  const ScalarField& coeff(int j, int a) const { return coeffs_.at(j - 1).at(a); }

  /// The full vector field as (coordinate, coefficient) pairs, zero entries dropped.
  const std::vector<Shift>& components() const noexcept { return components_; }

  /// Coefficient values at every layout coordinate (zero beyond the order).
  std::vector<double> evaluate(const JetPoint& p) const;

 private:
  Generator base_;
  int order_;
  std::vector<std::vector<ScalarField>> coeffs_;
  std::vector<Shift> components_;
};

/// Recursive prolongation: v^(1) = D xi - v D tau, v^(j+1) = D v^(j) - v^(j+1) D tau.
ProlongedGenerator prolong(const Generator& g, int order);

/// Derivative of f along the prolonged vector field at p (degree-1 lift).
double apply_generator(const ProlongedGenerator& pg, const ScalarField& f, const JetPoint& p);

struct FlowStep {
  JetPoint point;
  /// d(point after step)/d(point before step) over all layout coordinates.
  Eigen::MatrixXd jacobian;
};

/// One classical fourth-order Runge-Kutta step of size epsilon along pg.
FlowStep flow_step(const ProlongedGenerator& pg, const JetPoint& p, double epsilon);

}  // namespace edskit
