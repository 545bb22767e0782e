#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "edskit/taylor.hpp"

namespace edskit {

/// Coordinate numbering of the order-3 jet space of curves in R^q, extended by
/// named external parameters:
///   t | x1..xq | v1..vq | vp1..vpq | vpp1..vppq | params...
class JetLayout {
 public:
  JetLayout(int q, std::vector<std::string> params = {});

  static std::shared_ptr<const JetLayout> make(int q, std::vector<std::string> params = {}) {
    return std::make_shared<const JetLayout>(q, std::move(params));
  }

  int q() const noexcept { return q_; }
  int num_params() const noexcept { return static_cast<int>(params_.size()); }
  /// Number of jet coordinates (t, x, v, vp, vpp).
  int jet_size() const noexcept { return 1 + 4 * q_; }
  int size() const noexcept { return jet_size() + num_params(); }

  static constexpr int t() noexcept { return 0; }
  int x(int a) const noexcept { return 1 + a; }
  int v(int a) const noexcept { return 1 + q_ + a; }
  int vp(int a) const noexcept { return 1 + 2 * q_ + a; }
  int vpp(int a) const noexcept { return 1 + 3 * q_ + a; }
  /// Coordinate of the j-th derivative level: 0 -> x, 1 -> v, 2 -> vp, 3 -> vpp.
  int level(int j, int a) const noexcept { return 1 + j * q_ + a; }
  int param(int k) const noexcept { return jet_size() + k; }

  /// Jet order a coordinate belongs to (t and parameters count as 0).
  int order_of(int coord) const noexcept;
  bool is_param(int coord) const noexcept { return coord >= jet_size(); }

  const std::vector<std::string>& params() const noexcept { return params_; }
  int param_index(const std::string& name) const noexcept;
  std::string coordinate_name(int coord) const;

  bool compatible(const JetLayout& other) const noexcept {
    return q_ == other.q_ && params_ == other.params_;
  }

 private:
  int q_;
  std::vector<std::string> params_;
};

using JetLayoutPtr = std::shared_ptr<const JetLayout>;

/// A point of J^3 plus parameter values (ordered as in the layout).
struct JetPoint {
  double t = 0.0;
  std::vector<double> x, v, vp, vpp;
  std::vector<double> params;

  static JetPoint zeros(int q, int num_params = 0);
  static JetPoint from_flat(int q, std::span<const double> flat);

  int q() const noexcept { return static_cast<int>(x.size()); }
  std::vector<double> flat() const;
  bool finite() const noexcept;
};

/// All coordinates of `p` as constants on the scalar layout.
std::vector<TaylorScalar> constant_bindings(const JetPoint& p);

/// Seeds the coordinates listed in `active` as the variables of a dense
/// layout of the given degree (variable i is active[i]); the rest stay
/// constant. Degrees above kMaxTaylorDegree are a configuration error.
std::vector<TaylorScalar> taylor_lift(const JetPoint& p, int degree, std::span<const int> active);

/// A scalar function on jet coordinates with a declared jet order.
///
/// The rule receives one TaylorScalar per coordinate of the layout. Fields are
/// immutable and may be evaluated concurrently.
class ScalarField {
 public:
  using Rule = std::function<TaylorScalar(std::span<const TaylorScalar>)>;

  ScalarField() = default;
  ScalarField(JetLayoutPtr jet, int order, Rule rule, std::string description);

  static ScalarField constant(JetLayoutPtr jet, double value);
  static ScalarField coordinate(JetLayoutPtr jet, int coord);

  bool valid() const noexcept { return rule_ != nullptr; }
  int order() const noexcept { return order_; }
  const JetLayoutPtr& jet() const noexcept { return jet_; }
  const std::string& describe() const noexcept { return description_; }
  /// True when the field is the literal constant zero.
  bool is_zero() const noexcept { return zero_; }
  /// True for fields built by constant().
  bool is_constant() const noexcept { return constant_; }

  TaylorScalar evaluate(std::span<const TaylorScalar> bindings) const { return (*rule_)(bindings); }
  double evaluate(const JetPoint& p) const;
  double operator()(const JetPoint& p) const { return evaluate(p); }

  /// First partials with respect to every layout coordinate at `p`.
  std::vector<double> gradient(const JetPoint& p) const;

  ScalarField with_order(int order) const;
  ScalarField with_description(std::string description) const;

 private:
  JetLayoutPtr jet_;
  int order_ = 0;
  std::shared_ptr<const Rule> rule_;
  std::string description_;
  bool zero_ = false;
  bool constant_ = false;
};

ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(const ScalarField& a, const ScalarField& b);
ScalarField operator/(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a);
ScalarField operator*(double a, const ScalarField& b);

/// One component of a vector field on the jet space: coefficient times d/d(coord).
struct Shift {
  int coord;
  ScalarField coefficient;
};

/// sum_i V^i d_i f as a field; nested application stays exact because each
/// level appends its own nilpotent Taylor direction.
ScalarField directional_derivative(const ScalarField& f, std::vector<Shift> direction, int order,
                                   std::string description);

/// Partial derivative with respect to one layout coordinate.
ScalarField partial(const ScalarField& f, int coord);

/// D_s f with D_s = d_t + sum_{j<s} v^(j+1) d_{v^(j)}. The default level is
/// f.order() + 1; levels above 3 need coordinates the jet space lacks.
ScalarField total_derivative(const ScalarField& f, int level = -1);

}  // namespace edskit
