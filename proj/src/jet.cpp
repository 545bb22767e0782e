#include "edskit/jet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "edskit/errors.hpp"

namespace edskit {

JetLayout::JetLayout(int q, std::vector<std::string> params) : q_(q), params_(std::move(params)) {
  if (q < 1) throw ConfigurationError("jet dimension q must be at least 1");
}

int JetLayout::order_of(int coord) const noexcept {
  if (coord <= 0 || coord >= jet_size()) return 0;
  return (coord - 1) / q_;
}

int JetLayout::param_index(const std::string& name) const noexcept {
  auto it = std::find(params_.begin(), params_.end(), name);
  return it == params_.end() ? -1 : static_cast<int>(it - params_.begin());
}

std::string JetLayout::coordinate_name(int coord) const {
  if (coord == 0) return "t";
  if (is_param(coord)) return params_.at(coord - jet_size());
  static const char* prefixes[] = {"x", "v", "vp", "vpp"};
  const int j = (coord - 1) / q_;
  return prefixes[j] + std::to_string((coord - 1) % q_ + 1);
}

JetPoint JetPoint::zeros(int q, int num_params) {
  JetPoint p;
  p.x.assign(q, 0.0);
  p.v.assign(q, 0.0);
  p.vp.assign(q, 0.0);
  p.vpp.assign(q, 0.0);
  p.params.assign(num_params, 0.0);
  return p;
}

JetPoint JetPoint::from_flat(int q, std::span<const double> flat) {
  if (static_cast<int>(flat.size()) < 1 + 4 * q) throw ConfigurationError("flat jet vector too short");
  JetPoint p;
  p.t = flat[0];
  auto take = [&](int j) { return std::vector<double>(flat.begin() + 1 + j * q, flat.begin() + 1 + (j + 1) * q); };
  p.x = take(0);
  p.v = take(1);
  p.vp = take(2);
  p.vpp = take(3);
  p.params.assign(flat.begin() + 1 + 4 * q, flat.end());
  return p;
}

std::vector<double> JetPoint::flat() const {
  std::vector<double> out;
  out.reserve(1 + 4 * x.size() + params.size());
  out.push_back(t);
  for (const auto* block : {&x, &v, &vp, &vpp, &params}) out.insert(out.end(), block->begin(), block->end());
  return out;
}

bool JetPoint::finite() const noexcept {
  auto flat_values = flat();
  return std::all_of(flat_values.begin(), flat_values.end(), [](double d) { return std::isfinite(d); });
}

std::vector<TaylorScalar> constant_bindings(const JetPoint& p) {
  auto flat = p.flat();
  return {flat.begin(), flat.end()};
}

std::vector<TaylorScalar> taylor_lift(const JetPoint& p, int degree, std::span<const int> active) {
  if (degree > kMaxTaylorDegree || degree < 0)
    throw ConfigurationError("lift degree " + std::to_string(degree) + " outside [0, " +
                             std::to_string(kMaxTaylorDegree) + "]");
  if (active.empty()) throw ConfigurationError("taylor_lift needs at least one active coordinate");
  auto bindings = constant_bindings(p);
  const auto* layout = TaylorLayout::dense(static_cast<int>(active.size()), degree);
  for (std::size_t i = 0; i < active.size(); ++i) {
    const int c = active[i];
    if (c < 0 || c >= static_cast<int>(bindings.size())) throw ConfigurationError("active coordinate out of range");
    bindings[c] = TaylorScalar::variable(layout, static_cast<int>(i), bindings[c].value());
  }
  return bindings;
}

ScalarField::ScalarField(JetLayoutPtr jet, int order, Rule rule, std::string description)
    : jet_(std::move(jet)),
      order_(order),
      rule_(std::make_shared<const Rule>(std::move(rule))),
      description_(std::move(description)) {}

ScalarField ScalarField::constant(JetLayoutPtr jet, double value) {
  std::ostringstream os;
  os.precision(17);
  os << value;
  ScalarField f(std::move(jet), 0, [value](std::span<const TaylorScalar>) { return TaylorScalar(value); },
                os.str());
  f.zero_ = value == 0.0;
  f.constant_ = true;
  return f;
}

ScalarField ScalarField::coordinate(JetLayoutPtr jet, int coord) {
  const int order = jet->order_of(coord);
  std::string name = jet->coordinate_name(coord);
  return ScalarField(std::move(jet), order, [coord](std::span<const TaylorScalar> b) { return b[coord]; },
                     std::move(name));
}

double ScalarField::evaluate(const JetPoint& p) const {
  auto b = constant_bindings(p);
  if (static_cast<int>(b.size()) != jet_->size())
    throw ConfigurationError("point has " + std::to_string(b.size()) + " coordinates, layout expects " +
                             std::to_string(jet_->size()));
  return evaluate(std::span<const TaylorScalar>(b)).value();
}

std::vector<double> ScalarField::gradient(const JetPoint& p) const {
  std::vector<int> active(jet_->size());
  for (int i = 0; i < jet_->size(); ++i) active[i] = i;
  auto b = taylor_lift(p, 1, active);
  auto r = evaluate(std::span<const TaylorScalar>(b));
  std::vector<double> g(jet_->size());
  for (int i = 0; i < jet_->size(); ++i) g[i] = r.gradient(i);
  return g;
}

ScalarField ScalarField::with_order(int order) const {
  ScalarField f = *this;
  f.order_ = order;
  return f;
}

ScalarField ScalarField::with_description(std::string description) const {
  ScalarField f = *this;
  f.description_ = std::move(description);
  return f;
}

namespace {

void check_compatible(const ScalarField& a, const ScalarField& b) {
  if (!a.valid() || !b.valid()) throw ConfigurationError("operation on an empty field");
  if (a.jet() != b.jet() && !a.jet()->compatible(*b.jet()))
    throw ConfigurationError("fields live on different jet layouts");
}

}  // namespace

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  check_compatible(a, b);
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return ScalarField(
      a.jet(), std::max(a.order(), b.order()),
      [a, b](std::span<const TaylorScalar> x) { return a.evaluate(x) + b.evaluate(x); },
      "(" + a.describe() + " + " + b.describe() + ")");
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  check_compatible(a, b);
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  return ScalarField(
      a.jet(), std::max(a.order(), b.order()),
      [a, b](std::span<const TaylorScalar> x) { return a.evaluate(x) - b.evaluate(x); },
      "(" + a.describe() + " - " + b.describe() + ")");
}

ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  check_compatible(a, b);
  if (a.is_zero()) return a;
  if (b.is_zero()) return b;
  return ScalarField(
      a.jet(), std::max(a.order(), b.order()),
      [a, b](std::span<const TaylorScalar> x) { return a.evaluate(x) * b.evaluate(x); },
      "(" + a.describe() + " * " + b.describe() + ")");
}

ScalarField operator/(const ScalarField& a, const ScalarField& b) {
  check_compatible(a, b);
  return ScalarField(
      a.jet(), std::max(a.order(), b.order()),
      [a, b](std::span<const TaylorScalar> x) { return a.evaluate(x) / b.evaluate(x); },
      "(" + a.describe() + " / " + b.describe() + ")");
}

ScalarField operator-(const ScalarField& a) {
  if (a.is_zero()) return a;
  return ScalarField(
      a.jet(), a.order(), [a](std::span<const TaylorScalar> x) { return -a.evaluate(x); },
      "(-" + a.describe() + ")");
}

ScalarField operator*(double s, const ScalarField& b) {
  return ScalarField::constant(b.jet(), s) * b;
}

ScalarField directional_derivative(const ScalarField& f, std::vector<Shift> direction, int order,
                                   std::string description) {
  direction.erase(std::remove_if(direction.begin(), direction.end(),
                                 [](const Shift& s) { return s.coefficient.is_zero(); }),
                  direction.end());
  if (direction.empty() || f.is_constant()) return ScalarField::constant(f.jet(), 0.0).with_order(order);
  return ScalarField(
      f.jet(), order,
      [f, direction = std::move(direction)](std::span<const TaylorScalar> b) {
        const TaylorLayout* base = TaylorLayout::scalar();
        for (const auto& v : b) {
          if (!v.is_scalar()) {
            base = v.layout();
            break;
          }
        }
        const TaylorLayout* ext = base->with_group({1, 1});
        const TaylorScalar eps = TaylorScalar::variable(ext, ext->num_vars() - 1, 0.0);
        std::vector<TaylorScalar> shifted;
        shifted.reserve(b.size());
        for (const auto& v : b) shifted.push_back(v.embed(ext));
        for (const auto& s : direction) {
          shifted[s.coord] += s.coefficient.evaluate(b).embed(ext) * eps;
        }
        return f.evaluate(std::span<const TaylorScalar>(shifted)).last_variable_slice(base, 1);
      },
      std::move(description));
}

ScalarField partial(const ScalarField& f, int coord) {
  const int order = std::max(f.order(), f.jet()->order_of(coord));
  return directional_derivative(f, {{coord, ScalarField::constant(f.jet(), 1.0)}}, order,
                                "d/d" + f.jet()->coordinate_name(coord) + "[" + f.describe() + "]");
}

ScalarField total_derivative(const ScalarField& f, int level) {
  if (level < 0) level = f.order() + 1;
  if (level < 1 || level > 3)
    throw ConfigurationError("total derivative of level " + std::to_string(level) +
                             " needs jet coordinates beyond order 3");
  if (f.order() > level)
    throw ConfigurationError("D" + std::to_string(level) + " applied to a field of jet order " +
                             std::to_string(f.order()));
  const auto& jet = f.jet();
  std::vector<Shift> dir;
  dir.push_back({JetLayout::t(), ScalarField::constant(jet, 1.0)});
  for (int j = 0; j < level; ++j)
    for (int a = 0; a < jet->q(); ++a)
      dir.push_back({jet->level(j, a), ScalarField::coordinate(jet, jet->level(j + 1, a))});
  return directional_derivative(f, std::move(dir), level,
                                "D" + std::to_string(level) + "[" + f.describe() + "]");
}

}  // namespace edskit
