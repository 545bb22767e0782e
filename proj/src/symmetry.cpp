#include "edskit/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "edskit/errors.hpp"
#include "edskit/parallel.hpp"
#include "edskit/random.hpp"
#include "json.hpp"

namespace edskit {

ContactBasis ContactBasis::at(const JetLayout& jet, const JetPoint& p, int order) {
  if (order < 1 || order > 3) throw ConfigurationError("contact basis order must be 1..3");
  const int q = jet.q();
  ContactBasis cb{order, q, Eigen::MatrixXd::Zero(order * q, jet.size())};
  const std::vector<double>* next[] = {&p.v, &p.vp, &p.vpp};
  for (int j = 0; j < order; ++j) {
    for (int a = 0; a < q; ++a) {
      cb.rows(j * q + a, jet.level(j, a)) = 1.0;
      cb.rows(j * q + a, JetLayout::t()) = -(*next[j])[a];
    }
  }
  return cb;
}

VectorValuedForm VectorValuedForm::zero(JetLayoutPtr jet) {
  const int q = jet->q(), n = jet->size();
  return {std::move(jet), Eigen::MatrixXd::Zero(q, n)};
}

FormField epsilon_underline(const FieldTriple& tr) {
  auto K = std::make_shared<const std::vector<ScalarField>>(k_fields(tr));
  auto A = std::make_shared<const std::vector<std::vector<ScalarField>>>(tr.A);
  JetLayoutPtr jet = tr.jet;
  return [jet, A, K](const JetPoint& p) {
    const auto b = constant_bindings(p);
    const std::span<const TaylorScalar> s(b);
    VectorValuedForm f = VectorValuedForm::zero(jet);
    for (int a = 0; a < jet->q(); ++a) {
      f.blocks(a, JetLayout::t()) = (*K)[a].evaluate(s).value();
      for (int c = 0; c < jet->q(); ++c) f.blocks(a, jet->vp(c)) = (*A)[a][c].evaluate(s).value();
    }
    return f;
  };
}

namespace {

Eigen::MatrixXd pulled_back(const ProlongedGenerator& pg, const FormField& F, const JetPoint& p, double eps) {
  const FlowStep step = flow_step(pg, p, eps);
  return F(step.point).blocks * step.jacobian;
}

Eigen::MatrixXd central(const ProlongedGenerator& pg, const FormField& F, const JetPoint& p, double h) {
  return (pulled_back(pg, F, p, h) - pulled_back(pg, F, p, -h)) / (2.0 * h);
}

}  // namespace

VectorValuedForm lie_derivative_form(const ProlongedGenerator& pg, const FormField& F, const JetPoint& p,
                                     const LieOptions& options) {
  const JetLayoutPtr& jet = pg.jet();
  if (pg.components().empty()) return VectorValuedForm::zero(jet);
  const Eigen::MatrixXd d1 = central(pg, F, p, options.h);
  const Eigen::MatrixXd d2 = central(pg, F, p, 0.5 * options.h);
  Eigen::MatrixXd r = (4.0 * d2 - d1) / 3.0;
  const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
  const double gap = (r - d2).cwiseAbs().maxCoeff();
  if (!std::isfinite(gap)) throw FlowDivergence("nonfinite Lie derivative estimate");
  if (gap > 10.0 * options.tolerance * scale) {
    std::ostringstream os;
    os << "Richardson estimates disagree by " << gap << " (step " << options.h << ")";
    throw StepTooLarge(os.str());
  }
  return {jet, std::move(r)};
}

MultiplierSolution multiplier_solve_at(const ProlongedGenerator& pg, const FieldTriple& tr, const JetPoint& p,
                                       const LieOptions& options) {
  const JetLayout& jet = *tr.jet;
  const int q = jet.q(), n = jet.size();
  const VectorValuedForm eps = epsilon_underline(tr)(p);
  const VectorValuedForm L = lie_derivative_form(pg, epsilon_underline(tr), p, options);
  const ContactBasis cb = ContactBasis::at(jet, p, 2);

  // unknowns per value index: Xi_a (q), theta^(0) and theta^(1) coefficients (2q)
  Eigen::MatrixXd M(n, 3 * q);
  M.leftCols(q) = eps.blocks.transpose();
  M.rightCols(2 * q) = cb.rows.transpose();

  MultiplierSolution sol;
  sol.Xi.resize(q, q);
  sol.contact.resize(q, 2 * q);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
  sol.rank_deficient = cod.rank() < M.cols();
  double r2 = 0.0;
  for (int a = 0; a < q; ++a) {
    const Eigen::VectorXd rhs = L.blocks.row(a).transpose();
    const Eigen::VectorXd x = cod.solve(rhs);
    sol.Xi.row(a) = x.head(q).transpose();
    sol.contact.row(a) = x.tail(2 * q).transpose();
    r2 += (M * x - rhs).squaredNorm();
  }
  sol.omega = sol.contact * cb.rows;
  sol.residual = std::sqrt(r2);
  return sol;
}

MultiplierReport multiplier_solve(const Generator& g, const FieldTriple& tr, const SamplePlan& plan, double tolerance,
                                  const LieOptions& options) {
  if (!g.jet()->compatible(*tr.jet)) throw ConfigurationError("generator and triple use different jet layouts");
  const ProlongedGenerator pg = prolong(g, 2);
  MultiplierReport rep;
  rep.seed = plan.seed;
  rep.tolerance = tolerance;
  rep.points = sample_points(plan, *tr.jet, tr.params, tr.margin);
  rep.solutions.resize(rep.points.size());
  parallel_for(rep.points.size(), [&](std::size_t i) { rep.solutions[i] = multiplier_solve_at(pg, tr, rep.points[i], options); });
  double sum = 0.0;
  for (std::size_t i = 0; i < rep.solutions.size(); ++i) {
    const auto& s = rep.solutions[i];
    sum += s.residual;
    if (s.rank_deficient) ++rep.rank_deficient;
    if (rep.worst_sample < 0 || s.residual > rep.max_residual) {
      rep.max_residual = s.residual;
      rep.worst_sample = static_cast<int>(i);
    }
  }
  if (!rep.solutions.empty()) rep.mean_residual = sum / static_cast<double>(rep.solutions.size());
  rep.pass = !rep.solutions.empty() && rep.max_residual < tolerance;
  return rep;
}

namespace {

/// sum coef * coordinate; the constant zero field when no term survives.
ScalarField linear(const JetLayoutPtr& jet, std::vector<std::pair<double, int>> terms, std::string description) {
  std::erase_if(terms, [](const auto& t) { return t.first == 0.0; });
  if (terms.empty()) return ScalarField::constant(jet, 0.0).with_description(std::move(description));
  return ScalarField(
      jet, 0,
      [terms](std::span<const TaylorScalar> b) {
        TaylorScalar s = b[terms[0].second] * terms[0].first;
        for (std::size_t k = 1; k < terms.size(); ++k) s += b[terms[k].second] * terms[k].first;
        return s;
      },
      std::move(description));
}

}  // namespace

Generator pseudo_orthogonal_generator(const spin::Vec3& n, const spin::Vec3& q, const JetLayoutPtr& jet) {
  if (jet->q() != 3) throw ConfigurationError("pseudo-orthogonal generators need q = 3");
  Generator g;
  g.tau = linear(jet, {{-q[0], jet->x(0)}, {-q[1], jet->x(1)}, {-q[2], jet->x(2)}}, "tau");
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    // (n x x)_a = n_b x_c - n_c x_b
    g.xi.push_back(linear(jet, {{q[a], JetLayout::t()}, {n[b], jet->x(c)}, {-n[c], jet->x(b)}},
                          "xi" + std::to_string(a + 1)));
  }
  int idx[4];
  for (int k = 0; k < 4; ++k) idx[k] = jet->param_index("s" + std::to_string(k));
  if (std::all_of(idx, idx + 4, [](int i) { return i >= 0; })) {
    g.param_action.resize(jet->num_params());
    g.param_action[idx[0]] = linear(
        jet, {{-q[0], jet->param(idx[1])}, {-q[1], jet->param(idx[2])}, {-q[2], jet->param(idx[3])}}, "ds0");
    for (int a = 0; a < 3; ++a) {
      const int b = (a + 1) % 3, c = (a + 2) % 3;
      g.param_action[idx[a + 1]] =
          linear(jet, {{q[a], jet->param(idx[0])}, {n[b], jet->param(idx[c + 1])}, {-n[c], jet->param(idx[b + 1])}},
                 "ds" + std::to_string(a + 1));
    }
  }
  g.validate();
  return g;
}

const char* convention_name(LieConvention c) {
  switch (c) {
    case LieConvention::I: return "i";
    case LieConvention::II: return "ii";
    case LieConvention::III: return "iii";
  }
  return "?";
}

namespace {

spin::Vec3 cross(const spin::Vec3& a, const spin::Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const spin::Vec3& a, const spin::Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double norm(const spin::Vec3& a) { return std::sqrt(dot(a, a)); }

}  // namespace

spin::Vec3 invariance_defect_spin(const JetPoint& p, const spin::Vec3& n, const spin::Vec3& q,
                                  const spin::SpinParams& sp, LieConvention convention) {
  const ThirdOrderSystem sys = spin::system(sp);
  JetPoint at = p;
  at.params = sp.values();
  const Generator g = pseudo_orthogonal_generator(n, q, sys.jet);
  const ProlongedGenerator pg = prolong(g, 3);
  const spin::Vec3 E = spin::E3(at, sp);
  spin::Vec3 LE{};
  for (int a = 0; a < 3; ++a) LE[a] = apply_generator(pg, sys.E[a], at);

  if (convention == LieConvention::II) {
    const double dtau = total_derivative(g.tau, 1).evaluate(at);
    for (int a = 0; a < 3; ++a) LE[a] += E[a] * dtau;
  } else if (convention == LieConvention::III) {
    std::array<std::vector<double>, 3> grad;
    for (int b = 0; b < 3; ++b) grad[b] = g.xi[b].gradient(at);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) LE[a] += E[b] * grad[b][sys.jet->x(a)];
  }

  const spin::Vec3 v{at.v[0], at.v[1], at.v[2]};
  const spin::Vec3 nE = cross(n, E);
  const double qv = dot(q, v), vE = dot(v, E);
  spin::Vec3 R;
  for (int a = 0; a < 3; ++a) R[a] = LE[a] - nE[a] - qv * E[a] + vE * q[a];
  return R;
}

namespace {

std::array<double, 3> relative_defects(const JetPoint& p, const spin::Vec3& n, const spin::Vec3& q,
                                       const spin::SpinParams& sp) {
  JetPoint at = p;
  at.params = sp.values();
  const double e = std::max(norm(spin::E3(at, sp)), std::numeric_limits<double>::min());
  std::array<double, 3> out;
  for (int c = 0; c < 3; ++c) out[c] = norm(invariance_defect_spin(at, n, q, sp, static_cast<LieConvention>(c))) / e;
  return out;
}

void finish(InvarianceReport& rep, const std::vector<std::array<double, 3>>& rel) {
  for (const auto& r : rel)
    for (int c = 0; c < 3; ++c) rep.max_relative[c] = std::max(rep.max_relative[c], r[c]);
  for (int c = 0; c < 3; ++c)
    if (rep.samples > 0 && rep.max_relative[c] < rep.tolerance) rep.passing.push_back(static_cast<LieConvention>(c));
}

}  // namespace

InvarianceReport invariance_survey(int samples, std::uint64_t seed, double tolerance) {
  InvarianceReport rep;
  rep.samples = samples;
  rep.seed = seed;
  rep.tolerance = tolerance;
  struct Draw {
    JetPoint p;
    spin::Vec3 n, q;
    spin::SpinParams sp;
  };
  SplitMix64 rng(seed);
  std::vector<Draw> draws;
  const JetLayoutPtr jet = spin::builtin_layout();
  long attempts = 0;
  while (static_cast<int>(draws.size()) < samples) {
    if (++attempts > 1000L * samples) throw DomainError("could not draw admissible spin configurations");
    Draw d;
    for (auto& c : d.n) c = rng.uniform(-1.0, 1.0);
    for (auto& c : d.q) c = rng.uniform(-1.0, 1.0);
    d.sp.s0 = rng.uniform(-1.0, 1.0);
    for (auto& c : d.sp.s) c = rng.uniform(-1.0, 1.0);
    d.sp.m = rng.uniform(0.5, 2.0);
    SamplePlan plan;
    plan.count = 1;
    plan.seed = rng.next();
    const ThirdOrderSystem sys = spin::system(d.sp);
    try {
      d.p = sample_points(plan, *jet, d.sp.values(), sys.margin).front();
    } catch (const DomainError&) {
      continue;
    }
    draws.push_back(std::move(d));
  }
  std::vector<std::array<double, 3>> rel(draws.size());
  parallel_for(draws.size(), [&](std::size_t i) {
    const Draw& d = draws[i];
    rel[i] = relative_defects(d.p, d.n, d.q, d.sp);
  });
  finish(rep, rel);
  return rep;
}

InvarianceReport invariance_at_points(const std::vector<JetPoint>& points, const spin::Vec3& n, const spin::Vec3& q,
                                      const spin::SpinParams& sp, double tolerance) {
  InvarianceReport rep;
  rep.samples = static_cast<int>(points.size());
  rep.tolerance = tolerance;
  std::vector<std::array<double, 3>> rel(points.size());
  parallel_for(points.size(), [&](std::size_t i) { rel[i] = relative_defects(points[i], n, q, sp); });
  finish(rep, rel);
  return rep;
}

std::string symmetry_report_json(const MultiplierReport& m, const InvarianceReport* inv) {
  nlohmann::ordered_json j;
  j["generator"] = m.generator;
  j["max_residual"] = m.max_residual;
  j["mean_residual"] = m.mean_residual;
  bool pass = m.pass;
  if (inv) {
    nlohmann::ordered_json d = nlohmann::ordered_json::object();
    for (int c = 0; c < 3; ++c) d[convention_name(static_cast<LieConvention>(c))] = inv->max_relative[c];
    j["invariance_defect"] = d;
    pass = pass && inv->max_relative[0] < inv->tolerance;
  }
  j["convention"] = convention_name(LieConvention::I);
  j["samples"] = m.points.size();
  j["seed"] = m.seed;
  j["tolerance"] = m.tolerance;
  j["rank_deficient_points"] = m.rank_deficient;
  if (m.worst_sample >= 0) {
    const auto& p = m.points[m.worst_sample];
    j["worst"] = {{"sample", m.worst_sample}, {"t", p.t}, {"x", p.x}, {"v", p.v}, {"vp", p.vp}};
  }
  j["verdict"] = pass ? "pass" : "fail";
  return j.dump(2);
}

}  // namespace edskit
