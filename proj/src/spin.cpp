#include "edskit/spin.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "edskit/errors.hpp"
#include "edskit/random.hpp"

namespace edskit::spin {

namespace {

// Levi-Civita symbol of a permutation of (0, 1, 2, 3); 0 when indices repeat.
int levi_civita(int a, int b, int c, int d) {
  const int p[4] = {a, b, c, d};
  int sign = 1;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      if (p[i] == p[j]) return 0;
      if (p[i] > p[j]) sign = -sign;
    }
  return sign;
}

double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross3(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

std::string fmt(double d) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, r.ptr);
}

}  // namespace

void throw_singular_bracket(double n2) {
  throw SingularDenominator("singular bracket N^2 = " + fmt(n2) + " (< " + fmt(kMinBracket) + ")");
}

void Metric::validate() const {
  for (double s : signs)
    if (s != 1.0 && s != -1.0) throw ConfigurationError("metric signs must be +1 or -1");
  if (signs[0] != 1.0) throw ConfigurationError("metric needs g00 = +1");
}

void SpinParams::validate() const {
  if (!(s0 * s0 + dot3(s, s) > 0.0)) throw ConfigurationError("spin vector (s0, s) must be nonzero");
  if (!(m > 0.0)) throw ConfigurationError("mass parameter m must be positive");
}

SpinParams SpinParams::from_values(const std::vector<double>& v) {
  if (v.size() != 5) throw ConfigurationError("spin parameters need (s0, s1, s2, s3, m)");
  return {v[0], {v[1], v[2], v[3]}, v[4]};
}

const std::vector<std::string>& param_names() {
  static const std::vector<std::string> names{"s0", "s1", "s2", "s3", "m"};
  return names;
}

JetLayoutPtr builtin_layout() {
  static const JetLayoutPtr jet = JetLayout::make(3, param_names());
  return jet;
}

Vec4 star3(const Vec4& a, const Vec4& b, const Vec4& c, const Metric& g) {
  // inputs are contravariant and |det g| = 1, so the metric does not enter
  g.validate();
  Vec4 out{};
  for (int r = 0; r < 4; ++r)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k) {
          const int e = levi_civita(r, i, j, k);
          if (e) out[r] += e * a[i] * b[j] * c[k];
        }
  return out;
}

double gram_wedge_norm2(const Vec4& a, const Vec4& b, const Metric& g) {
  const double ab = g.dot(a, b);
  return g.dot(a, a) * g.dot(b, b) - ab * ab;
}

Vec3 E3(const JetPoint& p, const SpinParams& sp) {
  if (p.q() != 3) throw ConfigurationError("the spinning-particle system needs q = 3");
  auto r = e3<double>(p.v.data(), p.vp.data(), p.vpp.data(), sp.s0, sp.s.data(), sp.m);
  return {r[0], r[1], r[2]};
}

ThirdOrderSystem system(const SpinParams& sp) {
  sp.validate();
  const JetLayoutPtr jet = builtin_layout();
  ThirdOrderSystem sys{jet, {}, sp.values(), {}};
  for (int a = 0; a < 3; ++a) {
    sys.E.push_back(ScalarField(
        jet, 3,
        [jet, a](std::span<const TaylorScalar> b) {
          const TaylorScalar* v = &b[jet->v(0)];
          const TaylorScalar* vp = &b[jet->vp(0)];
          const TaylorScalar* vpp = &b[jet->vpp(0)];
          const TaylorScalar* s = &b[jet->param(1)];
          return e3<TaylorScalar>(v, vp, vpp, b[jet->param(0)], s, b[jet->param(4)])[a];
        },
        "E" + std::to_string(a + 1)));
  }
  sys.margin = [](const JetPoint& p) {
    const double s[3] = {p.params[1], p.params[2], p.params[3]};
    const double n2 = bracket_n2<double>(p.v.data(), p.params[0], s);
    return std::min(n2, 1.0 + dot3({p.v[0], p.v[1], p.v[2]}, {p.v[0], p.v[1], p.v[2]}));
  };
  return sys;
}

Vec4 E4(const FourJet& j, const SpinParams& sp, const Metric& g) {
  g.validate();
  const Vec4 s = sp.four();
  const Vec4& u = j.u;
  const double G = gram_wedge_norm2(s, u, g);
  const double uu = g.dot(u, u);
  const double ss = g.dot(s, s);
  if (std::abs(G) < kMinBracket) throw SingularDenominator("||s ^ u||^2 = " + fmt(G) + " is too small");
  if (std::abs(uu) < kMinBracket) throw SingularDenominator("||u||^2 = " + fmt(uu) + " is too small");
  if (std::abs(ss) < kMinBracket) throw SingularDenominator("||s||^2 = " + fmt(ss) + " is too small");
  const double aG = std::abs(G);
  const double wedge_dot = g.dot(j.ud, u) * ss - g.dot(j.ud, s) * g.dot(u, s);
  const Vec4 t1 = star3(j.udd, u, s, g);
  const Vec4 t2 = star3(j.ud, u, s, g);
  const double norm_u = std::sqrt(std::abs(uu));
  const double mk = sp.m / std::pow(std::abs(ss), 1.5);
  const double udu = g.dot(j.ud, u);
  const Vec4 ud_low = g.lower(j.ud), u_low = g.lower(u);
  Vec4 out{};
  for (int r = 0; r < 4; ++r)
    out[r] = t1[r] / std::pow(aG, 1.5) - 3.0 * t2[r] * wedge_dot / std::pow(aG, 2.5) +
             mk * (ud_low[r] / norm_u - udu * u_low[r] / (norm_u * uu));
  return out;
}

JetPoint reduce(const FourJet& j, double min_u0) {
  const double b1 = j.u[0], b2 = j.ud[0] / 2.0, b3 = j.udd[0] / 6.0;
  if (std::abs(b1) < min_u0) throw DomainError("|u0| = " + fmt(std::abs(b1)) + " is below " + fmt(min_u0));
  // tau(delta) inverting x0(tau) - x0 = b1 tau + b2 tau^2 + b3 tau^3
  const double a1 = 1.0 / b1;
  const double a2 = -b2 / (b1 * b1 * b1);
  const double a3 = (2.0 * b2 * b2 - b1 * b3) / std::pow(b1, 5);
  const TaylorLayout* l = TaylorLayout::dense(1, 3);
  TaylorScalar tau(l, 0.0);
  tau.coefficients()[1] = a1;
  tau.coefficients()[2] = a2;
  tau.coefficients()[3] = a3;
  const TaylorScalar tau2 = tau * tau, tau3 = tau2 * tau;
  JetPoint p = JetPoint::zeros(3);
  p.t = j.x[0];
  for (int a = 0; a < 3; ++a) {
    const int r = a + 1;
    const TaylorScalar xa = j.x[r] + j.u[r] * tau + (j.ud[r] / 2.0) * tau2 + (j.udd[r] / 6.0) * tau3;
    p.x[a] = xa.coefficient(0);
    p.v[a] = xa.coefficient(1);
    p.vp[a] = 2.0 * xa.coefficient(2);
    p.vpp[a] = 6.0 * xa.coefficient(3);
  }
  return p;
}

double lift_check(const FourJet& j, const SpinParams& sp, const Metric& g) {
  const Vec4 big = E4(j, sp, g);
  const Vec3 e = E3(reduce(j), sp);
  const double u0 = j.u[0];
  double r = std::abs(big[0] + j.u[1] * e[0] + j.u[2] * e[1] + j.u[3] * e[2]);
  double scale = 1e-300;
  for (int a = 0; a < 3; ++a) r = std::max(r, std::abs(big[a + 1] - u0 * e[a]));
  for (double c : big) scale = std::max(scale, std::abs(c));
  return r / scale;
}

std::vector<FourJet> sample_four_jets(int count, std::uint64_t seed, const SpinParams& sp, double min_bracket) {
  SplitMix64 rng(seed);
  std::vector<FourJet> out;
  long attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > 1000L * std::max(count, 1)) throw DomainError("could not draw admissible four-jets");
    FourJet j;
    for (auto& c : j.x) c = rng.uniform(-1.0, 1.0);
    j.u[0] = rng.uniform(0.5, 1.5);
    for (int a = 1; a < 4; ++a) j.u[a] = j.u[0] * rng.uniform(-0.8, 0.8);
    for (auto& c : j.ud) c = rng.uniform(-1.0, 1.0);
    for (auto& c : j.udd) c = rng.uniform(-1.0, 1.0);
    const double v[3] = {j.u[1] / j.u[0], j.u[2] / j.u[0], j.u[3] / j.u[0]};
    if (bracket_n2<double>(v, sp.s0, sp.s.data()) < min_bracket) continue;
    out.push_back(j);
  }
  return out;
}

RestMass rest_mass(const Vec4& u, const SpinParams& sp, const Metric& g) {
  const Vec4 s = sp.four();
  const double den = g.dot(s, s) * g.dot(u, u);
  if (den == 0.0) throw SingularDenominator("rest mass needs (s.s)(u.u) != 0");
  const double su = g.dot(s, u);
  const double radicand = 1.0 - su * su / den;
  const double mag = sp.m * std::pow(std::abs(radicand), 1.5);
  return {radicand >= 0.0 ? mag : -mag, radicand >= 0.0};
}

// ---------------------------------------------------------------------------

namespace {

struct ConstraintJet {
  double value;
  Vec3 d_v, d_vp;
  Vec3 K;
  Vec3 w;
  double n2;
};

// C = w . K with K = E3(vpp = 0), lifted to first order in (v, vp).
ConstraintJet constraint_jet(const Vec3& v, const Vec3& vp, const SpinParams& sp) {
  const TaylorLayout* l = TaylorLayout::dense(6, 1);
  TaylorScalar V[3], VP[3], VPP[3], S[3];
  for (int a = 0; a < 3; ++a) {
    V[a] = TaylorScalar::variable(l, a, v[a]);
    VP[a] = TaylorScalar::variable(l, 3 + a, vp[a]);
    VPP[a] = TaylorScalar(0.0);
    S[a] = TaylorScalar(sp.s[a]);
  }
  const TaylorScalar s0(sp.s0), m(sp.m);
  const auto K = e3<TaylorScalar>(V, VP, VPP, s0, S, m);
  TaylorScalar C(0.0);
  ConstraintJet out{};
  for (int a = 0; a < 3; ++a) {
    const TaylorScalar w = S[a] - s0 * V[a];
    C += w * K[a];
    out.K[a] = K[a].value();
    out.w[a] = w.value();
  }
  C = C.on(l);
  out.value = C.value();
  for (int a = 0; a < 3; ++a) {
    out.d_v[a] = C.gradient(a);
    out.d_vp[a] = C.gradient(3 + a);
  }
  out.n2 = bracket_n2<double>(v.data(), sp.s0, sp.s.data());
  return out;
}

}  // namespace

double constraint(const Vec3& v, const Vec3& vp, const SpinParams& sp) {
  const Vec3 zero{};
  const auto K = e3<double>(v.data(), vp.data(), zero.data(), sp.s0, sp.s.data(), sp.m);
  double c = 0.0;
  for (int a = 0; a < 3; ++a) c += (sp.s[a] - sp.s0 * v[a]) * K[a];
  return c;
}

Vec3 solve_vpp(const Vec3& v, const Vec3& vp, const SpinParams& sp) {
  const ConstraintJet cj = constraint_jet(v, vp, sp);
  const double ww = dot3(cj.w, cj.w);
  if (ww < kMinBracket) throw SingularDenominator("w = s - s0 v vanishes");
  const double n3 = cj.n2 * std::sqrt(cj.n2);
  const Vec3 wk = cross3(cj.w, cj.K);
  Vec3 perp;
  for (int a = 0; a < 3; ++a) perp[a] = -n3 * wk[a] / ww;
  const double den = dot3(cj.d_vp, cj.w);
  const double scale = std::sqrt(dot3(cj.d_vp, cj.d_vp) * ww);
  if (!(std::abs(den) > 1e-12 * std::max(scale, 1e-300)))
    throw SingularDenominator("constraint propagation is degenerate (dC/dvp . w = " + fmt(den) + ")");
  const double lambda = -(dot3(cj.d_v, vp) + dot3(cj.d_vp, perp)) / den;
  Vec3 out;
  for (int a = 0; a < 3; ++a) out[a] = perp[a] + lambda * cj.w[a];
  return out;
}

Vec3 project_initial(const Vec3& v, const Vec3& vp, const SpinParams& sp) {
  Vec3 out = vp;
  for (int iter = 0; iter < 8; ++iter) {
    const ConstraintJet cj = constraint_jet(v, out, sp);
    const double g2 = dot3(cj.d_vp, cj.d_vp);
    if (std::abs(cj.value) <= 1e-15 * std::max(1.0, std::sqrt(g2) * std::sqrt(dot3(out, out)))) break;
    if (g2 == 0.0) throw DomainError("constraint gradient vanishes; cannot project initial data");
    for (int a = 0; a < 3; ++a) out[a] -= cj.value * cj.d_vp[a] / g2;
  }
  return out;
}

double Trajectory::max_constraint() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, std::abs(r.constraint));
  return m;
}

double Trajectory::m0_drift() const {
  double m = 0.0;
  if (rows.empty()) return m;
  for (const auto& r : rows) m = std::max(m, std::abs(r.m0 - rows.front().m0));
  return m;
}

std::string Trajectory::to_csv() const {
  std::string out = "step,t,x1,x2,x3,v1,v2,v3,vp1,vp2,vp3,m0,constraint,N2\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step);
    out += ',' + fmt(r.t);
    for (const Vec3* block : {&r.x, &r.v, &r.vp})
      for (double c : *block) out += ',' + fmt(c);
    out += ',' + fmt(r.m0) + ',' + fmt(r.constraint) + ',' + fmt(r.n2) + '\n';
  }
  return out;
}

namespace {

TrajectoryRow monitor(long step, double t, const Vec3& x, const Vec3& v, const Vec3& vp, const SpinParams& sp) {
  TrajectoryRow row{step, t, x, v, vp, 0.0, 0.0, 0.0};
  row.n2 = bracket_n2<double>(v.data(), sp.s0, sp.s.data());
  row.m0 = rest_mass({1.0, v[0], v[1], v[2]}, sp).value;
  row.constraint = constraint(v, vp, sp);
  return row;
}

bool finite(const Vec3& a) { return std::isfinite(a[0]) && std::isfinite(a[1]) && std::isfinite(a[2]); }

}  // namespace

Trajectory integrate(const Vec3& x0, const Vec3& v0, const Vec3& vp0, const SpinParams& sp, double dt, long steps,
                     const IntegrateOptions& options) {
  sp.validate();
  if (!(dt > 0.0) || steps < 0) throw ConfigurationError("integration needs dt > 0 and steps >= 0");
  const double n2 = bracket_n2<double>(v0.data(), sp.s0, sp.s.data());
  if (n2 < kMinBracket) throw_singular_bracket(n2);
  const double c0 = constraint(v0, vp0, sp);
  if (!(std::abs(c0) < options.initial_tolerance))
    throw ConfigurationError("initial constraint residual " + fmt(c0) + " exceeds " +
                             fmt(options.initial_tolerance) + "; project the initial acceleration first");

  Trajectory traj;
  traj.dt = dt;
  traj.rows.push_back(monitor(0, 0.0, x0, v0, vp0, sp));
  Vec3 x = x0, v = v0, vp = vp0;
  for (long step = 1; step <= steps; ++step) {
    try {
      const Vec3 a1 = solve_vpp(v, vp, sp);
      Vec3 v2, vp2, v3, vp3, v4, vp4;
      for (int a = 0; a < 3; ++a) v2[a] = v[a] + 0.5 * dt * vp[a], vp2[a] = vp[a] + 0.5 * dt * a1[a];
      const Vec3 a2 = solve_vpp(v2, vp2, sp);
      for (int a = 0; a < 3; ++a) v3[a] = v[a] + 0.5 * dt * vp2[a], vp3[a] = vp[a] + 0.5 * dt * a2[a];
      const Vec3 a3 = solve_vpp(v3, vp3, sp);
      for (int a = 0; a < 3; ++a) v4[a] = v[a] + dt * vp3[a], vp4[a] = vp[a] + dt * a3[a];
      const Vec3 a4 = solve_vpp(v4, vp4, sp);
      for (int a = 0; a < 3; ++a) {
        x[a] += dt / 6.0 * (v[a] + 2.0 * v2[a] + 2.0 * v3[a] + v4[a]);
        const double nv = v[a] + dt / 6.0 * (vp[a] + 2.0 * vp2[a] + 2.0 * vp3[a] + vp4[a]);
        vp[a] += dt / 6.0 * (a1[a] + 2.0 * a2[a] + 2.0 * a3[a] + a4[a]);
        v[a] = nv;
      }
      if (!finite(x) || !finite(v) || !finite(vp)) throw FlowDivergence("nonfinite state");
      TrajectoryRow row = monitor(step, step * dt, x, v, vp, sp);
      traj.rows.push_back(row);
      if (!(std::abs(row.constraint) <= options.drift_limit)) {
        traj.completed = false;
        traj.message = "constraint drift " + fmt(row.constraint) + " exceeds " + fmt(options.drift_limit) +
                       " at step " + std::to_string(step);
        break;
      }
    } catch (const Error& e) {
      traj.completed = false;
      traj.message = std::string(e.what()) + " at step " + std::to_string(step);
      break;
    }
  }
  return traj;
}

}  // namespace edskit::spin
