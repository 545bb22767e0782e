#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "edskit/jet.hpp"
#include "edskit/variational.hpp"

namespace edskit::spin {

using Vec3 = std::array<double, 3>;
using Vec4 = std::array<double, 4>;

/// Diagonal metric diag(e0, e1, e2, e3) with e0 = +1.
struct Metric {
  Vec4 signs{1.0, 1.0, 1.0, 1.0};

  static Metric euclidean() { return {}; }
  static Metric lorentzian() { return {{1.0, -1.0, -1.0, -1.0}}; }

  /// Throws ConfigurationError unless every sign is +-1 and e0 = +1.
  void validate() const;
  double dot(const Vec4& a, const Vec4& b) const {
    return signs[0] * a[0] * b[0] + signs[1] * a[1] * b[1] + signs[2] * a[2] * b[2] + signs[3] * a[3] * b[3];
  }
  Vec4 lower(const Vec4& a) const { return {signs[0] * a[0], signs[1] * a[1], signs[2] * a[2], signs[3] * a[3]}; }
};

/// Third-order velocity jet of a parametrized spacetime curve.
struct FourJet {
  Vec4 x{}, u{}, ud{}, udd{};
};

struct SpinParams {
  double s0 = 0.2;
  Vec3 s{0.5, 0.8, -0.3};
  double m = 1.0;

  void validate() const;
  Vec4 four() const { return {s0, s[0], s[1], s[2]}; }
  /// Parameter values in builtin layout order (s0, s1, s2, s3, m).
  std::vector<double> values() const { return {s0, s[0], s[1], s[2], m}; }
  static SpinParams from_values(const std::vector<double>& v);
};

/// Parameter names of the builtin layout.
const std::vector<std::string>& param_names();
/// q = 3 jet layout with parameters s0, s1, s2, s3, m.
JetLayoutPtr builtin_layout();

/// Covector e_{rho i j k} a^i b^j c^k (e_0123 = +1, free index first).
Vec4 star3(const Vec4& a, const Vec4& b, const Vec4& c, const Metric& g = Metric::euclidean());

/// (a.a)(b.b) - (a.b)^2.
double gram_wedge_norm2(const Vec4& a, const Vec4& b, const Metric& g = Metric::euclidean());

inline double value_of(double d) { return d; }
inline double value_of(const TaylorScalar& t) { return t.value(); }
[[noreturn]] void throw_singular_bracket(double n2);

/// Bracket (1 + v.v)(s0^2 + s.s) - (s0 + s.v)^2.
template <class T>
T bracket_n2(const T* v, const T& s0, const T* s) {
  const T vv = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
  const T ss = s0 * s0 + s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
  const T sv = s0 + s[0] * v[0] + s[1] * v[1] + s[2] * v[2];
  return (1.0 + vv) * ss - sv * sv;
}

/// Below this bracket value the time-parametrized system is singular.
inline constexpr double kMinBracket = 1e-6;

/// Time-parametrized equations of motion, generic over double and TaylorScalar:
///   vpp x w / N^3 - 3 [(s0^2 + s.s)(vp.v) - (s0 + s.v)(s.vp)] vp x w / N^5
///   + m [(1 + v.v) vp - (vp.v) v] / ((1 + v.v)^(3/2) (s0^2 + s.s)^(3/2)),
/// with w = s - s0 v.
template <class T>
std::array<T, 3> e3(const T* v, const T* vp, const T* vpp, const T& s0, const T* s, const T& m) {
  using std::pow;
  using std::sqrt;
  auto cross = [](const std::array<T, 3>& a, const std::array<T, 3>& b) {
    return std::array<T, 3>{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
  };
  const std::array<T, 3> w{s[0] - s0 * v[0], s[1] - s0 * v[1], s[2] - s0 * v[2]};
  const std::array<T, 3> V{v[0], v[1], v[2]}, VP{vp[0], vp[1], vp[2]}, VPP{vpp[0], vpp[1], vpp[2]};
  const T vv = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
  const T ss = s0 * s0 + s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
  const T sv = s0 + s[0] * v[0] + s[1] * v[1] + s[2] * v[2];
  const T vpv = vp[0] * v[0] + vp[1] * v[1] + vp[2] * v[2];
  const T svp = s[0] * vp[0] + s[1] * vp[1] + s[2] * vp[2];
  const T n2 = (1.0 + vv) * ss - sv * sv;
  if (value_of(n2) < kMinBracket) throw_singular_bracket(value_of(n2));
  const T n = sqrt(n2);
  const T n3 = n2 * n;
  const T n5 = n3 * n2;
  const auto t1 = cross(VPP, w);
  const auto t2 = cross(VP, w);
  const T k2 = 3.0 * (ss * vpv - sv * svp) / n5;
  const T r = 1.0 + vv;
  const T k3 = m / (r * sqrt(r) * ss * sqrt(ss));
  std::array<T, 3> out;
  for (int a = 0; a < 3; ++a) out[a] = t1[a] / n3 - k2 * t2[a] + k3 * (r * VP[a] - vpv * V[a]);
  return out;
}

/// E3 at a plain point.
Vec3 E3(const JetPoint& p, const SpinParams& sp);

/// Builtin system on builtin_layout(); parameters default to `sp`. Margin is
/// min(N^2, 1 + v.v).
ThirdOrderSystem system(const SpinParams& sp = {});

/// Parametric covector system; orthogonal to u for every metric.
Vec4 E4(const FourJet& j, const SpinParams& sp, const Metric& g = Metric::euclidean());

/// Reparametrizes the cubic Taylor curve of j by its own x^0.
JetPoint reduce(const FourJet& j, double min_u0 = 0.1);

/// max(|E4_a - u0 E3_a|, |E4_0 + u^a E3_a|) / max(|E4|, 1e-300).
double lift_check(const FourJet& j, const SpinParams& sp, const Metric& g = Metric::euclidean());

/// Random jets with x, ud, udd in [-1, 1]^4, u0 in [0.5, 1.5] and spatial
/// u within 0.8 u0, kept when the reduced bracket N^2 is at least min_bracket.
std::vector<FourJet> sample_four_jets(int count, std::uint64_t seed, const SpinParams& sp, double min_bracket = 0.1);

struct RestMass {
  double value = 0.0;
  /// False when the radicand is negative; value then keeps its sign.
  bool real = true;
};

/// m [1 - (s.u)^2 / ((s.s)(u.u))]^(3/2).
RestMass rest_mass(const Vec4& u, const SpinParams& sp, const Metric& g = Metric::euclidean());

// --- integration ----------------------------------------------------------

/// Constraint C = w . E3(vpp = 0); E3 = 0 forces C = 0 because A vpp is orthogonal to w.
double constraint(const Vec3& v, const Vec3& vp, const SpinParams& sp);

/// Acceleration-rate vpp = vpp_perp + lambda w solving E3 = 0 on the range of A
/// with dC/dt = 0 fixing the multiplier.
Vec3 solve_vpp(const Vec3& v, const Vec3& vp, const SpinParams& sp);

/// Moves vp along grad_vp C until C vanishes (minimal one-dimensional correction).
Vec3 project_initial(const Vec3& v, const Vec3& vp, const SpinParams& sp);

struct TrajectoryRow {
  long step = 0;
  double t = 0.0;
  Vec3 x{}, v{}, vp{};
  double m0 = 0.0;
  double constraint = 0.0;
  double n2 = 0.0;
};

struct Trajectory {
  double dt = 0.0;
  std::vector<TrajectoryRow> rows;
  bool completed = true;
  std::string message;

  double max_constraint() const;
  /// max |m0 - m0(initial)| over the rows.
  double m0_drift() const;
  std::string to_csv() const;
};

struct IntegrateOptions {
  double drift_limit = 1e-4;
  double initial_tolerance = 1e-8;
};

/// Classical RK4 on (x, v, vp). Aborts (completed = false) on constraint drift
/// or a singular bracket, keeping the rows computed so far. Inadmissible
/// initial data throws ConfigurationError.
Trajectory integrate(const Vec3& x0, const Vec3& v0, const Vec3& vp0, const SpinParams& sp, double dt, long steps,
                     const IntegrateOptions& options = {});

}  // namespace edskit::spin
