#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "edskit/jet.hpp"

namespace edskit {

/// Smallest magnitude of any model denominator at a point; +inf when the
/// model has none. Samplers reject points whose margin is too small.
using MarginFn = std::function<double(const JetPoint&)>;

/// Coefficients (A, B, c) of the Euler-Poisson normal form on (t, x, v).
struct FieldTriple {
  JetLayoutPtr jet;
  std::vector<std::vector<ScalarField>> A, B;
  std::vector<ScalarField> c;
  std::vector<double> params;
  MarginFn margin;

  int q() const { return jet->q(); }
  /// max |A + A^T| relative to max(|A|, 1) at p.
  double skew_defect(const JetPoint& p) const;
};

/// Equations of motion E_a = 0 on the order-3 jet space.
struct ThirdOrderSystem {
  JetLayoutPtr jet;
  std::vector<ScalarField> E;
  std::vector<double> params;
  MarginFn margin;

  int q() const { return jet->q(); }
  std::vector<double> evaluate(const JetPoint& p) const;
};

/// Lagrangian L(t, x, v, vp) affine in vp.
struct LagrangianField {
  JetLayoutPtr jet;
  ScalarField L;
  std::vector<double> params;
  MarginFn margin;
};

/// Sampling box and rejection rule. Each draw consumes 1 + 4q uniforms in
/// coordinate order (t, x, v, vp, vpp) from one splitmix64 stream.
struct SamplePlan {
  int count = 200;
  std::uint64_t seed = 42;
  double t_lo = -1.0, t_hi = 1.0;
  double x_lo = -1.0, x_hi = 1.0;
  double v_lo = -0.8, v_hi = 0.8;
  double vp_lo = -1.0, vp_hi = 1.0;
  double vpp_lo = -1.0, vpp_hi = 1.0;
  double min_margin = 0.1;
};

std::vector<JetPoint> sample_points(const SamplePlan& plan, const JetLayout& jet,
                                    const std::vector<double>& params, const MarginFn& margin);

/// E = A vpp + (vp.d_v)A vp + B vp + c.
ThirdOrderSystem assemble(const FieldTriple& tr);
/// K = E - A vpp, the dt coefficient of the underlined form.
std::vector<ScalarField> k_fields(const FieldTriple& tr);

struct ExtractionDiagnostics {
  int samples = 0;
  double reconstruction_residual = 0.0;
  double skew_defect = 0.0;
  /// Largest change of the extracted A when vp and vpp are resampled.
  double vpp_dependence = 0.0;
  bool euler_poisson_shaped = true;
  std::string message;
};

struct Extraction {
  FieldTriple triple;
  ExtractionDiagnostics diagnostics;
};

/// Reads (A, B, c) off a system at vp = vpp = 0 and measures how well the
/// normal form reproduces it on the sample set.
Extraction extract(const ThirdOrderSystem& sys, const SamplePlan& diagnostics_samples = {100, 1});

/// E_a = d_{x^a} L - D(d_{v^a} L) + D^2(d_{vp^a} L).
ThirdOrderSystem euler_poisson(const LagrangianField& lag);

/// Throws NonAffineLagrangian if any second vp-derivative exceeds 1e-12 at
/// `points` seeded samples.
void check_affine(const LagrangianField& lag, int points = 20, std::uint64_t seed = 20);

/// Random Lagrangian L0 + L1_a vp^a with L0, L1_a sparse polynomials of
/// degree <= 3 in (t, x, v); ground truth for the variationality checks.
LagrangianField random_affine_lagrangian(int q, std::uint64_t seed, int terms = 6);

/// Bracket normalization in the six conditions: averaged uses
/// [ab] = (ab - ba)/2, [abc] = (1/6) sum sgn, (ab) = (ab + ba)/2; unnormalized
/// drops the factors.
enum class BracketConvention { Averaged, Unnormalized };

struct ConditionStat {
  double max = 0.0;
  double mean = 0.0;
  int worst_sample = -1;
};

struct HelmholtzReport {
  std::array<ConditionStat, 6> conditions{};
  int samples = 0;
  int skipped = 0;
  std::uint64_t seed = 0;
  double tolerance = 0.0;
  BracketConvention convention = BracketConvention::Averaged;
  std::vector<JetPoint> points;
  bool pass = false;

  /// Names of the conditions whose max residual reaches the tolerance.
  std::vector<std::string> failing() const;
  std::string to_json() const;
};

/// Residuals of H1..H6 at one point, one value per condition (max over indices).
std::array<double, 6> helmholtz_at(const FieldTriple& tr, const JetPoint& p,
                                   BracketConvention convention = BracketConvention::Averaged);

HelmholtzReport helmholtz_residuals(const FieldTriple& tr, const SamplePlan& plan, double tolerance,
                                    BracketConvention convention = BracketConvention::Averaged);

}  // namespace edskit
