#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edskit/errors.hpp"
#include "edskit/generator.hpp"
#include "edskit/spin.hpp"
#include "edskit/variational.hpp"

namespace edskit {

/// Contact forms theta^(j)a = dv^(j)a - v^(j+1)a dt, j < order, as rows over
/// the layout co-frame (row j*q + a).
struct ContactBasis {
  int order = 0;
  int q = 0;
  Eigen::MatrixXd rows;

  static ContactBasis at(const JetLayout& jet, const JetPoint& p, int order);
};

/// q one-forms indexed by the value slot: row a holds the co-frame
/// coefficients of the form paired with dx^a.
struct VectorValuedForm {
  JetLayoutPtr jet;
  Eigen::MatrixXd blocks;

  static VectorValuedForm zero(JetLayoutPtr jet);
  int q() const { return static_cast<int>(blocks.rows()); }
  double dt(int a) const { return blocks(a, JetLayout::t()); }
  double dvp(int a, int b) const { return blocks(a, jet->vp(b)); }
};

using FormField = std::function<VectorValuedForm(const JetPoint&)>;

/// A_ab dx^a (x) dvp^b + K_a dx^a (x) dt.
FormField epsilon_underline(const FieldTriple& tr);

struct LieOptions {
  double h = 1e-3;
  double tolerance = 1e-5;
};

/// d/de of the flow pullback of F at p, central differences at h and h/2
/// combined by Richardson extrapolation. The value slot is not transformed.
/// Throws StepTooLarge when the two estimates differ by more than
/// 10 * tolerance * max(1, |estimate|).
VectorValuedForm lie_derivative_form(const ProlongedGenerator& pg, const FormField& F, const JetPoint& p,
                                     const LieOptions& options = {});

struct MultiplierSolution {
  Eigen::MatrixXd Xi;
  /// Coefficients of theta^(0) and theta^(1) per value index (q x 2q).
  Eigen::MatrixXd contact;
  /// The same one-forms over the co-frame; only dt, dx, dv entries are nonzero.
  Eigen::MatrixXd omega;
  double residual = 0.0;
  bool rank_deficient = false;
};

/// Least-squares fit of L(eps) = Xi eps + contact terms at one point.
MultiplierSolution multiplier_solve_at(const ProlongedGenerator& pg, const FieldTriple& tr, const JetPoint& p,
                                       const LieOptions& options = {});

struct MultiplierReport {
  std::string generator;
  std::vector<JetPoint> points;
  std::vector<MultiplierSolution> solutions;
  double max_residual = 0.0;
  double mean_residual = 0.0;
  int worst_sample = -1;
  int rank_deficient = 0;
  std::uint64_t seed = 0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Solves at every sample point (order-2 prolongation of g).
MultiplierReport multiplier_solve(const Generator& g, const FieldTriple& tr, const SamplePlan& plan,
                                  double tolerance = 1e-6, const LieOptions& options = {});

/// tau = -q.x, xi = t q + n x x; on layouts with parameters s0..s3 also
/// s0 -> -q.s, s -> s0 q + n x s.
Generator pseudo_orthogonal_generator(const spin::Vec3& n, const spin::Vec3& q,
                                      const JetLayoutPtr& jet = spin::builtin_layout());

/// Readings of the component Lie derivative: (i) plain derivative of E_a along
/// the prolonged generator, (ii) adds E_a D tau, (iii) adds E_b d_{x^a} xi^b.
enum class LieConvention { I, II, III };

const char* convention_name(LieConvention c);

/// R = L(E) - n x E - (q.v) E + (v.E) q for the builtin system at p.
spin::Vec3 invariance_defect_spin(const JetPoint& p, const spin::Vec3& n, const spin::Vec3& q,
                                  const spin::SpinParams& sp, LieConvention convention = LieConvention::I);

struct InvarianceReport {
  std::array<double, 3> max_relative{};  // per convention
  int samples = 0;
  std::uint64_t seed = 0;
  double tolerance = 0.0;
  /// Conventions whose max relative defect is below tolerance.
  std::vector<LieConvention> passing;
};

/// Random admissible (point, n, q, s) draws; relative defect |R| / |E|.
InvarianceReport invariance_survey(int samples, std::uint64_t seed, double tolerance = 1e-6);

/// Fixed generator and parameters over the given points.
InvarianceReport invariance_at_points(const std::vector<JetPoint>& points, const spin::Vec3& n, const spin::Vec3& q,
                                      const spin::SpinParams& sp, double tolerance = 1e-6);

/// {"generator", "max_residual", "mean_residual", "convention", "verdict", ...}.
/// With `inv` the verdict also needs the reading (i) defect below its tolerance.
std::string symmetry_report_json(const MultiplierReport& m, const InvarianceReport* inv);

}  // namespace edskit
