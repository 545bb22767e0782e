#include "edskit/variational.hpp"

#include <algorithm>
#include <cmath>

#include "edskit/errors.hpp"
#include "edskit/parallel.hpp"
#include "edskit/random.hpp"
#include "json.hpp"

namespace edskit {

namespace {

constexpr const char* kConditionNames[6] = {"H1", "H2", "H3", "H4", "H5", "H6"};

using Tensor2 = std::vector<std::vector<double>>;
using Tensor3 = std::vector<Tensor2>;

Tensor2 tensor2(int q) { return Tensor2(q, std::vector<double>(q, 0.0)); }
Tensor3 tensor3(int q) { return Tensor3(q, tensor2(q)); }

// Field equal to f with the listed coordinates replaced by zero.
ScalarField zeroed(const ScalarField& f, std::vector<int> coords, int order, std::string description) {
  return ScalarField(
      f.jet(), order,
      [f, coords = std::move(coords)](std::span<const TaylorScalar> b) {
        std::vector<TaylorScalar> copy(b.begin(), b.end());
        for (int c : coords) copy[c] = TaylorScalar(0.0);
        return f.evaluate(std::span<const TaylorScalar>(copy));
      },
      std::move(description));
}

std::vector<int> acceleration_coords(const JetLayout& jet) {
  std::vector<int> out;
  for (int a = 0; a < jet.q(); ++a) out.push_back(jet.vp(a));
  for (int a = 0; a < jet.q(); ++a) out.push_back(jet.vpp(a));
  return out;
}

}  // namespace

double FieldTriple::skew_defect(const JetPoint& p) const {
  const int n = q();
  Tensor2 a = tensor2(n);
  double scale = 1.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      a[i][j] = A[i][j](p);
      scale = std::max(scale, std::abs(a[i][j]));
    }
  double d = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d = std::max(d, std::abs(a[i][j] + a[j][i]));
  return d / scale;
}

std::vector<double> ThirdOrderSystem::evaluate(const JetPoint& p) const {
  std::vector<double> out;
  out.reserve(E.size());
  for (const auto& e : E) out.push_back(e(p));
  return out;
}

std::vector<JetPoint> sample_points(const SamplePlan& plan, const JetLayout& jet,
                                    const std::vector<double>& params, const MarginFn& margin) {
  if (plan.count < 0) throw ConfigurationError("negative sample count");
  SplitMix64 rng(plan.seed);
  const int q = jet.q();
  std::vector<JetPoint> out;
  out.reserve(plan.count);
  const long long max_attempts = 1000LL * std::max(plan.count, 1);
  long long attempts = 0;
  while (static_cast<int>(out.size()) < plan.count) {
    if (++attempts > max_attempts)
      throw DomainError("sampling box yields too few admissible points (margin >= " +
                        std::to_string(plan.min_margin) + ")");
    JetPoint p = JetPoint::zeros(q, 0);
    p.t = rng.uniform(plan.t_lo, plan.t_hi);
    for (int a = 0; a < q; ++a) p.x[a] = rng.uniform(plan.x_lo, plan.x_hi);
    for (int a = 0; a < q; ++a) p.v[a] = rng.uniform(plan.v_lo, plan.v_hi);
    for (int a = 0; a < q; ++a) p.vp[a] = rng.uniform(plan.vp_lo, plan.vp_hi);
    for (int a = 0; a < q; ++a) p.vpp[a] = rng.uniform(plan.vpp_lo, plan.vpp_hi);
    p.params = params;
    if (margin) {
      double m = 0.0;
      try {
        m = margin(p);
      } catch (const Error&) {
        continue;
      }
      if (!(m >= plan.min_margin)) continue;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<ScalarField> k_fields(const FieldTriple& tr) {
  const auto& jet = tr.jet;
  const int q = tr.q();
  std::vector<Shift> along_vp;
  for (int c = 0; c < q; ++c) along_vp.push_back({jet->v(c), ScalarField::coordinate(jet, jet->vp(c))});
  std::vector<ScalarField> K(q);
  for (int a = 0; a < q; ++a) {
    ScalarField k = tr.c[a];
    for (int b = 0; b < q; ++b) {
      ScalarField dA = directional_derivative(tr.A[a][b], along_vp, 2,
                                              "(vp.d_v)[" + tr.A[a][b].describe() + "]");
      k = k + (dA + tr.B[a][b]) * ScalarField::coordinate(jet, jet->vp(b));
    }
    K[a] = k.with_order(std::max(k.order(), 2)).with_description("K" + std::to_string(a + 1));
  }
  return K;
}

ThirdOrderSystem assemble(const FieldTriple& tr) {
  const auto& jet = tr.jet;
  const int q = tr.q();
  auto K = k_fields(tr);
  ThirdOrderSystem sys{jet, {}, tr.params, tr.margin};
  for (int a = 0; a < q; ++a) {
    ScalarField e = K[a];
    for (int b = 0; b < q; ++b) e = e + tr.A[a][b] * ScalarField::coordinate(jet, jet->vpp(b));
    sys.E.push_back(e.with_order(3).with_description("E" + std::to_string(a + 1)));
  }
  return sys;
}

Extraction extract(const ThirdOrderSystem& sys, const SamplePlan& diagnostics_samples) {
  const auto& jet = sys.jet;
  const int q = sys.q();
  const auto acc = acceleration_coords(*jet);
  FieldTriple tr{jet, {}, {}, {}, sys.params, sys.margin};
  tr.A.assign(q, std::vector<ScalarField>(q));
  tr.B.assign(q, std::vector<ScalarField>(q));
  std::vector<std::vector<ScalarField>> raw_A(q, std::vector<ScalarField>(q));
  for (int a = 0; a < q; ++a) {
    const std::string ia = std::to_string(a + 1);
    for (int b = 0; b < q; ++b) {
      const std::string ab = ia + std::to_string(b + 1);
      raw_A[a][b] = partial(sys.E[a], jet->vpp(b));
      tr.A[a][b] = zeroed(raw_A[a][b], acc, 1, "A" + ab);
      tr.B[a][b] = zeroed(partial(sys.E[a], jet->vp(b)), acc, 1, "B" + ab);
    }
    tr.c.push_back(zeroed(sys.E[a], acc, 1, "c" + ia));
  }

  ExtractionDiagnostics diag;
  if (diagnostics_samples.count > 0) {
    const auto points = sample_points(diagnostics_samples, *jet, sys.params, sys.margin);
    const ThirdOrderSystem rebuilt = assemble(tr);
    for (const auto& p : points) {
      try {
        const auto e = sys.evaluate(p);
        const auto r = rebuilt.evaluate(p);
        for (int a = 0; a < q; ++a) {
          diag.reconstruction_residual = std::max(diag.reconstruction_residual, std::abs(e[a] - r[a]));
          for (int b = 0; b < q; ++b)
            diag.vpp_dependence = std::max(diag.vpp_dependence, std::abs(raw_A[a][b](p) - tr.A[a][b](p)));
        }
        diag.skew_defect = std::max(diag.skew_defect, tr.skew_defect(p));
        ++diag.samples;
      } catch (const Error&) {
      }
    }
    if (diag.skew_defect > 1e-10) {
      diag.euler_poisson_shaped = false;
      diag.message = "d E / d vpp is not skew-symmetric";
    } else if (diag.vpp_dependence > 1e-8) {
      diag.euler_poisson_shaped = false;
      diag.message = "d E / d vpp depends on vp or vpp";
    } else if (diag.reconstruction_residual > 1e-8) {
      diag.euler_poisson_shaped = false;
      diag.message = "system is not of the form A vpp + (vp.d_v)A vp + B vp + c";
    }
  }
  return {std::move(tr), std::move(diag)};
}

ThirdOrderSystem euler_poisson(const LagrangianField& lag) {
  const auto& jet = lag.jet;
  ThirdOrderSystem sys{jet, {}, lag.params, lag.margin};
  for (int a = 0; a < jet->q(); ++a) {
    const ScalarField lx = partial(lag.L, jet->x(a));
    const ScalarField lv = partial(lag.L, jet->v(a)).with_order(2);
    // affine in vp, so d_vp L does not depend on vp
    const ScalarField lvp = partial(lag.L, jet->vp(a)).with_order(1);
    ScalarField e = lx - total_derivative(lv, 3) + total_derivative(total_derivative(lvp, 2), 3);
    sys.E.push_back(e.with_order(3).with_description("E" + std::to_string(a + 1)));
  }
  return sys;
}

void check_affine(const LagrangianField& lag, int points, std::uint64_t seed) {
  const auto& jet = lag.jet;
  const int q = jet->q();
  SamplePlan plan;
  plan.count = points;
  plan.seed = seed;
  std::vector<int> vp(q);
  for (int a = 0; a < q; ++a) vp[a] = jet->vp(a);
  for (const auto& p : sample_points(plan, *jet, lag.params, lag.margin)) {
    const auto b = taylor_lift(p, 2, vp);
    const TaylorScalar r = lag.L.evaluate(b);
    const TaylorLayout* l = r.layout();
    for (int i = 0; i < l->size(); ++i) {
      if (l->total_degree(i) != 2) continue;
      const double d = r.derivative(l->exponents(i));
      if (std::abs(d) > 1e-12)
        throw NonAffineLagrangian("Lagrangian is not affine in vp: second vp-derivative " + std::to_string(d));
    }
  }
}

namespace {

struct Monomial {
  double coef;
  std::vector<int> powers;  // over t, x, v
};

TaylorScalar evaluate_poly(const std::vector<Monomial>& poly, std::span<const TaylorScalar> b) {
  TaylorScalar sum(0.0);
  for (const auto& m : poly) {
    TaylorScalar term(m.coef);
    for (std::size_t i = 0; i < m.powers.size(); ++i)
      if (m.powers[i] > 0) term = term * pow(b[i], m.powers[i]);
    sum += term;
  }
  return sum;
}

std::vector<Monomial> random_poly(int vars, int terms, SplitMix64& rng) {
  std::vector<Monomial> poly;
  for (int k = 0; k < terms; ++k) {
    Monomial m{rng.uniform(-1.0, 1.0), std::vector<int>(vars, 0)};
    const int degree = static_cast<int>(rng.next() % 4);
    for (int d = 0; d < degree; ++d) ++m.powers[rng.next() % vars];
    poly.push_back(std::move(m));
  }
  return poly;
}

}  // namespace

LagrangianField random_affine_lagrangian(int q, std::uint64_t seed, int terms) {
  SplitMix64 rng(seed);
  auto jet = JetLayout::make(q);
  const int vars = 1 + 2 * q;  // t, x, v occupy the first layout slots
  auto l0 = random_poly(vars, terms, rng);
  std::vector<std::vector<Monomial>> l1;
  for (int a = 0; a < q; ++a) l1.push_back(random_poly(vars, terms, rng));
  ScalarField L(
      jet, 2,
      [jet, l0, l1](std::span<const TaylorScalar> b) {
        TaylorScalar sum = evaluate_poly(l0, b);
        for (int a = 0; a < jet->q(); ++a) sum += evaluate_poly(l1[a], b) * b[jet->vp(a)];
        return sum;
      },
      "L");
  return {jet, L, {}, {}};
}

// ---------------------------------------------------------------------------

namespace {

struct BracketFactors {
  double anti2, anti3, sym2;
};

BracketFactors factors(BracketConvention c) {
  if (c == BracketConvention::Averaged) return {0.5, 1.0 / 6.0, 0.5};
  return {1.0, 1.0, 1.0};
}

// sum over permutations of (i, j, k) with sign of f(p1, p2, p3)
template <class F>
double alternate3(int i, int j, int k, F&& f) {
  return f(i, j, k) - f(i, k, j) + f(j, k, i) - f(j, i, k) + f(k, i, j) - f(k, j, i);
}

}  // namespace

std::array<double, 6> helmholtz_at(const FieldTriple& tr, const JetPoint& p, BracketConvention convention) {
  const int q = tr.q();
  const auto& jet = *tr.jet;
  const int ne = 2 * q;
  const TaylorLayout* l1 = TaylorLayout::get({{1, 3}, {ne, 1}});
  const TaylorLayout* l2 = TaylorLayout::get({{1, 1}, {ne, 1}});
  const TaylorLayout* l3 = TaylorLayout::dense(q, 2);

  auto index = [&](const TaylorLayout* l, int sk, int z) {
    std::vector<std::uint8_t> e(1 + ne, 0);
    e[0] = static_cast<std::uint8_t>(sk);
    if (z >= 0) e[1 + z] = 1;
    return l->index_of(e);
  };
  // t = t0 + s, x = x0 + s v0 + e_x, v = v0 + e_v; s^k e_z then carries D1^k d_z / k!
  auto bind = [&](const TaylorLayout* l) {
    auto b = constant_bindings(p);
    const TaylorScalar s = TaylorScalar::variable(l, 0, 0.0);
    b[0] = s + p.t;
    for (int a = 0; a < q; ++a) {
      b[jet.x(a)] = TaylorScalar::variable(l, 1 + a, p.x[a]) + s * p.v[a];
      b[jet.v(a)] = TaylorScalar::variable(l, 1 + q + a, p.v[a]);
    }
    return b;
  };

  const auto b1 = bind(l1);
  const auto b2 = bind(l2);
  auto b3 = constant_bindings(p);
  for (int a = 0; a < q; ++a) b3[jet.v(a)] = TaylorScalar::variable(l3, a, p.v[a]);

  Tensor2 D1A = tensor2(q), D3A = tensor2(q), B = tensor2(q), D1B = tensor2(q);
  Tensor3 dxA = tensor3(q), dvA = tensor3(q), D1dvA = tensor3(q), D2dvA = tensor3(q), D1dxA = tensor3(q);
  Tensor3 dxB = tensor3(q), dvB = tensor3(q);
  Tensor2 dxc = tensor2(q), dvc = tensor2(q), D1dvc = tensor2(q);  // [z][a]
  Tensor3 dvdvc = tensor3(q);                                        // [z][w][a]

  const int i_s1 = index(l1, 1, -1), i_s3 = index(l1, 3, -1);
  for (int a = 0; a < q; ++a) {
    for (int b = 0; b < q; ++b) {
      const TaylorScalar fa = tr.A[a][b].evaluate(b1).on(l1);
      D1A[a][b] = fa.coefficient(i_s1);
      D3A[a][b] = 6.0 * fa.coefficient(i_s3);
      for (int z = 0; z < q; ++z) {
        dxA[z][a][b] = fa.coefficient(index(l1, 0, z));
        dvA[z][a][b] = fa.coefficient(index(l1, 0, q + z));
        D1dxA[z][a][b] = fa.coefficient(index(l1, 1, z));
        D1dvA[z][a][b] = fa.coefficient(index(l1, 1, q + z));
        D2dvA[z][a][b] = 2.0 * fa.coefficient(index(l1, 2, q + z));
      }
      const TaylorScalar fb = tr.B[a][b].evaluate(b2).on(l2);
      B[a][b] = fb.value();
      D1B[a][b] = fb.coefficient(index(l2, 1, -1));
      for (int z = 0; z < q; ++z) {
        dxB[z][a][b] = fb.coefficient(index(l2, 0, z));
        dvB[z][a][b] = fb.coefficient(index(l2, 0, q + z));
      }
    }
    const TaylorScalar fc = tr.c[a].evaluate(b2).on(l2);
    for (int z = 0; z < q; ++z) {
      dxc[z][a] = fc.coefficient(index(l2, 0, z));
      dvc[z][a] = fc.coefficient(index(l2, 0, q + z));
      D1dvc[z][a] = fc.coefficient(index(l2, 1, q + z));
    }
    const TaylorScalar fcc = tr.c[a].evaluate(b3).on(l3);
    for (int z = 0; z < q; ++z)
      for (int w = 0; w < q; ++w) {
        std::vector<std::uint8_t> e(q, 0);
        e[z] += 1;
        e[w] += 1;
        dvdvc[z][w][a] = fcc.derivative(e);
      }
  }

  const BracketFactors f = factors(convention);
  std::array<double, 6> h{};
  auto upd = [&](int k, double r) { h[k] = std::max(h[k], std::abs(r)); };
  for (int a = 0; a < q; ++a) {
    for (int b = 0; b < q; ++b) {
      upd(1, 2 * f.anti2 * (B[a][b] - B[b][a]) - 3 * D1A[a][b]);
      upd(3, f.sym2 * (dvc[a][b] + dvc[b][a]) - f.sym2 * (D1B[a][b] + D1B[b][a]));
      upd(5, 4 * f.anti2 * (dxc[a][b] - dxc[b][a]) - 2 * f.anti2 * (D1dvc[a][b] - D1dvc[b][a]) - D3A[a][b]);
      for (int c = 0; c < q; ++c) {
        upd(0, f.anti3 * alternate3(a, b, c, [&](int i, int j, int k) { return dvA[i][j][k]; }));
        upd(2, 2 * f.anti2 * (dvB[a][b][c] - dvB[b][a][c]) - 4 * f.anti2 * (dxA[a][b][c] - dxA[b][a][c]) +
                   dxA[c][a][b] + 2 * D1dvA[c][a][b]);
        upd(4, 2 * f.anti2 * (dvdvc[c][a][b] - dvdvc[c][b][a]) - 4 * f.anti2 * (dxB[a][b][c] - dxB[b][a][c]) +
                   D2dvA[c][a][b] +
                   6 * f.anti3 * alternate3(a, b, c, [&](int i, int j, int k) { return D1dxA[i][j][k]; }));
      }
    }
  }
  return h;
}

HelmholtzReport helmholtz_residuals(const FieldTriple& tr, const SamplePlan& plan, double tolerance,
                                    BracketConvention convention) {
  HelmholtzReport report;
  report.seed = plan.seed;
  report.tolerance = tolerance;
  report.convention = convention;
  report.points = sample_points(plan, *tr.jet, tr.params, tr.margin);
  const std::size_t n = report.points.size();
  std::vector<std::array<double, 6>> values(n);
  std::vector<char> ok(n, 0);
  parallel_for(n, [&](std::size_t i) {
    try {
      values[i] = helmholtz_at(tr, report.points[i], convention);
      ok[i] = 1;
      for (double v : values[i])
        if (!std::isfinite(v)) ok[i] = 0;
    } catch (const Error&) {
      ok[i] = 0;
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (!ok[i]) {
      ++report.skipped;
      continue;
    }
    ++report.samples;
    for (int k = 0; k < 6; ++k) {
      auto& c = report.conditions[k];
      c.mean += values[i][k];
      if (c.worst_sample < 0 || values[i][k] > c.max) {
        c.max = values[i][k];
        c.worst_sample = static_cast<int>(i);
      }
    }
  }
  if (n > 0 && report.skipped * 5 > static_cast<int>(n))
    throw DomainError(std::to_string(report.skipped) + " of " + std::to_string(n) +
                      " samples could not be evaluated");
  bool pass = report.samples > 0;
  for (auto& c : report.conditions) {
    if (report.samples > 0) c.mean /= report.samples;
    pass = pass && c.max < tolerance;
  }
  report.pass = pass;
  return report;
}

std::vector<std::string> HelmholtzReport::failing() const {
  std::vector<std::string> out;
  for (int k = 0; k < 6; ++k)
    if (!(conditions[k].max < tolerance)) out.emplace_back(kConditionNames[k]);
  return out;
}

std::string HelmholtzReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json cond = nlohmann::ordered_json::object();
  for (int k = 0; k < 6; ++k) {
    const auto& c = conditions[k];
    nlohmann::ordered_json e;
    e["max"] = c.max;
    e["mean"] = c.mean;
    if (c.worst_sample >= 0) {
      const auto& p = points[c.worst_sample];
      e["worst"] = {{"sample", c.worst_sample}, {"t", p.t}, {"x", p.x}, {"v", p.v}};
    }
    cond[kConditionNames[k]] = e;
  }
  j["conditions"] = cond;
  j["samples"] = samples;
  j["skipped"] = skipped;
  j["seed"] = seed;
  j["tolerance"] = tolerance;
  j["convention"] = convention == BracketConvention::Averaged ? "averaged" : "unnormalized";
  j["failing"] = failing();
  j["verdict"] = pass ? "pass" : "fail";
  return j.dump(2);
}

}  // namespace edskit
