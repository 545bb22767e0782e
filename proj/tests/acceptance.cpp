// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "edskit/dsl.hpp"
#include "edskit/errors.hpp"
#include "edskit/generator.hpp"
#include "edskit/random.hpp"
#include "edskit/spin.hpp"
#include "edskit/symmetry.hpp"
#include "edskit/variational.hpp"

using namespace edskit;

namespace {

const std::string kFixtures = EDSKIT_FIXTURES;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

FieldTriple spin_triple() { return extract(spin::system()).triple; }

Outcome helmholtz_spin() {
  const auto t0 = std::chrono::steady_clock::now();
  SamplePlan plan;
  plan.count = 200;
  const HelmholtzReport rep = helmholtz_residuals(spin_triple(), plan, 1e-8);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  for (const auto& c : rep.conditions) worst = std::max(worst, c.max);
  return {rep.pass && rep.samples == 200 && secs < 10.0,
          fmt("max residual %.3g over %d samples, %.2f s", worst, rep.samples, secs)};
}

Outcome oracle_closure() {
  SamplePlan plan;
  plan.count = 100;
  int averaged = 0, unnormalized = 0;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int q = k % 2 == 0 ? 2 : 3;
    const FieldTriple tr = extract(euler_poisson(random_affine_lagrangian(q, 1000 + k))).triple;
    const HelmholtzReport avg = helmholtz_residuals(tr, plan, 1e-8);
    for (const auto& c : avg.conditions) worst = std::max(worst, c.max);
    if (avg.pass) ++averaged;
    if (helmholtz_residuals(tr, plan, 1e-8, BracketConvention::Unnormalized).pass) ++unnormalized;
  }
  SamplePlan spin_plan;
  spin_plan.count = 200;
  const FieldTriple st = spin_triple();
  const bool spin_avg = helmholtz_residuals(st, spin_plan, 1e-8).pass;
  const bool spin_unn = helmholtz_residuals(st, spin_plan, 1e-8, BracketConvention::Unnormalized).pass;
  const bool avg_all = averaged == 20 && spin_avg;
  const bool unn_all = unnormalized == 20 && spin_unn;
  return {avg_all && !unn_all,
          fmt("averaged %d/20 (max %.3g), unnormalized %d/20, spin averaged %s unnormalized %s; frozen: %s", averaged,
              worst, unnormalized, spin_avg ? "pass" : "fail", spin_unn ? "pass" : "fail",
              avg_all && !unn_all ? "averaged" : "none")};
}

Outcome prolongation_exact() {
  const JetLayoutPtr jet = spin::builtin_layout();
  const spin::Vec3 zero{0, 0, 0};
  SplitMix64 rng(301);
  SamplePlan plan;
  plan.count = 100;
  plan.seed = 302;
  const auto points = sample_points(plan, *jet, spin::SpinParams{}.values(), {});
  double worst = 0.0;
  for (const JetPoint& p : points) {
    spin::Vec3 n, q;
    for (int i = 0; i < 3; ++i) n[i] = rng.uniform(-1, 1), q[i] = rng.uniform(-1, 1);
    const auto rot = prolong(pseudo_orthogonal_generator(n, zero, jet), 3);
    const auto bst = prolong(pseudo_orthogonal_generator(zero, q, jet), 3);
    auto cross = [&](const std::vector<double>& w, int a) { return n[(a + 1) % 3] * w[(a + 2) % 3] - n[(a + 2) % 3] * w[(a + 1) % 3]; };
    auto dot = [&](const std::vector<double>& w) { return q[0] * w[0] + q[1] * w[1] + q[2] * w[2]; };
    const double qv = dot(p.v), qvp = dot(p.vp), qvpp = dot(p.vpp);
    for (int a = 0; a < 3; ++a) {
      const double expected_rot[3] = {cross(p.v, a), cross(p.vp, a), cross(p.vpp, a)};
      const double expected_bst[3] = {q[a] + qv * p.v[a], 2 * qv * p.vp[a] + qvp * p.v[a],
                                      3 * qv * p.vpp[a] + 3 * qvp * p.vp[a] + qvpp * p.v[a]};
      for (int j = 1; j <= 3; ++j) {
        worst = std::max(worst, std::abs(rot.coeff(j, a)(p) - expected_rot[j - 1]));
        worst = std::max(worst, std::abs(bst.coeff(j, a)(p) - expected_bst[j - 1]));
      }
    }
  }
  return {worst < 1e-14, fmt("max deviation %.3g over %zu points, orders 1-3", worst, points.size())};
}

Outcome invariance_identity() {
  const InvarianceReport rep = invariance_survey(200, 404, 1e-6);
  std::string passing;
  for (LieConvention c : rep.passing) passing += std::string(passing.empty() ? "" : ",") + convention_name(c);
  return {rep.passing.size() == 1,
          fmt("max relative defect i %.3g, ii %.3g, iii %.3g over %d draws; passing reading: %s", rep.max_relative[0],
              rep.max_relative[1], rep.max_relative[2], rep.samples, passing.empty() ? "none" : passing.c_str())};
}

Outcome reduction_lemma() {
  const spin::SpinParams sp;
  double worst = 0.0;
  const auto jets = spin::sample_four_jets(500, 505, sp);
  for (const auto& j : jets) worst = std::max(worst, spin::lift_check(j, sp));
  return {worst < 1e-8, fmt("max lift residual %.3g over %zu jets", worst, jets.size())};
}

Outcome structural_identities() {
  const spin::SpinParams sp;
  SplitMix64 rng(606);
  double orth = 0.0, homog = 0.0;
  int evaluated = 0;
  for (const auto& j : spin::sample_four_jets(1000, 607, sp)) {
    const spin::Vec4 e = spin::E4(j, sp);
    double dot = 0.0, emax = 0.0, umax = 0.0;
    for (int r = 0; r < 4; ++r) {
      dot += e[r] * j.u[r];
      emax = std::max(emax, std::abs(e[r]));
      umax = std::max(umax, std::abs(j.u[r]));
    }
    orth = std::max(orth, std::abs(dot) / std::max(emax * umax, 1e-300));
    const double lam = rng.uniform(0.5, 2.0);
    spin::FourJet s = j;
    for (int r = 0; r < 4; ++r) {
      s.u[r] *= lam;
      s.ud[r] *= lam * lam;
      s.udd[r] *= lam * lam * lam;
    }
    const spin::Vec4 es = spin::E4(s, sp);
    for (int r = 0; r < 4; ++r) homog = std::max(homog, std::abs(es[r] - lam * e[r]) / std::max(emax, 1.0));
    ++evaluated;
  }

  const FieldTriple tr = spin_triple();
  const auto sys = spin::system(sp);
  const auto K = k_fields(tr);
  SamplePlan plan;
  plan.count = 1000;
  plan.seed = 608;
  double contact = 0.0;
  for (const JetPoint& p : sample_points(plan, *tr.jet, tr.params, tr.margin)) {
    const auto e = sys.evaluate(p);
    for (int a = 0; a < 3; ++a) {
      double avpp = 0.0;
      for (int b = 0; b < 3; ++b) avpp += tr.A[a][b](p) * p.vpp[b];
      contact = std::max(contact, std::abs(K[a](p) - e[a] + avpp) / std::max(1.0, std::abs(e[a])));
    }
  }
  return {orth < 1e-12 && homog < 1e-9 && contact < 1e-12,
          fmt("<E,u> %.3g, homogeneity %.3g over %d jets; K - E + A vpp %.3g over 1000 points", orth, homog, evaluated,
              contact)};
}

Outcome multiplier() {
  const FieldTriple tr = spin_triple();
  SamplePlan plan;
  plan.count = 100;
  const MultiplierReport rot = multiplier_solve(pseudo_orthogonal_generator({0.3, -0.5, 0.8}, {0, 0, 0}), tr, plan);
  const MultiplierReport bst = multiplier_solve(pseudo_orthogonal_generator({0, 0, 0}, {0.6, 0.2, -0.4}), tr, plan);
  const Generator bad =
      dsl::bind_generator(dsl::load_generator_doc_file(kFixtures + "/nonsymmetry.json"), spin::builtin_layout());
  const MultiplierReport non = multiplier_solve(bad, tr, plan);
  return {rot.max_residual < 1e-6 && bst.max_residual < 1e-6 && non.max_residual > 1e-2,
          fmt("rotation %.3g, boost %.3g, non-symmetry fixture %.3g over %zu samples", rot.max_residual,
              bst.max_residual, non.max_residual, rot.points.size())};
}

Outcome integrator() {
  const spin::SpinParams sp;
  const spin::Trajectory line = spin::integrate({0.1, 0.2, 0.3}, {0.3, -0.1, 0.2}, {0, 0, 0}, sp, 1e-2, 10000);
  double straight = 0.0;
  for (const auto& r : line.rows) {
    for (int i = 0; i < 3; ++i) {
      straight = std::max(straight, std::abs(r.vp[i]));
      const double x0[3] = {0.1, 0.2, 0.3}, v0[3] = {0.3, -0.1, 0.2};
      straight = std::max(straight, std::abs(r.x[i] - (x0[i] + v0[i] * r.t)) / (1.0 + r.t));
    }
  }
  const spin::Vec3 v{0.3, -0.1, 0.2};
  const spin::Vec3 vp = spin::project_initial(v, {0.3, 0.1, -0.2}, sp);
  std::vector<spin::Trajectory> runs;
  for (double dt : {0.02, 0.01, 0.005}) runs.push_back(spin::integrate({0, 0, 0}, v, vp, sp, dt, std::lround(2.0 / dt)));
  bool completed = line.completed && line.rows.size() == 10001;
  for (const auto& r : runs) completed = completed && r.completed;
  auto diff = [](const spin::Trajectory& a, const spin::Trajectory& b) {
    double d = 0.0;
    for (int i = 0; i < 3; ++i) d = std::max(d, std::abs(a.rows.back().x[i] - b.rows.back().x[i]));
    return d;
  };
  const double ratio = diff(runs[0], runs[1]) / diff(runs[1], runs[2]);
  const double drift = runs[0].m0_drift() / runs[1].m0_drift();
  const double drift2 = runs[1].m0_drift() / runs[2].m0_drift();
  auto near16 = [](double r) { return r > 12.0 && r < 20.0; };
  return {completed && straight < 1e-12 && near16(ratio) && near16(drift),
          fmt("straight line %.3g over 1e4 steps; self-convergence ratio %.2f; m0 drift ratios %.2f, %.2f", straight,
              ratio, drift, drift2)};
}

// Every field that is differentiated somewhere: Lagrangians and their
// Euler-Poisson systems, extracted triples, K, the builtin and DSL spin
// systems, prolongation coefficients, total derivatives.
struct Probe {
  ScalarField field;
  std::vector<double> params;
  MarginFn margin;
};

std::vector<Probe> probes() {
  std::vector<Probe> out;
  auto add_triple = [&](const FieldTriple& tr) {
    for (const auto& row : tr.A)
      for (const auto& f : row) out.push_back({f, tr.params, tr.margin});
    for (const auto& row : tr.B)
      for (const auto& f : row) out.push_back({f, tr.params, tr.margin});
    for (const auto& f : tr.c) out.push_back({f, tr.params, tr.margin});
    for (const auto& f : k_fields(tr)) out.push_back({f, tr.params, tr.margin});
  };
  for (int q : {2, 3}) {
    const LagrangianField lag = random_affine_lagrangian(q, 900 + q);
    out.push_back({lag.L, lag.params, lag.margin});
    const ThirdOrderSystem sys = euler_poisson(lag);
    for (const auto& f : sys.E) out.push_back({f, sys.params, sys.margin});
    add_triple(extract(sys).triple);
  }
  const ThirdOrderSystem spin_sys = spin::system();
  for (const auto& f : spin_sys.E) out.push_back({f, spin_sys.params, spin_sys.margin});
  add_triple(extract(spin_sys).triple);
  const dsl::Model model = dsl::load_model_file(kFixtures + "/spin.json");
  const ThirdOrderSystem dsl_sys = model.to_system();
  for (const auto& f : dsl_sys.E) out.push_back({f, dsl_sys.params, dsl_sys.margin});
  const auto pg = prolong(pseudo_orthogonal_generator({0.2, -0.7, 0.4}, {0.5, 0.1, -0.3}), 3);
  for (int j = 1; j <= 3; ++j)
    for (int a = 0; a < 3; ++a) out.push_back({pg.coeff(j, a), spin_sys.params, {}});
  const std::size_t base = out.size();
  for (std::size_t i = 0; i < base; ++i)
    if (out[i].field.order() <= 2 && !out[i].field.is_constant())
      out.push_back({total_derivative(out[i].field), out[i].params, out[i].margin});
  return out;
}

Outcome ad_soundness() {
  const std::vector<Probe> pool = probes();
  SplitMix64 rng(909);
  const double h = 1e-5;
  double worst = 0.0;
  int draws = 0, partials = 0;
  while (draws < 100) {
    const Probe& pr = pool[rng.next() % pool.size()];
    if (pr.field.order() > 3) continue;
    SamplePlan plan;
    plan.count = 1;
    plan.seed = rng.next();
    const JetLayout& jet = *pr.field.jet();
    const JetPoint p = sample_points(plan, jet, pr.params, pr.margin).front();
    const std::vector<double> grad = pr.field.gradient(p);
    const std::vector<double> flat = p.flat();
    for (int z = 0; z < jet.size(); ++z) {
      auto plus = flat, minus = flat;
      plus[z] += h;
      minus[z] -= h;
      const double fd =
          (pr.field(JetPoint::from_flat(jet.q(), plus)) - pr.field(JetPoint::from_flat(jet.q(), minus))) / (2 * h);
      worst = std::max(worst, std::abs(grad[z] - fd) / std::max(1.0, std::abs(grad[z])));
      ++partials;
    }
    ++draws;
  }
  return {worst < 1e-6, fmt("max relative error %.3g over %d draws (%d partials, pool of %zu fields)", worst, draws,
                            partials, pool.size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"Helmholtz conditions on the spin triple", helmholtz_spin},
      {"oracle closure and bracket convention", oracle_closure},
      {"prolongation of rotations and boosts", prolongation_exact},
      {"invariance identity", invariance_identity},
      {"reduction lemma", reduction_lemma},
      {"structural identities", structural_identities},
      {"multiplier solve", multiplier},
      {"integrator", integrator},
      {"AD soundness", ad_soundness},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("criterion %zu %s: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
