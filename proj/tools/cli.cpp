#include "edskit/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "edskit/dsl.hpp"
#include "edskit/errors.hpp"
#include "edskit/spin.hpp"
#include "edskit/symmetry.hpp"
#include "edskit/variational.hpp"
#include "json.hpp"

namespace edskit::cli {

namespace {

using ojson = nlohmann::ordered_json;

struct Box {
  std::vector<double> t, x, v, vp, vpp;
  double min_margin = 0.1;

  void add(CLI::App* app) {
    auto range = [&](const char* name, std::vector<double>& dst, const char* what) {
      app->add_option(name, dst, what)->delimiter(',')->expected(2);
    };
    range("--t-range", t, "sampling interval for t (lo,hi)");
    range("--x-range", x, "sampling interval for x (lo,hi)");
    range("--v-range", v, "sampling interval for v (lo,hi)");
    range("--vp-range", vp, "sampling interval for vp (lo,hi)");
    range("--vpp-range", vpp, "sampling interval for vpp (lo,hi)");
    app->add_option("--min-margin", min_margin, "reject samples closer to a singular denominator");
  }

  void apply(SamplePlan& s) const {
    auto set = [](const std::vector<double>& r, double& lo, double& hi) {
      if (r.empty()) return;
      if (!(r[0] < r[1])) throw ConfigurationError("sampling interval needs lo < hi");
      lo = r[0];
      hi = r[1];
    };
    set(t, s.t_lo, s.t_hi);
    set(x, s.x_lo, s.x_hi);
    set(v, s.v_lo, s.v_hi);
    set(vp, s.vp_lo, s.vp_hi);
    set(vpp, s.vpp_lo, s.vpp_hi);
    s.min_margin = min_margin;
  }
};

struct SpinFlags {
  double s0 = spin::SpinParams{}.s0;
  std::vector<double> s = defaults();
  double m = spin::SpinParams{}.m;

  static std::vector<double> defaults() {
    const spin::SpinParams sp;
    return {sp.s.begin(), sp.s.end()};
  }

  void add(CLI::App* app) {
    app->add_option("--s0", s0, "spin component s0");
    app->add_option("--s", s, "spin vector s (a,b,c)")->delimiter(',')->expected(3);
    app->add_option("--m", m, "mass parameter");
  }
  spin::SpinParams params() const {
    spin::SpinParams sp;
    sp.s0 = s0;
    sp.s = {s[0], s[1], s[2]};
    sp.m = m;
    sp.validate();
    return sp;
  }
};

spin::Vec3 vec3(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

std::string fmt(double d) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, r.ptr);
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigurationError("cannot write '" + path + "'");
  f << text;
}

void require_builtin(const std::string& name) {
  if (name != "spin") throw ConfigurationError("unknown builtin model '" + name + "' (available: spin)");
}

// ------------------------------------------------------------------ commands

struct VariationalCmd {
  std::string model, builtin, out, convention = "averaged";
  int samples = 200;
  std::uint64_t seed = 42;
  double tol = 1e-8;
  Box box;
  SpinFlags spin;

  int run(std::ostream& os, std::ostream& err) const {
    if (model.empty() == builtin.empty()) throw ConfigurationError("give either a model document or --builtin");
    FieldTriple tr;
    std::optional<ExtractionDiagnostics> diag;
    std::string label;
    if (!builtin.empty()) {
      require_builtin(builtin);
      tr = extract(spin::system(spin.params()), {0, 1}).triple;
      label = "builtin:" + builtin;
    } else {
      const dsl::Model m = dsl::load_model_file(model);
      label = model;
      if (m.type == dsl::Model::Type::Triple) {
        tr = *m.triple;
      } else {
        Extraction ex = extract(m.to_system());
        tr = std::move(ex.triple);
        diag = ex.diagnostics;
      }
    }
    SamplePlan plan;
    plan.count = samples;
    plan.seed = seed;
    box.apply(plan);
    const BracketConvention conv =
        convention == "unnormalized" ? BracketConvention::Unnormalized : BracketConvention::Averaged;
    const HelmholtzReport rep = helmholtz_residuals(tr, plan, tol, conv);
    ojson j;
    j["model"] = label;
    const ojson body = ojson::parse(rep.to_json());
    for (auto& [k, v] : body.items()) j[k] = v;
    bool pass = rep.pass;
    if (diag) {
      j["extraction"] = {{"samples", diag->samples},
                         {"reconstruction_residual", diag->reconstruction_residual},
                         {"skew_defect", diag->skew_defect},
                         {"vpp_dependence", diag->vpp_dependence},
                         {"euler_poisson_shaped", diag->euler_poisson_shaped},
                         {"message", diag->message}};
      if (!diag->euler_poisson_shaped) {
        pass = false;
        j["verdict"] = "fail";
        err << "extraction: " << diag->message << "\n";
      }
    }
    emit(j.dump(2) + "\n", out, os);
    if (!pass) {
      err << "variationality check failed";
      for (const auto& name : rep.failing()) err << " " << name;
      err << "\n";
    }
    return pass ? kPass : kFail;
  }
};

struct SymmetryCmd {
  std::vector<std::string> files;
  std::string builtin, out;
  std::vector<double> rotation, boost;
  int samples = 100;
  std::uint64_t seed = 42;
  double tol = 1e-6;
  double h = 1e-3;
  Box box;
  SpinFlags spin;

  int run(std::ostream& os, std::ostream& err) const {
    FieldTriple tr;
    std::string generator_path, label;
    const bool pseudo = !rotation.empty() || !boost.empty();
    if (!builtin.empty()) {
      require_builtin(builtin);
      if (files.size() > 1) throw ConfigurationError("with --builtin give at most a generator document");
      tr = extract(spin::system(spin.params()), {0, 1}).triple;
      label = "builtin:" + builtin;
      if (!files.empty()) generator_path = files[0];
    } else {
      if (files.empty()) throw ConfigurationError("give a model document or --builtin");
      if (files.size() > 2) throw ConfigurationError("too many positional arguments");
      const dsl::Model m = dsl::load_model_file(files[0]);
      tr = m.to_triple();
      label = files[0];
      if (files.size() == 2) generator_path = files[1];
    }
    if (pseudo == !generator_path.empty())
      throw ConfigurationError("give exactly one of a generator document or --rotation/--boost");

    Generator g;
    std::string gname;
    spin::Vec3 n{}, q{};
    if (pseudo) {
      if (!rotation.empty()) n = vec3(rotation);
      if (!boost.empty()) q = vec3(boost);
      g = pseudo_orthogonal_generator(n, q, tr.jet);
      gname = "pseudo-orthogonal n=(" + fmt(n[0]) + "," + fmt(n[1]) + "," + fmt(n[2]) + ") q=(" + fmt(q[0]) + "," +
              fmt(q[1]) + "," + fmt(q[2]) + ")";
    } else {
      g = dsl::bind_generator(dsl::load_generator_doc_file(generator_path), tr.jet);
      gname = generator_path;
    }

    SamplePlan plan;
    plan.count = samples;
    plan.seed = seed;
    box.apply(plan);
    LieOptions lie;
    lie.h = h;
    MultiplierReport rep = multiplier_solve(g, tr, plan, tol, lie);
    rep.generator = gname;
    std::optional<InvarianceReport> inv;
    if (!builtin.empty() && pseudo) inv = invariance_at_points(rep.points, n, q, spin.params(), tol);
    ojson j;
    j["model"] = label;
    const ojson body = ojson::parse(symmetry_report_json(rep, inv ? &*inv : nullptr));
    for (auto& [k, v] : body.items()) j[k] = v;
    emit(j.dump(2) + "\n", out, os);
    const bool pass = j["verdict"] == "pass";
    if (!pass) err << "symmetry check failed: max residual " << fmt(rep.max_residual) << "\n";
    return pass ? kPass : kFail;
  }
};

struct SimulateCmd {
  std::vector<double> x0{0, 0, 0}, v0, a0{0, 0, 0};
  double dt = 1e-2;
  long steps = 1000;
  bool project = false, halving = false;
  std::string out;
  SpinFlags spin;

  int run(std::ostream& os, std::ostream& err) const {
    const spin::SpinParams sp = spin.params();
    const spin::Vec3 x = vec3(x0), v = vec3(v0);
    spin::Vec3 a = vec3(a0);
    if (project) a = spin::project_initial(v, a, sp);
    const spin::Trajectory tr = spin::integrate(x, v, a, sp, dt, steps);
    emit(tr.to_csv(), out, os);
    err << "steps " << tr.rows.size() - 1 << ", max constraint residual " << fmt(tr.max_constraint())
        << ", m0 drift " << fmt(tr.m0_drift()) << "\n";
    if (!tr.completed) {
      const auto& last = tr.rows.back();
      err << "aborted: " << tr.message << "; last good step " << last.step << " at t = " << fmt(last.t) << "\n";
      return kFail;
    }
    if (halving) {
      const spin::Trajectory half = spin::integrate(x, v, a, sp, dt / 2.0, 2 * steps);
      if (!half.completed) {
        err << "aborted (dt/2): " << half.message << "\n";
        return kFail;
      }
      err << "m0 drift at dt/2 " << fmt(half.m0_drift()) << ", drift ratio "
          << (half.m0_drift() > 0.0 ? fmt(tr.m0_drift() / half.m0_drift()) : std::string("inf")) << "\n";
    }
    return kPass;
  }
};

struct ReduceCmd {
  int samples = 500;
  std::uint64_t seed = 7;
  double tol = 1e-8;
  std::string metric = "euclidean", out;
  SpinFlags spin;

  int run(std::ostream& os, std::ostream& err) const {
    const spin::SpinParams sp = spin.params();
    const spin::Metric g = metric == "lorentzian" ? spin::Metric::lorentzian() : spin::Metric::euclidean();
    const auto jets = spin::sample_four_jets(samples, seed, sp);
    double worst = 0.0, sum = 0.0;
    int worst_i = -1, skipped = 0;
    for (std::size_t i = 0; i < jets.size(); ++i) {
      double r;
      try {
        r = spin::lift_check(jets[i], sp, g);
      } catch (const SingularDenominator&) {
        ++skipped;
        continue;
      }
      sum += r;
      if (worst_i < 0 || r > worst) worst = r, worst_i = static_cast<int>(i);
    }
    const int used = samples - skipped;
    const bool pass = used > 0 && worst < tol;
    ojson j;
    j["samples"] = samples;
    j["skipped"] = skipped;
    j["seed"] = seed;
    j["metric"] = metric;
    j["tolerance"] = tol;
    j["max_residual"] = worst;
    j["mean_residual"] = used > 0 ? sum / used : 0.0;
    j["worst_sample"] = worst_i;
    j["verdict"] = pass ? "pass" : "fail";
    emit(j.dump(2) + "\n", out, os);
    if (!pass) err << "reduction check failed: max residual " << fmt(worst) << "\n";
    return pass ? kPass : kFail;
  }
};

struct ProlongCmd {
  std::string generator, at, out;
  int order = 3;
  bool trace = false;

  int run(std::ostream& os, std::ostream&) const {
    const dsl::GeneratorDoc doc = dsl::load_generator_doc_file(generator);
    std::vector<std::string> names;
    std::vector<double> defaults;
    for (const auto& [name, value] : doc.parameters) {
      names.push_back(name);
      defaults.push_back(value);
    }
    for (const auto& [name, text] : doc.param_action) {
      if (std::find(names.begin(), names.end(), name) == names.end()) {
        names.push_back(name);
        defaults.push_back(0.0);
      }
    }
    const JetLayoutPtr jet = JetLayout::make(static_cast<int>(doc.xi.size()), names);
    const Generator g = dsl::bind_generator(doc, jet);
    const ProlongedGenerator pg = prolong(g, order);
    JetPoint p = JetPoint::zeros(jet->q(), jet->num_params());
    p.params = defaults;
    if (!at.empty()) p = dsl::load_point_file(at, *jet, defaults);

    const std::vector<double> values = pg.evaluate(p);
    ojson j;
    j["generator"] = generator;
    j["order"] = order;
    j["point"] = {{"t", p.t}, {"x", p.x}, {"v", p.v}, {"vp", p.vp}, {"vpp", p.vpp}};
    ojson coeffs = ojson::object();
    const int last = jet->level(order, jet->q() - 1);
    for (int c = 0; c <= last; ++c) coeffs[jet->coordinate_name(c)] = values[c];
    for (int k = 0; k < jet->num_params(); ++k) coeffs[jet->params()[k]] = values[jet->param(k)];
    j["coefficients"] = coeffs;
    if (trace) {
      ojson lines = ojson::array();
      lines.push_back("t <- " + g.tau.describe());
      for (int a = 0; a < jet->q(); ++a) lines.push_back(jet->coordinate_name(jet->x(a)) + " <- " + g.xi[a].describe());
      for (int lvl = 1; lvl <= order; ++lvl)
        for (int a = 0; a < jet->q(); ++a)
          lines.push_back(jet->coordinate_name(jet->level(lvl, a)) + " <- " + pg.coeff(lvl, a).describe());
      j["trace"] = lines;
    }
    emit(j.dump(2) + "\n", out, os);
    return kPass;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Euler-Poisson system toolkit: variationality, symmetry and spinning-particle checks", "edskit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  VariationalCmd var;
  auto* cv = app.add_subcommand("check-variational", "check the six variationality conditions on a model");
  cv->add_option("model", var.model, "model document (JSON)");
  cv->add_option("--builtin", var.builtin, "builtin model name (spin)");
  cv->add_option("--samples", var.samples, "number of sample points")->check(CLI::PositiveNumber);
  cv->add_option("--seed", var.seed, "sampling seed");
  cv->add_option("--tol", var.tol, "residual tolerance");
  cv->add_option("--convention", var.convention, "bracket convention")
      ->check(CLI::IsMember({"averaged", "unnormalized"}));
  cv->add_option("--out", var.out, "write the report here instead of stdout");
  var.box.add(cv);
  var.spin.add(cv);

  SymmetryCmd sym;
  auto* cs = app.add_subcommand("check-symmetry", "check invariance under a point-symmetry generator");
  cs->add_option("files", sym.files, "model document and generator document");
  cs->add_option("--builtin", sym.builtin, "builtin model name (spin)");
  cs->add_option("--rotation", sym.rotation, "rotation axis n (a,b,c)")->delimiter(',')->expected(3);
  cs->add_option("--boost", sym.boost, "boost vector q (a,b,c)")->delimiter(',')->expected(3);
  cs->add_option("--samples", sym.samples, "number of sample points")->check(CLI::PositiveNumber);
  cs->add_option("--seed", sym.seed, "sampling seed");
  cs->add_option("--tol", sym.tol, "residual tolerance");
  cs->add_option("--step", sym.h, "flow step for the Lie derivative")->check(CLI::PositiveNumber);
  cs->add_option("--out", sym.out, "write the report here instead of stdout");
  sym.box.add(cs);
  sym.spin.add(cs);

  SimulateCmd sim;
  auto* cm = app.add_subcommand("simulate", "integrate the spinning-particle system");
  cm->add_option("--x0", sim.x0, "initial position")->delimiter(',')->expected(3);
  cm->add_option("--v0", sim.v0, "initial velocity")->delimiter(',')->expected(3)->required();
  cm->add_option("--a0", sim.a0, "initial acceleration")->delimiter(',')->expected(3);
  cm->add_option("--dt", sim.dt, "time step")->check(CLI::PositiveNumber);
  cm->add_option("--steps", sim.steps, "number of steps")->check(CLI::NonNegativeNumber);
  cm->add_flag("--project-initial", sim.project, "move a0 onto the constraint surface first");
  cm->add_flag("--halving", sim.halving, "repeat with dt/2 and report the m0 drift ratio");
  cm->add_option("--out", sim.out, "write the CSV here instead of stdout");
  sim.spin.add(cm);

  ReduceCmd red;
  auto* cr = app.add_subcommand("reduce-check", "compare the parametric and reduced systems on random jets");
  cr->add_option("--samples", red.samples, "number of jets")->check(CLI::PositiveNumber);
  cr->add_option("--seed", red.seed, "sampling seed");
  cr->add_option("--tol", red.tol, "residual tolerance");
  cr->add_option("--metric", red.metric, "spacetime metric")->check(CLI::IsMember({"euclidean", "lorentzian"}));
  cr->add_option("--out", red.out, "write the report here instead of stdout");
  red.spin.add(cr);

  ProlongCmd pro;
  auto* cp = app.add_subcommand("prolong", "evaluate prolongation coefficients of a generator document");
  cp->add_option("generator", pro.generator, "generator document (JSON)")->required();
  cp->add_option("--order", pro.order, "prolongation order")->check(CLI::Range(1, 3));
  cp->add_option("--at", pro.at, "point document (JSON); zero point by default");
  cp->add_flag("--trace", pro.trace, "include the expression-level recursion");
  cp->add_option("--out", pro.out, "write the report here instead of stdout");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kPass;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "edskit: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (*cv) return var.run(out, err);
    if (*cs) return sym.run(out, err);
    if (*cm) return sim.run(out, err);
    if (*cr) return red.run(out, err);
    if (*cp) return pro.run(out, err);
  } catch (const ConfigurationError& e) {
    err << "edskit: " << e.what() << "\n";
    return kInputError;
  } catch (const SchemaError& e) {
    err << "edskit: " << e.what() << "\n";
    return kInputError;
  } catch (const JetOrderViolation& e) {
    err << "edskit: " << e.what() << "\n";
    return kInputError;
  } catch (const NonAffineLagrangian& e) {
    err << "edskit: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "edskit: " << e.what() << "\n";
    return kFail;
  }
  return kInputError;
}

}  // namespace edskit::cli
