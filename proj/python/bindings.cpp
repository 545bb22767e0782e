#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "edskit/cli.hpp"
#include "edskit/dsl.hpp"
#include "edskit/errors.hpp"
#include "edskit/random.hpp"
#include "edskit/spin.hpp"
#include "edskit/symmetry.hpp"
#include "edskit/variational.hpp"

namespace py = pybind11;
using namespace edskit;

namespace {

spin::SpinParams make_params(double s0, const spin::Vec3& s, double m) {
  spin::SpinParams sp;
  sp.s0 = s0;
  sp.s = s;
  sp.m = m;
  sp.validate();
  return sp;
}

spin::Metric make_metric(const std::string& name) {
  if (name == "euclidean") return spin::Metric::euclidean();
  if (name == "lorentzian") return spin::Metric::lorentzian();
  throw ConfigurationError("unknown metric '" + name + "'");
}

BracketConvention make_convention(const std::string& name) {
  if (name == "averaged") return BracketConvention::Averaged;
  if (name == "unnormalized") return BracketConvention::Unnormalized;
  throw ConfigurationError("unknown bracket convention '" + name + "'");
}

SamplePlan make_plan(int samples, std::uint64_t seed) {
  SamplePlan plan;
  plan.count = samples;
  plan.seed = seed;
  return plan;
}

FieldTriple triple_of(const dsl::Model* model) {
  return model ? model->to_triple() : extract(spin::system()).triple;
}

}  // namespace

PYBIND11_MODULE(_edskit, m) {
  m.doc() = "Third-order Euler-Poisson toolkit";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigurationError>(m, "ConfigurationError", error);
  py::register_exception<SingularDenominator>(m, "SingularDenominator", error);
  py::register_exception<DomainError>(m, "DomainError", error);
  py::register_exception<FlowDivergence>(m, "FlowDivergence", error);
  py::register_exception<StepTooLarge>(m, "StepTooLarge", error);
  auto schema = py::register_exception<SchemaError>(m, "SchemaError", error);
  py::register_exception<dsl::ParseError>(m, "ParseError", schema);
  py::register_exception<JetOrderViolation>(m, "JetOrderViolation", error);
  py::register_exception<NonAffineLagrangian>(m, "NonAffineLagrangian", error);

  py::class_<SplitMix64>(m, "SplitMix64")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("next", &SplitMix64::next)
      .def("uniform", py::overload_cast<double, double>(&SplitMix64::uniform), py::arg("lo") = 0.0,
           py::arg("hi") = 1.0);

  py::class_<JetPoint>(m, "JetPoint")
      .def(py::init([](double t, std::vector<double> x, std::vector<double> v, std::vector<double> vp,
                       std::vector<double> vpp, std::vector<double> params) {
             JetPoint p{t, std::move(x), std::move(v), std::move(vp), std::move(vpp), std::move(params)};
             const auto q = p.x.size();
             if (p.v.size() != q || p.vp.size() != q || p.vpp.size() != q)
               throw ConfigurationError("x, v, vp and vpp must have the same length");
             return p;
           }),
           py::arg("t"), py::arg("x"), py::arg("v"), py::arg("vp"), py::arg("vpp"),
           py::arg("params") = std::vector<double>{})
      .def_readwrite("t", &JetPoint::t)
      .def_readwrite("x", &JetPoint::x)
      .def_readwrite("v", &JetPoint::v)
      .def_readwrite("vp", &JetPoint::vp)
      .def_readwrite("vpp", &JetPoint::vpp)
      .def_readwrite("params", &JetPoint::params)
      .def("flat", &JetPoint::flat)
      .def("__repr__", [](const JetPoint& p) { return "<JetPoint q=" + std::to_string(p.q()) + ">"; });

  // --- models and variationality ---------------------------------------------
  py::class_<dsl::Model>(m, "Model")
      .def_property_readonly("q", [](const dsl::Model& mo) { return mo.jet->q(); })
      .def_property_readonly("parameters", [](const dsl::Model& mo) { return mo.jet->params(); })
      .def_readonly("parameter_values", &dsl::Model::params)
      .def("evaluate", [](const dsl::Model& mo, const JetPoint& p) { return mo.to_system().evaluate(p); },
           "Equation values E_a at a point.");

  m.def("load_model", &dsl::load_model, py::arg("json_text"));
  m.def("load_model_file", &dsl::load_model_file, py::arg("path"));

  m.def(
      "helmholtz_report",
      [](const dsl::Model* model, int samples, std::uint64_t seed, double tol, const std::string& convention) {
        return helmholtz_residuals(triple_of(model), make_plan(samples, seed), tol, make_convention(convention))
            .to_json();
      },
      py::arg("model") = nullptr, py::arg("samples") = 200, py::arg("seed") = 42, py::arg("tol") = 1e-8,
      py::arg("convention") = "averaged",
      "JSON report of H1..H6; without a model the builtin spin system is used.");

  m.def(
      "helmholtz_at",
      [](const dsl::Model* model, const JetPoint& p, const std::string& convention) {
        return helmholtz_at(triple_of(model), p, make_convention(convention));
      },
      py::arg("model"), py::arg("point"), py::arg("convention") = "averaged");

  m.def(
      "random_lagrangian_report",
      [](int q, std::uint64_t lagrangian_seed, int samples, std::uint64_t seed, double tol,
         const std::string& convention) {
        const FieldTriple tr = extract(euler_poisson(random_affine_lagrangian(q, lagrangian_seed))).triple;
        return helmholtz_residuals(tr, make_plan(samples, seed), tol, make_convention(convention)).to_json();
      },
      py::arg("q"), py::arg("lagrangian_seed"), py::arg("samples") = 100, py::arg("seed") = 42,
      py::arg("tol") = 1e-8, py::arg("convention") = "averaged");

  // --- symmetry ---------------------------------------------------------------
  m.def(
      "symmetry_report",
      [](std::optional<spin::Vec3> rotation, std::optional<spin::Vec3> boost, const std::string& generator,
         const dsl::Model* model, int samples, std::uint64_t seed, double tol, double step) {
        const JetLayoutPtr jet = model ? model->jet : spin::builtin_layout();
        Generator g = Generator::zero(jet);
        if (!generator.empty()) {
          if (rotation || boost) throw ConfigurationError("give either a generator document or rotation/boost");
          g = dsl::bind_generator(dsl::load_generator_doc_file(generator), jet);
        } else {
          g = pseudo_orthogonal_generator(rotation.value_or(spin::Vec3{}), boost.value_or(spin::Vec3{}), jet);
        }
        LieOptions opts;
        opts.h = step;
        const MultiplierReport rep = multiplier_solve(g, triple_of(model), make_plan(samples, seed), tol, opts);
        if (!model && generator.empty()) {
          const InvarianceReport inv = invariance_at_points(rep.points, rotation.value_or(spin::Vec3{}),
                                                            boost.value_or(spin::Vec3{}), spin::SpinParams{}, tol);
          return symmetry_report_json(rep, &inv);
        }
        return symmetry_report_json(rep, nullptr);
      },
      py::arg("rotation") = py::none(), py::arg("boost") = py::none(), py::arg("generator") = "",
      py::arg("model") = nullptr, py::arg("samples") = 100, py::arg("seed") = 42, py::arg("tol") = 1e-6,
      py::arg("step") = 1e-3);

  m.def(
      "invariance_survey",
      [](int samples, std::uint64_t seed, double tol) {
        const InvarianceReport r = invariance_survey(samples, seed, tol);
        py::dict d;
        d["i"] = r.max_relative[0];
        d["ii"] = r.max_relative[1];
        d["iii"] = r.max_relative[2];
        py::list passing;
        for (LieConvention c : r.passing) passing.append(convention_name(c));
        d["passing"] = passing;
        d["samples"] = r.samples;
        return d;
      },
      py::arg("samples") = 200, py::arg("seed") = 42, py::arg("tol") = 1e-6);

  // --- spinning particle ------------------------------------------------------
  py::module_ sp = m.def_submodule("spin", "Spinning-particle model");
  const spin::SpinParams d;

  sp.def(
      "e3",
      [](const spin::Vec3& v, const spin::Vec3& vp, const spin::Vec3& vpp, double s0, const spin::Vec3& s,
         double mass) {
        const auto e = spin::e3<double>(v.data(), vp.data(), vpp.data(), s0, s.data(), mass);
        return spin::Vec3{e[0], e[1], e[2]};
      },
      py::arg("v"), py::arg("vp"), py::arg("vpp"), py::arg("s0") = d.s0, py::arg("s") = d.s, py::arg("m") = d.m,
      "Reduced equations E_a(v, v', v'').");

  sp.def(
      "e4",
      [](const spin::Vec4& u, const spin::Vec4& ud, const spin::Vec4& udd, double s0, const spin::Vec3& s,
         double mass, const std::string& metric) {
        return spin::E4({{}, u, ud, udd}, make_params(s0, s, mass), make_metric(metric));
      },
      py::arg("u"), py::arg("ud"), py::arg("udd"), py::arg("s0") = d.s0, py::arg("s") = d.s, py::arg("m") = d.m,
      py::arg("metric") = "euclidean");

  sp.def(
      "star3",
      [](const spin::Vec4& a, const spin::Vec4& b, const spin::Vec4& c, const std::string& metric) {
        return spin::star3(a, b, c, make_metric(metric));
      },
      py::arg("a"), py::arg("b"), py::arg("c"), py::arg("metric") = "euclidean");

  sp.def(
      "lift_check",
      [](const spin::Vec4& u, const spin::Vec4& ud, const spin::Vec4& udd, double s0, const spin::Vec3& s,
         double mass, const std::string& metric) {
        return spin::lift_check({{}, u, ud, udd}, make_params(s0, s, mass), make_metric(metric));
      },
      py::arg("u"), py::arg("ud"), py::arg("udd"), py::arg("s0") = d.s0, py::arg("s") = d.s, py::arg("m") = d.m,
      py::arg("metric") = "euclidean");

  sp.def(
      "reduce_check",
      [](int samples, std::uint64_t seed, double s0, const spin::Vec3& s, double mass, const std::string& metric) {
        const spin::SpinParams p = make_params(s0, s, mass);
        const spin::Metric g = make_metric(metric);
        double worst = 0.0;
        for (const auto& j : spin::sample_four_jets(samples, seed, p)) worst = std::max(worst, spin::lift_check(j, p, g));
        return worst;
      },
      py::arg("samples") = 500, py::arg("seed") = 7, py::arg("s0") = d.s0, py::arg("s") = d.s, py::arg("m") = d.m,
      py::arg("metric") = "euclidean", "Largest lift_check residual over seeded four-jets.");

  sp.def(
      "rest_mass",
      [](const spin::Vec4& u, double s0, const spin::Vec3& s, double mass, const std::string& metric) {
        const spin::RestMass r = spin::rest_mass(u, make_params(s0, s, mass), make_metric(metric));
        return py::make_tuple(r.value, r.real);
      },
      py::arg("u"), py::arg("s0") = d.s0, py::arg("s") = d.s, py::arg("m") = d.m, py::arg("metric") = "euclidean");

  sp.def(
      "project_initial",
      [](const spin::Vec3& v, const spin::Vec3& vp, double s0, const spin::Vec3& s, double mass) {
        return spin::project_initial(v, vp, make_params(s0, s, mass));
      },
      py::arg("v"), py::arg("vp"), py::arg("s0") = d.s0, py::arg("s") = d.s, py::arg("m") = d.m);

  sp.def(
      "solve_vpp",
      [](const spin::Vec3& v, const spin::Vec3& vp, double s0, const spin::Vec3& s, double mass) {
        return spin::solve_vpp(v, vp, make_params(s0, s, mass));
      },
      py::arg("v"), py::arg("vp"), py::arg("s0") = d.s0, py::arg("s") = d.s, py::arg("m") = d.m);

  sp.def(
      "integrate",
      [](const spin::Vec3& x0, const spin::Vec3& v0, const spin::Vec3& vp0, double dt, long steps, double s0,
         const spin::Vec3& s, double mass) {
        const spin::Trajectory tr = spin::integrate(x0, v0, vp0, make_params(s0, s, mass), dt, steps);
        py::list t, x, v, vp, m0;
        for (const auto& r : tr.rows) {
          t.append(r.t);
          x.append(r.x);
          v.append(r.v);
          vp.append(r.vp);
          m0.append(r.m0);
        }
        py::dict out;
        out["t"] = t;
        out["x"] = x;
        out["v"] = v;
        out["vp"] = vp;
        out["m0"] = m0;
        out["completed"] = tr.completed;
        out["message"] = tr.message;
        out["m0_drift"] = tr.m0_drift();
        return out;
      },
      py::arg("x0"), py::arg("v0"), py::arg("vp0"), py::arg("dt") = 1e-2, py::arg("steps") = 1000,
      py::arg("s0") = d.s0, py::arg("s") = d.s, py::arg("m") = d.m);

  // --- expressions ------------------------------------------------------------
  m.def(
      "parse", [](const std::string& text) { return dsl::to_string(*dsl::parse(text)); }, py::arg("text"),
      "Canonical fully parenthesized form of an expression.");

  m.def(
      "evaluate",
      [](const std::string& text, const JetPoint& p, const std::vector<std::string>& parameters) {
        const auto jet = JetLayout::make(p.q(), parameters);
        const dsl::Compiled c(dsl::parse(text), jet);
        const ScalarField f = c.field(text);
        return py::make_tuple(f(p), f.gradient(p));
      },
      py::arg("text"), py::arg("point"), py::arg("parameters") = std::vector<std::string>{},
      "Value and gradient (over t, x, v, vp, vpp, params) of a scalar expression.");

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> full{"edskit"};
        full.insert(full.end(), args.begin(), args.end());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(full, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a command line in process; returns (exit code, stdout, stderr).");
}
