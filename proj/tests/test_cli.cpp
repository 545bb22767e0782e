#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "edskit/cli.hpp"
#include "json.hpp"

using nlohmann::json;

namespace {

const std::string kFixtures = EDSKIT_FIXTURES;

std::string fixture(const std::string& name) { return kFixtures + "/" + name; }

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "edskit");
  std::ostringstream out, err;
  const int code = edskit::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("check-variational exit codes") {
  CHECK(run({"check-variational", fixture("spin.json")}).code == 0);
  CHECK(run({"check-variational", "--builtin", "spin", "--samples", "50"}).code == 0);
  CHECK(run({"check-variational", fixture("identity_b.json")}).code == 0);
  CHECK(run({"check-variational", fixture("lagrangian.json"), "--samples", "50"}).code == 0);

  const Result bad = run({"check-variational", fixture("skew_b.json")});
  CHECK(bad.code == 1);
  const json j = json::parse(bad.out);
  CHECK(j["verdict"] == "fail");
  CHECK(j["failing"][0] == "H2");

  CHECK(run({"check-variational", fixture("does_not_exist.json")}).code == 2);
  CHECK(run({"check-variational"}).code == 2);
  CHECK(run({"no-such-command"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("reports are reproducible for a fixed seed") {
  const auto a = run({"check-variational", fixture("spin.json"), "--samples", "40", "--seed", "5"});
  const auto b = run({"check-variational", fixture("spin.json"), "--samples", "40", "--seed", "5"});
  CHECK(a.out == b.out);
  const auto c = run({"check-symmetry", "--builtin", "spin", "--rotation", "0,0,1", "--samples", "20", "--seed", "3"});
  const auto d = run({"check-symmetry", "--builtin", "spin", "--rotation", "0,0,1", "--samples", "20", "--seed", "3"});
  CHECK(c.code == 0);
  CHECK(c.out == d.out);
  const auto e = run({"check-symmetry", "--builtin", "spin", "--rotation", "0,0,1", "--samples", "20", "--seed", "4"});
  CHECK(c.out != e.out);
}

TEST_CASE("check-symmetry") {
  const auto rot = run({"check-symmetry", "--builtin", "spin", "--rotation", "0,0,1", "--samples", "30"});
  REQUIRE(rot.code == 0);
  const json j = json::parse(rot.out);
  CHECK(j["verdict"] == "pass");
  CHECK(j["convention"] == "i");
  CHECK(j["max_residual"].get<double>() < 1e-6);
  CHECK(j["invariance_defect"]["i"].get<double>() < 1e-6);

  CHECK(run({"check-symmetry", "--builtin", "spin", "--boost", "1,0,0", "--samples", "30"}).code == 0);
  CHECK(run({"check-symmetry", fixture("spin.json"), fixture("rotation_z.json"), "--samples", "20"}).code == 0);
  CHECK(run({"check-symmetry", "--builtin", "spin", fixture("nonsymmetry.json"), "--samples", "20"}).code == 1);
  CHECK(run({"check-symmetry", "--builtin", "spin", "--rotation", "0,1"}).code == 2);
}

TEST_CASE("reduce-check") {
  const auto r = run({"reduce-check", "--samples", "100"});
  CHECK(r.code == 0);
  CHECK(json::parse(r.out)["verdict"] == "pass");
}

TEST_CASE("prolong") {
  const auto zero = run({"prolong", fixture("zero.json"), "--order", "3", "--at", fixture("point.json")});
  REQUIRE(zero.code == 0);
  for (const auto& [k, v] : json::parse(zero.out)["coefficients"].items()) CHECK(v.get<double>() == 0.0);

  // boost along x1: tau = -x1, xi = (t, 0, 0)
  const auto boost = run({"prolong", fixture("boost_x.json"), "--order", "3", "--at", fixture("point.json"), "--trace"});
  REQUIRE(boost.code == 0);
  const json j = json::parse(boost.out);
  const json& c = j["coefficients"];
  const json pt = json::parse(std::ifstream(fixture("point.json")));
  const double t = pt["t"], x1 = pt["x"][0];
  const std::vector<double> v = pt["v"], vp = pt["vp"], vpp = pt["vpp"];
  CHECK(c["t"].get<double>() == doctest::Approx(-x1).epsilon(1e-14));
  CHECK(c["x1"].get<double>() == doctest::Approx(t).epsilon(1e-14));
  CHECK(std::abs(c["v1"].get<double>() - (1 + v[0] * v[0])) < 1e-14);
  for (int a = 1; a < 3; ++a) {
    const std::string i = std::to_string(a + 1);
    CHECK(std::abs(c["v" + i].get<double>() - v[0] * v[a]) < 1e-14);
    CHECK(std::abs(c["vp" + i].get<double>() - (2 * v[0] * vp[a] + vp[0] * v[a])) < 1e-14);
    CHECK(std::abs(c["vpp" + i].get<double>() - (3 * v[0] * vpp[a] + 3 * vp[0] * vp[a] + vpp[0] * v[a])) < 1e-14);
  }
  CHECK(std::abs(c["vp1"].get<double>() - 3 * v[0] * vp[0]) < 1e-14);
  CHECK(std::abs(c["vpp1"].get<double>() - (4 * v[0] * vpp[0] + 3 * vp[0] * vp[0])) < 1e-14);
  CHECK(j["trace"].size() >= 13);

  CHECK(run({"prolong", fixture("boost_x.json"), "--order", "4"}).code == 2);
  CHECK(run({"prolong", fixture("does_not_exist.json")}).code == 2);
}

TEST_CASE("simulate") {
  const auto line = run({"simulate", "--v0", "0.3,-0.1,0.2", "--steps", "200"});
  REQUIRE(line.code == 0);
  std::istringstream csv(line.out);
  std::string row;
  std::getline(csv, row);
  CHECK(row.rfind("step,t,x1", 0) == 0);
  int rows = 0;
  while (std::getline(csv, row)) {
    std::vector<double> cols;
    std::stringstream ss(row);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(std::stod(cell));
    REQUIRE(cols.size() >= 11);
    for (int k = 8; k < 11; ++k) CHECK(std::abs(cols[k]) < 1e-12);
    ++rows;
  }
  CHECK(rows == 201);

  CHECK(run({"simulate", "--v0", "0.3,-0.1,0.2", "--a0", "0.3,0.1,-0.2", "--steps", "10"}).code == 2);
  const auto proj =
      run({"simulate", "--v0", "0.3,-0.1,0.2", "--a0", "0.3,0.1,-0.2", "--project-initial", "--steps", "100", "--halving"});
  CHECK(proj.code == 0);
  CHECK(proj.err.find("drift") != std::string::npos);
  CHECK(run({"simulate"}).code == 2);

  // s parallel to v with s0 chosen so that N^2 = 0
  const auto singular = run({"simulate", "--v0", "0.3,-0.2,0.1", "--s0", "1", "--s", "0.3,-0.2,0.1", "--steps", "10"});
  CHECK(singular.code == 1);
  CHECK(singular.err.find("bracket") != std::string::npos);
}
