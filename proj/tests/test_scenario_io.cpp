#include <cstdio>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace ptf;
using nlohmann::json;

namespace {

json trivial_json() {
  for (const auto& [name, text] : bundled_scenarios())
    if (name == "trivial") return json::parse(text);
  throw std::runtime_error("trivial scenario missing");
}

Scenario parse(const json& j) { return parse_scenario(j.dump(), "test"); }

template <typename E>
std::string error_of(const json& j) {
  try {
    parse(j);
  } catch (const E& e) {
    return e.what();
  }
  return "<no error>";
}

// Three identical double-integrator followers for topology tests.
json three_followers() {
  json j = trivial_json();
  j["followers"] = json::array({j["followers"][0], j["followers"][0], j["followers"][0]});
  j["exosystems"] = json::array({j["exosystems"][0], j["exosystems"][0], j["exosystems"][0]});
  j["initial"]["x"] = json::array({{2, 0}, {1, 1}, {0, 1}});
  j["initial"]["xi"] = json::array({{1, 0}, {1, 0}, {1, 0}});
  j["topology"] = {{"edges", json::array({{1, 2}, {2, 3}})}, {"pinned", {1}}};
  return j;
}

}  // namespace

TEST(ScenarioFile, BundledScenariosLoad) {
  std::size_t count = 0;
  for (const auto& [name, text] : bundled_scenarios()) {
    const Scenario s = resolve_scenario(std::string(name));
    EXPECT_EQ(s.name, name);
    EXPECT_GT(s.size(), 0u);
    ++count;
  }
  EXPECT_EQ(count, 3u);
  const auto& s = ptf::testing::sec4();
  EXPECT_EQ(s.size(), 5u);
  EXPECT_DOUBLE_EQ(s.times.t1, 0.5);
  EXPECT_DOUBLE_EQ(s.times.t2, 4.0);
  EXPECT_DOUBLE_EQ(s.gains.rho[2], 0.2);
  EXPECT_DOUBLE_EQ(resolve_scenario("sec4_certified").gains.rho[2], 1.1);
}

TEST(ScenarioFile, Sec4SignalsEvaluate) {
  const auto& s = ptf::testing::sec4();
  const double t = 1.7;
  const Matrix d = s.followers[0].disturbance(t);
  EXPECT_DOUBLE_EQ(d(0, 0), std::sin(t));
  EXPECT_DOUBLE_EQ(d(1, 0), std::cos(t));
  EXPECT_DOUBLE_EQ(d(2, 0), std::sin(0.5 * t));
  EXPECT_DOUBLE_EQ(s.leader.u0(t)(0, 0), std::sin(0.5 * t));
}

TEST(ScenarioFile, UnknownKeyIsParseError) {
  json j = trivial_json();
  j["gains"]["gamma"] = 1;
  EXPECT_NE(error_of<ParseError>(j).find("unknown key 'gamma'"), std::string::npos);
  j = trivial_json();
  j["extra"] = true;
  EXPECT_NE(error_of<ParseError>(j).find("unknown key 'extra'"), std::string::npos);
  EXPECT_THROW(parse_scenario("{ not json", "x"), ParseError);
}

TEST(ScenarioFile, AsymmetricAdjacencyBreaksAssumptionOne) {
  json j = three_followers();
  j["topology"] = {{"adjacency", {{0, 1, 0}, {0, 0, 1}, {0, 1, 0}}}, {"pinned", {1}}};
  EXPECT_EQ(error_of<ValidationError>(j).rfind("Assumption 1", 0), 0u);
}

TEST(ScenarioFile, UnreachableAgentBreaksAssumptionOne) {
  json j = three_followers();
  j["topology"]["edges"] = json::array({{1, 2}});
  EXPECT_EQ(error_of<ValidationError>(j).rfind("Assumption 1", 0), 0u);
}

TEST(ScenarioFile, RankDeficientInputBreaksAssumptionThree) {
  json j = trivial_json();
  j["followers"][0]["B"] = {{1, 1}, {1, 1}};
  const auto msg = error_of<ValidationError>(j);
  EXPECT_EQ(msg.rfind("Assumption 3", 0), 0u) << msg;
}

TEST(ScenarioFile, UnsolvableRegulatorBreaksAssumptionFour) {
  json j = trivial_json();
  // Both outputs read the same state, so C X = C0 = I has no solution.
  j["followers"][0]["C"] = {{1, 0}, {1, 0}};
  const auto msg = error_of<ValidationError>(j);
  EXPECT_EQ(msg.rfind("Assumption 4", 0), 0u) << msg;
}

TEST(ScenarioFile, EdgesWeightsAndAdjacencyAgree) {
  json a = three_followers();
  a["topology"]["edges"] = json::array({{1, 2, 2.5}, {2, 3}});
  json b = three_followers();
  b["topology"] = {{"adjacency", {{0, 2.5, 0}, {2.5, 0, 1}, {0, 1, 0}}}, {"pinned", {1}}};
  EXPECT_EQ(parse(a).topology.h_matrix(), parse(b).topology.h_matrix());
}

TEST(ScenarioFile, SignalForms) {
  json j = trivial_json();
  j["signals"] = {{"u", json::array({{{"sum", {0.5, {{"kind", "cos"}, {"amplitude", 2}, {"frequency", 3}}}}}})}};
  j["leader"]["input"] = "u";
  j["followers"][0]["disturbance"] =
      json::array({{{"kind", "table"}, {"values", {{0, 0}, {1, 2}}}}, {{"kind", "exp_decay"}, {"amplitude", 2}, {"rate", 3}}});
  const Scenario s = parse(j);
  EXPECT_DOUBLE_EQ(s.leader.u0(0.4)(0, 0), 0.5 + 2 * std::cos(1.2));
  const Matrix d = s.followers[0].disturbance(0.25);
  EXPECT_DOUBLE_EQ(d(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(d(1, 0), 2 * std::exp(-0.75));

  j["leader"]["input"] = "missing";
  EXPECT_NE(error_of<ParseError>(j).find("unknown signal 'missing'"), std::string::npos);
  j["leader"]["input"] = json::array({{{"kind", "square"}}});
  EXPECT_NE(error_of<ParseError>(j).find("unknown signal kind"), std::string::npos);
}

TEST(ScenarioFile, PerFollowerGains) {
  json j = three_followers();
  j["gains"]["c"] = {2, 3, 4};
  const Scenario s = parse(j);
  EXPECT_EQ(s.gains.c, (std::vector<double>{2, 3, 4}));
  EXPECT_EQ(s.gains.alpha, (std::vector<double>{1, 1, 1}));
  j["gains"]["c"] = {2, 3};
  EXPECT_THROW(parse(j), ParseError);
}

TEST(Overrides, ApplyAndRevalidate) {
  Scenario s = resolve_scenario("trivial");
  apply_override(s, "dt", "0.0005");
  apply_override(s, "c_i", "7");
  apply_override(s, "rho3", "2");
  apply_override(s, "robust_term", "false");
  EXPECT_DOUBLE_EQ(s.times.dt, 5e-4);
  EXPECT_EQ(s.gains.c, std::vector<double>{7});
  EXPECT_DOUBLE_EQ(s.gains.rho[2], 2.0);
  EXPECT_FALSE(s.control.robust_term);
  EXPECT_THROW(apply_override(s, "nope", "1"), ParseError);
  EXPECT_THROW(apply_override(s, "dt", "fast"), ParseError);
  EXPECT_THROW(apply_override(s, "dt", "-1"), ValidationError);
  EXPECT_THROW(apply_override(s, "robust_term", "maybe"), ParseError);
}

TEST(Csv, RoundTripIsExact) {
  const Scenario s = resolve_scenario("trivial");
  const auto log = run(s, synthesize(s));
  std::stringstream buf;
  write_csv(log, buf);
  const auto back = read_csv(buf);
  ASSERT_EQ(back.records.size(), log.records.size());
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    const auto& a = log.records[k];
    const auto& b = back.records[k];
    ASSERT_EQ(a.t, b.t);
    EXPECT_EQ(a.x0, b.x0);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.xi, b.xi);
    EXPECT_EQ(a.xi_err, b.xi_err);
    EXPECT_EQ(a.e, b.e);
    EXPECT_EQ(a.ebar, b.ebar);
    EXPECT_EQ(a.u, b.u);
    EXPECT_EQ(a.h, b.h);
    EXPECT_EQ(a.v, b.v);
    EXPECT_EQ(a.vbar, b.vbar);
  }
  std::stringstream again;
  write_csv(back, again);
  EXPECT_EQ(again.str(), buf.str());
}

TEST(Csv, MalformedInputIsParseError) {
  std::stringstream empty;
  EXPECT_THROW(read_csv(empty), ParseError);
  std::stringstream bad("t,x0_1,bogus\n0,1,2\n");
  EXPECT_THROW(read_csv(bad), ParseError);
  EXPECT_THROW(read_csv("/nonexistent/trajectory.csv"), std::ios_base::failure);
}

TEST(ScenarioFile, MissingFileIsIoFailure) {
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), std::ios_base::failure);
  EXPECT_THROW(resolve_scenario("no_such_scenario"), std::ios_base::failure);
}
