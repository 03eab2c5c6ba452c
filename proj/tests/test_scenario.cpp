#include "support.hpp"

#include "hase/error.hpp"
#include "hase/pipeline.hpp"

#include <doctest.h>

using namespace hase;
using nlohmann::json;

namespace {

std::string pointer_of(const json& doc) {
  try {
    parse_scenario(doc);
  } catch (const ScenarioError& e) {
    return e.pointer();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal scenario loads") {
  const Scenario s = parse_scenario(test::toy_line_doc());
  CHECK(s.targets.size() == 1);
  CHECK(s.dim == 2);
}

TEST_CASE("errors name the offending pointer") {
  json doc = test::toy_line_doc();
  doc.erase("sensor");
  CHECK(pointer_of(doc) == "/sensor");

  doc = test::toy_line_doc();
  doc["dp"]["gamma_typo"] = 0.5;
  CHECK(pointer_of(doc) == "/dp/gamma_typo");

  doc = test::toy_line_doc();
  doc["targets"][0]["mean"] = {1.0, 2.0, 3.0};
  CHECK(pointer_of(doc).rfind("/targets/0", 0) == 0);

  doc = test::toy_line_doc();
  doc["version"] = 99;
  CHECK(pointer_of(doc) == "/version");
}

TEST_CASE("printed configuration parses back to the same configuration") {
  for (const char* name : {"desk_single.json", "desk_fleet.json", "stereo_shell_177.json"}) {
    const Scenario s = load_scenario(test::scenario_path(name));
    const json printed = scenario_to_json(s);
    CHECK(scenario_to_json(parse_scenario(printed)) == printed);
  }
}

TEST_CASE("the stereo shell scenario has 177 views") {
  Pipeline p(load_scenario(test::scenario_path("stereo_shell_177.json")));
  CHECK(p.target(0).ws.size() == 177);
  CHECK(p.sensor().is_stereo());
}

TEST_CASE("generated targets follow the seed") {
  Scenario a = load_scenario(test::scenario_path("desk_fleet.json"));
  Scenario b = a;
  CHECK(a.targets.size() == 20);
  reseed(b, a.seed);
  for (std::size_t i = 0; i < a.targets.size(); ++i) CHECK(a.targets[i].mean == b.targets[i].mean);
  reseed(b, a.seed + 1);
  CHECK(a.targets[0].mean != b.targets[0].mean);
}

TEST_CASE("shell workspaces repeat their geometry for every target") {
  json doc = load_scenario(test::scenario_path("stereo_shell_177.json")).sensor_spec;
  Scenario s = load_scenario(test::scenario_path("stereo_shell_177.json"));
  Vector far = Vector::Constant(3, 100.0);
  s.targets.push_back({far, std::nullopt});
  Pipeline p(s);
  const auto& a = p.target(0).ws;
  const auto& b = p.target(1).ws;
  for (int i = 0; i < a.size(); ++i)
    CHECK(((a.position(i) - p.target(0).mean) - (b.position(i) - p.target(1).mean)).norm() < 1e-9);
  CHECK(p.local_solves() == 1);
}
