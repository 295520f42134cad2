#include <doctest.h>

#include "fcausal/error.hpp"
#include "result_io.hpp"

using namespace fcausal;
using namespace fcausal::cli;

TEST_SUITE("cli") {

TEST_CASE("documents put the timestamp on the first key line") {
  Json body;
  body["command"] = "fit";
  body["value"] = 1.5;
  std::string doc = render_document(body, "2020-01-01T00:00:00Z");
  CHECK(doc.rfind("{\n  \"timestamp\": \"2020-01-01T00:00:00Z\",\n  \"command\": \"fit\"", 0) == 0);
  CHECK(doc.back() == '\n');
  std::string other = render_document(body, "2031-05-05T10:10:10Z");
  CHECK(doc.substr(doc.find('\n', 2)) == other.substr(other.find('\n', 2)));
}

TEST_CASE("scenario configs") {
  SimScenario sc = scenario_from_json(Json("interference"), SimScenario{});
  CHECK(sc.kind == ScenarioKind::Interference);

  Json j = Json::parse(R"({"name": "linear-fixed", "dims": {"n": 20, "t": 40, "m": 2},
                           "noise": {"sigma_xi": 0.5}, "truth": {"beta": 2.0},
                           "constants": {"field_amplitude": 0.0}})");
  SimScenario custom = scenario_from_json(j, SimScenario{});
  CHECK(custom.n == 20);
  CHECK(custom.t == 40);
  CHECK(custom.m == 2);
  CHECK(custom.sigma_xi == 0.5);
  CHECK(custom.beta == 2.0);
  CHECK(custom.constants.field_amplitude == 0.0);
  CHECK(scenario_from_json(to_json(custom), SimScenario{}).n == 20);
  CHECK_THROWS_AS(scenario_from_json(Json::parse(R"({"name": "linear-fixed", "dims": {"n": -1}})"), SimScenario{}),
                  Error);
}

TEST_CASE("estimate documents carry scalars and diagnostics") {
  EffectEstimate est;
  est.method = Method::IFE;
  est.coef_names = {"beta"};
  est.beta = Vector::Constant(1, 0.75);
  est.summary.acd = 0.75;
  est.summary.ate[1.0] = 0.75;
  est.intervals["beta"] = {0.5, 1.0};
  Json j = to_json(est);
  CHECK(j["method"] == "ife");
  CHECK(j["coefficients"]["beta"] == 0.75);
  CHECK(j["intervals"]["beta"]["lo"] == 0.5);
  CHECK(j.contains("diagnostics"));
  CHECK(!j.contains("bias_model"));
}

}
