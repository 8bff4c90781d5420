#include <charconv>
#include <cmath>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "loopkit/commands.hpp"
#include "loopkit/errors.hpp"
#include "loopkit/io.hpp"
#include "loopkit/report.hpp"

using namespace loopkit;

namespace {

const std::string kData = LOOPKIT_SOURCE_DIR "/data/";

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no loopkit::Error thrown");
  return ErrorCode::InvalidArgument;
}

const char* kTwoState = R"({"type":"finite_chain","states":["a","b"],"m":{"a":1,"b":1},
  "rates":[["a","b",1],["b","a",1]],"kill":{"a":1,"b":1}})";

}  // namespace

TEST_CASE("model files") {
  const auto file = parse_model(kTwoState);
  const auto& chain = std::get<FiniteChainModel>(file.model);
  CHECK(chain.size() == 2);
  CHECK(chain.green()(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const auto bm = parse_model(R"({"type":"killed_bm","dim":3,"kappa":1.0,"box":[[0,1],[0,1],[0,2]]})");
  CHECK(std::get<KilledBrownianModel>(bm.model).box().hi[2] == 2.0);

  const auto with_revuz = parse_model(R"({"type":"finite_chain","states":["a","b"],"m":{"a":2,"b":1},
    "kill":{"a":1},"rates":[["a","b",1],["b","a",1]],
    "revuz":[{"name":"d","density":{"a":1.5}},{"atoms":{"b":0.25}}]})");
  REQUIRE(with_revuz.revuz.size() == 2);
  CHECK(with_revuz.revuz[0].name == "d");
  CHECK(with_revuz.revuz[0].atoms[0] == 3.0);
  CHECK(with_revuz.revuz[1].atoms[1] == 0.25);

  for (const char* bad : {
           "{",                                                                            // syntax
           "[]",                                                                           // not an object
           R"({"type":"chain"})",                                                          // type
           R"({"type":"finite_chain","states":["a"]})",                                    // no m
           R"({"type":"finite_chain","states":["a","a"],"m":{"a":1}})",                    // duplicate
           R"({"type":"finite_chain","states":["a"],"m":{"a":1},"kill":{"b":1}})",         // unknown state
           R"({"type":"finite_chain","states":["a"],"m":{"a":"1"},"kill":{"a":1}})",       // type
           R"({"type":"finite_chain","states":["a"],"m":{"a":1},"kill":{"a":1},"x":1})",   // unknown key
           R"({"type":"finite_chain","states":["a"],"m":{"a":1},"rates":[["a","a"]]})",    // arity
           R"({"type":"killed_bm","dim":2.5,"kappa":1})",                                  // dim
           R"({"type":"killed_bm","dim":2,"kappa":1,"box":[[0,1]]})",                      // box dim
           R"({"type":"finite_chain","states":["a"],"m":{"a":1},"kill":{"a":1},"revuz":{"atoms":{"a":1},"density":{"a":1}}})",
       }) {
    CAPTURE(bad);
    CHECK(code_of([&] { parse_model(bad); }) == ErrorCode::MalformedInput);
  }
  CHECK(code_of([] { parse_model(R"({"type":"finite_chain","states":["a","b"],"m":{"a":1,"b":1},
    "rates":[["a","b",1],["b","a",1]]})"); }) == ErrorCode::NonTransient);
  CHECK(code_of([] { parse_model(R"({"type":"killed_bm","dim":4,"kappa":1})"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("spec files") {
  const auto model = parse_model(kTwoState).model;
  const auto one = parse_spec(R"({"functions":[{"state":"b"}],"k":3,"alpha":0.5,"root":"a"})", model);
  REQUIRE(one.specs.size() == 1);
  CHECK(one.specs[0].id == "s0");
  CHECK(one.specs[0].functions.size() == 3);
  CHECK(one.specs[0].functions[2].values()[1] == 1.0);
  CHECK(std::get<std::size_t>(*one.specs[0].root) == 0);

  const auto many = parse_spec(R"({"n_list":[1,4],"specs":[
      {"id":"x","functions":[{"values":{"a":0.5}},{"state":"a"}],"regime":"full","rates":[1,2]},
      {"id":"y","functions":[{"state":"a"}],"times":[0.1],"shift":0.2,"broken_rotation":true}]})",
                               model);
  CHECK(many.n_list == std::vector<double>{1.0, 4.0});
  CHECK(many.specs[0].regime == Regime::full);
  CHECK(many.specs[0].functions[0].values()[0] == 0.5);
  CHECK(many.specs[1].broken_rotation);

  const auto bm = parse_model(R"({"type":"killed_bm","dim":2,"kappa":1})").model;
  const auto g = parse_spec(R"({"functions":[{"gaussian":{"center":[0,0],"sigma":0.5}},{"box":[[0,1],[0,1]]}],"root":[0.5,0.5]})", bm);
  CHECK(g.specs[0].functions[0].kind() == TestFunction::Kind::gaussian_bump);
  CHECK(std::get<Point>(*g.specs[0].root)[1] == 0.5);

  for (const char* bad : {
           R"({"functions":[]})",
           R"({"functions":[{"state":"z"}]})",
           R"({"functions":[{"state":"a","values":{}}]})",
           R"({"functions":[{"state":"a"}],"regime":"cyclic"})",
           R"({"functions":[{"state":"a"},{"state":"b"}],"k":3})",
           R"({"functions":[{"state":"a"}],"rates":[1,2]})",
           R"({"functions":[{"state":"a"}],"alpha":-1})",
           R"({"functions":[{"box":[[0,1]]}]})",
           R"({"specs":[{"id":"p","functions":[{"state":"a"}]},{"id":"p","functions":[{"state":"a"}]}]})",
           R"({"functions":[{"state":"a"}],"colour":1})",
       }) {
    CAPTURE(bad);
    CHECK(code_of([&] { parse_spec(bad, model); }) == ErrorCode::MalformedInput);
  }
}

TEST_CASE("numbers print in shortest round-trip form") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 9.0) == "0.1111111111111111");
  CHECK(format_number(1e-300) == "1e-300");
  CHECK(format_number(kInfinity) == "inf");
  CHECK(format_number(-kInfinity) == "-inf");
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    double x;
    const std::uint64_t bits = rng();
    std::memcpy(&x, &bits, sizeof x);
    if (!std::isfinite(x)) continue;
    const std::string s = format_number(x);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == x);
  }
}

TEST_CASE("csv and json reports") {
  Report r;
  r.command = "moments";
  r.seed = 7;
  r.meta = {{"model", "m.json"}};
  r.columns = {"id", "value", "n", "ok"};
  r.rows = {{std::string("a,\"b\""), 0.25, std::int64_t{3}, true}, {std::string("c"), kInfinity, std::int64_t{-1}, false}};

  std::ostringstream csv;
  write_csv(r, csv, false);
  CHECK(csv.str() == "# loopkit moments\n# seed=7\n# model=m.json\nid,value,n,ok\n\"a,\"\"b\"\"\",0.25,3,true\nc,inf,-1,false\n");
  std::ostringstream stamped;
  write_csv(r, stamped, true);
  CHECK(stamped.str().find("# generated=") != std::string::npos);

  std::ostringstream js;
  write_json(r, js, true);
  const auto j = nlohmann::json::parse(js.str());
  CHECK(j["seed"] == 7);
  CHECK(j["rows"][0][0] == "a,\"b\"");
  CHECK(j["rows"][0][1] == 0.25);
  CHECK(j["rows"][1][1] == "inf");
  CHECK(j["generated"].get<std::string>().size() == 20);
}

TEST_CASE("commands on the sample files") {
  RunConfig cfg;
  cfg.model_path = kData + "models/two_state.json";
  const Report check = cmd_check(cfg);
  CHECK(check.pass);
  for (const auto& row : check.rows) {
    const auto& name = std::get<std::string>(row[0]);
    if (name.rfind("resolvent", 0) == 0 || name == "duality" || name.rfind("revuz", 0) == 0) {
      CHECK(std::get<double>(row[1]) <= 1e-10);
    }
  }

  cfg.spec_path = kData + "specs/two_state_moments.json";
  const Report moments = cmd_moments(cfg);
  CHECK(std::get<std::string>(moments.rows[0][0]) == "ab");
  CHECK(std::get<double>(moments.rows[0][4]) == doctest::Approx(1.0 / 9.0).epsilon(1e-15));

  const Report sim = cmd_simulate(cfg);
  CHECK(sim.pass);
  for (const auto& row : sim.rows) CHECK(std::get<std::string>(row[6]) == "pass");

  RunConfig inv;
  inv.model_path = kData + "models/fast_three_state.json";
  inv.spec_path = kData + "specs/invariance.json";
  const Report ir = cmd_invariance(inv);
  CHECK(std::get<std::string>(ir.rows[0][0]) == "a_r0");
  CHECK(std::get<double>(ir.rows[0][4]) == 0.0);

  RunConfig rec;
  rec.model_path = kData + "models/recurrent.json";
  CHECK(code_of([&] { cmd_check(rec); }) == ErrorCode::NonTransient);
  RunConfig bm;
  bm.model_path = kData + "models/bm3.json";
  bm.spec_path = kData + "specs/bm3_moments.json";
  CHECK(code_of([&] { cmd_simulate(bm); }) == ErrorCode::InvalidArgument);
}
