#include <string>
#include <vector>

#include "canonforge/domain.hpp"
#include "canonforge/errors.hpp"
#include "canonforge/json_io.hpp"
#include "canonforge/pipeline.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace canonforge;
using namespace testkit;
using nlohmann::json;

TEST_SUITE("json") {

TEST_CASE("rendering fixtures cover every kind") {
  Uset u(3, "ju");
  CHECK(value_to_json(Value::unit()) == json(nullptr));
  CHECK(value_to_json(vb(true)) == json(true));
  CHECK(value_to_json(vi(-7)) == json(-7));
  CHECK(value_to_json(vt("hi")) == json("hi"));
  CHECK(value_to_json(Value::atom(u, 1)) == json({{"uset", "ju"}, {"i", 1}}));
  CHECK(value_to_json(tup({vi(1), vi(2)})) == json::array({1, 2}));
  CHECK(value_to_json(set({vi(2), vi(1)})) ==
        json({{"set", json::array({1, 2})}}));  // sets render sorted
  CHECK(value_to_json(map({{vi(1), vt("a")}})) ==
        json({{"map", json::array({json::array({1, "a"})})}}));
}

TEST_CASE("random values survive the JSON round trip") {
  Uset a(3, "ja");
  Uset b(2, "jb");
  const std::vector<Uset> usets = {a, b};
  const UsetTable table = {{"ja", a}, {"jb", b}};
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    Value v = random_value(rng, usets, 3);
    CHECK(value_from_json(value_to_json(v), table) == v);
  }
}

TEST_CASE("foreign encodings are rejected") {
  const UsetTable none;
  CHECK_THROWS_AS(value_from_json(json{{"wat", 1}}, none), EngineError);
  CHECK_THROWS_AS(value_from_json(json{{"uset", "ghost"}, {"i", 0}}, none),
                  EngineError);
  Uset u(2, "jv");
  const UsetTable table = {{"jv", u}};
  CHECK_THROWS_AS(value_from_json(json{{"uset", "jv"}, {"i", 9}}, table),
                  EngineError);
  CHECK_THROWS_AS(
      value_from_json(json{{"map", json::array({json::array({1})})}}, none),
      EngineError);
}

TEST_CASE("a declarative spec builds the digraph domain") {
  const std::string text = R"({
    "usets": [{"name": "n", "size": 2}],
    "domain": {"kind": "subsets", "of": {"kind": "product", "of": [
      {"kind": "uset", "name": "n"}, {"kind": "uset", "name": "n"}]}}
  })";
  DomainSpec spec = domain_from_json_text(text);
  CHECK(spec.usets.count("n") == 1);
  CHECK(spec.domain.iterate().count().run_count() == 16);
  CHECK(spec.domain.cnfs().count().run_count() == 10);
}

TEST_CASE("every domain kind parses") {
  auto build = [](const std::string& text) {
    return domain_from_json_text(text).domain;
  };
  CHECK(build(R"({"domain": {"kind": "range", "n": 5}})")
            .iterate().count().run_count() == 5);
  CHECK(build(R"({"domain": {"kind": "boolean"}})")
            .iterate().count().run_count() == 2);
  CHECK(build(R"({"domain": {"kind": "none"}})")
            .iterate().count().run_count() == 1);
  CHECK(build(R"({"usets": [{"name": "w", "size": 3}],
                  "domain": {"kind": "uset", "name": "w"}})")
            .iterate().count().run_count() == 3);
  CHECK(build(R"({"domain": {"kind": "values", "items": [4, 5]}})")
            .iterate().run_list() == ValueList{vi(4), vi(5)});
  CHECK(build(R"({"usets": [{"name": "c", "size": 2}],
                  "domain": {"kind": "cnf_values",
                             "items": [{"uset": "c", "i": 0}]}})")
            .cnfs().count().run_count() == 1);
  CHECK(build(R"({"domain": {"kind": "sequences",
                             "of": {"kind": "range", "n": 3}, "k": 2}})")
            .iterate().count().run_count() == 9);
  CHECK(build(R"({"domain": {"kind": "subsets",
                             "of": {"kind": "range", "n": 3}, "k": 2}})")
            .iterate().count().run_count() == 3);
  CHECK(build(R"({"domain": {"kind": "mappings",
                             "keys": {"kind": "range", "n": 2},
                             "values": {"kind": "range", "n": 3}}})")
            .iterate().count().run_count() == 9);
  CHECK(build(R"({"domain": {"kind": "join", "of": [
                    {"kind": "range", "n": 2}, {"kind": "boolean"}]}})")
            .iterate().count().run_count() == 4);
  CHECK(build(R"({"domain": {"kind": "filter", "pred": "no_loop",
                             "of": {"kind": "product", "of": [
                               {"kind": "range", "n": 3},
                               {"kind": "range", "n": 3}]}}})")
            .iterate().count().run_count() == 6);
  CHECK(build(R"({"domain": {"kind": "filter", "pred": "distinct",
                             "of": {"kind": "sequences",
                                    "of": {"kind": "range", "n": 3},
                                    "k": 3}}})")
            .iterate().count().run_count() == 6);
  CHECK(build(R"({"domain": {"kind": "filter", "pred": "nonempty",
                             "of": {"kind": "subsets",
                                    "of": {"kind": "range", "n": 3}}}})")
            .iterate().count().run_count() == 7);
}

TEST_CASE("malformed specs raise clear errors") {
  CHECK_THROWS_WITH_AS(domain_from_json_text("{nope"),
                       doctest::Contains("not valid JSON"), EngineError);
  CHECK_THROWS_WITH_AS(domain_from_json_text(R"({"domain": {"kind": "wat"}})"),
                       doctest::Contains("unknown domain kind"), EngineError);
  CHECK_THROWS_WITH_AS(
      domain_from_json_text(R"({"domain": {"kind": "range"}})"),
      doctest::Contains("'n'"), EngineError);
  CHECK_THROWS_WITH_AS(
      domain_from_json_text(
          R"({"domain": {"kind": "uset", "name": "ghost"}})"),
      doctest::Contains("unknown uset"), EngineError);
  CHECK_THROWS_WITH_AS(
      domain_from_json_text(
          R"({"usets": [{"name": "z", "size": 0}],
              "domain": {"kind": "boolean"}})"),
      doctest::Contains("positive size"), EngineError);
  CHECK_THROWS_WITH_AS(
      domain_from_json_text(
          R"({"usets": [{"name": "z", "size": 1}, {"name": "z", "size": 2}],
              "domain": {"kind": "boolean"}})"),
      doctest::Contains("declared twice"), EngineError);
  CHECK_THROWS_WITH_AS(
      domain_from_json_text(
          R"({"domain": {"kind": "filter", "pred": "shiny",
                         "of": {"kind": "boolean"}}})"),
      doctest::Contains("unknown predicate"), EngineError);
  CHECK_THROWS_WITH_AS(domain_from_json_text(R"({"title": "no domain"})"),
                       doctest::Contains("'domain'"), EngineError);
}

}  // TEST_SUITE
