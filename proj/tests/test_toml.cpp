#include <doctest.h>

#include "beambind/errors.hpp"
#include "beambind/toml.hpp"

using bb::toml::parse;

TEST_CASE("toml: scalars, sections and arrays of tables") {
  const auto doc = parse(R"(
# experiment
title = "toy"
count = 42
rate = 0.5
flag = true
pitch = [1, 2.5, -3]

[beams]
n_beams = 64
method = "sorted-cluster"

[[superclass]]
name = "Vehicle"
members = ["car", "truck"]

[[superclass]]
name = "Person"
members = ["person"]

[nested.section]
x = 1
)");
  CHECK(doc["title"] == "toy");
  CHECK(doc["count"] == 42);
  CHECK(doc["rate"] == 0.5);
  CHECK(doc["flag"] == true);
  CHECK(doc["pitch"].size() == 3);
  CHECK(doc["pitch"][1] == 2.5);
  CHECK(doc["beams"]["n_beams"] == 64);
  CHECK(doc["superclass"].size() == 2);
  CHECK(doc["superclass"][0]["members"][1] == "truck");
  CHECK(doc["superclass"][1]["name"] == "Person");
  CHECK(doc["nested"]["section"]["x"] == 1);
}

TEST_CASE("toml: multi-line arrays and string escapes") {
  const auto doc = parse("xs = [\n  1,\n  2, # comment\n  3,\n]\ns = \"a\\\"b\\n\"\n");
  CHECK(doc["xs"].size() == 3);
  CHECK(doc["s"] == "a\"b\n");
}

TEST_CASE("toml: integers stay integral, underscores allowed") {
  const auto doc = parse("big = 1_000_000\nneg = -3\nexp = 1e-4\n");
  CHECK(doc["big"].is_number_integer());
  CHECK(doc["big"] == 1000000);
  CHECK(doc["neg"] == -3);
  CHECK(doc["exp"].is_number_float());
  CHECK(doc["exp"].get<double>() == doctest::Approx(1e-4));
}

TEST_CASE("toml: malformed input reports the line") {
  CHECK_THROWS_AS(parse("x = \n"), bb::ConfigError);
  CHECK_THROWS_AS(parse("x 1\n"), bb::ConfigError);
  CHECK_THROWS_AS(parse("x = [1, 2\n\n"), bb::ConfigError);
  CHECK_THROWS_AS(parse("x = 1\nx = 2\n"), bb::ConfigError);
  CHECK_THROWS_AS(parse("[unclosed\n"), bb::ConfigError);
  try {
    parse("ok = 1\nbad = @\n");
    FAIL("expected ConfigError");
  } catch (const bb::ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}
