#include <algorithm>
#include <set>

#include <doctest.h>

#include "beambind/errors.hpp"
#include "beambind/taxonomy.hpp"
#include "beambind/toml.hpp"
#include "support.hpp"

using bb::Category;
using bb::Taxonomy;

TEST_CASE("taxonomy: semantickitti preset matches the published grouping") {
  const Taxonomy tax = bb::taxonomy_preset("semantickitti-ntn");
  CHECK(tax.superclasses().size() == 6);
  CHECK(tax.n_evaluated() == 19);

  auto super_name = [&](const char* cls) {
    return tax.superclasses()[tax.superclass_of(*tax.id_of(cls))].name;
  };
  CHECK(super_name("car") == "Vehicle");
  CHECK(tax.category_of(*tax.id_of("car")) == Category::kThings);
  CHECK(super_name("trunk") == "Structure");  // not Natural
  CHECK(super_name("motorcyclist") == "Person");
  CHECK(super_name("fence") == "Traffic Element");
  CHECK(tax.category_of(*tax.id_of("road")) == Category::kStuff);
  CHECK(tax.things_classes().size() == 11);
  CHECK(tax.stuff_classes().size() == 8);
}

TEST_CASE("taxonomy: semanticposs preset has 4 superclasses") {
  const Taxonomy tax = bb::taxonomy_preset("semanticposs-ntn");
  CHECK(tax.superclasses().size() == 4);
  CHECK(tax.superclasses()[tax.superclass_of(*tax.id_of("pedestrian"))].name == "Person");
}

TEST_CASE("taxonomy: coarse preset is exactly things/stuff") {
  const Taxonomy tax = bb::taxonomy_preset("coarse");
  CHECK(tax.superclasses().size() == 2);
  CHECK(tax.n_evaluated() == 19);
}

TEST_CASE("taxonomy: partition property on every preset") {
  for (const char* name : {"semantickitti-ntn", "semanticposs-ntn", "coarse"}) {
    const Taxonomy tax = bb::taxonomy_preset(name);
    std::set<std::uint32_t> from_supers;
    for (const auto& sc : tax.superclasses()) {
      for (std::uint32_t id : sc.members) {
        CHECK(from_supers.insert(id).second);  // pairwise disjoint
      }
    }
    std::set<std::uint32_t> evaluated(tax.evaluated_ids().begin(), tax.evaluated_ids().end());
    CHECK(from_supers == evaluated);

    auto things = tax.things_classes();
    auto stuff = tax.stuff_classes();
    std::set<std::uint32_t> both(things.begin(), things.end());
    for (std::uint32_t id : stuff) CHECK(both.insert(id).second);
    CHECK(both == evaluated);
  }
}

TEST_CASE("taxonomy: lookups are total on non-ignored classes and reject the rest") {
  const Taxonomy tax = bbtest::tiny_taxonomy();
  for (std::uint32_t id : tax.evaluated_ids()) {
    CHECK(tax.superclass_of(id) == tax.superclass_of(id));  // stable pure lookup
  }
  CHECK_THROWS_AS(tax.superclass_of(0), bb::DataError);    // ignored
  CHECK_THROWS_AS(tax.superclass_of(999), bb::DataError);  // unknown
  // one-class superclass maps to itself
  CHECK(tax.superclasses()[tax.superclass_of(5)].name == "Floor");
}

TEST_CASE("taxonomy: config validation errors") {
  const char* dup = R"(
ignore = ["unlabeled"]
[[class]]
id = 0
name = "unlabeled"
[[class]]
id = 1
name = "car"
[[superclass]]
name = "A"
category = "things"
members = ["car"]
[[superclass]]
name = "B"
category = "stuff"
members = ["car"]
)";
  CHECK_THROWS_AS(bb::taxonomy_from_config(bb::toml::parse(dup)), bb::DataError);

  const char* orphan = R"(
ignore = ["unlabeled"]
[[class]]
id = 0
name = "unlabeled"
[[class]]
id = 1
name = "car"
[[class]]
id = 2
name = "person"
[[superclass]]
name = "A"
category = "things"
members = ["car"]
)";
  CHECK_THROWS_AS(bb::taxonomy_from_config(bb::toml::parse(orphan)), bb::DataError);

  const char* bad_cat = R"(
[[class]]
id = 1
name = "car"
[[superclass]]
name = "A"
category = "anything"
members = ["car"]
)";
  CHECK_THROWS_AS(bb::taxonomy_from_config(bb::toml::parse(bad_cat)), bb::ConfigError);
}

TEST_CASE("taxonomy: round trip through a config file") {
  const char* text = R"(
ignore = ["void"]
[[class]]
id = 0
name = "void"
[[class]]
id = 7
name = "cone"
[[class]]
id = 9
name = "lawn"
[[superclass]]
name = "Objects"
category = "things"
members = ["cone"]
[[superclass]]
name = "Ground"
category = "stuff"
members = ["lawn"]
)";
  const Taxonomy tax = bb::taxonomy_from_config(bb::toml::parse(text));
  CHECK(tax.n_evaluated() == 2);
  CHECK(tax.evaluated_index(7) == 0);
  CHECK(tax.evaluated_index(9) == 1);
  CHECK(tax.is_ignored(0));
  CHECK(tax.category_of(7) == Category::kThings);
}
