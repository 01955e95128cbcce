#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace bb {

enum class Category { kThings, kStuff };

// Class table plus the superclass grouping and things/stuff categorization.
// Immutable after construction; built via load_taxonomy / taxonomy_preset.
class Taxonomy {
 public:
  struct ClassEntry {
    std::uint32_t id;
    std::string name;
  };
  struct Superclass {
    std::string name;
    Category category;
    std::vector<std::uint32_t> members;  // ascending class ids
  };

  // Validates the partition invariants and builds lookups. Throws DataError.
  Taxonomy(std::vector<ClassEntry> classes, std::vector<Superclass> superclasses,
           std::vector<std::uint32_t> ignored);

  const std::vector<ClassEntry>& classes() const { return classes_; }
  const std::vector<Superclass>& superclasses() const { return superclasses_; }
  const std::vector<std::uint32_t>& ignored_ids() const { return ignored_; }

  // Non-ignored class ids, ascending. This is the model/metric class order.
  const std::vector<std::uint32_t>& evaluated_ids() const { return evaluated_; }
  std::size_t n_evaluated() const { return evaluated_.size(); }

  bool knows(std::uint32_t class_id) const;
  bool is_ignored(std::uint32_t class_id) const;

  // Index into superclasses(); throws DataError for ignored/unknown ids.
  std::size_t superclass_of(std::uint32_t class_id) const;
  Category category_of(std::uint32_t class_id) const;

  const std::string& class_name(std::uint32_t class_id) const;
  std::optional<std::uint32_t> id_of(std::string_view name) const;

  std::vector<std::uint32_t> things_classes() const;
  std::vector<std::uint32_t> stuff_classes() const;

  // Position of a class id within evaluated_ids(); throws for ignored/unknown.
  std::size_t evaluated_index(std::uint32_t class_id) const;

 private:
  std::vector<ClassEntry> classes_;
  std::vector<Superclass> superclasses_;
  std::vector<std::uint32_t> ignored_;
  std::vector<std::uint32_t> evaluated_;
  std::map<std::uint32_t, std::size_t> superclass_index_;
  std::map<std::uint32_t, std::size_t> evaluated_index_;
  std::map<std::uint32_t, std::string> names_;
  std::map<std::string, std::uint32_t, std::less<>> ids_by_name_;
};

// Parses the TOML schema:
//   ignore = ["unlabeled"]
//   [[class]]      id = 1, name = "car"
//   [[superclass]] name = "Vehicle", category = "things", members = ["car", ...]
Taxonomy taxonomy_from_config(const nlohmann::json& doc);
Taxonomy load_taxonomy(const std::filesystem::path& path);

// Built-in presets: "semantickitti-ntn", "semanticposs-ntn", "coarse".
Taxonomy taxonomy_preset(std::string_view name);
bool is_taxonomy_preset(std::string_view name);

// Preset name first, then filesystem path.
Taxonomy resolve_taxonomy(const std::string& name_or_path);

}  // namespace bb
