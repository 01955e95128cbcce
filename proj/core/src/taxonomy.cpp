#include "beambind/taxonomy.hpp"

#include <algorithm>
#include <set>

#include "beambind/errors.hpp"
#include "beambind/toml.hpp"

namespace bb {

Taxonomy::Taxonomy(std::vector<ClassEntry> classes, std::vector<Superclass> superclasses,
                   std::vector<std::uint32_t> ignored)
    : classes_(std::move(classes)),
      superclasses_(std::move(superclasses)),
      ignored_(std::move(ignored)) {
  std::sort(ignored_.begin(), ignored_.end());
  ignored_.erase(std::unique(ignored_.begin(), ignored_.end()), ignored_.end());

  for (const auto& c : classes_) {
    if (names_.count(c.id)) throw DataError("duplicate class id " + std::to_string(c.id));
    if (ids_by_name_.count(c.name)) throw DataError("duplicate class name '" + c.name + "'");
    names_[c.id] = c.name;
    ids_by_name_[c.name] = c.id;
  }
  for (std::uint32_t id : ignored_) {
    if (!names_.count(id)) throw DataError("ignored id " + std::to_string(id) + " is not a class");
  }

  for (std::size_t s = 0; s < superclasses_.size(); ++s) {
    auto& sc = superclasses_[s];
    std::sort(sc.members.begin(), sc.members.end());
    for (std::uint32_t id : sc.members) {
      if (!names_.count(id)) {
        throw DataError("superclass '" + sc.name + "' references unknown class id " +
                        std::to_string(id));
      }
      if (is_ignored(id)) {
        throw DataError("ignored class '" + names_[id] + "' listed in superclass '" + sc.name +
                        "'");
      }
      auto [it, inserted] = superclass_index_.emplace(id, s);
      if (!inserted) {
        throw DataError("class '" + names_[id] + "' belongs to superclasses '" +
                        superclasses_[it->second].name + "' and '" + sc.name + "'");
      }
    }
  }

  for (const auto& c : classes_) {
    if (is_ignored(c.id)) continue;
    if (!superclass_index_.count(c.id)) {
      throw DataError("class '" + c.name + "' is not assigned to any superclass");
    }
    evaluated_.push_back(c.id);
  }
  std::sort(evaluated_.begin(), evaluated_.end());
  for (std::size_t i = 0; i < evaluated_.size(); ++i) evaluated_index_[evaluated_[i]] = i;
}

bool Taxonomy::knows(std::uint32_t class_id) const { return names_.count(class_id) != 0; }

bool Taxonomy::is_ignored(std::uint32_t class_id) const {
  return std::binary_search(ignored_.begin(), ignored_.end(), class_id);
}

std::size_t Taxonomy::superclass_of(std::uint32_t class_id) const {
  auto it = superclass_index_.find(class_id);
  if (it == superclass_index_.end()) {
    throw DataError("superclass lookup for ignored or unknown class id " +
                    std::to_string(class_id));
  }
  return it->second;
}

Category Taxonomy::category_of(std::uint32_t class_id) const {
  return superclasses_[superclass_of(class_id)].category;
}

const std::string& Taxonomy::class_name(std::uint32_t class_id) const {
  auto it = names_.find(class_id);
  if (it == names_.end()) throw DataError("unknown class id " + std::to_string(class_id));
  return it->second;
}

std::optional<std::uint32_t> Taxonomy::id_of(std::string_view name) const {
  auto it = ids_by_name_.find(name);
  if (it == ids_by_name_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::uint32_t> Taxonomy::things_classes() const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t id : evaluated_) {
    if (category_of(id) == Category::kThings) out.push_back(id);
  }
  return out;
}

std::vector<std::uint32_t> Taxonomy::stuff_classes() const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t id : evaluated_) {
    if (category_of(id) == Category::kStuff) out.push_back(id);
  }
  return out;
}

std::size_t Taxonomy::evaluated_index(std::uint32_t class_id) const {
  auto it = evaluated_index_.find(class_id);
  if (it == evaluated_index_.end()) {
    throw DataError("class id " + std::to_string(class_id) + " is ignored or unknown");
  }
  return it->second;
}

namespace {

Category parse_category(const std::string& s) {
  if (s == "things") return Category::kThings;
  if (s == "stuff") return Category::kStuff;
  throw ConfigError("superclass category must be \"things\" or \"stuff\", got \"" + s + "\"");
}

}  // namespace

Taxonomy taxonomy_from_config(const nlohmann::json& doc) {
  std::vector<Taxonomy::ClassEntry> classes;
  std::map<std::string, std::uint32_t> by_name;
  if (!doc.contains("class") || !doc["class"].is_array()) {
    throw ConfigError("taxonomy config needs [[class]] entries");
  }
  for (const auto& c : doc["class"]) {
    if (!c.contains("id") || !c.contains("name")) {
      throw ConfigError("[[class]] entries need 'id' and 'name'");
    }
    Taxonomy::ClassEntry e{c["id"].get<std::uint32_t>(), c["name"].get<std::string>()};
    by_name[e.name] = e.id;
    classes.push_back(std::move(e));
  }

  std::vector<Taxonomy::Superclass> supers;
  if (doc.contains("superclass")) {
    for (const auto& s : doc["superclass"]) {
      Taxonomy::Superclass sc;
      sc.name = s.at("name").get<std::string>();
      sc.category = parse_category(s.at("category").get<std::string>());
      for (const auto& m : s.at("members")) {
        if (m.is_string()) {
          auto it = by_name.find(m.get<std::string>());
          if (it == by_name.end()) {
            throw ConfigError("superclass '" + sc.name + "' member '" + m.get<std::string>() +
                              "' is not a declared class");
          }
          sc.members.push_back(it->second);
        } else {
          sc.members.push_back(m.get<std::uint32_t>());
        }
      }
      supers.push_back(std::move(sc));
    }
  }

  std::vector<std::uint32_t> ignored;
  if (doc.contains("ignore")) {
    for (const auto& g : doc["ignore"]) {
      if (g.is_string()) {
        auto it = by_name.find(g.get<std::string>());
        if (it == by_name.end()) {
          throw ConfigError("ignore entry '" + g.get<std::string>() + "' is not a declared class");
        }
        ignored.push_back(it->second);
      } else {
        ignored.push_back(g.get<std::uint32_t>());
      }
    }
  }

  return Taxonomy(std::move(classes), std::move(supers), std::move(ignored));
}

Taxonomy load_taxonomy(const std::filesystem::path& path) {
  return taxonomy_from_config(toml::parse_file(path));
}

namespace {

struct SuperSpec {
  const char* name;
  Category cat;
  std::vector<const char*> members;
};

Taxonomy build_preset(const std::vector<const char*>& class_names,
                      const std::vector<SuperSpec>& supers) {
  std::vector<Taxonomy::ClassEntry> classes;
  std::map<std::string, std::uint32_t> ids;
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    classes.push_back({static_cast<std::uint32_t>(i), class_names[i]});
    ids[class_names[i]] = static_cast<std::uint32_t>(i);
  }
  std::vector<Taxonomy::Superclass> scs;
  for (const auto& s : supers) {
    Taxonomy::Superclass sc;
    sc.name = s.name;
    sc.category = s.cat;
    for (const char* m : s.members) sc.members.push_back(ids.at(m));
    scs.push_back(std::move(sc));
  }
  return Taxonomy(std::move(classes), std::move(scs), {ids.at("unlabeled")});
}

const std::vector<const char*> kKittiClasses = {
    "unlabeled", "car",          "bicycle", "motorcycle", "truck",
    "bus",       "person",       "bicyclist", "motorcyclist", "road",
    "parking",   "sidewalk",     "other-ground", "building", "fence",
    "vegetation", "trunk",       "terrain", "pole",       "traffic-sign"};

}  // namespace

bool is_taxonomy_preset(std::string_view name) {
  return name == "semantickitti-ntn" || name == "semanticposs-ntn" || name == "coarse";
}

Taxonomy taxonomy_preset(std::string_view name) {
  if (name == "semantickitti-ntn") {
    return build_preset(
        kKittiClasses,
        {
            {"Vehicle", Category::kThings, {"car", "bicycle", "motorcycle", "truck", "bus"}},
            {"Person", Category::kThings, {"person", "bicyclist", "motorcyclist"}},
            {"Traffic Element", Category::kThings, {"fence", "pole", "traffic-sign"}},
            {"Pavement", Category::kStuff, {"road", "parking", "sidewalk"}},
            {"Natural", Category::kStuff, {"other-ground", "vegetation", "terrain"}},
            {"Structure", Category::kStuff, {"building", "trunk"}},
        });
  }
  if (name == "semanticposs-ntn") {
    return build_preset(
        {"unlabeled", "car", "bicycle", "pedestrian", "drivable-surface", "walkable"},
        {
            {"Vehicle", Category::kThings, {"car", "bicycle"}},
            {"Person", Category::kThings, {"pedestrian"}},
            {"Pavement", Category::kStuff, {"drivable-surface"}},
            {"Natural", Category::kStuff, {"walkable"}},
        });
  }
  if (name == "coarse") {
    return build_preset(
        kKittiClasses,
        {
            {"Things",
             Category::kThings,
             {"car", "bicycle", "motorcycle", "truck", "bus", "person", "bicyclist",
              "motorcyclist", "fence", "pole", "traffic-sign"}},
            {"Stuff",
             Category::kStuff,
             {"road", "parking", "sidewalk", "other-ground", "building", "vegetation", "trunk",
              "terrain"}},
        });
  }
  throw ConfigError("unknown taxonomy preset '" + std::string(name) + "'");
}

Taxonomy resolve_taxonomy(const std::string& name_or_path) {
  if (is_taxonomy_preset(name_or_path)) return taxonomy_preset(name_or_path);
  if (!std::filesystem::exists(name_or_path)) {
    throw ConfigError("taxonomy '" + name_or_path + "' is neither a preset nor an existing file");
  }
  return load_taxonomy(name_or_path);
}

}  // namespace bb
