#include "shaperel/shape.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <map>

namespace shaperel::shape {

namespace {

const std::map<std::string, std::string, std::less<>>& known_prefixes() {
  static const std::map<std::string, std::string, std::less<>> prefixes = {
      {"rdf", "http://www.w3.org/1999/02/22-rdf-syntax-ns#"},
      {"rdfs", "http://www.w3.org/2000/01/rdf-schema#"},
      {"xsd", "http://www.w3.org/2001/XMLSchema#"},
      {"schema", "http://schema.org/"},
      {"dbo", "http://dbpedia.org/ontology/"},
      {"dbr", "http://dbpedia.org/resource/"},
      {"foaf", "http://xmlns.com/foaf/0.1/"},
  };
  return prefixes;
}

std::string expand(std::string_view name) {
  if (name.find("://") != std::string_view::npos) return std::string(name);
  auto colon = name.find(':');
  if (colon == std::string_view::npos) return std::string(name);
  auto it = known_prefixes().find(name.substr(0, colon));
  if (it == known_prefixes().end()) return std::string(name);
  return it->second + std::string(name.substr(colon + 1));
}

}  // namespace

Pattern::Pattern(std::size_t width, std::uint32_t bits)
    : bits_(bits), width_(static_cast<std::uint8_t>(width)) {
  if (width > kMaxVocabulary) throw VocabularyTooLarge("pattern width exceeds 32");
  if (width < kMaxVocabulary && (bits >> width) != 0) {
    throw std::invalid_argument("pattern bits exceed width");
  }
}

Pattern& Pattern::set(std::size_t i) {
  if (i >= width_) throw std::out_of_range("pattern bit out of range");
  bits_ |= (1u << i);
  return *this;
}

std::size_t Pattern::count() const noexcept {
  return static_cast<std::size_t>(std::popcount(bits_));
}

PropertyVocabulary::PropertyVocabulary(std::vector<PropertySpec> properties,
                                       std::vector<std::vector<std::string>> or_groups)
    : properties_(std::move(properties)) {
  if (properties_.size() > kMaxVocabulary) {
    throw InvalidShape("vocabulary has more than 32 properties");
  }
  for (std::size_t i = 0; i < properties_.size(); ++i) {
    const auto& p = properties_[i];
    if (!turtle::is_pn_local(p.name)) {
      throw InvalidShape("property name '" + p.name + "' is not a valid local name");
    }
    if (p.max_count && *p.max_count < p.min_count) {
      throw InvalidShape("property '" + p.name + "' has max_count < min_count");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (properties_[j].name == p.name || (!p.iri.empty() && properties_[j].iri == p.iri)) {
        throw InvalidShape("duplicate property '" + p.name + "'");
      }
    }
  }
  for (const auto& group : or_groups) {
    if (group.empty()) throw InvalidShape("empty or-group");
    Pattern mask(properties_.size());
    for (const auto& member : group) {
      auto idx = index_of(member);
      if (!idx) throw InvalidShape("or-group member '" + member + "' is not a property");
      mask.set(*idx);
    }
    or_groups_.push_back(mask);
  }
}

std::vector<std::string> PropertyVocabulary::names() const {
  std::vector<std::string> out;
  out.reserve(properties_.size());
  for (const auto& p : properties_) out.push_back(p.name);
  return out;
}

std::optional<std::size_t> PropertyVocabulary::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < properties_.size(); ++i) {
    if (properties_[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> PropertyVocabulary::resolve(std::string_view predicate) const {
  if (auto idx = index_of(predicate)) return idx;
  std::string full = expand(predicate);
  for (std::size_t i = 0; i < properties_.size(); ++i) {
    const auto& p = properties_[i];
    if (!p.iri.empty() && expand(p.iri) == full) return i;
    for (const auto& alias : p.aliases) {
      if (expand(alias) == full) return i;
    }
  }
  return std::nullopt;
}

turtle::DatatypeHint PropertyVocabulary::datatype_hint() const {
  std::map<std::string, turtle::Datatype, std::less<>> table;
  for (const auto& p : properties_) table.emplace(p.name, p.datatype);
  return [table = std::move(table)](std::string_view predicate) -> std::optional<turtle::Datatype> {
    auto it = table.find(predicate);
    if (it == table.end()) return std::nullopt;
    return it->second;
  };
}

std::string PropertyVocabulary::describe(const Pattern& p) const {
  std::string out = "{";
  bool first = true;
  for (std::size_t i = 0; i < properties_.size(); ++i) {
    if (!p.test(i)) continue;
    if (!first) out += ", ";
    first = false;
    out += properties_[i].name;
  }
  return out + "}";
}

Shape::Shape(std::string name, std::string target_class, PropertyVocabulary vocabulary)
    : name_(std::move(name)),
      target_class_(std::move(target_class)),
      vocabulary_(std::move(vocabulary)) {}

Shape person_shape() {
  using turtle::Datatype;
  const std::string dbo = "http://dbpedia.org/ontology/";
  std::vector<PropertySpec> props = {
      {"http://www.w3.org/2000/01/rdf-schema#label", "label", {dbo + "label"},
       Datatype::String, 1, std::nullopt},
      {dbo + "alias", "alias", {}, Datatype::String, 0, 10},
      {dbo + "birthName", "birthName", {}, Datatype::String, 0, 1},
      {dbo + "birthDate", "birthDate", {}, Datatype::Date, 0, 1},
      {dbo + "deathDate", "deathDate", {}, Datatype::Date, 0, 1},
      {dbo + "birthYear", "birthYear", {}, Datatype::GYear, 0, 1},
      {dbo + "deathYear", "deathYear", {}, Datatype::GYear, 0, 1},
  };
  return Shape("PersonShape", dbo + "Person",
               PropertyVocabulary(std::move(props), {{"birthDate", "birthYear"}}));
}

Shape shape_from_json(const nlohmann::json& j) {
  std::vector<PropertySpec> props;
  for (const auto& jp : j.at("properties")) {
    PropertySpec p;
    p.iri = jp.value("path", std::string{});
    p.name = jp.at("name").get<std::string>();
    if (jp.contains("aliases")) p.aliases = jp.at("aliases").get<std::vector<std::string>>();
    auto dt = turtle::datatype_from_string(jp.value("datatype", std::string("string")));
    if (!dt) throw InvalidShape("unknown datatype for property '" + p.name + "'");
    p.datatype = *dt;
    p.min_count = jp.value("min_count", std::size_t{0});
    if (jp.contains("max_count") && !jp.at("max_count").is_null()) {
      p.max_count = jp.at("max_count").get<std::size_t>();
    }
    props.push_back(std::move(p));
  }
  std::vector<std::vector<std::string>> groups;
  if (j.contains("or_groups")) groups = j.at("or_groups").get<std::vector<std::vector<std::string>>>();
  return Shape(j.value("name", std::string("Shape")), j.value("target_class", std::string{}),
               PropertyVocabulary(std::move(props), std::move(groups)));
}

nlohmann::json shape_to_json(const Shape& s) {
  nlohmann::json props = nlohmann::json::array();
  const auto& v = s.vocabulary();
  for (const auto& p : v.properties()) {
    nlohmann::json jp = {{"path", p.iri},
                         {"name", p.name},
                         {"datatype", std::string(turtle::to_string(p.datatype))},
                         {"min_count", p.min_count}};
    jp["max_count"] = p.max_count ? nlohmann::json(*p.max_count) : nlohmann::json(nullptr);
    if (!p.aliases.empty()) jp["aliases"] = p.aliases;
    props.push_back(std::move(jp));
  }
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : v.or_groups()) {
    std::vector<std::string> members;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (g.test(i)) members.push_back(v.at(i).name);
    }
    groups.push_back(members);
  }
  return {{"name", s.name()},
          {"target_class", s.target_class()},
          {"properties", props},
          {"or_groups", groups}};
}

Shape load_shape(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open shape file " + path.string());
  return shape_from_json(nlohmann::json::parse(in));
}

Pattern pattern_of(const turtle::Graph& g, const PropertyVocabulary& v) {
  Pattern p(v.size());
  for (const auto& e : g.entries()) {
    auto idx = v.index_of(e.predicate);
    if (!idx) throw UnknownProperty(e.predicate);
    p.set(*idx);
  }
  return p;
}

ProjectedPattern project_pattern(const turtle::Graph& g, const PropertyVocabulary& v) {
  ProjectedPattern out{Pattern(v.size()), 0};
  for (const auto& predicate : g.predicates()) {
    if (auto idx = v.index_of(predicate)) {
      out.pattern.set(*idx);
    } else {
      ++out.foreign;
    }
  }
  return out;
}

std::vector<Pattern> powerset(const PropertyVocabulary& v) {
  if (v.size() > kMaxPowersetVocabulary) {
    throw VocabularyTooLarge("powerset limited to 24 properties, vocabulary has " +
                             std::to_string(v.size()));
  }
  std::uint32_t n = std::uint32_t{1} << v.size();
  std::vector<Pattern> out;
  out.reserve(n);
  for (std::uint32_t bits = 0; bits < n; ++bits) out.emplace_back(v.size(), bits);
  return out;
}

std::string_view to_string(Match m) {
  switch (m) {
    case Match::Subsumes:
      return "subsumes";
    case Match::Equivalent:
      return "equivalent";
    case Match::Neither:
      return "neither";
  }
  return "neither";
}

Match relate(const Pattern& graph_pattern, const Pattern& target) {
  if (graph_pattern == target) return Match::Equivalent;
  if (graph_pattern.is_subset_of(target)) return Match::Subsumes;
  return Match::Neither;
}

Match matches(const turtle::Graph& g, const Pattern& target, const PropertyVocabulary& v) {
  return relate(pattern_of(g, v), target);
}

bool pattern_valid(const Pattern& p, const Shape& s) {
  const auto& v = s.vocabulary();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v.at(i).min_count >= 1 && !p.test(i)) return false;
  }
  for (const auto& group : v.or_groups()) {
    if ((group.bits() & p.bits()) == 0) return false;
  }
  return true;
}

bool validates(const turtle::Graph& g, const Shape& s) {
  const auto& v = s.vocabulary();
  std::vector<std::size_t> counts(v.size(), 0);
  Pattern present(v.size());
  for (const auto& e : g.entries()) {
    auto idx = v.index_of(e.predicate);
    if (!idx) continue;  // open shape: other properties are not constrained
    if (e.object.datatype() != v.at(*idx).datatype) return false;
    ++counts[*idx];
    present.set(*idx);
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& p = v.at(i);
    if (counts[i] < p.min_count) return false;
    if (p.max_count && counts[i] > *p.max_count) return false;
  }
  for (const auto& group : v.or_groups()) {
    if ((group.bits() & present.bits()) == 0) return false;
  }
  return true;
}

std::set<Pattern> realized_patterns(std::span<const Pattern> patterns) {
  return std::set<Pattern>(patterns.begin(), patterns.end());
}

std::set<Pattern> realized_patterns(std::span<const turtle::Graph> graphs,
                                    const PropertyVocabulary& v) {
  std::set<Pattern> out;
  for (const auto& g : graphs) out.insert(pattern_of(g, v));
  return out;
}

std::vector<PatternFrequency> pattern_frequencies(std::span<const Pattern> patterns,
                                                  const Shape& s) {
  std::map<Pattern, std::size_t> counts;
  for (const auto& p : patterns) ++counts[p];
  std::vector<PatternFrequency> out;
  out.reserve(counts.size());
  const double total = static_cast<double>(patterns.size());
  for (const auto& [p, c] : counts) {
    out.push_back({p, c, static_cast<double>(c) / total, pattern_valid(p, s)});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.count > b.count;
  });
  return out;
}

std::vector<PatternFrequency> pattern_frequencies(std::span<const turtle::Graph> graphs,
                                                  const Shape& s) {
  std::vector<Pattern> patterns;
  patterns.reserve(graphs.size());
  for (const auto& g : graphs) patterns.push_back(pattern_of(g, s.vocabulary()));
  return pattern_frequencies(patterns, s);
}

}  // namespace shaperel::shape
