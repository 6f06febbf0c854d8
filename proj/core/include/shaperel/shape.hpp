#pragma once

// Shape vocabulary, example-specific patterns and graph/pattern relations.
//
// A Pattern is a bitmask over the vocabulary order: bit i is set iff property
// i occurs at least once. Patterns encode presence only; cardinality and
// datatype constraints are checked by `validates`.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "shaperel/turtle_light.hpp"

namespace shaperel::shape {

inline constexpr std::size_t kMaxVocabulary = 32;
inline constexpr std::size_t kMaxPowersetVocabulary = 24;

class UnknownProperty : public std::invalid_argument {
 public:
  explicit UnknownProperty(const std::string& predicate)
      : std::invalid_argument("property '" + predicate + "' is not in the vocabulary"),
        predicate_(predicate) {}
  const std::string& predicate() const noexcept { return predicate_; }

 private:
  std::string predicate_;
};

class VocabularyTooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidShape : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Pattern {
 public:
  Pattern() = default;
  explicit Pattern(std::size_t width, std::uint32_t bits = 0);

  std::size_t width() const noexcept { return width_; }
  std::uint32_t bits() const noexcept { return bits_; }

  bool test(std::size_t i) const noexcept { return (bits_ >> i) & 1u; }
  Pattern& set(std::size_t i);
  std::size_t count() const noexcept;
  bool empty() const noexcept { return bits_ == 0; }

  bool is_subset_of(const Pattern& other) const noexcept {
    return (bits_ & ~other.bits_) == 0;
  }
  bool is_strict_subset_of(const Pattern& other) const noexcept {
    return is_subset_of(other) && bits_ != other.bits_;
  }

  friend auto operator<=>(const Pattern&, const Pattern&) = default;
  friend bool operator==(const Pattern&, const Pattern&) = default;

 private:
  std::uint32_t bits_ = 0;
  std::uint8_t width_ = 0;
};

struct PropertySpec {
  std::string iri;                   // full IRI, e.g. http://dbpedia.org/ontology/birthDate
  std::string name;                  // TurtleLight local name, e.g. birthDate
  std::vector<std::string> aliases;  // other IRIs or CURIEs resolving to this property
  turtle::Datatype datatype = turtle::Datatype::String;
  std::size_t min_count = 0;
  std::optional<std::size_t> max_count;  // nullopt = unbounded
};

class PropertyVocabulary {
 public:
  PropertyVocabulary() = default;
  // Throws InvalidShape on duplicates, unknown or-group members, or more than
  // kMaxVocabulary properties.
  PropertyVocabulary(std::vector<PropertySpec> properties,
                     std::vector<std::vector<std::string>> or_groups);

  std::size_t size() const noexcept { return properties_.size(); }
  const std::vector<PropertySpec>& properties() const noexcept { return properties_; }
  const PropertySpec& at(std::size_t i) const { return properties_.at(i); }
  const std::vector<Pattern>& or_groups() const noexcept { return or_groups_; }
  std::vector<std::string> names() const;

  std::optional<std::size_t> index_of(std::string_view name) const;
  // Accepts a local name, a full IRI, a CURIE (rdfs:, dbo:, xsd:, ...) or any
  // configured alias.
  std::optional<std::size_t> resolve(std::string_view predicate) const;

  turtle::DatatypeHint datatype_hint() const;
  std::string describe(const Pattern& p) const;

 private:
  std::vector<PropertySpec> properties_;
  std::vector<Pattern> or_groups_;
};

class Shape {
 public:
  Shape() = default;
  Shape(std::string name, std::string target_class, PropertyVocabulary vocabulary);

  const std::string& name() const noexcept { return name_; }
  const std::string& target_class() const noexcept { return target_class_; }
  const PropertyVocabulary& vocabulary() const noexcept { return vocabulary_; }

 private:
  std::string name_;
  std::string target_class_;
  PropertyVocabulary vocabulary_;
};

// The shipped dbo:Person shape: label, alias, birthName, birthDate, deathDate,
// birthYear, deathYear, with label mandatory and birthDate|birthYear required.
Shape person_shape();

Shape shape_from_json(const nlohmann::json& j);
nlohmann::json shape_to_json(const Shape& s);
Shape load_shape(const std::filesystem::path& path);

Pattern pattern_of(const turtle::Graph& g, const PropertyVocabulary& v);

// Pattern over the known predicates plus the number of distinct predicates
// outside the vocabulary.
struct ProjectedPattern {
  Pattern pattern;
  std::size_t foreign = 0;
};
ProjectedPattern project_pattern(const turtle::Graph& g, const PropertyVocabulary& v);

std::vector<Pattern> powerset(const PropertyVocabulary& v);

enum class Match { Subsumes, Equivalent, Neither };
std::string_view to_string(Match m);

Match relate(const Pattern& graph_pattern, const Pattern& target);
Match matches(const turtle::Graph& g, const Pattern& target, const PropertyVocabulary& v);

// Presence-level validity: every property with min_count >= 1 and at least one
// member of every or-group is present.
bool pattern_valid(const Pattern& p, const Shape& s);

// Graph-level validity: cardinalities, datatypes and or-groups.
bool validates(const turtle::Graph& g, const Shape& s);

std::set<Pattern> realized_patterns(std::span<const Pattern> patterns);
std::set<Pattern> realized_patterns(std::span<const turtle::Graph> graphs,
                                    const PropertyVocabulary& v);

struct PatternFrequency {
  Pattern pattern;
  std::size_t count = 0;
  double frequency = 0.0;
  bool shape_valid = false;
};

// Sorted by descending count, ties by ascending bits.
std::vector<PatternFrequency> pattern_frequencies(std::span<const Pattern> patterns,
                                                  const Shape& s);
std::vector<PatternFrequency> pattern_frequencies(std::span<const turtle::Graph> graphs,
                                                  const Shape& s);

}  // namespace shaperel::shape
