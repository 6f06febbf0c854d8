#pragma once

// Distillation of a dual base (abstract, graph) into shape-focused examples:
//
//   filter_pattern -> apply_rules -> wikicheck
//
// Stage functions are pure per example. Distiller::process chains them and
// DistillReport aggregates per-stage counts; reports merge commutatively, so
// examples can be processed in any order or in parallel.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shaperel/shape.hpp"
#include "shaperel/turtle_light.hpp"

namespace shaperel::distill {

enum class Source { InitialKB, Inferred, Annotated };
std::string_view to_string(Source s);
std::optional<Source> source_from_string(std::string_view s);

struct Provenance {
  Source source = Source::InitialKB;
  bool found_in_abstract = false;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

class EmptyAbstract : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// One (abstract, graph) pair. The graph subject is derived from the entity IRI.
struct Example {
  std::string entity;
  std::string abstract;
  turtle::Graph graph;
  std::map<turtle::PredicateObject, Provenance> provenance;
  bool dropped = false;

  static Example make(std::string entity, std::string abstract);

  bool add(std::string predicate, turtle::Literal object, Source source = Source::InitialKB);
  bool remove(const turtle::PredicateObject& po);
  Provenance provenance_of(const turtle::PredicateObject& po) const;

  friend bool operator==(const Example&, const Example&) = default;
};

// TurtleLight subject for an entity IRI (or ":local" form).
std::string subject_for_entity(std::string_view entity);

struct RawTriple {
  std::string predicate;  // IRI, CURIE or local name
  std::string object;
  turtle::Datatype datatype = turtle::Datatype::String;
};

struct RawRecord {
  std::string entity;
  std::string abstract;
  std::vector<RawTriple> triples;
};

RawRecord record_from_json(const nlohmann::json& j);
nlohmann::json record_to_json(const RawRecord& r);

struct IngestStats {
  std::size_t records = 0;
  std::size_t triples = 0;
  std::size_t downgraded_literals = 0;  // lexical form did not match its datatype
  std::size_t rejected_literals = 0;    // not representable as a literal at all

  IngestStats& operator+=(const IngestStats& o);
  friend bool operator==(const IngestStats&, const IngestStats&) = default;
};

// Vocabulary predicates are stored under their shape name; any other
// predicate is stored under its full IRI encoded as a local name, so it can
// never collide with a vocabulary name.
Example ingest(const RawRecord& record, const shape::PropertyVocabulary& v,
               IngestStats* stats = nullptr);

// Serialization of examples for the store and for datasets. Vocabulary
// predicates are written as their full IRI.
nlohmann::json example_to_json(const Example& ex, const shape::PropertyVocabulary& v,
                               bool with_provenance = true);
Example example_from_json(const nlohmann::json& j, const shape::PropertyVocabulary& v);

enum class Projection { Year };

struct InferenceRule {
  std::string source;  // vocabulary name
  std::string target;  // vocabulary name
  Projection projection = Projection::Year;
};

class InvalidRules : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ProjectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// birthDate => birthYear, deathDate => deathYear.
std::vector<InferenceRule> person_rules();
std::vector<InferenceRule> rules_from_json(const nlohmann::json& j);
nlohmann::json rules_to_json(std::span<const InferenceRule> rules);
std::vector<InferenceRule> load_rules(const std::filesystem::path& path);

// Topologically ordered copy of `rules`; throws InvalidRules on a cycle or on
// names outside `v`.
std::vector<InferenceRule> order_rules(std::span<const InferenceRule> rules,
                                       const shape::PropertyVocabulary& v);

// Throws ProjectionError when the source literal cannot be projected.
turtle::Literal project(const InferenceRule& rule, const turtle::Literal& source);

struct FilterOutcome {
  std::optional<Example> example;  // nullopt when no vocabulary triple remains
  std::size_t foreign_dropped = 0;
};
FilterOutcome filter_pattern(Example ex, const shape::Shape& s);

struct RuleOutcome {
  Example example;
  std::vector<turtle::PredicateObject> added;
  std::size_t projection_errors = 0;
};
// `rules` must be ordered (see order_rules).
RuleOutcome apply_rules(Example ex, std::span<const InferenceRule> rules);

// Keeps triples whose value is found in the abstract; marks the example
// dropped when nothing remains.
Example wikicheck(Example ex);

struct PropertyStageCounts {
  std::size_t initial = 0;
  std::size_t after_rules = 0;
  std::size_t found = 0;

  std::optional<double> part_found() const;
  friend bool operator==(const PropertyStageCounts&, const PropertyStageCounts&) = default;
};

struct DistillReport {
  std::vector<std::string> properties;
  std::vector<PropertyStageCounts> per_property;
  std::size_t input_entities = 0;
  std::size_t entities_initial = 0;
  std::size_t entities_after_rules = 0;
  std::size_t entities_found = 0;
  std::size_t foreign_triples_dropped = 0;
  std::size_t inferred_triples = 0;
  std::size_t projection_errors = 0;
  IngestStats ingest;

  std::optional<double> entity_retention() const;
  DistillReport& operator+=(const DistillReport& o);
  friend bool operator==(const DistillReport&, const DistillReport&) = default;

  nlohmann::json to_json() const;
  static DistillReport from_json(const nlohmann::json& j);
  // predicate | initialKB | initialKB+inferences | foundInAbstract | part found
  std::string render_table() const;
};

struct StageOutput {
  std::optional<Example> initial;                // after filter_pattern
  std::vector<turtle::PredicateObject> inferred; // added by apply_rules
  std::optional<Example> found;                  // after wikicheck, if not dropped
  DistillReport counts;                          // contribution of this example
};

class Distiller {
 public:
  Distiller(shape::Shape shape, std::vector<InferenceRule> rules);

  const shape::Shape& shape() const noexcept { return shape_; }
  const std::vector<InferenceRule>& rules() const noexcept { return rules_; }

  DistillReport empty_report() const;
  StageOutput process(Example ex) const;

 private:
  shape::Shape shape_;
  std::vector<InferenceRule> rules_;
};

enum class Partition { InitialKB, Inferences, FoundInAbstract };
std::string_view to_string(Partition p);

// Directory of JSONL partitions (initialKB/, inferences/, foundInAbstract/).
// Commits are serialized through a mutex.
class StoreWriter {
 public:
  StoreWriter(const std::filesystem::path& dir, const shape::PropertyVocabulary& v);
  void commit(const StageOutput& out, const Example& source);
  void flush();

 private:
  std::mutex mutex_;
  const shape::PropertyVocabulary* vocabulary_;
  std::ofstream initial_;
  std::ofstream inferences_;
  std::ofstream found_;
};

std::filesystem::path partition_file(const std::filesystem::path& dir, Partition p);
std::vector<Example> load_partition(const std::filesystem::path& dir, Partition p,
                                    const shape::PropertyVocabulary& v);

// Streams JSONL records from `input` through the distiller.
DistillReport distill(std::istream& input, const Distiller& distiller, StoreWriter* store);

struct DistillResult {
  std::vector<Example> kb;  // examples surviving wikicheck, input order
  DistillReport report;
};
DistillResult distill(std::span<const Example> input, const Distiller& distiller,
                      std::size_t threads = 1);

}  // namespace shaperel::distill
