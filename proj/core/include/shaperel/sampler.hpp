#pragma once

// Seeded sampling of disjoint datasets from the distilled store, k-fold
// assignment and dataset statistics.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shaperel/distiller.hpp"
#include "shaperel/shape.hpp"

namespace shaperel::sampling {

using distill::Example;

// mt19937_64 with a bounded draw that does not depend on the standard
// library's distribution implementation, so sequences are portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  // Uniform in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  // Uniform in [0, 1).
  double unit();

 private:
  std::mt19937_64 engine_;
};

enum class Constraint { AnyPattern, ShapeValidOnly };
std::string_view to_string(Constraint c);
std::optional<Constraint> constraint_from_string(std::string_view s);

enum class Role { Train, Eval, Test };
std::string_view to_string(Role r);

class InsufficientExamples : public std::runtime_error {
 public:
  InsufficientExamples(std::size_t requested, std::size_t eligible)
      : std::runtime_error("requested " + std::to_string(requested) + " examples, only " +
                           std::to_string(eligible) + " eligible"),
        requested_(requested),
        eligible_(eligible) {}
  std::size_t requested() const noexcept { return requested_; }
  std::size_t eligible() const noexcept { return eligible_; }

 private:
  std::size_t requested_;
  std::size_t eligible_;
};

class BadK : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Dataset {
  std::string name;
  std::uint64_t seed = 0;
  Constraint constraint = Constraint::AnyPattern;
  std::vector<Example> examples;
  std::vector<int> folds;  // fold id per example, empty before kfold
  int fold_count = 0;

  std::size_t size() const noexcept { return examples.size(); }
  std::vector<turtle::Graph> graphs() const;
  std::vector<std::string> entities() const;

  // Test = the fold itself; eval = the next fold (k-1 wraps to 0), which lies
  // inside the train portion; train = everything outside the test fold.
  bool in_role(std::size_t index, int fold, Role role) const;
  std::vector<std::size_t> indices(int fold, Role role) const;
};

struct SampleRequest {
  std::string name;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  Constraint constraint = Constraint::AnyPattern;
  std::set<std::string> exclude;  // entity IRIs
};

// Uniform without replacement over eligible examples (store order sorted by
// entity first, so the result depends only on the seed and the store content).
Dataset sample(std::span<const Example> store, const SampleRequest& request,
               const shape::Shape& shape);

// Draws datasets that are pairwise disjoint by entity.
class SamplingSession {
 public:
  SamplingSession(std::span<const Example> store, const shape::Shape& shape)
      : store_(store), shape_(&shape) {}

  Dataset draw(std::string name, std::size_t count, std::uint64_t seed,
               Constraint constraint);
  const std::set<std::string>& used() const noexcept { return used_; }

 private:
  std::span<const Example> store_;
  const shape::Shape* shape_;
  std::set<std::string> used_;
};

// Contiguous folds over the dataset order; sizes differ by at most one.
Dataset kfold(Dataset d, int k);

// Pluggable (abstract, graph) scorer such as an NLI model. The default
// implementation scores nothing.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string name() const = 0;
  virtual std::optional<double> score(const Example& ex) const = 0;
};

class NullScorer final : public Scorer {
 public:
  std::string name() const override { return "null"; }
  std::optional<double> score(const Example&) const override { return std::nullopt; }
};

struct DatasetStats {
  std::string name;
  std::size_t size = 0;
  double mean_properties = 0.0;
  std::size_t realized_patterns = 0;
  double shape_rate = 0.0;  // fraction of graphs validating the shape
  std::optional<double> mean_nli;
  std::optional<double> mean_tc;

  nlohmann::json to_json() const;
  static DatasetStats from_json(const nlohmann::json& j);
};

DatasetStats stats(const Dataset& d, const shape::Shape& shape,
                   const Scorer* nli = nullptr, const Scorer* tc = nullptr);

// Manifest: {name, seed, constraint, entities, folds}. Examples are stored
// separately as JSONL.
nlohmann::json manifest(const Dataset& d);
void write_dataset(const Dataset& d, const std::filesystem::path& manifest_path,
                   const std::filesystem::path& examples_path,
                   const shape::PropertyVocabulary& v);
Dataset read_dataset(const std::filesystem::path& manifest_path,
                     const std::filesystem::path& examples_path,
                     const shape::PropertyVocabulary& v);
// Rebuilds a dataset from a manifest by looking entities up in `store`.
Dataset dataset_from_manifest(const nlohmann::json& manifest, std::span<const Example> store);

}  // namespace shaperel::sampling
