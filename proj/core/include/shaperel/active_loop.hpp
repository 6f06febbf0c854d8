#pragma once

// Light active learning: review queues built from FP/FN triples, an
// append-only judgement log and gold dataset correction
//
//   D+ = (D \ FN-) u FP+

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shaperel/evaluator.hpp"
#include "shaperel/sampler.hpp"

namespace shaperel::active {

using turtle::PredicateObject;

enum class Kind { FP, FN };
std::string_view to_string(Kind k);
std::optional<Kind> kind_from_string(std::string_view s);

enum class Polarity { Positive, Negative };
std::string_view to_string(Polarity p);  // "+" / "-"
std::optional<Polarity> polarity_from_string(std::string_view s);

// Error categories for FP triples judged wrong.
enum class Category { FH, AC, IAC, WV, TMI, SG, ICE, LCE, MCE };
std::span<const Category> all_categories();
std::string_view to_string(Category c);
std::string_view describe(Category c);
std::optional<Category> category_from_string(std::string_view s);

struct ReviewItem {
  std::string id;  // stable hash of (model, entity, kind, triple)
  std::string entity;
  std::string abstract;
  PredicateObject triple;
  Kind kind = Kind::FP;
  std::vector<int> folds;  // folds whose run produced the triple; {-1} without folds
  std::string model;

  friend bool operator==(const ReviewItem&, const ReviewItem&) = default;
};

std::string item_id(std::string_view model, std::string_view entity, Kind kind,
                    const PredicateObject& triple);

// One item per distinct (entity, triple, kind), tagged with every fold that
// produced it; sorted by (entity, predicate, object, kind).
std::vector<ReviewItem> collect(std::span<const eval::PairDiff> diffs,
                                const sampling::Dataset& d, const std::string& model);

nlohmann::json item_to_json(const ReviewItem& item, const shape::PropertyVocabulary& v);

struct Judgement {
  std::string item_id;
  Polarity polarity = Polarity::Positive;
  std::optional<Category> category;  // required iff FP judged wrong
  std::string annotator;
  std::string timestamp;  // free-form, supplied by the caller

  friend bool operator==(const Judgement&, const Judgement&) = default;
};

class UnknownItem : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class AlreadyJudged : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NotJudged : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Category missing on an FP "-" judgement, or present on any other.
class MissingCategory : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class PendingItems : public std::logic_error {
 public:
  explicit PendingItems(std::size_t pending)
      : std::logic_error(std::to_string(pending) + " review items are still pending"),
        pending_(pending) {}
  std::size_t pending() const noexcept { return pending_; }

 private:
  std::size_t pending_;
};

// Throws MissingCategory when the category does not fit kind and polarity.
void check_judgement(Kind kind, const Judgement& j);

// Review items plus the judgement log. The log is an append-only JSONL file
// of judge / revoke records; the current judgement of an item is the last
// judge record not followed by a revoke. All methods are thread-safe.
class AnnotationSession {
 public:
  AnnotationSession(std::string dataset, std::string model, std::vector<ReviewItem> items,
                    std::optional<std::filesystem::path> log = std::nullopt);

  const std::string& dataset() const noexcept { return dataset_; }
  const std::string& model() const noexcept { return model_; }
  std::size_t total() const;
  std::size_t judged() const;

  std::vector<ReviewItem> items() const;
  std::optional<ReviewItem> item(const std::string& id) const;
  std::vector<ReviewItem> pending(std::size_t limit = SIZE_MAX) const;
  std::optional<Judgement> judgement(const std::string& id) const;
  std::map<std::string, Judgement> judgements() const;

  void judge(const Judgement& j);
  void revoke(const std::string& id, const std::string& annotator = {});

 private:
  void append(const nlohmann::json& record);
  void replay(const std::filesystem::path& log);

  mutable std::mutex mutex_;
  std::string dataset_;
  std::string model_;
  std::vector<ReviewItem> items_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, Judgement> current_;
  std::optional<std::filesystem::path> log_;
};

struct CorrectedTriple {
  std::string entity;
  PredicateObject triple;

  friend auto operator<=>(const CorrectedTriple&, const CorrectedTriple&) = default;
  friend bool operator==(const CorrectedTriple&, const CorrectedTriple&) = default;
};

struct GoldCorrection {
  std::string source_dataset;
  std::string dataset;
  std::vector<CorrectedTriple> removed;  // FN judged wrong
  std::vector<CorrectedTriple> added;    // FP judged correct
  std::vector<std::string> dropped;      // examples left without triples

  nlohmann::json to_json(const shape::PropertyVocabulary& v) const;
};

struct GoldResult {
  sampling::Dataset gold;
  GoldCorrection correction;
};

// Items whose entity is not in `d` are ignored. Throws PendingItems when an
// item of `d` has no judgement. Applying the result again is a no-op apart
// from the name, which keeps a single "+" suffix.
GoldResult correct(const sampling::Dataset& d, std::span<const ReviewItem> items,
                   const std::map<std::string, Judgement>& judgements);

struct AnnotationMetrics {
  std::size_t folds = 1;
  // Per-fold means.
  double fn_negative = 0;
  double fn_positive = 0;
  double fp_negative = 0;
  double fp_positive = 0;
  double expected_triples = 0;
  std::optional<double> r_omis;   // FN+ / expected triples
  std::optional<double> r_disco;  // FP+ / (FP+ + FP-)
  std::map<Category, double> categories;

  nlohmann::json to_json() const;
  static AnnotationMetrics from_json(const nlohmann::json& j);
};

std::optional<double> omission_rate(double fn_positive, double expected_triples);
std::optional<double> discovery_rate(double fp_positive, double fp_negative);

// Counts are expanded per fold (an item shared by several folds counts once
// in each) and divided by `fold_count`; rates are taken on the averaged
// counts. `expected_triples_per_fold` is the number of expected triples each
// fold's run was evaluated against. Throws PendingItems when an item is
// unjudged.
AnnotationMetrics annotation_metrics(std::span<const ReviewItem> items,
                                     const std::map<std::string, Judgement>& judgements,
                                     double expected_triples_per_fold,
                                     std::size_t fold_count = 1);

// FN- | FN+ | r_omis | FP- | FP+ | r_disco
std::string render_annotation(std::span<const std::pair<std::string, AnnotationMetrics>> rows);

}  // namespace shaperel::active
