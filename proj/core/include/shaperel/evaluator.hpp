#pragma once

// Metrics over (expected example, prediction) pairs: parse and subject rates,
// strict triple F1, FP/FN rates, pattern equivalence and pattern extension.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shaperel/distiller.hpp"
#include "shaperel/extractor.hpp"
#include "shaperel/shape.hpp"

namespace shaperel::eval {

using distill::Example;
using extract::Prediction;
using turtle::PredicateObject;

class EntityMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PairDiff {
  std::string entity;
  int fold = -1;
  bool parsed = false;
  bool uri_ok = false;
  std::vector<PredicateObject> tp;  // sorted
  std::vector<PredicateObject> fp;
  std::vector<PredicateObject> fn;
  std::size_t tn_slots = 0;  // vocabulary properties absent on both sides
  shape::Pattern expected_pattern;
  shape::Pattern predicted_pattern;  // empty when not parsed
  std::size_t predicted_foreign = 0;  // distinct non-vocabulary predicates

  // Only meaningful when parsed.
  bool equivalent() const noexcept;
  bool strict_extension() const noexcept;

  friend bool operator==(const PairDiff&, const PairDiff&) = default;
};

// Strict equality on (predicate, lexical form, datatype); subjects are not
// compared. A prediction that did not parse contributes every expected
// triple as FN. Throws EntityMismatch when the entities differ.
PairDiff diff(const Example& expected, const Prediction& predicted,
              const shape::PropertyVocabulary& v);

// Pairs each example with the prediction for the same entity. Examples
// without a prediction are evaluated as unparsed.
std::vector<PairDiff> diff_all(std::span<const Example> expected,
                               std::span<const Prediction> predicted,
                               const shape::PropertyVocabulary& v);

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  Counts& operator+=(const Counts& o);
  friend bool operator==(const Counts&, const Counts&) = default;
};
Counts confusion(std::span<const PairDiff> diffs);

struct Rates {
  std::optional<double> r_tll;  // parsed / pairs
  std::optional<double> r_uri;  // subject correct / parsed
};
Rates rates(std::span<const PairDiff> diffs);

enum class MacroAxis { PerProperty, PerExample };
std::string_view to_string(MacroAxis a);
std::optional<MacroAxis> macro_axis_from_string(std::string_view s);

struct F1 {
  std::optional<double> micro;
  std::optional<double> macro;
};
F1 f1(std::span<const PairDiff> diffs, const shape::PropertyVocabulary& v,
      MacroAxis axis = MacroAxis::PerProperty);

struct ErrorRates {
  std::optional<double> r_fp;  // FP / (FP + TN + TP + FN)
  std::optional<double> r_fn;  // FN / (FP + TN + TP + FN)
};
ErrorRates error_rates(std::span<const PairDiff> diffs);

struct Equivalence {
  std::optional<double> equivalent;  // over the parsed subset
  std::optional<double> mismatched;
};
Equivalence pattern_equivalence(std::span<const PairDiff> diffs);

// Fraction of mismatched parsed predictions whose pattern strictly extends
// the expected one; nullopt when nothing mismatches.
std::optional<double> pec(std::span<const PairDiff> diffs);

struct MismatchPatterns {
  std::size_t expected_patterns = 0;   // distinct expected patterns among mismatches
  std::size_t predicted_patterns = 0;  // distinct predicted patterns among mismatches
  std::optional<double> expected_valid;   // share of mismatched pairs with a shape-valid expected pattern
  std::optional<double> predicted_valid;  // same for the predicted pattern
};
MismatchPatterns mismatch_pattern_sets(std::span<const PairDiff> diffs, const shape::Shape& s);

struct EvalReport {
  std::size_t folds = 1;
  MacroAxis macro_axis = MacroAxis::PerProperty;
  // Counts; means when aggregated over folds.
  double pairs = 0;
  double parsed = 0;
  double uri_ok = 0;
  double tp = 0;
  double fp = 0;
  double fn = 0;
  double tn = 0;
  std::optional<double> r_tll;
  std::optional<double> r_uri;
  std::optional<double> mean_loss;
  std::optional<double> f1_micro;
  std::optional<double> f1_macro;
  std::optional<double> r_fp;
  std::optional<double> r_fn;
  std::optional<double> r_equivalent;
  std::optional<double> r_mismatched;
  double mismatch_expected_patterns = 0;
  double mismatch_predicted_patterns = 0;
  std::optional<double> expected_valid_mismatched;
  std::optional<double> predicted_valid_mismatched;
  std::optional<double> pec;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

EvalReport evaluate(std::span<const PairDiff> diffs, const shape::Shape& s,
                    MacroAxis axis = MacroAxis::PerProperty,
                    std::optional<double> mean_loss = std::nullopt);

// Arithmetic mean of each metric over the reports where it is defined.
EvalReport mean(std::span<const EvalReport> reports);

struct FoldedReport {
  std::vector<int> fold_ids;
  std::vector<EvalReport> per_fold;
  EvalReport mean;
};
// Groups diffs by fold and averages the per-fold reports. Diffs without a
// fold form a single group.
FoldedReport evaluate_folds(std::span<const PairDiff> diffs, const shape::Shape& s,
                            MacroAxis axis = MacroAxis::PerProperty);

nlohmann::json diff_to_json(const PairDiff& d, const shape::PropertyVocabulary& v);
PairDiff diff_from_json(const nlohmann::json& j, const shape::PropertyVocabulary& v);

struct ReportRow {
  std::string model;
  std::string dataset;
  EvalReport report;
};
// model | test set | r_tll | r_URI+ | loss | F1- | F1+ | r_FP | r_FN | r_G<->
std::string render_scores(std::span<const ReportRow> rows);
// model (dataset) | r_G<-/-> | |P| | |P^| | r_s*(G) | r_s*(G^) | PEC
std::string render_patterns(std::span<const ReportRow> rows);

}  // namespace shaperel::eval
