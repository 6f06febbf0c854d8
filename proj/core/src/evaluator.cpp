#include "shaperel/evaluator.hpp"

#include <algorithm>
#include <iterator>
#include <map>
#include <set>

#include "shaperel/text_table.hpp"

namespace shaperel::eval {

using turtle::Datatype;
using turtle::Literal;

bool PairDiff::equivalent() const noexcept {
  return predicted_foreign == 0 && predicted_pattern == expected_pattern;
}

bool PairDiff::strict_extension() const noexcept {
  return expected_pattern.is_strict_subset_of(predicted_pattern);
}

PairDiff diff(const Example& expected, const Prediction& predicted,
              const shape::PropertyVocabulary& v) {
  if (expected.entity != predicted.entity) {
    throw EntityMismatch("prediction for " + predicted.entity + " paired with " + expected.entity);
  }
  PairDiff d;
  d.entity = expected.entity;
  d.fold = predicted.fold;
  d.expected_pattern = shape::project_pattern(expected.graph, v).pattern;
  d.predicted_pattern = shape::Pattern(v.size());
  const auto& exp = expected.graph.entries();

  if (!predicted.parse_ok || !predicted.parsed) {
    d.fn = exp;
  } else {
    d.parsed = true;
    d.uri_ok = predicted.uri_ok;
    const auto& got = predicted.parsed->entries();
    std::set_intersection(got.begin(), got.end(), exp.begin(), exp.end(), std::back_inserter(d.tp));
    std::set_difference(got.begin(), got.end(), exp.begin(), exp.end(), std::back_inserter(d.fp));
    std::set_difference(exp.begin(), exp.end(), got.begin(), got.end(), std::back_inserter(d.fn));
    auto projected = shape::project_pattern(*predicted.parsed, v);
    d.predicted_pattern = projected.pattern;
    d.predicted_foreign = projected.foreign;
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!d.expected_pattern.test(i) && !d.predicted_pattern.test(i)) ++d.tn_slots;
  }
  return d;
}

std::vector<PairDiff> diff_all(std::span<const Example> expected,
                               std::span<const Prediction> predicted,
                               const shape::PropertyVocabulary& v) {
  std::map<std::string, const Prediction*> by_entity;
  for (const auto& p : predicted) by_entity.emplace(p.entity, &p);
  std::vector<PairDiff> out;
  out.reserve(expected.size());
  for (const auto& ex : expected) {
    auto it = by_entity.find(ex.entity);
    if (it != by_entity.end()) {
      out.push_back(diff(ex, *it->second, v));
    } else {
      Prediction missing;
      missing.entity = ex.entity;
      out.push_back(diff(ex, missing, v));
    }
  }
  return out;
}

Counts& Counts::operator+=(const Counts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

Counts confusion(std::span<const PairDiff> diffs) {
  Counts c;
  for (const auto& d : diffs) c += Counts{d.tp.size(), d.fp.size(), d.fn.size(), d.tn_slots};
  return c;
}

namespace {

std::optional<double> ratio(double num, double den) {
  if (den == 0) return std::nullopt;
  return num / den;
}

std::optional<double> f1_score(std::size_t tp, std::size_t fp, std::size_t fn) {
  return ratio(2.0 * static_cast<double>(tp), static_cast<double>(2 * tp + fp + fn));
}

}  // namespace

Rates rates(std::span<const PairDiff> diffs) {
  std::size_t parsed = 0;
  std::size_t uri = 0;
  for (const auto& d : diffs) {
    if (!d.parsed) continue;
    ++parsed;
    if (d.uri_ok) ++uri;
  }
  return {ratio(static_cast<double>(parsed), static_cast<double>(diffs.size())),
          ratio(static_cast<double>(uri), static_cast<double>(parsed))};
}

std::string_view to_string(MacroAxis a) {
  return a == MacroAxis::PerExample ? "per-example" : "per-property";
}

std::optional<MacroAxis> macro_axis_from_string(std::string_view s) {
  if (s == "per-property") return MacroAxis::PerProperty;
  if (s == "per-example") return MacroAxis::PerExample;
  return std::nullopt;
}

F1 f1(std::span<const PairDiff> diffs, const shape::PropertyVocabulary& v, MacroAxis axis) {
  Counts c = confusion(diffs);
  F1 out;
  out.micro = f1_score(c.tp, c.fp, c.fn);

  std::vector<double> scores;
  if (axis == MacroAxis::PerProperty) {
    std::vector<Counts> per(v.size());
    auto tally = [&](const std::vector<PredicateObject>& triples, std::size_t Counts::*field) {
      for (const auto& t : triples) {
        if (auto idx = v.index_of(t.predicate)) ++(per[*idx].*field);
      }
    };
    for (const auto& d : diffs) {
      tally(d.tp, &Counts::tp);
      tally(d.fp, &Counts::fp);
      tally(d.fn, &Counts::fn);
    }
    for (const auto& p : per) {
      if (auto s = f1_score(p.tp, p.fp, p.fn)) scores.push_back(*s);
    }
  } else {
    for (const auto& d : diffs) {
      if (auto s = f1_score(d.tp.size(), d.fp.size(), d.fn.size())) scores.push_back(*s);
    }
  }
  if (!scores.empty()) {
    double sum = 0;
    for (double s : scores) sum += s;
    out.macro = sum / static_cast<double>(scores.size());
  }
  return out;
}

ErrorRates error_rates(std::span<const PairDiff> diffs) {
  Counts c = confusion(diffs);
  double total = static_cast<double>(c.tp + c.fp + c.fn + c.tn);
  return {ratio(static_cast<double>(c.fp), total), ratio(static_cast<double>(c.fn), total)};
}

Equivalence pattern_equivalence(std::span<const PairDiff> diffs) {
  std::size_t parsed = 0;
  std::size_t equivalent = 0;
  for (const auto& d : diffs) {
    if (!d.parsed) continue;
    ++parsed;
    if (d.equivalent()) ++equivalent;
  }
  Equivalence e;
  e.equivalent = ratio(static_cast<double>(equivalent), static_cast<double>(parsed));
  e.mismatched = ratio(static_cast<double>(parsed - equivalent), static_cast<double>(parsed));
  return e;
}

std::optional<double> pec(std::span<const PairDiff> diffs) {
  std::size_t mismatched = 0;
  std::size_t extensions = 0;
  for (const auto& d : diffs) {
    if (!d.parsed || d.equivalent()) continue;
    ++mismatched;
    if (d.strict_extension()) ++extensions;
  }
  return ratio(static_cast<double>(extensions), static_cast<double>(mismatched));
}

MismatchPatterns mismatch_pattern_sets(std::span<const PairDiff> diffs, const shape::Shape& s) {
  std::set<shape::Pattern> expected;
  std::set<shape::Pattern> predicted;
  std::size_t n = 0;
  std::size_t expected_valid = 0;
  std::size_t predicted_valid = 0;
  for (const auto& d : diffs) {
    if (!d.parsed || d.equivalent()) continue;
    ++n;
    expected.insert(d.expected_pattern);
    predicted.insert(d.predicted_pattern);
    if (shape::pattern_valid(d.expected_pattern, s)) ++expected_valid;
    if (shape::pattern_valid(d.predicted_pattern, s)) ++predicted_valid;
  }
  MismatchPatterns m;
  m.expected_patterns = expected.size();
  m.predicted_patterns = predicted.size();
  m.expected_valid = ratio(static_cast<double>(expected_valid), static_cast<double>(n));
  m.predicted_valid = ratio(static_cast<double>(predicted_valid), static_cast<double>(n));
  return m;
}

EvalReport evaluate(std::span<const PairDiff> diffs, const shape::Shape& s, MacroAxis axis,
                    std::optional<double> mean_loss) {
  const auto& v = s.vocabulary();
  EvalReport r;
  r.macro_axis = axis;
  r.pairs = static_cast<double>(diffs.size());
  for (const auto& d : diffs) {
    if (d.parsed) ++r.parsed;
    if (d.parsed && d.uri_ok) ++r.uri_ok;
  }
  Counts c = confusion(diffs);
  r.tp = static_cast<double>(c.tp);
  r.fp = static_cast<double>(c.fp);
  r.fn = static_cast<double>(c.fn);
  r.tn = static_cast<double>(c.tn);
  Rates rt = rates(diffs);
  r.r_tll = rt.r_tll;
  r.r_uri = rt.r_uri;
  r.mean_loss = mean_loss;
  F1 f = f1(diffs, v, axis);
  r.f1_micro = f.micro;
  r.f1_macro = f.macro;
  ErrorRates er = error_rates(diffs);
  r.r_fp = er.r_fp;
  r.r_fn = er.r_fn;
  Equivalence eq = pattern_equivalence(diffs);
  r.r_equivalent = eq.equivalent;
  r.r_mismatched = eq.mismatched;
  MismatchPatterns mp = mismatch_pattern_sets(diffs, s);
  r.mismatch_expected_patterns = static_cast<double>(mp.expected_patterns);
  r.mismatch_predicted_patterns = static_cast<double>(mp.predicted_patterns);
  r.expected_valid_mismatched = mp.expected_valid;
  r.predicted_valid_mismatched = mp.predicted_valid;
  r.pec = pec(diffs);
  return r;
}

namespace {

void average(std::span<const EvalReport> reports, std::optional<double> EvalReport::*field,
             EvalReport& out) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& r : reports) {
    if (r.*field) {
      sum += *(r.*field);
      ++n;
    }
  }
  out.*field = n ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt;
}

void average(std::span<const EvalReport> reports, double EvalReport::*field, EvalReport& out) {
  double sum = 0;
  for (const auto& r : reports) sum += r.*field;
  out.*field = reports.empty() ? 0.0 : sum / static_cast<double>(reports.size());
}

}  // namespace

EvalReport mean(std::span<const EvalReport> reports) {
  EvalReport out;
  if (reports.empty()) return out;
  out.folds = reports.size();
  out.macro_axis = reports.front().macro_axis;
  for (auto field : {&EvalReport::pairs, &EvalReport::parsed, &EvalReport::uri_ok, &EvalReport::tp,
                     &EvalReport::fp, &EvalReport::fn, &EvalReport::tn,
                     &EvalReport::mismatch_expected_patterns,
                     &EvalReport::mismatch_predicted_patterns}) {
    average(reports, field, out);
  }
  for (auto field : {&EvalReport::r_tll, &EvalReport::r_uri, &EvalReport::mean_loss,
                     &EvalReport::f1_micro, &EvalReport::f1_macro, &EvalReport::r_fp,
                     &EvalReport::r_fn, &EvalReport::r_equivalent, &EvalReport::r_mismatched,
                     &EvalReport::expected_valid_mismatched,
                     &EvalReport::predicted_valid_mismatched, &EvalReport::pec}) {
    average(reports, field, out);
  }
  return out;
}

FoldedReport evaluate_folds(std::span<const PairDiff> diffs, const shape::Shape& s,
                            MacroAxis axis) {
  std::map<int, std::vector<PairDiff>> groups;
  for (const auto& d : diffs) groups[d.fold].push_back(d);
  FoldedReport out;
  for (const auto& [fold, group] : groups) {
    out.fold_ids.push_back(fold);
    out.per_fold.push_back(evaluate(group, s, axis));
  }
  if (out.per_fold.empty()) {
    out.mean = evaluate({}, s, axis);
  } else if (out.per_fold.size() == 1) {
    out.mean = out.per_fold.front();
  } else {
    out.mean = mean(out.per_fold);
  }
  return out;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
  return {{"folds", folds},
          {"macro_axis", std::string(to_string(macro_axis))},
          {"pairs", pairs},
          {"parsed", parsed},
          {"uri_ok", uri_ok},
          {"tp", tp},
          {"fp", fp},
          {"fn", fn},
          {"tn", tn},
          {"r_tll", opt(r_tll)},
          {"r_uri", opt(r_uri)},
          {"mean_loss", opt(mean_loss)},
          {"f1_micro", opt(f1_micro)},
          {"f1_macro", opt(f1_macro)},
          {"r_fp", opt(r_fp)},
          {"r_fn", opt(r_fn)},
          {"r_equivalent", opt(r_equivalent)},
          {"r_mismatched", opt(r_mismatched)},
          {"mismatch_expected_patterns", mismatch_expected_patterns},
          {"mismatch_predicted_patterns", mismatch_predicted_patterns},
          {"expected_valid_mismatched", opt(expected_valid_mismatched)},
          {"predicted_valid_mismatched", opt(predicted_valid_mismatched)},
          {"pec", opt(pec)}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.folds = j.value("folds", std::size_t{1});
  r.macro_axis = macro_axis_from_string(j.value("macro_axis", std::string("per-property")))
                     .value_or(MacroAxis::PerProperty);
  r.pairs = j.value("pairs", 0.0);
  r.parsed = j.value("parsed", 0.0);
  r.uri_ok = j.value("uri_ok", 0.0);
  r.tp = j.value("tp", 0.0);
  r.fp = j.value("fp", 0.0);
  r.fn = j.value("fn", 0.0);
  r.tn = j.value("tn", 0.0);
  r.r_tll = opt_from(j, "r_tll");
  r.r_uri = opt_from(j, "r_uri");
  r.mean_loss = opt_from(j, "mean_loss");
  r.f1_micro = opt_from(j, "f1_micro");
  r.f1_macro = opt_from(j, "f1_macro");
  r.r_fp = opt_from(j, "r_fp");
  r.r_fn = opt_from(j, "r_fn");
  r.r_equivalent = opt_from(j, "r_equivalent");
  r.r_mismatched = opt_from(j, "r_mismatched");
  r.mismatch_expected_patterns = j.value("mismatch_expected_patterns", 0.0);
  r.mismatch_predicted_patterns = j.value("mismatch_predicted_patterns", 0.0);
  r.expected_valid_mismatched = opt_from(j, "expected_valid_mismatched");
  r.predicted_valid_mismatched = opt_from(j, "predicted_valid_mismatched");
  r.pec = opt_from(j, "pec");
  return r;
}

namespace {

nlohmann::json triples_to_json(const std::vector<PredicateObject>& triples,
                               const shape::PropertyVocabulary& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : triples) {
    std::string p = t.predicate;
    if (auto idx = v.index_of(t.predicate); idx && !v.at(*idx).iri.empty()) p = v.at(*idx).iri;
    arr.push_back({{"p", p},
                   {"o", t.object.lexical()},
                   {"dt", std::string(turtle::to_string(t.object.datatype()))}});
  }
  return arr;
}

std::vector<PredicateObject> triples_from_json(const nlohmann::json& arr,
                                               const shape::PropertyVocabulary& v) {
  std::vector<PredicateObject> out;
  for (const auto& t : arr) {
    std::string p = t.at("p").get<std::string>();
    std::string name;
    if (auto idx = v.resolve(p)) {
      name = v.at(*idx).name;
    } else {
      name = turtle::encode_local_name(p);
    }
    Datatype dt = turtle::datatype_from_string(t.value("dt", std::string("string")))
                      .value_or(Datatype::String);
    out.push_back({std::move(name), Literal::make(t.at("o").get<std::string>(), dt)});
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

nlohmann::json diff_to_json(const PairDiff& d, const shape::PropertyVocabulary& v) {
  nlohmann::json j = {{"entity", d.entity},
                      {"parsed", d.parsed},
                      {"uri_ok", d.uri_ok},
                      {"tp", triples_to_json(d.tp, v)},
                      {"fp", triples_to_json(d.fp, v)},
                      {"fn", triples_to_json(d.fn, v)},
                      {"tn_slots", d.tn_slots},
                      {"expected_pattern", d.expected_pattern.bits()},
                      {"predicted_pattern", d.predicted_pattern.bits()},
                      {"predicted_foreign", d.predicted_foreign}};
  if (d.fold >= 0) j["fold"] = d.fold;
  return j;
}

PairDiff diff_from_json(const nlohmann::json& j, const shape::PropertyVocabulary& v) {
  PairDiff d;
  d.entity = j.at("entity").get<std::string>();
  d.fold = j.value("fold", -1);
  d.parsed = j.at("parsed").get<bool>();
  d.uri_ok = j.at("uri_ok").get<bool>();
  d.tp = triples_from_json(j.at("tp"), v);
  d.fp = triples_from_json(j.at("fp"), v);
  d.fn = triples_from_json(j.at("fn"), v);
  d.tn_slots = j.at("tn_slots").get<std::size_t>();
  d.expected_pattern = shape::Pattern(v.size(), j.at("expected_pattern").get<std::uint32_t>());
  d.predicted_pattern = shape::Pattern(v.size(), j.at("predicted_pattern").get<std::uint32_t>());
  d.predicted_foreign = j.value("predicted_foreign", std::size_t{0});
  return d;
}

std::string render_scores(std::span<const ReportRow> rows) {
  TextTable t({"model", "test set", "r_tll", "r_URI+", "loss", "F1-", "F1+", "r_FP", "r_FN",
               "r_G<->"});
  for (const auto& row : rows) {
    const auto& r = row.report;
    t.add_row({row.model, row.dataset, format_number(r.r_tll, 2), format_number(r.r_uri, 2),
               format_number(r.mean_loss, 3), format_number(r.f1_micro, 3),
               format_number(r.f1_macro, 3), format_number(r.r_fp, 4), format_number(r.r_fn, 4),
               format_number(r.r_equivalent, 2)});
  }
  return t.render();
}

std::string render_patterns(std::span<const ReportRow> rows) {
  TextTable t({"model (dataset)", "r_G<-/->", "|P|", "|P^|", "r_s*(G)", "r_s*(G^)", "PEC"});
  for (const auto& row : rows) {
    const auto& r = row.report;
    t.add_row({row.model + " (" + row.dataset + ")", format_number(r.r_mismatched, 2),
               format_number(r.mismatch_expected_patterns, 2),
               format_number(r.mismatch_predicted_patterns, 2),
               format_number(r.expected_valid_mismatched, 2),
               format_number(r.predicted_valid_mismatched, 2), format_number(r.pec, 2)});
  }
  return t.render();
}

}  // namespace shaperel::eval
