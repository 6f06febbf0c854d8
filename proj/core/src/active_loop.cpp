#include "shaperel/active_loop.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <set>
#include <tuple>

#include "shaperel/jsonl.hpp"
#include "shaperel/rendering.hpp"
#include "shaperel/text_table.hpp"

namespace shaperel::active {

using turtle::Datatype;
using turtle::Literal;

std::string_view to_string(Kind k) { return k == Kind::FN ? "FN" : "FP"; }

std::optional<Kind> kind_from_string(std::string_view s) {
  if (s == "FP") return Kind::FP;
  if (s == "FN") return Kind::FN;
  return std::nullopt;
}

std::string_view to_string(Polarity p) { return p == Polarity::Negative ? "-" : "+"; }

std::optional<Polarity> polarity_from_string(std::string_view s) {
  if (s == "+") return Polarity::Positive;
  if (s == "-") return Polarity::Negative;
  return std::nullopt;
}

namespace {

struct CategoryInfo {
  Category category;
  std::string_view code;
  std::string_view description;
};

constexpr std::array<CategoryInfo, 9> kCategories{{
    {Category::FH, "FH", "factual hallucination"},
    {Category::AC, "AC", "abusive completion"},
    {Category::IAC, "IAC", "illogical and abusive completion"},
    {Category::WV, "WV", "wrong value"},
    {Category::TMI, "TMI", "typographic minor issue"},
    {Category::SG, "SG", "stuttered generation"},
    {Category::ICE, "ICE", "incomplete context error"},
    {Category::LCE, "LCE", "larger context error"},
    {Category::MCE, "MCE", "mixed context error"},
}};

constexpr std::array<Category, 9> kCategoryList{Category::FH,  Category::AC,  Category::IAC,
                                                Category::WV,  Category::TMI, Category::SG,
                                                Category::ICE, Category::LCE, Category::MCE};

const CategoryInfo& info(Category c) { return kCategories[static_cast<std::size_t>(c)]; }

}  // namespace

std::span<const Category> all_categories() { return kCategoryList; }
std::string_view to_string(Category c) { return info(c).code; }
std::string_view describe(Category c) { return info(c).description; }

std::optional<Category> category_from_string(std::string_view s) {
  for (const auto& c : kCategories) {
    if (c.code == s) return c.category;
  }
  return std::nullopt;
}

std::string item_id(std::string_view model, std::string_view entity, Kind kind,
                    const PredicateObject& triple) {
  // FNV-1a over the unit-separated key.
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&](std::string_view part) {
    for (unsigned char c : part) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    h ^= 0x1f;
    h *= 0x100000001b3ull;
  };
  feed(model);
  feed(entity);
  feed(to_string(kind));
  feed(triple.predicate);
  feed(turtle::to_string(triple.object.datatype()));
  feed(triple.object.lexical());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<ReviewItem> collect(std::span<const eval::PairDiff> diffs,
                                const sampling::Dataset& d, const std::string& model) {
  std::map<std::string, const std::string*> abstracts;
  for (const auto& e : d.examples) abstracts.emplace(e.entity, &e.abstract);

  using Key = std::tuple<std::string, PredicateObject, Kind>;
  std::map<Key, std::set<int>> folds;
  for (const auto& diff : diffs) {
    for (const auto& t : diff.fp) folds[{diff.entity, t, Kind::FP}].insert(diff.fold);
    for (const auto& t : diff.fn) folds[{diff.entity, t, Kind::FN}].insert(diff.fold);
  }

  std::vector<ReviewItem> items;
  items.reserve(folds.size());
  for (const auto& [key, fold_set] : folds) {
    const auto& [entity, triple, kind] = key;
    ReviewItem item{item_id(model, entity, kind, triple),
                    entity,
                    {},
                    triple,
                    kind,
                    std::vector<int>(fold_set.begin(), fold_set.end()),
                    model};
    if (auto it = abstracts.find(entity); it != abstracts.end()) item.abstract = *it->second;
    items.push_back(std::move(item));
  }
  return items;
}

nlohmann::json item_to_json(const ReviewItem& item, const shape::PropertyVocabulary& v) {
  std::string iri = item.triple.predicate;
  if (auto idx = v.index_of(iri); idx && !v.at(*idx).iri.empty()) iri = v.at(*idx).iri;
  return {{"id", item.id},
          {"entity", item.entity},
          {"abstract", item.abstract},
          {"triple",
           {{"p", item.triple.predicate},
            {"iri", iri},
            {"o", item.triple.object.lexical()},
            {"dt", std::string(turtle::to_string(item.triple.object.datatype()))}}},
          {"kind", std::string(to_string(item.kind))},
          {"folds", item.folds},
          {"model", item.model}};
}

void check_judgement(Kind kind, const Judgement& j) {
  bool required = kind == Kind::FP && j.polarity == Polarity::Negative;
  if (required && !j.category) {
    throw MissingCategory("item " + j.item_id + ": an FP judged '-' needs an error category");
  }
  if (!required && j.category) {
    throw MissingCategory("item " + j.item_id +
                          ": an error category is only allowed on an FP judged '-'");
  }
}

namespace {

nlohmann::json judgement_record(const Judgement& j, const ReviewItem& item) {
  nlohmann::json r = {{"op", "judge"},
                      {"id", j.item_id},
                      {"entity", item.entity},
                      {"kind", std::string(to_string(item.kind))},
                      {"p", item.triple.predicate},
                      {"o", item.triple.object.lexical()},
                      {"dt", std::string(turtle::to_string(item.triple.object.datatype()))},
                      {"polarity", std::string(to_string(j.polarity))}};
  if (j.category) r["category"] = std::string(to_string(*j.category));
  if (!j.annotator.empty()) r["annotator"] = j.annotator;
  if (!j.timestamp.empty()) r["timestamp"] = j.timestamp;
  return r;
}

}  // namespace

AnnotationSession::AnnotationSession(std::string dataset, std::string model,
                                     std::vector<ReviewItem> items,
                                     std::optional<std::filesystem::path> log)
    : dataset_(std::move(dataset)), model_(std::move(model)), items_(std::move(items)),
      log_(std::move(log)) {
  for (std::size_t i = 0; i < items_.size(); ++i) index_.emplace(items_[i].id, i);
  if (log_ && std::filesystem::exists(*log_)) replay(*log_);
}

void AnnotationSession::replay(const std::filesystem::path& log) {
  std::ifstream in(log);
  if (!in) throw std::runtime_error("cannot read " + log.string());
  jsonl::Reader reader(in);
  while (auto r = reader.next()) {
    std::string id = r->at("id").get<std::string>();
    std::string op = r->value("op", std::string("judge"));
    if (op == "revoke") {
      current_.erase(id);
      continue;
    }
    if (op != "judge") throw jsonl::FormatError(reader.line(), "unknown op '" + op + "'");
    // Records for items that are no longer part of the queue are kept in the
    // log but ignored.
    if (!index_.count(id)) continue;
    Judgement j;
    j.item_id = id;
    auto polarity = polarity_from_string(r->at("polarity").get<std::string>());
    if (!polarity) throw jsonl::FormatError(reader.line(), "bad polarity");
    j.polarity = *polarity;
    if (r->contains("category")) {
      j.category = category_from_string(r->at("category").get<std::string>());
      if (!j.category) throw jsonl::FormatError(reader.line(), "bad category");
    }
    j.annotator = r->value("annotator", std::string{});
    j.timestamp = r->value("timestamp", std::string{});
    current_[id] = std::move(j);
  }
}

void AnnotationSession::append(const nlohmann::json& record) {
  if (!log_) return;
  if (log_->has_parent_path()) std::filesystem::create_directories(log_->parent_path());
  std::ofstream out(*log_, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + log_->string());
  jsonl::write(out, record);
  out.flush();
  if (!out) throw std::runtime_error("write to " + log_->string() + " failed");
}

std::size_t AnnotationSession::total() const {
  std::lock_guard lock(mutex_);
  return items_.size();
}

std::size_t AnnotationSession::judged() const {
  std::lock_guard lock(mutex_);
  return current_.size();
}

std::vector<ReviewItem> AnnotationSession::items() const {
  std::lock_guard lock(mutex_);
  return items_;
}

std::optional<ReviewItem> AnnotationSession::item(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return items_[it->second];
}

std::vector<ReviewItem> AnnotationSession::pending(std::size_t limit) const {
  std::lock_guard lock(mutex_);
  std::vector<ReviewItem> out;
  for (const auto& item : items_) {
    if (out.size() >= limit) break;
    if (!current_.count(item.id)) out.push_back(item);
  }
  return out;
}

std::optional<Judgement> AnnotationSession::judgement(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = current_.find(id);
  if (it == current_.end()) return std::nullopt;
  return it->second;
}

std::map<std::string, Judgement> AnnotationSession::judgements() const {
  std::lock_guard lock(mutex_);
  return current_;
}

void AnnotationSession::judge(const Judgement& j) {
  std::lock_guard lock(mutex_);
  auto it = index_.find(j.item_id);
  if (it == index_.end()) throw UnknownItem("no review item " + j.item_id);
  if (current_.count(j.item_id)) throw AlreadyJudged("item " + j.item_id + " is already judged");
  const ReviewItem& item = items_[it->second];
  check_judgement(item.kind, j);
  append(judgement_record(j, item));
  current_[j.item_id] = j;
}

void AnnotationSession::revoke(const std::string& id, const std::string& annotator) {
  std::lock_guard lock(mutex_);
  if (!index_.count(id)) throw UnknownItem("no review item " + id);
  if (!current_.count(id)) throw NotJudged("item " + id + " has no judgement to revoke");
  nlohmann::json r = {{"op", "revoke"}, {"id", id}};
  if (!annotator.empty()) r["annotator"] = annotator;
  append(r);
  current_.erase(id);
}

namespace {

nlohmann::json corrected_to_json(const std::vector<CorrectedTriple>& triples,
                                 const shape::PropertyVocabulary& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : triples) {
    std::string p = t.triple.predicate;
    if (auto idx = v.index_of(p); idx && !v.at(*idx).iri.empty()) p = v.at(*idx).iri;
    arr.push_back({{"entity", t.entity},
                   {"p", p},
                   {"o", t.triple.object.lexical()},
                   {"dt", std::string(turtle::to_string(t.triple.object.datatype()))}});
  }
  return arr;
}

std::string gold_name(const std::string& name) {
  if (!name.empty() && name.back() == '+') return name;
  return name + "+";
}

}  // namespace

nlohmann::json GoldCorrection::to_json(const shape::PropertyVocabulary& v) const {
  return {{"source_dataset", source_dataset},
          {"dataset", dataset},
          {"removed", corrected_to_json(removed, v)},
          {"added", corrected_to_json(added, v)},
          {"dropped", dropped}};
}

GoldResult correct(const sampling::Dataset& d, std::span<const ReviewItem> items,
                   const std::map<std::string, Judgement>& judgements) {
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < d.examples.size(); ++i) position.emplace(d.examples[i].entity, i);

  std::size_t pending = 0;
  std::map<std::string, std::vector<const ReviewItem*>> remove;
  std::map<std::string, std::vector<const ReviewItem*>> add;
  for (const auto& item : items) {
    if (!position.count(item.entity)) continue;
    auto j = judgements.find(item.id);
    if (j == judgements.end()) {
      ++pending;
      continue;
    }
    if (item.kind == Kind::FN && j->second.polarity == Polarity::Negative) {
      remove[item.entity].push_back(&item);
    } else if (item.kind == Kind::FP && j->second.polarity == Polarity::Positive) {
      add[item.entity].push_back(&item);
    }
  }
  if (pending > 0) throw PendingItems(pending);

  GoldResult result;
  result.correction.source_dataset = d.name;
  result.correction.dataset = gold_name(d.name);
  sampling::Dataset& gold = result.gold;
  gold.name = result.correction.dataset;
  gold.seed = d.seed;
  gold.constraint = d.constraint;
  gold.fold_count = d.fold_count;

  for (std::size_t i = 0; i < d.examples.size(); ++i) {
    distill::Example ex = d.examples[i];
    if (auto it = remove.find(ex.entity); it != remove.end()) {
      for (const ReviewItem* item : it->second) {
        if (ex.remove(item->triple)) result.correction.removed.push_back({ex.entity, item->triple});
      }
    }
    if (auto it = add.find(ex.entity); it != add.end()) {
      const std::string normalized = rendering::nfc(ex.abstract);
      for (const ReviewItem* item : it->second) {
        if (ex.add(item->triple.predicate, item->triple.object, distill::Source::Annotated)) {
          ex.provenance[item->triple].found_in_abstract =
              rendering::found_in(item->triple.object, normalized);
          result.correction.added.push_back({ex.entity, item->triple});
        }
      }
    }
    if (ex.graph.empty()) {
      result.correction.dropped.push_back(ex.entity);
      continue;
    }
    gold.examples.push_back(std::move(ex));
    if (!d.folds.empty()) gold.folds.push_back(d.folds.at(i));
  }
  std::sort(result.correction.removed.begin(), result.correction.removed.end());
  std::sort(result.correction.added.begin(), result.correction.added.end());
  return result;
}

std::optional<double> omission_rate(double fn_positive, double expected_triples) {
  if (expected_triples <= 0) return std::nullopt;
  return fn_positive / expected_triples;
}

std::optional<double> discovery_rate(double fp_positive, double fp_negative) {
  double total = fp_positive + fp_negative;
  if (total <= 0) return std::nullopt;
  return fp_positive / total;
}

AnnotationMetrics annotation_metrics(std::span<const ReviewItem> items,
                                     const std::map<std::string, Judgement>& judgements,
                                     double expected_triples_per_fold, std::size_t fold_count) {
  if (fold_count == 0) fold_count = 1;
  AnnotationMetrics m;
  m.folds = fold_count;
  for (Category c : all_categories()) m.categories[c] = 0;
  std::size_t pending = 0;
  for (const auto& item : items) {
    auto j = judgements.find(item.id);
    if (j == judgements.end()) {
      ++pending;
      continue;
    }
    double weight = static_cast<double>(std::max<std::size_t>(1, item.folds.size()));
    bool positive = j->second.polarity == Polarity::Positive;
    if (item.kind == Kind::FN) {
      (positive ? m.fn_positive : m.fn_negative) += weight;
    } else {
      (positive ? m.fp_positive : m.fp_negative) += weight;
      if (!positive && j->second.category) m.categories[*j->second.category] += weight;
    }
  }
  if (pending > 0) throw PendingItems(pending);
  const double n = static_cast<double>(fold_count);
  m.fn_negative /= n;
  m.fn_positive /= n;
  m.fp_negative /= n;
  m.fp_positive /= n;
  for (auto& [c, v] : m.categories) v /= n;
  m.expected_triples = expected_triples_per_fold;
  m.r_omis = omission_rate(m.fn_positive, m.expected_triples);
  m.r_disco = discovery_rate(m.fp_positive, m.fp_negative);
  return m;
}

nlohmann::json AnnotationMetrics::to_json() const {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [c, v] : categories) hist[std::string(to_string(c))] = v;
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"folds", folds},
          {"fn_negative", fn_negative},
          {"fn_positive", fn_positive},
          {"fp_negative", fp_negative},
          {"fp_positive", fp_positive},
          {"expected_triples", expected_triples},
          {"r_omis", opt(r_omis)},
          {"r_disco", opt(r_disco)},
          {"categories", hist}};
}

AnnotationMetrics AnnotationMetrics::from_json(const nlohmann::json& j) {
  AnnotationMetrics m;
  m.folds = j.value("folds", std::size_t{1});
  m.fn_negative = j.value("fn_negative", 0.0);
  m.fn_positive = j.value("fn_positive", 0.0);
  m.fp_negative = j.value("fp_negative", 0.0);
  m.fp_positive = j.value("fp_positive", 0.0);
  m.expected_triples = j.value("expected_triples", 0.0);
  auto opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
  };
  m.r_omis = opt("r_omis");
  m.r_disco = opt("r_disco");
  for (Category c : all_categories()) m.categories[c] = 0;
  if (j.contains("categories")) {
    for (const auto& [code, v] : j.at("categories").items()) {
      if (auto c = category_from_string(code)) m.categories[*c] = v.get<double>();
    }
  }
  return m;
}

std::string render_annotation(
    std::span<const std::pair<std::string, AnnotationMetrics>> rows) {
  TextTable t({"model (dataset)", "FN-", "FN+", "r_omis", "FP-", "FP+", "r_disco"});
  for (const auto& [label, m] : rows) {
    t.add_row({label, format_number(m.fn_negative, 1), format_number(m.fn_positive, 1),
               format_number(m.r_omis, 3), format_number(m.fp_negative, 1),
               format_number(m.fp_positive, 1), format_number(m.r_disco, 2)});
  }
  return t.render();
}

}  // namespace shaperel::active
