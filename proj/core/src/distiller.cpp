#include "shaperel/distiller.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "shaperel/jsonl.hpp"
#include "shaperel/rendering.hpp"
#include "shaperel/text_table.hpp"

namespace shaperel::distill {

using turtle::Datatype;
using turtle::Literal;
using turtle::PredicateObject;

std::string_view to_string(Source s) {
  switch (s) {
    case Source::InitialKB:
      return "initialKB";
    case Source::Inferred:
      return "inferred";
    case Source::Annotated:
      return "annotated";
  }
  return "initialKB";
}

std::optional<Source> source_from_string(std::string_view s) {
  if (s == "initialKB") return Source::InitialKB;
  if (s == "inferred") return Source::Inferred;
  if (s == "annotated") return Source::Annotated;
  return std::nullopt;
}

std::string subject_for_entity(std::string_view entity) {
  if (!entity.empty() && entity.front() == ':' && turtle::is_pn_local(entity.substr(1))) {
    return std::string(entity.substr(1));
  }
  return turtle::local_name_from_iri(entity);
}

Example Example::make(std::string entity, std::string abstract) {
  if (abstract.empty()) throw EmptyAbstract("empty abstract for " + entity);
  turtle::Graph graph(subject_for_entity(entity));
  return Example{std::move(entity), std::move(abstract), std::move(graph), {}, false};
}

bool Example::add(std::string predicate, Literal object, Source source) {
  PredicateObject po{std::move(predicate), std::move(object)};
  if (!graph.insert(po)) return false;
  provenance.emplace(std::move(po), Provenance{source, false});
  return true;
}

bool Example::remove(const PredicateObject& po) {
  provenance.erase(po);
  return graph.erase(po);
}

Provenance Example::provenance_of(const PredicateObject& po) const {
  auto it = provenance.find(po);
  return it == provenance.end() ? Provenance{} : it->second;
}

RawRecord record_from_json(const nlohmann::json& j) {
  RawRecord r;
  r.entity = j.at("entity").get<std::string>();
  r.abstract = j.value("abstract", std::string{});
  if (j.contains("triples")) {
    for (const auto& t : j.at("triples")) {
      RawTriple rt;
      rt.predicate = t.at("p").get<std::string>();
      rt.object = t.at("o").get<std::string>();
      auto dt = turtle::datatype_from_string(t.value("dt", std::string("string")));
      if (!dt) throw std::invalid_argument("unknown datatype '" + t.value("dt", std::string()) + "'");
      rt.datatype = *dt;
      r.triples.push_back(std::move(rt));
    }
  }
  return r;
}

nlohmann::json record_to_json(const RawRecord& r) {
  nlohmann::json triples = nlohmann::json::array();
  for (const auto& t : r.triples) {
    triples.push_back({{"p", t.predicate}, {"o", t.object},
                       {"dt", std::string(turtle::to_string(t.datatype))}});
  }
  return {{"entity", r.entity}, {"abstract", r.abstract}, {"triples", triples}};
}

IngestStats& IngestStats::operator+=(const IngestStats& o) {
  records += o.records;
  triples += o.triples;
  downgraded_literals += o.downgraded_literals;
  rejected_literals += o.rejected_literals;
  return *this;
}

Example ingest(const RawRecord& record, const shape::PropertyVocabulary& v,
               IngestStats* stats) {
  IngestStats local;
  Example ex = Example::make(record.entity, record.abstract);
  ++local.records;
  for (const auto& t : record.triples) {
    ++local.triples;
    std::string name;
    if (auto idx = v.resolve(t.predicate)) {
      name = v.at(*idx).name;
    } else {
      name = turtle::encode_local_name(t.predicate);
    }
    Datatype dt = t.datatype;
    if (!turtle::conforms(t.object, dt)) {
      dt = Datatype::String;
      ++local.downgraded_literals;
    }
    auto literal = Literal::try_make(t.object, dt);
    if (!literal) {
      ++local.rejected_literals;
      continue;
    }
    ex.add(std::move(name), std::move(*literal), Source::InitialKB);
  }
  if (stats) *stats += local;
  return ex;
}

nlohmann::json example_to_json(const Example& ex, const shape::PropertyVocabulary& v,
                               bool with_provenance) {
  nlohmann::json triples = nlohmann::json::array();
  for (const auto& e : ex.graph.entries()) {
    std::string p = e.predicate;
    if (auto idx = v.index_of(e.predicate); idx && !v.at(*idx).iri.empty()) p = v.at(*idx).iri;
    nlohmann::json t = {{"p", p},
                        {"o", e.object.lexical()},
                        {"dt", std::string(turtle::to_string(e.object.datatype()))}};
    if (with_provenance) {
      Provenance prov = ex.provenance_of(e);
      t["src"] = std::string(to_string(prov.source));
      if (prov.found_in_abstract) t["found"] = true;
    }
    triples.push_back(std::move(t));
  }
  return {{"entity", ex.entity}, {"abstract", ex.abstract}, {"triples", triples}};
}

Example example_from_json(const nlohmann::json& j, const shape::PropertyVocabulary& v) {
  Example ex = ingest(record_from_json(j), v);
  // Restore provenance recorded by the store.
  const auto& triples = j.at("triples");
  for (const auto& t : triples) {
    if (!t.contains("src") && !t.contains("found")) continue;
    std::string name;
    std::string p = t.at("p").get<std::string>();
    if (auto idx = v.resolve(p)) {
      name = v.at(*idx).name;
    } else {
      name = turtle::encode_local_name(p);
    }
    Datatype dt = turtle::datatype_from_string(t.value("dt", std::string("string"))).value_or(Datatype::String);
    std::string o = t.at("o").get<std::string>();
    if (!turtle::conforms(o, dt)) dt = Datatype::String;
    auto literal = Literal::try_make(o, dt);
    if (!literal) continue;
    auto it = ex.provenance.find(PredicateObject{name, *literal});
    if (it == ex.provenance.end()) continue;
    if (t.contains("src")) {
      it->second.source = source_from_string(t.at("src").get<std::string>()).value_or(Source::InitialKB);
    }
    it->second.found_in_abstract = t.value("found", false);
  }
  return ex;
}

std::vector<InferenceRule> person_rules() {
  return {{"deathDate", "deathYear", Projection::Year},
          {"birthDate", "birthYear", Projection::Year}};
}

std::vector<InferenceRule> rules_from_json(const nlohmann::json& j) {
  std::vector<InferenceRule> rules;
  const auto& arr = j.is_object() ? j.at("rules") : j;
  for (const auto& r : arr) {
    InferenceRule rule;
    rule.source = r.at("source").get<std::string>();
    rule.target = r.at("target").get<std::string>();
    std::string projection = r.value("projection", std::string("year"));
    if (projection != "year") throw InvalidRules("unknown projection '" + projection + "'");
    rule.projection = Projection::Year;
    rules.push_back(std::move(rule));
  }
  return rules;
}

nlohmann::json rules_to_json(std::span<const InferenceRule> rules) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rules) {
    arr.push_back({{"source", r.source}, {"target", r.target}, {"projection", "year"}});
  }
  return {{"rules", arr}};
}

std::vector<InferenceRule> load_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rule file " + path.string());
  return rules_from_json(nlohmann::json::parse(in));
}

std::vector<InferenceRule> order_rules(std::span<const InferenceRule> rules,
                                       const shape::PropertyVocabulary& v) {
  for (const auto& r : rules) {
    if (!v.index_of(r.source)) throw InvalidRules("rule source '" + r.source + "' not in vocabulary");
    if (!v.index_of(r.target)) throw InvalidRules("rule target '" + r.target + "' not in vocabulary");
    if (r.source == r.target) throw InvalidRules("rule '" + r.source + "' targets itself");
  }
  // Kahn's algorithm over rules: a rule must run after every rule producing
  // its source property. Ties keep input order.
  std::vector<InferenceRule> ordered;
  std::vector<bool> done(rules.size(), false);
  while (ordered.size() < rules.size()) {
    bool progressed = false;
    for (std::size_t i = 0; i < rules.size(); ++i) {
      if (done[i]) continue;
      bool ready = true;
      for (std::size_t k = 0; k < rules.size() && ready; ++k) {
        if (!done[k] && k != i && rules[k].target == rules[i].source) ready = false;
      }
      if (ready) {
        ordered.push_back(rules[i]);
        done[i] = true;
        progressed = true;
      }
    }
    if (!progressed) throw InvalidRules("inference rules are cyclic");
  }
  return ordered;
}

Literal project(const InferenceRule& rule, const Literal& source) {
  switch (rule.projection) {
    case Projection::Year:
      if (source.datatype() != Datatype::Date) {
        throw ProjectionError("'" + source.lexical() + "' is not a date");
      }
      return Literal::make(source.lexical().substr(0, 4), Datatype::GYear);
  }
  throw ProjectionError("unknown projection");
}

FilterOutcome filter_pattern(Example ex, const shape::Shape& s) {
  const auto& v = s.vocabulary();
  FilterOutcome out;
  std::vector<PredicateObject> foreign;
  for (const auto& e : ex.graph.entries()) {
    if (!v.index_of(e.predicate)) foreign.push_back(e);
  }
  for (const auto& po : foreign) ex.remove(po);
  out.foreign_dropped = foreign.size();
  if (!ex.graph.empty()) out.example = std::move(ex);
  return out;
}

RuleOutcome apply_rules(Example ex, std::span<const InferenceRule> rules) {
  RuleOutcome out{std::move(ex), {}, 0};
  Example& e = out.example;
  for (const auto& rule : rules) {
    if (e.graph.count(rule.target) > 0) continue;
    std::vector<PredicateObject> sources;
    for (const auto& entry : e.graph.entries()) {
      if (entry.predicate == rule.source) sources.push_back(entry);
    }
    for (const auto& src : sources) {
      try {
        Literal projected = project(rule, src.object);
        PredicateObject po{rule.target, projected};
        e.add(rule.target, std::move(projected), Source::Inferred);
        out.added.push_back(std::move(po));
        break;  // target maxCount 1
      } catch (const ProjectionError& err) {
        ++out.projection_errors;
        spdlog::warn("{}: rule {} => {} skipped: {}", e.entity, rule.source, rule.target,
                     err.what());
      }
    }
  }
  return out;
}

Example wikicheck(Example ex) {
  const std::string normalized = rendering::nfc(ex.abstract);
  std::vector<PredicateObject> missing;
  for (const auto& e : ex.graph.entries()) {
    if (rendering::found_in(e.object, normalized)) {
      ex.provenance[e].found_in_abstract = true;
    } else {
      missing.push_back(e);
    }
  }
  for (const auto& po : missing) ex.remove(po);
  ex.dropped = ex.graph.empty();
  return ex;
}

std::optional<double> PropertyStageCounts::part_found() const {
  if (after_rules == 0) return std::nullopt;
  return static_cast<double>(found) / static_cast<double>(after_rules);
}

std::optional<double> DistillReport::entity_retention() const {
  if (entities_initial == 0) return std::nullopt;
  return static_cast<double>(entities_found) / static_cast<double>(entities_initial);
}

DistillReport& DistillReport::operator+=(const DistillReport& o) {
  if (properties.empty()) {
    properties = o.properties;
    per_property.assign(o.per_property.size(), {});
  }
  if (o.properties != properties && !o.properties.empty()) {
    throw std::invalid_argument("cannot merge reports over different vocabularies");
  }
  for (std::size_t i = 0; i < o.per_property.size(); ++i) {
    per_property[i].initial += o.per_property[i].initial;
    per_property[i].after_rules += o.per_property[i].after_rules;
    per_property[i].found += o.per_property[i].found;
  }
  input_entities += o.input_entities;
  entities_initial += o.entities_initial;
  entities_after_rules += o.entities_after_rules;
  entities_found += o.entities_found;
  foreign_triples_dropped += o.foreign_triples_dropped;
  inferred_triples += o.inferred_triples;
  projection_errors += o.projection_errors;
  ingest += o.ingest;
  return *this;
}

nlohmann::json DistillReport::to_json() const {
  nlohmann::json props = nlohmann::json::array();
  for (std::size_t i = 0; i < properties.size(); ++i) {
    const auto& c = per_property[i];
    auto pf = c.part_found();
    props.push_back({{"property", properties[i]},
                     {"initialKB", c.initial},
                     {"after_rules", c.after_rules},
                     {"foundInAbstract", c.found},
                     {"part_found", pf ? nlohmann::json(*pf) : nlohmann::json(nullptr)}});
  }
  auto retention = entity_retention();
  return {{"properties", props},
          {"entities",
           {{"input", input_entities},
            {"initialKB", entities_initial},
            {"after_rules", entities_after_rules},
            {"foundInAbstract", entities_found},
            {"retention", retention ? nlohmann::json(*retention) : nlohmann::json(nullptr)}}},
          {"foreign_triples_dropped", foreign_triples_dropped},
          {"inferred_triples", inferred_triples},
          {"projection_errors", projection_errors},
          {"ingest",
           {{"records", ingest.records},
            {"triples", ingest.triples},
            {"downgraded_literals", ingest.downgraded_literals},
            {"rejected_literals", ingest.rejected_literals}}}};
}

DistillReport DistillReport::from_json(const nlohmann::json& j) {
  DistillReport r;
  for (const auto& p : j.at("properties")) {
    r.properties.push_back(p.at("property").get<std::string>());
    r.per_property.push_back({p.at("initialKB").get<std::size_t>(),
                              p.at("after_rules").get<std::size_t>(),
                              p.at("foundInAbstract").get<std::size_t>()});
  }
  const auto& e = j.at("entities");
  r.input_entities = e.at("input").get<std::size_t>();
  r.entities_initial = e.at("initialKB").get<std::size_t>();
  r.entities_after_rules = e.at("after_rules").get<std::size_t>();
  r.entities_found = e.at("foundInAbstract").get<std::size_t>();
  r.foreign_triples_dropped = j.value("foreign_triples_dropped", std::size_t{0});
  r.inferred_triples = j.value("inferred_triples", std::size_t{0});
  r.projection_errors = j.value("projection_errors", std::size_t{0});
  if (j.contains("ingest")) {
    const auto& in = j.at("ingest");
    r.ingest.records = in.value("records", std::size_t{0});
    r.ingest.triples = in.value("triples", std::size_t{0});
    r.ingest.downgraded_literals = in.value("downgraded_literals", std::size_t{0});
    r.ingest.rejected_literals = in.value("rejected_literals", std::size_t{0});
  }
  return r;
}

namespace {

std::string percent(std::optional<double> v) {
  if (!v) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(0) << (*v * 100.0) << "%";
  return s.str();
}

}  // namespace

std::string DistillReport::render_table() const {
  TextTable table({"predicate", "initialKB", "initialKB+inferences", "foundInAbstract",
                   "part found"});
  auto row = [&](const std::string& name, std::size_t a, std::size_t b, std::size_t c,
                 std::optional<double> part) {
    table.add_row({name, std::to_string(a), std::to_string(b), std::to_string(c), percent(part)});
  };
  for (std::size_t i = 0; i < properties.size(); ++i) {
    const auto& c = per_property[i];
    row(properties[i], c.initial, c.after_rules, c.found, c.part_found());
  }
  table.add_rule();
  row("Nb. entities", entities_initial, entities_after_rules, entities_found, entity_retention());
  return table.render();
}

Distiller::Distiller(shape::Shape shape, std::vector<InferenceRule> rules)
    : shape_(std::move(shape)), rules_(order_rules(rules, shape_.vocabulary())) {}

DistillReport Distiller::empty_report() const {
  DistillReport r;
  r.properties = shape_.vocabulary().names();
  r.per_property.assign(r.properties.size(), {});
  return r;
}

StageOutput Distiller::process(Example ex) const {
  const auto& v = shape_.vocabulary();
  StageOutput out;
  out.counts = empty_report();
  DistillReport& c = out.counts;
  c.input_entities = 1;

  auto tally = [&](const Example& e, std::size_t PropertyStageCounts::*field) {
    for (const auto& entry : e.graph.entries()) {
      if (auto idx = v.index_of(entry.predicate)) ++(c.per_property[*idx].*field);
    }
  };

  FilterOutcome filtered = filter_pattern(std::move(ex), shape_);
  c.foreign_triples_dropped = filtered.foreign_dropped;
  if (!filtered.example) return out;
  out.initial = *filtered.example;
  c.entities_initial = 1;
  tally(*out.initial, &PropertyStageCounts::initial);

  RuleOutcome ruled = apply_rules(std::move(*filtered.example), rules_);
  c.entities_after_rules = 1;
  c.inferred_triples = ruled.added.size();
  c.projection_errors = ruled.projection_errors;
  out.inferred = ruled.added;
  tally(ruled.example, &PropertyStageCounts::after_rules);

  Example checked = wikicheck(std::move(ruled.example));
  if (!checked.dropped) {
    c.entities_found = 1;
    tally(checked, &PropertyStageCounts::found);
    out.found = std::move(checked);
  }
  return out;
}

std::string_view to_string(Partition p) {
  switch (p) {
    case Partition::InitialKB:
      return "initialKB";
    case Partition::Inferences:
      return "inferences";
    case Partition::FoundInAbstract:
      return "foundInAbstract";
  }
  return "initialKB";
}

std::filesystem::path partition_file(const std::filesystem::path& dir, Partition p) {
  return dir / std::string(to_string(p)) / "part-00000.jsonl";
}

StoreWriter::StoreWriter(const std::filesystem::path& dir, const shape::PropertyVocabulary& v)
    : vocabulary_(&v) {
  auto open = [&](Partition p, std::ofstream& f) {
    auto path = partition_file(dir, p);
    std::filesystem::create_directories(path.parent_path());
    f.open(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write partition " + path.string());
  };
  open(Partition::InitialKB, initial_);
  open(Partition::Inferences, inferences_);
  open(Partition::FoundInAbstract, found_);
}

void StoreWriter::commit(const StageOutput& out, const Example& source) {
  std::lock_guard lock(mutex_);
  if (out.initial) {
    jsonl::write(initial_, example_to_json(*out.initial, *vocabulary_, false));
  }
  if (!out.inferred.empty()) {
    nlohmann::json triples = nlohmann::json::array();
    for (const auto& po : out.inferred) {
      std::string p = po.predicate;
      if (auto idx = vocabulary_->index_of(p)) p = vocabulary_->at(*idx).iri;
      triples.push_back({{"p", p},
                         {"o", po.object.lexical()},
                         {"dt", std::string(turtle::to_string(po.object.datatype()))}});
    }
    jsonl::write(inferences_, {{"entity", source.entity}, {"triples", triples}});
  }
  if (out.found) jsonl::write(found_, example_to_json(*out.found, *vocabulary_, true));
}

void StoreWriter::flush() {
  std::lock_guard lock(mutex_);
  initial_.flush();
  inferences_.flush();
  found_.flush();
}

std::vector<Example> load_partition(const std::filesystem::path& dir, Partition p,
                                    const shape::PropertyVocabulary& v) {
  auto path = partition_file(dir, p);
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read partition " + path.string());
  std::vector<Example> out;
  jsonl::Reader reader(in);
  while (auto j = reader.next()) {
    if (!j->contains("abstract")) {
      (*j)["abstract"] = "-";  // inferences carry triples only
    }
    out.push_back(example_from_json(*j, v));
  }
  return out;
}

DistillReport distill(std::istream& input, const Distiller& distiller, StoreWriter* store) {
  DistillReport report = distiller.empty_report();
  jsonl::Reader reader(input);
  while (auto j = reader.next()) {
    RawRecord record;
    try {
      record = record_from_json(*j);
    } catch (const std::exception& e) {
      throw jsonl::FormatError(reader.line(), e.what());
    }
    if (record.abstract.empty()) {
      spdlog::warn("line {}: {} has an empty abstract, skipped", reader.line(), record.entity);
      continue;
    }
    IngestStats stats;
    Example ex = ingest(record, distiller.shape().vocabulary(), &stats);
    StageOutput out = distiller.process(ex);
    out.counts.ingest = stats;
    report += out.counts;
    if (store) store->commit(out, ex);
  }
  if (store) store->flush();
  return report;
}

DistillResult distill(std::span<const Example> input, const Distiller& distiller,
                      std::size_t threads) {
  threads = std::max<std::size_t>(1, std::min(threads, input.size()));
  std::vector<StageOutput> outputs(input.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) outputs[i] = distiller.process(input[i]);
  };
  if (threads <= 1) {
    work(0, input.size());
  } else {
    std::vector<std::jthread> pool;
    std::size_t chunk = (input.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      std::size_t b = t * chunk;
      std::size_t e = std::min(input.size(), b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }
  DistillResult result{{}, distiller.empty_report()};
  for (auto& out : outputs) {
    result.report += out.counts;
    if (out.found) result.kb.push_back(std::move(*out.found));
  }
  return result;
}

}  // namespace shaperel::distill
