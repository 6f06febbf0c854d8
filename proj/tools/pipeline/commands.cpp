#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "shaperel/jsonl.hpp"
#include "shaperel/ntriples.hpp"
#include "shaperel/text_table.hpp"

namespace shaperel::cli {

namespace fs = std::filesystem;
using nlohmann::json;

Context::Context(RunConfig config)
    : config_(std::move(config)),
      shape_(config_.shape ? shape::load_shape(*config_.shape) : shape::person_shape()),
      rules_(distill::order_rules(
          config_.rules ? distill::load_rules(*config_.rules) : distill::person_rules(),
          shape_.vocabulary())),
      layout_(config_.output) {}

void Context::add_definition_inputs(Manifest& m) const {
  if (config_.shape) m.input(layout_, *config_.shape);
  if (config_.rules) m.input(layout_, *config_.rules);
}

sampling::Dataset Context::load_dataset(const std::string& name) const {
  auto manifest = layout_.dataset_manifest(name);
  if (!fs::exists(manifest)) {
    throw ConfigError("unknown dataset '" + name + "': " + manifest.string() + " not found");
  }
  return sampling::read_dataset(manifest, layout_.dataset_examples(name), shape_.vocabulary());
}

namespace {

json shape_parameters(const Context& ctx) {
  return {{"shape", ctx.shape().name()},
          {"rules", distill::rules_to_json(ctx.rules())}};
}

std::string remote_endpoint(const std::string& pattern, int fold) {
  std::string out = pattern;
  const std::string key = "{fold}";
  for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key)) {
    out.replace(pos, key.size(), std::to_string(fold));
  }
  return out;
}

std::vector<eval::PairDiff> read_diffs(const fs::path& path, const shape::PropertyVocabulary& v) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string() + "; run evaluate first");
  std::vector<eval::PairDiff> out;
  jsonl::Reader reader(in);
  while (auto j = reader.next()) out.push_back(eval::diff_from_json(*j, v));
  return out;
}

std::size_t expected_triples(const sampling::Dataset& d) {
  std::size_t n = 0;
  for (const auto& e : d.examples) n += e.graph.size();
  return n;
}

void write_dataset_files(const Context& ctx, const sampling::Dataset& d, Manifest& m) {
  const auto& layout = ctx.layout();
  sampling::write_dataset(d, layout.dataset_manifest(d.name), layout.dataset_examples(d.name),
                          ctx.shape().vocabulary());
  write_file(layout.dataset_stats(d.name),
             sampling::stats(d, ctx.shape()).to_json().dump(2) + "\n");
  m.output(layout, layout.dataset_manifest(d.name));
  m.output(layout, layout.dataset_examples(d.name));
  m.output(layout, layout.dataset_stats(d.name));
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& suffix,
                                   bool recursive) {
  std::vector<fs::path> out;
  if (!fs::exists(dir)) return out;
  auto take = [&](const fs::directory_entry& e) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      out.push_back(e.path());
    }
  };
  if (recursive) {
    for (const auto& e : fs::recursive_directory_iterator(dir)) take(e);
  } else {
    for (const auto& e : fs::directory_iterator(dir)) take(e);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

distill::DistillReport cmd_distill(const Context& ctx) {
  const auto& c = ctx.config();
  const auto& layout = ctx.layout();
  distill::Distiller distiller(ctx.shape(), ctx.rules());
  distill::StoreWriter store(layout.store(), ctx.shape().vocabulary());

  Manifest m("distill", shape_parameters(ctx));
  ctx.add_definition_inputs(m);
  distill::DistillReport report;
  if (c.records) {
    std::ifstream in(*c.records);
    if (!in) throw ConfigError("cannot read " + c.records->string());
    report = distill::distill(in, distiller, &store);
    m.input(layout, *c.records);
  } else {
    std::ifstream triples(*c.ntriples);
    std::ifstream abstracts(*c.abstracts);
    if (!triples || !abstracts) throw ConfigError("cannot read the N-Triples input");
    ntriples::ImportStats stats;
    auto records = ntriples::import(triples, abstracts, &stats);
    spdlog::info("imported {} statements for {} subjects ({} IRI objects skipped)",
                 stats.statements, records.size(), stats.iri_objects_skipped);
    std::stringstream buffer;
    for (const auto& r : records) jsonl::write(buffer, distill::record_to_json(r));
    report = distill::distill(buffer, distiller, &store);
    m.input(layout, *c.ntriples);
    m.input(layout, *c.abstracts);
  }
  store.flush();

  write_file(layout.distill_report(), report.to_json().dump(2) + "\n");
  for (auto p : {distill::Partition::InitialKB, distill::Partition::Inferences,
                 distill::Partition::FoundInAbstract}) {
    m.output(layout, distill::partition_file(layout.store(), p));
  }
  m.output(layout, layout.distill_report());
  m.write(layout, "distill");
  spdlog::info("distilled {} entities, {} kept after the abstract check", report.input_entities,
               report.entities_found);
  return report;
}

std::vector<sampling::Dataset> cmd_sample(const Context& ctx) {
  const auto& layout = ctx.layout();
  const auto store_file = distill::partition_file(layout.store(), distill::Partition::FoundInAbstract);
  if (!fs::exists(store_file)) throw ConfigError("no distilled store in " + layout.store().string());
  auto store = distill::load_partition(layout.store(), distill::Partition::FoundInAbstract,
                                       ctx.shape().vocabulary());

  json params = shape_parameters(ctx);
  params["datasets"] = config_to_json(ctx.config())["sample"]["datasets"];
  Manifest m("sample", params);
  ctx.add_definition_inputs(m);
  m.input(layout, store_file);

  sampling::SamplingSession session(store, ctx.shape());
  std::vector<sampling::Dataset> out;
  for (const auto& spec : ctx.config().datasets) {
    auto d = session.draw(spec.name, spec.count, spec.seed, spec.constraint);
    if (spec.folds >= 2) d = sampling::kfold(std::move(d), spec.folds);
    write_dataset_files(ctx, d, m);
    spdlog::info("sampled {} ({} examples, seed {})", d.name, d.size(), d.seed);
    out.push_back(std::move(d));
  }
  m.write(layout, "sample");
  return out;
}

std::vector<extract::Prediction> cmd_extract(const Context& ctx, const std::string& name) {
  const auto& c = ctx.config();
  const auto& layout = ctx.layout();
  const auto d = ctx.load_dataset(name);
  const std::string model = c.extractor.model_name();

  std::vector<extract::Prediction> preds;
  if (c.extractor.kind == "heuristic") {
    extract::HeuristicExtractor h(ctx.shape());
    preds = extract::extract_all(h, d.examples, c.extractor.parallelism);
    if (!d.folds.empty()) {
      for (std::size_t i = 0; i < preds.size(); ++i) preds[i].fold = d.folds[i];
    }
  } else {
    preds.resize(d.size());
    std::map<int, std::vector<std::size_t>> by_fold;
    for (std::size_t i = 0; i < d.size(); ++i) by_fold[d.folds.empty() ? -1 : d.folds[i]].push_back(i);
    for (const auto& [fold, indices] : by_fold) {
      extract::RemoteConfig rc{remote_endpoint(c.extractor.endpoint, fold),
                               std::chrono::milliseconds(c.extractor.timeout_ms),
                               c.extractor.parallelism};
      extract::RemoteExtractor remote(rc, ctx.shape());
      std::vector<distill::Example> subset;
      for (std::size_t i : indices) subset.push_back(d.examples[i]);
      auto part = extract::extract_all(remote, subset, c.extractor.parallelism);
      for (std::size_t k = 0; k < indices.size(); ++k) {
        part[k].fold = fold;
        preds[indices[k]] = std::move(part[k]);
      }
    }
  }

  std::size_t failures = 0;
  for (const auto& p : preds) failures += !p.note.empty();
  if (failures > 0) spdlog::warn("{} of {} model calls failed", failures, preds.size());

  const auto out = layout.predictions(model, name);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  extract::write_predictions(out, preds);

  json params = {{"dataset", name}, {"model", model}, {"extractor", c.extractor.kind}};
  if (c.extractor.kind == "remote") {
    params["endpoint"] = c.extractor.endpoint;
    params["timeout_ms"] = c.extractor.timeout_ms;
  }
  Manifest m("extract", params);
  ctx.add_definition_inputs(m);
  m.input(layout, layout.dataset_manifest(name));
  m.input(layout, layout.dataset_examples(name));
  m.output(layout, out);
  m.write(layout, "extract-" + model + "-" + name);
  return preds;
}

json folded_to_json(const eval::FoldedReport& r, const std::string& model,
                    const std::string& dataset) {
  json per_fold = json::array();
  for (const auto& f : r.per_fold) per_fold.push_back(f.to_json());
  return {{"model", model},
          {"dataset", dataset},
          {"fold_ids", r.fold_ids},
          {"per_fold", per_fold},
          {"mean", r.mean.to_json()}};
}

eval::FoldedReport cmd_evaluate(const Context& ctx, const std::string& name) {
  const auto& layout = ctx.layout();
  const std::string model = ctx.config().extractor.model_name();
  const auto d = ctx.load_dataset(name);
  const auto pred_path = layout.predictions(model, name);
  if (!fs::exists(pred_path)) {
    throw ConfigError("no predictions of " + model + " for " + name + "; run extract first");
  }
  const auto& v = ctx.shape().vocabulary();
  auto preds = extract::read_predictions(pred_path, v.datatype_hint());
  auto diffs = eval::diff_all(d.examples, preds, v);
  // Every pair is scored by the model of its dataset fold.
  if (!d.folds.empty()) {
    for (std::size_t i = 0; i < diffs.size(); ++i) diffs[i].fold = d.folds[i];
  }
  auto folded = eval::evaluate_folds(diffs, ctx.shape(), ctx.config().macro_axis);

  std::string diff_lines;
  for (const auto& diff : diffs) diff_lines += eval::diff_to_json(diff, v).dump() + "\n";
  write_file(layout.diffs(model, name), diff_lines);
  write_file(layout.eval_report(model, name), folded_to_json(folded, model, name).dump(2) + "\n");

  Manifest m("evaluate", {{"dataset", name},
                          {"model", model},
                          {"macro_axis", std::string(eval::to_string(ctx.config().macro_axis))}});
  ctx.add_definition_inputs(m);
  m.input(layout, layout.dataset_manifest(name));
  m.input(layout, layout.dataset_examples(name));
  m.input(layout, pred_path);
  m.output(layout, layout.diffs(model, name));
  m.output(layout, layout.eval_report(model, name));
  m.write(layout, "evaluate-" + model + "-" + name);
  return folded;
}

namespace {

struct ReviewInputs {
  sampling::Dataset dataset;
  std::vector<active::ReviewItem> items;
};

ReviewInputs review_inputs(const Context& ctx, const std::string& name) {
  const std::string model = ctx.config().extractor.model_name();
  ReviewInputs in{ctx.load_dataset(name), {}};
  auto diffs = read_diffs(ctx.layout().diffs(model, name), ctx.shape().vocabulary());
  in.items = active::collect(diffs, in.dataset, model);
  return in;
}

active::GoldResult run_gold(const Context& ctx, const std::string& name,
                            const ReviewInputs& in,
                            const std::map<std::string, active::Judgement>& judgements) {
  const auto& layout = ctx.layout();
  const std::string model = ctx.config().extractor.model_name();
  auto result = active::correct(in.dataset, in.items, judgements);
  if (result.gold.name == in.dataset.name) {
    throw ConfigError(name + " is already a corrected dataset");
  }

  const int folds = std::max(1, in.dataset.fold_count);
  const double per_fold = static_cast<double>(expected_triples(in.dataset)) / folds;
  auto metrics = active::annotation_metrics(in.items, judgements, per_fold,
                                            static_cast<std::size_t>(folds));

  Manifest m("gold", {{"dataset", name}, {"model", model}, {"gold", result.gold.name}});
  ctx.add_definition_inputs(m);
  m.input(layout, layout.dataset_manifest(name));
  m.input(layout, layout.dataset_examples(name));
  m.input(layout, layout.diffs(model, name));
  const auto log = layout.judgements(model, name);
  if (fs::exists(log)) m.input(layout, log);

  write_dataset_files(ctx, result.gold, m);
  write_file(layout.correction(model, name),
             result.correction.to_json(ctx.shape().vocabulary()).dump(2) + "\n");
  json annotation = metrics.to_json();
  annotation["model"] = model;
  annotation["dataset"] = name;
  write_file(layout.annotation_report(model, name), annotation.dump(2) + "\n");
  m.output(layout, layout.correction(model, name));
  m.output(layout, layout.annotation_report(model, name));
  m.write(layout, "gold-" + model + "-" + name);
  spdlog::info("{}: {} triples removed, {} added, {} examples dropped", result.gold.name,
               result.correction.removed.size(), result.correction.added.size(),
               result.correction.dropped.size());
  return result;
}

}  // namespace

active::GoldResult cmd_gold(const Context& ctx, const std::string& name) {
  auto in = review_inputs(ctx, name);
  const std::string model = ctx.config().extractor.model_name();
  active::AnnotationSession session(name, model, in.items,
                                    ctx.layout().judgements(model, name));
  return run_gold(ctx, name, in, session.judgements());
}

AnnotationService open_annotation(const Context& ctx, const std::string& name) {
  auto in = std::make_shared<ReviewInputs>(review_inputs(ctx, name));
  const std::string model = ctx.config().extractor.model_name();
  AnnotationService service;
  service.session = std::make_unique<active::AnnotationSession>(
      name, model, in->items, ctx.layout().judgements(model, name));

  std::map<std::string, turtle::Graph> expected;
  for (const auto& e : in->dataset.examples) expected.emplace(e.entity, e.graph);

  active::ServerOptions options;
  options.host = ctx.config().annotate.host;
  options.port = ctx.config().annotate.port;
  options.static_dir = ctx.config().annotate.static_dir;
  auto* session = service.session.get();
  service.server = std::make_unique<active::AnnotationServer>(
      *session, ctx.shape(), std::move(expected),
      [&ctx, name, in, session] {
        auto result = run_gold(ctx, name, *in, session->judgements());
        return result.correction.to_json(ctx.shape().vocabulary());
      },
      options);
  return service;
}

std::string cmd_report(const Context& ctx) {
  const auto& layout = ctx.layout();
  std::string out;
  Manifest m("report", json::object());

  if (fs::exists(layout.distill_report())) {
    auto report = distill::DistillReport::from_json(json::parse(read_file(layout.distill_report())));
    out += "Distillation\n" + report.render_table() + "\n";
    m.input(layout, layout.distill_report());
  }

  auto stats_files = sorted_files(layout.datasets(), ".stats.json", false);
  if (!stats_files.empty()) {
    std::vector<sampling::DatasetStats> all;
    for (const auto& f : stats_files) {
      all.push_back(sampling::DatasetStats::from_json(json::parse(read_file(f))));
      m.input(layout, f);
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    TextTable t({"dataset", "size", "mean properties", "|P|", "r_s*", "NLI", "TC"});
    for (const auto& s : all) {
      t.add_row({s.name, std::to_string(s.size), format_number(s.mean_properties, 2),
                 std::to_string(s.realized_patterns), format_number(s.shape_rate, 3),
                 format_number(s.mean_nli, 3), format_number(s.mean_tc, 3)});
    }
    out += "Datasets\n" + t.render() + "\n";
  }

  std::vector<eval::ReportRow> rows;
  for (const auto& f : sorted_files(layout.reports(), ".eval.json", true)) {
    auto j = json::parse(read_file(f));
    rows.push_back({j.at("model").get<std::string>(), j.at("dataset").get<std::string>(),
                    eval::EvalReport::from_json(j.at("mean"))});
    m.input(layout, f);
  }
  if (!rows.empty()) {
    out += "Scores\n" + eval::render_scores(rows) + "\n";
    out += "Patterns\n" + eval::render_patterns(rows) + "\n";
  }

  std::vector<std::pair<std::string, active::AnnotationMetrics>> annotation;
  for (const auto& f : sorted_files(layout.reports(), ".annotation.json", true)) {
    auto j = json::parse(read_file(f));
    annotation.emplace_back(
        j.at("model").get<std::string>() + " (" + j.at("dataset").get<std::string>() + ")",
        active::AnnotationMetrics::from_json(j));
    m.input(layout, f);
  }
  if (!annotation.empty()) out += "Annotation\n" + active::render_annotation(annotation) + "\n";

  if (out.empty()) out = "nothing to report in " + layout.root().string() + "\n";
  const auto tables = layout.reports() / "tables.txt";
  write_file(tables, out);
  m.output(layout, tables);
  m.write(layout, "report");
  return out;
}

}  // namespace shaperel::cli
