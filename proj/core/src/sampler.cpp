#include "shaperel/sampler.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>

#include "shaperel/jsonl.hpp"

namespace shaperel::sampling {

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::below(0)");
  // Rejection sampling on the top of the range.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              (std::numeric_limits<std::uint64_t>::max() % bound);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double Rng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::string_view to_string(Constraint c) {
  return c == Constraint::ShapeValidOnly ? "shape-valid-only" : "any-pattern";
}

std::optional<Constraint> constraint_from_string(std::string_view s) {
  if (s == "any-pattern") return Constraint::AnyPattern;
  if (s == "shape-valid-only") return Constraint::ShapeValidOnly;
  return std::nullopt;
}

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Train:
      return "train";
    case Role::Eval:
      return "eval";
    case Role::Test:
      return "test";
  }
  return "train";
}

std::vector<turtle::Graph> Dataset::graphs() const {
  std::vector<turtle::Graph> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(e.graph);
  return out;
}

std::vector<std::string> Dataset::entities() const {
  std::vector<std::string> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(e.entity);
  return out;
}

bool Dataset::in_role(std::size_t index, int fold, Role role) const {
  if (fold_count < 2 || folds.size() != examples.size()) {
    throw std::logic_error("dataset '" + name + "' has no fold assignment");
  }
  int f = folds.at(index);
  switch (role) {
    case Role::Test:
      return f == fold;
    case Role::Train:
      return f != fold;
    case Role::Eval:
      return f == (fold + 1) % fold_count;
  }
  return false;
}

std::vector<std::size_t> Dataset::indices(int fold, Role role) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (in_role(i, fold, role)) out.push_back(i);
  }
  return out;
}

Dataset sample(std::span<const Example> store, const SampleRequest& request,
               const shape::Shape& shape) {
  std::vector<const Example*> eligible;
  for (const auto& ex : store) {
    if (ex.dropped || ex.graph.empty()) continue;
    if (request.exclude.count(ex.entity)) continue;
    if (request.constraint == Constraint::ShapeValidOnly && !shape::validates(ex.graph, shape)) {
      continue;
    }
    eligible.push_back(&ex);
  }
  std::sort(eligible.begin(), eligible.end(),
            [](const Example* a, const Example* b) { return a->entity < b->entity; });
  eligible.erase(std::unique(eligible.begin(), eligible.end(),
                             [](const Example* a, const Example* b) { return a->entity == b->entity; }),
                 eligible.end());
  if (request.count > eligible.size()) {
    throw InsufficientExamples(request.count, eligible.size());
  }

  // Partial Fisher-Yates: the first `count` slots are the sample, in draw order.
  Rng rng(request.seed);
  for (std::size_t i = 0; i < request.count; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(eligible.size() - i));
    std::swap(eligible[i], eligible[j]);
  }

  Dataset d;
  d.name = request.name;
  d.seed = request.seed;
  d.constraint = request.constraint;
  d.examples.reserve(request.count);
  for (std::size_t i = 0; i < request.count; ++i) d.examples.push_back(*eligible[i]);
  return d;
}

Dataset SamplingSession::draw(std::string name, std::size_t count, std::uint64_t seed,
                              Constraint constraint) {
  SampleRequest req{std::move(name), count, seed, constraint, used_};
  Dataset d = sample(store_, req, *shape_);
  for (const auto& e : d.examples) used_.insert(e.entity);
  return d;
}

Dataset kfold(Dataset d, int k) {
  if (k < 2) throw BadK("fold count must be at least 2, got " + std::to_string(k));
  if (static_cast<std::size_t>(k) > d.examples.size()) {
    throw BadK("fold count " + std::to_string(k) + " exceeds dataset size " +
               std::to_string(d.examples.size()));
  }
  const std::size_t n = d.examples.size();
  d.folds.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.folds[i] = static_cast<int>(i * static_cast<std::size_t>(k) / n);
  }
  d.fold_count = k;
  return d;
}

nlohmann::json DatasetStats::to_json() const {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"name", name},
          {"size", size},
          {"mean_properties", mean_properties},
          {"realized_patterns", realized_patterns},
          {"shape_rate", shape_rate},
          {"mean_nli", opt(mean_nli)},
          {"mean_tc", opt(mean_tc)}};
}

DatasetStats DatasetStats::from_json(const nlohmann::json& j) {
  DatasetStats s;
  s.name = j.value("name", std::string{});
  s.size = j.at("size").get<std::size_t>();
  s.mean_properties = j.at("mean_properties").get<double>();
  s.realized_patterns = j.at("realized_patterns").get<std::size_t>();
  s.shape_rate = j.at("shape_rate").get<double>();
  if (j.contains("mean_nli") && !j.at("mean_nli").is_null()) s.mean_nli = j.at("mean_nli").get<double>();
  if (j.contains("mean_tc") && !j.at("mean_tc").is_null()) s.mean_tc = j.at("mean_tc").get<double>();
  return s;
}

namespace {

std::optional<double> mean_score(const Dataset& d, const Scorer* scorer) {
  if (!scorer) return std::nullopt;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& e : d.examples) {
    if (auto s = scorer->score(e)) {
      sum += *s;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

DatasetStats stats(const Dataset& d, const shape::Shape& shape, const Scorer* nli,
                   const Scorer* tc) {
  DatasetStats s;
  s.name = d.name;
  s.size = d.examples.size();
  if (s.size == 0) return s;
  const auto& v = shape.vocabulary();
  std::set<shape::Pattern> realized;
  std::size_t property_total = 0;
  std::size_t valid = 0;
  for (const auto& e : d.examples) {
    auto p = shape::project_pattern(e.graph, v);
    realized.insert(p.pattern);
    property_total += p.pattern.count() + p.foreign;
    if (shape::validates(e.graph, shape)) ++valid;
  }
  s.mean_properties = static_cast<double>(property_total) / static_cast<double>(s.size);
  s.realized_patterns = realized.size();
  s.shape_rate = static_cast<double>(valid) / static_cast<double>(s.size);
  s.mean_nli = mean_score(d, nli);
  s.mean_tc = mean_score(d, tc);
  return s;
}

nlohmann::json manifest(const Dataset& d) {
  nlohmann::json j = {{"name", d.name},
                      {"seed", d.seed},
                      {"constraint", std::string(to_string(d.constraint))},
                      {"size", d.examples.size()},
                      {"entities", d.entities()}};
  if (d.fold_count >= 2) {
    j["fold_count"] = d.fold_count;
    j["folds"] = d.folds;
  } else {
    j["fold_count"] = 0;
    j["folds"] = nlohmann::json::array();
  }
  return j;
}

void write_dataset(const Dataset& d, const std::filesystem::path& manifest_path,
                   const std::filesystem::path& examples_path,
                   const shape::PropertyVocabulary& v) {
  if (manifest_path.has_parent_path()) std::filesystem::create_directories(manifest_path.parent_path());
  if (examples_path.has_parent_path()) std::filesystem::create_directories(examples_path.parent_path());
  {
    std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + manifest_path.string());
    out << manifest(d).dump(2) << '\n';
  }
  std::ofstream out(examples_path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + examples_path.string());
  for (const auto& e : d.examples) jsonl::write(out, distill::example_to_json(e, v, true));
}

namespace {

void apply_manifest(Dataset& d, const nlohmann::json& m) {
  d.name = m.at("name").get<std::string>();
  d.seed = m.value("seed", std::uint64_t{0});
  d.constraint = constraint_from_string(m.value("constraint", std::string("any-pattern")))
                     .value_or(Constraint::AnyPattern);
  d.fold_count = m.value("fold_count", 0);
  if (d.fold_count >= 2) d.folds = m.at("folds").get<std::vector<int>>();
  if (!d.folds.empty() && d.folds.size() != d.examples.size()) {
    throw std::runtime_error("fold map of '" + d.name + "' does not match its examples");
  }
}

}  // namespace

Dataset read_dataset(const std::filesystem::path& manifest_path,
                     const std::filesystem::path& examples_path,
                     const shape::PropertyVocabulary& v) {
  std::ifstream min(manifest_path);
  if (!min) throw std::runtime_error("cannot read " + manifest_path.string());
  nlohmann::json m = nlohmann::json::parse(min);
  std::ifstream ein(examples_path);
  if (!ein) throw std::runtime_error("cannot read " + examples_path.string());
  Dataset d;
  jsonl::Reader reader(ein);
  while (auto j = reader.next()) d.examples.push_back(distill::example_from_json(*j, v));
  auto entities = m.at("entities").get<std::vector<std::string>>();
  if (entities != d.entities()) {
    throw std::runtime_error("examples of '" + m.at("name").get<std::string>() +
                             "' do not match the manifest entity list");
  }
  apply_manifest(d, m);
  return d;
}

Dataset dataset_from_manifest(const nlohmann::json& m, std::span<const Example> store) {
  std::map<std::string, const Example*> by_entity;
  for (const auto& e : store) by_entity.emplace(e.entity, &e);
  Dataset d;
  for (const auto& entity : m.at("entities")) {
    auto it = by_entity.find(entity.get<std::string>());
    if (it == by_entity.end()) {
      throw std::runtime_error("entity " + entity.get<std::string>() + " not in store");
    }
    d.examples.push_back(*it->second);
  }
  apply_manifest(d, m);
  return d;
}

}  // namespace shaperel::sampling
