#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace shaperel::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::optional<fs::path> optional_path(const json& j, const char* key, const fs::path& base) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return resolve(base, j.at(key).get<std::string>());
}

template <typename T>
T parse_number(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(text, &used);
    if (used != text.size() || v < 0) throw std::invalid_argument(text);
    return static_cast<T>(v);
  } catch (const std::exception&) {
    throw ConfigError(std::string(what) + " must be a non-negative integer, got '" + text + "'");
  }
}

bool usable_name(const std::string& name) {
  if (name.empty() || name == "." || name == "..") return false;
  for (char c : name) {
    if (c == '/' || c == '\\' || static_cast<unsigned char>(c) < 0x20) return false;
  }
  return true;
}

}  // namespace

RunConfig config_from_json(const json& j, const fs::path& base) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  try {
    if (j.contains("output")) c.output = resolve(base, j.at("output").get<std::string>());
    c.shape = optional_path(j, "shape", base);
    c.rules = optional_path(j, "rules", base);

    if (j.contains("distill")) {
      const auto& d = j.at("distill");
      c.records = optional_path(d, "records", base);
      c.ntriples = optional_path(d, "ntriples", base);
      c.abstracts = optional_path(d, "abstracts", base);
    }
    if (j.contains("sample")) {
      for (const auto& d : j.at("sample").at("datasets")) {
        DatasetSpec s;
        s.name = d.at("name").get<std::string>();
        s.count = d.at("count").get<std::size_t>();
        s.seed = d.at("seed").get<std::uint64_t>();
        auto constraint = sampling::constraint_from_string(
            d.value("constraint", std::string("any-pattern")));
        if (!constraint) throw ConfigError("dataset " + s.name + ": unknown constraint");
        s.constraint = *constraint;
        s.folds = d.value("folds", 0);
        c.datasets.push_back(std::move(s));
      }
    }
    if (j.contains("extract")) {
      const auto& e = j.at("extract");
      c.extractor.kind = e.value("extractor", c.extractor.kind);
      c.extractor.model = e.value("model", c.extractor.model);
      c.extractor.endpoint = e.value("endpoint", c.extractor.endpoint);
      c.extractor.timeout_ms = e.value("timeout_ms", c.extractor.timeout_ms);
      c.extractor.parallelism = e.value("parallelism", c.extractor.parallelism);
    }
    if (j.contains("evaluate")) {
      auto axis = eval::macro_axis_from_string(
          j.at("evaluate").value("macro_axis", std::string(eval::to_string(c.macro_axis))));
      if (!axis) throw ConfigError("evaluate.macro_axis: unknown axis");
      c.macro_axis = *axis;
    }
    if (j.contains("annotate")) {
      const auto& a = j.at("annotate");
      c.annotate.host = a.value("host", c.annotate.host);
      c.annotate.port = a.value("port", c.annotate.port);
      c.annotate.static_dir = optional_path(a, "static_dir", base);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

json config_to_json(const RunConfig& c) {
  auto opt = [](const std::optional<fs::path>& p) { return p ? json(p->string()) : json(nullptr); };
  json datasets = json::array();
  for (const auto& d : c.datasets) {
    datasets.push_back({{"name", d.name},
                        {"count", d.count},
                        {"seed", d.seed},
                        {"constraint", std::string(sampling::to_string(d.constraint))},
                        {"folds", d.folds}});
  }
  return {{"output", c.output.string()},
          {"shape", opt(c.shape)},
          {"rules", opt(c.rules)},
          {"distill",
           {{"records", opt(c.records)},
            {"ntriples", opt(c.ntriples)},
            {"abstracts", opt(c.abstracts)}}},
          {"sample", {{"datasets", datasets}}},
          {"extract",
           {{"extractor", c.extractor.kind},
            {"model", c.extractor.model},
            {"endpoint", c.extractor.endpoint},
            {"timeout_ms", c.extractor.timeout_ms},
            {"parallelism", c.extractor.parallelism}}},
          {"evaluate", {{"macro_axis", std::string(eval::to_string(c.macro_axis))}}},
          {"annotate",
           {{"host", c.annotate.host},
            {"port", c.annotate.port},
            {"static_dir", opt(c.annotate.static_dir)}}}};
}

std::optional<std::string> process_env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

void apply_environment(RunConfig& c, const Getenv& getenv) {
  if (auto v = getenv("SHAPEREL_OUTPUT")) c.output = *v;
  if (auto v = getenv("SHAPEREL_EXTRACTOR")) c.extractor.kind = *v;
  if (auto v = getenv("SHAPEREL_MODEL")) c.extractor.model = *v;
  if (auto v = getenv("SHAPEREL_ENDPOINT")) c.extractor.endpoint = *v;
  if (auto v = getenv("SHAPEREL_TIMEOUT_MS")) {
    c.extractor.timeout_ms = parse_number<std::int64_t>(*v, "SHAPEREL_TIMEOUT_MS");
  }
  if (auto v = getenv("SHAPEREL_PARALLELISM")) {
    c.extractor.parallelism = parse_number<std::size_t>(*v, "SHAPEREL_PARALLELISM");
  }
}

void validate(const RunConfig& c, Command command) {
  auto must_exist = [](const std::optional<fs::path>& p, const char* what) {
    if (p && !fs::exists(*p)) throw ConfigError(std::string(what) + " not found: " + p->string());
  };
  must_exist(c.shape, "shape file");
  must_exist(c.rules, "rule file");
  must_exist(c.annotate.static_dir, "static directory");

  std::set<std::string> names;
  for (const auto& d : c.datasets) {
    if (!usable_name(d.name)) throw ConfigError("dataset name '" + d.name + "' is not usable");
    if (!names.insert(d.name).second) throw ConfigError("duplicate dataset name " + d.name);
    if (d.count == 0) throw ConfigError("dataset " + d.name + ": count must be positive");
    if (d.folds == 1 || d.folds < 0) {
      throw ConfigError("dataset " + d.name + ": fold count must be at least 2");
    }
    if (d.folds > 0 && static_cast<std::size_t>(d.folds) > d.count) {
      throw ConfigError("dataset " + d.name + ": more folds than examples");
    }
  }

  switch (command) {
    case Command::Distill:
      if (c.records && (c.ntriples || c.abstracts)) {
        throw ConfigError("distill: give either records or ntriples + abstracts, not both");
      }
      if (!c.records && !(c.ntriples && c.abstracts)) {
        throw ConfigError("distill: records, or ntriples and abstracts, are required");
      }
      must_exist(c.records, "records file");
      must_exist(c.ntriples, "N-Triples file");
      must_exist(c.abstracts, "abstracts file");
      break;
    case Command::Sample:
      if (c.datasets.empty()) throw ConfigError("sample: no datasets configured");
      break;
    case Command::Extract:
      if (c.extractor.kind != "heuristic" && c.extractor.kind != "remote") {
        throw ConfigError("unknown extractor '" + c.extractor.kind + "'");
      }
      if (c.extractor.kind == "remote" && c.extractor.endpoint.empty()) {
        throw ConfigError("the remote extractor needs an endpoint");
      }
      if (c.extractor.timeout_ms <= 0) throw ConfigError("timeout_ms must be positive");
      if (c.extractor.parallelism == 0) throw ConfigError("parallelism must be positive");
      if (!usable_name(c.extractor.model_name())) throw ConfigError("model name is not usable");
      break;
    case Command::Evaluate:
    case Command::AnnotateServe:
    case Command::Gold:
      if (!usable_name(c.extractor.model_name())) throw ConfigError("model name is not usable");
      if (c.annotate.port < 0 || c.annotate.port > 65535) throw ConfigError("port out of range");
      break;
    case Command::Report:
      break;
  }
}

const DatasetSpec* find_dataset(const RunConfig& c, const std::string& name) {
  for (const auto& d : c.datasets) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

}  // namespace shaperel::cli
