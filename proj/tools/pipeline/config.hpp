#pragma once

// Run configuration shared by all subcommands. Precedence, lowest first:
// built-in defaults, config file, command-line flags, environment.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shaperel/evaluator.hpp"
#include "shaperel/sampler.hpp"

namespace shaperel::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetSpec {
  std::string name;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  sampling::Constraint constraint = sampling::Constraint::AnyPattern;
  int folds = 0;  // 0: no k-fold split
};

struct ExtractorSettings {
  std::string kind = "heuristic";  // heuristic | remote
  std::string model;               // defaults to kind
  // For k-fold datasets "{fold}" in the endpoint is replaced by the fold id.
  std::string endpoint;
  std::int64_t timeout_ms = 30000;
  std::size_t parallelism = 4;

  std::string model_name() const { return model.empty() ? kind : model; }
};

struct AnnotateSettings {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> static_dir;
};

struct RunConfig {
  std::filesystem::path output = "out";
  std::optional<std::filesystem::path> shape;  // built-in Person shape when unset
  std::optional<std::filesystem::path> rules;  // built-in Person rules when unset
  // Raw records as JSONL, or N-Triples plus an abstracts JSONL.
  std::optional<std::filesystem::path> records;
  std::optional<std::filesystem::path> ntriples;
  std::optional<std::filesystem::path> abstracts;
  std::vector<DatasetSpec> datasets;
  ExtractorSettings extractor;
  eval::MacroAxis macro_axis = eval::MacroAxis::PerProperty;
  AnnotateSettings annotate;
};

// Relative paths are resolved against the directory of the config file.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const RunConfig& c);

// SHAPEREL_OUTPUT, SHAPEREL_EXTRACTOR, SHAPEREL_MODEL, SHAPEREL_ENDPOINT,
// SHAPEREL_TIMEOUT_MS, SHAPEREL_PARALLELISM.
using Getenv = std::function<std::optional<std::string>(const char*)>;
void apply_environment(RunConfig& c, const Getenv& getenv);
std::optional<std::string> process_env(const char* name);

enum class Command { Distill, Sample, Extract, Evaluate, AnnotateServe, Gold, Report };

// Checks what `command` needs: referenced files exist, fold counts >= 2,
// dataset names unique and usable as file names, a remote endpoint when the
// remote extractor is selected.
void validate(const RunConfig& c, Command command);

const DatasetSpec* find_dataset(const RunConfig& c, const std::string& name);

}  // namespace shaperel::cli
