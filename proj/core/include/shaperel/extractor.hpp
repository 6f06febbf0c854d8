#pragma once

// Gateway to relation-extraction models: prompt construction, a remote HTTP
// model client and a deterministic rule-based extractor.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shaperel/distiller.hpp"
#include "shaperel/shape.hpp"
#include "shaperel/turtle_light.hpp"

namespace shaperel::extract {

using distill::Example;

class EmptyField : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// "<entity> : <abstract>" with the entity written as a TurtleLight IRI.
struct Prompt {
  std::string text;
  std::string subject;  // expected local name of the predicted subject
};

Prompt build_prompt(const Example& ex);

struct Prediction {
  std::string entity;
  std::string raw;
  std::optional<turtle::Graph> parsed;
  bool parse_ok = false;
  bool uri_ok = false;
  std::string note;  // transport errors, empty when the call succeeded
  int fold = -1;     // model fold, -1 when a single model covers the dataset

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Parses `raw` and derives the flags: parse_ok iff it parses as a Graph,
// uri_ok iff additionally its subject equals `expected_subject`.
Prediction classify(std::string entity, std::string raw, std::string_view expected_subject,
                    const turtle::DatatypeHint& hint);

nlohmann::json prediction_to_json(const Prediction& p);
// Flags are recomputed from `raw`; stored flags are ignored.
Prediction prediction_from_json(const nlohmann::json& j, const turtle::DatatypeHint& hint);
void write_predictions(const std::filesystem::path& path, std::span<const Prediction> preds);
std::vector<Prediction> read_predictions(const std::filesystem::path& path,
                                         const turtle::DatatypeHint& hint);

class Extractor {
 public:
  virtual ~Extractor() = default;
  virtual std::string name() const = 0;
  // Must be safe to call concurrently.
  virtual Prediction extract(const Example& ex) const = 0;
};

// Rule-based stand-in for a trained model:
//  - label: leading name span before " (", ",", " is ", " was "
//  - dates: in the first parenthetical (to ')' or end of text), a dash splits
//    birth | death; otherwise "born" / "died" cues pick the next date or year.
//    Without a parenthetical the cues are searched in the whole abstract.
//    Month names match case-insensitively.
//  - years are projected from found dates
//  - birthName: capitalized words right after "born" in the parenthetical
//  - alias: capitalized words after "better known as" / "also known as" /
//    "known professionally as"
class HeuristicExtractor final : public Extractor {
 public:
  explicit HeuristicExtractor(shape::Shape shape);
  std::string name() const override { return "heuristic"; }
  Prediction extract(const Example& ex) const override;

  // The extracted graph, before linearization.
  turtle::Graph extract_graph(const Example& ex) const;

 private:
  shape::Shape shape_;
  turtle::DatatypeHint hint_;
};

struct RemoteConfig {
  std::string endpoint;  // http://host:port/path
  std::chrono::milliseconds timeout{30000};
  std::size_t parallelism = 4;
};

// POSTs {"prompt": text} and reads the linearized graph from the response
// body. Transport failures and non-2xx statuses yield parse_ok = false with a
// note; no retry.
class RemoteExtractor final : public Extractor {
 public:
  RemoteExtractor(RemoteConfig config, shape::Shape shape);
  std::string name() const override { return "remote"; }
  Prediction extract(const Example& ex) const override;
  const RemoteConfig& config() const noexcept { return config_; }

 private:
  RemoteConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  turtle::DatatypeHint hint_;
};

// Runs `extractor` over `examples` with at most `parallelism` calls in
// flight. Output is in input order.
std::vector<Prediction> extract_all(const Extractor& extractor,
                                    std::span<const Example> examples,
                                    std::size_t parallelism = 1);

}  // namespace shaperel::extract
