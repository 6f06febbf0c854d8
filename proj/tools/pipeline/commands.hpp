#pragma once

// The subcommands of the shaperel tool. Each one reads its inputs from the
// output directory (or from files named in the config), writes its artifacts
// under the directory and records a provenance manifest in manifests/.

#include <memory>
#include <string>
#include <vector>

#include "artifacts.hpp"
#include "config.hpp"
#include "shaperel/active_loop.hpp"
#include "shaperel/annotation_server.hpp"
#include "shaperel/distiller.hpp"
#include "shaperel/evaluator.hpp"
#include "shaperel/extractor.hpp"
#include "shaperel/sampler.hpp"

namespace shaperel::cli {

class Context {
 public:
  explicit Context(RunConfig config);

  const RunConfig& config() const noexcept { return config_; }
  const shape::Shape& shape() const noexcept { return shape_; }
  const std::vector<distill::InferenceRule>& rules() const noexcept { return rules_; }
  const Layout& layout() const noexcept { return layout_; }

  // Shape and rule files as manifest inputs, when configured.
  void add_definition_inputs(Manifest& m) const;
  sampling::Dataset load_dataset(const std::string& name) const;

 private:
  RunConfig config_;
  shape::Shape shape_;
  std::vector<distill::InferenceRule> rules_;
  Layout layout_;
};

distill::DistillReport cmd_distill(const Context& ctx);
std::vector<sampling::Dataset> cmd_sample(const Context& ctx);
std::vector<extract::Prediction> cmd_extract(const Context& ctx, const std::string& dataset);
eval::FoldedReport cmd_evaluate(const Context& ctx, const std::string& dataset);
active::GoldResult cmd_gold(const Context& ctx, const std::string& dataset);
std::string cmd_report(const Context& ctx);

// Session and server for annotate-serve; the server is not started yet. The
// export endpoint runs cmd_gold.
struct AnnotationService {
  std::unique_ptr<active::AnnotationSession> session;
  std::unique_ptr<active::AnnotationServer> server;
};
AnnotationService open_annotation(const Context& ctx, const std::string& dataset);

nlohmann::json folded_to_json(const eval::FoldedReport& r, const std::string& model,
                              const std::string& dataset);

}  // namespace shaperel::cli
