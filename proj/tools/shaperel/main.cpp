#include <csignal>
#include <iostream>

#include <pthread.h>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"

namespace {

using namespace shaperel;
using namespace shaperel::cli;

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kPending = 3 };

struct Flags {
  std::string config;
  std::string output;
  std::string shape;
  std::string rules;
  std::string records;
  std::string ntriples;
  std::string abstracts;
  std::string extractor;
  std::string model;
  std::string endpoint;
  std::int64_t timeout_ms = -1;
  std::int64_t parallelism = -1;
  std::string macro_axis;
  std::string host;
  int port = -1;
  std::string static_dir;
  std::string dataset;
  bool verbose = false;
  bool quiet = false;
};

RunConfig build_config(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_config(f.config);
  if (!f.output.empty()) c.output = f.output;
  if (!f.shape.empty()) c.shape = f.shape;
  if (!f.rules.empty()) c.rules = f.rules;
  if (!f.records.empty()) {
    c.records = f.records;
    c.ntriples.reset();
    c.abstracts.reset();
  }
  if (!f.ntriples.empty()) {
    c.ntriples = f.ntriples;
    c.records.reset();
  }
  if (!f.abstracts.empty()) c.abstracts = f.abstracts;
  if (!f.extractor.empty()) c.extractor.kind = f.extractor;
  if (!f.model.empty()) c.extractor.model = f.model;
  if (!f.endpoint.empty()) c.extractor.endpoint = f.endpoint;
  if (f.timeout_ms >= 0) c.extractor.timeout_ms = f.timeout_ms;
  if (f.parallelism >= 0) c.extractor.parallelism = static_cast<std::size_t>(f.parallelism);
  if (!f.macro_axis.empty()) {
    auto axis = eval::macro_axis_from_string(f.macro_axis);
    if (!axis) throw ConfigError("unknown macro axis '" + f.macro_axis + "'");
    c.macro_axis = *axis;
  }
  if (!f.host.empty()) c.annotate.host = f.host;
  if (f.port >= 0) c.annotate.port = f.port;
  if (!f.static_dir.empty()) c.annotate.static_dir = f.static_dir;
  apply_environment(c, process_env);
  return c;
}

int serve(const Context& ctx, const std::string& dataset) {
  // Block the stop signals before any server thread exists so that only
  // sigwait below receives them.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  auto service = open_annotation(ctx, dataset);
  int port = service.server->start();
  spdlog::info("annotating {} ({} items, {} judged) on http://{}:{}/", dataset,
               service.session->total(), service.session->judged(), ctx.config().annotate.host,
               port);
  int sig = 0;
  sigwait(&stop_signals, &sig);
  spdlog::info("stopping");
  service.server->stop();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Build, sample, score and correct text-to-graph datasets."};
  app.require_subcommand(1);
  Flags f;
  app.add_option("-c,--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("-o,--output", f.output, "Output directory");
  app.add_option("--shape", f.shape, "Shape definition (JSON)");
  app.add_option("--rules", f.rules, "Inference rules (JSON)");
  app.add_flag("-v,--verbose", f.verbose, "Debug logging");
  app.add_flag("-q,--quiet", f.quiet, "Only log warnings and errors");

  auto* distill_cmd = app.add_subcommand("distill", "Build the partitioned store from a KB dump");
  distill_cmd->add_option("--records", f.records, "Raw records (JSONL)");
  distill_cmd->add_option("--ntriples", f.ntriples, "N-Triples dump");
  distill_cmd->add_option("--abstracts", f.abstracts, "Abstracts (JSONL)");

  auto* sample_cmd = app.add_subcommand("sample", "Draw the configured datasets from the store");

  auto add_model_options = [&](CLI::App* cmd) {
    cmd->add_option("-d,--dataset", f.dataset, "Dataset name")->required();
    cmd->add_option("--model", f.model, "Model name used in output paths");
  };
  auto* extract_cmd = app.add_subcommand("extract", "Run an extractor over a dataset");
  add_model_options(extract_cmd);
  extract_cmd->add_option("--extractor", f.extractor, "heuristic or remote");
  extract_cmd->add_option("--endpoint", f.endpoint, "Remote model URL");
  extract_cmd->add_option("--timeout-ms", f.timeout_ms, "Remote call timeout");
  extract_cmd->add_option("--parallelism", f.parallelism, "Calls in flight");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against a dataset");
  add_model_options(evaluate_cmd);
  evaluate_cmd->add_option("--macro-axis", f.macro_axis, "per-property or per-example");

  auto* serve_cmd = app.add_subcommand("annotate-serve", "Serve the annotation API");
  add_model_options(serve_cmd);
  serve_cmd->add_option("--host", f.host, "Bind address");
  serve_cmd->add_option("--port", f.port, "Port, 0 for any free port");
  serve_cmd->add_option("--static-dir", f.static_dir, "Directory served at /");

  auto* gold_cmd = app.add_subcommand("gold", "Apply judgements and write the gold dataset");
  add_model_options(gold_cmd);

  auto* report_cmd = app.add_subcommand("report", "Render tables from stored reports");

  CLI11_PARSE(app, argc, argv);

  auto logger = spdlog::stderr_color_mt("shaperel");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("%^%l%$: %v");
  spdlog::set_level(f.verbose ? spdlog::level::debug
                              : f.quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    RunConfig config = build_config(f);
    auto run = [&](Command command) {
      validate(config, command);
      return Context(config);
    };
    if (*distill_cmd) {
      auto report = cmd_distill(run(Command::Distill));
      if (!f.quiet) std::cout << report.render_table();
    } else if (*sample_cmd) {
      cmd_sample(run(Command::Sample));
    } else if (*extract_cmd) {
      cmd_extract(run(Command::Extract), f.dataset);
    } else if (*evaluate_cmd) {
      auto ctx = run(Command::Evaluate);
      auto folded = cmd_evaluate(ctx, f.dataset);
      if (!f.quiet) {
        std::vector<eval::ReportRow> rows = {
            {config.extractor.model_name(), f.dataset, folded.mean}};
        std::cout << eval::render_scores(rows);
      }
    } else if (*serve_cmd) {
      auto ctx = run(Command::AnnotateServe);
      return serve(ctx, f.dataset);
    } else if (*gold_cmd) {
      cmd_gold(run(Command::Gold), f.dataset);
    } else if (*report_cmd) {
      std::cout << cmd_report(run(Command::Report));
    }
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kConfig;
  } catch (const active::PendingItems& e) {
    spdlog::error("{}", e.what());
    return kPending;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
  return kOk;
}
