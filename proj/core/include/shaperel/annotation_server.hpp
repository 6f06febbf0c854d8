#pragma once

// HTTP API over an AnnotationSession.
//
//   GET  /api/session                      {dataset, model, total, judged}
//   GET  /api/categories                   [{code, description}]
//   GET  /api/items?status=S&limit=N       S in pending | judged | all
//   GET  /api/items/{id}
//   POST /api/items/{id}/judgement         {polarity, category?, annotator?, timestamp?}
//   DELETE /api/items/{id}/judgement       revoke
//   POST /api/render                       {value, datatype, abstract} -> renderings, spans
//   POST /api/export/gold                  runs the gold export callback
//
// Errors are JSON {error, message}: 400 malformed body, 404 unknown item,
// 409 already judged / pending items, 422 category mismatch.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "shaperel/active_loop.hpp"

namespace shaperel::active {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;  // mounted at /
};

class AnnotationServer {
 public:
  // `export_gold` runs the correction and returns its manifest; it may throw
  // PendingItems.
  using ExportFn = std::function<nlohmann::json()>;

  AnnotationServer(AnnotationSession& session, const shape::Shape& shape,
                   std::map<std::string, turtle::Graph> expected_graphs, ExportFn export_gold,
                   ServerOptions options = {});
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  int start();
  // Binds and serves on the calling thread until stop().
  void run();
  void stop();
  int port() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace shaperel::active
