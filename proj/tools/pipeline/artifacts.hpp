#pragma once

// Output layout and provenance manifests. Manifests carry no timestamps so a
// rerun with the same inputs and seeds reproduces them byte for byte.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace shaperel::cli {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// Creates parent directories; writes in binary mode.
void write_file(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

class Layout {
 public:
  explicit Layout(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path store() const { return root_ / "store"; }
  std::filesystem::path datasets() const { return root_ / "datasets"; }
  std::filesystem::path dataset_manifest(const std::string& name) const;
  std::filesystem::path dataset_examples(const std::string& name) const;
  std::filesystem::path dataset_stats(const std::string& name) const;
  std::filesystem::path predictions(const std::string& model, const std::string& dataset) const;
  std::filesystem::path reports() const { return root_ / "reports"; }
  std::filesystem::path distill_report() const { return reports() / "distill.json"; }
  std::filesystem::path eval_report(const std::string& model, const std::string& dataset) const;
  std::filesystem::path diffs(const std::string& model, const std::string& dataset) const;
  std::filesystem::path annotation_report(const std::string& model,
                                          const std::string& dataset) const;
  std::filesystem::path judgements(const std::string& model, const std::string& dataset) const;
  std::filesystem::path correction(const std::string& model, const std::string& dataset) const;
  std::filesystem::path manifests() const { return root_ / "manifests"; }

  // Relative to the root when inside it, absolute otherwise.
  std::string display(const std::filesystem::path& p) const;

 private:
  std::filesystem::path root_;
};

// {command, parameters, inputs: [{path, sha256}], outputs: [{path, sha256}]}
class Manifest {
 public:
  Manifest(std::string command, nlohmann::json parameters)
      : command_(std::move(command)), parameters_(std::move(parameters)) {}

  void input(const Layout& layout, const std::filesystem::path& p);
  void output(const Layout& layout, const std::filesystem::path& p);
  nlohmann::json to_json() const;
  // Writes manifests/<name>.json and returns its path.
  std::filesystem::path write(const Layout& layout, const std::string& name) const;

 private:
  std::string command_;
  nlohmann::json parameters_;
  nlohmann::json inputs_ = nlohmann::json::array();
  nlohmann::json outputs_ = nlohmann::json::array();
};

}  // namespace shaperel::cli
