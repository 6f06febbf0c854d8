#include "artifacts.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace shaperel::cli {

namespace fs = std::filesystem;

namespace {

class Digest {
 public:
  Digest() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("SHA-256 initialisation failed");
    }
  }
  ~Digest() { EVP_MD_CTX_free(ctx_); }
  Digest(const Digest&) = delete;
  Digest& operator=(const Digest&) = delete;

  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_, data, n) != 1) throw std::runtime_error("SHA-256 update failed");
  }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_, md.data(), &len) != 1) {
      throw std::runtime_error("SHA-256 finalisation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += kHex[md[i] >> 4];
      out += kHex[md[i] & 0xf];
    }
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view data) {
  Digest d;
  d.update(data.data(), data.size());
  return d.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Digest d;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return d.hex();
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path Layout::dataset_manifest(const std::string& name) const {
  return datasets() / (name + ".json");
}
fs::path Layout::dataset_examples(const std::string& name) const {
  return datasets() / (name + ".jsonl");
}
fs::path Layout::dataset_stats(const std::string& name) const {
  return datasets() / (name + ".stats.json");
}
fs::path Layout::predictions(const std::string& model, const std::string& dataset) const {
  return root_ / "predictions" / model / (dataset + ".jsonl");
}
fs::path Layout::eval_report(const std::string& model, const std::string& dataset) const {
  return reports() / model / (dataset + ".eval.json");
}
fs::path Layout::diffs(const std::string& model, const std::string& dataset) const {
  return reports() / model / (dataset + ".diffs.jsonl");
}
fs::path Layout::annotation_report(const std::string& model, const std::string& dataset) const {
  return reports() / model / (dataset + ".annotation.json");
}
fs::path Layout::judgements(const std::string& model, const std::string& dataset) const {
  return root_ / "annotation" / model / (dataset + ".judgements.jsonl");
}
fs::path Layout::correction(const std::string& model, const std::string& dataset) const {
  return root_ / "gold" / model / (dataset + ".correction.json");
}

std::string Layout::display(const fs::path& p) const {
  const fs::path abs = fs::absolute(p).lexically_normal();
  const fs::path root = fs::absolute(root_).lexically_normal();
  const fs::path rel = abs.lexically_relative(root);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return abs.generic_string();
}

void Manifest::input(const Layout& layout, const fs::path& p) {
  inputs_.push_back({{"path", layout.display(p)}, {"sha256", sha256_file(p)}});
}

void Manifest::output(const Layout& layout, const fs::path& p) {
  outputs_.push_back({{"path", layout.display(p)}, {"sha256", sha256_file(p)}});
}

nlohmann::json Manifest::to_json() const {
  return {{"command", command_},
          {"parameters", parameters_},
          {"inputs", inputs_},
          {"outputs", outputs_}};
}

fs::path Manifest::write(const Layout& layout, const std::string& name) const {
  fs::path path = layout.manifests() / (name + ".json");
  write_file(path, to_json().dump(2) + "\n");
  return path;
}

}  // namespace shaperel::cli
