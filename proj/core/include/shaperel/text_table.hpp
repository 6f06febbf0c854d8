#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace shaperel {

// Aligned plain-text table: first column left-aligned, the others right.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }
  void add_rule() { rows_.emplace_back(); }
  std::string render() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;  // empty row = horizontal rule
};

// Fixed-point formatting; "-" for nullopt.
std::string format_number(std::optional<double> v, int precision);

}  // namespace shaperel
