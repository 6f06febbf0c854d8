#pragma once

// Surface renderings of literal values, used to decide whether an abstract
// states a value ("found in the text").
//
//   string -> the literal itself
//   gYear  -> the four-digit year
//   date   -> "D Month YYYY", "Month D, YYYY", "YYYY-MM-DD" (unpadded day)
//
// Matching is an exact, case-sensitive substring test after Unicode NFC.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shaperel/turtle_light.hpp"

namespace shaperel::rendering {

// English month name for 1..12.
std::string_view month_name(int month);
// 1..12 for a month name, ignoring ASCII case; nullopt otherwise.
std::optional<int> month_number(std::string_view name);

std::string nfc(std::string_view text);

std::vector<std::string> renderings(const turtle::Literal& literal);

// `normalized_abstract` must already be NFC.
bool found_in(const turtle::Literal& literal, std::string_view normalized_abstract);

// Byte offsets [begin, end) of every rendering occurrence, sorted and
// non-overlapping. Used for highlighting.
struct Span {
  std::size_t begin;
  std::size_t end;
};
std::vector<Span> find_spans(const turtle::Literal& literal,
                             std::string_view normalized_abstract);

}  // namespace shaperel::rendering
