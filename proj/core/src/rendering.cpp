#include "shaperel/rendering.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

namespace shaperel::rendering {

namespace {

constexpr std::array<std::string_view, 12> kMonths = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

}  // namespace

std::string_view month_name(int month) {
  if (month < 1 || month > 12) throw std::out_of_range("month out of range");
  return kMonths[static_cast<std::size_t>(month - 1)];
}

std::optional<int> month_number(std::string_view name) {
  for (std::size_t i = 0; i < kMonths.size(); ++i) {
    const auto& m = kMonths[i];
    if (m.size() != name.size()) continue;
    bool same = true;
    for (std::size_t k = 0; k < m.size() && same; ++k) same = lower(m[k]) == lower(name[k]);
    if (same) return static_cast<int>(i + 1);
  }
  return std::nullopt;
}

std::string nfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  if (normalizer->isNormalized(source, status) && U_SUCCESS(status)) {
    return std::string(text);
  }
  status = U_ZERO_ERROR;
  icu::UnicodeString normalized = normalizer->normalize(source, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::vector<std::string> renderings(const turtle::Literal& literal) {
  const std::string& lex = literal.lexical();
  switch (literal.datatype()) {
    case turtle::Datatype::String:
      return {nfc(lex)};
    case turtle::Datatype::GYear:
      return {lex};
    case turtle::Datatype::Date: {
      std::string year = lex.substr(0, 4);
      int month = std::stoi(lex.substr(5, 2));
      int day = std::stoi(lex.substr(8, 2));
      std::string d = std::to_string(day);
      std::string m(month_name(month));
      return {d + " " + m + " " + year, m + " " + d + ", " + year, lex};
    }
  }
  return {lex};
}

bool found_in(const turtle::Literal& literal, std::string_view normalized_abstract) {
  for (const auto& r : renderings(literal)) {
    if (!r.empty() && normalized_abstract.find(r) != std::string_view::npos) return true;
  }
  return false;
}

std::vector<Span> find_spans(const turtle::Literal& literal,
                             std::string_view normalized_abstract) {
  std::vector<Span> spans;
  for (const auto& r : renderings(literal)) {
    if (r.empty()) continue;
    for (auto pos = normalized_abstract.find(r); pos != std::string_view::npos;
         pos = normalized_abstract.find(r, pos + 1)) {
      spans.push_back({pos, pos + r.size()});
    }
  }
  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return a.begin < b.begin || (a.begin == b.begin && a.end > b.end); });
  std::vector<Span> merged;
  for (const auto& s : spans) {
    if (!merged.empty() && s.begin < merged.back().end) {
      merged.back().end = std::max(merged.back().end, s.end);
    } else {
      merged.push_back(s);
    }
  }
  return merged;
}

}  // namespace shaperel::rendering
