#include "shaperel/ntriples.hpp"

#include <map>
#include <unordered_map>

#include "shaperel/jsonl.hpp"
#include "utf8.hpp"

namespace shaperel::ntriples {

namespace {

constexpr std::string_view kXsd = "http://www.w3.org/2001/XMLSchema#";

class LineParser {
 public:
  LineParser(std::string_view line, std::size_t line_no) : s_(line), line_(line_no) {}

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

  [[noreturn]] void fail(const std::string& what) const {
    throw jsonl::FormatError(line_, what + " at column " + std::to_string(pos_ + 1));
  }

  std::string iri() {
    if (peek() != '<') fail("expected '<'");
    auto end = s_.find('>', pos_);
    if (end == std::string_view::npos) fail("unterminated IRI");
    std::string out(s_.substr(pos_ + 1, end - pos_ - 1));
    pos_ = end + 1;
    return out;
  }

  std::string blank() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ' ' && s_[pos_] != '\t') ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string literal() {
    ++pos_;  // opening quote
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_];
      if (c != '\\') {
        out += c;
        ++pos_;
        continue;
      }
      if (pos_ + 1 >= s_.size()) fail("dangling escape");
      char e = s_[pos_ + 1];
      pos_ += 2;
      switch (e) {
        case 't': out += '\t'; break;
        case 'b': out += '\b'; break;
        case 'n': out += '\n'; break;
        case 'r': out += '\r'; break;
        case 'f': out += '\f'; break;
        case '"': out += '"'; break;
        case '\'': out += '\''; break;
        case '\\': out += '\\'; break;
        case 'u':
        case 'U': {
          std::size_t n = e == 'u' ? 4 : 8;
          if (pos_ + n > s_.size()) fail("short unicode escape");
          char32_t cp = 0;
          for (std::size_t i = 0; i < n; ++i) {
            char h = s_[pos_ + i];
            cp <<= 4;
            if (h >= '0' && h <= '9') cp |= static_cast<char32_t>(h - '0');
            else if (h >= 'a' && h <= 'f') cp |= static_cast<char32_t>(h - 'a' + 10);
            else if (h >= 'A' && h <= 'F') cp |= static_cast<char32_t>(h - 'A' + 10);
            else fail("bad unicode escape");
          }
          pos_ += n;
          utf8::append(out, cp);
          break;
        }
        default:
          fail(std::string("unknown escape \\") + e);
      }
    }
    if (pos_ >= s_.size()) fail("unterminated literal");
    ++pos_;  // closing quote
    return out;
  }

  Statement statement() {
    Statement st;
    skip_ws();
    st.subject = peek() == '<' ? iri() : blank();
    skip_ws();
    st.predicate = iri();
    skip_ws();
    if (peek() == '"') {
      st.object = literal();
      st.object_is_literal = true;
      if (s_.substr(pos_, 2) == "^^") {
        pos_ += 2;
        st.datatype = iri();
      } else if (peek() == '@') {
        std::size_t start = ++pos_;
        while (pos_ < s_.size() && s_[pos_] != ' ' && s_[pos_] != '\t' && s_[pos_] != '.') ++pos_;
        st.language = std::string(s_.substr(start, pos_ - start));
      }
    } else if (peek() == '<') {
      st.object = iri();
    } else if (peek() == '_') {
      st.object = blank();
    } else {
      fail("expected object");
    }
    skip_ws();
    if (peek() != '.') fail("expected '.'");
    ++pos_;
    skip_ws();
    if (!at_end() && peek() != '#') fail("trailing content");
    return st;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_;
};

std::optional<Statement> parse_numbered(std::string_view line, std::size_t line_no) {
  auto first = line.find_first_not_of(" \t\r");
  if (first == std::string_view::npos || line[first] == '#') return std::nullopt;
  if (line.back() == '\r') line.remove_suffix(1);
  return LineParser(line, line_no).statement();
}

turtle::Datatype map_datatype(const std::string& iri) {
  if (iri.size() > kXsd.size() && iri.compare(0, kXsd.size(), kXsd) == 0) {
    std::string_view local = std::string_view(iri).substr(kXsd.size());
    if (local == "date") return turtle::Datatype::Date;
    if (local == "gYear") return turtle::Datatype::GYear;
  }
  return turtle::Datatype::String;
}

}  // namespace

std::optional<Statement> parse_line(std::string_view line) { return parse_numbered(line, 0); }

std::vector<distill::RawRecord> import(std::istream& triples, std::istream& abstracts,
                                       ImportStats* stats) {
  ImportStats local;
  std::unordered_map<std::string, std::string> abstract_of;
  jsonl::Reader reader(abstracts);
  while (auto j = reader.next()) {
    abstract_of[j->at("entity").get<std::string>()] = j->value("abstract", std::string{});
  }

  std::vector<distill::RawRecord> records;
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(triples, line)) {
    ++line_no;
    auto st = parse_numbered(line, line_no);
    if (!st) continue;
    ++local.statements;
    if (!st->object_is_literal) {
      ++local.iri_objects_skipped;
      continue;
    }
    auto [it, inserted] = index.emplace(st->subject, records.size());
    if (inserted) {
      distill::RawRecord r;
      r.entity = st->subject;
      records.push_back(std::move(r));
    }
    records[it->second].triples.push_back(
        {st->predicate, st->object, map_datatype(st->datatype)});
  }

  std::vector<distill::RawRecord> joined;
  joined.reserve(records.size());
  for (auto& r : records) {
    auto a = abstract_of.find(r.entity);
    if (a == abstract_of.end() || a->second.empty()) {
      ++local.subjects_without_abstract;
      continue;
    }
    r.abstract = a->second;
    joined.push_back(std::move(r));
  }
  if (stats) *stats = local;
  return joined;
}

}  // namespace shaperel::ntriples
