#include "shaperel/turtle_light.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <set>

#include "utf8.hpp"

namespace shaperel::turtle {

namespace {

bool in(char32_t c, char32_t lo, char32_t hi) { return c >= lo && c <= hi; }

bool pn_chars_base(char32_t c) {
  return in(c, 'A', 'Z') || in(c, 'a', 'z') || in(c, 0x00C0, 0x00D6) ||
         in(c, 0x00D8, 0x00F6) || in(c, 0x00F8, 0x02FF) || in(c, 0x0370, 0x037D) ||
         in(c, 0x037F, 0x1FFF) || in(c, 0x200C, 0x200D) || in(c, 0x2070, 0x218F) ||
         in(c, 0x2C00, 0x2FEF) || in(c, 0x3001, 0xD7FF) || in(c, 0xF900, 0xFDCF) ||
         in(c, 0xFDF0, 0xFFFD) || in(c, 0x10000, 0xEFFFF);
}

bool pn_chars_u(char32_t c) { return pn_chars_base(c) || c == '_'; }

bool pn_chars(char32_t c) {
  return pn_chars_u(c) || c == '-' || in(c, '0', '9') || c == 0x00B7 ||
         in(c, 0x0300, 0x036F) || in(c, 0x203F, 0x2040);
}

bool is_hex(char c) {
  return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'F') || (c >= 'a' && c <= 'f');
}

constexpr std::string_view kLocalEscapes = "_~.-!$&'()*+,;=/?#@%";

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n'; }

// Printable ASCII minus '"' and '\'; bytes >= 0x80 are validated as UTF-8
// separately.
bool string_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '!' || (c >= 0x23 && c <= 0x5B) ||
         (c >= 0x5D && c <= 0x7E);
}

// Length of a PLX production at `pos`, or 0.
std::size_t plx_length(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return 0;
  if (s[pos] == '%') {
    if (pos + 2 < s.size() && is_hex(s[pos + 1]) && is_hex(s[pos + 2])) return 3;
    return 0;
  }
  if (s[pos] == '\\') {
    if (pos + 1 < s.size() && kLocalEscapes.find(s[pos + 1]) != std::string_view::npos) {
      return 2;
    }
  }
  return 0;
}

// Length of the longest PN_LOCAL+ prefix of s[pos..], or 0.
std::size_t scan_pn_local(std::string_view s, std::size_t pos) {
  std::size_t start = pos;
  if (std::size_t n = plx_length(s, pos)) {
    pos += n;
  } else {
    auto d = utf8::decode(s, pos);
    if (!d) return 0;
    char32_t c = d->code_point;
    if (!(pn_chars_u(c) || c == ':' || in(c, '0', '9'))) return 0;
    pos += d->length;
  }
  std::size_t last_good = pos;
  while (pos < s.size()) {
    if (std::size_t n = plx_length(s, pos)) {
      pos += n;
      last_good = pos;
      continue;
    }
    auto d = utf8::decode(s, pos);
    if (!d) break;
    char32_t c = d->code_point;
    if (c == '.') {
      pos += 1;
      continue;
    }
    if (pn_chars(c) || c == ':') {
      pos += d->length;
      last_good = pos;
      continue;
    }
    break;
  }
  return last_good - start;
}

struct RawStatement {
  std::string subject;
  std::size_t subject_offset;
  std::string predicate;  // "a" for the keyword
  bool predicate_is_keyword;
  std::size_t predicate_offset;
  std::string object;
  bool object_is_iri;
  std::size_t object_offset;
};

// Recursive-descent recognizer. Every `WS?` of the grammar accepts at most one
// whitespace character; optional groups restore the cursor when they fail.
class Parser {
 public:
  explicit Parser(std::string_view text) : in_(text) {}

  std::optional<ParseError> run(std::vector<RawStatement>& out) {
    out_ = &out;
    if (!triples()) return error();
    while (triples()) {
    }
    if (pos_ != in_.size()) {
      note("end of input");
      return error();
    }
    return std::nullopt;
  }

 private:
  void note(std::string_view what) {
    if (pos_ > furthest_) {
      furthest_ = pos_;
      expected_.clear();
    }
    if (pos_ == furthest_) expected_.insert(std::string(what));
  }

  ParseError error() const {
    ParseError e;
    e.kind = ParseError::Kind::Syntax;
    e.offset = furthest_;
    std::string joined;
    for (const auto& x : expected_) {
      if (!joined.empty()) joined += " | ";
      joined += x;
    }
    e.expected = joined;
    return e;
  }

  void ws() {
    if (pos_ < in_.size() && is_ws(in_[pos_])) ++pos_;
  }

  bool lit(char c) {
    if (pos_ < in_.size() && in_[pos_] == c) {
      ++pos_;
      return true;
    }
    note(std::string("'") + c + "'");
    return false;
  }

  bool iri(std::string& name) {
    if (pos_ >= in_.size() || in_[pos_] != ':') {
      note("iri");
      return false;
    }
    std::size_t n = scan_pn_local(in_, pos_ + 1);
    if (n == 0) {
      ++pos_;
      note("local name");
      --pos_;
      return false;
    }
    name.assign(in_.substr(pos_ + 1, n));
    pos_ += 1 + n;
    return true;
  }

  bool string(std::string& value) {
    std::size_t save = pos_;
    ws();
    if (pos_ >= in_.size() || in_[pos_] != '"') {
      note("string");
      pos_ = save;
      return false;
    }
    ++pos_;
    std::size_t begin = pos_;
    while (pos_ < in_.size()) {
      unsigned char c = static_cast<unsigned char>(in_[pos_]);
      if (c < 0x80) {
        if (!string_byte(c)) break;
        ++pos_;
        continue;
      }
      auto d = utf8::decode(in_, pos_);
      if (!d) break;
      pos_ += d->length;
    }
    std::size_t end = pos_;
    if (!lit('"')) {
      pos_ = save;
      return false;
    }
    value.assign(in_.substr(begin, end - begin));
    ws();
    return true;
  }

  bool obj(RawStatement& st) {
    std::size_t at = pos_;
    if (iri(st.object)) {
      st.object_is_iri = true;
      st.object_offset = at;
      return true;
    }
    std::size_t quote = pos_;
    if (string(st.object)) {
      st.object_is_iri = false;
      // Offset of the opening quote.
      st.object_offset = in_[quote] == '"' ? quote : quote + 1;
      return true;
    }
    return false;
  }

  bool pred(RawStatement& st) {
    std::size_t at = pos_;
    if (iri(st.predicate)) {
      st.predicate_is_keyword = false;
      st.predicate_offset = at;
      return true;
    }
    if (pos_ < in_.size() && in_[pos_] == 'a') {
      ++pos_;
      st.predicate = "a";
      st.predicate_is_keyword = true;
      st.predicate_offset = at;
      return true;
    }
    note("'a'");
    return false;
  }

  bool object_list(RawStatement proto, std::vector<RawStatement>& acc) {
    RawStatement st = proto;
    if (!obj(st)) return false;
    acc.push_back(st);
    for (;;) {
      std::size_t save = pos_;
      ws();
      if (!lit(',')) {
        pos_ = save;
        break;
      }
      ws();
      RawStatement next = proto;
      if (!obj(next)) {
        pos_ = save;
        break;
      }
      acc.push_back(next);
    }
    return true;
  }

  bool predicate_object_list(const RawStatement& subject,
                             std::vector<RawStatement>& acc) {
    RawStatement st = subject;
    if (!pred(st)) return false;
    if (!object_list(st, acc)) return false;
    for (;;) {
      std::size_t save = pos_;
      ws();
      if (!lit(';')) {
        pos_ = save;
        break;
      }
      ws();
      std::size_t group = pos_;
      std::size_t before = acc.size();
      RawStatement next = subject;
      if (pred(next)) {
        ws();
        if (!object_list(next, acc)) {
          acc.resize(before);
          pos_ = group;
        }
      } else {
        pos_ = group;
      }
    }
    return true;
  }

  bool triple(std::vector<RawStatement>& acc) {
    RawStatement st{};
    std::size_t at = pos_;
    if (!iri(st.subject)) return false;
    st.subject_offset = at;
    ws();
    return predicate_object_list(st, acc);
  }

  bool triples() {
    std::size_t save = pos_;
    std::vector<RawStatement> acc;
    ws();
    if (!triple(acc)) {
      pos_ = save;
      return false;
    }
    ws();
    if (!lit('.')) {
      pos_ = save;
      return false;
    }
    out_->insert(out_->end(), acc.begin(), acc.end());
    return true;
  }

  std::string_view in_;
  std::size_t pos_ = 0;
  std::size_t furthest_ = 0;
  std::set<std::string> expected_;
  std::vector<RawStatement>* out_ = nullptr;
};

ParseError unsupported(std::size_t offset, std::string what) {
  ParseError e;
  e.kind = ParseError::Kind::Unsupported;
  e.offset = offset;
  e.expected = std::move(what);
  return e;
}

}  // namespace

std::string_view to_string(Datatype dt) {
  switch (dt) {
    case Datatype::String:
      return "string";
    case Datatype::Date:
      return "date";
    case Datatype::GYear:
      return "gYear";
  }
  return "string";
}

std::optional<Datatype> datatype_from_string(std::string_view name) {
  if (name == "string") return Datatype::String;
  if (name == "date") return Datatype::Date;
  if (name == "gYear") return Datatype::GYear;
  return std::nullopt;
}

bool is_valid_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  int year = (s[0] - '0') * 1000 + (s[1] - '0') * 100 + (s[2] - '0') * 10 + (s[3] - '0');
  unsigned month = static_cast<unsigned>((s[5] - '0') * 10 + (s[6] - '0'));
  unsigned day = static_cast<unsigned>((s[8] - '0') * 10 + (s[9] - '0'));
  return std::chrono::year_month_day{std::chrono::year{year}, std::chrono::month{month},
                                     std::chrono::day{day}}
      .ok();
}

bool is_valid_gyear(std::string_view s) {
  return s.size() == 4 &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool conforms(std::string_view lexical, Datatype dt) {
  switch (dt) {
    case Datatype::String:
      return true;
    case Datatype::Date:
      return is_valid_date(lexical);
    case Datatype::GYear:
      return is_valid_gyear(lexical);
  }
  return false;
}

std::optional<std::string> Literal::check(std::string_view lexical, Datatype dt) {
  for (std::size_t pos = 0; pos < lexical.size();) {
    auto d = utf8::decode(lexical, pos);
    if (!d) return "invalid UTF-8 at byte " + std::to_string(pos);
    char32_t c = d->code_point;
    if (c == '"') return "double quote at byte " + std::to_string(pos);
    if (c == '\\') return "backslash at byte " + std::to_string(pos);
    if (c < 0x20 || c == 0x7F || (c >= 0x80 && c <= 0x9F)) {
      return "control character at byte " + std::to_string(pos);
    }
    pos += d->length;
  }
  if (!conforms(lexical, dt)) {
    return "'" + std::string(lexical) + "' is not a valid " + std::string(to_string(dt));
  }
  return std::nullopt;
}

Literal Literal::make(std::string lexical, Datatype dt) {
  if (auto why = check(lexical, dt)) throw InvalidLiteral(*why);
  return Literal(std::move(lexical), dt);
}

std::optional<Literal> Literal::try_make(std::string lexical, Datatype dt) {
  if (check(lexical, dt)) return std::nullopt;
  return Literal(std::move(lexical), dt);
}

Graph::Graph(std::string subject) : subject_(std::move(subject)) {
  if (!is_pn_local(subject_)) throw InvalidName("invalid subject local name '" + subject_ + "'");
}

bool Graph::insert(std::string predicate, Literal object) {
  if (!is_pn_local(predicate)) {
    throw InvalidName("invalid predicate local name '" + predicate + "'");
  }
  PredicateObject po{std::move(predicate), std::move(object)};
  auto it = std::lower_bound(entries_.begin(), entries_.end(), po);
  if (it != entries_.end() && *it == po) return false;
  entries_.insert(it, std::move(po));
  return true;
}

bool Graph::erase(const PredicateObject& po) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), po);
  if (it == entries_.end() || !(*it == po)) return false;
  entries_.erase(it);
  return true;
}

bool Graph::contains(const PredicateObject& po) const {
  return std::binary_search(entries_.begin(), entries_.end(), po);
}

std::vector<Triple> Graph::triples() const {
  std::vector<Triple> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(Triple{subject_, e.predicate, e.object});
  return out;
}

std::size_t Graph::count(std::string_view predicate) const {
  return static_cast<std::size_t>(std::count_if(
      entries_.begin(), entries_.end(),
      [&](const PredicateObject& e) { return e.predicate == predicate; }));
}

std::vector<std::string> Graph::predicates() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    if (out.empty() || out.back() != e.predicate) out.push_back(e.predicate);
  }
  return out;
}

std::string ParseError::message() const {
  std::string kind_name;
  switch (kind) {
    case Kind::Syntax:
      kind_name = "syntax error";
      break;
    case Kind::MultiSubject:
      kind_name = "multiple subjects";
      break;
    case Kind::Unsupported:
      kind_name = "unsupported construct";
      break;
  }
  return kind_name + " at offset " + std::to_string(offset) +
         (expected.empty() ? "" : ": expected " + expected);
}

ParseException::ParseException(ParseError error)
    : std::runtime_error(error.message()), error_(std::move(error)) {}

ParseResult try_parse(std::string_view text, const DatatypeHint& hint) {
  std::vector<RawStatement> statements;
  Parser parser(text);
  if (auto err = parser.run(statements)) return ParseResult{std::nullopt, std::move(err)};

  const std::string& subject = statements.front().subject;
  for (const auto& st : statements) {
    if (st.subject != subject) {
      ParseError e;
      e.kind = ParseError::Kind::MultiSubject;
      e.offset = st.subject_offset;
      e.expected = ":" + subject;
      return ParseResult{std::nullopt, std::move(e)};
    }
  }

  Graph graph(subject);
  for (const auto& st : statements) {
    if (st.predicate_is_keyword) {
      return ParseResult{std::nullopt,
                         unsupported(st.predicate_offset, "datatype property, not 'a'")};
    }
    if (st.object_is_iri) {
      return ParseResult{std::nullopt, unsupported(st.object_offset, "literal object")};
    }
    Datatype dt = Datatype::String;
    if (hint) {
      if (auto hinted = hint(st.predicate); hinted && conforms(st.object, *hinted)) {
        dt = *hinted;
      }
    }
    auto literal = Literal::try_make(st.object, dt);
    if (!literal) {
      return ParseResult{std::nullopt,
                         unsupported(st.object_offset, *Literal::check(st.object, dt))};
    }
    graph.insert(st.predicate, std::move(*literal));
  }
  return ParseResult{std::move(graph), std::nullopt};
}

Graph parse(std::string_view text, const DatatypeHint& hint) {
  auto result = try_parse(text, hint);
  if (!result) throw ParseException(*result.error);
  return std::move(*result.graph);
}

bool check_syntax(std::string_view text) { return static_cast<bool>(try_parse(text)); }

bool grammar_accepts(std::string_view text) {
  std::vector<RawStatement> statements;
  return !Parser(text).run(statements).has_value();
}

std::string serialize(const Graph& graph, std::span<const std::string> predicate_order) {
  if (graph.empty()) return {};
  std::map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < predicate_order.size(); ++i) {
    rank.emplace(predicate_order[i], i);
  }
  std::vector<std::string> predicates = graph.predicates();
  std::stable_sort(predicates.begin(), predicates.end(),
                   [&](const std::string& a, const std::string& b) {
                     auto ra = rank.find(a);
                     auto rb = rank.find(b);
                     std::size_t ia = ra == rank.end() ? rank.size() : ra->second;
                     std::size_t ib = rb == rank.end() ? rank.size() : rb->second;
                     if (ia != ib) return ia < ib;
                     return a < b;
                   });

  std::string out = ":" + graph.subject();
  bool first_predicate = true;
  for (const auto& predicate : predicates) {
    out += first_predicate ? " :" : " ; :";
    first_predicate = false;
    out += predicate;
    bool first_object = true;
    for (const auto& e : graph.entries()) {
      if (e.predicate != predicate) continue;
      out += first_object ? " \"" : " , \"";
      first_object = false;
      out += e.object.lexical();
      out += '"';
    }
  }
  out += " .";
  return out;
}

bool is_pn_local(std::string_view name) {
  return !name.empty() && scan_pn_local(name, 0) == name.size();
}

std::string encode_local_name(std::string_view raw) {
  if (raw.empty()) throw InvalidName("empty local name");
  std::string out;
  auto percent = [&](std::string_view bytes) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    for (unsigned char b : bytes) {
      out += '%';
      out += kHex[b >> 4];
      out += kHex[b & 0xF];
    }
  };
  std::size_t pos = 0;
  while (pos < raw.size()) {
    bool first = pos == 0;
    if (raw[pos] == '%' || raw[pos] == '\\') {
      if (std::size_t n = plx_length(raw, pos)) {
        out.append(raw.substr(pos, n));
        pos += n;
      } else {
        percent(raw.substr(pos, 1));
        ++pos;
      }
      continue;
    }
    auto d = utf8::decode(raw, pos);
    if (!d) {
      percent(raw.substr(pos, 1));
      ++pos;
      continue;
    }
    char32_t c = d->code_point;
    bool last = pos + d->length == raw.size();
    bool ok = first ? (pn_chars_u(c) || c == ':' || in(c, '0', '9'))
                    : (pn_chars(c) || c == ':' || (c == '.' && !last));
    if (ok) {
      out.append(raw.substr(pos, d->length));
    } else if (c < 0x80 && kLocalEscapes.find(static_cast<char>(c)) != std::string_view::npos) {
      out += '\\';
      out += static_cast<char>(c);
    } else {
      percent(raw.substr(pos, d->length));
    }
    pos += d->length;
  }
  return out;
}

std::string local_name_from_iri(std::string_view iri) {
  std::size_t cut = iri.find_last_of("/#");
  std::string_view segment = cut == std::string_view::npos ? iri : iri.substr(cut + 1);
  if (segment.empty()) segment = iri;
  return encode_local_name(segment);
}

}  // namespace shaperel::turtle
