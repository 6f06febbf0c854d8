#pragma once

// One-line, factorized, prefix-less Turtle dialect used for model output and
// dataset linearization. Only datatype-property graphs about a single subject
// are representable as a Graph.

#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shaperel::turtle {

enum class Datatype { String, Date, GYear };

std::string_view to_string(Datatype dt);
std::optional<Datatype> datatype_from_string(std::string_view name);

// YYYY-MM-DD, month 01-12, day 01-31.
bool is_valid_date(std::string_view lexical);
// Exactly four ASCII digits.
bool is_valid_gyear(std::string_view lexical);
bool conforms(std::string_view lexical, Datatype dt);

class InvalidLiteral : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidName : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Literal {
 public:
  // Throws InvalidLiteral when the lexical form cannot be written inside a
  // TurtleLight string (quote, backslash, control characters, bad UTF-8) or
  // does not conform to the datatype.
  static Literal make(std::string lexical, Datatype dt = Datatype::String);
  static std::optional<Literal> try_make(std::string lexical,
                                         Datatype dt = Datatype::String);
  // Human-readable reason why `lexical` is rejected, or nullopt when valid.
  static std::optional<std::string> check(std::string_view lexical, Datatype dt);

  const std::string& lexical() const noexcept { return lexical_; }
  Datatype datatype() const noexcept { return datatype_; }

  friend auto operator<=>(const Literal&, const Literal&) = default;
  friend bool operator==(const Literal&, const Literal&) = default;

 private:
  Literal(std::string lexical, Datatype dt)
      : lexical_(std::move(lexical)), datatype_(dt) {}

  std::string lexical_;
  Datatype datatype_;
};

// Local names are stored without the leading ':' and must satisfy PN_LOCAL.
struct PredicateObject {
  std::string predicate;
  Literal object;

  friend auto operator<=>(const PredicateObject&, const PredicateObject&) = default;
  friend bool operator==(const PredicateObject&, const PredicateObject&) = default;
};

struct Triple {
  std::string subject;
  std::string predicate;
  Literal object;

  friend auto operator<=>(const Triple&, const Triple&) = default;
  friend bool operator==(const Triple&, const Triple&) = default;
};

// Single-subject set of datatype-property triples.
class Graph {
 public:
  explicit Graph(std::string subject);

  const std::string& subject() const noexcept { return subject_; }

  // Returns false when the pair is already present.
  bool insert(std::string predicate, Literal object);
  bool insert(PredicateObject po) {
    return insert(std::move(po.predicate), std::move(po.object));
  }
  bool erase(const PredicateObject& po);
  bool contains(const PredicateObject& po) const;

  // Sorted by (predicate, object).
  const std::vector<PredicateObject>& entries() const noexcept { return entries_; }
  std::vector<Triple> triples() const;
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t count(std::string_view predicate) const;
  std::vector<std::string> predicates() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::string subject_;
  std::vector<PredicateObject> entries_;
};

struct ParseError {
  enum class Kind {
    Syntax,        // grammar rejects the text
    MultiSubject,  // more than one distinct subject
    Unsupported,   // grammatical but not a datatype-property graph
  };
  Kind kind = Kind::Syntax;
  std::size_t offset = 0;
  std::string expected;

  std::string message() const;
};

class ParseException : public std::runtime_error {
 public:
  explicit ParseException(ParseError error);
  const ParseError& error() const noexcept { return error_; }

 private:
  ParseError error_;
};

// Maps a predicate local name to the datatype its objects should carry. An
// object whose lexical form does not conform to the hinted datatype is typed
// as a plain string.
using DatatypeHint = std::function<std::optional<Datatype>(std::string_view)>;

struct ParseResult {
  std::optional<Graph> graph;
  std::optional<ParseError> error;

  explicit operator bool() const noexcept { return graph.has_value(); }
};

ParseResult try_parse(std::string_view text, const DatatypeHint& hint = {});
Graph parse(std::string_view text, const DatatypeHint& hint = {});
bool check_syntax(std::string_view text);

// Grammar acceptance only, without the single-subject / datatype-property
// restrictions that Graph construction imposes.
bool grammar_accepts(std::string_view text);

// Single line. Predicates follow `predicate_order` (unlisted predicates come
// after, lexicographically); objects of one predicate are sorted.
std::string serialize(const Graph& graph,
                      std::span<const std::string> predicate_order = {});

bool is_pn_local(std::string_view name);
// Escapes or percent-encodes `raw` so that it satisfies PN_LOCAL. Existing
// %XX and \X escapes are kept verbatim, so encoding is idempotent.
std::string encode_local_name(std::string_view raw);
// Last path or fragment segment of `iri`, encoded with encode_local_name.
std::string local_name_from_iri(std::string_view iri);

}  // namespace shaperel::turtle
