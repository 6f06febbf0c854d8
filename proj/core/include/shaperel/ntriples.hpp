#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shaperel/distiller.hpp"

namespace shaperel::ntriples {

struct Statement {
  std::string subject;    // IRI without brackets, or _:label
  std::string predicate;  // IRI
  std::string object;     // IRI, blank node or unescaped literal lexical form
  bool object_is_literal = false;
  std::string datatype;  // IRI, empty for plain literals
  std::string language;
};

// nullopt for blank and comment lines; throws jsonl::FormatError (line 0) on
// malformed input.
std::optional<Statement> parse_line(std::string_view line);

struct ImportStats {
  std::size_t statements = 0;
  std::size_t iri_objects_skipped = 0;
  std::size_t subjects_without_abstract = 0;
};

// Groups literal-valued statements by subject and joins abstracts from a JSONL
// stream of {"entity": IRI, "abstract": text}. Records follow the order in
// which subjects first appear.
std::vector<distill::RawRecord> import(std::istream& triples, std::istream& abstracts,
                                       ImportStats* stats = nullptr);

}  // namespace shaperel::ntriples
