#include "fixtures.hpp"

#include <atomic>
#include <unistd.h>

#ifndef SHAPEREL_DATA_DIR
#error "SHAPEREL_DATA_DIR must be defined"
#endif
#ifndef SHAPEREL_TEST_TMP
#error "SHAPEREL_TEST_TMP must be defined"
#endif

namespace shaperel::support {

using turtle::Datatype;
using turtle::Graph;
using turtle::Literal;

std::filesystem::path data_dir() { return SHAPEREL_DATA_DIR; }

std::filesystem::path fixture(const std::string& name) { return data_dir() / "fixtures" / name; }

std::filesystem::path temp_dir(const std::string& name) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::path(SHAPEREL_TEST_TMP) /
             (name + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

const std::vector<TopPattern>& reference_top10() {
  static const std::vector<TopPattern> top = {
      {{"label", "birthDate", "birthYear"}, 21.6, true},
      {{"label"}, 15.5, false},
      {{"birthYear"}, 14.4, false},
      {{"birthDate", "birthYear"}, 12.4, false},
      {{"label", "birthDate", "birthYear", "deathYear", "deathDate"}, 8.1, true},
      {{"birthDate", "birthYear", "deathYear", "deathDate"}, 6.6, false},
      {{"birthYear", "deathYear"}, 6.1, false},
      {{"label", "birthYear"}, 2.4, true},
      {{"birthDate", "birthYear", "birthName"}, 1.7, false},
      {{"birthDate", "birthYear", "deathYear", "birthName", "deathDate"}, 1.6, false},
  };
  return top;
}

std::vector<WeightedPattern> reference_distribution(const shape::Shape& s) {
  const auto& v = s.vocabulary();
  std::vector<WeightedPattern> out;
  std::set<shape::Pattern> used;
  double top_mass = 0;
  for (const auto& t : reference_top10()) {
    shape::Pattern p(v.size());
    for (const auto& name : t.properties) p.set(*v.index_of(name));
    out.push_back({p, t.percent / 100.0});
    used.insert(p);
    top_mass += t.percent / 100.0;
  }
  std::vector<shape::Pattern> tail;
  std::size_t valid = 0;
  std::size_t invalid = 0;
  for (const auto& p : shape::powerset(v)) {
    if (p.empty() || used.count(p)) continue;
    if (shape::pattern_valid(p, s)) {
      if (valid < 44) {
        tail.push_back(p);
        ++valid;
      }
    } else if (invalid < 16) {
      tail.push_back(p);
      ++invalid;
    }
  }
  const double each = (1.0 - top_mass) / static_cast<double>(tail.size());
  for (const auto& p : tail) out.push_back({p, each});
  return out;
}

namespace {

const std::vector<std::string>& given_names() {
  static const std::vector<std::string> names = {"Anna", "Bruno", "Chloé", "Dmitri", "Elena",
                                                 "Farid", "Greta", "Hugo", "Inès", "Jonas"};
  return names;
}

std::string random_date(sampling::Rng& rng, int year) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, static_cast<int>(rng.below(12)) + 1,
                static_cast<int>(rng.below(28)) + 1);
  return buf;
}

}  // namespace

Graph graph_for_pattern(const std::string& subject, const shape::Pattern& p,
                        const shape::PropertyVocabulary& v, sampling::Rng& rng) {
  Graph g(subject);
  const int birth = 1800 + static_cast<int>(rng.below(200));
  const int death = birth + 20 + static_cast<int>(rng.below(80));
  const std::string name = given_names()[rng.below(given_names().size())];
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!p.test(i)) continue;
    const auto& spec = v.at(i);
    const bool is_death = spec.name.rfind("death", 0) == 0;
    const int year = is_death ? death : birth;
    switch (spec.datatype) {
      case Datatype::Date:
        g.insert(spec.name, Literal::make(random_date(rng, year), Datatype::Date));
        break;
      case Datatype::GYear:
        g.insert(spec.name, Literal::make(std::to_string(year), Datatype::GYear));
        break;
      case Datatype::String:
        g.insert(spec.name, Literal::make(name + " " + spec.name));
        break;
    }
  }
  return g;
}

std::vector<distill::Example> pattern_store(std::size_t n, const std::vector<WeightedPattern>& dist,
                                            const shape::Shape& s, std::uint64_t seed) {
  sampling::Rng rng(seed);
  std::vector<double> cumulative;
  double total = 0;
  for (const auto& w : dist) cumulative.push_back(total += w.probability);
  std::vector<distill::Example> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.unit() * total;
    std::size_t k = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    if (k >= dist.size()) k = dist.size() - 1;
    char entity[64];
    std::snprintf(entity, sizeof entity, "http://example.org/person/P%06zu", i);
    auto ex = distill::Example::make(entity, "abstract");
    ex.graph = graph_for_pattern(ex.graph.subject(), dist[k].pattern, s.vocabulary(), rng);
    out.push_back(std::move(ex));
  }
  return out;
}

std::string random_local_name(sampling::Rng& rng) {
  static const std::vector<std::string> first = {"a", "B", "_", "x", "Émile", "日本", "9", ":", "%41",
                                                 "\\~"};
  static const std::vector<std::string> rest = {"a", "Z", "0", "-", "_", "·", "é", "%2F", "\\.",
                                                "\\/", ":", "\xCC\x81"};
  std::string out = first[rng.below(first.size())];
  std::size_t len = rng.below(8);
  for (std::size_t i = 0; i < len; ++i) out += rest[rng.below(rest.size())];
  // '.' is allowed inside a name but not at its end.
  if (rng.below(4) == 0) out += ".x";
  return out;
}

namespace {

std::string random_string_literal(sampling::Rng& rng) {
  static const std::vector<std::string> pieces = {
      "a", "Z", " ", "!", "#", "$", "[", "]", "~", "'", "1999", "é", "ß", "日本語", "😀",
      "-", "(", ")", ",", ";", ".", ":"};
  std::string out;
  std::size_t len = rng.below(10);
  for (std::size_t i = 0; i < len; ++i) out += pieces[rng.below(pieces.size())];
  return out;
}

}  // namespace

Graph random_graph(sampling::Rng& rng, const shape::PropertyVocabulary& v) {
  Graph g(random_local_name(rng));
  std::size_t predicates = 1 + rng.below(5);
  for (std::size_t k = 0; k < predicates; ++k) {
    bool vocabulary = rng.below(3) != 0;
    std::size_t objects = 1 + rng.below(3);
    if (vocabulary) {
      const auto& spec = v.at(rng.below(v.size()));
      for (std::size_t o = 0; o < objects; ++o) {
        switch (spec.datatype) {
          case Datatype::Date:
            g.insert(spec.name,
                     Literal::make(random_date(rng, 1000 + static_cast<int>(rng.below(1000))),
                                   Datatype::Date));
            break;
          case Datatype::GYear:
            g.insert(spec.name,
                     Literal::make(std::to_string(1000 + rng.below(9000)), Datatype::GYear));
            break;
          case Datatype::String:
            if (auto lit = Literal::try_make(random_string_literal(rng))) g.insert(spec.name, *lit);
            break;
        }
      }
    } else {
      std::string name = random_local_name(rng);
      if (v.index_of(name)) continue;
      for (std::size_t o = 0; o < objects; ++o) {
        if (auto lit = Literal::try_make(random_string_literal(rng))) g.insert(name, *lit);
      }
    }
  }
  if (g.empty()) g.insert("label", Literal::make("fallback"));
  return g;
}

std::vector<Mutation> mutate(const std::string& valid, sampling::Rng& rng, std::size_t count) {
  std::vector<Mutation> out;
  const auto dot = valid.rfind('.');
  const auto first_quote = valid.find('"');
  const auto first_space = valid.find(' ');
  for (std::size_t i = 0; out.size() < count; ++i) {
    switch (i % 10) {
      case 0:
        out.push_back({valid.substr(0, dot), "missing final dot"});
        break;
      case 1: {
        std::string t = valid;
        t.insert(first_quote + 1 + rng.below(2), "\"");
        out.push_back({t, "stray quote inside a literal"});
        break;
      }
      case 2:
        out.push_back({valid + " :Other :label \"x\" .", "second subject"});
        break;
      case 3:
        out.push_back({"<" + valid.substr(1), "subject without ':'"});
        break;
      case 4: {
        std::string t = valid;
        t.insert(first_space, "  ");
        out.push_back({t, "two whitespace characters in one WS slot"});
        break;
      }
      case 5: {
        std::string t = valid;
        t.erase(valid.rfind('"'), 1);
        out.push_back({t, "unterminated literal"});
        break;
      }
      case 6:
        out.push_back({valid + "\n", "trailing newline after the final dot"});
        break;
      case 7: {
        std::string t = valid;
        t.insert(first_quote + 1, "\\");
        out.push_back({t, "backslash in a literal"});
        break;
      }
      case 8:
        out.push_back({"@prefix : <http://x/> . " + valid, "prefix directive"});
        break;
      case 9: {
        std::string t = valid;
        t.replace(dot, 1, ";");
        out.push_back({t, "dot replaced by ';' at end of input"});
        break;
      }
    }
  }
  return out;
}

}  // namespace shaperel::support
