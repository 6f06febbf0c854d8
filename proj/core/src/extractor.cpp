#include "shaperel/extractor.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <unicode/uchar.h>

#include "shaperel/jsonl.hpp"
#include "shaperel/rendering.hpp"
#include "utf8.hpp"

namespace shaperel::extract {

using turtle::Datatype;
using turtle::Graph;
using turtle::Literal;

Prompt build_prompt(const Example& ex) {
  if (ex.entity.empty()) throw EmptyField("prompt needs an entity");
  if (ex.abstract.empty()) throw EmptyField("prompt needs an abstract for " + ex.entity);
  std::string subject = distill::subject_for_entity(ex.entity);
  return Prompt{":" + subject + " : " + ex.abstract, subject};
}

Prediction classify(std::string entity, std::string raw, std::string_view expected_subject,
                    const turtle::DatatypeHint& hint) {
  Prediction p;
  p.entity = std::move(entity);
  p.raw = std::move(raw);
  auto result = turtle::try_parse(p.raw, hint);
  if (result) {
    p.parse_ok = true;
    p.uri_ok = result.graph->subject() == expected_subject;
    p.parsed = std::move(result.graph);
  }
  return p;
}

nlohmann::json prediction_to_json(const Prediction& p) {
  nlohmann::json j = {{"entity", p.entity},
                      {"raw", p.raw},
                      {"parse_ok", p.parse_ok},
                      {"uri_ok", p.uri_ok}};
  if (!p.note.empty()) j["note"] = p.note;
  if (p.fold >= 0) j["fold"] = p.fold;
  return j;
}

Prediction prediction_from_json(const nlohmann::json& j, const turtle::DatatypeHint& hint) {
  std::string entity = j.at("entity").get<std::string>();
  std::string subject = distill::subject_for_entity(entity);
  Prediction p = classify(std::move(entity), j.value("raw", std::string{}), subject, hint);
  p.note = j.value("note", std::string{});
  p.fold = j.value("fold", -1);
  return p;
}

void write_predictions(const std::filesystem::path& path, std::span<const Prediction> preds) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& p : preds) jsonl::write(out, prediction_to_json(p));
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path,
                                         const turtle::DatatypeHint& hint) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<Prediction> out;
  jsonl::Reader reader(in);
  while (auto j = reader.next()) out.push_back(prediction_from_json(*j, hint));
  return out;
}

// ---------------------------------------------------------------------------
// Heuristic extraction

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_alnum(char c) { return is_digit(c) || is_alpha(c); }

std::size_t digits_at(std::string_view s, std::size_t i) {
  std::size_t n = 0;
  while (i + n < s.size() && is_digit(s[i + n])) ++n;
  return n;
}

std::size_t letters_at(std::string_view s, std::size_t i) {
  std::size_t n = 0;
  while (i + n < s.size() && is_alpha(s[i + n])) ++n;
  return n;
}

int to_int(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

std::string pad2(int v) { return (v < 10 ? "0" : "") + std::to_string(v); }

struct Mention {
  std::size_t begin = 0;
  std::size_t end = 0;
  Literal value;
};

std::optional<Literal> make_date(std::string_view year, int month, int day) {
  return Literal::try_make(std::string(year) + "-" + pad2(month) + "-" + pad2(day), Datatype::Date);
}

// Date or year mention starting exactly at `i`.
std::optional<Mention> mention_at(std::string_view s, std::size_t i) {
  if (i > 0 && is_alnum(s[i - 1])) return std::nullopt;
  auto end_ok = [&](std::size_t e) { return e >= s.size() || !is_alnum(s[e]); };

  if (is_digit(s[i])) {
    std::size_t d = digits_at(s, i);
    // YYYY-MM-DD
    if (d == 4 && i + 10 <= s.size() && s[i + 4] == '-' && digits_at(s, i + 5) == 2 &&
        s[i + 7] == '-' && digits_at(s, i + 8) == 2 && end_ok(i + 10)) {
      if (auto lit = Literal::try_make(std::string(s.substr(i, 10)), Datatype::Date)) {
        return Mention{i, i + 10, *lit};
      }
    }
    // D Month YYYY
    if ((d == 1 || d == 2) && i + d < s.size() && s[i + d] == ' ') {
      std::size_t m = i + d + 1;
      std::size_t ml = letters_at(s, m);
      auto month = rendering::month_number(s.substr(m, ml));
      std::size_t y = m + ml + 1;
      if (ml > 0 && month && y < s.size() && s[y - 1] == ' ' && digits_at(s, y) == 4 &&
          end_ok(y + 4)) {
        if (auto lit = make_date(s.substr(y, 4), *month, to_int(s.substr(i, d)))) {
          return Mention{i, y + 4, *lit};
        }
      }
    }
    if (d == 4 && end_ok(i + 4)) {
      return Mention{i, i + 4, Literal::make(std::string(s.substr(i, 4)), Datatype::GYear)};
    }
    return std::nullopt;
  }

  if (is_alpha(s[i])) {
    // Month D, YYYY
    std::size_t ml = letters_at(s, i);
    auto month = rendering::month_number(s.substr(i, ml));
    if (!month) return std::nullopt;
    std::size_t dpos = i + ml + 1;
    if (dpos >= s.size() || s[dpos - 1] != ' ') return std::nullopt;
    std::size_t d = digits_at(s, dpos);
    if (d != 1 && d != 2) return std::nullopt;
    std::size_t y = dpos + d + 2;
    if (y > s.size() || s.substr(dpos + d, 2) != ", " || digits_at(s, y) != 4 || !end_ok(y + 4)) {
      return std::nullopt;
    }
    if (auto lit = make_date(s.substr(y, 4), *month, to_int(s.substr(dpos, d)))) {
      return Mention{i, y + 4, *lit};
    }
  }
  return std::nullopt;
}

std::optional<Mention> first_mention(std::string_view s, std::size_t from = 0) {
  for (std::size_t i = from; i < s.size(); ++i) {
    if (auto m = mention_at(s, i)) return m;
  }
  return std::nullopt;
}

// Start of the word `word` at or after `from`, on word boundaries.
std::optional<std::size_t> find_word(std::string_view s, std::string_view word,
                                     std::size_t from = 0) {
  while (from < s.size()) {
    auto at = s.find(word, from);
    if (at == std::string_view::npos) return std::nullopt;
    bool left = at == 0 || !is_alnum(s[at - 1]);
    std::size_t e = at + word.size();
    bool right = e >= s.size() || !is_alnum(s[e]);
    if (left && right) return at;
    from = at + 1;
  }
  return std::nullopt;
}

// First mention after `cue`, restricted to the sentence containing the cue.
std::optional<Literal> after_cue(std::string_view s, std::string_view cue) {
  auto at = find_word(s, cue);
  if (!at) return std::nullopt;
  std::size_t start = *at + cue.size();
  std::size_t stop = s.find(". ", start);
  std::string_view sentence = s.substr(0, stop == std::string_view::npos ? s.size() : stop);
  if (auto m = first_mention(sentence, start)) return m->value;
  return std::nullopt;
}

bool starts_upper(std::string_view token) {
  auto d = utf8::decode(token, 0);
  return d && u_isupper(static_cast<UChar32>(d->code_point));
}

bool is_particle(std::string_view token) {
  static constexpr std::string_view kParticles[] = {"de",  "da", "di", "del", "van", "von",
                                                     "der", "y",  "la", "le",  "bin", "al"};
  return std::find(std::begin(kParticles), std::end(kParticles), token) != std::end(kParticles);
}

// Run of capitalized words (with lowercase particles inside) at the start of
// `s`, ending at ',', ';', ')', '.' or the first other word.
std::optional<std::string> name_run(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t sp = s.find(' ', pos);
    std::string_view token = s.substr(pos, sp == std::string_view::npos ? s.npos : sp - pos);
    bool last = false;
    while (!token.empty() && std::string_view(",;).").find(token.back()) != std::string_view::npos) {
      token.remove_suffix(1);
      last = true;
    }
    if (token.empty()) break;
    if (token.find('(') != std::string_view::npos) break;
    bool upper = starts_upper(token) && !rendering::month_number(token);
    if (!upper && !(is_particle(token) && !tokens.empty())) break;
    tokens.push_back(token);
    if (last || sp == std::string_view::npos) break;
    pos = sp + 1;
  }
  while (!tokens.empty() && is_particle(tokens.back())) tokens.pop_back();
  if (tokens.empty()) return std::nullopt;
  std::string out(tokens.front());
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    out += ' ';
    out += tokens[i];
  }
  return out;
}

std::optional<std::string> leading_label(std::string_view s) {
  std::size_t end = s.size();
  bool found = false;
  for (std::string_view delim : {" (", ",", " is ", " was "}) {
    auto at = s.find(delim);
    if (at != std::string_view::npos && at < end) {
      end = at;
      found = true;
    }
  }
  if (!found) return std::nullopt;
  std::string_view label = s.substr(0, end);
  while (!label.empty() && label.back() == ' ') label.remove_suffix(1);
  while (!label.empty() && label.front() == ' ') label.remove_prefix(1);
  if (label.empty() || !starts_upper(label)) return std::nullopt;
  if (std::count(label.begin(), label.end(), ' ') >= 8) return std::nullopt;
  return std::string(label);
}

struct Separator {
  std::size_t at;
  std::size_t length;
};

std::optional<Separator> lifespan_dash(std::string_view p) {
  std::optional<Separator> best;
  for (std::string_view dash : {"\xE2\x80\x93", "\xE2\x80\x94", " - "}) {
    auto at = p.find(dash);
    if (at != std::string_view::npos && (!best || at < best->at)) best = Separator{at, dash.size()};
  }
  return best;
}

}  // namespace

HeuristicExtractor::HeuristicExtractor(shape::Shape shape)
    : shape_(std::move(shape)), hint_(shape_.vocabulary().datatype_hint()) {}

Graph HeuristicExtractor::extract_graph(const Example& ex) const {
  const auto& v = shape_.vocabulary();
  Graph g(distill::subject_for_entity(ex.entity));
  auto put = [&](std::string_view name, const Literal& value) {
    if (v.index_of(name)) g.insert(std::string(name), value);
  };
  auto put_string = [&](std::string_view name, const std::string& text) {
    if (auto lit = Literal::try_make(text)) put(name, *lit);
  };

  const std::string text = rendering::nfc(ex.abstract);
  const std::string_view s = text;

  if (auto label = leading_label(s)) put_string("label", *label);

  std::optional<Literal> birth;
  std::optional<Literal> death;
  std::optional<std::string_view> paren;
  if (auto open = s.find('('); open != std::string_view::npos) {
    auto close = s.find(')', open);
    paren = s.substr(open + 1, close == std::string_view::npos ? s.npos : close - open - 1);
  }
  if (paren) {
    if (auto dash = lifespan_dash(*paren)) {
      if (auto m = first_mention(paren->substr(0, dash->at))) birth = m->value;
      if (auto m = first_mention(paren->substr(dash->at + dash->length))) death = m->value;
    } else {
      birth = after_cue(*paren, "born");
      death = after_cue(*paren, "died");
    }
    if (auto at = find_word(*paren, "born")) {
      if (auto name = name_run(paren->substr(std::min(paren->size(), *at + 5)))) {
        put_string("birthName", *name);
      }
    }
  } else {
    birth = after_cue(s, "born");
    death = after_cue(s, "died");
  }

  auto put_time = [&](const std::optional<Literal>& value, std::string_view date_name,
                      std::string_view year_name) {
    if (!value) return;
    if (value->datatype() == Datatype::Date) {
      put(date_name, *value);
      put(year_name, Literal::make(value->lexical().substr(0, 4), Datatype::GYear));
    } else {
      put(year_name, *value);
    }
  };
  put_time(birth, "birthDate", "birthYear");
  put_time(death, "deathDate", "deathYear");

  for (std::string_view cue : {"better known as ", "also known as ", "known professionally as "}) {
    auto at = s.find(cue);
    if (at == std::string_view::npos) continue;
    if (auto alias = name_run(s.substr(at + cue.size()))) {
      put_string("alias", *alias);
      break;
    }
  }
  return g;
}

Prediction HeuristicExtractor::extract(const Example& ex) const {
  Graph g = extract_graph(ex);
  const auto names = shape_.vocabulary().names();
  std::string raw = turtle::serialize(g, names);
  return classify(ex.entity, std::move(raw), g.subject(), hint_);
}

// ---------------------------------------------------------------------------
// Remote extraction

RemoteExtractor::RemoteExtractor(RemoteConfig config, shape::Shape shape)
    : config_(std::move(config)), hint_(shape.vocabulary().datatype_hint()) {
  const std::string& url = config_.endpoint;
  constexpr std::string_view kScheme = "http://";
  if (url.rfind(kScheme, 0) != 0) {
    throw std::invalid_argument("endpoint must be an http:// URL: '" + url + "'");
  }
  auto slash = url.find('/', kScheme.size());
  scheme_host_port_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url.substr(slash);
  if (scheme_host_port_.size() == kScheme.size()) {
    throw std::invalid_argument("endpoint has no host: '" + url + "'");
  }
  if (config_.parallelism == 0) config_.parallelism = 1;
}

Prediction RemoteExtractor::extract(const Example& ex) const {
  Prompt prompt = build_prompt(ex);
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);

  nlohmann::json body = {{"prompt", prompt.text}};
  auto res = client.Post(path_, body.dump(), "application/json");
  std::string raw;
  std::string note;
  if (!res) {
    note = "transport error: " + httplib::to_string(res.error());
  } else if (res->status < 200 || res->status >= 300) {
    note = "HTTP " + std::to_string(res->status);
  } else {
    raw = res->body;
  }
  Prediction p = classify(ex.entity, std::move(raw), prompt.subject, hint_);
  p.note = std::move(note);
  return p;
}

std::vector<Prediction> extract_all(const Extractor& extractor,
                                    std::span<const Example> examples,
                                    std::size_t parallelism) {
  std::vector<Prediction> out(examples.size());
  std::size_t workers = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(1, examples.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < examples.size(); ++i) out[i] = extractor.extract(examples[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < examples.size(); i = next++) {
          try {
            out[i] = extractor.extract(examples[i]);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = examples.size();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace shaperel::extract
