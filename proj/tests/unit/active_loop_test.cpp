#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include "fixtures.hpp"
#include "shaperel/active_loop.hpp"
#include "shaperel/jsonl.hpp"

namespace {

using namespace shaperel;
using active::Category;
using active::Judgement;
using active::Kind;
using active::Polarity;
using turtle::Datatype;
using turtle::Literal;

const shape::Shape& person() {
  static const shape::Shape s = shape::person_shape();
  return s;
}

distill::Example example(const std::string& local, const std::string& abstract,
                         std::vector<std::tuple<std::string, std::string, Datatype>> triples) {
  auto ex = distill::Example::make("http://dbpedia.org/resource/" + local, abstract);
  for (auto& [p, o, dt] : triples) ex.add(p, Literal::make(o, dt));
  return ex;
}

turtle::PredicateObject po(const std::string& p, const std::string& o,
                           Datatype dt = Datatype::String) {
  return {p, Literal::make(o, dt)};
}

// Ann: the model adds a birth date that the abstract supports.
// Ben: the model output does not parse; the expected label is wrong.
// Cat: the model gives a wrong death year.
struct Loop {
  sampling::Dataset dataset;
  std::vector<eval::PairDiff> diffs;
  std::vector<active::ReviewItem> items;

  Loop() {
    dataset.name = "d1";
    dataset.seed = 7;
    dataset.examples = {
        example("Ann", "Ann (born 2 January 1950) is a poet.",
                {{"label", "Ann", Datatype::String}, {"birthYear", "1950", Datatype::GYear}}),
        example("Ben", "The Ben river flows north.", {{"label", "Ben", Datatype::String}}),
        example("Cat", "Cat (1920-2000) was a judge.",
                {{"label", "Cat", Datatype::String}, {"deathYear", "2000", Datatype::GYear}}),
    };
    const auto hint = person().vocabulary().datatype_hint();
    std::vector<extract::Prediction> preds = {
        extract::classify(dataset.examples[0].entity,
                          ":Ann :label \"Ann\" ; :birthDate \"1950-01-02\" ; :birthYear \"1950\" .",
                          "Ann", hint),
        extract::classify(dataset.examples[1].entity, "no graph", "Ben", hint),
        extract::classify(dataset.examples[2].entity, ":Cat :label \"Cat\" ; :deathYear \"2001\" .",
                          "Cat", hint),
    };
    diffs = eval::diff_all(dataset.examples, preds, person().vocabulary());
    items = active::collect(diffs, dataset, "m");
  }

  const active::ReviewItem& find(const std::string& local, Kind kind) const {
    for (const auto& i : items) {
      if (i.entity == "http://dbpedia.org/resource/" + local && i.kind == kind) return i;
    }
    throw std::runtime_error("no item");
  }

  std::map<std::string, Judgement> judgements() const {
    std::map<std::string, Judgement> out;
    auto put = [&](const active::ReviewItem& i, Polarity p, std::optional<Category> c = {}) {
      out[i.id] = Judgement{i.id, p, c, "ann", ""};
    };
    put(find("Ann", Kind::FP), Polarity::Positive);
    put(find("Ben", Kind::FN), Polarity::Negative);
    put(find("Cat", Kind::FP), Polarity::Negative, Category::WV);
    put(find("Cat", Kind::FN), Polarity::Positive);
    return out;
  }
};

TEST(ActiveLoop, CategoryCodesRoundTrip) {
  ASSERT_EQ(active::all_categories().size(), 9u);
  for (Category c : active::all_categories()) {
    EXPECT_EQ(active::category_from_string(active::to_string(c)), c);
    EXPECT_FALSE(active::describe(c).empty());
  }
  EXPECT_FALSE(active::category_from_string("XX"));
  EXPECT_FALSE(active::category_from_string("wv"));
  EXPECT_EQ(active::polarity_from_string("+"), Polarity::Positive);
  EXPECT_FALSE(active::polarity_from_string("plus"));
}

TEST(ActiveLoop, ItemIdsAreStableAndDistinct) {
  auto t = po("label", "Ann");
  auto id = active::item_id("m", "http://x/A", Kind::FP, t);
  EXPECT_EQ(id.size(), 16u);
  EXPECT_EQ(id, active::item_id("m", "http://x/A", Kind::FP, t));
  std::set<std::string> ids = {
      id,
      active::item_id("m2", "http://x/A", Kind::FP, t),
      active::item_id("m", "http://x/B", Kind::FP, t),
      active::item_id("m", "http://x/A", Kind::FN, t),
      active::item_id("m", "http://x/A", Kind::FP, po("alias", "Ann")),
      active::item_id("m", "http://x/A", Kind::FP, po("birthYear", "1950", Datatype::GYear)),
      active::item_id("m", "http://x/A", Kind::FP, po("birthYear", "1950")),
      active::item_id("m", "http://x/AF", Kind::FP, po("P", "Ann")),
  };
  EXPECT_EQ(ids.size(), 8u);
}

TEST(ActiveLoop, CollectBuildsOneItemPerErrorTriple) {
  Loop loop;
  ASSERT_EQ(loop.items.size(), 4u);
  EXPECT_EQ(loop.find("Ann", Kind::FP).triple, po("birthDate", "1950-01-02", Datatype::Date));
  EXPECT_EQ(loop.find("Ben", Kind::FN).triple, po("label", "Ben"));
  EXPECT_EQ(loop.find("Cat", Kind::FP).triple, po("deathYear", "2001", Datatype::GYear));
  EXPECT_EQ(loop.find("Cat", Kind::FN).triple, po("deathYear", "2000", Datatype::GYear));
  EXPECT_EQ(loop.find("Ann", Kind::FP).abstract, "Ann (born 2 January 1950) is a poet.");
  EXPECT_EQ(loop.find("Ann", Kind::FP).folds, std::vector<int>{-1});
  for (std::size_t i = 1; i < loop.items.size(); ++i) {
    EXPECT_LE(loop.items[i - 1].entity, loop.items[i].entity);
  }
}

TEST(ActiveLoop, CollectMergesFoldsOfTheSameTriple) {
  Loop loop;
  auto a = loop.diffs;
  auto b = loop.diffs;
  for (auto& d : a) d.fold = 0;
  for (auto& d : b) d.fold = 2;
  std::vector<eval::PairDiff> all = a;
  all.insert(all.end(), b.begin(), b.end());
  auto items = active::collect(all, loop.dataset, "m");
  ASSERT_EQ(items.size(), 4u);
  for (const auto& i : items) EXPECT_EQ(i.folds, (std::vector<int>{0, 2}));
}

TEST(ActiveLoop, CategoryRequiredExactlyOnWrongFalsePositives) {
  Judgement j{"x", Polarity::Negative, std::nullopt, "", ""};
  EXPECT_THROW(active::check_judgement(Kind::FP, j), active::MissingCategory);
  EXPECT_NO_THROW(active::check_judgement(Kind::FN, j));
  j.category = Category::FH;
  EXPECT_NO_THROW(active::check_judgement(Kind::FP, j));
  EXPECT_THROW(active::check_judgement(Kind::FN, j), active::MissingCategory);
  j.polarity = Polarity::Positive;
  EXPECT_THROW(active::check_judgement(Kind::FP, j), active::MissingCategory);
}

TEST(ActiveLoop, SessionJudgeAndRevoke) {
  Loop loop;
  active::AnnotationSession session("d1", "m", loop.items);
  EXPECT_EQ(session.total(), 4u);
  const auto& fp = loop.find("Ann", Kind::FP);
  session.judge({fp.id, Polarity::Positive, std::nullopt, "ann", "t1"});
  EXPECT_EQ(session.judged(), 1u);
  EXPECT_EQ(session.pending().size(), 3u);
  EXPECT_EQ(session.pending(1).size(), 1u);
  EXPECT_THROW(session.judge({fp.id, Polarity::Negative, Category::FH, "", ""}),
               active::AlreadyJudged);
  EXPECT_THROW(session.judge({"0000000000000000", Polarity::Positive, std::nullopt, "", ""}),
               active::UnknownItem);
  const auto& cat = loop.find("Cat", Kind::FP);
  EXPECT_THROW(session.judge({cat.id, Polarity::Negative, std::nullopt, "", ""}),
               active::MissingCategory);
  EXPECT_EQ(session.judged(), 1u);
  session.revoke(fp.id);
  EXPECT_FALSE(session.judgement(fp.id));
  EXPECT_THROW(session.revoke(fp.id), active::NotJudged);
  EXPECT_THROW(session.revoke("ffffffffffffffff"), active::UnknownItem);
  session.judge({fp.id, Polarity::Negative, Category::LCE, "ann", ""});
  EXPECT_EQ(session.judgement(fp.id)->category, Category::LCE);
}

TEST(ActiveLoop, LogReplayRestoresCurrentJudgements) {
  Loop loop;
  auto log = support::temp_dir("log") / "judgements.jsonl";
  const auto& ann = loop.find("Ann", Kind::FP);
  const auto& ben = loop.find("Ben", Kind::FN);
  {
    active::AnnotationSession session("d1", "m", loop.items, log);
    session.judge({ann.id, Polarity::Positive, std::nullopt, "ann", "t1"});
    session.judge({ben.id, Polarity::Negative, std::nullopt, "ann", "t2"});
    session.revoke(ann.id, "ann");
    session.judge({ann.id, Polarity::Negative, Category::TMI, "bob", "t3"});
  }
  active::AnnotationSession reopened("d1", "m", loop.items, log);
  EXPECT_EQ(reopened.judged(), 2u);
  EXPECT_EQ(*reopened.judgement(ann.id), (Judgement{ann.id, Polarity::Negative, Category::TMI, "bob", "t3"}));
  EXPECT_EQ(reopened.judgement(ben.id)->timestamp, "t2");

  std::ifstream in(log);
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, 4u);

  std::vector<active::ReviewItem> fewer = {ben};
  active::AnnotationSession narrowed("d1", "m", fewer, log);
  EXPECT_EQ(narrowed.judged(), 1u);

  std::ofstream(log, std::ios::app) << R"({"op":"rename","id":"x"})" << "\n";
  EXPECT_THROW(active::AnnotationSession("d1", "m", loop.items, log), jsonl::FormatError);
}

TEST(ActiveLoop, ConcurrentJudgementsAreAllRecorded) {
  std::vector<active::ReviewItem> items;
  for (int i = 0; i < 64; ++i) {
    auto t = po("label", "N" + std::to_string(i));
    items.push_back({active::item_id("m", "http://x/E", Kind::FN, t), "http://x/E", "a", t,
                     Kind::FN, {-1}, "m"});
  }
  auto log = support::temp_dir("concurrent") / "log.jsonl";
  active::AnnotationSession session("d", "m", items, log);
  std::vector<std::thread> threads;
  for (int w = 0; w < 4; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t i = static_cast<std::size_t>(w); i < items.size(); i += 4) {
        session.judge({items[i].id, Polarity::Positive, std::nullopt, "", ""});
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(session.judged(), 64u);
  EXPECT_EQ(active::AnnotationSession("d", "m", items, log).judgements(), session.judgements());
}

TEST(ActiveLoop, GoldCorrectionAppliesJudgements) {
  Loop loop;
  auto result = active::correct(loop.dataset, loop.items, loop.judgements());
  const auto& gold = result.gold;
  EXPECT_EQ(gold.name, "d1+");
  EXPECT_EQ(gold.seed, 7u);
  ASSERT_EQ(gold.size(), 2u);
  EXPECT_EQ(turtle::serialize(gold.examples[0].graph, person().vocabulary().names()),
            ":Ann :label \"Ann\" ; :birthDate \"1950-01-02\" ; :birthYear \"1950\" .");
  EXPECT_EQ(gold.examples[0].provenance_of(po("birthDate", "1950-01-02", Datatype::Date)),
            (distill::Provenance{distill::Source::Annotated, true}));
  EXPECT_EQ(gold.examples[1].graph, loop.dataset.examples[2].graph);

  const auto& c = result.correction;
  EXPECT_EQ(c.source_dataset, "d1");
  EXPECT_EQ(c.removed, (std::vector<active::CorrectedTriple>{
                           {"http://dbpedia.org/resource/Ben", po("label", "Ben")}}));
  EXPECT_EQ(c.added, (std::vector<active::CorrectedTriple>{
                         {"http://dbpedia.org/resource/Ann",
                          po("birthDate", "1950-01-02", Datatype::Date)}}));
  EXPECT_EQ(c.dropped, std::vector<std::string>{"http://dbpedia.org/resource/Ben"});
  auto j = c.to_json(person().vocabulary());
  EXPECT_EQ(j["added"][0]["p"], "http://dbpedia.org/ontology/birthDate");
  EXPECT_EQ(j["removed"][0]["p"], "http://www.w3.org/2000/01/rdf-schema#label");
}

TEST(ActiveLoop, GoldCorrectionIsIdempotent) {
  Loop loop;
  auto judgements = loop.judgements();
  auto once = active::correct(loop.dataset, loop.items, judgements);
  auto twice = active::correct(once.gold, loop.items, judgements);
  EXPECT_EQ(twice.gold.name, "d1+");
  EXPECT_EQ(twice.gold.examples, once.gold.examples);
  EXPECT_TRUE(twice.correction.added.empty());
  EXPECT_TRUE(twice.correction.removed.empty());
  EXPECT_TRUE(twice.correction.dropped.empty());
}

TEST(ActiveLoop, GoldCorrectionKeepsFoldsOfSurvivors) {
  Loop loop;
  loop.dataset.folds = {0, 1, 2};
  loop.dataset.fold_count = 3;
  auto result = active::correct(loop.dataset, loop.items, loop.judgements());
  EXPECT_EQ(result.gold.folds, (std::vector<int>{0, 2}));
  EXPECT_EQ(result.gold.fold_count, 3);
}

TEST(ActiveLoop, GoldCorrectionRefusesPendingItems) {
  Loop loop;
  auto judgements = loop.judgements();
  judgements.erase(loop.find("Cat", Kind::FN).id);
  judgements.erase(loop.find("Ann", Kind::FP).id);
  try {
    active::correct(loop.dataset, loop.items, judgements);
    FAIL() << "expected PendingItems";
  } catch (const active::PendingItems& e) {
    EXPECT_EQ(e.pending(), 2u);
  }
  sampling::Dataset other = loop.dataset;
  other.examples.erase(other.examples.begin());
  judgements = loop.judgements();
  judgements.erase(loop.find("Ann", Kind::FP).id);
  EXPECT_NO_THROW(active::correct(other, loop.items, judgements));
}

TEST(ActiveLoop, AnnotationMetricsOfFixture) {
  Loop loop;
  auto m = active::annotation_metrics(loop.items, loop.judgements(), 5.0);
  EXPECT_DOUBLE_EQ(m.fn_negative, 1);
  EXPECT_DOUBLE_EQ(m.fn_positive, 1);
  EXPECT_DOUBLE_EQ(m.fp_negative, 1);
  EXPECT_DOUBLE_EQ(m.fp_positive, 1);
  EXPECT_DOUBLE_EQ(*m.r_omis, 0.2);
  EXPECT_DOUBLE_EQ(*m.r_disco, 0.5);
  EXPECT_DOUBLE_EQ(m.categories.at(Category::WV), 1);
  EXPECT_DOUBLE_EQ(m.categories.at(Category::FH), 0);

  auto back = active::AnnotationMetrics::from_json(m.to_json());
  EXPECT_EQ(back.to_json(), m.to_json());

  std::vector<std::pair<std::string, active::AnnotationMetrics>> rows = {{"m (d1)", m}};
  auto table = active::render_annotation(rows);
  EXPECT_NE(table.find("r_disco"), std::string::npos);
  EXPECT_NE(table.find("0.200"), std::string::npos);
  EXPECT_NE(table.find("0.50"), std::string::npos);
}

TEST(ActiveLoop, AnnotationMetricsAverageOverFolds) {
  Loop loop;
  auto items = loop.items;
  for (auto& i : items) i.folds = {0, 1};
  items[0].folds = {0};
  auto judgements = loop.judgements();
  auto m = active::annotation_metrics(items, judgements, 4.0, 2);
  EXPECT_EQ(m.folds, 2u);
  double total = m.fn_negative + m.fn_positive + m.fp_negative + m.fp_positive;
  EXPECT_DOUBLE_EQ(total, 7.0 / 2.0);
  EXPECT_EQ(*m.r_omis, m.fn_positive / 4.0);

  EXPECT_FALSE(active::omission_rate(1, 0));
  EXPECT_FALSE(active::discovery_rate(0, 0));
  EXPECT_DOUBLE_EQ(*active::discovery_rate(95, 198), 95.0 / 293.0);

  judgements.clear();
  EXPECT_THROW(active::annotation_metrics(items, judgements, 4.0, 2), active::PendingItems);
}

}  // namespace
