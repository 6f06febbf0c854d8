#include <gtest/gtest.h>

#include <fstream>
#include <limits>

#include "fixtures.hpp"
#include "shaperel/sampler.hpp"

namespace {

using namespace shaperel;
using sampling::Constraint;
using sampling::Role;

std::vector<std::string> serialized(const sampling::Dataset& d) {
  std::vector<std::string> out;
  for (const auto& ex : d.examples) out.push_back(ex.entity + " " + turtle::serialize(ex.graph));
  return out;
}

std::vector<distill::Example> store(std::size_t n, std::uint64_t seed = 3) {
  auto s = shape::person_shape();
  return support::pattern_store(n, support::reference_distribution(s), s, seed);
}

TEST(Sampler, RngMatchesReferenceEngine) {
  // First output of mt19937_64 with its default seed.
  sampling::Rng rng(5489);
  EXPECT_EQ(rng.below(std::numeric_limits<std::uint64_t>::max()), 14514284786278117030ull);
  EXPECT_THROW(rng.below(0), std::invalid_argument);
}

TEST(Sampler, RngBoundsAndRoughUniformity) {
  sampling::Rng rng(1);
  std::vector<int> hist(10, 0);
  for (int i = 0; i < 100000; ++i) {
    auto x = rng.below(10);
    ASSERT_LT(x, 10u);
    ++hist[x];
    double u = rng.unit();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  for (int h : hist) EXPECT_NEAR(h, 10000, 500);
}

TEST(Sampler, SameSeedSameSample) {
  auto st = store(500);
  auto s = shape::person_shape();
  sampling::SampleRequest req{"a", 100, 42, Constraint::AnyPattern, {}};
  auto a = sampling::sample(st, req, s);
  auto b = sampling::sample(st, req, s);
  EXPECT_EQ(a.entities(), b.entities());
  req.seed = 43;
  EXPECT_NE(sampling::sample(st, req, s).entities(), a.entities());
}

TEST(Sampler, SampleIgnoresStoreOrder) {
  auto st = store(300);
  auto reversed = st;
  std::reverse(reversed.begin(), reversed.end());
  auto s = shape::person_shape();
  sampling::SampleRequest req{"a", 50, 9, Constraint::AnyPattern, {}};
  EXPECT_EQ(sampling::sample(st, req, s).entities(), sampling::sample(reversed, req, s).entities());
}

TEST(Sampler, ShapeValidConstraint) {
  auto st = store(400);
  auto s = shape::person_shape();
  auto d = sampling::sample(st, {"v", 100, 1, Constraint::ShapeValidOnly, {}}, s);
  for (const auto& ex : d.examples) EXPECT_TRUE(shape::validates(ex.graph, s));
  EXPECT_DOUBLE_EQ(sampling::stats(d, s).shape_rate, 1.0);
}

TEST(Sampler, InsufficientExamples) {
  auto st = store(20);
  auto s = shape::person_shape();
  try {
    sampling::sample(st, {"x", 21, 1, Constraint::AnyPattern, {}}, s);
    FAIL();
  } catch (const sampling::InsufficientExamples& e) {
    EXPECT_EQ(e.requested(), 21u);
    EXPECT_EQ(e.eligible(), 20u);
  }
}

TEST(Sampler, SessionDrawsDisjointDatasets) {
  auto st = store(600);
  auto s = shape::person_shape();
  sampling::SamplingSession session(st, s);
  auto a = session.draw("a", 200, 1, Constraint::AnyPattern);
  auto b = session.draw("b", 150, 2, Constraint::ShapeValidOnly);
  auto c = session.draw("c", 200, 3, Constraint::AnyPattern);
  std::set<std::string> seen;
  for (const auto* d : {&a, &b, &c}) {
    for (const auto& e : d->entities()) EXPECT_TRUE(seen.insert(e).second) << e;
  }
  EXPECT_EQ(session.used().size(), 550u);
}

TEST(Sampler, KfoldSizesAndRoles) {
  auto st = store(103);
  auto s = shape::person_shape();
  auto d = sampling::kfold(sampling::sample(st, {"k", 103, 5, Constraint::AnyPattern, {}}, s), 5);
  std::vector<std::size_t> sizes(5, 0);
  for (int f : d.folds) ++sizes.at(static_cast<std::size_t>(f));
  auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  EXPECT_LE(*hi - *lo, 1u);
  for (int f = 0; f < 5; ++f) {
    auto test = d.indices(f, Role::Test);
    auto train = d.indices(f, Role::Train);
    auto eval = d.indices(f, Role::Eval);
    EXPECT_EQ(test.size() + train.size(), d.size());
    for (auto i : eval) {
      EXPECT_EQ(d.folds[i], (f + 1) % 5);
      EXPECT_TRUE(d.in_role(i, f, Role::Train));
    }
  }
  EXPECT_THROW(sampling::kfold(d, 1), sampling::BadK);
  EXPECT_THROW(sampling::kfold(d, 104), sampling::BadK);
  sampling::Dataset plain;
  plain.examples.push_back(st[0]);
  EXPECT_THROW(plain.in_role(0, 0, Role::Test), std::logic_error);
}

TEST(Sampler, DatasetRoundTripsThroughFiles) {
  auto st = store(200);
  auto s = shape::person_shape();
  auto d = sampling::kfold(sampling::sample(st, {"rt", 60, 8, Constraint::AnyPattern, {}}, s), 3);
  auto dir = support::temp_dir("dataset");
  sampling::write_dataset(d, dir / "rt.json", dir / "rt.jsonl", s.vocabulary());
  auto back = sampling::read_dataset(dir / "rt.json", dir / "rt.jsonl", s.vocabulary());
  EXPECT_EQ(back.name, d.name);
  EXPECT_EQ(back.seed, d.seed);
  EXPECT_EQ(back.folds, d.folds);
  EXPECT_EQ(back.fold_count, 3);
  EXPECT_EQ(serialized(back), serialized(d));

  auto rebuilt = sampling::dataset_from_manifest(sampling::manifest(d), st);
  EXPECT_EQ(serialized(rebuilt), serialized(d));
  EXPECT_EQ(rebuilt.folds, d.folds);

  std::ifstream m(dir / "rt.json");
  std::string text((std::istreambuf_iterator<char>(m)), {});
  EXPECT_EQ(text, sampling::manifest(d).dump(2) + "\n");
}

TEST(Sampler, StatsOnHandBuiltDataset) {
  auto s = shape::person_shape();
  sampling::Dataset d;
  d.name = "tiny";
  auto a = distill::Example::make("http://x/A", "t");
  a.add("label", turtle::Literal::make("A"));
  a.add("birthYear", turtle::Literal::make("1900", turtle::Datatype::GYear));
  auto b = distill::Example::make("http://x/B", "t");
  b.add("label", turtle::Literal::make("B"));
  b.add("alias", turtle::Literal::make("Bee"));
  b.add("alias", turtle::Literal::make("Bea"));
  d.examples = {a, b};
  struct Fixed : sampling::Scorer {
    std::string name() const override { return "fixed"; }
    std::optional<double> score(const distill::Example& ex) const override {
      if (ex.entity == "http://x/A") return 0.5;
      return std::nullopt;
    }
  } scorer;
  auto st = sampling::stats(d, s, &scorer, nullptr);
  EXPECT_EQ(st.size, 2u);
  EXPECT_DOUBLE_EQ(st.mean_properties, 2.0);
  EXPECT_EQ(st.realized_patterns, 2u);
  EXPECT_DOUBLE_EQ(st.shape_rate, 0.5);
  EXPECT_EQ(st.mean_nli, 0.5);
  EXPECT_FALSE(st.mean_tc);
  auto back = sampling::DatasetStats::from_json(st.to_json());
  EXPECT_EQ(back.to_json(), st.to_json());
}

}  // namespace
