#pragma once

// Generators and fixture helpers shared by unit and acceptance tests.

#include <filesystem>
#include <string>
#include <vector>

#include "shaperel/distiller.hpp"
#include "shaperel/sampler.hpp"
#include "shaperel/shape.hpp"
#include "shaperel/turtle_light.hpp"

namespace shaperel::support {

std::filesystem::path data_dir();
std::filesystem::path fixture(const std::string& name);
std::filesystem::path temp_dir(const std::string& name);  // fresh, empty

struct WeightedPattern {
  shape::Pattern pattern;
  double probability;
};

// Names of the ten most frequent patterns of the Person shape, in frequency
// order, with their observed shares (percent).
struct TopPattern {
  std::vector<std::string> properties;
  double percent;
  bool valid;
};
const std::vector<TopPattern>& reference_top10();

// 70 patterns: the ten above plus a uniform tail of 44 shape-valid and 16
// invalid patterns (lowest bits first) sharing the remaining 9.6%.
std::vector<WeightedPattern> reference_distribution(const shape::Shape& s);

// Graph realizing exactly `p`, with plausible literals.
turtle::Graph graph_for_pattern(const std::string& subject, const shape::Pattern& p,
                                const shape::PropertyVocabulary& v, sampling::Rng& rng);

// Store of `n` examples whose patterns follow `dist`.
std::vector<distill::Example> pattern_store(std::size_t n, const std::vector<WeightedPattern>& dist,
                                            const shape::Shape& s, std::uint64_t seed);

// Random graph over vocabulary and foreign predicates, with string literals
// drawn from the full TurtleLight character set.
turtle::Graph random_graph(sampling::Rng& rng, const shape::PropertyVocabulary& v);

std::string random_local_name(sampling::Rng& rng);

struct Mutation {
  std::string text;
  std::string description;
};
// Corrupted variants of a valid serialization that the parser must reject.
std::vector<Mutation> mutate(const std::string& valid, sampling::Rng& rng, std::size_t count);

}  // namespace shaperel::support
