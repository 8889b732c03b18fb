#pragma once

// Seeded generators shared by the property tests.

#include <Eigen/Dense>
#include <cstdint>
#include <random>

#include "clockrig/graph.hpp"
#include "clockrig/simulate.hpp"

namespace testing {

using namespace clockrig;

inline std::mt19937_64 rng_for(std::uint64_t seed) { return std::mt19937_64(mix_seed(0xC10C, seed)); }

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int size, double lo = -1.0, double hi = 1.0) {
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v(i) = uniform(rng, lo, hi);
  return v;
}

// Connected graph on 3..max_n vertices.
inline Graph random_graph(std::mt19937_64& rng, int max_n = 7) {
  const int n = std::uniform_int_distribution<int>(3, max_n)(rng);
  return random_connected_graph(n, uniform(rng, 0.1, 0.9), rng);
}

// Natural units: c = 1, so propagation delays are tens of time units.
inline RandomScenarioOptions natural_units() {
  RandomScenarioOptions o;
  o.c = 1.0;
  return o;
}

}  // namespace testing
