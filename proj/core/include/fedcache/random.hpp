#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace fedcache {

/// Boost's engines and distributions produce the same sequence on every platform, which
/// keeps seeded runs byte-identical across toolchains.
using Rng = boost::random::mt19937_64;

/// Named sub-streams derived from the run seed. Each consumer owns its stream.
enum class Stream : std::uint64_t {
  dataset = 1,
  partition,
  model_init,
  sigma,
  prototype_init,
  distill_batch,
  augment,
  cache_sampling,
  availability,
  training,
};

/// Mixes a base seed with a tag sequence (splitmix64 finalizer per step).
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

inline Rng make_rng(std::uint64_t seed, Stream stream, std::initializer_list<std::uint64_t> tags = {}) {
  std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(stream)});
  return Rng(derive_seed(s, tags));
}

double uniform01(Rng& rng);
double normal(Rng& rng, double mean = 0.0, double stddev = 1.0);
/// Uniform integer in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);
/// Dirichlet(alpha, ..., alpha) of dimension k via normalized Gamma draws.
std::vector<double> dirichlet(Rng& rng, double alpha, std::size_t k);
/// k distinct indices drawn uniformly from [0, n), returned ascending.
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k);

template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    boost::random::uniform_int_distribution<std::size_t> pick(0, i - 1);
    using std::swap;
    swap(items[i - 1], items[pick(rng)]);
  }
}

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  shuffle(std::span<T>(items), rng);
}

}  // namespace fedcache
