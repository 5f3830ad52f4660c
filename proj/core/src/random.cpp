#include "fedcache/random.hpp"

#include <algorithm>
#include <numeric>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "fedcache/error.hpp"

namespace fedcache {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix(seed);
  for (std::uint64_t t : tags) h = splitmix(h ^ splitmix(t + 0x632be59bd9b4e019ULL));
  return h;
}

double uniform01(Rng& rng) { return boost::random::uniform_01<double>()(rng); }

double normal(Rng& rng, double mean, double stddev) {
  if (stddev == 0.0) return mean;
  return boost::random::normal_distribution<double>(mean, stddev)(rng);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw InputError("uniform_index: empty range");
  return boost::random::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::vector<double> dirichlet(Rng& rng, double alpha, std::size_t k) {
  if (!(alpha > 0.0)) throw InputError("dirichlet: alpha must be positive");
  boost::random::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> out(k);
  double total = 0.0;
  for (double& v : out) {
    v = gamma(rng);
    total += v;
  }
  if (!(total > 0.0)) {
    // every draw underflowed (tiny alpha): all mass on one uniformly chosen coordinate
    std::fill(out.begin(), out.end(), 0.0);
    out[uniform_index(rng, k)] = 1.0;
    return out;
  }
  for (double& v : out) v /= total;
  return out;
}

std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k) {
  if (k > n) throw InputError("sample_without_replacement: k exceeds population");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_index(rng, n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace fedcache
