#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <random>
#include <thread>

#include "fedcache/cache.hpp"
#include "fedcache/error.hpp"

using namespace fedcache;

namespace {

DistilledRecord rec(std::size_t producer, std::size_t label, double tag, std::size_t round = 0) {
  return DistilledRecord{producer, label, {tag, -tag}, round};
}

LabelProfile profile(std::size_t client, std::vector<double> freqs) { return LabelProfile{client, std::move(freqs)}; }

/// Every client holds one record of every class.
void fill(KnowledgeCache& kc) {
  for (std::size_t k = 0; k < kc.num_clients(); ++k) {
    std::vector<DistilledRecord> entry;
    for (std::size_t c = 0; c < kc.num_classes(); ++c) entry.push_back(rec(k, c, 100.0 * k + c));
    kc.update_client_entry(k, entry);
  }
}

using Key = std::tuple<std::size_t, std::size_t, std::vector<double>, std::size_t>;
Key key(const DistilledRecord& r) { return {r.producer, r.label, r.input, r.round_produced}; }

std::multiset<Key> keys(const std::vector<DistilledRecord>& rs) {
  std::multiset<Key> out;
  for (const auto& r : rs) out.insert(key(r));
  return out;
}

void expect_views_consistent(const KnowledgeCache& kc) {
  std::vector<DistilledRecord> by_client, by_class;
  for (std::size_t k = 0; k < kc.num_clients(); ++k) {
    const auto e = kc.fetch_by_client(k);
    by_client.insert(by_client.end(), e.begin(), e.end());
  }
  for (std::size_t c = 0; c < kc.num_classes(); ++c) {
    const auto e = kc.fetch_by_class(c);
    for (const auto& r : e) EXPECT_EQ(r.label, c);
    by_class.insert(by_class.end(), e.begin(), e.end());
  }
  EXPECT_EQ(keys(by_client), keys(by_class));
  EXPECT_EQ(by_client.size(), kc.size());
}

}  // namespace

TEST(Quota, RoundsToNearestAndClamps) {
  EXPECT_EQ(class_quota(0.5, 0.2, 100), 60u);
  EXPECT_EQ(class_quota(0.0, 0.0, 50), 0u);
  EXPECT_EQ(class_quota(1.0, 0.0, 7), 7u);
  EXPECT_EQ(class_quota(0.0, 0.25, 10), 3u);  // 2.5 rounds away from zero
  EXPECT_EQ(class_quota(0.5, 0.5, 0), 0u);
}

TEST(Update, FirstWriteAndLatestWins) {
  KnowledgeCache kc(5, 4);
  const std::vector<DistilledRecord> three{rec(2, 0, 1), rec(2, 1, 2), rec(2, 3, 3)};
  kc.update_client_entry(2, three);
  EXPECT_EQ(kc.fetch_by_client(2), three);
  const std::vector<DistilledRecord> two{rec(2, 1, 5, 1), rec(2, 2, 6, 1)};
  kc.update_client_entry(2, two);
  EXPECT_EQ(kc.fetch_by_client(2), two);
  EXPECT_EQ(kc.size(), 2u);
  kc.update_client_entry(2, {});
  EXPECT_TRUE(kc.entry_empty(2));
}

TEST(Update, InvalidEntriesLeaveCacheUnchanged) {
  KnowledgeCache kc(3, 3);
  const std::vector<DistilledRecord> good{rec(1, 0, 1)};
  kc.update_client_entry(1, good);
  EXPECT_THROW(kc.update_client_entry(1, {rec(1, 2, 1), rec(1, 2, 2)}), InputError);
  EXPECT_THROW(kc.update_client_entry(1, {rec(0, 2, 1)}), InputError);
  EXPECT_THROW(kc.update_client_entry(1, {rec(1, 3, 1)}), InputError);
  EXPECT_THROW(kc.update_client_entry(1, {DistilledRecord{1, 0, {NAN, 0}, 0}}), InputError);
  EXPECT_THROW(kc.update_client_entry(3, {}), InputError);
  EXPECT_EQ(kc.fetch_by_client(1), good);
  expect_views_consistent(kc);
}

TEST(Fetch, ClientViewIsACopy) {
  KnowledgeCache kc(3, 2);
  EXPECT_TRUE(kc.fetch_by_client(0).empty());
  kc.update_client_entry(0, {rec(0, 1, 4)});
  auto copy = kc.fetch_by_client(0);
  copy[0].input[0] = -1;
  copy.push_back(rec(0, 0, 1));
  EXPECT_EQ(kc.fetch_by_client(0), (std::vector<DistilledRecord>{rec(0, 1, 4)}));
  EXPECT_THROW(kc.fetch_by_client(3), InputError);
}

TEST(Fetch, ClassViewUnionsClients) {
  KnowledgeCache kc(6, 3);
  EXPECT_TRUE(kc.fetch_by_class(2).empty());
  kc.update_client_entry(4, {rec(4, 2, 1, 3)});
  kc.update_client_entry(1, {rec(1, 2, 2, 5), rec(1, 0, 3, 5)});
  const auto c2 = kc.fetch_by_class(2);
  ASSERT_EQ(c2.size(), 2u);
  EXPECT_EQ(c2[0].producer, 1u);  // ordered by producer
  EXPECT_EQ(c2[1].producer, 4u);
  EXPECT_THROW(kc.fetch_by_class(3), InputError);
}

TEST(Fetch, MultisetIdentityOnRandomFills) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 50; ++trial) {
    KnowledgeCache kc(7, 5);
    for (int op = 0; op < 30; ++op) {
      const std::size_t k = gen() % 7;
      std::vector<DistilledRecord> entry;
      for (std::size_t c = 0; c < 5; ++c)
        if (gen() % 2) entry.push_back(rec(k, c, static_cast<double>(gen() % 1000), op));
      kc.update_client_entry(k, entry);
    }
    expect_views_consistent(kc);
  }
}

TEST(Sampling, TauOneReturnsEverything) {
  KnowledgeCache kc(6, 4);
  fill(kc);
  const auto all = kc.sample_for_device(profile(0, {1, 0, 0, 0}), 1.0, 3);
  EXPECT_EQ(keys(all), keys(kc.snapshot()));
}

TEST(Sampling, ExactCountsPerClass) {
  KnowledgeCache kc(100, 2);
  for (std::size_t k = 0; k < 100; ++k) kc.update_client_entry(k, {rec(k, 0, k), rec(k, 1, k)});
  const auto s = kc.sample_for_device(profile(0, {0.2, 0.8}), 0.5, 9);
  const auto n0 = std::count_if(s.begin(), s.end(), [](const auto& r) { return r.label == 0; });
  EXPECT_EQ(n0, 60);
  EXPECT_EQ(static_cast<long>(s.size()) - n0, 90);
  const auto none = kc.sample_for_device(profile(0, {0.0, 1.0}), 0.0, 9);
  EXPECT_TRUE(std::none_of(none.begin(), none.end(), [](const auto& r) { return r.label == 0; }));
  EXPECT_EQ(none.size(), 100u);
}

TEST(Sampling, SizeMonotoneInTauWithExactEndpoints) {
  KnowledgeCache kc(9, 4);
  fill(kc);
  const LabelProfile p = profile(2, {0.1, 0.2, 0.3, 0.4});
  std::size_t previous = 0;
  for (double tau : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
    const std::size_t n = kc.sample_for_device(p, tau, 4).size();
    EXPECT_GE(n, previous);
    previous = n;
  }
  std::size_t at_zero = 0;
  for (std::size_t c = 0; c < 4; ++c) at_zero += static_cast<std::size_t>(std::llround(p.freqs[c] * 9));
  EXPECT_EQ(kc.sample_for_device(p, 0.0, 4).size(), at_zero);
  EXPECT_EQ(kc.sample_for_device(p, 1.0, 4).size(), kc.size());
}

TEST(Sampling, SubsetWithoutDuplicatesAndDeterministic) {
  KnowledgeCache kc(8, 3);
  fill(kc);
  const LabelProfile p = profile(1, {0.5, 0.25, 0.25});
  const auto universe = keys(kc.snapshot());
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto s = kc.sample_for_device(p, 0.3, seed);
    const auto ks = keys(s);
    EXPECT_EQ(std::set<Key>(ks.begin(), ks.end()).size(), s.size());
    for (const auto& k : ks) EXPECT_TRUE(universe.count(k));
    EXPECT_EQ(s, kc.sample_for_device(p, 0.3, seed));
  }
}

TEST(Sampling, InclusionFrequencyMatchesHypergeometric) {
  KnowledgeCache kc(10, 2);
  fill(kc);
  const LabelProfile p = profile(3, {0.3, 0.7});
  const double tau = 0.3;
  const std::size_t seeds = 10000;
  std::map<Key, double> hits;
  for (std::uint64_t seed = 0; seed < seeds; ++seed)
    for (const auto& r : kc.sample_for_device(p, tau, seed)) hits[key(r)] += 1.0;
  for (const auto& r : kc.snapshot()) {
    const double q = static_cast<double>(class_quota(tau, p.freqs[r.label], 10)) / 10.0;
    const double sigma = std::sqrt(q * (1 - q) / seeds);
    EXPECT_NEAR(hits[key(r)] / seeds, q, 3 * sigma + 1e-12) << "producer " << r.producer << " label " << r.label;
  }
}

TEST(Sampling, BernoulliModeIncludesAtTheRate) {
  KnowledgeCache kc(10, 2);
  fill(kc);
  const LabelProfile p = profile(0, {0.5, 0.5});
  double total = 0.0;
  const std::size_t seeds = 2000;
  for (std::uint64_t seed = 0; seed < seeds; ++seed)
    total += static_cast<double>(kc.sample_for_device(p, 0.2, seed, SamplingMode::bernoulli).size());
  // expected 20 · (0.2 + 0.8·0.5) = 12 records per draw
  EXPECT_NEAR(total / seeds, 12.0, 0.2);
  EXPECT_EQ(kc.sample_for_device(p, 1.0, 0, SamplingMode::bernoulli).size(), 20u);
}

TEST(Sampling, ProfileWidthMustMatch) {
  KnowledgeCache kc(2, 3);
  fill(kc);
  EXPECT_THROW(kc.sample_for_device(profile(0, {1.0}), 0.5, 0), InputError);
  EXPECT_THROW(kc.sample_for_device(profile(0, {0.5, 0.5, 0}), 1.5, 0), InputError);
}

TEST(Concurrency, ReadersNeverSeeAMixedEntry) {
  KnowledgeCache kc(4, 3);
  std::atomic<bool> stop{false};
  std::atomic<std::size_t> torn{0};
  std::thread writer([&] {
    for (std::size_t round = 1; round <= 2000; ++round) {
      kc.update_client_entry(1, {rec(1, 0, 1, round), rec(1, 1, 2, round), rec(1, 2, 3, round)});
    }
    stop = true;
  });
  std::vector<std::thread> readers;
  for (int t = 0; t < 3; ++t) {
    readers.emplace_back([&] {
      while (!stop) {
        const auto e = kc.fetch_by_client(1);
        for (const auto& r : e)
          if (r.round_produced != e.front().round_produced) ++torn;
        const auto c = kc.fetch_by_class(0);
        if (c.size() > 1) ++torn;
      }
    });
  }
  writer.join();
  for (auto& r : readers) r.join();
  EXPECT_EQ(torn.load(), 0u);
  expect_views_consistent(kc);
}
