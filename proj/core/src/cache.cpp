#include "fedcache/cache.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include "fedcache/error.hpp"
#include "fedcache/random.hpp"

namespace fedcache {

std::size_t class_quota(double tau, double class_freq, std::size_t available) {
  const double rate = tau + (1.0 - tau) * class_freq;
  const long long n = std::llround(rate * static_cast<double>(available));
  return static_cast<std::size_t>(std::clamp<long long>(n, 0, static_cast<long long>(available)));
}

KnowledgeCache::KnowledgeCache(std::size_t num_clients, std::size_t num_classes)
    : num_clients_(num_clients),
      num_classes_(num_classes),
      by_client_(num_clients),
      by_class_(num_classes) {
  if (num_clients == 0 || num_classes == 0) {
    throw InputError("KnowledgeCache: need at least one client and one class");
  }
}

void KnowledgeCache::update_client_entry(std::size_t client, std::vector<DistilledRecord> records) {
  if (client >= num_clients_) throw InputError("update_client_entry: client out of range");
  for (const DistilledRecord& r : records) {
    if (r.producer != client) {
      throw InputError("update_client_entry: record produced by client " +
                       std::to_string(r.producer) + " filed under client " + std::to_string(client));
    }
    if (r.label >= num_classes_) throw InputError("update_client_entry: label out of range");
    for (double v : r.input)
      if (!std::isfinite(v)) throw InputError("update_client_entry: non-finite record input");
  }
  require_distinct_labels(records, "update_client_entry");
  std::sort(records.begin(), records.end(),
            [](const DistilledRecord& a, const DistilledRecord& b) { return a.label < b.label; });

  std::unique_lock lock(mutex_);
  by_client_[client] = std::move(records);
  rebuild_class_view();
}

void KnowledgeCache::rebuild_class_view() {
  for (auto& v : by_class_) v.clear();
  for (const auto& entry : by_client_)
    for (const DistilledRecord& r : entry) by_class_[r.label].push_back(r);
  for (auto& v : by_class_) {
    std::stable_sort(v.begin(), v.end(), [](const DistilledRecord& a, const DistilledRecord& b) {
      return a.producer != b.producer ? a.producer < b.producer : a.round_produced < b.round_produced;
    });
  }
}

std::vector<DistilledRecord> KnowledgeCache::fetch_by_client(std::size_t client) const {
  if (client >= num_clients_) throw InputError("fetch_by_client: client out of range");
  std::shared_lock lock(mutex_);
  return by_client_[client];
}

std::vector<DistilledRecord> KnowledgeCache::fetch_by_class(std::size_t c) const {
  if (c >= num_classes_) throw InputError("fetch_by_class: class out of range");
  std::shared_lock lock(mutex_);
  return by_class_[c];
}

bool KnowledgeCache::entry_empty(std::size_t client) const {
  if (client >= num_clients_) throw InputError("entry_empty: client out of range");
  std::shared_lock lock(mutex_);
  return by_client_[client].empty();
}

std::size_t KnowledgeCache::size() const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& entry : by_client_) n += entry.size();
  return n;
}

std::vector<DistilledRecord> KnowledgeCache::snapshot() const {
  std::shared_lock lock(mutex_);
  std::vector<DistilledRecord> out;
  for (const auto& entry : by_client_) out.insert(out.end(), entry.begin(), entry.end());
  return out;
}

std::vector<DistilledRecord> KnowledgeCache::sample_for_device(const LabelProfile& profile,
                                                               double tau, std::uint64_t seed,
                                                               SamplingMode mode) const {
  if (profile.num_classes() != num_classes_) {
    throw InputError("sample_for_device: profile has " + std::to_string(profile.num_classes()) +
                     " classes, cache has " + std::to_string(num_classes_));
  }
  if (!(tau >= 0.0 && tau <= 1.0)) throw InputError("sample_for_device: tau must lie in [0, 1]");
  Rng rng = make_rng(seed, Stream::cache_sampling, {profile.client_id});
  std::shared_lock lock(mutex_);
  std::vector<DistilledRecord> out;
  for (std::size_t c = 0; c < num_classes_; ++c) {
    const auto& pool = by_class_[c];
    if (mode == SamplingMode::exact_count) {
      const std::size_t quota = class_quota(tau, profile.freqs[c], pool.size());
      for (std::size_t i : sample_without_replacement(rng, pool.size(), quota)) out.push_back(pool[i]);
    } else {
      const double rate = std::clamp(tau + (1.0 - tau) * profile.freqs[c], 0.0, 1.0);
      for (const DistilledRecord& r : pool)
        if (uniform01(rng) < rate) out.push_back(r);
    }
  }
  return out;
}

}  // namespace fedcache
