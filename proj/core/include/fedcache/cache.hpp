#pragma once

#include <cstddef>
#include <cstdint>
#include <shared_mutex>
#include <vector>

#include "fedcache/data.hpp"
#include "fedcache/distill.hpp"

namespace fedcache {

enum class SamplingMode {
  exact_count,  ///< exactly round(rate·|S_c|) records per class, without replacement
  bernoulli,    ///< each record independently with probability rate
};

/// Records of class c a device receives: round((τ + (1−τ)·p_c)·available), clamped to
/// [0, available].
std::size_t class_quota(double tau, double class_freq, std::size_t available);

/// Server-side store of distilled records, indexed by producing client and by class.
///
/// Writers take exclusive access and readers shared access, so a reader observes a client
/// entry either wholly before or wholly after an update.
class KnowledgeCache {
 public:
  KnowledgeCache(std::size_t num_clients, std::size_t num_classes);

  std::size_t num_clients() const noexcept { return num_clients_; }
  std::size_t num_classes() const noexcept { return num_classes_; }

  /// Replaces client `client`'s entry. Records must carry producer == client and
  /// pairwise-distinct labels; on error the cache is unchanged.
  void update_client_entry(std::size_t client, std::vector<DistilledRecord> records);

  /// Copy of the entry; empty when the client never uploaded.
  std::vector<DistilledRecord> fetch_by_client(std::size_t client) const;
  /// All records of class `c`, ordered by (producer, round).
  std::vector<DistilledRecord> fetch_by_class(std::size_t c) const;

  bool entry_empty(std::size_t client) const;
  std::size_t size() const;
  /// Every record, ordered by producer then label.
  std::vector<DistilledRecord> snapshot() const;

  /// Device-centric draw for one client: per class, class_quota(τ, p_c, |S_c|) records
  /// uniformly without replacement (or per-record Bernoulli in that mode). Classes are
  /// concatenated in ascending order.
  std::vector<DistilledRecord> sample_for_device(const LabelProfile& profile, double tau,
                                                 std::uint64_t seed,
                                                 SamplingMode mode = SamplingMode::exact_count) const;

 private:
  void rebuild_class_view();

  std::size_t num_clients_;
  std::size_t num_classes_;
  mutable std::shared_mutex mutex_;
  std::vector<std::vector<DistilledRecord>> by_client_;
  std::vector<std::vector<DistilledRecord>> by_class_;
};

}  // namespace fedcache
