#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fedcache/numerics/matrix.hpp"

namespace fedcache {

/// Labeled samples: one row of `inputs` per entry of `labels`.
struct Dataset {
  Matrix inputs;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return inputs.cols(); }
  bool empty() const noexcept { return labels.empty(); }
};

/// One client's private data. Index vectors refer to rows of the source dataset.
struct ClientDataset {
  std::size_t client_id = 0;
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Fraction of a client's training samples carrying each label.
struct LabelProfile {
  std::size_t client_id = 0;
  std::vector<double> freqs;

  std::size_t num_classes() const noexcept { return freqs.size(); }
};

/// Rows `indices` of `d`, in the given order.
Dataset subset(const Dataset& d, std::span<const std::size_t> indices);

std::vector<std::size_t> class_counts(std::span<const std::size_t> labels, std::size_t num_classes);

/// Classes that occur at least once in `labels`, ascending.
std::vector<std::size_t> present_classes(std::span<const std::size_t> labels, std::size_t num_classes);

/// Gaussian blobs, one per class. Class means sit at pairwise distance 1 (e_c/√2 while
/// c < dim, seeded directions of the same norm beyond that); `spread` is the per-coordinate
/// noise standard deviation. Samples are ordered class by class.
Dataset make_synthetic(std::size_t num_classes, std::size_t dim, std::size_t per_class,
                       double spread, std::uint64_t seed);

/// Reads comma-separated rows of D reals followed by an integer label. The class count is
/// max(label)+1, or `num_classes` when non-zero.
Dataset load_csv(const std::filesystem::path& path, bool skip_header = false,
                 std::size_t num_classes = 0);

inline constexpr std::size_t kPartitionRetries = 100;

/// Splits `d` across `num_clients` clients. For each class the client shares are a
/// Dirichlet(alpha) draw; each client's samples are then split per label into test
/// (round(count·test_fraction), keeping at least one training sample per class) and train.
/// Draws leaving any client without training samples (or without test samples when
/// test_fraction > 0) are redrawn up to `max_retries` times.
std::vector<ClientDataset> partition_dirichlet(const Dataset& d, std::size_t num_clients,
                                               double alpha, double test_fraction,
                                               std::uint64_t seed,
                                               std::size_t max_retries = kPartitionRetries);

LabelProfile label_frequency(const ClientDataset& cd);

/// X plus i.i.d. N(0, noise_sigma²) jitter.
Matrix augment_batch(const Matrix& x, double noise_sigma, std::uint64_t seed);

}  // namespace fedcache
