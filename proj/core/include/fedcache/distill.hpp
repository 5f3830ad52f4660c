#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fedcache/data.hpp"
#include "fedcache/model.hpp"
#include "fedcache/numerics/autodiff.hpp"
#include "fedcache/numerics/matrix.hpp"

namespace fedcache {

/// One synthetic labeled sample; the unit of cached knowledge.
struct DistilledRecord {
  std::size_t producer = 0;
  std::size_t label = 0;
  std::vector<double> input;
  std::size_t round_produced = 0;

  friend bool operator==(const DistilledRecord&, const DistilledRecord&) = default;
};

/// Stacks record inputs into an n×D matrix.
Matrix record_inputs(std::span<const DistilledRecord> records);
std::vector<std::size_t> record_labels(std::span<const DistilledRecord> records);

/// Throws InputError if two records share a label.
void require_distinct_labels(std::span<const DistilledRecord> records, const char* what);

enum class PrototypeSource { local_samples, cache_replacement };

/// Prototypes under optimization: at most one per class.
struct PrototypeSet {
  std::vector<DistilledRecord> records;
  PrototypeSource source = PrototypeSource::local_samples;
};

/// Per-round random map from each client to the client whose cache entry seeds its
/// prototypes. An arbitrary function, not necessarily a permutation.
struct SigmaMapping {
  std::size_t round = 0;
  std::vector<std::size_t> map;

  std::size_t operator()(std::size_t client) const { return map.at(client); }
};

/// Independent uniform draw per client, fixed by (num_clients, round, seed).
SigmaMapping resample_sigma(std::size_t num_clients, std::size_t round, std::uint64_t seed);

/// Starting prototypes for client `client`.
///
/// With a nonempty `cache_entry`, its records are deep-copied, keeping those whose class is
/// present in the local training set; local classes the entry lacks get a uniformly drawn
/// local sample. If nothing survives the filter (or the entry is empty) the result is one
/// uniformly drawn local sample per locally present class.
PrototypeSet init_prototypes(std::size_t client, const ClientDataset& cd,
                             std::span<const DistilledRecord> cache_entry, std::uint64_t seed,
                             std::size_t round = 0);

/// Kernel matrices between local and prototype feature maps.
struct GramPair {
  Matrix local_proto;  ///< K_bl, n×m
  Matrix proto_proto;  ///< K_bb, m×m
};

GramPair gram_pair(const Matrix& local_features, const Matrix& proto_features);

struct GramVars {
  ad::Var local_proto;
  ad::Var proto_proto;
};

GramVars gram_pair(const ad::Var& local_features, const ad::Var& proto_features);

/// ½‖Y_local − K_bl·(K_bb + λI)⁻¹·Y_proto‖², the prototypes acting as the regression support.
double krr_loss(const Matrix& k_bl, const Matrix& k_bb, const Matrix& y_local,
                const Matrix& y_proto, double lambda);
ad::Var krr_loss(const ad::Var& k_bl, const ad::Var& k_bb, const Matrix& y_local,
                 const Matrix& y_proto, double lambda);

/// Ridge strength: either a fixed value or `value`·mean(diag K_bb), floored at kMinRidge.
struct RidgePolicy {
  enum class Kind { relative, fixed };
  static constexpr double kMinRidge = 1e-6;

  Kind kind = Kind::relative;
  double value = 0.01;

  double resolve(const Matrix& k_bb) const;

  friend bool operator==(const RidgePolicy&, const RidgePolicy&) = default;
};

/// Value of krr_loss for prototype inputs `proto_x` against a local batch, and its gradient
/// with respect to `proto_x`. The model is frozen. λ is resolved from K_bb and then held fixed.
struct KrrEvaluation {
  double loss = 0.0;
  Matrix grad;
  double lambda = 0.0;
};

KrrEvaluation krr_objective(const ModelBundle& model, const Matrix& local_x,
                            std::span<const std::size_t> local_labels, const Matrix& proto_x,
                            std::span<const std::size_t> proto_labels, const RidgePolicy& ridge);

struct DistillOptions {
  std::size_t steps = 100;
  double lr = 0.001;
  std::size_t batch = 64;
  double noise_sigma = 0.05;
  RidgePolicy ridge;
  std::size_t round = 0;
  std::uint64_t seed = 0;
};

struct DistillResult {
  std::vector<DistilledRecord> records;
  /// Mini-batch loss seen at each step, before that step's update.
  std::vector<double> loss_trace;
  /// Loss on the whole (unaugmented) training set before and after optimization.
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Optimizes prototype inputs against the kernel ridge regression loss on augmented local
/// mini-batches, one Adam step per iteration, with model parameters and labels frozen.
/// Returned records are stamped with the client id and `options.round`.
/// Throws DecompositionError if a kernel solve fails.
DistillResult distill_dataset(const ModelBundle& model, const ClientDataset& cd,
                              const PrototypeSet& protos, const DistillOptions& options);

/// Euclidean distance from each record's input to its nearest row of `raw`.
std::vector<double> nearest_raw_distances(std::span<const DistilledRecord> records,
                                          const Matrix& raw);

/// CSV rows: producer,round,label,x0,...,x{D-1}. Writes a header line first.
void write_records_csv(std::ostream& out, std::span<const DistilledRecord> records);

}  // namespace fedcache
