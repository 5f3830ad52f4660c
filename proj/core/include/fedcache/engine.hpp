#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedcache/cache.hpp"
#include "fedcache/data.hpp"
#include "fedcache/distill.hpp"
#include "fedcache/model.hpp"
#include "fedcache/numerics/autodiff.hpp"
#include "fedcache/random.hpp"
#include "fedcache/transport.hpp"

namespace fedcache {

enum class Algorithm { fedcache2, logits_cache, param_avg, local_only };

std::string_view to_string(Algorithm algorithm);
std::optional<Algorithm> parse_algorithm(std::string_view name);

struct DatasetSpec {
  std::string source = "synthetic";  ///< "synthetic" or "csv"
  std::size_t num_classes = 4;
  std::size_t dim = 16;
  std::size_t per_class = 100;
  double spread = 0.5;
  std::string csv_path;
  bool csv_header = false;
  double test_fraction = 0.2;

  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

/// Full description of one simulated run.
struct RunConfig {
  DatasetSpec dataset;
  std::size_t num_clients = 10;
  double alpha = 0.5;
  double tau = 0.5;
  RidgePolicy ridge;
  std::size_t local_epochs = 5;
  std::size_t rounds = 15;
  double lr = 0.01;
  double distill_lr = 0.001;
  std::size_t distill_steps = 100;
  std::size_t batch = 64;
  double noise_sigma = 0.05;
  /// A preset name for every client, or "cycle" for mlp-s/mlp-m/mlp-l by client id.
  std::string arch = "mlp-s";
  double participation_rate = 1.0;
  ByteWidthTable byte_widths;
  double beta = 1.5;
  std::size_t related = 16;
  /// Rounds between redraws of the prototype replacement map.
  std::size_t sigma_period = 1;
  SamplingMode sampling = SamplingMode::exact_count;
  /// Charge the server→client prototype hand-off as distilled_data downlink.
  bool charge_prototype_init = false;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  ArchSpec arch_for(std::size_t client) const;
  bool homogeneous() const { return arch != "cycle"; }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct ClientState {
  std::size_t client_id = 0;
  ModelBundle model;
  ClientDataset data;
  LabelProfile profile;
  Rng rng;
  double best_accuracy = 0.0;
};

/// g(x): x when the client's own cache entry is nonempty, 0 otherwise.
double gate(double x, bool own_entry_nonempty);
ad::Var gate(const ad::Var& x, bool own_entry_nonempty);

/// Mini-batch objective: (Σ CE over local rows + g(Σ CE over knowledge rows)) divided by the
/// number of rows that contribute. Either part may be empty.
ad::Var train_objective(const BoundModel& bound, const Matrix& local_x,
                        std::span<const std::size_t> local_y, const Matrix& knowledge_x,
                        std::span<const std::size_t> knowledge_y, bool own_entry_nonempty);

/// One epoch over local samples and sampled records shuffled into one stream. Returns the
/// per-batch loss.
std::vector<double> personalized_train_epoch(ClientState& cs,
                                             std::span<const DistilledRecord> sampled,
                                             bool own_entry_nonempty, double lr, std::size_t batch);

/// One epoch of plain local cross-entropy training.
std::vector<double> local_train_epoch(ClientState& cs, double lr, std::size_t batch);

/// Logits-cache baseline loss on one batch: mean CE plus β·(taught/n)·KL(teacher ‖ student)
/// over the rows that have a teacher.
ad::Var logits_cache_objective(const BoundModel& bound, const Matrix& x, std::span<const std::size_t> labels,
                               const Matrix& teacher, const std::vector<bool>& has_teacher, double beta);

/// Unweighted element-wise mean of parameter lists. Throws ConfigError on shape mismatch.
std::vector<Matrix> average_parameters(std::span<const std::vector<Matrix>> uploads);

double evaluate_accuracy(const ModelBundle& m, const Dataset& d);
/// Mean over clients of best-so-far accuracy.
double evaluate_average_ua(std::span<const ClientState> clients);

struct RoundMetrics {
  std::size_t round = 0;
  std::vector<double> accuracy;
  std::vector<double> best_so_far;
  std::vector<bool> online;
  std::vector<std::uint64_t> param_digest;
  double average_ua = 0.0;
  std::uint64_t cum_bytes_up = 0;
  std::uint64_t cum_bytes_down = 0;
  /// Clients whose distillation aborted this round.
  std::size_t distill_failures = 0;
  /// Mean distance from freshly distilled inputs to the producer's nearest raw sample.
  double mean_raw_distance = 0.0;
};

struct RunResult {
  Algorithm algorithm = Algorithm::fedcache2;
  RunConfig config;
  std::vector<RoundMetrics> rounds;  ///< rounds[0] is the untrained initial state
  CommLedger ledger;
  std::vector<DistilledRecord> cache_snapshot;
  /// Every record uploaded during the run, in upload order.
  std::vector<DistilledRecord> uploaded_records;
  std::vector<std::string> log;
};

/// A federation stepping through rounds of one algorithm. Construction performs the
/// initialization phase (datasets, partition, models, label profiles, round-0 evaluation).
class FederatedRun {
 public:
  FederatedRun(RunConfig config, Algorithm algorithm);

  const RunConfig& config() const noexcept { return config_; }
  Algorithm algorithm() const noexcept { return algorithm_; }
  std::size_t rounds_done() const noexcept { return metrics_.size() - 1; }
  std::span<const ClientState> clients() const noexcept { return clients_; }
  std::span<ClientState> clients() noexcept { return clients_; }
  const KnowledgeCache& cache() const noexcept { return *cache_; }
  const CommLedger& ledger() const noexcept { return ledger_; }
  std::span<const RoundMetrics> metrics() const noexcept { return metrics_; }
  /// Prototype initialization branch taken by each client in the latest fedcache2 round.
  std::span<const PrototypeSource> last_prototype_sources() const noexcept { return last_sources_; }
  /// Records delivered to each client by the latest fedcache2 round.
  std::span<const std::size_t> last_downloaded_records() const noexcept { return last_downloads_; }

  /// Runs the next round and records its metrics.
  const RoundMetrics& step();
  RunResult finish() const;

 private:
  void run_round(std::size_t round, const std::vector<bool>& online, RoundMetrics& m);
  void baseline_logits_cache_round(std::size_t round, const std::vector<bool>& online);
  void baseline_param_avg_round(std::size_t round, const std::vector<bool>& online);
  void local_only_round(const std::vector<bool>& online);
  void build_relations();
  RoundMetrics evaluate(std::size_t round, const std::vector<bool>& online);

  RunConfig config_;
  Algorithm algorithm_;
  std::vector<ClientState> clients_;
  std::optional<KnowledgeCache> cache_;
  CommLedger ledger_;
  std::vector<RoundMetrics> metrics_;
  std::vector<PrototypeSource> last_sources_;
  std::vector<std::size_t> last_downloads_;
  std::vector<std::string> log_;
  std::vector<DistilledRecord> uploaded_;

  // logits-cache baseline state
  struct Related {
    std::size_t client;
    std::size_t sample;
  };
  std::vector<std::vector<std::vector<Related>>> relations_;  ///< client → train sample → ranked
  std::vector<Matrix> cached_logits_;                         ///< client → n_train × C
  std::vector<bool> has_logits_;
};

Dataset build_dataset(const RunConfig& config);

RunResult run_experiment(const RunConfig& config, Algorithm algorithm);

}  // namespace fedcache
