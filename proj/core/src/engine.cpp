#include "fedcache/engine.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "fedcache/error.hpp"
#include "fedcache/numerics/losses.hpp"

namespace fedcache {

namespace {
constexpr std::array<std::string_view, 4> kAlgorithmNames = {"fedcache2", "logits_cache",
                                                             "param_avg", "local_only"};
}

std::string_view to_string(Algorithm algorithm) {
  return kAlgorithmNames[static_cast<std::size_t>(algorithm)];
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (std::size_t i = 0; i < kAlgorithmNames.size(); ++i)
    if (kAlgorithmNames[i] == name) return static_cast<Algorithm>(i);
  return std::nullopt;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError("invalid value for '" + key + "': " + why);
  };
  if (dataset.source != "synthetic" && dataset.source != "csv")
    fail("dataset", "must be 'synthetic' or 'csv'");
  if (dataset.source == "synthetic") {
    if (dataset.num_classes < 2) fail("num_classes", "need at least 2");
    if (dataset.dim < 2) fail("dim", "need at least 2");
    if (dataset.per_class < 1) fail("per_class", "need at least 1");
    if (!(dataset.spread >= 0.0)) fail("spread", "must be >= 0");
  } else if (dataset.csv_path.empty()) {
    fail("csv_path", "required when dataset=csv");
  }
  if (!(dataset.test_fraction >= 0.0 && dataset.test_fraction < 1.0))
    fail("test_fraction", "must lie in [0, 1)");
  if (num_clients < 2) fail("clients", "need at least 2");
  if (!(alpha > 0.0)) fail("alpha", "must be > 0");
  if (!(tau >= 0.0 && tau <= 1.0)) fail("tau", "must lie in [0, 1]");
  if (!(ridge.value >= 0.0)) fail("lambda", "must be >= 0");
  if (local_epochs < 1) fail("local_epochs", "must be >= 1");
  if (rounds < 1) fail("rounds", "must be >= 1");
  if (!(lr > 0.0)) fail("lr", "must be > 0");
  if (!(distill_lr > 0.0)) fail("distill_lr", "must be > 0");
  if (batch < 1) fail("batch", "must be >= 1");
  if (!(noise_sigma >= 0.0)) fail("noise_sigma", "must be >= 0");
  if (!(participation_rate > 0.0 && participation_rate <= 1.0))
    fail("participation_rate", "must lie in (0, 1]");
  if (!(beta >= 0.0)) fail("beta", "must be >= 0");
  if (related < 1) fail("related", "must be >= 1");
  if (sigma_period < 1) fail("sigma_period", "must be >= 1");
  if (arch != "cycle") {
    const auto names = arch_preset_names();
    if (std::find(names.begin(), names.end(), arch) == names.end())
      fail("arch", "unknown preset '" + arch + "'");
  }
}

ArchSpec RunConfig::arch_for(std::size_t client) const {
  const std::size_t classes = dataset.num_classes;
  if (arch == "cycle") {
    const auto names = arch_preset_names();
    return arch_preset(names[client % names.size()], dataset.dim, classes);
  }
  return arch_preset(arch, dataset.dim, classes);
}

double gate(double x, bool own_entry_nonempty) { return own_entry_nonempty ? x : 0.0; }

ad::Var gate(const ad::Var& x, bool own_entry_nonempty) {
  return own_entry_nonempty ? x : ad::scale(x, 0.0);
}

ad::Var train_objective(const BoundModel& bound, const Matrix& local_x,
                        std::span<const std::size_t> local_y, const Matrix& knowledge_x,
                        std::span<const std::size_t> knowledge_y, bool own_entry_nonempty) {
  if (bound.params.empty()) throw InputError("train_objective: unbound model");
  ad::Tape& tape = bound.params.front().tape();
  const std::size_t n_local = local_y.size();
  const std::size_t n_know = own_entry_nonempty ? knowledge_y.size() : 0;
  if (n_local + n_know == 0) throw InputError("train_objective: no contributing samples");

  std::optional<ad::Var> total;
  if (n_local > 0) {
    const auto out = forward_split(bound, tape.constant(local_x));
    total = ad::loss_ce_softmax(out.logits, local_y, Reduction::sum);
  }
  if (!knowledge_y.empty()) {
    const auto out = forward_split(bound, tape.constant(knowledge_x));
    const ad::Var term = gate(ad::loss_ce_softmax(out.logits, knowledge_y, Reduction::sum),
                              own_entry_nonempty);
    total = total ? ad::add(*total, term) : term;
  }
  return ad::scale(*total, 1.0 / static_cast<double>(n_local + n_know));
}

std::vector<double> personalized_train_epoch(ClientState& cs,
                                             std::span<const DistilledRecord> sampled,
                                             bool own_entry_nonempty, double lr,
                                             std::size_t batch) {
  const Dataset& train = cs.data.train;
  const std::size_t dim = cs.model.arch().input_dim;
  for (const DistilledRecord& r : sampled) {
    if (r.input.size() != dim) {
      throw InputError("personalized_train_epoch: record width " + std::to_string(r.input.size()) +
                       " does not match model input " + std::to_string(dim));
    }
    if (r.label >= cs.model.arch().num_classes)
      throw InputError("personalized_train_epoch: record label out of range");
  }
  const std::size_t n_local = train.size();
  std::vector<std::size_t> stream(n_local + sampled.size());
  std::iota(stream.begin(), stream.end(), std::size_t{0});
  shuffle(stream, cs.rng);

  std::vector<double> trace;
  std::vector<std::size_t> local_rows, local_y, know_y;
  for (std::size_t start = 0; start < stream.size(); start += batch) {
    const std::size_t end = std::min(stream.size(), start + batch);
    local_rows.clear();
    local_y.clear();
    know_y.clear();
    std::vector<double> know_values;
    for (std::size_t i = start; i < end; ++i) {
      const std::size_t s = stream[i];
      if (s < n_local) {
        local_rows.push_back(s);
        local_y.push_back(train.labels[s]);
      } else {
        const DistilledRecord& r = sampled[s - n_local];
        know_values.insert(know_values.end(), r.input.begin(), r.input.end());
        know_y.push_back(r.label);
      }
    }
    if (local_y.empty() && !own_entry_nonempty) continue;
    const Matrix local_x = gather_rows(train.inputs, local_rows);
    const Matrix know_x(know_y.size(), dim, std::move(know_values));

    ad::Tape tape;
    const BoundModel bound = bind(tape, cs.model, true);
    const ad::Var loss = train_objective(bound, local_x, local_y, know_x, know_y, own_entry_nonempty);
    tape.backward(loss);
    trace.push_back(loss.value()(0, 0));
    optimizer_step(cs.model, gradients(bound), lr);
  }
  return trace;
}

std::vector<double> local_train_epoch(ClientState& cs, double lr, std::size_t batch) {
  const Dataset& train = cs.data.train;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, cs.rng);
  std::vector<double> trace;
  for (std::size_t start = 0; start < order.size(); start += batch) {
    const std::size_t end = std::min(order.size(), start + batch);
    const std::span<const std::size_t> rows(order.data() + start, end - start);
    std::vector<std::size_t> labels;
    for (std::size_t r : rows) labels.push_back(train.labels[r]);
    ad::Tape tape;
    const BoundModel bound = bind(tape, cs.model, true);
    const auto out = forward_split(bound, tape.constant(gather_rows(train.inputs, rows)));
    const ad::Var loss = ad::loss_ce_softmax(out.logits, labels, Reduction::mean);
    tape.backward(loss);
    trace.push_back(loss.value()(0, 0));
    optimizer_step(cs.model, gradients(bound), lr);
  }
  return trace;
}

double evaluate_accuracy(const ModelBundle& m, const Dataset& d) {
  if (d.empty()) return 0.0;
  const Matrix logits = forward_logits(m, d.inputs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto row = logits.row(i);
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == d.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(d.size());
}

double evaluate_average_ua(std::span<const ClientState> clients) {
  if (clients.empty()) return 0.0;
  double s = 0.0;
  for (const ClientState& c : clients) s += c.best_accuracy;
  return s / static_cast<double>(clients.size());
}

Dataset build_dataset(const RunConfig& config) {
  if (config.dataset.source == "csv") {
    return load_csv(config.dataset.csv_path, config.dataset.csv_header, config.dataset.num_classes);
  }
  return make_synthetic(config.dataset.num_classes, config.dataset.dim, config.dataset.per_class,
                        config.dataset.spread, config.seed);
}

namespace {

RunConfig validated(RunConfig config, Algorithm algorithm) {
  config.validate();
  if (algorithm == Algorithm::param_avg && !config.homogeneous()) {
    throw ConfigError("invalid value for 'arch': param_avg requires one architecture for all clients");
  }
  return config;
}

}  // namespace

FederatedRun::FederatedRun(RunConfig config, Algorithm algorithm)
    : config_(validated(std::move(config), algorithm)),
      algorithm_(algorithm),
      ledger_(config_.byte_widths) {
  const Dataset full = build_dataset(config_);
  // the class count of csv data is only known after loading
  config_.dataset.num_classes = full.num_classes;
  config_.dataset.dim = full.dim();
  cache_.emplace(config_.num_clients, full.num_classes);
  auto parts = partition_dirichlet(full, config_.num_clients, config_.alpha,
                                   config_.dataset.test_fraction, config_.seed);
  clients_.reserve(parts.size());
  for (ClientDataset& part : parts) {
    ClientState cs;
    cs.client_id = part.client_id;
    cs.model = build_model(config_.arch_for(part.client_id), derive_seed(config_.seed, {part.client_id}));
    cs.profile = label_frequency(part);
    cs.data = std::move(part);
    cs.rng = make_rng(config_.seed, Stream::training, {cs.client_id});
    clients_.push_back(std::move(cs));
  }
  last_sources_.assign(clients_.size(), PrototypeSource::local_samples);
  last_downloads_.assign(clients_.size(), 0);

  if (algorithm_ == Algorithm::fedcache2) {
    for (const ClientState& cs : clients_) {
      transmit(ledger_,
               Payload{PayloadKind::label_profile, element_count(cs.profile), Direction::uplink, 0,
                       cs.client_id},
               cs.profile);
    }
  }
  if (algorithm_ == Algorithm::logits_cache) build_relations();
  metrics_.push_back(evaluate(0, std::vector<bool>(clients_.size(), true)));
}

RoundMetrics FederatedRun::evaluate(std::size_t round, const std::vector<bool>& online) {
  RoundMetrics m;
  m.round = round;
  m.online = online;
  for (ClientState& cs : clients_) {
    const double acc = evaluate_accuracy(cs.model, cs.data.test);
    cs.best_accuracy = round == 0 ? acc : std::max(cs.best_accuracy, acc);
    m.accuracy.push_back(acc);
    m.best_so_far.push_back(cs.best_accuracy);
    m.param_digest.push_back(parameter_digest(cs.model));
  }
  m.average_ua = evaluate_average_ua(clients_);
  m.cum_bytes_up = ledger_.cumulative(Direction::uplink, round);
  m.cum_bytes_down = ledger_.cumulative(Direction::downlink, round);
  return m;
}

const RoundMetrics& FederatedRun::step() {
  const std::size_t round = metrics_.size();
  std::vector<bool> online(clients_.size());
  for (std::size_t k = 0; k < clients_.size(); ++k)
    online[k] = draw_availability(round, k, config_.participation_rate, config_.seed);

  RoundMetrics partial;
  switch (algorithm_) {
    case Algorithm::fedcache2:
      run_round(round, online, partial);
      break;
    case Algorithm::logits_cache:
      baseline_logits_cache_round(round, online);
      break;
    case Algorithm::param_avg:
      baseline_param_avg_round(round, online);
      break;
    case Algorithm::local_only:
      local_only_round(online);
      break;
  }
  RoundMetrics m = evaluate(round, online);
  m.distill_failures = partial.distill_failures;
  m.mean_raw_distance = partial.mean_raw_distance;
  metrics_.push_back(std::move(m));
  return metrics_.back();
}

void FederatedRun::run_round(std::size_t round, const std::vector<bool>& online, RoundMetrics& m) {
  const SigmaMapping sigma =
      resample_sigma(clients_.size(), (round - 1) / config_.sigma_period, config_.seed);
  const std::size_t dim = config_.dataset.dim;
  double distance_sum = 0.0;
  std::size_t distance_count = 0;

  for (ClientState& cs : clients_) {
    const std::size_t k = cs.client_id;
    if (!online[k]) continue;

    // server → client: possible prototype hand-off
    std::vector<DistilledRecord> entry = cache_->fetch_by_client(sigma(k));
    if (config_.charge_prototype_init && !entry.empty()) {
      const std::size_t count = element_count(entry);
      entry = transmit(ledger_,
                       Payload{PayloadKind::distilled_data, count, Direction::downlink, round, k},
                       std::move(entry));
    }

    // client: distill and upload
    const PrototypeSet protos = init_prototypes(k, cs.data, entry, config_.seed, round);
    last_sources_[k] = protos.source;
    DistillOptions options;
    options.steps = config_.distill_steps;
    options.lr = config_.distill_lr;
    options.batch = config_.batch;
    options.noise_sigma = config_.noise_sigma;
    options.ridge = config_.ridge;
    options.round = round;
    options.seed = config_.seed;
    try {
      DistillResult distilled = distill_dataset(cs.model, cs.data, protos, options);
      for (double d : nearest_raw_distances(distilled.records, cs.data.train.inputs)) {
        distance_sum += d;
        ++distance_count;
      }
      const std::size_t count = element_count(distilled.records);
      auto uploaded = transmit(
          ledger_, Payload{PayloadKind::distilled_data, count, Direction::uplink, round, k},
          std::move(distilled.records));
      uploaded_.insert(uploaded_.end(), uploaded.begin(), uploaded.end());
      cache_->update_client_entry(k, std::move(uploaded));
    } catch (const DecompositionError& e) {
      ++m.distill_failures;
      log_.push_back("round " + std::to_string(round) + " client " + std::to_string(k) +
                     ": distillation aborted, keeping previous cache entry: " + e.what());
    }

    // server: sample and send; client: gated personalized training
    std::vector<DistilledRecord> sampled = cache_->sample_for_device(
        cs.profile, config_.tau, derive_seed(config_.seed, {round}), config_.sampling);
    const std::size_t sampled_count = element_count(sampled);
    sampled = transmit(ledger_,
                       Payload{PayloadKind::distilled_data, sampled_count, Direction::downlink,
                               round, k},
                       std::move(sampled));
    last_downloads_[k] = sampled.size();
    for (const DistilledRecord& r : sampled) {
      if (r.input.size() != dim) throw ConsistencyError("run_round: cached record width mismatch");
    }
    const bool own_entry = !cache_->entry_empty(k);
    for (std::size_t e = 0; e < config_.local_epochs; ++e) {
      personalized_train_epoch(cs, sampled, own_entry, config_.lr, config_.batch);
    }
  }
  m.mean_raw_distance = distance_count == 0 ? 0.0 : distance_sum / static_cast<double>(distance_count);
}

void FederatedRun::local_only_round(const std::vector<bool>& online) {
  for (ClientState& cs : clients_) {
    if (!online[cs.client_id]) continue;
    for (std::size_t e = 0; e < config_.local_epochs; ++e) local_train_epoch(cs, config_.lr, config_.batch);
  }
}

RunResult FederatedRun::finish() const {
  RunResult r;
  r.algorithm = algorithm_;
  r.config = config_;
  r.rounds = metrics_;
  r.ledger = ledger_;
  r.cache_snapshot = cache_->snapshot();
  r.log = log_;
  r.uploaded_records = uploaded_;
  return r;
}

RunResult run_experiment(const RunConfig& config, Algorithm algorithm) {
  FederatedRun run(config, algorithm);
  while (run.rounds_done() < run.config().rounds) run.step();
  return run.finish();
}

}  // namespace fedcache
