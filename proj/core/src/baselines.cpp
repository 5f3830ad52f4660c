// Comparison baselines: a per-sample logits cache with KL distillation, parameter
// averaging, and local-only training.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedcache/engine.hpp"
#include "fedcache/error.hpp"
#include "fedcache/numerics/losses.hpp"

namespace fedcache {
namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    dot += a[j] * b[j];
    na += a[j] * a[j];
    nb += b[j] * b[j];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

/// One epoch of CE + β·KL(teacher ‖ student) over local samples; rows without a teacher
/// contribute only the CE term.
void distill_train_epoch(ClientState& cs, const Matrix& teacher, const std::vector<bool>& has_teacher,
                         double beta, double lr, std::size_t batch) {
  const Dataset& train = cs.data.train;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, cs.rng);
  for (std::size_t start = 0; start < order.size(); start += batch) {
    const std::size_t end = std::min(order.size(), start + batch);
    const std::span<const std::size_t> rows(order.data() + start, end - start);
    std::vector<std::size_t> labels;
    std::vector<bool> taught;
    for (std::size_t row : rows) {
      labels.push_back(train.labels[row]);
      taught.push_back(has_teacher[row]);
    }
    ad::Tape tape;
    const BoundModel bound = bind(tape, cs.model, true);
    const ad::Var loss = logits_cache_objective(bound, gather_rows(train.inputs, rows), labels,
                                                gather_rows(teacher, rows), taught, beta);
    tape.backward(loss);
    optimizer_step(cs.model, gradients(bound), lr);
  }
}

}  // namespace

ad::Var logits_cache_objective(const BoundModel& bound, const Matrix& x, std::span<const std::size_t> labels,
                               const Matrix& teacher, const std::vector<bool>& has_teacher, double beta) {
  if (teacher.rows() != x.rows() || has_teacher.size() != x.rows()) {
    throw InputError("logits_cache_objective: teacher rows do not match the batch");
  }
  ad::Tape& tape = bound.params.front().tape();
  const auto out = forward_split(bound, tape.constant(x));
  ad::Var loss = ad::loss_ce_softmax(out.logits, labels, Reduction::mean);
  std::vector<std::size_t> taught;
  for (std::size_t i = 0; i < has_teacher.size(); ++i)
    if (has_teacher[i]) taught.push_back(i);
  if (taught.empty() || beta == 0.0) return loss;
  const ad::Var student = ad::gather_rows(out.logits, taught);
  const ad::Var kd = ad::loss_kl_softmax(student, tape.constant(gather_rows(teacher, taught)));
  const double weight = beta * static_cast<double>(taught.size()) / static_cast<double>(x.rows());
  return ad::add(loss, ad::scale(kd, weight));
}

std::vector<Matrix> average_parameters(std::span<const std::vector<Matrix>> uploads) {
  if (uploads.empty()) throw InputError("average_parameters: nothing to average");
  std::vector<Matrix> average = uploads.front();
  for (std::size_t u = 1; u < uploads.size(); ++u) {
    if (uploads[u].size() != average.size()) throw ConfigError("param_avg: heterogeneous models");
    for (std::size_t i = 0; i < average.size(); ++i) {
      if (!uploads[u][i].same_shape(average[i])) throw ConfigError("param_avg: heterogeneous models");
      average[i] += uploads[u][i];
    }
  }
  const double inv = 1.0 / static_cast<double>(uploads.size());
  for (Matrix& m : average) m *= inv;
  return average;
}

void FederatedRun::build_relations() {
  const std::size_t num_classes = config_.dataset.num_classes;
  relations_.assign(clients_.size(), {});
  cached_logits_.assign(clients_.size(), Matrix());
  has_logits_.assign(clients_.size(), false);
  for (const ClientState& cs : clients_) {
    const Dataset& mine = cs.data.train;
    auto& rel = relations_[cs.client_id];
    rel.resize(mine.size());
    for (std::size_t i = 0; i < mine.size(); ++i) {
      std::vector<std::pair<double, Related>> scored;
      for (const ClientState& other : clients_) {
        if (other.client_id == cs.client_id) continue;
        const Dataset& theirs = other.data.train;
        for (std::size_t j = 0; j < theirs.size(); ++j) {
          if (theirs.labels[j] != mine.labels[i] || mine.labels[i] >= num_classes) continue;
          scored.push_back({cosine(mine.inputs.row(i), theirs.inputs.row(j)), {other.client_id, j}});
        }
      }
      std::stable_sort(scored.begin(), scored.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      rel[i].reserve(scored.size());
      for (const auto& s : scored) rel[i].push_back(s.second);
    }
  }
}

void FederatedRun::baseline_logits_cache_round(std::size_t round, const std::vector<bool>& online) {
  const std::size_t num_classes = config_.dataset.num_classes;
  for (ClientState& cs : clients_) {
    const std::size_t k = cs.client_id;
    if (!online[k]) continue;
    const Dataset& train = cs.data.train;

    // server: gather up to R related cached logits per local sample
    std::vector<std::size_t> used(train.size(), 0);
    std::vector<double> block_values;
    for (std::size_t i = 0; i < train.size(); ++i) {
      for (const Related& r : relations_[k][i]) {
        if (used[i] == config_.related) break;
        if (!has_logits_[r.client]) continue;
        const auto row = cached_logits_[r.client].row(r.sample);
        block_values.insert(block_values.end(), row.begin(), row.end());
        ++used[i];
      }
    }
    const std::size_t block_rows = block_values.size() / num_classes;
    Matrix block(block_rows, num_classes, std::move(block_values));
    if (!block.empty()) {
      const std::size_t count = element_count(block);
      block = transmit(ledger_, Payload{PayloadKind::logits, count, Direction::downlink, round, k},
                       std::move(block));
    }

    // client: average each sample's related logits into its teacher
    Matrix teacher(train.size(), num_classes);
    std::vector<bool> has_teacher(train.size(), false);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (used[i] == 0) continue;
      has_teacher[i] = true;
      for (std::size_t r = 0; r < used[i]; ++r)
        for (std::size_t c = 0; c < num_classes; ++c) teacher(i, c) += block(offset + r, c);
      for (std::size_t c = 0; c < num_classes; ++c) teacher(i, c) /= static_cast<double>(used[i]);
      offset += used[i];
    }

    for (std::size_t e = 0; e < config_.local_epochs; ++e)
      distill_train_epoch(cs, teacher, has_teacher, config_.beta, config_.lr, config_.batch);

    // client → server: fresh per-sample logits keyed by sample index
    Matrix logits = forward_logits(cs.model, train.inputs);
    std::vector<std::size_t> index(train.size());
    std::iota(index.begin(), index.end(), std::size_t{0});
    transmit(ledger_,
             Payload{PayloadKind::sample_index, element_count(index), Direction::uplink, round, k},
             index);
    const std::size_t count = element_count(logits);
    cached_logits_[k] = transmit(
        ledger_, Payload{PayloadKind::logits, count, Direction::uplink, round, k}, std::move(logits));
    has_logits_[k] = true;
  }
}

void FederatedRun::baseline_param_avg_round(std::size_t round, const std::vector<bool>& online) {
  std::vector<std::size_t> participants;
  std::vector<std::vector<Matrix>> uploads;
  for (ClientState& cs : clients_) {
    if (!online[cs.client_id]) continue;
    for (std::size_t e = 0; e < config_.local_epochs; ++e) local_train_epoch(cs, config_.lr, config_.batch);
    const auto params = cs.model.parameters();
    std::vector<Matrix> uploaded = transmit(
        ledger_,
        Payload{PayloadKind::model_params, cs.model.param_count(), Direction::uplink, round, cs.client_id},
        std::vector<Matrix>(params.begin(), params.end()));
    uploads.push_back(std::move(uploaded));
    participants.push_back(cs.client_id);
  }
  if (participants.empty()) return;
  const std::vector<Matrix> average = average_parameters(uploads);

  for (std::size_t k : participants) {
    ClientState& cs = clients_[k];
    std::vector<Matrix> received = transmit(
        ledger_, Payload{PayloadKind::model_params, cs.model.param_count(), Direction::downlink, round, k},
        average);
    auto params = cs.model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) params[i] = std::move(received[i]);
  }
}

}  // namespace fedcache
