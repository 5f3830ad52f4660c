#include "fedcache/distill.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "fedcache/error.hpp"
#include "fedcache/format.hpp"
#include "fedcache/numerics/cholesky.hpp"
#include "fedcache/random.hpp"

namespace fedcache {

Matrix record_inputs(std::span<const DistilledRecord> records) {
  if (records.empty()) return Matrix();
  const std::size_t dim = records.front().input.size();
  Matrix out(records.size(), dim);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].input.size() != dim) throw InputError("record_inputs: ragged record inputs");
    std::copy(records[i].input.begin(), records[i].input.end(), out.row(i).begin());
  }
  return out;
}

std::vector<std::size_t> record_labels(std::span<const DistilledRecord> records) {
  std::vector<std::size_t> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.label);
  return out;
}

void require_distinct_labels(std::span<const DistilledRecord> records, const char* what) {
  std::vector<std::size_t> labels = record_labels(records);
  std::sort(labels.begin(), labels.end());
  if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
    throw InputError(std::string(what) + ": two records share a label");
  }
}

SigmaMapping resample_sigma(std::size_t num_clients, std::size_t round, std::uint64_t seed) {
  if (num_clients == 0) throw InputError("resample_sigma: need at least one client");
  Rng rng = make_rng(seed, Stream::sigma, {round});
  SigmaMapping s;
  s.round = round;
  s.map.resize(num_clients);
  for (auto& target : s.map) target = uniform_index(rng, num_clients);
  return s;
}

namespace {

DistilledRecord local_record(const ClientDataset& cd, std::size_t row, std::size_t round) {
  const auto x = cd.train.inputs.row(row);
  return DistilledRecord{cd.client_id, cd.train.labels[row], {x.begin(), x.end()}, round};
}

}  // namespace

PrototypeSet init_prototypes(std::size_t client, const ClientDataset& cd,
                             std::span<const DistilledRecord> cache_entry, std::uint64_t seed,
                             std::size_t round) {
  if (cd.train.empty()) throw InputError("init_prototypes: client has no training samples");
  const std::size_t num_classes = cd.train.num_classes;
  std::vector<std::vector<std::size_t>> rows_of(num_classes);
  for (std::size_t i = 0; i < cd.train.size(); ++i) rows_of[cd.train.labels[i]].push_back(i);

  PrototypeSet set;
  std::vector<bool> covered(num_classes, false);
  for (const DistilledRecord& r : cache_entry) {
    if (r.label >= num_classes) throw InputError("init_prototypes: cached label out of range");
    if (rows_of[r.label].empty() || covered[r.label]) continue;
    covered[r.label] = true;
    set.records.push_back(r);
  }
  if (!set.records.empty()) set.source = PrototypeSource::cache_replacement;

  Rng rng = make_rng(seed, Stream::prototype_init, {client, round});
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (rows_of[c].empty() || covered[c]) continue;
    const std::size_t row = rows_of[c][uniform_index(rng, rows_of[c].size())];
    set.records.push_back(local_record(cd, row, round));
  }
  std::sort(set.records.begin(), set.records.end(),
            [](const DistilledRecord& a, const DistilledRecord& b) { return a.label < b.label; });
  return set;
}

GramPair gram_pair(const Matrix& local_features, const Matrix& proto_features) {
  if (local_features.cols() != proto_features.cols()) {
    throw InputError("gram_pair: feature widths " + std::to_string(local_features.cols()) +
                     " and " + std::to_string(proto_features.cols()) + " differ");
  }
  return {matmul_nt(local_features, proto_features), matmul_nt(proto_features, proto_features)};
}

GramVars gram_pair(const ad::Var& local_features, const ad::Var& proto_features) {
  if (local_features.cols() != proto_features.cols()) {
    throw InputError("gram_pair: feature widths differ");
  }
  return {ad::matmul_nt(local_features, proto_features),
          ad::matmul_nt(proto_features, proto_features)};
}

namespace {

void check_krr_shapes(const Matrix& k_bl, const Matrix& k_bb, const Matrix& y_local,
                      const Matrix& y_proto) {
  const std::size_t n = k_bl.rows();
  const std::size_t m = k_bl.cols();
  if (k_bb.rows() != m || k_bb.cols() != m || y_local.rows() != n || y_proto.rows() != m ||
      y_local.cols() != y_proto.cols()) {
    throw InputError("krr_loss: inconsistent shapes");
  }
}

}  // namespace

double krr_loss(const Matrix& k_bl, const Matrix& k_bb, const Matrix& y_local,
                const Matrix& y_proto, double lambda) {
  check_krr_shapes(k_bl, k_bb, y_local, y_proto);
  const Matrix alpha = solve_spd_regularized(k_bb, lambda, y_proto);
  const Matrix residual = y_local - matmul(k_bl, alpha);
  double s = 0.0;
  for (double v : residual.values()) s += v * v;
  return 0.5 * s;
}

ad::Var krr_loss(const ad::Var& k_bl, const ad::Var& k_bb, const Matrix& y_local,
                 const Matrix& y_proto, double lambda) {
  check_krr_shapes(k_bl.value(), k_bb.value(), y_local, y_proto);
  ad::Tape& t = k_bl.tape();
  const ad::Var alpha = ad::solve_spd_regularized(k_bb, lambda, t.constant(y_proto));
  const ad::Var prediction = ad::matmul(k_bl, alpha);
  return ad::half_squared_norm(ad::sub(t.constant(y_local), prediction));
}

double RidgePolicy::resolve(const Matrix& k_bb) const {
  if (kind == Kind::fixed) return value;
  double trace = 0.0;
  for (std::size_t i = 0; i < k_bb.rows(); ++i) trace += k_bb(i, i);
  const double mean = k_bb.rows() == 0 ? 0.0 : trace / static_cast<double>(k_bb.rows());
  return std::max(value * mean, kMinRidge);
}

KrrEvaluation krr_objective(const ModelBundle& model, const Matrix& local_x,
                            std::span<const std::size_t> local_labels, const Matrix& proto_x,
                            std::span<const std::size_t> proto_labels, const RidgePolicy& ridge) {
  const std::size_t num_classes = model.arch().num_classes;
  ad::Tape tape;
  const BoundModel bound = bind(tape, model, false);
  const ad::Var xb = tape.variable(proto_x);
  const ad::Var fl = forward_features(bound, tape.constant(local_x));
  const ad::Var fb = forward_features(bound, xb);
  const GramVars gram = gram_pair(fl, fb);
  KrrEvaluation eval;
  eval.lambda = ridge.resolve(gram.proto_proto.value());
  const ad::Var loss = krr_loss(gram.local_proto, gram.proto_proto,
                                one_hot(local_labels, num_classes),
                                one_hot(proto_labels, num_classes), eval.lambda);
  tape.backward(loss);
  eval.loss = loss.value()(0, 0);
  eval.grad = xb.grad();
  return eval;
}

DistillResult distill_dataset(const ModelBundle& model, const ClientDataset& cd,
                              const PrototypeSet& protos, const DistillOptions& options) {
  if (protos.records.empty()) throw InputError("distill_dataset: no prototypes");
  if (cd.train.empty()) throw InputError("distill_dataset: client has no training samples");
  require_distinct_labels(protos.records, "distill_dataset");

  Matrix proto_x = record_inputs(protos.records);
  const std::vector<std::size_t> proto_labels = record_labels(protos.records);
  const std::size_t n = cd.train.size();
  const std::size_t batch = std::min(std::max<std::size_t>(options.batch, 1), n);

  DistillResult result;
  result.initial_loss =
      krr_objective(model, cd.train.inputs, cd.train.labels, proto_x, proto_labels, options.ridge)
          .loss;
  result.final_loss = result.initial_loss;

  Rng batch_rng = make_rng(options.seed, Stream::distill_batch, {cd.client_id, options.round});
  AdamState adam;
  std::vector<std::size_t> labels(batch);
  for (std::size_t step = 0; step < options.steps; ++step) {
    const std::vector<std::size_t> rows = sample_without_replacement(batch_rng, n, batch);
    for (std::size_t i = 0; i < batch; ++i) labels[i] = cd.train.labels[rows[i]];
    const Matrix local_x = augment_batch(
        gather_rows(cd.train.inputs, rows), options.noise_sigma,
        derive_seed(options.seed, {cd.client_id, options.round, step}));
    KrrEvaluation eval =
        krr_objective(model, local_x, labels, proto_x, proto_labels, options.ridge);
    result.loss_trace.push_back(eval.loss);
    adam_step(std::span<Matrix>(&proto_x, 1), std::span<const Matrix>(&eval.grad, 1), adam,
              options.lr);
  }
  if (options.steps > 0) {
    result.final_loss = krr_objective(model, cd.train.inputs, cd.train.labels, proto_x,
                                      proto_labels, options.ridge)
                            .loss;
  }

  result.records.reserve(protos.records.size());
  for (std::size_t i = 0; i < protos.records.size(); ++i) {
    const auto row = proto_x.row(i);
    result.records.push_back(
        DistilledRecord{cd.client_id, proto_labels[i], {row.begin(), row.end()}, options.round});
  }
  return result;
}

std::vector<double> nearest_raw_distances(std::span<const DistilledRecord> records,
                                          const Matrix& raw) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const DistilledRecord& r : records) {
    if (r.input.size() != raw.cols()) throw InputError("nearest_raw_distances: width mismatch");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < raw.rows(); ++i) {
      double d2 = 0.0;
      const auto row = raw.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) d2 += (row[j] - r.input[j]) * (row[j] - r.input[j]);
      best = std::min(best, d2);
    }
    out.push_back(std::sqrt(best));
  }
  return out;
}

void write_records_csv(std::ostream& out, std::span<const DistilledRecord> records) {
  const std::size_t dim = records.empty() ? 0 : records.front().input.size();
  out << "producer,round,label";
  for (std::size_t j = 0; j < dim; ++j) out << ",x" << j;
  out << '\n';
  for (const DistilledRecord& r : records) {
    out << r.producer << ',' << r.round_produced << ',' << r.label;
    for (double v : r.input) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace fedcache
