// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "fedcache/cache.hpp"
#include "fedcache/data.hpp"
#include "fedcache/distill.hpp"
#include "fedcache/engine.hpp"
#include "fedcache/format.hpp"
#include "fedcache/numerics/finite_diff.hpp"
#include "fedcache/numerics/losses.hpp"
#include "fedcache/tools/config.hpp"
#include "fedcache/tools/outputs.hpp"
#include "fedcache/tools/presets.hpp"
#include "fedcache/tools/runner.hpp"
#include "ledger_oracle.hpp"
#include "oracles.hpp"

using namespace fedcache;
using namespace fedcache::tools;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

Experiment preset_experiment(std::string_view name) {
  ExperimentSpec spec;
  apply_entries(spec, parse_config_text(find_preset(name).text));
  return build_experiment(spec);
}

// Preset runs are shared between criteria.
const std::vector<CellResult>& preset_cells(const std::string& name) {
  static std::map<std::string, std::vector<CellResult>> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, run_cells(preset_experiment(name))).first;
  return it->second;
}

std::vector<const RunResult*> runs_of(const std::vector<CellResult>& cells, Algorithm a,
                                      const std::string& variant = "base") {
  std::vector<const RunResult*> out;
  for (const CellResult& c : cells)
    if (c.result.algorithm == a && c.variant == variant) out.push_back(&c.result);
  return out;
}

double mean_final_ua(const std::vector<const RunResult*>& runs) {
  double s = 0.0;
  for (const RunResult* r : runs) s += final_average_ua(*r);
  return s / static_cast<double>(runs.size());
}

std::vector<double> distribution(std::span<const std::size_t> labels, std::size_t num_classes) {
  const auto counts = class_counts(labels, num_classes);
  std::vector<double> p(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c)
    p[c] = static_cast<double>(counts[c]) / static_cast<double>(labels.size());
  return p;
}

double kink_margin(const ModelBundle& m, const Matrix& x) {
  double margin = INFINITY;
  const Matrix pre = matmul(x, m.weight(0));
  for (std::size_t i = 0; i < pre.rows(); ++i)
    for (std::size_t j = 0; j < pre.cols(); ++j) margin = std::min(margin, std::fabs(pre(i, j) + m.bias(0)(0, j)));
  return margin;
}

// 1. Gradient fidelity
Verdict gradient_fidelity() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(2024);
  const std::size_t instances = 25;
  double worst_krr = 0.0, worst_obj = 0.0;
  std::size_t krr_done = 0, obj_done = 0, skipped = 0;

  // krr_loss through gram_pair and a one-hidden-layer extractor, w.r.t. prototype inputs
  for (std::uint64_t t = 0; krr_done < instances; ++t) {
    const ModelBundle m = build_model(ArchSpec{"one-hidden", 5, {7}, 3}, 1000 + t);
    const Matrix local = oracle::random_matrix(9, 5, gen);
    const Matrix proto = oracle::random_matrix(3, 5, gen);
    if (kink_margin(m, proto) < 1e-3) {  // central differences straddling a ReLU kink
      ++skipped;
      continue;
    }
    const std::vector<std::size_t> yl{0, 1, 2, 0, 1, 2, 0, 1, 2}, yp{0, 1, 2};
    const KrrEvaluation ev = krr_objective(m, local, yl, proto, yp, RidgePolicy{});
    const RidgePolicy held{RidgePolicy::Kind::fixed, ev.lambda};
    const Matrix numeric = finite_diff_gradient(
        [&](const Matrix& p) { return krr_objective(m, local, yl, p, yp, held).loss; }, proto, 1e-5);
    worst_krr = std::max(worst_krr, oracle::relative_error(ev.grad, numeric, 1e-7));
    ++krr_done;
  }

  // gated personalized objective w.r.t. every model parameter
  for (std::uint64_t t = 0; obj_done < instances; ++t) {
    const ModelBundle m = build_model(ArchSpec{"one-hidden", 5, {7}, 3}, 2000 + t);
    const Matrix lx = oracle::random_matrix(6, 5, gen), kx = oracle::random_matrix(4, 5, gen);
    if (std::min(kink_margin(m, lx), kink_margin(m, kx)) < 1e-3) {
      ++skipped;
      continue;
    }
    const std::vector<std::size_t> ly{0, 1, 2, 2, 1, 0}, ky{1, 2, 0, 1};
    ad::Tape tape;
    const BoundModel bound = bind(tape, m, true);
    tape.backward(train_objective(bound, lx, ly, kx, ky, true));
    const auto grads = gradients(bound);
    for (std::size_t i = 0; i < grads.size(); ++i) {
      const Matrix numeric = finite_diff_gradient(
          [&](const Matrix& p) {
            ModelBundle probe = m;
            probe.parameters()[i] = p;
            ad::Tape tp;
            return train_objective(bind(tp, probe, false), lx, ly, kx, ky, true).value()(0, 0);
          },
          m.parameters()[i], 1e-5);
      worst_obj = std::max(worst_obj, oracle::relative_error(grads[i], numeric, 1e-7));
    }
    ++obj_done;
  }
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = worst_krr < 1e-4 && worst_obj < 1e-4 && secs < 30.0;
  v.detail = "max rel err krr " + sci(worst_krr) + ", objective " + sci(worst_obj) + " over " +
             std::to_string(instances) + "+" + std::to_string(instances) + " instances (" +
             std::to_string(skipped) + " near-kink draws redrawn), " + fmt(secs, 2) + " s";
  return v;
}

// 2. KRR fixed point
Verdict krr_fixed_point() {
  std::mt19937_64 gen(7);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    Matrix f = oracle::random_matrix(1, 6, gen);
    f(0, t % 6) += 1.0;  // nonzero features
    Matrix y(1, 4);
    y(0, static_cast<std::size_t>(t) % 4) = 1.0;
    const GramPair g = gram_pair(f, f);
    worst = std::max(worst, krr_loss(g.local_proto, g.proto_proto, y, y, 0.0));
  }
  // and through a real extractor, the prototype being the sole local sample
  const ModelBundle m = build_model(arch_preset("mlp-s", 6, 4), 3);
  const Matrix x = oracle::random_matrix(1, 6, gen);
  const std::vector<std::size_t> y{2};
  if (sum(forward_features(m, x)) != 0.0) {
    const KrrEvaluation ev = krr_objective(m, x, y, x, y, RidgePolicy{RidgePolicy::Kind::fixed, 0.0});
    worst = std::max(worst, ev.loss);
  }
  return {worst < 1e-10, "max loss " + sci(worst) + " over 51 instances"};
}

// 3. Sampling law
Verdict sampling_law() {
  Verdict v;
  std::mt19937_64 gen(11);
  std::size_t checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t K = 3 + gen() % 10, C = 2 + gen() % 5;
    KnowledgeCache kc(K, C);
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<DistilledRecord> entry;
      for (std::size_t c = 0; c < C; ++c)
        if (gen() % 3 != 0) entry.push_back(DistilledRecord{k, c, {static_cast<double>(gen() % 997)}, 0});
      kc.update_client_entry(k, entry);
    }
    std::vector<double> freqs(C);
    for (double& f : freqs) f = static_cast<double>(gen() % 100);
    const double total = std::accumulate(freqs.begin(), freqs.end(), 0.0) + 1.0;
    for (double& f : freqs) f /= total;
    const LabelProfile profile{0, freqs};
    for (double tau : {0.0, 0.5, 1.0}) {
      const auto s = kc.sample_for_device(profile, tau, gen());
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t avail = kc.fetch_by_class(c).size();
        const auto want = std::min<std::size_t>(
            avail, static_cast<std::size_t>(std::llround((tau + (1 - tau) * freqs[c]) * static_cast<double>(avail))));
        const auto got = static_cast<std::size_t>(
            std::count_if(s.begin(), s.end(), [c](const DistilledRecord& r) { return r.label == c; }));
        if (got != want) v.pass = false;
        ++checked;
      }
      if (tau == 1.0 && s.size() != kc.size()) v.pass = false;
    }
  }

  // inclusion frequency over 10^4 seeds against the hypergeometric marginal quota/available
  KnowledgeCache kc(10, 2);
  for (std::size_t k = 0; k < 10; ++k)
    kc.update_client_entry(k, {DistilledRecord{k, 0, {1.0 * k}, 0}, DistilledRecord{k, 1, {-1.0 * k}, 0}});
  const LabelProfile p{3, {0.3, 0.7}};
  const std::size_t seeds = 10000;
  double worst_z = 0.0;
  for (double tau : {0.0, 0.5}) {
    std::map<std::pair<std::size_t, std::size_t>, double> hits;
    for (std::uint64_t seed = 0; seed < seeds; ++seed)
      for (const auto& r : kc.sample_for_device(p, tau, seed)) hits[{r.producer, r.label}] += 1.0;
    for (const auto& r : kc.snapshot()) {
      const double q = static_cast<double>(class_quota(tau, p.freqs[r.label], 10)) / 10.0;
      const double sigma = std::sqrt(q * (1 - q) / seeds);
      const double dev = std::fabs(hits[{r.producer, r.label}] / seeds - q);
      if (sigma == 0.0) {
        if (dev != 0.0) v.pass = false;
        continue;
      }
      worst_z = std::max(worst_z, dev / sigma);
    }
  }
  if (worst_z > 3.0) v.pass = false;
  v.detail = std::to_string(checked) + " per-class counts exact, full cache at tau=1, max inclusion z " + fmt(worst_z, 2);
  return v;
}

// 4. Cache consistency
Verdict cache_consistency() {
  using Key = std::tuple<std::size_t, std::size_t, std::vector<double>, std::size_t>;
  auto keys = [](const std::vector<DistilledRecord>& rs) {
    std::multiset<Key> out;
    for (const auto& r : rs) out.insert({r.producer, r.label, r.input, r.round_produced});
    return out;
  };
  std::mt19937_64 gen(13);
  const std::size_t K = 8, C = 5;
  KnowledgeCache kc(K, C);
  std::size_t violations = 0;
  for (std::size_t op = 0; op < 1000; ++op) {
    switch (gen() % 4) {
      case 0:
      case 1: {
        const std::size_t k = gen() % K;
        std::vector<DistilledRecord> entry;
        for (std::size_t c = 0; c < C; ++c)
          if (gen() % 2) entry.push_back(DistilledRecord{k, c, {static_cast<double>(gen() % 100), 1.0}, op});
        kc.update_client_entry(k, entry);
        break;
      }
      case 2:
        (void)kc.fetch_by_class(gen() % C);
        break;
      default:
        (void)kc.sample_for_device(LabelProfile{0, std::vector<double>(C, 1.0 / C)}, 0.5, op);
    }
    std::vector<DistilledRecord> by_client, by_class;
    for (std::size_t k = 0; k < K; ++k) {
      const auto e = kc.fetch_by_client(k);
      by_client.insert(by_client.end(), e.begin(), e.end());
    }
    for (std::size_t c = 0; c < C; ++c) {
      const auto e = kc.fetch_by_class(c);
      for (const auto& r : e)
        if (r.label != c) ++violations;
      by_class.insert(by_class.end(), e.begin(), e.end());
    }
    if (keys(by_client) != keys(by_class) || by_client.size() != kc.size()) ++violations;
  }
  return {violations == 0, "1000 interleaved operations, " + std::to_string(violations) + " view mismatches"};
}

// 5. Gate/objective identity
Verdict gate_identity() {
  const Experiment e = preset_experiment("desk-default");
  const RunConfig& cfg = e.variants.front().config;
  const FederatedRun run(cfg, Algorithm::fedcache2);
  const KnowledgeCache empty(cfg.num_clients, cfg.dataset.num_classes);
  double worst = 0.0;
  bool same_params = true;
  for (const ClientState& original : run.clients()) {
    ClientState a = original, b = original;
    const auto sampled = empty.sample_for_device(a.profile, cfg.tau, 1);
    const auto pt = personalized_train_epoch(a, sampled, !empty.entry_empty(a.client_id), cfg.lr, cfg.batch);
    const auto lt = local_train_epoch(b, cfg.lr, cfg.batch);
    if (pt.size() != lt.size()) return {false, "trace lengths differ"};
    for (std::size_t i = 0; i < pt.size(); ++i) worst = std::max(worst, std::fabs(pt[i] - lt[i]));
    same_params = same_params && parameter_digest(a.model) == parameter_digest(b.model);
  }
  return {worst <= 1e-12 && same_params,
          "max trace difference " + sci(worst) + " over " + std::to_string(cfg.num_clients) + " clients"};
}

// 6. Partition validity
Verdict partition_validity() {
  Verdict v;
  const Dataset d = make_synthetic(4, 8, 100, 0.5, 0);
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> log_alpha(std::log(0.1), std::log(100.0));
  for (int pair = 0; pair < 50; ++pair) {
    const double alpha = std::exp(log_alpha(gen));
    const std::uint64_t seed = gen();
    std::vector<std::size_t> seen;
    for (const ClientDataset& c : partition_dirichlet(d, 10, alpha, 0.2, seed)) {
      seen.insert(seen.end(), c.train_indices.begin(), c.train_indices.end());
      seen.insert(seen.end(), c.test_indices.begin(), c.test_indices.end());
    }
    std::sort(seen.begin(), seen.end());
    std::vector<std::size_t> all(d.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    if (seen != all) v.pass = false;
  }

  const Dataset big = make_synthetic(4, 4, 1000, 0.5, 0);
  double worst_dev = 0.0;
  for (const ClientDataset& c : partition_dirichlet(big, 10, 1e6, 0.0, 1))
    for (double p : distribution(c.train.labels, 4)) worst_dev = std::max(worst_dev, std::fabs(p - 0.25));
  if (worst_dev >= 0.05) v.pass = false;

  auto mean_entropy = [&](double alpha) {
    double total = 0.0;
    std::size_t n = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed)
      for (const ClientDataset& c : partition_dirichlet(d, 10, alpha, 0.2, seed)) {
        total += oracle::entropy(distribution(c.train.labels, 4));
        ++n;
      }
    return total / static_cast<double>(n);
  };
  const double h05 = mean_entropy(0.5), h2 = mean_entropy(2.0);
  if (!(h05 < h2)) v.pass = false;
  v.detail = "50 (alpha in [0.1, 100], seed) pairs exhaustive and disjoint, alpha=1e6 max deviation " + fmt(worst_dev) +
             ", mean entropy " + fmt(h05) + " (0.5) vs " + fmt(h2) + " (2.0)";
  return v;
}

// 7. Ledger exactness
Verdict ledger_exactness() {
  const Experiment e = preset_experiment("desk-default");
  std::size_t rounds_checked = 0, mismatches = 0;
  for (std::uint64_t seed : e.seeds) {
    RunConfig cfg = e.variants.front().config;
    cfg.seed = seed;
    FederatedRun fc2(cfg, Algorithm::fedcache2);
    FederatedRun avg(cfg, Algorithm::param_avg);
    const std::uint64_t pc = avg.clients().front().model.param_count();
    for (std::size_t r = 1; r <= cfg.rounds; ++r) {
      const auto before = oracle::cache_entries(fc2.cache());
      fc2.step();
      const auto want = oracle::expected_round_bytes(before, oracle::cache_entries(fc2.cache()), fc2.clients(),
                                                     cfg.tau, cfg.dataset.dim);
      if (fc2.ledger().round_total(Direction::uplink, r) != want.up ||
          fc2.ledger().round_total(Direction::downlink, r) != want.down)
        ++mismatches;
      avg.step();
      if (avg.ledger().round_total(Direction::uplink, r) + avg.ledger().round_total(Direction::downlink, r) !=
          2 * cfg.num_clients * pc * 4)
        ++mismatches;
      rounds_checked += 2;
    }
  }
  return {mismatches == 0, std::to_string(rounds_checked) + " round totals checked, " +
                               std::to_string(mismatches) + " mismatches"};
}

// First cumulative byte count (up + down, all clients) at which the seed-averaged UA curve
// reaches target; infinity if it never does.
double bytes_to_reach(const std::vector<const RunResult*>& runs, double target) {
  const std::size_t rounds = runs.front()->rounds.size();
  for (std::size_t r = 0; r < rounds; ++r) {
    double ua = 0.0, bytes = 0.0;
    for (const RunResult* run : runs) {
      ua += run->rounds[r].average_ua;
      bytes += static_cast<double>(run->rounds[r].cum_bytes_up + run->rounds[r].cum_bytes_down);
    }
    if (ua / runs.size() >= target) return bytes / runs.size();
  }
  return INFINITY;
}

// 8. Communication-efficiency direction
Verdict efficiency_direction() {
  const auto t0 = Clock::now();
  const auto& cells = preset_cells("desk-default");
  const double target = mean_final_ua(runs_of(cells, Algorithm::local_only));
  const double fc2 = bytes_to_reach(runs_of(cells, Algorithm::fedcache2), target);
  const double avg = bytes_to_reach(runs_of(cells, Algorithm::param_avg), target);
  const double ratio = avg / fc2;
  const double secs = seconds_since(t0);
  const std::string avg_text = std::isinf(avg) ? "never" : fmt(avg, 0);
  return {std::isfinite(fc2) && ratio >= 10.0 && secs < 300.0,
          "target UA " + fmt(target) + ": fedcache2 " + fmt(fc2, 0) + " bytes, param_avg " + avg_text +
              " bytes, ratio " + (std::isinf(ratio) ? std::string("inf") : fmt(ratio, 1))};
}

// 9. Performance direction
Verdict performance_direction() {
  const auto t0 = Clock::now();
  const auto& cells = preset_cells("desk-default");
  const double fc2 = mean_final_ua(runs_of(cells, Algorithm::fedcache2));
  const double logits = mean_final_ua(runs_of(cells, Algorithm::logits_cache));
  const double avg = mean_final_ua(runs_of(cells, Algorithm::param_avg));
  const double local = mean_final_ua(runs_of(cells, Algorithm::local_only));
  return {fc2 > logits && fc2 - local >= 0.02 && seconds_since(t0) < 600.0,
          "mean final UA fedcache2 " + fmt(fc2) + ", logits_cache " + fmt(logits) + ", param_avg " + fmt(avg) +
              ", local_only " + fmt(local) + " (margin over local " + fmt(fc2 - local) + ")"};
}

// 10. τ-ablation shape
Verdict tau_shape() {
  const auto& cells = preset_cells("tau-sweep");
  const Experiment e = preset_experiment("tau-sweep");
  Verdict v;
  std::string report;
  std::map<std::string, std::map<std::uint64_t, std::uint64_t>> down;
  for (const Variant& var : e.variants) {
    const auto runs = runs_of(cells, Algorithm::fedcache2, var.label);
    double bytes = 0.0;
    for (const CellResult& c : cells)
      if (c.variant == var.label) down[var.label][c.seed] = c.result.ledger.total(Direction::downlink);
    for (const RunResult* r : runs) bytes += static_cast<double>(r->ledger.total(Direction::downlink));
    report += " tau=" + format_double(var.config.tau) + " UA " + fmt(mean_final_ua(runs)) + " down " +
              fmt(bytes / runs.size(), 0) + ";";
  }
  for (std::uint64_t seed : e.seeds)
    if (!(down["tau_0"][seed] < down["tau_0.5"][seed] && down["tau_0.5"][seed] < down["tau_1.0"][seed]))
      v.pass = false;
  v.detail = "downlink strictly increasing over tau {0, 0.5, 1} on every seed;" + report;
  if (!v.pass) v.detail = "downlink not strictly increasing;" + report;
  return v;
}

// 11. Heterogeneity run
Verdict heterogeneity() {
  const auto& hetero = preset_cells("model-hetero");
  const auto& homo = preset_cells("desk-default");
  Verdict v;
  std::string per_arch;
  const auto runs = runs_of(hetero, Algorithm::fedcache2);
  for (std::size_t slot = 0; slot < 3; ++slot) {
    double first = 0.0, last = 0.0;
    std::size_t n = 0;
    std::string name;
    for (const RunResult* r : runs) {
      for (std::size_t k = slot; k < r->config.num_clients; k += 3) {
        first += r->rounds.front().accuracy[k];
        last += r->rounds.back().accuracy[k];
        name = r->config.arch_for(k).name;
        ++n;
      }
    }
    first /= n;
    last /= n;
    if (!(last > first)) v.pass = false;
    per_arch += " " + name + " " + fmt(first) + "->" + fmt(last) + ";";
  }
  const double h = mean_final_ua(runs);
  const double s = mean_final_ua(runs_of(homo, Algorithm::fedcache2));
  if (!(h >= s)) v.pass = false;
  v.detail = "round-0 -> final accuracy" + per_arch + " mean UA hetero " + fmt(h) + " vs all-mlp-s " + fmt(s);
  return v;
}

// 12. Uncertainty tolerance
Verdict availability() {
  const auto& cells = preset_cells("availability");
  Verdict v;
  std::size_t offline = 0, changed = 0;
  std::map<Algorithm, std::vector<const RunResult*>> by_algo;
  for (const CellResult& c : cells) {
    const RunResult& r = c.result;
    by_algo[r.algorithm].push_back(&r);
    if (r.rounds.size() != r.config.rounds + 1) v.pass = false;
    for (std::size_t t = 1; t < r.rounds.size(); ++t)
      for (std::size_t k = 0; k < r.config.num_clients; ++k) {
        if (r.rounds[t].online[k]) continue;
        ++offline;
        if (r.rounds[t].param_digest[k] != r.rounds[t - 1].param_digest[k]) ++changed;
      }
  }
  std::string uas;
  for (const auto& [algo, runs] : by_algo) {
    const double ua = mean_final_ua(runs);
    if (!(ua > 0.25)) v.pass = false;
    uas += " " + std::string(to_string(algo)) + " " + fmt(ua);
  }
  if (changed != 0 || offline == 0) v.pass = false;
  v.detail = std::to_string(offline) + " offline client-rounds, " + std::to_string(changed) +
             " with changed parameters; final UA (chance 0.25)" + uas;
  return v;
}

// 13. Determinism
Verdict determinism() {
  Verdict v;
  std::size_t compared = 0;
  for (const Preset& p : presets()) {
    const Experiment e = preset_experiment(p.name);
    const auto again = run_cells(e, 2);
    const auto& first = preset_cells(std::string(p.name));
    if (again.size() != first.size()) v.pass = false;
    for (std::size_t i = 0; i < std::min(again.size(), first.size()); ++i) {
      std::ostringstream m1, m2, l1, l2;
      write_metrics_csv(m1, first[i].result);
      write_metrics_csv(m2, again[i].result);
      first[i].result.ledger.write_csv(l1);
      again[i].result.ledger.write_csv(l2);
      if (m1.str() != m2.str() || l1.str() != l2.str()) v.pass = false;
      compared += 2;
    }
  }
  v.detail = std::to_string(compared) + " CSVs across every preset compared byte for byte (rerun on 2 threads)";
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient fidelity", gradient_fidelity},
      {"KRR fixed point", krr_fixed_point},
      {"sampling law", sampling_law},
      {"cache consistency", cache_consistency},
      {"gate/objective identity", gate_identity},
      {"partition validity", partition_validity},
      {"ledger exactness", ledger_exactness},
      {"communication-efficiency direction", efficiency_direction},
      {"performance direction", performance_direction},
      {"tau-ablation shape", tau_shape},
      {"heterogeneity run", heterogeneity},
      {"uncertainty tolerance", availability},
      {"determinism", determinism},
  };
  std::size_t failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << (i + 1 < 10 ? " " : "") << i + 1 << "  "
              << criteria[i].first << ": " << v.detail << std::endl;
  }
  std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
