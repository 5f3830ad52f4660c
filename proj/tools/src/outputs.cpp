#include "fedcache/tools/outputs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "fedcache/error.hpp"
#include "fedcache/format.hpp"

namespace fedcache::tools {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

/// Per-client cumulative bytes through each round, indexed [round][client].
struct ClientBytes {
  std::vector<std::vector<std::uint64_t>> up;
  std::vector<std::vector<std::uint64_t>> down;
};

ClientBytes per_client_cumulative(const RunResult& run) {
  const std::size_t rounds = run.rounds.size();
  const std::size_t clients = run.config.num_clients;
  ClientBytes b{std::vector(rounds, std::vector<std::uint64_t>(clients, 0)),
                std::vector(rounds, std::vector<std::uint64_t>(clients, 0))};
  for (const LedgerEntry& e : run.ledger.entries()) {
    if (e.round >= rounds || e.client_id >= clients) {
      throw ConsistencyError("ledger entry outside the run's rounds or clients");
    }
    auto& table = e.direction == Direction::uplink ? b.up : b.down;
    table[e.round][e.client_id] += e.bytes;
  }
  for (std::size_t r = 1; r < rounds; ++r) {
    for (std::size_t k = 0; k < clients; ++k) {
      b.up[r][k] += b.up[r - 1][k];
      b.down[r][k] += b.down[r - 1][k];
    }
  }
  return b;
}

std::string seed_dir(std::uint64_t seed) { return "seed" + std::to_string(seed); }

void write_file(const fs::path& root, const fs::path& rel, std::vector<fs::path>& manifest,
                const std::string& content) {
  const fs::path full = root / rel;
  std::error_code ec;
  fs::create_directories(full.parent_path(), ec);
  if (ec) throw Error("cannot create directory " + full.parent_path().string() + ": " + ec.message());
  std::ofstream out(full, std::ios::binary);
  if (!out) throw Error("cannot write " + full.string());
  out << content;
  out.close();
  if (!out) throw Error("failed writing " + full.string());
  manifest.push_back(rel);
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(digits);
  ss << v;
  return ss.str();
}

}  // namespace

double final_average_ua(const RunResult& run) {
  if (run.rounds.empty()) throw InputError("final_average_ua: run has no rounds");
  return run.rounds.back().average_ua;
}

void write_metrics_csv(std::ostream& out, const RunResult& run) {
  const ClientBytes bytes = per_client_cumulative(run);
  out << "round,client,accuracy,best_so_far,cum_bytes_up,cum_bytes_down\n";
  for (std::size_t r = 0; r < run.rounds.size(); ++r) {
    const RoundMetrics& m = run.rounds[r];
    for (std::size_t k = 0; k < m.accuracy.size(); ++k) {
      out << m.round << ',' << k << ',' << format_double(m.accuracy[k]) << ','
          << format_double(m.best_so_far[k]) << ',' << bytes.up[r][k] << ',' << bytes.down[r][k] << '\n';
    }
  }
}

ordered_json config_json(const RunConfig& config) {
  // Typed echo of the same keys the text format uses.
  ordered_json j = ordered_json::object();
  for (const auto& [key, value] : config_entries(config)) {
    if (value == "true" || value == "false") {
      j[key] = value == "true";
      continue;
    }
    double d = 0.0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), d);
    const bool numeric = !value.empty() && res.ec == std::errc() && res.ptr == value.data() + value.size();
    if (!numeric || key == "dataset" || key == "arch" || key == "csv_path") {
      j[key] = value;
    } else if (value.find_first_of(".eE") == std::string::npos && value[0] != '-') {
      j[key] = std::stoull(value);
    } else {
      j[key] = d;
    }
  }
  return j;
}

ordered_json summary_json(const CellResult& cell) {
  const RunResult& run = cell.result;
  ordered_json j;
  j["algorithm"] = std::string(to_string(run.algorithm));
  j["variant"] = cell.variant;
  j["seed"] = cell.seed;
  j["rounds_completed"] = run.rounds.empty() ? 0 : run.rounds.size() - 1;
  j["final_average_ua"] = final_average_ua(run);
  j["total_bytes_up"] = run.ledger.total(Direction::uplink);
  j["total_bytes_down"] = run.ledger.total(Direction::downlink);
  ordered_json per_round = ordered_json::array();
  for (const RoundMetrics& m : run.rounds) {
    per_round.push_back({{"round", m.round},
                         {"average_ua", m.average_ua},
                         {"cum_bytes_up", m.cum_bytes_up},
                         {"cum_bytes_down", m.cum_bytes_down}});
  }
  j["per_round"] = std::move(per_round);
  std::size_t failures = 0;
  for (const RoundMetrics& m : run.rounds) failures += m.distill_failures;
  j["distill_failures"] = failures;
  j["config"] = config_json(run.config);
  return j;
}

PlotSeries plot_series(const RunResult& run) {
  PlotSeries s;
  s.label = std::string(to_string(run.algorithm));
  for (const RoundMetrics& m : run.rounds) {
    s.bytes.push_back(m.cum_bytes_up + m.cum_bytes_down);
    s.ua.push_back(m.average_ua);
  }
  return s;
}

void write_ua_bytes_svg(std::ostream& out, std::span<const PlotSeries> series, std::string_view title) {
  constexpr double kWidth = 720, kHeight = 460;
  constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 60;
  constexpr std::array<std::string_view, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c",
                                                      "#9467bd", "#ff7f0e", "#8c564b"};
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  // x is log10(1 + bytes) so zero-byte runs stay on the chart next to megabyte runs
  double x_max = 1.0;
  for (const PlotSeries& s : series) {
    for (std::uint64_t b : s.bytes) x_max = std::max(x_max, std::log10(1.0 + static_cast<double>(b)));
  }
  x_max = std::ceil(x_max);
  auto px = [&](std::uint64_t b) { return kLeft + plot_w * std::log10(1.0 + static_cast<double>(b)) / x_max; };
  auto py = [&](double ua) { return kTop + plot_h * (1.0 - std::clamp(ua, 0.0, 1.0)); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  out << "<g class=\"axes\" stroke=\"#444\">\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << kTop + plot_h << "\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
      << "\"/>\n</g>\n";
  for (int e = 0; e <= static_cast<int>(x_max); ++e) {
    const double x = kLeft + plot_w * e / x_max;
    out << "<text x=\"" << fixed(x, 1) << "\" y=\"" << kTop + plot_h + 16 << "\" text-anchor=\"middle\">1e" << e
        << "</text>\n";
  }
  for (int t = 0; t <= 5; ++t) {
    const double ua = t / 5.0;
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << fixed(py(ua) + 4, 1) << "\" text-anchor=\"end\">"
        << fixed(ua, 1) << "</text>\n";
  }
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 16
      << "\" text-anchor=\"middle\">cumulative bytes, up + down (log scale)</text>\n";
  out << "<text transform=\"translate(18," << kTop + plot_h / 2
      << ") rotate(-90)\" text-anchor=\"middle\">average UA</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const PlotSeries& s = series[i];
    if (s.bytes.size() != s.ua.size()) throw InputError("plot series '" + s.label + "' has ragged data");
    const std::string_view color = kColors[i % kColors.size()];
    out << "<g class=\"series\" data-label=\"" << xml_escape(s.label) << "\">\n";
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t r = 0; r < s.bytes.size(); ++r) {
      out << (r ? " " : "") << fixed(px(s.bytes[r]), 2) << ',' << fixed(py(s.ua[r]), 2);
    }
    out << "\"/>\n";
    for (std::size_t r = 0; r < s.bytes.size(); ++r) {
      out << "<circle cx=\"" << fixed(px(s.bytes[r]), 2) << "\" cy=\"" << fixed(py(s.ua[r]), 2)
          << "\" r=\"2.5\" fill=\"" << color << "\" data-round=\"" << r << "\" data-bytes=\"" << s.bytes[r]
          << "\" data-ua=\"" << format_double(s.ua[r]) << "\"/>\n";
    }
    const double ly = kTop + 14 + 18 * static_cast<double>(i);
    out << "<line x1=\"" << kLeft + plot_w + 14 << "\" y1=\"" << ly - 4 << "\" x2=\"" << kLeft + plot_w + 34
        << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text class=\"legend\" x=\"" << kLeft + plot_w + 40 << "\" y=\"" << ly << "\">" << xml_escape(s.label)
        << "</text>\n";
    out << "</g>\n";
  }
  out << "</svg>\n";
}

std::vector<fs::path> emit_outputs(const Experiment& experiment, std::span<const CellResult> cells,
                                   const fs::path& out_dir, const OutputOptions& options) {
  if (cells.empty()) throw InputError("emit_outputs: no results to write");
  std::vector<fs::path> manifest;
  const fs::path root = fs::path(experiment.name);

  // (variant, seed) → cells in algorithm order, for the per-cell plot
  std::map<std::pair<std::string, std::uint64_t>, std::vector<const CellResult*>> groups;
  std::map<std::string, std::vector<const CellResult*>> by_variant;
  for (const CellResult& cell : cells) {
    const std::string algo(to_string(cell.result.algorithm));
    const fs::path dir = root / cell.variant / seed_dir(cell.seed);

    std::ostringstream metrics;
    write_metrics_csv(metrics, cell.result);
    write_file(out_dir, dir / (algo + "_metrics.csv"), manifest, metrics.str());

    std::ostringstream ledger;
    cell.result.ledger.write_csv(ledger);
    write_file(out_dir, dir / (algo + "_ledger.csv"), manifest, ledger.str());

    write_file(out_dir, dir / (algo + "_summary.json"), manifest, summary_json(cell).dump(2) + "\n");

    if (cell.result.algorithm == Algorithm::fedcache2 && options.dump_cache) {
      std::ostringstream cache;
      write_records_csv(cache, cell.result.cache_snapshot);
      write_file(out_dir, dir / (algo + "_cache.csv"), manifest, cache.str());
    }
    if (cell.result.algorithm == Algorithm::fedcache2 && options.dump_uploads) {
      std::ostringstream uploads;
      write_records_csv(uploads, cell.result.uploaded_records);
      write_file(out_dir, dir / (algo + "_uploads.csv"), manifest, uploads.str());
    }
    groups[{cell.variant, cell.seed}].push_back(&cell);
    by_variant[cell.variant].push_back(&cell);
  }

  for (const auto& [key, group] : groups) {
    std::vector<PlotSeries> series;
    for (const CellResult* c : group) series.push_back(plot_series(c->result));
    std::ostringstream svg;
    write_ua_bytes_svg(svg, series,
                       experiment.name + " / " + key.first + " / " + seed_dir(key.second) + ": UA vs bytes");
    write_file(out_dir, root / key.first / seed_dir(key.second) / "ua_vs_bytes.svg", manifest, svg.str());
  }

  // per-variant roll-up across seeds
  for (const auto& [variant, group] : by_variant) {
    ordered_json j;
    j["experiment"] = experiment.name;
    j["variant"] = variant;
    ordered_json algos = ordered_json::object();
    for (Algorithm a : experiment.algorithms) {
      ordered_json runs = ordered_json::array();
      double ua_sum = 0.0;
      std::size_t n = 0;
      for (const CellResult* c : group) {
        if (c->result.algorithm != a) continue;
        const double ua = final_average_ua(c->result);
        runs.push_back({{"seed", c->seed},
                        {"final_average_ua", ua},
                        {"total_bytes_up", c->result.ledger.total(Direction::uplink)},
                        {"total_bytes_down", c->result.ledger.total(Direction::downlink)}});
        ua_sum += ua;
        ++n;
      }
      if (n == 0) continue;
      algos[std::string(to_string(a))] = {{"mean_final_average_ua", ua_sum / static_cast<double>(n)},
                                          {"runs", std::move(runs)}};
    }
    j["algorithms"] = std::move(algos);
    j["config"] = config_json(group.front()->result.config);
    write_file(out_dir, root / variant / "summary.json", manifest, j.dump(2) + "\n");
  }

  std::string listing;
  for (const fs::path& p : manifest) listing += p.generic_string() + "\n";
  const fs::path manifest_path = root / "manifest.txt";
  listing += manifest_path.generic_string() + "\n";
  write_file(out_dir, manifest_path, manifest, listing);
  return manifest;
}

}  // namespace fedcache::tools
