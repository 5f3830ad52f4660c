#include "fedcache/tools/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "fedcache/error.hpp"
#include "fedcache/format.hpp"

namespace fedcache::tools {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss{std::string(value)};
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view why) {
  throw ConfigError("invalid value for '" + std::string(key) + "': '" + std::string(value) + "' (" +
                    std::string(why) + ")");
}

double to_double(std::string_view key, std::string_view value) {
  double v = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) bad_value(key, value, "expected a number");
  return v;
}

std::uint64_t to_uint(std::string_view key, std::string_view value) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size())
    bad_value(key, value, "expected a non-negative integer");
  return v;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value, "expected true or false");
}

constexpr std::string_view kWidthPrefix = "width.";
constexpr std::string_view kSweepPrefix = "sweep.";

}  // namespace

ConfigEntries parse_config_text(std::string_view text, std::string_view origin) {
  ConfigEntries out;
  std::stringstream ss{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::move(key), trim(std::string_view(t).substr(eq + 1)));
  }
  return out;
}

ConfigEntries read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

std::pair<std::string, std::string> parse_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  return {trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1))};
}

void set_config_value(RunConfig& c, std::string_view key, std::string_view value) {
  if (key == "dataset") {
    c.dataset.source = std::string(value);
  } else if (key == "num_classes") {
    c.dataset.num_classes = to_uint(key, value);
  } else if (key == "dim") {
    c.dataset.dim = to_uint(key, value);
  } else if (key == "per_class") {
    c.dataset.per_class = to_uint(key, value);
  } else if (key == "spread") {
    c.dataset.spread = to_double(key, value);
  } else if (key == "csv_path") {
    c.dataset.csv_path = std::string(value);
  } else if (key == "csv_header") {
    c.dataset.csv_header = to_bool(key, value);
  } else if (key == "test_fraction") {
    c.dataset.test_fraction = to_double(key, value);
  } else if (key == "clients") {
    c.num_clients = to_uint(key, value);
  } else if (key == "alpha") {
    c.alpha = to_double(key, value);
  } else if (key == "tau") {
    c.tau = to_double(key, value);
  } else if (key == "lambda_mode") {
    if (value == "relative") {
      c.ridge.kind = RidgePolicy::Kind::relative;
    } else if (value == "fixed") {
      c.ridge.kind = RidgePolicy::Kind::fixed;
    } else {
      bad_value(key, value, "expected relative or fixed");
    }
  } else if (key == "lambda") {
    c.ridge.value = to_double(key, value);
  } else if (key == "local_epochs") {
    c.local_epochs = to_uint(key, value);
  } else if (key == "rounds") {
    c.rounds = to_uint(key, value);
  } else if (key == "lr") {
    c.lr = to_double(key, value);
  } else if (key == "distill_lr") {
    c.distill_lr = to_double(key, value);
  } else if (key == "distill_steps") {
    c.distill_steps = to_uint(key, value);
  } else if (key == "batch") {
    c.batch = to_uint(key, value);
  } else if (key == "noise_sigma") {
    c.noise_sigma = to_double(key, value);
  } else if (key == "arch") {
    c.arch = std::string(value);
  } else if (key == "participation_rate") {
    c.participation_rate = to_double(key, value);
  } else if (key == "beta") {
    c.beta = to_double(key, value);
  } else if (key == "related") {
    c.related = to_uint(key, value);
  } else if (key == "sigma_period") {
    c.sigma_period = to_uint(key, value);
  } else if (key == "sampling") {
    if (value == "exact") {
      c.sampling = SamplingMode::exact_count;
    } else if (value == "bernoulli") {
      c.sampling = SamplingMode::bernoulli;
    } else {
      bad_value(key, value, "expected exact or bernoulli");
    }
  } else if (key == "charge_prototype_init") {
    c.charge_prototype_init = to_bool(key, value);
  } else if (key == "seed") {
    c.seed = to_uint(key, value);
  } else if (key.starts_with(kWidthPrefix)) {
    const auto kind = parse_payload_kind(key.substr(kWidthPrefix.size()));
    if (!kind) throw ConfigError("unknown key '" + std::string(key) + "'");
    c.byte_widths.set(*kind, to_uint(key, value));
  } else {
    throw ConfigError("unknown key '" + std::string(key) + "'");
  }
}

void apply_entries(ExperimentSpec& spec, const ConfigEntries& entries) {
  for (const auto& [key, value] : entries) {
    if (key == "name") {
      if (value.empty()) bad_value(key, value, "must be nonempty");
      spec.name = value;
    } else if (key == "algorithms") {
      spec.algorithms.clear();
      for (const auto& item : split_list(value)) {
        const auto a = parse_algorithm(item);
        if (!a) bad_value(key, item, "expected fedcache2, logits_cache, param_avg or local_only");
        spec.algorithms.push_back(*a);
      }
      if (spec.algorithms.empty()) bad_value(key, value, "list is empty");
    } else if (key == "seeds") {
      spec.seeds.clear();
      for (const auto& item : split_list(value)) spec.seeds.push_back(to_uint(key, item));
      if (spec.seeds.empty()) bad_value(key, value, "list is empty");
    } else if (key.starts_with(kSweepPrefix)) {
      const std::string swept = key.substr(kSweepPrefix.size());
      RunConfig probe = spec.base;
      auto values = split_list(value);
      if (values.empty()) bad_value(key, value, "list is empty");
      for (const auto& v : values) set_config_value(probe, swept, v);
      if (!spec.sweep_key.empty() && spec.sweep_key != swept) {
        throw ConfigError("invalid key '" + key + "': only one sweep per experiment (already sweeping '" +
                          spec.sweep_key + "')");
      }
      spec.sweep_key = swept;
      spec.sweep_values = std::move(values);
    } else {
      set_config_value(spec.base, key, value);
    }
  }
}

Experiment build_experiment(const ExperimentSpec& spec) {
  Experiment e;
  e.name = spec.name;
  e.algorithms = spec.algorithms;
  e.seeds = spec.seeds;
  if (spec.sweep_key.empty()) {
    e.variants.push_back({"base", spec.base});
  } else {
    for (const auto& v : spec.sweep_values) {
      RunConfig c = spec.base;
      set_config_value(c, spec.sweep_key, v);
      e.variants.push_back({spec.sweep_key + "_" + v, c});
    }
  }
  for (const auto& v : e.variants) {
    v.config.validate();
    for (Algorithm a : e.algorithms) {
      if (a == Algorithm::param_avg && !v.config.homogeneous()) {
        throw ConfigError("invalid value for 'algorithms': param_avg requires a single architecture (arch=" +
                          v.config.arch + ")");
      }
    }
  }
  return e;
}

ConfigEntries config_entries(const RunConfig& c) {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  auto u = [](std::uint64_t v) { return std::to_string(v); };
  ConfigEntries out = {
      {"dataset", c.dataset.source},
      {"num_classes", u(c.dataset.num_classes)},
      {"dim", u(c.dataset.dim)},
      {"per_class", u(c.dataset.per_class)},
      {"spread", format_double(c.dataset.spread)},
      {"csv_path", c.dataset.csv_path},
      {"csv_header", b(c.dataset.csv_header)},
      {"test_fraction", format_double(c.dataset.test_fraction)},
      {"clients", u(c.num_clients)},
      {"alpha", format_double(c.alpha)},
      {"tau", format_double(c.tau)},
      {"lambda_mode", c.ridge.kind == RidgePolicy::Kind::relative ? "relative" : "fixed"},
      {"lambda", format_double(c.ridge.value)},
      {"local_epochs", u(c.local_epochs)},
      {"rounds", u(c.rounds)},
      {"lr", format_double(c.lr)},
      {"distill_lr", format_double(c.distill_lr)},
      {"distill_steps", u(c.distill_steps)},
      {"batch", u(c.batch)},
      {"noise_sigma", format_double(c.noise_sigma)},
      {"arch", c.arch},
      {"participation_rate", format_double(c.participation_rate)},
      {"beta", format_double(c.beta)},
      {"related", u(c.related)},
      {"sigma_period", u(c.sigma_period)},
      {"sampling", c.sampling == SamplingMode::exact_count ? "exact" : "bernoulli"},
      {"charge_prototype_init", b(c.charge_prototype_init)},
      {"seed", u(c.seed)},
  };
  for (std::size_t i = 0; i < kPayloadKinds; ++i) {
    const auto kind = static_cast<PayloadKind>(i);
    out.emplace_back(std::string(kWidthPrefix) + std::string(to_string(kind)), u(c.byte_widths.width(kind)));
  }
  return out;
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const auto& [k, v] : config_entries(config)) out += k + " = " + v + "\n";
  return out;
}

}  // namespace fedcache::tools
