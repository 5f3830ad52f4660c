#include "fedcache/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "fedcache/error.hpp"
#include "fedcache/random.hpp"

namespace fedcache {

Dataset subset(const Dataset& d, std::span<const std::size_t> indices) {
  Dataset out;
  out.num_classes = d.num_classes;
  out.inputs = gather_rows(d.inputs, indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(d.labels[i]);
  if (indices.empty()) out.inputs = Matrix(0, d.dim());
  return out;
}

std::vector<std::size_t> class_counts(std::span<const std::size_t> labels,
                                      std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t y : labels) {
    if (y >= num_classes) throw InputError("class_counts: label out of range");
    ++counts[y];
  }
  return counts;
}

std::vector<std::size_t> present_classes(std::span<const std::size_t> labels,
                                         std::size_t num_classes) {
  const auto counts = class_counts(labels, num_classes);
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < num_classes; ++c)
    if (counts[c] > 0) out.push_back(c);
  return out;
}

Dataset make_synthetic(std::size_t num_classes, std::size_t dim, std::size_t per_class,
                       double spread, std::uint64_t seed) {
  if (num_classes < 2) throw InputError("make_synthetic: need at least 2 classes");
  if (dim < 2) throw InputError("make_synthetic: need at least 2 dimensions");
  if (per_class < 1) throw InputError("make_synthetic: need at least 1 sample per class");
  if (!(spread >= 0.0)) throw InputError("make_synthetic: spread must be >= 0");

  const double radius = 1.0 / std::sqrt(2.0);
  Rng mean_rng = make_rng(seed, Stream::dataset, {0});
  Matrix means(num_classes, dim);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (c < dim) {
      means(c, c) = radius;
      continue;
    }
    double norm = 0.0;
    for (double& v : means.row(c)) {
      v = normal(mean_rng);
      norm += v * v;
    }
    for (double& v : means.row(c)) v *= radius / std::sqrt(norm);
  }

  Rng rng = make_rng(seed, Stream::dataset, {1});
  Dataset d;
  d.num_classes = num_classes;
  d.inputs = Matrix(num_classes * per_class, dim);
  d.labels.reserve(num_classes * per_class);
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      auto row = d.inputs.row(d.labels.size());
      for (std::size_t j = 0; j < dim; ++j) row[j] = means(c, j) + normal(rng, 0.0, spread);
      d.labels.push_back(c);
    }
  }
  return d;
}

Dataset load_csv(const std::filesystem::path& path, bool skip_header, std::size_t num_classes) {
  std::ifstream in(path);
  if (!in) throw InputError("load_csv: cannot open " + path.string());
  std::vector<double> values;
  std::vector<std::size_t> labels;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && skip_header) continue;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 2) {
      throw InputError("load_csv: " + path.string() + ":" + std::to_string(line_no) +
                       ": need at least one feature and a label");
    }
    if (dim == 0) dim = fields.size() - 1;
    if (fields.size() - 1 != dim) {
      throw InputError("load_csv: " + path.string() + ":" + std::to_string(line_no) +
                       ": expected " + std::to_string(dim + 1) + " columns");
    }
    try {
      for (std::size_t j = 0; j < dim; ++j) {
        std::size_t used = 0;
        const double v = std::stod(fields[j], &used);
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
        values.push_back(v);
      }
      const long label = std::stol(fields.back());
      if (label < 0) throw std::invalid_argument("negative label");
      labels.push_back(static_cast<std::size_t>(label));
    } catch (const std::logic_error&) {
      throw InputError("load_csv: " + path.string() + ":" + std::to_string(line_no) +
                       ": malformed value");
    }
  }
  if (labels.empty()) throw InputError("load_csv: " + path.string() + " has no samples");
  const std::size_t max_label = *std::max_element(labels.begin(), labels.end());
  if (num_classes == 0) num_classes = max_label + 1;
  if (max_label >= num_classes) throw InputError("load_csv: label exceeds num_classes");
  Dataset d;
  d.num_classes = num_classes;
  d.inputs = Matrix(labels.size(), dim, std::move(values));
  d.labels = std::move(labels);
  const auto counts = class_counts(d.labels, num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) throw InputError("load_csv: class " + std::to_string(c) + " has no samples");
  }
  return d;
}

std::vector<ClientDataset> partition_dirichlet(const Dataset& d, std::size_t num_clients,
                                               double alpha, double test_fraction,
                                               std::uint64_t seed, std::size_t max_retries) {
  if (num_clients < 2) throw InputError("partition_dirichlet: need at least 2 clients");
  if (!(alpha > 0.0)) throw InputError("partition_dirichlet: alpha must be positive");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw InputError("partition_dirichlet: test_fraction must lie in [0, 1)");
  }
  const std::size_t num_classes = d.num_classes;
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < d.size(); ++i) by_class[d.labels[i]].push_back(i);

  for (std::size_t attempt = 0; attempt < max_retries; ++attempt) {
    Rng rng = make_rng(seed, Stream::partition, {attempt});
    // per client, per class: source indices
    std::vector<std::vector<std::vector<std::size_t>>> owned(
        num_clients, std::vector<std::vector<std::size_t>>(num_classes));
    for (std::size_t c = 0; c < num_classes; ++c) {
      std::vector<std::size_t> idx = by_class[c];
      shuffle(idx, rng);
      const std::vector<double> share = dirichlet(rng, alpha, num_clients);
      const double n = static_cast<double>(idx.size());
      double cumulative = 0.0;
      std::size_t start = 0;
      for (std::size_t k = 0; k < num_clients; ++k) {
        cumulative += share[k];
        std::size_t end = k + 1 == num_clients
                              ? idx.size()
                              : std::min(idx.size(), static_cast<std::size_t>(cumulative * n));
        end = std::max(end, start);
        owned[k][c].assign(idx.begin() + static_cast<std::ptrdiff_t>(start),
                           idx.begin() + static_cast<std::ptrdiff_t>(end));
        start = end;
      }
    }

    std::vector<ClientDataset> clients(num_clients);
    bool ok = true;
    for (std::size_t k = 0; k < num_clients && ok; ++k) {
      ClientDataset& cd = clients[k];
      cd.client_id = k;
      for (std::size_t c = 0; c < num_classes; ++c) {
        const auto& mine = owned[k][c];
        if (mine.empty()) continue;
        const auto m = mine.size();
        std::size_t n_test = static_cast<std::size_t>(std::llround(static_cast<double>(m) * test_fraction));
        n_test = std::min(n_test, m - 1);
        cd.test_indices.insert(cd.test_indices.end(), mine.begin(),
                               mine.begin() + static_cast<std::ptrdiff_t>(n_test));
        cd.train_indices.insert(cd.train_indices.end(),
                                mine.begin() + static_cast<std::ptrdiff_t>(n_test), mine.end());
      }
      std::sort(cd.train_indices.begin(), cd.train_indices.end());
      std::sort(cd.test_indices.begin(), cd.test_indices.end());
      ok = !cd.train_indices.empty() && (test_fraction == 0.0 || !cd.test_indices.empty());
    }
    if (!ok) continue;
    for (ClientDataset& cd : clients) {
      cd.train = subset(d, cd.train_indices);
      cd.test = subset(d, cd.test_indices);
    }
    return clients;
  }
  throw PartitionError("partition_dirichlet: some client stayed empty after " +
                       std::to_string(max_retries) +
                       " draws; use a larger dataset, fewer clients or a larger alpha");
}

LabelProfile label_frequency(const ClientDataset& cd) {
  if (cd.train.empty()) throw InputError("label_frequency: client has no training samples");
  const auto counts = class_counts(cd.train.labels, cd.train.num_classes);
  LabelProfile p;
  p.client_id = cd.client_id;
  p.freqs.resize(counts.size());
  const double n = static_cast<double>(cd.train.size());
  for (std::size_t c = 0; c < counts.size(); ++c) p.freqs[c] = static_cast<double>(counts[c]) / n;
  return p;
}

Matrix augment_batch(const Matrix& x, double noise_sigma, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) throw InputError("augment_batch: noise_sigma must be >= 0");
  Matrix out = x;
  if (noise_sigma == 0.0) return out;
  Rng rng = make_rng(seed, Stream::augment);
  for (double& v : out.values()) v += normal(rng, 0.0, noise_sigma);
  return out;
}

}  // namespace fedcache
