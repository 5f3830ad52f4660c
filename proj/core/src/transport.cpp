#include "fedcache/transport.hpp"

#include <ostream>

#include "fedcache/random.hpp"

namespace fedcache {

namespace {
constexpr std::array<std::string_view, kPayloadKinds> kKindNames = {
    "model_params", "logits", "sample_index", "distilled_data", "label_profile"};
}

std::string_view to_string(PayloadKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::string_view to_string(Direction direction) {
  return direction == Direction::uplink ? "uplink" : "downlink";
}

std::optional<PayloadKind> parse_payload_kind(std::string_view name) {
  for (std::size_t i = 0; i < kPayloadKinds; ++i)
    if (kKindNames[i] == name) return static_cast<PayloadKind>(i);
  return std::nullopt;
}

CommLedger::CommLedger(const CommLedger& other) : widths_(other.widths_) {
  std::lock_guard lock(other.mutex_);
  entries_ = other.entries_;
}

CommLedger& CommLedger::operator=(const CommLedger& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mutex_, other.mutex_);
  widths_ = other.widths_;
  entries_ = other.entries_;
  return *this;
}

std::uint64_t CommLedger::account_payload(const Payload& p) {
  const auto kind_index = static_cast<std::size_t>(p.kind);
  if (kind_index >= kPayloadKinds) throw ConfigError("account_payload: unknown payload kind");
  const std::uint64_t bytes =
      static_cast<std::uint64_t>(p.element_count) * static_cast<std::uint64_t>(widths_.width(p.kind));
  std::lock_guard lock(mutex_);
  entries_.push_back(LedgerEntry{p.round, p.client_id, p.direction, p.kind, bytes});
  return bytes;
}

std::vector<LedgerEntry> CommLedger::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

std::uint64_t CommLedger::total(Direction direction) const {
  std::lock_guard lock(mutex_);
  std::uint64_t s = 0;
  for (const auto& e : entries_)
    if (e.direction == direction) s += e.bytes;
  return s;
}

std::uint64_t CommLedger::round_total(Direction direction, std::size_t round) const {
  std::lock_guard lock(mutex_);
  std::uint64_t s = 0;
  for (const auto& e : entries_)
    if (e.direction == direction && e.round == round) s += e.bytes;
  return s;
}

std::uint64_t CommLedger::cumulative(Direction direction, std::size_t round) const {
  std::lock_guard lock(mutex_);
  std::uint64_t s = 0;
  for (const auto& e : entries_)
    if (e.direction == direction && e.round <= round) s += e.bytes;
  return s;
}

void CommLedger::write_csv(std::ostream& out) const {
  std::lock_guard lock(mutex_);
  out << "round,client,direction,kind,bytes\n";
  for (const auto& e : entries_) {
    out << e.round << ',' << e.client_id << ',' << to_string(e.direction) << ','
        << to_string(e.kind) << ',' << e.bytes << '\n';
  }
}

std::size_t element_count(std::span<const DistilledRecord> records) {
  std::size_t n = 0;
  for (const auto& r : records) n += r.input.size() + 1;
  return n;
}

std::size_t element_count(const LabelProfile& profile) { return profile.freqs.size(); }
std::size_t element_count(const Matrix& m) { return m.size(); }

std::size_t element_count(std::span<const Matrix> tensors) {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

std::size_t element_count(std::span<const std::size_t> indices) { return indices.size(); }

bool draw_availability(std::size_t round, std::size_t client, double participation_rate,
                       std::uint64_t seed) {
  if (!(participation_rate > 0.0 && participation_rate <= 1.0)) {
    throw ConfigError("participation_rate must lie in (0, 1]");
  }
  if (participation_rate == 1.0) return true;
  Rng rng = make_rng(seed, Stream::availability, {round, client});
  return uniform01(rng) < participation_rate;
}

}  // namespace fedcache
