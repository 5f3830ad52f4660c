#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fedcache/data.hpp"
#include "fedcache/distill.hpp"
#include "fedcache/error.hpp"
#include "fedcache/numerics/matrix.hpp"

namespace fedcache {

enum class PayloadKind : std::size_t {
  model_params,
  logits,
  sample_index,
  distilled_data,
  label_profile,
};
inline constexpr std::size_t kPayloadKinds = 5;

enum class Direction { uplink, downlink };

std::string_view to_string(PayloadKind kind);
std::string_view to_string(Direction direction);
std::optional<PayloadKind> parse_payload_kind(std::string_view name);

/// Declared transfer: what, how many elements, which way, when and for whom.
struct Payload {
  PayloadKind kind = PayloadKind::distilled_data;
  std::size_t element_count = 0;
  Direction direction = Direction::uplink;
  std::size_t round = 0;
  std::size_t client_id = 0;
};

/// Bytes charged per element, per payload kind. Defaults to 4 for every kind.
class ByteWidthTable {
 public:
  ByteWidthTable() { widths_.fill(4); }

  std::size_t width(PayloadKind kind) const { return widths_[static_cast<std::size_t>(kind)]; }
  void set(PayloadKind kind, std::size_t bytes) { widths_[static_cast<std::size_t>(kind)] = bytes; }

  friend bool operator==(const ByteWidthTable&, const ByteWidthTable&) = default;

 private:
  std::array<std::size_t, kPayloadKinds> widths_{};
};

struct LedgerEntry {
  std::size_t round = 0;
  std::size_t client_id = 0;
  Direction direction = Direction::uplink;
  PayloadKind kind = PayloadKind::distilled_data;
  std::uint64_t bytes = 0;

  friend bool operator==(const LedgerEntry&, const LedgerEntry&) = default;
};

/// Append-only byte accounting. Appends are serialized; readers see a consistent prefix.
class CommLedger {
 public:
  explicit CommLedger(ByteWidthTable widths = {}) : widths_(widths) {}
  CommLedger(const CommLedger& other);
  CommLedger& operator=(const CommLedger& other);

  const ByteWidthTable& widths() const noexcept { return widths_; }

  /// Charges element_count × width(kind) bytes and returns the amount.
  std::uint64_t account_payload(const Payload& p);

  std::vector<LedgerEntry> entries() const;
  /// Bytes in one direction, over all rounds.
  std::uint64_t total(Direction direction) const;
  /// Bytes in one direction charged during `round`.
  std::uint64_t round_total(Direction direction, std::size_t round) const;
  /// Bytes in one direction charged during rounds [0, round].
  std::uint64_t cumulative(Direction direction, std::size_t round) const;

  /// CSV with header round,client,direction,kind,bytes.
  void write_csv(std::ostream& out) const;

 private:
  ByteWidthTable widths_;
  mutable std::mutex mutex_;
  std::vector<LedgerEntry> entries_;
};

/// Element counts under the accounting convention: a distilled record is D inputs plus its
/// label; a label profile is C frequencies; a matrix is all its entries.
std::size_t element_count(std::span<const DistilledRecord> records);
std::size_t element_count(const LabelProfile& profile);
std::size_t element_count(const Matrix& m);
std::size_t element_count(std::span<const Matrix> tensors);
std::size_t element_count(std::span<const std::size_t> indices);

/// Lossless simulated channel: verifies the declared element count, charges the ledger and
/// hands the body through unchanged.
template <typename Body>
Body transmit(CommLedger& ledger, const Payload& p, Body body) {
  const std::size_t actual = element_count(body);
  if (actual != p.element_count) {
    throw ConsistencyError("transmit: payload declares " + std::to_string(p.element_count) +
                           " elements but body has " + std::to_string(actual));
  }
  ledger.account_payload(p);
  return body;
}

/// Whether `client` is online in `round`: Bernoulli(participation_rate), fixed by
/// (round, client, seed).
bool draw_availability(std::size_t round, std::size_t client, double participation_rate,
                       std::uint64_t seed);

}  // namespace fedcache
