#pragma once

// Pseudorandom engines: Philox4x32-10 (counter based) and MRG32k3a
// (combined multiple recursive). States are plain values; generation is a
// pure function of the state.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "portrng/error.hpp"

namespace portrng {

enum class EngineKind { philox4x32x10, mrg32k3a };

constexpr std::string_view to_string(EngineKind kind) noexcept {
  return kind == EngineKind::philox4x32x10 ? "philox" : "mrg32k3a";
}

inline EngineKind parse_engine_kind(std::string_view text) {
  if (text == "philox" || text == "philox4x32x10") return EngineKind::philox4x32x10;
  if (text == "mrg32k3a" || text == "mrg") return EngineKind::mrg32k3a;
  throw Error(ErrorCode::config_error, "unknown engine '" + std::string(text) + "'");
}

/// Scalar 64-bit seed. Every value, including 0, is accepted.
struct Seed {
  std::uint64_t value = 0;
};

using PhiloxKey = std::array<std::uint32_t, 2>;
using PhiloxCounter = std::array<std::uint32_t, 4>;  // lane 0 least significant
using PhiloxBlock = std::array<std::uint32_t, 4>;

namespace philox_constants {
inline constexpr std::uint32_t multiplier0 = 0xD2511F53u;
inline constexpr std::uint32_t multiplier1 = 0xCD9E8D57u;
inline constexpr std::uint32_t weyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t weyl1 = 0xBB67AE85u;
inline constexpr int rounds = 10;
}  // namespace philox_constants

/// Ten-round Philox4x32 bijection of `counter` under `key`.
constexpr PhiloxBlock philox_block(PhiloxKey key, PhiloxCounter counter) noexcept {
  using namespace philox_constants;
  PhiloxBlock c = counter;
  for (int round = 0; round < rounds; ++round) {
    const std::uint64_t p0 = std::uint64_t{multiplier0} * c[0];
    const std::uint64_t p1 = std::uint64_t{multiplier1} * c[2];
    c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ key[0], static_cast<std::uint32_t>(p1),
         static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += weyl0;
    key[1] += weyl1;
  }
  return c;
}

namespace detail {

// Adds a 64-bit block count to a 128-bit counter, carrying across lanes.
constexpr PhiloxCounter counter_add(PhiloxCounter c, std::uint64_t n) noexcept {
  std::uint64_t carry = n;
  for (auto& lane : c) {
    if (carry == 0) break;
    const std::uint64_t sum = std::uint64_t{lane} + (carry & 0xFFFFFFFFu);
    lane = static_cast<std::uint32_t>(sum);
    carry = (carry >> 32) + (sum >> 32);
  }
  return c;
}

constexpr PhiloxCounter counter_decrement(PhiloxCounter c) noexcept {
  for (auto& lane : c) {
    if (lane-- != 0) break;
  }
  return c;
}

}  // namespace detail

/// Philox stream position. `lane_index == 4` means no block is cached and
/// `counter` names the next block to generate; otherwise `cached_block` is
/// the block at `counter - 1` and `lane_index` the next lane to emit.
struct PhiloxState {
  PhiloxKey key{};
  PhiloxCounter counter{};
  std::uint32_t lane_index = 4;
  PhiloxBlock cached_block{};

  static constexpr std::uint32_t no_cached_block = 4;

  /// State positioned at the start of block `counter`.
  static constexpr PhiloxState at(PhiloxKey key, PhiloxCounter counter) noexcept {
    return PhiloxState{key, counter, no_cached_block, {}};
  }

  friend constexpr bool operator==(const PhiloxState& a, const PhiloxState& b) noexcept {
    return a.key == b.key && a.counter == b.counter && a.lane_index == b.lane_index;
  }
};

namespace mrg_constants {
inline constexpr std::int64_t m1 = 4294967087;
inline constexpr std::int64_t m2 = 4294944443;
inline constexpr std::int64_t a12 = 1403580;
inline constexpr std::int64_t a13 = 810728;
inline constexpr std::int64_t a21 = 527612;
inline constexpr std::int64_t a23 = 1370589;
inline constexpr std::uint32_t zero_seed_fallback = 12345;
}  // namespace mrg_constants

struct Mrg32k3aState {
  std::array<std::uint32_t, 3> s1{};
  std::array<std::uint32_t, 3> s2{};

  constexpr bool valid() const noexcept {
    using namespace mrg_constants;
    bool any1 = false, any2 = false;
    for (int i = 0; i < 3; ++i) {
      if (s1[i] >= m1 || s2[i] >= m2) return false;
      any1 = any1 || s1[i] != 0;
      any2 = any2 || s2[i] != 0;
    }
    return any1 && any2;
  }

  friend constexpr bool operator==(const Mrg32k3aState&, const Mrg32k3aState&) = default;
};

/// Documented unit-interval mapping for a raw MRG32k3a output z.
constexpr double mrg_unit(std::uint32_t z) noexcept {
  return static_cast<double>(z) / static_cast<double>(mrg_constants::m1 + 1);
}

class EngineState {
 public:
  explicit constexpr EngineState(PhiloxState s) noexcept : state_(s) {}
  explicit constexpr EngineState(Mrg32k3aState s) noexcept : state_(s) {}

  constexpr EngineKind kind() const noexcept {
    return std::holds_alternative<PhiloxState>(state_) ? EngineKind::philox4x32x10
                                                       : EngineKind::mrg32k3a;
  }

  constexpr const PhiloxState& philox() const { return std::get<PhiloxState>(state_); }
  constexpr PhiloxState& philox() { return std::get<PhiloxState>(state_); }
  constexpr const Mrg32k3aState& mrg() const { return std::get<Mrg32k3aState>(state_); }
  constexpr Mrg32k3aState& mrg() { return std::get<Mrg32k3aState>(state_); }

  friend constexpr bool operator==(const EngineState&, const EngineState&) = default;

 private:
  std::variant<PhiloxState, Mrg32k3aState> state_;
};

/// Philox: key = {low32(seed), high32(seed)}, counter 0, nothing cached.
/// MRG32k3a: all six components = seed mod m2, or 12345 when that is 0.
constexpr EngineState seed_engine(EngineKind kind, Seed seed) noexcept {
  if (kind == EngineKind::philox4x32x10) {
    return EngineState(PhiloxState::at(
        {static_cast<std::uint32_t>(seed.value), static_cast<std::uint32_t>(seed.value >> 32)},
        {0, 0, 0, 0}));
  }
  auto v = static_cast<std::uint32_t>(seed.value % static_cast<std::uint64_t>(mrg_constants::m2));
  if (v == 0) v = mrg_constants::zero_seed_fallback;
  return EngineState(Mrg32k3aState{{v, v, v}, {v, v, v}});
}

namespace detail {

constexpr std::uint32_t mrg_step(Mrg32k3aState& s) noexcept {
  using namespace mrg_constants;
  std::int64_t p1 = (a12 * std::int64_t{s.s1[1]} - a13 * std::int64_t{s.s1[0]}) % m1;
  if (p1 < 0) p1 += m1;
  std::int64_t p2 = (a21 * std::int64_t{s.s2[2]} - a23 * std::int64_t{s.s2[0]}) % m2;
  if (p2 < 0) p2 += m2;
  s.s1 = {s.s1[1], s.s1[2], static_cast<std::uint32_t>(p1)};
  s.s2 = {s.s2[1], s.s2[2], static_cast<std::uint32_t>(p2)};
  std::int64_t z = (p1 - p2) % m1;
  if (z < 0) z += m1;
  return static_cast<std::uint32_t>(z);
}

constexpr std::uint32_t philox_step(PhiloxState& s) noexcept {
  if (s.lane_index == PhiloxState::no_cached_block) {
    s.cached_block = philox_block(s.key, s.counter);
    s.counter = counter_add(s.counter, 1);
    s.lane_index = 0;
  }
  return s.cached_block[s.lane_index++];
}

}  // namespace detail

/// Returns the next 32-bit word and advances `state` by one position.
constexpr std::uint32_t next_word(EngineState& state) noexcept {
  if (state.kind() == EngineKind::philox4x32x10) return detail::philox_step(state.philox());
  return detail::mrg_step(state.mrg());
}

/// Streams `n` words into `sink`, advancing `state`. Equivalent to `n`
/// next_word calls; Philox full blocks bypass the lane cache.
template <class Sink>
constexpr void generate_words(EngineState& state, std::size_t n, Sink&& sink) {
  if (state.kind() == EngineKind::mrg32k3a) {
    auto& s = state.mrg();
    for (std::size_t i = 0; i < n; ++i) sink(detail::mrg_step(s));
    return;
  }
  auto& s = state.philox();
  while (n > 0 && s.lane_index < PhiloxState::no_cached_block) {
    sink(s.cached_block[s.lane_index++]);
    --n;
  }
  for (; n >= 4; n -= 4) {
    const PhiloxBlock block = philox_block(s.key, s.counter);
    s.counter = detail::counter_add(s.counter, 1);
    sink(block[0]);
    sink(block[1]);
    sink(block[2]);
    sink(block[3]);
  }
  for (; n > 0; --n) sink(detail::philox_step(s));
}

/// Advances a Philox state by `n` words in O(1).
/// Throws Error(unsupported_engine) for MRG32k3a.
constexpr EngineState skip_ahead(EngineState state, std::uint64_t n) {
  if (state.kind() != EngineKind::philox4x32x10) {
    throw Error(ErrorCode::unsupported_engine, "skip_ahead is only available for Philox");
  }
  if (n == 0) return state;
  PhiloxState& s = state.philox();
  // Origin of the next word: block index and lane within it.
  PhiloxCounter origin = s.counter;
  std::uint64_t lane = 0;
  if (s.lane_index != PhiloxState::no_cached_block) {
    origin = detail::counter_decrement(s.counter);
    lane = s.lane_index;
  }
  const std::uint64_t blocks = n / 4 + (lane + n % 4) / 4;
  const auto new_lane = static_cast<std::uint32_t>((lane + n % 4) % 4);
  const PhiloxCounter block = detail::counter_add(origin, blocks);
  if (new_lane == 0) {
    s = PhiloxState::at(s.key, block);
  } else {
    s.cached_block = philox_block(s.key, block);
    s.counter = detail::counter_add(block, 1);
    s.lane_index = new_lane;
  }
  return state;
}

/// Move-only generator owning one stream. Constructed from a single scalar
/// seed; copy construction and seed lists are not offered.
class Engine {
 public:
  Engine(EngineKind kind, Seed seed) noexcept : state_(seed_engine(kind, seed)) {}
  explicit Engine(EngineState state) noexcept : state_(state) {}

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;
  Engine(Engine&&) noexcept = default;
  Engine& operator=(Engine&&) noexcept = default;

  EngineKind kind() const noexcept { return state_.kind(); }
  const EngineState& state() const noexcept { return state_; }
  EngineState& state() noexcept { return state_; }

  std::uint32_t operator()() noexcept { return next_word(state_); }
  void discard(std::uint64_t n) { state_ = skip_ahead(state_, n); }

 private:
  EngineState state_;
};

}  // namespace portrng
