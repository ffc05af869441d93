#pragma once

// Conversion of raw engine words into real-valued samples, plus the
// separate affine range-transform kernel applied after generation.

#include <charconv>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "portrng/engine.hpp"
#include "portrng/error.hpp"

namespace portrng {

enum class Precision { fp32, fp64 };

template <std::floating_point Real>
inline constexpr Precision precision_of = sizeof(Real) == 4 ? Precision::fp32 : Precision::fp64;

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

struct Gaussian {
  double mean = 0.0;
  double stddev = 1.0;
};

inline void validate(const Uniform& u) {
  if (!std::isfinite(u.lo) || !std::isfinite(u.hi) || !(u.lo < u.hi)) {
    throw Error(ErrorCode::invalid_range, "uniform range requires finite lo < hi");
  }
}

inline void validate(const Gaussian& g) {
  if (!std::isfinite(g.mean) || !std::isfinite(g.stddev) || !(g.stddev > 0.0)) {
    throw Error(ErrorCode::invalid_parameter, "gaussian requires finite mean and stddev > 0");
  }
}

namespace detail {

inline double parse_double(std::string_view text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw Error(ErrorCode::config_error, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// A distribution request: which law, which parameters, which precision.
struct DistributionSpec {
  std::variant<Uniform, Gaussian> law = Uniform{};
  Precision precision = Precision::fp32;

  static DistributionSpec uniform(double lo, double hi, Precision p = Precision::fp32) {
    DistributionSpec spec{Uniform{lo, hi}, p};
    spec.validate();
    return spec;
  }

  static DistributionSpec gaussian(double mean, double stddev, Precision p = Precision::fp32) {
    DistributionSpec spec{Gaussian{mean, stddev}, p};
    spec.validate();
    return spec;
  }

  void validate() const {
    std::visit([](const auto& law) { portrng::validate(law); }, law);
  }

  bool is_uniform() const noexcept { return std::holds_alternative<Uniform>(law); }

  /// "uniform:LO:HI" or "gaussian:MEAN:STD"; shortest round-trip formatting.
  std::string label() const {
    if (const auto* u = std::get_if<Uniform>(&law)) {
      return "uniform:" + detail::format_double(u->lo) + ":" + detail::format_double(u->hi);
    }
    const auto& g = std::get<Gaussian>(law);
    return "gaussian:" + detail::format_double(g.mean) + ":" + detail::format_double(g.stddev);
  }

  /// Inverse of label().
  static DistributionSpec parse(std::string_view text, Precision p = Precision::fp32) {
    const auto first = text.find(':');
    const auto second = first == std::string_view::npos ? first : text.find(':', first + 1);
    if (second == std::string_view::npos || text.find(':', second + 1) != std::string_view::npos) {
      throw Error(ErrorCode::config_error,
                  "distribution must be uniform:LO:HI or gaussian:MEAN:STD, got '" +
                      std::string(text) + "'");
    }
    const auto name = text.substr(0, first);
    const double a = detail::parse_double(text.substr(first + 1, second - first - 1));
    const double b = detail::parse_double(text.substr(second + 1));
    if (name == "uniform") return uniform(a, b, p);
    if (name == "gaussian") return gaussian(a, b, p);
    throw Error(ErrorCode::config_error, "unknown distribution '" + std::string(name) + "'");
  }
};

/// Owned block of generated samples.
template <std::floating_point Real>
struct RandomBlock {
  std::vector<Real> values;

  static constexpr Precision precision = precision_of<Real>;
  std::size_t count() const noexcept { return values.size(); }
};

/// Top 24 bits of `w` scaled by 2^-24. Exact in fp32 and strictly below 1.
template <std::floating_point Real = float>
constexpr Real word_to_unit(std::uint32_t w) noexcept {
  return static_cast<Real>(w >> 8) * static_cast<Real>(0x1.0p-24);
}

/// Writes word_to_unit of the next out.size() words into `out`.
template <std::floating_point Real>
void generate_uniform_unit(EngineState& state, std::span<Real> out) {
  Real* dst = out.data();
  generate_words(state, out.size(), [&dst](std::uint32_t w) { *dst++ = word_to_unit<Real>(w); });
}

template <std::floating_point Real = float>
RandomBlock<Real> fill_uniform_unit(EngineState& state, std::size_t n) {
  RandomBlock<Real> block{std::vector<Real>(n)};
  generate_uniform_unit<Real>(state, block.values);
  return block;
}

/// Maps unit samples onto [lo, hi) in place: x -> x*(hi-lo) + lo.
/// Results that round up to `hi` are pulled back to the largest value below it.
template <std::floating_point Real>
void range_transform(std::span<Real> values, double lo, double hi) {
  validate(Uniform{lo, hi});
  const auto rlo = static_cast<Real>(lo);
  const auto rhi = static_cast<Real>(hi);
  const Real width = rhi - rlo;
  if (!(rlo < rhi) || !std::isfinite(width)) {
    throw Error(ErrorCode::invalid_range, "range not representable at this precision");
  }
  const Real below_hi = std::nextafter(rhi, rlo);
  for (Real& x : values) {
    const Real y = x * width + rlo;
    x = y < rhi ? y : below_hi;
  }
}

template <std::floating_point Real>
RandomBlock<Real>& range_transform(RandomBlock<Real>& block, double lo, double hi) {
  range_transform<Real>(std::span<Real>(block.values), lo, hi);
  return block;
}

/// One Box-Muller pair from two unit uniforms; uses 1-u1 so the log
/// argument lies in (0, 1].
template <std::floating_point Real>
std::pair<Real, Real> box_muller(Real u1, Real u2) noexcept {
  const Real radius = std::sqrt(Real{-2} * std::log(Real{1} - u1));
  const Real angle = Real{2} * std::numbers::pi_v<Real> * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

/// Affine rescale x -> x*stddev + mean, the post-processing step for normals.
template <std::floating_point Real>
void scale_shift(std::span<Real> values, double mean, double stddev) {
  validate(Gaussian{mean, stddev});
  const auto m = static_cast<Real>(mean);
  const auto s = static_cast<Real>(stddev);
  for (Real& x : values) x = x * s + m;
}

/// Standard normals from consecutive word pairs. An odd-length output drops
/// the final pair's second value; 2*ceil(n/2) words are consumed.
template <std::floating_point Real>
void generate_standard_normal(EngineState& state, std::span<Real> out) {
  const std::size_t n = out.size();
  std::size_t i = 0;
  for (; i + 1 < n; i += 2) {
    const Real u1 = word_to_unit<Real>(next_word(state));
    const Real u2 = word_to_unit<Real>(next_word(state));
    std::tie(out[i], out[i + 1]) = box_muller(u1, u2);
  }
  if (i < n) {
    const Real u1 = word_to_unit<Real>(next_word(state));
    const Real u2 = word_to_unit<Real>(next_word(state));
    out[i] = box_muller(u1, u2).first;
  }
}

template <std::floating_point Real>
void generate_gaussian(EngineState& state, std::span<Real> out, double mean, double stddev) {
  validate(Gaussian{mean, stddev});
  generate_standard_normal<Real>(state, out);
  scale_shift<Real>(out, mean, stddev);
}

template <std::floating_point Real = float>
RandomBlock<Real> fill_gaussian(EngineState& state, std::size_t n, double mean, double stddev) {
  validate(Gaussian{mean, stddev});
  RandomBlock<Real> block{std::vector<Real>(n)};
  generate_gaussian<Real>(state, block.values, mean, stddev);
  return block;
}

/// Samples per `spec` in one pass (generation followed by the range or
/// scale transform), the reference path for the task-graph variants.
template <std::floating_point Real>
void generate(EngineState& state, std::span<Real> out, const DistributionSpec& spec) {
  if (const auto* u = std::get_if<Uniform>(&spec.law)) {
    validate(*u);
    generate_uniform_unit<Real>(state, out);
    range_transform<Real>(out, u->lo, u->hi);
  } else {
    const auto& g = std::get<Gaussian>(spec.law);
    generate_gaussian<Real>(state, out, g.mean, g.stddev);
  }
}

}  // namespace portrng
