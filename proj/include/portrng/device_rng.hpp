#pragma once

// Two-kernel generation on the task graph: a generate kernel writing unit
// uniforms or standard normals, then a transform kernel mapping them to the
// requested range or mean/stddev. Philox generate kernels are split across
// workers by skipping each chunk's engine copy to its element offset, so
// every backend reproduces the serial stream.

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "portrng/distributions.hpp"
#include "portrng/engine.hpp"
#include "portrng/execution.hpp"
#include "portrng/metrics.hpp"

namespace portrng {

/// Engine words consumed when producing `n` samples of `spec`.
inline std::uint64_t words_for(const DistributionSpec& spec, std::size_t n) noexcept {
  return spec.is_uniform() ? n : 2 * ((n + 1) / 2);
}

/// Moves `state` forward by `n` words (O(1) for Philox, O(n) for MRG32k3a).
inline void advance(EngineState& state, std::uint64_t n) {
  if (state.kind() == EngineKind::philox4x32x10) {
    state = skip_ahead(state, n);
    return;
  }
  for (std::uint64_t i = 0; i < n; ++i) next_word(state);
}

/// Kernel filling `out` with unit uniforms (or standard normals when
/// `normal` is set) drawn from the stream starting at `base`.
template <std::floating_point Real>
Kernel make_generate_kernel(const EngineState& base, BufferHandle out, bool normal) {
  Kernel k;
  k.name = normal ? "generate_normal" : "generate_uniform";
  k.extent = out.length;
  k.grain = normal ? 2 : 1;
  k.splittable = base.kind() == EngineKind::philox4x32x10;
  k.body = [base, out, normal](const KernelContext& ctx, ElementRange r) {
    auto dst = ctx.write<Real>(out).subspan(r.begin, r.size());
    EngineState s = r.begin == 0 ? base : skip_ahead(base, r.begin);
    if (normal) {
      generate_standard_normal<Real>(s, dst);
    } else {
      generate_uniform_unit<Real>(s, dst);
    }
  };
  return k;
}

/// Kernel applying the post-generation transform of `spec` in place.
template <std::floating_point Real>
Kernel make_transform_kernel(BufferHandle buf, const DistributionSpec& spec) {
  spec.validate();
  Kernel k;
  k.name = "transform";
  k.extent = buf.length;
  k.body = [buf, law = spec.law](const KernelContext& ctx, ElementRange r) {
    auto data = ctx.write<Real>(buf).subspan(r.begin, r.size());
    if (const auto* u = std::get_if<Uniform>(&law)) {
      range_transform<Real>(data, u->lo, u->hi);
    } else {
      const auto& g = std::get<Gaussian>(law);
      scale_shift<Real>(data, g.mean, g.stddev);
    }
  };
  return k;
}

/// Submits generate + transform for `buf` and advances `state` past the
/// consumed words. Buffer mode chains the kernels through read_write
/// accessors; USM mode passes the generate event explicitly. Returns the
/// transform kernel's event.
template <std::floating_point Real>
Event submit_generation(TaskGraph& graph, ApiMode mode, EngineState& state, BufferHandle buf,
                        const DistributionSpec& spec, const std::vector<Event>& deps = {}) {
  spec.validate();
  auto generate = make_generate_kernel<Real>(state, buf, !spec.is_uniform());
  auto transform = make_transform_kernel<Real>(buf, spec);
  Event done;
  switch (mode) {
    case ApiMode::buffer:
      graph.submit_with_accessors(std::move(generate), {{buf, AccessMode::read_write}});
      done = graph.submit_with_accessors(std::move(transform), {{buf, AccessMode::read_write}});
      break;
    case ApiMode::usm: {
      const Event generated = graph.submit_with_events(std::move(generate), {buf}, deps);
      done = graph.submit_with_events(std::move(transform), {buf}, {generated});
      break;
    }
    case ApiMode::hostdirect:
      throw Error(ErrorCode::config_error, "hostdirect mode does not use the task graph");
  }
  advance(state, words_for(spec, buf.length));
  return done;
}

}  // namespace portrng
