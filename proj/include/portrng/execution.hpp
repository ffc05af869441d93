#pragma once

// Emulated device task system. Buffers live in an in-process arena; tasks
// are element-range kernels submitted either with accessors (dependencies
// inferred from access modes) or with explicit event lists (no inference).
// run() executes pending tasks on a serial or multi-worker backend.

#include <algorithm>
#include <atomic>
#include <cassert>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "portrng/error.hpp"

namespace portrng {

enum class AccessMode { read, write, read_write };

constexpr bool writes(AccessMode m) noexcept { return m != AccessMode::read; }
constexpr bool reads(AccessMode m) noexcept { return m != AccessMode::write; }

enum class ElementKind { f32, f64, u32 };

template <class T>
inline constexpr ElementKind element_kind_of = std::is_same_v<T, float>    ? ElementKind::f32
                                               : std::is_same_v<T, double> ? ElementKind::f64
                                                                           : ElementKind::u32;

template <class T>
concept DeviceElement =
    std::is_same_v<T, float> || std::is_same_v<T, double> || std::is_same_v<T, std::uint32_t>;

constexpr std::size_t element_size(ElementKind kind) noexcept {
  return kind == ElementKind::f64 ? 8 : 4;
}

struct BufferHandle {
  std::uint64_t graph = 0;
  std::uint64_t id = 0;
  std::size_t length = 0;
  ElementKind kind = ElementKind::f32;

  friend bool operator==(const BufferHandle&, const BufferHandle&) = default;
};

struct Accessor {
  BufferHandle buffer;
  AccessMode mode = AccessMode::read;
};

struct ElementRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
};

class KernelContext;

/// An element-range computation. The backend may invoke `body` once over
/// [0, extent) or several times over disjoint chunks covering it; chunk
/// boundaries are multiples of `grain`. Non-splittable kernels always get
/// the full range in one call.
struct Kernel {
  std::string name;
  std::size_t extent = 0;
  std::size_t grain = 1;
  bool splittable = true;
  std::function<void(const KernelContext&, ElementRange)> body;
};

/// Completion handle for one submitted task.
class Event {
 public:
  Event() = default;

  std::uint64_t task_id() const noexcept { return state_ ? state_->task : 0; }
  bool valid() const noexcept { return static_cast<bool>(state_); }
  bool is_complete() const noexcept {
    return state_ && state_->done.load(std::memory_order_acquire);
  }

 private:
  friend class TaskGraph;

  struct State {
    std::uint64_t graph = 0;
    std::uint64_t task = 0;
    std::atomic<bool> done{false};
  };

  explicit Event(std::shared_ptr<State> state) : state_(std::move(state)) {}

  std::shared_ptr<State> state_;
};

struct Serial {
  /// Pop the most recently readied task first. Only useful to expose missing
  /// dependencies in tests.
  bool reverse_ready = false;
};

struct Parallel {
  unsigned workers = 1;
  std::size_t chunk = 0;  // 0 selects default_chunk()
};

using Backend = std::variant<Serial, Parallel>;

/// max(4096, ceil(extent / (4 * workers)))
constexpr std::size_t default_chunk(std::size_t extent, unsigned workers) noexcept {
  const std::size_t parts = 4 * static_cast<std::size_t>(std::max(workers, 1u));
  return std::max<std::size_t>(4096, (extent + parts - 1) / parts);
}

inline std::string backend_label(const Backend& backend) {
  if (const auto* p = std::get_if<Parallel>(&backend)) {
    return "parallel:" + std::to_string(p->workers);
  }
  return "serial";
}

inline Backend parse_backend(std::string_view text) {
  if (text == "serial") return Serial{};
  constexpr std::string_view prefix = "parallel:";
  if (text.starts_with(prefix)) {
    const auto digits = text.substr(prefix.size());
    unsigned workers = 0;
    bool ok = !digits.empty();
    for (char c : digits) {
      if (c < '0' || c > '9' || workers > 100000) {
        ok = false;
        break;
      }
      workers = workers * 10 + static_cast<unsigned>(c - '0');
    }
    if (ok && workers >= 1) return Parallel{workers, 0};
  }
  throw Error(ErrorCode::config_error,
              "backend must be serial or parallel:N (N >= 1), got '" + std::string(text) + "'");
}

struct TaskTiming {
  std::uint64_t task_id = 0;
  std::string name;
  std::chrono::nanoseconds start{};  // relative to the start of run()
  std::chrono::nanoseconds end{};
  std::uint64_t start_order = 0;  // rank among tasks started in this run
  std::size_t chunks = 0;
};

struct RunReport {
  std::vector<TaskTiming> tasks;  // in start order
  std::chrono::nanoseconds wall{};

  std::vector<std::uint64_t> start_sequence() const {
    std::vector<std::uint64_t> ids;
    ids.reserve(tasks.size());
    for (const auto& t : tasks) ids.push_back(t.task_id);
    return ids;
  }
};

inline constexpr std::size_t default_arena_bytes = std::size_t{2} << 30;

/// Byte budget for device allocations.
class DeviceArena {
 public:
  explicit DeviceArena(std::size_t cap_bytes) noexcept : cap_(cap_bytes) {}

  void reserve(std::size_t bytes) {
    if (bytes > cap_ - used_) {
      throw Error(ErrorCode::allocation_failure,
                  "request of " + std::to_string(bytes) + " bytes exceeds arena cap (" +
                      std::to_string(used_) + " of " + std::to_string(cap_) + " in use)");
    }
    used_ += bytes;
  }

  std::size_t cap() const noexcept { return cap_; }
  std::size_t used() const noexcept { return used_; }

 private:
  std::size_t cap_;
  std::size_t used_ = 0;
};

namespace detail {

struct BufferStorage {
  std::variant<std::vector<float>, std::vector<double>, std::vector<std::uint32_t>> data;

  template <DeviceElement T>
  std::span<T> view(const BufferHandle& h) {
    auto* v = std::get_if<std::vector<T>>(&data);
    if (v == nullptr) {
      throw Error(ErrorCode::invalid_parameter,
                  "buffer " + std::to_string(h.id) + " has a different element kind");
    }
    return *v;
  }
};

inline std::uint64_t next_graph_uid() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace detail

/// Gives a running kernel access to the buffers its task declared.
class KernelContext {
 public:
  template <DeviceElement T>
  std::span<const T> read(const BufferHandle& h) const {
    return storage_for(h, false)->template view<T>(h);
  }

  template <DeviceElement T>
  std::span<T> write(const BufferHandle& h) const {
    return storage_for(h, true)->template view<T>(h);
  }

 private:
  friend class TaskGraph;

  struct Binding {
    BufferHandle handle;
    AccessMode mode;
    detail::BufferStorage* storage;
  };

  detail::BufferStorage* storage_for(const BufferHandle& h, bool want_write) const {
    for (const auto& b : bindings_) {
      if (b.handle.id == h.id && b.handle.graph == h.graph) {
        if (want_write && !writes(b.mode)) {
          throw Error(ErrorCode::undeclared_buffer,
                      "buffer " + std::to_string(h.id) + " declared read-only");
        }
        return b.storage;
      }
    }
    throw Error(ErrorCode::undeclared_buffer,
                "buffer " + std::to_string(h.id) + " not declared by task");
  }

  std::vector<Binding> bindings_;
};

class TaskGraph {
 public:
  explicit TaskGraph(std::size_t arena_cap_bytes = default_arena_bytes)
      : uid_(detail::next_graph_uid()), arena_(arena_cap_bytes) {}

  TaskGraph(const TaskGraph&) = delete;
  TaskGraph& operator=(const TaskGraph&) = delete;
  TaskGraph(TaskGraph&&) noexcept = default;
  TaskGraph& operator=(TaskGraph&&) noexcept = default;

  /// Zero-initialized device storage for `n` elements.
  BufferHandle create_buffer(std::size_t n, ElementKind kind) {
    if (n > arena_.cap() / element_size(kind)) {
      throw Error(ErrorCode::allocation_failure,
                  std::to_string(n) + " elements exceed arena cap of " +
                      std::to_string(arena_.cap()) + " bytes");
    }
    arena_.reserve(n * element_size(kind));
    auto storage = std::make_unique<detail::BufferStorage>();
    switch (kind) {
      case ElementKind::f32: storage->data = std::vector<float>(n); break;
      case ElementKind::f64: storage->data = std::vector<double>(n); break;
      case ElementKind::u32: storage->data = std::vector<std::uint32_t>(n); break;
    }
    const BufferHandle handle{uid_, next_buffer_id_++, n, kind};
    buffers_.emplace(handle.id, BufferState{std::move(storage), std::nullopt, {}});
    return handle;
  }

  template <DeviceElement T>
  BufferHandle create_buffer(std::size_t n) {
    return create_buffer(n, element_kind_of<T>);
  }

  /// Buffer-style submission: dependencies come from the access modes.
  /// RAW: readers follow the last writer. WAR: a writer follows every reader
  /// since the last write. WAW: a writer follows the previous writer.
  Event submit_with_accessors(Kernel kernel, std::vector<Accessor> accessors) {
    for (std::size_t i = 0; i < accessors.size(); ++i) {
      buffer_state(accessors[i].buffer);
      for (std::size_t j = 0; j < i; ++j) {
        if (accessors[j].buffer.id == accessors[i].buffer.id) {
          throw Error(ErrorCode::invalid_parameter,
                      "buffer " + std::to_string(accessors[i].buffer.id) + " listed twice");
        }
      }
    }
    const std::uint64_t id = tasks_.size();
    std::vector<std::uint64_t> preds;
    for (const auto& acc : accessors) {
      auto& bs = buffers_.at(acc.buffer.id);
      if (bs.last_writer) preds.push_back(*bs.last_writer);
      if (writes(acc.mode)) {
        preds.insert(preds.end(), bs.readers_since_write.begin(), bs.readers_since_write.end());
        bs.last_writer = id;
        bs.readers_since_write.clear();
      } else {
        bs.readers_since_write.push_back(id);
      }
    }
    return add_task(std::move(kernel), std::move(accessors), std::move(preds));
  }

  /// USM-style submission: edges come only from `deps`. Every listed buffer
  /// is accessible read-write and no hazards are tracked for it.
  Event submit_with_events(Kernel kernel, std::vector<BufferHandle> buffers,
                           const std::vector<Event>& deps) {
    std::vector<Accessor> accessors;
    for (const auto& b : buffers) {
      buffer_state(b);
      accessors.push_back({b, AccessMode::read_write});
    }
    std::vector<std::uint64_t> preds;
    for (const auto& e : deps) {
      if (!e.valid() || e.state_->graph != uid_ || e.state_->task >= tasks_.size()) {
        throw Error(ErrorCode::unknown_event, "event does not belong to this graph");
      }
      preds.push_back(e.state_->task);
    }
    return add_task(std::move(kernel), std::move(accessors), std::move(preds));
  }

  /// Executes every pending task respecting edges. Throws KernelPanic with
  /// the failing task id if a kernel throws; tasks finished before the
  /// failure stay complete.
  RunReport run(const Backend& backend) {
    const auto t0 = std::chrono::steady_clock::now();
    RunReport report;
    std::vector<std::uint64_t> pending;
    for (const auto& t : tasks_) {
      if (!t.event->done.load(std::memory_order_relaxed)) pending.push_back(t.id);
    }
    if (!pending.empty()) {
      if (const auto* p = std::get_if<Parallel>(&backend)) {
        if (p->workers == 0) throw Error(ErrorCode::config_error, "parallel backend needs a worker");
        run_parallel(*p, pending, t0, report);
      } else {
        run_serial(std::get<Serial>(backend), pending, t0, report);
      }
    }
    report.wall = std::chrono::steady_clock::now() - t0;
    return report;
  }

  /// Device-to-host snapshot of a buffer. Fails with PendingWrites while any
  /// unexecuted task may write it. Elapsed time accumulates in transfer_time().
  template <DeviceElement T>
  std::vector<T> copy_to_host(const BufferHandle& h) {
    auto& bs = buffer_state(h);
    ensure_no_pending(h, true);
    const auto t0 = std::chrono::steady_clock::now();
    auto view = bs.storage->template view<T>(h);
    std::vector<T> host(view.begin(), view.end());
    transfer_time_ += std::chrono::steady_clock::now() - t0;
    return host;
  }

  /// Host-to-device copy into the front of a buffer.
  template <DeviceElement T>
  void copy_from_host(const BufferHandle& h, std::span<const T> host) {
    auto& bs = buffer_state(h);
    ensure_no_pending(h, false);
    const auto t0 = std::chrono::steady_clock::now();
    auto view = bs.storage->template view<T>(h);
    if (host.size() > view.size()) {
      throw Error(ErrorCode::invalid_parameter, "host data larger than buffer");
    }
    std::copy(host.begin(), host.end(), view.begin());
    transfer_time_ += std::chrono::steady_clock::now() - t0;
  }

  std::chrono::nanoseconds transfer_time() const noexcept { return transfer_time_; }
  std::size_t task_count() const noexcept { return tasks_.size(); }
  std::size_t arena_used() const noexcept { return arena_.used(); }
  std::size_t arena_cap() const noexcept { return arena_.cap(); }

  const std::vector<std::uint64_t>& predecessors(std::uint64_t task) const {
    return tasks_.at(task).preds;
  }

  bool is_complete(std::uint64_t task) const {
    return tasks_.at(task).event->done.load(std::memory_order_acquire);
  }

  std::vector<std::pair<std::uint64_t, std::uint64_t>> edges() const {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    for (const auto& t : tasks_) {
      for (auto p : t.preds) out.emplace_back(p, t.id);
    }
    return out;
  }

  /// Every edge points from an earlier submission to a later one.
  bool acyclic() const {
    for (const auto& t : tasks_) {
      for (auto p : t.preds) {
        if (p >= t.id) return false;
      }
    }
    return true;
  }

 private:
  struct TaskRecord {
    std::uint64_t id = 0;
    Kernel kernel;
    std::vector<Accessor> accessors;
    std::vector<std::uint64_t> preds;
    std::vector<std::uint64_t> succs;
    std::shared_ptr<Event::State> event;
  };

  struct BufferState {
    std::unique_ptr<detail::BufferStorage> storage;
    std::optional<std::uint64_t> last_writer;
    std::vector<std::uint64_t> readers_since_write;
  };

  BufferState& buffer_state(const BufferHandle& h) {
    auto it = buffers_.find(h.id);
    if (h.graph != uid_ || it == buffers_.end()) {
      throw Error(ErrorCode::unknown_buffer,
                  "buffer " + std::to_string(h.id) + " does not belong to this graph");
    }
    return it->second;
  }

  void ensure_no_pending(const BufferHandle& h, bool writers_only) const {
    for (const auto& t : tasks_) {
      if (t.event->done.load(std::memory_order_acquire)) continue;
      for (const auto& acc : t.accessors) {
        if (acc.buffer.id == h.id && (!writers_only || writes(acc.mode))) {
          throw Error(ErrorCode::pending_writes, "task " + std::to_string(t.id) +
                                                     " has not yet run on buffer " +
                                                     std::to_string(h.id));
        }
      }
    }
  }

  Event add_task(Kernel kernel, std::vector<Accessor> accessors, std::vector<std::uint64_t> preds) {
    const std::uint64_t id = tasks_.size();
    std::sort(preds.begin(), preds.end());
    preds.erase(std::unique(preds.begin(), preds.end()), preds.end());
    for (auto p : preds) {
      assert(p < id);
      tasks_[p].succs.push_back(id);
    }
    auto state = std::make_shared<Event::State>();
    state->graph = uid_;
    state->task = id;
    tasks_.push_back(TaskRecord{id, std::move(kernel), std::move(accessors), std::move(preds), {},
                                state});
    assert(acyclic());
    return Event(std::move(state));
  }

  KernelContext context_for(const TaskRecord& t) {
    KernelContext ctx;
    for (const auto& acc : t.accessors) {
      ctx.bindings_.push_back({acc.buffer, acc.mode, buffers_.at(acc.buffer.id).storage.get()});
    }
    return ctx;
  }

  std::vector<std::size_t> unmet_predecessors(const std::vector<std::uint64_t>& pending) const {
    std::vector<std::size_t> unmet(tasks_.size(), 0);
    for (auto id : pending) {
      for (auto p : tasks_[id].preds) {
        if (!tasks_[p].event->done.load(std::memory_order_relaxed)) ++unmet[id];
      }
    }
    return unmet;
  }

  void run_serial(const Serial& backend, const std::vector<std::uint64_t>& pending,
                  std::chrono::steady_clock::time_point t0, RunReport& report) {
    auto unmet = unmet_predecessors(pending);
    std::deque<std::uint64_t> ready;
    for (auto id : pending) {
      if (unmet[id] == 0) ready.push_back(id);
    }
    while (!ready.empty()) {
      std::uint64_t id;
      if (backend.reverse_ready) {
        id = ready.back();
        ready.pop_back();
      } else {
        id = ready.front();
        ready.pop_front();
      }
      auto& task = tasks_[id];
      TaskTiming timing{id, task.kernel.name, std::chrono::steady_clock::now() - t0, {},
                        report.tasks.size(), 1};
      const auto ctx = context_for(task);
      try {
        if (task.kernel.body) task.kernel.body(ctx, ElementRange{0, task.kernel.extent});
      } catch (const std::exception& e) {
        throw KernelPanic(id, e.what());
      } catch (...) {
        throw KernelPanic(id, "unknown exception");
      }
      timing.end = std::chrono::steady_clock::now() - t0;
      task.event->done.store(true, std::memory_order_release);
      report.tasks.push_back(std::move(timing));
      for (auto s : task.succs) {
        if (--unmet[s] == 0) ready.push_back(s);
      }
    }
  }

  struct Chunk {
    std::uint64_t task;
    ElementRange range;
  };

  static std::size_t chunk_length(const Kernel& k, const Parallel& backend) {
    std::size_t len = backend.chunk != 0 ? backend.chunk : default_chunk(k.extent, backend.workers);
    const std::size_t grain = std::max<std::size_t>(k.grain, 1);
    return (len + grain - 1) / grain * grain;
  }

  void run_parallel(const Parallel& backend, const std::vector<std::uint64_t>& pending,
                    std::chrono::steady_clock::time_point t0, RunReport& report) {
    auto unmet = unmet_predecessors(pending);
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<Chunk> queue;
    std::vector<std::size_t> chunks_left(tasks_.size(), 0);
    std::vector<std::size_t> chunk_count(tasks_.size(), 0);
    std::vector<std::optional<std::size_t>> slot(tasks_.size());  // index into report.tasks
    std::vector<KernelContext> contexts(tasks_.size());
    std::size_t tasks_left = pending.size();
    std::optional<KernelPanic> failure;

    // Caller holds `mutex`.
    auto enqueue = [&](std::uint64_t id) {
      const Kernel& k = tasks_[id].kernel;
      contexts[id] = context_for(tasks_[id]);
      std::size_t count = 0;
      if (!k.splittable || k.extent == 0) {
        queue.push_back({id, {0, k.extent}});
        count = 1;
      } else {
        const std::size_t len = chunk_length(k, backend);
        for (std::size_t b = 0; b < k.extent; b += len) {
          queue.push_back({id, {b, std::min(k.extent, b + len)}});
          ++count;
        }
      }
      chunks_left[id] = count;
      chunk_count[id] = count;
    };

    {
      std::lock_guard lock(mutex);
      for (auto id : pending) {
        if (unmet[id] == 0) enqueue(id);
      }
    }

    auto worker = [&] {
      std::unique_lock lock(mutex);
      for (;;) {
        cv.wait(lock, [&] { return failure || tasks_left == 0 || !queue.empty(); });
        if (failure || tasks_left == 0) return;
        const Chunk chunk = queue.front();
        queue.pop_front();
        const auto& task = tasks_[chunk.task];
        if (!slot[chunk.task]) {
          slot[chunk.task] = report.tasks.size();
          report.tasks.push_back(TaskTiming{chunk.task, task.kernel.name,
                                            std::chrono::steady_clock::now() - t0, {},
                                            report.tasks.size(), chunk_count[chunk.task]});
        }
        const KernelContext& ctx = contexts[chunk.task];
        lock.unlock();
        std::optional<std::string> error;
        try {
          if (task.kernel.body) task.kernel.body(ctx, chunk.range);
        } catch (const std::exception& e) {
          error = e.what();
        } catch (...) {
          error = "unknown exception";
        }
        lock.lock();
        if (error) {
          if (!failure) failure.emplace(chunk.task, *error);
          cv.notify_all();
          return;
        }
        if (--chunks_left[chunk.task] == 0) {
          report.tasks[*slot[chunk.task]].end = std::chrono::steady_clock::now() - t0;
          task.event->done.store(true, std::memory_order_release);
          --tasks_left;
          for (auto s : task.succs) {
            if (--unmet[s] == 0) enqueue(s);
          }
          cv.notify_all();
        }
      }
    };

    {
      std::vector<std::jthread> threads;
      threads.reserve(backend.workers);
      for (unsigned w = 0; w < backend.workers; ++w) threads.emplace_back(worker);
    }
    if (failure) throw *failure;
  }

  std::uint64_t uid_;
  DeviceArena arena_;
  std::uint64_t next_buffer_id_ = 0;
  std::unordered_map<std::uint64_t, BufferState> buffers_;
  std::vector<TaskRecord> tasks_;
  std::chrono::nanoseconds transfer_time_{};
};

}  // namespace portrng
