#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "fedsim/sim/random.hpp"
#include "fedsim/sim/time.hpp"

namespace fedsim {

enum class EventKind : std::uint8_t {
  kLifecycleTick,
  kPeeringStep,
  kSyncTick,
  kFrameGeneration,
  kStageComplete,
  kPacketArrival,
  kMetricSample,
  kGeneric,
};

std::string_view to_string(EventKind kind);

struct EventHandle {
  std::uint64_t seq = 0;
  bool operator==(const EventHandle&) const = default;
};

struct Event {
  SimTime fire_at;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::kGeneric;
};

struct TraceEntry {
  SimTime fire_at;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::kGeneric;
  bool operator==(const TraceEntry&) const = default;
};

// Single-threaded discrete-event scheduler. Events fire in (fire_at, seq)
// order; seq is the insertion counter, so equal timestamps dispatch FIFO.
class Engine {
 public:
  using Action = std::function<void()>;
  using Observer = std::function<void(const Event&)>;

  explicit Engine(std::uint64_t seed = 0);

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  SimTime now() const { return now_; }
  std::uint64_t seed() const { return seed_; }

  EventHandle schedule(SimTime fire_at, EventKind kind, Action action);
  EventHandle schedule_in(std::uint64_t delay_ms, EventKind kind, Action action) {
    return schedule(now_ + delay_ms, kind, std::move(action));
  }

  // Dispatches every event with fire_at <= t_end, then parks the clock at
  // t_end (or leaves it where it is if already later).
  std::size_t run_until(SimTime t_end);

  std::size_t pending() const { return heap_.size(); }
  std::uint64_t dispatched() const { return dispatched_; }

  // Independent stream for a named consumer.
  Rng rng(std::string_view consumer) const { return Rng(seed_, fnv1a64(consumer)); }

  void record_trace(bool enabled) { tracing_ = enabled; }
  const std::vector<TraceEntry>& trace() const { return trace_; }
  // Running FNV-style digest over every dispatched (fire_at, seq, kind) triple;
  // maintained whether or not the full trace is recorded.
  std::uint64_t trace_digest() const { return digest_; }

  // Called after each dispatched event's action has run.
  void set_observer(Observer observer) { observer_ = std::move(observer); }

 private:
  struct Entry {
    Event event;
    Action action;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.event.fire_at != b.event.fire_at) return a.event.fire_at > b.event.fire_at;
      return a.event.seq > b.event.seq;
    }
  };

  std::uint64_t seed_;
  SimTime now_{};
  std::uint64_t next_seq_ = 0;
  std::uint64_t dispatched_ = 0;
  std::vector<Entry> heap_;
  bool tracing_ = false;
  std::vector<TraceEntry> trace_;
  std::uint64_t digest_ = 0xcbf29ce484222325ULL;
  Observer observer_;
};

}  // namespace fedsim
