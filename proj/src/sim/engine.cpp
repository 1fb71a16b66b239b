#include "fedsim/sim/engine.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "fedsim/error.hpp"

namespace fedsim {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kLifecycleTick: return "lifecycle-tick";
    case EventKind::kPeeringStep: return "peering-step";
    case EventKind::kSyncTick: return "sync-tick";
    case EventKind::kFrameGeneration: return "frame-generation";
    case EventKind::kStageComplete: return "stage-complete";
    case EventKind::kPacketArrival: return "packet-arrival";
    case EventKind::kMetricSample: return "metric-sample";
    case EventKind::kGeneric: return "generic";
  }
  return "unknown";
}

Engine::Engine(std::uint64_t seed) : seed_(seed) {}

EventHandle Engine::schedule(SimTime fire_at, EventKind kind, Action action) {
  if (fire_at < now_) {
    fail(ErrorCode::kPastTime, fmt::format("fire_at={} < now={}", fire_at.millis, now_.millis));
  }
  const std::uint64_t seq = next_seq_++;
  heap_.push_back(Entry{Event{fire_at, seq, kind}, std::move(action)});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
  return EventHandle{seq};
}

std::size_t Engine::run_until(SimTime t_end) {
  std::size_t count = 0;
  while (!heap_.empty() && heap_.front().event.fire_at <= t_end) {
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Entry entry = std::move(heap_.back());
    heap_.pop_back();
    now_ = entry.event.fire_at;
    const auto mix = [this](std::uint64_t v) {
      digest_ ^= v;
      digest_ *= 0x100000001b3ULL;
    };
    mix(entry.event.fire_at.millis);
    mix(entry.event.seq);
    mix(static_cast<std::uint64_t>(entry.event.kind));
    if (tracing_) {
      trace_.push_back(TraceEntry{entry.event.fire_at, entry.event.seq, entry.event.kind});
    }
    if (entry.action) entry.action();
    ++count;
    ++dispatched_;
    if (observer_) observer_(entry.event);
  }
  if (now_ < t_end) now_ = t_end;
  return count;
}

}  // namespace fedsim
