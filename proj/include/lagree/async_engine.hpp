#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lagree/model.hpp"
#include "lagree/semilattice.hpp"

namespace lagree {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Replayed delays keyed by (sender, per-sender send counter).
using DelayTable = std::map<std::pair<ProcessId, std::uint64_t>, long long>;

/// Deterministic per-message delay. Self-messages always travel with delay 0;
/// remote delays are 1 under the unit model and drawn from a seeded hash under
/// seededRandom, so identical arguments always produce identical delays.
inline long long assign_delay(const DelayModel& m, ProcessId from, ProcessId to,
                              std::uint64_t counter,
                              const DelayTable* replay = nullptr) {
  if (from == to) return 0;
  switch (m.kind) {
    case DelayModel::Kind::unit:
      return 1;
    case DelayModel::Kind::seeded_random: {
      std::uint64_t h = splitmix64(m.seed ^ splitmix64(
                            static_cast<std::uint64_t>(from) * 0x100000001b3ULL ^
                            counter));
      return 1 + static_cast<long long>(h % static_cast<std::uint64_t>(m.max_delay));
    }
    case DelayModel::Kind::replay: {
      if (replay) {
        auto it = replay->find({from, counter});
        if (it != replay->end()) return it->second;
      }
      return 1;  // divergence; the byte comparison will flag it
    }
  }
  return 1;
}

/// Output channel handed to protocol handlers. Handlers are pure functions of
/// (state, input) and communicate only through it.
class AsyncContext {
 public:
  void send(ProcessId to, nlohmann::json body, nlohmann::json annotations = {}) {
    sends_.push_back({to, std::move(body), std::move(annotations)});
  }

  void broadcast(int n, const nlohmann::json& body,
                 const nlohmann::json& annotations = {}) {
    for (ProcessId q = 1; q <= n; ++q) send(q, body, annotations);
  }

  void event(EventKind kind, nlohmann::json detail) {
    events_.push_back({kind, std::move(detail)});
  }

  // Merged into the detail of the deliver event being handled.
  void note_delivery(nlohmann::json note) { note_ = std::move(note); }

 private:
  friend class AsyncRunner;
  struct OutSend {
    ProcessId to;
    nlohmann::json body;
    nlohmann::json annotations;
  };
  std::vector<OutSend> sends_;
  std::vector<std::pair<EventKind, nlohmann::json>> events_;
  nlohmann::json note_;
};

class AsyncProtocol {
 public:
  virtual ~AsyncProtocol() = default;
  virtual void on_start(AsyncContext& ctx) = 0;
  virtual void on_deliver(AsyncContext& ctx, ProcessId from,
                          const nlohmann::json& body) = 0;
  virtual void on_client_value(AsyncContext& ctx, const LatticeValue& v) {
    (void)ctx;
    (void)v;
  }
  // No outstanding proposals or buffered work.
  virtual bool quiescent() const = 0;
  virtual void fill_report(ProcessReport& pr, RunReport& run) const = 0;
};

using AsyncProtocolFactory =
    std::function<std::unique_ptr<AsyncProtocol>(ProcessId, const ExperimentConfig&)>;

constexpr long long kDefaultEventCap = 200000;

/// Deterministic event-driven simulator: a virtual clock, a totally ordered
/// event queue, crash stops, and quiescence detection. Events at the same
/// tick are ordered crash < start < client value < self delivery < remote
/// delivery, then by (sender id, per-sender send counter).
class AsyncRunner {
 public:
  AsyncRunner(const ValidConfig& cfg, const AsyncProtocolFactory& factory,
              long long event_cap = kDefaultEventCap,
              const DelayTable* replay = nullptr)
      : cfg_(cfg.get()), event_cap_(event_cap), replay_(replay) {
    for (ProcessId p = 1; p <= cfg_.n; ++p) {
      protocols_[p] = factory(p, cfg_);
    }
    for (const auto& c : cfg_.crashes) {
      queue_.insert({c.at, Phase::crash, c.victim, 0, {}});
    }
    for (ProcessId p = 1; p <= cfg_.n; ++p) {
      queue_.insert({0, Phase::start, p, 0, {}});
    }
    for (ProcessId p = 1; p <= cfg_.n && !cfg_.client_streams.empty(); ++p) {
      std::uint64_t idx = 0;
      for (const auto& inj : cfg_.client_streams[p - 1]) {
        Queued q{inj.tick, Phase::client, p, idx++, {}};
        q.envelope.payload = nlohmann::json(inj.value);
        queue_.insert(std::move(q));
      }
    }
  }

  void run() {
    while (!queue_.empty()) {
      if (++events_processed_ > event_cap_) {
        non_quiescent_ = true;
        return;
      }
      Queued ev = *queue_.begin();
      queue_.erase(queue_.begin());
      clock_ = std::max(clock_, ev.t);
      switch (ev.phase) {
        case Phase::crash:
          handle_crash(ev);
          break;
        case Phase::start:
          if (!crashed_.count(ev.key)) {
            AsyncContext ctx;
            protocols_[ev.key]->on_start(ctx);
            flush(ev.key, ev.t, ctx);
          }
          break;
        case Phase::client:
          handle_client(ev);
          break;
        case Phase::self_deliver:
        case Phase::remote_deliver:
          handle_deliver(ev);
          break;
      }
    }
    for (ProcessId p = 1; p <= cfg_.n; ++p) {
      if (!crashed_.count(p) && !protocols_[p]->quiescent()) {
        non_quiescent_ = true;
      }
    }
  }

  RunReport report() const {
    RunReport r;
    r.algorithm = cfg_.algorithm;
    r.n = cfg_.n;
    r.f = cfg_.f;
    r.total_messages = total_messages_;
    r.clock_at_quiescence = clock_;
    r.non_quiescent = non_quiescent_;
    for (ProcessId p = 1; p <= cfg_.n; ++p) {
      ProcessReport pr;
      pr.crashed = crashed_.count(p) > 0;
      protocols_.at(p)->fill_report(pr, r);
      r.per_process[p] = std::move(pr);
    }
    return r;
  }

  const Trace& trace() const { return trace_; }

 private:
  enum class Phase { crash = 0, start = 1, client = 2, self_deliver = 3, remote_deliver = 4 };

  struct Queued {
    long long t = 0;
    Phase phase = Phase::start;
    ProcessId key = 0;  // victim, starter, injected process, or sender
    std::uint64_t counter = 0;
    Envelope envelope;

    bool operator<(const Queued& o) const {
      return std::tie(t, phase, key, counter) <
             std::tie(o.t, o.phase, o.key, o.counter);
    }
  };

  void handle_crash(const Queued& ev) {
    if (crashed_.count(ev.key)) return;
    crashed_.insert(ev.key);
    trace_.push_back({ev.t, EventKind::crash, ev.key, nlohmann::json::object()});
  }

  void handle_client(const Queued& ev) {
    LatticeValue v = ev.envelope.payload.get<LatticeValue>();
    nlohmann::json detail{{"client", true}, {"value", v}};
    if (crashed_.count(ev.key)) {
      detail["dropped"] = "crashed";
      trace_.push_back({ev.t, EventKind::deliver, ev.key, std::move(detail)});
      return;
    }
    trace_.push_back({ev.t, EventKind::deliver, ev.key, std::move(detail)});
    AsyncContext ctx;
    protocols_[ev.key]->on_client_value(ctx, v);
    flush(ev.key, ev.t, ctx);
  }

  void handle_deliver(const Queued& ev) {
    const Envelope& env = ev.envelope;
    nlohmann::json detail{{"from", env.from},
                          {"counter", env.counter},
                          {"body", env.payload}};
    if (crashed_.count(env.to)) {
      detail["dropped"] = "crashed";
      trace_.push_back({ev.t, EventKind::deliver, env.to, std::move(detail)});
      return;
    }
    AsyncContext ctx;
    protocols_[env.to]->on_deliver(ctx, env.from, env.payload);
    if (!ctx.note_.is_null()) detail.update(ctx.note_);
    trace_.push_back({ev.t, EventKind::deliver, env.to, std::move(detail)});
    flush(env.to, ev.t, ctx);
  }

  void flush(ProcessId pid, long long now, AsyncContext& ctx) {
    for (auto& [kind, detail] : ctx.events_) {
      trace_.push_back({now, kind, pid, std::move(detail)});
    }
    for (auto& out : ctx.sends_) {
      std::uint64_t counter = ++send_counter_[pid];
      long long delay =
          assign_delay(cfg_.delay_model, pid, out.to, counter, replay_);
      Envelope env{pid, out.to, now, now + delay, counter, std::move(out.body)};
      nlohmann::json detail{{"to", out.to},
                            {"counter", counter},
                            {"deliverAt", env.deliver_time},
                            {"body", env.payload}};
      if (!out.annotations.is_null() && !out.annotations.empty()) {
        detail.update(out.annotations);
      }
      trace_.push_back({now, EventKind::send, pid, std::move(detail)});
      ++total_messages_;
      Queued q{env.deliver_time,
               out.to == pid ? Phase::self_deliver : Phase::remote_deliver, pid,
               counter, std::move(env)};
      queue_.insert(std::move(q));
    }
  }

  const ExperimentConfig& cfg_;
  long long event_cap_;
  const DelayTable* replay_;
  std::map<ProcessId, std::unique_ptr<AsyncProtocol>> protocols_;
  std::set<ProcessId> crashed_;
  std::multiset<Queued> queue_;
  std::map<ProcessId, std::uint64_t> send_counter_;
  Trace trace_;
  long long total_messages_ = 0;
  long long clock_ = 0;
  long long events_processed_ = 0;
  bool non_quiescent_ = false;
};

inline std::pair<RunReport, Trace> run_async(
    const ValidConfig& cfg, const AsyncProtocolFactory& factory,
    long long event_cap = kDefaultEventCap, const DelayTable* replay = nullptr) {
  AsyncRunner runner(cfg, factory, event_cap, replay);
  runner.run();
  return {runner.report(), runner.trace()};
}

}  // namespace lagree
