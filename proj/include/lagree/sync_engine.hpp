#pragma once

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

/// One broadcast produced by a protocol for the current round. `instance`
/// names the protocol phase the message belongs to (e.g. "alpha",
/// "gamma.guess.2") and `tags` carry the group key; the engine delivers a
/// message into a process's inbox only when both match the receiver's own
/// emission, so protocol code never sees out-of-group messages.
struct SyncEmission {
  nlohmann::json body;
  std::string instance;
  nlohmann::json tags;
};

struct SyncDelivery {
  ProcessId from = 0;
  nlohmann::json body;
};

/// Lockstep protocol driven by the engine: emit at the top of the round,
/// absorb the tag-filtered inbox at the bottom. Both must be deterministic
/// functions of the visible arguments and prior absorbed inboxes.
class SyncProtocol {
 public:
  virtual ~SyncProtocol() = default;
  // Rounds after which an undecided process is a bound violation.
  virtual int round_budget() const = 0;
  // nullopt once decided (decided processes are silent).
  virtual std::optional<SyncEmission> emit(int round) = 0;
  // Returns the decision value when this round decides.
  virtual std::optional<LatticeValue> absorb(
      int round, const std::vector<SyncDelivery>& inbox) = 0;
};

using SyncProtocolFactory =
    std::function<std::unique_ptr<SyncProtocol>(ProcessId, const ExperimentConfig&)>;

/// Round-based simulator. Owns the per-process protocol instances, applies
/// the crash adversary, and records every send/deliver/crash/decide.
class SyncRunner {
 public:
  SyncRunner(const ValidConfig& cfg, const SyncProtocolFactory& factory)
      : cfg_(cfg.get()) {
    for (ProcessId p = 1; p <= cfg_.n; ++p) {
      protocols_[p] = factory(p, cfg_);
      alive_.insert(p);
      budget_ = std::max(budget_, protocols_[p]->round_budget());
    }
  }

  // One synchronous round: collect emissions from live undecided processes,
  // apply this round's crashes, deliver, then absorb.
  void step_round() {
    ++round_;

    struct Pending {
      ProcessId from;
      SyncEmission emission;
      std::vector<ProcessId> dests;
    };
    std::vector<Pending> outbox;
    for (ProcessId p : alive_) {
      if (decided_.count(p)) continue;
      auto emission = protocols_[p]->emit(round_);
      if (!emission) continue;
      std::vector<ProcessId> dests;
      for (ProcessId q = 1; q <= cfg_.n; ++q) {
        if (cfg_.group_pruning && pruned_[p][emission->instance].count(q)) {
          continue;
        }
        dests.push_back(q);
      }
      outbox.push_back({p, std::move(*emission), std::move(dests)});
    }

    // Crash adversary: a round-r victim reaches only its deliverTo subset
    // and is silent (and deaf) from this round on.
    std::set<ProcessId> new_victims;
    for (const auto& c : cfg_.crashes) {
      if (c.at != round_ || !alive_.count(c.victim)) continue;
      new_victims.insert(c.victim);
      nlohmann::json detail{{"deliverTo", c.deliver_to}};
      for (auto& out : outbox) {
        if (out.from != c.victim) continue;
        out.dests.assign(c.deliver_to.begin(), c.deliver_to.end());
        detail["lastState"] = {{"instance", out.emission.instance},
                               {"tags", out.emission.tags},
                               {"body", out.emission.body}};
      }
      trace_.push_back({round_, EventKind::crash, c.victim, std::move(detail)});
    }
    for (ProcessId v : new_victims) alive_.erase(v);

    std::map<ProcessId, std::vector<const Pending*>> inboxes;
    for (const auto& out : outbox) {
      for (ProcessId d : out.dests) {
        ++total_messages_;
        trace_.push_back({round_, EventKind::send, out.from,
                          {{"to", d},
                           {"instance", out.emission.instance},
                           {"tags", out.emission.tags},
                           {"body", out.emission.body}}});
        if (alive_.count(d)) inboxes[d].push_back(&out);
      }
    }

    for (ProcessId p : alive_) {
      if (decided_.count(p)) continue;
      const Pending* own = nullptr;
      for (const auto& out : outbox) {
        if (out.from == p) own = &out;
      }
      if (!own) continue;
      std::vector<SyncDelivery> inbox;
      for (const Pending* msg : inboxes[p]) {
        bool matched = msg->emission.instance == own->emission.instance &&
                       msg->emission.tags == own->emission.tags;
        trace_.push_back({round_, EventKind::deliver, p,
                          {{"from", msg->from},
                           {"instance", msg->emission.instance},
                           {"tags", msg->emission.tags},
                           {"body", msg->emission.body},
                           {"matched", matched}}});
        if (matched) {
          inbox.push_back({msg->from, msg->emission.body});
        } else if (cfg_.group_pruning &&
                   msg->emission.instance == own->emission.instance) {
          pruned_[p][msg->emission.instance].insert(msg->from);
        }
      }
      auto decision = protocols_[p]->absorb(round_, inbox);
      if (decision) {
        decided_[p] = *decision;
        decide_round_[p] = round_;
        trace_.push_back(
            {round_, EventKind::decide, p, {{"value", *decision}}});
      }
    }
  }

  bool complete() const {
    for (ProcessId p : alive_) {
      if (!decided_.count(p)) return false;
    }
    return true;
  }

  int round() const { return round_; }
  int budget() const { return budget_; }
  const Trace& trace() const { return trace_; }

  RunReport report() const {
    RunReport r;
    r.algorithm = cfg_.algorithm;
    r.n = cfg_.n;
    r.f = cfg_.f;
    r.total_messages = total_messages_;
    r.clock_at_quiescence = round_;
    r.bound_violation = !complete();
    for (ProcessId p = 1; p <= cfg_.n; ++p) {
      ProcessReport pr;
      pr.crashed = !alive_.count(p);
      auto it = decided_.find(p);
      if (it != decided_.end()) {
        pr.decision = it->second;
        pr.rounds_used = decide_round_.at(p);
      } else {
        pr.rounds_used = round_;
      }
      r.per_process[p] = std::move(pr);
    }
    return r;
  }

 private:
  const ExperimentConfig& cfg_;
  std::map<ProcessId, std::unique_ptr<SyncProtocol>> protocols_;
  std::set<ProcessId> alive_;
  std::map<ProcessId, LatticeValue> decided_;
  std::map<ProcessId, int> decide_round_;
  std::map<ProcessId, std::map<std::string, std::set<ProcessId>>> pruned_;
  Trace trace_;
  long long total_messages_ = 0;
  int round_ = 0;
  int budget_ = 0;
};

/// Drives rounds until every live process decided or the protocol's declared
/// budget elapses; an undecided live process past the budget is reported as
/// a bound violation, not an exception, so harness code can count it.
inline std::pair<RunReport, Trace> run_sync(const ValidConfig& cfg,
                                            const SyncProtocolFactory& factory) {
  SyncRunner runner(cfg, factory);
  while (!runner.complete() && runner.round() < runner.budget()) {
    runner.step_round();
  }
  return {runner.report(), runner.trace()};
}

}  // namespace lagree
