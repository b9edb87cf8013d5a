#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lagree/async_engine.hpp"
#include "lagree/model.hpp"
#include "lagree/semilattice.hpp"

namespace lagree {

// ---------------------------------------------------------------------------
// LA_delta: round-trips of propose-to-all / collect n-f ACKs. The acceptor
// role shares acceptVal with the proposer loop and keeps answering props
// after the process has learned.

class DeltaProtocol : public AsyncProtocol {
 public:
  DeltaProtocol(ProcessId pid, LatticeValue input, int n, int f)
      : pid_(pid), n_(n), f_(f), accept_val_(std::move(input)) {}

  void on_start(AsyncContext& ctx) override {
    trip_ = 1;
    proposed_ = accept_val_;
    ctx.broadcast(n_, {{"type", "prop"}, {"v", proposed_}, {"r", trip_}});
  }

  void on_deliver(AsyncContext& ctx, ProcessId from,
                  const nlohmann::json& body) override {
    const std::string type = body.at("type").get<std::string>();
    if (type == "prop") {
      on_prop(ctx, from, body.at("v").get<LatticeValue>(), body.at("r").get<int>());
    } else if (type == "ACK") {
      on_ack(ctx, body);
    }
  }

  bool quiescent() const override { return done_; }

  void fill_report(ProcessReport& pr, RunReport& run) const override {
    if (learned_) pr.decision = *learned_;
    pr.rounds_used = learned_ ? trips_used_ : trip_;
    if (bound_violation_) run.bound_violation = true;
  }

  const LatticeValue& accept_val() const { return accept_val_; }

 protected:
  // Decision quorum; the negative-control mutant weakens this to >=.
  virtual bool learn_quorum(int tally) const { return 2 * tally > n_; }

  // Acceptor side: accept anything at least as big as the accepted value.
  void on_prop(AsyncContext& ctx, ProcessId from, const LatticeValue& v, int r) {
    if (leq(accept_val_, v)) {
      accept_val_ = v;
      ctx.send(from, {{"type", "ACK"}, {"verdict", "accept"}, {"r", r}},
               {{"acceptVal", accept_val_}});
    } else {
      ctx.send(from,
               {{"type", "ACK"}, {"verdict", "reject"}, {"value", accept_val_}, {"r", r}},
               {{"acceptVal", accept_val_}});
    }
  }

  void on_ack(AsyncContext& ctx, const nlohmann::json& body) {
    int r = body.at("r").get<int>();
    if (done_ || r != trip_ || static_cast<int>(acks_.size()) >= n_ - f_) {
      ctx.note_delivery({{"stale", true}});
      return;
    }
    acks_.push_back(body);
    if (static_cast<int>(acks_.size()) < n_ - f_) return;

    // Exactly the first n-f ACKs decide the trip.
    int tally = 0;
    std::vector<LatticeValue> rejected;
    for (const auto& ack : acks_) {
      if (ack.at("verdict").get<std::string>() == "accept") {
        ++tally;
      } else {
        rejected.push_back(ack.at("value").get<LatticeValue>());
      }
    }
    if (learn_quorum(tally)) {
      learned_ = proposed_;
      trips_used_ = trip_;
      done_ = true;
      ctx.event(EventKind::learn,
                {{"value", *learned_}, {"roundTrips", trips_used_}});
      return;
    }
    for (const auto& v : rejected) accept_val_ = join(accept_val_, v);
    if (trip_ == f_ + 1) {
      // Unreachable per the round-trip bound; reported, never asserted here.
      bound_violation_ = true;
      done_ = true;
      return;
    }
    ++trip_;
    proposed_ = accept_val_;
    acks_.clear();
    ctx.broadcast(n_, {{"type", "prop"}, {"v", proposed_}, {"r", trip_}});
  }

  ProcessId pid_;
  int n_;
  int f_;
  LatticeValue accept_val_;
  LatticeValue proposed_;
  std::optional<LatticeValue> learned_;
  std::vector<nlohmann::json> acks_;
  int trip_ = 0;
  int trips_used_ = 0;
  bool done_ = false;
  bool bound_violation_ = false;
};

// ---------------------------------------------------------------------------
// GLA_alpha: sequentially numbered Agree() executions of the delta loop.
// Props for a future sequence wait (deferred) until the sequence catches up;
// props for a closed sequence are answered with a decide ACK carrying the
// learned value.

class GlaProtocol : public AsyncProtocol {
 public:
  GlaProtocol(ProcessId pid, int n, int f) : pid_(pid), n_(n), f_(f) {}

  void on_start(AsyncContext& ctx) override { maybe_agree(ctx); }

  void on_client_value(AsyncContext& ctx, const LatticeValue& v) override {
    buff_val_ = join(buff_val_, v);
    ctx.broadcast(n_, {{"type", "ServerValue"}, {"v", v}});
    maybe_agree(ctx);
  }

  void on_deliver(AsyncContext& ctx, ProcessId from,
                  const nlohmann::json& body) override {
    const std::string type = body.at("type").get<std::string>();
    if (type == "ServerValue") {
      buff_val_ = join(buff_val_, body.at("v").get<LatticeValue>());
      maybe_agree(ctx);
    } else if (type == "prop") {
      on_prop(ctx, from, body);
      maybe_agree(ctx);
    } else if (type == "ACK") {
      on_ack(ctx, body);
    }
  }

  bool quiescent() const override {
    return !active_ && buff_val_.empty() && max_seq_ < seq_ && deferred_.empty();
  }

  void fill_report(ProcessReport& pr, RunReport& run) const override {
    if (!learned_.empty()) {
      pr.decision = learned_.rbegin()->second;
      std::vector<LatticeValue> seqs;
      for (const auto& [s, v] : learned_) seqs.push_back(v);
      run.learned_sequences[pid_] = std::move(seqs);
    }
    pr.rounds_used = max_trips_;
    if (bound_violation_) run.bound_violation = true;
  }

 private:
  void on_prop(AsyncContext& ctx, ProcessId from, const nlohmann::json& body) {
    long long s = body.at("s").get<long long>();
    int r = body.at("r").get<int>();
    if (s < seq_) {
      ctx.send(from,
               {{"type", "ACK"}, {"verdict", "decide"}, {"value", learned_.at(s)},
                {"r", r}, {"s", s}},
               {{"acceptVal", accept_val_}});
      return;
    }
    if (s > seq_) {
      max_seq_ = std::max(max_seq_, s);
      deferred_.push_back({from, body});
      ctx.note_delivery({{"deferred", true}});
      return;
    }
    acceptor_ack(ctx, from, body.at("v").get<LatticeValue>(), r, s);
  }

  void acceptor_ack(AsyncContext& ctx, ProcessId from, const LatticeValue& v,
                    int r, long long s) {
    if (leq(accept_val_, v)) {
      accept_val_ = v;
      ctx.send(from,
               {{"type", "ACK"}, {"verdict", "accept"}, {"r", r}, {"s", s}},
               {{"acceptVal", accept_val_}});
    } else {
      ctx.send(from,
               {{"type", "ACK"}, {"verdict", "reject"}, {"value", accept_val_},
                {"r", r}, {"s", s}},
               {{"acceptVal", accept_val_}});
    }
  }

  void on_ack(AsyncContext& ctx, const nlohmann::json& body) {
    long long s = body.at("s").get<long long>();
    int r = body.at("r").get<int>();
    if (!active_ || s != seq_ || r != trip_ ||
        static_cast<int>(acks_.size()) >= n_ - f_) {
      ctx.note_delivery({{"stale", true}});
      return;
    }
    acks_.push_back(body);
    if (static_cast<int>(acks_.size()) < n_ - f_) return;

    int tally = 0;
    std::vector<LatticeValue> rejected;
    std::vector<LatticeValue> decided;
    for (const auto& ack : acks_) {
      const std::string verdict = ack.at("verdict").get<std::string>();
      if (verdict == "accept") {
        ++tally;
      } else if (verdict == "reject") {
        rejected.push_back(ack.at("value").get<LatticeValue>());
      } else {
        decided.push_back(ack.at("value").get<LatticeValue>());
      }
    }
    if (!decided.empty()) {
      close_sequence(ctx, join_all(decided), false);
      return;
    }
    if (2 * tally > n_) {
      close_sequence(ctx, proposed_, false);
      return;
    }
    for (const auto& v : rejected) accept_val_ = join(accept_val_, v);
    if (trip_ == f_ + 1) {
      // Trip budget exhausted without majority or decide; surfaced as a
      // finding through the report, and the sequence still closes so the
      // process cannot wedge.
      bound_violation_ = true;
      close_sequence(ctx, proposed_, true);
      return;
    }
    ++trip_;
    proposed_ = accept_val_;
    acks_.clear();
    ctx.broadcast(n_, {{"type", "prop"}, {"v", proposed_}, {"r", trip_}, {"s", seq_}});
  }

  void close_sequence(AsyncContext& ctx, LatticeValue val, bool exhausted) {
    learned_[seq_] = val;
    max_trips_ = std::max(max_trips_, trip_);
    nlohmann::json detail{{"s", seq_},
                          {"value", val},
                          {"roundTrips", trip_},
                          {"acceptVal", accept_val_}};
    if (exhausted) detail["exhausted"] = true;
    ctx.event(EventKind::learn, {{"s", seq_}, {"value", val}});
    ctx.event(EventKind::agree_end, std::move(detail));
    ++seq_;
    active_ = false;
    acks_.clear();
    // Matured props first, in arrival order, then the guard again.
    std::vector<std::pair<ProcessId, nlohmann::json>> still_deferred;
    for (auto& [from, body] : deferred_) {
      if (body.at("s").get<long long>() == seq_) {
        acceptor_ack(ctx, from, body.at("v").get<LatticeValue>(),
                     body.at("r").get<int>(), seq_);
      } else {
        still_deferred.push_back({from, std::move(body)});
      }
    }
    deferred_ = std::move(still_deferred);
    maybe_agree(ctx);
  }

  void maybe_agree(AsyncContext& ctx) {
    if (active_ || (buff_val_.empty() && max_seq_ < seq_)) return;
    active_ = true;
    accept_val_ = join(accept_val_, buff_val_);
    buff_val_ = LatticeValue{};
    trip_ = 1;
    proposed_ = accept_val_;
    acks_.clear();
    ctx.event(EventKind::agree_start, {{"s", seq_}, {"proposal", proposed_}});
    ctx.broadcast(n_,
                  {{"type", "prop"}, {"v", proposed_}, {"r", trip_}, {"s", seq_}});
  }

  ProcessId pid_;
  int n_;
  int f_;
  long long seq_ = 0;
  long long max_seq_ = -1;
  LatticeValue buff_val_;
  LatticeValue accept_val_;
  std::map<long long, LatticeValue> learned_;  // LV
  std::vector<std::pair<ProcessId, nlohmann::json>> deferred_;
  std::vector<nlohmann::json> acks_;
  LatticeValue proposed_;
  int trip_ = 0;
  bool active_ = false;
  int max_trips_ = 0;
  bool bound_violation_ = false;
};

inline AsyncProtocolFactory delta_factory() {
  return [](ProcessId pid, const ExperimentConfig& cfg) {
    return std::make_unique<DeltaProtocol>(pid, cfg.inputs[pid - 1], cfg.n,
                                           cfg.f);
  };
}

inline AsyncProtocolFactory gla_factory() {
  return [](ProcessId pid, const ExperimentConfig& cfg) {
    return std::make_unique<GlaProtocol>(pid, cfg.n, cfg.f);
  };
}

inline AsyncProtocolFactory async_factory(Algorithm a) {
  switch (a) {
    case Algorithm::delta: return delta_factory();
    case Algorithm::gla: return gla_factory();
    default: throw std::invalid_argument("not an asynchronous algorithm");
  }
}

}  // namespace lagree
