#pragma once

#include <cassert>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lagree/model.hpp"
#include "lagree/semilattice.hpp"
#include "lagree/sync_engine.hpp"

namespace lagree {

// Smallest k >= 0 with 2^k >= x, for x >= 1.
inline int ceil_log2(int x) {
  assert(x >= 1);
  int k = 0;
  while ((1 << k) < x) ++k;
  return k;
}

inline int pow2_ceil(int x) { return 1 << ceil_log2(x); }

// All label arithmetic is scaled by 4 so that every update H'/2^(r+1) stays
// an integer through the final round.
constexpr int kLabelScale = 4;

/// Group label driving the classifier threshold. Two processes are in the
/// same group at a round iff their lhat values are equal.
struct ScaledLabel {
  int lhat = 0;    // label * kLabelScale
  int hprime = 1;  // power of two >= the height parameter

  static ScaledLabel initial(Height h) {
    ScaledLabel l;
    l.hprime = pow2_ceil(std::max<Height>(h, 1));
    l.lhat = 2 * l.hprime;  // label H'/2
    return l;
  }

  // Label step at round r: +- H'/2^(r+1), scaled.
  int step(int round) const {
    int denom = 1 << (round + 1);
    assert((kLabelScale * hprime) % denom == 0);
    return kLabelScale * hprime / denom;
  }
};

struct ClassifierOutcome {
  enum class Class { master, slave, none };
  LatticeValue value;
  Class cls = Class::none;
  bool decided = false;
};

/// One classifier exchange, after the engine delivered the group inbox:
/// decide if everything received is comparable with the own value, otherwise
/// classify against the threshold using the height of the group join.
inline ClassifierOutcome classifier_round(const LatticeValue& v, int lhat,
                                          const std::vector<LatticeValue>& inbox) {
  bool all_comparable = true;
  for (const auto& u : inbox) {
    if (!comparable(u, v)) {
      all_comparable = false;
      break;
    }
  }
  if (inbox.empty() || all_comparable) {
    return {v, ClassifierOutcome::Class::none, true};
  }
  LatticeValue w = join_all(inbox);
  if (kLabelScale * height(w) > lhat) {
    return {w, ClassifierOutcome::Class::master, false};
  }
  return {v, ClassifierOutcome::Class::slave, false};
}

using ClassifierFn = ClassifierOutcome (*)(const LatticeValue&, int,
                                           const std::vector<LatticeValue>&);

/// The label-update loop around the classifier, reusable as the inner block
/// of the two-phase algorithms. Local rounds count from 1.
class AlphaMachine {
 public:
  AlphaMachine(LatticeValue input, Height h,
               ClassifierFn classify = &classifier_round)
      : v_(std::move(input)), label_(ScaledLabel::initial(h)),
        classify_(classify) {
    budget_ = ceil_log2(label_.hprime) + 1;
  }

  int budget() const { return budget_; }
  bool decided() const { return decided_; }
  const LatticeValue& value() const { return v_; }
  int lhat() const { return label_.lhat; }
  int hprime() const { return label_.hprime; }

  nlohmann::json body() const {
    return {{"v", v_}, {"k", label_.lhat}};
  }

  nlohmann::json tags(int local_round) const {
    return {{"k", label_.lhat}, {"r", local_round}, {"hprime", label_.hprime}};
  }

  std::optional<LatticeValue> absorb(int local_round,
                                     const std::vector<SyncDelivery>& inbox) {
    std::vector<LatticeValue> values;
    values.reserve(inbox.size());
    for (const auto& d : inbox) {
      values.push_back(d.body.at("v").get<LatticeValue>());
    }
    ClassifierOutcome out = classify_(v_, label_.lhat, values);
    if (out.decided) {
      decided_ = true;
      v_ = out.value;
      return v_;
    }
    int step = label_.step(local_round);
    if (out.cls == ClassifierOutcome::Class::master) {
      v_ = out.value;
      label_.lhat += step;
    } else {
      label_.lhat -= step;
    }
    return std::nullopt;
  }

 private:
  LatticeValue v_;
  ScaledLabel label_;
  ClassifierFn classify_;
  int budget_ = 0;
  bool decided_ = false;
};

// ---------------------------------------------------------------------------
// LA_alpha: classifier rounds with the height given up front.

class AlphaProtocol : public SyncProtocol {
 public:
  AlphaProtocol(ProcessId pid, LatticeValue input, Height h,
                ClassifierFn classify = &classifier_round)
      : pid_(pid), machine_(std::move(input), h, classify) {}

  int round_budget() const override { return machine_.budget(); }

  std::optional<SyncEmission> emit(int round) override {
    if (machine_.decided()) return std::nullopt;
    return SyncEmission{machine_.body(), "alpha", machine_.tags(round)};
  }

  std::optional<LatticeValue> absorb(
      int round, const std::vector<SyncDelivery>& inbox) override {
    return machine_.absorb(round, inbox);
  }

 private:
  ProcessId pid_;
  AlphaMachine machine_;
};

// ---------------------------------------------------------------------------
// LA_beta: one exchange round recording failures, then the alpha loop on the
// failure sets (height f), then decide on the join of values from processes
// outside the agreed failure set.

class BetaProtocol : public SyncProtocol {
 public:
  BetaProtocol(ProcessId pid, LatticeValue input, int n, int f)
      : pid_(pid), input_(std::move(input)), n_(n), f_(f) {}

  int round_budget() const override {
    return 1 + AlphaMachine({}, std::max(f_, 1)).budget();
  }

  std::optional<SyncEmission> emit(int round) override {
    if (round == 1) {
      return SyncEmission{{{"v", input_}}, "beta.exchange", {{"phase", "A"}}};
    }
    if (!machine_ || machine_->decided()) return std::nullopt;
    return SyncEmission{machine_->body(), "beta.failure_la",
                        machine_->tags(round - 1)};
  }

  std::optional<LatticeValue> absorb(
      int round, const std::vector<SyncDelivery>& inbox) override {
    if (round == 1) {
      for (const auto& d : inbox) {
        values_by_sender_[d.from] = d.body.at("v").get<LatticeValue>();
      }
      std::vector<Element> failed;
      for (ProcessId q = 1; q <= n_; ++q) {
        if (!values_by_sender_.count(q)) failed.push_back(std::to_string(q));
      }
      machine_.emplace(LatticeValue(std::move(failed)), std::max(f_, 1));
      return std::nullopt;
    }
    auto agreed = machine_->absorb(round - 1, inbox);
    if (!agreed) return std::nullopt;
    // C_i: phase-A values from processes outside the agreed failure set.
    std::vector<LatticeValue> kept{input_};
    for (const auto& [sender, value] : values_by_sender_) {
      if (!agreed->contains(std::to_string(sender))) kept.push_back(value);
    }
    return join_all(kept);
  }

 private:
  ProcessId pid_;
  LatticeValue input_;
  int n_;
  int f_;
  std::map<ProcessId, LatticeValue> values_by_sender_;
  std::optional<AlphaMachine> machine_;
};

// ---------------------------------------------------------------------------
// LA_gamma: one exchange round, then alpha iterations with doubling height
// guesses. Iteration i runs for exactly i+1 rounds so all processes agree on
// the schedule without extra communication.

class GammaProtocol : public SyncProtocol {
 public:
  GammaProtocol(ProcessId pid, LatticeValue input, int n)
      : pid_(pid), v_(std::move(input)), n_(n) {}

  static int iteration_cap(int n) { return ceil_log2(std::max(n, 1)) + 1; }

  int round_budget() const override {
    int rounds = 1;
    for (int i = 1; i <= iteration_cap(n_); ++i) rounds += i + 1;
    return rounds;
  }

  std::optional<SyncEmission> emit(int round) override {
    if (round == 1) {
      return SyncEmission{{{"v", v_}}, "gamma.exchange", {{"phase", "A"}}};
    }
    if (decided_) return std::nullopt;
    ensure_iteration(round);
    if (!machine_) return std::nullopt;
    return SyncEmission{machine_->body(), instance_name(),
                        machine_->tags(local_round(round))};
  }

  std::optional<LatticeValue> absorb(
      int round, const std::vector<SyncDelivery>& inbox) override {
    if (round == 1) {
      std::vector<LatticeValue> got{v_};
      for (const auto& d : inbox) {
        got.push_back(d.body.at("v").get<LatticeValue>());
      }
      v_ = join_all(got);
      return std::nullopt;
    }
    auto decision = machine_->absorb(local_round(round), inbox);
    if (decision) {
      decided_ = true;
      v_ = *decision;
      return v_;
    }
    if (local_round(round) == iteration_ + 1) {
      // Guess exhausted: carry the current value into the next iteration.
      v_ = machine_->value();
      machine_.reset();
    }
    return std::nullopt;
  }

 private:
  // Iteration i occupies rounds [start_i, start_i + i], with start_1 = 2.
  void ensure_iteration(int round) {
    if (machine_ && round <= iteration_start_ + iteration_) return;
    int start = 2;
    int i = 1;
    while (round > start + i) {
      start += i + 1;
      ++i;
    }
    iteration_ = i;
    iteration_start_ = start;
    machine_.emplace(v_, 1 << i);  // guess 2^i
  }

  int local_round(int round) const { return round - iteration_start_ + 1; }

  std::string instance_name() const {
    return "gamma.it" + std::to_string(iteration_);
  }

  ProcessId pid_;
  LatticeValue v_;
  int n_;
  bool decided_ = false;
  int iteration_ = 0;
  int iteration_start_ = 0;
  std::optional<AlphaMachine> machine_;
};

// ---------------------------------------------------------------------------
// Factories

inline SyncProtocolFactory alpha_factory() {
  return [](ProcessId pid, const ExperimentConfig& cfg) {
    return std::make_unique<AlphaProtocol>(pid, cfg.inputs[pid - 1],
                                           *cfg.height_hint);
  };
}

inline SyncProtocolFactory beta_factory() {
  return [](ProcessId pid, const ExperimentConfig& cfg) {
    return std::make_unique<BetaProtocol>(pid, cfg.inputs[pid - 1], cfg.n,
                                          cfg.f);
  };
}

inline SyncProtocolFactory gamma_factory() {
  return [](ProcessId pid, const ExperimentConfig& cfg) {
    return std::make_unique<GammaProtocol>(pid, cfg.inputs[pid - 1], cfg.n);
  };
}

inline SyncProtocolFactory sync_factory(Algorithm a) {
  switch (a) {
    case Algorithm::alpha: return alpha_factory();
    case Algorithm::beta: return beta_factory();
    case Algorithm::gamma: return gamma_factory();
    default: throw std::invalid_argument("not a synchronous algorithm");
  }
}

}  // namespace lagree
