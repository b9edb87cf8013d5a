#pragma once

#include <memory>
#include <optional>
#include <string>

#include "lagree/async_protocols.hpp"
#include "lagree/sync_protocols.hpp"

// Deliberately broken protocol variants. They exist so the harness can show
// that the checker actually rejects bad executions; never wire them into a
// production path.

namespace lagree {

/// Classifier with the threshold test inverted: large joins become slaves,
/// small ones masters. Breaks comparability and the round bound.
inline ClassifierOutcome inverted_classifier_round(
    const LatticeValue& v, int lhat, const std::vector<LatticeValue>& inbox) {
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
    return {v, ClassifierOutcome::Class::slave, false};
  }
  return {w, ClassifierOutcome::Class::master, false};
}

/// LA_delta deciding on tally >= n/2: with n even, two disjoint half-quorums
/// can learn incomparable values.
class MutantDeltaProtocol : public DeltaProtocol {
 public:
  using DeltaProtocol::DeltaProtocol;

 protected:
  bool learn_quorum(int tally) const override { return 2 * tally >= n_; }
};

inline std::optional<SyncProtocolFactory> mutant_sync_factory(
    const std::string& name) {
  if (name == "classifier_inverted") {
    return SyncProtocolFactory(
        [](ProcessId pid, const ExperimentConfig& cfg) {
          return std::make_unique<AlphaProtocol>(pid, cfg.inputs[pid - 1],
                                                 *cfg.height_hint,
                                                 &inverted_classifier_round);
        });
  }
  return std::nullopt;
}

inline std::optional<AsyncProtocolFactory> mutant_async_factory(
    const std::string& name) {
  if (name == "delta_tally_geq") {
    return AsyncProtocolFactory(
        [](ProcessId pid, const ExperimentConfig& cfg) {
          return std::make_unique<MutantDeltaProtocol>(pid, cfg.inputs[pid - 1],
                                                       cfg.n, cfg.f);
        });
  }
  return std::nullopt;
}

}  // namespace lagree
