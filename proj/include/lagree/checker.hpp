#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lagree/model.hpp"
#include "lagree/semilattice.hpp"
#include "lagree/sync_protocols.hpp"

namespace lagree {

struct Verdict {
  std::vector<nlohmann::json> violations;  // each: {property, witness}
  bool passed() const { return violations.empty(); }

  void fail(const std::string& property, nlohmann::json witness) {
    violations.push_back({{"property", property}, {"witness", std::move(witness)}});
  }

  void merge(Verdict other) {
    for (auto& v : other.violations) violations.push_back(std::move(v));
  }
};

inline void to_json(nlohmann::json& j, const Verdict& v) {
  j = nlohmann::json{{"passed", v.passed()}, {"violations", v.violations}};
}

/// Independent O(m^2) pairwise-subset oracle for comparability conclusions.
inline bool comparability_oracle(const std::vector<LatticeValue>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      if (!comparable(values[i], values[j])) return false;
    }
  }
  return true;
}

// Faster path used by the checkers: sorted by height, a pairwise-comparable
// multiset must form a chain of adjacent inclusions.
inline std::optional<std::pair<LatticeValue, LatticeValue>> find_incomparable(
    std::vector<LatticeValue> values) {
  std::sort(values.begin(), values.end(),
            [](const LatticeValue& a, const LatticeValue& b) {
              return a.size() < b.size();
            });
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    if (!leq(values[i], values[i + 1])) return std::make_pair(values[i], values[i + 1]);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Lattice agreement properties over a finished run (sync algorithms and
// LA_delta): Downward-Validity, Upward-Validity, pairwise Comparability.

inline Verdict check_la(const std::vector<LatticeValue>& inputs,
                        const RunReport& report) {
  Verdict v;
  LatticeValue top = join_all(inputs);
  std::vector<LatticeValue> decisions;
  for (const auto& [pid, pr] : report.per_process) {
    if (pr.crashed) continue;
    if (!pr.decision) {
      v.fail("DECISION_MISSING", {{"process", pid}});
      continue;
    }
    const LatticeValue& y = *pr.decision;
    const LatticeValue& x = inputs[pid - 1];
    if (!leq(x, y)) {
      v.fail("DOWNWARD_VALIDITY", {{"process", pid}, {"input", x}, {"decision", y}});
    }
    if (!leq(y, top)) {
      v.fail("UPWARD_VALIDITY", {{"process", pid}, {"decision", y}, {"top", top}});
    }
    decisions.push_back(y);
  }
  if (auto bad = find_incomparable(decisions)) {
    v.fail("COMPARABILITY", {{"a", bad->first}, {"b", bad->second}});
  }
  return v;
}

// ---------------------------------------------------------------------------
// Per-round classifier state reconstructed from the trace.

struct ClassifierRow {
  std::string instance;
  long long global_round = 0;
  int local_round = 0;
  ProcessId pid = 0;
  int k = 0;       // scaled label the message was tagged with
  int hprime = 0;
  LatticeValue v;
};

inline std::vector<ClassifierRow> extract_classifier_rows(const Trace& trace) {
  std::vector<ClassifierRow> rows;
  std::set<std::tuple<std::string, long long, ProcessId>> seen;
  auto add = [&](const std::string& instance, long long t, ProcessId pid,
                 const nlohmann::json& tags, const nlohmann::json& body) {
    if (!tags.contains("k")) return;
    if (!seen.insert({instance, t, pid}).second) return;
    rows.push_back({instance, t, tags.at("r").get<int>(), pid,
                    tags.at("k").get<int>(), tags.at("hprime").get<int>(),
                    body.at("v").get<LatticeValue>()});
  };
  for (const auto& e : trace) {
    if (e.kind == EventKind::send && e.detail.contains("tags")) {
      add(e.detail.at("instance").get<std::string>(), e.t, e.actor,
          e.detail.at("tags"), e.detail.at("body"));
    } else if (e.kind == EventKind::crash && e.detail.contains("lastState")) {
      const auto& st = e.detail.at("lastState");
      add(st.at("instance").get<std::string>(), e.t, e.actor, st.at("tags"),
          st.at("body"));
    }
  }
  return rows;
}

/// Exact integer checks of the classifier step properties and the per-round
/// label-window inequalities, over every classifier instance in a sync trace.
/// Upper bounds require the instance hypothesis H' >= h(join of the
/// instance's entry values); strict lower bounds additionally require every
/// entry value to be nonempty (height-guess iterations and empty failure
/// sets fall outside the hypotheses, so only the unconditional step checks
/// apply there).
inline Verdict check_sync_lemmas(const Trace& trace) {
  Verdict verdict;
  auto rows = extract_classifier_rows(trace);

  std::map<std::pair<ProcessId, long long>, LatticeValue> decided_at;
  std::set<ProcessId> crashed;
  std::map<ProcessId, long long> crash_time;
  for (const auto& e : trace) {
    if (e.kind == EventKind::decide) {
      decided_at[{e.actor, e.t}] = e.detail.at("value").get<LatticeValue>();
    } else if (e.kind == EventKind::crash) {
      crashed.insert(e.actor);
      crash_time[e.actor] = e.t;
    }
  }

  std::set<std::string> instances;
  for (const auto& r : rows) instances.insert(r.instance);

  for (const auto& instance : instances) {
    // (local round -> pid -> row), plus instance entry values.
    std::map<int, std::map<ProcessId, const ClassifierRow*>> by_round;
    int hprime = 1;
    for (const auto& r : rows) {
      if (r.instance != instance) continue;
      by_round[r.local_round][r.pid] = &r;
      hprime = r.hprime;
    }
    std::vector<LatticeValue> entries;
    bool entries_nonempty = true;
    for (const auto& [pid, row] : by_round.begin()->second) {
      entries.push_back(row->v);
      if (row->v.empty()) entries_nonempty = false;
    }
    bool hyp_upper = hprime >= height(join_all(entries));
    bool hyp_lower = hyp_upper && entries_nonempty;

    for (const auto& [r, members] : by_round) {
      int band = kLabelScale * hprime / (1 << r);  // scaled H'/2^r
      // Partition into groups by label.
      std::map<int, std::vector<const ClassifierRow*>> groups;
      for (const auto& [pid, row] : members) groups[row->k].push_back(row);

      // Distinct groups stay distinct: equal labels at round r imply equal
      // labels at round r-1.
      if (r >= 2) {
        const auto& prev = by_round.at(r - 1);
        for (const auto& [k, g] : groups) {
          for (std::size_t i = 1; i < g.size(); ++i) {
            auto a = prev.find(g[0]->pid);
            auto b = prev.find(g[i]->pid);
            if (a != prev.end() && b != prev.end() &&
                a->second->k != b->second->k) {
              verdict.fail("GROUP_LABEL_COLLISION",
                           {{"instance", instance},
                            {"round", r},
                            {"p", g[0]->pid},
                            {"q", g[i]->pid},
                            {"k", k}});
            }
          }
        }
      }

      for (const auto& [k, group] : groups) {
        std::vector<LatticeValue> values;
        for (const auto* row : group) values.push_back(row->v);
        if (hyp_upper) {
          for (const auto* row : group) {
            if (kLabelScale * height(row->v) > k + band) {
              verdict.fail("L5_VALUE_UPPER",
                           {{"instance", instance}, {"round", r},
                            {"process", row->pid}, {"k", k}, {"band", band},
                            {"value", row->v}});
            }
          }
          if (kLabelScale * height(join_all(values)) > k + band) {
            verdict.fail("L5_GROUP_JOIN",
                         {{"instance", instance}, {"round", r}, {"k", k}});
          }
        }
        if (hyp_lower) {
          for (const auto* row : group) {
            if (kLabelScale * height(row->v) <= k - band) {
              verdict.fail("L5_VALUE_LOWER",
                           {{"instance", instance}, {"round", r},
                            {"process", row->pid}, {"k", k}, {"band", band},
                            {"value", row->v}});
            }
          }
        }

        // Classification step: masters raised the label, slaves lowered it.
        std::vector<std::pair<const ClassifierRow*, const ClassifierRow*>> masters;
        std::vector<std::pair<const ClassifierRow*, const ClassifierRow*>> slaves;
        auto next_it = by_round.find(r + 1);
        for (const auto* row : group) {
          if (decided_at.count({row->pid, row->global_round})) continue;
          if (next_it == by_round.end()) continue;
          auto nx = next_it->second.find(row->pid);
          if (nx == next_it->second.end()) continue;
          const ClassifierRow* next = nx->second;
          int step = kLabelScale * hprime / (1 << (r + 1));
          if (next->k == k + step) {
            masters.push_back({row, next});
          } else if (next->k == k - step) {
            slaves.push_back({row, next});
          } else {
            verdict.fail("LABEL_STEP",
                         {{"instance", instance}, {"round", r},
                          {"process", row->pid}, {"k", k}, {"next", next->k}});
          }
        }

        for (const auto& [row, next] : masters) {
          if (kLabelScale * height(next->v) <= k) {
            verdict.fail("L1_P1_LOWER",
                         {{"instance", instance}, {"round", r},
                          {"process", row->pid}, {"value", next->v}, {"k", k}});
          }
          if (hyp_upper && kLabelScale * height(next->v) > k + band) {
            verdict.fail("L1_P1_UPPER",
                         {{"instance", instance}, {"round", r},
                          {"process", row->pid}, {"value", next->v}, {"k", k}});
          }
        }
        for (const auto& [row, next] : slaves) {
          if (kLabelScale * height(next->v) > k) {
            verdict.fail("L1_P2_UPPER",
                         {{"instance", instance}, {"round", r},
                          {"process", row->pid}, {"value", next->v}, {"k", k}});
          }
          if (hyp_lower && kLabelScale * height(next->v) <= k - band) {
            verdict.fail("L1_P2_LOWER",
                         {{"instance", instance}, {"round", r},
                          {"process", row->pid}, {"value", next->v}, {"k", k}});
          }
        }
        if (!masters.empty() && hyp_upper) {
          std::vector<LatticeValue> mv;
          for (const auto& [row, next] : masters) mv.push_back(next->v);
          if (kLabelScale * height(join_all(mv)) > k + band) {
            verdict.fail("L1_P3", {{"instance", instance}, {"round", r}, {"k", k}});
          }
        }
        if (!slaves.empty()) {
          std::vector<LatticeValue> sv;
          for (const auto& [row, next] : slaves) sv.push_back(next->v);
          LatticeValue slave_join = join_all(sv);
          if (kLabelScale * height(slave_join) > k) {
            verdict.fail("L1_P4", {{"instance", instance}, {"round", r}, {"k", k},
                                   {"slaveJoin", slave_join}});
          }
          for (const auto& [row, next] : masters) {
            if (!leq(slave_join, next->v)) {
              verdict.fail("L1_P5",
                           {{"instance", instance}, {"round", r},
                            {"process", row->pid}, {"value", next->v},
                            {"slaveJoin", slave_join}});
            }
          }
        }
      }
    }
  }
  return verdict;
}

// ---------------------------------------------------------------------------
// Generalized lattice agreement properties over a quiescent run.

inline Verdict check_gla(const RunReport& report, const Trace& trace,
                         const ValidConfig& cfg) {
  Verdict v;
  if (report.non_quiescent) {
    v.fail("NON_QUIESCENT", {{"clock", report.clock_at_quiescence}});
    return v;  // inconclusive, never a pass
  }
  if (report.bound_violation) {
    v.fail("GLA_TRIP_EXHAUSTION", nlohmann::json::object());
  }

  // Values that actually entered the system, and those at correct processes.
  std::vector<LatticeValue> injected_all;
  std::vector<LatticeValue> injected_correct;
  for (const auto& e : trace) {
    if (e.kind != EventKind::deliver || !e.detail.value("client", false)) continue;
    if (e.detail.contains("dropped")) continue;
    LatticeValue val = e.detail.at("value").get<LatticeValue>();
    injected_all.push_back(val);
    if (!report.per_process.at(e.actor).crashed) injected_correct.push_back(val);
  }

  // Validity: each learned value is exactly a join of injected values.
  for (const auto& [pid, seqs] : report.learned_sequences) {
    for (std::size_t s = 0; s < seqs.size(); ++s) {
      LatticeValue reachable;
      for (const auto& x : injected_all) {
        if (leq(x, seqs[s])) reachable = join(reachable, x);
      }
      if (!(reachable == seqs[s])) {
        v.fail("VALIDITY", {{"process", pid}, {"s", s}, {"value", seqs[s]}});
      }
    }
  }

  // Stability: learned values are non-decreasing per process.
  for (const auto& [pid, seqs] : report.learned_sequences) {
    for (std::size_t s = 0; s + 1 < seqs.size(); ++s) {
      if (!leq(seqs[s], seqs[s + 1])) {
        v.fail("STABILITY", {{"process", pid}, {"s", s},
                             {"earlier", seqs[s]}, {"later", seqs[s + 1]}});
      }
    }
  }

  // Comparability across every (process, sequence) pair, with the same-s
  // pairs reported as the per-sequence property.
  std::vector<std::tuple<ProcessId, std::size_t, LatticeValue>> all_learned;
  for (const auto& [pid, seqs] : report.learned_sequences) {
    for (std::size_t s = 0; s < seqs.size(); ++s) {
      all_learned.push_back({pid, s, seqs[s]});
    }
  }
  for (std::size_t i = 0; i < all_learned.size(); ++i) {
    for (std::size_t j = i + 1; j < all_learned.size(); ++j) {
      const auto& [p, sp, vp] = all_learned[i];
      const auto& [q, sq, vq] = all_learned[j];
      if (!comparable(vp, vq)) {
        v.fail(sp == sq ? "L13_SAME_SEQUENCE" : "COMPARABILITY",
               {{"p", p}, {"sp", sp}, {"q", q}, {"sq", sq},
                {"a", vp}, {"b", vq}});
      }
    }
  }

  // Liveness at quiescence: everything injected at a correct process is in
  // the final learned value of every correct process.
  for (const auto& x : injected_correct) {
    for (const auto& [pid, pr] : report.per_process) {
      if (pr.crashed) continue;
      auto it = report.learned_sequences.find(pid);
      if (it == report.learned_sequences.end() || it->second.empty()) {
        v.fail("LIVENESS", {{"process", pid}, {"value", x}, {"reason", "nothing learned"}});
        continue;
      }
      if (!leq(x, it->second.back())) {
        v.fail("LIVENESS", {{"process", pid}, {"value", x},
                            {"final", it->second.back()}});
      }
    }
  }

  // m_s and the majority carry-over: acceptVal of each process when it last
  // acted in sequence s (last ACK sent for s, or its own sequence close).
  std::size_t max_seqs = 0;
  for (const auto& [pid, seqs] : report.learned_sequences) {
    max_seqs = std::max(max_seqs, seqs.size());
  }
  std::map<std::pair<ProcessId, long long>, LatticeValue> accept_at_close;
  for (const auto& e : trace) {
    if (e.kind == EventKind::send && e.detail.contains("acceptVal") &&
        e.detail.at("body").contains("s") &&
        e.detail.at("body").at("type") == "ACK") {
      accept_at_close[{e.actor, e.detail.at("body").at("s").get<long long>()}] =
          e.detail.at("acceptVal").get<LatticeValue>();
    } else if (e.kind == EventKind::agree_end) {
      accept_at_close[{e.actor, e.detail.at("s").get<long long>()}] =
          e.detail.at("acceptVal").get<LatticeValue>();
    }
  }
  for (std::size_t s = 0; s < max_seqs; ++s) {
    LatticeValue m_s;
    bool any = false;
    for (const auto& [pid, seqs] : report.learned_sequences) {
      if (s < seqs.size()) {
        m_s = join(m_s, seqs[s]);
        any = true;
      }
    }
    if (!any) continue;
    int carriers = 0;
    for (ProcessId p = 1; p <= cfg->n; ++p) {
      auto it = accept_at_close.find({p, static_cast<long long>(s)});
      if (it != accept_at_close.end() && leq(m_s, it->second)) ++carriers;
    }
    if (2 * carriers <= cfg->n) {
      v.fail("L14_MAJORITY_CARRY", {{"s", s}, {"m_s", m_s}, {"carriers", carriers}});
    }
    // Cross-sequence ordering into s+1.
    for (const auto& [pid, seqs] : report.learned_sequences) {
      if (s + 1 < seqs.size() && !leq(m_s, seqs[s + 1])) {
        v.fail("L15_CROSS_SEQUENCE",
               {{"process", pid}, {"s", s}, {"m_s", m_s}, {"next", seqs[s + 1]}});
      }
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Complexity-bound assertions computed from the config (cardinality grading
// for h(L); h(Psi) recomputed from the exchange-phase trace for LA_gamma).

inline int alpha_round_budget(Height h) {
  return ceil_log2(pow2_ceil(std::max<Height>(h, 1))) + 1;
}

namespace detail {

// Longest chain (in edges) from `from` to the top of lattice `L`, stepping
// through members of L.
inline std::map<LatticeValue, int> ascent_lengths(const std::set<LatticeValue>& lat) {
  std::vector<LatticeValue> order(lat.begin(), lat.end());
  std::sort(order.begin(), order.end(),
            [](const LatticeValue& a, const LatticeValue& b) {
              return a.size() > b.size();
            });
  std::map<LatticeValue, int> up;
  for (std::size_t i = 0; i < order.size(); ++i) {
    int best = 0;
    for (std::size_t j = 0; j < i; ++j) {
      if (order[i].size() < order[j].size() && leq(order[i], order[j])) {
        best = std::max(best, up[order[j]] + 1);
      }
    }
    up[order[i]] = best;
  }
  return up;
}

}  // namespace detail

inline Verdict check_bounds(const RunReport& report, const ValidConfig& cfg,
                            const Trace& trace) {
  Verdict v;
  const ExperimentConfig& c = cfg.get();
  if (report.bound_violation && c.algorithm != Algorithm::gla) {
    v.fail("BOUND_VIOLATION", {{"algorithm", algorithm_name(c.algorithm)}});
  }

  auto max_rounds = [&](bool correct_only) {
    int worst = 0;
    for (const auto& [pid, pr] : report.per_process) {
      if (correct_only && pr.crashed) continue;
      worst = std::max(worst, pr.rounds_used);
    }
    return worst;
  };

  switch (c.algorithm) {
    case Algorithm::alpha: {
      int budget = alpha_round_budget(*c.height_hint);
      if (max_rounds(true) > budget) {
        v.fail("ALPHA_ROUND_BOUND", {{"used", max_rounds(true)}, {"budget", budget}});
      }
      if (report.total_messages >
          static_cast<long long>(c.n) * c.n * budget) {
        v.fail("ALPHA_MESSAGE_BOUND", {{"messages", report.total_messages}});
      }
      break;
    }
    case Algorithm::beta: {
      int budget = 1 + alpha_round_budget(std::max(c.f, 1));
      if (max_rounds(true) > budget) {
        v.fail("BETA_ROUND_BOUND", {{"used", max_rounds(true)}, {"budget", budget}});
      }
      if (report.total_messages >
          static_cast<long long>(c.n) * c.n * budget) {
        v.fail("BETA_MESSAGE_BOUND", {{"messages", report.total_messages}});
      }
      break;
    }
    case Algorithm::gamma: {
      // h(Psi): chain height of the closure of correct processes' values
      // right after the exchange round, read off the first guess iteration.
      std::vector<LatticeValue> entry;
      for (const auto& row : extract_classifier_rows(trace)) {
        if (row.instance == "gamma.it1" && row.local_round == 1 &&
            !report.per_process.at(row.pid).crashed) {
          entry.push_back(row.v);
        }
      }
      if (entry.empty()) {
        v.fail("GAMMA_NO_PHASE_B", nlohmann::json::object());
        break;
      }
      Height h_psi = closure_height_oracle(entry);
      int iterations = std::max(1, ceil_log2(std::max<Height>(h_psi, 1)));
      int phase_b_budget = 0;
      for (int i = 1; i <= iterations; ++i) phase_b_budget += i + 1;
      if (max_rounds(true) - 1 > phase_b_budget) {
        v.fail("GAMMA_ROUND_BOUND", {{"phaseBUsed", max_rounds(true) - 1},
                                     {"budget", phase_b_budget},
                                     {"hPsi", h_psi}});
      }
      break;
    }
    case Algorithm::delta: {
      int bound = std::min<int>(height(join_all(c.inputs)), c.f + 1);
      if (max_rounds(true) > bound) {
        v.fail("DELTA_TRIP_BOUND", {{"used", max_rounds(true)}, {"bound", bound}});
      }
      if (report.total_messages >
          2LL * c.n * c.n * bound) {
        v.fail("DELTA_MESSAGE_BOUND",
               {{"messages", report.total_messages},
                {"bound", 2LL * c.n * c.n * bound}});
      }
      if (report.non_quiescent) {
        v.fail("NON_QUIESCENT", {{"clock", report.clock_at_quiescence}});
      }
      // Height descent per completed round-trip wave, on lockstep runs.
      if (c.delay_model.kind == DelayModel::Kind::unit && !report.non_quiescent) {
        std::set<LatticeValue> lat = join_closure(c.inputs);
        auto up = detail::ascent_lengths(lat);
        std::map<int, std::set<std::pair<ProcessId, LatticeValue>>> waves;
        for (const auto& e : trace) {
          if (e.kind != EventKind::send) continue;
          const auto& body = e.detail.at("body");
          if (!body.contains("type") || body.at("type") != "prop") continue;
          waves[body.at("r").get<int>()].insert(
              {e.actor, body.at("v").get<LatticeValue>()});
        }
        int prev = -1;
        for (const auto& [r, members] : waves) {
          int h = 0;
          for (const auto& [pid, val] : members) h = std::max(h, up.at(val));
          if (prev >= 0 && h >= prev) {
            v.fail("L11_HEIGHT_DESCENT", {{"wave", r}, {"h", h}, {"prev", prev}});
          }
          prev = h;
        }
      }
      break;
    }
    case Algorithm::gla:
      if (report.non_quiescent) {
        v.fail("NON_QUIESCENT", {{"clock", report.clock_at_quiescence}});
      }
      break;
  }
  return v;
}

}  // namespace lagree
