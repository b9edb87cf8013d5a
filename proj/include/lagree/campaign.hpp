#pragma once

#include <atomic>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lagree/async_engine.hpp"
#include "lagree/async_protocols.hpp"
#include "lagree/checker.hpp"
#include "lagree/model.hpp"
#include "lagree/mutants.hpp"
#include "lagree/rng.hpp"
#include "lagree/sync_engine.hpp"
#include "lagree/sync_protocols.hpp"

namespace lagree {

struct RunOutcome {
  RunReport report;
  Trace trace;
  Verdict verdict;
};

inline int round_budget_for(const ExperimentConfig& c) {
  switch (c.algorithm) {
    case Algorithm::alpha:
      return alpha_round_budget(c.height_hint.value_or(1));
    case Algorithm::beta:
      return 1 + alpha_round_budget(std::max(c.f, 1));
    case Algorithm::gamma: {
      int rounds = 1;
      for (int i = 1; i <= GammaProtocol::iteration_cap(c.n); ++i) rounds += i + 1;
      return rounds;
    }
    default:
      return 2 * (c.f + 1);  // async, in clock ticks per unit-delay trip
  }
}

/// Runs one validated experiment and applies every checker that is
/// meaningful for its algorithm. `mutant` swaps in a negative-control
/// protocol (testing hook).
inline RunOutcome execute_and_check(const ValidConfig& cfg,
                                    long long event_cap = kDefaultEventCap,
                                    const std::string& mutant = "",
                                    const DelayTable* replay = nullptr) {
  const ExperimentConfig& c = cfg.get();
  RunOutcome out;
  if (is_sync(c.algorithm)) {
    SyncProtocolFactory factory = sync_factory(c.algorithm);
    if (!mutant.empty()) {
      auto m = mutant_sync_factory(mutant);
      if (!m) throw std::invalid_argument("unknown mutant: " + mutant);
      factory = *m;
    }
    auto [report, trace] = run_sync(cfg, factory);
    out.report = std::move(report);
    out.trace = std::move(trace);
    out.verdict.merge(check_la(c.inputs, out.report));
    out.verdict.merge(check_bounds(out.report, cfg, out.trace));
    out.verdict.merge(check_sync_lemmas(out.trace));
  } else {
    AsyncProtocolFactory factory = async_factory(c.algorithm);
    if (!mutant.empty()) {
      auto m = mutant_async_factory(mutant);
      if (!m) throw std::invalid_argument("unknown mutant: " + mutant);
      factory = *m;
    }
    auto [report, trace] = run_async(cfg, factory, event_cap, replay);
    out.report = std::move(report);
    out.trace = std::move(trace);
    if (c.algorithm == Algorithm::delta) {
      out.verdict.merge(check_la(c.inputs, out.report));
    } else {
      out.verdict.merge(check_gla(out.report, out.trace, cfg));
    }
    out.verdict.merge(check_bounds(out.report, cfg, out.trace));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Input corpora and crash schedules

inline std::vector<LatticeValue> generate_inputs(const std::string& generator,
                                                 int n, SplitMix& rng,
                                                 int universe, int density_pct) {
  auto elem = [](int i) { return "e" + std::to_string(i); };
  std::vector<LatticeValue> inputs;
  if (generator == "singletons") {
    for (int i = 1; i <= n; ++i) inputs.push_back({elem(i)});
  } else if (generator == "chain") {
    std::vector<Element> prefix;
    for (int i = 1; i <= n; ++i) {
      prefix.push_back(elem(i));
      inputs.push_back(LatticeValue(prefix));
    }
  } else if (generator == "randomSets") {
    int u = universe > 0 ? universe : n;
    for (int i = 1; i <= n; ++i) {
      std::vector<Element> elems;
      for (int k = 1; k <= u; ++k) {
        if (rng.chance_pct(density_pct)) elems.push_back(elem(k));
      }
      if (elems.empty()) elems.push_back(elem(1 + static_cast<int>(rng.below(u))));
      inputs.push_back(LatticeValue(std::move(elems)));
    }
  } else {
    throw std::invalid_argument("unknown input generator: " + generator);
  }
  return inputs;
}

inline std::vector<CrashSpec> generate_crashes(const std::string& strategy,
                                               const ExperimentConfig& cfg,
                                               SplitMix& rng) {
  if (strategy == "none" || cfg.f == 0) return {};
  bool sync = is_sync(cfg.algorithm);
  int horizon = sync ? round_budget_for(cfg) : 2 * (cfg.f + 2);
  int count;
  if (strategy == "random") {
    count = static_cast<int>(rng.below(cfg.f + 1));
  } else if (strategy == "targeted") {
    count = cfg.f;
  } else {
    throw std::invalid_argument("unknown crash strategy: " + strategy);
  }
  std::set<ProcessId> victims;
  while (static_cast<int>(victims.size()) < count) {
    victims.insert(1 + static_cast<int>(rng.below(cfg.n)));
  }
  std::vector<CrashSpec> crashes;
  for (ProcessId v : victims) {
    CrashSpec c;
    c.victim = v;
    if (sync) {
      c.at = 1 + static_cast<int>(rng.below(horizon));
      // Partial delivery subsets are what exercise the master/slave edge
      // cases; targeted keeps them sparse.
      int pct = strategy == "targeted" ? 25 : 50;
      for (ProcessId q = 1; q <= cfg.n; ++q) {
        if (q != v && rng.chance_pct(pct)) c.deliver_to.push_back(q);
      }
    } else {
      c.at = static_cast<int>(rng.below(horizon));
    }
    crashes.push_back(std::move(c));
  }
  return crashes;
}

// ---------------------------------------------------------------------------
// Campaigns: a cartesian sweep over seeds, sizes, failure budgets, input
// generators and crash strategies.

struct CampaignSpec {
  Algorithm algorithm = Algorithm::alpha;
  DelayModel delay_model;
  bool group_pruning = false;
  std::vector<std::uint64_t> seeds;
  std::vector<int> n_values;
  std::vector<nlohmann::json> f_values;  // integers or "max_sync"/"max_async"
  std::vector<std::string> input_generators{"singletons"};
  std::vector<std::string> crash_strategies{"none"};
  int universe = 0;
  int density_pct = 50;
  int client_values_min = 10;  // gla
  int client_values_max = 50;  // gla
  std::string output_dir;
  std::string mutant;
};

inline void from_json(const nlohmann::json& j, CampaignSpec& s) {
  const auto& base = j.at("baseConfig");
  auto alg = algorithm_from_name(base.at("algorithm").get<std::string>());
  if (!alg) throw std::invalid_argument("unknown algorithm in baseConfig");
  s.algorithm = *alg;
  if (base.contains("delayModel")) base.at("delayModel").get_to(s.delay_model);
  s.group_pruning = base.value("groupPruning", false);

  const auto& sw = j.at("sweeps");
  s.seeds.clear();
  if (sw.at("seeds").is_array()) {
    sw.at("seeds").get_to(s.seeds);
  } else {
    std::uint64_t start = sw.at("seeds").value("start", std::uint64_t{0});
    std::uint64_t count = sw.at("seeds").at("count").get<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) s.seeds.push_back(start + i);
  }
  sw.at("nValues").get_to(s.n_values);
  s.f_values.assign(sw.at("fValues").begin(), sw.at("fValues").end());
  if (sw.contains("inputGenerators")) sw.at("inputGenerators").get_to(s.input_generators);
  if (sw.contains("crashStrategies")) sw.at("crashStrategies").get_to(s.crash_strategies);
  s.universe = sw.value("universe", 0);
  s.density_pct = sw.value("densityPct", 50);
  if (sw.contains("clientValues")) {
    s.client_values_min = sw.at("clientValues").value("min", 10);
    s.client_values_max = sw.at("clientValues").value("max", 50);
  }
  s.output_dir = j.value("outputDir", "");
  s.mutant = j.value("mutant", "");
}

inline std::optional<int> resolve_f(const nlohmann::json& f_spec, int n,
                                    Algorithm alg) {
  int f;
  if (f_spec.is_number_integer()) {
    f = f_spec.get<int>();
  } else {
    std::string name = f_spec.get<std::string>();
    if (name == "max_sync") {
      f = n - 1;
    } else if (name == "max_async") {
      f = (n - 1) / 2;
    } else {
      throw std::invalid_argument("unknown fValues entry: " + name);
    }
  }
  if (f < 0) return std::nullopt;
  if (is_sync(alg) && f >= n) return std::nullopt;
  if (!is_sync(alg) && 2 * f >= n) return std::nullopt;
  return f;
}

struct CampaignPoint {
  ExperimentConfig config;
  std::string generator;
  std::string crash_strategy;
};

/// Deterministic enumeration of the sweep's valid points; invalid (n, f)
/// combinations are skipped and counted.
inline std::pair<std::vector<CampaignPoint>, int> expand_points(
    const CampaignSpec& s) {
  std::vector<CampaignPoint> points;
  int skipped = 0;
  for (const auto& gen : s.input_generators) {
    for (const auto& strat : s.crash_strategies) {
      for (int n : s.n_values) {
        for (const auto& f_spec : s.f_values) {
          auto f = resolve_f(f_spec, n, s.algorithm);
          if (!f) {
            skipped += static_cast<int>(s.seeds.size());
            continue;
          }
          for (std::uint64_t seed : s.seeds) {
            ExperimentConfig cfg;
            cfg.n = n;
            cfg.f = *f;
            cfg.algorithm = s.algorithm;
            cfg.delay_model = s.delay_model;
            if (cfg.delay_model.kind == DelayModel::Kind::seeded_random) {
              cfg.delay_model.seed = mix64(seed ^ 0x5eed);
            }
            cfg.seed = seed;
            cfg.group_pruning = s.group_pruning;
            SplitMix rng(mix64(seed) ^ mix64(static_cast<std::uint64_t>(n) * 131 + *f) ^
                         fnv1a64(gen + "/" + strat));
            if (s.algorithm == Algorithm::gla) {
              cfg.client_streams.assign(n, {});
              int span = s.client_values_max - s.client_values_min + 1;
              int count = s.client_values_min +
                          static_cast<int>(rng.below(std::max(span, 1)));
              int tick_horizon = 4 * (cfg.f + 2);
              for (int k = 1; k <= count; ++k) {
                int pid = 1 + static_cast<int>(rng.below(n));
                int tick = static_cast<int>(rng.below(tick_horizon));
                cfg.client_streams[pid - 1].push_back(
                    {tick, LatticeValue{"v" + std::to_string(k)}});
              }
            } else {
              cfg.inputs = generate_inputs(gen, n, rng, s.universe, s.density_pct);
              if (s.algorithm == Algorithm::alpha) {
                cfg.height_hint = height(join_all(cfg.inputs));
              }
            }
            cfg.crashes = generate_crashes(strat, cfg, rng);
            points.push_back({std::move(cfg), gen, strat});
          }
        }
      }
    }
  }
  return {points, skipped};
}

struct CampaignRow {
  std::string digest;
  Algorithm algorithm;
  int n = 0;
  int f = 0;
  std::uint64_t seed = 0;
  std::string generator;
  std::string crash_strategy;
  bool passed = false;
  std::vector<std::string> violations;
  int rounds_or_trips = 0;
  long long messages = 0;
  long long clock = 0;
  bool non_quiescent = false;
};

struct CampaignResult {
  std::vector<CampaignRow> rows;  // sorted by digest
  int skipped = 0;

  bool all_passed() const {
    for (const auto& r : rows) {
      if (!r.passed) return false;
    }
    return true;
  }

  std::string to_csv() const {
    std::string out =
        "digest,algorithm,n,f,seed,generator,crashStrategy,passed,"
        "roundsOrTrips,totalMessages,clock,violations\n";
    for (const auto& r : rows) {
      std::string codes;
      for (const auto& c : r.violations) {
        if (!codes.empty()) codes += '|';
        codes += c;
      }
      out += r.digest + ',' + algorithm_name(r.algorithm) + ',' +
             std::to_string(r.n) + ',' + std::to_string(r.f) + ',' +
             std::to_string(r.seed) + ',' + r.generator + ',' +
             r.crash_strategy + ',' + (r.passed ? "true" : "false") + ',' +
             std::to_string(r.rounds_or_trips) + ',' +
             std::to_string(r.messages) + ',' + std::to_string(r.clock) + ',' +
             codes + '\n';
    }
    return out;
  }

  nlohmann::json summary() const {
    int failed = 0;
    int max_rounds = 0;
    long long max_messages = 0;
    std::vector<std::string> failing;
    for (const auto& r : rows) {
      if (!r.passed) {
        ++failed;
        failing.push_back(r.digest);
      }
      max_rounds = std::max(max_rounds, r.rounds_or_trips);
      max_messages = std::max(max_messages, r.messages);
    }
    return {{"runs", rows.size()},
            {"passed", rows.size() - failed},
            {"failed", failed},
            {"skippedPoints", skipped},
            {"failingDigests", failing},
            {"maxRoundsOrTrips", max_rounds},
            {"maxMessages", max_messages}};
  }
};

inline std::string config_digest(const ExperimentConfig& cfg) {
  return fnv1a_hex(nlohmann::json(cfg).dump());
}

/// Runs every point of the sweep (optionally on a worker pool; runs are
/// independent) and aggregates order-independently, sorted by run digest.
inline CampaignResult run_campaign(const CampaignSpec& spec, int workers = 1,
                                   long long event_cap = kDefaultEventCap) {
  auto [points, skipped] = expand_points(spec);
  std::vector<CampaignRow> rows(points.size());

  auto run_point = [&](std::size_t i) {
    const CampaignPoint& pt = points[i];
    CampaignRow row;
    row.digest = config_digest(pt.config);
    row.algorithm = pt.config.algorithm;
    row.n = pt.config.n;
    row.f = pt.config.f;
    row.seed = pt.config.seed;
    row.generator = pt.generator;
    row.crash_strategy = pt.crash_strategy;
    auto validated = validate_config(pt.config);
    if (!validated.ok()) {
      row.passed = false;
      for (const auto& viol : validated.violations) row.violations.push_back(viol.code);
      rows[i] = std::move(row);
      return;
    }
    RunOutcome out = execute_and_check(*validated.config, event_cap, spec.mutant);
    row.passed = out.verdict.passed();
    for (const auto& viol : out.verdict.violations) {
      row.violations.push_back(viol.at("property").get<std::string>());
    }
    int worst = 0;
    for (const auto& [pid, pr] : out.report.per_process) {
      if (!pr.crashed) worst = std::max(worst, pr.rounds_used);
    }
    row.rounds_or_trips = worst;
    row.messages = out.report.total_messages;
    row.clock = out.report.clock_at_quiescence;
    row.non_quiescent = out.report.non_quiescent;
    rows[i] = std::move(row);
  };

  if (workers <= 1) {
    for (std::size_t i = 0; i < points.size(); ++i) run_point(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < points.size();
             i = next.fetch_add(1)) {
          run_point(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  std::sort(rows.begin(), rows.end(),
            [](const CampaignRow& a, const CampaignRow& b) {
              return a.digest < b.digest;
            });
  return {std::move(rows), skipped};
}

}  // namespace lagree
