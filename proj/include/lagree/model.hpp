#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lagree/semilattice.hpp"

namespace lagree {

using ProcessId = int;  // 1..n, fixed per experiment

enum class Algorithm { alpha, beta, gamma, delta, gla };

inline bool is_sync(Algorithm a) {
  return a == Algorithm::alpha || a == Algorithm::beta || a == Algorithm::gamma;
}

inline std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::alpha: return "alpha";
    case Algorithm::beta: return "beta";
    case Algorithm::gamma: return "gamma";
    case Algorithm::delta: return "delta";
    case Algorithm::gla: return "gla";
  }
  return "?";
}

inline std::optional<Algorithm> algorithm_from_name(const std::string& s) {
  if (s == "alpha") return Algorithm::alpha;
  if (s == "beta") return Algorithm::beta;
  if (s == "gamma") return Algorithm::gamma;
  if (s == "delta") return Algorithm::delta;
  if (s == "gla") return Algorithm::gla;
  return std::nullopt;
}

// A crash instruction for the adversary. `at` is a round number for
// synchronous runs (the victim's final, partially delivered round) and a
// clock tick for asynchronous runs (the victim halts at the start of the
// tick). `deliver_to` is meaningful only for synchronous runs.
struct CrashSpec {
  ProcessId victim = 0;
  int at = 0;
  std::vector<ProcessId> deliver_to;
};

struct DelayModel {
  enum class Kind { unit, seeded_random, replay };
  Kind kind = Kind::unit;
  int max_delay = 1;        // seeded_random only
  std::uint64_t seed = 0;   // seeded_random only
  std::string trace_ref;    // replay only: path of the trace to imitate
};

// One client value handed to a process at a virtual clock tick (gla only).
struct ClientInjection {
  int tick = 0;
  LatticeValue value;
};

struct ExperimentConfig {
  int n = 0;
  int f = 0;
  Algorithm algorithm = Algorithm::alpha;
  std::vector<LatticeValue> inputs;                           // all but gla
  std::vector<std::vector<ClientInjection>> client_streams;   // gla only
  std::vector<CrashSpec> crashes;
  DelayModel delay_model;
  std::uint64_t seed = 0;
  std::optional<Height> height_hint;  // H, alpha only
  bool group_pruning = false;         // alpha-family message optimization
};

struct Violation {
  std::string code;
  std::string detail;
};

/// A config that passed validate_config. Engines only accept this type.
class ValidConfig {
 public:
  const ExperimentConfig& get() const { return cfg_; }
  const ExperimentConfig* operator->() const { return &cfg_; }

 private:
  friend struct ValidationResult;
  friend ValidationResult validate_config(const ExperimentConfig&);
  explicit ValidConfig(ExperimentConfig cfg) : cfg_(std::move(cfg)) {}
  ExperimentConfig cfg_;
};

struct ValidationResult {
  std::optional<ValidConfig> config;
  std::vector<Violation> violations;
  bool ok() const { return config.has_value(); }
};

inline ValidationResult validate_config(const ExperimentConfig& in) {
  ExperimentConfig cfg = in;
  std::vector<Violation> v;
  auto bad = [&v](std::string code, std::string detail) {
    v.push_back({std::move(code), std::move(detail)});
  };

  if (cfg.n < 1) bad("BAD_N", "n must be >= 1");
  if (cfg.f < 0) bad("BAD_F", "f must be >= 0");
  if (is_sync(cfg.algorithm)) {
    if (cfg.f >= cfg.n) bad("SYNC_F_TOO_LARGE", "requires f < n");
  } else {
    if (2 * cfg.f >= cfg.n) bad("ASYNC_F_TOO_LARGE", "requires f < n/2");
  }

  if (cfg.algorithm == Algorithm::gla) {
    if (!cfg.inputs.empty()) bad("INPUTS_FOR_GLA", "gla takes clientStreams");
    if (static_cast<int>(cfg.client_streams.size()) != cfg.n) {
      bad("STREAM_COUNT", "need one client stream per process");
    }
    for (auto& stream : cfg.client_streams) {
      for (auto& inj : stream) {
        if (inj.tick < 0) bad("BAD_TICK", "client ticks must be >= 0");
        if (inj.value.empty()) bad("EMPTY_INPUT", "client values are nonempty");
      }
    }
  } else {
    if (!cfg.client_streams.empty()) {
      bad("STREAMS_FOR_SYNC", "clientStreams is gla-only");
    }
    if (static_cast<int>(cfg.inputs.size()) != cfg.n) {
      bad("INPUT_COUNT", "need one input per process");
    }
    for (auto& x : cfg.inputs) {
      if (x.empty()) bad("EMPTY_INPUT", "inputs must be nonempty");
    }
  }

  if (cfg.algorithm == Algorithm::alpha) {
    if (!cfg.height_hint) {
      bad("H_MISSING", "alpha requires the height H");
    } else if (!cfg.inputs.empty() &&
               *cfg.height_hint < height(join_all(cfg.inputs))) {
      bad("H_TOO_SMALL", "H must cover the join of all inputs");
    } else if (*cfg.height_hint < 1) {
      bad("H_TOO_SMALL", "H must be >= 1");
    }
  } else if (cfg.height_hint) {
    bad("H_NOT_APPLICABLE", "H is alpha-only");
  }

  if (static_cast<int>(cfg.crashes.size()) > cfg.f) {
    bad("TOO_MANY_CRASHES", "|crashes| must be <= f");
  }
  std::set<ProcessId> victims;
  for (auto& c : cfg.crashes) {
    if (c.victim < 1 || c.victim > cfg.n) {
      bad("BAD_CRASH_VICTIM", "victim out of range");
      continue;
    }
    if (!victims.insert(c.victim).second) {
      bad("DUPLICATE_CRASH_VICTIM",
          "at most one crash per victim (p" + std::to_string(c.victim) + ")");
    }
    if (is_sync(cfg.algorithm)) {
      if (c.at < 1) bad("BAD_CRASH_TIME", "sync crash rounds start at 1");
      for (ProcessId p : c.deliver_to) {
        if (p < 1 || p > cfg.n) bad("BAD_DELIVER_TO", "deliverTo out of range");
      }
    } else {
      if (c.at < 0) bad("BAD_CRASH_TIME", "async crash ticks start at 0");
      if (!c.deliver_to.empty()) {
        bad("DELIVER_TO_ASYNC", "deliverTo is sync-only");
      }
    }
  }

  if (cfg.delay_model.kind == DelayModel::Kind::seeded_random &&
      cfg.delay_model.max_delay < 1) {
    bad("BAD_DELAY_MODEL", "maxDelay must be >= 1");
  }

  if (!v.empty()) return ValidationResult{std::nullopt, std::move(v)};

  // Normalize: deterministic crash order, time-ordered client streams.
  std::stable_sort(cfg.crashes.begin(), cfg.crashes.end(),
                   [](const CrashSpec& a, const CrashSpec& b) {
                     return a.victim < b.victim;
                   });
  for (auto& c : cfg.crashes) {
    std::sort(c.deliver_to.begin(), c.deliver_to.end());
    c.deliver_to.erase(std::unique(c.deliver_to.begin(), c.deliver_to.end()),
                       c.deliver_to.end());
  }
  for (auto& stream : cfg.client_streams) {
    std::stable_sort(stream.begin(), stream.end(),
                     [](const ClientInjection& a, const ClientInjection& b) {
                       return a.tick < b.tick;
                     });
  }
  return ValidationResult{ValidConfig(std::move(cfg)), {}};
}

// ---------------------------------------------------------------------------
// Messages and trace events

/// A simulated message in flight. `counter` is the per-sender send counter
/// used for delay assignment and the deterministic delivery tiebreak.
struct Envelope {
  ProcessId from = 0;
  ProcessId to = 0;
  long long send_time = 0;
  long long deliver_time = 0;
  std::uint64_t counter = 0;
  nlohmann::json payload;
};

enum class EventKind { send, deliver, crash, decide, learn, agree_start, agree_end };

inline std::string event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::send: return "send";
    case EventKind::deliver: return "deliver";
    case EventKind::crash: return "crash";
    case EventKind::decide: return "decide";
    case EventKind::learn: return "learn";
    case EventKind::agree_start: return "agreeStart";
    case EventKind::agree_end: return "agreeEnd";
  }
  return "?";
}

struct TraceEvent {
  long long t = 0;
  EventKind kind = EventKind::send;
  ProcessId actor = 0;
  nlohmann::json detail;
};

using Trace = std::vector<TraceEvent>;

inline void to_json(nlohmann::json& j, const TraceEvent& e) {
  j = nlohmann::json{{"t", e.t},
                     {"kind", event_kind_name(e.kind)},
                     {"actor", e.actor},
                     {"detail", e.detail}};
}

/// One JSON object per line; nlohmann::json keeps keys sorted, so the bytes
/// are a pure function of the event sequence.
inline std::string encode_trace(const Trace& events) {
  std::string out;
  for (const auto& e : events) {
    out += nlohmann::json(e).dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run reports

struct ProcessReport {
  std::optional<LatticeValue> decision;
  int rounds_used = 0;  // synchronous rounds or asynchronous round-trips
  bool crashed = false;
};

struct RunReport {
  Algorithm algorithm = Algorithm::alpha;
  int n = 0;
  int f = 0;
  std::map<ProcessId, ProcessReport> per_process;
  long long total_messages = 0;
  long long clock_at_quiescence = 0;
  std::map<ProcessId, std::vector<LatticeValue>> learned_sequences;  // gla
  bool bound_violation = false;
  bool non_quiescent = false;
};

inline void to_json(nlohmann::json& j, const RunReport& r) {
  const char* rounds_key =
      is_sync(r.algorithm) ? "roundsUsed" : "roundTripsUsed";
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [pid, pr] : r.per_process) {
    nlohmann::json p{{"crashed", pr.crashed}, {rounds_key, pr.rounds_used}};
    if (pr.decision) p["decision"] = *pr.decision;
    per[std::to_string(pid)] = std::move(p);
  }
  j = nlohmann::json{{"algorithm", algorithm_name(r.algorithm)},
                     {"n", r.n},
                     {"f", r.f},
                     {"perProcess", std::move(per)},
                     {"totalMessages", r.total_messages},
                     {"clockAtQuiescence", r.clock_at_quiescence}};
  if (r.algorithm == Algorithm::gla) {
    nlohmann::json ls = nlohmann::json::object();
    for (const auto& [pid, seq] : r.learned_sequences) {
      ls[std::to_string(pid)] = seq;
    }
    j["learnedSequences"] = std::move(ls);
  }
  if (r.bound_violation) j["boundViolation"] = true;
  if (r.non_quiescent) j["nonQuiescent"] = true;
}

// ---------------------------------------------------------------------------
// Config JSON codec

inline void to_json(nlohmann::json& j, const CrashSpec& c) {
  j = nlohmann::json{{"victim", c.victim}, {"at", c.at}};
  if (!c.deliver_to.empty()) j["deliverTo"] = c.deliver_to;
}

inline void from_json(const nlohmann::json& j, CrashSpec& c) {
  j.at("victim").get_to(c.victim);
  j.at("at").get_to(c.at);
  c.deliver_to.clear();
  if (j.contains("deliverTo")) j.at("deliverTo").get_to(c.deliver_to);
}

inline void to_json(nlohmann::json& j, const ClientInjection& inj) {
  j = nlohmann::json{{"tick", inj.tick}, {"value", inj.value}};
}

inline void from_json(const nlohmann::json& j, ClientInjection& inj) {
  j.at("tick").get_to(inj.tick);
  j.at("value").get_to(inj.value);
}

inline void to_json(nlohmann::json& j, const DelayModel& m) {
  switch (m.kind) {
    case DelayModel::Kind::unit:
      j = nlohmann::json{{"kind", "unit"}};
      break;
    case DelayModel::Kind::seeded_random:
      j = nlohmann::json{
          {"kind", "seededRandom"}, {"maxDelay", m.max_delay}, {"seed", m.seed}};
      break;
    case DelayModel::Kind::replay:
      j = nlohmann::json{{"kind", "replay"}, {"trace", m.trace_ref}};
      break;
  }
}

inline void from_json(const nlohmann::json& j, DelayModel& m) {
  std::string kind = j.value("kind", "unit");
  if (kind == "unit") {
    m.kind = DelayModel::Kind::unit;
  } else if (kind == "seededRandom") {
    m.kind = DelayModel::Kind::seeded_random;
    m.max_delay = j.value("maxDelay", 1);
    m.seed = j.value("seed", std::uint64_t{0});
  } else if (kind == "replay") {
    m.kind = DelayModel::Kind::replay;
    m.trace_ref = j.value("trace", "");
  } else {
    throw std::invalid_argument("unknown delay model kind: " + kind);
  }
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"n", c.n},
                     {"f", c.f},
                     {"algorithm", algorithm_name(c.algorithm)},
                     {"crashes", c.crashes},
                     {"delayModel", c.delay_model},
                     {"seed", c.seed},
                     {"groupPruning", c.group_pruning}};
  if (c.algorithm == Algorithm::gla) {
    j["clientStreams"] = c.client_streams;
  } else {
    j["inputs"] = c.inputs;
  }
  if (c.height_hint) j["H"] = *c.height_hint;
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  j.at("n").get_to(c.n);
  j.at("f").get_to(c.f);
  auto alg = algorithm_from_name(j.at("algorithm").get<std::string>());
  if (!alg) {
    throw std::invalid_argument("unknown algorithm: " +
                                j.at("algorithm").get<std::string>());
  }
  c.algorithm = *alg;
  c.inputs.clear();
  c.client_streams.clear();
  if (j.contains("inputs")) j.at("inputs").get_to(c.inputs);
  if (j.contains("clientStreams")) j.at("clientStreams").get_to(c.client_streams);
  c.crashes.clear();
  if (j.contains("crashes")) j.at("crashes").get_to(c.crashes);
  c.delay_model = DelayModel{};
  if (j.contains("delayModel")) j.at("delayModel").get_to(c.delay_model);
  c.seed = j.value("seed", std::uint64_t{0});
  c.height_hint.reset();
  if (j.contains("H")) c.height_hint = j.at("H").get<Height>();
  c.group_pruning = j.value("groupPruning", false);
}

}  // namespace lagree
