#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lagree/campaign.hpp"

namespace lagree {

inline std::optional<std::string> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool spill(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << content;
  return out.good();
}

// Trace files carry a header line with the normalized config so a run can be
// reproduced from the file alone.
inline std::string trace_file_bytes(const ExperimentConfig& cfg,
                                    const Trace& trace,
                                    const std::string& mutant) {
  nlohmann::json header{{"type", "header"}, {"version", 1}, {"config", cfg}};
  if (!mutant.empty()) header["mutant"] = mutant;
  return header.dump() + "\n" + encode_trace(trace);
}

struct RunOptions {
  std::string config_path;
  bool write_trace = false;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  std::string mutant;
  long long event_cap = kDefaultEventCap;
};

inline DelayTable delay_table_from_lines(const std::vector<std::string>& lines) {
  DelayTable table;
  for (const auto& line : lines) {
    nlohmann::json e = nlohmann::json::parse(line);
    if (e.at("kind") != "send" || !e.at("detail").contains("deliverAt")) continue;
    ProcessId from = e.at("actor").get<ProcessId>();
    std::uint64_t counter = e.at("detail").at("counter").get<std::uint64_t>();
    table[{from, counter}] =
        e.at("detail").at("deliverAt").get<long long>() - e.at("t").get<long long>();
  }
  return table;
}

/// Executes one experiment from a config file; writes report.json,
/// verdict.json and (with --trace) trace.jsonl. Exit 0 iff all verdicts
/// pass, 2 on a verdict failure, 1 on config or I/O errors.
inline int cmd_run(const RunOptions& opts) {
  auto text = slurp(opts.config_path);
  if (!text) {
    std::cerr << "error: cannot read " << opts.config_path << "\n";
    return 1;
  }
  ExperimentConfig cfg;
  try {
    cfg = nlohmann::json::parse(*text).get<ExperimentConfig>();
  } catch (const std::exception& e) {
    std::cerr << "error: bad config: " << e.what() << "\n";
    return 1;
  }
  if (opts.seed_override) {
    cfg.seed = *opts.seed_override;
    if (cfg.delay_model.kind == DelayModel::Kind::seeded_random) {
      cfg.delay_model.seed = mix64(cfg.seed ^ 0x5eed);
    }
  }
  auto validated = validate_config(cfg);
  if (!validated.ok()) {
    for (const auto& v : validated.violations) {
      std::cerr << v.code << ": " << v.detail << "\n";
    }
    return 1;
  }

  DelayTable replay_table;
  const DelayTable* replay = nullptr;
  if (cfg.delay_model.kind == DelayModel::Kind::replay) {
    auto trace_text = slurp(cfg.delay_model.trace_ref);
    if (!trace_text) {
      std::cerr << "error: cannot read replay trace " << cfg.delay_model.trace_ref
                << "\n";
      return 1;
    }
    std::vector<std::string> lines;
    std::istringstream ss(*trace_text);
    for (std::string line; std::getline(ss, line);) lines.push_back(line);
    try {
      replay_table = delay_table_from_lines(lines);
    } catch (const std::exception& e) {
      std::cerr << "error: bad replay trace: " << e.what() << "\n";
      return 1;
    }
    replay = &replay_table;
  }

  RunOutcome out;
  try {
    out = execute_and_check(*validated.config, opts.event_cap, opts.mutant, replay);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  std::filesystem::create_directories(opts.out_dir);
  spill(opts.out_dir + "/report.json", nlohmann::json(out.report).dump(2) + "\n");
  spill(opts.out_dir + "/verdict.json", nlohmann::json(out.verdict).dump(2) + "\n");
  if (opts.write_trace) {
    spill(opts.out_dir + "/trace.jsonl",
          trace_file_bytes(validated.config->get(), out.trace, opts.mutant));
  }

  for (const auto& v : out.verdict.violations) {
    std::cout << "violation " << v.at("property").get<std::string>() << " "
              << v.at("witness").dump() << "\n";
  }
  std::cout << (out.verdict.passed() ? "PASS" : "FAIL") << " "
            << algorithm_name(cfg.algorithm) << " n=" << cfg.n << " f=" << cfg.f
            << " messages=" << out.report.total_messages
            << " clock=" << out.report.clock_at_quiescence << "\n";
  return out.verdict.passed() ? 0 : 2;
}

/// Runs a campaign file and writes summary.csv / summary.json; exit 0 iff
/// every run passes.
inline int cmd_campaign(const std::string& path, const std::string& out_dir,
                        int workers, long long event_cap) {
  auto text = slurp(path);
  if (!text) {
    std::cerr << "error: cannot read " << path << "\n";
    return 1;
  }
  CampaignSpec spec;
  try {
    spec = nlohmann::json::parse(*text).get<CampaignSpec>();
  } catch (const std::exception& e) {
    std::cerr << "error: bad campaign: " << e.what() << "\n";
    return 1;
  }
  std::string dir = !out_dir.empty() ? out_dir
                    : !spec.output_dir.empty() ? spec.output_dir
                                               : ".";
  CampaignResult result;
  try {
    result = run_campaign(spec, workers, event_cap);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::filesystem::create_directories(dir);
  spill(dir + "/summary.csv", result.to_csv());
  spill(dir + "/summary.json", result.summary().dump(2) + "\n");
  std::cout << result.summary().dump(2) << "\n";
  return result.all_passed() ? 0 : 2;
}

/// Re-executes a recorded run under the replay delay model and compares the
/// regenerated trace byte-for-byte. Exit 0 on match, 3 with the first
/// divergent line on mismatch, 1 on parse errors.
inline int cmd_replay(const std::string& path, long long event_cap) {
  auto text = slurp(path);
  if (!text) {
    std::cerr << "error: cannot read " << path << "\n";
    return 1;
  }
  std::vector<std::string> lines;
  std::istringstream ss(*text);
  for (std::string line; std::getline(ss, line);) lines.push_back(line);
  if (lines.empty()) {
    std::cerr << "error: empty trace\n";
    return 1;
  }

  ExperimentConfig cfg;
  std::string mutant;
  try {
    nlohmann::json header = nlohmann::json::parse(lines[0]);
    if (header.value("type", "") != "header") {
      std::cerr << "error: missing trace header\n";
      return 1;
    }
    cfg = header.at("config").get<ExperimentConfig>();
    mutant = header.value("mutant", "");
    // Every event line must parse; truncation is a parse error, not a diff.
    for (std::size_t i = 1; i < lines.size(); ++i) {
      nlohmann::json::parse(lines[i]);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: bad trace: " << e.what() << "\n";
    return 1;
  }

  auto validated = validate_config(cfg);
  if (!validated.ok()) {
    std::cerr << "error: trace header config invalid\n";
    return 1;
  }

  DelayTable table = delay_table_from_lines(
      std::vector<std::string>(lines.begin() + 1, lines.end()));

  RunOutcome out;
  try {
    if (is_sync(cfg.algorithm)) {
      out = execute_and_check(*validated.config, event_cap, mutant);
    } else {
      ExperimentConfig replay_cfg = cfg;
      replay_cfg.delay_model.kind = DelayModel::Kind::replay;
      replay_cfg.delay_model.trace_ref = path;
      auto revalidated = validate_config(replay_cfg);
      out = execute_and_check(*revalidated.config, event_cap, mutant, &table);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  std::string regenerated = trace_file_bytes(validated.config->get(), out.trace, mutant);
  std::vector<std::string> new_lines;
  std::istringstream rs(regenerated);
  for (std::string line; std::getline(rs, line);) new_lines.push_back(line);

  std::size_t limit = std::min(lines.size(), new_lines.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (lines[i] != new_lines[i]) {
      std::cerr << "replay divergence at line " << (i + 1) << "\n";
      return 3;
    }
  }
  if (lines.size() != new_lines.size()) {
    std::cerr << "replay divergence at line " << (limit + 1) << "\n";
    return 3;
  }
  std::cout << "replay match (" << lines.size() << " lines)\n";
  return 0;
}

}  // namespace lagree
