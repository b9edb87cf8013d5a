#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lagree/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"lattice agreement simulation harness"};

  std::string config_path;
  std::string campaign_path;
  std::string replay_path;
  std::string out_dir;
  std::string mutant;
  bool write_trace = false;
  std::uint64_t seed = 0;
  int workers = 1;

  auto* config_opt = app.add_option("--config", config_path, "run one experiment from a config file");
  auto* campaign_opt = app.add_option("--campaign", campaign_path, "run a campaign sweep file");
  auto* replay_opt = app.add_option("--replay", replay_path, "re-execute a trace and compare bytes");
  app.add_flag("--trace", write_trace, "write trace.jsonl next to the report");
  app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  app.add_option("--workers", workers, "campaign worker pool size")->check(CLI::PositiveNumber);
  app.add_option("--mutant", mutant, "negative-control protocol (testing hook)");

  config_opt->excludes(campaign_opt)->excludes(replay_opt);
  campaign_opt->excludes(replay_opt);

  CLI11_PARSE(app, argc, argv);

  long long event_cap = lagree::kDefaultEventCap;
  if (const char* cap = std::getenv("LA_EVENT_CAP")) {
    event_cap = std::atoll(cap);
    if (event_cap <= 0) event_cap = lagree::kDefaultEventCap;
  }

  if (!config_path.empty()) {
    lagree::RunOptions opts;
    opts.config_path = config_path;
    opts.write_trace = write_trace;
    opts.out_dir = out_dir.empty() ? "." : out_dir;
    if (*seed_opt) opts.seed_override = seed;
    opts.mutant = mutant;
    opts.event_cap = event_cap;
    return lagree::cmd_run(opts);
  }
  if (!campaign_path.empty()) {
    return lagree::cmd_campaign(campaign_path, out_dir, workers, event_cap);
  }
  if (!replay_path.empty()) {
    return lagree::cmd_replay(replay_path, event_cap);
  }
  std::cerr << "one of --config, --campaign or --replay is required\n";
  return 1;
}
