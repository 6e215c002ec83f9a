#include "semlink/cli.hpp"

#include <cstdio>
#include <optional>

#include "semlink/errors.hpp"
#include "semlink/experiment.hpp"

namespace semlink {

std::string cli_usage() {
  return
      "usage: semlink <command> [flags]\n"
      "\n"
      "commands:\n"
      "  train    stage-1 end-to-end training (full transmission)\n"
      "  rank     compute and persist the feature importance vector\n"
      "  retrain  stage-2 training under the capacity constraint\n"
      "  eval     evaluate one (snr, method) point on a trained run\n"
      "  sweep    full experiment: every seed, mode, SNR and method\n"
      "\n"
      "flags:\n"
      "  --config <path>      experiment config file (defaults when omitted)\n"
      "  --seed <int>         run seed (sweep: first of num_seeds seeds)\n"
      "  --snr <db>           evaluation SNR in dB (eval only)\n"
      "  --method <name>      fir | random | sequential | full (eval only)\n"
      "  --mode <mtc|stc>     coding mode for train/rank/retrain/eval\n"
      "  --out <dir>          output directory (overrides config)\n"
      "  --help               show this text\n";
}

namespace {

struct CliArgs {
  std::string command;
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<double> snr;
  std::optional<std::string> method;
  std::string mode = "mtc";
  std::optional<std::string> out;
};

int run(const CliArgs& a) {
  ExperimentConfig cfg = a.config ? load_config(*a.config) : default_config();
  if (a.out) cfg.output_dir = *a.out;
  if (a.seed) cfg.base_seed = *a.seed;

  if (a.command == "sweep") {
    const SweepOutcome outcome = run_sweep(cfg, cfg.output_dir);
    for (const std::string& f : outcome.failures) {
      std::fprintf(stderr, "warning: %s\n", f.c_str());
    }
    if (outcome.rows.empty()) {
      std::fprintf(stderr, "error: every sweep cell failed\n");
      return 2;
    }
    emit_csv(outcome.rows, cfg.output_dir + "/results.csv");
    emit_plot_series(outcome.rows, cfg.output_dir);
    std::printf("wrote %zu rows to %s/results.csv\n", outcome.rows.size(),
                cfg.output_dir.c_str());
    return 0;
  }

  const CodingMode mode = parse_mode(a.mode);
  const std::uint64_t seed = cfg.base_seed;
  const std::string dir = run_dir(cfg, mode, seed, cfg.output_dir);

  if (a.command == "train") {
    cell_stage1(cfg, mode, seed, dir);
    std::printf("stage-1 checkpoints written to %s\n", dir.c_str());
    return 0;
  }
  if (a.command == "rank") {
    cell_rank(cfg, mode, seed, dir);
    std::printf("importance vectors written to %s\n", dir.c_str());
    return 0;
  }
  if (a.command == "retrain") {
    cell_stage2(cfg, mode, seed, dir);
    std::printf("stage-2 checkpoints written to %s\n", dir.c_str());
    return 0;
  }
  if (a.command == "eval") {
    if (!a.snr || !a.method) {
      std::fprintf(stderr, "error: eval needs --snr and --method\n");
      return 1;
    }
    const TrainedCell cell = load_cell(cfg, mode, seed, dir);
    const ResultRow row =
        evaluate_cell(cell, cfg, *a.snr, parse_policy(*a.method));
    std::printf("%s", format_csv({row}).c_str());
    return 0;
  }
  std::fprintf(stderr, "error: unknown command '%s'\n%s", a.command.c_str(),
               cli_usage().c_str());
  return 1;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CliArgs a;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& arg = args[i];
    if (arg == "--help" || arg == "-h") {
      std::printf("%s", cli_usage().c_str());
      return 0;
    }
    if (!arg.empty() && arg[0] != '-' && a.command.empty()) {
      a.command = arg;
      continue;
    }
    const auto need_value = [&](const char* name) -> const std::string& {
      if (i + 1 >= args.size()) {
        throw ConfigError(std::string("flag ") + name + " needs a value");
      }
      return args[++i];
    };
    try {
      if (arg == "--config") {
        a.config = need_value("--config");
      } else if (arg == "--seed") {
        a.seed = std::stoull(need_value("--seed"));
      } else if (arg == "--snr") {
        a.snr = std::stod(need_value("--snr"));
      } else if (arg == "--method") {
        a.method = need_value("--method");
      } else if (arg == "--mode") {
        a.mode = need_value("--mode");
      } else if (arg == "--out") {
        a.out = need_value("--out");
      } else {
        std::fprintf(stderr, "error: unknown flag '%s'\n%s", arg.c_str(),
                     cli_usage().c_str());
        return 1;
      }
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: bad value for %s: %s\n", arg.c_str(),
                   e.what());
      return 1;
    }
  }
  if (a.command.empty()) {
    std::fprintf(stderr, "%s", cli_usage().c_str());
    return 1;
  }

  try {
    return run(a);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const ContractError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

}  // namespace semlink
