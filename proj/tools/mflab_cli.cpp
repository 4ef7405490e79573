// Command-line front end; talks to the library only through the C API.
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mflab/mflab.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRun = 1;
constexpr int kExitConfig = 2;

int exit_code_for(mflab_status s) {
  if (s == MFLAB_OK) return kExitOk;
  return s == MFLAB_ERR_CONFIG ? kExitConfig : kExitRun;
}

int report_failure(mflab_status s) {
  std::fprintf(stderr, "mflab: %s error: %s\n", mflab_status_name(s), mflab_last_error());
  return exit_code_for(s);
}

struct Options {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string out;
  bool plots = false;
};

int run_command(mflab_command command, const Options& opt) {
  mflab_config* cfg = nullptr;
  mflab_status s = opt.config.empty() ? mflab_config_default_overfit(&cfg) : mflab_config_load(opt.config.c_str(), &cfg);
  if (s != MFLAB_OK) return report_failure(s);
  if (!opt.seeds.empty()) s = mflab_config_set_seeds(cfg, opt.seeds.data(), opt.seeds.size());
  if (s == MFLAB_OK && !opt.out.empty()) s = mflab_config_set_output_dir(cfg, opt.out.c_str());
  if (s != MFLAB_OK) {
    mflab_config_free(cfg);
    return report_failure(s);
  }
  size_t failed = 0;
  char* summary = nullptr;
  s = mflab_execute(cfg, command, opt.plots ? 1 : 0, &failed, &summary);
  mflab_config_free(cfg);
  if (s != MFLAB_OK) return report_failure(s);
  std::fputs(summary, stdout);
  mflab_string_free(summary);
  return failed > 0 ? kExitRun : kExitOk;
}

int run_report(const std::string& dir) {
  char* text = nullptr;
  const mflab_status s = mflab_report(dir.c_str(), &text);
  if (s != MFLAB_OK) return report_failure(s);
  std::fputs(text, stdout);
  mflab_string_free(text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Manifold-overfitting lab: simulate targets, train single-step and two-step models, evaluate."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mflab_version()));

  Options opt;
  const auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opt.config, "experiment config (JSON)");
    if (config_required) c->required();
    sub->add_option("--seed", opt.seeds, "comma-separated seeds, overriding the config")->delimiter(',');
    sub->add_option("--out", opt.out, "output directory, overriding the config");
    sub->add_flag("--plots", opt.plots, "also write SVG plots");
  };

  struct Entry {
    const char* name;
    const char* help;
    mflab_command command;
  };
  const Entry entries[] = {
      {"simulate", "sample the ground truth and write data CSVs", MFLAB_CMD_SIMULATE},
      {"train", "train every pipeline and write checkpoints", MFLAB_CMD_TRAIN},
      {"evaluate", "load checkpoints, compute metrics, append to the ledger", MFLAB_CMD_EVALUATE},
      {"run", "train and evaluate in one pass", MFLAB_CMD_RUN},
  };
  std::vector<std::pair<CLI::App*, mflab_command>> subs;
  for (const Entry& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    add_common(sub, true);
    subs.emplace_back(sub, e.command);
  }
  CLI::App* demo = app.add_subcommand("overfit-demo", "smoothed-density divergence and weak-convergence tables");
  add_common(demo, false);
  subs.emplace_back(demo, MFLAB_CMD_OVERFIT_DEMO);

  std::string report_dir;
  CLI::App* rep = app.add_subcommand("report", "summarize the metric ledger of a run directory");
  rep->add_option("--out", report_dir, "run directory holding metrics.jsonl")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (rep->parsed()) return run_report(report_dir);
  for (const auto& [sub, command] : subs) {
    if (sub->parsed()) return run_command(command, opt);
  }
  return kExitConfig;
}
