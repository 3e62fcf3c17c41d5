#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace modelyap;

namespace {

void add_run_overrides(CLI::App* app, cli::RunOverrides& o) {
  app->add_option("--cipher", o.cipher, "tea, xtea, aes128, toy-xor, toy-perm, toy-identity");
  app->add_option("--rounds", o.rounds, "cipher rounds (TEA/XTEA cycles)");
  app->add_option("--modes", o.modes, "modes of operation, e.g. ECB CBC");
  app->add_option("--blocks", o.blocks, "blocks per plaintext (b)");
  app->add_option("--ensemble", o.ensemble_size, "ensemble size");
  app->add_option("--steps", o.steps, "time steps T");
  app->add_option("--seed", o.seed, "RNG seed (overrides MODELYAP_SEED and the config)");
  app->add_option("--iv-schedule", o.iv_schedule, "default, chained or refreshed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lyapunov exponents of block cipher modes viewed as cellular automata"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cli::tool_version);

  std::string kat_file;
  auto* kat = app.add_subcommand("kat", "verify known-answer test vectors");
  kat->add_option("file", kat_file, "CSV: cipher_id,rounds,key_hex,plaintext_hex,ciphertext_hex")
      ->required();

  std::string config;
  std::string out_dir;
  std::size_t jobs = default_jobs();
  bool exact_epsilon = false;
  cli::RunOverrides overrides;
  auto* run = app.add_subcommand("run", "run ensembles and write traces and statistics");
  run->add_option("config", config, "JSON experiment config");
  run->add_option("-o,--out", out_dir, "output directory")->required();
  run->add_option("-j,--jobs", jobs, "worker threads");
  run->add_flag("--exact-epsilon", exact_epsilon, "also write exact defect counts per member");
  add_run_overrides(run, overrides);

  std::vector<std::string> plot_inputs;
  std::string plot_out, plot_title;
  auto* plot = app.add_subcommand("plot", "SVG of normalized mean curves");
  plot->add_option("inputs", plot_inputs, "run directories or results.json files")->required();
  plot->add_option("-o,--out", plot_out, "SVG path")->required();
  plot->add_option("--title", plot_title, "figure title");

  std::vector<std::string> prof_inputs;
  std::string prof_out;
  auto* profiles = app.add_subcommand("profiles", "reference profile store");
  profiles->require_subcommand(1);
  auto* build = profiles->add_subcommand("build", "build profiles from run outputs");
  build->add_option("inputs", prof_inputs, "run directories or results.json files")->required();
  build->add_option("-o,--out", prof_out, "profile store path")->required();

  std::string store, trace;
  std::string verdict_json;
  auto* classify = app.add_subcommand("classify", "classify a trace CSV by mode and family");
  classify->add_option("profiles", store, "profile store")->required();
  classify->add_option("trace", trace, "member trace CSV")->required();
  classify->add_option("--json", verdict_json, "write the verdict as JSON ('-' for stdout)");

  std::vector<std::size_t> sweep_blocks = cli::default_sweep_blocks;
  auto* sweep = app.add_subcommand("sweep-blocks", "run a block-count sweep with ln(b) fits");
  sweep->add_option("config", config, "JSON experiment config");
  sweep->add_option("-o,--out", out_dir, "output directory")->required();
  sweep->add_option("-j,--jobs", jobs, "worker threads");
  sweep->add_option("--blocks-list", sweep_blocks, "block counts to sweep");
  add_run_overrides(sweep, overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::usage;
  }

  return cli::guarded(
      [&]() -> int {
        if (*kat) return cli::cmd_kat(kat_file, std::cout, std::cerr);
        if (*run) return cli::cmd_run(config, overrides, out_dir, jobs, exact_epsilon, std::cout);
        if (*plot) return cli::cmd_plot(plot_inputs, plot_out, plot_title, std::cout);
        if (*build) return cli::cmd_profiles_build(prof_inputs, prof_out, std::cout);
        if (*classify) {
          std::optional<fs::path> j;
          if (!verdict_json.empty()) j = verdict_json;
          return cli::cmd_classify(store, trace, j, std::cout);
        }
        if (*sweep) {
          return cli::cmd_sweep_blocks(config, overrides, sweep_blocks, out_dir, jobs, std::cout);
        }
        return cli::usage;
      },
      std::cerr);
}
