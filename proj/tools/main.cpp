// Batch CLI for transfer-diagnosis experiments: corpus synthesis, the full
// transfer matrix, lambda sweeps, per-iteration ROC studies and report
// re-emission.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tfdiag/bench.hpp"
#include "tfdiag/signal.hpp"

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;
};

tfdiag::bench::RunConfig load(const GlobalArgs& args) {
  auto config = tfdiag::bench::load_config(args.config_path);
  if (args.seed_set) {
    tfdiag::bench::override_seed(config, args.seed);
  }
  return config;
}

void add_common(CLI::App* cmd, GlobalArgs* args, bool with_jobs) {
  cmd->add_option("--config", args->config_path, "experiment config (JSON)")
      ->required();
  cmd->add_option("--out", args->out_dir, "output directory");
  cmd->add_option("--seed", args->seed, "override the config seed")
      ->each([args](const std::string&) { args->seed_set = true; });
  if (with_jobs) {
    cmd->add_option("--jobs", args->jobs, "parallel transfer tests")
        ->check(CLI::PositiveNumber);
  }
}

void emit(const tfdiag::bench::TransferReport& report, const GlobalArgs& args,
          const std::vector<std::string>& formats) {
  for (const auto& path : tfdiag::bench::emit_report(report, args.out_dir, formats)) {
    std::cout << "wrote " << path.string() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bearing fault transfer-diagnosis toolkit"};
  app.require_subcommand(1);

  GlobalArgs synth_args, run_args, sweep_args, roc_args;

  auto* synth = app.add_subcommand(
      "synth", "generate a synthetic corpus and its manifest");
  std::string synth_format = "raw-f64le";
  add_common(synth, &synth_args, /*with_jobs=*/false);
  synth->add_option("--format", synth_format,
                    "sample file format (csv, raw-f32le, raw-f64le)");

  auto* run = app.add_subcommand("run", "run the transfer-test matrix");
  add_common(run, &run_args, /*with_jobs=*/true);

  auto* sweep = app.add_subcommand("sweep", "lambda sensitivity sweep");
  add_common(sweep, &sweep_args, /*with_jobs=*/true);

  auto* roc = app.add_subcommand("roc", "per-iteration ROC study");
  add_common(roc, &roc_args, /*with_jobs=*/false);

  auto* report_cmd = app.add_subcommand(
      "report", "re-emit tables from a saved report.json");
  std::string report_in;
  std::string report_out = "out";
  std::string report_formats = "csv";
  report_cmd->add_option("--in", report_in, "saved report.json")->required();
  report_cmd->add_option("--out", report_out, "output directory");
  report_cmd->add_option("--formats", report_formats,
                         "comma-separated list: json,csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const auto config = load(synth_args);
      const auto corpus = tfdiag::bench::build_corpus(config);
      const auto manifest = tfdiag::signal::write_corpus(
          corpus, synth_args.out_dir,
          tfdiag::ingest::sample_format_from_string(synth_format));
      std::cout << "wrote " << corpus.recordings.size() << " recordings, manifest "
                << manifest.string() << "\n";
    } else if (run->parsed()) {
      const auto config = load(run_args);
      const auto report = tfdiag::bench::run_transfer_matrix(config, run_args.jobs);
      emit(report, run_args, config.formats);
    } else if (sweep->parsed()) {
      const auto config = load(sweep_args);
      const auto report =
          tfdiag::bench::lambda_sweep(config, config.lambdas, sweep_args.jobs);
      emit(report, sweep_args, config.formats);
    } else if (roc->parsed()) {
      const auto config = load(roc_args);
      if (!config.roc) {
        throw std::invalid_argument("config: 'roc' section required for the roc verb");
      }
      const auto report = tfdiag::bench::roc_study(config, config.roc->iterations);
      emit(report, roc_args, config.formats);
    } else if (report_cmd->parsed()) {
      std::ifstream in(report_in);
      if (!in) {
        throw std::runtime_error("cannot open '" + report_in + "'");
      }
      nlohmann::ordered_json doc;
      in >> doc;
      const auto report = tfdiag::bench::report_from_json(doc);
      std::vector<std::string> formats;
      for (std::size_t pos = 0; pos < report_formats.size();) {
        const auto comma = report_formats.find(',', pos);
        const auto end = comma == std::string::npos ? report_formats.size() : comma;
        formats.push_back(report_formats.substr(pos, end - pos));
        pos = end + 1;
      }
      GlobalArgs args;
      args.out_dir = report_out;
      emit(report, args, formats);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
