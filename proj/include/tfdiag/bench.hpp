#ifndef TFDIAG_BENCH_HPP_
#define TFDIAG_BENCH_HPP_

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tfdiag/adapt.hpp"
#include "tfdiag/classify.hpp"
#include "tfdiag/domain.hpp"
#include "tfdiag/ingest.hpp"
#include "tfdiag/signal.hpp"

namespace tfdiag::bench {

enum class Method { Baseline, NnNa, NnSa, Datf };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

struct WindowParams {
  int len = kDefaultWindowLen;
  int hop = kDefaultHop;
};

struct RocSpec {
  std::string train_id;
  std::string test_id;
  double size_in = 0.0;
  std::vector<int> iterations;
};

// One experiment configuration: corpus source, condition set, fault sizes,
// methods and adaptation parameters. Parsed from a single JSON document;
// unknown keys are rejected by name.
struct RunConfig {
  std::optional<signal::SynthParams> synth;
  std::optional<std::string> manifest_path;
  double manifest_sample_rate_hz = 12000.0;
  std::vector<OperatingCondition> conditions;
  std::vector<double> fault_sizes_in;
  std::vector<Method> methods;
  adapt::AdaptationParams adaptation;
  WindowParams window;
  int samples_per_class = 200;
  std::uint64_t seed = 42;
  std::vector<std::string> formats = {"json", "csv"};
  // optional subset of (train, test) condition-id pairs; empty = full matrix
  std::vector<std::pair<std::string, std::string>> cells;
  std::vector<double> lambdas = {0.05, 0.1, 0.2, 0.5};
  std::optional<RocSpec> roc;
  nlohmann::ordered_json echo;  // normalized config, embedded in reports

  void validate() const;
};

RunConfig parse_config(const nlohmann::ordered_json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// Replaces the config seed (CLI --seed override).
void override_seed(RunConfig& config, std::uint64_t seed);

struct HistoryPoint {
  double marginal_mmd = 0.0;
  double pseudo_accuracy = 0.0;
};

struct CellResult {
  double size_in = 0.0;
  std::string train_id;
  std::string test_id;
  Method method = Method::Baseline;
  double accuracy = 0.0;
  Eigen::MatrixXi confusion;
  double runtime_s = 0.0;  // volatile; excluded from deterministic outputs
  std::vector<HistoryPoint> history;  // datf only, entry 0 = marginal solve
};

struct SweepResult {
  double lambda = 0.0;
  std::vector<CellResult> cells;
};

struct RocEntry {
  int iteration = 0;
  FaultClass cls = FaultClass::NO;
  classify::RocCurve curve;
};

struct ProjectionPoint {
  double size_in = 0.0;
  std::string train_id;
  std::string test_id;
  Method method = Method::Datf;
  std::string domain;  // "train" | "test"
  FaultClass label = FaultClass::NO;
  double x = 0.0;
  double y = 0.0;
};

struct TransferReport {
  nlohmann::ordered_json config;
  std::vector<CellResult> results;
  std::vector<SweepResult> sweeps;
  std::vector<RocEntry> roc;
  std::vector<ProjectionPoint> projections;
};

/// Materializes the configured corpus: synthetic generation or a manifest
/// of user-supplied recordings.
ingest::RawCorpus build_corpus(const RunConfig& config);

/// Trains every requested method on each (fault size, train condition)
/// domain and evaluates on each test condition, including same-condition
/// diagonals. Cells run in parallel up to `jobs`; results are merged in
/// deterministic (size, test, train, method) order.
TransferReport run_transfer_matrix(const RunConfig& config, int jobs = 1);

/// One DATF accuracy grid per lambda, all other parameters held fixed.
TransferReport lambda_sweep(const RunConfig& config,
                            const std::vector<double>& lambdas, int jobs = 1);

/// One-vs-rest ROC per fault class at each recorded adaptation iteration
/// of the configured roc cell.
TransferReport roc_study(const RunConfig& config,
                         const std::vector<int>& iterations_to_record);

nlohmann::ordered_json report_to_json(const TransferReport& report);
TransferReport report_from_json(const nlohmann::ordered_json& doc);

/// Writes report.json and/or the CSV tables (accuracy grid, sweep, ROC
/// points, 2-D projections) plus a volatile timings.json. Identical
/// reports produce byte-identical deterministic files. Returns the paths
/// written.
std::vector<std::filesystem::path> emit_report(
    const TransferReport& report, const std::filesystem::path& out_dir,
    const std::vector<std::string>& formats);

}  // namespace tfdiag::bench

#endif  // TFDIAG_BENCH_HPP_
