#include "tfdiag/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace tfdiag::bench {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Baseline: return "baseline";
    case Method::NnNa: return "nn_na";
    case Method::NnSa: return "nn_sa";
    case Method::Datf: return "datf";
  }
  throw std::invalid_argument("unknown Method value");
}

Method method_from_string(std::string_view s) {
  if (s == "baseline") return Method::Baseline;
  if (s == "nn_na") return Method::NnNa;
  if (s == "nn_sa") return Method::NnSa;
  if (s == "datf") return Method::Datf;
  throw std::invalid_argument("unknown method '" + std::string(s) +
                              "', expected baseline, nn_na, nn_sa or datf");
}

namespace {

using nlohmann::ordered_json;

void check_keys(const ordered_json& obj, const std::set<std::string>& allowed,
                const std::string& context) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      throw std::invalid_argument("config: invalid key '" + key + "' in " +
                                  context);
    }
  }
}

std::string fmt_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& body) {
  if (count == 0) {
    return;
  }
  if (jobs <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      body(i);
    }
    return;
  }
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  std::vector<std::thread> workers;
  workers.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) {
          return;
        }
        try {
          body(i);
        } catch (...) {
          std::scoped_lock lock(err_mu);
          if (!first_error) {
            first_error = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& w : workers) {
    w.join();
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
}

}  // namespace

void RunConfig::validate() const {
  if (!synth && !manifest_path) {
    throw std::invalid_argument(
        "config: corpus needs either a 'synthetic' spec or a 'manifest' path");
  }
  if (synth && manifest_path) {
    throw std::invalid_argument(
        "config: corpus cannot name both 'synthetic' and 'manifest'");
  }
  if (synth) {
    synth->validate();
  }
  if (conditions.empty()) {
    throw std::invalid_argument("config: at least one condition required");
  }
  std::set<std::string> ids;
  for (const auto& c : conditions) {
    c.validate();
    if (!ids.insert(c.id).second) {
      throw std::invalid_argument("config: duplicate condition id '" + c.id +
                                  "'");
    }
  }
  if (fault_sizes_in.empty()) {
    throw std::invalid_argument("config: at least one fault size required");
  }
  for (double s : fault_sizes_in) {
    if (!(s > 0.0)) {
      throw std::invalid_argument("config: fault sizes must be > 0");
    }
  }
  if (methods.empty()) {
    throw std::invalid_argument("config: at least one method required");
  }
  adaptation.validate();
  if (window.len < 2 || window.len % 2 != 0) {
    throw std::invalid_argument("config: window len must be even and >= 2");
  }
  if (window.hop < 1) {
    throw std::invalid_argument("config: window hop must be >= 1");
  }
  if (samples_per_class < 1) {
    throw std::invalid_argument("config: samples_per_class must be >= 1");
  }
  for (const auto& f : formats) {
    if (f != "json" && f != "csv") {
      throw std::invalid_argument("config: unknown output format '" + f + "'");
    }
  }
  for (const auto& [train, test] : cells) {
    if (!ids.contains(train) || !ids.contains(test)) {
      throw std::invalid_argument("config: cell (" + train + " -> " + test +
                                  ") names an unknown condition id");
    }
  }
  for (double l : lambdas) {
    if (!(l > 0.0 && l < 1.0)) {
      throw std::invalid_argument(
          "config: lambda " + fmt_double(l) +
          " outside (0, 1); the optimization problem is ill-defined at the "
          "endpoints");
    }
  }
  if (roc) {
    if (!ids.contains(roc->train_id) || !ids.contains(roc->test_id)) {
      throw std::invalid_argument("config: roc cell names an unknown condition");
    }
    if (std::find(fault_sizes_in.begin(), fault_sizes_in.end(),
                  roc->size_in) == fault_sizes_in.end()) {
      throw std::invalid_argument(
          "config: roc size_in is not one of fault_sizes_in");
    }
    for (int it : roc->iterations) {
      if (it < 0 || it > adaptation.iterations) {
        throw std::invalid_argument(
            "config: roc iteration " + std::to_string(it) +
            " outside [0, " + std::to_string(adaptation.iterations) + "]");
      }
    }
  }
}

RunConfig parse_config(const ordered_json& doc) {
  if (!doc.is_object()) {
    throw std::invalid_argument("config: top level must be a JSON object");
  }
  check_keys(doc,
             {"corpus", "conditions", "fault_sizes_in", "methods",
              "adaptation", "window", "samples_per_class", "seed", "formats",
              "cells", "lambdas", "roc"},
             "top level");

  RunConfig cfg;
  const auto& corpus = doc.at("corpus");
  check_keys(corpus, {"synthetic", "manifest", "sample_rate_hz"}, "corpus");
  if (corpus.contains("synthetic")) {
    const auto& syn = corpus.at("synthetic");
    check_keys(syn,
               {"geometry", "resonance_hz", "decay_rate", "noise_std",
                "sample_rate_hz", "duration_s"},
               "corpus.synthetic");
    signal::SynthParams p;
    if (syn.contains("geometry")) {
      const auto& g = syn.at("geometry");
      check_keys(g, {"n_balls", "ball_diam_ratio", "contact_angle_rad"},
                 "corpus.synthetic.geometry");
      if (g.contains("n_balls")) p.geometry.n_balls = g.at("n_balls").get<int>();
      if (g.contains("ball_diam_ratio"))
        p.geometry.ball_diam_ratio = g.at("ball_diam_ratio").get<double>();
      if (g.contains("contact_angle_rad"))
        p.geometry.contact_angle_rad = g.at("contact_angle_rad").get<double>();
    }
    if (syn.contains("resonance_hz")) p.resonance_hz = syn.at("resonance_hz").get<double>();
    if (syn.contains("decay_rate")) p.decay_rate = syn.at("decay_rate").get<double>();
    if (syn.contains("noise_std")) p.noise_std = syn.at("noise_std").get<double>();
    if (syn.contains("sample_rate_hz")) p.sample_rate_hz = syn.at("sample_rate_hz").get<double>();
    if (syn.contains("duration_s")) p.duration_s = syn.at("duration_s").get<double>();
    cfg.synth = p;
  }
  if (corpus.contains("manifest")) {
    cfg.manifest_path = corpus.at("manifest").get<std::string>();
  }
  if (corpus.contains("sample_rate_hz")) {
    cfg.manifest_sample_rate_hz = corpus.at("sample_rate_hz").get<double>();
  }

  for (const auto& c : doc.at("conditions")) {
    check_keys(c, {"id", "load_hp", "speed_rpm"}, "conditions[]");
    OperatingCondition cond;
    cond.id = c.at("id").get<std::string>();
    cond.load_hp = c.at("load_hp").get<double>();
    cond.speed_rpm = c.at("speed_rpm").get<double>();
    cfg.conditions.push_back(std::move(cond));
  }

  for (const auto& s : doc.at("fault_sizes_in")) {
    cfg.fault_sizes_in.push_back(s.get<double>());
  }

  if (doc.contains("methods")) {
    for (const auto& m : doc.at("methods")) {
      cfg.methods.push_back(method_from_string(m.get<std::string>()));
    }
  } else {
    cfg.methods = {Method::Baseline, Method::NnNa, Method::NnSa, Method::Datf};
  }

  if (doc.contains("adaptation")) {
    const auto& a = doc.at("adaptation");
    check_keys(a, {"k", "lambda", "iterations", "pca_dim"}, "adaptation");
    if (a.contains("k")) cfg.adaptation.k = a.at("k").get<int>();
    if (a.contains("lambda")) cfg.adaptation.lambda = a.at("lambda").get<double>();
    if (a.contains("iterations")) cfg.adaptation.iterations = a.at("iterations").get<int>();
    if (a.contains("pca_dim")) cfg.adaptation.pca_dim = a.at("pca_dim").get<int>();
  }

  if (doc.contains("window")) {
    const auto& w = doc.at("window");
    check_keys(w, {"len", "hop"}, "window");
    if (w.contains("len")) cfg.window.len = w.at("len").get<int>();
    if (w.contains("hop")) cfg.window.hop = w.at("hop").get<int>();
  }

  if (doc.contains("samples_per_class")) {
    cfg.samples_per_class = doc.at("samples_per_class").get<int>();
  }
  if (doc.contains("seed")) {
    cfg.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (doc.contains("formats")) {
    cfg.formats.clear();
    for (const auto& f : doc.at("formats")) {
      cfg.formats.push_back(f.get<std::string>());
    }
  }
  if (doc.contains("cells")) {
    for (const auto& c : doc.at("cells")) {
      check_keys(c, {"train", "test"}, "cells[]");
      cfg.cells.emplace_back(c.at("train").get<std::string>(),
                             c.at("test").get<std::string>());
    }
  }
  if (doc.contains("lambdas")) {
    cfg.lambdas.clear();
    for (const auto& l : doc.at("lambdas")) {
      cfg.lambdas.push_back(l.get<double>());
    }
  }
  if (doc.contains("roc")) {
    const auto& r = doc.at("roc");
    check_keys(r, {"train", "test", "size_in", "iterations"}, "roc");
    RocSpec spec;
    spec.train_id = r.at("train").get<std::string>();
    spec.test_id = r.at("test").get<std::string>();
    spec.size_in = r.at("size_in").get<double>();
    for (const auto& it : r.at("iterations")) {
      spec.iterations.push_back(it.get<int>());
    }
    cfg.roc = std::move(spec);
  }

  cfg.echo = doc;
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config '" + path.string() + "'");
  }
  ordered_json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config '" + path.string() +
                             "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

void override_seed(RunConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.echo["seed"] = seed;
}

ingest::RawCorpus build_corpus(const RunConfig& config) {
  config.validate();
  if (config.manifest_path) {
    return ingest::load_corpus(*config.manifest_path,
                               config.manifest_sample_rate_hz);
  }
  signal::SynthParams params = *config.synth;
  params.seed = config.seed;
  // stretch duration so samples_per_class windows fit the configured window
  const double needed =
      (double(config.samples_per_class - 1) * config.window.hop +
       config.window.len) /
      params.sample_rate_hz;
  params.duration_s = std::max(params.duration_s, needed);

  std::vector<FaultSpec> faults;
  faults.push_back({FaultClass::NO, 0.0});
  for (double size : config.fault_sizes_in) {
    faults.push_back({FaultClass::IF, size});
    faults.push_back({FaultClass::OF, size});
    faults.push_back({FaultClass::BF, size});
  }
  return signal::synth_dataset(config.conditions, faults,
                               config.samples_per_class, params);
}

namespace {

struct DomainTable {
  // labeled domains keyed by (size index, condition index)
  std::vector<std::vector<ingest::DomainDataset>> domains;
};

DomainTable build_domains(const RunConfig& config,
                          const ingest::RawCorpus& corpus) {
  DomainTable table;
  table.domains.resize(config.fault_sizes_in.size());
  for (std::size_t s = 0; s < config.fault_sizes_in.size(); ++s) {
    table.domains[s].reserve(config.conditions.size());
    for (const auto& cond : config.conditions) {
      table.domains[s].push_back(ingest::build_domain(
          corpus, cond, config.fault_sizes_in[s], config.window.len,
          config.window.hop, config.samples_per_class, /*labeled=*/true));
    }
  }
  return table;
}

struct CellTask {
  std::size_t size_idx = 0;
  std::size_t test_idx = 0;
  std::size_t train_idx = 0;
};

std::vector<CellTask> enumerate_cells(const RunConfig& config) {
  std::vector<CellTask> tasks;
  for (std::size_t s = 0; s < config.fault_sizes_in.size(); ++s) {
    for (std::size_t te = 0; te < config.conditions.size(); ++te) {
      for (std::size_t tr = 0; tr < config.conditions.size(); ++tr) {
        if (!config.cells.empty()) {
          const bool wanted = std::any_of(
              config.cells.begin(), config.cells.end(), [&](const auto& c) {
                return c.first == config.conditions[tr].id &&
                       c.second == config.conditions[te].id;
              });
          if (!wanted) {
            continue;
          }
        }
        tasks.push_back({s, te, tr});
      }
    }
  }
  return tasks;
}

// Shared per-cell preprocessing: the combined PCA is computed once and
// reused by nn_na (top-k slice) and datf (pca_dim basis).
struct PreparedCell {
  const ingest::DomainDataset* train = nullptr;
  const ingest::DomainDataset* test = nullptr;
  ingest::DomainDataset norm_train;
  ingest::DomainDataset norm_test;
  std::optional<linalg::PcaResult> pca;
  int pca_dim = 0;
};

PreparedCell prepare_cell(const RunConfig& config,
                          const ingest::DomainDataset& train,
                          const ingest::DomainDataset& test) {
  PreparedCell prep;
  prep.train = &train;
  prep.test = &test;

  const bool needs_norm =
      std::any_of(config.methods.begin(), config.methods.end(), [](Method m) {
        return m != Method::Baseline;
      });
  if (!needs_norm) {
    return prep;
  }
  prep.norm_train = train;
  prep.norm_train.X = adapt::l2_normalize_rows(train.X);
  prep.norm_test = test;
  prep.norm_test.X = adapt::l2_normalize_rows(test.X);

  const bool has_datf = std::count(config.methods.begin(), config.methods.end(),
                                   Method::Datf) > 0;
  const bool has_nn_na = std::count(config.methods.begin(),
                                    config.methods.end(), Method::NnNa) > 0;
  if (has_datf || has_nn_na) {
    prep.pca_dim = has_datf ? config.adaptation.pca_dim : config.adaptation.k;
    const auto n_tr = train.X.rows();
    const auto n_te = test.X.rows();
    Eigen::MatrixXd x_d(train.X.cols(), n_tr + n_te);
    x_d.leftCols(n_tr) = prep.norm_train.X.transpose();
    x_d.rightCols(n_te) = prep.norm_test.X.transpose();
    prep.pca = linalg::pca_embed(x_d, prep.pca_dim);
  }
  return prep;
}

std::vector<FaultClass> run_method(const RunConfig& config,
                                   const PreparedCell& prep, Method method,
                                   double lambda_override,
                                   CellResult* result_out,
                                   adapt::AdaptationModel* model_out) {
  const std::vector<FaultClass>& y_tr = *prep.train->y;
  const auto n_tr = prep.train->X.rows();

  switch (method) {
    case Method::Baseline: {
      const classify::NnModel model =
          classify::nn_fit(prep.train->X.transpose(), y_tr);
      return classify::nn_predict(model, prep.test->X.transpose());
    }
    case Method::NnNa: {
      const int k = config.adaptation.k;
      const Eigen::MatrixXd v = prep.pca->projected.topRows(k);
      const classify::NnModel model = classify::nn_fit(v.leftCols(n_tr), y_tr);
      return classify::nn_predict(model, v.rightCols(v.cols() - n_tr));
    }
    case Method::NnSa: {
      const adapt::SubspaceAlignResult sa = adapt::subspace_align(
          prep.norm_train, prep.norm_test, config.adaptation.k);
      const classify::NnModel model =
          classify::nn_fit(sa.projected_train.transpose(), y_tr);
      return classify::nn_predict(model, sa.projected_test.transpose());
    }
    case Method::Datf: {
      adapt::AdaptationParams params = config.adaptation;
      if (lambda_override > 0.0) {
        params.lambda = lambda_override;
      }
      adapt::FitOptions options;
      if (prep.pca && prep.pca_dim == params.pca_dim) {
        options.pca = &*prep.pca;
      }
      auto [pred, model] =
          adapt::datf_fit_predict(*prep.train, *prep.test, params, options);
      if (result_out != nullptr) {
        const std::vector<FaultClass>& truth = *prep.test->y;
        for (const auto& rec : model.history) {
          result_out->history.push_back(
              {rec.marginal_mmd, classify::accuracy(rec.pseudo_labels, truth)});
        }
      }
      if (model_out != nullptr) {
        *model_out = std::move(model);
      }
      return pred;
    }
  }
  throw std::logic_error("run_method: unreachable");
}

void append_projections(const RunConfig& config, const CellTask& task,
                        const adapt::AdaptationModel& model,
                        const ingest::DomainDataset& train,
                        const ingest::DomainDataset& test,
                        std::vector<ProjectionPoint>* out) {
  const auto emit = [&](const Eigen::MatrixXd& v, const char* domain,
                        const std::vector<FaultClass>& labels) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      ProjectionPoint p;
      p.size_in = config.fault_sizes_in[task.size_idx];
      p.train_id = config.conditions[task.train_idx].id;
      p.test_id = config.conditions[task.test_idx].id;
      p.method = Method::Datf;
      p.domain = domain;
      p.label = labels[static_cast<std::size_t>(j)];
      p.x = v(0, j);
      p.y = v.rows() > 1 ? v(1, j) : 0.0;
      out->push_back(std::move(p));
    }
  };
  emit(model.V_tr, "train", *train.y);
  emit(model.V_te, "test", *test.y);
}

}  // namespace

TransferReport run_transfer_matrix(const RunConfig& config, int jobs) {
  config.validate();
  const ingest::RawCorpus corpus = build_corpus(config);
  const DomainTable table = build_domains(config, corpus);
  const std::vector<CellTask> tasks = enumerate_cells(config);

  const bool want_projections =
      std::count(config.methods.begin(), config.methods.end(), Method::Datf) >
      0;

  struct TaskOutput {
    std::vector<CellResult> results;
    std::vector<ProjectionPoint> projections;
  };
  std::vector<TaskOutput> outputs(tasks.size());

  parallel_for(tasks.size(), jobs, [&](std::size_t ti) {
    const CellTask& task = tasks[ti];
    const ingest::DomainDataset& train = table.domains[task.size_idx][task.train_idx];
    const ingest::DomainDataset& test = table.domains[task.size_idx][task.test_idx];
    const PreparedCell prep = prepare_cell(config, train, test);

    for (Method method : config.methods) {
      CellResult res;
      res.size_in = config.fault_sizes_in[task.size_idx];
      res.train_id = config.conditions[task.train_idx].id;
      res.test_id = config.conditions[task.test_idx].id;
      res.method = method;

      adapt::AdaptationModel model;
      const auto t0 = std::chrono::steady_clock::now();
      const std::vector<FaultClass> pred = run_method(
          config, prep, method, /*lambda_override=*/0.0, &res,
          method == Method::Datf && want_projections ? &model : nullptr);
      const auto t1 = std::chrono::steady_clock::now();

      const std::vector<FaultClass>& truth = *test.y;
      res.accuracy = classify::accuracy(pred, truth);
      res.confusion = classify::confusion(pred, truth);
      res.runtime_s = std::chrono::duration<double>(t1 - t0).count();
      outputs[ti].results.push_back(std::move(res));

      if (method == Method::Datf && want_projections) {
        append_projections(config, task, model, train, test,
                           &outputs[ti].projections);
      }
    }
  });

  TransferReport report;
  report.config = config.echo;
  for (auto& out : outputs) {
    std::move(out.results.begin(), out.results.end(),
              std::back_inserter(report.results));
    std::move(out.projections.begin(), out.projections.end(),
              std::back_inserter(report.projections));
  }
  return report;
}

TransferReport lambda_sweep(const RunConfig& config,
                            const std::vector<double>& lambdas, int jobs) {
  config.validate();
  for (double l : lambdas) {
    if (!(l > 0.0 && l < 1.0)) {
      throw std::invalid_argument(
          "lambda_sweep: lambda " + fmt_double(l) +
          " outside (0, 1); the optimization problem is ill-defined at the "
          "endpoints");
    }
  }
  const ingest::RawCorpus corpus = build_corpus(config);
  const DomainTable table = build_domains(config, corpus);
  const std::vector<CellTask> tasks = enumerate_cells(config);

  RunConfig datf_config = config;
  datf_config.methods = {Method::Datf};

  // (task, lambda) grid; per-cell PCA computed once across the sweep
  std::vector<std::vector<CellResult>> outputs(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t ti) {
    const CellTask& task = tasks[ti];
    const ingest::DomainDataset& train = table.domains[task.size_idx][task.train_idx];
    const ingest::DomainDataset& test = table.domains[task.size_idx][task.test_idx];
    const PreparedCell prep = prepare_cell(datf_config, train, test);

    for (double lambda : lambdas) {
      CellResult res;
      res.size_in = config.fault_sizes_in[task.size_idx];
      res.train_id = config.conditions[task.train_idx].id;
      res.test_id = config.conditions[task.test_idx].id;
      res.method = Method::Datf;

      const auto t0 = std::chrono::steady_clock::now();
      const std::vector<FaultClass> pred =
          run_method(datf_config, prep, Method::Datf, lambda, &res, nullptr);
      const auto t1 = std::chrono::steady_clock::now();

      const std::vector<FaultClass>& truth = *test.y;
      res.accuracy = classify::accuracy(pred, truth);
      res.confusion = classify::confusion(pred, truth);
      res.runtime_s = std::chrono::duration<double>(t1 - t0).count();
      outputs[ti].push_back(std::move(res));
    }
  });

  TransferReport report;
  report.config = config.echo;
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    SweepResult sweep;
    sweep.lambda = lambdas[li];
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
      sweep.cells.push_back(outputs[ti][li]);
    }
    report.sweeps.push_back(std::move(sweep));
  }
  return report;
}

TransferReport roc_study(const RunConfig& config,
                         const std::vector<int>& iterations_to_record) {
  config.validate();
  if (!config.roc) {
    throw std::invalid_argument("roc_study: config has no 'roc' section");
  }
  for (int it : iterations_to_record) {
    if (it < 0 || it > config.adaptation.iterations) {
      throw std::invalid_argument(
          "roc_study: iteration " + std::to_string(it) + " outside [0, " +
          std::to_string(config.adaptation.iterations) + "]");
    }
  }

  TransferReport report;
  report.config = config.echo;
  if (iterations_to_record.empty()) {
    return report;
  }

  const ingest::RawCorpus corpus = build_corpus(config);
  const auto size_it = std::find(config.fault_sizes_in.begin(),
                                 config.fault_sizes_in.end(), config.roc->size_in);
  const auto cond_index = [&](const std::string& id) {
    for (std::size_t i = 0; i < config.conditions.size(); ++i) {
      if (config.conditions[i].id == id) {
        return i;
      }
    }
    throw std::logic_error("roc_study: condition lookup failed");
  };
  const std::size_t train_idx = cond_index(config.roc->train_id);
  const std::size_t test_idx = cond_index(config.roc->test_id);
  const double size = *size_it;

  const ingest::DomainDataset train = ingest::build_domain(
      corpus, config.conditions[train_idx], size, config.window.len,
      config.window.hop, config.samples_per_class, /*labeled=*/true);
  const ingest::DomainDataset test = ingest::build_domain(
      corpus, config.conditions[test_idx], size, config.window.len,
      config.window.hop, config.samples_per_class, /*labeled=*/true);

  adapt::FitOptions options;
  options.record_projection_iterations = iterations_to_record;
  const auto [pred, model] =
      adapt::datf_fit_predict(train, test, config.adaptation, options);

  std::vector<int> sorted_iters = iterations_to_record;
  std::sort(sorted_iters.begin(), sorted_iters.end());
  sorted_iters.erase(std::unique(sorted_iters.begin(), sorted_iters.end()),
                     sorted_iters.end());

  const std::vector<FaultClass>& truth = *test.y;
  for (int it : sorted_iters) {
    const auto& [v_tr, v_te] = model.recorded_projections.at(it);
    const classify::NnModel nn = classify::nn_fit(v_tr, *train.y);
    for (FaultClass cls : kAllFaultClasses) {
      const Eigen::VectorXd scores = classify::nn_scores(nn, v_te, cls);
      std::vector<bool> binary(truth.size());
      for (std::size_t i = 0; i < truth.size(); ++i) {
        binary[i] = truth[i] == cls;
      }
      RocEntry entry;
      entry.iteration = it;
      entry.cls = cls;
      entry.curve = classify::roc_curve(scores, binary);
      report.roc.push_back(std::move(entry));
    }
  }
  return report;
}

namespace {

ordered_json cell_to_json(const CellResult& res) {
  ordered_json j;
  j["fault_size_in"] = res.size_in;
  j["train_condition"] = res.train_id;
  j["test_condition"] = res.test_id;
  j["method"] = std::string(to_string(res.method));
  j["accuracy"] = res.accuracy;
  ordered_json conf = ordered_json::array();
  for (Eigen::Index r = 0; r < res.confusion.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < res.confusion.cols(); ++c) {
      row.push_back(res.confusion(r, c));
    }
    conf.push_back(std::move(row));
  }
  j["confusion"] = std::move(conf);
  if (!res.history.empty()) {
    ordered_json hist = ordered_json::array();
    for (const auto& h : res.history) {
      hist.push_back({{"marginal_mmd", h.marginal_mmd},
                      {"pseudo_accuracy", h.pseudo_accuracy}});
    }
    j["history"] = std::move(hist);
  }
  return j;
}

CellResult cell_from_json(const ordered_json& j) {
  CellResult res;
  res.size_in = j.at("fault_size_in").get<double>();
  res.train_id = j.at("train_condition").get<std::string>();
  res.test_id = j.at("test_condition").get<std::string>();
  res.method = method_from_string(j.at("method").get<std::string>());
  res.accuracy = j.at("accuracy").get<double>();
  const auto& conf = j.at("confusion");
  res.confusion.resize(static_cast<Eigen::Index>(conf.size()),
                       static_cast<Eigen::Index>(conf.size()));
  for (std::size_t r = 0; r < conf.size(); ++r) {
    for (std::size_t c = 0; c < conf[r].size(); ++c) {
      res.confusion(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          conf[r][c].get<int>();
    }
  }
  if (j.contains("history")) {
    for (const auto& h : j.at("history")) {
      res.history.push_back({h.at("marginal_mmd").get<double>(),
                             h.at("pseudo_accuracy").get<double>()});
    }
  }
  return res;
}

}  // namespace

ordered_json report_to_json(const TransferReport& report) {
  ordered_json j;
  j["schema"] = "tfdiag-report-v1";
  j["config"] = report.config;
  ordered_json results = ordered_json::array();
  for (const auto& res : report.results) {
    results.push_back(cell_to_json(res));
  }
  j["results"] = std::move(results);
  ordered_json sweeps = ordered_json::array();
  for (const auto& sweep : report.sweeps) {
    ordered_json cells = ordered_json::array();
    for (const auto& res : sweep.cells) {
      cells.push_back(cell_to_json(res));
    }
    sweeps.push_back({{"lambda", sweep.lambda}, {"results", std::move(cells)}});
  }
  j["sweeps"] = std::move(sweeps);
  ordered_json roc = ordered_json::array();
  for (const auto& entry : report.roc) {
    ordered_json points = ordered_json::array();
    for (const auto& [fpr, tpr] : entry.curve.points) {
      points.push_back({fpr, tpr});
    }
    roc.push_back({{"iteration", entry.iteration},
                   {"fault_class", std::string(to_string(entry.cls))},
                   {"auc", entry.curve.auc},
                   {"points", std::move(points)}});
  }
  j["roc"] = std::move(roc);
  ordered_json projections = ordered_json::array();
  for (const auto& p : report.projections) {
    projections.push_back({{"fault_size_in", p.size_in},
                           {"train_condition", p.train_id},
                           {"test_condition", p.test_id},
                           {"method", std::string(to_string(p.method))},
                           {"domain", p.domain},
                           {"label", std::string(to_string(p.label))},
                           {"x", p.x},
                           {"y", p.y}});
  }
  j["projections"] = std::move(projections);
  return j;
}

TransferReport report_from_json(const ordered_json& doc) {
  if (!doc.is_object() || doc.value("schema", "") != "tfdiag-report-v1") {
    throw std::invalid_argument(
        "report_from_json: missing or unknown 'schema' (expected "
        "tfdiag-report-v1)");
  }
  TransferReport report;
  report.config = doc.value("config", ordered_json::object());
  for (const auto& r : doc.value("results", ordered_json::array())) {
    report.results.push_back(cell_from_json(r));
  }
  for (const auto& s : doc.value("sweeps", ordered_json::array())) {
    SweepResult sweep;
    sweep.lambda = s.at("lambda").get<double>();
    for (const auto& r : s.at("results")) {
      sweep.cells.push_back(cell_from_json(r));
    }
    report.sweeps.push_back(std::move(sweep));
  }
  for (const auto& r : doc.value("roc", ordered_json::array())) {
    RocEntry entry;
    entry.iteration = r.at("iteration").get<int>();
    entry.cls = fault_class_from_string(r.at("fault_class").get<std::string>());
    entry.curve.auc = r.at("auc").get<double>();
    for (const auto& p : r.at("points")) {
      entry.curve.points.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    report.roc.push_back(std::move(entry));
  }
  for (const auto& p : doc.value("projections", ordered_json::array())) {
    ProjectionPoint point;
    point.size_in = p.at("fault_size_in").get<double>();
    point.train_id = p.at("train_condition").get<std::string>();
    point.test_id = p.at("test_condition").get<std::string>();
    point.method = method_from_string(p.at("method").get<std::string>());
    point.domain = p.at("domain").get<std::string>();
    point.label = fault_class_from_string(p.at("label").get<std::string>());
    point.x = p.at("x").get<double>();
    point.y = p.at("y").get<double>();
    report.projections.push_back(std::move(point));
  }
  return report;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("emit_report: cannot write '" + path.string() +
                             "'");
  }
  out << text;
  if (!out) {
    throw std::runtime_error("emit_report: I/O failure on '" + path.string() +
                             "'");
  }
}

}  // namespace

std::vector<std::filesystem::path> emit_report(
    const TransferReport& report, const std::filesystem::path& out_dir,
    const std::vector<std::string>& formats) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;

  for (const auto& f : formats) {
    if (f != "json" && f != "csv") {
      throw std::invalid_argument("emit_report: unknown format '" + f + "'");
    }
  }

  if (std::find(formats.begin(), formats.end(), "json") != formats.end()) {
    const auto path = out_dir / "report.json";
    write_text(path, report_to_json(report).dump(2) + "\n");
    written.push_back(path);
  }

  if (std::find(formats.begin(), formats.end(), "csv") != formats.end()) {
    {
      std::string csv =
          "fault_size_in,test_condition,train_condition,method,accuracy\n";
      for (const auto& r : report.results) {
        csv += fmt_double(r.size_in) + "," + r.test_id + "," + r.train_id +
               "," + std::string(to_string(r.method)) + "," +
               fmt_double(r.accuracy) + "\n";
      }
      const auto path = out_dir / "accuracy.csv";
      write_text(path, csv);
      written.push_back(path);
    }
    {
      std::string csv =
          "lambda,fault_size_in,test_condition,train_condition,method,"
          "accuracy\n";
      for (const auto& sweep : report.sweeps) {
        for (const auto& r : sweep.cells) {
          csv += fmt_double(sweep.lambda) + "," + fmt_double(r.size_in) + "," +
                 r.test_id + "," + r.train_id + "," +
                 std::string(to_string(r.method)) + "," +
                 fmt_double(r.accuracy) + "\n";
        }
      }
      const auto path = out_dir / "sweep.csv";
      write_text(path, csv);
      written.push_back(path);
    }
    {
      std::string csv = "iteration,fault_class,point_index,fpr,tpr\n";
      for (const auto& entry : report.roc) {
        for (std::size_t i = 0; i < entry.curve.points.size(); ++i) {
          csv += std::to_string(entry.iteration) + "," +
                 std::string(to_string(entry.cls)) + "," + std::to_string(i) +
                 "," + fmt_double(entry.curve.points[i].first) + "," +
                 fmt_double(entry.curve.points[i].second) + "\n";
        }
      }
      const auto path = out_dir / "roc_points.csv";
      write_text(path, csv);
      written.push_back(path);
    }
    {
      std::string csv =
          "fault_size_in,train_condition,test_condition,method,domain,label,"
          "x,y\n";
      for (const auto& p : report.projections) {
        csv += fmt_double(p.size_in) + "," + p.train_id + "," + p.test_id +
               "," + std::string(to_string(p.method)) + "," + p.domain + "," +
               std::string(to_string(p.label)) + "," + fmt_double(p.x) + "," +
               fmt_double(p.y) + "\n";
      }
      const auto path = out_dir / "projections.csv";
      write_text(path, csv);
      written.push_back(path);
    }
  }

  // wall-clock timings are inherently non-reproducible, so they live in
  // their own file and stay out of the deterministic report artifacts
  {
    ordered_json timings;
    double total = 0.0;
    ordered_json cells = ordered_json::array();
    const auto add = [&](const CellResult& r) {
      cells.push_back({{"fault_size_in", r.size_in},
                       {"test_condition", r.test_id},
                       {"train_condition", r.train_id},
                       {"method", std::string(to_string(r.method))},
                       {"runtime_s", r.runtime_s}});
      total += r.runtime_s;
    };
    for (const auto& r : report.results) add(r);
    for (const auto& s : report.sweeps) {
      for (const auto& r : s.cells) add(r);
    }
    timings["cells"] = std::move(cells);
    timings["total_s"] = total;
    const auto path = out_dir / "timings.json";
    write_text(path, timings.dump(2) + "\n");
    written.push_back(path);
  }

  return written;
}

}  // namespace tfdiag::bench
