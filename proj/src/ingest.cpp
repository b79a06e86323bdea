#include "tfdiag/ingest.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <ccharconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tfdiag::ingest {

std::string_view to_string(SampleFormat f) {
  switch (f) {
    case SampleFormat::Csv: return "csv";
    case SampleFormat::RawF32le: return "raw-f32le";
    case SampleFormat::RawF64le: return "raw-f64le";
  }
  throw std::invalid_argument("unknown SampleFormat value");
}

SampleFormat sample_format_from_string(std::string_view s) {
  if (s == "csv") return SampleFormat::Csv;
  if (s == "raw-f32le") return SampleFormat::RawF32le;
  if (s == "raw-f64le") return SampleFormat::RawF64le;
  throw std::invalid_argument("unknown sample format '" + std::string(s) +
                              "', expected csv, raw-f32le or raw-f64le");
}

namespace {

std::vector<double> parse_csv(const std::filesystem::path& path,
                              std::istream& in) {
  std::vector<double> samples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    std::string_view tok(line);
    while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) {
      tok.remove_prefix(1);
    }
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) {
      tok.remove_suffix(1);
    }
    if (tok.empty()) {
      continue;
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw std::runtime_error(path.string() + ": malformed numeric token '" +
                               std::string(tok) + "' at line " +
                               std::to_string(lineno));
    }
    samples.push_back(v);
  }
  return samples;
}

template <typename Float>
std::vector<double> parse_raw(const std::filesystem::path& path,
                              std::istream& in) {
  static_assert(std::endian::native == std::endian::little,
                "raw loaders assume a little-endian host");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() % sizeof(Float) != 0) {
    throw std::runtime_error(
        path.string() + ": raw payload of " + std::to_string(bytes.size()) +
        " bytes is not a multiple of the " + std::to_string(sizeof(Float)) +
        "-byte sample width (trailing partial sample at offset " +
        std::to_string(bytes.size() - bytes.size() % sizeof(Float)) + ")");
  }
  std::vector<double> samples(bytes.size() / sizeof(Float));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Float v;
    std::memcpy(&v, bytes.data() + i * sizeof(Float), sizeof(Float));
    samples[i] = static_cast<double>(v);
  }
  return samples;
}

}  // namespace

TimeSeries load_timeseries(const std::filesystem::path& path,
                           SampleFormat format, double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0)) {
    throw std::invalid_argument("load_timeseries: sample_rate_hz must be > 0");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("load_timeseries: cannot open '" + path.string() +
                             "'");
  }

  TimeSeries ts;
  ts.sample_rate_hz = sample_rate_hz;
  switch (format) {
    case SampleFormat::Csv: ts.samples = parse_csv(path, in); break;
    case SampleFormat::RawF32le: ts.samples = parse_raw<float>(path, in); break;
    case SampleFormat::RawF64le: ts.samples = parse_raw<double>(path, in); break;
  }
  if (ts.samples.empty()) {
    throw std::runtime_error("load_timeseries: '" + path.string() +
                             "' contains no samples");
  }
  return ts;
}

std::vector<std::span<const double>> segment(const TimeSeries& ts,
                                             int window_len, int hop) {
  const std::size_t len = ts.samples.size();
  if (window_len < 1 || static_cast<std::size_t>(window_len) > len) {
    throw std::invalid_argument(
        "segment: window_len " + std::to_string(window_len) +
        " exceeds series length " + std::to_string(len));
  }
  if (hop < 1) {
    throw std::invalid_argument("segment: hop must be >= 1");
  }
  const std::size_t count =
      (len - static_cast<std::size_t>(window_len)) /
          static_cast<std::size_t>(hop) +
      1;
  std::vector<std::span<const double>> windows;
  windows.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    windows.emplace_back(ts.samples.data() + i * static_cast<std::size_t>(hop),
                         static_cast<std::size_t>(window_len));
  }
  return windows;
}

namespace {

// FFTW plan creation is not thread-safe; execution on per-call buffers is.
class PlanCache {
 public:
  fftw_plan get(int n) {
    std::scoped_lock lock(mu_);
    auto it = plans_.find(n);
    if (it != plans_.end()) {
      return it->second;
    }
    double* in = fftw_alloc_real(static_cast<std::size_t>(n));
    fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(n) / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    if (plan == nullptr) {
      throw std::runtime_error("fft_amplitudes: FFTW planning failed for N=" +
                               std::to_string(n));
    }
    plans_.emplace(n, plan);
    return plan;
  }

 private:
  std::mutex mu_;
  std::map<int, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t reals, std::size_t cplx)
      : in(fftw_alloc_real(reals)), out(fftw_alloc_complex(cplx)) {}
  ~FftwBuffer() {
    fftw_free(in);
    fftw_free(out);
  }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  double* in;
  fftw_complex* out;
};

}  // namespace

Eigen::VectorXd fft_amplitudes(std::span<const double> window) {
  const std::size_t n = window.size();
  if (n < 2 || n % 2 != 0) {
    throw std::invalid_argument(
        "fft_amplitudes: window length must be even and >= 2, got " +
        std::to_string(n));
  }
  fftw_plan plan = plan_cache().get(static_cast<int>(n));

  FftwBuffer buf(n, n / 2 + 1);
  std::copy(window.begin(), window.end(), buf.in);
  fftw_execute_dft_r2c(plan, buf.in, buf.out);

  Eigen::VectorXd amps(static_cast<Eigen::Index>(n / 2 + 1));
  for (std::size_t k = 0; k <= n / 2; ++k) {
    amps[static_cast<Eigen::Index>(k)] = std::hypot(buf.out[k][0], buf.out[k][1]);
  }
  return amps;
}

RawCorpus load_corpus(const std::filesystem::path& manifest_path,
                      double default_sample_rate_hz) {
  std::ifstream in(manifest_path);
  if (!in) {
    throw std::runtime_error("load_corpus: cannot open manifest '" +
                             manifest_path.string() + "'");
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_corpus: '" + manifest_path.string() +
                             "' is not valid JSON: " + e.what());
  }
  if (!doc.is_array()) {
    throw std::runtime_error("load_corpus: manifest must be a JSON array");
  }

  const std::filesystem::path base = manifest_path.parent_path();
  RawCorpus corpus;
  for (const auto& entry : doc) {
    Recording rec;
    const auto& cond = entry.at("condition");
    rec.condition.id = cond.at("id").get<std::string>();
    rec.condition.load_hp = cond.at("load_hp").get<double>();
    rec.condition.speed_rpm = cond.at("speed_rpm").get<double>();
    rec.condition.validate();

    const auto& fault = entry.at("fault");
    rec.fault.cls = fault_class_from_string(fault.at("class").get<std::string>());
    rec.fault.size_in = fault.at("size_in").get<double>();
    rec.fault.validate();

    const double rate = entry.contains("sample_rate_hz")
                            ? entry.at("sample_rate_hz").get<double>()
                            : default_sample_rate_hz;
    const auto rel = std::filesystem::path(entry.at("path").get<std::string>());
    const auto path = rel.is_absolute() ? rel : base / rel;
    rec.path = path.string();
    rec.ts = load_timeseries(
        path, sample_format_from_string(entry.at("format").get<std::string>()),
        rate);
    corpus.recordings.push_back(std::move(rec));
  }
  return corpus;
}

DomainDataset build_domain(const RawCorpus& corpus,
                           const OperatingCondition& condition,
                           double fault_size_in, int window_len, int hop,
                           int samples_per_class, bool labeled) {
  if (samples_per_class < 1) {
    throw std::invalid_argument("build_domain: samples_per_class must be >= 1");
  }
  const Eigen::Index dim = window_len / 2 + 1;
  const Eigen::Index n =
      static_cast<Eigen::Index>(kNumFaultClasses) * samples_per_class;

  DomainDataset ds;
  ds.condition = condition;
  ds.X.resize(n, dim);
  std::vector<FaultClass> labels;
  labels.reserve(static_cast<std::size_t>(n));

  Eigen::Index row = 0;
  for (FaultClass cls : kAllFaultClasses) {
    // NO-class recordings carry size 0 and match any requested size
    const double want_size = cls == FaultClass::NO ? 0.0 : fault_size_in;
    int taken = 0;
    for (const Recording& rec : corpus.recordings) {
      if (rec.condition.id != condition.id || rec.fault.cls != cls ||
          std::abs(rec.fault.size_in - want_size) > 1e-9) {
        continue;
      }
      for (const auto& w : segment(rec.ts, window_len, hop)) {
        if (taken == samples_per_class) {
          break;
        }
        ds.X.row(row) = fft_amplitudes(w).transpose();
        labels.push_back(cls);
        ++row;
        ++taken;
      }
      if (taken == samples_per_class) {
        break;
      }
    }
    if (taken == 0) {
      throw std::runtime_error(
          "build_domain: corpus has no " + std::string(to_string(cls)) +
          " recording for condition '" + condition.id + "' at size " +
          std::to_string(fault_size_in));
    }
    if (taken < samples_per_class) {
      throw std::runtime_error(
          "build_domain: insufficient windows for class " +
          std::string(to_string(cls)) + " under condition '" + condition.id +
          "': needed " + std::to_string(samples_per_class) + ", found " +
          std::to_string(taken));
    }
  }
  if (labeled) {
    ds.y = std::move(labels);
  }
  return ds;
}

}  // namespace tfdiag::ingest
