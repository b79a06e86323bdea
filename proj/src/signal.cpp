#include "tfdiag/signal.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tfdiag::signal {

namespace {

constexpr double kShaftAmplitude = 0.5;
constexpr double kReferenceSizeIn = 0.007;
constexpr double kLoadGainPerHp = 0.1;
constexpr double kRingCutoff = 1e-4;  // stop an impulse once its envelope decays below this

}  // namespace

void BearingGeometry::validate() const {
  if (n_balls < 1) {
    throw std::invalid_argument("BearingGeometry: n_balls must be > 0");
  }
  if (!(ball_diam_ratio > 0.0 && ball_diam_ratio < 1.0)) {
    throw std::invalid_argument(
        "BearingGeometry: ball_diam_ratio must be in (0, 1)");
  }
  if (!(contact_angle_rad >= 0.0 &&
        contact_angle_rad < std::numbers::pi / 2.0)) {
    throw std::invalid_argument(
        "BearingGeometry: contact_angle_rad must be in [0, pi/2)");
  }
  if (!(ball_diam_ratio * std::cos(contact_angle_rad) < 1.0)) {
    throw std::invalid_argument(
        "BearingGeometry: d/D * cos(contact angle) must be < 1");
  }
}

CharacteristicFreqs characteristic_frequencies(const BearingGeometry& geometry,
                                               double speed_rpm) {
  geometry.validate();
  if (!(speed_rpm > 0.0)) {
    throw std::invalid_argument(
        "characteristic_frequencies: speed_rpm must be > 0");
  }
  const double fr = speed_rpm / 60.0;
  const double rc = geometry.ball_diam_ratio * std::cos(geometry.contact_angle_rad);
  const double half_balls = 0.5 * geometry.n_balls;

  CharacteristicFreqs f;
  f.shaft_hz = fr;
  f.bpfo_hz = half_balls * fr * (1.0 - rc);
  f.bpfi_hz = half_balls * fr * (1.0 + rc);
  f.bsf_hz = fr / (2.0 * geometry.ball_diam_ratio) * (1.0 - rc * rc);
  return f;
}

void SynthParams::validate() const {
  geometry.validate();
  if (!(sample_rate_hz > 0.0)) {
    throw std::invalid_argument("SynthParams: sample_rate_hz must be > 0");
  }
  if (!(resonance_hz > 0.0 && resonance_hz < sample_rate_hz / 2.0)) {
    throw std::invalid_argument(
        "SynthParams: resonance_hz must lie in (0, sample_rate_hz/2)");
  }
  if (!(decay_rate > 0.0)) {
    throw std::invalid_argument("SynthParams: decay_rate must be > 0");
  }
  if (noise_std < 0.0) {
    throw std::invalid_argument("SynthParams: noise_std must be >= 0");
  }
  if (!(duration_s > 0.0)) {
    throw std::invalid_argument("SynthParams: duration_s must be > 0");
  }
}

ingest::TimeSeries synth_signal(const OperatingCondition& cond,
                                const FaultSpec& fault,
                                const SynthParams& params) {
  cond.validate();
  fault.validate();
  params.validate();

  const auto n_samples = static_cast<std::size_t>(
      std::llround(params.duration_s * params.sample_rate_hz));
  if (n_samples < static_cast<std::size_t>(kDefaultWindowLen)) {
    throw std::invalid_argument(
        "synth_signal: duration of " + std::to_string(n_samples) +
        " samples is shorter than one analysis window (" +
        std::to_string(kDefaultWindowLen) + ")");
  }

  const CharacteristicFreqs freqs =
      characteristic_frequencies(params.geometry, cond.speed_rpm);
  const double fs = params.sample_rate_hz;
  const double load_gain = 1.0 + kLoadGainPerHp * cond.load_hp;
  const double two_pi = 2.0 * std::numbers::pi;

  ingest::TimeSeries ts;
  ts.sample_rate_hz = fs;
  ts.samples.assign(n_samples, 0.0);

  for (std::size_t i = 0; i < n_samples; ++i) {
    ts.samples[i] = kShaftAmplitude * std::sin(two_pi * freqs.shaft_hz *
                                               (double(i) / fs));
  }

  if (fault.cls != FaultClass::NO) {
    double rate = 0.0;
    switch (fault.cls) {
      case FaultClass::OF: rate = freqs.bpfo_hz; break;
      case FaultClass::IF: rate = freqs.bpfi_hz; break;
      case FaultClass::BF: rate = 2.0 * freqs.bsf_hz; break;  // both races struck per spin
      case FaultClass::NO: break;
    }
    const double amp =
        (1.0 + fault.size_in / kReferenceSizeIn) * load_gain;
    // ring-down length: run each impulse until its envelope is negligible
    const double ring_s = std::log(1.0 / kRingCutoff) / params.decay_rate;
    const auto ring_samples =
        static_cast<std::size_t>(std::ceil(ring_s * fs)) + 1;

    const auto n_impulses =
        static_cast<std::size_t>(std::floor(params.duration_s * rate)) + 1;
    for (std::size_t k = 0; k < n_impulses; ++k) {
      const double t_k = double(k) / rate;
      const auto i0 = static_cast<std::size_t>(std::ceil(t_k * fs));
      const std::size_t i1 = std::min(n_samples, i0 + ring_samples);
      for (std::size_t i = i0; i < i1; ++i) {
        const double tau = double(i) / fs - t_k;
        ts.samples[i] += amp * std::exp(-params.decay_rate * tau) *
                         std::sin(two_pi * params.resonance_hz * tau);
      }
    }
  }

  const double sigma = params.noise_std * load_gain;
  if (sigma > 0.0) {
    std::mt19937_64 rng(
        derive_seed(params.seed, cond.id, fault.cls, fault.size_in));
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& s : ts.samples) {
      s += noise(rng);
    }
  }
  return ts;
}

ingest::RawCorpus synth_dataset(const std::vector<OperatingCondition>& conds,
                                const std::vector<FaultSpec>& faults,
                                int samples_per_class,
                                const SynthParams& params) {
  if (samples_per_class < 1) {
    throw std::invalid_argument("synth_dataset: samples_per_class must be > 0");
  }
  params.validate();

  // stretch the recording if needed so samples_per_class windows fit
  const double needed_samples =
      double(samples_per_class - 1) * kDefaultHop + kDefaultWindowLen;
  SynthParams per_rec = params;
  per_rec.duration_s =
      std::max(params.duration_s, needed_samples / params.sample_rate_hz);

  ingest::RawCorpus corpus;
  corpus.recordings.reserve(conds.size() * faults.size());
  for (const auto& cond : conds) {
    for (const auto& fault : faults) {
      ingest::Recording rec;
      rec.condition = cond;
      rec.fault = fault;
      rec.ts = synth_signal(cond, fault, per_rec);
      corpus.recordings.push_back(std::move(rec));
    }
  }
  return corpus;
}

namespace {

std::string recording_filename(const ingest::Recording& rec,
                               ingest::SampleFormat format) {
  std::ostringstream name;
  name << rec.condition.id << "_" << to_string(rec.fault.cls);
  name << "_";
  char size_buf[16];
  std::snprintf(size_buf, sizeof(size_buf), "%.3f", rec.fault.size_in);
  name << size_buf;
  switch (format) {
    case ingest::SampleFormat::Csv: name << ".csv"; break;
    case ingest::SampleFormat::RawF32le: name << ".f32le"; break;
    case ingest::SampleFormat::RawF64le: name << ".f64le"; break;
  }
  return name.str();
}

void write_recording(const ingest::TimeSeries& ts,
                     const std::filesystem::path& path,
                     ingest::SampleFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("write_corpus: cannot write '" + path.string() +
                             "'");
  }
  switch (format) {
    case ingest::SampleFormat::Csv: {
      char buf[64];
      for (double v : ts.samples) {
        const int len = std::snprintf(buf, sizeof(buf), "%.17g\n", v);
        out.write(buf, len);
      }
      break;
    }
    case ingest::SampleFormat::RawF32le: {
      for (double v : ts.samples) {
        const float f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), sizeof(f));
      }
      break;
    }
    case ingest::SampleFormat::RawF64le: {
      out.write(reinterpret_cast<const char*>(ts.samples.data()),
                static_cast<std::streamsize>(ts.samples.size() * sizeof(double)));
      break;
    }
  }
  if (!out) {
    throw std::runtime_error("write_corpus: I/O failure writing '" +
                             path.string() + "'");
  }
}

}  // namespace

std::filesystem::path write_corpus(const ingest::RawCorpus& corpus,
                                   const std::filesystem::path& out_dir,
                                   ingest::SampleFormat format) {
  std::filesystem::create_directories(out_dir);
  nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
  for (const auto& rec : corpus.recordings) {
    const std::string name = recording_filename(rec, format);
    write_recording(rec.ts, out_dir / name, format);
    manifest.push_back({
        {"path", name},
        {"format", std::string(to_string(format))},
        {"sample_rate_hz", rec.ts.sample_rate_hz},
        {"condition",
         {{"id", rec.condition.id},
          {"load_hp", rec.condition.load_hp},
          {"speed_rpm", rec.condition.speed_rpm}}},
        {"fault",
         {{"class", std::string(to_string(rec.fault.cls))},
          {"size_in", rec.fault.size_in}}},
    });
  }
  const auto manifest_path = out_dir / "manifest.json";
  std::ofstream out(manifest_path);
  if (!out) {
    throw std::runtime_error("write_corpus: cannot write manifest '" +
                             manifest_path.string() + "'");
  }
  out << manifest.dump(2) << "\n";
  return manifest_path;
}

}  // namespace tfdiag::signal
