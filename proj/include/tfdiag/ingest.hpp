#ifndef TFDIAG_INGEST_HPP_
#define TFDIAG_INGEST_HPP_

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tfdiag/domain.hpp"

namespace tfdiag::ingest {

// A raw vibration recording. Samples are acceleration in arbitrary but
// consistent units.
struct TimeSeries {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;
};

enum class SampleFormat { Csv, RawF32le, RawF64le };

std::string_view to_string(SampleFormat f);
SampleFormat sample_format_from_string(std::string_view s);

/// Reads a recording from disk. CSV: one real per line, '.' decimal
/// separator. raw-f32le / raw-f64le: packed little-endian floats, no
/// header. Malformed tokens are reported with their line (CSV) or byte
/// offset (raw).
TimeSeries load_timeseries(const std::filesystem::path& path,
                           SampleFormat format, double sample_rate_hz);

/// Contiguous fixed-length slices with the given hop; no padding. The
/// returned spans view into ts.samples. Window count is
/// floor((len - window_len)/hop) + 1.
std::vector<std::span<const double>> segment(const TimeSeries& ts,
                                             int window_len, int hop);

/// One-sided magnitude spectrum |DFT| of bins 0..N/2 (dimension N/2 + 1).
/// Window length must be even and >= 2. Raw magnitudes, no scaling.
Eigen::VectorXd fft_amplitudes(std::span<const double> window);

struct Recording {
  TimeSeries ts;
  OperatingCondition condition;
  FaultSpec fault;
  std::string path;  // provenance; empty for in-memory corpora
};

struct RawCorpus {
  std::vector<Recording> recordings;
};

/// Loads a corpus from a manifest: a JSON array of
/// {path, format, condition:{id,load_hp,speed_rpm}, fault:{class,size_in}}.
/// Paths are resolved relative to the manifest. Entries may carry an
/// optional sample_rate_hz; otherwise default_sample_rate_hz applies.
RawCorpus load_corpus(const std::filesystem::path& manifest_path,
                      double default_sample_rate_hz);

// FFT-amplitude feature rows for one operating condition. y, when present,
// has one FaultClass per row of X.
struct DomainDataset {
  Eigen::MatrixXd X;  // n x d, one feature vector per row
  std::optional<std::vector<FaultClass>> y;
  OperatingCondition condition;
};

/// Assembles a domain of 4*samples_per_class rows (classes in NO, IF, OF,
/// BF order) from the corpus recordings matching (condition, fault size).
/// Windows are taken in (recording order, window index) order. NO-class
/// recordings match any requested size.
DomainDataset build_domain(const RawCorpus& corpus,
                           const OperatingCondition& condition,
                           double fault_size_in, int window_len, int hop,
                           int samples_per_class, bool labeled);

}  // namespace tfdiag::ingest

#endif  // TFDIAG_INGEST_HPP_
