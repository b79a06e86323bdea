#ifndef TFDIAG_SIGNAL_HPP_
#define TFDIAG_SIGNAL_HPP_

#include <filesystem>
#include <vector>

#include "tfdiag/domain.hpp"
#include "tfdiag/ingest.hpp"

namespace tfdiag::signal {

// Rolling-element geometry for the kinematic frequency formulas.
// ball_diam_ratio is d/D (ball diameter over pitch diameter).
struct BearingGeometry {
  int n_balls = 9;
  double ball_diam_ratio = 0.2;
  double contact_angle_rad = 0.0;

  void validate() const;
};

struct CharacteristicFreqs {
  double shaft_hz = 0.0;
  double bpfo_hz = 0.0;
  double bpfi_hz = 0.0;
  double bsf_hz = 0.0;
};

/// Standard bearing kinematics with r = d/D and f_r = rpm/60:
///   BPFO = (N/2) f_r (1 - r cos phi)
///   BPFI = (N/2) f_r (1 + r cos phi)
///   BSF  = (f_r / 2r) (1 - (r cos phi)^2)
CharacteristicFreqs characteristic_frequencies(const BearingGeometry& geometry,
                                               double speed_rpm);

// Generator parameters. noise_std is relative to a unit impulse amplitude;
// the effective noise floor additionally scales with motor load, the same
// way impulse amplitudes do.
struct SynthParams {
  BearingGeometry geometry;
  double resonance_hz = 3000.0;
  double decay_rate = 900.0;  // 1/s
  double noise_std = 0.35;
  double sample_rate_hz = 12000.0;
  double duration_s = 34.5;
  std::uint64_t seed = 42;

  void validate() const;
};

/// Defective-bearing vibration model: periodic unit impulses at the fault's
/// characteristic frequency (OF -> BPFO, IF -> BPFI, BF -> 2*BSF), each an
/// exponentially decaying sinusoid at resonance_hz, with impulse amplitude
/// (1 + size_in/0.007)*(1 + 0.1*load_hp), plus a shaft-frequency sinusoid
/// and additive Gaussian noise. Class NO has no impulse train.
/// Deterministic: the RNG seed mixes params.seed with (condition, fault).
ingest::TimeSeries synth_signal(const OperatingCondition& cond,
                                const FaultSpec& fault,
                                const SynthParams& params);

/// One recording per (condition, fault) pair, each long enough to yield
/// samples_per_class analysis windows at the default window/hop.
ingest::RawCorpus synth_dataset(const std::vector<OperatingCondition>& conds,
                                const std::vector<FaultSpec>& faults,
                                int samples_per_class,
                                const SynthParams& params);

/// Writes every recording to out_dir in the given sample format and emits
/// manifest.json mapping each file to its (condition, fault). Returns the
/// manifest path.
std::filesystem::path write_corpus(const ingest::RawCorpus& corpus,
                                   const std::filesystem::path& out_dir,
                                   ingest::SampleFormat format);

}  // namespace tfdiag::signal

#endif  // TFDIAG_SIGNAL_HPP_
