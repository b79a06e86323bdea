#ifndef TFDIAG_DOMAIN_HPP_
#define TFDIAG_DOMAIN_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace tfdiag {

// One motor load/speed setting. Ids (e.g. "L0") must be unique within an
// experiment; speed_rpm must be positive.
struct OperatingCondition {
  std::string id;
  double load_hp = 0.0;
  double speed_rpm = 0.0;

  void validate() const;
};

enum class FaultClass : int { NO = 0, IF = 1, OF = 2, BF = 3 };

inline constexpr int kNumFaultClasses = 4;

inline constexpr std::array<FaultClass, kNumFaultClasses> kAllFaultClasses = {
    FaultClass::NO, FaultClass::IF, FaultClass::OF, FaultClass::BF};

std::string_view to_string(FaultClass c);
FaultClass fault_class_from_string(std::string_view s);

// A fault class plus defect size in inches. size_in is 0 exactly when the
// class is NO.
struct FaultSpec {
  FaultClass cls = FaultClass::NO;
  double size_in = 0.0;

  void validate() const;
};

// Default analysis window: 4096-sample windows give 2049 one-sided FFT
// amplitude coefficients.
inline constexpr int kDefaultWindowLen = 4096;
inline constexpr int kDefaultHop = kDefaultWindowLen / 2;

// Deterministic per-recording seed, mixed from the master seed, the
// condition id and the fault spec.
std::uint64_t derive_seed(std::uint64_t master, std::string_view condition_id,
                          FaultClass cls, double size_in);

}  // namespace tfdiag

#endif  // TFDIAG_DOMAIN_HPP_
