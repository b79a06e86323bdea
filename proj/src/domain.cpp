#include "tfdiag/domain.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace tfdiag {

void OperatingCondition::validate() const {
  if (id.empty()) {
    throw std::invalid_argument("OperatingCondition: id must be nonempty");
  }
  if (!(speed_rpm > 0.0)) {
    throw std::invalid_argument("OperatingCondition '" + id +
                                "': speed_rpm must be > 0");
  }
  if (load_hp < 0.0) {
    throw std::invalid_argument("OperatingCondition '" + id +
                                "': load_hp must be >= 0");
  }
}

std::string_view to_string(FaultClass c) {
  switch (c) {
    case FaultClass::NO: return "NO";
    case FaultClass::IF: return "IF";
    case FaultClass::OF: return "OF";
    case FaultClass::BF: return "BF";
  }
  throw std::invalid_argument("unknown FaultClass value");
}

FaultClass fault_class_from_string(std::string_view s) {
  if (s == "NO") return FaultClass::NO;
  if (s == "IF") return FaultClass::IF;
  if (s == "OF") return FaultClass::OF;
  if (s == "BF") return FaultClass::BF;
  throw std::invalid_argument("unknown fault class '" + std::string(s) +
                              "', expected one of NO, IF, OF, BF");
}

void FaultSpec::validate() const {
  if (size_in < 0.0) {
    throw std::invalid_argument("FaultSpec: size_in must be >= 0");
  }
  const bool zero = size_in == 0.0;
  if (zero != (cls == FaultClass::NO)) {
    throw std::invalid_argument(
        "FaultSpec: size_in must be 0 exactly for class NO (got size " +
        std::to_string(size_in) + " for class " + std::string(to_string(cls)) +
        ")");
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view condition_id,
                          FaultClass cls, double size_in) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ splitmix64(master);
  h = fnv1a(condition_id, h);
  h = splitmix64(h ^ static_cast<std::uint64_t>(cls));
  h = splitmix64(h ^ std::bit_cast<std::uint64_t>(size_in));
  return h;
}

}  // namespace tfdiag
