#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgsim {

// System base: 0.4 kV / 100 kVA. All electrical math runs in per-unit on
// this base; external quantities stay in kW / kvar / kWh.
constexpr double kBasePowerKva = 100.0;
constexpr double kBaseVoltageKv = 0.4;
constexpr double kNominalFrequencyHz = 50.0;

inline double kw_to_pu(double kw) { return kw / kBasePowerKva; }
inline double pu_to_kw(double pu) { return pu * kBasePowerKva; }

class SimError : public std::runtime_error {
public:
    explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

// Island has no voltage source at all (no substation, no grid-forming unit).
class IslandDeadError : public SimError {
public:
    explicit IslandDeadError(const std::string& what) : SimError(what) {}
};

// Deterministic stream RNG. std::mt19937 would also be deterministic, but a
// self-contained splitmix keeps replay oracles in the tests trivially exact.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() { return (next_u64() >> 11) * (1.0 / 9007199254740992.0); }

    // uniform integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) { return n ? next_u64() % n : 0; }

private:
    std::uint64_t state_;
};

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Named sub-stream of the scenario seed. Adding a stream never perturbs
// the draws of any other stream.
inline SplitMix64 named_stream(std::uint64_t seed, const std::string& name) {
    return SplitMix64(seed ^ fnv1a(name));
}

// Piecewise-linear interpolation over (x, y) breakpoints, clamped at the ends.
double interp_clamped(const std::vector<std::pair<double, double>>& points, double x);

}  // namespace dgsim
