#pragma once

// PMU model: truth phasors at the reporting rate corrupted by circular
// complex Gaussian noise scaled to an RMS total vector error.

#include "wtdelay/model_core.hpp"
#include "wtdelay/sim_engine.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

namespace wtdelay {

struct PhasorSample {
    double t = 0.0;
    Complex v;
    Complex i;
    double theta = 0.0;
};

struct NoiseModel {
    double tve_v = 0.01;
    double tve_i = 0.01;
    std::uint64_t seed = 0;
    /// Magnitude used to scale the noise of an exactly zero phasor.
    double floor_magnitude = 1e-6;

    void validate() const;
};

/// Standard normal draws from std::mt19937_64 through the Box-Muller
/// transform. Both pieces are fully specified, so a seed yields the same
/// stream on every platform (std::normal_distribution does not).
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

    double next();

private:
    double uniform_open();

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// x + n with n circular Gaussian, per-axis sigma = tve |x| / sqrt(2).
Complex apply_tve_noise(Complex x, double tve, double floor_magnitude, GaussianSource& rng);

std::vector<PhasorSample> sample_pmu(const TruthLog& log, const NoiseModel& model);

/// t, v_re, v_im, i_re, i_im, theta
void write_pmu_csv(const std::vector<PhasorSample>& stream, std::ostream& os);

}  // namespace wtdelay
