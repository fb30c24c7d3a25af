#include "wtdelay/pmu_sensor.hpp"

#include "wtdelay/csv.hpp"

#include <cmath>
#include <stdexcept>

namespace wtdelay {

void NoiseModel::validate() const {
    if (!(tve_v >= 0.0) || !(tve_i >= 0.0)) throw std::invalid_argument("TVE levels must be >= 0");
    if (!(floor_magnitude > 0.0)) throw std::invalid_argument("noise floor magnitude must be positive");
}

double GaussianSource::uniform_open() {
    // 53 random bits mapped to (0, 1).
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double GaussianSource::next() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

Complex apply_tve_noise(Complex x, double tve, double floor_magnitude, GaussianSource& rng) {
    if (tve == 0.0) return x;
    const double mag = std::abs(x) > 0.0 ? std::abs(x) : floor_magnitude;
    const double sigma = tve * mag / std::sqrt(2.0);
    const double nq = rng.next();
    const double nd = rng.next();
    return x + Complex(sigma * nq, sigma * nd);
}

std::vector<PhasorSample> sample_pmu(const TruthLog& log, const NoiseModel& model) {
    model.validate();
    if (log.size() == 0) throw std::invalid_argument("cannot sample an empty truth log");
    GaussianSource rng(model.seed);
    std::vector<PhasorSample> out;
    out.reserve(log.size());
    for (std::size_t k = 0; k < log.size(); ++k) {
        PhasorSample s;
        s.t = log.times[k];
        s.v = apply_tve_noise(log.pcc_v[k].as_complex(), model.tve_v, model.floor_magnitude, rng);
        s.i = apply_tve_noise(log.pcc_i[k].as_complex(), model.tve_i, model.floor_magnitude, rng);
        s.theta = std::arg(s.v);
        out.push_back(s);
    }
    return out;
}

void write_pmu_csv(const std::vector<PhasorSample>& stream, std::ostream& os) {
    csv::Writer w(os);
    w.header({"t", "v_re", "v_im", "i_re", "i_im", "theta"});
    for (const auto& s : stream) {
        w.field(s.t).field(s.v.real()).field(s.v.imag()).field(s.i.real()).field(s.i.imag()).field(s.theta);
        w.end_row();
    }
}

}  // namespace wtdelay
