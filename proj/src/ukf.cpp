#include "wtdelay/ukf.hpp"

#include "wtdelay/csv.hpp"

#include <cmath>
#include <sstream>

namespace wtdelay {

void UkfConfig::validate() const {
    if (!(gamma > 0.0)) throw std::invalid_argument("ukf gamma must be positive");
    if (!(kappa >= 0.0)) throw std::invalid_argument("ukf kappa must be >= 0");
    if (!(n + lambda() > 0.0)) throw std::invalid_argument("ukf needs n + lambda > 0");
    if (!(q_diag.array() > 0.0).all()) throw std::invalid_argument("process noise variances must be positive");
    if (!(p0_diag.array() > 0.0).all()) throw std::invalid_argument("initial covariance must be positive");
    if (r_diag && !(r_diag->array() > 0.0).all()) {
        throw std::invalid_argument("measurement noise variances must be positive");
    }
    if (!(r_inflation > 0.0) || !(r_floor > 0.0)) throw std::invalid_argument("R scaling must be positive");
    if (!(trace_bound > 0.0)) throw std::invalid_argument("trace bound must be positive");
}

namespace {

Matrix6 symmetrize(const Matrix6& p) { return 0.5 * (p + p.transpose()); }

struct SquareRoot {
    Matrix6 s;
    double jitter;
};

SquareRoot covariance_sqrt(const Matrix6& a) {
    Eigen::LLT<Matrix6> llt(a);
    if (llt.info() == Eigen::Success) return {llt.matrixL(), 0.0};

    // Semidefinite matrices (including P = 0) factor through LDL^T.
    Eigen::LDLT<Matrix6> ldlt(a);
    if (ldlt.info() == Eigen::Success) {
        const Vector6 d = ldlt.vectorD();
        const double tol = 1e-10 * std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
        if ((d.array() >= -tol).all()) {
            Matrix6 l = ldlt.matrixL();
            const Matrix6 s = ldlt.transpositionsP().transpose() * l * d.cwiseMax(0.0).cwiseSqrt().asDiagonal();
            if ((s * s.transpose() - a).cwiseAbs().maxCoeff() <= tol) return {s, 0.0};
        }
    }

    for (double jitter = 1e-12; jitter <= 1e-6 * (1.0 + 1e-9); jitter *= 10.0) {
        Eigen::LLT<Matrix6> j(a + jitter * Matrix6::Identity());
        if (j.info() == Eigen::Success) return {j.matrixL(), jitter};
    }
    std::ostringstream msg;
    msg << "covariance not factorizable after jitter up to 1e-6 (min diagonal " << a.diagonal().minCoeff() << ")";
    throw FilterDivergence(msg.str());
}

}  // namespace

SigmaSet sigma_points(const UkfBelief& belief, const UkfConfig& c) {
    constexpr int n = UkfConfig::n;
    const double lambda = c.lambda();
    const SquareRoot root = covariance_sqrt(symmetrize(belief.p));
    const Matrix6 s = std::sqrt(n + lambda) * root.s;

    SigmaSet out;
    out.jitter = root.jitter;
    out.points[0] = belief.x;
    out.wm[0] = lambda / (n + lambda);
    out.wc[0] = out.wm[0] + (1.0 - c.gamma * c.gamma + c.beta);
    for (int i = 0; i < n; ++i) {
        out.points[1 + i] = belief.x + s.col(i);
        out.points[1 + n + i] = belief.x - s.col(i);
        out.wm[1 + i] = out.wm[1 + n + i] = 1.0 / (2.0 * (n + lambda));
        out.wc[1 + i] = out.wc[1 + n + i] = out.wm[1 + i];
    }
    return out;
}

namespace {

// Weighted mean written as an offset from the central point, so the large
// negative central weight does not cancel against the others.
template <class V>
V weighted_mean(const std::array<V, 13>& y, const std::array<double, 13>& wm) {
    V acc = V::Zero();
    for (int i = 1; i < 13; ++i) acc += wm[i] * (y[i] - y[0]);
    return y[0] + acc;
}

}  // namespace

UkfStepResult ukf_step(const UkfBelief& belief, const TransitionFn& f, const MeasurementFn& h, const Vector2& z,
                       const Matrix6& q, const Matrix2& r, const UkfConfig& c) {
    // Prediction.
    const SigmaSet prior = sigma_points(belief, c);
    std::array<Vector6, 13> fx;
    for (int i = 0; i < 13; ++i) fx[i] = f(prior.points[i]);
    const Vector6 x_pred = weighted_mean(fx, prior.wm);
    Matrix6 p_pred = q;
    for (int i = 0; i < 13; ++i) {
        const Vector6 dx = fx[i] - x_pred;
        p_pred += prior.wc[i] * dx * dx.transpose();
    }
    p_pred = symmetrize(p_pred);

    // Measurement update.
    const SigmaSet pred = sigma_points({x_pred, p_pred}, c);
    std::array<Vector2, 13> hz;
    for (int i = 0; i < 13; ++i) hz[i] = h(pred.points[i]);
    const Vector2 z_pred = weighted_mean(hz, pred.wm);
    Matrix2 p_z = r;
    Eigen::Matrix<double, 6, 2> p_xz = Eigen::Matrix<double, 6, 2>::Zero();
    for (int i = 0; i < 13; ++i) {
        const Vector2 dz = hz[i] - z_pred;
        p_z += pred.wc[i] * dz * dz.transpose();
        p_xz += pred.wc[i] * (pred.points[i] - x_pred) * dz.transpose();
    }
    p_z = 0.5 * (p_z + p_z.transpose());

    UkfStepResult out;
    const double scale = std::max(p_z.trace(), 1e-300);
    if (!(p_z.determinant() > 1e-14 * scale * scale)) {
        p_z += 1e-12 * std::max(scale, 1.0) * Matrix2::Identity();
        out.innovation.regularized = true;
    }
    const Eigen::Matrix<double, 6, 2> k = p_xz * p_z.inverse();
    out.innovation.nu = z - z_pred;
    out.innovation.p_z = p_z;
    out.belief.x = x_pred + k * out.innovation.nu;
    out.belief.p = symmetrize(p_pred - k * p_z * k.transpose());
    out.innovation.trace_p = out.belief.p.trace();

    if (!out.belief.x.allFinite() || !(out.innovation.trace_p <= c.trace_bound)) {
        std::ostringstream msg;
        msg << "filter diverged: trace(P) = " << out.innovation.trace_p << " (bound " << c.trace_bound << ")";
        throw FilterDivergence(msg.str());
    }
    return out;
}

InputVector input_from_sample(const PhasorSample& s) {
    return {s.theta, s.v.real(), s.v.imag(), s.i.real(), s.i.imag()};
}

Matrix2 measurement_covariance(const UkfConfig& c, double tve_v, double v_mag) {
    if (c.r_diag) return c.r_diag->asDiagonal();
    const double var = std::max(c.r_inflation * 0.5 * (tve_v * v_mag) * (tve_v * v_mag), c.r_floor);
    return var * Matrix2::Identity();
}

std::vector<DseRecord> run_dse(const std::vector<PhasorSample>& stream, const UkfConfig& c, const DseModel& m) {
    c.validate();
    if (stream.size() < 2) throw std::invalid_argument("DSE needs at least two samples");
    const double dt = stream[1].t - stream[0].t;
    if (!(dt > 0.0)) throw std::invalid_argument("DSE stream must have increasing timestamps");
    for (std::size_t k = 2; k < stream.size(); ++k) {
        if (std::abs((stream[k].t - stream[k - 1].t) - dt) > 1e-6 * dt) {
            throw std::invalid_argument("DSE stream must be uniformly sampled");
        }
    }

    const Matrix6 q = c.q_diag.asDiagonal();
    std::vector<DseRecord> out;
    out.reserve(stream.size());

    InputVector u_prev = input_from_sample(stream[0]);
    UkfBelief belief;
    belief.x = (c.x0 ? *c.x0 : steady_state_backsolve(u_prev, m.gains)).to_vector();
    belief.p = c.p0_diag.asDiagonal();

    const auto h_for = [&](const InputVector& u) {
        return [&m, u](const Vector6& x) {
            const DqPair v = h_s(ReducedState::from_vector(x), u, m.gains);
            return Vector2(v.q, v.d);
        };
    };

    for (std::size_t k = 0; k < stream.size(); ++k) {
        const InputVector u_now = input_from_sample(stream[k]);
        const Vector2 z(u_now.v_gq, u_now.v_gd);
        const Matrix2 r = measurement_covariance(c, m.tve_v, z.norm());
        UkfStepResult step;
        if (k == 0) {
            // No transition before the first sample.
            step = ukf_step(belief, [](const Vector6& x) { return x; }, h_for(u_now), z, Matrix6::Zero(), r, c);
        } else {
            const TransitionFn f = [&m, u_prev, dt](const Vector6& x) {
                return f_s(ReducedState::from_vector(x), u_prev, dt, m.ctrl, m.gains).to_vector();
            };
            step = ukf_step(belief, f, h_for(u_now), z, q, r, c);
        }
        belief = step.belief;
        out.push_back({stream[k].t, ReducedState::from_vector(belief.x), step.innovation});
        u_prev = u_now;
    }
    return out;
}

void write_estimate_csv(const std::vector<DseRecord>& records, std::ostream& os) {
    csv::Writer w(os);
    std::vector<std::string> header{"t"};
    for (auto n : ReducedState::names()) header.emplace_back(n);
    for (const char* n : {"nu_q", "nu_d", "trace_p"}) header.emplace_back(n);
    w.header(header);
    for (const auto& r : records) {
        w.field(r.t);
        const Vector6 x = r.x.to_vector();
        for (int i = 0; i < 6; ++i) w.field(x[i]);
        w.field(r.innovation.nu[0]).field(r.innovation.nu[1]).field(r.innovation.trace_p);
        w.end_row();
    }
}

}  // namespace wtdelay
