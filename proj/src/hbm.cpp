#include "nltva/hbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nltva {

HarmonicBalance::HarmonicBalance(const SystemParams& params, int harmonics, int time_samples)
    : params_(params), nh_(harmonics), nt_(time_samples), nc_(2 * harmonics + 1) {
    params_.validate();
    if (nh_ < 1) throw std::invalid_argument("HarmonicBalance: need at least one harmonic");
    if (nt_ < 4 * nh_ + 1)
        throw std::invalid_argument(
            "HarmonicBalance: time_samples must be >= 4*harmonics+1 to avoid aliasing of the cubic force");
    lin_ = linear_matrices(params_);

    synth_.resize(nt_, nc_);
    project_.resize(nc_, nt_);
    for (int j = 0; j < nt_; ++j) {
        const double th = 2.0 * M_PI * j / nt_;
        synth_(j, 0) = 1.0;
        project_(0, j) = 1.0 / nt_;
        for (int k = 1; k <= nh_; ++k) {
            synth_(j, 2 * k - 1) = std::cos(k * th);
            synth_(j, 2 * k) = std::sin(k * th);
            project_(2 * k - 1, j) = 2.0 * std::cos(k * th) / nt_;
            project_(2 * k, j) = 2.0 * std::sin(k * th) / nt_;
        }
    }
}

Eigen::MatrixXd HarmonicBalance::dynamic_stiffness(double omega) const {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(size(), size());
    for (int d = 0; d < 2; ++d)
        for (int e = 0; e < 2; ++e) {
            const double M = lin_.mass(d, e), C = lin_.damping(d, e), K = lin_.stiffness(d, e);
            A(index(d, 0), index(e, 0)) = K;
            for (int k = 1; k <= nh_; ++k) {
                const double kw = k * omega;
                A(index(d, 2 * k - 1), index(e, 2 * k - 1)) = K - kw * kw * M;
                A(index(d, 2 * k - 1), index(e, 2 * k)) = kw * C;
                A(index(d, 2 * k), index(e, 2 * k - 1)) = -kw * C;
                A(index(d, 2 * k), index(e, 2 * k)) = K - kw * kw * M;
            }
        }
    return A;
}

void HarmonicBalance::nonlinear_forces(const Eigen::VectorXd& coeffs, Eigen::ArrayXd& g1,
                                       Eigen::ArrayXd& g2) const {
    const Eigen::ArrayXd x1 = (synth_ * coeffs.head(nc_)).array();
    const Eigen::ArrayXd x2 = (synth_ * coeffs.tail(nc_)).array();
    const Eigen::ArrayXd r = x1 - x2;
    const Eigen::ArrayXd r3 = r.cube();
    g1 = params_.knl1 * x1.cube() + params_.knl2 * r3;
    g2 = -params_.knl2 * r3;
}

Eigen::VectorXd HarmonicBalance::residual(const Eigen::VectorXd& coeffs, double omega,
                                          double force) const {
    Eigen::ArrayXd g1, g2;
    nonlinear_forces(coeffs, g1, g2);
    Eigen::VectorXd r = dynamic_stiffness(omega) * coeffs;
    r.head(nc_) += project_ * g1.matrix();
    r.tail(nc_) += project_ * g2.matrix();
    r(index(0, 1)) -= force;
    return r;
}

Eigen::MatrixXd HarmonicBalance::jacobian_coeffs(const Eigen::VectorXd& coeffs,
                                                 double omega) const {
    const Eigen::ArrayXd x1 = (synth_ * coeffs.head(nc_)).array();
    const Eigen::ArrayXd x2 = (synth_ * coeffs.tail(nc_)).array();
    const Eigen::ArrayXd r = x1 - x2;
    // time-varying stiffness of the cubic forces
    const Eigen::ArrayXd w_rel = 3.0 * params_.knl2 * r.square();
    const Eigen::ArrayXd w11 = 3.0 * params_.knl1 * x1.square() + w_rel;

    Eigen::MatrixXd J = dynamic_stiffness(omega);
    const Eigen::MatrixXd b11 = project_ * w11.matrix().asDiagonal() * synth_;
    const Eigen::MatrixXd brel = project_ * w_rel.matrix().asDiagonal() * synth_;
    J.topLeftCorner(nc_, nc_) += b11;
    J.topRightCorner(nc_, nc_) -= brel;
    J.bottomLeftCorner(nc_, nc_) -= brel;
    J.bottomRightCorner(nc_, nc_) += brel;
    return J;
}

HarmonicBalance::Derivatives HarmonicBalance::jacobian(const Eigen::VectorXd& coeffs,
                                                       double omega, double force) const {
    (void)force;  // forcing enters linearly; d/dF is constant
    Derivatives d;
    d.coeffs = jacobian_coeffs(coeffs, omega);
    d.omega = stiffness_omega_derivative(coeffs, omega);
    d.force = Eigen::VectorXd::Zero(size());
    d.force(index(0, 1)) = -1.0;
    return d;
}

Eigen::VectorXd HarmonicBalance::stiffness_omega_derivative(const Eigen::VectorXd& v,
                                                            double omega) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
    for (int d = 0; d < 2; ++d)
        for (int e = 0; e < 2; ++e) {
            const double M = lin_.mass(d, e), C = lin_.damping(d, e);
            for (int k = 1; k <= nh_; ++k) {
                out(index(d, 2 * k - 1)) += -2.0 * k * k * omega * M * v(index(e, 2 * k - 1)) +
                                            k * C * v(index(e, 2 * k));
                out(index(d, 2 * k)) += -k * C * v(index(e, 2 * k - 1)) -
                                        2.0 * k * k * omega * M * v(index(e, 2 * k));
            }
        }
    return out;
}

Eigen::MatrixXd HarmonicBalance::hessian_product(const Eigen::VectorXd& coeffs,
                                                 const Eigen::VectorXd& dir) const {
    const Eigen::ArrayXd x1 = (synth_ * coeffs.head(nc_)).array();
    const Eigen::ArrayXd x2 = (synth_ * coeffs.tail(nc_)).array();
    const Eigen::ArrayXd p1 = (synth_ * dir.head(nc_)).array();
    const Eigen::ArrayXd p2 = (synth_ * dir.tail(nc_)).array();
    const Eigen::ArrayXd r = x1 - x2;
    const Eigen::ArrayXd pr = p1 - p2;
    const Eigen::ArrayXd u_rel = 6.0 * params_.knl2 * r * pr;
    const Eigen::ArrayXd u11 = 6.0 * params_.knl1 * x1 * p1 + u_rel;

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(size(), size());
    const Eigen::MatrixXd b11 = project_ * u11.matrix().asDiagonal() * synth_;
    const Eigen::MatrixXd brel = project_ * u_rel.matrix().asDiagonal() * synth_;
    H.topLeftCorner(nc_, nc_) += b11;
    H.topRightCorner(nc_, nc_) -= brel;
    H.bottomLeftCorner(nc_, nc_) -= brel;
    H.bottomRightCorner(nc_, nc_) += brel;
    return H;
}

HarmonicBalance::HillMatrices HarmonicBalance::hill_matrices(const Eigen::VectorXd& coeffs,
                                                             double omega) const {
    HillMatrices h;
    h.stiffness = jacobian_coeffs(coeffs, omega);
    h.damping = Eigen::MatrixXd::Zero(size(), size());
    h.mass = Eigen::MatrixXd::Zero(size(), size());
    for (int d = 0; d < 2; ++d)
        for (int e = 0; e < 2; ++e) {
            const double M = lin_.mass(d, e), C = lin_.damping(d, e);
            h.damping(index(d, 0), index(e, 0)) = C;
            h.mass(index(d, 0), index(e, 0)) = M;
            for (int k = 1; k <= nh_; ++k) {
                h.damping(index(d, 2 * k - 1), index(e, 2 * k - 1)) = C;
                h.damping(index(d, 2 * k), index(e, 2 * k)) = C;
                h.damping(index(d, 2 * k - 1), index(e, 2 * k)) = 2.0 * k * omega * M;
                h.damping(index(d, 2 * k), index(e, 2 * k - 1)) = -2.0 * k * omega * M;
                h.mass(index(d, 2 * k - 1), index(e, 2 * k - 1)) = M;
                h.mass(index(d, 2 * k), index(e, 2 * k)) = M;
            }
        }
    return h;
}

Eigen::VectorXd HarmonicBalance::hill_damping_omega_derivative(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
    for (int d = 0; d < 2; ++d)
        for (int e = 0; e < 2; ++e) {
            const double M = lin_.mass(d, e);
            for (int k = 1; k <= nh_; ++k) {
                out(index(d, 2 * k - 1)) += 2.0 * k * M * v(index(e, 2 * k));
                out(index(d, 2 * k)) += -2.0 * k * M * v(index(e, 2 * k - 1));
            }
        }
    return out;
}

HarmonicBalance::HillResult HarmonicBalance::hill_exponents(const Eigen::VectorXd& coeffs,
                                                            double omega) const {
    const HillMatrices h = hill_matrices(coeffs, omega);
    const int n = size();
    // companion linearization of the quadratic pencil
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    A.topRightCorner(n, n).setIdentity();
    const Eigen::PartialPivLU<Eigen::MatrixXd> mlu(h.mass);
    A.bottomLeftCorner(n, n) = -mlu.solve(h.stiffness);
    A.bottomRightCorner(n, n) = -mlu.solve(h.damping);

    Eigen::EigenSolver<Eigen::MatrixXd> es(A, true);
    if (es.info() != Eigen::Success) {
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
        const double cond = svd.singularValues()(0) /
                            std::max(svd.singularValues().tail(1)(0), 1e-300);
        throw EigenSolverError("hill_exponents: eigen solver failed, companion condition ~" +
                               std::to_string(cond));
    }

    HillResult out;
    out.raw.resize(2 * n);
    std::vector<double> conc(2 * n);
    for (int i = 0; i < 2 * n; ++i) {
        out.raw[i] = es.eigenvalues()(i);
        // concentration of the displacement part on the constant-term block
        const auto s = es.eigenvectors().col(i).head(n);
        const double num = std::norm(s(index(0, 0))) + std::norm(s(index(1, 0)));
        conc[i] = num / std::max(s.squaredNorm(), 1e-300);
    }
    std::vector<int> order(2 * n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return conc[a] > conc[b]; });

    // every Floquet exponent appears shifted by i k omega; two candidates with
    // equal real part whose imaginary parts differ by a nonzero multiple of
    // omega are copies of one exponent (equality up to the truncation error)
    auto is_copy = [omega](std::complex<double> a, std::complex<double> b) {
        if (std::abs(a.real() - b.real()) > 1e-6 + 1e-4 * std::abs(a.real())) return false;
        const double di = a.imag() - b.imag();
        return std::abs(di) > 0.25 * omega && std::abs(std::remainder(di, omega)) < 1e-4 * omega;
    };
    int filled = 0;
    for (const int idx : order) {
        if (filled == 4) break;
        bool dup = false;
        for (int j = 0; j < filled; ++j)
            if (is_copy(out.raw[idx], out.exponents[j])) dup = true;
        if (dup) continue;
        out.exponents[filled++] = out.raw[idx];
    }
    for (int i = 0; filled < 4 && i < 2 * n; ++i) out.exponents[filled++] = out.raw[order[i]];

    out.max_real = -std::numeric_limits<double>::infinity();
    for (const auto& e : out.exponents) out.max_real = std::max(out.max_real, e.real());
    out.stable = out.max_real <= stability_tolerance();
    return out;
}

Eigen::ArrayXd HarmonicBalance::sample(const Eigen::VectorXd& coeffs, int dof,
                                       int n_samples) const {
    Eigen::ArrayXd x(n_samples);
    const auto z = coeffs.segment(dof * nc_, nc_);
    for (int j = 0; j < n_samples; ++j) {
        const double th = 2.0 * M_PI * j / n_samples;
        double v = z(0);
        for (int k = 1; k <= nh_; ++k)
            v += z(2 * k - 1) * std::cos(k * th) + z(2 * k) * std::sin(k * th);
        x(j) = v;
    }
    return x;
}

double HarmonicBalance::amplitude(const Eigen::VectorXd& coeffs, int dof, int n_samples) const {
    return sample(coeffs, dof, n_samples).abs().maxCoeff();
}

State HarmonicBalance::state_at_phase_zero(const Eigen::VectorXd& coeffs, double omega) const {
    double x[2], v[2];
    for (int d = 0; d < 2; ++d) {
        const auto z = coeffs.segment(d * nc_, nc_);
        x[d] = z(0);
        v[d] = 0.0;
        for (int k = 1; k <= nh_; ++k) {
            x[d] += z(2 * k - 1);
            v[d] += k * omega * z(2 * k);
        }
    }
    return {x[0], v[0], x[1], v[1]};
}

Eigen::VectorXd HarmonicBalance::linear_receptance_coeffs(double omega, double force) const {
    using cplx = std::complex<double>;
    Eigen::Matrix2cd Z = lin_.stiffness.cast<cplx>() + cplx(0.0, omega) * lin_.damping.cast<cplx>() -
                         omega * omega * lin_.mass.cast<cplx>();
    Eigen::Vector2cd rhs(force, 0.0);
    Eigen::Vector2cd X = Z.partialPivLu().solve(rhs);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(size());
    for (int d = 0; d < 2; ++d) {
        z(index(d, 1)) = X(d).real();
        z(index(d, 2)) = -X(d).imag();
    }
    return z;
}

}  // namespace nltva
