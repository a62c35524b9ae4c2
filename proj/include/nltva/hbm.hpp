// Multi-harmonic balance discretization of the coupled oscillator: Fourier
// residual with alternating frequency/time evaluation of the cubic forces,
// analytic Jacobians, and Hill-method Floquet stability.
#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "nltva/model.hpp"

namespace nltva {

/// One converged periodic solution at fixed (omega, force).
struct HarmonicSolution {
    Eigen::VectorXd coeffs;  ///< Fourier coefficients, layout per HarmonicBalance
    double omega = 0.0;
    double force = 0.0;
    int harmonics = 0;
    std::array<std::complex<double>, 4> floquet{};  ///< filtered Floquet exponents
    bool stable = false;
};

/// Raised when the Hill eigenvalue solver fails; carries a condition
/// estimate of the offending matrix in the message.
struct EigenSolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class HarmonicBalance {
public:
    /// time_samples must be at least 4*harmonics+1 so the cubic force does
    /// not alias back onto the retained harmonics.
    HarmonicBalance(const SystemParams& params, int harmonics = 5, int time_samples = 128);

    const SystemParams& params() const { return params_; }
    int harmonics() const { return nh_; }
    int time_samples() const { return nt_; }
    int coeffs_per_dof() const { return nc_; }
    int size() const { return 2 * nc_; }  ///< total unknowns

    /// Index of coefficient c of DOF d in the stacked vector. c = 0 is the
    /// constant term, c = 2k-1 / 2k the cos/sin pair of harmonic k.
    int index(int dof, int c) const { return dof * nc_ + c; }

    /// Harmonic-balance residual of the equations of motion. Linear terms
    /// are assembled spectrally, cubic forces through the time domain.
    Eigen::VectorXd residual(const Eigen::VectorXd& coeffs, double omega, double force) const;

    struct Derivatives {
        Eigen::MatrixXd coeffs;  ///< d residual / d coeffs
        Eigen::VectorXd omega;   ///< d residual / d omega
        Eigen::VectorXd force;   ///< d residual / d force
    };
    Derivatives jacobian(const Eigen::VectorXd& coeffs, double omega, double force) const;

    /// d residual / d coeffs only (cheaper when omega/force blocks are unused).
    Eigen::MatrixXd jacobian_coeffs(const Eigen::VectorXd& coeffs, double omega) const;

    /// Directional second derivative d(J(z) dir)/dz, needed by the bordered
    /// systems of the bifurcation-tracking module.
    Eigen::MatrixXd hessian_product(const Eigen::VectorXd& coeffs,
                                    const Eigen::VectorXd& dir) const;

    /// d(A(omega) v)/d omega for the spectral (linear) part; the AFT part of
    /// the Jacobian does not depend on omega.
    Eigen::VectorXd stiffness_omega_derivative(const Eigen::VectorXd& v, double omega) const;

    /// Matrices of the Hill quadratic eigenvalue problem
    /// (stiffness + lambda damping + lambda^2 mass) s = 0.
    struct HillMatrices {
        Eigen::MatrixXd stiffness;  ///< equals the harmonic-balance Jacobian
        Eigen::MatrixXd damping;
        Eigen::MatrixXd mass;
    };
    HillMatrices hill_matrices(const Eigen::VectorXd& coeffs, double omega) const;

    /// d(hill damping)/d omega contracted with a vector.
    Eigen::VectorXd hill_damping_omega_derivative(const Eigen::VectorXd& v) const;

    struct HillResult {
        std::vector<std::complex<double>> raw;             ///< all 4*(2NH+1) eigenvalues
        std::array<std::complex<double>, 4> exponents{};   ///< filtered Floquet exponents
        double max_real = 0.0;                             ///< over filtered exponents
        bool stable = false;
    };
    /// Solves the Hill problem and filters the 4 exponents whose
    /// eigenvectors concentrate on the zeroth-harmonic block.
    HillResult hill_exponents(const Eigen::VectorXd& coeffs, double omega) const;

    /// Stability threshold on Re(exponent), scaled by the primary natural
    /// frequency to absorb eigenvalue noise at bifurcations.
    double stability_tolerance() const { return 1e-6 * params_.natural_frequency(); }

    /// Inverse Fourier evaluation of one DOF over a period.
    Eigen::ArrayXd sample(const Eigen::VectorXd& coeffs, int dof, int n_samples) const;

    /// max |x_dof(t)| over the period.
    double amplitude(const Eigen::VectorXd& coeffs, int dof = 0, int n_samples = 1024) const;

    /// Physical state (x1, v1, x2, v2) at forcing phase zero.
    State state_at_phase_zero(const Eigen::VectorXd& coeffs, double omega) const;

    /// Closed-form solution of the underlying linear system (cubic terms
    /// ignored), used for low-amplitude initial guesses and as test oracle.
    Eigen::VectorXd linear_receptance_coeffs(double omega, double force) const;

private:
    SystemParams params_;
    int nh_, nt_, nc_;
    LinearMatrices lin_;
    Eigen::MatrixXd synth_;    // nt x nc inverse transform (freq -> time)
    Eigen::MatrixXd project_;  // nc x nt forward transform (time -> freq)

    Eigen::MatrixXd dynamic_stiffness(double omega) const;
    void nonlinear_forces(const Eigen::VectorXd& coeffs, Eigen::ArrayXd& g1,
                          Eigen::ArrayXd& g2) const;
};

}  // namespace nltva
