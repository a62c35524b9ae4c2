// Coupled Duffing oscillator + nonlinear tuned vibration absorber:
// parameter sets, equal-peak tuning rules, and equations of motion.
#pragma once

#include <Eigen/Dense>

namespace nltva {

/// Dimensional parameters of the 2-DOF system. DOF 1 is the forced primary
/// (Duffing) oscillator, DOF 2 the absorber. The absorber restoring force
/// acts on the relative displacement x1 - x2 and mirrors the primary
/// nonlinearity (linear + cubic spring).
struct SystemParams {
    double m1 = 1.0;    ///< primary mass [kg]
    double c1 = 0.0;    ///< primary damping [Ns/m]
    double k1 = 1.0;    ///< primary linear stiffness [N/m]
    double knl1 = 0.0;  ///< primary cubic stiffness [N/m^3]
    double m2 = 0.0;    ///< absorber mass [kg]
    double c2 = 0.0;    ///< absorber damping [Ns/m]
    double k2 = 0.0;    ///< absorber linear stiffness [N/m]
    double knl2 = 0.0;  ///< absorber cubic stiffness [N/m^3]

    /// Throws std::invalid_argument if masses/stiffnesses are out of range.
    void validate() const;

    double natural_frequency() const;  ///< omega_n1 = sqrt(k1/m1)
    double mass_ratio() const;         ///< epsilon = m2/m1
};

/// Harmonic forcing F cos(omega t) applied to the primary mass.
struct Forcing {
    double amplitude = 0.0;  ///< F [N]
    double omega = 1.0;      ///< angular frequency [rad/s]

    void validate() const;
    double period() const;
};

/// Parameters of the dimensionless form of the equations of motion
/// (normalized time tau = omega_n1 t, q1 = x1/f, q2 = (x1-x2)/f, f = F/k1).
struct DimensionlessParams {
    double epsilon = 0.0;  ///< mass ratio m2/m1
    double mu1 = 0.0;      ///< primary damping ratio
    double mu2 = 0.0;      ///< absorber damping ratio
    double lambda = 0.0;   ///< absorber/primary frequency ratio
    double alpha3 = 0.0;   ///< primary cubic coefficient, 3 knl1 F^2 / (4 k1^3)
    double beta3 = 0.0;    ///< absorber cubic coefficient, 3 knl2 F^2 / (4 k1^3 eps)
    double gamma = 0.0;    ///< excitation frequency ratio omega/omega_n1
};

/// Full state of the coupled system.
struct State {
    double x1 = 0.0;
    double v1 = 0.0;
    double x2 = 0.0;
    double v2 = 0.0;
};

/// 2x2 mass/damping/stiffness matrices of the underlying linear system.
struct LinearMatrices {
    Eigen::Matrix2d mass;
    Eigen::Matrix2d damping;
    Eigen::Matrix2d stiffness;
};

LinearMatrices linear_matrices(const SystemParams& p);

struct LinearTuning {
    double k2 = 0.0;
    double c2 = 0.0;
};

/// Equal-peak absorber stiffness and damping for the underlying linear
/// system (exact for an undamped primary). Throws std::domain_error for
/// non-positive m1, k1 or epsilon.
LinearTuning tune_linear(double m1, double k1, double epsilon);

/// Absorber cubic coefficient maintaining equal peaks in nonlinear regimes:
/// knl2 = 2 eps^2 knl1 / (1 + 4 eps). Throws std::domain_error for negative
/// knl1 or non-positive epsilon.
double tune_nonlinear(double knl1, double epsilon);

struct DimensionlessTuning {
    double lambda = 0.0;
    double mu2 = 0.0;
    double beta3 = 0.0;
};

/// Dimensionless form of the equal-peak tuning rule.
DimensionlessTuning tune_dimensionless(double epsilon, double alpha3);

/// Builds the full parameter set with an optimally tuned absorber of mass
/// ratio epsilon. p_mu and p_beta are multiplicative detunings applied to
/// the optimal c2 and knl2 (1.0 = optimal).
SystemParams tuned_system(double m1, double c1, double k1, double knl1,
                          double epsilon, double p_mu = 1.0, double p_beta = 1.0);

/// Map (params, forcing) to the dimensionless parameter set.
DimensionlessParams to_dimensionless(const SystemParams& p, const Forcing& f);

/// alpha3 corresponding to a forcing amplitude, and its inverse.
double alpha3_for_force(const SystemParams& p, double force);
double force_for_alpha3(const SystemParams& p, double alpha3);

/// Right-hand side of the dimensional equations of motion in first-order
/// form: (x1', v1', x2', v2') at time t.
State rhs(const State& s, double t, const SystemParams& p, const Forcing& f);

/// Right-hand side of the dimensionless system in the (q1, q2) coordinates,
/// q2 being the relative coordinate; state is (q1, q1', q2, q2'), time tau.
State rhs_dimensionless(const State& q, double tau, const DimensionlessParams& dp);

}  // namespace nltva
