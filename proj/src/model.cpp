#include "nltva/model.hpp"

#include <cmath>
#include <stdexcept>

namespace nltva {

void SystemParams::validate() const {
    if (!(m1 > 0.0) || !(k1 > 0.0))
        throw std::invalid_argument("SystemParams: m1 and k1 must be positive");
    if (!(m2 >= 0.0) || !(c1 >= 0.0) || !(c2 >= 0.0) || !(k2 >= 0.0) ||
        !(knl1 >= 0.0) || !(knl2 >= 0.0))
        throw std::invalid_argument("SystemParams: c1, c2, m2, k2, knl1, knl2 must be non-negative");
    if (!std::isfinite(m1 + c1 + k1 + knl1 + m2 + c2 + k2 + knl2))
        throw std::invalid_argument("SystemParams: parameters must be finite");
}

double SystemParams::natural_frequency() const { return std::sqrt(k1 / m1); }

double SystemParams::mass_ratio() const { return m2 / m1; }

void Forcing::validate() const {
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
        throw std::invalid_argument("Forcing: amplitude must be non-negative");
    if (!(omega > 0.0) || !std::isfinite(omega))
        throw std::invalid_argument("Forcing: omega must be positive");
}

double Forcing::period() const { return 2.0 * M_PI / omega; }

LinearMatrices linear_matrices(const SystemParams& p) {
    LinearMatrices m;
    m.mass << p.m1, 0.0, 0.0, p.m2;
    m.damping << p.c1 + p.c2, -p.c2, -p.c2, p.c2;
    m.stiffness << p.k1 + p.k2, -p.k2, -p.k2, p.k2;
    return m;
}

LinearTuning tune_linear(double m1, double k1, double epsilon) {
    if (!(m1 > 0.0) || !(k1 > 0.0) || !(epsilon > 0.0))
        throw std::domain_error("tune_linear: m1, k1 and epsilon must be positive");
    const double e = epsilon;
    const double s = std::sqrt(4.0 + 3.0 * e);
    const double k2 = 8.0 * e * k1 * (16.0 + 23.0 * e + 9.0 * e * e + 2.0 * (2.0 + e) * s) /
                      (3.0 * (1.0 + e) * (1.0 + e) * (64.0 + 80.0 * e + 27.0 * e * e));
    const double m2 = e * m1;
    const double c2 = std::sqrt(k2 * m2 * (8.0 + 9.0 * e - 4.0 * s) / (4.0 * (1.0 + e)));
    return {k2, c2};
}

double tune_nonlinear(double knl1, double epsilon) {
    if (!(knl1 >= 0.0))
        throw std::domain_error("tune_nonlinear: knl1 must be non-negative");
    if (!(epsilon > 0.0))
        throw std::domain_error("tune_nonlinear: epsilon must be positive");
    return 2.0 * epsilon * epsilon * knl1 / (1.0 + 4.0 * epsilon);
}

DimensionlessTuning tune_dimensionless(double epsilon, double alpha3) {
    if (!(epsilon > 0.0))
        throw std::domain_error("tune_dimensionless: epsilon must be positive");
    if (!(alpha3 >= 0.0))
        throw std::domain_error("tune_dimensionless: alpha3 must be non-negative");
    const double e = epsilon;
    const double s = std::sqrt(4.0 + 3.0 * e);
    DimensionlessTuning t;
    t.lambda = 2.0 / (1.0 + e) *
               std::sqrt(2.0 * (16.0 + 23.0 * e + 9.0 * e * e + 2.0 * (2.0 + e) * s) /
                         (3.0 * (64.0 + 80.0 * e + 27.0 * e * e)));
    t.mu2 = 0.25 * std::sqrt((8.0 + 9.0 * e - 4.0 * s) / (1.0 + e));
    t.beta3 = 2.0 * alpha3 * e / (1.0 + 4.0 * e);
    return t;
}

SystemParams tuned_system(double m1, double c1, double k1, double knl1,
                          double epsilon, double p_mu, double p_beta) {
    const LinearTuning lt = tune_linear(m1, k1, epsilon);
    SystemParams p;
    p.m1 = m1;
    p.c1 = c1;
    p.k1 = k1;
    p.knl1 = knl1;
    p.m2 = epsilon * m1;
    p.k2 = lt.k2;
    p.c2 = p_mu * lt.c2;
    p.knl2 = p_beta * tune_nonlinear(knl1, epsilon);
    p.validate();
    return p;
}

DimensionlessParams to_dimensionless(const SystemParams& p, const Forcing& f) {
    p.validate();
    if (!(p.m2 > 0.0) || !(p.k2 > 0.0))
        throw std::domain_error("to_dimensionless: absorber must have positive m2 and k2");
    const double wn1 = p.natural_frequency();
    const double wn2 = std::sqrt(p.k2 / p.m2);
    DimensionlessParams d;
    d.epsilon = p.m2 / p.m1;
    d.mu1 = p.c1 / (2.0 * p.m1 * wn1);
    d.mu2 = p.c2 / (2.0 * p.m2 * wn2);
    d.lambda = wn2 / wn1;
    const double F2 = f.amplitude * f.amplitude;
    const double k13 = p.k1 * p.k1 * p.k1;
    d.alpha3 = 3.0 * p.knl1 * F2 / (4.0 * k13);
    d.beta3 = 3.0 * p.knl2 * F2 / (4.0 * k13 * d.epsilon);
    d.gamma = f.omega / wn1;
    return d;
}

double alpha3_for_force(const SystemParams& p, double force) {
    return 3.0 * p.knl1 * force * force / (4.0 * p.k1 * p.k1 * p.k1);
}

double force_for_alpha3(const SystemParams& p, double alpha3) {
    if (!(p.knl1 > 0.0))
        throw std::domain_error("force_for_alpha3: knl1 must be positive");
    return std::sqrt(4.0 * alpha3 * p.k1 * p.k1 * p.k1 / (3.0 * p.knl1));
}

State rhs(const State& s, double t, const SystemParams& p, const Forcing& f) {
    const double r = s.x1 - s.x2;
    const double dr = s.v1 - s.v2;
    // coupling force exerted on the primary by the absorber connection
    const double g = p.k2 * r + p.knl2 * r * r * r + p.c2 * dr;
    State d;
    d.x1 = s.v1;
    d.v1 = (f.amplitude * std::cos(f.omega * t) - p.c1 * s.v1 - p.k1 * s.x1 -
            p.knl1 * s.x1 * s.x1 * s.x1 - g) /
           p.m1;
    d.x2 = s.v2;
    d.v2 = g / p.m2;
    return d;
}

State rhs_dimensionless(const State& q, double tau, const DimensionlessParams& dp) {
    const double q1 = q.x1, dq1 = q.v1, q2 = q.x2, dq2 = q.v2;
    const double fc = std::cos(dp.gamma * tau);
    // primary equation in (q1, q2) coordinates
    const double a1 = fc - 2.0 * dp.mu1 * dq1 - q1 - (4.0 / 3.0) * dp.alpha3 * q1 * q1 * q1 -
                      dp.epsilon * (2.0 * dp.mu2 * dp.lambda * dq2 + dp.lambda * dp.lambda * q2 +
                                    (4.0 / 3.0) * dp.beta3 * q2 * q2 * q2);
    // relative coordinate: q2'' = q1'' - (absorber acceleration)/f
    const double a2 = a1 - (2.0 * dp.mu2 * dp.lambda * dq2 + dp.lambda * dp.lambda * q2 +
                            (4.0 / 3.0) * dp.beta3 * q2 * q2 * q2);
    return {dq1, a1, dq2, a2};
}

}  // namespace nltva
