#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nltva/continuation.hpp"
#include "nltva/hbm.hpp"

using namespace nltva;

namespace {

SystemParams reference_system() { return tuned_system(1.0, 0.002, 1.0, 1.0, 0.05); }

Eigen::VectorXd random_coeffs(const HarmonicBalance& hbm, double scale, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> g(0.0, scale);
    Eigen::VectorXd z(hbm.size());
    for (int i = 0; i < z.size(); ++i) z(i) = g(gen);
    return z;
}

}  // namespace

TEST_CASE("residual trivial cases") {
    const HarmonicBalance hbm(reference_system());
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(hbm.size());
    CHECK(hbm.residual(zero, 1.0, 0.0).norm() == 0.0);

    // with forcing only the first cosine harmonic of DOF 1 remains
    Eigen::VectorXd r = hbm.residual(zero, 1.0, 0.3);
    CHECK(r(hbm.index(0, 1)) == doctest::Approx(-0.3));
    r(hbm.index(0, 1)) = 0.0;
    CHECK(r.norm() == 0.0);
}

TEST_CASE("closed-form receptance solves the linear system") {
    SystemParams p = reference_system();
    p.knl1 = p.knl2 = 0.0;
    const HarmonicBalance hbm(p, 1, 8);
    for (const double om : {0.6, 0.9, 1.05, 1.4}) {
        const Eigen::VectorXd z = hbm.linear_receptance_coeffs(om, 0.1);
        CHECK(hbm.residual(z, om, 0.1).norm() < 1e-12);
    }
}

TEST_CASE("aliasing guard and sample-count independence") {
    const SystemParams p = reference_system();
    CHECK_THROWS_AS(HarmonicBalance(p, 5, 20), std::invalid_argument);

    const HarmonicBalance h1(p, 5, 21);   // minimum admissible
    const HarmonicBalance h2(p, 5, 128);
    const HarmonicBalance h3(p, 5, 257);
    const Eigen::VectorXd z = random_coeffs(h1, 0.4, 11);
    const Eigen::VectorXd r1 = h1.residual(z, 1.1, 0.2);
    const Eigen::VectorXd r2 = h2.residual(z, 1.1, 0.2);
    const Eigen::VectorXd r3 = h3.residual(z, 1.1, 0.2);
    CHECK((r1 - r2).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((r2 - r3).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("jacobian matches central finite differences") {
    const HarmonicBalance hbm(reference_system());
    const double h = 1e-7;
    for (unsigned seed = 0; seed < 10; ++seed) {
        const Eigen::VectorXd z = random_coeffs(hbm, 0.3, 100 + seed);
        const double om = 0.8 + 0.07 * seed, F = 0.1;
        const auto d = hbm.jacobian(z, om, F);
        double scale = d.coeffs.cwiseAbs().maxCoeff();
        for (int j = 0; j < hbm.size(); ++j) {
            Eigen::VectorXd dz = Eigen::VectorXd::Zero(hbm.size());
            dz(j) = h;
            const Eigen::VectorXd fd =
                (hbm.residual(z + dz, om, F) - hbm.residual(z - dz, om, F)) / (2.0 * h);
            CHECK((fd - d.coeffs.col(j)).cwiseAbs().maxCoeff() / scale < 1e-5);
        }
        const Eigen::VectorXd fdo =
            (hbm.residual(z, om + h, F) - hbm.residual(z, om - h, F)) / (2.0 * h);
        CHECK((fdo - d.omega).cwiseAbs().maxCoeff() / std::max(1.0, d.omega.cwiseAbs().maxCoeff()) <
              1e-5);
        const Eigen::VectorXd fdf =
            (hbm.residual(z, om, F + h) - hbm.residual(z, om, F - h)) / (2.0 * h);
        CHECK((fdf - d.force).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("force derivative is constant and the linear jacobian is block diagonal") {
    const HarmonicBalance hbm(reference_system());
    const auto d1 = hbm.jacobian(random_coeffs(hbm, 0.5, 1), 1.1, 0.1);
    const auto d2 = hbm.jacobian(random_coeffs(hbm, 0.5, 2), 1.1, 0.7);
    CHECK((d1.force - d2.force).norm() == 0.0);

    SystemParams lp = reference_system();
    lp.knl1 = lp.knl2 = 0.0;
    const HarmonicBalance lin(lp);
    const Eigen::MatrixXd J = lin.jacobian_coeffs(random_coeffs(lin, 0.5, 3), 1.1);
    auto harmonic_of = [&](int idx) {
        const int c = idx % lin.coeffs_per_dof();
        return c == 0 ? 0 : (c + 1) / 2;
    };
    for (int i = 0; i < lin.size(); ++i)
        for (int j = 0; j < lin.size(); ++j)
            if (harmonic_of(i) != harmonic_of(j)) CHECK(J(i, j) == 0.0);
}

TEST_CASE("hessian product matches differentiated jacobian") {
    const HarmonicBalance hbm(reference_system());
    const Eigen::VectorXd z = random_coeffs(hbm, 0.4, 21);
    const Eigen::VectorXd dir = random_coeffs(hbm, 1.0, 22);
    const double h = 1e-7;
    const Eigen::MatrixXd fd =
        (hbm.jacobian_coeffs(z + h * dir, 1.2) - hbm.jacobian_coeffs(z - h * dir, 1.2)) / (2.0 * h);
    const Eigen::MatrixXd H = hbm.hessian_product(z, dir);
    CHECK((fd - H).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("hill exponents of the linear system equal the state-matrix eigenvalues") {
    const SystemParams p = reference_system();
    const HarmonicBalance hbm(p);
    // at negligible forcing the periodic solution is essentially the origin
    const Continuation cont(hbm);
    const auto res = cont.correct(hbm.linear_receptance_coeffs(0.9, 1e-8), 0.9, 1e-8);
    REQUIRE(res.converged);
    const auto hill = hbm.hill_exponents(res.solution.coeffs, 0.9);

    const LinearMatrices lm = linear_matrices(p);
    Eigen::Matrix4d S = Eigen::Matrix4d::Zero();
    S.topRightCorner(2, 2).setIdentity();
    S.bottomLeftCorner(2, 2) = -lm.mass.inverse() * lm.stiffness;
    S.bottomRightCorner(2, 2) = -lm.mass.inverse() * lm.damping;
    const Eigen::Vector4cd ev = S.eigenvalues();

    for (const auto& e : hill.exponents) {
        double best = 1e9;
        for (int i = 0; i < 4; ++i) best = std::min(best, std::abs(e - ev(i)));
        CHECK(best < 1e-6);
    }
    CHECK(hill.stable);
    CHECK(hill.raw.size() == (size_t)2 * hbm.size());
}

TEST_CASE("hill filtering is robust to the truncation order") {
    const SystemParams p = reference_system();
    const HarmonicBalance h5(p, 5, 128), h7(p, 7, 128);
    const Continuation c5(h5), c7(h7);
    const auto s5 = c5.correct(h5.linear_receptance_coeffs(1.0, 0.09), 1.0, 0.09);
    const auto s7 = c7.correct(h7.linear_receptance_coeffs(1.0, 0.09), 1.0, 0.09);
    REQUIRE(s5.converged);
    REQUIRE(s7.converged);
    CHECK(s5.solution.stable);

    // amplitude drift under truncation refinement
    CHECK(h5.amplitude(s5.solution.coeffs) ==
          doctest::Approx(h7.amplitude(s7.solution.coeffs)).epsilon(1e-3));
    // filtered exponents agree between NH=5 and NH=7; the imaginary part is
    // defined modulo omega, so compare against every shifted representative
    for (const auto& e5 : s5.solution.floquet) {
        double best = 1e9;
        for (const auto& e7 : s7.solution.floquet)
            for (int k = -3; k <= 3; ++k)
                best = std::min(best, std::abs(e5 - e7 - std::complex<double>(0.0, k * 1.0)));
        CHECK(best < 1e-3);
    }
}

TEST_CASE("synthesis and phase-zero state") {
    const HarmonicBalance hbm(reference_system());
    Eigen::VectorXd z = Eigen::VectorXd::Zero(hbm.size());
    CHECK(hbm.amplitude(z) == 0.0);

    z(hbm.index(0, 1)) = 0.7;  // pure cosine: amplitude equals the coefficient
    CHECK(hbm.amplitude(z, 0) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(hbm.amplitude(z, 1) == 0.0);

    z = random_coeffs(hbm, 0.2, 31);
    const double om = 1.3;
    const State s0 = hbm.state_at_phase_zero(z, om);
    const Eigen::ArrayXd x1 = hbm.sample(z, 0, 4096);
    const Eigen::ArrayXd x2 = hbm.sample(z, 1, 4096);
    CHECK(s0.x1 == doctest::Approx(x1(0)).epsilon(1e-12));
    CHECK(s0.x2 == doctest::Approx(x2(0)).epsilon(1e-12));
    const double dt = 2.0 * M_PI / om / 4096;
    CHECK(s0.v1 == doctest::Approx((x1(1) - x1(4095)) / (2.0 * dt)).epsilon(1e-4));
    CHECK(s0.v2 == doctest::Approx((x2(1) - x2(4095)) / (2.0 * dt)).epsilon(1e-4));
}
