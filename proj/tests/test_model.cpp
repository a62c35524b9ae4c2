#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nltva/model.hpp"

using namespace nltva;

namespace {

SystemParams reference_system() {
    // unit Duffing oscillator with a 5% tuned absorber
    return tuned_system(1.0, 0.002, 1.0, 1.0, 0.05);
}

double round_to(double v, int decimals) {
    const double s = std::pow(10.0, decimals);
    return std::round(v * s) / s;
}

}  // namespace

TEST_CASE("linear tuning reproduces the published absorber constants") {
    const LinearTuning t = tune_linear(1.0, 1.0, 0.05);
    CHECK(round_to(t.k2, 4) == doctest::Approx(0.0454));
    CHECK(round_to(t.c2, 4) == doctest::Approx(0.0128));
    CHECK(tune_linear(1.0, 1.0, 1e-12).k2 < 1e-10);
    CHECK(tune_linear(1.0, 1.0, 1e-12).c2 < 1e-10);
    // k2 scales linearly in k1 and is independent of m1
    CHECK(tune_linear(2.0, 3.0, 0.05).k2 == doctest::Approx(3.0 * t.k2).epsilon(1e-14));
    CHECK_THROWS_AS(tune_linear(-1.0, 1.0, 0.05), std::domain_error);
    CHECK_THROWS_AS(tune_linear(1.0, 0.0, 0.05), std::domain_error);
    CHECK_THROWS_AS(tune_linear(1.0, 1.0, 0.0), std::domain_error);
}

TEST_CASE("cubic tuning rule") {
    CHECK(tune_nonlinear(1.0, 0.05) == doctest::Approx(0.0025 * 2.0 / 1.2).epsilon(1e-14));
    CHECK(round_to(tune_nonlinear(1.0, 0.05), 4) == doctest::Approx(0.0042));
    CHECK(tune_nonlinear(0.0, 0.3) == 0.0);
    CHECK(tune_nonlinear(1.0, 0.25) == doctest::Approx(0.0625).epsilon(1e-14));
    CHECK_THROWS_AS(tune_nonlinear(-1.0, 0.05), std::domain_error);
}

TEST_CASE("dimensionless tuning") {
    const DimensionlessTuning t = tune_dimensionless(0.05, 0.009075);
    CHECK(t.lambda == doctest::Approx(0.952372).epsilon(1e-5));
    CHECK(t.mu2 == doctest::Approx(0.133938).epsilon(1e-5));
    CHECK(t.beta3 == doctest::Approx(0.00075625).epsilon(1e-12));
    // beta3 is linear in alpha3; lambda and mu2 do not depend on it
    const DimensionlessTuning t0 = tune_dimensionless(0.05, 0.0);
    CHECK(t0.beta3 == 0.0);
    CHECK(t0.lambda == t.lambda);
    CHECK(t0.mu2 == t.mu2);
}

TEST_CASE("dimensional and dimensionless tuning rules agree") {
    for (double eps = 0.01; eps <= 0.5; eps += 0.01) {
        const double k1 = 1.7, m1 = 0.8;
        const LinearTuning lt = tune_linear(m1, k1, eps);
        const DimensionlessTuning dt = tune_dimensionless(eps, 0.01);
        CHECK(eps * dt.lambda * dt.lambda * k1 ==
              doctest::Approx(lt.k2).epsilon(1e-12));
        const double m2 = eps * m1;
        CHECK(2.0 * dt.mu2 * m2 * std::sqrt(lt.k2 / m2) ==
              doctest::Approx(lt.c2).epsilon(1e-12));
    }
}

TEST_CASE("to_dimensionless matches the definitions") {
    // table values rounded to the published precision
    SystemParams p;
    p.m1 = 1.0;
    p.c1 = 0.002;
    p.k1 = 1.0;
    p.knl1 = 1.0;
    p.m2 = 0.05;
    p.c2 = 0.0128;
    p.k2 = 0.0454;
    p.knl2 = 0.0042;
    const DimensionlessParams d = to_dimensionless(p, {0.11, 1.2});
    CHECK(d.alpha3 == doctest::Approx(0.009075).epsilon(1e-14));
    const double wn2 = std::sqrt(0.0454 / 0.05);
    CHECK(d.mu2 == doctest::Approx(0.0128 / (2.0 * 0.05 * wn2)).epsilon(1e-14));
    CHECK(d.mu2 == doctest::Approx(0.1343).epsilon(5e-4));
    CHECK(d.gamma == doctest::Approx(1.2).epsilon(1e-14));
    CHECK(d.epsilon == doctest::Approx(0.05).epsilon(1e-14));

    const DimensionlessParams d0 = to_dimensionless(p, {0.0, 1.2});
    CHECK(d0.alpha3 == 0.0);
    CHECK(d0.beta3 == 0.0);
    // alpha3 scales with the forcing squared
    const DimensionlessParams d2 = to_dimensionless(p, {0.22, 1.2});
    CHECK(d2.alpha3 == doctest::Approx(4.0 * d.alpha3).epsilon(1e-14));

    // beta3 of the tuned absorber reproduces the dimensionless rule
    const SystemParams q = reference_system();
    const DimensionlessParams dq = to_dimensionless(q, {0.11, 1.0});
    CHECK(dq.beta3 ==
          doctest::Approx(2.0 * dq.epsilon * dq.alpha3 / (1.0 + 4.0 * dq.epsilon)).epsilon(1e-12));
}

TEST_CASE("equation of motion right-hand side") {
    const SystemParams p = reference_system();

    SUBCASE("forcing only at the origin") {
        const State d = rhs({}, 0.0, p, {0.1, 1.3});
        CHECK(d.v1 == doctest::Approx(0.1).epsilon(1e-14));
        CHECK(d.v2 == 0.0);
        CHECK(d.x1 == 0.0);
        CHECK(d.x2 == 0.0);
    }

    SUBCASE("static equal displacement leaves only primary springs") {
        const State d = rhs({1.0, 0.0, 1.0, 0.0}, 0.0, p, {0.0, 1.0});
        CHECK(d.v1 == doctest::Approx(-(p.k1 + p.knl1) / p.m1).epsilon(1e-14));
        CHECK(d.v2 == 0.0);
    }

    SUBCASE("odd in the state when unforced") {
        std::mt19937 gen(42);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        for (int i = 0; i < 50; ++i) {
            const State s{u(gen), u(gen), u(gen), u(gen)};
            const State neg{-s.x1, -s.v1, -s.x2, -s.v2};
            const State d = rhs(s, 0.37, p, {0.0, 1.0});
            const State dn = rhs(neg, 0.37, p, {0.0, 1.0});
            CHECK(dn.v1 == doctest::Approx(-d.v1).epsilon(1e-12));
            CHECK(dn.v2 == doctest::Approx(-d.v2).epsilon(1e-12));
        }
    }

    SUBCASE("matches an independent force summation") {
        // oracle: evaluate each spring/damper force separately
        auto oracle = [&](const State& s, double t, const Forcing& f) {
            const double spring1 = p.k1 * s.x1 + p.knl1 * std::pow(s.x1, 3);
            const double damper1 = p.c1 * s.v1;
            const double rel = s.x1 - s.x2;
            const double spring2 = p.k2 * rel + p.knl2 * std::pow(rel, 3);
            const double damper2 = p.c2 * (s.v1 - s.v2);
            const double ext = f.amplitude * std::cos(f.omega * t);
            return State{s.v1, (ext - spring1 - damper1 - spring2 - damper2) / p.m1, s.v2,
                         (spring2 + damper2) / p.m2};
        };
        std::mt19937 gen(7);
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        for (int i = 0; i < 30; ++i) {
            const State s{u(gen), u(gen), u(gen), u(gen)};
            const State a = rhs(s, 0.9, p, {0.15, 1.7});
            const State b = oracle(s, 0.9, {0.15, 1.7});
            CHECK(a.v1 == doctest::Approx(b.v1).epsilon(1e-13));
            CHECK(a.v2 == doctest::Approx(b.v2).epsilon(1e-13));
        }
    }
}

TEST_CASE("dimensionless equations reproduce the transformed dimensional ones") {
    const SystemParams p = reference_system();
    const Forcing f{0.11, 1.2};
    const DimensionlessParams dp = to_dimensionless(p, f);
    const double wn1 = p.natural_frequency();
    const double fl = f.amplitude / p.k1;

    std::mt19937 gen(3);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 40; ++i) {
        const State q{u(gen), u(gen), u(gen), u(gen)};
        const double tau = u(gen);
        // map (q1, q1', q2, q2') to physical coordinates: q2 is relative
        const double x1 = fl * q.x1;
        const double r = fl * q.x2;
        const double v1 = fl * wn1 * q.v1;
        const double dr = fl * wn1 * q.v2;
        const State xs{x1, v1, x1 - r, v1 - dr};
        const State dx = rhs(xs, tau / wn1, p, f);
        const State dq = rhs_dimensionless(q, tau, dp);
        CHECK(dq.v1 == doctest::Approx(dx.v1 / (fl * wn1 * wn1)).epsilon(1e-12));
        CHECK(dq.v2 == doctest::Approx((dx.v1 - dx.v2) / (fl * wn1 * wn1)).epsilon(1e-12));
    }
}

TEST_CASE("parameter validation") {
    SystemParams p = reference_system();
    CHECK_NOTHROW(p.validate());
    p.m1 = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = reference_system();
    p.knl2 = -1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    const Forcing bad_amp{-1.0, 1.0};
    const Forcing bad_omega{1.0, 0.0};
    CHECK_THROWS_AS(bad_amp.validate(), std::invalid_argument);
    CHECK_THROWS_AS(bad_omega.validate(), std::invalid_argument);
}

TEST_CASE("normalized tuned system helpers") {
    const SystemParams p = tuned_system(1.0, 0.002, 1.0, 1.0, 0.05, 1.3, 0.8);
    const LinearTuning lt = tune_linear(1.0, 1.0, 0.05);
    CHECK(p.k2 == doctest::Approx(lt.k2).epsilon(1e-14));
    CHECK(p.c2 == doctest::Approx(1.3 * lt.c2).epsilon(1e-14));
    CHECK(p.knl2 == doctest::Approx(0.8 * tune_nonlinear(1.0, 0.05)).epsilon(1e-14));
    CHECK(alpha3_for_force(p, 0.11) == doctest::Approx(0.009075).epsilon(1e-14));
    CHECK(force_for_alpha3(p, 0.009075) == doctest::Approx(0.11).epsilon(1e-14));
}
