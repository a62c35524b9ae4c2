#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "nltva/continuation.hpp"

using namespace nltva;

namespace {

SystemParams reference_system() { return tuned_system(1.0, 0.002, 1.0, 1.0, 0.05); }

// primary Duffing with a vanishingly small, detuned linear parasite mass:
// behaves like a single-DOF oscillator whose folds are easy to sample densely
SystemParams near_single_dof() {
    SystemParams p;
    p.m1 = 1.0;
    p.c1 = 0.08;
    p.k1 = 1.0;
    p.knl1 = 1.0;
    p.m2 = 1e-3;
    p.k2 = 4e-3;  // parasite resonance at 2 rad/s, far from the peak
    p.c2 = 2e-4;
    p.knl2 = 0.0;
    return p;
}

std::vector<const BifurcationPoint*> refined_of(const Branch& br, BifurcationPoint::Kind kind) {
    std::vector<const BifurcationPoint*> out;
    for (const auto& b : br.bifurcations)
        if (b.kind == kind && b.refined) out.push_back(&b);
    return out;
}

}  // namespace

TEST_CASE("corrector basics") {
    const HarmonicBalance hbm(reference_system());
    const Continuation cont(hbm);

    SUBCASE("a converged solution is a fixed point") {
        auto r1 = cont.correct(hbm.linear_receptance_coeffs(0.7, 0.01), 0.7, 0.01);
        REQUIRE(r1.converged);
        auto r2 = cont.correct(r1.solution.coeffs, 0.7, 0.01);
        CHECK(r2.converged);
        CHECK(r2.iterations <= 1);
        CHECK((r2.solution.coeffs - r1.solution.coeffs).norm() < 1e-10);
    }

    SUBCASE("nearly linear system converges from the receptance in few steps") {
        SystemParams p = reference_system();
        p.knl1 = 1e-6;
        p.knl2 = 0.0;
        const HarmonicBalance h(p);
        const Continuation c(h);
        auto r = c.correct(h.linear_receptance_coeffs(1.0, 0.1), 1.0, 0.1);
        CHECK(r.converged);
        CHECK(r.iterations <= 3);
    }

    SUBCASE("zero guess at low forcing lands on the linear response") {
        auto r = cont.correct(Eigen::VectorXd::Zero(hbm.size()), 0.5, 0.005);
        REQUIRE(r.converged);
        const double lin = hbm.amplitude(hbm.linear_receptance_coeffs(0.5, 0.005));
        CHECK(hbm.amplitude(r.solution.coeffs) == doctest::Approx(lin).epsilon(0.01));
    }
}

TEST_CASE("low forcing: linear regime with two equal peaks and no bifurcations") {
    const HarmonicBalance hbm(reference_system());
    const Continuation cont(hbm);
    const Branch br = cont.continue_branch(0.005, 0.5, 1.5);
    REQUIRE(!br.truncated);
    CHECK(br.bifurcations.empty());
    for (const auto& p : br.points) CHECK(p.stable);

    // two local maxima of nearly equal amplitude
    std::vector<double> amp(br.points.size());
    for (size_t i = 0; i < br.points.size(); ++i) amp[i] = hbm.amplitude(br.points[i].coeffs);
    std::vector<double> peaks;
    for (size_t i = 1; i + 1 < amp.size(); ++i)
        if (amp[i] > amp[i - 1] && amp[i] > amp[i + 1]) peaks.push_back(amp[i]);
    REQUIRE(peaks.size() == 2);
    CHECK(std::abs(peaks[0] - peaks[1]) / peaks[0] < 0.03);

    // amplitudes match the closed-form receptance within 1%
    for (size_t i = 0; i < br.points.size(); i += 50) {
        const double om = br.points[i].omega;
        const double lin = hbm.amplitude(hbm.linear_receptance_coeffs(om, 0.005));
        CHECK(amp[i] == doctest::Approx(lin).epsilon(0.01));
    }
}

TEST_CASE("fold pair appears at F = 0.098") {
    const HarmonicBalance hbm(reference_system());
    const Continuation cont(hbm);
    const Branch br = cont.continue_branch(0.098, 0.6, 1.6);
    const auto folds = refined_of(br, BifurcationPoint::Kind::fold);
    REQUIRE(folds.size() == 2);
    for (const auto* f : folds) {
        CHECK(f->solution.omega > 1.17);
        CHECK(f->solution.omega < 1.21);
        CHECK(std::abs(f->test_value) <= 1e-8);
    }

    // between the folds exactly one Floquet exponent has positive real part
    const int lo = folds[0]->bracket_hi, hi = folds[1]->bracket_lo;
    const auto& mid = br.points[(lo + hi) / 2];
    int n_pos = 0;
    for (const auto& e : mid.floquet) n_pos += e.real() > hbm.stability_tolerance();
    CHECK(n_pos == 1);
    CHECK(!mid.stable);
}

TEST_CASE("NS pair appears at F = 0.11") {
    const HarmonicBalance hbm(reference_system());
    const Continuation cont(hbm);
    const Branch br = cont.continue_branch(0.11, 0.6, 1.6);
    const auto ns = refined_of(br, BifurcationPoint::Kind::neimark_sacker);
    REQUIRE(ns.size() == 2);
    CHECK(ns[0]->solution.omega == doctest::Approx(1.110).epsilon(0.01));
    CHECK(ns[1]->solution.omega == doctest::Approx(1.198).epsilon(0.01));
    // the crossing pair is genuinely complex
    for (const auto* b : ns) {
        double kappa = 0.0;
        for (const auto& e : b->solution.floquet)
            if (std::abs(e.imag()) > 1e-3 && std::abs(e.real()) < 1e-4)
                kappa = std::abs(e.imag());
        CHECK(kappa > 0.1);
    }
    CHECK(refined_of(br, BifurcationPoint::Kind::fold).size() == 2);
}

TEST_CASE("stability changes only inside detection brackets") {
    const HarmonicBalance hbm(reference_system());
    const Continuation cont(hbm);
    const Branch br = cont.continue_branch(0.11, 0.6, 1.6);
    const auto brackets = cont.detect_bifurcations(br);
    for (size_t i = 1; i < br.points.size(); ++i) {
        if (br.points[i - 1].stable == br.points[i].stable) continue;
        bool inside = false;
        for (const auto& b : brackets)
            if (b.bracket_lo == (int)i - 1 && b.bracket_hi == (int)i) inside = true;
        CHECK(inside);
    }
}

TEST_CASE("detection count does not drop when the step is halved") {
    const HarmonicBalance hbm(reference_system());
    StepConfig coarse;
    StepConfig fine;
    fine.ds_max = coarse.ds_max / 2.0;
    const Branch b1 = Continuation(hbm, coarse).continue_branch(0.098, 0.6, 1.6);
    const Branch b2 = Continuation(hbm, fine).continue_branch(0.098, 0.6, 1.6);
    CHECK(refined_of(b2, BifurcationPoint::Kind::fold).size() >=
          refined_of(b1, BifurcationPoint::Kind::fold).size());
}

TEST_CASE("fold localization agrees with dense sampling") {
    const SystemParams p = near_single_dof();
    const HarmonicBalance hbm(p);
    const double F = 0.05;

    StepConfig coarse;
    coarse.ds_max = 4e-2;
    const Branch br = Continuation(hbm, coarse).continue_branch(F, 1.0, 1.5);
    const auto folds = refined_of(br, BifurcationPoint::Kind::fold);
    REQUIRE(folds.size() == 2);

    StepConfig dense;
    dense.ds_initial = 5e-4;
    dense.ds_max = 5e-4;
    dense.ds_min = 1e-7;
    dense.max_points = 200000;
    dense.compute_stability = false;
    const Branch dbr = Continuation(hbm, dense).continue_branch(F, 1.0, 1.5);
    // dense-sampling oracle: bracket midpoints of the tangent sign change
    std::vector<double> dense_folds;
    for (size_t i = 1; i < dbr.points.size(); ++i)
        if (dbr.tangents[i - 1](hbm.size()) * dbr.tangents[i](hbm.size()) < 0.0)
            dense_folds.push_back(0.5 * (dbr.points[i - 1].omega + dbr.points[i].omega));
    REQUIRE(dense_folds.size() == 2);
    for (const auto* f : folds) {
        double best = 1e9;
        for (const double om : dense_folds) best = std::min(best, std::abs(om - f->solution.omega));
        CHECK(best < 1e-5);
    }
}

TEST_CASE("detached resonance curve at F = 0.15") {
    const HarmonicBalance hbm(reference_system());
    const Continuation cont(hbm);
    const auto drc = cont.find_drc(0.15, {});
    REQUIRE(drc.has_value());
    CHECK(drc->closed);
    // endpoints coincide
    CHECK((drc->points.front().coeffs - drc->points.back().coeffs).norm() < 1e-6);

    double om_lo = 1e9, om_hi = 0.0;
    for (const auto& p : drc->points) {
        om_lo = std::min(om_lo, p.omega);
        om_hi = std::max(om_hi, p.omega);
    }
    CHECK(om_lo == doctest::Approx(1.57).epsilon(0.015));
    CHECK(om_hi == doctest::Approx(2.32).epsilon(0.015));

    // folds bound the curve; they come in an even count
    const auto folds = refined_of(*drc, BifurcationPoint::Kind::fold);
    REQUIRE(folds.size() >= 2);
    CHECK(folds.size() % 2 == 0);
    std::vector<double> fold_oms;
    for (const auto* f : folds) fold_oms.push_back(f->solution.omega);
    std::sort(fold_oms.begin(), fold_oms.end());
    CHECK(fold_oms.front() == doctest::Approx(1.57).epsilon(0.015));
    CHECK(fold_oms.back() == doctest::Approx(2.32).epsilon(0.015));

    // the left portion of the curve up to ~1.73 rad/s is entirely unstable;
    // stable solutions exist on the upper arc beyond it
    bool stable_right = false;
    double stable_min_omega = 1e9;
    for (const auto& pt : drc->points) {
        if (pt.omega > 1.59 && pt.omega < 1.71) CHECK(!pt.stable);
        if (pt.stable) {
            stable_right = true;
            stable_min_omega = std::min(stable_min_omega, pt.omega);
        }
    }
    CHECK(stable_right);
    CHECK(stable_min_omega == doctest::Approx(1.73).epsilon(0.02));
    // the stability boundary on the curve is its NS point
    bool ns_at_173 = false;
    for (const auto& b : drc->bifurcations)
        if (b.kind == BifurcationPoint::Kind::neimark_sacker && b.refined &&
            std::abs(b.solution.omega - 1.73) < 0.03)
            ns_at_173 = true;
    CHECK(ns_at_173);

    // branch self-consistency: every stored point still satisfies the residual
    for (size_t i = 0; i < drc->points.size(); i += 37) {
        const auto& pt = drc->points[i];
        CHECK(hbm.residual(pt.coeffs, pt.omega, pt.force).norm() / 0.15 < 1e-9);
    }
}

TEST_CASE("no detached curve at low forcing or after merging") {
    const HarmonicBalance hbm(reference_system());
    const Continuation cont(hbm);
    Continuation::DrcConfig quick;
    quick.probe_omegas = {1.9, 2.1};
    CHECK(!cont.find_drc(0.005, quick).has_value());
    CHECK(!cont.find_drc(0.19, quick).has_value());
}
