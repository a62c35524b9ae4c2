#include "nltva/continuation.hpp"

#include <algorithm>
#include <cmath>

namespace nltva {

namespace {

// imaginary parts below this (times omega_n1) are treated as real exponents
constexpr double kNsImagFloor = 1e-3;

// localization targets
constexpr double kTestTol = 1e-8;
constexpr double kOmegaTol = 1e-6;

}  // namespace

Continuation::Continuation(const HarmonicBalance& hbm, StepConfig cfg) : hbm_(hbm), cfg_(cfg) {}

double Continuation::ns_test_value(const HarmonicSolution& sol) const {
    const double floor = kNsImagFloor * hbm_.params().natural_frequency();
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& e : sol.floquet) {
        // an imaginary part that is a multiple of omega marks a (shifted copy
        // of a) real exponent; only genuinely complex pairs can cross as NS
        const double im = std::abs(std::remainder(e.imag(), sol.omega));
        if (im > floor) v = std::max(v, e.real());
    }
    if (!std::isfinite(v)) v = -1.0;  // no complex pair present
    return v;
}

CorrectorResult Continuation::correct(const Eigen::VectorXd& guess, double omega,
                                      double force) const {
    CorrectorResult out;
    const double fscale = std::max(force, 1e-12);
    Eigen::VectorXd z = guess;
    for (int it = 0; it <= cfg_.newton_max; ++it) {
        const Eigen::VectorXd r = hbm_.residual(z, omega, force);
        out.residual_norm = r.norm() / fscale;
        out.iterations = it;
        if (out.residual_norm < cfg_.tolerance) {
            out.converged = true;
            break;
        }
        if (it == cfg_.newton_max) break;
        const Eigen::MatrixXd J = hbm_.jacobian_coeffs(z, omega);
        z -= J.partialPivLu().solve(r);
        if (!z.allFinite()) break;
    }
    out.solution.coeffs = z;
    out.solution.omega = omega;
    out.solution.force = force;
    out.solution.harmonics = hbm_.harmonics();
    if (out.converged) {
        const auto hill = hbm_.hill_exponents(z, omega);
        out.solution.floquet = hill.exponents;
        out.solution.stable = hill.stable;
    }
    return out;
}

CorrectorResult Continuation::correct_on_plane(const Eigen::VectorXd& guess_coeffs,
                                               double guess_omega, double force,
                                               const Eigen::VectorXd& normal,
                                               const Eigen::VectorXd& plane_point,
                                               bool with_stability) const {
    CorrectorResult out;
    const int n = hbm_.size();
    const double f = force / hbm_.params().k1;
    const double fscale = std::max(force, 1e-12);
    Eigen::VectorXd y(n + 1);
    y.head(n) = guess_coeffs / f;
    y(n) = guess_omega;
    Eigen::MatrixXd A(n + 1, n + 1);
    Eigen::VectorXd rhs(n + 1);
    for (int it = 0; it <= cfg_.newton_max; ++it) {
        const Eigen::VectorXd z = y.head(n) * f;
        const Eigen::VectorXd r = hbm_.residual(z, y(n), force) / fscale;
        const double g = normal.dot(y - plane_point);
        out.residual_norm = r.norm();
        out.iterations = it;
        if (out.residual_norm < cfg_.tolerance && std::abs(g) < 1e-12) {
            out.converged = true;
            break;
        }
        if (it == cfg_.newton_max) break;
        const auto d = hbm_.jacobian(z, y(n), force);
        A.topLeftCorner(n, n) = d.coeffs * (f / fscale);
        A.topRightCorner(n, 1) = d.omega / fscale;
        A.row(n) = normal.transpose();
        rhs.head(n) = r;
        rhs(n) = g;
        y -= A.partialPivLu().solve(rhs);
        if (!y.allFinite() || y(n) <= 0.0) break;
    }
    out.solution.coeffs = y.head(n) * f;
    out.solution.omega = y(n);
    out.solution.force = force;
    out.solution.harmonics = hbm_.harmonics();
    if (out.converged && with_stability) {
        const auto hill = hbm_.hill_exponents(out.solution.coeffs, out.solution.omega);
        out.solution.floquet = hill.exponents;
        out.solution.stable = hill.stable;
    }
    return out;
}

Eigen::VectorXd Continuation::tangent(const Eigen::VectorXd& coeffs, double omega, double force,
                                      const Eigen::VectorXd& previous) const {
    const int n = hbm_.size();
    const double f = force / hbm_.params().k1;
    const double fscale = std::max(force, 1e-12);
    const auto d = hbm_.jacobian(coeffs, omega, force);
    Eigen::MatrixXd A(n + 1, n + 1);
    A.topLeftCorner(n, n) = d.coeffs * (f / fscale);
    A.topRightCorner(n, 1) = d.omega / fscale;
    A.row(n) = previous.transpose();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs(n) = 1.0;
    Eigen::VectorXd t = A.partialPivLu().solve(rhs);
    return t / t.norm();
}

Branch Continuation::march(HarmonicSolution start, double force, double omega_lo,
                           double omega_hi, double direction, bool stop_on_close) const {
    const int n = hbm_.size();
    const double f = force / hbm_.params().k1;
    Branch br;
    br.force = force;
    br.harmonics = hbm_.harmonics();

    Eigen::VectorXd y0(n + 1);
    y0.head(n) = start.coeffs / f;
    y0(n) = start.omega;

    Eigen::VectorXd dir0 = Eigen::VectorXd::Zero(n + 1);
    dir0(n) = direction;
    Eigen::VectorXd t = tangent(start.coeffs, start.omega, force, dir0);
    if (t(n) * direction < 0.0) t = -t;

    br.points.push_back(std::move(start));
    br.tangents.push_back(t);
    br.ns_test.push_back(ns_test_value(br.points.back()));

    double ds = cfg_.ds_initial;
    Eigen::VectorXd y = y0;
    double arclen = 0.0;
    const double close_arc = 20.0 * cfg_.ds_max;

    while ((int)br.points.size() < cfg_.max_points) {
        const Eigen::VectorXd ypred = y + ds * t;
        CorrectorResult res = correct_on_plane(ypred.head(n) * f, ypred(n), force, t, ypred,
                                               cfg_.compute_stability);
        if (!res.converged) {
            ++br.steps_rejected;
            ds *= 0.5;
            if (ds < cfg_.ds_min) {
                br.truncated = true;
                break;
            }
            continue;
        }
        Eigen::VectorXd yk(n + 1);
        yk.head(n) = res.solution.coeffs / f;
        yk(n) = res.solution.omega;
        const Eigen::VectorXd tn = tangent(res.solution.coeffs, res.solution.omega, force, t);

        arclen += (yk - y).norm();
        y = yk;
        t = tn;
        ++br.steps_accepted;
        br.points.push_back(res.solution);
        br.tangents.push_back(t);
        br.ns_test.push_back(ns_test_value(res.solution));
        if (res.iterations <= cfg_.fast_iterations) ds = std::min(ds * cfg_.grow, cfg_.ds_max);

        if (stop_on_close && arclen > close_arc && (y - y0).norm() < 2.0 * ds) {
            // land exactly on the closure plane through the start point
            CorrectorResult closing =
                correct_on_plane(res.solution.coeffs, res.solution.omega, force, t, y0);
            if (closing.converged) {
                br.points.push_back(closing.solution);
                br.tangents.push_back(
                    tangent(closing.solution.coeffs, closing.solution.omega, force, t));
                br.ns_test.push_back(ns_test_value(closing.solution));
            }
            br.closed = true;
            break;
        }
        if (y(n) > omega_hi || y(n) < omega_lo) break;
    }
    return br;
}

void Continuation::finalize(Branch& branch) const {
    const auto brackets = detect_bifurcations(branch);
    for (const auto& b : brackets) {
        BifurcationPoint loc = localize(branch, b);
        // an NS bracket that cannot be refined is an eigenvalue collision
        // (two real exponents merging), not a bifurcation
        if (loc.kind == BifurcationPoint::Kind::neimark_sacker && !loc.refined) continue;
        branch.bifurcations.push_back(std::move(loc));
    }
}

Branch Continuation::continue_branch(double force, double omega_lo, double omega_hi) const {
    // low-amplitude start from the closed-form receptance; ramp the forcing
    // if the guess is outside the Newton basin
    Eigen::VectorXd guess = hbm_.linear_receptance_coeffs(omega_lo, force);
    CorrectorResult res = correct(guess, omega_lo, force);
    if (!res.converged) {
        Eigen::VectorXd z = Eigen::VectorXd::Zero(hbm_.size());
        bool ok = false;
        for (int steps = 4; steps <= 64 && !ok; steps *= 2) {
            z.setZero();
            ok = true;
            for (int i = 1; i <= steps; ++i) {
                const double fi = force * i / steps;
                res = correct(i == 1 ? hbm_.linear_receptance_coeffs(omega_lo, fi) : z, omega_lo, fi);
                if (!res.converged) {
                    ok = false;
                    break;
                }
                z = res.solution.coeffs;
            }
        }
        if (!ok) {
            Branch br;
            br.force = force;
            br.harmonics = hbm_.harmonics();
            br.truncated = true;
            return br;
        }
    }
    Branch br = march(res.solution, force, omega_lo, omega_hi, +1.0, false);
    finalize(br);
    return br;
}

Branch Continuation::continue_from(const HarmonicSolution& seed, double omega_lo,
                                   double omega_hi) const {
    CorrectorResult res = correct(seed.coeffs, seed.omega, seed.force);
    if (!res.converged) {
        Branch br;
        br.force = seed.force;
        br.harmonics = hbm_.harmonics();
        br.truncated = true;
        return br;
    }
    Branch br = march(res.solution, seed.force, omega_lo, omega_hi, +1.0, true);
    if (!br.closed && !br.truncated) {
        // open branch: also walk the other direction so the caller sees the
        // full segment through the seed
        Branch back = march(res.solution, seed.force, omega_lo, omega_hi, -1.0, false);
        std::reverse(back.points.begin(), back.points.end());
        std::reverse(back.tangents.begin(), back.tangents.end());
        std::reverse(back.ns_test.begin(), back.ns_test.end());
        for (auto& tg : back.tangents) tg = -tg;
        back.points.pop_back();
        back.tangents.pop_back();
        back.ns_test.pop_back();
        back.points.insert(back.points.end(), br.points.begin(), br.points.end());
        back.tangents.insert(back.tangents.end(), br.tangents.begin(), br.tangents.end());
        back.ns_test.insert(back.ns_test.end(), br.ns_test.begin(), br.ns_test.end());
        back.steps_accepted += br.steps_accepted;
        back.steps_rejected += br.steps_rejected;
        back.truncated = br.truncated;
        br = std::move(back);
    }
    finalize(br);
    return br;
}

std::vector<BifurcationPoint> Continuation::detect_bifurcations(const Branch& branch) const {
    std::vector<BifurcationPoint> out;
    for (size_t i = 1; i < branch.points.size(); ++i) {
        const double t0 = branch.tangents[i - 1](hbm_.size());
        const double t1 = branch.tangents[i](hbm_.size());
        if (t0 * t1 < 0.0) {
            BifurcationPoint b;
            b.kind = BifurcationPoint::Kind::fold;
            b.bracket_lo = (int)i - 1;
            b.bracket_hi = (int)i;
            b.test_value = std::abs(t0) < std::abs(t1) ? t0 : t1;
            b.solution = std::abs(t0) < std::abs(t1) ? branch.points[i - 1] : branch.points[i];
            out.push_back(std::move(b));
        }
        const double p0 = branch.ns_test[i - 1];
        const double p1 = branch.ns_test[i];
        if (p0 * p1 < 0.0 && std::isfinite(p0) && std::isfinite(p1)) {
            BifurcationPoint b;
            b.kind = BifurcationPoint::Kind::neimark_sacker;
            b.bracket_lo = (int)i - 1;
            b.bracket_hi = (int)i;
            b.test_value = std::abs(p0) < std::abs(p1) ? p0 : p1;
            b.solution = std::abs(p0) < std::abs(p1) ? branch.points[i - 1] : branch.points[i];
            out.push_back(std::move(b));
        }
    }
    return out;
}

BifurcationPoint Continuation::localize(const Branch& branch,
                                        const BifurcationPoint& bracket) const {
    BifurcationPoint out = bracket;
    const int n = hbm_.size();
    const double force = branch.force;
    const double f = force / hbm_.params().k1;
    const auto& pa = branch.points[bracket.bracket_lo];
    const auto& pb = branch.points[bracket.bracket_hi];

    Eigen::VectorXd ya(n + 1), yb(n + 1);
    ya.head(n) = pa.coeffs / f;
    ya(n) = pa.omega;
    yb.head(n) = pb.coeffs / f;
    yb(n) = pb.omega;
    Eigen::VectorXd dirsec = (yb - ya).normalized();
    const Eigen::VectorXd tref = branch.tangents[bracket.bracket_lo];

    const bool need_hill = bracket.kind == BifurcationPoint::Kind::neimark_sacker;
    auto eval = [&](const Eigen::VectorXd& ypt, HarmonicSolution& sol_out, double& test_out,
                    Eigen::VectorXd& y_out) -> bool {
        CorrectorResult res = correct_on_plane(ypt.head(n) * f, ypt(n), force, dirsec, ypt,
                                               need_hill || cfg_.compute_stability);
        if (!res.converged) return false;
        y_out.resize(n + 1);
        y_out.head(n) = res.solution.coeffs / f;
        y_out(n) = res.solution.omega;
        if (bracket.kind == BifurcationPoint::Kind::fold) {
            Eigen::VectorXd t = tangent(res.solution.coeffs, res.solution.omega, force, tref);
            if (t.dot(tref) < 0.0) t = -t;
            test_out = t(n);
        } else {
            test_out = ns_test_value(res.solution);
        }
        sol_out = std::move(res.solution);
        return true;
    };

    double ga, gb;
    if (bracket.kind == BifurcationPoint::Kind::fold) {
        ga = branch.tangents[bracket.bracket_lo](n);
        gb = branch.tangents[bracket.bracket_hi](n);
    } else {
        ga = branch.ns_test[bracket.bracket_lo];
        gb = branch.ns_test[bracket.bracket_hi];
    }
    if (ga * gb > 0.0) return out;  // not a valid bracket

    double sa = 0.0, sb = (yb - ya).norm();
    HarmonicSolution best = std::abs(ga) < std::abs(gb) ? pa : pb;
    double best_test = std::abs(ga) < std::abs(gb) ? ga : gb;
    int side = 0;  // Illinois bookkeeping
    for (int it = 0; it < 60; ++it) {
        double s = (sa * gb - sb * ga) / (gb - ga);
        const double w = sb - sa;
        s = std::clamp(s, sa + 0.01 * w, sb - 0.01 * w);
        HarmonicSolution sol;
        double g;
        Eigen::VectorXd yk;
        if (!eval(ya + s * dirsec, sol, g, yk)) break;
        if (std::abs(g) < std::abs(best_test)) {
            best = sol;
            best_test = g;
        }
        if (std::abs(g) <= kTestTol) {
            out.solution = std::move(sol);
            out.test_value = g;
            out.refined = true;
            return out;
        }
        if (g * ga < 0.0) {
            sb = s;
            gb = g;
            if (side == -1) ga *= 0.5;
            side = -1;
        } else {
            sa = s;
            ga = g;
            if (side == +1) gb *= 0.5;
            side = +1;
        }
        // translate the bracket width into an omega width via the secant
        if ((sb - sa) * std::abs(dirsec(n)) < kOmegaTol && (sb - sa) < 1e2 * kOmegaTol) {
            // converged in position; accept if the test function is small on
            // the scale of its jump across the bracket, else it is a
            // discontinuous crossing
            out.solution = std::move(best);
            out.test_value = best_test;
            out.refined = std::abs(best_test) <= 1e3 * kTestTol;
            return out;
        }
    }
    out.solution = std::move(best);
    out.test_value = best_test;
    out.refined = std::abs(best_test) <= kTestTol;
    return out;
}

std::optional<Branch> Continuation::find_drc(double force, const DrcConfig& cfg,
                                             std::optional<HarmonicSolution> seed) const {
    const double wn = hbm_.params().natural_frequency();
    const double lo = cfg.omega_lo > 0.0 ? cfg.omega_lo : 0.3 * wn;
    const double hi = cfg.omega_hi > 0.0 ? cfg.omega_hi : 4.5 * wn;

    if (seed) {
        Branch br = continue_from(*seed, lo, hi);
        if (br.closed) return br;
    }
    const double f = force / hbm_.params().k1;
    std::vector<double> probes = cfg.probe_omegas;
    if (probes.empty()) probes = {1.8 * wn, 2.0 * wn, 2.2 * wn};
    for (const double om : probes) {
        const double low_amp = hbm_.amplitude(hbm_.linear_receptance_coeffs(om, force));
        std::vector<HarmonicSolution> found;
        for (int j = 1; j <= cfg.ladder_steps; ++j) {
            const double a = cfg.ladder_max_scale * f * j / cfg.ladder_steps;
            Eigen::VectorXd z = Eigen::VectorXd::Zero(hbm_.size());
            z(hbm_.index(0, 1)) = a;
            z(hbm_.index(1, 1)) = 0.8 * a;
            CorrectorResult res = correct(z, om, force);
            if (!res.converged) continue;
            const double amp = hbm_.amplitude(res.solution.coeffs);
            if (amp < 3.0 * low_amp) continue;  // fell back to the main branch
            bool dup = false;
            for (const auto& s : found)
                if (std::abs(hbm_.amplitude(s.coeffs) - amp) < 1e-8 * std::max(1.0, amp)) dup = true;
            if (!dup) found.push_back(std::move(res.solution));
        }
        // try high-amplitude candidates first
        std::sort(found.begin(), found.end(), [&](const auto& a, const auto& b) {
            return hbm_.amplitude(a.coeffs) > hbm_.amplitude(b.coeffs);
        });
        for (const auto& s : found) {
            Branch br = continue_from(s, lo, hi);
            if (br.closed) return br;
        }
    }
    return std::nullopt;
}

}  // namespace nltva
