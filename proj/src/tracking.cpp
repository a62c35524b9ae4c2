#include "nltva/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nltva {

namespace {

constexpr double kKappaFloor = 1e-3;  // times omega_n1: NS degenerates to fold below this

Eigen::VectorXd real_null_vector(const Eigen::MatrixXd& J) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullV);
    Eigen::VectorXd v = svd.matrixV().col(J.cols() - 1);
    return v / v.norm();
}

// assembles and solves the fold/NS extended systems; shared by the Tracker
// and the turning-point polish
struct FoldSystem {
    const HarmonicBalance& hbm;
    int n;
    double fscale, kscale;

    explicit FoldSystem(const HarmonicBalance& h, double force_ref)
        : hbm(h), n(h.size()), fscale(std::max(force_ref, 1e-12)), kscale(h.params().k1) {}

    int dim() const { return 2 * n + 2; }

    Eigen::VectorXd value(const Eigen::VectorXd& Y, const Eigen::VectorXd& c) const {
        const auto z = Y.head(n);
        const auto phi = Y.segment(n, n);
        const double om = Y(2 * n), F = Y(2 * n + 1);
        Eigen::VectorXd out(2 * n + 1);
        out.head(n) = hbm.residual(z, om, F) / fscale;
        out.segment(n, n) = hbm.jacobian_coeffs(z, om) * phi / kscale;
        out(2 * n) = c.dot(phi) - 1.0;
        return out;
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd& Y, const Eigen::VectorXd& c) const {
        const auto z = Y.head(n);
        const Eigen::VectorXd phi = Y.segment(n, n);
        const double om = Y(2 * n), F = Y(2 * n + 1);
        const auto d = hbm.jacobian(z, om, F);
        Eigen::MatrixXd Jb = Eigen::MatrixXd::Zero(2 * n + 1, dim());
        Jb.topLeftCorner(n, n) = d.coeffs / fscale;
        Jb.block(0, 2 * n, n, 1) = d.omega / fscale;
        Jb.block(0, 2 * n + 1, n, 1) = d.force / fscale;
        Jb.block(n, 0, n, n) = hbm.hessian_product(z, phi) / kscale;
        Jb.block(n, n, n, n) = d.coeffs / kscale;
        Jb.block(n, 2 * n, n, 1) = hbm.stiffness_omega_derivative(phi, om) / kscale;
        Jb.block(2 * n, n, 1, n) = c.transpose();
        return Jb;
    }
};

struct NsSystem {
    const HarmonicBalance& hbm;
    int n;
    double fscale, kscale;

    explicit NsSystem(const HarmonicBalance& h, double force_ref)
        : hbm(h), n(h.size()), fscale(std::max(force_ref, 1e-12)), kscale(h.params().k1) {}

    int dim() const { return 3 * n + 3; }

    Eigen::VectorXd value(const Eigen::VectorXd& Y, const Eigen::VectorXd& c) const {
        const auto z = Y.head(n);
        const auto pr = Y.segment(n, n);
        const auto pi = Y.segment(2 * n, n);
        const double om = Y(3 * n), F = Y(3 * n + 1), ka = Y(3 * n + 2);
        const auto h = hbm.hill_matrices(z, om);
        Eigen::VectorXd out(3 * n + 2);
        out.head(n) = hbm.residual(z, om, F) / fscale;
        out.segment(n, n) =
            (h.stiffness * pr - ka * (h.damping * pi) - ka * ka * (h.mass * pr)) / kscale;
        out.segment(2 * n, n) =
            (h.stiffness * pi + ka * (h.damping * pr) - ka * ka * (h.mass * pi)) / kscale;
        out(3 * n) = c.dot(pr) - 1.0;
        out(3 * n + 1) = c.dot(pi);
        return out;
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd& Y, const Eigen::VectorXd& c) const {
        const auto z = Y.head(n);
        const Eigen::VectorXd pr = Y.segment(n, n);
        const Eigen::VectorXd pi = Y.segment(2 * n, n);
        const double om = Y(3 * n), F = Y(3 * n + 1), ka = Y(3 * n + 2);
        const auto d = hbm.jacobian(z, om, F);
        const auto h = hbm.hill_matrices(z, om);
        Eigen::MatrixXd Jb = Eigen::MatrixXd::Zero(3 * n + 2, dim());
        Jb.topLeftCorner(n, n) = d.coeffs / fscale;
        Jb.block(0, 3 * n, n, 1) = d.omega / fscale;
        Jb.block(0, 3 * n + 1, n, 1) = d.force / fscale;

        const Eigen::MatrixXd KM = (h.stiffness - ka * ka * h.mass) / kscale;
        // real part rows
        Jb.block(n, 0, n, n) = hbm.hessian_product(z, pr) / kscale;
        Jb.block(n, n, n, n) = KM;
        Jb.block(n, 2 * n, n, n) = -(ka / kscale) * h.damping;
        Jb.block(n, 3 * n, n, 1) =
            (hbm.stiffness_omega_derivative(pr, om) - ka * hbm.hill_damping_omega_derivative(pi)) /
            kscale;
        Jb.block(n, 3 * n + 2, n, 1) = -(h.damping * pi + 2.0 * ka * (h.mass * pr)) / kscale;
        // imaginary part rows
        Jb.block(2 * n, 0, n, n) = hbm.hessian_product(z, pi) / kscale;
        Jb.block(2 * n, n, n, n) = (ka / kscale) * h.damping;
        Jb.block(2 * n, 2 * n, n, n) = KM;
        Jb.block(2 * n, 3 * n, n, 1) =
            (hbm.stiffness_omega_derivative(pi, om) + ka * hbm.hill_damping_omega_derivative(pr)) /
            kscale;
        Jb.block(2 * n, 3 * n + 2, n, 1) = (h.damping * pr - 2.0 * ka * (h.mass * pi)) / kscale;

        Jb.block(3 * n, n, 1, n) = c.transpose();
        Jb.block(3 * n + 1, 2 * n, 1, n) = c.transpose();
        return Jb;
    }
};

// Newton on an extended system with one closing row: either the parameter
// F is pinned (seed correction) or an arclength plane is used (stepping).
template <class System>
bool extended_correct(const System& sys, Eigen::VectorXd& Y, const Eigen::VectorXd& c,
                      const Eigen::VectorXd* t_scaled, const Eigen::VectorXd* y_pred,
                      double f_fix, int f_index, int newton_max, double tol, int* iters) {
    const int m = sys.dim();
    Eigen::MatrixXd A(m, m);
    Eigen::VectorXd rhs(m);
    for (int it = 0; it <= newton_max; ++it) {
        const Eigen::VectorXd val = sys.value(Y, c);
        double closing;
        if (t_scaled)
            closing = t_scaled->dot(Y - *y_pred);
        else
            closing = Y(f_index) - f_fix;
        if (iters) *iters = it;
        if (val.norm() < tol && std::abs(closing) < 1e-10) return true;
        if (it == newton_max) return false;
        A.topRows(m - 1) = sys.jacobian(Y, c);
        if (t_scaled)
            A.row(m - 1) = t_scaled->transpose();
        else
            A.row(m - 1) = Eigen::RowVectorXd::Unit(m, f_index);
        rhs.head(m - 1) = val;
        rhs(m - 1) = closing;
        Y -= A.partialPivLu().solve(rhs);
        if (!Y.allFinite()) return false;
    }
    return false;
}

template <class System>
Eigen::VectorXd extended_tangent(const System& sys, const Eigen::VectorXd& Y,
                                 const Eigen::VectorXd& c, const Eigen::VectorXd& weights,
                                 const Eigen::VectorXd* prev) {
    const int m = sys.dim();
    Eigen::VectorXd t;
    if (prev) {
        Eigen::MatrixXd A(m, m);
        A.topRows(m - 1) = sys.jacobian(Y, c);
        A.row(m - 1) = prev->transpose();
        t = A.partialPivLu().solve(Eigen::VectorXd::Unit(m, m - 1));
    } else {
        t = real_null_vector(sys.jacobian(Y, c));
    }
    const double wn = (t.array() * weights.array()).matrix().norm();
    return t / (wn > 0.0 ? wn : t.norm());
}

}  // namespace

Tracker::Tracker(const HarmonicBalance& hbm, TrackConfig cfg) : hbm_(hbm), cfg_(cfg) {}

TrackedPoint Tracker::fold_seed(const BifurcationPoint& seed) const {
    if (seed.kind != BifurcationPoint::Kind::fold)
        throw std::invalid_argument("track_fold: seed is not a fold");
    const int n = hbm_.size();
    const FoldSystem sys(hbm_, seed.solution.force);
    Eigen::VectorXd phi = real_null_vector(hbm_.jacobian_coeffs(seed.solution.coeffs,
                                                                seed.solution.omega));
    Eigen::VectorXd Y(2 * n + 2);
    Y.head(n) = seed.solution.coeffs;
    Y.segment(n, n) = phi;
    Y(2 * n) = seed.solution.omega;
    Y(2 * n + 1) = seed.solution.force;
    if (!extended_correct(sys, Y, phi, nullptr, nullptr, seed.solution.force, 2 * n + 1,
                          cfg_.newton_max, cfg_.tolerance, nullptr))
        throw std::invalid_argument("track_fold: seed does not converge onto the fold system");
    TrackedPoint p;
    p.solution = seed.solution;
    p.solution.coeffs = Y.head(n);
    p.solution.omega = Y(2 * n);
    p.solution.force = Y(2 * n + 1);
    p.null_vector = Y.segment(n, n).normalized();
    return p;
}

BifurcationBranch Tracker::track_fold_dir(TrackedPoint start, double dir) const {
    const int n = hbm_.size();
    const FoldSystem sys(hbm_, start.solution.force);
    const double fref = std::max(start.solution.force, 1e-3) / hbm_.params().k1;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(2 * n + 2);
    w.head(n).setConstant(1.0 / fref);
    w(2 * n) = 1.0;
    w(2 * n + 1) = 1.0 / fref;
    const double om_cap = cfg_.omega_cap_scale * hbm_.params().natural_frequency();

    BifurcationBranch br;
    br.kind = BifurcationPoint::Kind::fold;
    Eigen::VectorXd Y(2 * n + 2);
    Y.head(n) = start.solution.coeffs;
    Y.segment(n, n) = start.null_vector;
    Y(2 * n) = start.solution.omega;
    Y(2 * n + 1) = start.solution.force;
    br.points.push_back(start);

    Eigen::VectorXd c = start.null_vector;
    Eigen::VectorXd t = extended_tangent(sys, Y, c, w, nullptr);
    if (t(2 * n + 1) * dir < 0.0) t = -t;
    if (std::abs(t(2 * n + 1)) < 1e-12 && t(2 * n) * dir < 0.0) t = -t;

    double ds = cfg_.ds_initial;
    while ((int)br.points.size() < cfg_.max_points) {
        Eigen::VectorXd Yp = Y + ds * t;
        Eigen::VectorXd Yk = Yp;
        int iters = 0;
        c = Y.segment(n, n).normalized();
        // arclength plane in the weighted metric
        Eigen::VectorXd t_plane = (t.array() * w.array().square()).matrix();
        if (!extended_correct(sys, Yk, c, &t_plane, &Yp, 0.0, 0, cfg_.newton_max,
                              cfg_.tolerance, &iters) ||
            Yk(2 * n) <= 0.0 || Yk(2 * n + 1) <= 0.0) {
            ++br.steps_rejected;
            ds *= 0.5;
            if (ds < cfg_.ds_min) {
                br.truncated = true;
                break;
            }
            continue;
        }
        Eigen::VectorXd tn = extended_tangent(sys, Yk, c, w, &t);
        if (tn.dot(t) < 0.0) tn = -tn;
        Y = Yk;
        Y.segment(n, n).normalize();
        t = tn;
        TrackedPoint p;
        p.solution.coeffs = Y.head(n);
        p.solution.omega = Y(2 * n);
        p.solution.force = Y(2 * n + 1);
        p.solution.harmonics = hbm_.harmonics();
        p.null_vector = Y.segment(n, n);
        br.points.push_back(std::move(p));
        if (iters <= 3) ds = std::min(ds * 1.3, cfg_.ds_max);
        if (Y(2 * n + 1) < cfg_.force_min || Y(2 * n + 1) > cfg_.force_max ||
            Y(2 * n) > om_cap)
            break;
    }
    return br;
}

BifurcationBranch Tracker::track_fold(const BifurcationPoint& seed) const {
    TrackedPoint start = fold_seed(seed);
    BifurcationBranch up = track_fold_dir(start, +1.0);
    BifurcationBranch down = track_fold_dir(start, -1.0);
    BifurcationBranch br;
    br.kind = BifurcationPoint::Kind::fold;
    br.truncated = up.truncated || down.truncated;
    br.steps_rejected = up.steps_rejected + down.steps_rejected;
    br.points.assign(down.points.rbegin(), down.points.rend());
    br.points.insert(br.points.end(), up.points.begin() + 1, up.points.end());
    return br;
}

TrackedPoint Tracker::ns_seed(const BifurcationPoint& seed) const {
    if (seed.kind != BifurcationPoint::Kind::neimark_sacker)
        throw std::invalid_argument("track_ns: seed is not a Neimark-Sacker point");
    const int n = hbm_.size();
    const double wn = hbm_.params().natural_frequency();
    // crossing pair: smallest |Re| among complex exponents
    double kappa = 0.0, best = std::numeric_limits<double>::infinity();
    for (const auto& e : seed.solution.floquet)
        if (std::abs(e.imag()) > kKappaFloor * wn && std::abs(e.real()) < best) {
            best = std::abs(e.real());
            kappa = std::abs(e.imag());
        }
    if (!(kappa > 0.0))
        throw std::invalid_argument("track_ns: seed has no complex Floquet pair");

    const auto h = hbm_.hill_matrices(seed.solution.coeffs, seed.solution.omega);
    Eigen::MatrixXcd P = h.stiffness.cast<std::complex<double>>() +
                         std::complex<double>(0.0, kappa) * h.damping.cast<std::complex<double>>() -
                         (kappa * kappa) * h.mass.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(P, Eigen::ComputeFullV);
    Eigen::VectorXcd v = svd.matrixV().col(n - 1);

    const NsSystem sys(hbm_, seed.solution.force);
    Eigen::VectorXd Y(3 * n + 3);
    Y.head(n) = seed.solution.coeffs;
    Y.segment(n, n) = v.real();
    Y.segment(2 * n, n) = v.imag();
    Y(3 * n) = seed.solution.omega;
    Y(3 * n + 1) = seed.solution.force;
    Y(3 * n + 2) = kappa;
    Eigen::VectorXd c = v.real().normalized();
    if (!extended_correct(sys, Y, c, nullptr, nullptr, seed.solution.force, 3 * n + 1,
                          cfg_.newton_max, cfg_.tolerance, nullptr))
        throw std::invalid_argument("track_ns: seed does not converge onto the NS system");
    TrackedPoint p;
    p.solution = seed.solution;
    p.solution.coeffs = Y.head(n);
    p.solution.omega = Y(3 * n);
    p.solution.force = Y(3 * n + 1);
    p.null_vector = Y.segment(n, 2 * n);
    p.kappa = Y(3 * n + 2);
    return p;
}

BifurcationBranch Tracker::track_ns_dir(TrackedPoint start, double dir) const {
    const int n = hbm_.size();
    const NsSystem sys(hbm_, start.solution.force);
    const double fref = std::max(start.solution.force, 1e-3) / hbm_.params().k1;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(3 * n + 3);
    w.head(n).setConstant(1.0 / fref);
    w(3 * n) = 1.0;
    w(3 * n + 1) = 1.0 / fref;
    w(3 * n + 2) = 1.0;
    const double wn = hbm_.params().natural_frequency();
    const double om_cap = cfg_.omega_cap_scale * wn;

    BifurcationBranch br;
    br.kind = BifurcationPoint::Kind::neimark_sacker;
    Eigen::VectorXd Y(3 * n + 3);
    Y.head(n) = start.solution.coeffs;
    Y.segment(n, 2 * n) = start.null_vector;
    Y(3 * n) = start.solution.omega;
    Y(3 * n + 1) = start.solution.force;
    Y(3 * n + 2) = start.kappa;
    br.points.push_back(start);

    Eigen::VectorXd c = Y.segment(n, n);
    c /= std::sqrt(Y.segment(n, 2 * n).squaredNorm());
    Eigen::VectorXd t = extended_tangent(sys, Y, c, w, nullptr);
    if (t(3 * n + 1) * dir < 0.0) t = -t;

    double ds = cfg_.ds_initial;
    while ((int)br.points.size() < cfg_.max_points) {
        Eigen::VectorXd Yp = Y + ds * t;
        Eigen::VectorXd Yk = Yp;
        int iters = 0;
        const double nv = std::sqrt(Y.segment(n, 2 * n).squaredNorm());
        c = Y.segment(n, n) / nv;
        Eigen::VectorXd t_plane = (t.array() * w.array().square()).matrix();
        if (!extended_correct(sys, Yk, c, &t_plane, &Yp, 0.0, 0, cfg_.newton_max,
                              cfg_.tolerance, &iters) ||
            Yk(3 * n) <= 0.0 || Yk(3 * n + 1) <= 0.0) {
            ++br.steps_rejected;
            ds *= 0.5;
            if (ds < cfg_.ds_min) {
                br.truncated = true;
                break;
            }
            continue;
        }
        if (std::abs(Yk(3 * n + 2)) < kKappaFloor * wn) {
            br.degenerate = true;  // collides with a fold; exponent pair turns real
            break;
        }
        Eigen::VectorXd tn = extended_tangent(sys, Yk, c, w, &t);
        if (tn.dot(t) < 0.0) tn = -tn;
        Y = Yk;
        const double nrm = std::sqrt(Y.segment(n, 2 * n).squaredNorm());
        Y.segment(n, 2 * n) /= nrm;
        t = tn;
        TrackedPoint p;
        p.solution.coeffs = Y.head(n);
        p.solution.omega = Y(3 * n);
        p.solution.force = Y(3 * n + 1);
        p.solution.harmonics = hbm_.harmonics();
        p.null_vector = Y.segment(n, 2 * n);
        p.kappa = Y(3 * n + 2);
        br.points.push_back(std::move(p));
        if (iters <= 3) ds = std::min(ds * 1.3, cfg_.ds_max);
        if (Y(3 * n + 1) < cfg_.force_min || Y(3 * n + 1) > cfg_.force_max || Y(3 * n) > om_cap)
            break;
    }
    return br;
}

BifurcationBranch Tracker::track_ns(const BifurcationPoint& seed) const {
    TrackedPoint start = ns_seed(seed);
    BifurcationBranch up = track_ns_dir(start, +1.0);
    BifurcationBranch down = track_ns_dir(start, -1.0);
    BifurcationBranch br;
    br.kind = BifurcationPoint::Kind::neimark_sacker;
    br.truncated = up.truncated || down.truncated;
    br.degenerate = up.degenerate || down.degenerate;
    br.steps_rejected = up.steps_rejected + down.steps_rejected;
    br.points.assign(down.points.rbegin(), down.points.rend());
    br.points.insert(br.points.end(), up.points.begin() + 1, up.points.end());
    return br;
}

namespace {

// quadratic-fit vertex of F(s) through three points, then one bordered
// Newton polish on the interpolated extended state
TurningPoint refine_turning(const BifurcationBranch& branch, const HarmonicBalance& hbm,
                            const TrackConfig& cfg, int i) {
    const int n = hbm.size();
    const auto& pm = branch.points[i - 1];
    const auto& p0 = branch.points[i];
    const auto& pp = branch.points[i + 1];
    const double fref = std::max(p0.solution.force, 1e-3) / hbm.params().k1;

    auto pack = [&](const TrackedPoint& p) {
        Eigen::VectorXd Y(n + (int)p.null_vector.size() + 3);
        Y.head(n) = p.solution.coeffs;
        Y.segment(n, p.null_vector.size()) = p.null_vector;
        Y(n + p.null_vector.size()) = p.solution.omega;
        Y(n + p.null_vector.size() + 1) = p.solution.force;
        Y(n + p.null_vector.size() + 2) = p.kappa;
        return Y;
    };
    const Eigen::VectorXd Ym = pack(pm), Y0 = pack(p0), Yp = pack(pp);
    auto dist = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        double d2 = ((a.head(n) - b.head(n)) / fref).squaredNorm();
        const int m = (int)a.size();
        d2 += std::pow(a(m - 3) - b(m - 3), 2) + std::pow((a(m - 2) - b(m - 2)) / fref, 2);
        return std::sqrt(d2);
    };
    const double s0 = -dist(Ym, Y0), s1 = 0.0, s2 = dist(Yp, Y0);
    const double f0 = pm.solution.force, f1 = p0.solution.force, f2 = pp.solution.force;
    // Lagrange quadratic F(s): vertex
    const double d01 = (f1 - f0) / (s1 - s0), d12 = (f2 - f1) / (s2 - s1);
    const double a2 = (d12 - d01) / (s2 - s0);
    double sv = 0.5 * (s0 + s1 - d01 / (a2 != 0.0 ? a2 : 1e300));
    sv = std::clamp(sv, s0, s2);

    // quadratic interpolation of the full extended state at sv
    auto lag = [&](double s) {
        const double l0 = (s - s1) * (s - s2) / ((s0 - s1) * (s0 - s2));
        const double l1 = (s - s0) * (s - s2) / ((s1 - s0) * (s1 - s2));
        const double l2 = (s - s0) * (s - s1) / ((s2 - s0) * (s2 - s1));
        return (l0 * Ym + l1 * Y0 + l2 * Yp).eval();
    };
    Eigen::VectorXd Yv = lag(sv);
    const Eigen::VectorXd secant = (Yp - Ym).normalized();

    TurningPoint tp;
    tp.index = i;
    tp.is_minimum = a2 > 0.0;

    const int m = (int)Yv.size();
    Eigen::VectorXd Yfull = Yv;
    bool polished = false;
    if (branch.kind == BifurcationPoint::Kind::fold) {
        const FoldSystem sys(hbm, p0.solution.force);
        Eigen::VectorXd Ysys = Yfull.head(2 * n + 2);
        const Eigen::VectorXd Yplane = Ysys;
        const Eigen::VectorXd c = Ysys.segment(n, n).normalized();
        Eigen::VectorXd plane = secant.head(2 * n + 2);
        polished = extended_correct(sys, Ysys, c, &plane, &Yplane, 0.0, 0, cfg.newton_max,
                                    cfg.tolerance, nullptr);
        if (polished) Yfull.head(2 * n + 2) = Ysys;
        tp.force = Yfull(2 * n + 1);
        tp.omega = Yfull(2 * n);
    } else {
        const NsSystem sys(hbm, p0.solution.force);
        Eigen::VectorXd Ysys = Yfull.head(3 * n + 3);
        const Eigen::VectorXd Yplane = Ysys;
        Eigen::VectorXd c = Ysys.segment(n, n);
        c /= std::sqrt(Ysys.segment(n, 2 * n).squaredNorm());
        Eigen::VectorXd plane = secant.head(3 * n + 3);
        polished = extended_correct(sys, Ysys, c, &plane, &Yplane, 0.0, 0, cfg.newton_max,
                                    cfg.tolerance, nullptr);
        if (polished) Yfull.head(3 * n + 3) = Ysys;
        tp.force = Yfull(m - 2);
        tp.omega = Yfull(m - 3);
    }
    if (!polished) {  // fall back to the fitted vertex value
        const double l0 = (sv - s1) * (sv - s2) / ((s0 - s1) * (s0 - s2));
        const double l1 = (sv - s0) * (sv - s2) / ((s1 - s0) * (s1 - s2));
        const double l2 = (sv - s0) * (sv - s1) / ((s2 - s0) * (s2 - s1));
        tp.force = l0 * f0 + l1 * f1 + l2 * f2;
        tp.omega = p0.solution.omega;
    }
    tp.amplitude = hbm.amplitude(Yfull.head(n));
    return tp;
}

}  // namespace

std::vector<TurningPoint> turning_points(const BifurcationBranch& branch,
                                         const HarmonicBalance& hbm, TrackConfig cfg) {
    std::vector<TurningPoint> out;
    const auto& pts = branch.points;
    for (int i = 1; i + 1 < (int)pts.size(); ++i) {
        const double d0 = pts[i].solution.force - pts[i - 1].solution.force;
        const double d1 = pts[i + 1].solution.force - pts[i].solution.force;
        if (d0 * d1 < 0.0) out.push_back(refine_turning(branch, hbm, cfg, i));
    }
    return out;
}

DrcEvents find_drc_events(const BifurcationBranch& branch, const HarmonicBalance& hbm,
                          TrackConfig cfg) {
    DrcEvents ev;
    const auto tps = turning_points(branch, hbm, cfg);
    for (const auto& tp : tps) {
        if (!tp.is_minimum && (!ev.merge || tp.force > ev.merge->force)) ev.merge = tp;
    }
    if (!ev.merge) return ev;  // no folding of the branch: no detached curve
    for (const auto& tp : tps) {
        if (tp.is_minimum && (!ev.appear || tp.amplitude > ev.appear->amplitude)) ev.appear = tp;
    }
    if (ev.appear && !(ev.appear->force < ev.merge->force)) {
        ev.appear.reset();
        ev.merge.reset();
    }
    return ev;
}

std::optional<QpOnset> find_qp_onset(const BifurcationBranch& branch,
                                     const HarmonicBalance& hbm, TrackConfig cfg) {
    if (branch.points.size() < 2) return std::nullopt;
    int imin = 0;
    for (int i = 1; i < (int)branch.points.size(); ++i)
        if (branch.points[i].solution.force < branch.points[imin].solution.force) imin = i;
    QpOnset q;
    if (imin == 0 || imin + 1 == (int)branch.points.size()) {
        q.force = branch.points[imin].solution.force;
        q.omega = branch.points[imin].solution.omega;
        q.at_boundary = true;
        return q;
    }
    const TurningPoint tp = refine_turning(branch, hbm, cfg, imin);
    q.force = tp.force;
    q.omega = tp.omega;
    q.at_boundary = false;
    return q;
}

std::optional<HarmonicSolution> drc_seed(const BifurcationBranch& branch_b, double force,
                                         const HarmonicBalance& hbm) {
    const DrcEvents ev = find_drc_events(branch_b, hbm);
    if (!ev.appear || !ev.merge) return std::nullopt;
    if (!(force > ev.appear->force && force < ev.merge->force)) return std::nullopt;

    const auto& pts = branch_b.points;
    const int ia = ev.appear->index;
    // walk away from the appearance cusp on both detached-curve legs and take
    // the first crossing of the requested force
    for (const int step : {+1, -1}) {
        double prev = pts[ia].solution.force;
        for (int i = ia + step; i >= 0 && i < (int)pts.size(); i += step) {
            const double cur = pts[i].solution.force;
            if ((prev - force) * (cur - force) <= 0.0 && prev != cur) {
                const auto& p0 = pts[i - step];
                const auto& p1 = pts[i];
                const double th = (force - p0.solution.force) /
                                  (p1.solution.force - p0.solution.force);
                const Eigen::VectorXd z =
                    (1.0 - th) * p0.solution.coeffs + th * p1.solution.coeffs;
                const double om = (1.0 - th) * p0.solution.omega + th * p1.solution.omega;
                const Eigen::VectorXd phi =
                    ((1.0 - th) * p0.null_vector + th * p1.null_vector).normalized();
                // nudge off the fold along its null direction and correct on
                // the plane orthogonal to the nudge
                const double f = force / hbm.params().k1;
                Continuation cont(hbm);
                for (const double delta : {1.0, -1.0, 2.0, -2.0, 0.5, -0.5}) {
                    const Eigen::VectorXd zs = z + delta * f * phi;
                    Eigen::VectorXd normal(hbm.size() + 1);
                    normal.head(hbm.size()) = phi;
                    normal(hbm.size()) = 0.0;
                    Eigen::VectorXd plane_pt(hbm.size() + 1);
                    plane_pt.head(hbm.size()) = zs / f;
                    plane_pt(hbm.size()) = om;
                    auto res = cont.correct_on_plane(zs, om, force, normal, plane_pt);
                    if (res.converged) return res.solution;
                }
            }
            prev = cur;
            // stop at the next turning point: the leg ends there
            if (i > 0 && i + 1 < (int)pts.size()) {
                const double a = pts[i].solution.force - pts[i - 1].solution.force;
                const double b = pts[i + 1].solution.force - pts[i].solution.force;
                if (a * b < 0.0 && i != ia) break;
            }
        }
    }
    return std::nullopt;
}

}  // namespace nltva
