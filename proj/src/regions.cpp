#include "nltva/regions.hpp"

#include <algorithm>
#include <cmath>

namespace nltva {

OperatingRegion classify_operation(const DrcEvents& events, double force) {
    if (!events.appear || !events.merge) return OperatingRegion::safe;
    if (force < events.appear->force) return OperatingRegion::safe;
    if (force < events.merge->force) return OperatingRegion::unsafe;
    return OperatingRegion::unacceptable;
}

std::string to_string(OperatingRegion r) {
    switch (r) {
        case OperatingRegion::safe: return "safe";
        case OperatingRegion::unsafe: return "unsafe";
        default: return "unacceptable";
    }
}

SystemParams normalized_system(double epsilon, double mu1, double p_mu, double p_beta) {
    return tuned_system(1.0, 2.0 * mu1, 1.0, 1.0, epsilon, p_mu, p_beta);
}

namespace {

double omega_lo_of(const SystemParams& p, const AnalysisConfig& cfg) {
    return cfg.omega_lo > 0.0 ? cfg.omega_lo : 0.5 * p.natural_frequency();
}

double omega_hi_of(const SystemParams& p, const AnalysisConfig& cfg) {
    return cfg.omega_hi > 0.0 ? cfg.omega_hi : 4.0 * p.natural_frequency();
}

std::vector<double> fold_ladder(const SystemParams& p, const AnalysisConfig& cfg) {
    if (!cfg.fold_seed_forces.empty()) return cfg.fold_seed_forces;
    std::vector<double> out;
    if (p.knl1 > 0.0) {
        for (const double a3 : {0.005, 0.0075, 0.011, 0.016, 0.024, 0.036, 0.05})
            out.push_back(force_for_alpha3(p, a3));
    } else {
        out = {0.05, 0.1, 0.15, 0.2};
    }
    return out;
}

std::vector<double> ns_ladder(const SystemParams& p, const AnalysisConfig& cfg) {
    if (!cfg.ns_seed_forces.empty()) return cfg.ns_seed_forces;
    std::vector<double> out;
    if (p.knl1 > 0.0) {
        for (const double a3 : {0.004, 0.006, 0.009075, 0.0135, 0.02, 0.03})
            out.push_back(force_for_alpha3(p, a3));
    } else {
        out = {0.05, 0.1, 0.15};
    }
    return out;
}

// distance of a fold candidate to an already-tracked branch, in a metric
// tight enough to separate the first-peak and second-peak loci
bool on_branch(const BifurcationBranch& br, double omega, double force, double om_scale,
               double f_scale) {
    for (size_t i = 0; i + 1 < br.points.size(); ++i) {
        const double o0 = br.points[i].solution.omega, f0 = br.points[i].solution.force;
        const double o1 = br.points[i + 1].solution.omega, f1 = br.points[i + 1].solution.force;
        const double dx = (o1 - o0) / om_scale, dy = (f1 - f0) / f_scale;
        const double px = (omega - o0) / om_scale, py = (force - f0) / f_scale;
        const double len2 = dx * dx + dy * dy;
        const double t = len2 > 0.0 ? std::clamp((px * dx + py * dy) / len2, 0.0, 1.0) : 0.0;
        const double rx = px - t * dx, ry = py - t * dy;
        if (rx * rx + ry * ry < 1.0) return true;
    }
    return false;
}

}  // namespace

TrackingOutcome run_tracking(const SystemParams& params, const AnalysisConfig& cfg) {
    params.validate();
    TrackingOutcome out;
    const HarmonicBalance hbm(params, cfg.harmonics, cfg.time_samples);
    const Continuation cont(hbm, cfg.step);
    const Tracker tracker(hbm, cfg.track);
    const double wn = params.natural_frequency();
    const double om_lo = omega_lo_of(params, cfg);
    const double om_hi = omega_hi_of(params, cfg);
    const double om_scale = 0.02 * wn;

    std::vector<BifurcationBranch> fold_branches;
    for (const double F : fold_ladder(params, cfg)) {
        const Branch br = cont.continue_branch(F, om_lo, om_hi);
        // representatives: folds come in pairs along the branch (one pair per
        // overhanging peak); the pair lies on one locus, so track the first of each
        std::vector<const BifurcationPoint*> folds;
        for (const auto& b : br.bifurcations)
            if (b.kind == BifurcationPoint::Kind::fold && b.refined) folds.push_back(&b);
        for (size_t i = 0; i < folds.size(); i += 2) {
            const auto& seed = *folds[i];
            const double f_scale = 0.005 * std::max(seed.solution.force, 0.05);
            bool dup = false;
            for (const auto& fb : fold_branches)
                if (on_branch(fb, seed.solution.omega, seed.solution.force, om_scale, f_scale))
                    dup = true;
            if (dup || fold_branches.size() >= 3) continue;
            try {
                fold_branches.push_back(tracker.track_fold(seed));
            } catch (const std::invalid_argument&) {
                // seed did not sit on the fold locus; keep scanning
            }
        }
        if (fold_branches.size() >= 2) break;
    }

    // branch B carries the detached-curve events; otherwise it is the locus
    // reaching the highest frequency (second peak / merged peak folds)
    int ib = -1;
    DrcEvents best;
    for (size_t i = 0; i < fold_branches.size(); ++i) {
        const DrcEvents ev = find_drc_events(fold_branches[i], hbm, cfg.track);
        if (ev.merge && (ib < 0 || !best.merge)) {
            ib = (int)i;
            best = ev;
        }
    }
    if (ib < 0 && !fold_branches.empty()) {
        double top = -1.0;
        for (size_t i = 0; i < fold_branches.size(); ++i)
            for (const auto& p : fold_branches[i].points)
                if (p.solution.omega > top) {
                    top = p.solution.omega;
                    ib = (int)i;
                }
    }
    if (ib >= 0) {
        fold_branches[ib].label = 'B';
        out.branch_b = std::move(fold_branches[ib]);
        out.events = best;
    }
    for (size_t i = 0; i < fold_branches.size(); ++i) {
        if ((int)i == ib) continue;
        fold_branches[i].label = 'A';
        out.branch_a = std::move(fold_branches[i]);
        break;
    }

    for (const double F : ns_ladder(params, cfg)) {
        const Branch br = cont.continue_branch(F, om_lo, om_hi);
        const BifurcationPoint* ns = nullptr;
        for (const auto& b : br.bifurcations)
            if (b.kind == BifurcationPoint::Kind::neimark_sacker && b.refined) {
                ns = &b;
                break;
            }
        if (!ns) continue;
        try {
            out.ns_branch = tracker.track_ns(*ns);
            out.qp_onset = find_qp_onset(*out.ns_branch, hbm, cfg.track);
            break;
        } catch (const std::invalid_argument&) {
        }
    }
    return out;
}

std::optional<double> PeakRecord::first_peak() const {
    if (peaks.empty()) return std::nullopt;
    if (peaks.size() == 1) return peaks[0].amplitude;
    // two dominant peaks, reported in frequency order
    std::vector<Peak> byamp = peaks;
    std::sort(byamp.begin(), byamp.end(),
              [](const Peak& a, const Peak& b) { return a.amplitude > b.amplitude; });
    const Peak& p0 = byamp[0];
    const Peak& p1 = byamp[1];
    return p0.omega < p1.omega ? p0.amplitude : p1.amplitude;
}

std::optional<double> PeakRecord::second_peak() const {
    if (peaks.size() < 2) return std::nullopt;
    std::vector<Peak> byamp = peaks;
    std::sort(byamp.begin(), byamp.end(),
              [](const Peak& a, const Peak& b) { return a.amplitude > b.amplitude; });
    const Peak& p0 = byamp[0];
    const Peak& p1 = byamp[1];
    return p0.omega < p1.omega ? p1.amplitude : p0.amplitude;
}

double PeakRecord::max_amplitude() const {
    double m = 0.0;
    for (const auto& p : peaks) m = std::max(m, p.amplitude);
    for (const auto& p : drc_peaks) m = std::max(m, p.amplitude);
    return m;
}

namespace {

std::vector<Peak> branch_peaks(const Branch& br, const HarmonicBalance& hbm) {
    std::vector<Peak> out;
    const int n = (int)br.points.size();
    if (n < 3) return out;
    std::vector<double> amp(n);
    for (int i = 0; i < n; ++i) amp[i] = hbm.amplitude(br.points[i].coeffs);
    for (int i = 1; i + 1 < n; ++i) {
        if (!(amp[i] > amp[i - 1] && amp[i] > amp[i + 1])) continue;
        // quadratic refinement in the branch parameter
        const double d1 = amp[i] - amp[i - 1], d2 = amp[i + 1] - amp[i];
        const double denom = d1 - d2;
        const double s = denom > 0.0 ? std::clamp(0.5 * (d1 + d2) / denom, -1.0, 1.0) : 0.0;
        Peak p;
        p.amplitude = amp[i] + 0.25 * (d1 + d2) * s;
        p.omega = s >= 0.0 ? br.points[i].omega + s * (br.points[i + 1].omega - br.points[i].omega)
                           : br.points[i].omega - s * (br.points[i - 1].omega - br.points[i].omega);
        if (!out.empty() && std::abs(out.back().omega - p.omega) < 1e-3) {
            if (p.amplitude > out.back().amplitude) out.back() = p;
            continue;
        }
        out.push_back(p);
    }
    std::sort(out.begin(), out.end(), [](const Peak& a, const Peak& b) { return a.omega < b.omega; });
    return out;
}

}  // namespace

PeakRecord peak_amplitudes(const SystemParams& params, double force, const AnalysisConfig& cfg,
                           bool include_drc) {
    if (!(force > 0.0)) throw std::domain_error("peak_amplitudes: force must be positive");
    const HarmonicBalance hbm(params, cfg.harmonics, cfg.time_samples);
    const Continuation cont(hbm, cfg.step);
    PeakRecord rec;
    rec.force = force;
    const Branch br =
        cont.continue_branch(force, omega_lo_of(params, cfg), omega_hi_of(params, cfg));
    rec.peaks = branch_peaks(br, hbm);
    if (include_drc) {
        if (const auto drc = cont.find_drc(force, {})) rec.drc_peaks = branch_peaks(*drc, hbm);
    }
    return rec;
}

std::vector<EnvelopeSample> sensitivity_envelope(const SystemParams& params,
                                                 const std::vector<double>& forces,
                                                 PerturbedCoefficient which, double fraction,
                                                 const AnalysisConfig& cfg) {
    if (!(fraction >= 0.0 && fraction <= 0.5))
        throw std::domain_error("sensitivity_envelope: fraction must be in [0, 0.5]");
    std::vector<EnvelopeSample> out;
    for (const double F : forces) {
        EnvelopeSample s;
        s.force = F;
        for (const double fac : {1.0 - fraction, 1.0, 1.0 + fraction}) {
            SystemParams p = params;
            (which == PerturbedCoefficient::c2 ? p.c2 : p.knl2) *= fac;
            const PeakRecord rec = peak_amplitudes(p, F, cfg);
            const auto p1 = rec.first_peak();
            const auto p2 = rec.second_peak();
            if (fac == 1.0) {
                s.first_nominal = p1;
                s.second_nominal = p2;
            }
            if (p1) {
                s.first_lo = s.first_lo ? std::min(*s.first_lo, *p1) : *p1;
                s.first_hi = s.first_hi ? std::max(*s.first_hi, *p1) : *p1;
            }
            if (p2) {
                s.second_lo = s.second_lo ? std::min(*s.second_lo, *p2) : *p2;
                s.second_hi = s.second_hi ? std::max(*s.second_hi, *p2) : *p2;
            }
            s.max_amplitude = std::max(s.max_amplitude, rec.max_amplitude());
        }
        out.push_back(s);
    }
    return out;
}

RegionBoundary region_sweep(const std::string& parameter, const std::vector<double>& values,
                            double epsilon, double mu1, const AnalysisConfig& cfg) {
    RegionBoundary rb;
    rb.parameter = parameter;
    for (const double v : values) {
        RegionBoundaryPoint pt;
        pt.value = v;
        double eps = epsilon, p_mu = 1.0, p_beta = 1.0;
        if (parameter == "epsilon")
            eps = v;
        else if (parameter == "p_mu")
            p_mu = v;
        else if (parameter == "p_beta")
            p_beta = v;
        else
            throw std::invalid_argument("region_sweep: unknown parameter " + parameter);
        if (!(v > 0.0)) throw std::domain_error("region_sweep: sweep values must be positive");
        try {
            const SystemParams p = normalized_system(eps, mu1, p_mu, p_beta);
            const TrackingOutcome tr = run_tracking(p, cfg);
            if (tr.events.appear) pt.alpha3_appear = alpha3_for_force(p, tr.events.appear->force);
            if (tr.events.merge) pt.alpha3_merge = alpha3_for_force(p, tr.events.merge->force);
            if (tr.qp_onset && !tr.qp_onset->at_boundary)
                pt.alpha3_qp_onset = alpha3_for_force(p, tr.qp_onset->force);
        } catch (const std::exception&) {
            pt.failed = true;
        }
        rb.samples.push_back(pt);
    }
    return rb;
}

double drc_elimination_threshold(double epsilon, double mu1, double p_lo, double p_hi,
                                 double tol, const AnalysisConfig& cfg) {
    auto has_events = [&](double p_mu) {
        const TrackingOutcome tr = run_tracking(normalized_system(epsilon, mu1, p_mu), cfg);
        return tr.events.merge.has_value();
    };
    if (!has_events(p_lo))
        throw std::domain_error("drc_elimination_threshold: events absent at the lower bound");
    if (has_events(p_hi))
        throw std::domain_error("drc_elimination_threshold: events persist at the upper bound");
    while (p_hi - p_lo > tol) {
        const double mid = 0.5 * (p_lo + p_hi);
        (has_events(mid) ? p_lo : p_hi) = mid;
    }
    return 0.5 * (p_lo + p_hi);
}

}  // namespace nltva
