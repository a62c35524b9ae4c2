// Codimension-2 continuation: loci of fold and Neimark-Sacker bifurcations
// over (omega, force) via bordered extended systems, and extraction of the
// detached-resonance-curve events and quasiperiodic onset.
#pragma once

#include <optional>
#include <vector>

#include "nltva/continuation.hpp"

namespace nltva {

struct TrackedPoint {
    HarmonicSolution solution;     ///< coeffs, omega, force of the bifurcation point
    Eigen::VectorXd null_vector;   ///< fold: kernel of the Jacobian; NS: [re; im] eigenvector
    double kappa = 0.0;            ///< NS: Floquet exponent on the imaginary axis
};

struct BifurcationBranch {
    BifurcationPoint::Kind kind = BifurcationPoint::Kind::fold;
    char label = '?';              ///< 'A'/'B' for fold branches, by seeding provenance
    std::vector<TrackedPoint> points;
    bool truncated = false;        ///< corrector failure at minimum step
    bool degenerate = false;       ///< NS branch terminated by kappa -> 0
    int steps_rejected = 0;
};

struct TrackConfig {
    double force_min = 0.01;
    double force_max = 0.3;
    double ds_initial = 5e-3;
    double ds_min = 1e-7;
    double ds_max = 4e-2;
    int max_points = 6000;
    int newton_max = 15;
    double tolerance = 1e-9;
    double omega_cap_scale = 6.0;  ///< stop when omega exceeds this times omega_n1
};

class Tracker {
public:
    Tracker(const HarmonicBalance& hbm, TrackConfig cfg = {});

    /// Continuation of the fold locus {residual = 0, J phi = 0, |phi| = 1}
    /// through the seed, walked in both directions and merged. The seed must
    /// be a localized fold; throws std::invalid_argument when the seed does
    /// not converge onto the extended system (e.g. a linear system).
    BifurcationBranch track_fold(const BifurcationPoint& seed) const;

    /// Continuation of the NS locus with a purely imaginary Floquet exponent
    /// i*kappa and its complex eigenvector appended as unknowns.
    BifurcationBranch track_ns(const BifurcationPoint& seed) const;

private:
    const HarmonicBalance& hbm_;
    TrackConfig cfg_;

    BifurcationBranch track_fold_dir(TrackedPoint start, double dir) const;
    BifurcationBranch track_ns_dir(TrackedPoint start, double dir) const;
    TrackedPoint fold_seed(const BifurcationPoint& seed) const;
    TrackedPoint ns_seed(const BifurcationPoint& seed) const;
};

struct TurningPoint {
    int index = 0;          ///< branch index nearest the turning point
    double force = 0.0;     ///< refined extremal force
    double omega = 0.0;
    double amplitude = 0.0;  ///< max |x1| of the solution there
    bool is_minimum = true;
};

/// Sign changes of dF/ds along the branch, refined by a quadratic fit
/// through the three bracketing points and one bordered-Newton polish.
std::vector<TurningPoint> turning_points(const BifurcationBranch& branch,
                                         const HarmonicBalance& hbm, TrackConfig cfg = {});

struct DrcEvents {
    std::optional<TurningPoint> appear;  ///< fold-of-folds where the DRC is born
    std::optional<TurningPoint> merge;   ///< where the DRC folds annihilate with the main branch
};

/// DRC appearance/merging from the turning points of a fold branch that
/// passes through the detached-curve folds (branch B). The merging event is
/// the largest interior maximum of F; the appearance event is the interior
/// minimum of largest response amplitude (which separates it from the cusp
/// where the resonance-peak fold pair is born). Branches without folding
/// produce no events.
DrcEvents find_drc_events(const BifurcationBranch& branch, const HarmonicBalance& hbm,
                          TrackConfig cfg = {});

struct QpOnset {
    double force = 0.0;
    double omega = 0.0;
    bool at_boundary = false;  ///< minimum sits on the tracked range boundary
};

/// Minimum forcing along an NS branch (birth of the quasiperiodic window).
std::optional<QpOnset> find_qp_onset(const BifurcationBranch& branch,
                                     const HarmonicBalance& hbm, TrackConfig cfg = {});

/// Point on the detached-curve leg of a fold branch at the requested force,
/// nudged off the fold so codim-1 continuation can seed the closed DRC.
std::optional<HarmonicSolution> drc_seed(const BifurcationBranch& branch_b, double force,
                                         const HarmonicBalance& hbm);

}  // namespace nltva
