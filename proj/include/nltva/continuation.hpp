// Pseudo-arclength continuation of periodic solutions over frequency at
// fixed forcing amplitude, with Floquet stability flags and detection and
// localization of fold and Neimark-Sacker bifurcations.
#pragma once

#include <optional>
#include <vector>

#include "nltva/hbm.hpp"

namespace nltva {

struct StepConfig {
    double ds_initial = 1e-3;
    double ds_min = 1e-5;
    double ds_max = 5e-2;
    double grow = 1.3;          ///< step growth on fast convergence
    int fast_iterations = 3;    ///< "fast" means <= this many Newton iterations
    int max_points = 40000;
    int newton_max = 15;
    double tolerance = 1e-10;   ///< on the force-scaled residual norm
    bool compute_stability = true;  ///< Hill exponents at every accepted point
};

struct CorrectorResult {
    HarmonicSolution solution;
    bool converged = false;
    int iterations = 0;
    double residual_norm = 0.0;
};

struct BifurcationPoint {
    enum class Kind { fold, neimark_sacker };
    Kind kind = Kind::fold;
    HarmonicSolution solution;
    double test_value = 0.0;   ///< test function at the reported point
    int bracket_lo = -1;       ///< indices of the bracketing branch points
    int bracket_hi = -1;
    bool refined = false;      ///< |test| driven below the localization tolerance
};

struct Branch {
    std::vector<HarmonicSolution> points;
    std::vector<Eigen::VectorXd> tangents;  ///< scaled (coeffs/f, omega) tangent, unit norm
    std::vector<double> ns_test;            ///< NS test function per point
    std::vector<BifurcationPoint> bifurcations;
    double force = 0.0;
    int harmonics = 0;
    bool truncated = false;  ///< corrector failed at minimum step
    bool closed = false;     ///< branch returned to its start point (isolas)
    int steps_accepted = 0;
    int steps_rejected = 0;

    double omega(int i) const { return points[i].omega; }
};

class Continuation {
public:
    explicit Continuation(const HarmonicBalance& hbm, StepConfig cfg = {});

    const HarmonicBalance& hbm() const { return hbm_; }
    const StepConfig& config() const { return cfg_; }

    /// Newton correction at fixed omega. Non-convergence is reported in the
    /// result, not thrown; continuation reacts by halving the step.
    CorrectorResult correct(const Eigen::VectorXd& guess, double omega, double force) const;

    /// Corrects onto the branch through the hyperplane with the given normal
    /// passing through the predicted point (both in scaled coordinates).
    CorrectorResult correct_on_plane(const Eigen::VectorXd& guess_coeffs, double guess_omega,
                                     double force, const Eigen::VectorXd& normal,
                                     const Eigen::VectorXd& plane_point,
                                     bool with_stability = true) const;

    /// Branch over [omega_lo, omega_hi] seeded from the linear receptance at
    /// omega_lo. Arclength parameterization traverses fold overhangs;
    /// stability is computed at every point, bifurcations are detected and
    /// localized.
    Branch continue_branch(double force, double omega_lo, double omega_hi) const;

    /// Continuation from an arbitrary converged seed. Stops when the branch
    /// closes on itself (isolas), leaves [omega_lo, omega_hi], or truncates.
    Branch continue_from(const HarmonicSolution& seed, double omega_lo, double omega_hi) const;

    /// Fold/NS brackets from tangent sign changes and Floquet-pair crossings.
    std::vector<BifurcationPoint> detect_bifurcations(const Branch& branch) const;

    /// Refines a bracket by regula falsi on the test function along the
    /// branch. Returns refined=false when the bracket cannot be tightened
    /// (for NS this indicates a discontinuous eigenvalue collision, not a
    /// bifurcation).
    BifurcationPoint localize(const Branch& branch, const BifurcationPoint& bracket) const;

    struct DrcConfig {
        std::vector<double> probe_omegas;   ///< frequencies for the amplitude ladder
        int ladder_steps = 24;
        double ladder_max_scale = 40.0;     ///< top amplitude, in units of F/k1
        double omega_lo = 0.0, omega_hi = 0.0;  ///< search window (0 = derive from params)
    };

    /// Searches for a detached resonance curve at the given forcing, first
    /// from the supplied seed (fold-tracking knowledge), then from
    /// high-amplitude initial guesses. Empty result means no detached branch
    /// was found.
    std::optional<Branch> find_drc(double force, const DrcConfig& cfg,
                                   std::optional<HarmonicSolution> seed = {}) const;

    /// NS test function: largest real part over filtered exponents with
    /// imaginary part bounded away from zero.
    double ns_test_value(const HarmonicSolution& sol) const;

private:
    const HarmonicBalance& hbm_;
    StepConfig cfg_;

    Eigen::VectorXd tangent(const Eigen::VectorXd& coeffs, double omega, double force,
                            const Eigen::VectorXd& previous) const;
    Branch march(HarmonicSolution start, double force, double omega_lo, double omega_hi,
                 double direction, bool stop_on_close) const;
    void finalize(Branch& branch) const;
};

}  // namespace nltva
