// Safe/unsafe/unacceptable operating regions assembled from bifurcation
// tracking, absorber parameter sensitivity, and LTVA/NLTVA comparisons.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nltva/tracking.hpp"

namespace nltva {

enum class OperatingRegion { safe, unsafe, unacceptable };

/// Region of a forcing amplitude given the DRC events of the system. With
/// no events (no folding of the fold branch) every amplitude is safe.
OperatingRegion classify_operation(const DrcEvents& events, double force);

std::string to_string(OperatingRegion r);

struct AnalysisConfig {
    int harmonics = 5;
    int time_samples = 128;
    StepConfig step;
    TrackConfig track;
    double omega_lo = 0.0;                 ///< 0 = 0.5 * omega_n1
    double omega_hi = 0.0;                 ///< 0 = 4.0 * omega_n1
    std::vector<double> fold_seed_forces;  ///< ladder scanned for fold seeds
    std::vector<double> ns_seed_forces;    ///< ladder scanned for NS seeds
};

/// Fold branches A (first resonance peak) and B (second peak / detached
/// curve), the NS branch, and the events extracted from them.
struct TrackingOutcome {
    std::optional<BifurcationBranch> branch_a;
    std::optional<BifurcationBranch> branch_b;
    std::optional<BifurcationBranch> ns_branch;
    DrcEvents events;
    std::optional<QpOnset> qp_onset;
};

/// Scans codim-1 responses over the seed ladders, tracks every distinct fold
/// branch plus the NS branch, labels A/B by seeding provenance, and extracts
/// the DRC events and quasiperiodic onset.
TrackingOutcome run_tracking(const SystemParams& params, const AnalysisConfig& cfg = {});

struct Peak {
    double omega = 0.0;
    double amplitude = 0.0;
};

struct PeakRecord {
    double force = 0.0;
    std::vector<Peak> peaks;    ///< main-branch local maxima, sorted by omega
    std::vector<Peak> drc_peaks;
    std::string variant;

    /// amplitudes of the two dominant resonance peaks ordered by frequency
    std::optional<double> first_peak() const;
    std::optional<double> second_peak() const;
    double max_amplitude() const;
};

/// Local maxima of amplitude vs omega on the main branch, refined by a local
/// quadratic fit; DRC peaks reported separately when requested.
PeakRecord peak_amplitudes(const SystemParams& params, double force,
                           const AnalysisConfig& cfg = {}, bool include_drc = false);

enum class PerturbedCoefficient { c2, knl2 };

struct EnvelopeSample {
    double force = 0.0;
    std::optional<double> first_nominal, second_nominal;
    std::optional<double> first_lo, first_hi;    ///< envelope of the first peak
    std::optional<double> second_lo, second_hi;  ///< envelope of the second peak
    double max_amplitude = 0.0;                  ///< over all variants and peaks
};

/// Min/max peak amplitudes over {-fraction, 0, +fraction} applied to c2 or
/// knl2, per forcing amplitude.
std::vector<EnvelopeSample> sensitivity_envelope(const SystemParams& params,
                                                 const std::vector<double>& forces,
                                                 PerturbedCoefficient which, double fraction,
                                                 const AnalysisConfig& cfg = {});

struct RegionBoundaryPoint {
    double value = 0.0;  ///< sweep parameter value
    std::optional<double> alpha3_appear;
    std::optional<double> alpha3_merge;
    std::optional<double> alpha3_qp_onset;
    bool failed = false;  ///< tracking failed at this sweep point
};

struct RegionBoundary {
    std::string parameter;  ///< "epsilon", "p_mu" or "p_beta"
    std::vector<RegionBoundaryPoint> samples;
};

/// Region boundaries over a sweep of epsilon, p_mu = mu2/mu2_opt or p_beta =
/// beta3/beta3_opt. Non-swept absorber parameters stay at their optima; the
/// primary is the unit-normalized cubic oscillator with damping ratio mu1.
RegionBoundary region_sweep(const std::string& parameter, const std::vector<double>& values,
                            double epsilon, double mu1, const AnalysisConfig& cfg = {});

/// Smallest damping detuning p_mu at which the fold branch loses its folding
/// (the detached curve disappears), refined by bisection.
double drc_elimination_threshold(double epsilon, double mu1, double p_lo, double p_hi,
                                 double tol, const AnalysisConfig& cfg = {});

/// Unit-normalized primary (m1 = k1 = knl1 = 1) with a tuned absorber; the
/// dimensionless sweeps of the region analysis run on this system, with
/// alpha3 = 3 F^2 / 4.
SystemParams normalized_system(double epsilon, double mu1, double p_mu = 1.0,
                               double p_beta = 1.0);

}  // namespace nltva
