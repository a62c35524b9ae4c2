// Direct time integration of the coupled system, steady-state attractor
// classification via stroboscopic maps, quasiperiodic amplitude sweeps, and
// basin-of-attraction rasters.
#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "nltva/model.hpp"

namespace nltva {

struct IntegratorConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double initial_dt = 1e-3;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    std::size_t steps = 0;
    std::size_t rejected = 0;
};

/// Adaptive Runge-Kutta integration (Dormand-Prince 5(4) with dense output)
/// recording the state at every accepted step. Throws std::runtime_error on
/// step-size underflow (stiffness diagnostic).
Trajectory integrate(const SystemParams& p, const Forcing& f, const State& initial,
                     double t_end, const IntegratorConfig& cfg = {});

struct AttractorLabel {
    enum class Kind { periodic_low, periodic_high, quasiperiodic, unconverged };
    Kind kind = Kind::unconverged;
    double amplitude = 0.0;  ///< max |x1| over the analysis window
};

struct ClassifyConfig {
    int transient_periods = 300;
    int extend_periods = 300;   ///< extension on indecision
    int max_periods = 1500;
    int returns = 20;           ///< stroboscopic returns per decision window
    double dispersion_tol = 1e-4;  ///< periodicity threshold on return dispersion [m]
    int max_subharmonic = 8;    ///< period-k clustering checked up to this k
    /// stroboscopic states of the known coexisting solutions (low, high);
    /// enables early capture and the low/high labeling
    std::optional<std::pair<State, State>> known_states;
    std::optional<std::pair<double, double>> known_amplitudes;
    double capture_radius_frac = 0.1;  ///< fraction of the amplitude gap
    IntegratorConfig integrator;
};

/// Integrates past the transient and classifies the steady state from its
/// Poincare returns (stroboscopic at the forcing period). Without known
/// coexisting amplitudes every periodic attractor is labeled periodic_low.
AttractorLabel classify(const SystemParams& p, const Forcing& f, const State& initial,
                        const ClassifyConfig& cfg = {});

/// Amplitude of the quasiperiodic attractor across a frequency window,
/// warm-starting each frequency from the previous steady state. Frequencies
/// where the attractor is lost (response becomes periodic) are omitted.
std::vector<std::pair<double, double>> sweep_quasiperiodic(const SystemParams& p, double force,
                                                           double omega_lo, double omega_hi,
                                                           int n_omega,
                                                           const ClassifyConfig& cfg = {});

struct GridSpec {
    double x_min = 0.0, x_max = 0.0;  ///< initial displacement window
    double v_min = 0.0, v_max = 0.0;  ///< initial velocity window
    int nx = 201, nv = 201;

    double x_at(int i) const { return x_min + (x_max - x_min) * i / (nx - 1); }
    double v_at(int j) const { return v_min + (v_max - v_min) * j / (nv - 1); }
};

/// Window spanning +-1.5 times the larger coexisting amplitude on both axes.
GridSpec default_grid(double larger_amplitude, int resolution = 201);

struct BasinMap {
    GridSpec grid;
    Forcing forcing;
    std::vector<AttractorLabel> labels;  ///< row-major, index = j*nx + i
    std::uint64_t config_hash = 0;

    const AttractorLabel& at(int i, int j) const { return labels[(std::size_t)j * grid.nx + i]; }
};

/// Classifies every (x1, v1) grid cell with the absorber initially at rest.
/// Cells are independent; rows are distributed over threads and merged in
/// row-major order, so the result is deterministic for a fixed config.
BasinMap compute_basins(const SystemParams& p, const Forcing& f, const GridSpec& grid,
                        const ClassifyConfig& cfg, int threads = 0);

/// Area ratio (periodic_high cells / periodic_low cells) in percent.
/// Throws std::domain_error when no cell is periodic_low.
double basin_area_ratio(const BasinMap& map);

}  // namespace nltva
