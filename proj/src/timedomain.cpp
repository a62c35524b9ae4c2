#include "nltva/timedomain.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <boost/numeric/odeint.hpp>

namespace nltva {

namespace {

using StateVec = std::array<double, 4>;

struct Rhs {
    const SystemParams& p;
    const Forcing& f;
    void operator()(const StateVec& y, StateVec& dydt, double t) const {
        const State d = rhs({y[0], y[1], y[2], y[3]}, t, p, f);
        dydt = {d.x1, d.v1, d.x2, d.v2};
    }
};

using ErrorStepper = boost::numeric::odeint::runge_kutta_dopri5<StateVec>;
using DenseStepper = boost::numeric::odeint::dense_output_runge_kutta<
    boost::numeric::odeint::controlled_runge_kutta<ErrorStepper>>;

DenseStepper make_stepper(const IntegratorConfig& cfg) {
    return boost::numeric::odeint::make_dense_output(cfg.abs_tol, cfg.rel_tol, ErrorStepper());
}

// advances y from t0 to t1, sampling |x1| on a uniform grid of n_samples
// points per forcing period; returns max |x1| over the window
double advance(DenseStepper& stepper, const Rhs& rhs_fn, StateVec& y, double t0, double t1,
               double sample_dt, std::size_t* steps) {
    stepper.initialize(y, t0, sample_dt > 0.0 ? sample_dt : 1e-3);
    double amp = 0.0;
    double ts = t0;
    StateVec yi;
    while (stepper.current_time() < t1) {
        stepper.do_step(rhs_fn);
        if (steps) ++*steps;
        if (sample_dt > 0.0) {
            const double cover = std::min(stepper.current_time(), t1);
            while (ts <= cover) {
                stepper.calc_state(ts, yi);
                amp = std::max(amp, std::abs(yi[0]));
                ts += sample_dt;
            }
        }
    }
    stepper.calc_state(t1, y);
    amp = std::max(amp, std::abs(y[0]));
    return amp;
}

double dist4(const StateVec& a, const StateVec& b) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

StateVec to_vec(const State& s) { return {s.x1, s.v1, s.x2, s.v2}; }

}  // namespace

Trajectory integrate(const SystemParams& p, const Forcing& f, const State& initial,
                     double t_end, const IntegratorConfig& cfg) {
    p.validate();
    f.validate();
    if (!(t_end > 0.0)) throw std::invalid_argument("integrate: t_end must be positive");
    const Rhs rhs_fn{p, f};
    namespace od = boost::numeric::odeint;
    auto ctrl = od::make_controlled(cfg.abs_tol, cfg.rel_tol, ErrorStepper());

    Trajectory tr;
    StateVec y = to_vec(initial);
    double t = 0.0, dt = cfg.initial_dt;
    tr.times.push_back(t);
    tr.states.push_back(initial);
    while (t < t_end) {
        dt = std::min(dt, t_end - t);
        od::controlled_step_result r = ctrl.try_step(rhs_fn, y, t, dt);
        if (r == od::fail) {
            ++tr.rejected;
            if (dt < 1e-14 * std::max(1.0, t))
                throw std::runtime_error("integrate: step size underflow (stiff segment?)");
            continue;
        }
        ++tr.steps;
        tr.times.push_back(t);
        tr.states.push_back({y[0], y[1], y[2], y[3]});
    }
    return tr;
}

AttractorLabel classify(const SystemParams& p, const Forcing& f, const State& initial,
                        const ClassifyConfig& cfg) {
    p.validate();
    f.validate();
    const double T = f.period();
    const double sample_dt = T / 64.0;
    const Rhs rhs_fn{p, f};
    DenseStepper stepper = make_stepper(cfg.integrator);

    AttractorLabel out;
    StateVec y = to_vec(initial);
    double t = 0.0;

    auto label_periodic = [&](double amp) {
        out.amplitude = amp;
        if (cfg.known_amplitudes) {
            const double mid = 0.5 * (cfg.known_amplitudes->first + cfg.known_amplitudes->second);
            out.kind = amp >= mid ? AttractorLabel::Kind::periodic_high
                                  : AttractorLabel::Kind::periodic_low;
        } else {
            out.kind = AttractorLabel::Kind::periodic_low;
        }
    };

    // transient
    advance(stepper, rhs_fn, y, t, cfg.transient_periods * T, 0.0, nullptr);
    t = cfg.transient_periods * T;
    int elapsed = cfg.transient_periods;

    double capture_r = 0.0;
    StateVec low{}, high{};
    if (cfg.known_states && cfg.known_amplitudes) {
        low = to_vec(cfg.known_states->first);
        high = to_vec(cfg.known_states->second);
        capture_r = cfg.capture_radius_frac *
                    std::abs(cfg.known_amplitudes->second - cfg.known_amplitudes->first);
    }

    std::vector<StateVec> returns;
    double prev_spread = -1.0;
    while (elapsed < cfg.max_periods) {
        double window_amp = 0.0;
        for (int k = 0; k < cfg.returns; ++k) {
            window_amp = std::max(window_amp,
                                  advance(stepper, rhs_fn, y, t, t + T, sample_dt, nullptr));
            t += T;
            ++elapsed;
            returns.push_back(y);
            // early capture when the return settles onto a known solution
            if (capture_r > 0.0 && returns.size() >= 2) {
                const double move = dist4(returns[returns.size() - 1], returns[returns.size() - 2]);
                if (move < 0.1 * capture_r) {
                    if (dist4(y, low) < capture_r) {
                        out.kind = AttractorLabel::Kind::periodic_low;
                        out.amplitude = window_amp;
                        return out;
                    }
                    if (dist4(y, high) < capture_r) {
                        out.kind = AttractorLabel::Kind::periodic_high;
                        out.amplitude = window_amp;
                        return out;
                    }
                }
            }
        }
        const int m = cfg.returns;
        const auto last = returns.end() - m;
        // period-k clustering, k = 1..max_subharmonic
        bool periodic = false;
        for (int k = 1; k <= cfg.max_subharmonic && !periodic; ++k) {
            if ((int)returns.size() < k * 4) break;
            double disp = 0.0;
            const int reps = std::min<int>(m / k, 8);
            if (reps < 3) break;
            for (int r = 1; r < reps; ++r)
                disp = std::max(disp, dist4(returns[returns.size() - 1 - (std::size_t)r * k],
                                            returns.back()));
            if (disp < cfg.dispersion_tol) periodic = true;
        }
        if (periodic) {
            label_periodic(window_amp);
            return out;
        }
        // spread of the last window: a quasiperiodic orbit fills a stable
        // closed curve, so the spread is large and stationary
        StateVec mean{};
        for (auto it = last; it != returns.end(); ++it)
            for (int i = 0; i < 4; ++i) mean[i] += (*it)[i] / m;
        double spread = 0.0;
        for (auto it = last; it != returns.end(); ++it) spread = std::max(spread, dist4(*it, mean));
        if (spread > 10.0 * cfg.dispersion_tol && prev_spread > 0.0 &&
            spread < 3.0 * prev_spread && prev_spread < 3.0 * spread) {
            out.kind = AttractorLabel::Kind::quasiperiodic;
            out.amplitude = window_amp;
            return out;
        }
        prev_spread = spread;
        if (elapsed + cfg.extend_periods > cfg.max_periods) break;
    }
    out.kind = AttractorLabel::Kind::unconverged;
    out.amplitude = 0.0;
    return out;
}

std::vector<std::pair<double, double>> sweep_quasiperiodic(const SystemParams& p, double force,
                                                           double omega_lo, double omega_hi,
                                                           int n_omega,
                                                           const ClassifyConfig& cfg) {
    std::vector<std::pair<double, double>> out;
    if (n_omega < 1) return out;
    State warm{};
    for (int i = 0; i < n_omega; ++i) {
        const double om = n_omega == 1
                              ? omega_lo
                              : omega_lo + (omega_hi - omega_lo) * i / (n_omega - 1);
        const Forcing f{force, om};
        const AttractorLabel lab = classify(p, f, warm, cfg);
        if (lab.kind == AttractorLabel::Kind::quasiperiodic) out.emplace_back(om, lab.amplitude);
        // warm start the next frequency from the reached steady state
        Trajectory tr = integrate(p, f, warm, f.period(), cfg.integrator);
        warm = tr.states.back();
    }
    return out;
}

GridSpec default_grid(double larger_amplitude, int resolution) {
    GridSpec g;
    g.x_min = -1.5 * larger_amplitude;
    g.x_max = 1.5 * larger_amplitude;
    g.v_min = -1.5 * larger_amplitude;
    g.v_max = 1.5 * larger_amplitude;
    g.nx = g.nv = resolution;
    return g;
}

namespace {

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 1469598103934665603ull) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= b[i];
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

BasinMap compute_basins(const SystemParams& p, const Forcing& f, const GridSpec& grid,
                        const ClassifyConfig& cfg, int threads) {
    if (grid.nx < 2 || grid.nv < 2)
        throw std::invalid_argument("compute_basins: grid must be at least 2x2");
    BasinMap map;
    map.grid = grid;
    map.forcing = f;
    map.labels.resize((std::size_t)grid.nx * grid.nv);

    const double probe[] = {grid.x_min, grid.x_max, grid.v_min, grid.v_max,
                            (double)grid.nx,        (double)grid.nv,
                            f.amplitude,            f.omega,
                            cfg.dispersion_tol,     (double)cfg.max_periods};
    map.config_hash = fnv1a(probe, sizeof(probe));

    if (threads <= 0) threads = (int)std::thread::hardware_concurrency();
    threads = std::max(1, std::min(threads, grid.nv));

    std::atomic<int> next_row{0};
    auto worker = [&]() {
        for (;;) {
            const int j = next_row.fetch_add(1);
            if (j >= grid.nv) return;
            for (int i = 0; i < grid.nx; ++i) {
                const State init{grid.x_at(i), grid.v_at(j), 0.0, 0.0};
                map.labels[(std::size_t)j * grid.nx + i] = classify(p, f, init, cfg);
            }
        }
    };
    std::vector<std::thread> pool;
    for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return map;
}

double basin_area_ratio(const BasinMap& map) {
    std::size_t low = 0, high = 0;
    for (const auto& l : map.labels) {
        low += l.kind == AttractorLabel::Kind::periodic_low;
        high += l.kind == AttractorLabel::Kind::periodic_high;
    }
    if (low == 0) throw std::domain_error("basin_area_ratio: no low-amplitude cells");
    return 100.0 * (double)high / (double)low;
}

}  // namespace nltva
