#include "puck/analysis.hpp"

#include "puck/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace puck {

// ---------------------------------------------------------------------------
// Empirical potential

EmpiricalPotential empirical_potential(const TickSeries& series, int m, int n_bins,
                                       std::size_t min_occupancy) {
    if (m < 1) throw ArgumentError("moving-average span m must be >= 1");
    if (n_bins < 3) throw ArgumentError("need at least 3 bins");
    const auto bins = static_cast<std::size_t>(n_bins);
    if (series.size() < static_cast<std::size_t>(m) + bins) {
        throw ArgumentError(fmt::format("series of length {} too short for m = {} and {} bins",
                                        series.size(), m, n_bins));
    }
    const auto prices = series.prices();
    const auto first = static_cast<std::size_t>(m) - 1;

    std::vector<double> disp;
    std::vector<double> incr;
    for (std::size_t t = first; t + 1 < prices.size(); ++t) {
        disp.push_back(prices[t] - moving_center(prices, t, m));
        incr.push_back(prices[t + 1] - prices[t]);
    }
    const auto [lo_it, hi_it] = std::minmax_element(disp.begin(), disp.end());
    const double lo = *lo_it;
    const double width = (*hi_it - lo) / static_cast<double>(bins);
    if (!(width > 0.0)) throw InsufficientDataError("displacements have zero spread");

    std::vector<double> sums(bins, 0.0);
    std::vector<std::size_t> counts(bins, 0);
    for (std::size_t i = 0; i < disp.size(); ++i) {
        auto b = static_cast<std::size_t>((disp[i] - lo) / width);
        b = std::min(b, bins - 1);
        sums[b] += incr[i];
        ++counts[b];
    }

    EmpiricalPotential out;
    for (std::size_t b = 0; b < bins; ++b) {
        if (counts[b] < min_occupancy) continue;
        out.bin_centers.push_back(lo + (static_cast<double>(b) + 0.5) * width);
        out.mean_increment.push_back(sums[b] / static_cast<double>(counts[b]));
        out.counts.push_back(counts[b]);
    }
    const std::size_t n = out.bin_centers.size();
    if (n < 3) {
        throw InsufficientDataError(
            fmt::format("only {} bins reach the occupancy of {} ticks", n, min_occupancy));
    }

    // Anchor at the surviving bin containing p = 0, else the nearest one.
    std::size_t anchor = 0;
    for (std::size_t j = 1; j < n; ++j) {
        if (std::abs(out.bin_centers[j]) < std::abs(out.bin_centers[anchor])) anchor = j;
    }
    out.anchor = anchor;
    out.u_values.assign(n, 0.0);
    const auto& x = out.bin_centers;
    const auto& f = out.mean_increment;
    for (std::size_t j = anchor + 1; j < n; ++j) {
        out.u_values[j] = out.u_values[j - 1] - 0.5 * (f[j - 1] + f[j]) * (x[j] - x[j - 1]);
    }
    for (std::size_t j = anchor; j-- > 0;) {
        out.u_values[j] = out.u_values[j + 1] + 0.5 * (f[j] + f[j + 1]) * (x[j + 1] - x[j]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stability of the noise-free quadratic map

double max_nonunit_root_modulus(double b, int m) {
    if (m < 2) throw ArgumentError("stability needs m >= 2 (m = 1 has no force)");
    // lambda^M - (1 - b) lambda^(M-1) - (b/M) sum_{j<M} lambda^j, highest degree first.
    const auto deg = static_cast<std::size_t>(m);
    std::vector<double> c(deg + 1, -b / m);
    c[0] = 1.0;
    c[1] = -(1.0 - b) - b / m;

    // Divide out (lambda - 1); the remainder is zero for every b.
    std::vector<double> q(deg);
    q[0] = c[0];
    for (std::size_t i = 1; i < deg; ++i) q[i] = c[i] + q[i - 1];

    const std::size_t d = deg - 1;
    if (d == 1) return std::abs(q[1]);
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                                      static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) companion(0, static_cast<Eigen::Index>(j)) = -q[j + 1];
    for (std::size_t i = 1; i < d; ++i) {
        companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

// Walks from b = 0 in direction `dir` until the map turns unstable, then bisects.
double stability_edge(int m, double dir) {
    auto stable = [m](double b) { return max_nonunit_root_modulus(b, m) < 1.0; };
    constexpr double kScan = 0.01;
    double inside = 0.0;
    double outside = dir * kScan;
    while (stable(outside)) {
        inside = outside;
        outside += dir * kScan;
        if (std::abs(outside) > 1e6) throw ArgumentError("stability interval is unbounded");
    }
    while (std::abs(outside - inside) > 1e-9) {
        const double mid = 0.5 * (inside + outside);
        (stable(mid) ? inside : outside) = mid;
    }
    return 0.5 * (inside + outside);
}

}  // namespace

StabilityInterval stability_boundaries(int m) {
    if (m < 2) throw ArgumentError("stability boundaries need m >= 2 (m = 1 has no force)");
    return {stability_edge(m, -1.0), stability_edge(m, 1.0)};
}

// ---------------------------------------------------------------------------
// Regime classification

std::string_view to_string(RegimeState state) noexcept {
    switch (state) {
        case RegimeState::pure_random_walk: return "pure_random_walk";
        case RegimeState::stable: return "stable";
        case RegimeState::unstable: return "unstable";
        case RegimeState::oscillatory_divergent: return "oscillatory_divergent";
        case RegimeState::monotonic_divergent: return "monotonic_divergent";
    }
    return "?";
}

namespace {

RegimeState state_of(const PotentialModel& model, StabilityInterval boundaries, double epsilon) {
    const double b = model.b_quad;
    if (model.m == 1) return RegimeState::pure_random_walk;
    if (b >= boundaries.high) return RegimeState::oscillatory_divergent;
    if (b <= boundaries.low) return RegimeState::monotonic_divergent;
    if (std::abs(b) <= epsilon) {
        // A lone nonlinear term leaves no well at the center.
        return model.b_nl == 0.0 ? RegimeState::pure_random_walk : RegimeState::unstable;
    }
    return b > 0.0 ? RegimeState::stable : RegimeState::unstable;
}

void check_thresholds(const RegimeThresholds& t) {
    if (!(t.epsilon > 0.0)) throw ArgumentError("epsilon must be > 0");
    if (!(t.delta_threshold > 0.0)) throw ArgumentError("delta_threshold must be > 0");
}

}  // namespace

RegimeLabel classify_regime(const FitResult& fit, StabilityInterval boundaries,
                            const RegimeThresholds& thresholds) {
    check_thresholds(thresholds);
    return RegimeLabel{state_of(fit.model, boundaries, thresholds.epsilon), false, 0.0};
}

RegimeLabel classify_regime(const ModelSelection& selection, StabilityInterval boundaries,
                            const RegimeThresholds& thresholds) {
    check_thresholds(thresholds);
    const FitResult& best = selection.best;
    RegimeLabel label;
    label.state = state_of(best.model, boundaries, thresholds.epsilon);
    label.delta_criterion = selection.runner_up_margin();
    const auto advantage = selection.nonlinear_advantage();
    label.precursor_cubic = best.family == Family::nonlinear && best.model.gamma == 2 &&
                            best.model.b_nl != 0.0 && advantage &&
                            *advantage > thresholds.delta_threshold;
    return label;
}

// ---------------------------------------------------------------------------
// Cubic barrier and Monte Carlo escape

BarrierReport barrier_report(const PotentialModel& model, const NoiseModel& noise,
                             std::size_t horizon, std::size_t n_trials, std::uint64_t rng_seed,
                             double buffer) {
    model.validate();
    noise.validate();
    if (model.gamma != 2) throw ArgumentError("barrier analysis needs a cubic potential (gamma = 2)");
    if (!(model.b_quad > 0.0) || model.b_nl == 0.0) {
        throw NoBarrierError("no finite barrier: need b_quad > 0 and b_nl != 0 with gamma = 2");
    }
    if (horizon < 1) throw ArgumentError("horizon must be >= 1");
    if (n_trials < 1) throw ArgumentError("n_trials must be >= 1");
    if (!(buffer >= 0.0)) throw ArgumentError("escape buffer must be >= 0");

    BarrierReport report;
    report.well_position = 0.0;
    report.barrier_position = -model.b_quad / model.b_nl;
    report.barrier_height =
        model.b_quad * model.b_quad * model.b_quad / (6.0 * model.b_nl * model.b_nl);
    report.horizon = horizon;
    report.n_trials = n_trials;

    const double side = report.barrier_position > 0.0 ? 1.0 : -1.0;
    const double threshold = std::abs(report.barrier_position) + buffer;
    const auto span = static_cast<std::size_t>(model.m);

    std::size_t escaped = 0;
    std::vector<double> prices;
    for (std::size_t trial = 0; trial < n_trials; ++trial) {
        std::seed_seq seq{static_cast<std::uint32_t>(rng_seed),
                          static_cast<std::uint32_t>(rng_seed >> 32),
                          static_cast<std::uint32_t>(trial),
                          static_cast<std::uint32_t>(trial >> 32)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> gauss(0.0, noise.sigma);
        std::student_t_distribution<double> student(noise.dof);

        prices.assign(span, 0.0);
        for (std::size_t step = 0; step < horizon; ++step) {
            const std::size_t t = prices.size() - 1;
            const double p = prices[t] - moving_center(prices, t, model.m);
            const double f = noise.kind == NoiseKind::gaussian ? gauss(rng)
                                                               : noise.sigma * student(rng);
            prices.push_back(prices[t] + potential_force(p, model) + f);
            const std::size_t u = prices.size() - 1;
            const double next = prices[u] - moving_center(prices, u, model.m);
            if (side * next > threshold) {
                ++escaped;
                break;
            }
        }
    }
    report.escape_fraction = static_cast<double>(escaped) / static_cast<double>(n_trials);
    return report;
}

// ---------------------------------------------------------------------------

double volatility(const TickSeries& series) {
    if (series.size() < 2) throw ArgumentError("volatility needs at least 2 prices");
    const auto p = series.prices();
    double sum = 0.0;
    for (std::size_t t = 0; t + 1 < p.size(); ++t) {
        const double d = p[t + 1] - p[t];
        sum += d * d;
    }
    return sum / static_cast<double>(p.size() - 1);
}

// ---------------------------------------------------------------------------
// Sliding-window scan

std::vector<ScanRecord> scan_windows(const TickSeries& series, const ScanOptions& options) {
    if (options.window < 50) throw ArgumentError("scan window must be >= 50 ticks");
    if (options.step < 1) throw ArgumentError("scan step must be >= 1");
    if (series.size() < options.window) {
        throw ArgumentError(fmt::format("series of length {} shorter than window {}",
                                        series.size(), options.window));
    }
    options.grid.validate();

    std::map<int, StabilityInterval> bounds;
    auto boundaries_for = [&](int m) {
        if (m < 2) {
            return StabilityInterval{-std::numeric_limits<double>::infinity(),
                                     std::numeric_limits<double>::infinity()};
        }
        auto it = bounds.find(m);
        if (it == bounds.end()) it = bounds.emplace(m, stability_boundaries(m)).first;
        return it->second;
    };

    std::vector<ScanRecord> records;
    for (std::size_t start = 0; start + options.window <= series.size(); start += options.step) {
        ScanRecord rec;
        rec.window = Window{start, options.window};
        try {
            const TickSeries slice = series.slice(start, options.window);
            ModelSelection sel = select_model(slice, options.grid, options.criterion, options.fit);
            sel.best.window = rec.window;
            for (auto& f : sel.family_best) {
                if (f) f->window = rec.window;
            }
            rec.regime = classify_regime(sel, boundaries_for(sel.best.model.m), options.thresholds);
            rec.selection = std::move(sel);
        } catch (const DegenerateFitError& e) {
            rec.degenerate_reason = e.what();
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::optional<std::size_t> first_alarm(const std::vector<ScanRecord>& records) {
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].alarm()) return i;
    }
    return std::nullopt;
}

}  // namespace puck
