#include "puck/estimation.hpp"

#include "puck/error.hpp"
#include "puck/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

namespace puck {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Golden-section search for the maximum of a unimodal function on [lo, hi].
template <typename Fn>
double golden_section_max(Fn&& fn, double lo, double hi, double rel_tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = fn(x1);
    double f2 = fn(x2);
    for (int iter = 0; iter < 500 && (hi - lo) > rel_tol * 0.5 * (hi + lo); ++iter) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = fn(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = fn(x1);
        }
    }
    return 0.5 * (lo + hi);
}

double student_log_norm(double dof) {
    return std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
           0.5 * std::log(dof * std::numbers::pi);
}

double student_loglik(std::span<const double> r, double scale, double dof) {
    const double half = 0.5 * (dof + 1.0);
    double sum = 0.0;
    for (double x : r) {
        const double z = x / scale;
        sum += std::log1p(z * z / dof);
    }
    const auto n = static_cast<double>(r.size());
    return n * (student_log_norm(dof) - std::log(scale)) - half * sum;
}

double gaussian_profiled_loglik(double rss, std::size_t n) {
    const auto nd = static_cast<double>(n);
    return -0.5 * nd * (kLog2Pi + std::log(rss / nd) + 1.0);
}

double snap_zero(double v, double step) { return std::abs(v) < 1e-9 * step ? 0.0 : v; }

}  // namespace

// ---------------------------------------------------------------------------

void Range::validate(std::string_view name) const {
    if (!std::isfinite(low) || !std::isfinite(high) || !std::isfinite(step)) {
        throw ArgumentError(fmt::format("{} range must be finite", name));
    }
    if (low > high) throw ArgumentError(fmt::format("{} range has low > high", name));
    if (!(step > 0.0)) throw ArgumentError(fmt::format("{} range step must be > 0", name));
}

std::vector<double> Range::values() const {
    std::vector<double> out;
    const auto count = static_cast<std::size_t>(std::floor((high - low) / step + 1e-9)) + 1;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(snap_zero(low + static_cast<double>(i) * step, step));
    }
    return out;
}

void GridSpec::validate() const {
    b_quad.validate("b_quad");
    b_nl.validate("b_nl");
    if (gamma_set.empty()) throw ArgumentError("gamma set is empty");
    if (m_set.empty()) throw ArgumentError("m set is empty");
    for (int g : gamma_set) {
        if (g < 2) throw ArgumentError("every gamma must be >= 2");
    }
    for (int m : m_set) {
        if (m < 1) throw ArgumentError("every m must be >= 1");
    }
}

int GridSpec::max_m() const { return *std::max_element(m_set.begin(), m_set.end()); }

std::string_view to_string(Family family) noexcept {
    switch (family) {
        case Family::null_potential: return "null";
        case Family::quadratic: return "quadratic";
        case Family::nonlinear: return "nonlinear";
    }
    return "?";
}

std::string_view to_string(Criterion criterion) noexcept {
    return criterion == Criterion::aic ? "aic" : "bic";
}

InformationCriteria information_criteria(double log_likelihood, int k_params, std::size_t n_obs) {
    if (n_obs < 1) throw ArgumentError("n_obs must be >= 1");
    if (k_params < 1) throw ArgumentError("k_params must be >= 1");
    const double k = k_params;
    return {-2.0 * log_likelihood + 2.0 * k,
            -2.0 * log_likelihood + k * std::log(static_cast<double>(n_obs))};
}

double log_likelihood(std::span<const double> residuals, const NoiseModel& noise) {
    noise.validate();
    if (residuals.empty()) throw ArgumentError("no residuals to evaluate");
    if (noise.kind == NoiseKind::student_t) return student_loglik(residuals, noise.sigma, noise.dof);
    const double s2 = noise.sigma * noise.sigma;
    const double norm = -0.5 * (kLog2Pi + std::log(s2));
    double sum = 0.0;
    for (double r : residuals) sum += norm - r * r / (2.0 * s2);
    return sum;
}

double log_likelihood(const TickSeries& series, const PotentialModel& model,
                      const NoiseModel& noise) {
    noise.validate();
    return log_likelihood(residuals(series, model), noise);
}

double profile_sigma(std::span<const double> r) {
    if (r.size() < 2) throw ArgumentError("profile_sigma needs at least 2 residuals");
    double ss = 0.0;
    for (double x : r) ss += x * x;
    if (ss == 0.0) throw DegenerateFitError("all residuals are zero; likelihood is unbounded");
    return std::sqrt(ss / static_cast<double>(r.size()));
}

double profile_sigma(const TickSeries& series, const PotentialModel& model) {
    return profile_sigma(residuals(series, model));
}

double profile_student_scale(std::span<const double> r, double dof) {
    const double rms = profile_sigma(r);
    double lo = 1e-6;
    const double hi = 10.0 * rms;
    if (lo >= hi) lo = 1e-3 * rms;
    return golden_section_max([&](double s) { return student_loglik(r, s, dof); }, lo, hi, 1e-8);
}

bool fit_precedes(const FitResult& a, const FitResult& b, Criterion criterion) {
    const double ca = a.criterion(criterion);
    const double cb = b.criterion(criterion);
    if (ca != cb) return ca < cb;
    if (a.k_params != b.k_params) return a.k_params < b.k_params;
    if (a.model.m != b.model.m) return a.model.m < b.model.m;
    if (std::abs(a.model.b_nl) != std::abs(b.model.b_nl)) {
        return std::abs(a.model.b_nl) < std::abs(b.model.b_nl);
    }
    if (std::abs(a.model.b_quad) != std::abs(b.model.b_quad)) {
        return std::abs(a.model.b_quad) < std::abs(b.model.b_quad);
    }
    if (a.model.gamma != b.model.gamma) return a.model.gamma < b.model.gamma;
    if (a.model.b_nl != b.model.b_nl) return a.model.b_nl < b.model.b_nl;
    return a.model.b_quad < b.model.b_quad;
}

double ModelSelection::runner_up_margin() const {
    double runner = std::numeric_limits<double>::infinity();
    for (const auto& f : family_best) {
        if (f && f->family != best.family) runner = std::min(runner, f->criterion(criterion));
    }
    return std::isfinite(runner) ? runner - best.criterion(criterion) : 0.0;
}

std::optional<double> ModelSelection::nonlinear_advantage() const {
    const auto& nl = family_best[static_cast<int>(Family::nonlinear)];
    if (!nl) return std::nullopt;
    double linear = std::numeric_limits<double>::infinity();
    for (Family f : {Family::null_potential, Family::quadratic}) {
        const auto& fit = family_best[static_cast<int>(f)];
        if (fit) linear = std::min(linear, fit->criterion(criterion));
    }
    return linear - nl->criterion(criterion);
}

// ---------------------------------------------------------------------------

namespace {

struct Point {
    std::size_t m_index;
    std::size_t gamma_index;
    double b_quad;
    double b_nl;
    Family family;
};

struct Evaluation {
    double log_likelihood;
    double sigma;
};

/// Profiled likelihood over a common residual window for every (M, gamma) column.
class LikelihoodSurface {
  public:
    LikelihoodSurface(const TickSeries& series, const GridSpec& grid, const FitOptions& options)
        : grid_(grid), options_(options) {
        grid.validate();
        if (options.noise == NoiseKind::student_t && !(options.dof > 2.0)) {
            throw ArgumentError("student_t noise needs dof > 2");
        }
        const auto max_m = static_cast<std::size_t>(grid.max_m());
        if (series.size() <= max_m + 2) {
            throw ArgumentError(fmt::format(
                "series of length {} too short for max(m) = {} (need > max(m) + 2)", series.size(),
                max_m));
        }
        const auto prices = series.prices();
        first_tick_ = max_m - 1;
        n_ = series.size() - max_m;

        increments_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            increments_[i] = prices[first_tick_ + i + 1] - prices[first_tick_ + i];
        }
        if (std::all_of(increments_.begin(), increments_.end(), [](double d) { return d == 0.0; })) {
            throw DegenerateFitError("constant price window; likelihood is unbounded");
        }

        const std::size_t n_gamma = grid.gamma_set.size();
        columns_.resize(grid.m_set.size() * n_gamma);
        for (std::size_t mi = 0; mi < grid.m_set.size(); ++mi) {
            std::vector<double> p(n_);
            for (std::size_t i = 0; i < n_; ++i) {
                const std::size_t t = first_tick_ + i;
                p[i] = prices[t] - moving_center(prices, t, grid.m_set[mi]);
            }
            for (std::size_t gi = 0; gi < n_gamma; ++gi) {
                Column& col = columns_[mi * n_gamma + gi];
                col.q.resize(n_);
                for (std::size_t i = 0; i < n_; ++i) col.q[i] = ipow(p[i], grid.gamma_set[gi]);
                col.p = p;
                for (std::size_t i = 0; i < n_; ++i) {
                    const double d = increments_[i];
                    col.dd += d * d;
                    col.dp += d * p[i];
                    col.dq += d * col.q[i];
                    col.pp += p[i] * p[i];
                    col.pq += p[i] * col.q[i];
                    col.qq += col.q[i] * col.q[i];
                }
            }
        }
    }

    [[nodiscard]] std::size_t n_obs() const noexcept { return n_; }

    [[nodiscard]] Evaluation evaluate(const Point& pt) const {
        const Column& col = columns_[pt.m_index * grid_.gamma_set.size() + pt.gamma_index];
        const double a = pt.b_quad;
        const double c = pt.b_nl;
        if (options_.noise == NoiseKind::gaussian) {
            double rss = col.dd + 2.0 * a * col.dp + 2.0 * c * col.dq + a * a * col.pp +
                         2.0 * a * c * col.pq + c * c * col.qq;
            // The expanded form loses digits when the fit is nearly exact.
            if (!(rss > 1e-8 * col.dd)) rss = direct_rss(col, a, c);
            if (!(rss > 0.0)) {
                throw DegenerateFitError("zero residual sum of squares; likelihood is unbounded");
            }
            return {gaussian_profiled_loglik(rss, n_), std::sqrt(rss / static_cast<double>(n_))};
        }
        std::vector<double> r(n_);
        for (std::size_t i = 0; i < n_; ++i) r[i] = increments_[i] + a * col.p[i] + c * col.q[i];
        const double scale = profile_student_scale(r, options_.dof);
        return {student_loglik(r, scale, options_.dof), scale};
    }

    [[nodiscard]] FitResult make_fit(const Point& pt, const Evaluation& ev) const {
        FitResult fit;
        fit.model.b_quad = pt.b_quad;
        fit.model.b_nl = pt.b_nl;
        fit.model.gamma = grid_.gamma_set[pt.gamma_index];
        fit.model.m = grid_.m_set[pt.m_index];
        fit.model.sigma = ev.sigma;
        fit.noise = NoiseModel{options_.noise, ev.sigma,
                               options_.noise == NoiseKind::student_t ? options_.dof : 0.0};
        fit.log_likelihood = ev.log_likelihood;
        fit.n_obs = n_;
        fit.center_degenerate = fit.model.m == 1;
        relabel(fit, pt.family);
        return fit;
    }

    void relabel(FitResult& fit, Family family) const {
        fit.family = family;
        fit.k_params = options_.k_params[static_cast<std::size_t>(family)];
        const auto ic = information_criteria(fit.log_likelihood, fit.k_params, fit.n_obs);
        fit.aic = ic.aic;
        fit.bic = ic.bic;
    }

    [[nodiscard]] Point locate(const FitResult& fit) const {
        const auto mi = static_cast<std::size_t>(
            std::find(grid_.m_set.begin(), grid_.m_set.end(), fit.model.m) - grid_.m_set.begin());
        const auto gi = static_cast<std::size_t>(
            std::find(grid_.gamma_set.begin(), grid_.gamma_set.end(), fit.model.gamma) -
            grid_.gamma_set.begin());
        return {mi, gi, fit.model.b_quad, fit.model.b_nl, fit.family};
    }

    /// Coordinate descent at one tenth of the grid step until the
    /// log-likelihood gain of a full sweep drops below 1e-9.
    [[nodiscard]] FitResult refine(const FitResult& start) const {
        if (start.family == Family::null_potential) return start;
        Point pt = locate(start);
        Evaluation best = evaluate(pt);
        const double step_a = grid_.b_quad.step / 10.0;
        const double step_c = grid_.b_nl.step / 10.0;
        const bool move_c = start.family == Family::nonlinear;

        auto try_axis = [&](double Point::*coord, double step, double lo, double hi) {
            for (double dir : {1.0, -1.0}) {
                bool moved = false;
                for (int iter = 0; iter < 100000; ++iter) {
                    Point cand = pt;
                    cand.*coord = snap_zero(pt.*coord + dir * step, step);
                    if (cand.*coord < lo || cand.*coord > hi) break;
                    const Evaluation ev = evaluate(cand);
                    if (!(ev.log_likelihood > best.log_likelihood)) break;
                    pt = cand;
                    best = ev;
                    moved = true;
                }
                if (moved) return;
            }
        };

        const double a_lo = std::min(grid_.b_quad.low, 0.0);
        const double a_hi = std::max(grid_.b_quad.high, 0.0);
        const double c_lo = std::min(grid_.b_nl.low, 0.0);
        const double c_hi = std::max(grid_.b_nl.high, 0.0);
        for (int sweep = 0; sweep < 10000; ++sweep) {
            const double before = best.log_likelihood;
            try_axis(&Point::b_quad, step_a, a_lo, a_hi);
            if (move_c) try_axis(&Point::b_nl, step_c, c_lo, c_hi);
            if (best.log_likelihood - before < 1e-9) break;
        }
        FitResult out = make_fit(pt, best);
        out.window = start.window;
        return out;
    }

    /// Distinct grid points, each tagged with the smallest family containing it.
    [[nodiscard]] std::vector<Point> points() const {
        const auto quad = grid_.b_quad.values();
        const auto nl = grid_.b_nl.values();
        std::vector<Point> out;
        out.reserve(grid_.m_set.size() * quad.size() * (1 + nl.size() * grid_.gamma_set.size()));
        for (std::size_t mi = 0; mi < grid_.m_set.size(); ++mi) {
            out.push_back({mi, 0, 0.0, 0.0, Family::null_potential});
            for (double a : quad) {
                if (a != 0.0) out.push_back({mi, 0, a, 0.0, Family::quadratic});
            }
            for (std::size_t gi = 0; gi < grid_.gamma_set.size(); ++gi) {
                for (double a : quad) {
                    for (double c : nl) {
                        if (c != 0.0) out.push_back({mi, gi, a, c, Family::nonlinear});
                    }
                }
            }
        }
        return out;
    }

  private:
    struct Column {
        std::vector<double> p;
        std::vector<double> q;
        double dd{0}, dp{0}, dq{0}, pp{0}, pq{0}, qq{0};
    };

    [[nodiscard]] double direct_rss(const Column& col, double a, double c) const {
        double rss = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double r = increments_[i] + a * col.p[i] + c * col.q[i];
            rss += r * r;
        }
        return rss;
    }

    const GridSpec& grid_;
    FitOptions options_;
    std::size_t first_tick_{0};
    std::size_t n_{0};
    std::vector<double> increments_;
    std::vector<Column> columns_;
};

std::vector<Evaluation> evaluate_all(const LikelihoodSurface& surface,
                                     const std::vector<Point>& pts) {
    std::vector<Evaluation> evals(pts.size());
    constexpr std::size_t kChunk = 512;
    const std::size_t chunks = (pts.size() + kChunk - 1) / kChunk;
    parallel_for(chunks, [&](std::size_t c) {
        const std::size_t end = std::min(pts.size(), (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) evals[i] = surface.evaluate(pts[i]);
    });
    return evals;
}

}  // namespace

std::vector<FitResult> fit_grid(const TickSeries& series, const GridSpec& grid,
                                const FitOptions& options) {
    const LikelihoodSurface surface(series, grid, options);
    const auto pts = surface.points();
    const auto evals = evaluate_all(surface, pts);

    std::vector<FitResult> fits;
    fits.reserve(pts.size() + 1);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        fits.push_back(surface.make_fit(pts[i], evals[i]));
        fits.back().window = Window{0, series.size()};
    }
    auto order = [](const FitResult& a, const FitResult& b) {
        return fit_precedes(a, b, Criterion::aic);
    };
    std::sort(fits.begin(), fits.end(), order);
    if (grid.refine && !fits.empty() && fits.front().family != Family::null_potential) {
        FitResult refined = surface.refine(fits.front());
        if (refined.model != fits.front().model) {
            fits.insert(std::upper_bound(fits.begin(), fits.end(), refined, order), refined);
        }
    }
    if (!fits.empty()) fits.front().selected = true;
    return fits;
}

ModelSelection select_model(const TickSeries& series, const GridSpec& grid, Criterion criterion,
                            const FitOptions& options) {
    const LikelihoodSurface surface(series, grid, options);
    const auto pts = surface.points();
    const auto evals = evaluate_all(surface, pts);

    // Best point per smallest-containing family.
    std::array<std::optional<FitResult>, 3> own;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        auto& slot = own[static_cast<std::size_t>(pts[i].family)];
        FitResult fit = surface.make_fit(pts[i], evals[i]);
        if (!slot || fit_precedes(fit, *slot, criterion)) slot = std::move(fit);
    }

    ModelSelection sel;
    sel.criterion = criterion;
    // Families are nested: each one's maximum also ranges over the smaller ones.
    std::optional<FitResult> carried;
    for (std::size_t f = 0; f < 3; ++f) {
        std::optional<FitResult> best = own[f];
        if (best && grid.refine) best = surface.refine(*best);
        if (carried) {
            FitResult up = *carried;
            surface.relabel(up, static_cast<Family>(f));
            if (!best || up.log_likelihood > best->log_likelihood ||
                (up.log_likelihood == best->log_likelihood &&
                 fit_precedes(up, *best, criterion))) {
                best = up;
            }
        }
        if (best) best->window = Window{0, series.size()};
        sel.family_best[f] = best;
        if (best) carried = best;
    }

    for (const auto& f : sel.family_best) {
        if (f && (!sel.best.n_obs || fit_precedes(*f, sel.best, criterion))) sel.best = *f;
    }
    sel.best.selected = true;
    sel.family_best[static_cast<std::size_t>(sel.best.family)]->selected = true;
    return sel;
}

}  // namespace puck
