#include "cli.hpp"

#include "puck/analysis.hpp"
#include "puck/core.hpp"
#include "puck/error.hpp"
#include "puck/estimation.hpp"
#include "puck/io.hpp"
#include "puck/scenario.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

namespace puck::cli {

namespace {

struct Flags {
    std::string input;
    std::string out;
    std::string plot;
    std::string grid_spec;
    std::string criterion{"aic"};
    std::string noise{"gaussian"};
    std::string format{"auto"};
    std::string delimiter{","};
    double dof{4.0};
    double b_quad{0.0};
    double b_nl{0.0};
    int gamma{2};
    int m{4};
    double sigma{0.03};
    std::size_t n{2000};
    std::uint64_t seed{0};
    int bins{31};
    double epsilon{0.05};
    double delta_threshold{2.0};
    std::size_t window{2000};
    std::size_t step{500};
    bool refine{false};
    bool header{false};
    bool no_header{false};
    double start_price{100.0};
    std::size_t horizon{2000};
    std::size_t trials{1000};
    int smooth{1};
};

/// Options registered on a subcommand, so that "was this flag given?" can be asked.
class OptionSet {
  public:
    explicit OptionSet(CLI::App* app) : app_(app) {}

    template <typename T>
    OptionSet& add(const std::string& name, T& target, const std::string& help) {
        opts_[name] = app_->add_option(name, target, help);
        return *this;
    }
    OptionSet& flag(const std::string& name, bool& target, const std::string& help) {
        opts_[name] = app_->add_flag(name, target, help);
        return *this;
    }
    [[nodiscard]] bool given(const std::string& name) const {
        const auto it = opts_.find(name);
        return it != opts_.end() && it->second->count() > 0;
    }
    [[nodiscard]] CLI::Option* get(const std::string& name) const { return opts_.at(name); }

  private:
    CLI::App* app_;
    std::map<std::string, CLI::Option*> opts_;
};

NoiseKind parse_noise(const std::string& s) {
    if (s == "gaussian") return NoiseKind::gaussian;
    if (s == "student-t" || s == "student_t") return NoiseKind::student_t;
    throw ArgumentError(fmt::format("unknown noise kind '{}'", s));
}

// Flags override the config file, which overrides built-in defaults.
io::RunConfig effective_config(const Flags& f, const OptionSet& o) {
    io::RunConfig c;
    if (o.given("--grid-spec")) c = io::load_run_config(f.grid_spec, c);
    if (o.given("--window")) c.window = f.window;
    if (o.given("--step")) c.step = f.step;
    if (o.given("--criterion")) c.criterion = f.criterion == "bic" ? Criterion::bic : Criterion::aic;
    if (o.given("--noise")) c.noise_kind = parse_noise(f.noise);
    if (o.given("--dof")) c.dof = f.dof;
    if (o.given("--epsilon")) c.epsilon = f.epsilon;
    if (o.given("--delta-threshold")) c.delta_threshold = f.delta_threshold;
    if (o.given("--bins")) c.bins = f.bins;
    if (o.given("--seed")) c.seed = f.seed;
    if (o.given("--refine")) c.grid.refine = f.refine;
    if (o.given("--m")) c.grid.m_set = {f.m};
    if (o.given("--gamma")) c.grid.gamma_set = {f.gamma};
    c.validate();
    return c;
}

FitOptions fit_options(const io::RunConfig& c) {
    FitOptions opt;
    opt.noise = c.noise_kind;
    opt.dof = c.dof;
    return opt;
}

TickSeries load_input(const Flags& f, const OptionSet& o, std::ostream& err) {
    if (f.input.empty()) throw ArgumentError("--input is required");
    if (f.delimiter.size() != 1) throw ArgumentError("--delimiter must be a single character");
    io::IngestSpec spec = io::sniff(f.input, f.delimiter[0]);
    if (f.format == "time-price") spec.format = io::CsvFormat::time_price;
    if (f.format == "price") spec.format = io::CsvFormat::price_only;
    if (o.given("--header")) spec.skip_header = true;
    if (o.given("--no-header")) spec.skip_header = false;
    auto result = io::ingest(spec);
    for (const auto& w : result.warnings) err << "warning: " << f.input << ": " << w << '\n';
    if (f.smooth > 1) return smooth(result.series, f.smooth);
    return std::move(result.series);
}

/// Output stream for --out, or the fallback.
class Sink {
  public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
            if (!*file_) throw IoError(fmt::format("cannot write {}", path));
            stream_ = file_.get();
        }
    }
    std::ostream& stream() { return *stream_; }

  private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_;
};

void write_plot_file(const std::string& prefix, const std::string& suffix,
                     std::span<const double> x, std::span<const double> y) {
    const std::string path = prefix + suffix;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write {}", path));
    io::write_plot(out, x, y);
}

StabilityInterval boundaries_for(int m) {
    if (m < 2) {
        return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    }
    return stability_boundaries(m);
}

nlohmann::json selection_record(const ModelSelection& sel, const RegimeLabel& label) {
    nlohmann::json j = io::to_json(sel);
    j["record"] = "selection";
    j["regime"] = io::to_json(label);
    return j;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_simulate(const Flags& f, std::ostream& out) {
    SimulationConfig cfg;
    cfg.model = PotentialModel{f.b_quad, f.gamma, f.b_nl, f.m, f.sigma};
    cfg.noise = NoiseModel{parse_noise(f.noise), f.sigma, f.dof};
    cfg.n_steps = f.n;
    cfg.initial_prices.assign(static_cast<std::size_t>(std::max(f.m, 1)), f.start_price);
    cfg.rng_seed = f.seed;
    const auto trace = simulate_traced(cfg);

    Sink prices(f.out, out);
    io::write_price_csv(prices.stream(), trace.series);
    if (!f.plot.empty()) {
        std::vector<double> ticks(trace.series.size());
        for (std::size_t i = 0; i < ticks.size(); ++i) ticks[i] = static_cast<double>(i);
        write_plot_file(f.plot, "_price.dat", ticks, trace.series.prices());
    }
    if (!f.out.empty()) {
        nlohmann::json config{{"model", io::to_json(cfg.model)},
                              {"noise", f.noise},
                              {"dof", f.dof},
                              {"n", f.n},
                              {"seed", f.seed},
                              {"start_price", f.start_price}};
        io::ReportWriter report(out, "simulate", config);
        report.write({{"record", "simulation"},
                      {"rows", trace.series.size()},
                      {"warm_up", cfg.initial_prices.size()},
                      {"diverged", trace.diverged},
                      {"volatility", volatility(trace.series)}});
    }
    return kExitOk;
}

int cmd_fit(const Flags& f, const OptionSet& o, std::ostream& out, std::ostream& err) {
    const auto cfg = effective_config(f, o);
    const TickSeries series = load_input(f, o, err);
    const auto sel = select_model(series, cfg.grid, cfg.criterion, fit_options(cfg));
    const auto label = classify_regime(sel, boundaries_for(sel.best.model.m),
                                       RegimeThresholds{cfg.epsilon, cfg.delta_threshold});
    Sink sink(f.out, out);
    nlohmann::json config = io::to_json(cfg);
    config["input"] = f.input;
    io::ReportWriter report(sink.stream(), "fit", config);
    for (const auto& fam : sel.family_best) {
        if (!fam) continue;
        nlohmann::json rec = io::to_json(*fam);
        rec["record"] = "fit";
        report.write(std::move(rec));
    }
    report.write(selection_record(sel, label));
    if (!f.plot.empty()) {
        const auto disp = displacements(series.prices(), sel.best.model.m);
        const auto [lo, hi] = std::minmax_element(disp.begin(), disp.end());
        std::vector<double> x(201), u(201);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = *lo + (*hi - *lo) * static_cast<double>(i) / 200.0;
            u[i] = potential_value(x[i], sel.best.model);
        }
        write_plot_file(f.plot, "_potential.dat", x, u);
    }
    return kExitOk;
}

int cmd_scan(const Flags& f, const OptionSet& o, std::ostream& out, std::ostream& err) {
    const auto cfg = effective_config(f, o);
    const TickSeries series = load_input(f, o, err);
    ScanOptions opt;
    opt.window = cfg.window;
    opt.step = cfg.step;
    opt.grid = cfg.grid;
    opt.criterion = cfg.criterion;
    opt.fit = fit_options(cfg);
    opt.thresholds = RegimeThresholds{cfg.epsilon, cfg.delta_threshold};
    const auto records = scan_windows(series, opt);

    Sink sink(f.out, out);
    nlohmann::json config = io::to_json(cfg);
    config["input"] = f.input;
    io::ReportWriter report(sink.stream(), "scan", config);
    std::size_t alarms = 0;
    std::size_t degenerate = 0;
    for (const auto& r : records) {
        report.write(io::to_json(r));
        alarms += r.alarm() ? 1 : 0;
        degenerate += r.degenerate() ? 1 : 0;
    }
    nlohmann::json summary{{"record", "summary"},
                           {"windows", records.size()},
                           {"alarms", alarms},
                           {"degenerate", degenerate}};
    if (const auto first = first_alarm(records)) {
        summary["first_alarm_window_start"] = records[*first].window.start;
    } else {
        summary["first_alarm_window_start"] = nullptr;
    }
    report.write(std::move(summary));

    if (!f.plot.empty()) {
        std::vector<double> x, bq, bnl;
        for (const auto& r : records) {
            if (r.degenerate()) continue;
            x.push_back(static_cast<double>(r.window.start + r.window.length - 1));
            bq.push_back(r.selection->best.model.b_quad);
            bnl.push_back(r.selection->best.model.b_nl);
        }
        write_plot_file(f.plot, "_b_quad.dat", x, bq);
        write_plot_file(f.plot, "_b_nl.dat", x, bnl);
    }
    return kExitOk;
}

int cmd_potential(const Flags& f, const OptionSet& o, std::ostream& out, std::ostream& err) {
    const auto cfg = effective_config(f, o);
    const TickSeries series = load_input(f, o, err);
    const auto pot = empirical_potential(series, f.m, cfg.bins);
    Sink sink(f.out, out);
    nlohmann::json config = io::to_json(cfg);
    config["input"] = f.input;
    config["m"] = f.m;
    io::ReportWriter report(sink.stream(), "potential", config);
    nlohmann::json rec = io::to_json(pot);
    rec["record"] = "empirical_potential";
    rec["volatility"] = volatility(series);
    report.write(std::move(rec));
    if (!f.plot.empty()) {
        write_plot_file(f.plot, "_force.dat", pot.bin_centers, pot.mean_increment);
        write_plot_file(f.plot, "_u.dat", pot.bin_centers, pot.u_values);
    }
    return kExitOk;
}

int cmd_classify(const Flags& f, const OptionSet& o, std::ostream& out, std::ostream& err) {
    const auto cfg = effective_config(f, o);
    Sink sink(f.out, out);
    nlohmann::json config = io::to_json(cfg);
    const RegimeThresholds thresholds{cfg.epsilon, cfg.delta_threshold};
    if (!f.input.empty()) {
        config["input"] = f.input;
        const TickSeries series = load_input(f, o, err);
        const auto sel = select_model(series, cfg.grid, cfg.criterion, fit_options(cfg));
        const auto label = classify_regime(sel, boundaries_for(sel.best.model.m), thresholds);
        io::ReportWriter report(sink.stream(), "classify", config);
        report.write(selection_record(sel, label));
        return kExitOk;
    }
    FitResult fit;
    fit.model = PotentialModel{f.b_quad, f.gamma, f.b_nl, f.m, f.sigma};
    fit.model.validate();
    const auto label = classify_regime(fit, boundaries_for(fit.model.m), thresholds);
    config["model"] = io::to_json(fit.model);
    io::ReportWriter report(sink.stream(), "classify", config);
    report.write({{"record", "regime"}, {"model", io::to_json(fit.model)},
                  {"regime", io::to_json(label)}});
    return kExitOk;
}

int cmd_stability(const Flags& f, std::ostream& out) {
    const auto b = stability_boundaries(f.m);
    Sink sink(f.out, out);
    io::ReportWriter report(sink.stream(), "stability", {{"m", f.m}});
    report.write({{"record", "stability"}, {"m", f.m}, {"b_low", b.low}, {"b_high", b.high}});
    return kExitOk;
}

int cmd_barrier(const Flags& f, std::ostream& out) {
    const PotentialModel model{f.b_quad, f.gamma, f.b_nl, f.m, f.sigma};
    const NoiseModel noise{parse_noise(f.noise), f.sigma, f.dof};
    const auto rep = barrier_report(model, noise, f.horizon, f.trials, f.seed);
    Sink sink(f.out, out);
    io::ReportWriter report(sink.stream(), "barrier",
                            {{"model", io::to_json(model)}, {"noise", f.noise}, {"dof", f.dof},
                             {"horizon", f.horizon}, {"trials", f.trials}, {"seed", f.seed}});
    nlohmann::json rec = io::to_json(rep);
    rec["record"] = "barrier";
    report.write(std::move(rec));
    return kExitOk;
}

int cmd_make_demo(const Flags& f, const OptionSet& o, std::ostream& out) {
    DemoSpec spec;
    if (o.given("--sigma")) spec.sigma = f.sigma;
    const auto demo = make_demo(spec, f.seed);
    Sink prices(f.out, out);
    io::write_price_csv(prices.stream(), demo.series);
    if (!f.out.empty()) {
        io::ReportWriter report(out, "make-demo", {{"seed", f.seed}, {"sigma", spec.sigma}});
        report.write({{"record", "demo"},
                      {"rows", demo.series.size()},
                      {"cubic_start", demo.cubic_start},
                      {"crash_start", demo.crash_start},
                      {"escaped_early", demo.escaped_early}});
    }
    return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Random walk in a deforming potential: simulate, fit and scan price series", "puck"};
    app.require_subcommand(1);
    Flags f;

    struct Sub {
        CLI::App* app;
        OptionSet opts;
    };
    std::map<std::string, std::unique_ptr<Sub>> subs;
    auto sub = [&](const std::string& name, const std::string& help) -> OptionSet& {
        auto* s = app.add_subcommand(name, help);
        auto& slot = subs[name] = std::make_unique<Sub>(Sub{s, OptionSet(s)});
        slot->opts.add("--out", f.out, "output file (default: stdout)");
        return slot->opts;
    };
    auto model_flags = [&](OptionSet& os) {
        os.add("--b-quad", f.b_quad, "quadratic coefficient")
            .add("--b-nl", f.b_nl, "nonlinear coefficient")
            .add("--gamma", f.gamma, "nonlinear force exponent (>= 2)")
            .add("--m", f.m, "moving-average span")
            .add("--sigma", f.sigma, "noise scale")
            .add("--noise", f.noise, "gaussian | student-t")
            .add("--dof", f.dof, "student-t degrees of freedom")
            .add("--seed", f.seed, "random seed");
    };
    auto input_flags = [&](OptionSet& os) {
        os.add("--input", f.input, "price CSV: (timestamp, price) or (price)")
            .add("--format", f.format, "auto | time-price | price")
            .add("--delimiter", f.delimiter, "field delimiter")
            .flag("--header", f.header, "first row is a header")
            .flag("--no-header", f.no_header, "first row is data")
            .add("--smooth", f.smooth, "trailing pre-smoother span (1 = off)");
    };
    auto fit_flags = [&](OptionSet& os) {
        os.add("--grid-spec", f.grid_spec, "JSON run configuration")
            .add("--criterion", f.criterion, "aic | bic")
            .add("--noise", f.noise, "gaussian | student-t")
            .add("--dof", f.dof, "student-t degrees of freedom")
            .add("--epsilon", f.epsilon, "random-walk band for |b_quad|")
            .add("--delta-threshold", f.delta_threshold, "criterion margin for a precursor alarm")
            .add("--seed", f.seed, "random seed")
            .flag("--refine", f.refine, "coordinate-descent refinement of the best grid point")
            .add("--plot", f.plot, "prefix for two-column plot files");
        os.get("--criterion")->check(CLI::IsMember({"aic", "bic"}));
        os.get("--noise")->check(CLI::IsMember({"gaussian", "student-t"}));
    };

    auto& simulate = sub("simulate", "simulate a price series");
    model_flags(simulate);
    simulate.add("--n", f.n, "number of generated ticks")
        .add("--start-price", f.start_price, "constant warm-up price")
        .add("--plot", f.plot, "prefix for two-column plot files");
    simulate.get("--noise")->check(CLI::IsMember({"gaussian", "student-t"}));

    auto& fit = sub("fit", "select the best potential model for a series");
    input_flags(fit);
    fit_flags(fit);
    fit.add("--m", f.m, "restrict the grid to one moving-average span")
        .add("--gamma", f.gamma, "restrict the grid to one exponent");

    auto& scan = sub("scan", "sliding-window model selection and precursor alarms");
    input_flags(scan);
    fit_flags(scan);
    scan.add("--window", f.window, "window length in ticks").add("--step", f.step, "window step");
    scan.add("--m", f.m, "restrict the grid to one moving-average span")
        .add("--gamma", f.gamma, "restrict the grid to one exponent");

    auto& potential = sub("potential", "binned empirical potential");
    input_flags(potential);
    potential.add("--m", f.m, "moving-average span")
        .add("--bins", f.bins, "number of displacement bins")
        .add("--grid-spec", f.grid_spec, "JSON run configuration")
        .add("--plot", f.plot, "prefix for two-column plot files");

    auto& classify = sub("classify", "market regime of a series or of given coefficients");
    input_flags(classify);
    fit_flags(classify);
    classify.add("--b-quad", f.b_quad, "quadratic coefficient")
        .add("--b-nl", f.b_nl, "nonlinear coefficient")
        .add("--gamma", f.gamma, "nonlinear force exponent")
        .add("--m", f.m, "moving-average span")
        .add("--sigma", f.sigma, "noise scale");

    auto& stability = sub("stability", "stability interval of the quadratic coefficient");
    stability.add("--m", f.m, "moving-average span (>= 2)");

    auto& barrier = sub("barrier", "cubic barrier geometry and Monte Carlo escape fraction");
    model_flags(barrier);
    barrier.add("--horizon", f.horizon, "steps per trial").add("--trials", f.trials, "trials");

    auto& demo = sub("make-demo", "write the quadratic -> cubic -> crash fixture");
    demo.add("--seed", f.seed, "random seed").add("--sigma", f.sigma, "noise scale");

    std::vector<const char*> cargv;
    cargv.reserve(argv.size());
    for (const auto& a : argv) cargv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        const auto* chosen = app.get_subcommands().front();
        const auto& os = subs.at(chosen->get_name())->opts;
        const std::string& name = chosen->get_name();
        if (name == "simulate") return cmd_simulate(f, out);
        if (name == "fit") return cmd_fit(f, os, out, err);
        if (name == "scan") return cmd_scan(f, os, out, err);
        if (name == "potential") return cmd_potential(f, os, out, err);
        if (name == "classify") return cmd_classify(f, os, out, err);
        if (name == "stability") return cmd_stability(f, out);
        if (name == "barrier") return cmd_barrier(f, out);
        if (name == "make-demo") return cmd_make_demo(f, os, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomainError;
    }
    return kExitUsage;
}

}  // namespace puck::cli
