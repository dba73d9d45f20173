#include "puck/io.hpp"

#include "puck/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include <fmt/format.h>

namespace puck::io {

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && ws(s.front())) s.remove_prefix(1);
    while (!s.empty() && ws(s.back())) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = line.find(delim, pos);
        out.push_back(trim(line.substr(pos, next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

bool parse_double(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

template <typename E>
E parse_enum(const nlohmann::json& j, std::initializer_list<std::pair<std::string_view, E>> names,
             std::string_view what) {
    const auto text = j.get<std::string>();
    for (const auto& [name, value] : names) {
        if (text == name) return value;
    }
    throw ArgumentError(fmt::format("unknown {} '{}'", what, text));
}

std::string_view noise_name(NoiseKind kind) {
    return kind == NoiseKind::gaussian ? "gaussian" : "student-t";
}

NoiseKind noise_from(const nlohmann::json& j) {
    return parse_enum<NoiseKind>(
        j, {{"gaussian", NoiseKind::gaussian}, {"student-t", NoiseKind::student_t},
            {"student_t", NoiseKind::student_t}},
        "noise kind");
}

Criterion criterion_from(const nlohmann::json& j) {
    return parse_enum<Criterion>(j, {{"aic", Criterion::aic}, {"bic", Criterion::bic}},
                                 "criterion");
}

Family family_from(const nlohmann::json& j) {
    return parse_enum<Family>(j,
                              {{"null", Family::null_potential},
                               {"quadratic", Family::quadratic},
                               {"nonlinear", Family::nonlinear}},
                              "family");
}

RegimeState state_from(const nlohmann::json& j) {
    return parse_enum<RegimeState>(j,
                                   {{"pure_random_walk", RegimeState::pure_random_walk},
                                    {"stable", RegimeState::stable},
                                    {"unstable", RegimeState::unstable},
                                    {"oscillatory_divergent", RegimeState::oscillatory_divergent},
                                    {"monotonic_divergent", RegimeState::monotonic_divergent}},
                                   "regime state");
}

nlohmann::json range_json(const Range& r) { return {r.low, r.high, r.step}; }

Range range_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) {
        throw ArgumentError("range must be a [low, high, step] array");
    }
    return Range{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

// ---------------------------------------------------------------------------
// CSV

IngestResult ingest(std::istream& in, const IngestSpec& spec) {
    std::vector<double> prices;
    std::vector<double> stamps;
    std::size_t skipped = 0;
    bool header_pending = spec.skip_header;
    std::string line;
    while (std::getline(in, line)) {
        const std::string_view row = trim(line);
        if (row.empty()) continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        const auto fields = split(row, spec.delimiter);
        double price = 0.0;
        double stamp = 0.0;
        bool ok = false;
        if (spec.format == CsvFormat::time_price) {
            ok = fields.size() == 2 && parse_double(fields[0], stamp) &&
                 parse_double(fields[1], price);
        } else {
            ok = fields.size() == 1 && parse_double(fields[0], price);
        }
        if (!ok) {
            ++skipped;
            continue;
        }
        prices.push_back(price);
        if (spec.format == CsvFormat::time_price) stamps.push_back(stamp);
    }
    if (prices.empty()) {
        throw EmptyInputError(fmt::format("no valid price rows in {}", spec.path.string()));
    }

    std::vector<std::string> warnings;
    if (skipped > 0) warnings.push_back(fmt::format("skipped {} malformed row(s)", skipped));
    std::optional<std::vector<double>> ts;
    if (spec.format == CsvFormat::time_price) {
        if (std::is_sorted(stamps.begin(), stamps.end())) {
            ts = std::move(stamps);
        } else {
            warnings.emplace_back("timestamps are not non-decreasing; timestamps dropped");
        }
    }
    return IngestResult{TickSeries(std::move(prices), std::move(ts), spec.path.stem().string()),
                        skipped, std::move(warnings)};
}

IngestResult ingest(const IngestSpec& spec) {
    std::ifstream in(spec.path);
    if (!in) throw IoError(fmt::format("cannot open {}", spec.path.string()));
    return ingest(in, spec);
}

IngestSpec sniff(const std::filesystem::path& path, char delimiter) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
    IngestSpec spec{path, CsvFormat::time_price, delimiter, false};
    std::string line;
    while (std::getline(in, line)) {
        const std::string_view row = trim(line);
        if (row.empty()) continue;
        const auto fields = split(row, delimiter);
        double v = 0.0;
        spec.skip_header = !std::all_of(fields.begin(), fields.end(),
                                        [&](std::string_view f) { return parse_double(f, v); });
        spec.format = fields.size() == 1 ? CsvFormat::price_only : CsvFormat::time_price;
        break;
    }
    return spec;
}

std::string format_price(double value) { return fmt::format("{:.12g}", value); }

void write_price_csv(std::ostream& out, const TickSeries& series) {
    const auto& ts = series.timestamps();
    out << (ts ? "timestamp,price\n" : "tick,price\n");
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (ts) {
            out << format_price((*ts)[i]);
        } else {
            out << i;
        }
        out << ',' << format_price(series[i]) << '\n';
    }
}

void write_plot(std::ostream& out, std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ArgumentError("plot columns differ in length");
    for (std::size_t i = 0; i < x.size(); ++i) out << fmt::format("{:.17g} {:.17g}\n", x[i], y[i]);
}

// ---------------------------------------------------------------------------
// Configuration

void RunConfig::validate() const {
    grid.validate();
    if (window < 50) throw ArgumentError("window must be >= 50");
    if (step < 1) throw ArgumentError("step must be >= 1");
    if (noise_kind == NoiseKind::student_t && !(dof > 2.0)) {
        throw ArgumentError("student-t noise needs dof > 2");
    }
    if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be > 0");
    if (!(delta_threshold > 0.0)) throw ArgumentError("delta threshold must be > 0");
    if (bins < 3) throw ArgumentError("bins must be >= 3");
}

nlohmann::json to_json(const RunConfig& c) {
    return {
        {"grid",
         {{"b_quad", range_json(c.grid.b_quad)},
          {"b_nl", range_json(c.grid.b_nl)},
          {"gamma_set", c.grid.gamma_set},
          {"m_set", c.grid.m_set},
          {"refine", c.grid.refine}}},
        {"window", c.window},
        {"step", c.step},
        {"criterion", to_string(c.criterion)},
        {"noise", noise_name(c.noise_kind)},
        {"dof", c.dof},
        {"epsilon", c.epsilon},
        {"delta_threshold", c.delta_threshold},
        {"bins", c.bins},
        {"seed", c.seed},
    };
}

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig c) {
    try {
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            if (g.contains("b_quad")) c.grid.b_quad = range_from(g.at("b_quad"));
            if (g.contains("b_nl")) c.grid.b_nl = range_from(g.at("b_nl"));
            if (g.contains("gamma_set")) c.grid.gamma_set = g.at("gamma_set").get<std::vector<int>>();
            if (g.contains("m_set")) c.grid.m_set = g.at("m_set").get<std::vector<int>>();
            if (g.contains("refine")) c.grid.refine = g.at("refine").get<bool>();
        }
        if (j.contains("window")) c.window = j.at("window").get<std::size_t>();
        if (j.contains("step")) c.step = j.at("step").get<std::size_t>();
        if (j.contains("criterion")) c.criterion = criterion_from(j.at("criterion"));
        if (j.contains("noise")) c.noise_kind = noise_from(j.at("noise"));
        if (j.contains("dof")) c.dof = j.at("dof").get<double>();
        if (j.contains("epsilon")) c.epsilon = j.at("epsilon").get<double>();
        if (j.contains("delta_threshold")) c.delta_threshold = j.at("delta_threshold").get<double>();
        if (j.contains("bins")) c.bins = j.at("bins").get<int>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(fmt::format("bad config: {}", e.what()));
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open config {}", path.string()));
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(fmt::format("config {} is not valid JSON: {}", path.string(), e.what()));
    }
    return run_config_from_json(j, std::move(base));
}

// ---------------------------------------------------------------------------
// Report records

nlohmann::json to_json(const PotentialModel& m) {
    return {{"b_quad", m.b_quad}, {"gamma", m.gamma}, {"b_nl", m.b_nl},
            {"m", m.m},           {"sigma", m.sigma}};
}

PotentialModel potential_model_from_json(const nlohmann::json& j) {
    PotentialModel m;
    m.b_quad = j.at("b_quad").get<double>();
    m.gamma = j.at("gamma").get<int>();
    m.b_nl = j.at("b_nl").get<double>();
    m.m = j.at("m").get<int>();
    m.sigma = j.at("sigma").get<double>();
    return m;
}

nlohmann::json to_json(const FitResult& f) {
    nlohmann::json j = to_json(f.model);
    j["family"] = to_string(f.family);
    j["noise"] = noise_name(f.noise.kind);
    j["dof"] = f.noise.dof;
    j["log_likelihood"] = f.log_likelihood;
    j["aic"] = f.aic;
    j["bic"] = f.bic;
    j["k_params"] = f.k_params;
    j["n_obs"] = f.n_obs;
    j["window_start"] = f.window.start;
    j["window_length"] = f.window.length;
    j["selected"] = f.selected;
    j["center_degenerate"] = f.center_degenerate;
    return j;
}

FitResult fit_result_from_json(const nlohmann::json& j) {
    FitResult f;
    f.model = potential_model_from_json(j);
    f.family = family_from(j.at("family"));
    f.noise = NoiseModel{noise_from(j.at("noise")), f.model.sigma, j.at("dof").get<double>()};
    f.log_likelihood = j.at("log_likelihood").get<double>();
    f.aic = j.at("aic").get<double>();
    f.bic = j.at("bic").get<double>();
    f.k_params = j.at("k_params").get<int>();
    f.n_obs = j.at("n_obs").get<std::size_t>();
    f.window = Window{j.at("window_start").get<std::size_t>(),
                      j.at("window_length").get<std::size_t>()};
    f.selected = j.at("selected").get<bool>();
    f.center_degenerate = j.at("center_degenerate").get<bool>();
    return f;
}

nlohmann::json to_json(const RegimeLabel& r) {
    return {{"state", to_string(r.state)},
            {"precursor_cubic", r.precursor_cubic},
            {"delta_criterion", r.delta_criterion}};
}

RegimeLabel regime_label_from_json(const nlohmann::json& j) {
    return RegimeLabel{state_from(j.at("state")), j.at("precursor_cubic").get<bool>(),
                       j.at("delta_criterion").get<double>()};
}

nlohmann::json to_json(const ModelSelection& s) {
    nlohmann::json families = nlohmann::json::object();
    for (const auto& f : s.family_best) {
        if (f) families[std::string(to_string(f->family))] = to_json(*f);
    }
    return {{"criterion", to_string(s.criterion)}, {"best", to_json(s.best)}, {"families", families}};
}

nlohmann::json to_json(const ScanRecord& r) {
    nlohmann::json j{{"record", "window"},
                     {"window_start", r.window.start},
                     {"window_length", r.window.length},
                     {"degenerate", r.degenerate()}};
    if (r.selection) j["selection"] = to_json(*r.selection);
    if (r.regime) j["regime"] = to_json(*r.regime);
    if (r.degenerate()) j["reason"] = r.degenerate_reason;
    return j;
}

nlohmann::json to_json(const BarrierReport& b) {
    return {{"well_position", b.well_position},       {"barrier_position", b.barrier_position},
            {"barrier_height", b.barrier_height},     {"escape_fraction", b.escape_fraction},
            {"horizon", b.horizon},                   {"n_trials", b.n_trials}};
}

nlohmann::json to_json(const EmpiricalPotential& e) {
    return {{"bin_centers", e.bin_centers},
            {"mean_increment", e.mean_increment},
            {"counts", e.counts},
            {"u_values", e.u_values},
            {"anchor", e.anchor}};
}

ReportWriter::ReportWriter(std::ostream& out, std::string_view command,
                           const nlohmann::json& config)
    : out_(out) {
    write({{"record", "header"}, {"command", command}, {"config", config}});
}

void ReportWriter::write(nlohmann::json record) { out_ << record.dump() << '\n'; }

std::vector<nlohmann::json> read_report(std::istream& in) {
    std::vector<nlohmann::json> out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        out.push_back(nlohmann::json::parse(line));
    }
    return out;
}

}  // namespace puck::io
