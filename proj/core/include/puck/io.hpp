#pragma once

#include "puck/analysis.hpp"
#include "puck/core.hpp"
#include "puck/estimation.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace puck::io {

enum class CsvFormat { time_price, price_only };

struct IngestSpec {
    std::filesystem::path path;
    CsvFormat format{CsvFormat::time_price};
    char delimiter{','};
    bool skip_header{false};
};

struct IngestResult {
    TickSeries series;
    std::size_t skipped_rows{0};
    std::vector<std::string> warnings;
};

/// Parses prices in file order. Malformed rows are skipped and counted;
/// decreasing timestamps are reported as a warning and the timestamps dropped.
[[nodiscard]] IngestResult ingest(const IngestSpec& spec);
[[nodiscard]] IngestResult ingest(std::istream& in, const IngestSpec& spec);

/// Guesses the column layout and header from the first non-empty line.
[[nodiscard]] IngestSpec sniff(const std::filesystem::path& path, char delimiter = ',');

/// Price files carry 12 significant digits.
[[nodiscard]] std::string format_price(double value);

/// "tick,price" (or "timestamp,price") with a header row.
void write_price_csv(std::ostream& out, const TickSeries& series);

/// Two whitespace-separated numeric columns per line.
void write_plot(std::ostream& out, std::span<const double> x, std::span<const double> y);

/// Effective configuration of a CLI run.
struct RunConfig {
    GridSpec grid;
    std::size_t window{2000};
    std::size_t step{500};
    Criterion criterion{Criterion::aic};
    NoiseKind noise_kind{NoiseKind::gaussian};
    double dof{4.0};
    double epsilon{0.05};
    double delta_threshold{2.0};
    int bins{31};
    std::uint64_t seed{0};

    void validate() const;
    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

[[nodiscard]] nlohmann::json to_json(const RunConfig& config);
/// Fields absent from `j` keep the value they have in `base`.
[[nodiscard]] RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

[[nodiscard]] nlohmann::json to_json(const PotentialModel& model);
[[nodiscard]] PotentialModel potential_model_from_json(const nlohmann::json& j);

/// Report record for one fit. Doubles are written with round-trip precision.
[[nodiscard]] nlohmann::json to_json(const FitResult& fit);
[[nodiscard]] FitResult fit_result_from_json(const nlohmann::json& j);

[[nodiscard]] nlohmann::json to_json(const RegimeLabel& label);
[[nodiscard]] RegimeLabel regime_label_from_json(const nlohmann::json& j);

[[nodiscard]] nlohmann::json to_json(const ModelSelection& selection);
[[nodiscard]] nlohmann::json to_json(const ScanRecord& record);
[[nodiscard]] nlohmann::json to_json(const BarrierReport& report);
[[nodiscard]] nlohmann::json to_json(const EmpiricalPotential& potential);

/// Line-delimited report: a header record echoing the configuration, then one
/// compact JSON object per line.
class ReportWriter {
  public:
    ReportWriter(std::ostream& out, std::string_view command, const nlohmann::json& config);
    void write(nlohmann::json record);

  private:
    std::ostream& out_;
};

/// Parses every record of a line-delimited report.
[[nodiscard]] std::vector<nlohmann::json> read_report(std::istream& in);

}  // namespace puck::io
