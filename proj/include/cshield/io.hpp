#pragma once

#include "cshield/abstraction.hpp"
#include "cshield/checker.hpp"
#include "cshield/conformal.hpp"
#include "cshield/shield.hpp"
#include "cshield/sim.hpp"
#include "cshield/theorem_lab.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cshield {

// File formats. Every writer takes the manifest line to put first; readers
// skip comment lines except "# meta key=value ..." records.

[[nodiscard]] std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

using MetaMap = std::map<std::string, std::string>;

// key=value pairs from every line starting with "<comment> meta ".
[[nodiscard]] MetaMap read_meta(const std::string& text, std::string_view comment = "#");

[[nodiscard]] std::string format_sigma_csv(const SigmaTable& st, const std::string& manifest);
[[nodiscard]] SigmaTable parse_sigma_csv(const std::string& text, const std::string& origin);

[[nodiscard]] std::string format_conformal_model(const ConformalModel& cm, const std::string& manifest);
[[nodiscard]] ConformalModel parse_conformal_model(const std::string& text, const std::string& origin);

// true_state,p0,...,p{K-1}
[[nodiscard]] std::string format_samples_csv(const std::vector<ScoredSample>& samples, std::size_t classes,
                                             const std::string& manifest);
[[nodiscard]] std::vector<ScoredSample> parse_samples_csv(const std::string& text, const std::string& origin);

struct ConfusionFile
{
    SetConfusion confusion;
    std::string kind = "conformal"; // or "point"
    std::optional<double> alpha;
};

// actual_state,set_hex,count
[[nodiscard]] std::string format_confusion_csv(const ConfusionFile& c, const std::string& manifest);
[[nodiscard]] ConfusionFile parse_confusion_csv(const std::string& text, const std::string& origin);

[[nodiscard]] std::string format_coverage(const CoverageReport& r, const ConformalModel& cm,
                                          const std::string& manifest);

// Abstract model as a model file with a "// meta" record of its parameters.
// `manifest` is the header text without the comment prefix.
[[nodiscard]] std::string format_abstract_model(const AbstractModel& am, const std::string& manifest);

struct AbstractMeta
{
    std::string variant = "worst";
    std::optional<double> alpha;
    std::optional<double> lambda;
    bool baseline = false;
};

[[nodiscard]] AbstractMeta parse_abstract_meta(const std::string& text);

struct ResultRow
{
    std::string variant;
    std::optional<double> alpha;
    std::optional<double> lambda;
    PropertyResult result;
    double wall_ms = 0.0;
};

[[nodiscard]] std::string results_header();
[[nodiscard]] std::string format_result_row(const ResultRow& r);
[[nodiscard]] std::string format_results_csv(const std::vector<ResultRow>& rows, const std::string& manifest);

[[nodiscard]] std::string format_sim_summary(const SimSummary& s, const std::string& manifest);
[[nodiscard]] std::string format_episode_logs(const std::vector<EpisodeLog>& logs, const std::string& manifest);

struct ReportLine
{
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool pass = true;
};

[[nodiscard]] std::string format_report(const std::vector<ReportLine>& lines, const std::string& manifest);
[[nodiscard]] std::string format_sweep_csv(const Theorem1Sweep& sweep, const std::string& manifest);

// "lo..hi" inclusive, or a single horizon.
[[nodiscard]] std::vector<std::size_t> parse_horizons(const std::string& spec);

// Round-trip representation of a double.
[[nodiscard]] std::string fmt_double(double v);

} // namespace cshield
