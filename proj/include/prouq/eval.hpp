#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prouq/estimators.hpp"
#include "prouq/records.hpp"

namespace prouq {

// P(score of a random incorrect sample > score of a random correct one),
// ties counted as 1/2. Computed from midranks in O(n log n).
// `incorrect[i]` is true when sample i was answered wrongly.
// Throws UndefinedAurocError unless both classes are present.
double auroc(std::span<const double> scores, const std::vector<bool> & incorrect);

struct ReportRow {
    std::string estimator;
    double rouge_threshold = 0.0;
    std::optional<double> auroc;  // empty when `error` is set
    std::size_t n_correct = 0;
    std::size_t n_incorrect = 0;
    std::size_t n_excluded = 0;
    std::optional<std::string> error;

    bool operator==(const ReportRow &) const = default;
};

struct AlphaSearch {
    std::vector<double> grid;
    std::vector<double> validation_auroc;  // parallel to grid
    double chosen_alpha = 0.0;

    bool operator==(const AlphaSearch &) const = default;
};

struct ExcludedSample {
    std::string sample_id;
    std::string reason;

    bool operator==(const ExcludedSample &) const = default;
};

struct EvalReport {
    std::map<std::string, std::string> metadata;
    std::vector<ReportRow> rows;
    std::optional<AlphaSearch> alpha_search;
    std::vector<ExcludedSample> excluded;

    bool has_errors() const;

    bool operator==(const EvalReport &) const = default;
};

EvalReport evaluate(const std::vector<Sample> & dataset, const std::vector<EstimatorConfig> & estimators,
                    double rouge_threshold = 0.3);

// One row per (estimator, threshold), thresholds in the outer loop.
EvalReport sweep(const std::vector<Sample> & dataset, const std::vector<EstimatorConfig> & estimators,
                 const std::vector<double> & thresholds);

std::vector<double> default_alpha_grid();  // 0.00, 0.05, ..., 0.95

// "start:stop:step" (inclusive) or a comma-separated list.
std::vector<double> parse_grid(std::string_view text);

// Picks the alpha maximizing pro-adaptive AUROC on `validation`; ties go to
// the smallest alpha.
AlphaSearch grid_search_alpha(const std::vector<Sample> & validation, const std::vector<double> & grid,
                              double rouge_threshold = 0.3);

enum class ReportFormat { jsonl, csv, markdown };

ReportFormat parse_report_format(std::string_view name);

void write_report(const EvalReport & report, std::ostream & out, ReportFormat format);
void write_report(const EvalReport & report, const std::filesystem::path & path, ReportFormat format);

EvalReport read_report_jsonl(std::istream & in);
EvalReport read_report_jsonl(const std::filesystem::path & path);

} // namespace prouq
