#include "prouq/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "parallel.hpp"
#include "prouq/error.hpp"
#include "prouq/rouge.hpp"

namespace prouq {

namespace {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

// Per-sample data shared by every estimator and threshold.
struct Prepared {
    std::vector<SortedProbView> views;
    std::vector<std::optional<double>> rouge;  // best ROUGE-L F1 of the top-1; empty when excluded
    std::vector<ExcludedSample> excluded;
};

Prepared prepare(const std::vector<Sample> & dataset) {
    if (dataset.empty()) {
        throw ValidationError("empty dataset");
    }
    Prepared prep;
    prep.views.resize(dataset.size());
    prep.rouge.resize(dataset.size());
    std::vector<std::string> reasons(dataset.size());
    detail::parallel_for(dataset.size(), [&](std::size_t i) {
        prep.views[i] = sorted_view(dataset[i]);
        try {
            prep.rouge[i] = label_sample(dataset[i], 0.0, prep.views[i]).rouge_l_f1;
        } catch (const LabelingError & e) {
            reasons[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (!prep.rouge[i]) {
            prep.excluded.push_back({dataset[i].id, reasons[i]});
        }
    }
    return prep;
}

std::vector<double> score_all(const std::vector<Sample> & dataset, const Prepared & prep,
                              const EstimatorConfig & config) {
    std::vector<double> scores(dataset.size());
    detail::parallel_for(dataset.size(), [&](std::size_t i) {
        scores[i] = score_sample(dataset[i], prep.views[i], config).value;
    });
    return scores;
}

ReportRow make_row(const std::string & estimator, double threshold, const Prepared & prep,
                   const std::vector<double> & scores) {
    ReportRow row;
    row.estimator = estimator;
    row.rouge_threshold = threshold;
    row.n_excluded = prep.excluded.size();
    std::vector<double> kept;
    std::vector<bool> incorrect;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!prep.rouge[i]) continue;
        const bool correct = *prep.rouge[i] > threshold;
        kept.push_back(scores[i]);
        incorrect.push_back(!correct);
        ++(correct ? row.n_correct : row.n_incorrect);
    }
    try {
        row.auroc = auroc(kept, incorrect);
    } catch (const UndefinedAurocError & e) {
        row.error = e.what();
    }
    return row;
}

EvalReport sweep_prepared(const std::vector<Sample> & dataset, const Prepared & prep,
                          const std::vector<EstimatorConfig> & estimators, const std::vector<double> & thresholds) {
    for (const auto & e : estimators) e.validate();
    std::vector<std::vector<double>> scores;
    scores.reserve(estimators.size());
    for (const auto & e : estimators) {
        scores.push_back(score_all(dataset, prep, e));
    }
    EvalReport report;
    report.metadata["n_samples"] = std::to_string(dataset.size());
    report.excluded = prep.excluded;
    for (double t : thresholds) {
        for (std::size_t e = 0; e < estimators.size(); ++e) {
            report.rows.push_back(make_row(estimator_id(estimators[e]), t, prep, scores[e]));
        }
    }
    return report;
}

std::string csv_field(const std::string & s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

double auroc(std::span<const double> scores, const std::vector<bool> & incorrect) {
    if (scores.size() != incorrect.size()) {
        throw ConfigError("scores and labels differ in length");
    }
    const std::size_t n = scores.size();
    const auto n_pos = static_cast<std::size_t>(std::count(incorrect.begin(), incorrect.end(), true));
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw UndefinedAurocError("AUROC undefined: all " + std::to_string(n) + " labeled samples are " +
                                  (n_pos == 0 ? "correct" : "incorrect"));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of 1-based midranks of the incorrect class.
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) {
            if (incorrect[order[t]]) rank_sum += midrank;
        }
        i = j;
    }
    const double pos = static_cast<double>(n_pos);
    const double u = rank_sum - pos * (pos + 1.0) / 2.0;
    return u / (pos * static_cast<double>(n_neg));
}

bool EvalReport::has_errors() const {
    return std::any_of(rows.begin(), rows.end(), [](const ReportRow & r) { return r.error.has_value(); });
}

EvalReport evaluate(const std::vector<Sample> & dataset, const std::vector<EstimatorConfig> & estimators,
                    double rouge_threshold) {
    return sweep(dataset, estimators, {rouge_threshold});
}

EvalReport sweep(const std::vector<Sample> & dataset, const std::vector<EstimatorConfig> & estimators,
                 const std::vector<double> & thresholds) {
    return sweep_prepared(dataset, prepare(dataset), estimators, thresholds);
}

std::vector<double> default_alpha_grid() {
    std::vector<double> grid;
    for (int i = 0; i < 20; ++i) grid.push_back(i / 20.0);
    return grid;
}

std::vector<double> parse_grid(std::string_view text) {
    auto number = [&](std::string_view s) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
            throw ConfigError("bad number '" + std::string(s) + "' in grid '" + std::string(text) + "'");
        }
        return v;
    };
    std::vector<double> grid;
    if (text.find(':') != std::string_view::npos) {
        const auto c1 = text.find(':');
        const auto c2 = text.find(':', c1 + 1);
        if (c2 == std::string_view::npos) throw ConfigError("grid range must be start:stop:step");
        const double start = number(text.substr(0, c1));
        const double stop = number(text.substr(c1 + 1, c2 - c1 - 1));
        const double step = number(text.substr(c2 + 1));
        if (!(step > 0.0) || stop < start) throw ConfigError("grid range needs step > 0 and stop >= start");
        const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (std::size_t i = 0; i < count; ++i) {
            // Round to 12 significant digits so 0.05 * 7 reads back as 0.35.
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.12g", start + static_cast<double>(i) * step);
            grid.push_back(number(buf));
        }
    } else {
        std::string_view rest = text;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            grid.push_back(number(rest.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
    }
    if (grid.empty()) throw ConfigError("empty grid");
    for (double a : grid) {
        if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("grid value " + shortest(a) + " outside [0, 1]");
    }
    return grid;
}

AlphaSearch grid_search_alpha(const std::vector<Sample> & validation, const std::vector<double> & grid,
                              double rouge_threshold) {
    if (grid.empty()) throw ConfigError("empty alpha grid");
    std::vector<EstimatorConfig> configs;
    for (double a : grid) configs.push_back(EstimatorConfig::pro_adaptive(a));
    const Prepared prep = prepare(validation);
    const EvalReport report = sweep_prepared(validation, prep, configs, {rouge_threshold});

    AlphaSearch search;
    search.grid = grid;
    for (const auto & row : report.rows) {
        if (!row.auroc) {
            throw UndefinedAurocError(*row.error + "; the validation split needs both correct and incorrect "
                                                   "answers, use a larger validation split");
        }
        search.validation_auroc.push_back(*row.auroc);
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double a = search.validation_auroc[i];
        const double b = search.validation_auroc[best];
        if (a > b || (a == b && grid[i] < grid[best])) best = i;
    }
    search.chosen_alpha = grid[best];
    return search;
}

ReportFormat parse_report_format(std::string_view name) {
    if (name == "jsonl") return ReportFormat::jsonl;
    if (name == "csv") return ReportFormat::csv;
    if (name == "markdown" || name == "md" || name == "markdown-table") return ReportFormat::markdown;
    throw ConfigError("unknown report format '" + std::string(name) + "' (jsonl, csv, markdown)");
}

void write_report(const EvalReport & report, std::ostream & out, ReportFormat format) {
    switch (format) {
    case ReportFormat::jsonl: {
        ordered_json meta;
        meta["type"] = "metadata";
        meta["metadata"] = report.metadata;
        out << meta.dump() << '\n';
        for (const auto & r : report.rows) {
            ordered_json j;
            j["type"] = "row";
            j["estimator"] = r.estimator;
            j["rouge_threshold"] = r.rouge_threshold;
            j["auroc"] = r.auroc ? ordered_json(*r.auroc) : ordered_json(nullptr);
            j["n_correct"] = r.n_correct;
            j["n_incorrect"] = r.n_incorrect;
            j["n_excluded"] = r.n_excluded;
            if (r.error) j["error"] = *r.error;
            out << j.dump() << '\n';
        }
        if (report.alpha_search) {
            ordered_json j;
            j["type"] = "alpha_search";
            j["grid"] = report.alpha_search->grid;
            j["validation_auroc"] = report.alpha_search->validation_auroc;
            j["chosen_alpha"] = report.alpha_search->chosen_alpha;
            out << j.dump() << '\n';
        }
        for (const auto & e : report.excluded) {
            ordered_json j;
            j["type"] = "excluded";
            j["sample_id"] = e.sample_id;
            j["reason"] = e.reason;
            out << j.dump() << '\n';
        }
        break;
    }
    case ReportFormat::csv:
        out << "estimator,rouge_threshold,auroc,n_correct,n_incorrect,n_excluded,error\n";
        for (const auto & r : report.rows) {
            out << csv_field(r.estimator) << ',' << shortest(r.rouge_threshold) << ','
                << (r.auroc ? shortest(*r.auroc) : "") << ',' << r.n_correct << ',' << r.n_incorrect << ','
                << r.n_excluded << ',' << csv_field(r.error.value_or("")) << '\n';
        }
        break;
    case ReportFormat::markdown:
        out << "| estimator | rouge threshold | AUROC | correct | incorrect | excluded |\n";
        out << "|---|---|---|---|---|---|\n";
        for (const auto & r : report.rows) {
            out << "| " << r.estimator << " | " << fixed4(r.rouge_threshold) << " | "
                << (r.auroc ? fixed4(*r.auroc) : "error: " + *r.error) << " | " << r.n_correct << " | "
                << r.n_incorrect << " | " << r.n_excluded << " |\n";
        }
        if (report.alpha_search) {
            out << "\n| alpha | validation AUROC |\n|---|---|\n";
            const auto & s = *report.alpha_search;
            for (std::size_t i = 0; i < s.grid.size(); ++i) {
                out << "| " << fixed4(s.grid[i]) << " | " << fixed4(s.validation_auroc[i]) << " |\n";
            }
            out << "\nchosen alpha: " << fixed4(s.chosen_alpha) << '\n';
        }
        break;
    }
}

void write_report(const EvalReport & report, const std::filesystem::path & path, ReportFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_report(report, out, format);
    if (!out) throw IoError("write failed: " + path.string());
}

EvalReport read_report_jsonl(std::istream & in) {
    EvalReport report;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            const auto type = j.at("type").get<std::string>();
            if (type == "metadata") {
                report.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
            } else if (type == "row") {
                ReportRow r;
                r.estimator = j.at("estimator").get<std::string>();
                r.rouge_threshold = j.at("rouge_threshold").get<double>();
                if (!j.at("auroc").is_null()) r.auroc = j.at("auroc").get<double>();
                r.n_correct = j.at("n_correct").get<std::size_t>();
                r.n_incorrect = j.at("n_incorrect").get<std::size_t>();
                r.n_excluded = j.at("n_excluded").get<std::size_t>();
                if (j.contains("error")) r.error = j.at("error").get<std::string>();
                report.rows.push_back(std::move(r));
            } else if (type == "alpha_search") {
                AlphaSearch s;
                s.grid = j.at("grid").get<std::vector<double>>();
                s.validation_auroc = j.at("validation_auroc").get<std::vector<double>>();
                s.chosen_alpha = j.at("chosen_alpha").get<double>();
                report.alpha_search = std::move(s);
            } else if (type == "excluded") {
                report.excluded.push_back({j.at("sample_id").get<std::string>(), j.at("reason").get<std::string>()});
            }
        } catch (const json::exception & e) {
            throw ParseError(lineno, e.what());
        }
    }
    return report;
}

EvalReport read_report_jsonl(const std::filesystem::path & path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_report_jsonl(in);
}

} // namespace prouq
