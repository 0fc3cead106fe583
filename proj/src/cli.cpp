#include "prouq/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "prouq/error.hpp"
#include "prouq/estimators.hpp"
#include "prouq/eval.hpp"
#include "prouq/fetch.hpp"
#include "prouq/records.hpp"
#include "prouq/rouge.hpp"
#include "prouq/synth.hpp"

namespace prouq::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char * kDefaultEstimators = "pe,pe-mc,ne,all,nll,pro-adaptive";

// Writes to --output when given, otherwise to the command's stdout stream.
class Sink {
public:
    Sink(const std::string & path, std::ostream & fallback) : stream_(&fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw IoError("cannot write " + path);
            stream_ = file_.get();
        }
    }

    std::ostream & get() { return *stream_; }

    void finish() {
        stream_->flush();
        if (!*stream_) throw IoError("write failed");
    }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream * stream_;
};

struct DatasetFlags {
    std::string input;
    std::size_t max_samples = 0;
    bool dedup_text = false;

    void add(CLI::App * cmd, const std::string & what = "records JSONL dataset") {
        cmd->add_option("input", input, what)->required()->check(CLI::ExistingFile);
        cmd->add_option("--max-samples", max_samples, "read at most this many samples (0 = all)");
        cmd->add_flag("--dedup-text", dedup_text, "collapse generations with identical text, keeping the most probable");
    }

    std::vector<Sample> load() const {
        ReadOptions opts;
        if (max_samples > 0) opts.max_samples = max_samples;
        auto samples = read_dataset(input, opts);
        if (dedup_text) {
            for (auto & s : samples) s = dedup_by_text(s);
        }
        return samples;
    }
};

struct EstimatorFlags {
    std::string ids = kDefaultEstimators;
    std::optional<double> alpha;
    std::optional<std::size_t> k;

    void add(CLI::App * cmd) {
        cmd->add_option("--estimators", ids, "comma-separated estimator ids (pe, pe-mc, ne, all, nll, pro-k<K>, "
                                             "pro-a<ALPHA>, pro-adaptive, pro-k)")
            ->capture_default_str();
        cmd->add_option("--alpha", alpha, "alpha for `pro-adaptive` (default 0.4)")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--k", k, "K for a bare `pro-k`")->check(CLI::PositiveNumber);
    }

    // `pro-adaptive` takes `alpha_override` (from a grid search) or --alpha.
    std::vector<EstimatorConfig> resolve(std::optional<double> alpha_override = {}) const {
        std::vector<EstimatorConfig> out;
        std::string_view rest = ids;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const std::string item(rest.substr(0, comma));
            if (item == "pro-adaptive") {
                out.push_back(EstimatorConfig::pro_adaptive(alpha_override.value_or(alpha.value_or(kDefaultAlpha))));
            } else if (item == "pro-k") {
                if (!k) throw ConfigError("`pro-k` without a number needs --k");
                out.push_back(EstimatorConfig::pro_fixed(*k));
            } else if (!item.empty()) {
                out.push_back(parse_estimator_id(item));
            }
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (out.empty()) throw ConfigError("no estimators given");
        for (const auto & e : out) e.validate();
        return out;
    }
};

struct ReportFlags {
    std::string format = "markdown";
    std::string output;

    void add(CLI::App * cmd) {
        cmd->add_option("--format", format, "report format: jsonl, csv, markdown")->capture_default_str();
        cmd->add_option("--output,-o", output, "output path (default stdout)");
    }
};

std::vector<double> parse_thresholds(const std::string & text) {
    auto values = parse_grid(text);
    return values;
}

std::string format_sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1e", v);
    std::string s = buf;
    // 1.0e-05 -> 1.0e-5, 0.0e+00 -> 0.0e0
    const auto e = s.find('e');
    std::string mantissa = s.substr(0, e);
    std::string exp = s.substr(e + 1);
    std::string sign;
    if (!exp.empty() && (exp[0] == '+' || exp[0] == '-')) {
        if (exp[0] == '-') sign = "-";
        exp.erase(0, 1);
    }
    exp.erase(0, std::min(exp.find_first_not_of('0'), exp.size() - 1));
    return mantissa + "e" + sign + exp;
}

void write_score_line(std::ostream & out, const UncertaintyScore & s) {
    ordered_json j;
    j["sample_id"] = s.sample_id;
    j["estimator"] = estimator_id(s.estimator);
    j["value"] = s.value;
    if (s.selected_k) j["selected_k"] = *s.selected_k;
    out << j.dump() << '\n';
}

} // namespace

int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err) {
    CLI::App app{"Probability-only uncertainty scores for sampled LLM answers"};
    app.require_subcommand(1);
    std::function<int()> action;

    // fetch
    auto * fetch_cmd = app.add_subcommand("fetch", "sample answers with logprobs from an OpenAI-compatible endpoint");
    FetchConfig fetch_cfg;
    std::string questions_path, fetch_output, api_key_env = kDefaultApiKeyEnv;
    long timeout_ms = 60000, backoff_ms = 500;
    fetch_cmd->add_option("questions", questions_path, "JSONL of {id, question, references}")
        ->required()
        ->check(CLI::ExistingFile);
    fetch_cmd->add_option("--base-url", fetch_cfg.base_url, "endpoint base, e.g. http://localhost:8000/v1")->required();
    fetch_cmd->add_option("--model", fetch_cfg.model, "model name")->required();
    fetch_cmd->add_option("--n", fetch_cfg.n, "completions per question")->capture_default_str()->check(CLI::PositiveNumber);
    fetch_cmd->add_option("--temperature", fetch_cfg.temperature, "sampling temperature")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    fetch_cmd->add_option("--max-tokens", fetch_cfg.max_tokens, "max tokens per completion")->capture_default_str();
    fetch_cmd->add_option("--timeout-ms", timeout_ms, "per-request timeout")->capture_default_str();
    fetch_cmd->add_option("--attempts", fetch_cfg.max_attempts, "attempts per request")->capture_default_str();
    fetch_cmd->add_option("--backoff-ms", backoff_ms, "linear retry backoff")->capture_default_str();
    fetch_cmd->add_option("--parallel", fetch_cfg.parallelism, "concurrent questions")->capture_default_str();
    fetch_cmd->add_flag("--sequential", fetch_cfg.sequential, "send n single-completion requests instead of one");
    fetch_cmd->add_option("--api-key-env", api_key_env, "environment variable holding the API key")
        ->capture_default_str();
    fetch_cmd->add_option("--output,-o", fetch_output, "output dataset (default stdout)");
    fetch_cmd->callback([&] {
        action = [&] {
            fetch_cfg.timeout = std::chrono::milliseconds(timeout_ms);
            fetch_cfg.retry_backoff = std::chrono::milliseconds(backoff_ms);
            if (const char * key = std::getenv(api_key_env.c_str())) fetch_cfg.api_key = key;
            fetch_cfg.validate();
            const auto questions = read_questions(questions_path);
            const auto samples = fetch_all(questions, fetch_cfg, [&](const std::string & w) { err << "warning: " << w << '\n'; });
            Sink sink(fetch_output, out);
            write_dataset(sink.get(), samples);
            sink.finish();
            return kOk;
        };
    });

    // label
    auto * label_cmd = app.add_subcommand("label", "ROUGE-L correctness label for each sample's top-1 answer");
    DatasetFlags label_data;
    double label_threshold = kDefaultRougeThreshold;
    std::string label_output;
    label_data.add(label_cmd);
    label_cmd->add_option("--rouge-threshold", label_threshold, "correct iff ROUGE-L F1 exceeds this")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    label_cmd->add_option("--output,-o", label_output, "output path (default stdout)");
    label_cmd->callback([&] {
        action = [&] {
            const auto samples = label_data.load();
            Sink sink(label_output, out);
            for (const auto & s : samples) {
                ordered_json j;
                j["sample_id"] = s.id;
                try {
                    const auto label = label_sample(s, label_threshold);
                    j["rouge_l_f1"] = label.rouge_l_f1;
                    j["threshold"] = label.threshold;
                    j["correct"] = label.correct;
                } catch (const LabelingError & e) {
                    j["error"] = e.what();
                    err << "warning: " << e.what() << '\n';
                }
                sink.get() << j.dump() << '\n';
            }
            sink.finish();
            return kOk;
        };
    });

    // score
    auto * score_cmd = app.add_subcommand("score", "per-sample uncertainty scores as JSONL");
    DatasetFlags score_data;
    EstimatorFlags score_est;
    std::string score_output;
    score_data.add(score_cmd);
    score_est.add(score_cmd);
    score_cmd->add_option("--output,-o", score_output, "output path (default stdout)");
    score_cmd->callback([&] {
        const auto estimators = score_est.resolve();
        action = [&, estimators] {
            const auto samples = score_data.load();
            Sink sink(score_output, out);
            for (const auto & s : samples) {
                const auto view = sorted_view(s);
                for (const auto & e : estimators) write_score_line(sink.get(), score_sample(s, view, e));
            }
            sink.finish();
            return kOk;
        };
    });

    // evaluate
    auto * eval_cmd = app.add_subcommand("evaluate", "AUROC of each estimator against ROUGE-L correctness");
    DatasetFlags eval_data;
    EstimatorFlags eval_est;
    ReportFlags eval_report;
    double eval_threshold = kDefaultRougeThreshold;
    std::string eval_validation, eval_grid = "0:0.95:0.05";
    eval_data.add(eval_cmd);
    eval_est.add(eval_cmd);
    eval_report.add(eval_cmd);
    eval_cmd->add_option("--rouge-threshold", eval_threshold, "correct iff ROUGE-L F1 exceeds this")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    eval_cmd->add_option("--validation", eval_validation, "validation dataset; grid-searches alpha for pro-adaptive")
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--grid", eval_grid, "alpha grid for --validation")->capture_default_str();

    // sweep
    auto * sweep_cmd = app.add_subcommand("sweep", "AUROC across ROUGE-L correctness thresholds");
    DatasetFlags sweep_data;
    EstimatorFlags sweep_est;
    ReportFlags sweep_report;
    std::string sweep_thresholds = "0.1,0.2,0.3,0.4,0.5";
    std::string sweep_validation, sweep_grid = "0:0.95:0.05";
    sweep_data.add(sweep_cmd);
    sweep_est.add(sweep_cmd);
    sweep_report.add(sweep_cmd);
    sweep_cmd->add_option("--thresholds", sweep_thresholds, "list or start:stop:step")->capture_default_str();
    sweep_cmd->add_option("--validation", sweep_validation, "validation dataset; grid-searches alpha at 0.3")
        ->check(CLI::ExistingFile);
    sweep_cmd->add_option("--grid", sweep_grid, "alpha grid for --validation")->capture_default_str();

    auto evaluate_action = [&](DatasetFlags & data, EstimatorFlags & est, ReportFlags & rep,
                               std::vector<double> thresholds, const std::string & validation,
                               const std::string & grid_text, double search_threshold) {
        const auto format = parse_report_format(rep.format);
        const auto grid = parse_grid(grid_text);
        est.resolve();  // flag validation before touching files
        action = [&, format, grid, thresholds, search_threshold] {
            std::optional<AlphaSearch> search;
            if (!validation.empty()) {
                search = grid_search_alpha(read_dataset(validation), grid, search_threshold);
            }
            const auto estimators = est.resolve(search ? std::optional(search->chosen_alpha) : std::nullopt);
            EvalReport report = sweep(data.load(), estimators, thresholds);
            report.alpha_search = search;
            report.metadata["input"] = std::filesystem::path(data.input).filename().string();
            if (!validation.empty()) {
                report.metadata["validation"] = std::filesystem::path(validation).filename().string();
            }
            Sink sink(rep.output, out);
            write_report(report, sink.get(), format);
            sink.finish();
            for (const auto & row : report.rows) {
                if (row.error) err << "error: " << row.estimator << ": " << *row.error << '\n';
            }
            return report.has_errors() ? kRuntime : kOk;
        };
    };
    eval_cmd->callback([&] {
        evaluate_action(eval_data, eval_est, eval_report, {eval_threshold}, eval_validation, eval_grid, eval_threshold);
    });
    sweep_cmd->callback([&] {
        evaluate_action(sweep_data, sweep_est, sweep_report, parse_thresholds(sweep_thresholds), sweep_validation,
                        sweep_grid, kDefaultRougeThreshold);
    });

    // grid-search
    auto * grid_cmd = app.add_subcommand("grid-search", "choose alpha by validation AUROC");
    DatasetFlags grid_data;
    ReportFlags grid_report;
    grid_report.format = "jsonl";
    std::string grid_text = "0:0.95:0.05";
    double grid_threshold = kDefaultRougeThreshold;
    grid_data.add(grid_cmd, "validation dataset");
    grid_cmd->add_option("--grid", grid_text, "alpha values: list or start:stop:step")->capture_default_str();
    grid_cmd->add_option("--rouge-threshold", grid_threshold, "correct iff ROUGE-L F1 exceeds this")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    grid_cmd->add_option("--format", grid_report.format, "format of the --output report")->capture_default_str();
    grid_cmd->add_option("--output,-o", grid_report.output, "write the search as a report");
    grid_cmd->callback([&] {
        const auto grid = parse_grid(grid_text);
        const auto format = parse_report_format(grid_report.format);
        action = [&, grid, format] {
            EvalReport report;
            report.metadata["input"] = std::filesystem::path(grid_data.input).filename().string();
            report.alpha_search = grid_search_alpha(grid_data.load(), grid, grid_threshold);
            if (!grid_report.output.empty()) write_report(report, std::filesystem::path(grid_report.output), format);
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.4f", report.alpha_search->chosen_alpha);
            out << "chosen alpha " << buf << '\n';
            return kOk;
        };
    });

    // synth
    auto * synth_cmd = app.add_subcommand("synth", "emit a synthetic dataset with planted correctness");
    SynthOptions synth_opts;
    std::string synth_family = "spiked", synth_output;
    synth_cmd->add_option("--n", synth_opts.n_samples, "number of samples")->required();
    synth_cmd->add_option("--family", synth_family, "dirichlet, zipf or spiked")->capture_default_str();
    synth_cmd->add_option("--correct-bias", synth_opts.correct_bias, "planted correctness strength")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    synth_cmd->add_option("--seed", synth_opts.seed, "RNG seed")->capture_default_str();
    synth_cmd->add_option("--support-min", synth_opts.support.min, "smallest support size")->capture_default_str();
    synth_cmd->add_option("--support-max", synth_opts.support.max, "largest support size")->capture_default_str();
    synth_cmd->add_option("--noise-tail", synth_opts.noise_tail, "extra near-zero-probability generations per sample")
        ->capture_default_str();
    synth_cmd->add_option("--output,-o", synth_output, "output dataset (default stdout)");
    synth_cmd->callback([&] {
        synth_opts.family = parse_dist_family(synth_family);
        if (synth_opts.support.min < 1 || synth_opts.support.max < synth_opts.support.min) {
            throw ConfigError("support range must satisfy 1 <= min <= max");
        }
        action = [&] {
            Sink sink(synth_output, out);
            write_dataset(sink.get(), gen_dataset(synth_opts));
            sink.finish();
            err << "rng: " << kRngAlgorithm << '\n';
            return kOk;
        };
    });

    // bound-check
    auto * bound_cmd = app.add_subcommand("bound-check", "check PRO never exceeds the exact entropy");
    std::size_t bound_dists = 1000;
    std::uint64_t bound_seed = 0;
    SupportRange bound_support;
    bound_cmd->add_option("--dists", bound_dists, "number of distributions")->capture_default_str();
    bound_cmd->add_option("--seed", bound_seed, "RNG seed")->capture_default_str();
    bound_cmd->add_option("--support-min", bound_support.min, "smallest support size")->capture_default_str();
    bound_cmd->add_option("--support-max", bound_support.max, "largest support size")->capture_default_str();
    bound_cmd->callback([&] {
        action = [&] {
            const auto r = bound_check(bound_dists, bound_seed, bound_support);
            out << "distributions " << r.distributions << ", checks " << r.checks << '\n';
            out << "max violation " << format_sci(r.max_violation) << '\n';
            out << "max full-support gap " << format_sci(r.max_full_support_gap) << '\n';
            return r.max_violation <= 1e-9 && r.max_full_support_gap <= 1e-9 ? kOk : kRuntime;
        };
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError & e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const ConfigError & e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        return action ? action() : kUsage;
    } catch (const ConfigError & e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const ParseError & e) {
        err << "parse error: " << e.what() << '\n';
        return kUsage;
    } catch (const ValidationError & e) {
        err << "validation error: " << e.what() << '\n';
        return kUsage;
    } catch (const IoError & e) {
        err << "I/O error: " << e.what() << '\n';
        return kUsage;
    } catch (const UndefinedAurocError & e) {
        err << "evaluation error: " << e.what() << '\n';
        return kRuntime;
    } catch (const FetchError & e) {
        err << "fetch error: " << e.what() << '\n';
        return kRuntime;
    } catch (const std::exception & e) {
        err << "error: " << e.what() << '\n';
        return kRuntime;
    }
}

} // namespace prouq::cli
