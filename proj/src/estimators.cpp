#include "prouq/estimators.hpp"

#include <charconv>
#include <cmath>
#include <iostream>
#include <system_error>

#include "prouq/error.hpp"
#include "prouq/likelihood.hpp"

namespace prouq {

namespace {

// Folds -0.0 into +0.0 so certain answers print as 0.
double positive_zero(double v) {
    return v + 0.0;
}

void require_nonempty(const SortedProbView & view) {
    if (view.empty()) {
        throw ConfigError("empty probability view");
    }
}

UncertaintyScore make_score(EstimatorConfig config, double value, std::optional<std::size_t> k = {}) {
    UncertaintyScore s;
    s.estimator = config;
    s.value = positive_zero(value);
    s.selected_k = k;
    return s;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace

void EstimatorConfig::validate() const {
    const bool wants_k = kind == EstimatorKind::pro_fixed_k;
    const bool wants_alpha = kind == EstimatorKind::pro_adaptive;
    if (wants_k != k.has_value()) {
        throw ConfigError(wants_k ? "pro_fixed_k requires k" : "k is only valid for pro_fixed_k");
    }
    if (wants_alpha != alpha.has_value()) {
        throw ConfigError(wants_alpha ? "pro_adaptive requires alpha" : "alpha is only valid for pro_adaptive");
    }
    if (k && *k < 1) {
        throw ConfigError("k must be >= 1");
    }
    if (alpha && !(*alpha >= 0.0 && *alpha <= 1.0)) {
        throw ConfigError("alpha must lie in [0, 1], got " + format_double(*alpha));
    }
}

std::string estimator_id(const EstimatorConfig & config) {
    switch (config.kind) {
    case EstimatorKind::pe_plugin: return "pe";
    case EstimatorKind::pe_mc: return "pe-mc";
    case EstimatorKind::ne: return "ne";
    case EstimatorKind::all: return "all";
    case EstimatorKind::nll: return "nll";
    case EstimatorKind::pro_fixed_k: return "pro-k" + std::to_string(config.k.value_or(0));
    case EstimatorKind::pro_adaptive: return "pro-a" + format_double(config.alpha.value_or(kDefaultAlpha));
    }
    return "unknown";
}

EstimatorConfig parse_estimator_id(std::string_view id) {
    if (id == "pe") return EstimatorConfig::pe_plugin();
    if (id == "pe-mc") return EstimatorConfig::pe_mc();
    if (id == "ne") return EstimatorConfig::ne();
    if (id == "all") return EstimatorConfig::all();
    if (id == "nll") return EstimatorConfig::nll();
    if (id == "pro-adaptive") return EstimatorConfig::pro_adaptive(kDefaultAlpha);

    auto bad = [&] { return ConfigError("unknown estimator id '" + std::string(id) + "'"); };
    if (id.starts_with("pro-k")) {
        const auto digits = id.substr(5);
        std::size_t k = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
        if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size()) throw bad();
        EstimatorConfig c = EstimatorConfig::pro_fixed(k);
        c.validate();
        return c;
    }
    if (id.starts_with("pro-a")) {
        const auto digits = id.substr(5);
        double alpha = 0.0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), alpha);
        if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size()) throw bad();
        EstimatorConfig c = EstimatorConfig::pro_adaptive(alpha);
        c.validate();
        return c;
    }
    throw bad();
}

std::vector<EstimatorConfig> parse_estimator_list(std::string_view ids) {
    std::vector<EstimatorConfig> out;
    while (!ids.empty()) {
        const auto comma = ids.find(',');
        const auto item = ids.substr(0, comma);
        if (!item.empty()) {
            out.push_back(parse_estimator_id(item));
        }
        if (comma == std::string_view::npos) break;
        ids.remove_prefix(comma + 1);
    }
    if (out.empty()) {
        throw ConfigError("no estimators given");
    }
    return out;
}

std::size_t select_top_k(const SortedProbView & view, double alpha) {
    require_nonempty(view);
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError("alpha must lie in [0, 1], got " + format_double(alpha));
    }
    std::size_t k = 0;
    while (k < view.size() && view.probs[k] >= alpha) {
        ++k;
    }
    return k == 0 ? 1 : k;
}

UncertaintyScore pro_score(const SortedProbView & view, std::size_t k) {
    require_nonempty(view);
    if (k < 1 || k > view.size()) {
        throw ConfigError("K = " + std::to_string(k) + " outside [1, " + std::to_string(view.size()) + "]");
    }
    const double pk = view.probs[k - 1];
    double spread = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        spread += view.probs[i] * std::log(view.probs[i] / pk);
    }
    return make_score(EstimatorConfig::pro_fixed(k), -std::log(pk) - spread, k);
}

UncertaintyScore pro_adaptive(const SortedProbView & view, double alpha) {
    UncertaintyScore s = pro_score(view, select_top_k(view, alpha));
    s.estimator = EstimatorConfig::pro_adaptive(alpha);
    return s;
}

UncertaintyScore pe_plugin(const SortedProbView & view) {
    require_nonempty(view);
    double h = 0.0;
    for (double p : view.probs) {
        h -= p * std::log(p);
    }
    return make_score(EstimatorConfig::pe_plugin(), h);
}

UncertaintyScore pe_mc(const SortedProbView & view) {
    require_nonempty(view);
    double sum = 0.0;
    for (double p : view.probs) {
        sum -= std::log(p);
    }
    return make_score(EstimatorConfig::pe_mc(), sum / static_cast<double>(view.size()));
}

UncertaintyScore ne_score(const Sample & sample) {
    if (sample.generations.empty()) {
        throw ConfigError("sample '" + sample.id + "' has no generations");
    }
    double sum = 0.0;
    for (const auto & g : sample.generations) {
        sum -= avg_token_logprob(g);
    }
    UncertaintyScore s = make_score(EstimatorConfig::ne(), sum / static_cast<double>(sample.generations.size()));
    s.sample_id = sample.id;
    return s;
}

UncertaintyScore all_score(const SortedProbView & view, const Sample & sample) {
    require_nonempty(view);
    const auto & top = sample.generations.at(view.origin_index.front());
    UncertaintyScore s = make_score(EstimatorConfig::all(), -avg_token_logprob(top));
    s.sample_id = sample.id;
    return s;
}

UncertaintyScore nll_score(const SortedProbView & view) {
    require_nonempty(view);
    return make_score(EstimatorConfig::nll(), -std::log(view.probs.front()));
}

UncertaintyScore score_sample(const Sample & sample, const SortedProbView & view, const EstimatorConfig & config) {
    config.validate();
    UncertaintyScore s;
    switch (config.kind) {
    case EstimatorKind::pe_plugin: s = pe_plugin(view); break;
    case EstimatorKind::pe_mc: s = pe_mc(view); break;
    case EstimatorKind::ne: s = ne_score(sample); break;
    case EstimatorKind::all: s = all_score(view, sample); break;
    case EstimatorKind::nll: s = nll_score(view); break;
    case EstimatorKind::pro_fixed_k: {
        std::size_t k = *config.k;
        if (k > view.size()) {
            std::cerr << "warning: sample '" << sample.id << "': K = " << k << " exceeds N = " << view.size()
                      << ", using K = N\n";
            k = view.size();
        }
        s = pro_score(view, k);
        break;
    }
    case EstimatorKind::pro_adaptive: s = pro_adaptive(view, *config.alpha); break;
    }
    s.sample_id = sample.id;
    s.estimator = config;
    return s;
}

UncertaintyScore score_sample(const Sample & sample, const EstimatorConfig & config) {
    return score_sample(sample, sorted_view(sample), config);
}

} // namespace prouq
