#pragma once

// Uncertainty estimators over sampled generations. Every estimator is
// oriented so that a higher score means a more uncertain answer.
//
// PRO keeps the K most probable generations p*_1 >= ... >= p*_K and scores
//
//     PRO = -ln p*_K - sum_{i<=K} p*_i ln(p*_i / p*_K)
//
// which never exceeds the entropy of the underlying answer distribution and
// equals it when K covers the whole support. The adaptive variant picks K as
// the number of probabilities >= alpha (at least one).

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prouq/records.hpp"

namespace prouq {

enum class EstimatorKind {
    pe_plugin,
    pe_mc,
    ne,
    all,
    nll,
    pro_fixed_k,
    pro_adaptive,
};

inline constexpr double kDefaultAlpha = 0.4;

struct EstimatorConfig {
    EstimatorKind kind = EstimatorKind::nll;
    std::optional<std::size_t> k;  // pro_fixed_k only
    std::optional<double> alpha;   // pro_adaptive only

    static EstimatorConfig pe_plugin() { return {EstimatorKind::pe_plugin, {}, {}}; }
    static EstimatorConfig pe_mc() { return {EstimatorKind::pe_mc, {}, {}}; }
    static EstimatorConfig ne() { return {EstimatorKind::ne, {}, {}}; }
    static EstimatorConfig all() { return {EstimatorKind::all, {}, {}}; }
    static EstimatorConfig nll() { return {EstimatorKind::nll, {}, {}}; }
    static EstimatorConfig pro_fixed(std::size_t k) { return {EstimatorKind::pro_fixed_k, k, {}}; }
    static EstimatorConfig pro_adaptive(double alpha) { return {EstimatorKind::pro_adaptive, {}, alpha}; }

    // Throws ConfigError unless k/alpha are set exactly when required and in range.
    void validate() const;

    bool operator==(const EstimatorConfig &) const = default;
};

// Stable ids: pe, pe-mc, ne, all, nll, pro-k<INT>, pro-a<FLOAT>.
std::string estimator_id(const EstimatorConfig & config);

// Accepts the stable ids plus `pro-adaptive` (alpha = kDefaultAlpha).
EstimatorConfig parse_estimator_id(std::string_view id);

// Comma-separated list of ids.
std::vector<EstimatorConfig> parse_estimator_list(std::string_view ids);

struct UncertaintyScore {
    std::string sample_id;
    EstimatorConfig estimator;
    double value = 0.0;
    std::optional<std::size_t> selected_k;
};

// Number of leading probabilities >= alpha, never less than 1.
std::size_t select_top_k(const SortedProbView & view, double alpha);

UncertaintyScore pro_score(const SortedProbView & view, std::size_t k);
UncertaintyScore pro_adaptive(const SortedProbView & view, double alpha);

// -sum p ln p over the sampled set, no renormalization.
UncertaintyScore pe_plugin(const SortedProbView & view);
// -(1/N) sum ln p.
UncertaintyScore pe_mc(const SortedProbView & view);
// Mean over generations of the negated per-token average logprob.
UncertaintyScore ne_score(const Sample & sample);
// Negated per-token average logprob of the top-1 generation.
UncertaintyScore all_score(const SortedProbView & view, const Sample & sample);
UncertaintyScore nll_score(const SortedProbView & view);

// Dispatches on config. For pro_fixed_k, K > N is clamped to N with a warning
// on stderr. `view` must be sorted_view(sample).
UncertaintyScore score_sample(const Sample & sample, const SortedProbView & view,
                              const EstimatorConfig & config);
UncertaintyScore score_sample(const Sample & sample, const EstimatorConfig & config);

} // namespace prouq
