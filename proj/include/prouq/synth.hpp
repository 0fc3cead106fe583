#pragma once

// Synthetic answer distributions with known entropy, and datasets built from
// them with planted correctness. Everything is a pure function of the seed.
//
// Random numbers come from mt19937_64 seeded per item with
// splitmix64(seed, index); uniforms are formed from the top 53 bits, so the
// streams are identical across standard libraries.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "prouq/records.hpp"

namespace prouq {

inline constexpr std::string_view kRngAlgorithm = "mt19937_64/splitmix64-derived-seeds/53-bit-uniform";

struct CategoricalDist {
    std::vector<double> probs;  // sums to 1 within 1e-12
    std::uint64_t seed = 0;
};

enum class DistFamily { dirichlet, zipf, spiked };

DistFamily parse_dist_family(std::string_view name);
std::string_view dist_family_name(DistFamily family);

double exact_entropy(const CategoricalDist & dist);

// Mass p on the first outcome, (1 - p) spread evenly over the other support - 1.
CategoricalDist spiked(double p, std::size_t support);

struct SupportRange {
    std::size_t min = 2;
    std::size_t max = 20;
};

std::vector<CategoricalDist> gen_distributions(std::size_t count, SupportRange support, DistFamily family,
                                               std::uint64_t seed);

struct SynthOptions {
    std::size_t n_samples = 0;
    DistFamily family = DistFamily::spiked;
    double correct_bias = 0.95;
    std::uint64_t seed = 0;
    SupportRange support{};
    // Extra generations per sample with probabilities log-uniform in
    // [1e-8, 1e-3]. When set, the head outcomes also lose a random share
    // (up to 30%) of their mass to outcomes that were never sampled, so the
    // sampled probabilities no longer sum to 1.
    std::size_t noise_tail = 0;
};

// Each outcome becomes one single-token generation with a distinct one-word
// text. Samples whose drawn distribution has entropy at or below the dataset
// median get the top-1 text as reference with probability correct_bias; the
// others with probability 1 - correct_bias. Otherwise the reference shares no
// token with any generation.
std::vector<Sample> gen_dataset(const SynthOptions & options);

struct BoundCheckResult {
    std::size_t distributions = 0;
    std::size_t checks = 0;
    double max_violation = 0.0;        // max over K of pro_score - entropy, clipped at 0
    double max_full_support_gap = 0.0; // max |pro_score(K = support) - entropy|
};

// Runs pro_score against exact_entropy for every K on `count` distributions,
// cycling through all three families.
BoundCheckResult bound_check(std::size_t count, std::uint64_t seed, SupportRange support = {});

} // namespace prouq
