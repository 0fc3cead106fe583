#include "prouq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "parallel.hpp"
#include "prouq/error.hpp"
#include "prouq/estimators.hpp"

namespace prouq {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ (index * 0xd1342543de82ef95ULL + 1));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on the open interval (0, 1).
    double open01() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * open01(); }

    std::size_t index(std::size_t lo, std::size_t hi) {
        // Inclusive range; the modulo bias is below 2^-40 for these sizes.
        return lo + static_cast<std::size_t>(engine_() % (hi - lo + 1));
    }

    template <typename T>
    void shuffle(std::vector<T> & v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[static_cast<std::size_t>(engine_() % i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

void normalize(std::vector<double> & w) {
    double sum = 0.0;
    for (double x : w) sum += x;
    for (double & x : w) x /= sum;
}

void check_support(SupportRange support) {
    if (support.min < 1 || support.max < support.min) {
        throw ConfigError("support range must satisfy 1 <= min <= max");
    }
}

CategoricalDist draw(DistFamily family, SupportRange support, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t m = rng.index(support.min, support.max);
    CategoricalDist d;
    d.seed = seed;
    switch (family) {
    case DistFamily::dirichlet:
        // Flat Dirichlet via normalized Exp(1) draws.
        for (std::size_t i = 0; i < m; ++i) d.probs.push_back(-std::log(rng.open01()));
        normalize(d.probs);
        break;
    case DistFamily::zipf: {
        const double s = rng.uniform(0.5, 2.5);
        for (std::size_t i = 0; i < m; ++i) d.probs.push_back(std::pow(static_cast<double>(i + 1), -s));
        normalize(d.probs);
        break;
    }
    case DistFamily::spiked:
        d = spiked(rng.uniform(0.5, 0.99), m);
        d.seed = seed;
        break;
    }
    return d;
}

} // namespace

DistFamily parse_dist_family(std::string_view name) {
    if (name == "dirichlet" || name == "dirichlet-like") return DistFamily::dirichlet;
    if (name == "zipf" || name == "zipf-like") return DistFamily::zipf;
    if (name == "spiked") return DistFamily::spiked;
    throw ConfigError("unknown distribution family '" + std::string(name) + "' (dirichlet, zipf, spiked)");
}

std::string_view dist_family_name(DistFamily family) {
    switch (family) {
    case DistFamily::dirichlet: return "dirichlet";
    case DistFamily::zipf: return "zipf";
    case DistFamily::spiked: return "spiked";
    }
    return "unknown";
}

double exact_entropy(const CategoricalDist & dist) {
    double h = 0.0;
    for (double q : dist.probs) {
        if (q > 0.0) h -= q * std::log(q);
    }
    return h + 0.0;
}

CategoricalDist spiked(double p, std::size_t support) {
    if (support < 1) throw ConfigError("support must be >= 1");
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("spike mass must lie in (0, 1]");
    CategoricalDist d;
    if (support == 1) {
        d.probs = {1.0};
        return d;
    }
    if (p == 1.0) throw ConfigError("spike mass 1 leaves zero-probability outcomes");
    d.probs.assign(support, (1.0 - p) / static_cast<double>(support - 1));
    d.probs[0] = p;
    return d;
}

std::vector<CategoricalDist> gen_distributions(std::size_t count, SupportRange support, DistFamily family,
                                               std::uint64_t seed) {
    check_support(support);
    std::vector<CategoricalDist> out(count);
    detail::parallel_for(count, [&](std::size_t i) { out[i] = draw(family, support, derive_seed(seed, i)); });
    return out;
}

std::vector<Sample> gen_dataset(const SynthOptions & options) {
    if (!(options.correct_bias >= 0.0 && options.correct_bias <= 1.0)) {
        throw ConfigError("correct_bias must lie in [0, 1]");
    }
    const std::size_t n = options.n_samples;
    const auto dists = gen_distributions(n, options.support, options.family, options.seed);

    // Sampled probabilities per sample: head outcomes then the noise tail.
    // Correctness is planted on the entropy of the drawn distribution only.
    std::vector<std::vector<double>> probs(n);
    std::vector<double> entropy(n);
    std::vector<double> plant_draw(n);
    detail::parallel_for(n, [&](std::size_t i) {
        Rng rng(derive_seed(options.seed ^ 0x5eed7a11ULL, i));
        probs[i] = dists[i].probs;
        if (options.noise_tail > 0) {
            const double unsampled = rng.uniform(0.0, 0.3);
            for (double & p : probs[i]) p *= 1.0 - unsampled;
            for (std::size_t t = 0; t < options.noise_tail; ++t) {
                probs[i].push_back(std::exp(rng.uniform(std::log(1e-8), std::log(1e-3))));
            }
        }
        entropy[i] = exact_entropy(dists[i]);
        plant_draw[i] = rng.open01();
    });

    std::vector<double> sorted_entropy = entropy;
    std::sort(sorted_entropy.begin(), sorted_entropy.end());
    const double median = n == 0 ? 0.0
                          : n % 2 ? sorted_entropy[n / 2]
                                  : 0.5 * (sorted_entropy[n / 2 - 1] + sorted_entropy[n / 2]);

    std::vector<Sample> out(n);
    detail::parallel_for(n, [&](std::size_t i) {
        const std::size_t head = dists[i].probs.size();
        Sample & s = out[i];
        s.id = "synth-" + std::to_string(i);
        s.question = "synthetic question " + std::to_string(i);
        std::size_t top = 0;
        for (std::size_t j = 0; j < probs[i].size(); ++j) {
            GenerationRecord g;
            g.text = j < head ? "opt" + std::to_string(j) : "tail" + std::to_string(j - head);
            g.token_logprobs = {std::log(probs[i][j])};
            if (probs[i][j] > probs[i][top]) top = j;
            s.generations.push_back(std::move(g));
        }
        const bool low_entropy = entropy[i] <= median;
        const double p_correct = low_entropy ? options.correct_bias : 1.0 - options.correct_bias;
        s.references = {plant_draw[i] < p_correct ? s.generations[top].text : std::string("unanswered")};
        Rng(derive_seed(options.seed ^ 0x5417f1e5ULL, i)).shuffle(s.generations);
    });
    return out;
}

BoundCheckResult bound_check(std::size_t count, std::uint64_t seed, SupportRange support) {
    check_support(support);
    constexpr DistFamily families[] = {DistFamily::dirichlet, DistFamily::zipf, DistFamily::spiked};
    std::vector<double> violation(count, 0.0), gap(count, 0.0);
    std::vector<std::size_t> checks(count, 0);
    detail::parallel_for(count, [&](std::size_t d) {
        const CategoricalDist dist = draw(families[d % 3], support, derive_seed(seed, d));
        const double h = exact_entropy(dist);
        const SortedProbView view = view_from_probs(dist.probs);
        for (std::size_t k = 1; k <= view.size(); ++k) {
            const double pro = pro_score(view, k).value;
            violation[d] = std::max(violation[d], pro - h);
            if (k == view.size()) gap[d] = std::abs(pro - h);
            ++checks[d];
        }
    });
    BoundCheckResult r;
    r.distributions = count;
    for (std::size_t d = 0; d < count; ++d) {
        r.checks += checks[d];
        r.max_violation = std::max(r.max_violation, violation[d]);
        r.max_full_support_gap = std::max(r.max_full_support_gap, gap[d]);
    }
    return r;
}

} // namespace prouq
