#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "prouq/error.hpp"
#include "prouq/estimators.hpp"

using namespace prouq;

namespace {

SortedProbView table6(std::size_t i) {
    return view_from_probs(oracle::table6_probs()[i]);
}

// Exact categorical distribution with `m` outcomes, from an independent generator.
std::vector<double> random_dist(std::mt19937_64 & rng, std::size_t m) {
    std::gamma_distribution<double> g(0.3 + 2.0 * std::uniform_real_distribution<double>(0, 1)(rng));
    std::vector<double> q(m);
    double sum = 0.0;
    for (auto & x : q) {
        x = std::max(g(rng), 1e-12);
        sum += x;
    }
    for (auto & x : q) x /= sum;
    return q;
}

Sample sample_from_logprobs(std::vector<std::vector<double>> lps) {
    Sample s{"s", "q", {"r"}, {}};
    for (auto & lp : lps) s.generations.push_back({"g" + std::to_string(s.generations.size()), std::move(lp), {}});
    return s;
}

} // namespace

TEST_CASE("select_top_k") {
    CHECK(select_top_k(table6(0), 0.1) == 4);
    CHECK(select_top_k(table6(0), 0.0) == 10);
    // Nothing reaches 0.5, top-1 is still retained.
    const auto ex1 = table6(0);
    CHECK(std::none_of(ex1.probs.begin(), ex1.probs.end(), [](double p) { return p >= 0.5; }));
    CHECK(select_top_k(table6(0), 0.5) == 1);
    // Boundary ties are retained.
    CHECK(select_top_k(view_from_probs({0.5, 0.3, 0.2}), 0.3) == 2);
    CHECK_THROWS_AS(select_top_k(table6(0), -0.1), ConfigError);
    CHECK_THROWS_AS(select_top_k(table6(0), 1.5), ConfigError);
    CHECK_THROWS_AS(select_top_k(SortedProbView{}, 0.1), ConfigError);
}

TEST_CASE("pro_score reproduces the appendix fixed-K and adaptive values") {
    for (std::size_t ex = 0; ex < 3; ++ex) {
        CAPTURE(ex);
        const auto view = table6(ex);
        for (std::size_t k = 1; k <= 3; ++k) {
            CAPTURE(k);
            const auto s = pro_score(view, k);
            CHECK(s.selected_k == k);
            CHECK(std::abs(s.value - oracle::kTable6Reported[ex][k - 1]) <= 0.005);
        }
        CHECK(std::abs(pro_adaptive(view, 0.1).value - oracle::kTable6Reported[ex][3]) <= 0.003);
    }
    CHECK(pro_score(table6(0), 4).value == doctest::Approx(0.404).epsilon(0.001 / 0.404));
    CHECK(pro_score(table6(0), 1).value == doctest::Approx(-std::log(0.455)).epsilon(1e-15));
    CHECK(std::abs(pro_adaptive(table6(1), 0.1).value - 2.142) <= 0.003);
    CHECK(pro_adaptive(table6(1), 0.1).selected_k == 6);
    CHECK(pro_adaptive(table6(2), 0.1).selected_k == 5);
}

TEST_CASE("pro_score rejects K outside [1, N]") {
    CHECK_THROWS_AS(pro_score(table6(0), 0), ConfigError);
    CHECK_THROWS_AS(pro_score(table6(0), 11), ConfigError);
}

TEST_CASE("pro_adaptive special alphas") {
    const auto view = table6(2);
    CHECK(pro_adaptive(view, view.probs[0]).value == nll_score(view).value);
    const auto flat = view_from_probs({0.2, 0.2, 0.2});
    CHECK(pro_adaptive(flat, 0.0).value == doctest::Approx(-std::log(0.2)).epsilon(1e-15));
}

TEST_CASE("plug-in and Monte Carlo predictive entropy") {
    CHECK(pe_plugin(view_from_probs({0.5, 0.5})).value == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(pe_plugin(view_from_probs({1.0})).value == 0.0);
    // Oracle: -sum p ln p over the ten listed probabilities = 1.98977.
    CHECK(pe_plugin(table6(0)).value == doctest::Approx(oracle::entropy_sum(oracle::table6_probs()[0])).epsilon(1e-13));
    CHECK(std::abs(pe_plugin(table6(0)).value - 1.98977) <= 1e-5);

    CHECK(pe_mc(view_from_probs({std::exp(-1.0), std::exp(-1.0)})).value == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pe_mc(view_from_probs({1.0})).value == 0.0);
    CHECK(pe_mc(view_from_probs({std::exp(-1.0), std::exp(-3.0)})).value == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("length-normalized entropy") {
    CHECK(ne_score(sample_from_logprobs({{-1.0, -1.0}})).value == 1.0);
    CHECK(ne_score(sample_from_logprobs({{-0.5}, {-1.5, -1.5}})).value == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(ne_score(sample_from_logprobs({{0.0, 0.0, 0.0}})).value == 0.0);
}

TEST_CASE("average log likelihood of the top-1 generation") {
    {
        const auto s = sample_from_logprobs({{-3.0}, {-0.5, -1.5}});
        CHECK(all_score(sorted_view(s), s).value == doctest::Approx(1.0).epsilon(1e-15));
    }
    {
        const auto s = sample_from_logprobs({{0.0}, {-0.1}});
        CHECK(all_score(sorted_view(s), s).value == 0.0);
    }
    {
        const double half = std::log(0.455) / 2.0;
        const auto s = sample_from_logprobs({{-2.0}, {half, half}});
        CHECK(all_score(sorted_view(s), s).value == doctest::Approx(0.3937).epsilon(1e-4));
    }
}

TEST_CASE("nll_score") {
    CHECK(std::abs(nll_score(view_from_probs({0.455})).value - 0.788) <= 0.001);
    CHECK(nll_score(view_from_probs({1.0})).value == 0.0);
    CHECK(std::abs(nll_score(view_from_probs({0.144, 0.1})).value - 1.938) <= 0.005);
}

TEST_CASE("estimator ids round-trip") {
    for (const char * id : {"pe", "pe-mc", "ne", "all", "nll", "pro-k1", "pro-k10", "pro-a0.4", "pro-a0.05", "pro-a0"}) {
        CHECK(estimator_id(parse_estimator_id(id)) == id);
    }
    CHECK(parse_estimator_id("pro-adaptive") == EstimatorConfig::pro_adaptive(0.4));
    CHECK_THROWS_AS(parse_estimator_id("semantic-entropy"), ConfigError);
    CHECK_THROWS_AS(parse_estimator_id("pro-k0"), ConfigError);
    CHECK_THROWS_AS(parse_estimator_id("pro-kx"), ConfigError);
    CHECK_THROWS_AS(parse_estimator_id("pro-a1.5"), ConfigError);
    CHECK(parse_estimator_list("nll,pe,pro-k2").size() == 3);
    CHECK_THROWS_AS(parse_estimator_list(""), ConfigError);
    CHECK_THROWS_AS(parse_estimator_list("nll, pe"), ConfigError);
}

TEST_CASE("EstimatorConfig validation") {
    CHECK_THROWS_AS((EstimatorConfig{EstimatorKind::pro_fixed_k, {}, {}}.validate()), ConfigError);
    CHECK_THROWS_AS((EstimatorConfig{EstimatorKind::pro_adaptive, {}, {}}.validate()), ConfigError);
    CHECK_THROWS_AS((EstimatorConfig{EstimatorKind::nll, 3, {}}.validate()), ConfigError);
    CHECK_NOTHROW(EstimatorConfig::pro_fixed(2).validate());
}

TEST_CASE("score_sample clamps K above N") {
    const auto s = sample_from_logprobs({{-0.2}, {-1.0}, {-2.0}});
    const auto clamped = score_sample(s, EstimatorConfig::pro_fixed(10));
    CHECK(clamped.selected_k == 3);
    CHECK(clamped.value == pro_score(sorted_view(s), 3).value);
    CHECK(clamped.sample_id == "s");
    CHECK(clamped.estimator == EstimatorConfig::pro_fixed(10));
}

TEST_CASE("property: PRO with K = 1 equals NLL exactly") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> p(1 + rng() % 12);
        for (auto & x : p) x = std::exp(-std::uniform_real_distribution<double>(0, 30)(rng));
        const auto view = view_from_probs(p);
        CHECK(pro_score(view, 1).value == nll_score(view).value);
    }
}

TEST_CASE("property: PRO lower-bounds the entropy of exact distributions") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 500; ++t) {
        const auto q = random_dist(rng, 1 + rng() % 20);
        const double h = oracle::entropy_sum(q);
        const auto view = view_from_probs(q);
        for (std::size_t k = 1; k <= q.size(); ++k) {
            CHECK(pro_score(view, k).value <= h + 1e-9);
        }
        CHECK(std::abs(pro_score(view, q.size()).value - h) <= 1e-9);
    }
}

TEST_CASE("property: every estimator scores a certain answer as 0 and exact inputs non-negatively") {
    const auto certain = sample_from_logprobs({{0.0}});
    for (const auto & c : {EstimatorConfig::pe_plugin(), EstimatorConfig::pe_mc(), EstimatorConfig::ne(),
                           EstimatorConfig::all(), EstimatorConfig::nll(), EstimatorConfig::pro_fixed(1),
                           EstimatorConfig::pro_adaptive(0.4)}) {
        CAPTURE(estimator_id(c));
        const auto s = score_sample(certain, c);
        CHECK(s.value == 0.0);
        CHECK_FALSE(std::signbit(s.value));
    }
    std::mt19937_64 rng(9);
    for (int t = 0; t < 200; ++t) {
        const auto q = random_dist(rng, 1 + rng() % 15);
        std::vector<std::vector<double>> lps;
        for (double p : q) lps.push_back({std::log(p)});
        const auto s = sample_from_logprobs(lps);
        for (const auto & c : {EstimatorConfig::pe_plugin(), EstimatorConfig::pe_mc(), EstimatorConfig::ne(),
                               EstimatorConfig::all(), EstimatorConfig::nll(), EstimatorConfig::pro_fixed(std::min<std::size_t>(3, q.size())),
                               EstimatorConfig::pro_adaptive(0.05)}) {
            CHECK(score_sample(s, c).value >= 0.0);
        }
    }
}

TEST_CASE("property: K is non-increasing in alpha") {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 300; ++t) {
        std::vector<double> p(1 + rng() % 10);
        for (auto & x : p) x = std::uniform_real_distribution<double>(1e-6, 1.0)(rng);
        const auto view = view_from_probs(p);
        std::size_t prev = view.size() + 1;
        for (int i = 0; i <= 20; ++i) {
            const std::size_t k = select_top_k(view, i / 20.0);
            CHECK(k <= prev);
            CHECK(k >= 1);
            prev = k;
        }
    }
}
