// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "oracles.hpp"
#include "prouq/cli.hpp"
#include "prouq/error.hpp"
#include "prouq/estimators.hpp"
#include "prouq/eval.hpp"
#include "prouq/fetch.hpp"
#include "prouq/records.hpp"
#include "prouq/rouge.hpp"
#include "prouq/synth.hpp"

using namespace prouq;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void expect(bool ok, const std::string & what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

std::string fmt(double v, const char * spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

// 1. Appendix examples: adaptive alpha = 0.1 within 0.003, K = 1..3 within 0.005.
Outcome golden_examples() {
    Outcome o;
    const auto samples = read_dataset(PROUQ_TEST_DATA_DIR "/table6.jsonl");
    o.expect(samples.size() == 3, "expected 3 samples");
    std::string values;
    for (std::size_t ex = 0; ex < 3 && ex < samples.size(); ++ex) {
        const auto view = sorted_view(samples[ex]);
        const double adaptive = pro_adaptive(view, 0.1).value;
        values += fmt(adaptive, "%.3f") + " ";
        o.expect(std::abs(adaptive - oracle::kTable6Reported[ex][3]) <= 0.003,
                 "example " + std::to_string(ex + 1) + " adaptive " + fmt(adaptive));
        for (std::size_t k = 1; k <= 3; ++k) {
            const double v = score_sample(samples[ex], view, EstimatorConfig::pro_fixed(k)).value;
            o.expect(std::abs(v - oracle::kTable6Reported[ex][k - 1]) <= 0.005,
                     "example " + std::to_string(ex + 1) + " K=" + std::to_string(k) + " " + fmt(v));
        }
    }
    if (o.pass) o.detail = "PRO(alpha=0.1) = " + values + "and all nine fixed-K values within 0.005";
    return o;
}

// 2. PRO <= entropy + 1e-9 for all K; equality at full support.
Outcome bound_suite() {
    Outcome o;
    const auto r = bound_check(1500, 2024, {2, 20});
    o.expect(r.distributions >= 1000, "too few distributions");
    o.expect(r.max_violation <= 1e-9, "max violation " + fmt(r.max_violation, "%.3e"));
    o.expect(r.max_full_support_gap <= 1e-9, "full-support gap " + fmt(r.max_full_support_gap, "%.3e"));
    if (o.pass) {
        o.detail = std::to_string(r.distributions) + " distributions, " + std::to_string(r.checks) +
                   " (dist, K) checks, max violation " + fmt(r.max_violation, "%.2e") + ", full-support gap " +
                   fmt(r.max_full_support_gap, "%.2e");
    }
    return o;
}

// 3. K = 1 identity, alpha = 0 keeps all, K non-increasing in alpha.
Outcome identity_suite() {
    Outcome o;
    std::mt19937_64 rng(303);
    const auto grid = default_alpha_grid();
    for (int t = 0; t < 1000 && o.pass; ++t) {
        std::vector<double> p(1 + rng() % 20);
        for (auto & x : p) x = std::exp(-std::uniform_real_distribution<double>(0.0, 25.0)(rng));
        const auto view = view_from_probs(p);
        o.expect(pro_score(view, 1).value == nll_score(view).value, "K=1 differs from NLL on view " + std::to_string(t));
        o.expect(select_top_k(view, 0.0) == view.size(), "alpha=0 did not keep all on view " + std::to_string(t));
        std::size_t prev = view.size();
        for (double a : grid) {
            const std::size_t k = select_top_k(view, a);
            o.expect(k <= prev, "K increased with alpha on view " + std::to_string(t));
            prev = k;
        }
    }
    if (o.pass) o.detail = "1000 random views, 20-point alpha grid";
    return o;
}

// 4. AUROC against pair enumeration.
Outcome auroc_suite() {
    Outcome o;
    std::mt19937_64 rng(404);
    double worst = 0.0;
    for (int t = 0; t < 500; ++t) {
        const std::size_t n = 2 + rng() % 49;
        std::vector<double> s(n);
        std::vector<bool> y(n);
        const bool coarse = t % 2 == 0;  // half the instances are tie-heavy
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = coarse ? static_cast<double>(rng() % 5) : std::uniform_real_distribution<double>(0, 1)(rng);
            y[i] = rng() % 2;
        }
        // Force both classes at two distinct positions.
        const std::size_t i = rng() % n;
        y[i] = true;
        y[(i + 1 + rng() % (n - 1)) % n] = false;
        worst = std::max(worst, std::abs(auroc(s, y) - oracle::auroc_pairs(s, y)));
    }
    o.expect(worst <= 1e-12, "max deviation " + fmt(worst, "%.3e"));
    o.expect(auroc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, {true, true, false, false}) == 1.0, "perfect separation");
    o.expect(auroc(std::vector<double>{2, 2, 2, 2, 2}, {true, false, false, true, false}) == 0.5, "all tied");
    if (o.pass) o.detail = "500 instances (n <= 50), max |midrank - pairs| = " + fmt(worst, "%.1e");
    return o;
}

// 5. ROUGE-L against brute-force LCS.
Outcome rouge_suite() {
    Outcome o;
    std::mt19937_64 rng(505);
    const std::vector<std::string> vocab = {"the", "john", "adams", "quincy", "canada", "x"};
    double worst = 0.0;
    for (int t = 0; t < 500; ++t) {
        std::vector<std::string> a(rng() % 10), b(rng() % 10);
        std::string sa, sb;
        for (auto & w : a) sa += (w = vocab[rng() % vocab.size()]) + " ";
        for (auto & w : b) sb += (w = vocab[rng() % vocab.size()]) + ", ";
        const std::size_t l = oracle::lcs_enumerate(a, b);
        double expected = 0.0;
        if (l > 0) {
            const double p = static_cast<double>(l) / static_cast<double>(a.size());
            const double r = static_cast<double>(l) / static_cast<double>(b.size());
            expected = 2.0 * p * r / (p + r);
        }
        worst = std::max(worst, std::abs(rouge_l_f1(sa, sb) - expected));
    }
    o.expect(worst <= 1e-12, "max deviation " + fmt(worst, "%.3e"));
    o.expect(rouge_l_f1("John Quincy Adams", "john quincy adams") == 1.0, "identical strings");
    o.expect(rouge_l_f1("Sienna Miller", "actress Dakota Johnson") == 0.0, "disjoint strings");
    o.expect(std::abs(rouge_l_f1("john adams", "john quincy adams") - 0.8) <= 1e-12, "john adams case");
    if (o.pass) o.detail = "500 random pairs, max deviation " + fmt(worst, "%.1e") + "; identity/disjoint/0.8 cases";
    return o;
}

// 6. Synthetic discrimination: grid-searched pro-adaptive >= 0.9 and >= NLL.
Outcome discrimination() {
    Outcome o;
    const auto validation = gen_dataset({.n_samples = 100, .family = DistFamily::spiked, .correct_bias = 0.95, .seed = 600});
    const auto test = gen_dataset({.n_samples = 2000, .family = DistFamily::spiked, .correct_bias = 0.95, .seed = 601});
    const auto search = grid_search_alpha(validation, default_alpha_grid(), 0.3);
    const auto report = evaluate(test, {EstimatorConfig::pro_adaptive(search.chosen_alpha), EstimatorConfig::nll()}, 0.3);
    o.expect(report.rows.size() == 2 && report.rows[0].auroc && report.rows[1].auroc, "AUROC undefined");
    if (!o.pass) return o;
    const double pro = *report.rows[0].auroc;
    const double nll = *report.rows[1].auroc;
    o.expect(pro >= 0.9, "pro-adaptive AUROC " + fmt(pro, "%.4f") + " < 0.9");
    o.expect(pro >= nll, "pro-adaptive " + fmt(pro, "%.4f") + " < NLL " + fmt(nll, "%.4f"));
    if (o.pass) {
        o.detail = "alpha = " + fmt(search.chosen_alpha, "%.2f") + ", pro-adaptive AUROC " + fmt(pro, "%.4f") +
                   " vs NLL " + fmt(nll, "%.4f");
    }
    return o;
}

// 7. Threshold sweep: deterministic and monotone labeling.
Outcome threshold_sweep() {
    Outcome o;
    const auto data = gen_dataset({.n_samples = 2000, .family = DistFamily::spiked, .correct_bias = 0.95, .seed = 700});
    const std::vector<double> thresholds = {0.1, 0.2, 0.3, 0.4, 0.5};
    const std::vector<EstimatorConfig> est = {EstimatorConfig::pro_adaptive(0.4), EstimatorConfig::nll(),
                                              EstimatorConfig::pe_plugin()};
    std::ostringstream a, b;
    const auto report = sweep(data, est, thresholds);
    write_report(report, a, ReportFormat::jsonl);
    write_report(sweep(data, est, thresholds), b, ReportFormat::jsonl);
    o.expect(a.str() == b.str(), "sweep output differs between runs");
    o.expect(report.rows.size() == thresholds.size() * est.size(), "row count");
    for (const auto & s : data) {
        bool was_correct = true;
        for (double t : thresholds) {
            const bool c = label_sample(s, t).correct;
            o.expect(was_correct || !c, "label flipped incorrect->correct on " + s.id);
            was_correct = c;
        }
    }
    for (std::size_t i = est.size(); i < report.rows.size(); ++i) {
        o.expect(report.rows[i].n_correct <= report.rows[i - est.size()].n_correct, "n_correct rose with threshold");
    }
    if (o.pass) o.detail = "5 thresholds x 3 estimators, identical reruns, no incorrect->correct flips";
    return o;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("prouq-acceptance-" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string at(const std::string & name) const { return (path / name).string(); }
};

std::string slurp(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// 8. synth -> score -> evaluate twice through the CLI.
Outcome end_to_end() {
    Outcome o;
    TempDir dir;
    std::ostringstream sink;
    // Same flags and file names, separate directories.
    for (const std::string run : {"run1", "run2"}) {
        fs::create_directories(dir.path / run);
        const auto data = dir.at(run + "/data.jsonl");
        int rc = cli::run({"synth", "--n", "500", "--seed", "8", "--family", "spiked", "--output", data}, sink, sink);
        o.expect(rc == 0, "synth exit " + std::to_string(rc));
        rc = cli::run({"score", "--output", dir.at(run + "/scores.jsonl"), data}, sink, sink);
        o.expect(rc == 0, "score exit " + std::to_string(rc));
        rc = cli::run({"evaluate", "--format", "jsonl", "--output", dir.at(run + "/report.jsonl"), data}, sink, sink);
        o.expect(rc == 0, "evaluate exit " + std::to_string(rc));
    }
    o.expect(slurp(dir.at("run1/data.jsonl")) == slurp(dir.at("run2/data.jsonl")), "datasets differ");
    o.expect(slurp(dir.at("run1/scores.jsonl")) == slurp(dir.at("run2/scores.jsonl")), "scores differ");
    const auto report = slurp(dir.at("run1/report.jsonl"));
    o.expect(!report.empty() && report == slurp(dir.at("run2/report.jsonl")), "reports differ");
    if (o.pass) o.detail = "dataset, scores and report byte-identical (" + std::to_string(report.size()) + " report bytes)";
    return o;
}

// 9. Fetch client against a local mock endpoint.
Outcome fetch_mock() {
    Outcome o;
    using json = nlohmann::json;
    httplib::Server server;
    std::atomic<int> flaky_calls{0};
    auto choice = [](const std::string & text, double lp, bool with_logprobs) {
        json c = {{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}};
        if (with_logprobs) c["logprobs"] = {{"content", {{{"token", text}, {"logprob", lp}}}}};
        return c;
    };
    server.Post("/ok/chat/completions", [&](const httplib::Request &, httplib::Response & res) {
        res.set_content(json{{"choices", {choice("a", -0.1, true), choice("b", -2.3, true)}}}.dump(), "application/json");
    });
    server.Post("/nolp/chat/completions", [&](const httplib::Request &, httplib::Response & res) {
        res.set_content(json{{"choices", {choice("a", 0, false)}}}.dump(), "application/json");
    });
    server.Post("/down/chat/completions", [&](const httplib::Request &, httplib::Response & res) {
        ++flaky_calls;
        res.status = 500;
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    auto cfg = [&](const std::string & prefix) {
        FetchConfig c;
        c.base_url = "http://127.0.0.1:" + std::to_string(port) + "/" + prefix;
        c.model = "mock";
        c.n = 2;
        c.retry_backoff = std::chrono::milliseconds(1);
        c.timeout = std::chrono::milliseconds(2000);
        return c;
    };
    const Question q{"q", "question?", {"a"}};
    try {
        const auto s = fetch_sample(q, cfg("ok"));
        const auto view = sorted_view(s);
        o.expect(s.generations.size() == 2, "expected N=2");
        o.expect(std::abs(view.probs[0] - std::exp(-0.1)) <= 1e-15 && std::abs(view.probs[1] - std::exp(-2.3)) <= 1e-15,
                 "probabilities not mapped");
    } catch (const std::exception & e) {
        o.expect(false, std::string("ok endpoint: ") + e.what());
    }
    try {
        fetch_sample(q, cfg("nolp"));
        o.expect(false, "missing logprobs not reported");
    } catch (const FetchError & e) {
        o.expect(std::string(e.what()).find("does not return logprobs") != std::string::npos, e.what());
    }
    try {
        fetch_sample(q, cfg("down"));
        o.expect(false, "HTTP 500 not reported");
    } catch (const FetchError & e) {
        o.expect(e.status() == 500 && flaky_calls == 3, "expected 3 attempts ending in 500");
    }
    server.stop();
    thread.join();
    if (o.pass) o.detail = "mapping, missing-logprobs error and 3-attempt retry on HTTP 500";
    return o;
}

} // namespace

int main() {
    struct Criterion {
        const char * name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"1 golden appendix examples", golden_examples},
        {"2 entropy lower-bound suite", bound_suite},
        {"3 identity suite", identity_suite},
        {"4 AUROC vs pair enumeration", auroc_suite},
        {"5 ROUGE-L vs brute-force LCS", rouge_suite},
        {"6 desk-scale discrimination", discrimination},
        {"7 threshold sweep", threshold_sweep},
        {"8 end-to-end determinism", end_to_end},
        {"9 fetch client vs mock endpoint", fetch_mock},
    };
    int failures = 0;
    for (const auto & c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception & e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %-34s %8.1f ms  %s\n", o.pass ? "PASS" : "FAIL", c.name, ms, o.detail.c_str());
        failures += o.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
