#include "prouq/records.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "prouq/error.hpp"
#include "prouq/likelihood.hpp"

namespace prouq {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), is_space);
}

Sample sample_from_json(const json & j) {
    if (!j.is_object()) {
        throw std::invalid_argument("expected a JSON object");
    }
    Sample s;
    s.id = j.at("id").get<std::string>();
    s.question = j.value("question", std::string{});
    s.references = j.at("references").get<std::vector<std::string>>();
    for (const auto & g : j.at("generations")) {
        GenerationRecord rec;
        rec.text = g.at("text").get<std::string>();
        rec.token_logprobs = g.at("token_logprobs").get<std::vector<double>>();
        if (auto it = g.find("rank_hint"); it != g.end() && !it->is_null()) {
            rec.rank_hint = it->get<long long>();
        }
        s.generations.push_back(std::move(rec));
    }
    return s;
}

} // namespace

bool GenerationRecord::degenerate() const {
    return blank(text);
}

void validate(const Sample & sample) {
    const std::string who = "sample '" + sample.id + "': ";
    if (sample.id.empty()) {
        throw ValidationError("sample with empty id");
    }
    if (sample.references.empty()) {
        throw ValidationError(who + "no references");
    }
    if (sample.generations.empty()) {
        throw ValidationError(who + "no generations");
    }
    for (std::size_t g = 0; g < sample.generations.size(); ++g) {
        const auto & lp = sample.generations[g].token_logprobs;
        if (lp.empty()) {
            throw ValidationError(who + "generation " + std::to_string(g) + " has no token logprobs");
        }
        for (std::size_t t = 0; t < lp.size(); ++t) {
            if (!std::isfinite(lp[t]) || lp[t] > 0.0) {
                std::ostringstream msg;
                msg << who << "generation " << g << " token " << t << " has invalid logprob " << lp[t]
                    << " (must be finite and <= 0)";
                throw ValidationError(msg.str());
            }
        }
    }
}

SortedProbView view_from_probs(std::vector<double> probs) {
    for (double p : probs) {
        if (!(p > 0.0 && p <= 1.0)) {
            throw ValidationError("probability " + std::to_string(p) + " outside (0, 1]");
        }
    }
    SortedProbView view;
    view.origin_index.resize(probs.size());
    std::iota(view.origin_index.begin(), view.origin_index.end(), std::size_t{0});
    std::stable_sort(view.origin_index.begin(), view.origin_index.end(),
                     [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
    view.probs.reserve(probs.size());
    for (std::size_t i : view.origin_index) {
        view.probs.push_back(probs[i]);
    }
    return view;
}

SortedProbView sorted_view(const Sample & sample) {
    std::vector<double> probs;
    probs.reserve(sample.generations.size());
    for (const auto & g : sample.generations) {
        probs.push_back(sequence_nll(g).prob);
    }
    return view_from_probs(std::move(probs));
}

Sample dedup_by_text(const Sample & sample) {
    Sample out = sample;
    out.generations.clear();
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<double> best;
    for (const auto & g : sample.generations) {
        const double p = sequence_nll(g).prob;
        auto [it, inserted] = slot.try_emplace(g.text, out.generations.size());
        if (inserted) {
            out.generations.push_back(g);
            best.push_back(p);
        } else if (p > best[it->second]) {
            out.generations[it->second] = g;
            best[it->second] = p;
        }
    }
    return out;
}

std::vector<Sample> parse_dataset(std::istream & in, const ReadOptions & opts) {
    std::vector<Sample> samples;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (opts.max_samples && samples.size() >= *opts.max_samples) {
            break;
        }
        if (blank(line)) {
            continue;
        }
        Sample s;
        try {
            s = sample_from_json(json::parse(line));
        } catch (const json::exception & e) {
            throw ParseError(lineno, e.what());
        } catch (const std::invalid_argument & e) {
            throw ParseError(lineno, e.what());
        }
        try {
            validate(s);
        } catch (const ValidationError & e) {
            throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!seen.insert(s.id).second) {
            throw ValidationError("line " + std::to_string(lineno) + ": duplicate sample id '" + s.id + "'");
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

std::vector<Sample> read_dataset(const std::filesystem::path & path, const ReadOptions & opts) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return parse_dataset(in, opts);
}

std::string to_jsonl_line(const Sample & sample) {
    ordered_json j;
    j["id"] = sample.id;
    j["question"] = sample.question;
    j["references"] = sample.references;
    ordered_json gens = ordered_json::array();
    for (const auto & g : sample.generations) {
        ordered_json jg;
        jg["text"] = g.text;
        jg["token_logprobs"] = g.token_logprobs;
        if (g.rank_hint) {
            jg["rank_hint"] = *g.rank_hint;
        }
        gens.push_back(std::move(jg));
    }
    j["generations"] = std::move(gens);
    return j.dump();
}

void write_dataset(std::ostream & out, const std::vector<Sample> & samples) {
    for (const auto & s : samples) {
        out << to_jsonl_line(s) << '\n';
    }
}

void write_dataset(const std::filesystem::path & path, const std::vector<Sample> & samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    write_dataset(out, samples);
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

} // namespace prouq
