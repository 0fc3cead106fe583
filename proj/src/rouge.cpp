#include "prouq/rouge.hpp"

#include <algorithm>

#include "prouq/error.hpp"

namespace prouq {

namespace {

bool word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

char lower(unsigned char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

} // namespace

std::vector<std::string> rouge_tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (word_byte(c)) {
            cur.push_back(lower(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) {
        tokens.push_back(std::move(cur));
    }
    return tokens;
}

std::size_t lcs_length(const std::vector<std::string> & a, const std::vector<std::string> & b) {
    // Two-row DP over b.
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double rouge_l_f1(std::string_view candidate, std::string_view reference) {
    const auto cand = rouge_tokenize(candidate);
    const auto ref = rouge_tokenize(reference);
    if (cand.empty() || ref.empty()) {
        return 0.0;
    }
    const auto lcs = lcs_length(cand, ref);
    if (lcs == 0) {
        return 0.0;
    }
    // 2PR / (P + R) with P = L/|cand| and R = L/|ref|, in a form with a single rounding.
    return 2.0 * static_cast<double>(lcs) / static_cast<double>(cand.size() + ref.size());
}

CorrectnessLabel label_sample(const Sample & sample, double threshold, const SortedProbView & view) {
    const GenerationRecord * top = nullptr;
    for (std::size_t idx : view.origin_index) {
        const auto & g = sample.generations.at(idx);
        if (!g.degenerate()) {
            top = &g;
            break;
        }
    }
    if (top == nullptr) {
        throw LabelingError("sample '" + sample.id + "': every generation is empty");
    }
    const bool any_ref = std::any_of(sample.references.begin(), sample.references.end(),
                                     [](const std::string & r) { return !rouge_tokenize(r).empty(); });
    if (!any_ref) {
        throw LabelingError("sample '" + sample.id + "': references have no scorable tokens");
    }

    CorrectnessLabel label;
    label.sample_id = sample.id;
    label.threshold = threshold;
    for (const auto & ref : sample.references) {
        label.rouge_l_f1 = std::max(label.rouge_l_f1, rouge_l_f1(top->text, ref));
    }
    label.correct = label.rouge_l_f1 > threshold;
    return label;
}

CorrectnessLabel label_sample(const Sample & sample, double threshold) {
    return label_sample(sample, threshold, sorted_view(sample));
}

} // namespace prouq
