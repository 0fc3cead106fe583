#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "prouq/records.hpp"

namespace prouq {

inline constexpr double kDefaultRougeThreshold = 0.3;

// Lowercases ASCII and splits on maximal runs of non-alphanumeric bytes.
// Bytes >= 0x80 are kept as word characters so UTF-8 words stay intact.
std::vector<std::string> rouge_tokenize(std::string_view text);

std::size_t lcs_length(const std::vector<std::string> & a, const std::vector<std::string> & b);

// ROUGE-L F1 over rouge_tokenize() tokens; 0 when either side is empty.
double rouge_l_f1(std::string_view candidate, std::string_view reference);

struct CorrectnessLabel {
    std::string sample_id;
    double rouge_l_f1 = 0.0;
    double threshold = kDefaultRougeThreshold;
    bool correct = false;
};

// Labels the most probable non-degenerate generation against the best
// matching reference; correct iff score > threshold. Throws LabelingError
// when no generation has text or no reference has tokens.
CorrectnessLabel label_sample(const Sample & sample, double threshold, const SortedProbView & view);
CorrectnessLabel label_sample(const Sample & sample, double threshold = kDefaultRougeThreshold);

} // namespace prouq
