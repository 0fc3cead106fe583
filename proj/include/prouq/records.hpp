#pragma once

// Core data model and the JSONL interchange format.
//
// One dataset line holds one Sample:
//   {"id": str, "question": str, "references": [str,...],
//    "generations": [{"text": str, "token_logprobs": [float,...]}, ...]}
// Unknown fields are ignored. All logs are natural logs.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace prouq {

// Sequence probabilities below this are clamped so that logs stay finite.
inline constexpr double kMinSequenceProb = 1e-300;

struct GenerationRecord {
    std::string text;
    std::vector<double> token_logprobs;
    std::optional<long long> rank_hint;

    // Text is empty after trimming. Such records still count for probability
    // math but are never used as the answer to label.
    bool degenerate() const;

    bool operator==(const GenerationRecord &) const = default;
};

struct Sample {
    std::string id;
    std::string question;
    std::vector<std::string> references;
    std::vector<GenerationRecord> generations;

    bool operator==(const Sample &) const = default;
};

// Generation probabilities sorted non-increasing; ties keep original order.
struct SortedProbView {
    std::vector<double> probs;
    std::vector<std::size_t> origin_index;

    std::size_t size() const noexcept { return probs.size(); }
    bool empty() const noexcept { return probs.empty(); }
};

// Throws ValidationError naming the sample id on any invariant violation.
void validate(const Sample & sample);

SortedProbView sorted_view(const Sample & sample);

// Builds a view straight from probabilities (each in (0,1]); used for exact
// distributions and tests.
SortedProbView view_from_probs(std::vector<double> probs);

// Collapses generations with identical text, keeping the most probable copy.
// First-occurrence order is preserved.
Sample dedup_by_text(const Sample & sample);

struct ReadOptions {
    std::optional<std::size_t> max_samples;
};

std::vector<Sample> parse_dataset(std::istream & in, const ReadOptions & opts = {});
std::vector<Sample> read_dataset(const std::filesystem::path & path, const ReadOptions & opts = {});

std::string to_jsonl_line(const Sample & sample);
void write_dataset(std::ostream & out, const std::vector<Sample> & samples);
void write_dataset(const std::filesystem::path & path, const std::vector<Sample> & samples);

} // namespace prouq
