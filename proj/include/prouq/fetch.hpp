#pragma once

// Pulls sampled answers with per-token logprobs from an OpenAI-compatible
// chat-completions endpoint.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "prouq/records.hpp"

namespace prouq {

inline constexpr const char * kDefaultApiKeyEnv = "OPENAI_API_KEY";

struct FetchConfig {
    std::string base_url;  // e.g. http://localhost:8000/v1
    std::string api_key;   // read from the environment by the caller
    std::string model;
    std::size_t n = 10;
    double temperature = 1.0;
    std::size_t max_tokens = 64;
    std::chrono::milliseconds timeout{60000};
    std::size_t max_attempts = 3;
    std::chrono::milliseconds retry_backoff{500};
    // Issue n single-completion requests instead of one request with n choices.
    bool sequential = false;
    std::size_t parallelism = 4;

    void validate() const;
};

class FetchError : public std::runtime_error {
public:
    FetchError(const std::string & what, std::optional<int> status = {})
        : std::runtime_error(what), status_(status) {}

    std::optional<int> status() const noexcept { return status_; }

private:
    std::optional<int> status_;
};

struct Question {
    std::string id;
    std::string question;
    std::vector<std::string> references;
};

using WarningSink = std::function<void(const std::string &)>;

std::string build_request_body(const std::string & question, const FetchConfig & config, std::size_t n);

// Maps `choices[*].message.content` and `choices[*].logprobs.content[*].logprob`
// to generation records. Throws FetchError when logprobs are missing.
std::vector<GenerationRecord> parse_completion_response(const std::string & body);

Sample fetch_sample(const Question & question, const FetchConfig & config, const WarningSink & warn = {});

// Bounded-concurrency fetch; output order follows `questions`.
std::vector<Sample> fetch_all(const std::vector<Question> & questions, const FetchConfig & config,
                              const WarningSink & warn = {});

// JSONL lines of {"id", "question", "references"}.
std::vector<Question> read_questions(const std::filesystem::path & path);

} // namespace prouq
