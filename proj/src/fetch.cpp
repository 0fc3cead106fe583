#include "prouq/fetch.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "prouq/error.hpp"

namespace prouq {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

struct Endpoint {
    std::string scheme_host_port;
    std::string path;  // ends with /chat/completions
};

Endpoint split_url(const std::string & base_url) {
    const auto scheme = base_url.find("://");
    if (scheme == std::string::npos) {
        throw ConfigError("base URL must start with http:// or https://, got '" + base_url + "'");
    }
    const auto slash = base_url.find('/', scheme + 3);
    Endpoint ep;
    ep.scheme_host_port = base_url.substr(0, slash);
    std::string prefix = slash == std::string::npos ? "" : base_url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    ep.path = prefix + "/chat/completions";
    return ep;
}

bool retryable(int status) {
    return status == 408 || status == 429 || status >= 500;
}

// POSTs one request, retrying transport failures and retryable statuses.
std::string post_with_retry(const FetchConfig & config, const std::string & body) {
    const Endpoint ep = split_url(config.base_url);
    httplib::Client client(ep.scheme_host_port);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!config.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config.api_key);
    }

    std::string last_error;
    std::optional<int> last_status;
    for (std::size_t attempt = 1; attempt <= config.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(config.retry_backoff * static_cast<long>(attempt - 1));
        }
        auto res = client.Post(ep.path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            last_status.reset();
            continue;
        }
        if (res->status == 200) {
            return res->body;
        }
        last_status = res->status;
        last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
        if (!retryable(res->status)) {
            break;
        }
    }
    throw FetchError("request to " + ep.scheme_host_port + ep.path + " failed after retries: " + last_error,
                     last_status);
}

} // namespace

void FetchConfig::validate() const {
    if (n < 1) throw ConfigError("n must be >= 1");
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (model.empty()) throw ConfigError("model is required");
    split_url(base_url);
}

std::string build_request_body(const std::string & question, const FetchConfig & config, std::size_t n) {
    ordered_json j;
    j["model"] = config.model;
    j["messages"] = ordered_json::array({{{"role", "user"}, {"content", question}}});
    j["n"] = n;
    j["temperature"] = config.temperature;
    j["logprobs"] = true;
    j["top_logprobs"] = 1;
    j["max_tokens"] = config.max_tokens;
    return j.dump();
}

std::vector<GenerationRecord> parse_completion_response(const std::string & body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception & e) {
        throw FetchError(std::string("malformed response body: ") + e.what());
    }
    if (!j.contains("choices") || !j["choices"].is_array()) {
        throw FetchError("response has no choices array");
    }
    std::vector<GenerationRecord> out;
    for (const auto & choice : j["choices"]) {
        const auto lp = choice.find("logprobs");
        if (lp == choice.end() || !lp->is_object() || !lp->contains("content") || !(*lp)["content"].is_array()) {
            throw FetchError("endpoint does not return logprobs");
        }
        GenerationRecord rec;
        if (auto msg = choice.find("message"); msg != choice.end() && msg->is_object()) {
            if (auto content = msg->find("content"); content != msg->end() && content->is_string()) {
                rec.text = content->get<std::string>();
            }
        }
        for (const auto & tok : (*lp)["content"]) {
            if (!tok.contains("logprob") || !tok["logprob"].is_number()) {
                throw FetchError("endpoint does not return logprobs");
            }
            double v = tok["logprob"].get<double>();
            // Some servers round certain tokens to a hair above zero.
            if (v > 0.0 && v <= 1e-6) v = 0.0;
            rec.token_logprobs.push_back(v);
        }
        if (rec.token_logprobs.empty()) {
            throw FetchError("choice " + std::to_string(out.size()) + " returned no tokens");
        }
        if (auto idx = choice.find("index"); idx != choice.end() && idx->is_number_integer()) {
            rec.rank_hint = idx->get<long long>();
        }
        out.push_back(std::move(rec));
    }
    return out;
}

Sample fetch_sample(const Question & question, const FetchConfig & config, const WarningSink & warn) {
    config.validate();
    Sample s;
    s.id = question.id;
    s.question = question.question;
    s.references = question.references;
    if (config.sequential) {
        for (std::size_t i = 0; i < config.n; ++i) {
            auto gens = parse_completion_response(post_with_retry(config, build_request_body(question.question, config, 1)));
            for (auto & g : gens) s.generations.push_back(std::move(g));
        }
    } else {
        s.generations = parse_completion_response(post_with_retry(config, build_request_body(question.question, config, config.n)));
    }
    if (s.generations.empty()) {
        throw FetchError("question '" + question.id + "': endpoint returned no choices");
    }
    if (s.generations.size() < config.n && warn) {
        warn("question '" + question.id + "': requested " + std::to_string(config.n) + " completions, got " +
             std::to_string(s.generations.size()));
    }
    try {
        validate(s);
    } catch (const ValidationError & e) {
        throw FetchError(std::string("invalid response: ") + e.what());
    }
    return s;
}

std::vector<Sample> fetch_all(const std::vector<Question> & questions, const FetchConfig & config,
                              const WarningSink & warn) {
    config.validate();
    std::vector<Sample> out(questions.size());
    std::vector<std::exception_ptr> errors(questions.size());
    std::atomic<std::size_t> next{0};
    std::mutex warn_mu;
    const WarningSink locked_warn = [&](const std::string & msg) {
        if (!warn) return;
        std::lock_guard lock(warn_mu);
        warn(msg);
    };
    {
        std::vector<std::jthread> workers;
        const std::size_t threads = std::min(config.parallelism, std::max<std::size_t>(questions.size(), 1));
        for (std::size_t t = 0; t < threads; ++t) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < questions.size(); i = next++) {
                    try {
                        out[i] = fetch_sample(questions[i], config, locked_warn);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (auto & e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

std::vector<Question> read_questions(const std::filesystem::path & path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<Question> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            Question q;
            q.id = j.at("id").get<std::string>();
            q.question = j.at("question").get<std::string>();
            q.references = j.at("references").get<std::vector<std::string>>();
            if (q.references.empty()) throw ValidationError("question '" + q.id + "' has no references");
            out.push_back(std::move(q));
        } catch (const json::exception & e) {
            throw ParseError(lineno, e.what());
        }
    }
    return out;
}

} // namespace prouq
