#include "prouq/likelihood.hpp"

#include <algorithm>
#include <cmath>

namespace prouq {

double total_logprob(std::span<const double> token_logprobs) {
    long double sum = 0.0L;
    for (double lp : token_logprobs) {
        sum += lp;
    }
    return static_cast<double>(sum);
}

double probability_from_logprob(double logprob) {
    return std::clamp(std::exp(logprob), kMinSequenceProb, 1.0);
}

SequenceLikelihood sequence_nll(const GenerationRecord & record) {
    const double lp = total_logprob(record.token_logprobs);
    SequenceLikelihood out;
    // -0.0 for an all-zero sequence would print as "-0".
    out.nll = lp == 0.0 ? 0.0 : -lp;
    out.prob = probability_from_logprob(lp);
    out.length = record.token_logprobs.size();
    return out;
}

double avg_token_logprob(const GenerationRecord & record) {
    if (record.token_logprobs.empty()) {
        return 0.0;
    }
    return total_logprob(record.token_logprobs) / static_cast<double>(record.token_logprobs.size());
}

} // namespace prouq
