#pragma once

#include <cstddef>
#include <span>

#include "prouq/records.hpp"

namespace prouq {

struct SequenceLikelihood {
    double nll = 0.0;   // nats, >= 0
    double prob = 1.0;  // exp(-nll), clamped to kMinSequenceProb
    std::size_t length = 0;
};

// Sum of token logprobs, accumulated in long double.
double total_logprob(std::span<const double> token_logprobs);

// exp(logprob) clamped to [kMinSequenceProb, 1].
double probability_from_logprob(double logprob);

SequenceLikelihood sequence_nll(const GenerationRecord & record);

// Mean per-token logprob (<= 0).
double avg_token_logprob(const GenerationRecord & record);

} // namespace prouq
