#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "uq/core.hpp"

// Uncertainty metrics requiring token log-probabilities: token-level entropy,
// Brier-style confidence error, and per-category breakdowns. The Brier
// operation scores distance-from-full-confidence of the generated tokens; it
// is not a multi-class Brier against gold labels (gold-label comparison lives
// in the advisor). All entropies use natural log.

namespace uq {

struct AnswerExtraction {
    enum class Mode { FirstToken, FullTextNormalized };
    Mode mode = Mode::FirstToken;
    bool normalize = true;  // lowercase + trim + strip punctuation
};

// Extracted answer string for one sample (does not need logprobs in
// FullTextNormalized mode).
std::string extract_answer_text(const ResponseSample& sample, const AnswerExtraction& extraction);

// Extracted answer with its generation probability p = exp(logprob); requires
// tokens. FullTextNormalized demands a single-token response; multi-token
// verbose answers are out of contract and raise ExtractionError.
std::pair<std::string, double> extract_answer(const ResponseSample& sample,
                                              const AnswerExtraction& extraction);

// Shannon entropy of the probability-weighted answer distribution: sums
// p_j = exp(logprob_j) by unique answer string into S_i, normalizes
// P_i = S_i / sum_k S_k, returns -sum_i P_i ln P_i. Diagnostics carry the
// support map as "support.<token>" -> P_i.
MetricScore token_level_entropy(const SampleSet& set, const AnswerExtraction& extraction);

// Mean over responses of the per-response mean of (1 - p_{s,t})^2 over its
// tokens; per_sample carries the response-level scores.
MetricScore brier_uncertainty(const SampleSet& set);

// Groups per-set metric values by gold label.
std::map<std::string, std::vector<double>> per_category_breakdown(
    const std::vector<std::pair<SampleSet, std::string>>& labeled_sets,
    const std::string& metric_id, const AnswerExtraction& extraction = {});

}  // namespace uq
