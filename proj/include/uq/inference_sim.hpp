#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "uq/core.hpp"
#include "uq/providers.hpp"

// Deterministic mock LLM: softmax, temperature, top-k, top-p and seeded
// sampling over a toy vocabulary. Serves both as a pedagogical simulator of
// the inference math and as the oracle feeding deterministic SampleSets to
// sampler/metric tests. Pipelines always compose as
// temperature -> top-k -> top-p -> sample.

namespace uq::sim {

struct LogitVector {
    std::vector<double> logits;
    std::vector<std::string> vocab;

    void validate() const;
};

struct NextTokenDistribution {
    std::vector<double> probs;
    std::vector<std::string> vocab;

    void validate() const;  // probs sum to 1 within 1e-9, all >= 0
};

// probs_i = e^{z_i} / sum_j e^{z_j}, computed with max-subtraction.
NextTokenDistribution softmax(const LogitVector& lv);

// t > 0: softmax of z/t. t = 0: one-hot on the argmax, ties broken toward the
// lowest index.
NextTokenDistribution softmax_with_temperature(const LogitVector& lv, double t);

// Keeps the k highest-probability tokens (ties by lowest index), renormalizes.
NextTokenDistribution apply_top_k(const NextTokenDistribution& dist, int k);

// Keeps the smallest descending-probability prefix with cumulative mass >= p
// (inclusive boundary, always >= 1 token), renormalizes.
NextTokenDistribution apply_top_p(const NextTokenDistribution& dist, double p);

// Inverse-CDF draw against the seeded generator; logprob = ln(probs[chosen]).
TokenDraw sample_token(const NextTokenDistribution& dist, std::uint64_t seed);

double shannon_entropy(const NextTokenDistribution& dist);

// Full pipeline for one position: temperature -> top-k -> top-p -> sample.
TokenDraw next_token(const LogitVector& lv, const SamplingParams& params, std::uint64_t seed);

// Table-driven sequence generator exposed as a ChatProvider. The table maps a
// context string to the logits for the next position. Generation starts at
// context = prompt and extends the context as
// prompt + " " + tok_0 + " " + tok_1 + ... until the context has no table
// entry or max_tokens is reached. The response text is the drawn tokens
// joined by single spaces.
class SimulatedModel : public ChatProvider {
public:
    explicit SimulatedModel(std::map<std::string, LogitVector> table, int max_tokens = 64,
                            std::string model = "sim-llm");

    std::string model_id() const override { return model_; }

protected:
    ResponseSample generate_impl(const std::string& prompt, const SamplingParams& params,
                                 bool want_logprobs) override;

private:
    std::map<std::string, LogitVector> table_;
    int max_tokens_;
    std::string model_;
};

// Loads a logit table from JSON: {"context": {"vocab": [...], "logits": [...]}, ...}
std::map<std::string, LogitVector> load_logit_table(const std::string& path);

}  // namespace uq::sim
