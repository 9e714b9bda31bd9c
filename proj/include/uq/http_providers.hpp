#pragma once

#include <memory>
#include <string>
#include <vector>

#include "uq/providers.hpp"

// HTTP clients for the chat-completions / embeddings JSON conventions plus a
// three-logit NLI endpoint. Request and response field names are documented
// in the repo README and are the wire contract for any backend.
//
//   POST <base_url>/chat/completions
//     {"model", "messages": [{"role": "user", "content"}],
//      "temperature", "top_p", "logprobs", ["top_k"], ["seed"]}
//     -> {"choices": [{"message": {"content"},
//          "logprobs": {"content": [{"token", "logprob"}, ...]}}],
//         "usage": {"prompt_tokens", "completion_tokens"}}
//
//   POST <base_url>/embeddings
//     {"model", "input": [text, ...]}
//     -> {"data": [{"index", "embedding": [...]}, ...]}
//
//   POST <base_url>/nli
//     {"model", "premise", "hypothesis"}
//     -> {"logit_entail", "logit_neutral", "logit_contradict"}
//
// Retries: exponential backoff with jitter, capped by max_retries; generation
// requests with a fixed seed are assumed idempotent.

namespace uq {

class HttpChatProvider : public ChatProvider {
public:
    explicit HttpChatProvider(ProviderConfig config);
    std::string model_id() const override;

protected:
    ResponseSample generate_impl(const std::string& prompt, const SamplingParams& params,
                                 bool want_logprobs) override;

private:
    ProviderConfig config_;
    std::shared_ptr<ParallelLimiter> limiter_;
};

class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(ProviderConfig config);

protected:
    std::vector<EmbeddingVector> embed_impl(const std::vector<std::string>& texts) override;

private:
    ProviderConfig config_;
    std::shared_ptr<ParallelLimiter> limiter_;
};

class HttpNliProvider : public NliProvider {
public:
    explicit HttpNliProvider(ProviderConfig config);

protected:
    NliJudgment judge_impl(const std::string& premise, const std::string& hypothesis) override;

private:
    ProviderConfig config_;
    std::shared_ptr<ParallelLimiter> limiter_;
};

}  // namespace uq
