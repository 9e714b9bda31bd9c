#pragma once

#include <atomic>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uq/core.hpp"
#include "uq/errors.hpp"

// Abstract interfaces for the three external model services (chat
// completion, text embedding, NLI), plus deterministic stub implementations
// used as test oracles. Stubs are pure: same input -> same output, across
// runs and platforms.

namespace uq {

struct EmbeddingVector {
    std::vector<double> values;
    std::string source_text;

    // Normalizes to unit L2 norm on ingestion regardless of provider behavior.
    static EmbeddingVector normalized(std::vector<double> raw, std::string source_text);
    double norm() const;
};

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

enum class NliLabel { Entailment, Neutral, Contradiction };

std::string to_string(NliLabel l);

struct NliJudgment {
    double logit_entail = 0.0;
    double logit_neutral = 0.0;
    double logit_contradict = 0.0;
    NliLabel label = NliLabel::Neutral;

    // label = argmax of the three logits (ties resolved entail > neutral > contradict).
    static NliJudgment from_logits(double l_e, double l_n, double l_c);

    // P(entail) = e^{l_e} / (e^{l_e} + e^{l_c}), using only the entailment and
    // contradiction logits.
    double entail_probability() const;
};

struct ProviderConfig {
    std::string base_url;
    std::optional<std::string> api_key;
    std::string model_name;
    int timeout_ms = 30000;
    int max_retries = 3;
    int parallelism_limit = 4;
    int initial_backoff_ms = 200;

    void validate() const;
};

// Bounds in-flight requests per provider; shared by all workers.
class ParallelLimiter {
public:
    explicit ParallelLimiter(int limit);
    void acquire();
    void release();

    class Guard {
    public:
        explicit Guard(ParallelLimiter& l) : limiter_(l) { limiter_.acquire(); }
        ~Guard() { limiter_.release(); }
        Guard(const Guard&) = delete;
        Guard& operator=(const Guard&) = delete;

    private:
        ParallelLimiter& limiter_;
    };

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int limit_;
    int in_flight_ = 0;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;

    // Returns a sample with text (and tokens iff want_logprobs and the backend
    // supplies them; otherwise diagnostics["logprobs_unavailable"] = 1).
    // Provenance fields (sample_id, task_id, variant, repeat) are filled by the
    // caller.
    ResponseSample chat_generate(const std::string& prompt, const SamplingParams& params,
                                 bool want_logprobs);

    virtual std::string model_id() const = 0;

protected:
    virtual ResponseSample generate_impl(const std::string& prompt, const SamplingParams& params,
                                         bool want_logprobs) = 0;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    // Output order matches input order; every vector is L2-normalized.
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts);

protected:
    virtual std::vector<EmbeddingVector> embed_impl(const std::vector<std::string>& texts) = 0;
};

class NliProvider {
public:
    virtual ~NliProvider() = default;

    NliJudgment nli_judge(const std::string& premise, const std::string& hypothesis);

protected:
    virtual NliJudgment judge_impl(const std::string& premise, const std::string& hypothesis) = 0;
};

// ---------------------------------------------------------------------------
// Deterministic stubs

struct StubResponse {
    std::string text;
    // (token_text, logprob) pairs; empty means "no logprobs available".
    std::vector<std::pair<std::string, double>> tokens;
};

class StubChatProvider : public ChatProvider {
public:
    explicit StubChatProvider(std::map<std::string, StubResponse> table = {},
                              std::string model = "stub-chat");

    // Prompts listed here fail with ProviderUnreachableError (tests only).
    void fail_on(const std::string& prompt) { fail_prompts_.insert(prompt); }

    std::string model_id() const override { return model_; }
    int calls() const { return calls_.load(); }

protected:
    ResponseSample generate_impl(const std::string& prompt, const SamplingParams& params,
                                 bool want_logprobs) override;

private:
    std::map<std::string, StubResponse> table_;
    std::set<std::string> fail_prompts_;
    std::string model_;
    std::atomic<int> calls_{0};
};

class StubEmbeddingProvider : public EmbeddingProvider {
public:
    explicit StubEmbeddingProvider(std::map<std::string, std::vector<double>> table = {},
                                   int dimension = 8);

    int calls() const { return calls_.load(); }

protected:
    std::vector<EmbeddingVector> embed_impl(const std::vector<std::string>& texts) override;

private:
    std::map<std::string, std::vector<double>> table_;
    int dimension_;
    std::atomic<int> calls_{0};
};

class StubNliProvider : public NliProvider {
public:
    enum class DefaultRule { Contradiction, Neutral, Entailment };

    explicit StubNliProvider(
        std::map<std::pair<std::string, std::string>, NliJudgment> table = {},
        DefaultRule fallback = DefaultRule::Contradiction);

    int calls() const { return calls_.load(); }

protected:
    // Identical (trimmed) texts entail each other; otherwise table lookup,
    // then the fallback rule.
    NliJudgment judge_impl(const std::string& premise, const std::string& hypothesis) override;

private:
    std::map<std::pair<std::string, std::string>, NliJudgment> table_;
    DefaultRule fallback_;
    std::atomic<int> calls_{0};
};

}  // namespace uq
