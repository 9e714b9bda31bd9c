#include "uq/providers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "uq/rng.hpp"

namespace uq {

EmbeddingVector EmbeddingVector::normalized(std::vector<double> raw, std::string source_text) {
    double sq = 0.0;
    for (double v : raw) {
        if (!std::isfinite(v)) throw InvalidInputError("non-finite embedding component");
        sq += v * v;
    }
    const double n = std::sqrt(sq);
    if (n == 0.0) throw InvalidInputError("zero-norm embedding for text: " + source_text);
    for (double& v : raw) v /= n;
    return EmbeddingVector{std::move(raw), std::move(source_text)};
}

double EmbeddingVector::norm() const {
    double sq = 0.0;
    for (double v : values) sq += v * v;
    return std::sqrt(sq);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.values.size() != b.values.size())
        throw InvalidInputError("embedding dimension mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
    return dot;
}

std::string to_string(NliLabel l) {
    switch (l) {
        case NliLabel::Entailment: return "entailment";
        case NliLabel::Neutral: return "neutral";
        case NliLabel::Contradiction: return "contradiction";
    }
    return "?";
}

NliJudgment NliJudgment::from_logits(double l_e, double l_n, double l_c) {
    NliJudgment j;
    j.logit_entail = l_e;
    j.logit_neutral = l_n;
    j.logit_contradict = l_c;
    if (l_e >= l_n && l_e >= l_c)
        j.label = NliLabel::Entailment;
    else if (l_n >= l_c)
        j.label = NliLabel::Neutral;
    else
        j.label = NliLabel::Contradiction;
    return j;
}

double NliJudgment::entail_probability() const {
    // Stable two-logit softmax.
    const double m = std::max(logit_entail, logit_contradict);
    const double e = std::exp(logit_entail - m);
    const double c = std::exp(logit_contradict - m);
    return e / (e + c);
}

void ProviderConfig::validate() const {
    if (parallelism_limit < 1) throw InvalidConfigError("parallelism_limit must be >= 1");
    if (max_retries < 0) throw InvalidConfigError("max_retries must be >= 0");
    if (timeout_ms <= 0) throw InvalidConfigError("timeout must be positive");
}

ParallelLimiter::ParallelLimiter(int limit) : limit_(limit) {
    if (limit < 1) throw InvalidConfigError("parallelism limit must be >= 1");
}

void ParallelLimiter::acquire() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [this] { return in_flight_ < limit_; });
    ++in_flight_;
}

void ParallelLimiter::release() {
    {
        std::lock_guard<std::mutex> lock(mu_);
        --in_flight_;
    }
    cv_.notify_one();
}

ResponseSample ChatProvider::chat_generate(const std::string& prompt,
                                           const SamplingParams& params, bool want_logprobs) {
    if (prompt.empty()) throw InvalidInputError("prompt must be non-empty");
    params.validate();
    ResponseSample s = generate_impl(prompt, params, want_logprobs);
    s.sampling_params = params;
    s.model_id = model_id();
    if (want_logprobs && !s.tokens) s.diagnostics["logprobs_unavailable"] = 1.0;
    return s;
}

std::vector<EmbeddingVector> EmbeddingProvider::embed_batch(
    const std::vector<std::string>& texts) {
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (texts[i].empty())
            throw InvalidInputError("empty text at batch index " + std::to_string(i));
    }
    auto out = embed_impl(texts);
    if (out.size() != texts.size())
        throw ProviderError("embedding batch size mismatch: got " + std::to_string(out.size()) +
                            " for " + std::to_string(texts.size()) + " inputs");
    // Re-normalize on ingestion regardless of provider behavior.
    for (auto& v : out) v = EmbeddingVector::normalized(std::move(v.values), v.source_text);
    return out;
}

NliJudgment NliProvider::nli_judge(const std::string& premise, const std::string& hypothesis) {
    if (premise.empty() || hypothesis.empty())
        throw InvalidInputError("NLI premise and hypothesis must be non-empty");
    NliJudgment j = judge_impl(premise, hypothesis);
    // Enforce the label/logit consistency contract regardless of backend.
    return NliJudgment::from_logits(j.logit_entail, j.logit_neutral, j.logit_contradict);
}

// ---------------------------------------------------------------------------
// Stubs

namespace {

std::string trimmed(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

StubChatProvider::StubChatProvider(std::map<std::string, StubResponse> table, std::string model)
    : table_(std::move(table)), model_(std::move(model)) {}

ResponseSample StubChatProvider::generate_impl(const std::string& prompt,
                                               const SamplingParams& params, bool want_logprobs) {
    (void)params;
    calls_.fetch_add(1);
    if (fail_prompts_.count(prompt))
        throw ProviderUnreachableError("stub configured to fail for prompt: " + prompt);
    ResponseSample s;
    auto it = table_.find(prompt);
    if (it != table_.end()) {
        s.text = it->second.text;
        if (want_logprobs && !it->second.tokens.empty()) {
            std::vector<TokenDraw> toks;
            int pos = 0;
            for (const auto& [tok, lp] : it->second.tokens) toks.emplace_back(tok, lp, pos++);
            s.tokens = std::move(toks);
        }
    } else {
        // Deterministic fallback: text derived from the prompt hash.
        char buf[32];
        std::snprintf(buf, sizeof buf, "resp-%016llx",
                      static_cast<unsigned long long>(fnv1a(prompt)));
        s.text = buf;
        if (want_logprobs) {
            s.tokens = std::vector<TokenDraw>{TokenDraw(s.text, std::log(0.9), 0)};
        }
    }
    s.diagnostics["usage.prompt_tokens"] = static_cast<double>(
        1 + std::count(prompt.begin(), prompt.end(), ' '));
    s.diagnostics["usage.completion_tokens"] = static_cast<double>(
        1 + std::count(s.text.begin(), s.text.end(), ' '));
    s.diagnostics["latency_ms"] = 0.0;
    return s;
}

StubEmbeddingProvider::StubEmbeddingProvider(std::map<std::string, std::vector<double>> table,
                                             int dimension)
    : table_(std::move(table)), dimension_(dimension) {
    if (dimension_ < 1) throw InvalidConfigError("embedding dimension must be >= 1");
}

std::vector<EmbeddingVector> StubEmbeddingProvider::embed_impl(
    const std::vector<std::string>& texts) {
    calls_.fetch_add(1);
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        auto it = table_.find(t);
        if (it != table_.end()) {
            out.push_back(EmbeddingVector::normalized(it->second, t));
            continue;
        }
        // Pseudo-random but text-deterministic unit vector.
        std::vector<double> v(static_cast<std::size_t>(dimension_));
        std::uint64_t h = fnv1a(t);
        for (auto& x : v) {
            h = mix64(h);
            x = static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
        }
        out.push_back(EmbeddingVector::normalized(std::move(v), t));
    }
    return out;
}

StubNliProvider::StubNliProvider(std::map<std::pair<std::string, std::string>, NliJudgment> table,
                                 DefaultRule fallback)
    : table_(std::move(table)), fallback_(fallback) {}

NliJudgment StubNliProvider::judge_impl(const std::string& premise,
                                        const std::string& hypothesis) {
    calls_.fetch_add(1);
    auto it = table_.find({premise, hypothesis});
    if (it != table_.end()) return it->second;
    if (trimmed(premise) == trimmed(hypothesis)) return NliJudgment::from_logits(3.0, 0.0, -3.0);
    switch (fallback_) {
        case DefaultRule::Entailment: return NliJudgment::from_logits(3.0, 0.0, -3.0);
        case DefaultRule::Neutral: return NliJudgment::from_logits(0.0, 2.0, 0.0);
        case DefaultRule::Contradiction: break;
    }
    return NliJudgment::from_logits(-3.0, 0.0, 3.0);
}

}  // namespace uq
