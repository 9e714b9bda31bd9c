#include "uq/inference_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "uq/rng.hpp"
#include "json.hpp"

namespace uq::sim {

void LogitVector::validate() const {
    if (vocab.empty()) throw InvalidInputError("empty vocabulary");
    if (logits.size() != vocab.size())
        throw InvalidInputError("|logits| must equal |vocab|");
    for (double z : logits)
        if (!std::isfinite(z)) throw InvalidInputError("non-finite logit");
}

void NextTokenDistribution::validate() const {
    if (vocab.empty()) throw InvalidInputError("empty vocabulary");
    if (probs.size() != vocab.size()) throw InvalidInputError("|probs| must equal |vocab|");
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw InvalidInputError("negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw InvalidInputError("probabilities must sum to 1, got " + std::to_string(sum));
}

NextTokenDistribution softmax(const LogitVector& lv) {
    lv.validate();
    const double zmax = *std::max_element(lv.logits.begin(), lv.logits.end());
    NextTokenDistribution d;
    d.vocab = lv.vocab;
    d.probs.resize(lv.logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < lv.logits.size(); ++i) {
        d.probs[i] = std::exp(lv.logits[i] - zmax);
        sum += d.probs[i];
    }
    for (double& p : d.probs) p /= sum;
    return d;
}

NextTokenDistribution softmax_with_temperature(const LogitVector& lv, double t) {
    lv.validate();
    if (!(t >= 0.0)) throw InvalidInputError("temperature must be >= 0");
    if (t == 0.0) {
        const auto arg = std::max_element(lv.logits.begin(), lv.logits.end()) - lv.logits.begin();
        NextTokenDistribution d;
        d.vocab = lv.vocab;
        d.probs.assign(lv.logits.size(), 0.0);
        d.probs[static_cast<std::size_t>(arg)] = 1.0;
        return d;
    }
    LogitVector scaled = lv;
    for (double& z : scaled.logits) z /= t;
    return softmax(scaled);
}

NextTokenDistribution apply_top_k(const NextTokenDistribution& dist, int k) {
    dist.validate();
    const int v = static_cast<int>(dist.probs.size());
    if (k < 1 || k > v) throw InvalidInputError("top-k out of range");
    std::vector<std::size_t> order(dist.probs.size());
    std::iota(order.begin(), order.end(), 0u);
    // Descending probability, ties by lowest index.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist.probs[a] > dist.probs[b]; });
    NextTokenDistribution out;
    out.vocab = dist.vocab;
    out.probs.assign(dist.probs.size(), 0.0);
    double kept = 0.0;
    for (int i = 0; i < k; ++i) kept += dist.probs[order[static_cast<std::size_t>(i)]];
    for (int i = 0; i < k; ++i) {
        const auto idx = order[static_cast<std::size_t>(i)];
        out.probs[idx] = dist.probs[idx] / kept;
    }
    return out;
}

NextTokenDistribution apply_top_p(const NextTokenDistribution& dist, double p) {
    dist.validate();
    if (!(p > 0.0 && p <= 1.0)) throw InvalidInputError("top-p must be in (0, 1]");
    std::vector<std::size_t> order(dist.probs.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist.probs[a] > dist.probs[b]; });
    NextTokenDistribution out;
    out.vocab = dist.vocab;
    out.probs.assign(dist.probs.size(), 0.0);
    double cum = 0.0;
    std::size_t keep = 0;
    while (keep < order.size()) {
        cum += dist.probs[order[keep]];
        ++keep;
        if (cum >= p) break;  // inclusive boundary, always keeps >= 1 token
    }
    for (std::size_t i = 0; i < keep; ++i) out.probs[order[i]] = dist.probs[order[i]] / cum;
    return out;
}

TokenDraw sample_token(const NextTokenDistribution& dist, std::uint64_t seed) {
    dist.validate();
    Rng rng(seed);
    const double u = rng.unit();
    double cum = 0.0;
    std::size_t chosen = dist.probs.size();
    for (std::size_t i = 0; i < dist.probs.size(); ++i) {
        if (dist.probs[i] == 0.0) continue;  // zero-mass tokens can never be drawn
        cum += dist.probs[i];
        if (u < cum) {
            chosen = i;
            break;
        }
    }
    if (chosen == dist.probs.size()) {
        // u landed in the tail rounding gap; take the last positive-mass token.
        for (std::size_t i = dist.probs.size(); i-- > 0;) {
            if (dist.probs[i] > 0.0) {
                chosen = i;
                break;
            }
        }
    }
    return TokenDraw(dist.vocab[chosen], std::log(dist.probs[chosen]), 0);
}

double shannon_entropy(const NextTokenDistribution& dist) {
    double h = 0.0;
    for (double p : dist.probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

TokenDraw next_token(const LogitVector& lv, const SamplingParams& params, std::uint64_t seed) {
    params.validate();
    NextTokenDistribution d = softmax_with_temperature(lv, params.temperature);
    if (params.top_k) {
        const int v = static_cast<int>(d.probs.size());
        d = apply_top_k(d, std::min(*params.top_k, v));
    }
    d = apply_top_p(d, params.top_p);
    return sample_token(d, seed);
}

SimulatedModel::SimulatedModel(std::map<std::string, LogitVector> table, int max_tokens,
                               std::string model)
    : table_(std::move(table)), max_tokens_(max_tokens), model_(std::move(model)) {
    for (const auto& [ctx, lv] : table_) {
        (void)ctx;
        lv.validate();
    }
}

ResponseSample SimulatedModel::generate_impl(const std::string& prompt,
                                             const SamplingParams& params, bool want_logprobs) {
    const std::uint64_t base = params.seed.value_or(0);
    std::string context = prompt;
    std::vector<TokenDraw> draws;
    std::string text;
    for (int pos = 0; pos < max_tokens_; ++pos) {
        auto it = table_.find(context);
        if (it == table_.end()) break;
        TokenDraw td = next_token(it->second, params,
                                  hash_combine(base, static_cast<std::uint64_t>(pos)));
        td.position = pos;
        if (!text.empty()) text += ' ';
        text += td.token_text;
        context = prompt + " " + text;
        draws.push_back(std::move(td));
    }
    ResponseSample s;
    s.text = text;
    if (want_logprobs && !draws.empty()) s.tokens = std::move(draws);
    s.diagnostics["usage.prompt_tokens"] =
        static_cast<double>(1 + std::count(prompt.begin(), prompt.end(), ' '));
    s.diagnostics["usage.completion_tokens"] = static_cast<double>(
        s.tokens ? s.tokens->size() : 0);
    s.diagnostics["latency_ms"] = 0.0;
    return s;
}

std::map<std::string, LogitVector> load_logit_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open logit table: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInputError("malformed logit table " + path + ": " + e.what());
    }
    std::map<std::string, LogitVector> table;
    for (auto& [ctx, entry] : j.items()) {
        LogitVector lv;
        lv.vocab = entry.at("vocab").get<std::vector<std::string>>();
        lv.logits = entry.at("logits").get<std::vector<double>>();
        lv.validate();
        table.emplace(ctx, std::move(lv));
    }
    return table;
}

}  // namespace uq::sim
