#include "uq/http_providers.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include "uq/rng.hpp"
#include "httplib.h"
#include "json.hpp"

namespace uq {

namespace {

using nlohmann::json;

std::string post_with_retries(const ProviderConfig& config, const std::string& path,
                              const std::string& body) {
    httplib::Client client(config.base_url);
    client.set_connection_timeout(config.timeout_ms / 1000, (config.timeout_ms % 1000) * 1000);
    client.set_read_timeout(config.timeout_ms / 1000, (config.timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (config.api_key) headers.emplace("Authorization", "Bearer " + *config.api_key);

    thread_local std::mt19937_64 jitter_rng(std::random_device{}());
    std::string last_error = "no attempt made";
    int last_status = 0;
    std::string last_body;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        if (attempt > 0) {
            const double base =
                static_cast<double>(config.initial_backoff_ms) * std::pow(2.0, attempt - 1);
            const double jitter =
                base * 0.5 * (static_cast<double>(jitter_rng() >> 11) * 0x1.0p-53);
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<long>(base + jitter)));
        }
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        last_status = res->status;
        last_body = res->body.substr(0, 256);
        // Retry server-side and rate-limit statuses; client errors are final.
        if (res->status != 429 && res->status < 500)
            throw ProviderRejectedError(res->status, last_body);
    }
    if (last_status != 0) throw ProviderRejectedError(last_status, last_body);
    throw ProviderUnreachableError("transport failure after " +
                                   std::to_string(config.max_retries + 1) + " attempts to " +
                                   config.base_url + path + ": " + last_error);
}

json parse_response(const std::string& body, const std::string& endpoint) {
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        throw ProviderError("malformed JSON from " + endpoint + ": " + e.what());
    }
}

}  // namespace

HttpChatProvider::HttpChatProvider(ProviderConfig config) : config_(std::move(config)) {
    config_.validate();
    limiter_ = std::make_shared<ParallelLimiter>(config_.parallelism_limit);
}

std::string HttpChatProvider::model_id() const { return config_.model_name; }

ResponseSample HttpChatProvider::generate_impl(const std::string& prompt,
                                               const SamplingParams& params,
                                               bool want_logprobs) {
    json body{{"model", config_.model_name},
              {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
              {"temperature", params.temperature},
              {"top_p", params.top_p},
              {"logprobs", want_logprobs}};
    if (params.top_k) body["top_k"] = *params.top_k;
    if (params.seed) body["seed"] = *params.seed;

    ParallelLimiter::Guard guard(*limiter_);
    const auto start = std::chrono::steady_clock::now();
    const json res =
        parse_response(post_with_retries(config_, "/chat/completions", body.dump()),
                       "/chat/completions");
    const auto elapsed = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - start)
                             .count();

    ResponseSample s;
    try {
        const auto& choice = res.at("choices").at(0);
        s.text = choice.at("message").at("content").get<std::string>();
        if (want_logprobs && choice.contains("logprobs") && !choice.at("logprobs").is_null()) {
            std::vector<TokenDraw> toks;
            int pos = 0;
            for (const auto& t : choice.at("logprobs").at("content")) {
                // Providers report natural-log probabilities; clamp tiny
                // positive rounding noise.
                const double lp = std::min(0.0, t.at("logprob").get<double>());
                toks.emplace_back(t.at("token").get<std::string>(), lp, pos++);
            }
            if (!toks.empty()) s.tokens = std::move(toks);
        }
        if (res.contains("usage")) {
            s.diagnostics["usage.prompt_tokens"] = res.at("usage").value("prompt_tokens", 0);
            s.diagnostics["usage.completion_tokens"] =
                res.at("usage").value("completion_tokens", 0);
        }
    } catch (const json::exception& e) {
        throw ProviderError(std::string("unexpected chat completion shape: ") + e.what());
    }
    s.diagnostics["latency_ms"] = elapsed;
    return s;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(ProviderConfig config) : config_(std::move(config)) {
    config_.validate();
    limiter_ = std::make_shared<ParallelLimiter>(config_.parallelism_limit);
}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed_impl(
    const std::vector<std::string>& texts) {
    json body{{"model", config_.model_name}, {"input", texts}};
    ParallelLimiter::Guard guard(*limiter_);
    const json res =
        parse_response(post_with_retries(config_, "/embeddings", body.dump()), "/embeddings");
    std::vector<EmbeddingVector> out(texts.size());
    try {
        for (const auto& entry : res.at("data")) {
            const auto idx = entry.at("index").get<std::size_t>();
            if (idx >= texts.size()) throw ProviderError("embedding index out of range");
            out[idx] = EmbeddingVector{entry.at("embedding").get<std::vector<double>>(),
                                       texts[idx]};
        }
    } catch (const json::exception& e) {
        throw ProviderError(std::string("unexpected embeddings shape: ") + e.what());
    }
    for (std::size_t i = 0; i < out.size(); ++i)
        if (out[i].values.empty())
            throw ProviderError("missing embedding for input " + std::to_string(i));
    return out;
}

HttpNliProvider::HttpNliProvider(ProviderConfig config) : config_(std::move(config)) {
    config_.validate();
    limiter_ = std::make_shared<ParallelLimiter>(config_.parallelism_limit);
}

NliJudgment HttpNliProvider::judge_impl(const std::string& premise,
                                        const std::string& hypothesis) {
    json body{{"model", config_.model_name}, {"premise", premise}, {"hypothesis", hypothesis}};
    ParallelLimiter::Guard guard(*limiter_);
    const json res = parse_response(post_with_retries(config_, "/nli", body.dump()), "/nli");
    try {
        return NliJudgment::from_logits(res.at("logit_entail").get<double>(),
                                        res.at("logit_neutral").get<double>(),
                                        res.at("logit_contradict").get<double>());
    } catch (const json::exception& e) {
        throw ProviderError(std::string("unexpected NLI shape: ") + e.what());
    }
}

}  // namespace uq
