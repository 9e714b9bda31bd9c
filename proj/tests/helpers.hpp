#pragma once

// Shared fixtures for the test binaries.

#include <string>
#include <utility>
#include <vector>

#include "uq/core.hpp"
#include "uq/rng.hpp"

namespace testutil {

// One sample per text, canonical (variant i, repeat 0) cells.
inline uq::SampleSet make_set(const std::vector<std::string>& texts,
                              const std::string& task_id = "t") {
    uq::SampleSet set;
    set.task_id = task_id;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        uq::ResponseSample s;
        s.sample_id = task_id + "#v" + std::to_string(i) + "r0";
        s.task_id = task_id;
        s.prompt_variant_id = static_cast<int>(i);
        s.repeat_index = 0;
        s.text = texts[i];
        set.samples.push_back(std::move(s));
    }
    return set;
}

// One single-token sample per (answer, p) pair.
inline uq::SampleSet make_token_set(
    const std::vector<std::pair<std::string, double>>& answers,
    const std::string& task_id = "t") {
    std::vector<std::string> texts;
    for (const auto& [a, p] : answers) texts.push_back(a);
    auto set = make_set(texts, task_id);
    for (std::size_t i = 0; i < answers.size(); ++i)
        set.samples[i].tokens = {{answers[i].first, std::log(answers[i].second), 0}};
    return set;
}

// Multi-token samples from per-response (token, p) sequences.
inline uq::SampleSet make_multitoken_set(
    const std::vector<std::vector<std::pair<std::string, double>>>& responses,
    const std::string& task_id = "t") {
    std::vector<std::string> texts;
    for (const auto& r : responses) {
        std::string t;
        for (const auto& [tok, p] : r) t += (t.empty() ? "" : " ") + tok;
        texts.push_back(t);
    }
    auto set = make_set(texts, task_id);
    for (std::size_t i = 0; i < responses.size(); ++i) {
        std::vector<uq::TokenDraw> toks;
        for (std::size_t j = 0; j < responses[i].size(); ++j)
            toks.emplace_back(responses[i][j].first, std::log(responses[i][j].second),
                              static_cast<int>(j));
        set.samples[i].tokens = std::move(toks);
    }
    return set;
}

inline std::vector<std::vector<double>> random_vectors(uq::Rng& rng, std::size_t n,
                                                       std::size_t dim) {
    std::vector<std::vector<double>> xs(n, std::vector<double>(dim));
    for (auto& x : xs)
        for (double& v : x) v = 2.0 * rng.unit() - 1.0;
    return xs;
}

// Reorders samples by `perm` and renumbers cells so the set stays valid.
inline uq::SampleSet permuted(const uq::SampleSet& set, const std::vector<std::size_t>& perm) {
    uq::SampleSet out = set;
    out.samples.clear();
    for (std::size_t idx : perm) out.samples.push_back(set.samples[idx]);
    return out;
}

}  // namespace testutil
