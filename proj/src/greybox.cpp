#include "uq/greybox.hpp"

#include <cmath>

#include "uq/text.hpp"

namespace uq {

std::string extract_answer_text(const ResponseSample& sample,
                                const AnswerExtraction& extraction) {
    std::string raw;
    if (extraction.mode == AnswerExtraction::Mode::FirstToken) {
        if (!sample.tokens)
            throw ExtractionError("first-token extraction needs tokens (sample " +
                                  sample.sample_id + ")");
        raw = sample.tokens->front().token_text;
    } else {
        raw = sample.text;
    }
    std::string out = extraction.normalize ? text::normalize_answer(raw) : raw;
    if (out.empty())
        throw ExtractionError("empty extracted answer for sample " + sample.sample_id);
    return out;
}

std::pair<std::string, double> extract_answer(const ResponseSample& sample,
                                              const AnswerExtraction& extraction) {
    if (!sample.tokens)
        throw LogprobsRequiredError("sample " + sample.sample_id + " has no log-probabilities");
    if (extraction.mode == AnswerExtraction::Mode::FullTextNormalized &&
        sample.tokens->size() != 1)
        throw ExtractionError("full-text extraction expects a single-token response, sample " +
                              sample.sample_id + " has " +
                              std::to_string(sample.tokens->size()) + " tokens");
    return {extract_answer_text(sample, extraction), sample.tokens->front().probability()};
}

MetricScore token_level_entropy(const SampleSet& set, const AnswerExtraction& extraction) {
    detail::require_complete(set);
    set.validate();
    std::map<std::string, double> mass;  // S_i per unique answer string
    double total = 0.0;
    for (const auto& s : set.samples) {
        const auto [answer, p] = extract_answer(s, extraction);
        mass[answer] += p;
        total += p;
    }
    double h = 0.0;
    MetricScore score("token_level_entropy", 0.0);
    for (const auto& [tok, m] : mass) {
        const double pi = m / total;
        if (pi > 0.0) h -= pi * std::log(pi);
        score.diagnostics["support." + tok] = pi;
    }
    score.value = h;
    score.diagnostics["support_size"] = static_cast<double>(mass.size());
    return score;
}

MetricScore brier_uncertainty(const SampleSet& set) {
    detail::require_complete(set);
    set.validate();
    MetricScore score("brier", 0.0);
    double sum = 0.0;
    for (const auto& s : set.samples) {
        if (!s.tokens)
            throw LogprobsRequiredError("sample " + s.sample_id + " has no log-probabilities");
        double resp = 0.0;
        for (const auto& td : *s.tokens) {
            const double err = 1.0 - td.probability();
            resp += err * err;
        }
        resp /= static_cast<double>(s.tokens->size());
        score.per_sample[s.sample_id] = resp;
        sum += resp;
    }
    score.value = sum / static_cast<double>(set.size());
    return score;
}

std::map<std::string, std::vector<double>> per_category_breakdown(
    const std::vector<std::pair<SampleSet, std::string>>& labeled_sets,
    const std::string& metric_id, const AnswerExtraction& extraction) {
    if (labeled_sets.empty()) throw InvalidInputError("per-category breakdown needs input sets");
    std::map<std::string, std::vector<double>> out;
    for (const auto& [set, gold] : labeled_sets) {
        double v;
        if (metric_id == "token_level_entropy")
            v = token_level_entropy(set, extraction).value;
        else if (metric_id == "brier")
            v = brier_uncertainty(set).value;
        else
            throw InvalidInputError("not a grey-box metric: " + metric_id);
        out[gold].push_back(v);
    }
    return out;
}

}  // namespace uq
