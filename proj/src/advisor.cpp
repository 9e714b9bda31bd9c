#include "uq/advisor.hpp"

#include <algorithm>
#include <cmath>

#include "uq/rng.hpp"
#include "uq/text.hpp"

namespace uq {

RegressionFit fit_linear_calibration(const std::vector<CalibrationPoint>& points) {
    const auto n = points.size();
    if (n < 2) throw InvalidInputError("regression needs at least 2 points");
    for (const auto& p : points) {
        if (!(p.accuracy >= 0.0 && p.accuracy <= 1.0))
            throw InvalidInputError("accuracy out of [0, 1] for item " + p.task_item_id);
        if (!std::isfinite(p.uncertainty))
            throw InvalidInputError("non-finite uncertainty for item " + p.task_item_id);
    }
    double xbar = 0.0, ybar = 0.0;
    for (const auto& p : points) {
        xbar += p.uncertainty;
        ybar += p.accuracy;
    }
    xbar /= static_cast<double>(n);
    ybar /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : points) {
        sxx += (p.uncertainty - xbar) * (p.uncertainty - xbar);
        sxy += (p.uncertainty - xbar) * (p.accuracy - ybar);
    }
    if (sxx == 0.0) throw DegenerateInputError("all uncertainties equal; regressor degenerate");
    RegressionFit fit;
    fit.n = static_cast<int>(n);
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    double ss_res = 0.0, ss_tot = 0.0;
    for (const auto& p : points) {
        const double pred = fit.intercept + fit.slope * p.uncertainty;
        ss_res += (p.accuracy - pred) * (p.accuracy - pred);
        ss_tot += (p.accuracy - ybar) * (p.accuracy - ybar);
    }
    fit.r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
    return fit;
}

MetricScore centroid_anchor_distance(const std::vector<std::string>& labels,
                                     const ReferenceAnchor& anchor,
                                     EmbeddingProvider& embedder) {
    if (labels.empty()) throw InvalidInputError("centroid distance needs at least one label");
    anchor.validate();
    std::vector<std::string> batch = labels;
    batch.push_back(anchor.text);
    const auto xs = embedder.embed_batch(batch);
    const std::size_t d = xs[0].values.size();
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += xs[i].values[j];
    for (double& v : mean) v /= static_cast<double>(labels.size());
    double norm_sq = 0.0;
    for (double v : mean) norm_sq += v * v;
    if (norm_sq == 0.0)
        throw DegenerateInputError("label centroid has zero norm (antipodal embeddings)");
    const auto centroid =
        EmbeddingVector::normalized(std::move(mean), "<centroid>");
    MetricScore score("centroid_anchor_distance",
                      1.0 - cosine_similarity(centroid, xs.back()));
    score.diagnostics["n_labels"] = static_cast<double>(labels.size());
    return score;
}

std::vector<std::string> flag_high_uncertainty(
    const std::map<std::string, std::map<std::string, double>>& scores, double quantile,
    int min_agreement) {
    if (scores.empty()) throw InvalidInputError("no metrics supplied");
    if (!(quantile > 0.0 && quantile < 1.0))
        throw InvalidInputError("quantile must lie in (0, 1)");
    if (min_agreement < 1 || static_cast<std::size_t>(min_agreement) > scores.size())
        throw InvalidConfigError("min_agreement must be in [1, number of metrics]");
    std::map<std::string, int> votes;
    for (const auto& [metric, items] : scores) {
        (void)metric;
        if (items.empty()) continue;
        std::vector<double> values;
        values.reserve(items.size());
        for (const auto& [id, v] : items) values.push_back(v);
        std::sort(values.begin(), values.end());
        // Threshold at the lower edge of the top (1 - quantile) tail; items at
        // the boundary value are included.
        auto idx = static_cast<std::size_t>(
            std::floor(quantile * static_cast<double>(values.size())));
        if (idx >= values.size()) idx = values.size() - 1;
        const double threshold = values[idx];
        for (const auto& [id, v] : items)
            if (v >= threshold) ++votes[id];
    }
    std::vector<std::string> flagged;
    for (const auto& [id, count] : votes)
        if (count >= min_agreement) flagged.push_back(id);
    return flagged;  // std::map iteration keeps this sorted and deterministic
}

namespace {

struct TableRow {
    const char* metric_id;
    bool grey_box;
    bool t1, t2, t3;
    bool v0, v1, v2;
    bool needs_other_model;
};

// The nine-row metric table, encoded as printed. Adding metrics requires a
// code change so the advisor stays auditable.
constexpr TableRow kMetricTable[] = {
    //                            grey   T1     T2     T3     V0     V1     V2    other
    {"token_level_entropy",       true,  true,  false, false, true,  true,  true,  false},
    {"brier",                     true,  true,  false, false, false, false, true,  false},
    {"embedding",                 false, false, true,  true,  true,  true,  true,  true},
    {"eigval_laplacian_jaccard",  false, false, false, true,  true,  true,  false, false},
    {"eccentricity_jaccard",      false, false, false, true,  true,  true,  false, false},
    {"eigval_laplacian_nli",      false, false, true,  true,  true,  true,  false, true},
    {"eccentricity_nli",          false, false, true,  true,  true,  true,  false, true},
    {"semantic_entropy",          false, false, true,  true,  true,  true,  false, true},
    {"luq",                       false, false, false, true,  true,  false, false, true},
};

}  // namespace

MetricRecommendation recommend_metrics(TaskType t, ValidationLevel v, bool logprobs_available) {
    MetricRecommendation rec;
    bool dropped_greybox = false;
    for (const auto& row : kMetricTable) {
        const bool t_ok = (t == TaskType::T1ClosedOneToken && row.t1) ||
                          (t == TaskType::T2OpenShort && row.t2) ||
                          (t == TaskType::T3OpenLong && row.t3);
        const bool v_ok = (v == ValidationLevel::V0None && row.v0) ||
                          (v == ValidationLevel::V1Anchors && row.v1) ||
                          (v == ValidationLevel::V2Full && row.v2);
        if (!t_ok || !v_ok) continue;
        if (row.grey_box && !logprobs_available) {
            dropped_greybox = true;
            continue;
        }
        rec.entries.push_back({row.metric_id, row.grey_box, row.needs_other_model});
    }
    rec.empty_after_logprob_filter = rec.entries.empty() && dropped_greybox;
    return rec;
}

std::vector<std::string> subsample_for_validation(const std::vector<std::string>& item_ids,
                                                  double rate, std::uint64_t seed) {
    if (item_ids.empty()) throw InvalidInputError("empty item list");
    if (!(rate > 0.0 && rate <= 1.0)) throw InvalidInputError("rate must be in (0, 1]");
    const auto n = static_cast<int>(item_ids.size());
    const auto k = static_cast<int>(std::ceil(rate * static_cast<double>(n)));
    Rng rng(seed);
    const auto chosen = random_k_subset(n, k, rng);
    std::vector<std::string> out;
    out.reserve(chosen.size());
    for (int idx : chosen) out.push_back(item_ids[static_cast<std::size_t>(idx)]);
    return out;
}

double accuracy_against_gold(const SampleSet& set, const std::string& gold,
                             const AnswerExtraction& extraction) {
    if (gold.empty()) throw InvalidInputError("gold label must be non-empty");
    detail::require_complete(set);
    const std::string gold_norm =
        extraction.normalize ? text::normalize_answer(gold) : gold;
    std::vector<std::string> failed;
    std::size_t hits = 0;
    for (const auto& s : set.samples) {
        try {
            if (extract_answer_text(s, extraction) == gold_norm) ++hits;
        } catch (const Error&) {
            failed.push_back(s.sample_id);
        }
    }
    if (!failed.empty()) {
        std::string ids;
        for (const auto& id : failed) ids += (ids.empty() ? "" : ", ") + id;
        throw ExtractionError("answer extraction failed for samples: " + ids);
    }
    return static_cast<double>(hits) / static_cast<double>(set.size());
}

}  // namespace uq
