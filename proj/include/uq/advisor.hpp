#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "uq/core.hpp"
#include "uq/greybox.hpp"
#include "uq/providers.hpp"

// Validation-aware layer: accuracy-vs-uncertainty regression, anchor-distance
// unbiasedness, cross-metric high-uncertainty flagging, validation
// subsampling, and the static task-type x validation-level metric
// recommendation table.

namespace uq {

struct CalibrationPoint {
    std::string task_item_id;
    double uncertainty = 0.0;
    double accuracy = 0.0;  // in [0, 1]
};

struct RegressionFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int n = 0;
};

struct MetricRecommendation {
    struct Entry {
        std::string metric_id;
        bool requires_logprobs = false;
        bool requires_other_model = false;
    };
    std::vector<Entry> entries;
    // Set when logprob filtering emptied an otherwise non-empty result.
    bool empty_after_logprob_filter = false;
};

// Ordinary least squares of accuracy on uncertainty.
// r_squared = 1 - SS_res/SS_tot, defined as 1 when SS_tot = 0 (which under
// OLS implies SS_res = 0: the fit is exact). All-equal uncertainties raise
// DegenerateInputError.
RegressionFit fit_linear_calibration(const std::vector<CalibrationPoint>& points);

// Embeds all labels, re-normalizes their mean, returns the cosine distance to
// the embedded anchor.
MetricScore centroid_anchor_distance(const std::vector<std::string>& labels,
                                     const ReferenceAnchor& anchor,
                                     EmbeddingProvider& embedder);

// Items in the top (1 - quantile) tail of at least min_agreement metrics;
// boundary values are included.
std::vector<std::string> flag_high_uncertainty(
    const std::map<std::string, std::map<std::string, double>>& scores, double quantile,
    int min_agreement);

// Static encoding of the nine-row metric table; rows are filtered by task
// type and validation level, and grey-box rows are dropped when logprobs are
// unavailable.
MetricRecommendation recommend_metrics(TaskType t, ValidationLevel v, bool logprobs_available);

// Uniform random ceil(rate * n)-subset under the seeded generator; preserves
// input order.
std::vector<std::string> subsample_for_validation(const std::vector<std::string>& item_ids,
                                                  double rate, std::uint64_t seed);

// Fraction of responses whose extracted, normalized answer equals the
// normalized gold label.
double accuracy_against_gold(const SampleSet& set, const std::string& gold,
                             const AnswerExtraction& extraction);

}  // namespace uq
