#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "uq/errors.hpp"

// Shared data model: samples, sample sets, the task/validation typology,
// metric results and reference anchors. All types are immutable by
// convention after validate() and safe to share across concurrent readers.

namespace uq {

enum class TaskType { T1ClosedOneToken, T2OpenShort, T3OpenLong };
enum class ValidationLevel { V0None, V1Anchors, V2Full };

std::string to_string(TaskType t);
std::string to_string(ValidationLevel v);
TaskType task_type_from_string(const std::string& s);
ValidationLevel validation_level_from_string(const std::string& s);

// One generated token with its natural-log probability. exp(logprob) must lie
// in (0, 1]; checked at construction.
struct TokenDraw {
    std::string token_text;
    double logprob = 0.0;
    int position = 0;

    TokenDraw() = default;
    TokenDraw(std::string text, double lp, int pos);

    double probability() const { return std::exp(logprob); }
};

struct SamplingParams {
    double temperature = 1.0;
    double top_p = 1.0;
    std::optional<int> top_k;          // absent = unbounded
    std::optional<std::uint64_t> seed;

    void validate() const;
};

struct ResponseSample {
    std::string sample_id;
    std::string task_id;
    int prompt_variant_id = 0;
    int repeat_index = 0;
    std::string text;
    std::optional<std::vector<TokenDraw>> tokens;
    std::string model_id;
    SamplingParams sampling_params;
    // Per-sample flags and accounting (e.g. logprobs_unavailable, usage.*).
    std::map<std::string, double> diagnostics;

    void validate() const;
    bool has_logprobs() const { return tokens.has_value(); }
};

// The N responses for one task item; the output space every metric consumes.
struct SampleSet {
    std::string task_id;
    std::vector<ResponseSample> samples;
    TaskType task_type = TaskType::T2OpenShort;
    std::string created_at;  // ISO-8601 UTC
    // Set by the sampler when some plan cells failed. Metrics refuse partial
    // sets unless allow_partial_metrics is set explicitly by the caller.
    bool partial = false;
    bool allow_partial_metrics = false;

    std::size_t size() const { return samples.size(); }
    void validate() const;
};

struct ReferenceAnchor {
    std::string anchor_id;
    std::string text;
    std::optional<std::string> category;

    void validate() const;
};

// Every metric identifier this artifact can compute.
const std::set<std::string>& registered_metric_ids();

struct MetricScore {
    std::string metric_id;
    double value = 0.0;
    std::map<std::string, double> per_sample;
    std::map<std::string, double> diagnostics;

    MetricScore() = default;
    MetricScore(std::string id, double v);
};

struct OutputSpec {
    std::optional<std::vector<std::string>> closed_options;
    int expected_token_length = 1;
};

// T1 iff closed options with a one-token answer; otherwise T2 up to 15
// expected tokens (inclusive) and T3 above. One-token open generation falls
// into T2.
TaskType classify_task_type(const OutputSpec& spec);

namespace detail {
// Shared guard used by every metric entry point.
void require_complete(const SampleSet& set);
}  // namespace detail

}  // namespace uq
