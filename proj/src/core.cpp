#include "uq/core.hpp"

#include <algorithm>
#include <utility>

namespace uq {

std::string to_string(TaskType t) {
    switch (t) {
        case TaskType::T1ClosedOneToken: return "T1";
        case TaskType::T2OpenShort: return "T2";
        case TaskType::T3OpenLong: return "T3";
    }
    return "T?";
}

std::string to_string(ValidationLevel v) {
    switch (v) {
        case ValidationLevel::V0None: return "V0";
        case ValidationLevel::V1Anchors: return "V1";
        case ValidationLevel::V2Full: return "V2";
    }
    return "V?";
}

TaskType task_type_from_string(const std::string& s) {
    if (s == "T1") return TaskType::T1ClosedOneToken;
    if (s == "T2") return TaskType::T2OpenShort;
    if (s == "T3") return TaskType::T3OpenLong;
    throw InvalidInputError("unknown task type: " + s + " (expected T1|T2|T3)");
}

ValidationLevel validation_level_from_string(const std::string& s) {
    if (s == "V0") return ValidationLevel::V0None;
    if (s == "V1") return ValidationLevel::V1Anchors;
    if (s == "V2") return ValidationLevel::V2Full;
    throw InvalidInputError("unknown validation level: " + s + " (expected V0|V1|V2)");
}

TokenDraw::TokenDraw(std::string text, double lp, int pos)
    : token_text(std::move(text)), logprob(lp), position(pos) {
    if (!std::isfinite(logprob) || logprob > 0.0) {
        throw InvalidInputError("token logprob must be finite and <= 0, got " +
                                std::to_string(lp) + " for token '" + token_text + "'");
    }
    if (position < 0) throw InvalidInputError("token position must be non-negative");
}

void SamplingParams::validate() const {
    if (!(temperature >= 0.0) || !std::isfinite(temperature))
        throw InvalidInputError("temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw InvalidInputError("top_p must be in (0, 1]");
    if (top_k && *top_k < 1) throw InvalidInputError("top_k must be positive");
}

void ResponseSample::validate() const {
    sampling_params.validate();
    if (prompt_variant_id < 0) throw InvalidInputError("prompt_variant_id must be >= 0");
    if (repeat_index < 0) throw InvalidInputError("repeat_index must be >= 0");
    if (tokens) {
        if (tokens->empty())
            throw InvalidInputError("tokens, when present, must be non-empty (sample " +
                                    sample_id + ")");
        int last = -1;
        for (const auto& td : *tokens) {
            if (!std::isfinite(td.logprob) || td.logprob > 0.0)
                throw InvalidInputError("token logprob out of range in sample " + sample_id);
            if (td.position <= last)
                throw InvalidInputError("token positions must be strictly increasing in sample " +
                                        sample_id);
            last = td.position;
        }
    }
}

void SampleSet::validate() const {
    if (samples.empty()) throw InvalidInputError("SampleSet must contain at least one sample");
    std::set<std::pair<int, int>> cells;
    for (const auto& s : samples) {
        s.validate();
        if (s.task_id != task_id)
            throw InvalidInputError("sample " + s.sample_id + " has task_id '" + s.task_id +
                                    "', expected '" + task_id + "'");
        if (!cells.emplace(s.prompt_variant_id, s.repeat_index).second)
            throw InvalidInputError("duplicate (variant, repeat) cell in SampleSet " + task_id);
    }
}

void ReferenceAnchor::validate() const {
    if (text.empty()) throw InvalidInputError("reference anchor text must be non-empty");
}

const std::set<std::string>& registered_metric_ids() {
    static const std::set<std::string> ids = {
        "token_level_entropy",
        "brier",
        "embedding",
        "eigval_laplacian_jaccard",
        "eccentricity_jaccard",
        "eigval_laplacian_nli",
        "eccentricity_nli",
        "eigval_laplacian_cosine",
        "eccentricity_cosine",
        "semantic_entropy",
        "luq",
        "luq_pair",
        "eigenscore",
        "centroid_anchor_distance",
    };
    return ids;
}

MetricScore::MetricScore(std::string id, double v) : metric_id(std::move(id)), value(v) {
    if (registered_metric_ids().count(metric_id) == 0)
        throw InvalidInputError("unregistered metric id: " + metric_id);
    if (!std::isfinite(value))
        throw InvalidInputError("metric value must be finite (" + metric_id + ")");
}

TaskType classify_task_type(const OutputSpec& spec) {
    if (spec.expected_token_length < 1)
        throw InvalidSpecError("expected_token_length must be >= 1");
    if (spec.closed_options) {
        if (spec.closed_options->empty())
            throw InvalidSpecError("closed_options present but empty");
        if (spec.expected_token_length == 1) return TaskType::T1ClosedOneToken;
    }
    return spec.expected_token_length <= 15 ? TaskType::T2OpenShort : TaskType::T3OpenLong;
}

namespace detail {

void require_complete(const SampleSet& set) {
    if (set.partial && !set.allow_partial_metrics)
        throw PartialSampleSetError("SampleSet " + set.task_id +
                                    " is partial; pass allow-partial to score it anyway");
}

}  // namespace detail

}  // namespace uq
