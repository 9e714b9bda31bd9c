#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uq/core.hpp"
#include "uq/io.hpp"
#include "uq/providers.hpp"

// Builds and executes the perturbed-sampling plan that produces a SampleSet:
// choose K of M prompt variants, query each R times. Variants are authored
// inputs; no paraphrase generation happens here.

namespace uq {

struct PromptPlan {
    std::string task_id;
    std::vector<std::string> variants;  // all M authored prompts
    std::vector<int> chosen_indices;    // K distinct indices in [0, M), sorted
    int repeats = 1;
    std::uint64_t seed = 0;

    int planned_n() const { return static_cast<int>(chosen_indices.size()) * repeats; }
    void validate() const;
};

// chosen_indices is a uniform random k-subset of [0, M) under the seeded
// generator; deterministic given seed.
PromptPlan build_plan(const std::string& task_id, const std::vector<std::string>& variants,
                      int k, int repeats, std::uint64_t seed);

// Seed for repeat j of variant i: base_seed mixed with (i, j), so repeats are
// distinct but reproducible.
std::uint64_t cell_seed(std::uint64_t base_seed, int variant_index, int repeat_index);

struct FailedCell {
    int variant_index = 0;
    int repeat_index = 0;
    std::string error;
};

struct PlanExecution {
    SampleSet set;                    // canonical order (variant, then repeat)
    std::vector<FailedCell> failures; // non-empty iff set.partial
    bool complete() const { return failures.empty(); }
};

struct ExecuteOptions {
    bool want_logprobs = false;
    int parallelism = 4;
    io::ResponseCache* cache = nullptr;  // optional
    TaskType task_type = TaskType::T2OpenShort;
};

// Fans out across plan cells with bounded parallelism. Assembly order is
// canonical regardless of completion order; cached responses are reused when
// the (prompt, params, model, per-repeat seed) hash matches. Failed cells are
// reported, never silently dropped: the returned set is flagged partial.
PlanExecution execute_plan(const PromptPlan& plan, ChatProvider& provider,
                           const SamplingParams& params, const ExecuteOptions& options = {});

}  // namespace uq
