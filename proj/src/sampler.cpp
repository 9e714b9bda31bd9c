#include "uq/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <future>
#include <set>

#include "uq/rng.hpp"

namespace uq {

void PromptPlan::validate() const {
    if (variants.empty()) throw InvalidInputError("plan has no variants");
    if (repeats < 1) throw InvalidInputError("repeats must be >= 1");
    if (chosen_indices.empty() || chosen_indices.size() > variants.size())
        throw PlanInfeasibleError("chosen_indices size out of range");
    std::set<int> seen;
    for (int idx : chosen_indices) {
        if (idx < 0 || idx >= static_cast<int>(variants.size()))
            throw InvalidInputError("chosen index out of range");
        if (!seen.insert(idx).second) throw InvalidInputError("duplicate chosen index");
    }
}

PromptPlan build_plan(const std::string& task_id, const std::vector<std::string>& variants,
                      int k, int repeats, std::uint64_t seed) {
    if (variants.empty()) throw InvalidInputError("variants must be non-empty");
    std::set<std::string> distinct(variants.begin(), variants.end());
    if (distinct.size() != variants.size())
        throw InvalidInputError("variants must be pairwise distinct");
    const int m = static_cast<int>(variants.size());
    if (k < 1) throw InvalidInputError("k must be >= 1");
    if (k > m)
        throw PlanInfeasibleError("k = " + std::to_string(k) + " exceeds M = " +
                                  std::to_string(m));
    if (repeats < 1) throw InvalidInputError("repeats must be >= 1");
    PromptPlan plan;
    plan.task_id = task_id;
    plan.variants = variants;
    plan.repeats = repeats;
    plan.seed = seed;
    Rng rng(seed);
    plan.chosen_indices = random_k_subset(m, k, rng);
    plan.validate();
    return plan;
}

std::uint64_t cell_seed(std::uint64_t base_seed, int variant_index, int repeat_index) {
    return hash_combine(base_seed, hash_combine(static_cast<std::uint64_t>(variant_index),
                                               static_cast<std::uint64_t>(repeat_index)));
}

namespace {

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct CellResult {
    ResponseSample sample;
    bool ok = false;
    std::string error;
};

}  // namespace

PlanExecution execute_plan(const PromptPlan& plan, ChatProvider& provider,
                           const SamplingParams& params, const ExecuteOptions& options) {
    plan.validate();
    params.validate();
    if (options.parallelism < 1) throw InvalidConfigError("parallelism must be >= 1");

    struct Cell {
        int variant;
        int repeat;
    };
    std::vector<Cell> cells;
    for (int v : plan.chosen_indices)
        for (int r = 0; r < plan.repeats; ++r) cells.push_back({v, r});

    auto run_cell = [&](const Cell& cell) -> CellResult {
        CellResult res;
        const std::string& prompt = plan.variants[static_cast<std::size_t>(cell.variant)];
        SamplingParams cell_params = params;
        cell_params.seed = cell_seed(plan.seed, cell.variant, cell.repeat);
        const std::string key =
            io::ResponseCache::key(prompt, cell_params, provider.model_id(), *cell_params.seed);
        try {
            if (options.cache) {
                if (auto hit = options.cache->lookup(key, prompt)) {
                    res.sample = std::move(*hit);
                    res.ok = true;
                }
            }
            if (!res.ok) {
                res.sample = provider.chat_generate(prompt, cell_params, options.want_logprobs);
                if (options.cache) options.cache->store(key, prompt, res.sample);
                res.ok = true;
            }
            res.sample.task_id = plan.task_id;
            res.sample.prompt_variant_id = cell.variant;
            res.sample.repeat_index = cell.repeat;
            res.sample.sample_id = plan.task_id + "#v" + std::to_string(cell.variant) + "r" +
                                   std::to_string(cell.repeat);
        } catch (const std::exception& e) {
            res.ok = false;
            res.error = e.what();
        }
        return res;
    };

    // Bounded fan-out: at most `parallelism` futures in flight; results keyed
    // by cell coordinates so completion order is irrelevant.
    std::vector<CellResult> results(cells.size());
    std::size_t next = 0;
    std::vector<std::pair<std::size_t, std::future<CellResult>>> in_flight;
    while (next < cells.size() || !in_flight.empty()) {
        while (next < cells.size() &&
               in_flight.size() < static_cast<std::size_t>(options.parallelism)) {
            in_flight.emplace_back(next, std::async(std::launch::async, run_cell, cells[next]));
            ++next;
        }
        auto& [idx, fut] = in_flight.front();
        results[idx] = fut.get();
        in_flight.erase(in_flight.begin());
    }

    PlanExecution exec;
    exec.set.task_id = plan.task_id;
    exec.set.task_type = options.task_type;
    exec.set.created_at = iso_timestamp();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (results[i].ok) {
            exec.set.samples.push_back(std::move(results[i].sample));
        } else {
            exec.failures.push_back({cells[i].variant, cells[i].repeat, results[i].error});
        }
    }
    exec.set.partial = !exec.failures.empty();
    if (exec.set.samples.empty())
        throw ProviderError("every plan cell failed for task " + plan.task_id +
                            (exec.failures.empty() ? "" : "; first: " + exec.failures[0].error));
    // Canonical assembly order: sorted by variant then repeat.
    std::sort(exec.set.samples.begin(), exec.set.samples.end(),
              [](const ResponseSample& a, const ResponseSample& b) {
                  if (a.prompt_variant_id != b.prompt_variant_id)
                      return a.prompt_variant_id < b.prompt_variant_id;
                  return a.repeat_index < b.repeat_index;
              });
    exec.set.validate();
    return exec;
}

}  // namespace uq
