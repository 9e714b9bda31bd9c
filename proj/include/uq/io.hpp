#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uq/core.hpp"
#include "uq/providers.hpp"
#include "json.hpp"

// Persistence: JSON schemas for the core types, the versioned RunRecord JSONL
// format, the content-addressed response cache, CSV emission and the run
// configuration document. File writes are atomic (write-temp-then-rename).

namespace uq::io {

inline constexpr int kRunRecordSchemaVersion = 1;

nlohmann::json to_json(const SamplingParams& p);
SamplingParams sampling_params_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ResponseSample& s);
ResponseSample response_sample_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SampleSet& s);
SampleSet sample_set_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MetricScore& m);
MetricScore metric_score_from_json(const nlohmann::json& j);

// One JSONL line per response: schema_version, the flattened sample, provider
// metadata, timing and token usage. Unknown fields survive a
// read-modify-write cycle via `extra`.
struct RunRecord {
    int schema_version = kRunRecordSchemaVersion;
    ResponseSample sample;
    std::string provider;
    int prompt_tokens = 0;
    int completion_tokens = 0;
    double latency_ms = 0.0;
    nlohmann::json extra = nlohmann::json::object();

    nlohmann::json to_json() const;
    static RunRecord from_json(const nlohmann::json& j);
};

void write_jsonl(const std::filesystem::path& path, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_jsonl(const std::filesystem::path& path);

// Groups records by task id and rebuilds canonical SampleSets.
std::map<std::string, SampleSet> sample_sets_from_records(const std::vector<RunRecord>& records);

std::string sha256_hex(const std::string& data);

// Content-addressed response cache: one JSON file per key under `dir`, key =
// SHA-256 of (prompt, params, model_id, per-repeat seed). A hit is verified
// against the stored prompt text; mismatches are treated as misses
// (fail-closed).
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    static std::string key(const std::string& prompt, const SamplingParams& params,
                           const std::string& model_id, std::uint64_t cell_seed);

    std::optional<ResponseSample> lookup(const std::string& key, const std::string& prompt) const;
    void store(const std::string& key, const std::string& prompt, const ResponseSample& sample);

private:
    std::filesystem::path dir_;
};

// Minimal RFC-4180-style CSV escaping.
std::string csv_escape(const std::string& field);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

void atomic_write(const std::filesystem::path& path, const std::string& content);

// Variants file: UTF-8 text with one prompt per line, or a JSON array of
// strings.
std::vector<std::string> load_variants(const std::filesystem::path& path);

struct TaskItem {
    std::string item_id;
    std::string input;
};

// Items file: JSONL lines {"item_id": ..., "input": ...}.
std::vector<TaskItem> load_items(const std::filesystem::path& path);

struct GoldEntry {
    std::string item_id;
    std::string gold_label;
    std::string category;
};

// Gold-label file: CSV with header item_id,gold_label,category.
std::vector<GoldEntry> load_gold(const std::filesystem::path& path);

struct StubTables {
    std::map<std::string, StubResponse> chat;
    std::map<std::string, std::vector<double>> embeddings;
    int embedding_dim = 8;
};

struct RunConfig {
    // Provider selection: "stub" (offline, deterministic) or "http".
    std::string chat_provider = "stub";
    std::string embedding_provider = "stub";
    std::string nli_provider = "stub";
    ProviderConfig chat;
    ProviderConfig embedding;
    ProviderConfig nli;
    std::string api_key_env = "UQ_API_KEY";
    StubTables stubs;

    int plan_k = 5;
    int plan_repeats = 6;
    std::uint64_t seed = 0;
    bool want_logprobs = false;
    SamplingParams sampling;

    std::vector<std::string> metrics;

    // Every artifact default is overridable here.
    double alpha = 1e-3;
    double quantile = 0.9;
    int min_agreement = 2;
    double top_fraction = 0.5;
    double eig_threshold = 0.9;
    double subsample_rate = 1.0;
    bool allow_partial = false;

    std::optional<std::filesystem::path> cache_dir;

    static RunConfig load(const std::filesystem::path& path);
};

}  // namespace uq::io
