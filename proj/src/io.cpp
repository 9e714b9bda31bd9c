#include "uq/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace uq::io {

using nlohmann::json;

json to_json(const SamplingParams& p) {
    json j{{"temperature", p.temperature}, {"top_p", p.top_p}};
    if (p.top_k) j["top_k"] = *p.top_k;
    if (p.seed) j["seed"] = *p.seed;
    return j;
}

SamplingParams sampling_params_from_json(const json& j) {
    SamplingParams p;
    p.temperature = j.value("temperature", 1.0);
    p.top_p = j.value("top_p", 1.0);
    if (j.contains("top_k")) p.top_k = j.at("top_k").get<int>();
    if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
    p.validate();
    return p;
}

json to_json(const ResponseSample& s) {
    json j{{"sample_id", s.sample_id},
           {"task_id", s.task_id},
           {"prompt_variant_id", s.prompt_variant_id},
           {"repeat_index", s.repeat_index},
           {"text", s.text},
           {"model_id", s.model_id},
           {"sampling_params", to_json(s.sampling_params)}};
    if (s.tokens) {
        json toks = json::array();
        for (const auto& t : *s.tokens)
            toks.push_back({{"token", t.token_text}, {"logprob", t.logprob}, {"position", t.position}});
        j["tokens"] = std::move(toks);
    }
    if (!s.diagnostics.empty()) j["diagnostics"] = s.diagnostics;
    return j;
}

ResponseSample response_sample_from_json(const json& j) {
    ResponseSample s;
    s.sample_id = j.value("sample_id", "");
    s.task_id = j.value("task_id", "");
    s.prompt_variant_id = j.value("prompt_variant_id", 0);
    s.repeat_index = j.value("repeat_index", 0);
    s.text = j.value("text", "");
    s.model_id = j.value("model_id", "");
    if (j.contains("sampling_params"))
        s.sampling_params = sampling_params_from_json(j.at("sampling_params"));
    if (j.contains("tokens")) {
        std::vector<TokenDraw> toks;
        for (const auto& t : j.at("tokens"))
            toks.emplace_back(t.at("token").get<std::string>(), t.at("logprob").get<double>(),
                              t.at("position").get<int>());
        s.tokens = std::move(toks);
    }
    if (j.contains("diagnostics"))
        s.diagnostics = j.at("diagnostics").get<std::map<std::string, double>>();
    s.validate();
    return s;
}

json to_json(const SampleSet& s) {
    json samples = json::array();
    for (const auto& smp : s.samples) samples.push_back(to_json(smp));
    return json{{"task_id", s.task_id},
                {"task_type", to_string(s.task_type)},
                {"created_at", s.created_at},
                {"partial", s.partial},
                {"samples", std::move(samples)}};
}

SampleSet sample_set_from_json(const json& j) {
    SampleSet s;
    s.task_id = j.at("task_id").get<std::string>();
    s.task_type = task_type_from_string(j.at("task_type").get<std::string>());
    s.created_at = j.value("created_at", "");
    s.partial = j.value("partial", false);
    for (const auto& smp : j.at("samples")) s.samples.push_back(response_sample_from_json(smp));
    s.validate();
    return s;
}

json to_json(const MetricScore& m) {
    return json{{"metric_id", m.metric_id},
                {"value", m.value},
                {"per_sample", m.per_sample},
                {"diagnostics", m.diagnostics}};
}

MetricScore metric_score_from_json(const json& j) {
    MetricScore m(j.at("metric_id").get<std::string>(), j.at("value").get<double>());
    if (j.contains("per_sample"))
        m.per_sample = j.at("per_sample").get<std::map<std::string, double>>();
    if (j.contains("diagnostics"))
        m.diagnostics = j.at("diagnostics").get<std::map<std::string, double>>();
    return m;
}

namespace {

const std::set<std::string> kRunRecordFields = {
    "schema_version", "sample", "provider", "prompt_tokens", "completion_tokens", "latency_ms"};

}  // namespace

json RunRecord::to_json() const {
    json j = extra;  // unknown fields first, known fields win
    j["schema_version"] = schema_version;
    j["sample"] = io::to_json(sample);
    j["provider"] = provider;
    j["prompt_tokens"] = prompt_tokens;
    j["completion_tokens"] = completion_tokens;
    j["latency_ms"] = latency_ms;
    return j;
}

RunRecord RunRecord::from_json(const json& j) {
    RunRecord r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kRunRecordSchemaVersion)
        throw InvalidInputError("unsupported RunRecord schema version " +
                                std::to_string(r.schema_version));
    r.sample = response_sample_from_json(j.at("sample"));
    r.provider = j.value("provider", "");
    r.prompt_tokens = j.value("prompt_tokens", 0);
    r.completion_tokens = j.value("completion_tokens", 0);
    if (r.prompt_tokens < 0 || r.completion_tokens < 0)
        throw InvalidInputError("token usage must be non-negative");
    r.latency_ms = j.value("latency_ms", 0.0);
    for (const auto& [key, value] : j.items())
        if (kRunRecordFields.count(key) == 0) r.extra[key] = value;
    return r;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<RunRecord>& records) {
    std::ostringstream out;
    for (const auto& r : records) out << r.to_json().dump() << '\n';
    atomic_write(path, out.str());
}

std::vector<RunRecord> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open run file: " + path.string());
    std::vector<RunRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(RunRecord::from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw InvalidInputError(path.string() + ":" + std::to_string(lineno) + ": " +
                                    e.what());
        }
    }
    return out;
}

std::map<std::string, SampleSet> sample_sets_from_records(const std::vector<RunRecord>& records) {
    std::map<std::string, SampleSet> sets;
    for (const auto& r : records) {
        auto& set = sets[r.sample.task_id];
        set.task_id = r.sample.task_id;
        set.samples.push_back(r.sample);
        if (r.extra.contains("partial") && r.extra.at("partial").get<bool>()) set.partial = true;
    }
    for (auto& [id, set] : sets) {
        (void)id;
        std::sort(set.samples.begin(), set.samples.end(),
                  [](const ResponseSample& a, const ResponseSample& b) {
                      if (a.prompt_variant_id != b.prompt_variant_id)
                          return a.prompt_variant_id < b.prompt_variant_id;
                      return a.repeat_index < b.repeat_index;
                  });
        set.validate();
    }
    return sets;
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::string ResponseCache::key(const std::string& prompt, const SamplingParams& params,
                               const std::string& model_id, std::uint64_t cell_seed) {
    json j{{"prompt", prompt},
           {"params", to_json(params)},
           {"model_id", model_id},
           {"cell_seed", cell_seed}};
    return sha256_hex(j.dump());
}

std::optional<ResponseSample> ResponseCache::lookup(const std::string& key,
                                                    const std::string& prompt) const {
    const auto path = dir_ / (key + ".json");
    std::ifstream in(path);
    if (!in) return std::nullopt;
    try {
        json j;
        in >> j;
        if (j.at("prompt").get<std::string>() != prompt) return std::nullopt;  // fail closed
        return response_sample_from_json(j.at("response"));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void ResponseCache::store(const std::string& key, const std::string& prompt,
                          const ResponseSample& sample) {
    json j{{"prompt", prompt}, {"response", to_json(sample)}};
    atomic_write(dir_ / (key + ".json"), j.dump());
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << csv_escape(header[i]);
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_escape(row[i]);
        out << '\n';
    }
    atomic_write(path, out.str());
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open CSV file: " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> row;
        std::string field;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            if (quoted) {
                if (c == '"') {
                    if (i + 1 < line.size() && line[i + 1] == '"') {
                        field.push_back('"');
                        ++i;
                    } else {
                        quoted = false;
                    }
                } else {
                    field.push_back(c);
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                row.push_back(std::move(field));
                field.clear();
            } else {
                field.push_back(c);
            }
        }
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp);
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

std::vector<std::string> load_variants(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open variants file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();
    std::vector<std::string> out;
    // Leading '[' selects the JSON-array format.
    const auto first = content.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && content[first] == '[') {
        try {
            out = json::parse(content).get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw InvalidInputError("malformed variants file " + path.string() + ": " + e.what());
        }
    } else {
        std::istringstream lines(content);
        std::string line;
        while (std::getline(lines, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) out.push_back(line);
        }
    }
    if (out.empty()) throw InvalidInputError("variants file is empty: " + path.string());
    return out;
}

std::vector<TaskItem> load_items(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open items file: " + path.string());
    std::vector<TaskItem> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            out.push_back({j.at("item_id").get<std::string>(), j.at("input").get<std::string>()});
        } catch (const json::exception& e) {
            throw InvalidInputError(path.string() + ":" + std::to_string(lineno) + ": " +
                                    e.what());
        }
    }
    if (out.empty()) throw InvalidInputError("items file is empty: " + path.string());
    return out;
}

std::vector<GoldEntry> load_gold(const std::filesystem::path& path) {
    const auto rows = read_csv(path);
    if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "item_id" ||
        rows[0][1] != "gold_label")
        throw InvalidInputError("gold file must start with header item_id,gold_label[,category]: " +
                                path.string());
    std::vector<GoldEntry> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        GoldEntry e;
        e.item_id = rows[i][0];
        e.gold_label = rows[i].size() > 1 ? rows[i][1] : "";
        e.category = rows[i].size() > 2 ? rows[i][2] : "";
        out.push_back(std::move(e));
    }
    return out;
}

namespace {

ProviderConfig provider_config_from_json(const json& j) {
    ProviderConfig c;
    c.base_url = j.value("base_url", "");
    if (j.contains("api_key")) c.api_key = j.at("api_key").get<std::string>();
    c.model_name = j.value("model", "");
    c.timeout_ms = j.value("timeout_ms", 30000);
    c.max_retries = j.value("max_retries", 3);
    c.parallelism_limit = j.value("parallelism", 4);
    c.initial_backoff_ms = j.value("initial_backoff_ms", 200);
    c.validate();
    return c;
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InvalidInputError("malformed config " + path.string() + ": " + e.what());
    }
    RunConfig c;
    if (j.contains("providers")) {
        const auto& p = j.at("providers");
        auto load_one = [&](const char* name, std::string& kind, ProviderConfig& cfg) {
            if (!p.contains(name)) return;
            kind = p.at(name).value("type", "stub");
            cfg = provider_config_from_json(p.at(name));
        };
        load_one("chat", c.chat_provider, c.chat);
        load_one("embedding", c.embedding_provider, c.embedding);
        load_one("nli", c.nli_provider, c.nli);
        if (p.contains("chat") && p.at("chat").contains("stub_table")) {
            for (const auto& [prompt, entry] : p.at("chat").at("stub_table").items()) {
                StubResponse r;
                r.text = entry.at("text").get<std::string>();
                if (entry.contains("tokens"))
                    for (const auto& t : entry.at("tokens"))
                        r.tokens.emplace_back(t.at(0).get<std::string>(), t.at(1).get<double>());
                c.stubs.chat.emplace(prompt, std::move(r));
            }
        }
        if (p.contains("embedding")) {
            const auto& e = p.at("embedding");
            c.stubs.embedding_dim = e.value("dimension", 8);
            if (e.contains("stub_table"))
                for (const auto& [txt, vec] : e.at("stub_table").items())
                    c.stubs.embeddings.emplace(txt, vec.get<std::vector<double>>());
        }
    }
    c.api_key_env = j.value("api_key_env", "UQ_API_KEY");
    if (j.contains("plan")) {
        const auto& p = j.at("plan");
        c.plan_k = p.value("k", 5);
        c.plan_repeats = p.value("repeats", 6);
        c.seed = p.value("seed", static_cast<std::uint64_t>(0));
    }
    c.want_logprobs = j.value("want_logprobs", false);
    if (j.contains("sampling")) c.sampling = sampling_params_from_json(j.at("sampling"));
    if (j.contains("metrics")) c.metrics = j.at("metrics").get<std::vector<std::string>>();
    if (j.contains("thresholds")) {
        const auto& t = j.at("thresholds");
        c.alpha = t.value("alpha", c.alpha);
        c.quantile = t.value("quantile", c.quantile);
        c.min_agreement = t.value("min_agreement", c.min_agreement);
        c.top_fraction = t.value("top_fraction", c.top_fraction);
        c.eig_threshold = t.value("eig_threshold", c.eig_threshold);
    }
    c.subsample_rate = j.value("subsample_rate", c.subsample_rate);
    c.allow_partial = j.value("allow_partial", false);
    if (j.contains("cache_dir")) c.cache_dir = j.at("cache_dir").get<std::string>();
    for (const auto& m : c.metrics)
        if (registered_metric_ids().count(m) == 0)
            throw InvalidConfigError("unknown metric in config: " + m);
    return c;
}

}  // namespace uq::io
