// uq: perturbed-sampling uncertainty quantification for LLM outputs.
//
// Subcommands: sample, score, advise, calibrate, report.
// Exit codes: 0 ok, 2 usage/parse, 3 provider failure, 4 incompatible metric,
// 5 empty join.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "uq/advisor.hpp"
#include "uq/blackbox.hpp"
#include "uq/core.hpp"
#include "uq/errors.hpp"
#include "uq/greybox.hpp"
#include "uq/http_providers.hpp"
#include "uq/io.hpp"
#include "uq/providers.hpp"
#include "uq/rng.hpp"
#include "uq/sampler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitProvider = 3;
constexpr int kExitIncompatibleMetric = 4;
constexpr int kExitEmptyJoin = 5;

std::optional<std::string> api_key_from_env(const uq::io::RunConfig& cfg) {
    if (const char* v = std::getenv(cfg.api_key_env.c_str()); v && *v) return std::string(v);
    return std::nullopt;
}

std::unique_ptr<uq::ChatProvider> make_chat(const uq::io::RunConfig& cfg) {
    if (cfg.chat_provider == "stub")
        return std::make_unique<uq::StubChatProvider>(cfg.stubs.chat);
    if (cfg.chat_provider == "http") {
        auto pc = cfg.chat;
        if (!pc.api_key) pc.api_key = api_key_from_env(cfg);
        return std::make_unique<uq::HttpChatProvider>(pc);
    }
    throw uq::InvalidConfigError("unknown chat provider type: " + cfg.chat_provider);
}

std::unique_ptr<uq::EmbeddingProvider> make_embedder(const uq::io::RunConfig& cfg) {
    if (cfg.embedding_provider == "stub")
        return std::make_unique<uq::StubEmbeddingProvider>(cfg.stubs.embeddings,
                                                           cfg.stubs.embedding_dim);
    if (cfg.embedding_provider == "http") {
        auto pc = cfg.embedding;
        if (!pc.api_key) pc.api_key = api_key_from_env(cfg);
        return std::make_unique<uq::HttpEmbeddingProvider>(pc);
    }
    throw uq::InvalidConfigError("unknown embedding provider type: " + cfg.embedding_provider);
}

std::unique_ptr<uq::NliProvider> make_nli(const uq::io::RunConfig& cfg) {
    if (cfg.nli_provider == "stub") return std::make_unique<uq::StubNliProvider>();
    if (cfg.nli_provider == "http") {
        auto pc = cfg.nli;
        if (!pc.api_key) pc.api_key = api_key_from_env(cfg);
        return std::make_unique<uq::HttpNliProvider>(pc);
    }
    throw uq::InvalidConfigError("unknown NLI provider type: " + cfg.nli_provider);
}

std::string render_prompt(const std::string& variant, const std::string& input) {
    const auto pos = variant.find("{input}");
    if (pos == std::string::npos) return variant + "\n" + input;
    std::string out = variant;
    out.replace(pos, 7, input);
    return out;
}

int tokens_of(const uq::ResponseSample& s, const char* key) {
    auto it = s.diagnostics.find(key);
    return it == s.diagnostics.end() ? 0 : static_cast<int>(it->second);
}

std::vector<uq::io::RunRecord> records_of(const uq::PlanExecution& exec,
                                          const std::string& provider_name) {
    std::vector<uq::io::RunRecord> records;
    for (const auto& s : exec.set.samples) {
        uq::io::RunRecord r;
        r.sample = s;
        r.provider = provider_name;
        r.prompt_tokens = tokens_of(s, "usage.prompt_tokens");
        r.completion_tokens = tokens_of(s, "usage.completion_tokens");
        auto it = s.diagnostics.find("latency_ms");
        r.latency_ms = it == s.diagnostics.end() ? 0.0 : it->second;
        if (exec.set.partial) r.extra["partial"] = true;
        records.push_back(std::move(r));
    }
    return records;
}

int cmd_sample(const std::string& config_path, const std::string& variants_path,
               const std::string& items_path, const std::string& out_dir) {
    const auto cfg = uq::io::RunConfig::load(config_path);
    const auto variants = uq::io::load_variants(variants_path);
    const auto items = uq::io::load_items(items_path);
    auto chat = make_chat(cfg);

    const int m = static_cast<int>(variants.size());
    std::cout << "plan: M=" << m << " K=" << cfg.plan_k << " R=" << cfg.plan_repeats
              << " N=" << cfg.plan_k * cfg.plan_repeats << " items=" << items.size()
              << " rate=" << cfg.subsample_rate << "\n";

    std::set<std::string> uq_items;
    {
        std::vector<std::string> ids;
        for (const auto& it : items) ids.push_back(it.item_id);
        for (const auto& id : uq::subsample_for_validation(ids, cfg.subsample_rate, cfg.seed))
            uq_items.insert(id);
    }

    std::optional<uq::io::ResponseCache> cache;
    cache.emplace(cfg.cache_dir.value_or(fs::path(out_dir) / "cache"));

    bool any_failure = false;
    for (const auto& item : items) {
        std::vector<std::string> prompts;
        prompts.reserve(variants.size());
        for (const auto& v : variants) prompts.push_back(render_prompt(v, item.input));
        const bool full = uq_items.count(item.item_id) > 0;
        const auto plan = uq::build_plan(
            item.item_id, prompts, full ? cfg.plan_k : 1, full ? cfg.plan_repeats : 1,
            uq::hash_combine(cfg.seed, uq::fnv1a(item.item_id)));
        uq::ExecuteOptions opts;
        opts.want_logprobs = cfg.want_logprobs;
        opts.parallelism = cfg.chat.parallelism_limit;
        opts.cache = &*cache;
        auto exec = uq::execute_plan(plan, *chat, cfg.sampling, opts);
        uq::io::write_jsonl(fs::path(out_dir) / (item.item_id + ".jsonl"),
                            records_of(exec, cfg.chat_provider));
        if (!exec.complete()) {
            any_failure = true;
            json fails = json::array();
            for (const auto& f : exec.failures)
                fails.push_back({{"variant_index", f.variant_index},
                                 {"repeat_index", f.repeat_index},
                                 {"error", f.error}});
            uq::io::atomic_write(fs::path(out_dir) / (item.item_id + ".failures.json"),
                                 fails.dump(2));
            std::cerr << item.item_id << ": " << exec.failures.size()
                      << " plan cell(s) failed; partial output written\n";
        }
    }
    return any_failure ? kExitProvider : kExitOk;
}

std::map<std::string, uq::SampleSet> load_runs(const std::string& runs_dir) {
    std::map<std::string, uq::SampleSet> sets;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(runs_dir))
        if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        for (auto& [id, set] : uq::io::sample_sets_from_records(uq::io::read_jsonl(f)))
            sets.emplace(id, std::move(set));
    }
    if (sets.empty()) throw uq::InvalidInputError("no run files found in " + runs_dir);
    return sets;
}

const std::set<std::string> kGreyboxMetrics = {"token_level_entropy", "brier"};

int cmd_score(const std::string& runs_dir, const std::vector<std::string>& metrics,
              const std::string& out_path, const std::string& config_path) {
    const auto cfg = config_path.empty() ? uq::io::RunConfig{}
                                         : uq::io::RunConfig::load(config_path);
    auto sets = load_runs(runs_dir);
    if (cfg.allow_partial)
        for (auto& [id, set] : sets) set.allow_partial_metrics = true;

    for (const auto& metric : metrics) {
        if (uq::registered_metric_ids().count(metric) == 0)
            throw uq::InvalidInputError("unknown metric: " + metric);
        if (kGreyboxMetrics.count(metric)) {
            std::string missing;
            for (const auto& [id, set] : sets)
                for (const auto& s : set.samples)
                    if (!s.tokens) {
                        missing += (missing.empty() ? "" : ", ") + id;
                        break;
                    }
            if (!missing.empty())
                throw uq::LogprobsRequiredError("metric " + metric +
                                                " needs log-probabilities; missing for items: " +
                                                missing);
        }
    }

    auto embedder = make_embedder(cfg);
    auto nli = make_nli(cfg);
    uq::AnswerExtraction extraction;

    std::vector<std::vector<std::string>> rows;
    json diagnostics = json::object();
    for (const auto& [item_id, set] : sets) {
        for (const auto& metric : metrics) {
            if (kGreyboxMetrics.count(metric) == 0 && set.size() < 2) continue;
            uq::MetricScore score("embedding", 0.0);
            if (metric == "token_level_entropy")
                score = uq::token_level_entropy(set, extraction);
            else if (metric == "brier")
                score = uq::brier_uncertainty(set);
            else if (metric == "embedding")
                score = uq::embedding_dispersion(set, *embedder);
            else if (metric == "semantic_entropy")
                score = uq::semantic_entropy(set, *nli);
            else if (metric == "luq")
                score = uq::luq(set, *nli);
            else if (metric == "luq_pair")
                score = uq::luq_pair(set, *embedder, cfg.top_fraction, *nli);
            else if (metric == "eigenscore")
                score = uq::eigenscore(set, *embedder, cfg.alpha);
            else if (metric == "eigval_laplacian_jaccard")
                score = uq::eigval_laplacian(
                    uq::similarity_matrix(set, uq::SimilarityKind::Jaccard));
            else if (metric == "eccentricity_jaccard")
                score = uq::eccentricity(
                    uq::similarity_matrix(set, uq::SimilarityKind::Jaccard),
                    cfg.eig_threshold);
            else if (metric == "eigval_laplacian_nli")
                score = uq::eigval_laplacian(
                    uq::similarity_matrix(set, uq::SimilarityKind::NliEntail, nli.get()));
            else if (metric == "eccentricity_nli")
                score = uq::eccentricity(
                    uq::similarity_matrix(set, uq::SimilarityKind::NliEntail, nli.get()),
                    cfg.eig_threshold);
            else
                throw uq::InvalidInputError("metric not scoreable from run files: " + metric);
            rows.push_back({item_id, metric, std::to_string(score.value)});
            diagnostics[item_id][metric] = uq::io::to_json(score);
        }
    }
    uq::io::write_csv(out_path, {"item_id", "metric_id", "value"}, rows);
    uq::io::atomic_write(out_path + ".diagnostics.json", diagnostics.dump(2));
    return kExitOk;
}

int cmd_advise(const std::string& task_type, const std::string& validation_level,
               bool logprobs, bool as_json) {
    const auto rec = uq::recommend_metrics(uq::task_type_from_string(task_type),
                                           uq::validation_level_from_string(validation_level),
                                           logprobs);
    if (as_json) {
        json out{{"task_type", task_type},
                 {"validation_level", validation_level},
                 {"logprobs_available", logprobs},
                 {"warning_empty_after_logprob_filter", rec.empty_after_logprob_filter},
                 {"metrics", json::array()}};
        for (const auto& e : rec.entries)
            out["metrics"].push_back({{"metric_id", e.metric_id},
                                      {"requires_logprobs", e.requires_logprobs},
                                      {"requires_other_model", e.requires_other_model}});
        std::cout << out.dump(2) << "\n";
    } else {
        for (const auto& e : rec.entries)
            std::cout << e.metric_id << (e.requires_logprobs ? " [grey-box]" : "")
                      << (e.requires_other_model ? " [needs other model]" : "") << "\n";
        if (rec.empty_after_logprob_filter)
            std::cout << "warning: all applicable metrics need log-probabilities\n";
    }
    return kExitOk;
}

std::map<std::string, std::map<std::string, double>> load_scores(const std::string& scores_csv) {
    const auto rows = uq::io::read_csv(scores_csv);
    if (rows.empty() || rows[0] != std::vector<std::string>{"item_id", "metric_id", "value"})
        throw uq::InvalidInputError("scores CSV must have header item_id,metric_id,value: " +
                                    scores_csv);
    std::map<std::string, std::map<std::string, double>> by_metric;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 3)
            throw uq::InvalidInputError(scores_csv + ": row " + std::to_string(i + 1) +
                                        " malformed");
        by_metric[rows[i][1]][rows[i][0]] = std::stod(rows[i][2]);
    }
    return by_metric;
}

int cmd_calibrate(const std::string& scores_csv, const std::string& gold_csv,
                  const std::string& runs_dir, const std::string& out_path,
                  std::string metric) {
    const auto by_metric = load_scores(scores_csv);
    const auto gold = uq::io::load_gold(gold_csv);
    const auto sets = load_runs(runs_dir);
    if (metric.empty()) {
        // Deterministic default: prefer the grey-box calibration metric.
        if (by_metric.count("brier")) metric = "brier";
        else if (by_metric.count("token_level_entropy")) metric = "token_level_entropy";
        else if (!by_metric.empty()) metric = by_metric.begin()->first;
    }
    if (by_metric.count(metric) == 0)
        throw uq::InvalidInputError("metric '" + metric + "' not present in " + scores_csv);
    const auto& uncertainties = by_metric.at(metric);

    uq::AnswerExtraction extraction;
    extraction.mode = uq::AnswerExtraction::Mode::FullTextNormalized;

    std::vector<uq::CalibrationPoint> points;
    std::vector<std::vector<std::string>> plot_rows;
    std::map<std::string, std::vector<std::pair<double, double>>> by_category;
    for (const auto& g : gold) {
        auto u = uncertainties.find(g.item_id);
        auto s = sets.find(g.item_id);
        if (u == uncertainties.end() || s == sets.end()) continue;
        const double acc = uq::accuracy_against_gold(s->second, g.gold_label, extraction);
        points.push_back({g.item_id, u->second, acc});
        plot_rows.push_back({g.item_id, std::to_string(u->second), std::to_string(acc),
                             g.category});
        by_category[g.category.empty() ? "(none)" : g.category].push_back({u->second, acc});
    }
    if (points.empty()) {
        std::cerr << "empty join between scores, gold labels and runs\n";
        return kExitEmptyJoin;
    }
    const auto fit = uq::fit_linear_calibration(points);
    json out{{"metric_id", metric},
             {"slope", fit.slope},
             {"intercept", fit.intercept},
             {"r_squared", fit.r_squared},
             {"n", fit.n}};
    uq::io::atomic_write(out_path, out.dump(2));

    const fs::path base(out_path);
    const auto stem = (base.parent_path() / base.stem()).string();
    uq::io::write_csv(stem + "_points.csv", {"item_id", "uncertainty", "accuracy", "category"},
                      plot_rows);
    json plot{{"points_csv", fs::path(stem + "_points.csv").filename().string()},
              {"x", {{"column", "uncertainty"}, {"label", metric}}},
              {"y", {{"column", "accuracy"}, {"label", "accuracy vs gold"}, {"range", {0.0, 1.0}}}}};
    uq::io::atomic_write(stem + "_plot.json", plot.dump(2));
    std::vector<std::vector<std::string>> cat_rows;
    for (const auto& [cat, vals] : by_category) {
        double mu = 0.0, ma = 0.0;
        for (const auto& [u, a] : vals) {
            mu += u;
            ma += a;
        }
        const auto n = static_cast<double>(vals.size());
        cat_rows.push_back({cat, std::to_string(vals.size()), std::to_string(mu / n),
                            std::to_string(ma / n)});
    }
    uq::io::write_csv(stem + "_categories.csv",
                      {"category", "n", "mean_uncertainty", "mean_accuracy"}, cat_rows);
    std::cout << "calibration: metric=" << metric << " slope=" << fit.slope
              << " intercept=" << fit.intercept << " r2=" << fit.r_squared << " n=" << fit.n
              << "\n";
    return kExitOk;
}

int cmd_report(const std::string& runs_dir, const std::string& scores_csv,
               const std::string& out_dir, const std::string& config_path) {
    const auto cfg = config_path.empty() ? uq::io::RunConfig{}
                                         : uq::io::RunConfig::load(config_path);
    auto sets = load_runs(runs_dir);
    if (cfg.allow_partial)
        for (auto& [id, set] : sets) set.allow_partial_metrics = true;

    // Cost: the baseline is one (the canonical first) response per item; every
    // further sampled response is UQ overhead.
    long long baseline = 0, total = 0;
    for (const auto& entry : fs::directory_iterator(runs_dir)) {
        if (entry.path().extension() != ".jsonl") continue;
        auto records = uq::io::read_jsonl(entry.path());
        if (records.empty()) continue;
        std::sort(records.begin(), records.end(),
                  [](const uq::io::RunRecord& a, const uq::io::RunRecord& b) {
                      if (a.sample.prompt_variant_id != b.sample.prompt_variant_id)
                          return a.sample.prompt_variant_id < b.sample.prompt_variant_id;
                      return a.sample.repeat_index < b.sample.repeat_index;
                  });
        for (const auto& r : records) total += r.prompt_tokens + r.completion_tokens;
        baseline += records[0].prompt_tokens + records[0].completion_tokens;
    }
    const long long uq_tokens = total - baseline;
    const double ratio =
        static_cast<double>(uq_tokens) / static_cast<double>(std::max<long long>(baseline, 1));
    json cost{{"baseline_tokens", baseline},
              {"uq_tokens", uq_tokens},
              {"overhead_ratio", ratio}};
    uq::io::atomic_write(fs::path(out_dir) / "cost_report.json", cost.dump(2));

    const auto by_metric = load_scores(scores_csv);
    const int agreement =
        std::min<int>(cfg.min_agreement, static_cast<int>(by_metric.size()));
    const auto flagged = uq::flag_high_uncertainty(by_metric, cfg.quantile, agreement);

    auto embedder = make_embedder(cfg);
    json flags = json::array();
    for (const auto& item : flagged) {
        json entry{{"item_id", item}};
        auto it = sets.find(item);
        if (it != sets.end() && it->second.size() >= 2) {
            const auto pair = uq::farthest_pair(it->second, *embedder);
            auto text_of = [&](const std::string& id) -> std::string {
                for (const auto& s : it->second.samples)
                    if (s.sample_id == id) return s.text.substr(0, 400);
                return "";
            };
            entry["farthest_pair"] = {{"sample_a", pair.sample_a},
                                      {"sample_b", pair.sample_b},
                                      {"distance", pair.distance},
                                      {"excerpt_a", text_of(pair.sample_a)},
                                      {"excerpt_b", text_of(pair.sample_b)}};
        }
        flags.push_back(std::move(entry));
    }
    uq::io::atomic_write(fs::path(out_dir) / "flags.json", flags.dump(2));
    std::cout << "cost: baseline=" << baseline << " uq=" << uq_tokens << " ratio=" << ratio
              << "; flagged " << flagged.size() << " item(s)\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Uncertainty quantification for LLM outputs via perturbed sampling"};
    app.require_subcommand(1);

    std::string config_path, variants_path, items_path, out_dir, runs_dir, out_path;
    std::string scores_csv, gold_csv, task_type, validation_level, metric;
    std::vector<std::string> metrics;
    bool logprobs = false, as_json = false;

    auto* sample = app.add_subcommand("sample", "Run the K-of-M x R sampling plan");
    sample->add_option("--config", config_path, "Run configuration JSON")->required();
    sample->add_option("--variants", variants_path, "Prompt variants file")->required();
    sample->add_option("--items", items_path, "Task items JSONL")->required();
    sample->add_option("--out", out_dir, "Output directory for run records")->required();

    auto* score = app.add_subcommand("score", "Compute uncertainty metrics over run records");
    score->add_option("--runs", runs_dir, "Directory of run JSONL files")->required();
    score->add_option("--metrics", metrics, "Metric ids")->required()->delimiter(',');
    score->add_option("--out", out_path, "Output scores CSV")->required();
    score->add_option("--config", config_path, "Run configuration JSON");

    auto* advise = app.add_subcommand("advise", "Recommend metrics for a task/validation pair");
    advise->add_option("task_type", task_type, "T1|T2|T3")->required();
    advise->add_option("validation_level", validation_level, "V0|V1|V2")->required();
    advise->add_flag("--logprobs", logprobs, "Token log-probabilities are available");
    advise->add_flag("--json", as_json, "Machine-readable output");

    auto* calibrate = app.add_subcommand("calibrate", "Regress accuracy on uncertainty");
    calibrate->add_option("--scores", scores_csv, "Scores CSV from `uq score`")->required();
    calibrate->add_option("--gold", gold_csv, "Gold labels CSV")->required();
    calibrate->add_option("--runs", runs_dir, "Directory of run JSONL files")->required();
    calibrate->add_option("--out", out_path, "Output regression JSON")->required();
    calibrate->add_option("--metric", metric, "Uncertainty metric to regress on");

    auto* report = app.add_subcommand("report", "Cost accounting and high-uncertainty flags");
    report->add_option("--runs", runs_dir, "Directory of run JSONL files")->required();
    report->add_option("--scores", scores_csv, "Scores CSV from `uq score`")->required();
    report->add_option("--out", out_dir, "Output directory")->required();
    report->add_option("--config", config_path, "Run configuration JSON");

    try {
        app.parse(argc, argv);
        if (sample->parsed())
            return cmd_sample(config_path, variants_path, items_path, out_dir);
        if (score->parsed()) return cmd_score(runs_dir, metrics, out_path, config_path);
        if (advise->parsed()) return cmd_advise(task_type, validation_level, logprobs, as_json);
        if (calibrate->parsed())
            return cmd_calibrate(scores_csv, gold_csv, runs_dir, out_path, metric);
        if (report->parsed()) return cmd_report(runs_dir, scores_csv, out_dir, config_path);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    } catch (const uq::LogprobsRequiredError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIncompatibleMetric;
    } catch (const uq::ProviderError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitProvider;
    } catch (const uq::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
