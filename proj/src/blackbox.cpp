#include "uq/blackbox.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "uq/text.hpp"

namespace uq {

namespace {

// Samples in canonical order: sorted by (prompt_variant_id, repeat_index).
std::vector<const ResponseSample*> canonical_order(const SampleSet& set) {
    std::vector<const ResponseSample*> out;
    out.reserve(set.samples.size());
    for (const auto& s : set.samples) out.push_back(&s);
    std::sort(out.begin(), out.end(), [](const ResponseSample* a, const ResponseSample* b) {
        if (a->prompt_variant_id != b->prompt_variant_id)
            return a->prompt_variant_id < b->prompt_variant_id;
        return a->repeat_index < b->repeat_index;
    });
    return out;
}

std::vector<std::string> canonical_texts(const SampleSet& set) {
    std::vector<std::string> texts;
    for (const auto* s : canonical_order(set)) texts.push_back(s->text);
    return texts;
}

void require_n(const SampleSet& set, std::size_t n, const char* op) {
    if (set.size() < n)
        throw InsufficientSamplesError(std::string(op) + " needs at least " +
                                       std::to_string(n) + " samples, got " +
                                       std::to_string(set.size()));
}

Eigen::MatrixXd to_eigen(const SimilarityMatrix& sim) {
    const auto m = static_cast<Eigen::Index>(sim.size());
    Eigen::MatrixXd w(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            w(i, j) = sim.entries[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return w;
}

Eigen::MatrixXd normalized_laplacian(const SimilarityMatrix& sim) {
    const Eigen::MatrixXd w = to_eigen(sim);
    const auto m = w.rows();
    Eigen::VectorXd d = w.rowwise().sum();
    for (Eigen::Index i = 0; i < m; ++i) {
        if (d(i) <= 0.0) throw DegenerateInputError("zero row sum in similarity graph");
    }
    const Eigen::VectorXd dinv = d.array().rsqrt();
    return Eigen::MatrixXd::Identity(m, m) - dinv.asDiagonal() * w * dinv.asDiagonal();
}

bool entails(const NliJudgment& j) { return j.label == NliLabel::Entailment; }

}  // namespace

void SimilarityMatrix::validate() const {
    const std::size_t m = entries.size();
    if (m < 2) throw InvalidInputError("similarity matrix needs m >= 2");
    for (std::size_t i = 0; i < m; ++i) {
        if (entries[i].size() != m) throw InvalidInputError("similarity matrix not square");
        if (std::abs(entries[i][i] - 1.0) > 1e-9)
            throw InvalidInputError("similarity matrix diagonal must be 1");
        for (std::size_t j = 0; j < m; ++j) {
            const double a = entries[i][j];
            if (!(a >= 0.0 && a <= 1.0))
                throw InvalidInputError("similarity entries must lie in [0, 1]");
            if (std::abs(a - entries[j][i]) > 1e-9)
                throw InvalidInputError("similarity matrix must be symmetric");
        }
    }
}

SentenceSplitter default_sentence_splitter() {
    return [](const std::string& s) { return text::split_sentences(s); };
}

double dispersion_from_embeddings(const std::vector<EmbeddingVector>& xs) {
    const std::size_t n = xs.size();
    if (n < 2) throw InsufficientSamplesError("dispersion needs at least 2 embeddings");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) sum += cosine_similarity(xs[i], xs[j]);
    return 1.0 - sum / static_cast<double>(n * (n - 1));
}

MetricScore embedding_dispersion(const SampleSet& set, EmbeddingProvider& embedder) {
    detail::require_complete(set);
    require_n(set, 2, "embedding_dispersion");
    const auto xs = embedder.embed_batch(canonical_texts(set));
    MetricScore score("embedding", dispersion_from_embeddings(xs));
    score.diagnostics["n"] = static_cast<double>(xs.size());
    return score;
}

ClusterAssignment cluster_by_bidirectional_entailment(const SampleSet& set, NliProvider& nli) {
    detail::require_complete(set);
    require_n(set, 1, "clustering");
    const auto order = canonical_order(set);
    ClusterAssignment out;
    out.cluster_ids.resize(order.size());
    std::vector<std::string> representatives;  // first member per cluster
    for (std::size_t i = 0; i < order.size(); ++i) {
        const std::string& txt = order[i]->text;
        int assigned = -1;
        for (std::size_t c = 0; c < representatives.size(); ++c) {
            if (entails(nli.nli_judge(txt, representatives[c])) &&
                entails(nli.nli_judge(representatives[c], txt))) {
                assigned = static_cast<int>(c);
                break;
            }
        }
        if (assigned < 0) {
            assigned = static_cast<int>(representatives.size());
            representatives.push_back(txt);
        }
        out.cluster_ids[i] = assigned;
    }
    out.k = static_cast<int>(representatives.size());
    return out;
}

MetricScore semantic_entropy(const SampleSet& set, NliProvider& nli) {
    const auto clusters = cluster_by_bidirectional_entailment(set, nli);
    const auto n = static_cast<double>(clusters.cluster_ids.size());
    std::vector<int> sizes(static_cast<std::size_t>(clusters.k), 0);
    for (int id : clusters.cluster_ids) ++sizes[static_cast<std::size_t>(id)];
    MetricScore score("semantic_entropy", 0.0);
    score.diagnostics["k"] = static_cast<double>(clusters.k);
    for (std::size_t c = 0; c < sizes.size(); ++c)
        score.diagnostics["cluster_size." + std::to_string(c)] = sizes[c];
    if (clusters.k >= 2) {
        double h = 0.0;
        for (int sz : sizes) {
            const double p = static_cast<double>(sz) / n;
            h -= p * std::log(p);
        }
        score.value = h / std::log(static_cast<double>(clusters.k));
    }
    // k = 1 stays at 0: a single semantic cluster carries no uncertainty.
    return score;
}

MetricScore luq(const SampleSet& set, NliProvider& nli, const SentenceSplitter& splitter) {
    detail::require_complete(set);
    require_n(set, 2, "luq");
    const auto order = canonical_order(set);
    const std::size_t n = order.size();
    std::vector<std::vector<std::string>> sentences(n);
    for (std::size_t i = 0; i < n; ++i) {
        sentences[i] = splitter(order[i]->text);
        if (sentences[i].empty())
            throw InvalidInputError("response " + order[i]->sample_id +
                                    " is empty after sentence splitting");
    }
    MetricScore score("luq", 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double consistency = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == i) continue;
            double per_sentence = 0.0;
            for (const auto& sj : sentences[i]) {
                // Does the other full response support this sentence?
                per_sentence += nli.nli_judge(order[k]->text, sj).entail_probability();
            }
            consistency += per_sentence / static_cast<double>(sentences[i].size());
        }
        consistency /= static_cast<double>(n - 1);
        const double u = 1.0 - consistency;
        score.per_sample[order[i]->sample_id] = u;
        total += u;
    }
    score.value = total / static_cast<double>(n);
    return score;
}

MetricScore luq_pair(const SampleSet& set, EmbeddingProvider& embedder, double top_fraction,
                     NliProvider& nli, const SentenceSplitter& splitter) {
    detail::require_complete(set);
    require_n(set, 2, "luq_pair");
    if (!(top_fraction > 0.0 && top_fraction <= 1.0))
        throw InvalidInputError("top_fraction must be in (0, 1]");
    const auto order = canonical_order(set);
    const std::size_t n = order.size();
    std::vector<std::vector<std::string>> sentences(n);
    std::vector<std::vector<EmbeddingVector>> embs(n);
    for (std::size_t i = 0; i < n; ++i) {
        sentences[i] = splitter(order[i]->text);
        if (sentences[i].empty())
            throw InvalidInputError("response " + order[i]->sample_id +
                                    " is empty after sentence splitting");
        embs[i] = embedder.embed_batch(sentences[i]);
    }
    // Consistency per unordered response pair: mean symmetric entailment
    // probability over the top_fraction closest sentence pairs.
    std::vector<std::vector<double>> pair_cons(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            struct Cand {
                double dist;
                std::size_t a, b;
            };
            std::vector<Cand> cands;
            for (std::size_t a = 0; a < sentences[i].size(); ++a)
                for (std::size_t b = 0; b < sentences[j].size(); ++b)
                    cands.push_back({1.0 - cosine_similarity(embs[i][a], embs[j][b]), a, b});
            std::stable_sort(cands.begin(), cands.end(),
                             [](const Cand& x, const Cand& y) { return x.dist < y.dist; });
            const auto n_sel = std::max<std::size_t>(
                1, static_cast<std::size_t>(
                       std::ceil(top_fraction * static_cast<double>(cands.size()))));
            double cons = 0.0;
            for (std::size_t s = 0; s < n_sel; ++s) {
                const auto& c = cands[s];
                const double pe =
                    nli.nli_judge(sentences[i][c.a], sentences[j][c.b]).entail_probability();
                const double pe_rev =
                    nli.nli_judge(sentences[j][c.b], sentences[i][c.a]).entail_probability();
                cons += 0.5 * (pe + pe_rev);
            }
            cons /= static_cast<double>(n_sel);
            pair_cons[i][j] = pair_cons[j][i] = cons;
        }
    }
    MetricScore score("luq_pair", 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double cons_i = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) cons_i += pair_cons[i][j];
        cons_i /= static_cast<double>(n - 1);
        score.per_sample[order[i]->sample_id] = 1.0 - cons_i;
        total += 1.0 - cons_i;
    }
    score.value = total / static_cast<double>(n);
    score.diagnostics["top_fraction"] = top_fraction;
    // Cons(r_i) aggregates as the mean over selected pairs, then over partners.
    score.diagnostics["aggregation.mean_over_selected_pairs"] = 1.0;
    return score;
}

double eigenscore_from_embeddings(const std::vector<EmbeddingVector>& xs, double alpha) {
    const auto k = static_cast<Eigen::Index>(xs.size());
    if (k < 2) throw InsufficientSamplesError("eigenscore needs at least 2 embeddings");
    if (!(alpha > 0.0)) throw InvalidInputError("alpha must be positive");
    const auto d = static_cast<Eigen::Index>(xs[0].values.size());
    Eigen::MatrixXd z(k, d);
    for (Eigen::Index i = 0; i < k; ++i) {
        if (static_cast<Eigen::Index>(xs[static_cast<std::size_t>(i)].values.size()) != d)
            throw InvalidInputError("embedding dimension mismatch");
        for (Eigen::Index j = 0; j < d; ++j) {
            const double v = xs[static_cast<std::size_t>(i)].values[static_cast<std::size_t>(j)];
            if (!std::isfinite(v)) throw InvalidInputError("non-finite embedding value");
            z(i, j) = v;
        }
    }
    const Eigen::MatrixXd centered = z.rowwise() - z.colwise().mean();
    const Eigen::MatrixXd gram = centered * centered.transpose();
    const Eigen::MatrixXd g =
        gram + alpha * Eigen::MatrixXd::Identity(k, k);
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() == Eigen::Success) {
        const Eigen::MatrixXd l = llt.matrixL();
        double logdet = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) logdet += 2.0 * std::log(l(i, i));
        return logdet / static_cast<double>(k);
    }
    // Cholesky can fail near singularity; fall back to the spectrum of the
    // unregularized Gram matrix.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < k; ++i)
        logdet += std::log(std::max(es.eigenvalues()(i), 0.0) + alpha);
    return logdet / static_cast<double>(k);
}

MetricScore eigenscore(const SampleSet& set, EmbeddingProvider& embedder, double alpha) {
    detail::require_complete(set);
    require_n(set, 2, "eigenscore");
    const auto xs = embedder.embed_batch(canonical_texts(set));
    MetricScore score("eigenscore", eigenscore_from_embeddings(xs, alpha));
    score.diagnostics["alpha"] = alpha;
    score.diagnostics["k"] = static_cast<double>(xs.size());
    return score;
}

SimilarityMatrix jaccard_similarity(const std::vector<std::string>& texts) {
    const std::size_t m = texts.size();
    if (m < 2) throw InsufficientSamplesError("similarity matrix needs at least 2 texts");
    std::vector<std::set<std::string>> tok(m);
    for (std::size_t i = 0; i < m; ++i) {
        tok[i] = text::token_set(texts[i]);
        if (tok[i].empty())
            throw InvalidInputError("response " + std::to_string(i) +
                                    " has an empty token set");
    }
    SimilarityMatrix sim;
    sim.kind = SimilarityKind::Jaccard;
    sim.entries.assign(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        sim.entries[i][i] = 1.0;
        for (std::size_t j = i + 1; j < m; ++j) {
            std::size_t inter = 0;
            for (const auto& t : tok[i]) inter += tok[j].count(t);
            const std::size_t uni = tok[i].size() + tok[j].size() - inter;
            const double a = static_cast<double>(inter) / static_cast<double>(uni);
            sim.entries[i][j] = sim.entries[j][i] = a;
        }
    }
    return sim;
}

SimilarityMatrix nli_similarity(const std::vector<std::string>& texts, NliProvider& nli) {
    const std::size_t m = texts.size();
    if (m < 2) throw InsufficientSamplesError("similarity matrix needs at least 2 texts");
    SimilarityMatrix sim;
    sim.kind = SimilarityKind::NliEntail;
    sim.entries.assign(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        sim.entries[i][i] = 1.0;
        for (std::size_t j = i + 1; j < m; ++j) {
            const double pij = nli.nli_judge(texts[i], texts[j]).entail_probability();
            const double pji = nli.nli_judge(texts[j], texts[i]).entail_probability();
            const double a = 0.5 * (pij + pji);
            sim.entries[i][j] = sim.entries[j][i] = a;
        }
    }
    return sim;
}

SimilarityMatrix similarity_matrix(const SampleSet& set, SimilarityKind kind, NliProvider* nli) {
    detail::require_complete(set);
    require_n(set, 2, "similarity_matrix");
    const auto texts = canonical_texts(set);
    switch (kind) {
        case SimilarityKind::Jaccard: return jaccard_similarity(texts);
        case SimilarityKind::NliEntail:
            if (!nli) throw InvalidInputError("NLI similarity needs an NLI provider");
            return nli_similarity(texts, *nli);
        case SimilarityKind::Cosine: break;
    }
    throw InvalidInputError("unsupported similarity kind for sample sets");
}

MetricScore eigval_laplacian(const SimilarityMatrix& sim) {
    sim.validate();
    const Eigen::MatrixXd lap = normalized_laplacian(sim);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
    if (es.info() != Eigen::Success) throw DegenerateInputError("eigensolve failed");
    MetricScore score(sim.kind == SimilarityKind::NliEntail ? "eigval_laplacian_nli"
                      : sim.kind == SimilarityKind::Cosine  ? "eigval_laplacian_cosine"
                                                            : "eigval_laplacian_jaccard",
                      0.0);
    double total = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double lambda = es.eigenvalues()(i);
        total += std::max(0.0, 1.0 - lambda);
        score.diagnostics["lambda." + std::to_string(i)] = lambda;
    }
    score.value = total;
    return score;
}

MetricScore eccentricity(const SimilarityMatrix& sim, double eig_threshold) {
    sim.validate();
    const Eigen::MatrixXd lap = normalized_laplacian(sim);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
    if (es.info() != Eigen::Success) throw DegenerateInputError("eigensolve failed");
    const auto m = lap.rows();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < m; ++i)
        if (es.eigenvalues()(i) < eig_threshold) keep.push_back(i);
    MetricScore score(sim.kind == SimilarityKind::NliEntail ? "eccentricity_nli"
                      : sim.kind == SimilarityKind::Cosine  ? "eccentricity_cosine"
                                                            : "eccentricity_jaccard",
                      0.0);
    score.diagnostics["informative_dims"] = static_cast<double>(keep.size());
    if (keep.empty()) return score;  // no informative directions -> zero offsets
    Eigen::MatrixXd v(m, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
        v.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]);
    const Eigen::MatrixXd centered = v.rowwise() - v.colwise().mean();
    double sq = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double dist = centered.row(i).norm();
        score.per_sample[std::to_string(i)] = dist;
        sq += dist * dist;
    }
    score.value = std::sqrt(sq);
    return score;
}

FarthestPair farthest_pair(const SampleSet& set, EmbeddingProvider& embedder) {
    detail::require_complete(set);
    require_n(set, 2, "farthest_pair");
    const auto order = canonical_order(set);
    std::vector<std::string> texts;
    for (const auto* s : order) texts.push_back(s->text);
    const auto xs = embedder.embed_batch(texts);
    FarthestPair best;
    bool have = false;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = i + 1; j < xs.size(); ++j) {
            const double dist = 1.0 - cosine_similarity(xs[i], xs[j]);
            auto a = order[i]->sample_id;
            auto b = order[j]->sample_id;
            if (b < a) std::swap(a, b);
            if (!have || dist > best.distance ||
                (dist == best.distance && std::pair(a, b) < std::pair(best.sample_a, best.sample_b))) {
                best = {a, b, dist};
                have = true;
            }
        }
    }
    return best;
}

}  // namespace uq
