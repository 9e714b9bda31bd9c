#pragma once

#include <functional>
#include <string>
#include <vector>

#include "uq/core.hpp"
#include "uq/providers.hpp"

// Sample-diversity metrics requiring only response texts plus embedding/NLI
// providers: embedding dispersion, semantic entropy over bidirectional
// entailment clusters, LUQ / LUQ-pair, EigenScore, and the Jaccard/NLI
// spectral metrics over the symmetric normalized Laplacian.

namespace uq {

enum class SimilarityKind { Jaccard, NliEntail, Cosine };

// Symmetric, unit-diagonal, entries in [0,1]; validated before any spectral
// computation.
struct SimilarityMatrix {
    std::vector<std::vector<double>> entries;
    SimilarityKind kind = SimilarityKind::Jaccard;

    std::size_t size() const { return entries.size(); }
    void validate() const;
};

struct ClusterAssignment {
    std::vector<int> cluster_ids;  // ids in [0, k), canonical sample order
    int k = 0;
};

struct FarthestPair {
    std::string sample_a;
    std::string sample_b;
    double distance = 0.0;
};

using SentenceSplitter = std::function<std::vector<std::string>(const std::string&)>;
SentenceSplitter default_sentence_splitter();

// 1 - (1/(n(n-1))) sum_{i != j} x_i . x_j over unit-normalized response
// embeddings.
MetricScore embedding_dispersion(const SampleSet& set, EmbeddingProvider& embedder);
double dispersion_from_embeddings(const std::vector<EmbeddingVector>& xs);

// Greedy clustering in canonical sample order: a response joins the first
// cluster whose representative (first member) it bidirectionally entails.
ClusterAssignment cluster_by_bidirectional_entailment(const SampleSet& set, NliProvider& nli);

// Normalized cluster entropy: -sum P(c_i) ln P(c_i) / ln k with
// P(c_i) = |c_i|/N; defined as 0 for k = 1. Diagnostics carry k and cluster
// sizes.
MetricScore semantic_entropy(const SampleSet& set, NliProvider& nli);

// Asymmetric sentence-vs-response consistency. C(r_i) is the mean over k != i
// of the mean over sentences s_j of P(entail | s_j, r_k); the score is the
// mean of 1 - C(r_i).
MetricScore luq(const SampleSet& set, NliProvider& nli,
                const SentenceSplitter& splitter = default_sentence_splitter());

// Symmetric sentence-to-sentence variant: per response pair, the
// top_fraction best-matching sentence pairs by cosine distance are scored
// with the symmetric entailment probability and averaged; Cons(r_i) is the
// mean over partners. Aggregation choice is recorded in diagnostics.
MetricScore luq_pair(const SampleSet& set, EmbeddingProvider& embedder, double top_fraction,
                     NliProvider& nli,
                     const SentenceSplitter& splitter = default_sentence_splitter());

// (1/K) ln det((JZ)(JZ)^T + alpha I) with row-centering J = I - (1/K)11^T,
// via Cholesky with an eigenvalue-sum fallback.
MetricScore eigenscore(const SampleSet& set, EmbeddingProvider& embedder, double alpha = 1e-3);
double eigenscore_from_embeddings(const std::vector<EmbeddingVector>& xs, double alpha);

// Jaccard: a_ij = |T_i cap T_j| / |T_i cup T_j| over lowercased token sets.
// NliEntail: a_ij = (P(entail|r_i,r_j) + P(entail|r_j,r_i)) / 2. Diagonal
// forced to 1, symmetrized.
SimilarityMatrix similarity_matrix(const SampleSet& set, SimilarityKind kind,
                                   NliProvider* nli = nullptr);
SimilarityMatrix jaccard_similarity(const std::vector<std::string>& texts);
SimilarityMatrix nli_similarity(const std::vector<std::string>& texts, NliProvider& nli);

// sum_k max(0, 1 - lambda_k) over the spectrum of L = I - D^{-1/2} W D^{-1/2};
// a continuous proxy for the number of semantic clusters. Diagnostics carry
// the spectrum as "lambda.<k>".
MetricScore eigval_laplacian(const SimilarityMatrix& sim);

// Embeds responses with the eigenvectors of L whose eigenvalues are below
// eig_threshold, centers them, and returns the L2 norm of the concatenated
// offsets; per_sample carries each response's distance to the centroid.
MetricScore eccentricity(const SimilarityMatrix& sim, double eig_threshold = 0.9);

// Argmax cosine-distance pair; ties resolved toward the lexicographically
// smallest (id_a, id_b) with id_a < id_b.
FarthestPair farthest_pair(const SampleSet& set, EmbeddingProvider& embedder);

}  // namespace uq
