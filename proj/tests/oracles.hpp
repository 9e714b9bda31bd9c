#pragma once

// Independent brute-force reference implementations used to cross-check the
// library. Deliberately naive: direct loops, cyclic Jacobi eigensolver,
// Gaussian-elimination determinant. No Eigen, no shared code paths with src/.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline double entropy(const std::vector<double>& probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

// Answer-distribution entropy from (answer, p) pairs.
inline double token_entropy(const std::vector<std::pair<std::string, double>>& draws) {
    std::map<std::string, double> mass;
    double total = 0.0;
    for (const auto& [a, p] : draws) {
        mass[a] += p;
        total += p;
    }
    std::vector<double> probs;
    for (const auto& [a, m] : mass) probs.push_back(m / total);
    return entropy(probs);
}

inline double brier(const std::vector<std::vector<double>>& per_response_probs) {
    double outer = 0.0;
    for (const auto& ps : per_response_probs) {
        double inner = 0.0;
        for (double p : ps) inner += (1.0 - p) * (1.0 - p);
        outer += inner / static_cast<double>(ps.size());
    }
    return outer / static_cast<double>(per_response_probs.size());
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline std::vector<double> unit(std::vector<double> v) {
    const double n = std::sqrt(dot(v, v));
    for (double& x : v) x /= n;
    return v;
}

inline double dispersion(const std::vector<std::vector<double>>& xs) {
    const std::size_t n = xs.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) s += dot(xs[i], xs[j]);
    return 1.0 - s / static_cast<double>(n * (n - 1));
}

inline double semantic_entropy(const std::vector<int>& cluster_sizes) {
    const std::size_t k = cluster_sizes.size();
    if (k <= 1) return 0.0;
    int n = 0;
    for (int c : cluster_sizes) n += c;
    double h = 0.0;
    for (int c : cluster_sizes) {
        const double p = static_cast<double>(c) / n;
        if (p > 0.0) h -= p * std::log(p);
    }
    return h / std::log(static_cast<double>(k));
}

// Determinant by Gaussian elimination with partial pivoting.
inline double det(Matrix a) {
    const std::size_t n = a.size();
    double d = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t pivot = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(a[r][c]) > std::fabs(a[pivot][c])) pivot = r;
        if (a[pivot][c] == 0.0) return 0.0;
        if (pivot != c) {
            std::swap(a[pivot], a[c]);
            d = -d;
        }
        d *= a[c][c];
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
        }
    }
    return d;
}

// (1/K) ln det of the regularized centered Gram matrix.
inline double eigenscore(const std::vector<std::vector<double>>& xs, double alpha) {
    const std::size_t k = xs.size(), d0 = xs[0].size();
    std::vector<double> mean(d0, 0.0);
    for (const auto& x : xs)
        for (std::size_t j = 0; j < d0; ++j) mean[j] += x[j] / static_cast<double>(k);
    std::vector<std::vector<double>> c = xs;
    for (auto& x : c)
        for (std::size_t j = 0; j < d0; ++j) x[j] -= mean[j];
    Matrix g(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) g[i][j] = dot(c[i], c[j]) + (i == j ? alpha : 0.0);
    return std::log(det(g)) / static_cast<double>(k);
}

// Cyclic Jacobi eigensolver for symmetric matrices; returns (eigenvalues,
// eigenvectors as columns), both unordered.
inline std::pair<std::vector<double>, Matrix> jacobi(Matrix a) {
    const std::size_t n = a.size();
    Matrix v(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<double> evals(n);
    for (std::size_t i = 0; i < n; ++i) evals[i] = a[i][i];
    return {evals, v};
}

// L = I - D^{-1/2} W D^{-1/2}.
inline Matrix laplacian(const Matrix& w) {
    const std::size_t n = w.size();
    std::vector<double> dsqrt(n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (double x : w[i]) deg += x;
        dsqrt[i] = 1.0 / std::sqrt(deg);
    }
    Matrix l(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            l[i][j] = (i == j ? 1.0 : 0.0) - dsqrt[i] * w[i][j] * dsqrt[j];
    return l;
}

inline double eigval_laplacian_score(const Matrix& w) {
    auto [evals, vecs] = jacobi(laplacian(w));
    double s = 0.0;
    for (double l : evals) s += std::max(0.0, 1.0 - l);
    return s;
}

inline double eccentricity_score(const Matrix& w, double threshold) {
    auto [evals, vecs] = jacobi(laplacian(w));
    const std::size_t n = w.size();
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < n; ++k)
        if (evals[k] < threshold) keep.push_back(k);
    // coords[i] = row i of the kept eigenvector block, centered per dimension.
    double frob = 0.0;
    for (std::size_t k : keep) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += vecs[i][k] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double c = vecs[i][k] - mean;
            frob += c * c;
        }
    }
    return std::sqrt(frob);
}

// Independent lowercase-alnum tokenizer for Jaccard cross-checks.
inline std::vector<std::string> tokens(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline double jaccard(const std::string& a, const std::string& b) {
    auto ta = tokens(a), tb = tokens(b);
    std::sort(ta.begin(), ta.end());
    ta.erase(std::unique(ta.begin(), ta.end()), ta.end());
    std::sort(tb.begin(), tb.end());
    tb.erase(std::unique(tb.begin(), tb.end()), tb.end());
    std::vector<std::string> inter, uni;
    std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(inter));
    std::set_union(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(uni));
    return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

struct Ols {
    double slope, intercept, r_squared;
};

inline Ols ols(const std::vector<std::pair<double, double>>& xy) {
    const double n = static_cast<double>(xy.size());
    double sx = 0, sy = 0;
    for (const auto& [x, y] : xy) {
        sx += x;
        sy += y;
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (const auto& [x, y] : xy) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    const double b = sxy / sxx, a = my - b * mx;
    double ss_res = 0, ss_tot = 0;
    for (const auto& [x, y] : xy) {
        ss_res += (y - a - b * x) * (y - a - b * x);
        ss_tot += (y - my) * (y - my);
    }
    return {b, a, ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot};
}

}  // namespace oracle
