#pragma once

// Recovery of a multiset of nonzero complex numbers from its power sums
// (Newton's identities + companion-matrix roots), and the coprime-stride
// tail-matching check used as an independent oracle for multiplicity
// comparison.

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mpsirr/core.hpp"

namespace mpsirr {

// Given p_N = sum_l mu_l^N for N = 1..n with at most n nonzero mu_l, recovers
// the multiset {mu_l}.  Roots of modulus <= tol.zero are dropped (they encode
// "fewer than n values").
inline std::vector<cplx> multiset_from_power_sums(const std::vector<cplx>& p, int n,
                                                  const Config& cfg = default_config()) {
    if (n < 1 || static_cast<int>(p.size()) < n)
        throw InsufficientData("need power sums p_1..p_n");
    // Newton's identities: k e_k = sum_{i=1..k} (-1)^{i-1} e_{k-i} p_i.
    std::vector<cplx> e(n + 1);
    e[0] = 1;
    for (int k = 1; k <= n; ++k) {
        cplx acc = 0;
        double sign = 1;
        for (int i = 1; i <= k; ++i) {
            acc += sign * e[k - i] * p[i - 1];
            sign = -sign;
        }
        e[k] = acc / static_cast<double>(k);
    }
    // Monic polynomial c_0 + c_1 x + ... + c_{n-1} x^{n-1} + x^n with
    // c_{n-k} = (-1)^k e_k; the companion matrix's last column is -c.
    Mat comp = Mat::Zero(n, n);
    for (int k = 1; k < n; ++k) comp(k, k - 1) = 1;
    for (int k = 1; k <= n; ++k) {
        cplx ck = ((k % 2 == 1) ? -1.0 : 1.0) * e[k];  // c_{n-k} = (-1)^k e_k
        comp(n - k, n - 1) = -ck;
    }
    Eigen::ComplexEigenSolver<Mat> es(comp, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw EigensolverFailure("multiset_from_power_sums");
    std::vector<cplx> roots;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
        if (std::abs(es.eigenvalues()(k)) > cfg.tol.zero) roots.push_back(es.eigenvalues()(k));

    // Residual check: the recovered multiset must reproduce the input sums.
    double scale = 0;
    for (int N = 1; N <= n; ++N) scale = std::max(scale, std::abs(p[N - 1]));
    scale = std::max(scale, 1.0);
    for (int N = 1; N <= n; ++N) {
        cplx s = 0;
        for (cplx r : roots) s += std::pow(r, static_cast<double>(N));
        if (std::abs(s - p[N - 1]) > 1e-6 * scale)
            throw IllConditioned("power-sum reconstruction residual too large");
    }
    std::sort(roots.begin(), roots.end(),
              [](cplx a, cplx b) { return cplx_compare(a, b) < 0; });
    return roots;
}

// Multiset equality of complex values within a relative tolerance.
inline bool multiset_equal(std::vector<cplx> a, std::vector<cplx> b, double tol) {
    if (a.size() != b.size()) return false;
    double scale = 1.0;
    for (cplx v : a) scale = std::max(scale, std::abs(v));
    std::vector<bool> used(b.size(), false);
    for (cplx va : a) {
        int best = -1;
        double best_d = 1e300;
        for (std::size_t k = 0; k < b.size(); ++k) {
            if (used[k]) continue;
            double d = std::abs(va - b[k]);
            if (d < best_d) { best_d = d; best = static_cast<int>(k); }
        }
        if (best < 0 || best_d > tol * scale) return false;
        used[best] = true;
    }
    return true;
}

namespace detail {

// Recovers the smallest multiset (size <= max_size) whose power sums
// reproduce the whole table sub[t-1] = p_t, t = 1..T.  Trying sizes from
// zero up avoids the junk near-zero roots a fixed-size recovery would leave
// behind when the true multiset is smaller.
inline std::optional<std::vector<cplx>> recover_from_tail(const std::vector<cplx>& sub,
                                                          int max_size, const Config& cfg) {
    int t_max = static_cast<int>(sub.size());
    double scale = 1.0;
    for (cplx v : sub) scale = std::max(scale, std::abs(v));
    for (int k = 0; k <= std::min(max_size, t_max); ++k) {
        std::vector<cplx> rec;
        if (k > 0) {
            try {
                rec = multiset_from_power_sums(
                    std::vector<cplx>(sub.begin(), sub.begin() + k), k, cfg);
            } catch (const IllConditioned&) {
                continue;
            }
        }
        double worst = 0;
        for (int t = 1; t <= t_max; ++t) {
            cplx s = 0;
            for (cplx r : rec) s += std::pow(r, static_cast<double>(t));
            worst = std::max(worst, std::abs(s - sub[t - 1]));
        }
        if (worst <= 1e-6 * scale) return rec;
    }
    return std::nullopt;
}

}  // namespace detail

// Compares two power-sum tables that start at site count n0.  The tables are
// subsampled along two coprime strides (n0 and n0+1); the multisets recovered
// from each stride must agree on both, which pins the underlying values down
// to genuine equality rather than an aliased root-of-unity match.
inline bool power_sum_tail_match(const std::vector<cplx>& p, const std::vector<cplx>& q,
                                 int n0, int max_size,
                                 const Config& cfg = default_config()) {
    if (n0 < 1) throw InsufficientData("n0 must be >= 1");
    if (p.size() != q.size()) throw InsufficientData("tables must have equal length");
    int len = static_cast<int>(p.size());
    auto subsample = [&](const std::vector<cplx>& t, int stride) {
        std::vector<cplx> s;
        for (int n = 1;; ++n) {
            int idx = stride * n - n0;  // table index of p_{stride*n}
            if (idx < 0) continue;
            if (idx >= len) break;
            s.push_back(t[idx]);
        }
        if (static_cast<int>(s.size()) < max_size)
            throw InsufficientData("table too short for stride " + std::to_string(stride));
        return s;
    };
    for (int stride : {n0, n0 + 1}) {
        auto mp = detail::recover_from_tail(subsample(p, stride), max_size, cfg);
        auto mq = detail::recover_from_tail(subsample(q, stride), max_size, cfg);
        if (!mp || !mq) return false;
        if (!multiset_equal(*mp, *mq, 1e-7)) return false;
    }
    return true;
}

}  // namespace mpsirr
