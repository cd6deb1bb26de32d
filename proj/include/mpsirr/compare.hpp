#pragma once

// Deciding proportionality/equality of the state families generated by two
// tensors, and constructing the gauge witnesses (Z, Y).

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "mpsirr/core.hpp"
#include "mpsirr/decompose.hpp"
#include "mpsirr/power_sums.hpp"
#include "mpsirr/tensor.hpp"

namespace mpsirr {

struct MatchedPair {
    int a_index = 0;  // block index in decompose(A)
    int b_index = 0;  // block index in decompose(B)
    double xi = 0;    // A_j^i = e^{i xi} Y B_k^i Y^{-1}
    Mat y;
};

struct BasisMatching {
    BlockDecomposition dec_a;
    BlockDecomposition dec_b;
    std::vector<MatchedPair> pairs;
};

// Necessary condition for family proportionality: the two bases of periodic
// blocks are equivalent, block by block.
inline std::optional<BasisMatching> compare_proportional(const MpsTensor& a, const MpsTensor& b,
                                                         const Config& cfg = default_config()) {
    BasisMatching out{decompose(a, cfg), decompose(b, cfg), {}};
    if (out.dec_a.basis.size() != out.dec_b.basis.size()) return std::nullopt;
    std::vector<bool> used(out.dec_b.basis.size(), false);
    for (std::size_t j = 0; j < out.dec_a.basis.size(); ++j) {
        bool matched = false;
        for (std::size_t k = 0; k < out.dec_b.basis.size() && !matched; ++k) {
            if (used[k]) continue;
            auto eq = find_block_equivalence(out.dec_a.basis[j], out.dec_b.basis[k], cfg);
            if (eq) {
                used[k] = true;
                matched = true;
                out.pairs.push_back(MatchedPair{static_cast<int>(j), static_cast<int>(k),
                                                eq->xi, eq->y});
            }
        }
        if (!matched) return std::nullopt;
    }
    return out;
}

struct GaugeRelation {
    BasisMatching matching;
    Mat y;                    // invertible, maps dec_b's assembled basis to dec_a's
    Vec z_diag;               // diagonal of Z on dec_a's assembled basis
    std::vector<std::vector<int>> permutations;  // per A-block copy alignment
    double relation_residual = 0;   // max_i |Z A^i - Y B^i Y^{-1}|
    double commutator_residual = 0; // max_i |[Z, A^i]|
    double phase_residual = 0;      // max |z^{m_j} - 1|
    double state_residual = 0;      // max_N relative state mismatch (original inputs)
    int verified_n = 0;
};

namespace detail {

// Greedy nearest multiset matching; returns the permutation pi with
// a[l] ~ b[pi[l]] or nullopt if some pair exceeds the tolerance.
inline std::optional<std::vector<int>> match_multisets(const std::vector<cplx>& a,
                                                       const std::vector<cplx>& b, double tol) {
    if (a.size() != b.size()) return std::nullopt;
    double scale = 1.0;
    for (cplx v : a) scale = std::max(scale, std::abs(v));
    std::vector<int> pi(a.size(), -1);
    std::vector<bool> used(b.size(), false);
    for (std::size_t l = 0; l < a.size(); ++l) {
        int best = -1;
        double best_d = 1e300;
        for (std::size_t k = 0; k < b.size(); ++k) {
            if (used[k]) continue;
            double d = std::abs(a[l] - b[k]);
            if (d < best_d) { best_d = d; best = static_cast<int>(k); }
        }
        if (best < 0 || best_d > tol * scale) return std::nullopt;
        used[best] = true;
        pi[l] = best;
    }
    return pi;
}

}  // namespace detail

// Full equal-case witness construction.  Returns nullopt when the necessary
// conditions fail (no basis matching, or multiplicity multisets differ);
// throws InconsistentWitness when a constructed witness fails the direct
// state check.
inline std::optional<GaugeRelation> compare_equal(const MpsTensor& a, const MpsTensor& b,
                                                  const Config& cfg = default_config()) {
    auto matching = compare_proportional(a, b, cfg);
    if (!matching) return std::nullopt;

    GaugeRelation out;
    out.matching = std::move(*matching);
    const BlockDecomposition& da = out.matching.dec_a;
    const BlockDecomposition& db = out.matching.dec_b;

    // Per matched block: the m-th powers of the multiplicities must agree as
    // multisets (after folding the matching phase), and each ratio must be an
    // m-th root of unity.
    struct BlockAlign { std::vector<int> pi; std::vector<cplx> z; };
    std::vector<BlockAlign> aligns(da.basis.size());
    for (const MatchedPair& pair : out.matching.pairs) {
        int j = pair.a_index, k = pair.b_index;
        int m = da.basis[j].period;
        const auto& mu = da.multiplicities[j];
        std::vector<cplx> nu = db.multiplicities[k];
        cplx fold = std::polar(1.0, -pair.xi);
        for (cplx& v : nu) v *= fold;
        if (mu.size() != nu.size()) return std::nullopt;
        std::vector<cplx> mu_m(mu.size()), nu_m(nu.size());
        for (std::size_t l = 0; l < mu.size(); ++l) {
            mu_m[l] = std::pow(mu[l], static_cast<double>(m));
            nu_m[l] = std::pow(nu[l], static_cast<double>(m));
        }
        auto pi = detail::match_multisets(mu_m, nu_m, cfg.tol.mult);
        if (!pi) return std::nullopt;
        BlockAlign al;
        al.pi = *pi;
        for (std::size_t l = 0; l < mu.size(); ++l) {
            cplx z = nu[(*pi)[l]] / mu[l];
            double root_err = std::abs(std::pow(z, static_cast<double>(m)) - cplx(1, 0));
            out.phase_residual = std::max(out.phase_residual, root_err);
            if (root_err > cfg.tol.mult) return std::nullopt;
            // Snap to the exact root of unity.
            int best_l = 0;
            double best_d = 1e300;
            for (int r = 0; r < m; ++r) {
                double dd = std::abs(z - std::polar(1.0, 2.0 * kPi * r / m));
                if (dd < best_d) { best_d = dd; best_l = r; }
            }
            al.z.push_back(std::polar(1.0, 2.0 * kPi * best_l / m));
        }
        aligns[j] = std::move(al);
    }

    // Assemble Z and Y on the decomposed bases.
    int D = da.assembled_dim();
    out.z_diag = Vec(D);
    out.y = Mat::Zero(D, D);
    // Slot offsets per (block, copy) on both sides.
    auto offsets = [](const BlockDecomposition& dec) {
        std::vector<std::vector<int>> off(dec.basis.size());
        int o = 0;
        for (std::size_t j = 0; j < dec.basis.size(); ++j)
            for (std::size_t l = 0; l < dec.multiplicities[j].size(); ++l) {
                off[j].push_back(o);
                o += dec.basis[j].dim();
            }
        return off;
    };
    auto off_a = offsets(da), off_b = offsets(db);
    out.permutations.resize(da.basis.size());
    for (const MatchedPair& pair : out.matching.pairs) {
        int j = pair.a_index, k = pair.b_index, dj = da.basis[j].dim();
        const BlockAlign& al = aligns[j];
        out.permutations[j] = al.pi;
        for (std::size_t l = 0; l < al.z.size(); ++l) {
            for (int t = 0; t < dj; ++t) out.z_diag(off_a[j][l] + t) = al.z[l];
            out.y.block(off_a[j][l], off_b[k][al.pi[l]], dj, dj) = pair.y;
        }
    }

    // Verify the gauge relation Z A^i = Y B^i Y^{-1} on the assembled tensors.
    MpsTensor asm_a = assemble(da), asm_b = assemble(db);
    Mat y_inv = out.y.inverse();
    Mat z = out.z_diag.asDiagonal();
    for (int i = 0; i < asm_a.d; ++i) {
        out.relation_residual = std::max(
            out.relation_residual, (z * asm_a.mats[i] - out.y * asm_b.mats[i] * y_inv).norm());
        out.commutator_residual = std::max(
            out.commutator_residual, (z * asm_a.mats[i] - asm_a.mats[i] * z).norm());
    }

    // Direct state verification on the original inputs, for every checkable N.
    for (int N = 1; N <= cfg.n_check; ++N) {
        if (pow_capped(a.d, N, cfg.amplitude_cap) > cfg.amplitude_cap) break;
        Vec va = contract_state(a, N, cfg).amplitudes;
        Vec vb = contract_state(b, N, cfg).amplitudes;
        // Floor at the natural magnitude max_norm^N: periodic blocks give an
        // exactly vanishing state whenever N is off-period, and the relative
        // mismatch of two such numerical zeros is meaningless.
        double floor = std::pow(std::max({a.max_norm(), b.max_norm(), 1e-300}), N);
        double rel = (va - vb).norm() / std::max({va.norm(), vb.norm(), floor});
        out.state_residual = std::max(out.state_residual, rel);
        out.verified_n = N;
    }
    if (out.state_residual > cfg.tol.witness ||
        out.relation_residual > cfg.tol.witness * std::max(1.0, asm_a.max_norm()))
        throw InconsistentWitness("witness constructed but verification failed (state residual " +
                                  std::to_string(out.state_residual) + ")");
    return out;
}

// Natural-basis variant: expresses the equal-case witness in the inputs' own
// bond bases.  Requires both inputs to be genuinely similar to their
// assembled decompositions (decompose found an exact gauge), as is the case
// for tensors already in irreducible form II.
struct NaturalGaugeRelation {
    GaugeRelation assembled;
    Mat z;  // on A's bond space: Z A^i = U C^i U^{-1}
    Mat u;
};

inline std::optional<NaturalGaugeRelation> compare_equal_natural(
    const MpsTensor& a, const MpsTensor& c, const Config& cfg = default_config()) {
    auto rel = compare_equal(a, c, cfg);
    if (!rel) return std::nullopt;
    const auto& ga = rel->matching.dec_a.exact_gauge;
    const auto& gc = rel->matching.dec_b.exact_gauge;
    if (!ga || !gc)
        throw GaugeFailure("inputs are not similar to their assembled decompositions");
    NaturalGaugeRelation out;
    out.z = (*ga) * Mat(rel->z_diag.asDiagonal()) * ga->inverse();
    out.u = (*ga) * rel->y * gc->inverse();
    out.assembled = std::move(*rel);
    return out;
}

}  // namespace mpsirr
