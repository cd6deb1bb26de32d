#pragma once

// Decomposition of an arbitrary tensor into a basis of periodic blocks with
// multiplicities, detection of repeated blocks, and reassembly.

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mpsirr/core.hpp"
#include "mpsirr/spectral.hpp"
#include "mpsirr/tensor.hpp"

namespace mpsirr {

// One irreducible block, stored in form II with spectral radius 1.
struct PeriodicBlock {
    MpsTensor tensor;
    int period = 1;
    PeriodStructure structure;
    int dim() const { return tensor.D; }
};

struct BlockEquivalence {
    double xi = 0;  // phase
    Mat y;          // unitary with P^i = e^{i xi} Y Q^i Y^{-1}
    double residual = 0;
};

// Detects repeated blocks: P^i = e^{i xi} Y Q^i Y^{-1}.  Both blocks must be
// trace-preserving (form II), which forces Y unitary.  The witness comes from
// the top eigenvector of the mixed operator sum_i P^i (x) conj(Q^i) and is
// always verified against the relation itself.
inline std::optional<BlockEquivalence> find_block_equivalence(
    const PeriodicBlock& p, const PeriodicBlock& q, const Config& cfg = default_config()) {
    if (p.dim() != q.dim() || p.period != q.period) return std::nullopt;
    Mat mixed = transfer(p.tensor, q.tensor).matrix;
    Eigen::ComplexEigenSolver<Mat> es(mixed);
    if (es.info() != Eigen::Success) throw EigensolverFailure("find_block_equivalence");
    Eigen::Index top = 0;
    for (Eigen::Index k = 1; k < es.eigenvalues().size(); ++k)
        if (std::abs(es.eigenvalues()(k)) > std::abs(es.eigenvalues()(top))) top = k;
    cplx lam = es.eigenvalues()(top);
    if (std::abs(lam) < 1.0 - cfg.tol.equiv) return std::nullopt;

    // For a period-m block the top eigenspace of the mixed operator is
    // m-fold degenerate: if (xi0, Y0) is a witness, so is
    // (xi0 + 2*pi*k/m, Y0 * U^k) with U the peripheral unitary of Q, since
    // U Q^i U^{-1} = conj(omega) * Q^i.  Pick the candidate maximising |tr Y| so the
    // reported witness is deterministic and reduces to the natural one (a
    // scalar Y) whenever the blocks agree up to an overall phase.
    double xi0 = std::arg(lam);
    Mat y0 = polar_unitary(unvec_rowmajor(es.eigenvectors().col(top), p.dim(), q.dim()));
    int m = q.period;
    double omega_step = 2.0 * kPi / m;
    BlockEquivalence eq;
    Mat upow = Mat::Identity(q.dim(), q.dim());
    double best_tr = -1.0;
    for (int k = 0; k < m; ++k) {
        Mat yk = polar_unitary(y0 * upow);
        double t = std::abs(yk.trace());
        if (t > best_tr + 1e-9) {
            best_tr = t;
            eq.y = yk;
            eq.xi = std::remainder(xi0 + omega_step * k, 2.0 * kPi);
        }
        if (k + 1 < m) upow = upow * q.structure.peripheral_unitary;
    }
    cplx phase = std::polar(1.0, eq.xi);
    double res = 0, scale = std::max(1.0, p.tensor.max_norm());
    for (int i = 0; i < p.tensor.d; ++i)
        res = std::max(res, (p.tensor[i] - phase * eq.y * q.tensor[i] * eq.y.adjoint()).norm());
    eq.residual = res;
    if (res > cfg.tol.witness * scale * 10)
        throw InconsistentWitness("mixed operator reached modulus 1 but the gauge relation fails (residual " +
                                  std::to_string(res) + ")");
    return eq;
}

struct BlockDecomposition {
    std::vector<PeriodicBlock> basis;              // pairwise non-repeated
    std::vector<std::vector<cplx>> multiplicities; // per block, all nonzero
    // Orthonormal frame of each copy's subspace in the input's coordinates,
    // ordered like the assembled tensor; supports of the invariant splitting.
    std::vector<std::vector<Mat>> copy_frames;
    // When the input is genuinely similar to the assembled tensor (no discarded
    // coupling, no dimension loss), G with A^i = G * assembled^i * G^{-1}.
    std::optional<Mat> exact_gauge;

    int assembled_dim() const {
        int n = 0;
        for (std::size_t j = 0; j < basis.size(); ++j)
            n += basis[j].dim() * static_cast<int>(multiplicities[j].size());
        return n;
    }
};

// Explicit block-diagonal tensor sum_j R_j (x) A_j.
inline MpsTensor assemble(const BlockDecomposition& dec) {
    int D = dec.assembled_dim();
    if (D == 0) throw ZeroTensor("empty decomposition");
    int d = dec.basis[0].tensor.d;
    std::vector<Mat> mats(d, Mat::Zero(D, D));
    int off = 0;
    for (std::size_t j = 0; j < dec.basis.size(); ++j) {
        int dj = dec.basis[j].dim();
        for (cplx mu : dec.multiplicities[j]) {
            for (int i = 0; i < d; ++i)
                mats[i].block(off, off, dj, dj) = mu * dec.basis[j].tensor[i];
            off += dj;
        }
    }
    return MpsTensor(std::move(mats));
}

namespace detail {

struct Leaf {
    MpsTensor tensor;      // form II, radius 1
    cplx weight;           // accumulated positive scale
    int period = 1;
    PeriodStructure structure;
    Mat frame;             // D_in x D_leaf isometry: the leaf's subspace
    Mat slot_gauge;        // S^{-1}: input-slot = slot_gauge * tensor * slot_gauge^{-1}
};

// Splits threshold: eigenvalues of a PSD fixed point above split_tol * max
// count as support.
inline constexpr double kSplitTol = 1e-7;

// PSD fixed point of the dual map via the spectral projector onto the
// eigenvalue-1 eigenspace applied to the identity (the ergodic average).
inline std::optional<Mat> psd_fixed_point(const Eigen::ComplexEigenSolver<Mat>& es,
                                          const Mat& edual, int D, const Config& cfg) {
    Mat v = es.eigenvectors();
    Eigen::FullPivLU<Mat> lu(v);
    if (!lu.isInvertible()) return std::nullopt;
    Vec coeff = lu.solve(vec_rowmajor(Mat::Identity(D, D)));
    if (!coeff.allFinite()) return std::nullopt;
    Vec filtered = Vec::Zero(coeff.size());
    for (Eigen::Index k = 0; k < coeff.size(); ++k)
        if (std::abs(es.eigenvalues()(k) - cplx(1, 0)) <= cfg.tol.degeneracy)
            filtered(k) = coeff(k);
    Mat x = unvec_rowmajor(v * filtered, D, D);
    x = (x + x.adjoint()) / 2.0;
    if (x.norm() < 1e-12) return std::nullopt;
    if ((unvec_rowmajor(edual * vec_rowmajor(x), D, D) - x).norm() > 1e-7 * x.norm())
        return std::nullopt;
    return x;
}

inline void decompose_rec(const MpsTensor& a, cplx scale, const Mat& frame,
                          std::vector<Leaf>& out, const Config& cfg, int depth) {
    if (depth > 64) throw EigensolverFailure("invariant-subspace recursion did not terminate");
    const int D = a.D;
    SpectralData sd = spectral_data(transfer(a), cfg);
    if (sd.spectral_radius <= cfg.tol.zero) return;  // nilpotent: contributes nothing
    MpsTensor an = a.scaled(1.0 / std::sqrt(sd.spectral_radius));
    scale *= std::sqrt(sd.spectral_radius);

    Mat edual = transfer(an).matrix.adjoint();
    Eigen::ComplexEigenSolver<Mat> es(edual);
    if (es.info() != Eigen::Success) throw EigensolverFailure("decompose");
    int g = 0;
    Eigen::Index first_unit = -1;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        if (std::abs(es.eigenvalues()(k) - cplx(1, 0)) <= cfg.tol.degeneracy) {
            ++g;
            if (first_unit < 0) first_unit = k;
        }
    }
    if (g == 0) throw EigensolverFailure("rescaled dual map has no fixed point");

    Mat split_op;  // Hermitian PSD singular fixed point used to split
    if (g == 1) {
        Mat h = hermitize(unvec_rowmajor(es.eigenvectors().col(first_unit), D, D));
        Eigen::SelfAdjointEigenSolver<Mat> hes(h);
        double hi = hes.eigenvalues().maxCoeff();
        if (hi > 0 && hes.eigenvalues().minCoeff() > cfg.tol.posdef * hi) {
            // Irreducible leaf: bring to form II and attach the period data.
            auto [aii, gauge] = to_form_ii(an, cfg);
            auto [m, ps] = period(aii, cfg);
            out.push_back(Leaf{std::move(aii), scale, m, std::move(ps), frame,
                               gauge.similarity_inv});
            return;
        }
        split_op = h;
    } else {
        std::optional<Mat> xbar = psd_fixed_point(es, edual, D, cfg);
        Mat h0 = hermitize(unvec_rowmajor(es.eigenvectors().col(first_unit), D, D));
        if (!xbar) {
            split_op = h0;  // Jordan-ish fallback; its kernel is still invariant
        } else {
            Eigen::SelfAdjointEigenSolver<Mat> xes(*xbar);
            double hi = xes.eigenvalues().maxCoeff();
            if (hi <= 0) {
                split_op = -*xbar;
            } else if (xes.eigenvalues().minCoeff() <= kSplitTol * hi) {
                split_op = *xbar;  // already singular
            } else {
                // PD average with a degenerate fixed space: peel off a singular
                // PSD combination X - H / lambda_max(|X^-1/2 H X^-1/2|).
                Mat xs_inv = hermitian_sqrt(*xbar).inverse();
                Mat best_h;
                double best_indep = -1;
                Vec xvec = vec_rowmajor(*xbar);
                xvec /= xvec.norm();
                for (int k = 0; k < g; ++k) {
                    Eigen::Index idx = -1;
                    int seen = 0;
                    for (Eigen::Index t = 0; t < es.eigenvalues().size(); ++t)
                        if (std::abs(es.eigenvalues()(t) - cplx(1, 0)) <= cfg.tol.degeneracy &&
                            seen++ == k) { idx = t; break; }
                    Mat cand = hermitize(unvec_rowmajor(es.eigenvectors().col(idx), D, D));
                    Vec cv = vec_rowmajor(cand);
                    if (cv.norm() < 1e-14) continue;
                    cv /= cv.norm();
                    double indep = (cv - xvec * (xvec.adjoint() * cv)).norm();
                    if (indep > best_indep) { best_indep = indep; best_h = cand; }
                }
                if (best_indep < 1e-9)
                    throw EigensolverFailure("degenerate fixed space without independent direction");
                Mat m = xs_inv * best_h * xs_inv;
                Eigen::SelfAdjointEigenSolver<Mat> mes((m + m.adjoint()) / 2.0);
                double lam = 0;
                for (int k = 0; k < mes.eigenvalues().size(); ++k)
                    if (std::abs(mes.eigenvalues()(k)) > std::abs(lam)) lam = mes.eigenvalues()(k);
                split_op = *xbar - best_h / lam;
            }
        }
    }

    // The kernel of a PSD dual fixed point is invariant under every A^i, so in
    // the (support, kernel) basis the tensor is block lower-triangular and the
    // dropped coupling never reaches any trace.
    Eigen::SelfAdjointEigenSolver<Mat> ses(split_op);
    double hi = ses.eigenvalues().cwiseAbs().maxCoeff();
    std::vector<int> supp, ker;
    for (int k = 0; k < D; ++k)
        (ses.eigenvalues()(k) > kSplitTol * hi ? supp : ker).push_back(k);
    if (supp.empty() || ker.empty())
        throw EigensolverFailure("invariant-subspace split produced no cut");
    Mat vs(D, static_cast<int>(supp.size())), vk(D, static_cast<int>(ker.size()));
    for (std::size_t k = 0; k < supp.size(); ++k) vs.col(k) = ses.eigenvectors().col(supp[k]);
    for (std::size_t k = 0; k < ker.size(); ++k) vk.col(k) = ses.eigenvectors().col(ker[k]);

    auto restrict_to = [&](const Mat& v) {
        std::vector<Mat> mats;
        mats.reserve(an.d);
        for (int i = 0; i < an.d; ++i) mats.push_back(v.adjoint() * an.mats[i] * v);
        return MpsTensor(std::move(mats));
    };
    MpsTensor a_s = restrict_to(vs), a_k = restrict_to(vk);
    // Smaller subspace first, for reproducible block ordering.
    if (vs.cols() <= vk.cols()) {
        decompose_rec(a_s, scale, Mat(frame * vs), out, cfg, depth + 1);
        decompose_rec(a_k, scale, Mat(frame * vk), out, cfg, depth + 1);
    } else {
        decompose_rec(a_k, scale, Mat(frame * vk), out, cfg, depth + 1);
        decompose_rec(a_s, scale, Mat(frame * vs), out, cfg, depth + 1);
    }
}

}  // namespace detail

inline BlockDecomposition decompose(const MpsTensor& a, const Config& cfg = default_config()) {
    std::vector<detail::Leaf> leaves;
    detail::decompose_rec(a, cplx(1, 0), Mat::Identity(a.D, a.D), leaves, cfg, 0);
    if (leaves.empty()) throw ZeroTensor("every block has spectral radius zero");

    // Group repeated blocks; phases fold into the multiplicities.
    BlockDecomposition dec;
    struct Copy { cplx mu; Mat frame; Mat gauge; };  // gauge: slot = gauge * rep * gauge^{-1}
    std::vector<std::vector<Copy>> copies;
    for (detail::Leaf& leaf : leaves) {
        PeriodicBlock blk{std::move(leaf.tensor), leaf.period, std::move(leaf.structure)};
        bool grouped = false;
        for (std::size_t j = 0; j < dec.basis.size() && !grouped; ++j) {
            auto eq = find_block_equivalence(blk, dec.basis[j], cfg);
            if (eq) {
                copies[j].push_back(Copy{leaf.weight * std::polar(1.0, eq->xi), leaf.frame,
                                         Mat(leaf.slot_gauge * eq->y)});
                grouped = true;
            }
        }
        if (!grouped) {
            copies.push_back({Copy{leaf.weight, leaf.frame, leaf.slot_gauge}});
            dec.basis.push_back(std::move(blk));
        }
    }

    // Deterministic ordering: blocks by (period, dim, entries); copies by
    // (-|mu|, arg mu).
    std::vector<std::size_t> order(dec.basis.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        const PeriodicBlock &px = dec.basis[x], &py = dec.basis[y];
        if (px.period != py.period) return px.period < py.period;
        if (px.dim() != py.dim()) return px.dim() < py.dim();
        for (int i = 0; i < px.tensor.d; ++i)
            if (int c = mat_compare(px.tensor[i], py.tensor[i], 1e-12)) return c < 0;
        return false;
    });
    std::vector<PeriodicBlock> basis_sorted;
    std::vector<std::vector<Copy>> copies_sorted;
    for (std::size_t j : order) {
        basis_sorted.push_back(std::move(dec.basis[j]));
        auto& cs = copies[j];
        std::sort(cs.begin(), cs.end(), [](const Copy& x, const Copy& y) {
            double ax = std::abs(x.mu), ay = std::abs(y.mu);
            if (std::abs(ax - ay) > 1e-12) return ax > ay;
            return std::arg(x.mu) < std::arg(y.mu);
        });
        copies_sorted.push_back(std::move(cs));
    }
    dec.basis = std::move(basis_sorted);

    dec.multiplicities.resize(dec.basis.size());
    dec.copy_frames.resize(dec.basis.size());
    for (std::size_t j = 0; j < dec.basis.size(); ++j)
        for (const Copy& c : copies_sorted[j]) {
            dec.multiplicities[j].push_back(c.mu);
            dec.copy_frames[j].push_back(c.frame);
        }

    // Opportunistic exact gauge: valid when the input really is similar to the
    // assembled tensor (nothing discarded).  The copy frames only track the
    // invariant filtration, not a similarity, so solve the intertwiner
    // equation A^i G = G * assembled^i directly: its solutions form the
    // nullspace of the stacked Sylvester operator, and for genuinely similar
    // tensors that space contains invertible elements.
    if (dec.assembled_dim() == a.D) {
        const int D = a.D, D2 = a.D * a.D;
        MpsTensor asm_t = assemble(dec);
        auto accept = [&](const Mat& g) {
            Eigen::FullPivLU<Mat> lu(g);
            if (!lu.isInvertible()) return false;
            Mat g_inv = lu.inverse();
            double cond = g.norm() * g_inv.norm();
            if (cond > 1e7) return false;  // too ill-conditioned to trust
            double res = 0;
            for (int i = 0; i < a.d; ++i)
                res = std::max(res, (a.mats[i] - g * asm_t.mats[i] * g_inv).norm());
            if (res > 1e-7 * std::max(1.0, a.max_norm()) * cond) return false;
            dec.exact_gauge = g;
            return true;
        };
        // First candidate: the per-copy frames and slot gauges.  Exact for
        // inputs that are orthogonally block-diagonalizable, and preferable
        // because it aligns the gauge with the assembled slot structure.
        {
            Mat g(D, D);
            int off = 0;
            for (std::size_t j = 0; j < dec.basis.size(); ++j) {
                int dj = dec.basis[j].dim();
                for (const Copy& c : copies_sorted[j]) {
                    g.block(0, off, D, dj) = c.frame * c.gauge;
                    off += dj;
                }
            }
            accept(g);
        }
        if (!dec.exact_gauge) {
            Mat id = Mat::Identity(D, D);
            Mat sys(a.d * D2, D2);
            for (int i = 0; i < a.d; ++i)
                sys.block(i * D2, 0, D2, D2) =
                    kron(a.mats[i], id) - kron(id, asm_t.mats[i].transpose());
            Eigen::JacobiSVD<Mat> svd(sys, Eigen::ComputeThinV);
            double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
            int null_dim = 0;
            for (Eigen::Index k = svd.singularValues().size(); k-- > 0;) {
                if (svd.singularValues()(k) <= 1e-8 * std::max(1.0, smax)) ++null_dim;
                else break;
            }
            if (null_dim > 0) {
                Mat nb = svd.matrixV().rightCols(null_dim);
                // A generic combination of intertwiners is invertible; sweep a
                // few deterministic coefficient vectors.
                for (int attempt = 1; attempt <= 4 && !dec.exact_gauge; ++attempt) {
                    Vec coeff(null_dim);
                    cplx step = std::polar(1.0 + 0.11 * attempt, 0.37 * attempt);
                    cplx cur(1, 0);
                    for (int k = 0; k < null_dim; ++k, cur *= step) coeff(k) = cur;
                    Mat g = unvec_rowmajor(nb * coeff, D, D);
                    if (g.norm() < 1e-14) continue;
                    accept(g / g.norm());
                }
            }
        }
    }
    return dec;
}

}  // namespace mpsirr
