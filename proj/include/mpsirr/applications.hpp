#pragma once

// Refinement <-> divisibility constructions for the channel attached to a
// tensor, and the single-unitary symmetry characterization.

#include <algorithm>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "mpsirr/compare.hpp"
#include "mpsirr/core.hpp"
#include "mpsirr/decompose.hpp"
#include "mpsirr/spectral.hpp"
#include "mpsirr/tensor.hpp"

namespace mpsirr {

// Isometry W: C^d -> (C^d)^(x p), stored as a d^p x d matrix.
struct RefinementWitness {
    int p = 1;
    Mat w;
};

struct DivisibilityWitness {
    int p = 1;
    MpsTensor root_tensor;  // A with E_A^p = E_B and E_A trace-preserving
};

inline void validate_isometry(const Mat& w, double tol = 1e-9) {
    Mat gram = w.adjoint() * w;
    if ((gram - Mat::Identity(w.cols(), w.cols())).norm() > tol)
        throw ValidationError("W is not an isometry");
}

struct RefinementReport {
    bool pass = false;
    std::vector<double> residuals;  // per N, |V_pN(A) - W^(xN) V_N(B)| / |V_N(B)|
};

namespace detail {

// Applies W to every site index of a d-local state, producing a d^p-local one.
inline Vec apply_sitewise(const Mat& w, const Vec& v, int N, int d) {
    const Eigen::Index dp = w.rows();
    Vec cur = v;
    for (int k = 0; k < N; ++k) {
        // cur has shape [dp^k] x [d] x [d^{N-k-1}] row-major; contract the
        // middle index with W.
        Eigen::Index lead = 1;
        for (int t = 0; t < k; ++t) lead *= dp;
        Eigen::Index trail = cur.size() / (lead * d);
        Vec next = Vec::Zero(lead * dp * trail);
        for (Eigen::Index a = 0; a < lead; ++a)
            for (Eigen::Index i = 0; i < dp; ++i)
                for (int j = 0; j < d; ++j) {
                    if (w(i, j) == cplx(0, 0)) continue;
                    next.segment((a * dp + i) * trail, trail) +=
                        w(i, j) * cur.segment((a * d + j) * trail, trail);
                }
        cur = std::move(next);
    }
    return cur;
}

}  // namespace detail

// Checks |V_pN(A)> = W^(x N) |V_N(B)> for N = 1..n_max within budget.
inline RefinementReport check_refinement(const MpsTensor& b, const MpsTensor& a,
                                         const RefinementWitness& witness, int n_max,
                                         const Config& cfg = default_config()) {
    // W maps C^{d_B} into (C^{d_A})^p; the physical dimensions may differ.
    const int db = b.d, da = a.d, p = witness.p;
    if (witness.w.rows() != static_cast<Eigen::Index>(pow_capped(da, p, 1u << 30)) ||
        witness.w.cols() != db)
        throw DimensionMismatch("W must be d_A^p x d_B");
    validate_isometry(witness.w);
    RefinementReport rep;
    rep.pass = true;
    for (int N = 1; N <= n_max; ++N) {
        if (pow_capped(da, p * N, cfg.amplitude_cap) > cfg.amplitude_cap ||
            pow_capped(db, N, cfg.amplitude_cap) > cfg.amplitude_cap)
            break;
        Vec vb = contract_state(b, N, cfg).amplitudes;
        Vec va = contract_state(a, p * N, cfg).amplitudes;
        Vec refined = detail::apply_sitewise(witness.w, vb, N, db);
        // Floor at the natural magnitude: periodic tensors have exactly
        // vanishing states off-period, where a relative residual of two
        // numerical zeros is meaningless.
        double floor = std::max(std::pow(std::max(a.max_norm(), 1e-300), p * N),
                                std::pow(std::max(b.max_norm(), 1e-300), N));
        double rel = (va - refined).norm() / std::max({va.norm(), vb.norm(), floor});
        rep.residuals.push_back(rel);
        if (rel > cfg.tol.witness) rep.pass = false;
    }
    if (rep.residuals.empty()) throw BudgetExceeded("no checkable N within the amplitude cap");
    return rep;
}

struct DivisibilityReport {
    bool pass = false;
    double power_residual = 0;  // |E_A^p - E_B|
    double trace_residual = 0;  // |E_A^* (I) - I|
};

inline DivisibilityReport check_divisibility(const MpsTensor& b, const MpsTensor& a, int p,
                                             const Config& cfg = default_config()) {
    if (a.D != b.D) throw DimensionMismatch("bond dimensions differ");
    DivisibilityReport rep;
    Mat ea = transfer(a).matrix, eb = transfer(b).matrix;
    Mat pw = Mat::Identity(ea.rows(), ea.cols());
    for (int k = 0; k < p; ++k) pw = pw * ea;
    rep.power_residual = (pw - eb).norm();
    Mat id = Mat::Identity(a.D, a.D);
    rep.trace_residual = (cp_apply_dual(a, id) - id).norm();
    rep.pass = rep.power_residual <= cfg.tol.witness && rep.trace_residual <= 1e-9;
    return rep;
}

// Given E_A^p = E_B, constructs the isometry W with
// A^{i_1}...A^{i_p} = sum_i W^{(i_1..i_p),i} B^i.
// Least-squares fit of the blocked Kraus operators onto B's, the fitted part
// completed to a full isometry, then verified.
inline RefinementWitness refinement_from_divisibility(const MpsTensor& b, const MpsTensor& a,
                                                      int p, const Config& cfg = default_config()) {
    DivisibilityReport div = check_divisibility(b, a, p, cfg);
    if (!div.pass)
        throw NotAWitness("E_A^p != E_B (residual " + std::to_string(div.power_residual) + ")");
    MpsTensor ap = block(a, p, cfg);
    const int d = b.d;
    const Eigen::Index dp = static_cast<Eigen::Index>(ap.mats.size());
    Mat mb(b.D * b.D, d), ma(a.D * a.D, dp);
    for (int i = 0; i < d; ++i) mb.col(i) = vec_rowmajor(b.mats[i]);
    for (Eigen::Index i = 0; i < dp; ++i) ma.col(i) = vec_rowmajor(ap.mats[i]);

    // M_A = M_B W^T; the fit pins W down on the span of B's Kraus coordinates.
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(mb);
    Mat wt = cod.solve(ma);  // d x d^p
    double fit_res = (mb * wt - ma).norm();
    if (fit_res > cfg.tol.witness * std::max(1.0, ma.norm()))
        throw RankDeficient("blocked Kraus operators are not in the span of B's (residual " +
                            std::to_string(fit_res) + ")");
    Mat w = wt.transpose();  // d^p x d

    // Complete W to an isometry on the orthogonal complement of the fitted
    // subspace of C^d.
    Eigen::JacobiSVD<Mat> svd(mb, Eigen::ComputeFullV);
    int rank = 0;
    for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k)
        if (svd.singularValues()(k) > 1e-10 * svd.singularValues()(0)) ++rank;
    // The relation M_B W^T = M_A is bilinear in W (transpose, not adjoint),
    // so W is pinned on conj(range(M_B^+)) and free on conj(ker(M_B)); the
    // conjugated singular basis keeps the completed part out of the relation.
    Mat v_supp = svd.matrixV().leftCols(rank).conjugate();
    Mat w_supp = polar_unitary(Mat(w * v_supp));  // d^p x rank, isometry part
    Mat out = w_supp * v_supp.adjoint();
    if (rank < d) {
        Mat v_perp = svd.matrixV().rightCols(d - rank).conjugate();
        // Orthonormal directions unused by the fitted part.
        Mat proj = Mat::Identity(dp, dp) - w_supp * w_supp.adjoint();
        Eigen::JacobiSVD<Mat> comp(proj, Eigen::ComputeFullU);
        Mat u_perp = comp.matrixU().leftCols(d - rank);
        out += u_perp * v_perp.adjoint();
    }
    RefinementWitness witness{p, std::move(out)};
    validate_isometry(witness.w);
    double res = (mb * witness.w.transpose() - ma).norm();
    if (res > cfg.tol.witness * std::max(1.0, ma.norm()) * 10)
        throw RankDeficient("isometry projection broke the Kraus relation");
    return witness;
}

// alpha/k decomposition: for u in [0, m), the unique (alpha, k) with
// u = (alpha + p k) mod m, alpha in [0, gcd(m,p)), k in [0, m/gcd).
inline std::pair<int, int> unique_decomposition(int u, int m, int p) {
    int r = std::gcd(m, p);
    for (int k = 0; k < m / r; ++k) {
        int alpha = ((u - p * k) % m + m) % m;
        if (alpha < r) return {alpha, k};
    }
    throw EigensolverFailure("unique decomposition failed");  // unreachable
}

// Given the refinement |V_pN(A)> = W^(xN) |V_N(B)>, constructs a
// trace-preserving root tensor T with T^{(p)} = C (hence E_T^p = E_B), where
// C^{(i_1..i_p)} = sum_i W^{(i_1..i_p),i} B^i.
inline DivisibilityWitness divisibility_from_refinement(const MpsTensor& b, const MpsTensor& a,
                                                        const RefinementWitness& witness,
                                                        const Config& cfg = default_config()) {
    RefinementReport rep = check_refinement(b, a, witness, cfg.n_check, cfg);
    if (!rep.pass) throw NotAWitness("refinement check failed");
    const int p = witness.p;

    // C: blocked-index tensor with B's bond space.
    std::vector<Mat> cmats(witness.w.rows(), Mat::Zero(b.D, b.D));
    for (Eigen::Index bi = 0; bi < witness.w.rows(); ++bi)
        for (int i = 0; i < b.d; ++i) cmats[bi] += witness.w(bi, i) * b.mats[i];
    MpsTensor c(std::move(cmats));

    // Work with A's assembled irreducible form; it generates the same family.
    BlockDecomposition dec = decompose(a, cfg);
    MpsTensor a_irr = assemble(dec);
    MpsTensor x = block(a_irr, p, cfg);

    auto rel = compare_equal_natural(x, c, cfg);
    if (!rel) throw GaugeFailure("blocked tensor and C do not generate equal families");
    Mat u = polar_unitary(rel->u);

    // Distribute the block-constant phases of Z across the p sites.
    std::vector<Mat> prime(a_irr.d, Mat::Zero(a_irr.D, a_irr.D));
    int off = 0;
    for (std::size_t j = 0; j < dec.basis.size(); ++j) {
        const PeriodicBlock& blk = dec.basis[j];
        int dj = blk.dim(), m = blk.period, r = std::gcd(m, p);
        for (cplx mu : dec.multiplicities[j]) {
            Mat zslot = rel->z.block(off, off, dj, dj);
            // Constants c_alpha with c^{m/r} = 1, read off the support of each
            // blocked sub-block.
            std::vector<cplx> cval(r);
            for (int alpha = 0; alpha < r; ++alpha) {
                Mat ptilde = Mat::Zero(dj, dj);
                for (int k = 0; k < m / r; ++k)
                    ptilde += blk.structure.projectors[(alpha + p * k) % m];
                cplx cv = (ptilde * zslot * ptilde).trace() / ptilde.trace();
                if ((zslot * ptilde - cv * ptilde).norm() > 1e-6 * std::max(1.0, zslot.norm()))
                    throw GaugeFailure("Z is not constant on a blocked sub-block");
                double root_err =
                    std::abs(std::pow(cv, static_cast<double>(m / r)) - cplx(1, 0));
                if (root_err > 1e-6)
                    throw GaugeFailure("sub-block phase is not an (m/r)-th root of unity");
                cval[alpha] = cv / std::abs(cv);
            }
            for (int i = 0; i < a_irr.d; ++i) {
                Mat sum = Mat::Zero(dj, dj);
                for (int uu = 0; uu < m; ++uu) {
                    auto [a_cur, k_cur] = unique_decomposition(uu, m, p);
                    auto [a_nxt, k_nxt] = unique_decomposition((uu + 1) % m, m, p);
                    cplx dphase = std::pow(cval[a_nxt], static_cast<double>(k_nxt)) /
                                  std::pow(cval[a_cur], static_cast<double>(k_cur));
                    sum += dphase * blk.structure.projectors[uu] * blk.tensor[i];
                }
                prime[i].block(off, off, dj, dj) = mu * sum;
            }
            off += dj;
        }
    }
    MpsTensor a_prime(std::move(prime));
    MpsTensor root = a_prime.conjugated(u.adjoint(), u);

    // The whole point: the blocked root must reproduce C.
    MpsTensor root_p = block(root, p, cfg);
    double res = 0;
    for (std::size_t i = 0; i < root_p.mats.size(); ++i)
        res = std::max(res, (root_p.mats[i] - c.mats[i]).norm());
    if (res > cfg.tol.witness * std::max(1.0, c.max_norm()) * 10)
        throw InconsistentWitness("constructed root fails T^(p) = C (residual " +
                                  std::to_string(res) + ")");
    return DivisibilityWitness{p, std::move(root)};
}

struct SymmetryWitness {
    Mat z;  // diagonal-unitary part (on A's bond space)
    Mat u;  // unitary with sum_i u^{i',i} A^i = Z U A^{i'} U^dagger
    double relation_residual = 0;
    double commutator_residual = 0;
    double state_residual = 0;
};

// Tests whether the one-site unitary u is a symmetry of the family generated
// by A (A in irreducible form II, e.g. a decompose-assembled tensor) and, if
// so, constructs the witnesses of the gauge relation.
inline std::optional<SymmetryWitness> symmetry_gauge(const MpsTensor& a, const Mat& u_phys,
                                                     const Config& cfg = default_config()) {
    if (u_phys.rows() != a.d || u_phys.cols() != a.d)
        throw DimensionMismatch("u must be d x d");
    if ((u_phys.adjoint() * u_phys - Mat::Identity(a.d, a.d)).norm() > 1e-9)
        throw ValidationError("u is not unitary");
    std::vector<Mat> rot(a.d, Mat::Zero(a.D, a.D));
    for (int ip = 0; ip < a.d; ++ip)
        for (int i = 0; i < a.d; ++i) rot[ip] += u_phys(ip, i) * a.mats[i];
    MpsTensor a_u(std::move(rot));

    std::optional<NaturalGaugeRelation> rel;
    try {
        rel = compare_equal_natural(a_u, a, cfg);
    } catch (const InconsistentWitness&) {
        return std::nullopt;
    }
    if (!rel) return std::nullopt;

    SymmetryWitness out;
    out.u = polar_unitary(rel->u);
    out.z = rel->z.inverse();  // Z_nat A_u = U A U^-1  =>  A_u = Z^-1 U A U^+
    for (int ip = 0; ip < a.d; ++ip) {
        out.relation_residual = std::max(
            out.relation_residual,
            (a_u.mats[ip] - out.z * out.u * a.mats[ip] * out.u.adjoint()).norm());
        out.commutator_residual =
            std::max(out.commutator_residual,
                     (out.z * a.mats[ip] - a.mats[ip] * out.z).norm());
    }
    // V(A) = V(ZA) on the checkable range.
    MpsTensor za = a;
    for (Mat& m : za.mats) m = out.z * m;
    for (int N = 1; N <= cfg.n_check; ++N) {
        if (pow_capped(a.d, N, cfg.amplitude_cap) > cfg.amplitude_cap) break;
        Vec v1 = contract_state(a, N, cfg).amplitudes;
        Vec v2 = contract_state(za, N, cfg).amplitudes;
        double floor = std::pow(std::max(a.max_norm(), 1e-300), N);
        out.state_residual = std::max(
            out.state_residual, (v1 - v2).norm() / std::max({v1.norm(), v2.norm(), floor}));
    }
    if (out.relation_residual > cfg.tol.witness * std::max(1.0, a.max_norm()) * 10)
        throw InconsistentWitness("symmetry witness fails the gauge relation");
    return out;
}

}  // namespace mpsirr
