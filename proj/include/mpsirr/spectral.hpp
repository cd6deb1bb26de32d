#pragma once

// Spectral analysis of the CP map attached to a tensor: spectral radius,
// fixed points, irreducibility, peripheral spectrum, period projectors, and
// the gauge that makes a single irreducible block trace-preserving with a
// diagonal fixed point ("form II").

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mpsirr/core.hpp"
#include "mpsirr/tensor.hpp"

namespace mpsirr {

struct SpectralData {
    Vec eigenvalues;              // all D^2, with multiplicity
    double spectral_radius = 0;
    std::vector<cplx> peripheral;  // eigenvalues within tol of the radius
};

inline SpectralData spectral_data(const TransferOperator& e,
                                  const Config& cfg = default_config()) {
    if (e.Da != e.Db) throw DimensionMismatch("self transfer operator required");
    Eigen::ComplexEigenSolver<Mat> es(e.matrix, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw EigensolverFailure("spectral_data");
    SpectralData out;
    out.eigenvalues = es.eigenvalues();
    out.spectral_radius = out.eigenvalues.cwiseAbs().maxCoeff();
    if (out.spectral_radius > 0) {
        for (Eigen::Index k = 0; k < out.eigenvalues.size(); ++k)
            if (std::abs(std::abs(out.eigenvalues(k)) / out.spectral_radius - 1.0) <=
                cfg.tol.peripheral)
                out.peripheral.push_back(out.eigenvalues(k));
    }
    return out;
}

namespace detail {

// Hermitian part of X, or i(X - X^dagger)/2 when that is the larger piece;
// sign-fixed to nonnegative trace.  For a fixed point at a real eigenvalue both
// parts are again fixed points, so this picks a Hermitian representative.
inline Mat hermitize(const Mat& x) {
    Mat h = (x + x.adjoint()) / 2.0;
    Mat k = (x - x.adjoint()) * cplx(0, -0.5);
    Mat out = h.norm() >= k.norm() ? h : k;
    double tr = out.trace().real();
    if (tr < 0) out = -out;
    return out;
}

struct UnitEigenspace {
    int multiplicity = 0;        // eigenvalues with |lambda - 1| <= tol.degeneracy
    std::vector<Vec> vectors;    // the corresponding eigenvectors
    Eigen::ComplexEigenSolver<Mat> solver;
};

inline UnitEigenspace unit_eigenspace(const Mat& m, const Config& cfg) {
    UnitEigenspace out;
    out.solver.compute(m);
    if (out.solver.info() != Eigen::Success) throw EigensolverFailure("unit_eigenspace");
    for (Eigen::Index k = 0; k < out.solver.eigenvalues().size(); ++k) {
        if (std::abs(out.solver.eigenvalues()(k) - cplx(1, 0)) <= cfg.tol.degeneracy) {
            ++out.multiplicity;
            out.vectors.push_back(out.solver.eigenvectors().col(k));
        }
    }
    return out;
}

}  // namespace detail

// Eigenvector of E (or of its dual when dual=true) at the eigenvalue closest
// to 1, reshaped to D x D and turned into a Hermitian representative with
// nonnegative trace.  Trace-normalized when the trace is not tiny.
inline Mat fixed_point(const TransferOperator& e, bool dual,
                       const Config& cfg = default_config()) {
    if (e.Da != e.Db) throw DimensionMismatch("self transfer operator required");
    Mat m = dual ? Mat(e.matrix.adjoint()) : e.matrix;
    Eigen::ComplexEigenSolver<Mat> es(m);
    if (es.info() != Eigen::Success) throw EigensolverFailure("fixed_point");
    Eigen::Index best = 0;
    double best_dist = std::abs(es.eigenvalues()(0) - cplx(1, 0));
    for (Eigen::Index k = 1; k < es.eigenvalues().size(); ++k) {
        double dist = std::abs(es.eigenvalues()(k) - cplx(1, 0));
        if (dist < best_dist) { best = k; best_dist = dist; }
    }
    if (best_dist > cfg.tol.peripheral)
        throw NoUnitEigenvalue("closest eigenvalue to 1 is off by " + std::to_string(best_dist));
    Mat x = unvec_rowmajor(es.eigenvectors().col(best), e.Da, e.Db);
    Mat h = detail::hermitize(x);
    // Keep the Hermitian form only if it is still an eigenvector.
    Mat image = unvec_rowmajor(m * vec_rowmajor(h), e.Da, e.Db);
    if ((image - h).norm() > 1e-9 * std::max(1.0, h.norm())) h = x;
    double tr = std::abs(h.trace());
    if (tr > 1e-12 * h.norm() * e.Da) h /= h.trace();
    else h /= h.norm();
    return h;
}

// True iff the rescaled map has a nondegenerate eigenvalue 1 and a strictly
// positive dual fixed point.
inline bool is_irreducible(const MpsTensor& a, const Config& cfg = default_config()) {
    SpectralData sd = spectral_data(transfer(a), cfg);
    if (sd.spectral_radius <= cfg.tol.zero)
        throw ZeroTensor("spectral radius is zero");
    MpsTensor an = a.scaled(1.0 / std::sqrt(sd.spectral_radius));
    Mat e = transfer(an).matrix;
    detail::UnitEigenspace dual = detail::unit_eigenspace(e.adjoint(), cfg);
    if (dual.multiplicity != 1) return false;
    Mat x = detail::hermitize(unvec_rowmajor(dual.vectors[0], a.D, a.D));
    Eigen::SelfAdjointEigenSolver<Mat> es(x);
    double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    return hi > 0 && lo > cfg.tol.posdef * hi;
}

// Period projectors of a single irreducible block in form II.
struct PeriodStructure {
    int m = 1;
    std::vector<Mat> projectors;   // P_0 .. P_{m-1}, Hermitian, complete
    cplx omega{1, 0};              // e^{i 2 pi / m}
    Mat peripheral_unitary;        // U = sum_u omega^u P_u
};

namespace detail {

// Cyclic relabeling freedom is fixed by putting the largest-trace projector at
// u = 0, ties broken lexicographically.
inline void fix_projector_labels(std::vector<Mat>& p) {
    int m = static_cast<int>(p.size());
    int best = 0;
    for (int c = 1; c < m; ++c) {
        double tb = p[best].trace().real(), tc = p[c].trace().real();
        if (tc > tb + 1e-12 || (std::abs(tc - tb) <= 1e-12 && mat_compare(p[c], p[best]) < 0))
            best = c;
    }
    std::rotate(p.begin(), p.begin() + best, p.end());
}

}  // namespace detail

// Detects the period of an irreducible form-II block and builds the spectral
// projectors of its peripheral eigenvector, relabeled so that the dual map
// sends P_u to P_{u+1}.
inline std::pair<int, PeriodStructure> period(const MpsTensor& a,
                                              const Config& cfg = default_config()) {
    SpectralData sd = spectral_data(transfer(a), cfg);
    if (std::abs(sd.spectral_radius - 1.0) > 1e-6)
        throw PeripheralMismatch("block is not normalized to spectral radius 1");
    int m = static_cast<int>(sd.peripheral.size());
    if (m < 1) throw PeripheralMismatch("empty peripheral spectrum");
    // The peripheral set must be exactly the m-th roots of unity, each simple.
    std::vector<int> hits(m, 0);
    for (cplx lam : sd.peripheral) {
        cplx unit = lam / std::abs(lam);
        bool placed = false;
        for (int l = 0; l < m; ++l) {
            cplx root = std::polar(1.0, 2.0 * kPi * l / m);
            if (std::abs(unit - root) <= 1e-6) { ++hits[l]; placed = true; break; }
        }
        if (!placed) throw PeripheralMismatch("peripheral eigenvalue off the root-of-unity grid");
    }
    for (int l = 0; l < m; ++l)
        if (hits[l] != 1) throw PeripheralMismatch("peripheral eigenvalue multiplicity != 1");

    PeriodStructure ps;
    ps.m = m;
    ps.omega = std::polar(1.0, 2.0 * kPi / m);
    if (m == 1) {
        ps.projectors = {Mat::Identity(a.D, a.D)};
        ps.peripheral_unitary = Mat::Identity(a.D, a.D);
        return {1, ps};
    }

    // Peripheral eigenvector of the dual map at omega; polar-corrected to an
    // exact unitary whose eigenvalues are then the m-th roots of unity.
    Mat edual = transfer(a).matrix.adjoint();
    Eigen::ComplexEigenSolver<Mat> es(edual);
    if (es.info() != Eigen::Success) throw EigensolverFailure("period");
    Eigen::Index best = 0;
    double best_dist = std::abs(es.eigenvalues()(0) - ps.omega);
    for (Eigen::Index k = 1; k < es.eigenvalues().size(); ++k) {
        double dist = std::abs(es.eigenvalues()(k) - ps.omega);
        if (dist < best_dist) { best = k; best_dist = dist; }
    }
    if (best_dist > 1e-6) throw PeripheralMismatch("no dual eigenvalue at omega");
    Mat u = polar_unitary(unvec_rowmajor(es.eigenvectors().col(best), a.D, a.D));
    // Global phase: rotate so one eigenvalue lands exactly on 1.
    Eigen::ComplexEigenSolver<Mat> ues(u, /*computeEigenvectors=*/false);
    if (ues.info() != Eigen::Success) throw EigensolverFailure("period (unitary)");
    cplx ref = ues.eigenvalues()(0);
    u *= std::conj(ref) / std::abs(ref);

    // Spectral projectors of a unitary with m-th-root eigenvalues.
    std::vector<Mat> proj(m, Mat::Zero(a.D, a.D));
    std::vector<Mat> upow{Mat::Identity(a.D, a.D)};
    for (int l = 1; l < m; ++l) upow.push_back(upow.back() * u);
    for (int v = 0; v < m; ++v) {
        for (int l = 0; l < m; ++l)
            proj[v] += std::pow(ps.omega, -static_cast<double>(v * l)) * upow[l];
        proj[v] /= static_cast<double>(m);
    }
    // Validate the projector laws before any relabeling.
    Mat sum = Mat::Zero(a.D, a.D);
    for (int v = 0; v < m; ++v) {
        sum += proj[v];
        if ((proj[v] * proj[v] - proj[v]).norm() > 1e-7)
            throw PeripheralMismatch("peripheral projector fails idempotence");
    }
    if ((sum - Mat::Identity(a.D, a.D)).norm() > 1e-7)
        throw PeripheralMismatch("peripheral projectors do not resolve the identity");

    // Relabel so E^*(P_u) = P_{u+1}; the dual permutes the projectors cyclically.
    std::vector<Mat> relabeled(m);
    relabeled[0] = proj[0];
    Mat cur = proj[0];
    std::vector<bool> used(m, false);
    used[0] = true;
    for (int step = 1; step < m; ++step) {
        Mat image = cp_apply_dual(a, cur);
        int next = -1;
        for (int v = 0; v < m; ++v) {
            if (!used[v] && (image - proj[v]).norm() <= 1e-6 * std::max(1.0, image.norm())) {
                next = v;
                break;
            }
        }
        if (next < 0) throw PeripheralMismatch("dual map does not permute the projectors");
        used[next] = true;
        relabeled[step] = proj[next];
        cur = proj[next];
    }
    detail::fix_projector_labels(relabeled);
    ps.projectors = std::move(relabeled);
    ps.peripheral_unitary = Mat::Zero(a.D, a.D);
    for (int v = 0; v < m; ++v)
        ps.peripheral_unitary += std::pow(ps.omega, static_cast<double>(v)) * ps.projectors[v];
    return {m, ps};
}

// Gauge data taking one irreducible block to its form-II representative.
struct FormIIGauge {
    Mat rho;        // positive-definite fixed point of the dual map
    Mat u_sigma;    // diagonalizer of the forward fixed point after gauging
    RealVec lambda; // diagonal fixed point, positive, nonincreasing
    Mat similarity; // S with A''^i = S A^i S^{-1}
    Mat similarity_inv;
};

// Brings a single irreducible block of radius 1 to form II: trace-preserving
// CP map (unital dual) with a diagonal nonincreasing positive fixed point.
inline std::pair<MpsTensor, FormIIGauge> to_form_ii(const MpsTensor& a,
                                                    const Config& cfg = default_config()) {
    Mat e = transfer(a).matrix;
    detail::UnitEigenspace dual = detail::unit_eigenspace(e.adjoint(), cfg);
    if (dual.vectors.empty()) throw NoUnitEigenvalue("dual map has no fixed point");
    Mat rho = detail::hermitize(unvec_rowmajor(dual.vectors[0], a.D, a.D));
    Eigen::SelfAdjointEigenSolver<Mat> res(rho);
    if (res.eigenvalues().minCoeff() <= cfg.tol.posdef * res.eigenvalues().maxCoeff())
        throw NotIrreducible("dual fixed point is not positive definite");
    rho /= rho.trace().real();

    Mat sqrt_rho = hermitian_sqrt(rho);
    Mat sqrt_rho_inv = sqrt_rho.inverse();
    MpsTensor a1 = a.conjugated(sqrt_rho, sqrt_rho_inv);

    detail::UnitEigenspace fwd = detail::unit_eigenspace(transfer(a1).matrix, cfg);
    if (fwd.vectors.empty()) throw NoUnitEigenvalue("map has no fixed point");
    Mat sigma = detail::hermitize(unvec_rowmajor(fwd.vectors[0], a.D, a.D));
    sigma /= sigma.trace().real();
    Eigen::SelfAdjointEigenSolver<Mat> ses(sigma);
    if (ses.eigenvalues().minCoeff() <= cfg.tol.posdef * ses.eigenvalues().maxCoeff())
        throw NotIrreducible("fixed point is not positive definite");

    // Reorder the spectral decomposition so the diagonal is nonincreasing.
    Mat u = ses.eigenvectors();
    RealVec lam = ses.eigenvalues();
    Mat u_ord(a.D, a.D);
    RealVec lam_ord(a.D);
    for (int k = 0; k < a.D; ++k) {
        u_ord.col(k) = u.col(a.D - 1 - k);
        lam_ord(k) = lam(a.D - 1 - k);
    }
    MpsTensor a2 = a1.conjugated(u_ord.adjoint(), u_ord);

    FormIIGauge g;
    g.rho = rho;
    g.u_sigma = u_ord;
    g.lambda = lam_ord;
    g.similarity = u_ord.adjoint() * sqrt_rho;
    g.similarity_inv = sqrt_rho_inv * u_ord;
    return {std::move(a2), std::move(g)};
}

// Residual of the form-II conditions; handy for tests and reports.
inline double form_ii_residual(const MpsTensor& a) {
    Mat id = Mat::Identity(a.D, a.D);
    double unital = (cp_apply_dual(a, id) - id).norm();
    Mat fix = Mat::Zero(a.D, a.D);
    // Fixed point must be diagonal: compare E(diag) with diag for the exact one.
    // We recompute it here rather than trusting stored data.
    Eigen::ComplexEigenSolver<Mat> es(transfer(a).matrix);
    Eigen::Index best = 0;
    double bd = 1e300;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        double dist = std::abs(es.eigenvalues()(k) - cplx(1, 0));
        if (dist < bd) { bd = dist; best = k; }
    }
    fix = detail::hermitize(unvec_rowmajor(es.eigenvectors().col(best), a.D, a.D));
    fix /= fix.trace().real();
    double offdiag = (fix - Mat(fix.diagonal().asDiagonal())).norm();
    return std::max(unital, offdiag);
}

}  // namespace mpsirr
