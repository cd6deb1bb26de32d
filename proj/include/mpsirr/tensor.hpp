#pragma once

// Site tensors, brute-force state contraction, blocking, transfer operators.

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mpsirr/core.hpp"

namespace mpsirr {

// A translationally invariant site tensor: d complex D x D matrices.
struct MpsTensor {
    int d = 0;
    int D = 0;
    std::vector<Mat> mats;

    MpsTensor() = default;
    MpsTensor(std::vector<Mat> matrices) : mats(std::move(matrices)) {
        if (mats.empty()) throw ValidationError("tensor needs at least one matrix");
        d = static_cast<int>(mats.size());
        D = static_cast<int>(mats[0].rows());
        if (D < 1) throw ValidationError("bond dimension must be >= 1");
        for (const Mat& m : mats) {
            if (m.rows() != D || m.cols() != D)
                throw ValidationError("all matrices must be square of equal size");
            if (!m.allFinite()) throw ValidationError("tensor entries must be finite");
        }
    }

    const Mat& operator[](int i) const { return mats[i]; }

    MpsTensor scaled(cplx factor) const {
        std::vector<Mat> out;
        out.reserve(mats.size());
        for (const Mat& m : mats) out.push_back(factor * m);
        return MpsTensor(std::move(out));
    }

    // Gauge transform g . A^i . g^{-1} for all i.
    MpsTensor conjugated(const Mat& g, const Mat& g_inv) const {
        std::vector<Mat> out;
        out.reserve(mats.size());
        for (const Mat& m : mats) out.push_back(g * m * g_inv);
        return MpsTensor(std::move(out));
    }

    double max_norm() const {
        double n = 0;
        for (const Mat& m : mats) n = std::max(n, m.norm());
        return n;
    }
};

// Dense amplitude table of the N-site state generated by one tensor.
// Index (i_1,...,i_N) flattens row-major: i_1*d^{N-1} + ... + i_N (0-based).
struct StateVector {
    int N = 0;
    int d = 0;
    Vec amplitudes;
};

struct TransferOperator {
    int Da = 0;
    int Db = 0;
    Mat matrix;  // (Da*Db) x (Da*Db)
};

inline void check_budget(int d, int N, const Config& cfg) {
    if (pow_capped(static_cast<std::uint64_t>(d), N, cfg.amplitude_cap) > cfg.amplitude_cap)
        throw BudgetExceeded("d^N = " + std::to_string(d) + "^" + std::to_string(N) +
                             " exceeds amplitude cap");
}

namespace detail {
inline void contract_rec(const MpsTensor& a, int depth, int N, const Mat& partial,
                         std::uint64_t base, Vec& amps) {
    if (depth == N) {
        amps(static_cast<Eigen::Index>(base)) = partial.trace();
        return;
    }
    for (int i = 0; i < a.d; ++i)
        contract_rec(a, depth + 1, N, Mat(partial * a.mats[i]), base * a.d + i, amps);
}
}  // namespace detail

// Amplitude at (i_1,...,i_N) is tr(A^{i_1} ... A^{i_N}); no normalization.
inline StateVector contract_state(const MpsTensor& a, int N,
                                  const Config& cfg = default_config()) {
    if (N < 1) throw ValidationError("N must be positive");
    check_budget(a.d, N, cfg);
    std::uint64_t len = pow_capped(a.d, N, cfg.amplitude_cap);
    StateVector out{N, a.d, Vec(static_cast<Eigen::Index>(len))};
    detail::contract_rec(a, 0, N, Mat::Identity(a.D, a.D), 0, out.amplitudes);
    return out;
}

// Tensor of all length-p products, physical dimension d^p, with the multi-index
// (i_1,...,i_p) flattened in the same row-major order as StateVector.
inline MpsTensor block(const MpsTensor& a, int p, const Config& cfg = default_config()) {
    if (p < 1) throw ValidationError("p must be positive");
    if (p == 1) return a;
    check_budget(a.d, p, cfg);
    std::vector<Mat> mats(static_cast<std::size_t>(pow_capped(a.d, p, cfg.amplitude_cap)));
    // Mats for p indices are built by extending each (p-1)-prefix product.
    std::vector<Mat> prefix{Mat::Identity(a.D, a.D)};
    for (int k = 0; k < p; ++k) {
        std::vector<Mat> next;
        next.reserve(prefix.size() * a.d);
        for (const Mat& m : prefix)
            for (int i = 0; i < a.d; ++i) next.push_back(m * a.mats[i]);
        prefix = std::move(next);
    }
    for (std::size_t j = 0; j < prefix.size(); ++j) mats[j] = std::move(prefix[j]);
    return MpsTensor(std::move(mats));
}

// E = sum_i A^i (x) conj(B^i).  Reshaping an eigenvector row-major into the
// Da x Db matrix X turns the eigen-equation into sum_i A^i X B^{i dagger} = l X.
inline TransferOperator transfer(const MpsTensor& a, const MpsTensor& b) {
    if (a.d != b.d) throw DimensionMismatch("physical dimensions differ");
    Mat e = Mat::Zero(a.D * b.D, a.D * b.D);
    for (int i = 0; i < a.d; ++i) e += kron(a.mats[i], b.mats[i].conjugate());
    return TransferOperator{a.D, b.D, std::move(e)};
}

inline TransferOperator transfer(const MpsTensor& a) { return transfer(a, a); }

// The CP map E_A(X) = sum_i A^i X A^{i dagger} and its dual, applied to a matrix.
inline Mat cp_apply(const MpsTensor& a, const Mat& x) {
    Mat out = Mat::Zero(a.D, a.D);
    for (const Mat& m : a.mats) out += m * x * m.adjoint();
    return out;
}

inline Mat cp_apply_dual(const MpsTensor& a, const Mat& x) {
    Mat out = Mat::Zero(a.D, a.D);
    for (const Mat& m : a.mats) out += m.adjoint() * x * m;
    return out;
}

// tr(M^N) through the eigenvalues; robust for the large N used in limit checks.
inline cplx trace_power(const Mat& m, long long n) {
    Eigen::ComplexEigenSolver<Mat> es(m, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw EigensolverFailure("trace_power");
    cplx sum = 0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
        sum += std::pow(es.eigenvalues()(k), cplx(static_cast<double>(n), 0));
    return sum;
}

// <V_N(A)|V_N(B)> = tr((sum_i B^i (x) conj(A^i))^N).
inline cplx overlap(const MpsTensor& a, const MpsTensor& b, int N) {
    if (a.d != b.d) throw DimensionMismatch("physical dimensions differ");
    return trace_power(transfer(b, a).matrix, N);
}

}  // namespace mpsirr
