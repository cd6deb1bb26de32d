#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mpsirr {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RealVec = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Errors.  Each class carries the exit code used by the CLI:
//   2 = input/validation error, 3 = numerical failure, 4 = verification failure.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& what, int exit_code)
        : std::runtime_error(name + ": " + what),
          name_(std::move(name)),
          exit_code_(exit_code) {}
    const std::string& name() const { return name_; }
    int exit_code() const { return exit_code_; }

private:
    std::string name_;
    int exit_code_;
};

#define MPSIRR_ERROR(NAME, CODE)                              \
    class NAME : public Error {                               \
    public:                                                   \
        explicit NAME(const std::string& what)                \
            : Error(#NAME, what, CODE) {}                     \
    }

MPSIRR_ERROR(ValidationError, 2);
MPSIRR_ERROR(BudgetExceeded, 2);
MPSIRR_ERROR(DimensionMismatch, 2);
MPSIRR_ERROR(InsufficientData, 2);
MPSIRR_ERROR(EigensolverFailure, 3);
MPSIRR_ERROR(NoUnitEigenvalue, 3);
MPSIRR_ERROR(PeripheralMismatch, 3);
MPSIRR_ERROR(NotIrreducible, 3);
MPSIRR_ERROR(ZeroTensor, 3);
MPSIRR_ERROR(IllConditioned, 3);
MPSIRR_ERROR(GaugeFailure, 3);
MPSIRR_ERROR(InconsistentWitness, 4);
MPSIRR_ERROR(NotAWitness, 4);
MPSIRR_ERROR(RankDeficient, 4);

#undef MPSIRR_ERROR

// ---------------------------------------------------------------------------
// Tolerances and run configuration.
// ---------------------------------------------------------------------------

struct Tolerances {
    double peripheral = 1e-8;   // |lambda|/radius window for peripheral set
    double degeneracy = 1e-7;   // eigenvalue multiplicity counting
    double posdef = 1e-9;       // positive-definiteness of fixed points
    double zero = 1e-10;        // discard threshold for radii / multiplicities
    double equiv = 1e-6;        // 1 - equiv is the block-equivalence cutoff
    double mult = 1e-7;         // multiplicity multiset matching
    double witness = 1e-8;      // witness relation residuals
    double projector = 1e-9;    // projector-law residuals

    double& by_name(const std::string& name) {
        static const std::map<std::string, double Tolerances::*> table = {
            {"peripheral", &Tolerances::peripheral},
            {"degeneracy", &Tolerances::degeneracy},
            {"posdef", &Tolerances::posdef},
            {"zero", &Tolerances::zero},
            {"equiv", &Tolerances::equiv},
            {"mult", &Tolerances::mult},
            {"witness", &Tolerances::witness},
            {"projector", &Tolerances::projector},
        };
        auto it = table.find(name);
        if (it == table.end()) throw ValidationError("unknown tolerance '" + name + "'");
        return this->*(it->second);
    }
};

struct Config {
    Tolerances tol;
    std::uint64_t amplitude_cap = std::uint64_t(1) << 24;  // max d^N amplitudes
    int n_check = 8;  // site counts used for direct state verification
};

inline const Config& default_config() {
    static const Config cfg{};
    return cfg;
}

// ---------------------------------------------------------------------------
// Small shared linear-algebra helpers.
// ---------------------------------------------------------------------------

// Kronecker product; composite row index is a*rows(B)+c (row-major pairing).
inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Row-major reshape of a vector of length r*c into an r x c matrix,
// the inverse of vec_rowmajor below.
inline Mat unvec_rowmajor(const Vec& v, Eigen::Index r, Eigen::Index c) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = v(i * c + j);
    return m;
}

inline Vec vec_rowmajor(const Mat& m) {
    Vec v(m.rows() * m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
    return v;
}

// Unitary polar factor: X = U * H with H >= 0; returns U.
inline Mat polar_unitary(const Mat& x) {
    Eigen::JacobiSVD<Mat> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

// Principal square root of a Hermitian positive-definite matrix.
inline Mat hermitian_sqrt(const Mat& x) {
    Eigen::SelfAdjointEigenSolver<Mat> es(x);
    if (es.info() != Eigen::Success) throw EigensolverFailure("hermitian sqrt");
    RealVec vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
}

// d^n with an overflow clamp; anything above `cap` saturates to cap+1.
inline std::uint64_t pow_capped(std::uint64_t d, int n, std::uint64_t cap) {
    std::uint64_t r = 1;
    for (int i = 0; i < n; ++i) {
        if (r > cap / d) return cap + 1;
        r *= d;
    }
    return r;
}

// Deterministic lexicographic order on complex scalars, then matrices.
inline int cplx_compare(cplx a, cplx b, double eps = 0.0) {
    if (a.real() < b.real() - eps) return -1;
    if (a.real() > b.real() + eps) return 1;
    if (a.imag() < b.imag() - eps) return -1;
    if (a.imag() > b.imag() + eps) return 1;
    return 0;
}

inline int mat_compare(const Mat& a, const Mat& b, double eps = 0.0) {
    if (a.rows() != b.rows()) return a.rows() < b.rows() ? -1 : 1;
    if (a.cols() != b.cols()) return a.cols() < b.cols() ? -1 : 1;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (int c = cplx_compare(a(i, j), b(i, j), eps)) return c;
    return 0;
}

}  // namespace mpsirr
