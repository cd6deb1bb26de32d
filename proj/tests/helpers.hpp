#pragma once

#include <random>
#include <vector>

#include "mpsirr/decompose.hpp"
#include "mpsirr/spectral.hpp"
#include "mpsirr/tensor.hpp"

namespace testutil {

using mpsirr::cplx;
using mpsirr::Mat;
using mpsirr::MpsTensor;
using mpsirr::Vec;

// GHZ: A^1 = diag(1,0), A^2 = diag(0,1). Two period-1 blocks.
inline MpsTensor ghz() {
    Mat a0 = Mat::Zero(2, 2), a1 = Mat::Zero(2, 2);
    a0(0, 0) = 1;
    a1(1, 1) = 1;
    return MpsTensor({a0, a1});
}

// Antiferromagnet: A^1 = |0><1|, A^2 = |1><0|. One period-2 block, already in
// form II with fixed point I/2.
inline MpsTensor af() {
    Mat a0 = Mat::Zero(2, 2), a1 = Mat::Zero(2, 2);
    a0(0, 1) = 1;
    a1(1, 0) = 1;
    return MpsTensor({a0, a1});
}

// AKLT: A^i = sigma^i / sqrt(3). Normal (period 1), transfer eigenvalues
// {1, -1/3, -1/3, -1/3}.
inline MpsTensor aklt() {
    double s = 1.0 / std::sqrt(3.0);
    Mat x(2, 2), y(2, 2), z(2, 2);
    x << 0, 1, 1, 0;
    y << 0, cplx(0, -1), cplx(0, 1), 0;
    z << 1, 0, 0, -1;
    return MpsTensor({s * x, s * y, s * z});
}

inline Mat random_matrix(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> g;
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = cplx(g(rng), g(rng));
    return m;
}

inline MpsTensor random_tensor(std::mt19937_64& rng, int d, int D) {
    std::vector<Mat> mats;
    for (int i = 0; i < d; ++i) mats.push_back(random_matrix(rng, D, D));
    return MpsTensor(std::move(mats));
}

inline Mat random_unitary(std::mt19937_64& rng, int n) {
    Eigen::HouseholderQR<Mat> qr(random_matrix(rng, n, n));
    Mat q = qr.householderQ();
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int k = 0; k < n; ++k) {
        cplx diag = r(k, k);
        if (std::abs(diag) > 0) q.col(k) *= diag / std::abs(diag);
    }
    return q;
}

// Random invertible matrix with condition number <= max_cond.
inline Mat random_invertible(std::mt19937_64& rng, int n, double max_cond = 100.0) {
    std::uniform_real_distribution<double> u(1.0, max_cond);
    Eigen::VectorXd sv(n);
    sv(0) = 1.0;
    for (int k = 1; k < n; ++k) sv(k) = 1.0 / u(rng);
    return random_unitary(rng, n) * sv.asDiagonal() * random_unitary(rng, n);
}

// Random trace-preserving (dual unital) tensor: slices of a d*D x D isometry.
inline MpsTensor random_channel_tensor(std::mt19937_64& rng, int d, int D) {
    Mat m = random_matrix(rng, d * D, D);
    Eigen::HouseholderQR<Mat> qr(m);
    Mat q = Mat(qr.householderQ()).leftCols(D);  // d*D x D, q^+ q = I
    std::vector<Mat> mats;
    for (int i = 0; i < d; ++i) mats.push_back(q.block(i * D, 0, D, D));
    return MpsTensor(std::move(mats));  // sum A^i+ A^i = I
}

// Random irreducible block of period m: bond space C^m (x) C^D0 with
// A^i = sum_u E_{u,u+1} (x) M_u^i, each slice family {M_u^i} from a random
// isometry. Dual unital by construction; retried until the subleading
// eigenvalue modulus is below `gap` so tail sums converge fast.
inline mpsirr::MpsTensor random_periodic_block(std::mt19937_64& rng, int d, int D0, int m,
                                               double gap = 0.7) {
    for (int attempt = 0; attempt < 200; ++attempt) {
        std::vector<Mat> mats(d, Mat::Zero(m * D0, m * D0));
        for (int u = 0; u < m; ++u) {
            MpsTensor slice = random_channel_tensor(rng, d, D0);
            int v = (u + 1) % m;
            for (int i = 0; i < d; ++i)
                mats[i].block(v * D0, u * D0, D0, D0) = slice.mats[i];
        }
        MpsTensor cand(mats);
        mpsirr::SpectralData sd =
            mpsirr::spectral_data(mpsirr::transfer(cand), mpsirr::default_config());
        // Want exactly m peripheral eigenvalues and a clear gap below them.
        if (static_cast<int>(sd.peripheral.size()) != m) continue;
        double sub = 0;
        for (cplx ev : sd.eigenvalues) {
            double a = std::abs(ev);
            if (a < 1.0 - 1e-6) sub = std::max(sub, a);
        }
        if (sub <= gap) return cand;
    }
    throw std::runtime_error("could not generate a gapped periodic block");
}

// Assembles blocks with given weights into a direct sum.
inline MpsTensor direct_sum(const std::vector<MpsTensor>& blocks,
                            const std::vector<cplx>& weights) {
    int d = blocks.at(0).d, D = 0;
    for (const MpsTensor& b : blocks) D += b.D;
    std::vector<Mat> mats(d, Mat::Zero(D, D));
    int off = 0;
    for (std::size_t j = 0; j < blocks.size(); ++j) {
        for (int i = 0; i < d; ++i)
            mats[i].block(off, off, blocks[j].D, blocks[j].D) = weights[j] * blocks[j].mats[i];
        off += blocks[j].D;
    }
    return MpsTensor(std::move(mats));
}

// Random multi-block form-II-style tensor: direct sum of gapped periodic
// blocks with weights of modulus <= 1 (at least one of modulus 1).
inline MpsTensor random_assembly(std::mt19937_64& rng, int d, int n_blocks, int max_m = 3,
                                 int D0 = 2) {
    std::uniform_int_distribution<int> mdist(1, max_m);
    std::uniform_real_distribution<double> phase(0.0, 2 * mpsirr::kPi);
    std::uniform_real_distribution<double> mag(0.5, 1.0);
    std::vector<MpsTensor> blocks;
    std::vector<cplx> weights;
    for (int j = 0; j < n_blocks; ++j) {
        blocks.push_back(random_periodic_block(rng, d, D0, mdist(rng)));
        double r = (j == 0) ? 1.0 : mag(rng);
        weights.push_back(std::polar(r, phase(rng)));
    }
    return direct_sum(blocks, weights);
}

}  // namespace testutil
