// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Run via ctest or directly (needs MPSIRR_BIN for the CLI checks).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "helpers.hpp"
#include "mpsirr/applications.hpp"
#include "mpsirr/compare.hpp"
#include "mpsirr/io.hpp"
#include "mpsirr/power_sums.hpp"

using namespace mpsirr;

namespace {

const Config cfg = default_config();
int failures = 0;

void report(int idx, const std::string& name, bool pass, const std::string& detail = "") {
    std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << idx << ": " << name;
    if (!detail.empty()) std::cout << "  (" << detail << ")";
    std::cout << std::endl;
    if (!pass) ++failures;
}

double family_mismatch(const MpsTensor& a, const MpsTensor& b, int n_max) {
    double worst = 0;
    for (int N = 1; N <= n_max; ++N) {
        if (pow_capped(a.d, N, cfg.amplitude_cap) > cfg.amplitude_cap) break;
        Vec va = contract_state(a, N, cfg).amplitudes;
        Vec vb = contract_state(b, N, cfg).amplitudes;
        double floor = std::pow(std::max({a.max_norm(), b.max_norm(), 1e-300}), N);
        worst = std::max(worst, (va - vb).norm() / std::max({va.norm(), vb.norm(), floor}));
    }
    return worst;
}

// 1. decompose/assemble preserves the family on 200 random tensors.
void criterion1() {
    std::mt19937_64 rng(101);
    double worst = 0;
    int count = 0;
    std::string detail;
    bool pass = true;
    try {
        for (int trial = 0; trial < 200; ++trial) {
            int d = 2 + static_cast<int>(rng() % 2);
            int D = 2 + static_cast<int>(rng() % 5);
            MpsTensor a = testutil::random_tensor(rng, d, D);
            BlockDecomposition dec = decompose(a, cfg);
            worst = std::max(worst, family_mismatch(a, assemble(dec), 8));
            ++count;
        }
        pass = worst <= 1e-8;
        detail = "200 tensors, worst relative mismatch " + std::to_string(worst);
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception after ") + std::to_string(count) + ": " + e.what();
    }
    report(1, "decomposition soundness on random tensors", pass, detail);
}

// 2. Named states: GHZ, AF, AKLT structure.
void criterion2() {
    bool pass = true;
    std::string detail;
    try {
        BlockDecomposition dg = decompose(testutil::ghz(), cfg);
        std::size_t copies = 0;
        for (const auto& m : dg.multiplicities) copies += m.size();
        pass &= copies == 2;
        for (const auto& b : dg.basis) pass &= b.period == 1;

        BlockDecomposition da = decompose(testutil::af(), cfg);
        pass &= da.basis.size() == 1 && da.basis[0].period == 2;
        const PeriodStructure& ps = da.basis[0].structure;
        Mat sum = Mat::Zero(2, 2);
        for (int u = 0; u < 2; ++u) {
            const Mat& p = ps.projectors[u];
            pass &= (p * p - p).norm() <= 1e-9;
            pass &= (p - p.adjoint()).norm() <= 1e-9;
            pass &= (cp_apply_dual(da.basis[0].tensor, p) - ps.projectors[(u + 1) % 2]).norm() <=
                    1e-9;
            sum += p;
        }
        pass &= (sum - Mat::Identity(2, 2)).norm() <= 1e-9;

        BlockDecomposition dk = decompose(testutil::aklt(), cfg);
        pass &= dk.basis.size() == 1 && dk.basis[0].period == 1;
        SpectralData sd = spectral_data(transfer(dk.basis[0].tensor), cfg);
        std::vector<cplx> evs(sd.eigenvalues.begin(), sd.eigenvalues.end());
        std::sort(evs.begin(), evs.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
        for (int k = 0; k < 3; ++k) pass &= std::abs(evs[k] + cplx(1.0 / 3, 0)) <= 1e-9;
        pass &= std::abs(evs[3] - cplx(1, 0)) <= 1e-9;
        detail = "GHZ/AF/AKLT structure and spectra";
    } catch (const std::exception& e) {
        pass = false;
        detail = e.what();
    }
    report(2, "named states", pass, detail);
}

// 3. 100 gauge round trips.
void criterion3() {
    std::mt19937_64 rng(103);
    bool pass = true;
    std::string detail;
    double worst_rel = 0, worst_comm = 0, worst_phase = 0;
    try {
        int done = 0;
        for (int trial = 0; trial < 140 && done < 100; ++trial) {
            MpsTensor raw = testutil::random_assembly(rng, 2, 1 + static_cast<int>(rng() % 2));
            BlockDecomposition dec = decompose(raw, cfg);
            MpsTensor a = assemble(dec);
            BlockDecomposition da = decompose(a, cfg);
            // B = Y0^-1 (Z0 A) Y0
            Mat z0 = Mat::Zero(a.D, a.D);
            int off = 0;
            for (std::size_t j = 0; j < da.basis.size(); ++j)
                for (std::size_t l = 0; l < da.multiplicities[j].size(); ++l) {
                    int m = da.basis[j].period, dj = da.basis[j].dim();
                    cplx root = std::polar(1.0, 2 * kPi * static_cast<double>(rng() % m) / m);
                    z0.block(off, off, dj, dj) = root * Mat::Identity(dj, dj);
                    off += dj;
                }
            Mat y0 = testutil::random_invertible(rng, a.D, 100.0);
            std::vector<Mat> bm;
            for (const Mat& m : a.mats) bm.push_back(y0.inverse() * (z0 * m) * y0);
            MpsTensor b(std::move(bm));

            auto rel = compare_equal_natural(a, b, cfg);
            if (!rel) {
                pass = false;
                detail = "no witness found on trial " + std::to_string(trial);
                break;
            }
            Mat u_inv = rel->u.inverse();
            for (int i = 0; i < a.d; ++i) {
                worst_rel = std::max(
                    worst_rel, (rel->z * a.mats[i] - rel->u * b.mats[i] * u_inv).norm());
                worst_comm =
                    std::max(worst_comm, (rel->z * a.mats[i] - a.mats[i] * rel->z).norm());
            }
            worst_phase = std::max(worst_phase, rel->assembled.phase_residual);
            ++done;
        }
        if (pass) {
            pass = done == 100 && worst_rel <= 1e-8 && worst_comm <= 1e-9 &&
                   worst_phase <= 1e-9;
            detail = std::to_string(done) + " instances, relation " + std::to_string(worst_rel) +
                     ", commutator " + std::to_string(worst_comm) + ", phases " +
                     std::to_string(worst_phase);
        }
    } catch (const std::exception& e) {
        pass = false;
        detail = e.what();
    }
    report(3, "gauge round trip (equal families)", pass, detail);
}

// 4. Blocking lemmas for m,p <= 6 and unique decomposition for m,p <= 12.
void criterion4() {
    std::mt19937_64 rng(104);
    bool pass = true;
    std::string detail = "";
    try {
        for (int m = 1; m <= 6 && pass; ++m) {
            MpsTensor a = testutil::random_periodic_block(rng, 2, 2, m);
            PeriodStructure ps = period(a, cfg).second;
            for (int p = 1; p <= 6 && pass; ++p) {
                if (pow_capped(2, p, cfg.amplitude_cap) > 64) break;
                int r = std::gcd(m, p);
                BlockDecomposition dec = decompose(block(a, p, cfg), cfg);
                std::size_t copies = 0;
                for (const auto& mu : dec.multiplicities) copies += mu.size();
                if (copies != static_cast<std::size_t>(r)) {
                    pass = false;
                    detail = "m=" + std::to_string(m) + " p=" + std::to_string(p) +
                             ": expected " + std::to_string(r) + " blocks, got " +
                             std::to_string(copies);
                    break;
                }
                for (const auto& b : dec.basis)
                    if (b.period != m / r) {
                        pass = false;
                        detail = "wrong period at m=" + std::to_string(m) +
                                 " p=" + std::to_string(p);
                    }
                // supports must match the merged projectors
                if (pass && dec.exact_gauge) {
                    std::vector<Mat> pt(r, Mat::Zero(a.D, a.D));
                    for (int alpha = 0; alpha < r; ++alpha)
                        for (int k = 0; k < m / r; ++k)
                            pt[alpha] += ps.projectors[(alpha + p * k) % m];
                    const Mat& g = *dec.exact_gauge;
                    int off = 0;
                    for (std::size_t j = 0; j < dec.basis.size() && pass; ++j)
                        for (std::size_t l = 0; l < dec.multiplicities[j].size(); ++l) {
                            int dj = dec.basis[j].dim();
                            Mat cols = g.middleCols(off, dj);
                            int hits = 0;
                            for (int alpha = 0; alpha < r; ++alpha)
                                if ((pt[alpha] * cols).norm() / cols.norm() > 1e-6) ++hits;
                            if (hits != 1) {
                                pass = false;
                                detail = "support split across merged projectors";
                            }
                            off += dj;
                        }
                }
            }
        }
        for (int m = 1; m <= 12 && pass; ++m)
            for (int p = 1; p <= 12 && pass; ++p) {
                int r = std::gcd(m, p);
                std::set<std::pair<int, int>> seen;
                for (int u = 0; u < m; ++u) {
                    auto [alpha, k] = unique_decomposition(u, m, p);
                    if (alpha < 0 || alpha >= r || k < 0 || k >= m / r ||
                        (alpha + p * k) % m != u) {
                        pass = false;
                        detail = "unique decomposition broken";
                    }
                    seen.insert({alpha, k});
                }
                if (static_cast<int>(seen.size()) != m) {
                    pass = false;
                    detail = "unique decomposition not bijective";
                }
            }
        if (pass) detail = "m,p <= 6 blocking; m,p <= 12 exhaustive labels";
    } catch (const std::exception& e) {
        pass = false;
        detail = e.what();
    }
    report(4, "blocking lemmas", pass, detail);
}

// 5. Tail limits: tr(E^N) -> m, cross overlaps vanish.
void criterion5() {
    std::mt19937_64 rng(105);
    bool pass = true;
    std::string detail;
    try {
        std::vector<MpsTensor> blocks;
        std::vector<int> periods = {1, 2, 3};
        for (int m : periods) blocks.push_back(testutil::random_periodic_block(rng, 2, 2, m));
        double worst_tr = 0;
        for (std::size_t j = 0; j < blocks.size(); ++j) {
            Mat e = transfer(blocks[j]).matrix;
            for (int mult : {40, 50, 60})
                worst_tr = std::max(worst_tr,
                                    std::abs(trace_power(e, mult * periods[j]) -
                                             cplx(periods[j], 0)));
        }
        double worst_ov = 0;
        for (std::size_t j = 0; j < blocks.size(); ++j)
            for (std::size_t k = j + 1; k < blocks.size(); ++k) {
                int N = 60 * std::lcm(periods[j], periods[k]);
                worst_ov = std::max(worst_ov, std::abs(overlap(blocks[j], blocks[k], N)));
            }
        pass = worst_tr <= 1e-6 && worst_ov <= 1e-4;
        detail = "trace gap " + std::to_string(worst_tr) + ", overlap " +
                 std::to_string(worst_ov);
    } catch (const std::exception& e) {
        pass = false;
        detail = e.what();
    }
    report(5, "tail limits of traces and overlaps", pass, detail);
}

// 6. Refinement <-> divisibility round trips; telescoping identity m,p <= 8.
void criterion6() {
    std::mt19937_64 rng(106);
    bool pass = true;
    std::string detail;
    double worst = 0;
    try {
        auto round_trip = [&](const MpsTensor& b, const MpsTensor& a, int p) {
            RefinementWitness w = refinement_from_divisibility(b, a, p, cfg);
            RefinementReport rr = check_refinement(b, a, w, 3, cfg);
            if (!rr.pass) return false;
            for (double r : rr.residuals) worst = std::max(worst, r);
            DivisibilityWitness dv = divisibility_from_refinement(b, a, w, cfg);
            DivisibilityReport back = check_divisibility(b, dv.root_tensor, p, cfg);
            worst = std::max(worst, back.power_residual);
            return back.power_residual <= 1e-7;
        };
        pass &= round_trip(testutil::ghz(), testutil::ghz(), 2);
        pass &= round_trip(testutil::ghz(), testutil::ghz(), 3);
        pass &= round_trip(testutil::ghz(), testutil::af(), 2);
        int done = 0;
        for (int trial = 0; trial < 12 && done < 5; ++trial) {
            MpsTensor a = testutil::random_periodic_block(rng, 2, 2, 1);
            int p = 2 + (trial % 2);
            MpsTensor b = block(a, p, cfg);
            if (!check_divisibility(b, a, p, cfg).pass) continue;
            pass &= round_trip(b, a, p);
            ++done;
        }
        pass &= done == 5;
        // telescoping identity
        for (int m = 1; m <= 8 && pass; ++m)
            for (int p = 1; p <= 8 && pass; ++p) {
                int r = std::gcd(m, p);
                std::vector<cplx> c(r);
                for (int alpha = 0; alpha < r; ++alpha)
                    c[alpha] = std::polar(
                        1.0, 2 * kPi * static_cast<double>(rng() % (m / r)) / (m / r));
                for (int u = 0; u < m; ++u) {
                    cplx prod(1, 0);
                    for (int k = 0; k < p; ++k) {
                        int uu = (u + k) % m;
                        auto [ac, kc] = unique_decomposition(uu, m, p);
                        auto [an, kn] = unique_decomposition((uu + 1) % m, m, p);
                        prod *= std::pow(c[an], static_cast<double>(kn)) /
                                std::pow(c[ac], static_cast<double>(kc));
                    }
                    if (std::abs(prod - c[unique_decomposition(u, m, p).first]) > 1e-12)
                        pass = false;
                }
            }
        detail = "worst residual " + std::to_string(worst);
    } catch (const std::exception& e) {
        pass = false;
        detail = e.what();
    }
    report(6, "refinement/divisibility round trips", pass, detail);
}

// 7. Symmetry corollary on GHZ and AF.
void criterion7() {
    bool pass = true;
    std::string detail;
    try {
        Mat x(2, 2), h(2, 2);
        x << 0, 1, 1, 0;
        h << 1, 1, 1, -1;
        h /= std::sqrt(2.0);
        auto wg = symmetry_gauge(testutil::ghz(), x, cfg);
        auto wa = symmetry_gauge(testutil::af(), x, cfg);
        pass &= wg.has_value() && wg->relation_residual <= 1e-8;
        pass &= wa.has_value() && wa->relation_residual <= 1e-8;
        pass &= !symmetry_gauge(testutil::ghz(), h, cfg).has_value();
        detail = "X accepted on GHZ and AF, Hadamard rejected on GHZ";
    } catch (const std::exception& e) {
        pass = false;
        detail = e.what();
    }
    report(7, "symmetry witnesses", pass, detail);
}

// 8. Moments oracle.
void criterion8() {
    std::mt19937_64 rng(108);
    bool pass = true;
    std::string detail;
    try {
        std::uniform_real_distribution<double> mag(0.5, 2.0), ang(0.0, 2 * kPi);
        for (int trial = 0; trial < 100 && pass; ++trial) {
            int n = 1 + static_cast<int>(rng() % 5);
            std::vector<cplx> mu;
            for (int k = 0; k < n; ++k) mu.push_back(std::polar(mag(rng), ang(rng)));
            std::vector<cplx> p;
            for (int k = 1; k <= n; ++k) {
                cplx s = 0;
                for (cplx m : mu) s += std::pow(m, k);
                p.push_back(s);
            }
            if (!multiset_equal(mu, multiset_from_power_sums(p, static_cast<int>(p.size()), cfg), 1e-7)) pass = false;
        }
        auto table = [](const std::vector<cplx>& mu, int n0, int len) {
            std::vector<cplx> t;
            for (int N = n0; N < n0 + len; ++N) {
                cplx s = 0;
                for (cplx m : mu) s += std::pow(m, N);
                t.push_back(s);
            }
            return t;
        };
        std::uniform_real_distribution<double> m2(0.6, 1.4);
        int n0 = 3, len = 60;
        for (int trial = 0; trial < 100 && pass; ++trial) {
            int n = 1 + static_cast<int>(rng() % 4);
            std::vector<cplx> mu, nu;
            for (int k = 0; k < n; ++k) mu.push_back(std::polar(m2(rng), ang(rng)));
            bool equal = (rng() % 2) == 0;
            nu = mu;
            if (equal)
                std::shuffle(nu.begin(), nu.end(), rng);
            else
                nu[rng() % n] *= std::polar(1.0, 0.4 + ang(rng) / 10.0);
            bool got = power_sum_tail_match(table(mu, n0, len), table(nu, n0, len), n0, 6, cfg);
            if (got != multiset_equal(mu, nu, 1e-9)) pass = false;
        }
        // adversarial aliasing
        cplx w3 = std::polar(1.0, 2 * kPi / 3);
        std::vector<cplx> roots = {cplx(1, 0), w3, w3 * w3};
        std::vector<cplx> ones = {cplx(1, 0), cplx(1, 0), cplx(1, 0)};
        pass &= !power_sum_tail_match(table(roots, n0, len), table(ones, n0, len), n0, 6, cfg);
        std::vector<cplx> pm = {cplx(1, 0), cplx(-1, 0)};
        std::vector<cplx> ones2 = {cplx(1, 0), cplx(1, 0)};
        pass &= !power_sum_tail_match(table(pm, n0, len), table(ones2, n0, len), n0, 6, cfg);
        pass &= power_sum_tail_match(table(roots, n0, len), table(roots, n0, len), n0, 6, cfg);
        detail = "100 recoveries, 100 tail matches, aliasing cases";
    } catch (const std::exception& e) {
        pass = false;
        detail = e.what();
    }
    report(8, "moments oracle", pass, detail);
}

// 9. CLI determinism and exit codes (needs MPSIRR_BIN).
void criterion9() {
    bool pass = true;
    std::string detail;
    const char* binc = std::getenv("MPSIRR_BIN");
    if (!binc) {
        report(9, "CLI determinism and exit codes", false, "MPSIRR_BIN not set");
        return;
    }
    std::string bin = binc;
    std::string dir = "mpsirr_acceptance_tmp";
    std::system(("mkdir -p " + dir).c_str());
    auto run = [&](const std::string& args) {
        int rc = std::system((bin + " " + args + " > /dev/null 2>&1").c_str());
        return WEXITSTATUS(rc);
    };
    auto slurp = [](const std::string& path) {
        std::ifstream f(path);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    try {
        std::vector<std::pair<std::string, MpsTensor>> corpus = {
            {"ghz", testutil::ghz()}, {"af", testutil::af()}, {"aklt", testutil::aklt()}};
        for (auto& [name, t] : corpus) {
            std::string in = dir + "/" + name + ".json";
            write_json(in, tensor_to_json(t));
            std::string o1 = dir + "/a.json", o2 = dir + "/b.json";
            if (run("canonicalize " + in + " --out " + o1) != 0) pass = false;
            if (run("canonicalize " + in + " --out " + o2) != 0) pass = false;
            if (slurp(o1) != slurp(o2)) pass = false;
        }
        // exit-code contract
        std::string bad = dir + "/bad.json";
        std::ofstream(bad) << "{ nope";
        if (run("canonicalize " + bad) != 2) pass = false;
        json zero{{"d", 1}, {"D", 1},
                  {"matrices", json::array({json::array(
                      {json::array({json::array({0.0, 0.0})})})})}};
        std::string zf = dir + "/zero.json";
        write_json(zf, zero);
        if (run("canonicalize " + zf) != 3) pass = false;
        std::string ghzf = dir + "/ghz.json", aff = dir + "/af.json";
        Mat badw = Mat::Zero(4, 2);
        badw(0, 0) = 1;
        badw(3, 1) = 1;
        std::string wf = dir + "/badw.json";
        write_json(wf, matrix_to_json(badw));
        if (run("refine check " + ghzf + " " + aff + " --w " + wf + " --p 2") != 4) pass = false;
        if (run("canonicalize " + ghzf) != 0) pass = false;
        detail = "byte-identical reports; exit codes 0/2/3/4";
    } catch (const std::exception& e) {
        pass = false;
        detail = e.what();
    }
    report(9, "CLI determinism and exit codes", pass, detail);
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    if (failures) {
        std::cout << failures << " criterion(s) failed" << std::endl;
        return 1;
    }
    std::cout << "all acceptance criteria passed" << std::endl;
    return 0;
}
