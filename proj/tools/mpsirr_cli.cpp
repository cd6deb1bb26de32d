// mpsirr: canonical forms and gauge witnesses for translationally invariant
// MPS tensors. See README.md for formats and exit codes.

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mpsirr/applications.hpp"
#include "mpsirr/compare.hpp"
#include "mpsirr/core.hpp"
#include "mpsirr/decompose.hpp"
#include "mpsirr/io.hpp"

namespace {

using mpsirr::json;
using mpsirr::Mat;
using mpsirr::MpsTensor;

struct CommonOpts {
    std::vector<std::string> tol_overrides;
    int n_check = -1;
    std::uint64_t budget = 0;
    std::string out;
    std::string format = "json";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--tol", o.tol_overrides, "Tolerance override, name=value (repeatable)");
    cmd->add_option("--n-check", o.n_check, "State-verification range (N = 1..n)");
    cmd->add_option("--budget", o.budget, "Amplitude budget cap (max d^N entries)");
    cmd->add_option("--out", o.out, "Report output path (default: stdout)");
    cmd->add_option("--format", o.format, "Report format")
        ->check(CLI::IsMember({"json", "text"}));
}

mpsirr::Config make_config(const CommonOpts& o) {
    mpsirr::Config cfg = mpsirr::default_config();
    if (const char* path = std::getenv("MPSIRR_CONFIG")) {
        json j = mpsirr::detail::read_json_file(path);
        if (j.contains("tolerances"))
            for (auto& [k, v] : j["tolerances"].items())
                cfg.tol.by_name(k) = v.get<double>();
        if (j.contains("n_check")) cfg.n_check = j["n_check"].get<int>();
        if (j.contains("budget")) cfg.amplitude_cap = j["budget"].get<std::uint64_t>();
    }
    for (const std::string& kv : o.tol_overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw mpsirr::ValidationError("--tol expects name=value, got " + kv);
        std::string name = kv.substr(0, eq);
        double v = std::stod(kv.substr(eq + 1));
        if (v <= 0 || v >= 1) throw mpsirr::ValidationError("tolerance must be in (0,1)");
        cfg.tol.by_name(name) = v;
    }
    if (o.n_check != -1) {
        if (o.n_check < 1) throw mpsirr::ValidationError("--n-check must be >= 1");
        cfg.n_check = o.n_check;
    }
    if (o.budget != 0) cfg.amplitude_cap = o.budget;
    return cfg;
}

void emit(const CommonOpts& o, const json& report, const std::string& text) {
    if (o.format == "text") {
        if (o.out.empty()) {
            std::cout << text;
        } else {
            std::ofstream f(o.out);
            if (!f) throw mpsirr::ValidationError("cannot write " + o.out);
            f << text;
        }
        return;
    }
    if (o.out.empty())
        std::cout << report.dump(2) << "\n";
    else
        mpsirr::write_json(o.out, report);
}

json decomposition_report(const mpsirr::BlockDecomposition& dec) {
    json blocks = json::array();
    for (std::size_t j = 0; j < dec.basis.size(); ++j) {
        json mults = json::array();
        for (mpsirr::cplx mu : dec.multiplicities[j]) mults.push_back(mpsirr::detail::dump_cplx(mu));
        blocks.push_back(json{{"period", dec.basis[j].period},
                              {"bond_dimension", dec.basis[j].dim()},
                              {"multiplicities", std::move(mults)},
                              {"tensor", mpsirr::tensor_to_json(dec.basis[j].tensor)}});
    }
    json rep{{"command", "canonicalize"},
             {"blocks", std::move(blocks)},
             {"assembled", mpsirr::tensor_to_json(mpsirr::assemble(dec))}};
    if (dec.exact_gauge) rep["gauge"] = mpsirr::matrix_to_json(*dec.exact_gauge);
    return rep;
}

int run_canonicalize(const std::string& input, const CommonOpts& o,
                     const std::string& emit_tensor) {
    mpsirr::Config cfg = make_config(o);
    MpsTensor a = mpsirr::load_tensor(input);
    mpsirr::BlockDecomposition dec = mpsirr::decompose(a, cfg);
    json rep = decomposition_report(dec);
    if (!emit_tensor.empty()) mpsirr::write_json(emit_tensor, rep["assembled"]);
    std::string text = "canonicalize: " + std::to_string(dec.basis.size()) + " basis block(s)\n";
    for (std::size_t j = 0; j < dec.basis.size(); ++j)
        text += "  block " + std::to_string(j) + ": period " +
                std::to_string(dec.basis[j].period) + ", bond dim " +
                std::to_string(dec.basis[j].dim()) + ", multiplicity " +
                std::to_string(dec.multiplicities[j].size()) + "\n";
    emit(o, rep, text);
    return 0;
}

int run_compare(const std::string& fa, const std::string& fb, const std::string& mode,
                const CommonOpts& o) {
    mpsirr::Config cfg = make_config(o);
    MpsTensor a = mpsirr::load_tensor(fa), b = mpsirr::load_tensor(fb);
    if (a.d != b.d) throw mpsirr::DimensionMismatch("physical dimensions differ");
    json rep{{"command", "compare"}, {"mode", mode}};
    auto matching = mpsirr::compare_proportional(a, b, cfg);
    if (!matching) {
        rep["verdict"] = "no-match";
        rep["failed_stage"] = "basis";
        emit(o, rep, "compare: no-match (basis)\n");
        return 4;
    }
    if (mode == "proportional") {
        json pairs = json::array();
        for (const auto& pr : matching->pairs)
            pairs.push_back(json{{"a_block", pr.a_index},
                                 {"b_block", pr.b_index},
                                 {"xi", pr.xi},
                                 {"y", mpsirr::matrix_to_json(pr.y)}});
        rep["verdict"] = "match";
        rep["pairs"] = std::move(pairs);
        emit(o, rep, "compare: match (proportional, " +
                         std::to_string(matching->pairs.size()) + " block pair(s))\n");
        return 0;
    }
    std::optional<mpsirr::GaugeRelation> rel;
    try {
        rel = mpsirr::compare_equal(a, b, cfg);
    } catch (const mpsirr::InconsistentWitness& e) {
        rep["verdict"] = "no-match";
        rep["failed_stage"] = "verification";
        rep["detail"] = e.what();
        emit(o, rep, "compare: no-match (verification)\n");
        return 4;
    }
    if (!rel) {
        rep["verdict"] = "no-match";
        rep["failed_stage"] = "multiplicity";
        emit(o, rep, "compare: no-match (multiplicity)\n");
        return 4;
    }
    rep["verdict"] = "match";
    rep["y"] = mpsirr::matrix_to_json(rel->y);
    json zd = json::array();
    for (mpsirr::cplx z : rel->z_diag) zd.push_back(mpsirr::detail::dump_cplx(z));
    rep["z_diagonal"] = std::move(zd);
    rep["relation_residual"] = rel->relation_residual;
    rep["commutator_residual"] = rel->commutator_residual;
    rep["state_residual"] = rel->state_residual;
    rep["verified_n"] = rel->verified_n;
    emit(o, rep, "compare: match (equal families)\n");
    return 0;
}

int run_block(const std::string& input, int p, const CommonOpts& o) {
    mpsirr::Config cfg = make_config(o);
    MpsTensor a = mpsirr::load_tensor(input);
    MpsTensor ap = mpsirr::block(a, p, cfg);
    json rep = mpsirr::tensor_to_json(ap);
    emit(o, rep, "block: d=" + std::to_string(ap.d) + ", D=" + std::to_string(ap.D) + "\n");
    return 0;
}

int run_refine_check(const std::string& fb, const std::string& fa, const std::string& fw, int p,
                     const CommonOpts& o) {
    mpsirr::Config cfg = make_config(o);
    MpsTensor b = mpsirr::load_tensor(fb), a = mpsirr::load_tensor(fa);
    mpsirr::RefinementWitness w{p, mpsirr::load_matrix(fw)};
    mpsirr::RefinementReport r = mpsirr::check_refinement(b, a, w, cfg.n_check, cfg);
    json rep{{"command", "refine-check"},
             {"pass", r.pass},
             {"residuals", r.residuals}};
    std::string text = std::string("refine check: ") + (r.pass ? "pass" : "FAIL") + "\n";
    emit(o, rep, text);
    return r.pass ? 0 : 4;
}

int run_refine_construct(const std::string& fb, const std::string& fa, int p,
                         const CommonOpts& o) {
    mpsirr::Config cfg = make_config(o);
    MpsTensor b = mpsirr::load_tensor(fb), a = mpsirr::load_tensor(fa);
    mpsirr::RefinementWitness w = mpsirr::refinement_from_divisibility(b, a, p, cfg);
    json rep{{"command", "refine-construct"},
             {"p", w.p},
             {"w", mpsirr::matrix_to_json(w.w)}};
    emit(o, rep, "refine construct: isometry " + std::to_string(w.w.rows()) + "x" +
                     std::to_string(w.w.cols()) + "\n");
    return 0;
}

int run_refine_root(const std::string& fb, const std::string& fa, const std::string& fw, int p,
                    const CommonOpts& o) {
    mpsirr::Config cfg = make_config(o);
    MpsTensor b = mpsirr::load_tensor(fb), a = mpsirr::load_tensor(fa);
    mpsirr::RefinementWitness w{p, mpsirr::load_matrix(fw)};
    mpsirr::DivisibilityWitness dv = mpsirr::divisibility_from_refinement(b, a, w, cfg);
    json rep{{"command", "refine-root"},
             {"p", dv.p},
             {"root_tensor", mpsirr::tensor_to_json(dv.root_tensor)}};
    emit(o, rep, "refine root: d=" + std::to_string(dv.root_tensor.d) + ", D=" +
                     std::to_string(dv.root_tensor.D) + "\n");
    return 0;
}

int run_symmetry(const std::string& fa, const std::string& fu, const CommonOpts& o) {
    mpsirr::Config cfg = make_config(o);
    MpsTensor a = mpsirr::load_tensor(fa);
    Mat u = mpsirr::load_matrix(fu);
    auto w = mpsirr::symmetry_gauge(a, u, cfg);
    json rep{{"command", "symmetry"}};
    if (!w) {
        rep["verdict"] = "not-a-symmetry";
        emit(o, rep, "symmetry: not a symmetry of the family\n");
        return 4;
    }
    rep["verdict"] = "symmetry";
    rep["z"] = mpsirr::matrix_to_json(w->z);
    rep["u"] = mpsirr::matrix_to_json(w->u);
    rep["relation_residual"] = w->relation_residual;
    rep["commutator_residual"] = w->commutator_residual;
    rep["state_residual"] = w->state_residual;
    emit(o, rep, "symmetry: witness found\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Irreducible forms and gauge witnesses for MPS tensors"};
    app.require_subcommand(1);

    CommonOpts o;
    std::string input, second, wfile, mode = "proportional", emit_tensor;
    int p = 2;

    CLI::App* canon = app.add_subcommand("canonicalize", "Decompose a tensor into its irreducible form II");
    canon->add_option("input", input, "Tensor JSON file")->required();
    canon->add_option("--emit-tensor", emit_tensor, "Also write the assembled tensor to this path");
    add_common(canon, o);

    CLI::App* cmp = app.add_subcommand("compare", "Decide gauge equivalence of two tensors");
    cmp->add_option("a", input, "Tensor JSON file")->required();
    cmp->add_option("b", second, "Tensor JSON file")->required();
    cmp->add_option("--mode", mode, "proportional (same basis) or equal (same states)")
        ->check(CLI::IsMember({"proportional", "equal"}));
    add_common(cmp, o);

    CLI::App* blk = app.add_subcommand("block", "Merge p sites into one");
    blk->add_option("input", input, "Tensor JSON file")->required();
    blk->add_option("--p", p, "Number of sites to merge")->required()->check(CLI::PositiveNumber);
    add_common(blk, o);

    CLI::App* ref = app.add_subcommand("refine", "Refinement/divisibility witnesses");
    ref->require_subcommand(1);
    CLI::App* rchk = ref->add_subcommand("check", "Verify V_pN(A) = W^(xN) V_N(B)");
    rchk->add_option("b", input, "Coarse tensor file")->required();
    rchk->add_option("a", second, "Fine tensor file")->required();
    rchk->add_option("--w", wfile, "Isometry matrix file (d^p x d)")->required();
    rchk->add_option("--p", p, "Refinement factor")->required()->check(CLI::PositiveNumber);
    add_common(rchk, o);
    CLI::App* rcon = ref->add_subcommand("construct", "Build W from a p-th root tensor A of E_B");
    rcon->add_option("b", input, "Coarse tensor file")->required();
    rcon->add_option("a", second, "Root tensor file")->required();
    rcon->add_option("--p", p, "Refinement factor")->required()->check(CLI::PositiveNumber);
    add_common(rcon, o);
    CLI::App* rroot = ref->add_subcommand("root", "Build a p-th root tensor from a refinement isometry");
    rroot->add_option("b", input, "Coarse tensor file")->required();
    rroot->add_option("a", second, "Fine tensor file")->required();
    rroot->add_option("--w", wfile, "Isometry matrix file (d^p x d)")->required();
    rroot->add_option("--p", p, "Refinement factor")->required()->check(CLI::PositiveNumber);
    add_common(rroot, o);

    CLI::App* sym = app.add_subcommand("symmetry", "Test whether a one-site unitary is a symmetry");
    sym->add_option("input", input, "Tensor JSON file")->required();
    sym->add_option("u", second, "Unitary matrix file (d x d)")->required();
    add_common(sym, o);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*canon) return run_canonicalize(input, o, emit_tensor);
        if (*cmp) return run_compare(input, second, mode, o);
        if (*blk) return run_block(input, p, o);
        if (*ref) {
            if (*rchk) return run_refine_check(input, second, wfile, p, o);
            if (*rcon) return run_refine_construct(input, second, p, o);
            return run_refine_root(input, second, wfile, p, o);
        }
        if (*sym) return run_symmetry(input, second, o);
    } catch (const mpsirr::Error& e) {
        std::cerr << "error [" << e.name() << "]: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
