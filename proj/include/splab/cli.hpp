#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include "splab/io.hpp"
#include "splab/solvers.hpp"

namespace splab {

// Exit-code taxonomy of the batch front-end (scriptable acceptance testing):
//   0  success, all certificates pass
//   2  invalid config / input shape mismatch / failed hypothesis checks
//   3  solver non-convergence (artifacts still written)
//   4  certificate failure (artifacts still written)
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNoConverge = 3;
inline constexpr int kExitCertificate = 4;

struct MeshParams {
    int M = 400;
    double R_max = 60.0;
    double r_core = 5.0;
    double growth = 1.03;
};

struct BarrierParams {
    BarrierKind kind = BarrierKind::DecayTail;
    double p = 2.0;
    int N = 3;
    double vartheta = 4.0;
    double A = 3.0;
    double r = 1.0;
    double sample_R = 0.0;  // barrier.csv extent; 0 -> 5r
};

/// Parsed config document; sections beyond the command's needs may be absent.
struct RunConfig {
    std::optional<ProblemSpec> spec;
    MeshParams mesh;
    SolverParams solver;
    std::vector<double> a_grid;
    std::optional<BarrierParams> barrier;
    std::string verify_profile;
};

inline RunConfig config_from_json(const json& j) {
    RunConfig cfg;
    if (j.contains("spec")) cfg.spec = spec_from_json(j.at("spec"));
    if (j.contains("mesh")) {
        const auto& m = j.at("mesh");
        cfg.mesh.M = m.value("M", cfg.mesh.M);
        cfg.mesh.R_max = m.value("R_max", cfg.mesh.R_max);
        cfg.mesh.r_core = m.value("r_core", cfg.mesh.r_core);
        cfg.mesh.growth = m.value("growth", cfg.mesh.growth);
    }
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        cfg.solver.tol_residual = s.value("tol_residual", cfg.solver.tol_residual);
        cfg.solver.max_iters = s.value("max_iters", cfg.solver.max_iters);
        cfg.solver.path_points = s.value("path_points", cfg.solver.path_points);
        if (s.contains("step_rule"))
            cfg.solver.step_rule = detail::parse_enum<StepRule>(s.at("step_rule").get<std::string>());
        cfg.solver.t1 = s.value("t1", cfg.solver.t1);
        cfg.solver.eps_moll = s.value("eps_moll", cfg.solver.eps_moll);
        cfg.solver.seed = s.value("seed", cfg.solver.seed);
        cfg.solver.probe_samples = s.value("probe_samples", cfg.solver.probe_samples);
    }
    if (j.contains("windows")) {
        const auto& w = j.at("windows");
        cfg.solver.barrier_r = w.value("barrier_r", 0.0);
        cfg.solver.barrier_R = w.value("barrier_R", 0.0);
        if (w.contains("decay")) {
            cfg.solver.decay_lo = w.at("decay").at(0).get<double>();
            cfg.solver.decay_hi = w.at("decay").at(1).get<double>();
        }
        if (w.contains("tail")) {
            cfg.solver.tail_lo = w.at("tail").at(0).get<double>();
            cfg.solver.tail_hi = w.at("tail").at(1).get<double>();
        }
    }
    if (j.contains("sweep")) cfg.a_grid = j.at("sweep").at("a_grid").get<std::vector<double>>();
    if (j.contains("barrier")) {
        const auto& b = j.at("barrier");
        BarrierParams bp;
        if (b.contains("kind")) bp.kind = detail::parse_enum<BarrierKind>(b.at("kind").get<std::string>());
        bp.p = b.value("p", bp.p);
        bp.N = b.value("N", bp.N);
        bp.vartheta = b.value("vartheta", bp.vartheta);
        bp.A = b.value("A", bp.A);
        bp.r = b.value("r", bp.r);
        bp.sample_R = b.value("sample_R", bp.sample_R);
        cfg.barrier = bp;
    }
    if (j.contains("verify")) cfg.verify_profile = j.at("verify").value("profile", std::string{});
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config: " + path);
    json j = json::parse(in);  // throws on malformed JSON
    return config_from_json(j);
}

namespace detail {

/// Pass/fail ledger of the per-solution certificates gating cmd exit codes.
struct CertificateGate {
    bool nonnegative = false;
    bool subsup = false;
    bool barrier = false;
    bool hopf = false;
    bool decay_defined = false;

    bool all() const { return nonnegative && subsup && barrier && hopf && decay_defined; }

    json to_json() const {
        return json{{"nonnegative", nonnegative},
                    {"subsup", subsup},
                    {"barrier", barrier},
                    {"hopf", hopf},
                    {"decay_defined", decay_defined},
                    {"all", all()}};
    }
};

inline CertificateGate gate_of(const SolveReport& rep, const SolverParams& prm) {
    CertificateGate g;
    const double floor = std::max(1e-8, 10.0 * std::max(rep.eps_moll_used, prm.eps_moll));
    g.nonnegative = rep.min_value >= -floor;
    g.subsup = rep.sub_margin >= -prm.tol_residual && rep.sup_margin >= -prm.tol_residual;
    g.barrier = rep.barrier_applicable && rep.barrier_ok;
    g.hopf = rep.hopf_ok;
    g.decay_defined = std::isfinite(rep.decay_slope);
    return g;
}

}  // namespace detail

/// Runs hypothesis validation, geometry probe, the regime-appropriate solver
/// and the full certificate set; writes report.json and profile.csv.
inline int cmd_solve(const RunConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::shared_ptr<const RadialMesh> mesh;
    ValidationReport validation;
    try {
        if (!cfg.spec) throw std::invalid_argument("config: missing spec section");
        cfg.spec->validate();
        cfg.solver.validate();
        mesh = build_mesh(cfg.mesh.M, cfg.mesh.R_max, cfg.mesh.r_core, cfg.mesh.growth, cfg.spec->N);
        validation = validate_spec(*cfg.spec, default_sample_grid());
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    }
    fs::create_directories(out_dir);
    if (!validation.pass()) {
        write_json_file(out_dir + "/report.json",
                        json{{"validation", to_json(validation)}, {"status", "hypothesis checks failed"}});
        return kExitConfig;
    }

    SolveReport rep = solve(*cfg.spec, mesh, cfg.solver);
    const auto gate = detail::gate_of(rep, cfg.solver);

    json report = report_to_json(rep);
    report["validation"] = to_json(validation);
    report["certificates"] = gate.to_json();
    report["mesh"] = json{{"M", cfg.mesh.M},
                          {"R_max", cfg.mesh.R_max},
                          {"r_core", cfg.mesh.r_core},
                          {"growth", cfg.mesh.growth}};
    write_json_file(out_dir + "/report.json", report);
    write_profile_csv(out_dir + "/profile.csv", rep.u);

    if (!rep.converged) return kExitNoConverge;
    return gate.all() ? kExitOk : kExitCertificate;
}

/// Warm-started shift sweep; writes sweep.csv and a_star.json.
inline int cmd_sweep(const RunConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::shared_ptr<const RadialMesh> mesh;
    try {
        if (!cfg.spec) throw std::invalid_argument("config: missing spec section");
        if (cfg.a_grid.empty()) throw std::invalid_argument("config: missing sweep.a_grid");
        cfg.spec->validate();
        cfg.solver.validate();
        if (cfg.a_grid.front() != 0.0)
            throw std::invalid_argument("config: sweep.a_grid must start at 0");
        mesh = build_mesh(cfg.mesh.M, cfg.mesh.R_max, cfg.mesh.r_core, cfg.mesh.growth, cfg.spec->N);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    }
    fs::create_directories(out_dir);
    const SweepReport sweep = sweep_a(*cfg.spec, mesh, cfg.solver, cfg.a_grid);
    write_sweep_csv(out_dir + "/sweep.csv", sweep);
    write_json_file(out_dir + "/a_star.json", json{{"a_star_estimate", sweep.a_star_estimate}});
    return sweep.a_star_estimate > 0.0 ? kExitOk : kExitCertificate;
}

/// Constructs the requested barrier, verifies it by finite differences and
/// derivative matching, writes barrier.json and barrier.csv.
inline int cmd_barrier(const RunConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    BarrierZ z;
    try {
        if (!cfg.barrier) throw std::invalid_argument("config: missing barrier section");
        const BarrierParams& b = *cfg.barrier;
        z = b.kind == BarrierKind::DecayTail ? barrier_z(b.p, b.N, b.vartheta, b.A, b.r)
                                             : barrier_zh(b.p, b.N, b.A, b.r);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    }
    fs::create_directories(out_dir);
    const BarrierVerification v = verify_barrier_fd(z);
    json j = to_json(z);
    j["verification"] = json{{"max_rel_interior", v.max_rel_interior},
                             {"max_rel_tail", v.max_rel_tail},
                             {"deriv_mismatch", v.deriv_mismatch},
                             {"ok", v.ok}};
    write_json_file(out_dir + "/barrier.json", j);
    const double sample_R = cfg.barrier->sample_R > 0.0 ? cfg.barrier->sample_R : 5.0 * z.r;
    write_barrier_csv(out_dir + "/barrier.csv", z, sample_R);
    return v.ok ? kExitOk : kExitCertificate;
}

/// Re-certifies an externally supplied profile against the configured spec.
inline int cmd_verify(const RunConfig& cfg, const std::string& out_dir,
                      const std::string& profile_override = {}) {
    namespace fs = std::filesystem;
    std::shared_ptr<const RadialMesh> mesh;
    std::optional<RadialFunction> u;
    try {
        if (!cfg.spec) throw std::invalid_argument("config: missing spec section");
        cfg.spec->validate();
        mesh = build_mesh(cfg.mesh.M, cfg.mesh.R_max, cfg.mesh.r_core, cfg.mesh.growth, cfg.spec->N);
        const std::string path = profile_override.empty() ? cfg.verify_profile : profile_override;
        if (path.empty()) throw std::invalid_argument("config: missing verify.profile");
        u = read_profile_csv(path, mesh);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    }
    fs::create_directories(out_dir);

    SolveReport rep{std::move(*u)};
    rep.a = cfg.spec->a;
    rep.eps_moll_used = cfg.solver.eps_moll * std::max(1.0, rep.u.sup_norm());
    bool subsup_valid = true;
    try {
        detail::certify(rep, *cfg.spec, cfg.solver);
    } catch (const std::invalid_argument&) {
        // certify runs subsup_check, whose precondition is nodewise
        // nonnegativity; a genuinely negative profile fails that certificate.
        subsup_valid = false;
        rep.energy = energy(rep.u, *cfg.spec);
        rep.dp_norm = dp_norm(rep.u, cfg.spec->p);
        rep.sup_norm = rep.u.sup_norm();
        rep.min_value = rep.u.min_free_value();
        rep.criticality = check_critical(rep.u, *cfg.spec);
    }
    auto gate = detail::gate_of(rep, cfg.solver);
    if (!subsup_valid) {
        gate.subsup = false;
        gate.nonnegative = false;
    }
    const bool critical = rep.criticality.max_violation <= cfg.solver.tol_residual;

    json report = report_to_json(rep);
    report["certificates"] = gate.to_json();
    report["certificates"]["critical"] = critical;
    write_json_file(out_dir + "/verify.json", report);
    return (critical && gate.all()) ? kExitOk : kExitCertificate;
}

}  // namespace splab
