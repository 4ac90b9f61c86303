#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "splab/barriers.hpp"
#include "splab/model.hpp"
#include "splab/radialfem.hpp"
#include "splab/solvers.hpp"

namespace splab {

using nlohmann::json;

// ---------------------------------------------------------------------------
// enum <-> string
// ---------------------------------------------------------------------------

inline std::string to_string(Regime r) {
    return r == Regime::Superlinear ? "Superlinear" : "Sublinear";
}
inline std::string to_string(NonlinearityFamily f) {
    switch (f) {
        case NonlinearityFamily::Power: return "Power";
        case NonlinearityFamily::PowerShifted: return "PowerShifted";
        case NonlinearityFamily::Tabulated: return "Tabulated";
    }
    return "Power";
}
inline std::string to_string(WeightFamily f) {
    return f == WeightFamily::RationalDecay ? "RationalDecay" : "Tabulated";
}
inline std::string to_string(StepRule s) {
    return s == StepRule::FixedArmijo ? "FixedArmijo" : "BarzilaiBorwein";
}
inline std::string to_string(BarrierKind k) {
    return k == BarrierKind::DecayTail ? "DecayTail" : "HarmonicTail";
}

namespace detail {

template <typename E>
E parse_enum(const std::string& s);

template <>
inline Regime parse_enum<Regime>(const std::string& s) {
    if (s == "Superlinear") return Regime::Superlinear;
    if (s == "Sublinear") return Regime::Sublinear;
    throw std::invalid_argument("unknown regime: " + s);
}
template <>
inline NonlinearityFamily parse_enum<NonlinearityFamily>(const std::string& s) {
    if (s == "Power") return NonlinearityFamily::Power;
    if (s == "PowerShifted") return NonlinearityFamily::PowerShifted;
    if (s == "Tabulated") return NonlinearityFamily::Tabulated;
    throw std::invalid_argument("unknown nonlinearity family: " + s);
}
template <>
inline WeightFamily parse_enum<WeightFamily>(const std::string& s) {
    if (s == "RationalDecay") return WeightFamily::RationalDecay;
    if (s == "Tabulated") return WeightFamily::Tabulated;
    throw std::invalid_argument("unknown weight family: " + s);
}
template <>
inline StepRule parse_enum<StepRule>(const std::string& s) {
    if (s == "FixedArmijo") return StepRule::FixedArmijo;
    if (s == "BarzilaiBorwein") return StepRule::BarzilaiBorwein;
    throw std::invalid_argument("unknown step rule: " + s);
}
template <>
inline BarrierKind parse_enum<BarrierKind>(const std::string& s) {
    if (s == "DecayTail") return BarrierKind::DecayTail;
    if (s == "HarmonicTail") return BarrierKind::HarmonicTail;
    throw std::invalid_argument("unknown barrier kind: " + s);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ProblemSpec JSON (keys: p, N, a, f.family, f.q, f.theta_ar, h.family, h.B,
// h.vartheta, regime; tables for the Tabulated families)
// ---------------------------------------------------------------------------

inline json to_json(const NonlinearitySpec& f) {
    json j{{"family", to_string(f.family)}, {"q", f.q}, {"theta_ar", f.theta_ar}};
    if (f.family == NonlinearityFamily::PowerShifted) j["t0"] = f.t0;
    if (f.family == NonlinearityFamily::Tabulated) j["table"] = {{"t", f.table.x}, {"f", f.table.y}};
    return j;
}

inline NonlinearitySpec nonlinearity_from_json(const json& j) {
    NonlinearitySpec f;
    f.family = detail::parse_enum<NonlinearityFamily>(j.at("family").get<std::string>());
    f.q = j.at("q").get<double>();
    f.theta_ar = j.value("theta_ar", 0.0);
    f.t0 = j.value("t0", 0.0);
    if (f.family == NonlinearityFamily::Tabulated)
        f.table = PiecewiseLinear(j.at("table").at("t").get<std::vector<double>>(),
                                  j.at("table").at("f").get<std::vector<double>>());
    return f;
}

inline json to_json(const WeightSpec& h) {
    json j{{"family", to_string(h.family)}, {"B", h.B}, {"vartheta", h.vartheta}};
    if (h.family == WeightFamily::Tabulated) j["table"] = {{"rho", h.table.x}, {"h", h.table.y}};
    return j;
}

inline WeightSpec weight_from_json(const json& j) {
    WeightSpec h;
    h.family = detail::parse_enum<WeightFamily>(j.at("family").get<std::string>());
    h.B = j.at("B").get<double>();
    h.vartheta = j.at("vartheta").get<double>();
    if (h.family == WeightFamily::Tabulated)
        h.table = PiecewiseLinear(j.at("table").at("rho").get<std::vector<double>>(),
                                  j.at("table").at("h").get<std::vector<double>>());
    return h;
}

inline json to_json(const ProblemSpec& s) {
    return json{{"p", s.p},          {"N", s.N},
                {"a", s.a},          {"f", to_json(s.f)},
                {"h", to_json(s.h)}, {"regime", to_string(s.regime)}};
}

inline ProblemSpec spec_from_json(const json& j) {
    ProblemSpec s;
    s.p = j.at("p").get<double>();
    s.N = j.at("N").get<int>();
    s.a = j.at("a").get<double>();
    s.f = nonlinearity_from_json(j.at("f"));
    s.h = weight_from_json(j.at("h"));
    s.regime = detail::parse_enum<Regime>(j.at("regime").get<std::string>());
    return s;
}

// ---------------------------------------------------------------------------
// Report JSON
// ---------------------------------------------------------------------------

inline json to_json(const ValidationReport& r) {
    return json{{"p_star", r.p_star},
                {"h_norm_1", std::isfinite(r.h_norm_1) ? json(r.h_norm_1) : json("inf")},
                {"h_norm_inf", r.h_norm_inf},
                {"p2_margin", r.p2_margin},
                {"f0_trend",
                 {{"ratio_at_smallest", r.f0_trend.ratio_at_smallest},
                  {"monotone", r.f0_trend.monotone}}},
                {"finf_trend",
                 {{"fitted_constant", r.finf_trend.fitted_constant},
                  {"max_ratio", r.finf_trend.max_ratio},
                  {"bottom_ratio", r.finf_trend.bottom_ratio},
                  {"top_ratio", r.finf_trend.top_ratio}}},
                {"ar_defect_grid", r.ar_defect_grid},
                {"ar_defect_doubled", r.ar_defect_doubled},
                {"pass_p1", r.pass_p1},
                {"pass_p2", r.pass_p2},
                {"pass_f0", r.pass_f0},
                {"pass_fsc", r.pass_fsc},
                {"pass_finf", r.pass_finf},
                {"pass", r.pass()}};
}

inline json to_json(const GeometryReport& g) {
    return json{{"succeeded", g.succeeded},
                {"embedding_C", g.embedding_C},
                {"rho", g.rho},
                {"alpha_bound", g.alpha_bound},
                {"alpha_hat", g.alpha_hat},
                {"t1", g.t1},
                {"t0", g.t0},
                {"coercivity_radius", g.coercivity_radius},
                {"message", g.message}};
}

inline json to_json(const CriticalityCertificate& c) {
    return json{{"max_violation", c.max_violation}, {"tested_directions", c.tested_directions}};
}

/// report.json payload of a solve (the nodal profile goes to profile.csv).
inline json report_to_json(const SolveReport& r) {
    auto finite_or_null = [](double x) { return std::isfinite(x) ? json(x) : json(); };
    return json{{"a", r.a},
                {"converged", r.converged},
                {"status", r.status},
                {"iterations", r.iterations},
                {"energy", r.energy},
                {"dp_norm", r.dp_norm},
                {"sup_norm", r.sup_norm},
                {"min_value", r.min_value},
                {"criticality", to_json(r.criticality)},
                {"sub_margin", r.sub_margin},
                {"sup_margin", r.sup_margin},
                {"ipuu_residual", r.ipuu_residual},
                {"eps_moll_used", r.eps_moll_used},
                {"barrier",
                 {{"A", r.barrier_A},
                  {"H", r.barrier_H},
                  {"applicable", r.barrier_applicable},
                  {"ok", r.barrier_ok},
                  {"compare_margin", finite_or_null(r.compare_margin)}}},
                {"hopf", {{"ok", r.hopf_ok}, {"worst_ratio", r.hopf_worst_ratio}, {"C1", r.hopf_C1}}},
                {"liouville_min", finite_or_null(r.liouville_min)},
                {"decay", {{"slope", finite_or_null(r.decay_slope)}, {"offset", finite_or_null(r.decay_offset)}}},
                {"geometry", to_json(r.geometry)}};
}

inline json to_json(const SweepReport& s) {
    json rows = json::array();
    for (const auto& r : s.rows)
        rows.push_back(json{{"a", r.a},
                            {"energy", r.energy},
                            {"dp_norm", r.dp_norm},
                            {"min_value", r.min_value},
                            {"barrier_ok", r.barrier_ok},
                            {"positive", r.positive},
                            {"converged", r.converged},
                            {"iterations", r.iterations}});
    return json{{"rows", rows}, {"a_star_estimate", s.a_star_estimate}};
}

inline json to_json(const RadialMesh& m) {
    return json{{"N", m.dim}, {"r_core", m.core_radius}, {"nodes", m.nodes}};
}

inline json to_json(const BarrierZ& z) {
    json j{{"kind", to_string(z.kind)}, {"p", z.p},
           {"N", z.dim},                {"A", z.A},
           {"r", z.r},                  {"C", z.C_match},
           {"tail_coeff", z.tail_coeff}, {"tail_exp", z.tail_exp},
           {"shift", z.shift}};
    if (z.kind == BarrierKind::DecayTail) {
        j["vartheta"] = z.vartheta;
        j["H"] = z.H;
    } else {
        j["C1"] = z.tail_coeff;
    }
    return j;
}

// ---------------------------------------------------------------------------
// CSV (fixed column sets, %.17g values, header row)
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << body;
}

}  // namespace detail

inline void write_profile_csv(const std::string& path, const RadialFunction& u) {
    std::string body = "rho,u\n";
    for (int i = 0; i < u.mesh().node_count(); ++i)
        body += detail::fmt17(u.mesh().nodes[i]) + "," + detail::fmt17(u[i]) + "\n";
    detail::write_file(path, body);
}

/// Loads a profile emitted by write_profile_csv onto the given mesh; the
/// radii must match the mesh nodes.
inline RadialFunction read_profile_csv(const std::string& path,
                                       const std::shared_ptr<const RadialMesh>& mesh) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open profile: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("rho", 0) != 0)
        throw std::invalid_argument("profile csv: missing header row");
    std::vector<double> rho, val;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("profile csv: malformed row");
        rho.push_back(std::stod(line.substr(0, comma)));
        val.push_back(std::stod(line.substr(comma + 1)));
    }
    if (static_cast<int>(rho.size()) != mesh->node_count())
        throw std::invalid_argument("profile csv: node count does not match the mesh");
    for (std::size_t i = 0; i < rho.size(); ++i)
        if (std::abs(rho[i] - mesh->nodes[i]) > 1e-9 * std::max(1.0, mesh->nodes[i]))
            throw std::invalid_argument("profile csv: radii do not match the mesh");
    return RadialFunction(mesh, std::move(val));
}

inline void write_sweep_csv(const std::string& path, const SweepReport& s) {
    std::string body = "a,energy,norm,min_u,positive,barrier_ok\n";
    for (const auto& r : s.rows)
        body += detail::fmt17(r.a) + "," + detail::fmt17(r.energy) + "," + detail::fmt17(r.dp_norm) +
                "," + detail::fmt17(r.min_value) + "," + (r.positive ? "1" : "0") + "," +
                (r.barrier_ok ? "1" : "0") + "\n";
    detail::write_file(path, body);
}

inline void write_barrier_csv(const std::string& path, const BarrierZ& z, double rho_max,
                              int count = 201) {
    std::string body = "rho,z\n";
    for (int i = 0; i < count; ++i) {
        const double rho = rho_max * i / (count - 1);
        body += detail::fmt17(rho) + "," + detail::fmt17(z.value(rho)) + "\n";
    }
    detail::write_file(path, body);
}

inline void write_convergence_csv(const std::string& path, const std::vector<ConvergenceRow>& rows) {
    std::string body = "a,sup_distance,dp_distance\n";
    for (const auto& r : rows)
        body += detail::fmt17(r.a) + "," + detail::fmt17(r.sup_distance) + "," +
                detail::fmt17(r.dp_distance) + "\n";
    detail::write_file(path, body);
}

inline void write_json_file(const std::string& path, const json& j) {
    detail::write_file(path, j.dump(2) + "\n");
}

}  // namespace splab
