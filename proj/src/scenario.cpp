#include "bhd/scenario.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <toml.hpp>

#include "bhd/analysis.hpp"
#include "bhd/dynamics.hpp"
#include "bhd/errors.hpp"
#include "bhd/semiclassical.hpp"
#include "bhd/spectral.hpp"
#include "parallel.hpp"

namespace bhd {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string software_version() { return "0.3.0"; }

std::string to_string(ScenarioKind kind) {
    switch (kind) {
    case ScenarioKind::steady_sweep: return "steady_sweep";
    case ScenarioKind::gap_sweep: return "gap_sweep";
    case ScenarioKind::g2: return "g2";
    case ScenarioKind::qfunction: return "qfunction";
    case ScenarioKind::gp_sweep: return "gp_sweep";
    case ScenarioKind::limit_cycle: return "limit_cycle";
    case ScenarioKind::trajectories: return "trajectories";
    case ScenarioKind::robustness: return "robustness";
    case ScenarioKind::conserved_check: return "conserved_check";
    }
    return "unknown";
}

namespace {

// ------------------------------------------------------------ config tree --

json toml_to_json(const toml::node& node) {
    if (auto t = node.as_table()) {
        json j = json::object();
        for (const auto& [k, v] : *t) j[std::string(k.str())] = toml_to_json(v);
        return j;
    }
    if (auto a = node.as_array()) {
        json j = json::array();
        for (const auto& v : *a) j.push_back(toml_to_json(v));
        return j;
    }
    if (auto v = node.as_string()) return v->get();
    if (auto v = node.as_integer()) return v->get();
    if (auto v = node.as_floating_point()) return v->get();
    if (auto v = node.as_boolean()) return v->get();
    throw ConfigError("", "unsupported TOML value type (dates and times are not accepted)");
}

const std::map<int, int> kCutoffTable = {{1, 10}, {2, 14}, {3, 18}, {4, 21}, {5, 24}, {15, 30}, {25, 90}};

double get_number(const json& j, const std::string& field) {
    if (!j.is_number()) throw ConfigError(field, "expected a number");
    return j.get<double>();
}

int get_int(const json& j, const std::string& field) {
    if (!j.is_number_integer()) throw ConfigError(field, "expected an integer");
    return j.get<int>();
}

std::string get_string(const json& j, const std::string& field) {
    if (!j.is_string()) throw ConfigError(field, "expected a string");
    return j.get<std::string>();
}

cplx get_complex(const json& j, const std::string& field) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
        return {j[0].get<double>(), j[1].get<double>()};
    }
    throw ConfigError(field, "expected a number or a [re, im] pair");
}

void reject_unknown(const json& obj, const std::string& section, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(section, "expected a table");
    for (const auto& [k, v] : obj.items()) {
        if (!allowed.count(k)) throw ConfigError(section.empty() ? k : section + "." + k, "unknown key");
    }
}

ScenarioKind parse_kind(const std::string& s) {
    static const std::map<std::string, ScenarioKind> names = {
        {"steady_sweep", ScenarioKind::steady_sweep}, {"gap_sweep", ScenarioKind::gap_sweep},
        {"g2", ScenarioKind::g2},                     {"qfunction", ScenarioKind::qfunction},
        {"gp_sweep", ScenarioKind::gp_sweep},         {"limit_cycle", ScenarioKind::limit_cycle},
        {"trajectories", ScenarioKind::trajectories}, {"robustness", ScenarioKind::robustness},
        {"conserved_check", ScenarioKind::conserved_check}};
    auto it = names.find(s);
    if (it == names.end()) throw ConfigError("scenario", "unknown scenario '" + s + "'");
    return it->second;
}

ModelParams parse_params(const json& p) {
    reject_unknown(p, "params",
                   {"preset", "delta", "j", "u_tilde", "f_tilde", "gamma", "n_scale", "dissipation", "delta_phi",
                    "cos_delta_phi"});
    ModelParams m;
    if (p.contains("preset")) {
        const std::string preset = get_string(p["preset"], "params.preset");
        if (preset == "nonlocal_reference") m = reference_nonlocal(0.0);
        else if (preset == "local_reference") m = reference_local(0.0);
        else throw ConfigError("params.preset", "expected nonlocal_reference or local_reference");
    }
    for (const char* key : {"delta", "j", "u_tilde", "f_tilde", "gamma", "n_scale"}) {
        if (p.contains(key)) set_param(m, key, get_number(p[key], std::string("params.") + key));
    }
    if (p.contains("dissipation")) {
        try {
            m.dissipation.kind = dissipation_kind_from_string(get_string(p["dissipation"], "params.dissipation"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError("params.dissipation", e.what());
        }
    }
    if (p.contains("delta_phi") && p.contains("cos_delta_phi")) {
        throw ConfigError("params.delta_phi", "give either delta_phi or cos_delta_phi, not both");
    }
    if (p.contains("delta_phi")) m.dissipation.delta_phi = get_number(p["delta_phi"], "params.delta_phi");
    if (p.contains("cos_delta_phi")) {
        const double c = get_number(p["cos_delta_phi"], "params.cos_delta_phi");
        if (c < -1.0 || c > 1.0) throw ConfigError("params.cos_delta_phi", "must lie in [-1, 1]");
        m.dissipation.delta_phi = std::acos(c);
    }
    try {
        m.validate();
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        throw ConfigError("params." + msg.substr(0, msg.find(' ')), msg);
    }
    return m;
}

SweepSpec parse_sweep(const json& s) {
    reject_unknown(s, "sweep", {"parameter", "start", "stop", "points", "values"});
    SweepSpec sw;
    if (!s.contains("parameter")) throw ConfigError("sweep.parameter", "missing");
    sw.parameter = get_string(s["parameter"], "sweep.parameter");
    ModelParams probe;
    try {
        set_param(probe, sw.parameter, 1.0);
    } catch (const std::invalid_argument&) {
        throw ConfigError("sweep.parameter", "unknown parameter '" + sw.parameter + "'");
    }
    if (s.contains("values")) {
        if (!s["values"].is_array() || s["values"].empty()) throw ConfigError("sweep.values", "expected a nonempty array");
        for (std::size_t i = 0; i < s["values"].size(); ++i)
            sw.values.push_back(get_number(s["values"][i], "sweep.values"));
    } else {
        for (const char* k : {"start", "stop", "points"})
            if (!s.contains(k)) throw ConfigError(std::string("sweep.") + k, "missing");
        const double a = get_number(s["start"], "sweep.start");
        const double b = get_number(s["stop"], "sweep.stop");
        const int n = get_int(s["points"], "sweep.points");
        if (n < 1) throw ConfigError("sweep.points", "must be >= 1");
        if (n > 1 && a == b) throw ConfigError("sweep.stop", "range is empty");
        for (int i = 0; i < n; ++i) sw.values.push_back(n == 1 ? a : a + (b - a) * double(i) / double(n - 1));
    }
    bool up = true, down = true;
    for (std::size_t i = 1; i < sw.values.size(); ++i) {
        up = up && sw.values[i] > sw.values[i - 1];
        down = down && sw.values[i] < sw.values[i - 1];
    }
    if (!up && !down) throw ConfigError("sweep.values", "must be strictly monotone");
    return sw;
}

Numerics parse_numerics(const json& n) {
    reject_unknown(n, "numerics",
                   {"cutoff", "cutoffs", "eigenvalues", "gaps", "strategy", "shift", "rtol", "atol", "t_end", "reference_t_end", "dt",
                    "transient_fraction", "drift_tol", "drift_window", "n_traj", "master_seed", "initial_state",
                    "alpha1", "alpha2", "mode", "q_extent", "q_points", "envelope_width", "asymmetric_search"});
    Numerics x;
    x.cutoff = 0;
    if (n.contains("cutoff")) {
        x.cutoff = get_int(n["cutoff"], "numerics.cutoff");
        if (x.cutoff < 1) throw ConfigError("numerics.cutoff", "must be >= 1");
    }
    if (n.contains("cutoffs")) {
        if (!n["cutoffs"].is_array() || n["cutoffs"].empty()) throw ConfigError("numerics.cutoffs", "expected a nonempty array");
        for (const auto& c : n["cutoffs"]) {
            x.cutoffs.push_back(get_int(c, "numerics.cutoffs"));
            if (x.cutoffs.back() < 1) throw ConfigError("numerics.cutoffs", "entries must be >= 1");
        }
    }
    auto pos_int = [&](const char* key, int& dst, int min) {
        if (!n.contains(key)) return;
        dst = get_int(n[key], std::string("numerics.") + key);
        if (dst < min) throw ConfigError(std::string("numerics.") + key, "must be >= " + std::to_string(min));
    };
    auto pos_num = [&](const char* key, double& dst) {
        if (!n.contains(key)) return;
        dst = get_number(n[key], std::string("numerics.") + key);
        if (!(dst > 0)) throw ConfigError(std::string("numerics.") + key, "must be > 0");
    };
    pos_int("eigenvalues", x.eigenvalues, 1);
    pos_int("gaps", x.gaps, 1);
    pos_int("n_traj", x.n_traj, 1);
    pos_int("mode", x.mode, 1);
    pos_int("q_points", x.q_points, 2);
    if (x.mode > 2) throw ConfigError("numerics.mode", "must be 1 or 2");
    pos_num("shift", x.shift);
    pos_num("rtol", x.rtol);
    pos_num("atol", x.atol);
    pos_num("t_end", x.t_end);
    pos_num("reference_t_end", x.reference_t_end);
    pos_num("dt", x.dt);
    pos_num("drift_tol", x.drift_tol);
    pos_num("drift_window", x.drift_window);
    pos_num("q_extent", x.q_extent);
    pos_num("envelope_width", x.envelope_width);
    if (n.contains("transient_fraction")) {
        x.transient_fraction = get_number(n["transient_fraction"], "numerics.transient_fraction");
        if (x.transient_fraction < 0 || x.transient_fraction >= 1)
            throw ConfigError("numerics.transient_fraction", "must lie in [0, 1)");
    }
    if (n.contains("strategy")) {
        x.strategy = get_string(n["strategy"], "numerics.strategy");
        if (x.strategy != "auto" && x.strategy != "dense" && x.strategy != "shift_invert")
            throw ConfigError("numerics.strategy", "expected auto, dense or shift_invert");
    }
    if (n.contains("master_seed")) {
        if (!n["master_seed"].is_number_integer()) throw ConfigError("numerics.master_seed", "expected an integer");
        x.master_seed = n["master_seed"].get<std::uint64_t>();
    }
    if (n.contains("initial_state")) {
        x.initial_state = get_string(n["initial_state"], "numerics.initial_state");
        if (x.initial_state != "vacuum" && x.initial_state != "coherent")
            throw ConfigError("numerics.initial_state", "expected vacuum or coherent");
    }
    if (n.contains("alpha1")) x.alpha1 = get_complex(n["alpha1"], "numerics.alpha1");
    if (n.contains("alpha2")) x.alpha2 = get_complex(n["alpha2"], "numerics.alpha2");
    if (n.contains("asymmetric_search")) {
        if (!n["asymmetric_search"].is_boolean()) throw ConfigError("numerics.asymmetric_search", "expected a boolean");
        x.asymmetric_search = n["asymmetric_search"].get<bool>();
    }
    return x;
}

json params_json(const ModelParams& p) {
    return {{"delta", p.delta},
            {"j", p.j},
            {"u_tilde", p.u_tilde},
            {"f_tilde", p.f_tilde},
            {"gamma", p.gamma},
            {"n_scale", p.n_scale},
            {"dissipation", to_string(p.dissipation.kind)},
            {"delta_phi", p.dissipation.delta_phi}};
}

json numerics_json(const Numerics& n) {
    return {{"cutoff", n.cutoff},
            {"cutoffs", n.cutoffs},
            {"eigenvalues", n.eigenvalues},
            {"gaps", n.gaps},
            {"strategy", n.strategy},
            {"shift", n.shift},
            {"rtol", n.rtol},
            {"atol", n.atol},
            {"t_end", n.t_end},
            {"reference_t_end", n.reference_t_end},
            {"dt", n.dt},
            {"transient_fraction", n.transient_fraction},
            {"drift_tol", n.drift_tol},
            {"drift_window", n.drift_window},
            {"n_traj", n.n_traj},
            {"master_seed", n.master_seed},
            {"initial_state", n.initial_state},
            {"alpha1", {n.alpha1.real(), n.alpha1.imag()}},
            {"alpha2", {n.alpha2.real(), n.alpha2.imag()}},
            {"mode", n.mode},
            {"q_extent", n.q_extent},
            {"q_points", n.q_points},
            {"envelope_width", n.envelope_width},
            {"asymmetric_search", n.asymmetric_search}};
}

// ------------------------------------------------------------------ output --

struct Table {
    std::string file;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", v);
}

fs::path write_csv(const fs::path& dir, const Table& t) {
    const fs::path path = dir / (t.file + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
        out << "\n";
    }
    return path;
}

fs::path write_json_table(const fs::path& dir, const Table& t) {
    const fs::path path = dir / (t.file + ".json");
    json j = {{"columns", t.columns}, {"rows", json::array()}};
    for (const auto& row : t.rows) {
        json r = json::array();
        for (double v : row) r.push_back(std::isfinite(v) ? json(v) : json(format_number(v)));
        j["rows"].push_back(r);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(1) << "\n";
    return path;
}

// --------------------------------------------------------------- helpers --

struct Context {
    const ScenarioConfig& cfg;
    std::vector<Table> tables;
    json results = json::object();
};

int resolve_cutoff(const Numerics& n, double n_scale) {
    if (n.cutoff > 0) return n.cutoff;
    const double r = std::round(n_scale);
    if (std::abs(n_scale - r) < 1e-12) {
        auto it = kCutoffTable.find(int(r));
        if (it != kCutoffTable.end()) return it->second;
    }
    throw ConfigError("numerics.cutoff", fmt::format("no default cutoff for n_scale = {}; set it explicitly", n_scale));
}

std::vector<ModelParams> sweep_points(const ScenarioConfig& cfg, std::vector<double>& values) {
    std::vector<ModelParams> out;
    if (!cfg.sweep) {
        values = {std::nan("")};
        out.push_back(cfg.params);
        return out;
    }
    values = cfg.sweep->values;
    for (double v : values) {
        ModelParams p = cfg.params;
        set_param(p, cfg.sweep->parameter, v);
        try {
            p.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("sweep.values", e.what());
        }
        out.push_back(p);
    }
    return out;
}

std::string sweep_column(const ScenarioConfig& cfg) {
    if (!cfg.sweep) return "f_tilde_over_gamma";
    const std::string& p = cfg.sweep->parameter;
    if (p == "n_scale") return "n_scale";
    if (p == "delta_phi") return "delta_phi_rad";
    if (p == "gamma") return "gamma";
    return p + "_over_gamma";
}

double sweep_value(const ScenarioConfig& cfg, const ModelParams& p, double v) {
    return cfg.sweep ? v : p.f_tilde;
}

SpectrumOptions spectrum_options(const Numerics& n, Index big) {
    SpectrumOptions o;
    o.shift = n.shift;
    o.want_left = false;
    if (n.strategy == "dense") o.strategy = Strategy::dense;
    else if (n.strategy == "shift_invert") o.strategy = Strategy::shift_invert;
    else o.strategy = big <= o.dense_cap ? Strategy::dense : Strategy::shift_invert;
    return o;
}

DenseMatrix initial_density(const FockSpace& space, const Numerics& n, double n_scale) {
    const double rs = std::sqrt(n_scale);
    const StateVector psi = n.initial_state == "coherent" ? coherent_state(space, rs * n.alpha1, rs * n.alpha2)
                                                          : basis_state(space, 0, 0);
    return psi.amplitudes * psi.amplitudes.adjoint();
}

struct SteadyResult {
    DenseMatrix rho;
    int degeneracy;
    double min_eigenvalue;
    SteadyStateSet set;
};

SteadyResult steady_for(const FockSpace& space, const ModelParams& p, const Numerics& n) {
    const Index big = space.dim() * space.dim();
    SpectrumOptions o = spectrum_options(n, big);
    SteadyStateSet ss = compute_steady_states(space, p, o);
    SteadyResult r{ss.reconstruct(initial_density(space, n, p.n_scale)), ss.r02 ? 2 : 1, ss.min_eigenvalue, ss};
    return r;
}

std::vector<double> time_grid(double t_end, double dt) {
    std::vector<double> g;
    const long n = long(std::floor(t_end / dt + 1e-9));
    for (long i = 0; i <= n; ++i) g.push_back(double(i) * dt);
    return g;
}

// -------------------------------------------------------------- scenarios --

void run_steady_sweep(Context& ctx) {
    const auto& cfg = ctx.cfg;
    std::vector<double> values;
    const auto points = sweep_points(cfg, values);
    std::vector<std::vector<double>> rows(points.size());
    detail::parallel_for(points.size(), cfg.threads, [&](std::size_t i) {
        const ModelParams& p = points[i];
        const FockSpace space(resolve_cutoff(cfg.numerics, p.n_scale));
        const SteadyResult s = steady_for(space, p, cfg.numerics);
        const auto obs = standard_observables(space, p.n_scale);
        rows[i] = {sweep_value(cfg, p, values[i]), expectation(s.rho, obs[0].op).real(),
                   expectation(s.rho, obs[1].op).real(), expectation(s.rho, obs[2].op).real(),
                   double(s.degeneracy), s.min_eigenvalue, double(space.cutoff())};
    });
    ctx.tables.push_back({"steady_sweep",
                          {sweep_column(cfg), "n_tot_over_N", "z", "swap_expectation", "zero_degeneracy",
                           "min_eigenvalue_r01", "cutoff"},
                          rows});
}

void run_gap_sweep(Context& ctx) {
    const auto& cfg = ctx.cfg;
    std::vector<double> values;
    const auto points = sweep_points(cfg, values);
    const int m = cfg.numerics.gaps;
    std::vector<std::vector<double>> rows(points.size());
    detail::parallel_for(points.size(), cfg.threads, [&](std::size_t i) {
        const ModelParams& p = points[i];
        const FockSpace space(resolve_cutoff(cfg.numerics, p.n_scale));
        const Index big = space.dim() * space.dim();
        const SpectrumOptions o = spectrum_options(cfg.numerics, big);
        const Superoperator l = o.strategy == Strategy::dense ? vectorize(space, p) : generator(space, p);
        const SpectralDecomposition dec = spectrum(l, std::max(cfg.numerics.eigenvalues, m + 2), o);
        std::vector<cplx> g;
        try {
            g = gaps(dec, m);
        } catch (const std::invalid_argument&) {
            for (int k = m - 1; k >= 1 && g.empty(); --k) {
                try {
                    g = gaps(dec, k);
                } catch (const std::invalid_argument&) {
                }
            }
        }
        std::vector<double> row = {sweep_value(cfg, p, values[i]), double(dec.zero_degeneracy()),
                                   double(space.cutoff())};
        for (int k = 0; k < m; ++k) {
            row.push_back(k < int(g.size()) ? g[k].real() : std::nan(""));
            row.push_back(k < int(g.size()) ? g[k].imag() : std::nan(""));
        }
        rows[i] = std::move(row);
    });
    std::vector<std::string> cols = {sweep_column(cfg), "zero_degeneracy", "cutoff"};
    for (int k = 1; k <= m; ++k) {
        cols.push_back(fmt::format("gap{}_re_over_gamma", k));
        cols.push_back(fmt::format("gap{}_im_over_gamma", k));
    }
    ctx.tables.push_back({"gap_sweep", cols, rows});
}

void run_g2(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const ModelParams& p = cfg.params;
    const FockSpace space(resolve_cutoff(cfg.numerics, p.n_scale));
    const SteadyResult s = steady_for(space, p, cfg.numerics);
    const Mode mode = cfg.numerics.mode == 1 ? Mode::one : Mode::two;
    const auto grid = time_grid(cfg.numerics.t_end, cfg.numerics.dt);
    const auto g2 = g2_tau(space, p, s.rho, mode, grid, {cfg.numerics.rtol, cfg.numerics.atol});
    Table t{"g2", {"tau_gamma", "g2"}, {}};
    for (std::size_t i = 0; i < grid.size(); ++i) t.rows.push_back({grid[i], g2[i]});
    ctx.tables.push_back(std::move(t));
    ctx.results["g2_projected_limit"] = g2_long_time(s.set, s.rho, space, mode);
    ctx.results["zero_degeneracy"] = s.degeneracy;
    ctx.results["cutoff"] = space.cutoff();
}

void run_qfunction(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const ModelParams& p = cfg.params;
    const FockSpace space(resolve_cutoff(cfg.numerics, p.n_scale));
    const SteadyResult s = steady_for(space, p, cfg.numerics);
    const double e = cfg.numerics.q_extent;
    const QGrid grid{-e, e, cfg.numerics.q_points, -e, e, cfg.numerics.q_points};
    const QFunction q = q_function(space, s.rho, cfg.numerics.mode == 1 ? Mode::one : Mode::two, grid, p.n_scale);
    Table t{"qfunction", {"x_re_alpha_over_sqrtN", "y_im_alpha_over_sqrtN", "q"}, {}};
    for (std::size_t iy = 0; iy < q.y.size(); ++iy)
        for (std::size_t ix = 0; ix < q.x.size(); ++ix) t.rows.push_back({q.x[ix], q.y[iy], q.values(Index(iy), Index(ix))});
    ctx.tables.push_back(std::move(t));
    ctx.results["edge_mass"] = q.edge_mass;
    ctx.results["edge_warning"] = q.edge_warning;
    ctx.results["grid_integral"] = q.integral(p.n_scale);
    ctx.results["cutoff"] = space.cutoff();
}

void run_gp_sweep(Context& ctx) {
    const auto& cfg = ctx.cfg;
    std::vector<double> values;
    const auto points = sweep_points(cfg, values);
    std::vector<std::vector<std::vector<double>>> rows(points.size());
    detail::parallel_for(points.size(), cfg.threads, [&](std::size_t i) {
        const ModelParams& p = points[i];
        std::vector<FixedPoint> fps;
        try {
            fps = symmetric_fixed_points(p);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("params.dissipation", e.what());
        }
        const std::size_t n_sym = fps.size();
        if (cfg.numerics.asymmetric_search) {
            auto more = asymmetric_fixed_points(p, 64, 3.0, cfg.numerics.master_seed);
            fps.insert(fps.end(), more.begin(), more.end());
        }
        for (std::size_t b = 0; b < fps.size(); ++b) {
            const auto& f = fps[b];
            const auto w = effective_frequency(f.state.bonding(), p);
            rows[i].push_back({sweep_value(cfg, p, values[i]), double(b), b < n_sym ? 1.0 : 0.0,
                               std::norm(f.state.alpha1), std::norm(f.state.alpha2), f.state.alpha1.real(),
                               f.state.alpha1.imag(), f.state.alpha2.real(), f.state.alpha2.imag(),
                               double(int(f.classification)), f.jacobian_eigenvalues[0].real(), f.residual,
                               w.imaginary ? std::nan("") : w.omega_plus.real()});
        }
    });
    Table t{"gp_sweep",
            {sweep_column(cfg), "branch", "symmetric", "abs_alpha1_sq", "abs_alpha2_sq", "re_alpha1", "im_alpha1",
             "re_alpha2", "im_alpha2", "stability_code", "max_re_jacobian_over_gamma", "residual",
             "omega_eff_over_gamma"},
            {}};
    for (auto& r : rows)
        for (auto& row : r) t.rows.push_back(std::move(row));
    ctx.tables.push_back(std::move(t));
    ctx.results["stability_codes"] = {{"0", "asymptotically_stable"}, {"1", "stable"}, {"2", "unstable"}};
}

LimitCycleSettings lc_settings(const Numerics& n) {
    LimitCycleSettings s;
    s.t_end = n.t_end;
    s.sample_dt = n.dt;
    s.transient_fraction = n.transient_fraction;
    s.drift_tol = n.drift_tol;
    s.drift_window = n.drift_window;
    return s;
}

void run_limit_cycle(Context& ctx) {
    const auto& cfg = ctx.cfg;
    std::vector<double> values;
    const auto points = sweep_points(cfg, values);
    const SCState psi0{cfg.numerics.alpha1, cfg.numerics.alpha2};
    std::vector<std::vector<double>> rows(points.size());
    detail::parallel_for(points.size(), cfg.threads, [&](std::size_t i) {
        const ModelParams& p = points[i];
        const LimitCycleReport r = limit_cycle(psi0, p, lc_settings(cfg.numerics));
        double w_eff = std::nan("");
        if (p.dissipation.kind != DissipationKind::imperfect) {
            const auto fps = symmetric_fixed_points(p);
            if (!fps.empty()) {
                const auto w = effective_frequency(fps.front().state.bonding(), p);
                if (!w.imaginary) w_eff = w.omega_plus.real();
            }
        }
        rows[i] = {sweep_value(cfg, p, values[i]), r.frequency, r.raw_bin_frequency, r.bin_width, r.amplitude,
                   r.drift, w_eff};
    });
    ctx.tables.push_back({"limit_cycle",
                          {sweep_column(cfg), "omega_over_gamma", "raw_bin_omega_over_gamma", "bin_width_over_gamma",
                           "z_peak_to_peak", "envelope_drift", "omega_eff_lower_branch_over_gamma"},
                          rows});
    if (!cfg.sweep) {
        // Tail of the time series for plotting the orbit.
        const double tail = std::min(200.0, 0.1 * cfg.numerics.t_end);
        IntegrateOptions io;
        io.record_from = cfg.numerics.t_end - tail;
        const auto tr = integrate(psi0, cfg.params, cfg.numerics.t_end, cfg.numerics.dt, io);
        Table t{"timeseries", {"t_gamma", "z", "phi_rad"}, {}};
        for (std::size_t k = 0; k < tr.times.size(); ++k)
            t.rows.push_back({tr.times[k], population_difference(tr.states[k]), relative_phase(tr.states[k])});
        ctx.tables.push_back(std::move(t));
    }
}

void run_trajectories(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const ModelParams& p = cfg.params;
    const FockSpace space(resolve_cutoff(cfg.numerics, p.n_scale));
    const double rs = std::sqrt(p.n_scale);
    const StateVector psi0 = coherent_state(space, rs * cfg.numerics.alpha1, rs * cfg.numerics.alpha2);
    auto obs = standard_observables(space, p.n_scale);
    obs.resize(3); // n_tot, z, z2
    const auto grid = time_grid(cfg.numerics.t_end, cfg.numerics.dt);
    EnsembleOptions eo;
    eo.threads = cfg.threads;
    eo.keep_trajectories = false;
    const TrajectoryEnsemble ens = ensemble(space, p, psi0, grid, obs, cfg.numerics.n_traj, cfg.numerics.master_seed, eo);
    Table t{"trajectories", {"t_gamma"}, {}};
    for (const auto& s : ens.series) {
        t.columns.push_back(s.name + "_mean");
        t.columns.push_back(s.name + "_stderr");
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
        std::vector<double> row = {grid[k]};
        for (const auto& s : ens.series) {
            row.push_back(s.mean[k].real());
            row.push_back(s.stderr_re ? (*s.stderr_re)[k] : std::nan(""));
        }
        t.rows.push_back(std::move(row));
    }
    ctx.tables.push_back(std::move(t));

    std::vector<double> z_tail;
    const double t0 = cfg.numerics.transient_fraction * cfg.numerics.t_end;
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (grid[k] >= t0) z_tail.push_back(ens.get("z").mean[k].real());
    if (z_tail.size() >= 64) {
        const auto sp = fourier_spectrum(z_tail, cfg.numerics.dt);
        Table f{"z_spectrum", {"omega_over_gamma", "magnitude"}, {}};
        for (std::size_t k = 0; k < sp.omega.size(); ++k) f.rows.push_back({sp.omega[k], sp.magnitude[k]});
        ctx.tables.push_back(std::move(f));
        const auto peak = fourier_peak(z_tail, cfg.numerics.dt);
        ctx.results["z_peak_omega_over_gamma"] = peak ? json(peak->frequency) : json(nullptr);
    }
    ctx.results["total_jumps"] = ens.total_jumps;
    ctx.results["cutoff"] = space.cutoff();
}

void run_robustness(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const ModelParams& p = cfg.params;
    if (p.dissipation.kind != DissipationKind::imperfect) {
        throw ConfigError("params.dissipation", "robustness needs imperfect dissipation");
    }
    ModelParams perfect = p;
    perfect.dissipation = Dissipation::nonlocal();
    const SCState psi0{cfg.numerics.alpha1, cfg.numerics.alpha2};
    const auto a = integrate(psi0, p, cfg.numerics.t_end, cfg.numerics.dt);
    const auto b = integrate(psi0, perfect, cfg.numerics.t_end, cfg.numerics.dt);
    std::vector<double> za, zb, wa, wb;
    const double t0 = cfg.numerics.transient_fraction * cfg.numerics.t_end;
    Table t{"robustness", {"t_gamma", "z_imperfect", "z_perfect"}, {}};
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        za.push_back(population_difference(a.states[k]));
        zb.push_back(population_difference(b.states[k]));
        t.rows.push_back({a.times[k], za.back(), zb.back()});
        if (a.times[k] >= t0) {
            wa.push_back(za.back());
            wb.push_back(zb.back());
        }
    }
    ctx.tables.push_back(std::move(t));
    const Envelope env = oscillation_envelope(a.times, za, cfg.numerics.envelope_width);
    Table e{"envelope", {"t_center_gamma", "z_envelope"}, {}};
    double first_below = std::nan("");
    for (std::size_t k = 0; k < env.value.size(); ++k) {
        e.rows.push_back({env.t_center[k], env.value[k]});
        if (std::isnan(first_below) && env.value[k] < 1e-3) first_below = env.t_center[k];
    }
    ctx.tables.push_back(std::move(e));
    // The perfect case converges slowly; its frequency can be taken from a later
    // window of the same length.
    const double ref_end = std::max(cfg.numerics.reference_t_end, cfg.numerics.t_end);
    if (ref_end > cfg.numerics.t_end) {
        IntegrateOptions io;
        io.record_from = ref_end - (cfg.numerics.t_end - t0);
        const auto late = integrate(psi0, perfect, ref_end, cfg.numerics.dt, io);
        wb.clear();
        for (std::size_t k = 0; k < late.times.size(); ++k)
            if (late.times[k] >= io.record_from) wb.push_back(population_difference(late.states[k]));
    }
    ctx.results["reference_window"] = {ref_end - (cfg.numerics.t_end - t0), ref_end};
    auto peak_of = [&](const std::vector<double>& w) {
        if (w.size() < 64) return std::nan("");
        const auto pk = fourier_peak(w, cfg.numerics.dt);
        return pk ? pk->frequency : std::nan("");
    };
    const double wa_peak = peak_of(wa);
    const double wb_peak = peak_of(wb);
    ctx.results["omega_imperfect_over_gamma"] = std::isnan(wa_peak) ? json(nullptr) : json(wa_peak);
    ctx.results["omega_perfect_over_gamma"] = std::isnan(wb_peak) ? json(nullptr) : json(wb_peak);
    if (!std::isnan(wa_peak) && !std::isnan(wb_peak))
        ctx.results["relative_difference"] = std::abs(wa_peak - wb_peak) / wb_peak;
    ctx.results["first_envelope_below_1e-3"] = std::isnan(first_below) ? json(nullptr) : json(first_below);
    ctx.results["cos_delta_phi"] = std::cos(p.dissipation.delta_phi);
}

// Dual residual restricted to the block n1 + n2 <= cutoff - 2, where the per-site
// truncation does not touch the hopping and the drive.
double interior_residual(const FockSpace& space, const ModelParams& p, const Operator& o) {
    if (space.cutoff() < 2) return std::nan("");
    const Superoperator l = generator(space, p);
    const DenseMatrix d = apply_dual(l.h, l.diss, o.dense());
    const DenseMatrix od = o.dense();
    double num = 0.0, den = 0.0;
    for (Index i = 0; i < space.dim(); ++i) {
        const auto [a, b] = space.labels(i);
        if (a + b > space.cutoff() - 2) continue;
        for (Index j = 0; j < space.dim(); ++j) {
            const auto [c, e] = space.labels(j);
            if (c + e > space.cutoff() - 2) continue;
            num += std::norm(d(i, j));
            den += std::norm(od(i, j));
        }
    }
    return den > 0 ? std::sqrt(num / den) : 0.0;
}

void run_conserved_check(Context& ctx) {
    const auto& cfg = ctx.cfg;
    std::vector<int> cutoffs = cfg.numerics.cutoffs;
    if (cutoffs.empty()) cutoffs.push_back(resolve_cutoff(cfg.numerics, cfg.params.n_scale));
    std::vector<std::vector<double>> rows(cutoffs.size());
    detail::parallel_for(cutoffs.size(), cfg.threads, [&](std::size_t i) {
        const FockSpace space(cutoffs[i]);
        const Operator n_a = number(space, Mode::antibonding);
        rows[i] = {double(cutoffs[i]), dual_residual(space, cfg.params, identity(space)),
                   dual_residual(space, cfg.params, swap_operator(space)), dual_residual(space, cfg.params, n_a),
                   interior_residual(space, cfg.params, n_a)};
    });
    ctx.tables.push_back({"conserved_check",
                          {"cutoff", "residual_identity", "residual_swap", "residual_n_antibonding",
                           "residual_n_antibonding_interior"},
                          rows});
}

} // namespace

// ------------------------------------------------------------- public API --

void set_param(ModelParams& p, const std::string& name, double v) {
    if (name == "delta") p.delta = v;
    else if (name == "j") p.j = v;
    else if (name == "u_tilde") p.u_tilde = v;
    else if (name == "f_tilde") p.f_tilde = v;
    else if (name == "gamma") p.gamma = v;
    else if (name == "n_scale") p.n_scale = v;
    else if (name == "delta_phi") p.dissipation.delta_phi = v;
    else throw std::invalid_argument("unknown parameter '" + name + "'");
}

json load_config_tree(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (path.extension() == ".json") {
        try {
            return json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError("", fmt::format("{}: JSON parse error at byte {}: {}", path.string(), e.byte, e.what()));
        }
    }
    try {
        const toml::table t = toml::parse(text, path.string());
        return toml_to_json(t);
    } catch (const toml::parse_error& e) {
        const auto& b = e.source().begin;
        throw ConfigError("", fmt::format("{}:{}:{}: {}", path.string(), b.line, b.column, e.description()));
    }
}

ScenarioConfig parse_config(const json& tree) {
    reject_unknown(tree, "", {"scenario", "params", "sweep", "numerics", "output", "threads"});
    ScenarioConfig cfg;
    if (!tree.contains("scenario")) throw ConfigError("scenario", "missing");
    cfg.scenario = parse_kind(get_string(tree["scenario"], "scenario"));
    cfg.params = parse_params(tree.value("params", json::object()));
    if (tree.contains("sweep")) cfg.sweep = parse_sweep(tree["sweep"]);
    cfg.numerics = parse_numerics(tree.value("numerics", json::object()));
    const json out = tree.value("output", json::object());
    reject_unknown(out, "output", {"directory", "formats"});
    if (out.contains("directory")) cfg.output_dir = get_string(out["directory"], "output.directory");
    if (out.contains("formats")) {
        if (!out["formats"].is_array() || out["formats"].empty()) throw ConfigError("output.formats", "expected a nonempty array");
        cfg.formats.clear();
        for (const auto& f : out["formats"]) {
            const std::string s = get_string(f, "output.formats");
            if (s != "csv" && s != "json") throw ConfigError("output.formats", "supported formats are csv and json");
            cfg.formats.push_back(s);
        }
    }
    if (tree.contains("threads")) {
        cfg.threads = get_int(tree["threads"], "threads");
        if (cfg.threads < 1) throw ConfigError("threads", "must be >= 1");
    }
    // Scenario-specific requirements.
    if (cfg.sweep && (cfg.scenario == ScenarioKind::g2 || cfg.scenario == ScenarioKind::qfunction ||
                      cfg.scenario == ScenarioKind::trajectories || cfg.scenario == ScenarioKind::robustness ||
                      cfg.scenario == ScenarioKind::conserved_check)) {
        throw ConfigError("sweep", "scenario " + to_string(cfg.scenario) + " does not take a sweep");
    }
    if (cfg.scenario == ScenarioKind::robustness && cfg.params.dissipation.kind != DissipationKind::imperfect) {
        throw ConfigError("params.dissipation", "robustness needs imperfect dissipation");
    }
    if ((cfg.scenario == ScenarioKind::gp_sweep) && cfg.params.dissipation.kind == DissipationKind::imperfect) {
        throw ConfigError("params.dissipation", "gp_sweep supports local and nonlocal dissipation");
    }
    const bool quantum = cfg.scenario == ScenarioKind::steady_sweep || cfg.scenario == ScenarioKind::gap_sweep ||
                         cfg.scenario == ScenarioKind::g2 || cfg.scenario == ScenarioKind::qfunction ||
                         cfg.scenario == ScenarioKind::trajectories;
    if (quantum) {
        std::vector<double> ns = {cfg.params.n_scale};
        if (cfg.sweep && cfg.sweep->parameter == "n_scale") ns = cfg.sweep->values;
        for (double n : ns) resolve_cutoff(cfg.numerics, n);
    }
    cfg.resolved = {{"scenario", to_string(cfg.scenario)},
                    {"params", params_json(cfg.params)},
                    {"numerics", numerics_json(cfg.numerics)},
                    {"output", {{"directory", cfg.output_dir.string()}, {"formats", cfg.formats}}},
                    {"threads", cfg.threads}};
    if (cfg.sweep) cfg.resolved["sweep"] = {{"parameter", cfg.sweep->parameter}, {"values", cfg.sweep->values}};
    return cfg;
}

RunSummary run_scenario(const ScenarioConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(cfg.output_dir);
    Context ctx{cfg, {}, json::object()};
    switch (cfg.scenario) {
    case ScenarioKind::steady_sweep: run_steady_sweep(ctx); break;
    case ScenarioKind::gap_sweep: run_gap_sweep(ctx); break;
    case ScenarioKind::g2: run_g2(ctx); break;
    case ScenarioKind::qfunction: run_qfunction(ctx); break;
    case ScenarioKind::gp_sweep: run_gp_sweep(ctx); break;
    case ScenarioKind::limit_cycle: run_limit_cycle(ctx); break;
    case ScenarioKind::trajectories: run_trajectories(ctx); break;
    case ScenarioKind::robustness: run_robustness(ctx); break;
    case ScenarioKind::conserved_check: run_conserved_check(ctx); break;
    }
    RunSummary summary;
    for (const auto& t : ctx.tables) {
        for (const auto& f : cfg.formats) {
            summary.files.push_back(f == "csv" ? write_csv(cfg.output_dir, t) : write_json_table(cfg.output_dir, t));
        }
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json files = json::array();
    for (const auto& f : summary.files) files.push_back(f.filename().string());
    summary.metadata = {{"software", "bhd"},
                        {"version", software_version()},
                        {"config", cfg.resolved},
                        {"seeds", {{"master_seed", cfg.numerics.master_seed}}},
                        {"wall_time_seconds", wall},
                        {"files", files},
                        {"results", ctx.results}};
    const fs::path meta = cfg.output_dir / "run.json";
    std::ofstream out(meta, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + meta.string());
    out << summary.metadata.dump(2) << "\n";
    return summary;
}

} // namespace bhd
