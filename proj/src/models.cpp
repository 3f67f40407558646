// models.cpp — Scenario builders and JSON serialization

#include "resodyn/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "resodyn/errors.hpp"
#include "resodyn/rng.hpp"

namespace resodyn::models {

using nlohmann::json;

// ------------------------------- profiles -----------------------------------

bool profile_known(const std::string& name) {
    return name == "flat" || name == "sine_window" || name == "gaussian" ||
           name == "notched_window";
}

double profile_value(const ProfileSpec& p, double omega, double lo, double hi) {
    auto par = [&](const char* key, double fallback) {
        auto it = p.params.find(key);
        return it == p.params.end() ? fallback : it->second;
    };
    const double A = par("amplitude", 1.0);
    if (p.name == "flat") return A;
    const double u = (hi > lo) ? (omega - lo) / (hi - lo) : 0.0;
    if (p.name == "sine_window") {
        const double s = std::sin(M_PI * std::clamp(u, 0.0, 1.0));
        return A * s * s;
    }
    if (p.name == "gaussian") {
        const double c = par("center", 0.5 * (lo + hi));
        const double w = par("width", 0.25 * (hi - lo));
        return A * std::exp(-0.5 * (omega - c) * (omega - c) / (w * w));
    }
    if (p.name == "notched_window") {
        const double s = std::sin(M_PI * std::clamp(u, 0.0, 1.0));
        const double nu = par("notch", 0.5 * (lo + hi));
        const double nw = par("notch_width", 0.25 * (hi - lo));
        const double q = (omega - nu) / nw;
        return A * s * s * std::min(1.0, q * q);
    }
    throw SchemaError("reservoir.coupling_profile.name", "unknown profile '" + p.name + "'");
}

// ------------------------------ reservoirs ----------------------------------

namespace {

ReservoirSpec reservoir_from_modes(const std::vector<double>& modes) {
    const Index dr = static_cast<Index>(modes.size()) + 1;
    Matrix L_R = Matrix::Zero(dr, dr);
    for (Index k = 1; k < dr; ++k) L_R(k, k) = modes[static_cast<size_t>(k - 1)];
    Vector omega = Vector::Zero(dr);
    omega(0) = 1.0;
    return make_reservoir_spec(L_R, omega);
}

std::vector<double> star_grid(int M, double lo, double hi) {
    if (M < 2) throw std::invalid_argument("build_star_reservoir: M must be >= 2");
    if (!(lo < hi)) throw std::invalid_argument("build_star_reservoir: omega_min must be < omega_max");

    const double dw = (hi - lo) / double(M);
    auto build = [&](double shift) {
        std::vector<double> v;
        for (int k = 0; k <= M; ++k) {
            const double x = lo + shift + double(k) * dw;
            if (std::abs(x) < dw * (1.0 - 1e-12)) continue;   // zero neighborhood, one step wide
            v.push_back(x);
        }
        return v;
    };

    std::vector<double> cand = build(0.0);
    if (static_cast<int>(cand.size()) == M + 1) {
        // zero exclusion did not engage; plain inclusive grid of M points
        std::vector<double> v(static_cast<size_t>(M));
        for (int k = 0; k < M; ++k) v[static_cast<size_t>(k)] = lo + (hi - lo) * double(k) / double(M - 1);
        return v;
    }
    if (static_cast<int>(cand.size()) == M) return cand;

    std::cerr << "build_star_reservoir: grid collides with the zero neighborhood, shifting by "
                 "half a step\n";
    cand = build(0.5 * dw);
    while (static_cast<int>(cand.size()) > M) {
        // drop the candidate closest to zero
        size_t drop = 0;
        for (size_t i = 1; i < cand.size(); ++i)
            if (std::abs(cand[i]) < std::abs(cand[drop])) drop = i;
        cand.erase(cand.begin() + static_cast<long>(drop));
    }
    if (static_cast<int>(cand.size()) != M)
        throw std::invalid_argument("build_star_reservoir: cannot place M modes outside the "
                                    "zero neighborhood on this range");
    return cand;
}

// star coupling operator V_R on the modes of an already-built reservoir,
// amplitudes profile(omega_k) sqrt(median spacing)
Matrix star_coupling(const ReservoirSpec& res, const ProfileSpec& profile, double lo, double hi) {
    const Index dr = res.dim;
    std::vector<double> modes;
    for (Index k = 1; k < dr; ++k) modes.push_back(res.L_R(k, k).real());
    std::vector<double> sorted = modes;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> gaps;
    for (size_t i = 0; i + 1 < sorted.size(); ++i) gaps.push_back(sorted[i + 1] - sorted[i]);
    std::sort(gaps.begin(), gaps.end());
    const double dw = gaps.empty() ? (hi - lo) : gaps[gaps.size() / 2];

    Matrix V = Matrix::Zero(dr, dr);
    for (Index k = 1; k < dr; ++k) {
        const double g =
            profile_value(profile, modes[static_cast<size_t>(k - 1)], lo, hi) * std::sqrt(dw);
        V(0, k) = g;
        V(k, 0) = g;
    }
    return V;
}

} // namespace

ReservoirSpec build_star_reservoir(int M, double omega_min, double omega_max) {
    return reservoir_from_modes(star_grid(M, omega_min, omega_max));
}

ReservoirSpec build_random_reservoir(int M, double omega_min, double omega_max,
                                     std::uint64_t seed) {
    if (M < 2) throw std::invalid_argument("build_random_reservoir: M must be >= 2");
    if (!(omega_min < omega_max))
        throw std::invalid_argument("build_random_reservoir: omega_min must be < omega_max");
    const double guard = (omega_max - omega_min) / double(M);
    Rng rng(seed);
    std::vector<double> modes;
    while (static_cast<int>(modes.size()) < M) {
        const double x = rng.uniform(omega_min, omega_max);
        if (std::abs(x) < guard) continue;
        modes.push_back(x);
    }
    std::sort(modes.begin(), modes.end());
    return reservoir_from_modes(modes);
}

// --------------------------- spin-boson surrogate ----------------------------

SpinBosonParts build_spin_boson_surrogate(double omega0, int M, double omega_min,
                                          double omega_max, const ProfileSpec& profile,
                                          std::uint64_t seed) {
    (void)seed;   // grid baths are deterministic; seed is carried for the random kind
    SpinBosonParts parts;

    Matrix H_S = Matrix::Zero(2, 2);
    H_S(0, 0) = 0.5 * omega0;
    H_S(1, 1) = -0.5 * omega0;
    auto [psi, L_S] = purify_gibbs(H_S, 0.0);
    (void)psi;
    parts.sys = make_system_spec(L_S);

    parts.res = build_star_reservoir(M, omega_min, omega_max);

    // X = sigma_x (x) 1 maps every L_S eigenspace off itself
    Matrix sx = Matrix::Zero(2, 2);
    sx(0, 1) = 1.0;
    sx(1, 0) = 1.0;
    parts.X = kron(sx, identity(2));

    const Matrix V = star_coupling(parts.res, profile, omega_min, omega_max);
    parts.couplings.resize(parts.res.dim - 1);
    for (Index k = 1; k < parts.res.dim; ++k) parts.couplings(k - 1) = V(0, k).real();
    parts.interaction = kron(parts.X, V);
    return parts;
}

double recurrence_time(const ReservoirSpec& res) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(res.L_R);
    const RealVector& ev = es.eigenvalues();
    double gap = std::numeric_limits<double>::infinity();
    const double scale = std::max(1.0, std::abs(ev(ev.size() - 1)));
    for (Index i = 0; i + 1 < ev.size(); ++i) {
        const double d = ev(i + 1) - ev(i);
        if (d > 1e-12 * scale) gap = std::min(gap, d);
    }
    if (!std::isfinite(gap)) return std::numeric_limits<double>::infinity();
    return 2.0 * M_PI / gap;
}

BuiltScenario build_scenario(const Scenario& sc) {
    BuiltScenario out;
    if (sc.reservoir_kind == "star")
        out.res = build_star_reservoir(sc.M, sc.omega_min, sc.omega_max);
    else if (sc.reservoir_kind == "random")
        out.res = build_random_reservoir(sc.M, sc.omega_min, sc.omega_max, sc.seed);
    else
        throw SchemaError("reservoir.kind", "unknown kind '" + sc.reservoir_kind + "'");

    Matrix X;
    if (sc.omega0) {
        Matrix H_S = Matrix::Zero(2, 2);
        H_S(0, 0) = 0.5 * *sc.omega0;
        H_S(1, 1) = -0.5 * *sc.omega0;
        out.sys = make_system_spec(purify_gibbs(H_S, 0.0).second);
        Matrix sx = Matrix::Zero(2, 2);
        sx(0, 1) = 1.0;
        sx(1, 0) = 1.0;
        X = (sc.interaction_form == "custom" && sc.X) ? *sc.X : kron(sx, identity(2));
    } else if (sc.L_S) {
        out.sys = make_system_spec(*sc.L_S);
        if (sc.interaction_form != "custom" || !sc.X)
            throw SchemaError("interaction.form",
                              "explicit L_S requires a custom interaction X matrix");
        X = *sc.X;
    } else {
        throw SchemaError("system", "one of system.omega0 or system.L_S is required");
    }
    out.interaction = kron(X, star_coupling(out.res, sc.profile, sc.omega_min, sc.omega_max));

    out.recurrence = recurrence_time(out.res);
    out.mode_spacing = 2.0 * M_PI / out.recurrence;
    return out;
}

// ----------------------------- serialization --------------------------------

namespace {

json matrix_to_json(const Matrix& X) {
    json rows = json::array();
    for (Index i = 0; i < X.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < X.cols(); ++j) {
            const Complex v = X(i, j);
            if (v.imag() == 0.0)
                row.push_back(v.real());
            else
                row.push_back(json::array({v.real(), v.imag()}));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw SchemaError(path, "expected a nonempty array of rows");
    const Index rows = static_cast<Index>(j.size());
    const Index cols = static_cast<Index>(j[0].size());
    Matrix X(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        if (static_cast<Index>(j[static_cast<size_t>(i)].size()) != cols)
            throw SchemaError(path, "ragged matrix rows");
        for (Index c = 0; c < cols; ++c) {
            const json& e = j[static_cast<size_t>(i)][static_cast<size_t>(c)];
            if (e.is_number())
                X(i, c) = Complex(e.get<double>(), 0.0);
            else if (e.is_array() && e.size() == 2)
                X(i, c) = Complex(e[0].get<double>(), e[1].get<double>());
            else
                throw SchemaError(path, "matrix entries must be numbers or [re, im] pairs");
        }
    }
    return X;
}

template <class T>
T require(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) throw SchemaError(path + "." + key, "missing field");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw SchemaError(path + "." + key, "wrong type");
    }
}

} // namespace

std::string scenario_to_json(const Scenario& sc) {
    json j;
    j["schema"] = 1;
    j["name"] = sc.name;

    json sys;
    if (sc.omega0) sys["omega0"] = *sc.omega0;
    if (sc.L_S) sys["L_S"] = matrix_to_json(*sc.L_S);
    j["system"] = sys;

    json res;
    res["kind"] = sc.reservoir_kind;
    res["M"] = sc.M;
    res["omega_min"] = sc.omega_min;
    res["omega_max"] = sc.omega_max;
    json prof;
    prof["name"] = sc.profile.name;
    prof["params"] = json(sc.profile.params);
    res["coupling_profile"] = prof;
    res["seed"] = sc.seed;
    j["reservoir"] = res;

    json inter;
    inter["form"] = sc.interaction_form;
    if (sc.X) inter["X"] = matrix_to_json(*sc.X);
    j["interaction"] = inter;

    j["lambdas"] = sc.lambdas;
    j["t_grid"] = {{"n", sc.t_grid.n}, {"t_max", sc.t_grid.t_max}};
    j["tolerances"] = json(sc.tolerances);
    return j.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError("(root)", std::string("invalid JSON: ") + e.what());
    }
    if (require<int>(j, "", "schema") != 1) throw SchemaError("schema", "unsupported version");

    Scenario sc;
    sc.name = require<std::string>(j, "", "name");

    if (!j.contains("system")) throw SchemaError("system", "missing field");
    const json& sys = j.at("system");
    if (sys.contains("omega0")) sc.omega0 = require<double>(sys, "system", "omega0");
    if (sys.contains("L_S")) sc.L_S = matrix_from_json(sys.at("L_S"), "system.L_S");
    if (!sc.omega0 && !sc.L_S)
        throw SchemaError("system", "one of omega0 or L_S is required");

    if (!j.contains("reservoir")) throw SchemaError("reservoir", "missing field");
    const json& res = j.at("reservoir");
    sc.reservoir_kind = require<std::string>(res, "reservoir", "kind");
    if (sc.reservoir_kind != "star" && sc.reservoir_kind != "random")
        throw SchemaError("reservoir.kind", "must be 'star' or 'random'");
    sc.M = require<int>(res, "reservoir", "M");
    if (sc.M < 2) throw SchemaError("reservoir.M", "must be >= 2");
    sc.omega_min = require<double>(res, "reservoir", "omega_min");
    sc.omega_max = require<double>(res, "reservoir", "omega_max");
    if (!(sc.omega_min < sc.omega_max))
        throw SchemaError("reservoir.omega_min", "must be < reservoir.omega_max");
    if (!res.contains("coupling_profile"))
        throw SchemaError("reservoir.coupling_profile", "missing field");
    const json& prof = res.at("coupling_profile");
    sc.profile.name = require<std::string>(prof, "reservoir.coupling_profile", "name");
    if (!profile_known(sc.profile.name))
        throw SchemaError("reservoir.coupling_profile.name",
                          "unknown profile '" + sc.profile.name + "'");
    if (prof.contains("params")) {
        for (auto it = prof.at("params").begin(); it != prof.at("params").end(); ++it) {
            if (!it.value().is_number())
                throw SchemaError("reservoir.coupling_profile.params." + it.key(),
                                  "must be a number");
            sc.profile.params[it.key()] = it.value().get<double>();
        }
    }
    sc.seed = res.contains("seed") ? require<std::uint64_t>(res, "reservoir", "seed") : 0;

    if (!j.contains("interaction")) throw SchemaError("interaction", "missing field");
    const json& inter = j.at("interaction");
    sc.interaction_form = require<std::string>(inter, "interaction", "form");
    if (sc.interaction_form != "sigma_x-cross" && sc.interaction_form != "custom")
        throw SchemaError("interaction.form", "must be 'sigma_x-cross' or 'custom'");
    if (inter.contains("X")) sc.X = matrix_from_json(inter.at("X"), "interaction.X");
    if (sc.interaction_form == "custom" && !sc.X)
        throw SchemaError("interaction.X", "custom form requires X");

    if (!j.contains("lambdas") || !j.at("lambdas").is_array())
        throw SchemaError("lambdas", "missing array");
    for (const auto& v : j.at("lambdas")) {
        if (!v.is_number()) throw SchemaError("lambdas", "entries must be numbers");
        sc.lambdas.push_back(v.get<double>());
    }

    if (!j.contains("t_grid")) throw SchemaError("t_grid", "missing field");
    sc.t_grid.t_max = require<double>(j.at("t_grid"), "t_grid", "t_max");
    sc.t_grid.n = require<int>(j.at("t_grid"), "t_grid", "n");
    if (sc.t_grid.n < 2) throw SchemaError("t_grid.n", "must be >= 2");
    if (!(sc.t_grid.t_max > 0)) throw SchemaError("t_grid.t_max", "must be > 0");

    if (j.contains("tolerances")) {
        for (auto it = j.at("tolerances").begin(); it != j.at("tolerances").end(); ++it) {
            if (!it.value().is_number())
                throw SchemaError("tolerances." + it.key(), "must be a number");
            sc.tolerances[it.key()] = it.value().get<double>();
        }
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_scenario: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return scenario_from_json(ss.str());
}

void save_scenario(const Scenario& sc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_scenario: cannot open " + path);
    out << scenario_to_json(sc);
}

} // namespace resodyn::models
