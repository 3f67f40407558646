// models.hpp — Desk-scale scenarios: star-bath surrogates, spin-boson-like
// couplings, and scenario (de)serialization
//
// Scenario files are UTF-8 JSON with a "schema": 1 version field. Canonical
// form is sorted keys and shortest round-trip float formatting; save(load(f))
// is byte-identical on canonical files.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "resodyn/operator_core.hpp"

namespace resodyn::models {

struct ProfileSpec {
    std::string name = "flat";
    std::map<std::string, double> params;
};

// Coupling profile evaluated on the reservoir band [lo, hi]. Known names:
//   flat            {amplitude}
//   sine_window     {amplitude}                  A sin^2(pi u), vanishing at the edges
//   gaussian        {amplitude, center, width}
//   notched_window  {amplitude, notch, notch_width}  sine_window with a quadratic zero
// Unknown names raise SchemaError on "reservoir.coupling_profile.name".
double profile_value(const ProfileSpec& p, double omega, double lo, double hi);
bool profile_known(const std::string& name);

struct TGrid {
    double t_max = 10.0;
    int n = 200;
};

struct Scenario {
    std::string name;
    // system: either a qubit Liouvillean from the purified H_S = (omega0/2) sigma_z,
    // or explicit L_S entries
    std::optional<double> omega0;
    std::optional<Matrix> L_S;
    // reservoir surrogate
    std::string reservoir_kind = "star";   // star | random
    int M = 0;
    double omega_min = 0.0, omega_max = 0.0;
    ProfileSpec profile;
    std::uint64_t seed = 0;
    // interaction: X (x) V_R with X fixed by the form
    std::string interaction_form = "sigma_x-cross";   // sigma_x-cross | custom
    std::optional<Matrix> X;
    std::vector<double> lambdas;
    TGrid t_grid;
    std::map<std::string, double> tolerances;
};

// L_R = diag(0, omega_1..omega_M) on a uniform grid excluding a neighborhood of
// zero of half-width one grid step; Omega_R is the first basis vector.
ReservoirSpec build_star_reservoir(int M, double omega_min, double omega_max);

// Uniform random modes (seeded, sorted, zero neighborhood excluded).
ReservoirSpec build_random_reservoir(int M, double omega_min, double omega_max,
                                     std::uint64_t seed);

struct SpinBosonParts {
    SystemSpec sys;
    ReservoirSpec res;
    Matrix interaction;       // X (x) V_R
    Matrix X;                 // system factor, off-diagonal in the L_S eigenbasis
    RealVector couplings;     // g_k = profile(omega_k) sqrt(dw)
};

// Qubit Liouvillean L_S = H_S (x) 1 - 1 (x) H_S with H_S = (omega0/2) sigma_z,
// star reservoir, and I = (sigma_x (x) 1) (x) V_R; P_e I P_e = 0 by construction.
SpinBosonParts build_spin_boson_surrogate(double omega0, int M, double omega_min,
                                          double omega_max, const ProfileSpec& profile,
                                          std::uint64_t seed);

// 2 pi / (minimal positive eigenvalue gap of L_R): the horizon beyond which the
// finite bath stops mimicking a continuum.
double recurrence_time(const ReservoirSpec& res);

struct BuiltScenario {
    SystemSpec sys;
    ReservoirSpec res;
    Matrix interaction;
    double recurrence = 0.0;
    double mode_spacing = 0.0;
};

BuiltScenario build_scenario(const Scenario& sc);

// JSON round trip. Canonical output: sorted keys, shortest-round-trip floats.
std::string scenario_to_json(const Scenario& sc);
Scenario scenario_from_json(const std::string& text);
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& sc, const std::string& path);

} // namespace resodyn::models
