// harness.cpp — Remainder fields, scaling studies, decay checks, K bookkeeping,
// and the CLI

#include "resodyn/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "resodyn/csv.hpp"
#include "resodyn/errors.hpp"

namespace resodyn::harness {

using nlohmann::json;

namespace {

std::uint64_t key_bits(double x) { return std::bit_cast<std::uint64_t>(x); }

// least-squares slope of y against x
double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) return 0.0;
    return (n * sxy - sx * sy) / den;
}

} // namespace

// ------------------------------ ScenarioContext ------------------------------

ScenarioContext::ScenarioContext(models::Scenario sc) : scenario_(std::move(sc)) {
    built_ = models::build_scenario(scenario_);
    base_ = std::make_shared<CoupledLiouvillean>(
        build_liouvillean(built_.sys, built_.res, built_.interaction, 0.0));

    const double tol_real = tolerance("tol_real", 1e-6);
    lsd_ = compute_all_level_shifts(*base_, tol_real);

    const double eps_floor = tolerance("eps_floor", 3.0 * built_.mode_spacing);
    const double kappa1 = kappa1_estimate(*base_, eps_floor);

    // ||I P_R|| from the action of I on the stationary product basis
    Matrix IB(base_->dim(), built_.sys.dim);
    for (Index i = 0; i < built_.sys.dim; ++i) {
        Vector e_i = Vector::Zero(built_.sys.dim);
        e_i(i) = 1.0;
        IB.col(i) = built_.interaction * with_stationary_reservoir(e_i, built_.res);
    }
    const double norm_I_PR = IB.jacobiSvd().singularValues()(0);

    params_ = perturbation_params(lsd_, built_.sys, kappa1, norm_I_PR);
    params_.lambda0_guard_factor = tolerance("lambda0_guard_factor", 1.0);

    const double lam0 = scenario_.lambdas.empty() ? 0.0 : scenario_.lambdas.front();
    report_ = audit_assumptions(at(lam0), lsd_);
}

double ScenarioContext::tolerance(const std::string& key, double fallback) const {
    auto it = scenario_.tolerances.find(key);
    return it == scenario_.tolerances.end() ? fallback : it->second;
}

const CoupledLiouvillean& ScenarioContext::at(double lambda) {
    auto it = by_lambda_.find(key_bits(lambda));
    if (it != by_lambda_.end()) return *it->second;
    if (lambda == 0.0) {
        by_lambda_.emplace(key_bits(0.0), base_);
        return *base_;
    }
    auto L = std::make_shared<CoupledLiouvillean>(
        build_liouvillean(built_.sys, built_.res, built_.interaction, lambda));
    by_lambda_.emplace(key_bits(lambda), L);
    return *L;
}

const MarkovGenerator& ScenarioContext::markov_at(double lambda) {
    auto it = markov_.find(key_bits(lambda));
    if (it != markov_.end()) return *it->second;

    const CoupledLiouvillean& L = at(lambda);
    std::vector<EigenvalueTrack> tracks;
    for (const auto& d : lsd_)
        for (int s : d.osc) tracks.push_back(track_eigenvalue(L, d, params_, s, TrackMode::FixedPoint));
    auto M = std::make_shared<MarkovGenerator>(
        build_markov_generator(L, lsd_, tracks, lambda, false, &params_));
    markov_.emplace(key_bits(lambda), M);
    return *M;
}

std::vector<double> ScenarioContext::default_t_grid() const {
    const double t_end = std::min(scenario_.t_grid.t_max, 0.8 * built_.recurrence);
    const int n = scenario_.t_grid.n;
    std::vector<double> grid(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        grid[static_cast<size_t>(i)] =
            t_end * std::pow(10.0, -3.0 * (1.0 - double(i) / double(n - 1)));
    return grid;
}

std::vector<StatePair> ScenarioContext::default_state_pairs() {
    const auto& sys = built_.sys;
    std::vector<StatePair> pairs;
    std::vector<Vector> prod(static_cast<size_t>(sys.dim));
    for (Index m = 0; m < sys.dim; ++m)
        prod[static_cast<size_t>(m)] = with_stationary_reservoir(sys.eigenbasis.col(m), built_.res);
    for (Index m = 0; m < sys.dim; ++m)
        for (Index n = 0; n < sys.dim; ++n)
            pairs.push_back({"s" + std::to_string(m), "s" + std::to_string(n),
                             prod[static_cast<size_t>(m)], prod[static_cast<size_t>(n)]});

    // two reservoir-orthogonal pairs reachable through the interaction
    const CoupledLiouvillean& L = *base_;
    for (Index m = 0; m < std::min<Index>(2, sys.dim); ++m) {
        Vector v = L.P_R_perp() * (built_.interaction * prod[static_cast<size_t>(m)]);
        const double nrm = v.norm();
        if (nrm < 1e-14) continue;
        v /= nrm;
        const std::string id = "p" + std::to_string(m);
        pairs.push_back({id, id, v, v});
    }
    return pairs;
}

// ------------------------------ remainder field ------------------------------

std::vector<RemainderRecord> remainder_field(ScenarioContext& ctx, double lambda,
                                             const std::vector<StatePair>& pairs,
                                             const std::vector<double>& t_grid) {
    const auto& rep = ctx.report();
    if (!(rep.a2_kernel && rep.a4_diagonal_free && rep.a5_fgr))
        throw std::invalid_argument("remainder_field: scenario failed its assumption audit");

    bool listed = false;
    for (double l : ctx.scenario().lambdas) listed |= std::abs(l - lambda) <= 1e-12;
    if (!listed) throw std::invalid_argument("remainder_field: lambda not in the scenario list");
    if (std::abs(lambda) >= ctx.params().lambda_guard())
        throw std::invalid_argument("remainder_field: lambda exceeds the lambda0 guard");

    for (double t : t_grid)
        if (t > ctx.recurrence())
            throw std::invalid_argument("remainder_field: t_grid exceeds the recurrence time " +
                                        format_double(ctx.recurrence()));

    const CoupledLiouvillean& L = ctx.at(lambda);
    const MarkovGenerator& M = ctx.markov_at(lambda);
    const auto& full = L.full_spectral();
    const auto red = L.reservoir_restricted(lambda);

    std::vector<RemainderRecord> out;
    out.reserve(pairs.size() * t_grid.size());
    for (const auto& pr : pairs) {
        const Vector a = full.eigenvectors.adjoint() * pr.phi;
        const Vector b = full.eigenvectors.adjoint() * pr.psi;
        Vector exact_coeff(a.size());
        for (Index k = 0; k < a.size(); ++k) exact_coeff(k) = std::conj(a(k)) * b(k);

        const Vector phiS = system_component(pr.phi, L.res());
        const Vector psiS = system_component(pr.psi, L.res());
        std::vector<Complex> mk_coeff;
        std::vector<Complex> mk_exp;
        for (const auto& c : M.channels()) {
            mk_coeff.push_back(phiS.dot(c.Q_sys * psiS));
            mk_exp.push_back(c.exponent);
        }

        const Vector cp = red->modes.adjoint() * (L.P_R_perp() * pr.phi);
        const Vector dp = red->modes.adjoint() * (L.P_R_perp() * pr.psi);
        Vector diss_coeff(cp.size());
        for (Index k = 0; k < cp.size(); ++k) diss_coeff(k) = std::conj(cp(k)) * dp(k);

        for (double t : t_grid) {
            RemainderRecord rec;
            rec.lambda = lambda;
            rec.t = t;
            rec.phi_id = pr.phi_id;
            rec.psi_id = pr.psi_id;
            for (Index k = 0; k < exact_coeff.size(); ++k)
                rec.exact += exact_coeff(k) * std::exp(kImag * (t * full.eigenvalues(k)));
            for (size_t c = 0; c < mk_coeff.size(); ++c)
                rec.markov_term += mk_coeff[c] * std::exp(kImag * t * mk_exp[c]);
            for (Index k = 0; k < diss_coeff.size(); ++k)
                rec.dissipative_term += diss_coeff(k) * std::exp(kImag * (t * red->eigenvalues(k)));
            rec.remainder = rec.exact - rec.markov_term - rec.dissipative_term;
            out.push_back(std::move(rec));
        }
    }
    return out;
}

// ------------------------------- scaling study -------------------------------

ScalingResult scaling_study(ScenarioContext& ctx, const std::vector<double>& lambdas,
                            const std::vector<StatePair>& pairs,
                            const std::vector<double>& t_grid) {
    if (lambdas.size() < 3)
        throw std::invalid_argument("scaling_study: need at least 3 lambdas");
    for (size_t i = 0; i + 1 < lambdas.size(); ++i)
        if (!(lambdas[i] > lambdas[i + 1]))
            throw std::invalid_argument("scaling_study: lambdas must be strictly decreasing");

    ScalingResult result;
    for (double lam : lambdas) {
        double sup = 0.0;
        for (const auto& rec : remainder_field(ctx, lam, pairs, t_grid))
            sup = std::max(sup, std::abs(rec.remainder));
        result.rows.push_back({lam, sup, 0.0, true});
    }

    result.C = result.rows.front().sup_remainder / std::pow(std::abs(lambdas.front()), 0.25);
    for (auto& row : result.rows) {
        row.bound = result.C * std::pow(std::abs(row.lambda), 0.25);
        row.pass = row.sup_remainder <= row.bound + 1e-12 * (1.0 + result.C);
        result.pass = result.pass && row.pass;
    }
    for (size_t i = 0; i + 1 < result.rows.size(); ++i)
        result.monotone &= result.rows[i + 1].sup_remainder <=
                           result.rows[i].sup_remainder + 1e-12 * (1.0 + result.rows[i].sup_remainder);

    std::vector<double> lx, ly;
    for (const auto& row : result.rows)
        if (row.lambda > 0.0 && row.sup_remainder > 0.0) {
            lx.push_back(std::log(row.lambda));
            ly.push_back(std::log(row.sup_remainder));
        }
    result.fitted_exponent = (lx.size() >= 2) ? ls_slope(lx, ly) : 0.0;
    return result;
}

// ------------------------------ decay rate check -----------------------------

DecayRateResult decay_rate_check(ScenarioContext& ctx, double lambda, int e_index, int s) {
    const auto& lsd = ctx.level_shifts().at(static_cast<size_t>(e_index));
    const auto& eig = lsd.eigs.at(static_cast<size_t>(s));

    DecayRateResult res;
    res.e = lsd.e;
    res.s = s;
    res.lambda = lambda;
    res.predicted_rate = lambda * lambda * eig.a.imag();

    const bool decaying = std::find(lsd.dec.begin(), lsd.dec.end(), s) != lsd.dec.end();
    if (!decaying) {
        // no resonant channel; report the (near-zero) prediction without a fit
        res.exponential_fit = false;
        res.fitted_rate = 0.0;
        res.rel_error = std::numeric_limits<double>::quiet_NaN();
        return res;
    }

    const double T = 0.3 / res.predicted_rate;
    if (T > 0.8 * ctx.recurrence())
        throw std::invalid_argument("decay_rate_check: fit window collides with the recurrence "
                                    "time " + format_double(ctx.recurrence()));

    Vector r = eig.right;
    r /= r.norm();
    const CoupledLiouvillean& L = ctx.at(lambda);
    const auto& full = L.full_spectral();
    const Vector a = full.eigenvectors.adjoint() * r;

    std::vector<double> ts, logs;
    const int n = 60;
    for (int i = 0; i < n; ++i) {
        const double t = T * double(i) / double(n - 1);
        Complex v = 0.0;
        for (Index k = 0; k < a.size(); ++k)
            v += std::conj(a(k)) * a(k) * std::exp(kImag * (t * full.eigenvalues(k)));
        const double mag = std::abs(v);
        if (mag < 1e-12) continue;
        ts.push_back(t);
        logs.push_back(std::log(mag));
    }
    res.fitted_rate = -ls_slope(ts, logs);
    res.rel_error = std::abs(res.fitted_rate - res.predicted_rate) / res.predicted_rate;
    return res;
}

// -------------------------------- K constant ---------------------------------

namespace {

struct CjEstimator {
    ScenarioContext& ctx;
    const CoupledLiouvillean& L;
    double eps_floor;
    bool reliable = true;

    // C_j surrogates evaluated on P_R^perp-projected arguments; j = 1 is the
    // global (Q = P_R) constant, j = 2 the local (Q = P_e, |x - e| <= g/2) one.
    double operator()(int j, const Vector& phi, const Vector& psi) {
        const Vector pphi = L.P_R_perp() * phi;
        const Vector ppsi = L.P_R_perp() * psi;
        if (pphi.norm() <= 1e-14 * std::max(1.0, phi.norm()) ||
            ppsi.norm() <= 1e-14 * std::max(1.0, psi.norm()))
            return 0.0;
        if (j == 1) {
            const LapEstimate est = lap_constant_estimate(L, L.P_R(), pphi, ppsi, 1, eps_floor);
            reliable &= est.reliable;
            return est.value;
        }
        double best = 0.0;
        const double half_g = ctx.params().g ? 0.5 * *ctx.params().g
                                             : std::numeric_limits<double>::infinity();
        for (int i = 0; i < L.eigenvalue_count(); ++i) {
            const double e = L.eigenvalue(i);
            std::optional<std::pair<double, double>> window;
            if (std::isfinite(half_g)) window = std::make_pair(e - half_g, e + half_g);
            const LapEstimate est =
                lap_constant_estimate(L, L.P_e(i), pphi, ppsi, 2, eps_floor, window);
            reliable &= est.reliable;
            best = std::max(best, est.value);
        }
        return best;
    }
};

} // namespace

KConstant k_constant(ScenarioContext& ctx, double lambda, const StatePair& pair) {
    const CoupledLiouvillean& L = ctx.at(lambda);
    const double eps_floor = ctx.tolerance("eps_floor", 3.0 * ctx.built().mode_spacing);
    CjEstimator Cj{ctx, L, eps_floor};

    const auto& sys = ctx.built().sys;
    std::vector<Vector> family;
    for (Index m = 0; m < sys.dim; ++m)
        family.push_back(L.interaction() *
                         with_stationary_reservoir(sys.eigenbasis.col(m), ctx.built().res));

    const Vector& phi = pair.phi;
    const Vector& psi = pair.psi;
    KConstant K;
    K.phi_id = pair.phi_id;
    K.psi_id = pair.psi_id;

    K.parts[0] = phi.norm() * psi.norm();
    K.parts[1] = std::max(Cj(1, phi, psi), Cj(2, phi, psi));

    double p3 = 0.0;
    for (int j = 1; j <= 2; ++j) {
        double mphi = 0.0, mpsi = 0.0;
        for (const auto& f : family) {
            mphi = std::max(mphi, Cj(j, f, phi));
            mpsi = std::max(mpsi, Cj(j, f, psi));
        }
        p3 = std::max(p3, mphi * mpsi);
    }
    K.parts[2] = p3;

    double mjphi = 0.0, mjpsi = 0.0;
    for (int j = 1; j <= 2; ++j)
        for (const auto& f : family) {
            mjphi = std::max(mjphi, Cj(j, f, phi));
            mjpsi = std::max(mjpsi, Cj(j, f, psi));
        }
    K.parts[3] = phi.norm() * mjpsi + psi.norm() * mjphi;

    auto part5_half = [&](const Vector& u, const Vector& v) {
        double m1u = 0.0;
        for (const auto& f : family) m1u = std::max(m1u, Cj(1, f, u));
        const Vector pv = L.P_R_perp() * v;
        double rhs = ctx.params().norm_I_P_R * pv.norm();
        if (pv.norm() > 1e-14) {
            const Vector barv =
                L.P_R_perp() * (L.L_lambda() * pv) + kImag * pv;   // (Lbar + i) P_R^perp v
            double m1b = 0.0;
            for (const auto& f : family) m1b = std::max(m1b, Cj(1, f, barv));
            rhs += m1b;
        }
        return (u.norm() + m1u) * rhs;
    };
    K.parts[4] = part5_half(phi, psi) + part5_half(psi, phi);

    K.value = 0.0;
    for (double p : K.parts) K.value += p;
    K.reliable = Cj.reliable;
    return K;
}

// ----------------------------------- CLI -------------------------------------

namespace {

std::string complex_fields(const Complex& v) {
    return format_double(v.real()) + "," + format_double(v.imag());
}

void emit_records(std::ostream& os, const std::vector<RemainderRecord>& recs, bool with_rem) {
    if (with_rem)
        os << "lambda,t,pair,exact_re,exact_im,markov_re,markov_im,diss_re,diss_im,rem_abs\n";
    else
        os << "lambda,t,pair,exact_re,exact_im,markov_re,markov_im,diss_re,diss_im\n";
    for (const auto& r : recs) {
        os << format_double(r.lambda) << ',' << format_double(r.t) << ',' << r.phi_id << '|'
           << r.psi_id << ',' << complex_fields(r.exact) << ',' << complex_fields(r.markov_term)
           << ',' << complex_fields(r.dissipative_term);
        if (with_rem) os << ',' << format_double(std::abs(r.remainder));
        os << '\n';
    }
}

int run_subcommand(const std::string& cmd, const std::string& scenario_path,
                   const std::string& out_path, std::optional<double> lambda_opt) {
    models::Scenario sc = models::load_scenario(scenario_path);
    ScenarioContext ctx(sc);

    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::binary);
        if (!file) {
            std::cerr << "cannot open output file " << out_path << "\n";
            return 1;
        }
    }
    std::ostream& os = out_path.empty() ? std::cout : file;

    const double lambda =
        lambda_opt ? *lambda_opt : (sc.lambdas.empty() ? 0.0 : sc.lambdas.front());

    if (cmd == "audit") {
        const auto& r = ctx.report();
        json j;
        j["schema"] = 1;
        j["a1_simple_eigs"] = r.a1_simple_eigs;
        j["a1_min_gap"] = r.a1_min_gap;
        j["a2_kernel"] = r.a2_kernel;
        j["a4_diagonal_free"] = r.a4_diagonal_free;
        j["a4_max_diag_norm"] = r.a4_max_diag_norm;
        j["a5_fgr"] = r.a5_fgr;
        j["a5_margin"] = std::isfinite(r.a5_margin) ? json(r.a5_margin) : json("inf");
        j["notes"] = r.notes;
        os << j.dump(2) << "\n";
        return (r.a1_simple_eigs && r.a2_kernel && r.a4_diagonal_free && r.a5_fgr) ? 0 : 2;
    }

    if (cmd == "levelshift") {
        os << "e,s,a_re,a_im,class,q_norm\n";
        for (const auto& d : ctx.level_shifts()) {
            for (size_t s = 0; s < d.eigs.size(); ++s) {
                const bool dec =
                    std::find(d.dec.begin(), d.dec.end(), static_cast<int>(s)) != d.dec.end();
                os << format_double(d.e) << ',' << s << ',' << format_double(d.eigs[s].a.real())
                   << ',' << format_double(d.eigs[s].a.imag()) << ',' << (dec ? "dec" : "osc")
                   << ',' << format_double(d.eigs[s].projection_norm()) << '\n';
            }
        }
        return 0;
    }

    if (cmd == "simulate" || cmd == "validate") {
        auto pairs = ctx.default_state_pairs();
        auto grid = ctx.default_t_grid();
        auto recs = remainder_field(ctx, lambda, pairs, grid);
        emit_records(os, recs, cmd == "validate");
        return 0;
    }

    if (cmd == "scaling") {
        auto pairs = ctx.default_state_pairs();
        auto grid = ctx.default_t_grid();
        auto res = scaling_study(ctx, sc.lambdas, pairs, grid);
        os << "lambda,sup_remainder,bound,pass\n";
        for (const auto& row : res.rows)
            os << format_double(row.lambda) << ',' << format_double(row.sup_remainder) << ','
               << format_double(row.bound) << ',' << (row.pass ? "1" : "0") << '\n';
        const bool ok = res.pass && res.monotone;
        os << (ok ? "PASS" : "FAIL") << " C=" << format_double(res.C)
           << " fitted_exponent=" << format_double(res.fitted_exponent) << "\n";
        return ok ? 0 : 2;
    }

    if (cmd == "decay") {
        os << "e,s,lambda,fitted_rate,predicted_rate,rel_error\n";
        const auto& lsd = ctx.level_shifts();
        for (size_t i = 0; i < lsd.size(); ++i) {
            for (int s : lsd[i].dec) {
                auto r = decay_rate_check(ctx, lambda, static_cast<int>(i), s);
                os << format_double(r.e) << ',' << r.s << ',' << format_double(r.lambda) << ','
                   << format_double(r.fitted_rate) << ',' << format_double(r.predicted_rate)
                   << ',' << format_double(r.rel_error) << '\n';
            }
        }
        return 0;
    }

    std::cerr << "unknown subcommand " << cmd << "\n";
    return 1;
}

} // namespace

int cli_run(const std::vector<std::string>& args) {
    CLI::App app{"resonance-expansion validation harness"};
    app.require_subcommand(1);

    std::string scenario_path, out_path;
    std::optional<double> lambda_opt;

    std::vector<CLI::App*> subs;
    for (const char* name : {"audit", "levelshift", "simulate", "validate", "scaling", "decay"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--scenario", scenario_path, "scenario JSON file")->required();
        sub->add_option("--out", out_path, "output path (default stdout)");
        double lam = 0.0;
        sub->add_option("--lambda", lam, "coupling constant")->each([&lambda_opt](const std::string& v) {
            lambda_opt = std::stod(v);
        });
        subs.push_back(sub);
    }

    std::vector<const char*> argv;
    argv.push_back("resodyn");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        std::ostringstream usage;
        int code = app.exit(e, usage, usage);
        std::cerr << usage.str();
        return code == 0 ? 0 : 1;
    }

    try {
        for (size_t i = 0; i < subs.size(); ++i)
            if (subs[i]->parsed())
                return run_subcommand(subs[i]->get_name(), scenario_path, out_path, lambda_opt);
        std::cerr << "no subcommand given\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cli_run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return cli_run(args);
}

} // namespace resodyn::harness
