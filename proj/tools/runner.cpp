#include "runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numbers>

#include "qfragile/bosonic.hpp"
#include "qfragile/estimation.hpp"
#include "qfragile/experiments.hpp"
#include "qfragile/fragility.hpp"
#include "qfragile/noise.hpp"
#include "qfragile/parallel.hpp"

namespace qfragile::cli {

namespace {

std::vector<double> as_list(const Json& v) {
    if (v.is_array()) {
        return v.get<std::vector<double>>();
    }
    return {v.get<double>()};
}

Spin probe_spin(const Json& config) {
    const auto& pr = config.at("probe");
    if (pr.contains("N")) {
        return Spin::from_twice(pr.at("N").get<int>());
    }
    return Spin::from_double(pr.at("J").get<double>());
}

std::string probe_state(const Json& config) {
    return config.at("probe").value("state", std::string("first-dicke"));
}

std::vector<double> plain_grid(const Json& g) {
    if (g.contains("values")) {
        return g.at("values").get<std::vector<double>>();
    }
    return uniform_grid(g.at("lo").get<double>(), g.at("hi").get<double>(), g.at("points").get<int>());
}

// Uniform grid on [lo, hi] refined around every arccos(M/J) inside it.
std::vector<double> beta_grid(const Json& config, Spin j) {
    const Json g = config.value("grid", Json::object());
    if (g.contains("values")) {
        return g.at("values").get<std::vector<double>>();
    }
    const BetaGridOptions defaults;
    return densified_grid(g.value("lo", 0.0), g.value("hi", std::numbers::pi), g.value("points", defaults.points),
                          discontinuity_angles(j), g.value("densify", defaults.densify),
                          g.value("halfwidth", defaults.halfwidth));
}

Json discontinuity_json(const std::vector<DiscontinuityRecord>& recs) {
    Json out = Json::array();
    for (const auto& r : recs) {
        out.push_back({{"beta_star", r.beta_star}, {"M", r.m}, {"delta_f", r.delta_f}});
    }
    return out;
}

std::vector<JumpOperator> pathological_jumps(const Json& noise, Spin j) {
    const double m = noise.at("M").get<double>();
    const std::string base = noise.value("base", std::string("jz"));
    const auto ops = angular_momentum_operators(j);
    const ComplexVector psi = dicke_ket(j, j.value() - 1.0);
    const double beta_m = std::acos(m / j.value());
    std::vector<ComplexMatrix> bases;
    if (base == "jz" || base == "xyz") {
        bases.push_back(ops.jz);
    }
    if (base == "jx" || base == "xyz") {
        bases.push_back(ops.jx);
    }
    if (base == "jy" || base == "xyz") {
        bases.push_back(ops.jy);
    }
    std::vector<JumpOperator> jumps;
    for (const auto& b : bases) {
        jumps.push_back({pathological_jump_operator(j, m, psi, beta_m, b), 1.0});
    }
    return jumps;
}

RunOutput run_sweep(const Json& config, int threads) {
    const Spin j = probe_spin(config);
    const auto betas = beta_grid(config, j);
    const Json noise = config.value("noise", Json{{"kind", "none"}});
    const std::string kind = noise.at("kind").get<std::string>();
    RunOutput out;
    out.table.header = "beta,cfi,qfi,gamma_t";
    out.metadata["noise_kind"] = kind;
    out.metadata["probe"] = "first Dicke state |J, J-1>";
    out.metadata["J"] = j.value();
    out.metadata["grid_points"] = betas.size();
    if (kind == "identity-mixing") {
        out.metadata["gamma_t_column"] = "holds epsilon for identity mixing";
    }
    std::vector<double> strengths = {0.0};
    if (noise.contains("gamma_t")) {
        strengths = as_list(noise.at("gamma_t"));
    } else if (noise.contains("epsilon")) {
        strengths = as_list(noise.at("epsilon"));
    }
    std::vector<JumpOperator> custom;
    if (kind == "pathological") {
        custom = pathological_jumps(noise, j);
        out.metadata["pathological_M"] = noise.at("M");
        out.metadata["pathological_base"] = noise.value("base", std::string("jz"));
    }
    Json qfis = Json::array();
    for (double s : strengths) {
        FisherSweep sweep;
        if (kind == "local-depolarizing") {
            const auto setup = local_noise_setup(j.twice(), s);
            sweep = local_noise_sweep(setup, betas, threads);
        } else {
            NoiseChannel channel = NoNoise{};
            if (kind == "collective-depolarizing") {
                channel = CollectiveDepolarizing{j, s};
            } else if (kind == "identity-mixing") {
                channel = IdentityMixing{s};
            } else if (kind == "pathological") {
                channel = CustomLindblad{LindbladSpec{custom, s}, LindbladMethod::automatic};
            }
            sweep = sweep_cfi(first_dicke_problem(j, channel), betas, threads);
        }
        if (kind == "none") {
            out.metadata["discontinuities"] = discontinuity_json(sweep.discontinuities);
        }
        qfis.push_back({{"gamma_t", s}, {"qfi", sweep.qfi}});
        for (std::size_t i = 0; i < sweep.beta.size(); ++i) {
            out.table.rows.push_back({format_number(sweep.beta[i]), format_number(sweep.cfi[i]),
                                      format_number(sweep.qfi), format_number(s)});
        }
    }
    out.metadata["qfi"] = qfis;
    return out;
}

RunOutput run_discontinuities(const Json& config) {
    const Spin j = probe_spin(config);
    RunOutput out;
    out.table.header = "beta_star,M,delta_f";
    for (const auto& r : locate_discontinuities(j)) {
        out.table.rows.push_back({format_number(r.beta_star), format_number(r.m), format_number(r.delta_f)});
    }
    out.metadata["J"] = j.value();
    out.metadata["qfi"] = 6.0 * j.value() - 2.0;
    return out;
}

void jensen_rows(RunOutput& out, const std::vector<JensenRow>& rows) {
    out.table.header = "beta,cfi,jensen_bound,fragile_trace,residual_trace";
    for (const auto& r : rows) {
        out.table.rows.push_back({format_number(r.beta), format_number(r.cfi), format_number(r.jensen_bound),
                                  format_number(r.fragile_trace), format_number(r.residual_trace)});
    }
}

RunOutput run_jensen(const Json& config, int threads) {
    const Spin j = probe_spin(config);
    const double g = config.at("gamma_t").get<double>();
    RunOutput out;
    jensen_rows(out, collective_jensen_sweep(j, g, beta_grid(config, j), threads));
    out.metadata["J"] = j.value();
    out.metadata["gamma_t"] = g;
    out.metadata["noise_kind"] = "collective-depolarizing";
    return out;
}

RunOutput run_local_jensen(const Json& config, int threads) {
    const Spin j = probe_spin(config);
    const double g = config.at("gamma_t").get<double>();
    const auto setup = local_noise_setup(j.twice(), g);
    RunOutput out;
    jensen_rows(out, local_jensen_sweep(setup, beta_grid(config, j), threads));
    out.metadata["N"] = j.twice();
    out.metadata["gamma_t"] = g;
    out.metadata["noise_kind"] = "local-depolarizing";
    out.metadata["qfi"] = setup.qfi;
    out.metadata["candidates"] =
        "R_y(+-arccos(M/J'))|J', J'-1> embedded in every (J', copy) block of the collective basis";
    return out;
}

RunOutput run_sphere(const Json& config, int threads) {
    const Spin j = probe_spin(config);
    const SphereProbe probe = probe_state(config) == "coherent" ? SphereProbe::coherent : SphereProbe::first_dicke;
    const double eps = config.at("epsilon").get<double>();
    RunOutput out;
    out.table.header = "theta_n,phi_n,cfi,epsilon";
    for (const auto& r :
         sphere_scan(j, probe, eps, plain_grid(config.at("theta_grid")), plain_grid(config.at("phi_grid")), threads)) {
        out.table.rows.push_back(
            {format_number(r.theta_n), format_number(r.phi_n), format_number(r.cfi), format_number(r.epsilon)});
    }
    out.metadata["J"] = j.value();
    out.metadata["probe"] = probe_state(config);
    out.metadata["generator"] = "R_z(phi_n) J_y R_z(phi_n)^dag";
    return out;
}

RunOutput run_mle(const Json& config, int threads, std::uint64_t seed) {
    const Spin j = probe_spin(config);
    const double g = config.at("gamma_t").get<double>();
    MleConfig mc;
    if (config.contains("theta0")) {
        mc.theta0s = as_list(config.at("theta0"));
    }
    mc.average = config.value("average", mc.average);
    mc.fold = config.value("fold", mc.fold);
    mc.samples = config.value("samples", mc.samples);
    mc.runs = config.value("runs", mc.runs);
    mc.resolution = config.value("resolution", mc.resolution);
    mc.average_points = config.value("average_points", mc.average_points);
    if (config.contains("average_range")) {
        mc.average_min = config.at("average_range")[0].get<double>();
        mc.average_max = config.at("average_range")[1].get<double>();
    }
    if (config.contains("theta_range")) {
        mc.theta_min = config.at("theta_range")[0].get<double>();
        mc.theta_max = config.at("theta_range")[1].get<double>();
    }
    mc.seed = seed;
    const auto betas = plain_grid(config.at("beta_grid"));
    const auto results = bias_monte_carlo(betas, first_dicke_family(j, g), mc, threads);
    RunOutput out;
    out.table.header = "beta,theta0,mean_bias,sem,runs";
    Json averaged = Json::array();
    for (const auto& r : results) {
        out.table.rows.push_back({format_number(r.beta), r.theta0 ? format_number(*r.theta0) : "averaged",
                                  format_number(r.mean_bias), format_number(r.sem), std::to_string(r.runs)});
        if (!r.theta0) {
            averaged.push_back({{"beta", r.beta}, {"mean_abs_bias", r.mean_abs_bias}, {"sem", r.sem}});
        }
    }
    out.metadata["J"] = j.value();
    out.metadata["gamma_t"] = g;
    out.metadata["averaged_abs_bias"] = averaged;
    out.metadata["bias_definition"] =
        mc.fold ? "mean of |theta_hat| - |theta0| (estimates folded to nonnegative values)" : "mean of theta_hat - theta0";
    out.metadata["seed_scheme"] = "splitmix64(seed ^ splitmix64((beta_index * truths + truth_index) * runs + run))";
    return out;
}

RunOutput run_bosonic(const Json& config, int threads) {
    const FockSpace space(config.value("cutoff", 40));
    const double g = config.at("gamma_t").get<double>();
    const auto alphas = plain_grid(config.at("alpha_grid"));
    RunOutput out;
    out.table.header = "alpha,cfi,probe_n,gamma_t";
    Json qfis = Json::array();
    for (double nd : as_list(config.at("fock_n"))) {
        const int n = static_cast<int>(nd);
        const auto sweep = bosonic_cfi_sweep(n, alphas, g, space, threads);
        for (std::size_t i = 0; i < sweep.alpha.size(); ++i) {
            out.table.rows.push_back(
                {format_number(sweep.alpha[i]), format_number(sweep.cfi[i]), std::to_string(n), format_number(g)});
        }
        qfis.push_back({{"probe_n", n}, {"qfi_noiseless", sweep.qfi_noiseless}});
    }
    out.metadata["cutoff"] = space.cutoff();
    out.metadata["qfi"] = qfis;
    out.metadata["quadratures"] = "X = (a + a^dag)/sqrt(2), P = i(a^dag - a)/sqrt(2); generator P; number-basis measurement";
    return out;
}

RunOutput run_qubit(const Json& config) {
    RunOutput out;
    out.table.header = "beta,p,cfi,closed_form";
    for (const auto& r :
         qubit_demo(plain_grid(config.at("beta_grid")), as_list(config.at("p")), config.value("theta", 0.0))) {
        out.table.rows.push_back(
            {format_number(r.beta), format_number(r.p), format_number(r.cfi), format_number(r.closed_form)});
    }
    return out;
}

RunOutput run_echo(const Json& config) {
    const Spin j = probe_spin(config);
    RunOutput out;
    out.table.header = "theta,cfi,qfi,epsilon";
    for (const auto& r : echo_demo(j, config.at("design_theta").get<double>(), as_list(config.at("epsilon")),
                                   plain_grid(config.at("theta_grid")))) {
        out.table.rows.push_back(
            {format_number(r.theta), format_number(r.cfi), format_number(r.qfi), format_number(r.epsilon)});
    }
    out.metadata["J"] = j.value();
    return out;
}

RunOutput run_hpa(const Json& config) {
    const auto js = as_list(config.at("J"));
    const int n = config.value("n", 1);
    const auto fit = hpa_scaling_check(js, n);
    RunOutput out;
    out.table.header = "J,branch,M,delta_f,ratio";
    for (std::size_t i = 0; i < js.size(); ++i) {
        const double jv = js[i];
        const double f = 6.0 * jv - 2.0;
        const double m0 = std::fmod(jv, 1.0) == 0.0 ? 0.0 : 0.5;
        out.table.rows.push_back({format_number(jv), "m0", format_number(m0), format_number(fit.ratio_m0[i] * f),
                                  format_number(fit.ratio_m0[i])});
        out.table.rows.push_back({format_number(jv), "fixed_n", format_number(jv - n), format_number(fit.jump_n1[i]),
                                  format_number(fit.jump_n1[i] / f)});
    }
    out.metadata["slope_ratio_m0"] = fit.slope_ratio_m0;
    out.metadata["slope_jump_fixed_n"] = fit.slope_jump_fixed_n;
    out.metadata["n"] = n;
    return out;
}

Json conventions() {
    return {{"spin_basis", "|J,M> ordered by M descending; index k = J - M"},
            {"measurement", "projective in exp(-i beta J_y)|J,M>, equivalently U_b^dag rho U_b measured in J_z"},
            {"encoding", "exp(-i theta G), G = J_y unless stated"},
            {"qubit_order", "qubit 0 is the most significant bit; |0> is spin up"},
            {"support_threshold", {{"default", 1e-12}, {"pure_probe_amplitudes", 1e-24}}},
            {"lindblad", "dense superoperator exponential for dim <= 64, RK4 with step 1e-4 above"},
            {"number_format", "%.17g"}};
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

}  // namespace

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

RunOutput compute_experiment(const Json& config, int threads, std::uint64_t seed) {
    const std::string kind = config.at("experiment").get<std::string>();
    if (kind == "sweep-cfi") {
        return run_sweep(config, threads);
    }
    if (kind == "discontinuities") {
        return run_discontinuities(config);
    }
    if (kind == "jensen") {
        return run_jensen(config, threads);
    }
    if (kind == "local-noise-jensen") {
        return run_local_jensen(config, threads);
    }
    if (kind == "sphere-scan") {
        return run_sphere(config, threads);
    }
    if (kind == "mle-bias") {
        return run_mle(config, threads, seed);
    }
    if (kind == "bosonic-sweep") {
        return run_bosonic(config, threads);
    }
    if (kind == "qubit-demo") {
        return run_qubit(config);
    }
    if (kind == "echo-demo") {
        return run_echo(config);
    }
    if (kind == "hpa-scaling") {
        return run_hpa(config);
    }
    throw ConfigError("unknown experiment kind " + kind);
}

RunResult run_experiment(const Json& config, const RunOptions& options) {
    const auto violations = validate_config(config);
    if (!violations.empty()) {
        std::string msg = "invalid config:";
        for (const auto& v : violations) {
            msg += "\n  " + v;
        }
        throw ConfigError(msg);
    }
    Json effective = config;
    if (options.seed) {
        effective["seed"] = *options.seed;
    }
    if (options.threads) {
        effective["threads"] = *options.threads;
    }
    const std::uint64_t seed = effective.value("seed", std::uint64_t{0});
    const int threads = resolve_threads(effective.value("threads", 0));

    const std::string started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    RunOutput out = compute_experiment(effective, threads, seed);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    RunResult res;
    res.csv = options.out_dir / effective.at("output").get<std::string>();
    res.manifest = res.csv;
    res.manifest.replace_extension(".manifest.json");
    res.rows = out.table.rows.size();
    if (res.csv.has_parent_path()) {
        std::filesystem::create_directories(res.csv.parent_path());
    }
    {
        std::ofstream csv(res.csv, std::ios::binary | std::ios::trunc);
        csv << out.table.header << '\n';
        for (const auto& row : out.table.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                csv << (i ? "," : "") << row[i];
            }
            csv << '\n';
        }
        if (!csv) {
            throw std::runtime_error("failed to write " + res.csv.string());
        }
    }
    Json manifest = {{"config", effective},
                     {"version", kVersion},
                     {"started_utc", started},
                     {"wall_time_seconds", wall},
                     {"threads", threads},
                     {"conventions", conventions()},
                     {"csv", res.csv.filename().string()},
                     {"rows", res.rows},
                     {"metadata", out.metadata}};
    std::ofstream mf(res.manifest, std::ios::binary | std::ios::trunc);
    mf << manifest.dump(2) << '\n';
    if (!mf) {
        throw std::runtime_error("failed to write " + res.manifest.string());
    }
    return res;
}

}  // namespace qfragile::cli
