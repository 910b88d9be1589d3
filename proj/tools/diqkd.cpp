// diqkd: rate analysis and protocol simulation for the generalized ent-B92
// device-independent QKD protocol.
//
// Subcommands: sweep, optimize, simulate, thresholds. Angles are taken in
// degrees on the command line and reported in degrees; internal computation is
// in radians.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "diqkd/io.hpp"
#include "diqkd/keyrate.hpp"
#include "diqkd/loss.hpp"
#include "diqkd/optimize.hpp"
#include "diqkd/quantum.hpp"
#include "diqkd/sim.hpp"

namespace {

using nlohmann::json;

constexpr double kDeg = M_PI / 180.0;

std::vector<std::string> g_argv;

double deg2rad(double d) { return d * kDeg; }
double rad2deg(double r) { return r / kDeg; }

// Resolves the --phi / --phi-equals-theta / --phi-maxviol triple.
double resolve_phi(double theta_rad, std::optional<double> phi_deg, bool phi_eq_theta,
                   bool phi_maxviol) {
    int set = (phi_deg.has_value() ? 1 : 0) + (phi_eq_theta ? 1 : 0) + (phi_maxviol ? 1 : 0);
    if (set > 1)
        throw CLI::ValidationError("phi", "choose only one of --phi/--phi-equals-theta/--phi-maxviol");
    if (phi_eq_theta) return theta_rad;
    if (phi_maxviol) return diqkd::optimal_phi_for_violation(theta_rad);
    if (phi_deg) return deg2rad(*phi_deg);
    throw CLI::ValidationError("phi", "one of --phi/--phi-equals-theta/--phi-maxviol is required");
}

diqkd::CoincidenceTable table_at(double theta, double phi, const diqkd::NoiseParams& noise) {
    diqkd::TwoQubitState st = diqkd::make_state(theta);
    return noise.is_zero() ? diqkd::coincidence_probs(st, phi)
                           : diqkd::coincidence_probs(diqkd::apply_noise(st, noise), phi);
}

void emit(const std::string& out, const std::string& command, std::uint64_t seed,
          const std::string& data) {
    if (out.empty() || out == "-") {
        std::cout << data;
        return;
    }
    diqkd::io::write_file(out, data);
    diqkd::io::write_manifest(out, command, g_argv, seed, data);
}

double nan_guard(std::function<double()> f) {
    try {
        return f();
    } catch (const diqkd::no_violation_error&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

// ---------------------------------------------------------------- sweep ----

diqkd::io::Csv sweep_fig1(double grid_deg) {
    diqkd::io::Csv csv;
    csv.columns = {"theta_deg", "r_entB92", "r_maxviol", "r_optimized"};
    for (double d = grid_deg; d <= 90.0 + 1e-9; d += grid_deg) {
        double th = deg2rad(std::min(d, 90.0));
        double phi_star =
            diqkd::optimal_phi_for_rate(th, diqkd::Efficiencies{1, 1}, diqkd::NoiseParams{});
        csv.rows.push_back({std::min(d, 90.0), diqkd::rate_trusted(th, th),
                            diqkd::rate_trusted(th, diqkd::optimal_phi_for_violation(th)),
                            diqkd::rate_trusted(th, phi_star)});
    }
    return csv;
}

diqkd::io::Csv sweep_fig3(double grid_deg, const diqkd::NoiseParams& noise) {
    diqkd::io::Csv csv;
    csv.columns = {"theta_deg",        "s_ch_entB92_pure", "s_ch_entB92_noisy",
                   "r_entB92_pure",    "r_entB92_noisy",   "s_ch_maxviol_pure",
                   "s_ch_maxviol_noisy", "r_maxviol_pure", "r_maxviol_noisy"};
    const diqkd::Efficiencies unit{1, 1};
    for (double d = grid_deg; d <= 90.0 + 1e-9; d += grid_deg) {
        double th = deg2rad(std::min(d, 90.0));
        std::vector<double> row{std::min(d, 90.0)};
        for (double phi : {th, diqkd::optimal_phi_for_violation(th)}) {
            diqkd::CoincidenceTable pure = table_at(th, phi, {});
            diqkd::CoincidenceTable noisy = table_at(th, phi, noise);
            row.push_back(diqkd::predict_s_ch(pure, unit));
            row.push_back(diqkd::predict_s_ch(noisy, unit));
            row.push_back(diqkd::rate_at_point(th, phi, unit, {}));
            row.push_back(diqkd::rate_at_point(th, phi, unit, noise));
        }
        // reorder: s_pure, s_noisy, r_pure, r_noisy per protocol branch
        csv.rows.push_back(row);
    }
    return csv;
}

diqkd::io::Csv sweep_fig4(double eta_step, const diqkd::NoiseParams& noise) {
    diqkd::io::Csv csv;
    csv.columns = {"mode",          "eta",
                   "r_entB92_pure", "r_generalized_pure",
                   "r_entB92_noisy", "r_generalized_noisy"};
    auto run = [&](diqkd::ScenarioMode mode, double eta_lo, double mode_id) {
        std::vector<double> grid;
        for (double e = eta_lo; e <= 1.0 + 1e-12; e += eta_step) grid.push_back(std::min(e, 1.0));
        auto pure = diqkd::rate_vs_eta_curve(mode, {}, grid);
        auto noisy = diqkd::rate_vs_eta_curve(mode, noise, grid);
        for (size_t k = 0; k < grid.size(); ++k)
            csv.rows.push_back({mode_id, grid[k], pure[k].rate_entB92, pure[k].rate_generalized,
                                noisy[k].rate_entB92, noisy[k].rate_generalized});
    };
    run(diqkd::ScenarioMode::full_di, 0.85, 0);
    run(diqkd::ScenarioMode::one_sdi, 0.50, 1);
    return csv;
}

diqkd::io::Csv sweep_fig5(double grid_deg, const diqkd::NoiseParams& noise) {
    diqkd::io::Csv csv;
    csv.columns = {"theta_deg",   "phi_maxviol_deg", "eta_th_pure",      "eta_th_noisy",
                   "eta_thB_pure", "eta_thB_noisy"};
    for (double d = grid_deg; d <= 90.0 + 1e-9; d += grid_deg) {
        double th = deg2rad(std::min(d, 90.0));
        double phi_v = diqkd::optimal_phi_for_violation(th);
        diqkd::CoincidenceTable pure_v = table_at(th, phi_v, {});
        diqkd::CoincidenceTable noisy_v = table_at(th, phi_v, noise);
        diqkd::CoincidenceTable pure_b = table_at(th, th, {});
        diqkd::CoincidenceTable noisy_b = table_at(th, th, noise);
        csv.rows.push_back(
            {std::min(d, 90.0), rad2deg(phi_v),
             nan_guard([&] { return diqkd::threshold_symmetric(pure_v); }),
             nan_guard([&] { return diqkd::threshold_symmetric(noisy_v); }),
             nan_guard([&] { return diqkd::threshold_bob(pure_b); }),
             nan_guard([&] { return diqkd::threshold_bob(noisy_b); })});
    }
    return csv;
}

int cmd_sweep(int figure, double grid_deg, double eta_step, const diqkd::NoiseParams& noise,
              std::string out, const std::string& format) {
    diqkd::io::Csv csv;
    switch (figure) {
        case 1: csv = sweep_fig1(grid_deg); break;
        case 3: csv = sweep_fig3(grid_deg, noise); break;
        case 4: csv = sweep_fig4(eta_step, noise); break;
        case 5: csv = sweep_fig5(grid_deg, noise); break;
        default:
            std::cerr << "unknown figure id: " << figure << " (expected 1, 3, 4 or 5)\n";
            return 2;
    }
    if (out.empty()) out = "fig" + std::to_string(figure) + "." + format;
    if (format == "json") {
        json j = csv.to_json();
        j["figure"] = figure;
        emit(out, "sweep", 0, j.dump(2) + "\n");
    } else {
        emit(out, "sweep", 0, csv.to_string());
    }
    return 0;
}

// ------------------------------------------------------------- optimize ----

int cmd_optimize(const std::string& mode, const diqkd::NoiseParams& noise,
                 const std::string& out) {
    json j;
    j["schema_version"] = diqkd::io::kSchemaVersion;
    j["command"] = "optimize";
    j["mode"] = mode;
    j["inputs"] = {{"p_c", noise.p_c}, {"p_w", noise.p_w}};
    if (mode == "di-threshold") {
        diqkd::ThresholdResult r = diqkd::di_threshold_symmetric(noise);
        j["threshold"] = r.threshold;
        j["theta_deg"] = rad2deg(r.theta_at_threshold);
        j["phi_deg"] = rad2deg(r.phi_at_threshold);
        j["rate_above_threshold"] = r.achieved_rate_above;
    } else if (mode == "sdi-threshold") {
        diqkd::ThresholdResult r = diqkd::sdi_threshold_bob(noise);
        j["threshold"] = r.threshold;
        j["theta_deg"] = rad2deg(r.theta_at_threshold);
        j["phi_deg"] = rad2deg(r.phi_at_threshold);
        j["rate_above_threshold"] = r.achieved_rate_above;
    } else if (mode == "best-theta") {
        diqkd::OptimizationResult r = diqkd::best_theta_entB92_trusted();
        j["theta_deg"] = rad2deg(r.best_theta);
        j["rate"] = r.best_value;
        j["iterations"] = r.iterations;
        j["converged"] = r.converged;
    } else if (mode == "crossover") {
        j["theta_deg"] = rad2deg(diqkd::crossover_theta_trusted());
    } else {
        std::cerr << "unknown optimize mode: " << mode << "\n";
        return 2;
    }
    emit(out, "optimize", 0, j.dump(2) + "\n");
    return 0;
}

// ------------------------------------------------------------- simulate ----

json sim_report(const diqkd::SimConfig& cfg, const diqkd::SimResult& res) {
    const auto& eff = cfg.eff;
    diqkd::CoincidenceTable t = table_at(cfg.params.theta, cfg.params.phi, cfg.noise);
    double pc_ref = t.conclusive_prob();
    double qps_ref = t.qber_ps();
    double qc_ref = diqkd::qber_conclusive(qps_ref, eff.eta_a);
    double s_ref = diqkd::predict_s_ch(t, eff);

    auto z = [](double hat, double ref, double sigma) {
        return sigma > 0 ? (hat - ref) / sigma : 0.0;
    };

    json j;
    j["schema_version"] = diqkd::io::kSchemaVersion;
    j["command"] = "simulate";
    j["inputs"] = {{"theta_deg", rad2deg(cfg.params.theta)},
                   {"phi_deg", rad2deg(cfg.params.phi)},
                   {"test_prob", cfg.params.test_prob},
                   {"eta_a", eff.eta_a},
                   {"eta_b", eff.eta_b},
                   {"p_c", cfg.noise.p_c},
                   {"p_w", cfg.noise.p_w},
                   {"n_pairs", cfg.n_pairs},
                   {"seed", cfg.seed}};
    j["counts"] = {{"bob_detected", res.bob_detected},
                   {"conclusive", res.conclusive},
                   {"sifted_len", res.sifted_len},
                   {"sifted_errors", res.sifted_errors},
                   {"post_selected_len", res.ps_len},
                   {"post_selected_errors", res.ps_errors}};
    j["estimates"] = {
        {"p_c", {{"value", res.p_c_hat}, {"sigma", res.p_c_sigma}, {"ref", pc_ref},
                 {"z", z(res.p_c_hat, pc_ref, res.p_c_sigma)}}},
        {"q_ps", {{"value", res.q_ps_hat}, {"sigma", res.q_ps_sigma}, {"ref", qps_ref},
                  {"z", z(res.q_ps_hat, qps_ref, res.q_ps_sigma)}}},
        {"q_c", {{"value", res.q_c_hat}, {"sigma", res.q_c_sigma}, {"ref", qc_ref},
                 {"z", z(res.q_c_hat, qc_ref, res.q_c_sigma)}}},
        {"s_ch_direct", {{"value", res.s_ch_direct_hat}, {"sigma", res.s_ch_direct_sigma},
                         {"ref", s_ref}, {"z", z(res.s_ch_direct_hat, s_ref, res.s_ch_direct_sigma)}}},
        {"s_ch_predicted", {{"value", res.s_ch_predicted_hat}, {"ref", s_ref}}}};
    try {
        diqkd::RateReport rr = diqkd::empirical_rates(res);
        j["rates"] = {{"r", rr.r}, {"r_no_postselection", rr.r_old},
                      {"r_bb84_style", rr.r_bb84_style}, {"s_ch", rr.s_ch}};
    } catch (const diqkd::insufficient_data_error& e) {
        j["rates"] = {{"error", e.what()}};
    }
    return j;
}

diqkd::io::Csv sim_counts_csv(const diqkd::SimResult& res) {
    diqkd::io::Csv csv;
    csv.columns = {"alice_basis", "bob_basis",      "alice_out",
                   "bob_out",     "assigned_count", "coincidence_count"};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y)
                    csv.rows.push_back({double(i), double(j), double(x), double(y),
                                        double(res.assigned[i][j][x][y]),
                                        double(res.coinc[i][j][x][y])});
    return csv;
}

int cmd_simulate(const diqkd::SimConfig& cfg, const std::string& out, const std::string& format,
                 const std::string& counts_out) {
    diqkd::SimResult res = diqkd::simulate(cfg);
    if (format == "csv") {
        emit(out, "simulate", cfg.seed, sim_counts_csv(res).to_string());
    } else {
        emit(out, "simulate", cfg.seed, sim_report(cfg, res).dump(2) + "\n");
    }
    if (!counts_out.empty())
        emit(counts_out, "simulate", cfg.seed, sim_counts_csv(res).to_string());
    return 0;
}

// ----------------------------------------------------------- thresholds ----

int cmd_thresholds(double theta, double phi, const diqkd::NoiseParams& noise,
                   const std::string& out) {
    diqkd::CoincidenceTable t = table_at(theta, phi, noise);
    json j;
    j["schema_version"] = diqkd::io::kSchemaVersion;
    j["command"] = "thresholds";
    j["inputs"] = {{"theta_deg", rad2deg(theta)}, {"phi_deg", rad2deg(phi)},
                   {"p_c", noise.p_c}, {"p_w", noise.p_w}};
    j["eta_th_symmetric"] = diqkd::threshold_symmetric(t);
    j["eta_th_bob"] = diqkd::threshold_bob(t);
    j["s_ch_at_unit_efficiency"] = diqkd::predict_s_ch(t, diqkd::Efficiencies{1, 1});
    emit(out, "thresholds", 0, j.dump(2) + "\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    for (int i = 0; i < argc; ++i) g_argv.emplace_back(argv[i]);

    CLI::App app{"Rate analysis and Monte Carlo simulation for the generalized ent-B92 "
                 "device-independent QKD protocol"};
    app.require_subcommand(1);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "emit figure datasets (CSV/JSON)");
    int figure = 1;
    double grid_deg = 0.1, eta_step = 0.01;
    diqkd::NoiseParams sweep_noise{0.015, 0.007};
    std::string sweep_out, sweep_format = "csv";
    sweep->add_option("--figure", figure, "figure id: 1, 3, 4 or 5")->required();
    sweep->add_option("--grid", grid_deg, "theta grid step in degrees")->check(CLI::PositiveNumber);
    sweep->add_option("--eta-step", eta_step, "efficiency grid step (figure 4)")
        ->check(CLI::PositiveNumber);
    sweep->add_option("--pc", sweep_noise.p_c, "colored noise weight for noisy columns");
    sweep->add_option("--pw", sweep_noise.p_w, "white noise weight for noisy columns");
    sweep->add_option("--out", sweep_out, "output path (default fig<N>.<format>)");
    sweep->add_option("--format", sweep_format)->check(CLI::IsMember({"csv", "json"}));

    // optimize
    auto* opt = app.add_subcommand("optimize", "threshold and angle optimizations");
    std::string opt_mode, opt_out;
    diqkd::NoiseParams opt_noise;
    opt->add_option("--mode", opt_mode, "di-threshold | sdi-threshold | best-theta | crossover")
        ->required()
        ->check(CLI::IsMember({"di-threshold", "sdi-threshold", "best-theta", "crossover"}));
    opt->add_option("--pc", opt_noise.p_c, "colored noise weight");
    opt->add_option("--pw", opt_noise.p_w, "white noise weight");
    opt->add_option("--out", opt_out, "output path (default stdout)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "event-level Monte Carlo run");
    double sim_theta = 0;
    std::optional<double> sim_phi;
    bool phi_eq_theta = false, phi_maxviol = false;
    std::optional<double> sim_eta;
    diqkd::SimConfig cfg;
    cfg.n_pairs = 1000000;
    std::string sim_out, sim_format = "json", counts_out;
    sim->add_option("--theta", sim_theta, "entanglement angle, degrees")->required();
    sim->add_option("--phi", sim_phi, "Bob basis angle, degrees");
    sim->add_flag("--phi-equals-theta", phi_eq_theta, "ent-B92 choice phi = theta");
    sim->add_flag("--phi-maxviol", phi_maxviol, "phi = arctan(sin theta)");
    sim->add_option("--eta", sim_eta, "sets both efficiencies");
    sim->add_option("--eta-a", cfg.eff.eta_a, "Alice overall efficiency");
    sim->add_option("--eta-b", cfg.eff.eta_b, "Bob overall efficiency");
    sim->add_option("--pc", cfg.noise.p_c, "colored noise weight");
    sim->add_option("--pw", cfg.noise.p_w, "white noise weight");
    sim->add_option("--n", cfg.n_pairs, "number of emitted pairs")->check(CLI::PositiveNumber);
    sim->add_option("--seed", cfg.seed, "RNG seed (default 0)");
    sim->add_option("--p", cfg.params.test_prob, "Alice test-basis probability");
    sim->add_option("--out", sim_out, "output path (default stdout)");
    sim->add_option("--format", sim_format)->check(CLI::IsMember({"csv", "json"}));
    sim->add_option("--counts-out", counts_out, "also write per-basis-pair counts CSV");

    // thresholds
    auto* thr = app.add_subcommand("thresholds", "threshold efficiencies at one parameter point");
    double thr_theta = 0;
    std::optional<double> thr_phi;
    bool thr_phi_eq = false, thr_phi_mv = false;
    diqkd::NoiseParams thr_noise;
    std::string thr_out;
    thr->add_option("--theta", thr_theta, "entanglement angle, degrees")->required();
    thr->add_option("--phi", thr_phi, "Bob basis angle, degrees");
    thr->add_flag("--phi-equals-theta", thr_phi_eq, "phi = theta");
    thr->add_flag("--phi-maxviol", thr_phi_mv, "phi = arctan(sin theta)");
    thr->add_option("--pc", thr_noise.p_c, "colored noise weight");
    thr->add_option("--pw", thr_noise.p_w, "white noise weight");
    thr->add_option("--out", thr_out, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sweep->parsed())
            return cmd_sweep(figure, grid_deg, eta_step, sweep_noise, sweep_out, sweep_format);
        if (opt->parsed()) return cmd_optimize(opt_mode, opt_noise, opt_out);
        if (sim->parsed()) {
            cfg.params.theta = deg2rad(sim_theta);
            cfg.params.phi = resolve_phi(cfg.params.theta, sim_phi, phi_eq_theta, phi_maxviol);
            if (sim_eta) cfg.eff.eta_a = cfg.eff.eta_b = *sim_eta;
            return cmd_simulate(cfg, sim_out, sim_format, counts_out);
        }
        if (thr->parsed()) {
            double th = deg2rad(thr_theta);
            return cmd_thresholds(th, resolve_phi(th, thr_phi, thr_phi_eq, thr_phi_mv), thr_noise,
                                  thr_out);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const diqkd::no_violation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const diqkd::insufficient_data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
