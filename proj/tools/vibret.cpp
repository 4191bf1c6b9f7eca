// vibret command-line front end.

#include "vibret/ensemble.hpp"
#include "vibret/oracle.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>

using namespace vibret;
using nlohmann::json;

namespace {

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

SshParams chain_params(int n_sites) {
    SshParams p;
    p.n_sites = n_sites;
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return p;
}

int cmd_optimize(int n_sites) {
    const SshParams p = chain_params(n_sites);
    const OptimizedGeometry g = optimize_geometry(p, n_sites / 2);
    const json out = {{"n_sites", n_sites},
                      {"u_star", to_json(g.u_star)},
                      {"bo_energy", g.bo_energy},
                      {"electronic_energy", g.electronic_energy},
                      {"orbital_energies", to_json(g.orbital_energies)},
                      {"gap", g.gap()},
                      {"residual_force", g.residual_force_norm},
                      {"iterations", g.iterations}};
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_modes(int n_sites) {
    const SshParams p = chain_params(n_sites);
    const OptimizedGeometry g = optimize_geometry(p, n_sites / 2);
    const NormalModes m = hessian_and_modes(p, g, n_sites / 2);
    std::vector<double> periods;
    for (Eigen::Index k = 0; k < m.frequencies.size(); ++k) periods.push_back(2.0 * M_PI / m.frequencies[k]);
    const json out = {{"n_sites", n_sites},
                      {"frequencies_rad_per_fs", to_json(m.frequencies)},
                      {"periods_fs", periods},
                      {"hessian_asymmetry", m.asymmetry}};
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_spectrum(int n_sites) {
    const SshParams p = chain_params(n_sites);
    const OptimizedGeometry g = optimize_geometry(p, n_sites / 2);
    const oracle::FockBasis basis(n_sites, n_sites / 2, n_sites / 2);
    std::vector<std::pair<double, std::string>> rows;
    for (const auto& [occ, count] : oracle::occupation_classes(basis)) {
        double e = 0.0;
        std::string label = "(";
        for (int k = 0; k < n_sites; ++k) {
            e += occ[k] * g.orbital_energies[k];
            label += std::to_string(occ[k]);
        }
        label += ")";
        rows.emplace_back(e, label + " x" + std::to_string(count));
    }
    std::sort(rows.begin(), rows.end());
    std::printf("# %zu occupation classes, orbital energies at the optimized geometry\n", rows.size());
    for (const auto& [e, label] : rows) std::printf("%-16s %10.4f eV\n", label.c_str(), e);
    return kExitOk;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides, int workers, bool resume,
            const std::string& output, bool quiet) {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (workers > 0) cfg.workers = workers;
    if (resume) cfg.resume = true;
    if (!output.empty()) cfg.output_dir = output;
    RunControl control;
    control.quiet = quiet;
    const EnsembleResult r = run_ensemble(cfg, control);
    if (!quiet) {
        std::cerr << r.accumulator.count() << " trajectories merged, " << r.accumulator.failed().size()
                  << " failed; outputs in " << cfg.output_dir << "\n";
    }
    return r.exit_code;
}

int cmd_analyze(const std::string& dir, const std::string& triad) {
    const std::filesystem::path d(dir);
    RunConfig cfg = load_config((d / "run.cfg").string());
    if (!triad.empty()) cfg.set("triad", triad);
    cfg.validate();
    const EnsembleAccumulator acc = read_ensemble(d / "ensemble.bin");
    std::optional<Triad> t;
    if (cfg.triad) t = Triad::from_labels(*cfg.triad, cfg.params.n_sites);
    write_outputs(cfg, acc, ensemble_reduce(acc, cfg.params, t), d);
    return kExitOk;
}

int cmd_verify(int n_sites, int n_states, std::uint64_t seed) {
    const SshParams p = chain_params(n_sites);
    const oracle::FockBasis basis(n_sites, n_sites / 2, n_sites / 2);
    std::mt19937_64 rng(seed);
    double rdm_err = 0.0;
    for (int i = 0; i < n_states; ++i) {
        const SuperpositionState s = oracle::random_superposition(n_sites, rng, 1 + i % 4);
        const oracle::BruteForceRdms ref = oracle::brute_force_rdms(basis, oracle::to_ci_vector(basis, s));
        rdm_err = std::max(rdm_err, (ref.rdm1.matrix - one_body_rdm(s).matrix).cwiseAbs().maxCoeff());
        const Rdm2 g = two_body_rdm(s);
        for (std::size_t k = 0; k < g.data().size(); ++k) rdm_err = std::max(rdm_err, std::abs(g.data()[k] - ref.rdm2.data()[k]));
    }
    const OptimizedGeometry g = optimize_geometry(p, n_sites / 2);
    const NormalModes m = hessian_and_modes(p, g, n_sites / 2);
    const WignerSampler sampler(m, p, seed);
    const NuclearPhase phase = sampler.sample(0);
    const AdiabaticBasis ab = adiabatic_basis(build_h_e(p, phase.u));
    const RunConfig defaults;
    const SuperpositionState state =
        build_initial_state(parse_initial_state(defaults.initial_state, n_sites), OrbitalSet{ab.orbitals.cast<cplx>()});
    const oracle::EngineComparison c = oracle::compare_engines(p, phase, state, 0.05, 2000, 100);

    const bool rdm_ok = rdm_err <= 1e-10;
    const bool overlap_ok = c.min_overlap >= 1.0 - 1e-8;
    std::printf("%s  RDM1/RDM2 vs brute force on %d random states: max error %.3e\n", rdm_ok ? "PASS" : "FAIL", n_states,
                rdm_err);
    std::printf("%s  CI overlap over 100 fs: min %.12f\n", overlap_ok ? "PASS" : "FAIL", c.min_overlap);
    std::printf("      self-consistent Fock-space Ehrenfest: max |du| %.3e A, RDM1 error %.3e\n", c.max_position_error,
                c.max_rdm1_error);
    return rdm_ok && overlap_ok ? kExitOk : kExitMonitor;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ehrenfest dynamics of SSH polyacetylene chains"};
    app.require_subcommand(1);

    int n_sites = 4;
    auto* optimize = app.add_subcommand("optimize", "Optimized ground-state geometry and orbital energies (JSON)");
    optimize->add_option("-n,--sites", n_sites, "Chain length")->capture_default_str();
    auto* modes = app.add_subcommand("modes", "Harmonic normal modes at the optimized geometry (JSON)");
    modes->add_option("-n,--sites", n_sites, "Chain length")->capture_default_str();
    auto* spectrum = app.add_subcommand("spectrum", "Occupation classes and their electronic energies");
    spectrum->add_option("-n,--sites", n_sites, "Chain length")->capture_default_str();

    std::string config_path;
    std::vector<std::string> overrides;
    int workers = 0;
    bool resume = false;
    bool quiet = false;
    std::string output;
    auto* run = app.add_subcommand("run", "Run or resume a trajectory ensemble");
    run->add_option("config", config_path, "key = value configuration file");
    run->add_option("-s,--set", overrides, "Override a configuration key (key=value)");
    run->add_option("-j,--workers", workers, "Worker threads");
    run->add_option("-o,--output", output, "Output directory");
    run->add_flag("--resume", resume, "Continue from the checkpoint in the output directory");
    run->add_flag("-q,--quiet", quiet, "No progress messages");

    std::string analyze_dir;
    std::string triad;
    auto* analyze = app.add_subcommand("analyze", "Recompute the CSV outputs from ensemble.bin");
    analyze->add_option("dir", analyze_dir, "Run output directory")->required();
    analyze->add_option("--triad", triad, "Three occupation labels, e.g. \"(2110) (2101) (1210)\"");

    int n_states = 100;
    std::uint64_t seed = 7;
    auto* verify = app.add_subcommand("verify", "Compare the determinant engine with the Fock-space oracle");
    verify->add_option("-n,--sites", n_sites, "Chain length")->capture_default_str();
    verify->add_option("--states", n_states, "Random states for the RDM check")->capture_default_str();
    verify->add_option("--seed", seed, "Random seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*optimize) return cmd_optimize(n_sites);
        if (*modes) return cmd_modes(n_sites);
        if (*spectrum) return cmd_spectrum(n_sites);
        if (*run) return cmd_run(config_path, overrides, workers, resume, output, quiet);
        if (*analyze) return cmd_analyze(analyze_dir, triad);
        if (*verify) return cmd_verify(n_sites, n_states, seed);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const MonitorFailure& e) {
        std::cerr << "monitor failure: " << e.what() << "\n";
        return kExitMonitor;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
