// Batch front-end for the hexamer toolkit: each subcommand maps one
// experiment pipeline onto CSV/JSON data products.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hexamer/cli.hpp"

using namespace hexamer;

int main(int argc, char** argv) {
    CLI::App app{"hexamer: circuit-optomechanics simulation and estimation"};
    app.require_subcommand(1);
    app.fallthrough();  // accept global flags after the subcommand name

    std::string config_path, out_dir = ".", grid_spec;
    std::uint64_t seed = 0;
    int workers = 0;
    bool seed_set = false, workers_set = false;
    app.add_option("--config", config_path, "device config JSON")->required();
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "RNG seed (overrides config)")
        ->each([&](const std::string&) { seed_set = true; });
    app.add_option("--workers", workers, "worker threads (overrides config)")
        ->each([&](const std::string&) { workers_set = true; });
    app.add_option("--grid", grid_spec, "sweep grid start:stop:n[:log]");

    auto* c_circuit = app.add_subcommand("circuit", "microwave mode report");
    auto* c_omit = app.add_subcommand("omit", "reflection traces and eigen sweep");
    auto* c_cool = app.add_subcommand("cool", "collective occupations sweep");
    auto* c_modeshape = app.add_subcommand("modeshape", "excite-and-release protocol");
    auto* c_disorder = app.add_subcommand("disorder", "Monte Carlo disorder sweeps");
    auto* c_fit = app.add_subcommand("fit", "fit an emitted trace");
    auto* c_asym = app.add_subcommand("asym", "sideband-asymmetry thermometry");

    int mode_index = 0;
    double snr_db = 40.0;
    c_modeshape->add_option("--mode", mode_index, "collective-mode index");
    c_modeshape->add_option("--snr", snr_db, "record SNR in dB");

    std::string coop_spec = "50:5000:8:log";
    c_disorder->add_option("--coop", coop_spec, "cooperativity grid for the "
                                                "mechanical sweep");

    std::string trace_path, model = "omit";
    double photons_guess = 0.0;
    c_fit->add_option("--trace", trace_path, "trace CSV")->required();
    c_fit->add_option("--model", model, "fit model (omit)");
    c_fit->add_option("--photons", photons_guess, "pump photon-number guess")
        ->required();

    double occupation = 0.0, n_aux = 0.0;
    std::vector<std::string> asym_files;
    c_asym->add_option("--occupation", occupation, "embedded occupation for the "
                                                   "synthetic pair");
    c_asym->add_option("--n-aux", n_aux, "auxiliary-cavity occupation");
    c_asym->add_option("--files", asym_files, "anti-Stokes and Stokes PSD CSVs")
        ->expected(2);

    try {
        app.parse(argc, argv);

        DeviceConfig cfg = load_config(config_path);
        if (seed_set) cfg.run.seed = seed;
        if (workers_set) cfg.run.workers = workers;
        cfg.validate();

        if (c_circuit->parsed()) {
            cmd_circuit(cfg, out_dir);
        } else if (c_omit->parsed()) {
            const auto grid =
                grid_spec.empty() ? std::vector<double>{1e4, 1e5, 1e6, 1e7}
                                  : parse_grid(grid_spec);
            cmd_omit(cfg, grid, out_dir);
        } else if (c_cool->parsed()) {
            const auto grid = grid_spec.empty()
                                  ? std::vector<double>{1e2, 1e3, 1e4, 1e5}
                                  : parse_grid(grid_spec);
            cmd_cool(cfg, grid, out_dir);
        } else if (c_modeshape->parsed()) {
            cmd_modeshape(cfg, mode_index, snr_db, out_dir, cfg.run.seed);
        } else if (c_disorder->parsed()) {
            const auto sigmas =
                grid_spec.empty() ? std::vector<double>{cfg.run.disorder_sigma}
                                  : parse_grid(grid_spec);
            cmd_disorder(cfg, sigmas, parse_grid(coop_spec), out_dir);
        } else if (c_fit->parsed()) {
            if (model != "omit")
                throw config_error("fit: unknown model '" + model + "'");
            cmd_fit_omit(cfg, trace_path, photons_guess, out_dir);
        } else if (c_asym->parsed()) {
            if (asym_files.size() == 2)
                cmd_asym(cfg, 0.0, n_aux, out_dir, asym_files[0], asym_files[1]);
            else
                cmd_asym(cfg, occupation, n_aux, out_dir);
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_code_for_config_error();
    } catch (const numerical_error& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return exit_code_for_numerical_error();
    } catch (const fit_error& e) {
        std::fprintf(stderr, "fit error: %s\n", e.what());
        return exit_code_for_fit_error();
    }
}
