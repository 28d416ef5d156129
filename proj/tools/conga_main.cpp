// conga: simulation and verification laboratory for the Brownian conga line.
//
//   conga list                                   print the experiment registry
//   conga simulate --alpha A --n N --seed S ...  dump a chain frame as CSV
//   conga <experiment> [--config cfg.json] ...   run a registered experiment
//
// Exit code 0 iff every executed experiment's pass flag is true.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "conga/chain.hpp"
#include "conga/experiments.hpp"
#include "conga/random.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::string out_dir;
    std::vector<double> t_grid;
    double alpha = -1.0, delta = -1.0;
    long long seed = -1;
    int replicas = -1, workers = -1, quadrature_points = -1;
};

conga::ExperimentConfig resolve(const std::string& name, const Overrides& ov) {
    conga::ExperimentConfig cfg;
    if (!ov.config_path.empty()) cfg = conga::load_config(ov.config_path);
    cfg.experiment = name;
    if (!ov.t_grid.empty()) cfg.t_grid = ov.t_grid;
    if (ov.alpha >= 0.0) cfg.alpha = ov.alpha;
    if (ov.delta >= 0.0) cfg.delta = ov.delta;
    if (ov.seed >= 0) cfg.seed = static_cast<std::uint64_t>(ov.seed);
    if (ov.replicas >= 0) cfg.replicas = ov.replicas;
    if (ov.workers >= 0) cfg.workers = ov.workers;
    if (ov.quadrature_points >= 0)
        cfg.quadrature_points = static_cast<std::size_t>(ov.quadrature_points);
    if (!ov.out_dir.empty()) cfg.output_path = ov.out_dir;
    cfg.validate();
    return cfg;
}

void add_override_flags(CLI::App* sub, Overrides& ov) {
    sub->add_option("--config", ov.config_path, "JSON config file");
    sub->add_option("--t", ov.t_grid, "t grid (overrides config)");
    sub->add_option("--seed", ov.seed, "seed root");
    sub->add_option("--replicas", ov.replicas, "replica count");
    sub->add_option("--alpha", ov.alpha, "chain parameter alpha");
    sub->add_option("--delta", ov.delta, "lower end of the probed interval");
    sub->add_option("--qp", ov.quadrature_points, "quadrature points");
    sub->add_option("--out", ov.out_dir, "output directory for the report");
    sub->add_option("--workers", ov.workers, "worker threads (0 = hardware)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Brownian conga line laboratory"};
    app.require_subcommand(1);

    auto* list = app.add_subcommand("list", "print the experiment registry");

    auto* sim = app.add_subcommand("simulate", "run the chain and dump a frame as CSV");
    double sim_alpha = 0.5;
    int sim_n = 100, sim_dims = 2;
    long long sim_seed = 42;
    std::string sim_out = "frame.csv";
    sim->add_option("--alpha", sim_alpha, "follow weight in (0,1)")->required();
    sim->add_option("--n", sim_n, "number of steps")->required();
    sim->add_option("--seed", sim_seed, "seed root")->required();
    sim->add_option("--out", sim_out, "output CSV path");
    sim->add_option("--dims", sim_dims, "1 or 2 components");

    Overrides ov;
    std::vector<CLI::App*> exp_subs;
    for (const auto& entry : conga::experiment_registry()) {
        auto* sub = app.add_subcommand(entry.name, entry.claim);
        add_override_flags(sub, ov);
        exp_subs.push_back(sub);
    }

    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        for (const auto& e : conga::experiment_registry()) {
            std::printf("%-20s %s\n", e.name.c_str(), e.claim.c_str());
            std::printf("%-20s rule: %s\n", "", e.rule.c_str());
        }
        return 0;
    }

    if (sim->parsed()) {
        auto gen = conga::NormalStream(
            conga::SeedSpec{static_cast<std::uint64_t>(sim_seed), 0});
        auto path = conga::build_path_increments(gen, static_cast<double>(sim_n), 1.0,
                                                 sim_dims);
        auto frame = conga::run_conga({sim_alpha, sim_n, sim_dims}, path);
        conga::write_frame_csv(frame, sim_out);
        std::printf("wrote %s (n=%d, alpha=%g, seed=%lld)\n", sim_out.c_str(), sim_n,
                    sim_alpha, sim_seed);
        return 0;
    }

    bool all_pass = true;
    for (std::size_t i = 0; i < exp_subs.size(); ++i) {
        if (!exp_subs[i]->parsed()) continue;
        const auto& entry = conga::experiment_registry()[i];
        try {
            auto cfg = resolve(entry.name, ov);
            auto rep = conga::run_experiment(cfg);
            conga::emit_report(rep, cfg.output_path);
            std::printf("%s: %s (%.1f s)\n", entry.name.c_str(),
                        rep.pass ? "pass" : "FAIL", rep.runtime_seconds);
            conga::emit_report_json(rep, std::cout);
            all_pass = all_pass && rep.pass;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "%s: error: %s\n", entry.name.c_str(), e.what());
            return 2;
        }
    }
    return all_pass ? 0 : 1;
}
