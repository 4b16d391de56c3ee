// Command-line front end: scenario generation, training, the experiment
// sweeps and metric emission. All outputs are deterministic for a fixed
// config file and seed.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "offsim/config.hpp"
#include "offsim/csv.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string algo = "otrl";
    std::string out_path;
    std::string format = "csv";
};

offsim::HarnessConfig load(const CommonOpts& opts) {
    offsim::HarnessConfig cfg =
        opts.config_path.empty() ? offsim::HarnessConfig{} : offsim::load_config(opts.config_path);
    if (opts.seed) {
        cfg.experiment.scenario.seed = *opts.seed;
        cfg.experiment.train.seed = *opts.seed;
    }
    return cfg;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    out << text;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_algo, bool with_format) {
    cmd->add_option("--config", opts.config_path, "JSON config file (defaults used if omitted)");
    cmd->add_option("--seed", opts.seed, "override scenario and training seeds");
    if (with_algo)
        cmd->add_option("--algo", opts.algo, "algorithm: otrl, plainrl, greedy or random");
    cmd->add_option("--out", opts.out_path, "output file (stdout if omitted)");
    if (with_format)
        cmd->add_option("--format", opts.format, "output format: csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
}

int run_train(const CommonOpts& opts) {
    const auto cfg = load(opts);
    const auto algo = offsim::parse_algorithm(opts.algo);
    if (algo != offsim::Algorithm::Otrl && algo != offsim::Algorithm::PlainRl)
        throw std::runtime_error("train: only otrl and plainrl produce a policy");
    const auto sc = offsim::generate_scenario(cfg.experiment.scenario);
    const auto result = (algo == offsim::Algorithm::Otrl)
                            ? offsim::train(sc, cfg.experiment.train, cfg.experiment.anneal,
                                            cfg.experiment.features)
                            : offsim::plain_rl_train(sc, cfg.experiment.train,
                                                     cfg.experiment.anneal, cfg.experiment.features);
    emit(offsim::checkpoint_to_json(result.theta).dump(2) + "\n", opts.out_path);
    if (!opts.out_path.empty())
        std::cerr << "wrote checkpoint to " << opts.out_path << " (final avg reward "
                  << offsim::format_double(result.trace.back().avg_reward) << ")\n";
    return 0;
}

int run_sweep(const CommonOpts& opts, bool algo_given) {
    auto cfg = load(opts);
    if (algo_given) cfg.sweep.algorithms = {offsim::parse_algorithm(opts.algo)};
    const auto rows = offsim::run_sweep(cfg.sweep, cfg.experiment);
    if (opts.format == "json")
        emit(offsim::sweep_to_json(rows).dump(2) + "\n", opts.out_path);
    else
        emit(offsim::sweep_to_csv(rows), opts.out_path);
    return 0;
}

int run_converge(const CommonOpts& opts) {
    const auto cfg = load(opts);
    const auto rows = offsim::convergence_traces(cfg.experiment);
    if (opts.format == "json")
        emit(offsim::converge_to_json(rows).dump(2) + "\n", opts.out_path);
    else
        emit(offsim::converge_to_csv(rows), opts.out_path);
    return 0;
}

int run_eval(const CommonOpts& opts) {
    const auto cfg = load(opts);
    const auto algo = offsim::parse_algorithm(opts.algo);
    const auto sc = offsim::generate_scenario(cfg.experiment.scenario);
    const auto r = offsim::run_algorithm(algo, sc, cfg.experiment);
    offsim::ResultRow row;
    row.algorithm = offsim::to_string(algo);
    row.axis = "none";
    row.axis_value = 0;
    row.seed = sc.seed;
    row.avg_cost = r.avg_cost;
    row.avg_delay_s = r.avg_delay_s;
    row.avg_energy_j = r.avg_energy_j;
    row.offload_ratio = r.offload_ratio;
    if (!r.stable) row.flag = "unstable";
    const std::vector<offsim::ResultRow> rows = {row};
    if (opts.format == "json")
        emit(offsim::sweep_to_json(rows).dump(2) + "\n", opts.out_path);
    else
        emit(offsim::sweep_to_csv(rows), opts.out_path);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"offsim: cloud-edge-end computation offloading simulator and optimizer"};
    app.require_subcommand(1);

    CommonOpts train_opts, sweep_opts, converge_opts, eval_opts;
    auto* train_cmd = app.add_subcommand("train", "train a policy and write its checkpoint");
    add_common(train_cmd, train_opts, true, false);
    auto* sweep_cmd = app.add_subcommand("sweep", "run the configured experiment sweep");
    add_common(sweep_cmd, sweep_opts, true, true);
    auto* converge_cmd =
        app.add_subcommand("converge", "emit training traces of otrl and plainrl on one scenario");
    add_common(converge_cmd, converge_opts, false, true);
    auto* eval_cmd = app.add_subcommand("eval", "evaluate one algorithm on the configured scenario");
    add_common(eval_cmd, eval_opts, true, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return run_train(train_opts);
        if (sweep_cmd->parsed()) return run_sweep(sweep_opts, sweep_cmd->count("--algo") > 0);
        if (converge_cmd->parsed()) return run_converge(converge_opts);
        if (eval_cmd->parsed()) return run_eval(eval_opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
