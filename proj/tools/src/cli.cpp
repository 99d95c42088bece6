#include "subot_cli/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <ostream>
#include <thread>

#include <CLI11.hpp>

#include "commands.hpp"
#include "subot/error.hpp"

namespace subot::cli {

std::size_t worker_limit() {
    if (const char* env = std::getenv("SUBOT_THREADS")) {
        std::size_t value = 0;
        const char* end = env + std::char_traits<char>::length(env);
        const auto [ptr, ec] = std::from_chars(env, end, value);
        if (ec == std::errc() && ptr == end && value > 0) return value;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& task) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) task(i);
        });
    }
}

namespace {

void add_config_options(CLI::App& cmd, ConfigOverrides& o) {
    cmd.add_option("--config", o.config_file, "JSON file with adaptation settings")->check(CLI::ExistingFile);
    cmd.add_option("--variant", o.variant, "sot_c | sot_g | otda | nn")
        ->check(CLI::IsMember({"sot_c", "sot_g", "otda", "nn"}));
    cmd.add_option("--kt", o.k_t, "target substructure count (default 4 x classes)");
    cmd.add_option("--k-min", o.k_min, "smallest per-class component count tried");
    cmd.add_option("--k-max", o.k_max, "largest per-class component count tried");
    cmd.add_option("--restarts", o.restarts, "EM restarts per component count");
    cmd.add_option("--lambda1", o.lambda1, "entropic weight of the source weighting step");
    cmd.add_option("--lambda", o.lambda, "entropic weight of the coupling step");
    cmd.add_option("--eta", o.eta, "group-lasso weight");
    cmd.add_option("--seed", o.seed, "random seed");
    cmd.add_flag("--no-normalize", o.no_normalize, "skip z-scoring with source statistics");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Substructural optimal transport for domain adaptation", "subot"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic source/target pair");
    synth_cmd->add_option("--out", synth.out, "output directory")->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed, "random seed (overrides the config file)");
    synth_cmd->add_option("--config", synth.config_file, "toy configuration JSON")->check(CLI::ExistingFile);

    FeaturesArgs features;
    auto* features_cmd = app.add_subcommand("features", "sliding-window features from raw 3-axis recordings");
    features_cmd->add_option("--input", features.input, "raw recording CSV, 3 columns per sensor")->required();
    features_cmd->add_option("--out", features.output, "feature CSV to write")->required();
    features_cmd->add_option("--window", features.windowing.window_length, "window length in samples")
        ->capture_default_str();
    features_cmd->add_option("--overlap", features.windowing.overlap, "window overlap fraction")
        ->capture_default_str();
    features_cmd->add_option("--rate", features.windowing.sampling_rate, "sampling rate in Hz")->capture_default_str();
    features_cmd->add_flag("--labeled", features.labeled, "last input column is an activity label");

    AdaptArgs adapt;
    auto* adapt_cmd = app.add_subcommand("adapt", "adapt one source/target pair");
    adapt_cmd->add_option("--source", adapt.source, "labeled source CSV")->required();
    adapt_cmd->add_option("--target", adapt.target, "target CSV")->required();
    adapt_cmd->add_option("--out", adapt.out, "output directory")->capture_default_str();
    adapt_cmd->add_flag("--unlabeled-target", adapt.unlabeled_target, "target CSV has no label column");
    adapt_cmd->add_option("--substructures", adapt.substructures, "reuse a substructures.json from an earlier run")
        ->check(CLI::ExistingFile);
    add_config_options(*adapt_cmd, adapt.overrides);

    BenchmarkArgs bench;
    auto* bench_cmd = app.add_subcommand("benchmark", "all ordered dataset pairs x methods");
    bench_cmd->add_option("--data", bench.data, "labeled dataset CSV (two or more)")->required()->expected(2, -1);
    bench_cmd->add_option("--name", bench.names, "dataset names, in --data order");
    bench_cmd->add_option("--methods", bench.methods, "methods to run")
        ->delimiter(',')
        ->check(CLI::IsMember({"sot_c", "sot_g", "otda", "nn"}));
    bench_cmd->add_option("--out", bench.out, "output directory")->capture_default_str();
    bench_cmd->add_flag("--tune", bench.tune, "pick hyper-parameters on a validation split of each target");
    bench_cmd->add_option("--split", bench.split, "validation fraction used with --tune")->capture_default_str();
    add_config_options(*bench_cmd, bench.overrides);

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "vary one hyper-parameter, fix the rest");
    sweep_cmd->add_option("--source", sweep.source, "labeled source CSV")->required();
    sweep_cmd->add_option("--target", sweep.target, "labeled target CSV")->required();
    sweep_cmd->add_option("--axis", sweep.axis, "lambda1 | lambda | eta | kt")
        ->required()
        ->check(CLI::IsMember({"lambda1", "lambda", "eta", "kt", "k_t"}));
    sweep_cmd->add_option("--values", sweep.values, "comma-separated values")->required()->delimiter(',');
    sweep_cmd->add_option("--out", sweep.out, "output directory")->capture_default_str();
    add_config_options(*sweep_cmd, sweep.overrides);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (synth_cmd->parsed()) return cmd_synth(synth, out);
        if (features_cmd->parsed()) return cmd_features(features, out);
        if (adapt_cmd->parsed()) return cmd_adapt(adapt, out);
        if (bench_cmd->parsed()) return cmd_benchmark(bench, out);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace subot::cli
