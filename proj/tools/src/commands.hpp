#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "subot/features.hpp"
#include "subot/pipeline.hpp"

namespace subot::cli {

namespace fs = std::filesystem;

/// Adaptation settings as given on the command line. Unset fields fall back
/// to the config file, then to the library defaults.
struct ConfigOverrides {
    std::optional<fs::path> config_file;
    std::optional<std::string> variant;
    std::optional<int> k_t;
    std::optional<int> k_min;
    std::optional<int> k_max;
    std::optional<int> restarts;
    std::optional<double> lambda1;
    std::optional<double> lambda;
    std::optional<double> eta;
    std::optional<std::uint64_t> seed;
    bool no_normalize = false;

    AdaptationConfig resolve() const;
};

struct SynthArgs {
    fs::path out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> config_file;
};

struct FeaturesArgs {
    fs::path input;
    fs::path output;
    WindowingOptions windowing;
    bool labeled = false;
};

struct AdaptArgs {
    fs::path source;
    fs::path target;
    fs::path out = ".";
    bool unlabeled_target = false;
    std::optional<fs::path> substructures;
    ConfigOverrides overrides;
};

struct BenchmarkArgs {
    std::vector<fs::path> data;
    std::vector<std::string> names;
    std::vector<std::string> methods{"sot_c", "sot_g", "otda", "nn"};
    fs::path out = ".";
    bool tune = false;
    double split = 0.5;
    ConfigOverrides overrides;
};

struct SweepArgs {
    fs::path source;
    fs::path target;
    fs::path out = ".";
    std::string axis;
    std::vector<std::string> values;
    ConfigOverrides overrides;
};

int cmd_synth(const SynthArgs& args, std::ostream& out);
int cmd_features(const FeaturesArgs& args, std::ostream& out);
int cmd_adapt(const AdaptArgs& args, std::ostream& out);
int cmd_benchmark(const BenchmarkArgs& args, std::ostream& out);
int cmd_sweep(const SweepArgs& args, std::ostream& out);

}  // namespace subot::cli
