#include "commands.hpp"

#include <chrono>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "subot/error.hpp"
#include "subot/serialization.hpp"
#include "subot_cli/cli.hpp"

namespace subot::cli {

namespace {

// Shortest text that reads back to the same double.
std::string num(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    return quoted + '"';
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error(ErrorKind::MissingFile, "cannot write '" + path.string() + "'");
    file << text;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::MissingFile, "cannot create directory '" + dir.string() + "'");
}

template <typename F>
decltype(auto) in_stage(const std::string& stage, F&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(stage, e);
    }
}

LabeledDataset load(const fs::path& path, bool labeled) {
    return in_stage("load", [&] { return load_dataset_csv(path, CsvOptions{labeled, HeaderMode::Auto}); });
}

bool is_sot(Method m) { return m == Method::SotCenter || m == Method::SotGaussian; }

void print_summary(std::ostream& out, const AdaptationResult& r) {
    out << "method    " << to_string(r.method) << '\n';
    if (r.evaluation) {
        out << "accuracy  " << std::fixed << std::setprecision(4) << r.evaluation->accuracy << '\n';
    } else {
        out << "accuracy  n/a (target unlabeled)\n";
    }
    out << "stage timings (s)\n";
    for (const auto& t : r.timings) {
        out << "  " << std::left << std::setw(12) << t.stage << std::right << std::fixed << std::setprecision(6)
            << t.seconds << '\n';
    }
    out << "  " << std::left << std::setw(12) << "total" << std::right << r.total_seconds() << '\n';
    out.unsetf(std::ios::floatfield);
    out << std::setprecision(6);
}

// Substructure caches shared by the runs of one tuning search.
struct FitCache {
    std::optional<SourceSubstructures> source;
    std::map<int, TargetSubstructures> target;
};

AdaptationResult run_cached(const LabeledDataset& source, const LabeledDataset& target, const AdaptationConfig& cfg,
                            FitCache& cache) {
    if (!is_sot(cfg.variant)) return run_adaptation(source, target, cfg);
    const int k_t = cfg.resolved_k_t(source.class_count());
    PrecomputedSubstructures pre;
    pre.source = cache.source;
    if (auto it = cache.target.find(k_t); it != cache.target.end()) pre.target = it->second;
    AdaptationResult r = sot_adapt(source, target, cfg, &pre);
    if (!cache.source) {
        cache.source = SourceSubstructures{
            SubstructureSet::uniform(r.source_substructures->components(), DomainTag::Source), r.source_selections};
    }
    if (!pre.target) cache.target.emplace(k_t, TargetSubstructures{*r.target_substructures, r.target_assignment, {}});
    return r;
}

struct GridPoint {
    double lambda1;
    double lambda;
    double eta;
    int k_t;
};

// Artifact choice: small grids that keep a benchmark run at desk scale.
std::vector<GridPoint> tuning_grid(Method m, const AdaptationConfig& base, int classes) {
    std::vector<GridPoint> grid;
    if (is_sot(m)) {
        for (int kt : {2 * classes, 4 * classes}) {
            for (double l1 : {0.1, 1.0, 10.0}) {
                for (double l : {0.1, 1.0}) {
                    for (double eta : {0.1, 0.5, 1.0}) grid.push_back({l1, l, eta, kt});
                }
            }
        }
    } else if (m == Method::Otda) {
        for (double l : {0.1, 1.0, 10.0}) {
            for (double eta : {0.0, 0.5, 1.0}) grid.push_back({base.ot.lambda1, l, eta, base.k_t});
        }
    } else {
        grid.push_back({base.ot.lambda1, base.ot.lambda, base.ot.eta, base.k_t});
    }
    return grid;
}

AdaptationConfig with_point(AdaptationConfig cfg, const GridPoint& p) {
    cfg.ot.lambda1 = p.lambda1;
    cfg.ot.lambda = p.lambda;
    cfg.ot.eta = p.eta;
    cfg.k_t = p.k_t;
    return cfg;
}

struct TaskOutcome {
    std::optional<double> accuracy;
    std::string error;
    double seconds = 0.0;
    std::vector<StageTiming> stages;
    std::optional<GridPoint> chosen;
    double validation_accuracy = 0.0;
};

TaskOutcome run_task(const LabeledDataset& source, const LabeledDataset& target, const AdaptationConfig& cfg,
                     bool tune, double split) {
    TaskOutcome outcome;
    const auto start = std::chrono::steady_clock::now();
    try {
        AdaptationResult result;
        if (tune) {
            const LabeledDataset aligned = target.has_labels() ? align_labels(target, source.label_values()) : target;
            const TargetSplit parts =
                in_stage("split", [&] { return split_target(aligned, split, derive_seed(cfg.rng_seed, 7)); });
            FitCache validation_cache;
            double best = -1.0;
            for (const auto& point : tuning_grid(cfg.variant, cfg, source.class_count())) {
                const auto r = run_cached(source, parts.validation, with_point(cfg, point), validation_cache);
                if (r.evaluation && r.evaluation->accuracy > best) {
                    best = r.evaluation->accuracy;
                    outcome.chosen = point;
                }
            }
            outcome.validation_accuracy = best;
            FitCache test_cache;
            test_cache.source = validation_cache.source;
            result = run_cached(source, parts.test, with_point(cfg, *outcome.chosen), test_cache);
        } else {
            result = run_adaptation(source, target, cfg);
        }
        if (result.evaluation) outcome.accuracy = result.evaluation->accuracy;
        outcome.stages = result.timings;
    } catch (const std::exception& e) {
        outcome.error = e.what();
    }
    outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return outcome;
}

std::vector<std::string> dataset_names(const BenchmarkArgs& args) {
    if (!args.names.empty() && args.names.size() != args.data.size()) {
        throw Error(ErrorKind::InvalidArgument, "--name must be given once per --data file");
    }
    std::vector<std::string> names = args.names;
    if (names.empty()) {
        std::map<std::string, int> seen;
        for (const auto& p : args.data) {
            std::string stem = p.stem().string();
            if (const int n = seen[stem]++; n > 0) stem += "_" + std::to_string(n + 1);
            names.push_back(stem);
        }
    }
    if (std::set<std::string>(names.begin(), names.end()).size() != names.size()) {
        throw Error(ErrorKind::InvalidArgument, "dataset names must be unique");
    }
    return names;
}

}  // namespace

AdaptationConfig ConfigOverrides::resolve() const {
    return in_stage("config", [&] {
        AdaptationConfig c;
        if (config_file) apply_config_json(c, read_json(*config_file));
        if (variant) c.variant = parse_method(*variant);
        if (k_t) c.k_t = *k_t;
        if (k_min) c.k_range.lo = *k_min;
        if (k_max) c.k_range.hi = *k_max;
        if (restarts) c.restarts = *restarts;
        if (lambda1) c.ot.lambda1 = *lambda1;
        if (lambda) c.ot.lambda = *lambda;
        if (eta) c.ot.eta = *eta;
        if (seed) c.rng_seed = *seed;
        if (no_normalize) c.normalize = false;
        return c;
    });
}

// synth ---------------------------------------------------------------------

int cmd_synth(const SynthArgs& args, std::ostream& out) {
    ToyConfig config = in_stage("config", [&] {
        ToyConfig c = args.config_file ? toy_config_from_json(read_json(*args.config_file))
                                       : ToyConfig::default_config(args.seed.value_or(0));
        if (args.seed) c.rng_seed = *args.seed;
        c.validate();
        return c;
    });
    const DomainPair pair = generate_toy(config);
    ensure_dir(args.out);
    write_dataset_csv(args.out / "source.csv", pair.source);
    write_dataset_csv(args.out / "target.csv", pair.target);
    write_json(args.out / "toy_config.json", to_json(config));
    out << "source: " << pair.source.rows() << " rows, target: " << pair.target.rows() << " rows, "
        << pair.source.dims() << " features\n"
        << "wrote " << args.out.string() << '\n';
    return 0;
}

// features --------------------------------------------------------------------

int cmd_features(const FeaturesArgs& args, std::ostream& out) {
    const LabeledDataset raw = load(args.input, args.labeled);
    const Matrix feats = in_stage("features", [&] { return extract_recording_features(raw.features(), args.windowing); });
    const auto starts = sliding_window_starts(raw.rows(), args.windowing.window_length, args.windowing.overlap);

    std::ostringstream csv;
    csv << std::setprecision(17);
    const auto sensors = raw.dims() / 3;
    for (std::size_t s = 0; s < sensors; ++s) {
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            csv << (s + f == 0 ? "" : ",") << 's' << s << '_' << feature_names()[f];
        }
    }
    if (args.labeled) csv << ",label";
    csv << '\n';
    for (Eigen::Index w = 0; w < feats.rows(); ++w) {
        for (Eigen::Index c = 0; c < feats.cols(); ++c) csv << (c == 0 ? "" : ",") << num(feats(w, c));
        if (args.labeled) {
            // Majority label of the window's rows; ties go to the smaller label.
            std::vector<std::size_t> votes(static_cast<std::size_t>(raw.class_count()), 0);
            const std::size_t s0 = starts[static_cast<std::size_t>(w)];
            for (std::size_t i = s0; i < s0 + args.windowing.window_length; ++i) ++votes[static_cast<std::size_t>(raw.labels()[i])];
            const auto winner = std::max_element(votes.begin(), votes.end()) - votes.begin();
            csv << ',' << raw.label_values()[static_cast<std::size_t>(winner)];
        }
        csv << '\n';
    }
    if (args.output.has_parent_path()) ensure_dir(args.output.parent_path());
    write_text(args.output, csv.str());
    out << feats.rows() << " windows x " << feats.cols() << " features -> " << args.output.string() << '\n';
    return 0;
}

// adapt -----------------------------------------------------------------------

int cmd_adapt(const AdaptArgs& args, std::ostream& out) {
    const AdaptationConfig cfg = args.overrides.resolve();
    const LabeledDataset source = load(args.source, true);
    const LabeledDataset target = load(args.target, !args.unlabeled_target);

    AdaptationResult result;
    if (args.substructures && is_sot(cfg.variant)) {
        const PrecomputedSubstructures pre =
            in_stage("load", [&] { return substructure_cache_from_json(read_json(*args.substructures)); });
        result = sot_adapt(source, target, cfg, &pre);
    } else {
        result = run_adaptation(source, target, cfg);
    }

    ensure_dir(args.out);
    Json doc = to_json(result);
    doc["config"] = to_json(cfg);
    if (is_sot(cfg.variant)) doc["config"]["kt"] = cfg.resolved_k_t(source.class_count());
    write_json(args.out / "result.json", doc);
    if (result.coupling.plan.size() > 0) {
        write_coupling_csv(args.out / "coupling.csv", result.coupling);
        write_json(args.out / "coupling.json", coupling_sidecar(result.coupling));
    }
    if (result.evaluation) write_confusion_csv(args.out / "confusion.csv", *result.evaluation, result.label_values);
    if (result.source_substructures) write_json(args.out / "substructures.json", substructure_cache_to_json(result));

    print_summary(out, result);
    out << "wrote " << args.out.string() << '\n';
    return 0;
}

// benchmark ---------------------------------------------------------------------

int cmd_benchmark(const BenchmarkArgs& args, std::ostream& out) {
    if (args.data.size() < 2) throw Error(ErrorKind::InvalidArgument, "benchmark needs at least two datasets");
    if (args.tune && !(args.split > 0.0 && args.split < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "--split must lie in (0, 1)");
    }
    const AdaptationConfig base = args.overrides.resolve();
    const auto names = dataset_names(args);
    std::vector<LabeledDataset> data;
    for (const auto& p : args.data) data.push_back(load(p, true));

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < data.size(); ++a) {
        for (std::size_t b = 0; b < data.size(); ++b) {
            if (a != b) pairs.emplace_back(a, b);
        }
    }
    std::vector<Method> methods;
    for (const auto& m : args.methods) methods.push_back(parse_method(m));

    const std::size_t task_count = methods.size() * pairs.size();
    std::vector<TaskOutcome> outcomes(task_count);
    parallel_for(task_count, worker_limit(), [&](std::size_t i) {
        const auto [a, b] = pairs[i % pairs.size()];
        AdaptationConfig cfg = base;
        cfg.variant = methods[i / pairs.size()];
        outcomes[i] = run_task(data[a], data[b], cfg, args.tune, args.split);
    });

    ensure_dir(args.out);
    std::ostringstream acc, timing, stages, errors, tuning;
    acc << "method";
    timing << "method";
    for (const auto& [a, b] : pairs) {
        const std::string task = names[a] + "->" + names[b];
        acc << ',' << csv_cell(task);
        timing << ',' << csv_cell(task);
    }
    acc << ",AVG\n";
    timing << ",AVG\n";
    stages << "method,task,stage,seconds\n";
    errors << "method,task,message\n";
    tuning << "method,task,lambda1,lambda,eta,kt,validation_accuracy\n";

    for (std::size_t m = 0; m < methods.size(); ++m) {
        const std::string method(to_string(methods[m]));
        acc << method;
        timing << method;
        double acc_sum = 0.0, time_sum = 0.0;
        std::size_t acc_n = 0;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const auto& o = outcomes[m * pairs.size() + p];
            const std::string task = names[pairs[p].first] + "->" + names[pairs[p].second];
            if (o.accuracy) {
                acc << ',' << num(*o.accuracy);
                acc_sum += *o.accuracy;
                ++acc_n;
            } else {
                acc << ",ERR";
                errors << method << ',' << csv_cell(task) << ',' << csv_cell(o.error.empty() ? "no accuracy" : o.error)
                       << '\n';
            }
            timing << ',' << num(o.seconds);
            time_sum += o.seconds;
            for (const auto& s : o.stages) stages << method << ',' << csv_cell(task) << ',' << s.stage << ',' << num(s.seconds) << '\n';
            // Only the substructure methods use lambda1 and kt; nn has nothing to tune.
            if (o.chosen && methods[m] != Method::NearestNeighbor) {
                const bool sot = is_sot(methods[m]);
                tuning << method << ',' << csv_cell(task) << ',' << (sot ? num(o.chosen->lambda1) : "") << ','
                       << num(o.chosen->lambda) << ',' << num(o.chosen->eta) << ','
                       << (sot ? std::to_string(o.chosen->k_t) : "") << ',' << num(o.validation_accuracy) << '\n';
            }
        }
        acc << ',' << (acc_n > 0 ? num(acc_sum / static_cast<double>(acc_n)) : std::string("ERR")) << '\n';
        timing << ',' << num(time_sum / static_cast<double>(pairs.size())) << '\n';
    }
    write_text(args.out / "accuracy.csv", acc.str());
    write_text(args.out / "timing.csv", timing.str());
    write_text(args.out / "stages.csv", stages.str());
    write_text(args.out / "errors.csv", errors.str());
    if (args.tune) write_text(args.out / "tuning.csv", tuning.str());

    out << acc.str() << "wrote " << args.out.string() << '\n';
    return 0;
}

// sweep -------------------------------------------------------------------------

int cmd_sweep(const SweepArgs& args, std::ostream& out) {
    if (args.values.empty()) throw Error(ErrorKind::InvalidArgument, "--values must not be empty");
    const AdaptationConfig base = args.overrides.resolve();
    const LabeledDataset source = load(args.source, true);
    const LabeledDataset target = load(args.target, true);
    const bool integer_axis = args.axis == "kt" || args.axis == "k_t";

    struct Point {
        std::optional<double> accuracy;
        double seconds = 0.0;
        std::string status = "ok";
    };
    std::vector<Point> points(args.values.size());
    parallel_for(points.size(), worker_limit(), [&](std::size_t i) {
        Point& pt = points[i];
        try {
            const std::string& text = args.values[i];
            AdaptationConfig cfg = base;
            if (integer_axis) {
                int v = 0;
                const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
                if (ec != std::errc() || end != text.data() + text.size()) {
                    throw Error(ErrorKind::InvalidArgument, "'" + text + "' is not an integer");
                }
                cfg.k_t = v;
            } else {
                double v = 0.0;
                const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
                if (ec != std::errc() || end != text.data() + text.size()) {
                    throw Error(ErrorKind::InvalidArgument, "'" + text + "' is not a number");
                }
                (args.axis == "lambda1" ? cfg.ot.lambda1 : args.axis == "lambda" ? cfg.ot.lambda : cfg.ot.eta) = v;
            }
            const auto r = run_adaptation(source, target, cfg);
            if (r.evaluation) pt.accuracy = r.evaluation->accuracy;
            pt.seconds = r.total_seconds();
        } catch (const std::exception& e) {
            pt.status = std::string("error: ") + e.what();
        }
    });

    std::ostringstream csv;
    csv << "value,accuracy,runtime_s,status\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        csv << csv_cell(args.values[i]) << ',' << (p.accuracy ? num(*p.accuracy) : std::string()) << ','
            << num(p.seconds) << ',' << csv_cell(p.status) << '\n';
    }
    ensure_dir(args.out);
    write_text(args.out / "sweep.csv", csv.str());
    out << "axis " << args.axis << '\n' << csv.str() << "wrote " << args.out.string() << '\n';
    return 0;
}

}  // namespace subot::cli
