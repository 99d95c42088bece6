#include "subot/serialization.hpp"

#include <fstream>

#include "subot/error.hpp"

namespace subot {

namespace {

Json vec_to_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vec_from_json(const Json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_to_json(m.row(r).transpose()));
    return rows;
}

template <typename F>
auto parse_guard(const char* what, F&& fn) {
    try {
        return fn();
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("malformed ") + what + ": " + e.what());
    }
}

std::vector<std::int64_t> original_labels(std::span<const int> dense, const std::vector<std::int64_t>& values) {
    std::vector<std::int64_t> out;
    out.reserve(dense.size());
    for (int d : dense) out.push_back(values.at(static_cast<std::size_t>(d)));
    return out;
}

}  // namespace

Json to_json(const ToyConfig& config) {
    auto comps = [](const std::vector<ToyComponent>& cs) {
        Json arr = Json::array();
        for (const auto& c : cs) {
            arr.push_back({{"mean", c.mean}, {"cov_diag", c.cov_diag}, {"count", c.count}, {"label", c.label}});
        }
        return arr;
    };
    return {{"source", comps(config.source)}, {"target", comps(config.target)}, {"rng_seed", config.rng_seed}};
}

ToyConfig toy_config_from_json(const Json& j) {
    return parse_guard("toy config", [&] {
        auto comps = [](const Json& arr) {
            std::vector<ToyComponent> out;
            for (const auto& c : arr) {
                out.push_back({c.at("mean").get<std::vector<double>>(), c.at("cov_diag").get<std::vector<double>>(),
                               c.at("count").get<int>(), c.at("label").get<int>()});
            }
            return out;
        };
        ToyConfig config;
        config.source = comps(j.at("source"));
        config.target = comps(j.at("target"));
        config.rng_seed = j.value("rng_seed", std::uint64_t{0});
        config.validate();
        return config;
    });
}

Json to_json(const GaussianComponent& c) {
    Json j = {{"mean", vec_to_json(c.mean)}, {"cov_diag", vec_to_json(c.cov_diag)}, {"weight", c.weight}};
    j["class_label"] = c.class_label ? Json(*c.class_label) : Json(nullptr);
    return j;
}

GaussianComponent component_from_json(const Json& j) {
    return parse_guard("component", [&] {
        GaussianComponent c;
        c.mean = vec_from_json(j.at("mean"));
        c.cov_diag = vec_from_json(j.at("cov_diag"));
        c.weight = j.at("weight").get<double>();
        if (j.contains("class_label") && !j.at("class_label").is_null()) c.class_label = j.at("class_label").get<int>();
        return c;
    });
}

Json to_json(const MixtureModel& model) {
    Json comps = Json::array();
    for (const auto& c : model.components) comps.push_back(to_json(c));
    return {{"components", comps},       {"log_likelihood", model.log_likelihood},
            {"sample_count", model.sample_count}, {"iterations", model.iterations},
            {"converged", model.converged}, {"degenerate", model.degenerate}};
}

MixtureModel mixture_from_json(const Json& j) {
    return parse_guard("mixture model", [&] {
        MixtureModel m;
        for (const auto& c : j.at("components")) m.components.push_back(component_from_json(c));
        m.log_likelihood = j.at("log_likelihood").get<double>();
        m.sample_count = j.at("sample_count").get<std::size_t>();
        m.iterations = j.value("iterations", 0);
        m.converged = j.value("converged", false);
        m.degenerate = j.value("degenerate", false);
        return m;
    });
}

Json to_json(const SubstructureSet& set) {
    Json comps = Json::array();
    for (const auto& c : set.components()) comps.push_back(to_json(c));
    return {{"domain", set.domain_tag() == DomainTag::Source ? "source" : "target"},
            {"components", comps},
            {"masses", vec_to_json(set.masses())}};
}

SubstructureSet substructure_set_from_json(const Json& j) {
    return parse_guard("substructure set", [&] {
        std::vector<GaussianComponent> comps;
        for (const auto& c : j.at("components")) comps.push_back(component_from_json(c));
        const auto tag = j.at("domain").get<std::string>() == "source" ? DomainTag::Source : DomainTag::Target;
        return SubstructureSet(std::move(comps), vec_from_json(j.at("masses")), tag);
    });
}

Json substructure_cache_to_json(const AdaptationResult& result) {
    if (!result.source_substructures || !result.target_substructures) {
        throw Error(ErrorKind::InvalidArgument, "result carries no substructures");
    }
    Json selections = Json::array();
    for (const auto& s : result.source_selections) {
        Json cands = Json::array();
        for (const auto& c : s.candidates) cands.push_back(
            {{"k", c.k}, {"bic", c.bic}, {"log_likelihood", c.log_likelihood}, {"collapsed", c.collapsed}});
        selections.push_back({{"label", s.label}, {"selected_k", s.selected_k}, {"candidates", cands}});
    }
    // Source masses are reset to uniform so the cache reflects the fitted
    // substructures, not one run's weighting.
    SubstructureSet source = *result.source_substructures;
    source.set_masses(Vector::Constant(static_cast<Eigen::Index>(source.size()), 1.0 / static_cast<double>(source.size())));
    return {{"source", to_json(source)},
            {"source_selections", selections},
            {"target", to_json(*result.target_substructures)},
            {"target_assignment", result.target_assignment}};
}

PrecomputedSubstructures substructure_cache_from_json(const Json& j) {
    return parse_guard("substructure cache", [&] {
        PrecomputedSubstructures out;
        SourceSubstructures src;
        src.set = substructure_set_from_json(j.at("source"));
        for (const auto& s : j.value("source_selections", Json::array())) {
            ClassSelection sel;
            sel.label = s.at("label").get<int>();
            sel.selected_k = s.at("selected_k").get<int>();
            for (const auto& c : s.at("candidates")) {
                sel.candidates.push_back({c.at("k").get<int>(), c.at("bic").get<double>(),
                                          c.at("log_likelihood").get<double>(), c.value("collapsed", false)});
            }
            src.selections.push_back(std::move(sel));
        }
        src.set.class_labels();
        out.source = std::move(src);
        TargetSubstructures tgt;
        tgt.set = substructure_set_from_json(j.at("target"));
        tgt.assignment = j.at("target_assignment").get<std::vector<int>>();
        for (int a : tgt.assignment) {
            if (a < 0 || static_cast<std::size_t>(a) >= tgt.set.size()) {
                throw Error(ErrorKind::InvalidConfig, "target assignment refers to an unknown substructure");
            }
        }
        tgt.model.components = tgt.set.components();
        tgt.model.sample_count = tgt.assignment.size();
        out.target = std::move(tgt);
        return out;
    });
}

Json coupling_sidecar(const Coupling& c) {
    return {{"rows", c.plan.rows()},
            {"cols", c.plan.cols()},
            {"total_mass", c.total_mass()},
            {"objective_trace", c.objective_trace},
            {"iterations", c.iterations},
            {"converged", c.converged},
            {"marginal_residual", c.marginal_residual}};
}

void apply_config_json(AdaptationConfig& config, const Json& j) {
    parse_guard("adaptation config", [&] {
        if (j.contains("variant")) config.variant = parse_method(j.at("variant").get<std::string>());
        if (j.contains("kt")) config.k_t = j.at("kt").get<int>();
        if (j.contains("k_min")) config.k_range.lo = j.at("k_min").get<int>();
        if (j.contains("k_max")) config.k_range.hi = j.at("k_max").get<int>();
        if (j.contains("lambda1")) config.ot.lambda1 = j.at("lambda1").get<double>();
        if (j.contains("lambda")) config.ot.lambda = j.at("lambda").get<double>();
        if (j.contains("eta")) config.ot.eta = j.at("eta").get<double>();
        if (j.contains("max_outer")) config.ot.max_outer = j.at("max_outer").get<int>();
        if (j.contains("max_sinkhorn")) config.ot.max_sinkhorn = j.at("max_sinkhorn").get<int>();
        if (j.contains("tol")) config.ot.tol = j.at("tol").get<double>();
        if (j.contains("restarts")) config.restarts = j.at("restarts").get<int>();
        if (j.contains("seed")) config.rng_seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("normalize")) config.normalize = j.at("normalize").get<bool>();
        return 0;
    });
}

Json to_json(const AdaptationConfig& c) {
    return {{"variant", std::string(to_string(c.variant))},
            {"kt", c.k_t},
            {"k_min", c.k_range.lo},
            {"k_max", c.k_range.hi},
            {"lambda1", c.ot.lambda1},
            {"lambda", c.ot.lambda},
            {"eta", c.ot.eta},
            {"max_outer", c.ot.max_outer},
            {"max_sinkhorn", c.ot.max_sinkhorn},
            {"tol", c.ot.tol},
            {"restarts", c.restarts},
            {"seed", c.rng_seed},
            {"normalize", c.normalize}};
}

Json to_json(const AdaptationResult& r) {
    Json j;
    j["method"] = std::string(to_string(r.method));
    j["label_values"] = r.label_values;
    j["predicted_labels"] = original_labels(r.predicted_labels, r.label_values);
    if (!r.substructure_labels.empty()) {
        j["substructure_labels"] = original_labels(r.substructure_labels, r.label_values);
        j["source_substructure_labels"] = original_labels(r.source_substructure_labels, r.label_values);
        j["target_assignment"] = r.target_assignment;
        Json selections = Json::array();
        for (const auto& s : r.source_selections) {
            selections.push_back({{"label", r.label_values.at(static_cast<std::size_t>(s.label))},
                                  {"selected_k", s.selected_k}});
        }
        j["source_selections"] = selections;
    }
    j["source_weights"] = vec_to_json(r.source_weights);
    j["mapped_sources"] = matrix_to_json(r.mapped_sources);
    j["fallback_rows"] = r.fallback_rows;
    j["coupling"] = coupling_sidecar(r.coupling);
    if (r.evaluation) {
        j["accuracy"] = r.evaluation->accuracy;
        j["confusion"] = r.evaluation->confusion;
    } else {
        j["accuracy"] = nullptr;
    }
    Json timings = Json::object();
    for (const auto& t : r.timings) timings[t.stage] = t.seconds;
    timings["total"] = r.total_seconds();
    j["timings"] = timings;
    return j;
}

void write_json(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::MissingFile, "cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MissingFile, "cannot open '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, "'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_coupling_csv(const std::filesystem::path& path, const Coupling& coupling) {
    write_cost_csv(path, CostMatrix{coupling.plan, CostKind::Center});
}

void write_confusion_csv(const std::filesystem::path& path, const Evaluation& evaluation,
                         const std::vector<std::int64_t>& label_values) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::MissingFile, "cannot write '" + path.string() + "'");
    out << "true_label";
    for (auto v : label_values) out << ",pred_" << v;
    out << '\n';
    for (std::size_t t = 0; t < evaluation.confusion.size(); ++t) {
        out << label_values.at(t);
        for (auto count : evaluation.confusion[t]) out << ',' << count;
        out << '\n';
    }
}

}  // namespace subot
