#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "subot/datamodel.hpp"
#include "subot/gmm.hpp"
#include "subot/ot.hpp"
#include "subot/pipeline.hpp"

namespace subot {

using Json = nlohmann::json;

Json to_json(const ToyConfig& config);
ToyConfig toy_config_from_json(const Json& j);

Json to_json(const GaussianComponent& component);
GaussianComponent component_from_json(const Json& j);

Json to_json(const MixtureModel& model);
MixtureModel mixture_from_json(const Json& j);

Json to_json(const SubstructureSet& set);
SubstructureSet substructure_set_from_json(const Json& j);

/// Cache document holding both domains' substructures and the target row
/// assignment, as written next to adaptation results.
Json substructure_cache_to_json(const AdaptationResult& result);
PrecomputedSubstructures substructure_cache_from_json(const Json& j);

/// Solver metadata accompanying a coupling CSV.
Json coupling_sidecar(const Coupling& coupling);

/// Overrides fields of `config` present in `j` (keys: variant, kt, k_min,
/// k_max, lambda1, lambda, eta, max_outer, max_sinkhorn, tol, restarts,
/// seed, normalize).
void apply_config_json(AdaptationConfig& config, const Json& j);
Json to_json(const AdaptationConfig& config);

/// Labels are written in the source's original label values. Timing values
/// live under the "timings" key only.
Json to_json(const AdaptationResult& result);

void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

void write_coupling_csv(const std::filesystem::path& path, const Coupling& coupling);
/// Confusion counts with a header row of original label values; the first
/// column holds the true label.
void write_confusion_csv(const std::filesystem::path& path, const Evaluation& evaluation,
                         const std::vector<std::int64_t>& label_values);

}  // namespace subot
