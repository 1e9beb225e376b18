#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "mfvis/trainer.hpp"
#include "mfvis/video.hpp"

namespace mfvis {

using Json = nlohmann::json;

/// Everything a CLI run can be configured with. JSON sections: "synthetic",
/// "patch", "loss", "pairwise", "train" and a top-level "scheme". Unknown
/// keys anywhere are rejected.
struct RunConfig {
    std::optional<SyntheticSpec> synthetic;
    TrainConfig train;
};

Json to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const Json& j);

Json to_json(const PatchConfig& config);
PatchConfig patch_config_from_json(const Json& j, PatchConfig base = {});

Json to_json(const RunConfig& config);
RunConfig run_config_from_json(const Json& j);

/// Parses and validates a config file; ValidationError on any problem.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace mfvis
