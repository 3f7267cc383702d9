#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "sau/trainer.hpp"

namespace sau {

/// On-disk run description: the full training configuration plus the data
/// and output directories. Unknown keys anywhere are rejected.
struct RunConfig {
  TrainConfig train;
  std::string data_dir = ".";
  std::string out_dir = ".";
  std::uint64_t gen_means_seed = 7;  // seed of the class-mean construction
};

RunConfig default_run_config();

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_to_json(const RunConfig& cfg);

std::string variant_name(ScVariant v);
ScVariant parse_variant(const std::string& name);

}  // namespace sau
