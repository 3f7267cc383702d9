#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sau/config.hpp"
#include "sau/trainer.hpp"

namespace sau {

/// Command-line overrides applied on top of the config file (or the built-in
/// defaults when no config is given).
struct CliOverrides {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> data_dir;
  std::optional<long> epochs;
  std::optional<int> classes;
  std::optional<long> n0;
  std::optional<double> imbalance;
  std::optional<std::size_t> dim;
};

RunConfig resolve_config(const CliOverrides& ov);

// metrics file: fixed column order, one header row
extern const char* kMetricsHeader;
std::string format_metrics_row(const EpochReport& r);
void write_metrics(const std::filesystem::path& path, const std::vector<EpochReport>& reports);

std::uint64_t dataset_hash(const TrainData& data);

int cmd_make_data(const RunConfig& rc, std::ostream& out);
int cmd_gen_synth(const RunConfig& rc, std::ostream& out);
int cmd_train(const RunConfig& rc, std::ostream& out);
int cmd_eval(const RunConfig& rc, const std::string& checkpoint_path, std::ostream& out);
int cmd_ablate(const RunConfig& rc, std::ostream& out);
int cmd_gradcheck(std::uint64_t seed, std::ostream& out);

}  // namespace sau
