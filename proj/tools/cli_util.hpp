#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include <CLI11.hpp>
#include <json.hpp>

#include "blockprnu/experiment.hpp"

namespace blockprnu::cli {

using Action = std::function<int()>;

CLI::App* add_inspect(CLI::App& app, Action& action);
CLI::App* add_estimate(CLI::App& app, Action& action);
CLI::App* add_match(CLI::App& app, Action& action);
CLI::App* add_calibrate(CLI::App& app, Action& action);
CLI::App* add_simulate(CLI::App& app, Action& action);
CLI::App* add_evaluate(CLI::App& app, Action& action);

// Writes to stdout when `path` is empty or "-".
void emit(const std::string& path, std::string_view text);

void ensure_directory(const std::filesystem::path& dir);

// --workers, defaulting to BLOCKPRNU_WORKERS or the core count.
void add_workers_option(CLI::App* cmd, int& workers);

// Cohort size, geometry, seed and bitrate ladder flags shared by the simulating subcommands.
void add_cohort_options(CLI::App* cmd, CohortConfig& config);

// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

nlohmann::json cohort_json(const CohortConfig& config);

}  // namespace blockprnu::cli
