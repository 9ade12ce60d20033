#include "cli_util.hpp"

#include <cstdint>
#include <cstdio>
#include <iostream>

#include "blockprnu/parallel.hpp"
#include "blockprnu/trace_io.hpp"

namespace blockprnu::cli {

void emit(const std::string& path, std::string_view text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    write_text_file(path, text);
}

void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

void add_workers_option(CLI::App* cmd, int& workers) {
    workers = default_worker_count();
    cmd->add_option("--workers", workers,
                    "Worker threads (default: BLOCKPRNU_WORKERS, else the number of cores). "
                    "Output does not depend on this value")
        ->check(CLI::Range(1, 1024))
        ->capture_default_str();
}

void add_cohort_options(CLI::App* cmd, CohortConfig& config) {
    cmd->add_option("--cameras", config.cameras, "Cohort cameras")->capture_default_str();
    cmd->add_option("--videos-per-camera", config.videos_per_camera, "Videos per camera")->capture_default_str();
    cmd->add_option("--calibration-cameras", config.calibration_cameras,
                    "Cameras used for the weight tables, disjoint from the cohort")
        ->capture_default_str();
    cmd->add_option("--width", config.width, "Frame width, multiple of 16")->capture_default_str();
    cmd->add_option("--height", config.height, "Frame height, multiple of 16")->capture_default_str();
    cmd->add_option("--frames", config.frames, "Frames per video")->capture_default_str();
    cmd->add_option("--reference-frames", config.reference_frames, "Flat-field frames per reference")
        ->capture_default_str();
    cmd->add_option("--sigma-k", config.sigma_k, "Standard deviation of the simulated PRNU")->capture_default_str();
    cmd->add_option("--bitrates", config.bitrates, "Bitrate proxies in bits per frame, ascending")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--seed", config.seed, "Master seed")->capture_default_str();
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json cohort_json(const CohortConfig& c) {
    return {
        {"cameras", c.cameras},
        {"videos_per_camera", c.videos_per_camera},
        {"calibration_cameras", c.calibration_cameras},
        {"width", c.width},
        {"height", c.height},
        {"frames", c.frames},
        {"reference_frames", c.reference_frames},
        {"sigma_k", c.sigma_k},
        {"read_noise_sigma", c.read_noise_sigma},
        {"bitrates", c.bitrates},
        {"seed", c.seed},
    };
}

}  // namespace blockprnu::cli
