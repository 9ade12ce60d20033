#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blockprnu/calibration.hpp"
#include "blockprnu/evaluation.hpp"
#include "blockprnu/pipeline.hpp"
#include "blockprnu/simulator.hpp"

namespace blockprnu {

// Desk-scale simulated camera studies: a cohort of synthetic cameras, videos
// coded at several bitrate proxies, calibration of the weight tables on a
// disjoint set of cameras, and the six-scheme evaluation grid.

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

struct CohortConfig {
    int cameras = 20;
    int videos_per_camera = 2;
    int calibration_cameras = 6;
    int width = 128;
    int height = 128;
    int frames = 16;
    int reference_frames = 24;
    double sigma_k = 0.02;
    double read_noise_sigma = 2.0;
    // Bits per frame, ascending.
    std::vector<double> bitrates{1500.0, 3000.0, 5000.0, 8000.0, 12000.0};
    // Panning textured background with two moving objects, target-bitrate
    // coding with an intra frame every 4 frames and global motion search.
    SceneConfig scene;
    CodecConfig codec;
    // QP levels for the QP calibration (anchor included automatically).
    std::vector<int> calibration_qps{0, 5, 10, 15, 20, 25, 30, 35, 40, 45, 51};
    int lambda_rate_buckets = kDefaultLambdaRateBuckets;
    EstimateOptions estimate;
    PceConfig pce;
    // Calibration pairs are aligned by construction, so their PCE is read at zero shift.
    PceConfig calibration_pce{5, SearchWindow::ZeroShift, kDefaultPceThreshold};
    std::uint64_t seed = 1;
    int workers = 1;

    CohortConfig();
};

struct SimCamera {
    std::string id;
    std::uint64_t key = 0;
    SensorModel model;
    Fingerprint reference;
};

// Camera `index` of stream `stream` (0 = cohort, 1 = calibration, 2 = SBR sweep).
SimCamera make_camera(const CohortConfig& config, int stream, int index);

struct SimVideo {
    std::string id;
    double bitrate = 0.0;
    EncodeResult encoded;
    std::vector<PreparedFrame> prepared;
    std::vector<FrameBlockMap> maps;
    double bits_per_pixel = 0.0;
    double sbr = 0.0;
};

SimVideo simulate_video(const CohortConfig& config, const SimCamera& camera, int stream, int video_index,
                        const CodecConfig& codec, double bitrate_label);

struct CalibrationTables {
    CalibrationResult qp_all;
    CalibrationResult qp_no_skip;
    CalibrationResult lambda_r;
    // Dense 0..51 versions used for masking.
    WeightTable qp_all_dense;
    WeightTable qp_no_skip_dense;
    // Observations the tables were fitted to.
    std::vector<QpObservation> qp_all_observations;
    std::vector<QpObservation> qp_no_skip_observations;
    std::vector<LambdaRateObservation> lambda_rate_observations;
};

// QP tables from fixed-QP videos (per-frame PCE, averaged per video), lambda*R
// table from spliced frames of videos coded at every bitrate proxy.
CalibrationTables calibrate_tables(const CohortConfig& config);

// Per-scheme fingerprints of one video. Tables are needed for the QP and lambda*R schemes.
std::vector<Fingerprint> scheme_fingerprints(const SimVideo& video, const std::vector<Scheme>& schemes,
                                             const CalibrationTables& tables, const EstimateOptions& options);

SchemeConfig scheme_config(Scheme scheme, const CalibrationTables& tables);

struct CohortResult {
    ExperimentGrid grid;
    CalibrationTables tables;
    // SBR per bitrate proxy, one entry per video.
    std::vector<SbrGroup> sbr;
};

// Static-content variant of `base`: fixed background, no moving objects,
// one intra frame, zero motion, and a low bitrate ladder.
CohortConfig static_content_config(CohortConfig base);

// SBR of `videos` videos (one per camera of stream 2) at every bitrate proxy of `config`.
std::vector<SbrGroup> sbr_sweep(const CohortConfig& config, int videos);

// Every cohort video is matched against its own camera's reference and
// against the reference of the next camera (non-matching row).
CohortResult run_cohort(const CohortConfig& config);

}  // namespace blockprnu
