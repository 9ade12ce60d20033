#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blockprnu/pipeline.hpp"
#include "blockprnu/plane.hpp"
#include "blockprnu/trace.hpp"
#include "blockprnu/weighting.hpp"

namespace blockprnu {

inline constexpr int kDefaultAnchorQp = 15;
inline constexpr double kDefaultAnchorLambdaRate = 60.0;
inline constexpr int kDefaultLambdaRateBuckets = 20;
// PCE condition means are floored here before normalization and sqrt.
inline constexpr double kPceFloor = 1e-3;

// One residual-domain frame assembled from same-rank blocks.
struct SplicedFrame {
    NoiseResidual residual;
    // Spliced luma; empty when no pictures were supplied.
    Picture picture;
    // 1 on filled macroblocks, 0 on empty positions.
    Mask mask;
    double mean_lambda_rate = 0.0;
    int filled_blocks = 0;
};

struct SplicedFrameSet {
    std::vector<SplicedFrame> frames;
    // source[j][mb_y * cols + mb_x]: source frame of that block in spliced frame j, -1 if empty.
    std::vector<std::vector<int>> source;
};

// At every block position the eligible blocks are ranked ascending by
// lambda*R (ties by frame index) and spliced frame j receives the rank-j
// block. SKIP blocks are ineligible when `exclude_skip` is set, so positions
// with fewer eligible blocks leave the higher-ranked frames empty there.
// `pictures` is optional (empty span) and spliced the same way.
// Throws InsufficientFrames (N < 2), DimensionMismatch.
SplicedFrameSet splice_by_lambda_rate(std::span<const NoiseResidual> residuals, std::span<const FrameBlockMap> maps,
                                      std::span<const Picture> pictures = {}, bool exclude_skip = true);

// Single-frame fingerprint of a spliced frame (requires pictures). Throws AllMaskedOut for empty frames.
Fingerprint spliced_fingerprint(const SplicedFrame& frame, const FinalizeOptions& options = {});

struct QpObservation {
    std::string camera_id;
    int qp = 0;
    double pce = 0.0;
};

struct LambdaRateObservation {
    std::string camera_id;
    double lambda_rate = 0.0;
    double pce = 0.0;
};

struct CalibrationRow {
    double key = 0.0;
    std::size_t observations = 0;
    // Per contributing camera, sorted by id.
    std::vector<std::string> cameras;
    std::vector<double> raw_mean_pce;
    std::vector<double> normalized;
    double mean_normalized = 0.0;
    double weight = 0.0;
};

struct CalibrationResult {
    WeightTable table;
    std::vector<CalibrationRow> rows;
    // Cameras left out for lacking an anchor observation (lambda*R only).
    std::vector<std::string> excluded_cameras;
};

// Per camera: mean PCE per QP over its observations, normalized by the
// anchor; cameras averaged per QP; weight = sqrt. Keys are the observed QPs.
// Throws MissingAnchor, InsufficientData.
CalibrationResult calibrate_qp(std::span<const QpObservation> observations, TableScheme scheme = TableScheme::QpAll,
                               int anchor_qp = kDefaultAnchorQp);

// Observations are pooled into equal-population buckets by lambda*R; the
// bucket holding `anchor` is the normalization point and gets key `anchor`,
// the others the mean lambda*R of their members. Cameras without an
// observation in the anchor bucket are excluded.
// Throws EmptyBucket, InsufficientData.
CalibrationResult calibrate_lambda_rate(std::span<const LambdaRateObservation> observations,
                                        int bucket_count = kDefaultLambdaRateBuckets,
                                        double anchor = kDefaultAnchorLambdaRate);

// Observation CSV, one per line after a header:
//   camera_id,qp,pce            (QP observations)
//   camera_id,lambda_rate,pce   (lambda*R observations)
// Throws SchemaError, RangeError.
std::vector<QpObservation> parse_qp_observations(std::string_view text);
std::vector<LambdaRateObservation> parse_lambda_rate_observations(std::string_view text);
std::string serialize_qp_observations(std::span<const QpObservation> observations);
std::string serialize_lambda_rate_observations(std::span<const LambdaRateObservation> observations);

// CSV audit report: key,observations,cameras,mean_normalized,weight then per-camera raw and normalized values.
std::string format_calibration_report(const CalibrationResult& result);

}  // namespace blockprnu
