#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "blockprnu/plane.hpp"
#include "blockprnu/trace.hpp"

namespace blockprnu {

// Synthetic block codec and camera model for ground-truth experiments. Not
// H.264: 8x8 DCT inside each 16x16 macroblock, uniform quantization, a simple
// bit-count rate model, integer-pel prediction from the previous decoded
// frame, and a CODE/SKIP decision by minimum J = D + lambda * R.

inline constexpr int kBlockPixels = kMacroblockSize * kMacroblockSize;
using BlockPixels = std::array<std::uint8_t, kBlockPixels>;

struct SensorModel {
    Plane<double> k_true;
    double read_noise_sigma = 0.0;

    int width() const noexcept { return k_true.width(); }
    int height() const noexcept { return k_true.height(); }

    // Gaussian K with standard deviation sigma_k, clamped to +-0.09.
    // Dimensions must be multiples of 16.
    static SensorModel random(int width, int height, double sigma_k, double read_noise_sigma, std::uint64_t seed);
};

// clip(round(clean * (1 + K) + N(0, sigma^2))). Throws DimensionMismatch.
std::vector<Picture> simulate_capture(const SensorModel& model, const std::vector<Picture>& clean,
                                      std::uint64_t seed);

struct SceneConfig {
    int width = 128;
    int height = 128;
    int frames = 16;
    // Peak-to-peak amplitude of the background texture around mid-gray.
    double texture_amplitude = 60.0;
    // Background drift in pixels per frame.
    double pan_x = 0.0;
    double pan_y = 0.0;
    // Bright disks moving across the background.
    int moving_objects = 0;
    double object_speed = 1.5;
    std::uint64_t seed = 1;
};

std::vector<Picture> generate_scene(const SceneConfig& config);

// Nearly flat, unsaturated frames; the usual material for a reference fingerprint.
std::vector<Picture> generate_flat_field(int width, int height, int frames, std::uint64_t seed);

enum class RateMode { FixedQp, TargetBitrate };

struct CodecConfig {
    RateMode mode = RateMode::FixedQp;
    int qp = 26;
    // Target-bitrate mode: bit budget per frame.
    double bits_per_frame = 20000.0;
    // I-frames get this multiple of the per-frame budget.
    double intra_budget_factor = 4.0;
    // When >= 0, intra frames after the first are coded at the current inter
    // QP minus this offset instead of searching their own budget.
    int intra_qp_offset = -1;
    int initial_qp = 30;
    int min_qp = kMinQp;
    int max_qp = kMaxQp;
    // Intra frame interval; 0 means only frame 0 is intra.
    int gop = 0;
    // Inter prediction is the previous decoded frame displaced by one
    // integer vector per frame, searched within +-range. 0 keeps zero motion.
    int global_motion_range = 0;

    // Throws ConfigError.
    void validate() const;
};

// 2^((qp - 4) / 6).
double quantizer_step(int qp);

// Bits of one quantized level: 1 + ceil(log2(1 + |level|)).
int level_bits(int level);

// Sum of level_bits over one 8x8 block of levels (row-major) in zig-zag
// order, up to and including the last nonzero level. Trailing zeros are free.
int subblock_bits(const int* levels);
std::span<const int, 64> zigzag_order();

inline constexpr int kCodeHeaderBits = 8;
inline constexpr int kSkipBits = 1;

enum class BlockMode { Code, Skip };

struct BlockEncoding {
    BlockMode mode = BlockMode::Code;
    BlockPixels reconstruction{};
    // Sum of squared reconstruction errors over the 256 samples.
    double distortion = 0.0;
    std::int64_t rate = 0;
    double lambda = 0.0;
    double cost = 0.0;

    double mse() const noexcept { return distortion / kBlockPixels; }
};

// CODE candidate only: transform, quantize and reconstruct against `prediction`.
BlockEncoding code_block(const BlockPixels& block, const BlockPixels& prediction, int qp, double lambda);
// SKIP candidate only: reconstruction = prediction, R = 1 bit.
BlockEncoding skip_block(const BlockPixels& block, const BlockPixels& prediction, double lambda);

// Minimum-J choice between CODE and SKIP; ties go to CODE.
BlockEncoding encode_block(const BlockPixels& block, const BlockPixels& prediction, int qp, double lambda,
                           bool allow_skip = true);

// Per-block ground truth alongside the trace row.
struct BlockTruth {
    BlockRecord record;
    double distortion = 0.0;
    std::int64_t rate = 0;
    double lambda = 0.0;
    double cost = 0.0;

    double mse() const noexcept { return distortion / kBlockPixels; }
};

struct EncodeResult {
    std::vector<Picture> decoded;
    TraceFile trace;
    // Canonical order, same as trace.records.
    std::vector<BlockTruth> truth;
    std::vector<int> frame_qp;
    std::vector<std::int64_t> frame_bits;
    // Global motion vector used for each frame's inter prediction.
    std::vector<std::pair<int, int>> frame_motion;
};

// Throws ConfigError, EmptyInput, DimensionMismatch.
EncodeResult encode_sequence(const std::vector<Picture>& frames, const CodecConfig& config);

// 1 / (1 + mse) per block of one frame, painted as a mask.
Mask oracle_weight_d(std::span<const BlockTruth> frame_truth, int width, int height);

BlockPixels extract_block(const Plane<std::uint8_t>& plane, int mb_x, int mb_y);
void store_block(Plane<std::uint8_t>& plane, int mb_x, int mb_y, const BlockPixels& block);

// Orthonormal 8x8 DCT-II and inverse, row-major.
void dct8x8(const double* in, double* out);
void idct8x8(const double* in, double* out);

}  // namespace blockprnu
