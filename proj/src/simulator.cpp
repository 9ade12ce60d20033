#include "blockprnu/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace blockprnu {

namespace {

void require_macroblock_dims(int width, int height, const char* what) {
    if (width <= 0 || height <= 0 || width % kMacroblockSize != 0 || height % kMacroblockSize != 0) {
        fail(ErrorKind::DimensionMismatch, std::string(what) + ": dimensions must be positive multiples of 16, got " +
                                               std::to_string(width) + "x" + std::to_string(height));
    }
}

std::uint8_t clip8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

struct DctBasis {
    // c[u][x] = alpha(u) cos((2x + 1) u pi / 16)
    std::array<std::array<double, 8>, 8> c{};
    DctBasis() {
        for (int u = 0; u < 8; ++u) {
            const double alpha = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int x = 0; x < 8; ++x) c[u][x] = alpha * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
        }
    }
};

const DctBasis& basis() {
    static const DctBasis b;
    return b;
}

constexpr std::array<int, 64> kZigzag{0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
                                      12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
                                      35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
                                      58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

}  // namespace

// =============================================================================
// Camera
// =============================================================================

SensorModel SensorModel::random(int width, int height, double sigma_k, double read_noise_sigma, std::uint64_t seed) {
    require_macroblock_dims(width, height, "sensor");
    if (sigma_k < 0.0 || read_noise_sigma < 0.0) fail(ErrorKind::ConfigError, "negative sensor noise parameter");
    SensorModel m;
    m.k_true = Plane<double>(width, height);
    m.read_noise_sigma = read_noise_sigma;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& k : m.k_true.values()) k = std::clamp(sigma_k * gauss(rng), -0.09, 0.09);
    return m;
}

std::vector<Picture> simulate_capture(const SensorModel& model, const std::vector<Picture>& clean,
                                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Picture> out;
    out.reserve(clean.size());
    for (const auto& frame : clean) {
        require_same_shape(frame.luma, model.k_true, "capture");
        Picture p{Plane<std::uint8_t>(frame.width(), frame.height()), frame.frame_idx};
        for (std::size_t i = 0; i < frame.luma.size(); ++i) {
            double v = frame.luma[i] * (1.0 + model.k_true[i]);
            if (model.read_noise_sigma > 0.0) v += model.read_noise_sigma * gauss(rng);
            p.luma[i] = clip8(v);
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Picture> generate_scene(const SceneConfig& config) {
    require_macroblock_dims(config.width, config.height, "scene");
    if (config.frames < 1) fail(ErrorKind::ConfigError, "scene needs at least one frame");
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    struct Wave {
        double fx, fy, phase, amp;
    };
    std::vector<Wave> waves;
    double amp_total = 0.0;
    for (int i = 0; i < 12; ++i) {
        const double wavelength = 6.0 + 58.0 * uni(rng);
        const double angle = 2.0 * std::numbers::pi * uni(rng);
        Wave w{std::cos(angle) / wavelength, std::sin(angle) / wavelength, 2.0 * std::numbers::pi * uni(rng),
               0.3 + uni(rng)};
        amp_total += w.amp;
        waves.push_back(w);
    }
    for (auto& w : waves) w.amp *= 0.5 * config.texture_amplitude / amp_total;

    struct Disk {
        double x, y, vx, vy, r, delta;
    };
    std::vector<Disk> disks;
    for (int i = 0; i < config.moving_objects; ++i) {
        const double angle = 2.0 * std::numbers::pi * uni(rng);
        disks.push_back({uni(rng) * config.width, uni(rng) * config.height, config.object_speed * std::cos(angle),
                         config.object_speed * std::sin(angle), 6.0 + 8.0 * uni(rng),
                         (uni(rng) < 0.5 ? -1.0 : 1.0) * (25.0 + 20.0 * uni(rng))});
    }

    std::vector<Picture> frames;
    for (int t = 0; t < config.frames; ++t) {
        Picture p{Plane<std::uint8_t>(config.width, config.height), t};
        const double ox = config.pan_x * t;
        const double oy = config.pan_y * t;
        for (int y = 0; y < config.height; ++y) {
            for (int x = 0; x < config.width; ++x) {
                double v = 128.0;
                for (const auto& w : waves) {
                    v += w.amp * std::sin(2.0 * std::numbers::pi * (w.fx * (x + ox) + w.fy * (y + oy)) + w.phase);
                }
                for (const auto& d : disks) {
                    const double cx = std::fmod(d.x + d.vx * t + 4.0 * config.width, static_cast<double>(config.width));
                    const double cy =
                        std::fmod(d.y + d.vy * t + 4.0 * config.height, static_cast<double>(config.height));
                    const double dx = x - cx;
                    const double dy = y - cy;
                    // Soft edge over one pixel.
                    const double edge = std::clamp(d.r - std::sqrt(dx * dx + dy * dy) + 0.5, 0.0, 1.0);
                    v += edge * d.delta;
                }
                p.luma(x, y) = clip8(std::clamp(v, 20.0, 235.0));
            }
        }
        frames.push_back(std::move(p));
    }
    return frames;
}

std::vector<Picture> generate_flat_field(int width, int height, int frames, std::uint64_t seed) {
    require_macroblock_dims(width, height, "flat field");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<Picture> out;
    for (int t = 0; t < frames; ++t) {
        const double level = 110.0 + 50.0 * uni(rng);
        const double gx = (uni(rng) - 0.5) * 20.0 / width;
        const double gy = (uni(rng) - 0.5) * 20.0 / height;
        Picture p{Plane<std::uint8_t>(width, height), t};
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) p.luma(x, y) = clip8(level + gx * (x - width / 2) + gy * (y - height / 2));
        }
        out.push_back(std::move(p));
    }
    return out;
}

// =============================================================================
// Block coding
// =============================================================================

void CodecConfig::validate() const {
    if (qp < kMinQp || qp > kMaxQp) fail(ErrorKind::ConfigError, "qp out of range: " + std::to_string(qp));
    if (min_qp < kMinQp || max_qp > kMaxQp || min_qp > max_qp) fail(ErrorKind::ConfigError, "bad qp bounds");
    if (initial_qp < min_qp || initial_qp > max_qp) fail(ErrorKind::ConfigError, "initial qp outside bounds");
    if (mode == RateMode::TargetBitrate && !(bits_per_frame > 0.0)) {
        fail(ErrorKind::ConfigError, "target bitrate must be positive");
    }
    if (!(intra_budget_factor > 0.0)) fail(ErrorKind::ConfigError, "intra budget factor must be positive");
    if (gop < 0) fail(ErrorKind::ConfigError, "negative gop");
    if (intra_qp_offset > kMaxQp) fail(ErrorKind::ConfigError, "intra QP offset out of range");
    if (global_motion_range < 0 || global_motion_range > 32) fail(ErrorKind::ConfigError, "global motion range must be in [0, 32]");
}

double quantizer_step(int qp) { return std::exp2((qp - 4) / 6.0); }

int level_bits(int level) {
    const auto mag = static_cast<unsigned>(level < 0 ? -level : level);
    return 1 + static_cast<int>(std::bit_width(mag));
}

int subblock_bits(const int* levels) {
    int last = -1;
    for (int k = 0; k < 64; ++k) {
        if (levels[kZigzag[k]] != 0) last = k;
    }
    int bits = 0;
    for (int k = 0; k <= last; ++k) bits += level_bits(levels[kZigzag[k]]);
    return bits;
}

std::span<const int, 64> zigzag_order() { return kZigzag; }

void dct8x8(const double* in, double* out) {
    const auto& c = basis().c;
    double tmp[64];
    for (int y = 0; y < 8; ++y) {
        for (int u = 0; u < 8; ++u) {
            double s = 0.0;
            for (int x = 0; x < 8; ++x) s += c[u][x] * in[y * 8 + x];
            tmp[y * 8 + u] = s;
        }
    }
    for (int u = 0; u < 8; ++u) {
        for (int v = 0; v < 8; ++v) {
            double s = 0.0;
            for (int y = 0; y < 8; ++y) s += c[v][y] * tmp[y * 8 + u];
            out[v * 8 + u] = s;
        }
    }
}

void idct8x8(const double* in, double* out) {
    const auto& c = basis().c;
    double tmp[64];
    for (int v = 0; v < 8; ++v) {
        for (int x = 0; x < 8; ++x) {
            double s = 0.0;
            for (int u = 0; u < 8; ++u) s += c[u][x] * in[v * 8 + u];
            tmp[v * 8 + x] = s;
        }
    }
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            double s = 0.0;
            for (int v = 0; v < 8; ++v) s += c[v][y] * tmp[v * 8 + x];
            out[y * 8 + x] = s;
        }
    }
}

BlockEncoding code_block(const BlockPixels& block, const BlockPixels& prediction, int qp, double lambda) {
    const double step = quantizer_step(qp);
    BlockEncoding enc;
    enc.mode = BlockMode::Code;
    enc.lambda = lambda;
    std::int64_t bits = kCodeHeaderBits;
    double in[64], coeff[64], rec[64];
    for (int sy = 0; sy < 2; ++sy) {
        for (int sx = 0; sx < 2; ++sx) {
            for (int y = 0; y < 8; ++y) {
                for (int x = 0; x < 8; ++x) {
                    const int i = (sy * 8 + y) * kMacroblockSize + sx * 8 + x;
                    in[y * 8 + x] = static_cast<double>(block[i]) - prediction[i];
                }
            }
            dct8x8(in, coeff);
            int levels[64];
            for (int k = 0; k < 64; ++k) {
                levels[k] = static_cast<int>(std::lround(coeff[k] / step));
                coeff[k] = levels[k] * step;
            }
            bits += subblock_bits(levels);
            idct8x8(coeff, rec);
            for (int y = 0; y < 8; ++y) {
                for (int x = 0; x < 8; ++x) {
                    const int i = (sy * 8 + y) * kMacroblockSize + sx * 8 + x;
                    enc.reconstruction[i] = clip8(prediction[i] + rec[y * 8 + x]);
                }
            }
        }
    }
    double ssd = 0.0;
    for (int i = 0; i < kBlockPixels; ++i) {
        const double d = static_cast<double>(block[i]) - enc.reconstruction[i];
        ssd += d * d;
    }
    enc.distortion = ssd;
    enc.rate = bits;
    enc.cost = enc.distortion + lambda * static_cast<double>(enc.rate);
    return enc;
}

BlockEncoding skip_block(const BlockPixels& block, const BlockPixels& prediction, double lambda) {
    BlockEncoding enc;
    enc.mode = BlockMode::Skip;
    enc.lambda = lambda;
    enc.reconstruction = prediction;
    double ssd = 0.0;
    for (int i = 0; i < kBlockPixels; ++i) {
        const double d = static_cast<double>(block[i]) - prediction[i];
        ssd += d * d;
    }
    enc.distortion = ssd;
    enc.rate = kSkipBits;
    enc.cost = enc.distortion + lambda * static_cast<double>(enc.rate);
    return enc;
}

BlockEncoding encode_block(const BlockPixels& block, const BlockPixels& prediction, int qp, double lambda,
                           bool allow_skip) {
    auto code = code_block(block, prediction, qp, lambda);
    if (!allow_skip) return code;
    auto skip = skip_block(block, prediction, lambda);
    return skip.cost < code.cost ? skip : code;
}

BlockPixels extract_block(const Plane<std::uint8_t>& plane, int mb_x, int mb_y) {
    BlockPixels b{};
    for (int y = 0; y < kMacroblockSize; ++y) {
        const auto row = plane.row(mb_y * kMacroblockSize + y).subspan(static_cast<std::size_t>(mb_x * kMacroblockSize),
                                                                      kMacroblockSize);
        std::copy(row.begin(), row.end(), b.begin() + y * kMacroblockSize);
    }
    return b;
}

void store_block(Plane<std::uint8_t>& plane, int mb_x, int mb_y, const BlockPixels& block) {
    for (int y = 0; y < kMacroblockSize; ++y) {
        auto row = plane.row(mb_y * kMacroblockSize + y).subspan(static_cast<std::size_t>(mb_x * kMacroblockSize),
                                                                kMacroblockSize);
        std::copy(block.begin() + y * kMacroblockSize, block.begin() + (y + 1) * kMacroblockSize, row.begin());
    }
}

// =============================================================================
// Sequence coding
// =============================================================================

namespace {

// DC predictor from the decoded right column of the left neighbor and the
// bottom row of the top neighbor; 128 when neither exists.
BlockPixels intra_prediction(const Plane<std::uint8_t>& decoded, int mb_x, int mb_y) {
    double sum = 0.0;
    int n = 0;
    if (mb_x > 0) {
        const int x = mb_x * kMacroblockSize - 1;
        for (int y = 0; y < kMacroblockSize; ++y) sum += decoded(x, mb_y * kMacroblockSize + y);
        n += kMacroblockSize;
    }
    if (mb_y > 0) {
        const int y = mb_y * kMacroblockSize - 1;
        for (int x = 0; x < kMacroblockSize; ++x) sum += decoded(mb_x * kMacroblockSize + x, y);
        n += kMacroblockSize;
    }
    BlockPixels p;
    p.fill(n == 0 ? std::uint8_t{128} : clip8(sum / n));
    return p;
}

struct FrameEncoding {
    Plane<std::uint8_t> decoded;
    std::vector<BlockEncoding> blocks;
    std::int64_t bits = 0;
};

FrameEncoding encode_frame(const Picture& frame, const Picture* reference, int qp) {
    const int cols = frame.width() / kMacroblockSize;
    const int rows = frame.height() / kMacroblockSize;
    const double lambda = lambda_of_qp(qp);
    FrameEncoding out;
    out.decoded = Plane<std::uint8_t>(frame.width(), frame.height());
    out.blocks.reserve(static_cast<std::size_t>(cols * rows));
    for (int by = 0; by < rows; ++by) {
        for (int bx = 0; bx < cols; ++bx) {
            const auto block = extract_block(frame.luma, bx, by);
            BlockEncoding enc;
            if (reference == nullptr) {
                enc = encode_block(block, intra_prediction(out.decoded, bx, by), qp, lambda, false);
            } else {
                enc = encode_block(block, extract_block(reference->luma, bx, by), qp, lambda, true);
            }
            store_block(out.decoded, bx, by, enc.reconstruction);
            out.bits += enc.rate;
            out.blocks.push_back(enc);
        }
    }
    return out;
}

// Integer shift (dx, dy) minimizing the mean absolute difference between
// cur(x, y) and prev(x + dx, y + dy) over the overlap; smaller shifts win ties.
std::pair<int, int> global_motion(const Picture& cur, const Picture& prev, int range) {
    std::vector<std::pair<int, int>> candidates;
    for (int dy = -range; dy <= range; ++dy) {
        for (int dx = -range; dx <= range; ++dx) candidates.emplace_back(dx, dy);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        return std::abs(a.first) + std::abs(a.second) < std::abs(b.first) + std::abs(b.second);
    });
    const int w = cur.width();
    const int h = cur.height();
    std::pair<int, int> best{0, 0};
    double best_cost = std::numeric_limits<double>::infinity();
    for (const auto& [dx, dy] : candidates) {
        double sad = 0.0;
        std::size_t n = 0;
        for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
            for (int x = std::max(0, -dx); x < std::min(w, w - dx); ++x) {
                sad += std::abs(static_cast<int>(cur.luma(x, y)) - static_cast<int>(prev.luma(x + dx, y + dy)));
                ++n;
            }
        }
        const double cost = sad / static_cast<double>(n);
        if (cost < best_cost) {
            best_cost = cost;
            best = {dx, dy};
        }
    }
    return best;
}

Picture shifted_reference(const Picture& prev, int dx, int dy) {
    Picture out{Plane<std::uint8_t>(prev.width(), prev.height()), prev.frame_idx};
    for (int y = 0; y < prev.height(); ++y) {
        const int sy = std::clamp(y + dy, 0, prev.height() - 1);
        for (int x = 0; x < prev.width(); ++x) out.luma(x, y) = prev.luma(std::clamp(x + dx, 0, prev.width() - 1), sy);
    }
    return out;
}

}  // namespace

EncodeResult encode_sequence(const std::vector<Picture>& frames, const CodecConfig& config) {
    config.validate();
    if (frames.empty()) fail(ErrorKind::EmptyInput, "no frames to encode");
    const int width = frames.front().width();
    const int height = frames.front().height();
    require_macroblock_dims(width, height, "encoder input");
    for (const auto& f : frames) require_same_shape(f.luma, frames.front().luma, "encoder input");

    EncodeResult result;
    auto& header = result.trace.header;
    header.width = width;
    header.height = height;
    header.frame_count = static_cast<int>(frames.size());
    const int cols = header.mb_cols();
    const int rows = header.mb_rows();

    std::vector<int> last_qp_at(static_cast<std::size_t>(cols * rows), config.initial_qp);
    int intra_qp = config.initial_qp;
    int inter_qp = config.initial_qp;

    for (std::size_t f = 0; f < frames.size(); ++f) {
        const bool intra = f == 0 || (config.gop > 0 && f % static_cast<std::size_t>(config.gop) == 0);
        Picture shifted;
        const Picture* reference = intra ? nullptr : &result.decoded.back();
        std::pair<int, int> motion{0, 0};
        if (!intra && config.global_motion_range > 0) {
            motion = global_motion(frames[f], result.decoded.back(), config.global_motion_range);
            if (motion != std::pair<int, int>{0, 0}) {
                shifted = shifted_reference(result.decoded.back(), motion.first, motion.second);
                reference = &shifted;
            }
        }
        result.frame_motion.push_back(motion);

        int qp = config.qp;
        FrameEncoding enc;
        if (config.mode == RateMode::FixedQp) {
            enc = encode_frame(frames[f], reference, qp);
        } else {
            qp = intra ? intra_qp : inter_qp;
            if (intra && f > 0 && config.intra_qp_offset >= 0) {
                qp = std::clamp(inter_qp - config.intra_qp_offset, config.min_qp, config.max_qp);
                enc = encode_frame(frames[f], reference, qp);
            } else {
                const double budget = config.bits_per_frame * (intra ? config.intra_budget_factor : 1.0);
                enc = encode_frame(frames[f], reference, qp);
                if (static_cast<double>(enc.bits) > budget) {
                    while (qp < config.max_qp && static_cast<double>(enc.bits) > budget) {
                        ++qp;
                        enc = encode_frame(frames[f], reference, qp);
                    }
                } else {
                    while (qp > config.min_qp) {
                        auto lower = encode_frame(frames[f], reference, qp - 1);
                        if (static_cast<double>(lower.bits) > budget) break;
                        --qp;
                        enc = std::move(lower);
                    }
                }
                (intra ? intra_qp : inter_qp) = qp;
            }
        }

        const int frame_idx = static_cast<int>(f);
        for (int by = 0; by < rows; ++by) {
            for (int bx = 0; bx < cols; ++bx) {
                const auto& b = enc.blocks[static_cast<std::size_t>(by * cols + bx)];
                auto& inherited = last_qp_at[static_cast<std::size_t>(by * cols + bx)];
                BlockTruth t;
                t.record.frame_idx = frame_idx;
                t.record.mb_x = bx;
                t.record.mb_y = by;
                if (b.mode == BlockMode::Skip) {
                    t.record.type = BlockType::Skip;
                    t.record.qp = inherited;
                } else {
                    t.record.type = intra ? BlockType::I : BlockType::P;
                    t.record.qp = qp;
                    inherited = qp;
                }
                t.record.bits = b.rate;
                t.distortion = b.distortion;
                t.rate = b.rate;
                t.lambda = b.lambda;
                t.cost = b.cost;
                result.trace.records.push_back(t.record);
                result.truth.push_back(t);
            }
        }
        result.decoded.push_back(Picture{std::move(enc.decoded), frame_idx});
        result.frame_qp.push_back(qp);
        result.frame_bits.push_back(enc.bits);
    }
    return result;
}

Mask oracle_weight_d(std::span<const BlockTruth> frame_truth, int width, int height) {
    Mask mask(width, height, 0.0);
    for (const auto& t : frame_truth) {
        const double w = 1.0 / (1.0 + t.mse());
        const int x0 = t.record.mb_x * kMacroblockSize;
        const int y0 = t.record.mb_y * kMacroblockSize;
        for (int y = y0; y < std::min(height, y0 + kMacroblockSize); ++y) {
            for (int x = x0; x < std::min(width, x0 + kMacroblockSize); ++x) mask(x, y) = w;
        }
    }
    return mask;
}

}  // namespace blockprnu
