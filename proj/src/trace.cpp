#include "blockprnu/trace.hpp"

#include <cmath>
#include <string>

namespace blockprnu {

std::string_view to_string(BlockType type) {
    switch (type) {
        case BlockType::I: return "I";
        case BlockType::P: return "P";
        case BlockType::B: return "B";
        case BlockType::Skip: return "SKIP";
    }
    return "?";
}

std::optional<BlockType> parse_block_type(std::string_view text) {
    if (text == "I") return BlockType::I;
    if (text == "P") return BlockType::P;
    if (text == "B") return BlockType::B;
    if (text == "SKIP") return BlockType::Skip;
    return std::nullopt;
}

void validate_record(const BlockRecord& r) {
    if (r.qp < kMinQp || r.qp > kMaxQp) {
        fail(ErrorKind::RangeError, "qp " + std::to_string(r.qp) + " outside [0,51] at block (" +
                                        std::to_string(r.frame_idx) + ", " + std::to_string(r.mb_x) + ", " +
                                        std::to_string(r.mb_y) + ")");
    }
    if (r.bits < 0) fail(ErrorKind::RangeError, "negative bit count");
    if (r.is_skip() && r.bits > kMaxSkipBits) {
        fail(ErrorKind::RangeError, "SKIP block carries " + std::to_string(r.bits) + " bits");
    }
}

FrameBlockMap::FrameBlockMap(int frame_idx, int mb_cols, int mb_rows)
    : frame_idx_(frame_idx), mb_cols_(mb_cols), mb_rows_(mb_rows),
      blocks_(static_cast<std::size_t>(mb_cols) * static_cast<std::size_t>(mb_rows)) {
    for (int y = 0; y < mb_rows; ++y) {
        for (int x = 0; x < mb_cols; ++x) {
            auto& b = blocks_[index(x, y)];
            b.frame_idx = frame_idx;
            b.mb_x = x;
            b.mb_y = y;
        }
    }
}

std::size_t FrameBlockMap::index(int mb_x, int mb_y) const {
    if (mb_x < 0 || mb_y < 0 || mb_x >= mb_cols_ || mb_y >= mb_rows_) {
        fail(ErrorKind::RangeError, "macroblock (" + std::to_string(mb_x) + ", " + std::to_string(mb_y) +
                                        ") outside grid");
    }
    return static_cast<std::size_t>(mb_y) * static_cast<std::size_t>(mb_cols_) + static_cast<std::size_t>(mb_x);
}

std::vector<FrameBlockMap> TraceFile::frames() const {
    std::vector<FrameBlockMap> out;
    out.reserve(static_cast<std::size_t>(header.frame_count));
    for (int f = 0; f < header.frame_count; ++f) out.emplace_back(f, header.mb_cols(), header.mb_rows());
    for (const auto& r : records) {
        if (r.frame_idx < 0 || r.frame_idx >= header.frame_count) {
            fail(ErrorKind::RangeError, "frame index " + std::to_string(r.frame_idx) + " outside trace");
        }
        out[static_cast<std::size_t>(r.frame_idx)].at(r.mb_x, r.mb_y) = r;
    }
    return out;
}

FrameBlockMap TraceFile::frame(int frame_idx) const {
    const auto per_frame = static_cast<std::size_t>(header.blocks_per_frame());
    FrameBlockMap map(frame_idx, header.mb_cols(), header.mb_rows());
    // Canonical traces are laid out densely; fall back to a scan otherwise.
    const auto start = static_cast<std::size_t>(frame_idx) * per_frame;
    if (start + per_frame <= records.size() && records[start].frame_idx == frame_idx &&
        records[start + per_frame - 1].frame_idx == frame_idx) {
        for (std::size_t i = 0; i < per_frame; ++i) {
            const auto& r = records[start + i];
            map.at(r.mb_x, r.mb_y) = r;
        }
        return map;
    }
    for (const auto& r : records) {
        if (r.frame_idx == frame_idx) map.at(r.mb_x, r.mb_y) = r;
    }
    return map;
}

RdCost RdCost::from_rate(double lambda, std::int64_t bits) {
    RdCost c;
    c.lambda_value = lambda;
    c.rate_bits = bits;
    c.lambda_rate = lambda * static_cast<double>(bits);
    return c;
}

RdCost RdCost::with_distortion(double lambda, std::int64_t bits, double distortion) {
    RdCost c = from_rate(lambda, bits);
    c.distortion = distortion;
    c.j_value = distortion + c.lambda_rate;
    return c;
}

double lambda_of_qp(int qp) {
    if (qp < kMinQp || qp > kMaxQp) fail(ErrorKind::RangeError, "qp " + std::to_string(qp) + " outside [0,51]");
    return std::pow(0.852, static_cast<double>(qp - 12) / 3.0);
}

double lambda_rate(const BlockRecord& record) {
    validate_record(record);
    return lambda_of_qp(record.qp) * static_cast<double>(record.bits);
}

double skipped_block_rate(std::span<const FrameBlockMap> frames) {
    std::size_t total = 0;
    std::size_t skipped = 0;
    for (const auto& f : frames) {
        for (const auto& b : f.blocks()) {
            ++total;
            if (b.is_skip()) ++skipped;
        }
    }
    if (total == 0) fail(ErrorKind::EmptyInput, "skipped_block_rate over zero blocks");
    return static_cast<double>(skipped) / static_cast<double>(total);
}

double skipped_block_rate(const TraceFile& trace) {
    if (trace.records.empty()) fail(ErrorKind::EmptyInput, "skipped_block_rate over zero blocks");
    std::size_t skipped = 0;
    for (const auto& r : trace.records) {
        if (r.is_skip()) ++skipped;
    }
    return static_cast<double>(skipped) / static_cast<double>(trace.records.size());
}

double bits_per_pixel(const TraceFile& trace) {
    const double pixels = static_cast<double>(trace.header.width) * static_cast<double>(trace.header.height) *
                          static_cast<double>(trace.header.frame_count);
    if (pixels <= 0.0) fail(ErrorKind::EmptyInput, "bits_per_pixel with zero pixels");
    std::int64_t bits = 0;
    for (const auto& r : trace.records) bits += r.bits;
    return static_cast<double>(bits) / pixels;
}

}  // namespace blockprnu
