#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "blockprnu/error.hpp"

namespace blockprnu {

inline constexpr int kMacroblockSize = 16;
inline constexpr int kMinQp = 0;
inline constexpr int kMaxQp = 51;
// SKIP rows carry signaling bits only.
inline constexpr std::int64_t kMaxSkipBits = 63;

enum class BlockType : std::uint8_t { I, P, B, Skip };

std::string_view to_string(BlockType type);
std::optional<BlockType> parse_block_type(std::string_view text);

struct BlockRecord {
    int frame_idx = 0;
    int mb_x = 0;
    int mb_y = 0;
    BlockType type = BlockType::I;
    int qp = 0;
    std::int64_t bits = 0;

    bool is_skip() const noexcept { return type == BlockType::Skip; }
    bool operator==(const BlockRecord&) const = default;
};

// Throws RangeError / SchemaError on a record violating the BlockRecord invariants.
void validate_record(const BlockRecord& record);

struct TraceHeader {
    int width = 0;
    int height = 0;
    int macroblock_size = kMacroblockSize;
    int frame_count = 0;

    // Macroblock grid; partial edge blocks are cropped.
    int mb_cols() const noexcept { return width / macroblock_size; }
    int mb_rows() const noexcept { return height / macroblock_size; }
    int blocks_per_frame() const noexcept { return mb_cols() * mb_rows(); }
    bool operator==(const TraceHeader&) const = default;
};

// Dense per-frame block grid, row-major by macroblock.
class FrameBlockMap {
public:
    FrameBlockMap() = default;
    FrameBlockMap(int frame_idx, int mb_cols, int mb_rows);

    int frame_idx() const noexcept { return frame_idx_; }
    int mb_cols() const noexcept { return mb_cols_; }
    int mb_rows() const noexcept { return mb_rows_; }
    std::size_t size() const noexcept { return blocks_.size(); }

    const BlockRecord& at(int mb_x, int mb_y) const { return blocks_[index(mb_x, mb_y)]; }
    BlockRecord& at(int mb_x, int mb_y) { return blocks_[index(mb_x, mb_y)]; }
    std::span<const BlockRecord> blocks() const noexcept { return blocks_; }

private:
    std::size_t index(int mb_x, int mb_y) const;

    int frame_idx_ = 0;
    int mb_cols_ = 0;
    int mb_rows_ = 0;
    std::vector<BlockRecord> blocks_;
};

struct TraceFile {
    TraceHeader header;
    // Canonical order: frame, then mb_y, then mb_x.
    std::vector<BlockRecord> records;

    std::vector<FrameBlockMap> frames() const;
    FrameBlockMap frame(int frame_idx) const;
};

// Rate-distortion bookkeeping for one block: J = D + lambda * R.
struct RdCost {
    double lambda_value = 1.0;
    std::int64_t rate_bits = 0;
    double lambda_rate = 0.0;
    std::optional<double> distortion;
    std::optional<double> j_value;

    static RdCost from_rate(double lambda, std::int64_t bits);
    static RdCost with_distortion(double lambda, std::int64_t bits, double distortion);
};

// H.264 RDO Lagrangian, 0.852^((qp - 12) / 3). Throws RangeError outside [0, 51].
double lambda_of_qp(int qp);

double lambda_rate(const BlockRecord& record);

// Fraction of SKIP blocks across all given frames.
double skipped_block_rate(std::span<const FrameBlockMap> frames);
double skipped_block_rate(const TraceFile& trace);

// Total coded bits over width * height * frame_count.
double bits_per_pixel(const TraceFile& trace);

}  // namespace blockprnu
