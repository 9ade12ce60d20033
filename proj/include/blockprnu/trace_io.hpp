#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "blockprnu/h264.hpp"
#include "blockprnu/plane.hpp"
#include "blockprnu/trace.hpp"

namespace blockprnu {

// Trace text format:
//   #w=<px> h=<px> mb=16 frames=<n>
//   frame_idx,mb_x,mb_y,type,qp,bits
// Throws SchemaError, CoverageGap, RangeError.
TraceFile parse_trace(std::string_view text);
TraceFile load_trace(const std::filesystem::path& path);

// Canonical form: header, then rows ordered by frame, mb_y, mb_x.
std::string serialize_trace(const TraceFile& trace);
void save_trace(const std::filesystem::path& path, const TraceFile& trace);

// Checks a validated trace against parsed slice headers. Frame count mismatch
// throws SchemaError; blocks whose QP lies more than 26 from their slice base
// QP produce warnings.
std::vector<std::string> cross_check(const TraceFile& trace, const StreamSummary& stream);

// =============================================================================
// Planar 4:2:0 8-bit raw video; only luma is read.
// =============================================================================

std::size_t yuv420_frame_bytes(int width, int height);

class RawVideoReader {
public:
    RawVideoReader(const std::filesystem::path& path, int width, int height);

    int frame_count() const noexcept { return frame_count_; }
    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    // Sequential read; returns false at end of stream.
    bool next(Picture& out);

private:
    std::ifstream in_;
    std::filesystem::path path_;
    int width_ = 0;
    int height_ = 0;
    int frame_count_ = 0;
    int cursor_ = 0;
    std::vector<std::uint8_t> scratch_;
};

class RawVideoWriter {
public:
    RawVideoWriter(const std::filesystem::path& path, int width, int height);
    void write(const Picture& picture);

private:
    std::ofstream out_;
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> chroma_;
};

std::vector<Picture> read_raw_video(const std::filesystem::path& path, int width, int height);
void write_raw_video(const std::filesystem::path& path, const std::vector<Picture>& frames);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace blockprnu
