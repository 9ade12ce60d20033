#include "blockprnu/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <sstream>
#include <tuple>

#include "blockprnu/text.hpp"

namespace blockprnu {

namespace {

template <typename Int>
bool parse_int(std::string_view text, Int& out) {
    text = trim(text);
    if (text.empty()) return false;
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, out);
    return res.ec == std::errc{} && res.ptr == end;
}

TraceHeader parse_header(std::string_view line, int line_no) {
    const auto bad = [&](const std::string& why) {
        fail(ErrorKind::SchemaError, "line " + std::to_string(line_no) + ": bad trace header (" + why + ")");
    };
    if (line.empty() || line.front() != '#') bad("missing '#'");
    line.remove_prefix(1);
    TraceHeader h;
    bool seen_w = false, seen_h = false, seen_mb = false, seen_frames = false;
    for (auto token : split(line, ' ')) {
        token = trim(token);
        if (token.empty()) continue;
        const auto eq = token.find('=');
        if (eq == std::string_view::npos) bad("token without '='");
        const auto key = token.substr(0, eq);
        int value = 0;
        if (!parse_int(token.substr(eq + 1), value)) bad("non-integer value for " + std::string(key));
        if (key == "w") { h.width = value; seen_w = true; }
        else if (key == "h") { h.height = value; seen_h = true; }
        else if (key == "mb") { h.macroblock_size = value; seen_mb = true; }
        else if (key == "frames") { h.frame_count = value; seen_frames = true; }
        else bad("unknown key " + std::string(key));
    }
    if (!seen_w || !seen_h || !seen_mb || !seen_frames) bad("requires w, h, mb, frames");
    if (h.macroblock_size != kMacroblockSize) bad("mb must be 16");
    if (h.width < kMacroblockSize || h.height < kMacroblockSize) bad("frame smaller than one macroblock");
    if (h.frame_count < 0) bad("negative frame count");
    return h;
}

std::string triple(int f, int x, int y) {
    return "(" + std::to_string(f) + ", " + std::to_string(x) + ", " + std::to_string(y) + ")";
}

}  // namespace

TraceFile parse_trace(std::string_view text) {
    TraceFile trace;
    bool have_header = false;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const auto line = trim(raw);
        if (line.empty()) continue;
        if (!have_header) {
            trace.header = parse_header(line, line_no);
            have_header = true;
            continue;
        }
        if (line.front() == '#') fail(ErrorKind::SchemaError, "line " + std::to_string(line_no) + ": second header");
        const auto fields = split(line, ',');
        if (fields.size() != 6) {
            fail(ErrorKind::SchemaError, "line " + std::to_string(line_no) + ": expected 6 fields, got " +
                                             std::to_string(fields.size()));
        }
        BlockRecord r;
        const auto type = parse_block_type(trim(fields[3]));
        if (!parse_int(fields[0], r.frame_idx) || !parse_int(fields[1], r.mb_x) || !parse_int(fields[2], r.mb_y) ||
            !type || !parse_int(fields[4], r.qp) || !parse_int(fields[5], r.bits)) {
            fail(ErrorKind::SchemaError, "line " + std::to_string(line_no) + ": malformed record");
        }
        r.type = *type;
        validate_record(r);
        trace.records.push_back(r);
    }
    if (!have_header) fail(ErrorKind::SchemaError, "empty trace (no header)");

    const auto& h = trace.header;
    const int cols = h.mb_cols();
    const int rows = h.mb_rows();
    for (const auto& r : trace.records) {
        if (r.frame_idx < 0 || r.frame_idx >= h.frame_count || r.mb_x < 0 || r.mb_x >= cols || r.mb_y < 0 ||
            r.mb_y >= rows) {
            fail(ErrorKind::SchemaError, "block " + triple(r.frame_idx, r.mb_x, r.mb_y) + " outside the frame grid");
        }
    }
    std::sort(trace.records.begin(), trace.records.end(), [](const BlockRecord& a, const BlockRecord& b) {
        return std::tie(a.frame_idx, a.mb_y, a.mb_x) < std::tie(b.frame_idx, b.mb_y, b.mb_x);
    });
    std::size_t i = 0;
    for (int f = 0; f < h.frame_count; ++f) {
        for (int y = 0; y < rows; ++y) {
            for (int x = 0; x < cols; ++x) {
                if (i >= trace.records.size()) fail(ErrorKind::CoverageGap, "missing block " + triple(f, x, y));
                const auto& r = trace.records[i];
                if (r.frame_idx != f || r.mb_y != y || r.mb_x != x) {
                    if (std::tie(r.frame_idx, r.mb_y, r.mb_x) < std::tie(f, y, x)) {
                        fail(ErrorKind::SchemaError, "duplicate block " + triple(r.frame_idx, r.mb_x, r.mb_y));
                    }
                    fail(ErrorKind::CoverageGap, "missing block " + triple(f, x, y));
                }
                ++i;
            }
        }
    }
    if (i != trace.records.size()) {
        const auto& r = trace.records[i];
        fail(ErrorKind::SchemaError, "duplicate block " + triple(r.frame_idx, r.mb_x, r.mb_y));
    }
    return trace;
}

TraceFile load_trace(const std::filesystem::path& path) { return parse_trace(read_text_file(path)); }

std::string serialize_trace(const TraceFile& trace) {
    std::string out;
    out.reserve(32 + trace.records.size() * 20);
    const auto& h = trace.header;
    out += "#w=" + std::to_string(h.width) + " h=" + std::to_string(h.height) + " mb=" +
           std::to_string(h.macroblock_size) + " frames=" + std::to_string(h.frame_count) + "\n";
    auto sorted = trace.records;
    std::sort(sorted.begin(), sorted.end(), [](const BlockRecord& a, const BlockRecord& b) {
        return std::tie(a.frame_idx, a.mb_y, a.mb_x) < std::tie(b.frame_idx, b.mb_y, b.mb_x);
    });
    for (const auto& r : sorted) {
        out += std::to_string(r.frame_idx);
        out += ',';
        out += std::to_string(r.mb_x);
        out += ',';
        out += std::to_string(r.mb_y);
        out += ',';
        out += to_string(r.type);
        out += ',';
        out += std::to_string(r.qp);
        out += ',';
        out += std::to_string(r.bits);
        out += '\n';
    }
    return out;
}

void save_trace(const std::filesystem::path& path, const TraceFile& trace) {
    write_text_file(path, serialize_trace(trace));
}

std::vector<std::string> cross_check(const TraceFile& trace, const StreamSummary& stream) {
    if (stream.frame_count() != trace.header.frame_count) {
        fail(ErrorKind::SchemaError, "trace has " + std::to_string(trace.header.frame_count) +
                                         " frames, bitstream has " + std::to_string(stream.frame_count()));
    }
    std::vector<int> base_qp(static_cast<std::size_t>(trace.header.frame_count), -1);
    for (const auto& s : stream.slices) {
        if (base_qp[static_cast<std::size_t>(s.frame_index)] < 0) base_qp[static_cast<std::size_t>(s.frame_index)] = s.base_qp;
    }
    std::vector<std::string> warnings;
    for (const auto& r : trace.records) {
        const int qp = base_qp[static_cast<std::size_t>(r.frame_idx)];
        if (qp >= 0 && std::abs(r.qp - qp) > 26) {
            warnings.push_back("block " + triple(r.frame_idx, r.mb_x, r.mb_y) + " qp " + std::to_string(r.qp) +
                               " far from slice base qp " + std::to_string(qp));
        }
    }
    return warnings;
}

// =============================================================================
// Raw video
// =============================================================================

std::size_t yuv420_frame_bytes(int width, int height) {
    const auto w = static_cast<std::size_t>(width);
    const auto h = static_cast<std::size_t>(height);
    return w * h + 2 * (((w + 1) / 2) * ((h + 1) / 2));
}

RawVideoReader::RawVideoReader(const std::filesystem::path& path, int width, int height)
    : in_(path, std::ios::binary), path_(path), width_(width), height_(height) {
    if (width <= 0 || height <= 0) fail(ErrorKind::Usage, "raw video dimensions must be positive");
    if (!in_) fail(ErrorKind::Io, "cannot open " + path.string());
    std::error_code ec;
    const auto bytes = std::filesystem::file_size(path, ec);
    if (ec) fail(ErrorKind::Io, "cannot stat " + path.string());
    const auto frame = yuv420_frame_bytes(width, height);
    if (bytes % frame != 0) {
        fail(ErrorKind::SchemaError, path.string() + ": size " + std::to_string(bytes) +
                                         " is not a multiple of the 4:2:0 frame size " + std::to_string(frame));
    }
    frame_count_ = static_cast<int>(bytes / frame);
    scratch_.resize(frame - static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
}

bool RawVideoReader::next(Picture& out) {
    if (cursor_ >= frame_count_) return false;
    out.luma = Plane<std::uint8_t>(width_, height_);
    out.frame_idx = cursor_;
    in_.read(reinterpret_cast<char*>(out.luma.values().data()), static_cast<std::streamsize>(out.luma.size()));
    in_.read(reinterpret_cast<char*>(scratch_.data()), static_cast<std::streamsize>(scratch_.size()));
    if (!in_) fail(ErrorKind::Io, "short read in " + path_.string());
    ++cursor_;
    return true;
}

RawVideoWriter::RawVideoWriter(const std::filesystem::path& path, int width, int height)
    : out_(path, std::ios::binary | std::ios::trunc), width_(width), height_(height),
      chroma_(yuv420_frame_bytes(width, height) - static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
              128) {
    if (!out_) fail(ErrorKind::Io, "cannot create " + path.string());
}

void RawVideoWriter::write(const Picture& picture) {
    if (picture.width() != width_ || picture.height() != height_) {
        fail(ErrorKind::DimensionMismatch, "raw video frame size changed mid-stream");
    }
    out_.write(reinterpret_cast<const char*>(picture.luma.values().data()),
               static_cast<std::streamsize>(picture.luma.size()));
    out_.write(reinterpret_cast<const char*>(chroma_.data()), static_cast<std::streamsize>(chroma_.size()));
    if (!out_) fail(ErrorKind::Io, "write failed");
}

std::vector<Picture> read_raw_video(const std::filesystem::path& path, int width, int height) {
    RawVideoReader reader(path, width, height);
    std::vector<Picture> frames;
    Picture p;
    while (reader.next(p)) frames.push_back(std::move(p));
    return frames;
}

void write_raw_video(const std::filesystem::path& path, const std::vector<Picture>& frames) {
    if (frames.empty()) fail(ErrorKind::EmptyInput, "no frames to write");
    RawVideoWriter writer(path, frames.front().width(), frames.front().height());
    for (const auto& f : frames) writer.write(f);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot create " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace blockprnu
