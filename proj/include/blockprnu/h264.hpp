#pragma once

// H.264 Annex-B framing and parameter-set / slice-header syntax.
// Only the header subset needed for frame type and base QP is decoded;
// macroblock-layer data is never touched.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace blockprnu {

enum NalType : int {
    kNalSliceNonIdr = 1,
    kNalSliceIdr = 5,
    kNalSei = 6,
    kNalSps = 7,
    kNalPps = 8,
    kNalAud = 9,
};

struct NalUnit {
    int nal_ref_idc = 0;
    int nal_unit_type = 0;
    // RBSP bytes after the header byte, emulation prevention removed.
    std::vector<std::uint8_t> payload;
    // Escaped bytes as framed (header byte included).
    std::vector<std::uint8_t> raw;
    // Zero bytes preceding the 0x01 of this unit's start code (>= 2).
    int start_zeros = 3;
    // Zero bytes after the unit at end of stream.
    int trailing_zeros = 0;
};

// Splits an Annex-B byte stream. Throws MalformedStream / TruncatedUnit.
std::vector<NalUnit> split_nal_units(std::span<const std::uint8_t> stream);

// Re-frames units exactly as split_nal_units found them.
std::vector<std::uint8_t> join_nal_units(std::span<const NalUnit> units);

// Removes emulation_prevention_three_byte from an escaped NAL body.
std::vector<std::uint8_t> unescape_rbsp(std::span<const std::uint8_t> escaped);

struct Sps {
    int profile_idc = 0;
    int level_idc = 0;
    int sps_id = 0;
    int chroma_format_idc = 1;
    bool separate_colour_plane = false;
    int log2_max_frame_num = 4;
    int pic_order_cnt_type = 0;
    int log2_max_poc_lsb = 4;
    bool delta_pic_order_always_zero = false;
    int max_num_ref_frames = 0;
    int pic_width_in_mbs = 0;
    int pic_height_in_map_units = 0;
    bool frame_mbs_only = true;

    int width_in_mbs() const noexcept { return pic_width_in_mbs; }
    int height_in_mbs() const noexcept { return pic_height_in_map_units * (frame_mbs_only ? 1 : 2); }
};

struct Pps {
    int pps_id = 0;
    int sps_id = 0;
    bool entropy_coding_mode = false;
    bool bottom_field_pic_order_in_frame_present = false;
    int num_ref_idx_l0_default = 1;
    int num_ref_idx_l1_default = 1;
    bool weighted_pred = false;
    int weighted_bipred_idc = 0;
    int pic_init_qp_minus26 = 0;
    bool deblocking_filter_control_present = false;
    bool redundant_pic_cnt_present = false;
};

enum class SliceType : std::uint8_t { I, P, B };

struct SliceHeaderInfo {
    int frame_index = 0;
    SliceType slice_type = SliceType::I;
    int base_qp = 26;
    bool deblocking_disabled = false;
    int first_mb_in_slice = 0;
    int pps_id = 0;
    int frame_num = 0;
    bool idr = false;
};

// Parses Baseline / Main (and High without scaling matrices) SPS.
// Throws UnsupportedProfile for anything else.
Sps parse_sps(std::span<const std::uint8_t> rbsp);
Pps parse_pps(std::span<const std::uint8_t> rbsp);

struct ParameterSets {
    std::map<int, Sps> sps;
    std::map<int, Pps> pps;
};

// Slice header up to slice_qp_delta and the deblocking controls.
// Throws MissingParameterSet, UnsupportedProfile, RangeError (base QP outside [0, 51]).
SliceHeaderInfo parse_slice_header(const NalUnit& nal, const ParameterSets& context, int frame_index = 0);

// Frame-level view of a whole elementary stream: one entry per slice, frame
// ordinals advance whenever first_mb_in_slice restarts at 0.
struct StreamSummary {
    ParameterSets parameter_sets;
    std::vector<SliceHeaderInfo> slices;

    int frame_count() const noexcept;
};

StreamSummary parse_stream(std::span<const std::uint8_t> stream);

}  // namespace blockprnu
