#include "blockprnu/h264.hpp"

#include <string>

#include "blockprnu/bit_reader.hpp"
#include "blockprnu/error.hpp"
#include "blockprnu/trace.hpp"

namespace blockprnu {

// =============================================================================
// Annex-B framing
// =============================================================================

std::vector<std::uint8_t> unescape_rbsp(std::span<const std::uint8_t> escaped) {
    std::vector<std::uint8_t> out;
    out.reserve(escaped.size());
    int zeros = 0;
    for (const std::uint8_t byte : escaped) {
        if (zeros >= 2 && byte == 0x03) {
            zeros = 0;
            continue;
        }
        out.push_back(byte);
        zeros = byte == 0 ? zeros + 1 : 0;
    }
    return out;
}

namespace {

// Index of the 0x01 of the next 00 00 01 at or after `from`, or npos.
std::size_t find_start_code(std::span<const std::uint8_t> s, std::size_t from) {
    for (std::size_t i = from; i + 2 < s.size(); ++i) {
        if (s[i] == 0 && s[i + 1] == 0 && s[i + 2] == 1) return i + 2;
    }
    return std::string::npos;
}

void check_escaped_body(std::span<const std::uint8_t> raw, std::size_t unit_offset) {
    int zeros = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto byte = raw[i];
        if (zeros >= 2 && byte <= 0x02) {
            fail(ErrorKind::MalformedStream,
                 "forbidden 00 00 0" + std::to_string(byte) + " inside NAL unit at byte " +
                     std::to_string(unit_offset + i));
        }
        if (zeros >= 2 && byte == 0x03) {
            zeros = 0;
            continue;
        }
        zeros = byte == 0 ? zeros + 1 : 0;
    }
}

}  // namespace

std::vector<NalUnit> split_nal_units(std::span<const std::uint8_t> stream) {
    std::vector<NalUnit> units;
    if (stream.empty()) return units;

    std::size_t lead = 0;
    while (lead < stream.size() && stream[lead] == 0) ++lead;
    if (lead == stream.size()) fail(ErrorKind::MalformedStream, "stream contains only zero bytes");
    if (lead < 2 || stream[lead] != 0x01) fail(ErrorKind::MalformedStream, "no start code at stream head");

    int start_zeros = static_cast<int>(lead);
    std::size_t body = lead + 1;
    while (true) {
        const std::size_t next = find_start_code(stream, body);
        std::size_t end = next == std::string::npos ? stream.size() : next - 2;
        while (end > body && stream[end - 1] == 0) --end;

        NalUnit unit;
        unit.start_zeros = start_zeros;
        if (end == body) {
            fail(ErrorKind::TruncatedUnit, "start code at byte " + std::to_string(body - 1) + " has no NAL header");
        }
        unit.raw.assign(stream.begin() + static_cast<std::ptrdiff_t>(body),
                        stream.begin() + static_cast<std::ptrdiff_t>(end));
        if ((unit.raw[0] & 0x80) != 0) {
            fail(ErrorKind::MalformedStream, "forbidden_zero_bit set at byte " + std::to_string(body));
        }
        check_escaped_body(unit.raw, body);
        unit.nal_ref_idc = (unit.raw[0] >> 5) & 0x03;
        unit.nal_unit_type = unit.raw[0] & 0x1F;
        unit.payload = unescape_rbsp(std::span(unit.raw).subspan(1));

        if (next == std::string::npos) {
            unit.trailing_zeros = static_cast<int>(stream.size() - end);
            units.push_back(std::move(unit));
            break;
        }
        start_zeros = static_cast<int>(next - end);
        units.push_back(std::move(unit));
        body = next + 1;
        if (body >= stream.size()) fail(ErrorKind::TruncatedUnit, "stream ends directly after a start code");
    }
    return units;
}

std::vector<std::uint8_t> join_nal_units(std::span<const NalUnit> units) {
    std::vector<std::uint8_t> out;
    for (const auto& u : units) {
        out.insert(out.end(), static_cast<std::size_t>(u.start_zeros), 0x00);
        out.push_back(0x01);
        out.insert(out.end(), u.raw.begin(), u.raw.end());
        out.insert(out.end(), static_cast<std::size_t>(u.trailing_zeros), 0x00);
    }
    return out;
}

// =============================================================================
// Parameter sets
// =============================================================================

namespace {

bool has_high_profile_fields(int profile_idc) {
    switch (profile_idc) {
        case 100: case 110: case 122: case 244: case 44:
        case 83: case 86: case 118: case 128: case 138: case 139: case 134: case 135:
            return true;
        default:
            return false;
    }
}

int checked_ue(BitReader& br, std::uint32_t max, const char* field) {
    const auto v = br.read_ue();
    if (v > max) fail(ErrorKind::MalformedStream, std::string(field) + " = " + std::to_string(v) + " out of range");
    return static_cast<int>(v);
}

}  // namespace

Sps parse_sps(std::span<const std::uint8_t> rbsp) {
    BitReader br(rbsp);
    Sps sps;
    sps.profile_idc = static_cast<int>(br.read_bits(8));
    br.skip_bits(8);  // constraint_set flags + reserved
    sps.level_idc = static_cast<int>(br.read_bits(8));
    sps.sps_id = checked_ue(br, 31, "seq_parameter_set_id");

    if (sps.profile_idc != 66 && sps.profile_idc != 77 && sps.profile_idc != 100) {
        fail(ErrorKind::UnsupportedProfile, "profile_idc " + std::to_string(sps.profile_idc));
    }
    if (has_high_profile_fields(sps.profile_idc)) {
        sps.chroma_format_idc = checked_ue(br, 3, "chroma_format_idc");
        if (sps.chroma_format_idc == 3) sps.separate_colour_plane = br.read_flag();
        checked_ue(br, 6, "bit_depth_luma_minus8");
        checked_ue(br, 6, "bit_depth_chroma_minus8");
        br.skip_bits(1);  // qpprime_y_zero_transform_bypass_flag
        if (br.read_flag()) fail(ErrorKind::UnsupportedProfile, "sequence scaling matrices");
    }
    sps.log2_max_frame_num = checked_ue(br, 12, "log2_max_frame_num_minus4") + 4;
    sps.pic_order_cnt_type = checked_ue(br, 2, "pic_order_cnt_type");
    if (sps.pic_order_cnt_type == 0) {
        sps.log2_max_poc_lsb = checked_ue(br, 12, "log2_max_pic_order_cnt_lsb_minus4") + 4;
    } else if (sps.pic_order_cnt_type == 1) {
        sps.delta_pic_order_always_zero = br.read_flag();
        br.read_se();  // offset_for_non_ref_pic
        br.read_se();  // offset_for_top_to_bottom_field
        const int cycle = checked_ue(br, 255, "num_ref_frames_in_pic_order_cnt_cycle");
        for (int i = 0; i < cycle; ++i) br.read_se();
    }
    sps.max_num_ref_frames = checked_ue(br, 16, "max_num_ref_frames");
    br.skip_bits(1);  // gaps_in_frame_num_value_allowed_flag
    sps.pic_width_in_mbs = checked_ue(br, 1023, "pic_width_in_mbs_minus1") + 1;
    sps.pic_height_in_map_units = checked_ue(br, 1023, "pic_height_in_map_units_minus1") + 1;
    sps.frame_mbs_only = br.read_flag();
    return sps;
}

Pps parse_pps(std::span<const std::uint8_t> rbsp) {
    BitReader br(rbsp);
    Pps pps;
    pps.pps_id = checked_ue(br, 255, "pic_parameter_set_id");
    pps.sps_id = checked_ue(br, 31, "seq_parameter_set_id");
    pps.entropy_coding_mode = br.read_flag();
    pps.bottom_field_pic_order_in_frame_present = br.read_flag();
    if (br.read_ue() != 0) fail(ErrorKind::UnsupportedProfile, "slice groups (FMO)");
    pps.num_ref_idx_l0_default = checked_ue(br, 31, "num_ref_idx_l0_default_active_minus1") + 1;
    pps.num_ref_idx_l1_default = checked_ue(br, 31, "num_ref_idx_l1_default_active_minus1") + 1;
    pps.weighted_pred = br.read_flag();
    pps.weighted_bipred_idc = static_cast<int>(br.read_bits(2));
    pps.pic_init_qp_minus26 = br.read_se();
    if (pps.pic_init_qp_minus26 < -26 || pps.pic_init_qp_minus26 > 25) {
        fail(ErrorKind::MalformedStream, "pic_init_qp_minus26 = " + std::to_string(pps.pic_init_qp_minus26));
    }
    br.read_se();  // pic_init_qs_minus26
    br.read_se();  // chroma_qp_index_offset
    pps.deblocking_filter_control_present = br.read_flag();
    br.skip_bits(1);  // constrained_intra_pred_flag
    pps.redundant_pic_cnt_present = br.read_flag();
    return pps;
}

// =============================================================================
// Slice header
// =============================================================================

namespace {

void skip_ref_pic_list_modification(BitReader& br) {
    if (!br.read_flag()) return;
    while (true) {
        const auto idc = br.read_ue();
        if (idc == 3) return;
        if (idc > 5) fail(ErrorKind::MalformedStream, "modification_of_pic_nums_idc " + std::to_string(idc));
        br.read_ue();  // abs_diff_pic_num_minus1 / long_term_pic_num / abs_diff_view_idx
    }
}

void skip_pred_weight_table(BitReader& br, int chroma_array_type, int l0, int l1, bool is_b) {
    br.read_ue();  // luma_log2_weight_denom
    if (chroma_array_type != 0) br.read_ue();
    const auto skip_list = [&](int n) {
        for (int i = 0; i < n; ++i) {
            if (br.read_flag()) {
                br.read_se();
                br.read_se();
            }
            if (chroma_array_type != 0 && br.read_flag()) {
                for (int j = 0; j < 4; ++j) br.read_se();
            }
        }
    };
    skip_list(l0);
    if (is_b) skip_list(l1);
}

void skip_dec_ref_pic_marking(BitReader& br, bool idr) {
    if (idr) {
        br.skip_bits(2);  // no_output_of_prior_pics_flag, long_term_reference_flag
        return;
    }
    if (!br.read_flag()) return;  // adaptive_ref_pic_marking_mode_flag
    for (int guard = 0; guard < 66; ++guard) {
        const auto op = br.read_ue();
        if (op == 0) return;
        if (op > 6) fail(ErrorKind::MalformedStream, "memory_management_control_operation " + std::to_string(op));
        if (op == 1 || op == 3) br.read_ue();
        if (op == 2) br.read_ue();
        if (op == 3 || op == 6) br.read_ue();
        if (op == 4) br.read_ue();
    }
    fail(ErrorKind::MalformedStream, "unterminated MMCO list");
}

}  // namespace

SliceHeaderInfo parse_slice_header(const NalUnit& nal, const ParameterSets& context, int frame_index) {
    if (nal.nal_unit_type != kNalSliceNonIdr && nal.nal_unit_type != kNalSliceIdr) {
        fail(ErrorKind::UnsupportedProfile, "NAL type " + std::to_string(nal.nal_unit_type) + " is not a coded slice");
    }
    BitReader br(nal.payload);
    SliceHeaderInfo info;
    info.frame_index = frame_index;
    info.idr = nal.nal_unit_type == kNalSliceIdr;
    info.first_mb_in_slice = static_cast<int>(br.read_ue());

    const auto raw_type = br.read_ue();
    if (raw_type > 9) fail(ErrorKind::MalformedStream, "slice_type " + std::to_string(raw_type));
    switch (raw_type % 5) {
        case 0: info.slice_type = SliceType::P; break;
        case 1: info.slice_type = SliceType::B; break;
        case 2: info.slice_type = SliceType::I; break;
        default: fail(ErrorKind::UnsupportedProfile, "SP/SI slices");
    }
    info.pps_id = static_cast<int>(br.read_ue());

    const auto pps_it = context.pps.find(info.pps_id);
    if (pps_it == context.pps.end()) {
        fail(ErrorKind::MissingParameterSet, "PPS " + std::to_string(info.pps_id) + " not received");
    }
    const Pps& pps = pps_it->second;
    const auto sps_it = context.sps.find(pps.sps_id);
    if (sps_it == context.sps.end()) {
        fail(ErrorKind::MissingParameterSet, "SPS " + std::to_string(pps.sps_id) + " not received");
    }
    const Sps& sps = sps_it->second;

    if (sps.separate_colour_plane) br.skip_bits(2);
    info.frame_num = static_cast<int>(br.read_bits(sps.log2_max_frame_num));
    bool field_pic = false;
    if (!sps.frame_mbs_only) {
        field_pic = br.read_flag();
        if (field_pic) br.skip_bits(1);  // bottom_field_flag
    }
    if (info.idr) br.read_ue();  // idr_pic_id
    if (sps.pic_order_cnt_type == 0) {
        br.skip_bits(static_cast<std::size_t>(sps.log2_max_poc_lsb));
        if (pps.bottom_field_pic_order_in_frame_present && !field_pic) br.read_se();
    }
    if (sps.pic_order_cnt_type == 1 && !sps.delta_pic_order_always_zero) {
        br.read_se();
        if (pps.bottom_field_pic_order_in_frame_present && !field_pic) br.read_se();
    }
    if (pps.redundant_pic_cnt_present) br.read_ue();

    const bool is_b = info.slice_type == SliceType::B;
    const bool is_p = info.slice_type == SliceType::P;
    if (is_b) br.skip_bits(1);  // direct_spatial_mv_pred_flag
    int l0 = pps.num_ref_idx_l0_default;
    int l1 = pps.num_ref_idx_l1_default;
    if (is_p || is_b) {
        if (br.read_flag()) {
            l0 = checked_ue(br, 31, "num_ref_idx_l0_active_minus1") + 1;
            if (is_b) l1 = checked_ue(br, 31, "num_ref_idx_l1_active_minus1") + 1;
        }
    }
    if (info.slice_type != SliceType::I) skip_ref_pic_list_modification(br);
    if (is_b) skip_ref_pic_list_modification(br);

    if ((pps.weighted_pred && is_p) || (pps.weighted_bipred_idc == 1 && is_b)) {
        const int chroma_array_type = sps.separate_colour_plane ? 0 : sps.chroma_format_idc;
        skip_pred_weight_table(br, chroma_array_type, l0, l1, is_b);
    }
    if (nal.nal_ref_idc != 0) skip_dec_ref_pic_marking(br, info.idr);
    if (pps.entropy_coding_mode && info.slice_type != SliceType::I) checked_ue(br, 2, "cabac_init_idc");

    const int slice_qp_delta = br.read_se();
    info.base_qp = 26 + pps.pic_init_qp_minus26 + slice_qp_delta;
    if (info.base_qp < kMinQp || info.base_qp > kMaxQp) {
        fail(ErrorKind::RangeError, "slice QP " + std::to_string(info.base_qp) + " outside [0,51]");
    }
    if (pps.deblocking_filter_control_present) {
        const auto idc = checked_ue(br, 2, "disable_deblocking_filter_idc");
        info.deblocking_disabled = idc == 1;
        if (idc != 1) {
            br.read_se();
            br.read_se();
        }
    }
    return info;
}

int StreamSummary::frame_count() const noexcept {
    return slices.empty() ? 0 : slices.back().frame_index + 1;
}

StreamSummary parse_stream(std::span<const std::uint8_t> stream) {
    StreamSummary summary;
    int frame = -1;
    for (const auto& unit : split_nal_units(stream)) {
        switch (unit.nal_unit_type) {
            case kNalSps: {
                auto sps = parse_sps(unit.payload);
                summary.parameter_sets.sps[sps.sps_id] = sps;
                break;
            }
            case kNalPps: {
                auto pps = parse_pps(unit.payload);
                summary.parameter_sets.pps[pps.pps_id] = pps;
                break;
            }
            case kNalSliceNonIdr:
            case kNalSliceIdr: {
                auto info = parse_slice_header(unit, summary.parameter_sets, frame < 0 ? 0 : frame);
                if (info.first_mb_in_slice == 0 || frame < 0) {
                    ++frame;
                    info.frame_index = frame;
                }
                summary.slices.push_back(info);
                break;
            }
            default:
                break;
        }
    }
    return summary;
}

}  // namespace blockprnu
