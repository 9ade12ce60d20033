#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "blockprnu/trace_io.hpp"
#include "support/check.hpp"
#include "support/h264_writer.hpp"
#include "support/oracles.hpp"

using namespace blockprnu;
using namespace blockprnu::testing;

namespace {

TraceFile random_trace(Rng& rng, int width, int height, int frames) {
    TraceFile t;
    t.header = {width, height, kMacroblockSize, frames};
    for (int f = 0; f < frames; ++f) {
        const auto m = random_block_map(rng, f, t.header.mb_cols(), t.header.mb_rows());
        t.records.insert(t.records.end(), m.blocks().begin(), m.blocks().end());
    }
    return t;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("blockprnu_test_" + name);
}

}  // namespace

TEST_SUITE("trace") {

TEST_CASE("lambda matches the closed form and decreases in QP") {
    for (int qp = kMinQp; qp <= kMaxQp; ++qp) {
        const double expected = std::exp(std::log(0.852) * (qp - 12) / 3.0);
        CHECK(std::abs(lambda_of_qp(qp) - expected) <= 1e-12 * expected);
        if (qp > 0) CHECK(lambda_of_qp(qp) < lambda_of_qp(qp - 1));
    }
    CHECK(lambda_of_qp(12) == 1.0);
    CHECK(kind_name(error_kind([] { lambda_of_qp(-1); })) == "RangeError");
    CHECK(kind_name(error_kind([] { lambda_of_qp(52); })) == "RangeError");
}

TEST_CASE("lambda*R is homogeneous in bits") {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        BlockRecord r;
        r.type = BlockType::P;
        r.qp = uniform_int(rng, 0, 51);
        r.bits = uniform_int(rng, 0, 100000);
        BlockRecord d = r;
        d.bits *= 2;
        CHECK(lambda_rate(d) == doctest::Approx(2.0 * lambda_rate(r)).epsilon(1e-12));
    }
}

TEST_CASE("RdCost keeps J = D + lambda*R") {
    const auto c = RdCost::with_distortion(0.5, 120, 33.0);
    CHECK(c.lambda_rate == 60.0);
    REQUIRE(c.j_value.has_value());
    CHECK(*c.j_value == 93.0);
    CHECK_FALSE(RdCost::from_rate(0.5, 10).distortion.has_value());
}

TEST_CASE("record validation") {
    BlockRecord r;
    r.qp = 52;
    CHECK(kind_name(error_kind([&] { validate_record(r); })) == "RangeError");
    r.qp = 20;
    r.bits = -1;
    CHECK(kind_name(error_kind([&] { validate_record(r); })) == "RangeError");
    r.type = BlockType::Skip;
    r.bits = kMaxSkipBits + 1;
    CHECK(kind_name(error_kind([&] { validate_record(r); })) == "RangeError");
    r.bits = kMaxSkipBits;
    CHECK_FALSE(error_kind([&] { validate_record(r); }).has_value());
}

TEST_CASE("serialize(parse(text)) is the canonical form for generated traces") {
    Rng rng(17);
    for (int t = 0; t < 40; ++t) {
        const int w = 16 * uniform_int(rng, 1, 6) + uniform_int(rng, 0, 15);
        const int h = 16 * uniform_int(rng, 1, 6) + uniform_int(rng, 0, 15);
        const auto trace = random_trace(rng, w, h, uniform_int(rng, 1, 4));
        const std::string canonical = serialize_trace(trace);

        auto shuffled = trace.records;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        std::string messy = "  #w=" + std::to_string(w) + "  h=" + std::to_string(h) + " mb=16 frames=" +
                            std::to_string(trace.header.frame_count) + "\r\n\n";
        for (const auto& r : shuffled) {
            messy += std::to_string(r.frame_idx) + ", " + std::to_string(r.mb_x) + "," + std::to_string(r.mb_y) +
                     "," + std::string(to_string(r.type)) + " ," + std::to_string(r.qp) + "," +
                     std::to_string(r.bits) + "\r\n";
        }
        const auto parsed = parse_trace(messy);
        REQUIRE(serialize_trace(parsed) == canonical);
        REQUIRE(parse_trace(canonical).records == trace.records);
        REQUIRE(parsed.header == trace.header);
    }
}

TEST_CASE("trace file round trip through disk") {
    Rng rng(2);
    const auto trace = random_trace(rng, 48, 32, 3);
    const auto path = temp_path("trace.txt");
    save_trace(path, trace);
    const auto loaded = load_trace(path);
    CHECK(loaded.records == trace.records);
    std::filesystem::remove(path);
}

TEST_CASE("cropped edges shrink the macroblock grid") {
    TraceHeader h{100, 40, 16, 1};
    CHECK(h.mb_cols() == 6);
    CHECK(h.mb_rows() == 2);
    CHECK(h.blocks_per_frame() == 12);
}

TEST_CASE("trace schema errors") {
    const std::string header = "#w=32 h=16 mb=16 frames=1\n";
    const auto kind = [](const std::string& text) { return kind_name(error_kind([&] { parse_trace(text); })); };
    CHECK(kind("") == "SchemaError");
    CHECK(kind("#w=32 h=16 mb=8 frames=1\n") == "SchemaError");
    CHECK(kind("#w=32 h=16 frames=1\n") == "SchemaError");
    CHECK(kind("#w=32 h=16 mb=16 frames=1 depth=8\n") == "SchemaError");
    CHECK(kind("#w=8 h=16 mb=16 frames=1\n") == "SchemaError");
    CHECK(kind("w=32 h=16 mb=16 frames=1\n") == "SchemaError");
    CHECK(kind(header + "0,0,0,P,20,100\n") == "CoverageGap");
    CHECK(kind(header + "0,0,0,P,20,100\n0,1,0,P,20,100\n0,1,0,P,20,100\n") == "SchemaError");
    CHECK(kind(header + "0,0,0,P,20,100\n0,2,0,P,20,100\n") == "SchemaError");
    CHECK(kind(header + "0,0,0,P,20,100\n0,1,0,X,20,100\n") == "SchemaError");
    CHECK(kind(header + "0,0,0,P,20,100\n0,1,0,P,20\n") == "SchemaError");
    CHECK(kind(header + "0,0,0,P,20,100\n0,1,0,P,20.5,100\n") == "SchemaError");
    CHECK(kind(header + "0,0,0,P,20,100\n0,1,0,P,52,100\n") == "RangeError");
    CHECK(kind(header + "0,0,0,P,20,100\n0,1,0,SKIP,20,64\n") == "RangeError");
    CHECK(kind(header + "0,0,0,P,20,100\n#w=32 h=16 mb=16 frames=1\n") == "SchemaError");
    CHECK(kind(header + "0,0,0,P,20,100\n0,1,0,B,20,100\n") == "none");
}

TEST_CASE("skipped block rate is a fraction and ignores frame order") {
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
        const auto trace = random_trace(rng, 64, 48, 5);
        auto frames = trace.frames();
        const double a = skipped_block_rate(frames);
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
        std::shuffle(frames.begin(), frames.end(), rng);
        CHECK(skipped_block_rate(frames) == a);
        CHECK(skipped_block_rate(trace) == doctest::Approx(a).epsilon(1e-15));
    }
}

TEST_CASE("bits per pixel counts every block") {
    TraceFile t;
    t.header = {32, 16, 16, 2};
    for (int f = 0; f < 2; ++f) {
        for (int x = 0; x < 2; ++x) t.records.push_back({f, x, 0, x == 0 ? BlockType::Skip : BlockType::P, 30, x == 0 ? 1 : 511});
    }
    CHECK(bits_per_pixel(t) == doctest::Approx(1024.0 / (32 * 16 * 2)));
    CHECK(skipped_block_rate(t) == 0.5);
}

TEST_CASE("frame block maps follow the records") {
    Rng rng(4);
    const auto trace = random_trace(rng, 64, 32, 3);
    const auto frames = trace.frames();
    REQUIRE(frames.size() == 3);
    for (const auto& r : trace.records) {
        CHECK(frames[static_cast<std::size_t>(r.frame_idx)].at(r.mb_x, r.mb_y) == r);
        CHECK(trace.frame(r.frame_idx).at(r.mb_x, r.mb_y) == r);
    }
    CHECK(kind_name(error_kind([&] { (void)frames[0].at(4, 0); })) == "RangeError");
}

TEST_CASE("cross-check against slice headers") {
    SpsParams sps;
    PpsParams pps;
    std::vector<std::uint8_t> stream;
    append_nal(stream, 3, kNalSps, write_sps(sps));
    append_nal(stream, 3, kNalPps, write_pps(pps));
    for (int f = 0; f < 2; ++f) {
        SliceParams s;
        s.idr = f == 0;
        s.slice_type = f == 0 ? 2 : 0;
        s.frame_num = f;
        s.slice_qp_delta = f == 0 ? -6 : 4;
        append_nal(stream, 3, s.idr ? kNalSliceIdr : kNalSliceNonIdr, write_slice(s, sps, pps));
    }
    const auto summary = parse_stream(stream);

    TraceFile t;
    t.header = {16, 16, 16, 2};
    // Base QPs are 20 and 30.
    t.records = {{0, 0, 0, BlockType::I, 46, 100}, {1, 0, 0, BlockType::P, 4, 40}};
    CHECK(cross_check(t, summary).empty());
    t.records[1].qp = 3;
    CHECK(cross_check(t, summary).size() == 1);
    t.records[0].qp = 47;
    CHECK(cross_check(t, summary).size() == 2);
    t.header.frame_count = 3;
    CHECK(kind_name(error_kind([&] { cross_check(t, summary); })) == "SchemaError");
}

TEST_CASE("raw 4:2:0 video keeps luma and rejects partial frames") {
    Rng rng(9);
    std::vector<Picture> frames;
    for (int i = 0; i < 3; ++i) {
        frames.push_back(random_picture(rng, 34, 18));
        frames.back().frame_idx = i;
    }
    CHECK(yuv420_frame_bytes(34, 18) == 34 * 18 + 2 * 17 * 9);
    CHECK(yuv420_frame_bytes(33, 17) == 33 * 17 + 2 * 17 * 9);
    const auto path = temp_path("video.yuv");
    write_raw_video(path, frames);
    const auto back = read_raw_video(path, 34, 18);
    REQUIRE(back.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(back[static_cast<std::size_t>(i)].luma == frames[static_cast<std::size_t>(i)].luma);
        CHECK(back[static_cast<std::size_t>(i)].frame_idx == i);
    }
    CHECK(kind_name(error_kind([&] { read_raw_video(path, 32, 18); })) == "SchemaError");
    CHECK(kind_name(error_kind([&] { read_raw_video(temp_path("missing.yuv"), 32, 18); })) == "IoError");
    std::filesystem::remove(path);
}

}  // TEST_SUITE
