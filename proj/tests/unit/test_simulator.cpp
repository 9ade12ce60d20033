#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "blockprnu/simulator.hpp"
#include "blockprnu/trace_io.hpp"
#include "support/check.hpp"
#include "support/oracles.hpp"

using namespace blockprnu;
using namespace blockprnu::testing;

namespace {

BlockPixels random_block(Rng& rng, int lo, int hi) {
    BlockPixels b;
    for (auto& v : b) v = static_cast<std::uint8_t>(uniform_int(rng, lo, hi));
    return b;
}

double dct_basis(int u, int x) {
    const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
    return a * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
}

std::vector<Picture> static_capture(int frames, std::uint64_t seed) {
    SceneConfig sc;
    sc.width = 64;
    sc.height = 64;
    sc.frames = frames;
    sc.seed = seed;
    const auto sensor = SensorModel::random(64, 64, 0.005, 2.0, seed + 1);
    return simulate_capture(sensor, generate_scene(sc), seed + 2);
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("quantizer step and level bits") {
    CHECK(quantizer_step(4) == 1.0);
    CHECK(quantizer_step(10) == doctest::Approx(2.0));
    CHECK(quantizer_step(28) == doctest::Approx(16.0));
    CHECK(level_bits(0) == 1);
    CHECK(level_bits(1) == 2);
    CHECK(level_bits(-1) == 2);
    CHECK(level_bits(2) == 3);
    CHECK(level_bits(3) == 3);
    CHECK(level_bits(-4) == 4);
    for (int l = -300; l <= 300; ++l) {
        CHECK(level_bits(l) == 1 + static_cast<int>(std::ceil(std::log2(1.0 + std::abs(l)))));
    }
}

TEST_CASE("zig-zag order is a permutation walking anti-diagonals") {
    const auto z = zigzag_order();
    std::set<int> seen(z.begin(), z.end());
    CHECK(seen.size() == 64);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 63);
    for (std::size_t k = 1; k < 64; ++k) {
        const int d0 = z[k - 1] / 8 + z[k - 1] % 8;
        const int d1 = z[k] / 8 + z[k] % 8;
        CHECK((d1 == d0 || d1 == d0 + 1));
    }
    CHECK(z[1] == 1);
    CHECK(z[2] == 8);
}

TEST_CASE("sub-block rate stops at the last nonzero level") {
    int levels[64] = {};
    CHECK(subblock_bits(levels) == 0);
    levels[0] = 5;
    CHECK(subblock_bits(levels) == 4);
    // Position 8 is third in zig-zag order; position 1 is a zero before it.
    levels[8] = -1;
    CHECK(subblock_bits(levels) == 4 + 1 + 2);
    levels[63] = 1;
    CHECK(subblock_bits(levels) == 4 + 1 + 2 + 60 + 2);
}

TEST_CASE("DCT matches the direct formula and is orthonormal") {
    Rng rng(1);
    double in[64], out[64], back[64];
    for (int t = 0; t < 10; ++t) {
        for (auto& v : in) v = uniform(rng, -128.0, 128.0);
        dct8x8(in, out);
        double ein = 0.0;
        double eout = 0.0;
        for (int v = 0; v < 8; ++v) {
            for (int u = 0; u < 8; ++u) {
                double s = 0.0;
                for (int y = 0; y < 8; ++y) {
                    for (int x = 0; x < 8; ++x) s += dct_basis(v, y) * dct_basis(u, x) * in[y * 8 + x];
                }
                CHECK(out[v * 8 + u] == doctest::Approx(s).epsilon(1e-12).scale(128.0));
            }
        }
        for (int i = 0; i < 64; ++i) {
            ein += in[i] * in[i];
            eout += out[i] * out[i];
        }
        CHECK(eout == doctest::Approx(ein).epsilon(1e-12));
        idct8x8(out, back);
        for (int i = 0; i < 64; ++i) CHECK(std::abs(back[i] - in[i]) < 1e-9);
    }
}

TEST_CASE("block candidates satisfy J = D + lambda*R and the choice is the minimum") {
    Rng rng(2);
    for (int t = 0; t < 300; ++t) {
        const auto block = random_block(rng, 0, 255);
        auto pred = block;
        const int noise = uniform_int(rng, 0, 40);
        for (auto& v : pred) v = static_cast<std::uint8_t>(std::clamp(v + uniform_int(rng, -noise, noise), 0, 255));
        const int qp = uniform_int(rng, 0, 51);
        const double lambda = lambda_of_qp(qp);
        const auto code = code_block(block, pred, qp, lambda);
        const auto skip = skip_block(block, pred, lambda);
        for (const auto* e : {&code, &skip}) {
            double ssd = 0.0;
            for (int i = 0; i < kBlockPixels; ++i) {
                const double d = static_cast<double>(block[i]) - e->reconstruction[i];
                ssd += d * d;
            }
            CHECK(e->distortion == ssd);
            CHECK(e->cost == doctest::Approx(e->distortion + lambda * static_cast<double>(e->rate)).epsilon(1e-12));
        }
        CHECK(skip.rate == kSkipBits);
        CHECK(skip.reconstruction == pred);
        CHECK(code.rate >= kCodeHeaderBits);
        const auto chosen = encode_block(block, pred, qp, lambda);
        CHECK(chosen.cost == std::min(code.cost, skip.cost));
        CHECK(chosen.mode == (skip.cost < code.cost ? BlockMode::Skip : BlockMode::Code));
        CHECK(encode_block(block, pred, qp, lambda, false).mode == BlockMode::Code);
    }
}

TEST_CASE("coding at QP 0 reconstructs nearly exactly") {
    Rng rng(3);
    const auto block = random_block(rng, 0, 255);
    BlockPixels pred;
    pred.fill(128);
    CHECK(code_block(block, pred, 0, lambda_of_qp(0)).mse() < 0.25);
}

TEST_CASE("sequence encoding keeps the trace valid and consistent with the truth") {
    const auto frames = static_capture(6, 10);
    for (const auto mode : {RateMode::FixedQp, RateMode::TargetBitrate}) {
        CodecConfig cfg;
        cfg.mode = mode;
        cfg.qp = 30;
        cfg.bits_per_frame = 3000;
        cfg.gop = 3;
        const auto r = encode_sequence(frames, cfg);
        REQUIRE(r.decoded.size() == frames.size());
        CHECK(r.trace.header == TraceHeader{64, 64, 16, 6});
        CHECK(serialize_trace(parse_trace(serialize_trace(r.trace))) == serialize_trace(r.trace));
        REQUIRE(r.truth.size() == r.trace.records.size());
        std::vector<std::int64_t> bits(frames.size(), 0);
        for (std::size_t i = 0; i < r.truth.size(); ++i) {
            const auto& t = r.truth[i];
            CHECK(t.record == r.trace.records[i]);
            CHECK(t.rate == t.record.bits);
            const auto f = static_cast<std::size_t>(t.record.frame_idx);
            CHECK(t.lambda == lambda_of_qp(r.frame_qp[f]));
            CHECK(t.cost == doctest::Approx(t.distortion + t.lambda * static_cast<double>(t.rate)).epsilon(1e-12));
            if (f % 3 == 0) CHECK(t.record.type == BlockType::I);
            if (t.record.type != BlockType::Skip) CHECK(t.record.qp == r.frame_qp[f]);
            bits[f] += t.rate;
        }
        CHECK(bits == r.frame_bits);
        for (std::size_t f = 0; f < frames.size(); ++f) {
            CHECK(r.decoded[f].width() == 64);
            CHECK(r.decoded[f].frame_idx == static_cast<int>(f));
        }
    }
}

TEST_CASE("target bitrate respects the budget when QP allows") {
    const auto frames = static_capture(4, 20);
    CodecConfig cfg;
    cfg.mode = RateMode::TargetBitrate;
    cfg.bits_per_frame = 4000;
    const auto r = encode_sequence(frames, cfg);
    for (std::size_t f = 1; f < frames.size(); ++f) {
        if (r.frame_qp[f] < kMaxQp) CHECK(static_cast<double>(r.frame_bits[f]) <= cfg.bits_per_frame);
    }
}

TEST_CASE("encoding and capture are deterministic") {
    const auto a = static_capture(3, 30);
    const auto b = static_capture(3, 30);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].luma == b[i].luma);
    CodecConfig cfg;
    cfg.global_motion_range = 2;
    const auto ea = encode_sequence(a, cfg);
    const auto eb = encode_sequence(b, cfg);
    CHECK(serialize_trace(ea.trace) == serialize_trace(eb.trace));
    CHECK(ea.frame_motion == eb.frame_motion);
}

TEST_CASE("global motion follows a panning scene") {
    SceneConfig sc;
    sc.width = 64;
    sc.height = 64;
    sc.frames = 4;
    sc.pan_x = 2.0;
    const auto frames = generate_scene(sc);
    CodecConfig cfg;
    cfg.qp = 20;
    cfg.global_motion_range = 3;
    const auto r = encode_sequence(frames, cfg);
    CHECK(r.frame_motion[0] == std::pair{0, 0});
    for (std::size_t f = 1; f < frames.size(); ++f) CHECK(std::abs(r.frame_motion[f].first) == 2);
}

TEST_CASE("static content skips more at higher QP") {
    const auto frames = static_capture(6, 40);
    double prev = -1.0;
    for (const int qp : {10, 25, 40}) {
        CodecConfig cfg;
        cfg.qp = qp;
        const double sbr = skipped_block_rate(encode_sequence(frames, cfg).trace);
        CHECK(sbr >= prev);
        prev = sbr;
    }
    CHECK(prev > 0.5);
}

TEST_CASE("capture model and sensor") {
    const auto s = SensorModel::random(32, 32, 0.5, 0.0, 1);
    for (const double k : s.k_true.values()) CHECK(std::abs(k) <= 0.09);
    CHECK(kind_name(error_kind([] { SensorModel::random(30, 32, 0.01, 1.0, 1); })) == "DimensionMismatch");

    auto flat = SensorModel::random(16, 16, 0.0, 0.0, 1);
    Picture p;
    p.luma = Plane<std::uint8_t>(16, 16, 100);
    CHECK(simulate_capture(flat, {p}, 5)[0].luma == p.luma);
    flat.k_true = Plane<double>(16, 16, 0.05);
    CHECK(simulate_capture(flat, {p}, 5)[0].luma(3, 3) == 105);
    Picture wrong;
    wrong.luma = Plane<std::uint8_t>(32, 16, 1);
    CHECK(kind_name(error_kind([&] { simulate_capture(flat, {wrong}, 1); })) == "DimensionMismatch");
}

TEST_CASE("codec configuration errors") {
    Rng rng(5);
    const std::vector<Picture> frames{random_picture(rng, 32, 32)};
    CodecConfig bad;
    bad.qp = 60;
    CHECK(kind_name(error_kind([&] { encode_sequence(frames, bad); })) == "ConfigError");
    CHECK(kind_name(error_kind([&] { encode_sequence({}, CodecConfig{}); })) == "EmptyInput");
    const std::vector<Picture> odd{random_picture(rng, 40, 32)};
    CHECK(kind_name(error_kind([&] { encode_sequence(odd, CodecConfig{}); })) == "DimensionMismatch");
}

TEST_CASE("oracle weight paints 1/(1+mse) per block") {
    std::vector<BlockTruth> truth(2);
    truth[0].record.mb_x = 0;
    truth[0].distortion = 256.0 * 3.0;
    truth[1].record.mb_x = 1;
    truth[1].distortion = 0.0;
    const auto m = oracle_weight_d(truth, 32, 16);
    CHECK(m(5, 5) == 0.25);
    CHECK(m(20, 15) == 1.0);
}

}  // TEST_SUITE
