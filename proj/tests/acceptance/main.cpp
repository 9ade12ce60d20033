// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Arguments select criteria by number (default: all).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "blockprnu/bit_reader.hpp"
#include "blockprnu/calibration.hpp"
#include "blockprnu/evaluation.hpp"
#include "blockprnu/experiment.hpp"
#include "blockprnu/h264.hpp"
#include "blockprnu/matching.hpp"
#include "blockprnu/prnu.hpp"
#include "blockprnu/simulator.hpp"
#include "blockprnu/text.hpp"
#include "support/check.hpp"
#include "support/h264_writer.hpp"
#include "support/oracles.hpp"

using namespace blockprnu;
using namespace blockprnu::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 4) { return format_significant(v, digits); }

// ---------------------------------------------------------------------------
// 1. lambda closed form, J = D + lambda*R on every simulated block

Outcome criterion_1() {
    double worst = 0.0;
    for (int qp = kMinQp; qp <= kMaxQp; ++qp) {
        const double closed = std::pow(0.852, (qp - 12) / 3.0);
        worst = std::max(worst, std::abs(lambda_of_qp(qp) - closed));
    }

    std::size_t blocks = 0;
    std::size_t violations = 0;
    const auto sensor = SensorModel::random(96, 64, 0.01, 2.0, 11);
    for (int v = 0; v < 6; ++v) {
        SceneConfig sc;
        sc.width = 96;
        sc.height = 64;
        sc.frames = 8;
        sc.pan_x = v % 2;
        sc.moving_objects = v % 3;
        sc.seed = 40 + static_cast<std::uint64_t>(v);
        const auto frames = simulate_capture(sensor, generate_scene(sc), 70 + static_cast<std::uint64_t>(v));
        CodecConfig codec;
        codec.mode = v < 3 ? RateMode::FixedQp : RateMode::TargetBitrate;
        codec.qp = 10 + 8 * v;
        codec.bits_per_frame = 1000.0 * (v + 1);
        codec.gop = v % 2 == 0 ? 0 : 4;
        codec.global_motion_range = v % 2;
        const auto r = encode_sequence(frames, codec);
        for (const auto& t : r.truth) {
            ++blocks;
            const double lambda = lambda_of_qp(r.frame_qp[static_cast<std::size_t>(t.record.frame_idx)]);
            if (t.lambda != lambda || t.cost != t.distortion + lambda * static_cast<double>(t.rate)) ++violations;
        }
    }
    return {worst <= 1e-9 && violations == 0 && blocks > 0,
            "max |lambda - closed form| " + fmt(worst) + " over 52 QPs; J identity violations " +
                std::to_string(violations) + " of " + std::to_string(blocks) + " blocks"};
}

// ---------------------------------------------------------------------------
// 2. streaming accumulator vs brute force

Outcome criterion_2() {
    Rng rng(2024);
    double worst = 0.0;
    std::size_t support_mismatch = 0;
    for (int set = 0; set < 20; ++set) {
        const int n = uniform_int(rng, 2, 8);
        std::vector<Picture> pictures;
        std::vector<Plane<double>> residuals;
        std::vector<Plane<double>> masks;
        std::vector<Plane<std::uint8_t>> saturation;
        FingerprintAccumulator acc(64, 64);
        for (int i = 0; i < n; ++i) {
            pictures.push_back(random_picture(rng, 64, 64));
            residuals.push_back(random_plane(rng, 64, 64, 4.0));
            Plane<double> m(64, 64);
            for (auto& v : m.values()) v = uniform_int(rng, 0, 3) == 0 ? 0.0 : uniform(rng, 0.0, 3.0);
            masks.push_back(m);
            saturation.push_back(saturation_mask(pictures.back()));
            acc.accumulate(pictures.back(), NoiseResidual{residuals.back(), false}, masks.back(), &saturation.back());
        }
        const double floor = default_denominator_floor(acc);
        FinalizeOptions opts;
        opts.normalization = Normalization::None;
        opts.denominator_floor = floor;
        const auto fp = finalize(acc, opts);
        const auto oracle = brute_force_k(pictures, residuals, masks, saturation, floor);
        for (std::size_t i = 0; i < fp.k_values.size(); ++i) {
            worst = std::max(worst, std::abs(fp.k_values[i] - oracle.k[i]));
            if (fp.support[i] != oracle.support[i]) ++support_mismatch;
        }
    }
    return {worst <= 1e-9 && support_mismatch == 0,
            "20 sets of 64x64: max elementwise error " + fmt(worst) + ", support mismatches " +
                std::to_string(support_mismatch)};
}

// ---------------------------------------------------------------------------
// 3. PCE calibration

Outcome criterion_3() {
    constexpr int kSide = 100;
    Rng rng(3);
    double min_self = std::numeric_limits<double>::infinity();
    int wrong_shift = 0;
    const std::vector<std::pair<int, int>> shifts{{0, 0}, {1, 0}, {-13, 7}, {25, -40}, {50, 50}, {-3, -49}};
    for (const auto& [sx, sy] : shifts) {
        const auto ref = random_plane(rng, kSide, kSide);
        const auto test = cyclic_shift(ref, sx, sy);
        const auto r = pce(test, ref);
        min_self = std::min(min_self, r.pce);
        // The reference shifted by (dx, dy) lines up with the test, so dx = -sx modulo the size.
        const bool ok_x = ((r.dx + sx) % kSide + kSide) % kSide == 0;
        const bool ok_y = ((r.dy + sy) % kSide + kSide) % kSide == 0;
        if (!ok_x || !ok_y) ++wrong_shift;
    }

    PceConfig zero;
    zero.search_window = SearchWindow::ZeroShift;
    double sum_zero = 0.0;
    double max_full = -std::numeric_limits<double>::infinity();
    double sum_full = 0.0;
    constexpr int kTrials = 1000;
    for (int t = 0; t < kTrials; ++t) {
        const auto a = random_plane(rng, kSide, kSide);
        const auto b = random_plane(rng, kSide, kSide);
        sum_zero += std::abs(pce(a, b, zero).pce);
        const double full = pce(a, b).pce;
        sum_full += full;
        max_full = std::max(max_full, full);
    }
    const double mean_zero = sum_zero / kTrials;
    const bool pass = min_self > 100.0 * kDefaultPceThreshold && wrong_shift == 0 && mean_zero >= 0.5 &&
                      mean_zero <= 2.0 && max_full < kDefaultPceThreshold;
    return {pass, "self-match min PCE " + fmt(min_self) + ", wrong peaks " + std::to_string(wrong_shift) +
                      "; 1000 non-matches of 10^4 pixels: mean |PCE| at zero shift " + fmt(mean_zero) +
                      ", full-plane mean " + fmt(sum_full / kTrials) + ", full-plane max " + fmt(max_full)};
}

// ---------------------------------------------------------------------------
// 4. attribution table fixture

Outcome criterion_4() {
    const std::vector<Scheme> schemes{Scheme::Conventional, Scheme::LoopFilterOnly, Scheme::SkipEliminate,
                                      Scheme::QpAll,        Scheme::QpNoSkip,       Scheme::LambdaR};
    const std::vector<double> group_bpp{0.01, 0.03, 0.07, 0.1, 0.3};
    const std::vector<std::vector<std::size_t>> counts{
        {2, 3, 10, 4, 7, 10}, {27, 34, 42, 32, 40, 55}, {40, 47, 51, 46, 53, 63},
        {65, 69, 72, 74, 77, 82}, {92, 94, 93, 97, 97, 97},
    };
    const std::vector<std::size_t> populations{103, 104, 103, 103, 104};
    const std::vector<std::size_t> totals{226, 247, 268, 253, 274, 307};

    ExperimentGrid grid;
    grid.schemes = schemes;
    for (std::size_t g = 0; g < populations.size(); ++g) {
        for (std::size_t v = 0; v < populations[g]; ++v) {
            GridRow row;
            row.video_id = "g" + std::to_string(g) + "v" + std::to_string(v);
            row.camera_id = "c" + std::to_string(v % 20);
            row.bits_per_pixel = group_bpp[g];
            for (std::size_t s = 0; s < schemes.size(); ++s) {
                MatchReport r;
                r.pce = v < counts[g][s] ? 61.0 : 60.0;
                MatchCell cell;
                cell.report = r;
                row.cells.push_back(cell);
            }
            grid.rows.push_back(row);
        }
        // A non-matching row above threshold must not be counted.
        GridRow other = grid.rows.back();
        other.video_id += "x";
        other.matching = false;
        for (auto& c : other.cells) c.report->pce = 1e4;
        grid.rows.push_back(other);
    }
    // Serialize and parse so the fixture also passes through the grid file format.
    const auto t = threshold_table(parse_grid(serialize_grid(grid)));
    const bool pass = t.counts == counts && t.populations == populations && t.totals == totals &&
                      t.total_population == 517;
    std::string totals_text;
    for (const auto v : t.totals) totals_text += std::to_string(v) + " ";
    return {pass, "totals " + totals_text + "of " + std::to_string(t.total_population)};
}

// ---------------------------------------------------------------------------
// 5. cohort ordering

Outcome criterion_5() {
    const CohortConfig config;
    const auto result = run_cohort(config);
    bool pass = config.cameras >= 20 && config.videos_per_camera >= 2 && config.bitrates.size() == 5;
    std::string detail = std::to_string(config.cameras) + " cameras x " + std::to_string(config.videos_per_camera) +
                         " videos x " + std::to_string(config.bitrates.size()) + " bitrates;";
    for (std::size_t b = 0; b < 2; ++b) {
        const std::vector<double> only{config.bitrates[b]};
        std::map<Scheme, double> mean;
        for (const auto& s : summarize(result.grid, only)) mean[s.scheme] = s.mean_pce;
        const double conv = mean[Scheme::Conventional];
        const bool order = mean[Scheme::LambdaR] > mean[Scheme::QpNoSkip] &&
                           mean[Scheme::QpNoSkip] > mean[Scheme::QpAll] &&
                           mean[Scheme::QpNoSkip] > mean[Scheme::SkipEliminate] &&
                           mean[Scheme::QpAll] > conv && mean[Scheme::SkipEliminate] > conv;
        const double ratio = conv != 0.0 ? mean[Scheme::LambdaR] / conv : 0.0;
        pass = pass && order && conv > 0.0 && ratio >= 1.5;
        detail += " bitrate " + format_double(config.bitrates[b]) + ": conv " + fmt(conv) + " skip " +
                  fmt(mean[Scheme::SkipEliminate]) + " qp_all " + fmt(mean[Scheme::QpAll]) + " qp_no_skip " +
                  fmt(mean[Scheme::QpNoSkip]) + " lambda_r " + fmt(mean[Scheme::LambdaR]) + " ratio " +
                  fmt(ratio, 3) + (order ? "" : " (order broken)") + ";";
    }
    return {pass, detail};
}

// ---------------------------------------------------------------------------
// 6. SBR on static content

Outcome criterion_6() {
    const auto config = static_content_config(CohortConfig{});
    const auto groups = sbr_sweep(config, 12);
    std::vector<double> medians;
    for (const auto& g : groups) medians.push_back(quantile(g.sbr, 0.5));
    bool monotone = true;
    for (std::size_t i = 1; i < medians.size(); ++i) monotone = monotone && medians[i] <= medians[i - 1];
    std::string text;
    for (std::size_t i = 0; i < medians.size(); ++i) text += groups[i].label + ":" + fmt(medians[i], 3) + " ";
    return {!medians.empty() && medians.front() > 0.7 && monotone, "median SBR per bitrate " + text};
}

// ---------------------------------------------------------------------------
// 7. splicing

Outcome criterion_7() {
    Rng rng(7);
    std::size_t violations = 0;
    std::size_t positions = 0;
    for (int t = 0; t < 100; ++t) {
        const int n = uniform_int(rng, 2, 9);
        const int cols = uniform_int(rng, 1, 5);
        const int rows = uniform_int(rng, 1, 4);
        const bool exclude_skip = t % 4 != 3;
        std::vector<NoiseResidual> residuals;
        std::vector<FrameBlockMap> maps;
        std::vector<Picture> pictures;
        for (int i = 0; i < n; ++i) {
            residuals.push_back({random_plane(rng, cols * 16, rows * 16), false});
            maps.push_back(random_block_map(rng, i, cols, rows, uniform(rng, 0.0, 0.8)));
            pictures.push_back(random_picture(rng, cols * 16, rows * 16));
        }
        const auto out = splice_by_lambda_rate(residuals, maps, pictures, exclude_skip);
        if (out.frames.size() != static_cast<std::size_t>(n)) {
            ++violations;
            continue;
        }
        std::vector<int> filled(static_cast<std::size_t>(n), 0);
        for (int by = 0; by < rows; ++by) {
            for (int bx = 0; bx < cols; ++bx) {
                ++positions;
                std::vector<std::pair<double, int>> expected;
                for (int i = 0; i < n; ++i) {
                    const auto& b = maps[static_cast<std::size_t>(i)].at(bx, by);
                    if (exclude_skip && b.type == BlockType::Skip) continue;
                    expected.emplace_back(lambda_of_qp(b.qp) * b.bits, i);
                }
                std::sort(expected.begin(), expected.end());
                const auto pos = static_cast<std::size_t>(by * cols + bx);
                std::multiset<int> used;
                for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) {
                    const int src = out.source[j][pos];
                    const int want = j < expected.size() ? expected[j].second : -1;
                    if (src != want) ++violations;
                    if (src < 0) {
                        if (out.frames[j].mask(bx * 16, by * 16) != 0.0) ++violations;
                        continue;
                    }
                    ++filled[j];
                    used.insert(src);
                    const auto s = static_cast<std::size_t>(src);
                    for (int y = by * 16; y < by * 16 + 16; ++y) {
                        for (int x = bx * 16; x < bx * 16 + 16; ++x) {
                            if (out.frames[j].residual.values(x, y) != residuals[s].values(x, y) ||
                                out.frames[j].picture.luma(x, y) != pictures[s].luma(x, y) ||
                                out.frames[j].mask(x, y) != 1.0) {
                                ++violations;
                            }
                        }
                    }
                }
                // Every eligible block appears exactly once.
                if (used.size() != expected.size() ||
                    std::set<int>(used.begin(), used.end()).size() != expected.size()) {
                    ++violations;
                }
            }
        }
        for (std::size_t j = 0; j < filled.size(); ++j) {
            if (filled[j] != out.frames[j].filled_blocks) ++violations;
        }
    }
    return {violations == 0, "100 instances, " + std::to_string(positions) + " positions, violations " +
                                 std::to_string(violations)};
}

// ---------------------------------------------------------------------------
// 8. QP calibration

// Independent reading of the procedure: per camera and QP the mean PCE,
// floored and divided by the floored anchor mean; cameras averaged; square root.
std::map<int, double> calibration_oracle(const std::vector<QpObservation>& obs, int anchor) {
    std::map<std::string, std::map<int, std::pair<double, int>>> sums;
    for (const auto& o : obs) {
        auto& s = sums[o.camera_id][o.qp];
        s.first += o.pce;
        s.second += 1;
    }
    std::map<int, std::pair<double, int>> acc;
    for (const auto& [camera, per_qp] : sums) {
        const auto& a = per_qp.at(anchor);
        const double ref = std::max(kPceFloor, a.first / a.second);
        for (const auto& [qp, s] : per_qp) {
            auto& x = acc[qp];
            x.first += qp == anchor ? 1.0 : std::max(kPceFloor, s.first / s.second) / ref;
            x.second += 1;
        }
    }
    std::map<int, double> out;
    for (const auto& [qp, x] : acc) out[qp] = std::sqrt(x.first / x.second);
    return out;
}

Outcome criterion_8() {
    double worst = 0.0;
    bool anchor_exact = true;
    bool keys_match = true;

    // Hand-computed case.
    const std::vector<QpObservation> hand{
        {"a", 15, 100.0}, {"a", 30, 20.0}, {"a", 30, 30.0}, {"b", 15, 40.0},
        {"b", 15, 60.0},  {"b", 30, 50.0}, {"b", 40, 12.5},
    };
    // a: 25/100 = 0.25, b: 50/50 = 1 -> sqrt(0.625); qp 40 only b: 12.5/50 -> sqrt(0.25).
    const std::map<int, double> expected{{15, 1.0}, {30, std::sqrt(0.625)}, {40, 0.5}};
    {
        const auto r = calibrate_qp(hand);
        keys_match = keys_match && r.table.keys.size() == expected.size();
        for (std::size_t i = 0; i < r.table.keys.size() && keys_match; ++i) {
            const auto it = expected.find(static_cast<int>(r.table.keys[i]));
            if (it == expected.end()) {
                keys_match = false;
                break;
            }
            worst = std::max(worst, std::abs(r.table.weights[i] - it->second));
            if (it->first == 15) anchor_exact = anchor_exact && r.table.weights[i] == 1.0;
        }
    }

    // Randomized cases against the oracle.
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
        std::vector<QpObservation> obs;
        const int cameras = uniform_int(rng, 1, 6);
        for (int c = 0; c < cameras; ++c) {
            const std::string id = "cam" + std::to_string(c);
            obs.push_back({id, kDefaultAnchorQp, uniform(rng, 1.0, 2000.0)});
            for (int k = 0; k < 20; ++k) {
                obs.push_back({id, 5 * uniform_int(rng, 0, 10), uniform_int(rng, 0, 9) == 0 ? -1.0 : uniform(rng, 0.0, 2000.0)});
            }
        }
        const auto r = calibrate_qp(obs);
        const auto want = calibration_oracle(obs, kDefaultAnchorQp);
        keys_match = keys_match && r.table.keys.size() == want.size();
        for (std::size_t i = 0; i < r.table.keys.size(); ++i) {
            const int qp = static_cast<int>(r.table.keys[i]);
            if (want.count(qp) == 0) {
                keys_match = false;
                continue;
            }
            worst = std::max(worst, std::abs(r.table.weights[i] - want.at(qp)));
            if (qp == kDefaultAnchorQp) anchor_exact = anchor_exact && r.table.weights[i] == 1.0;
        }
    }
    return {worst <= 1e-9 && anchor_exact && keys_match,
            "max weight error " + fmt(worst) + ", anchor weight exactly 1: " + (anchor_exact ? "yes" : "no") +
                ", keys match: " + (keys_match ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// 9. bitstream parsing

std::vector<std::uint8_t> random_escaped_unit_body(Rng& rng) {
    std::vector<std::uint8_t> rbsp(static_cast<std::size_t>(uniform_int(rng, 0, 40)));
    for (auto& b : rbsp) b = static_cast<std::uint8_t>(uniform_int(rng, 0, 2) == 0 ? uniform_int(rng, 0, 255) : uniform_int(rng, 0, 3));
    // An RBSP ends in its stop bit, so the last byte is nonzero.
    rbsp.push_back(static_cast<std::uint8_t>(uniform_int(rng, 1, 255)));
    return rbsp;
}

struct FuzzStream {
    std::vector<std::uint8_t> bytes;
    std::vector<std::vector<std::uint8_t>> payloads;
    std::vector<std::size_t> header_offsets;
};

FuzzStream random_stream(Rng& rng) {
    FuzzStream s;
    const int units = uniform_int(rng, 1, 6);
    for (int u = 0; u < units; ++u) {
        s.bytes.insert(s.bytes.end(), static_cast<std::size_t>(uniform_int(rng, 2, 4)), 0);
        s.bytes.push_back(1);
        s.header_offsets.push_back(s.bytes.size());
        s.bytes.push_back(static_cast<std::uint8_t>((uniform_int(rng, 0, 3) << 5) | uniform_int(rng, 1, 23)));
        auto rbsp = random_escaped_unit_body(rng);
        const auto body = escape_rbsp(rbsp);
        s.bytes.insert(s.bytes.end(), body.begin(), body.end());
        s.payloads.push_back(std::move(rbsp));
    }
    s.bytes.insert(s.bytes.end(), static_cast<std::size_t>(uniform_int(rng, 0, 2)), 0);
    return s;
}

std::vector<std::uint8_t> valid_h264(Rng& rng, int frames) {
    SpsParams sps;
    sps.profile_idc = std::array{66, 77, 100}[static_cast<std::size_t>(uniform_int(rng, 0, 2))];
    PpsParams pps;
    pps.pic_init_qp_minus26 = uniform_int(rng, -10, 10);
    std::vector<std::uint8_t> stream;
    append_nal(stream, 3, kNalSps, write_sps(sps));
    append_nal(stream, 3, kNalPps, write_pps(pps));
    for (int f = 0; f < frames; ++f) {
        SliceParams s;
        s.idr = f == 0;
        s.slice_type = f == 0 ? 2 : uniform_int(rng, 0, 2);
        s.frame_num = f % 16;
        s.slice_qp_delta = uniform_int(rng, -5, 5);
        append_nal(stream, 3, s.idr ? kNalSliceIdr : kNalSliceNonIdr, write_slice(s, sps, pps));
    }
    return stream;
}

Outcome criterion_9() {
    // Exp-Golomb over 0..2^16, and the signed mapping.
    std::size_t eg_failures = 0;
    {
        BitWriter w;
        for (std::uint32_t k = 0; k <= (1U << 16); ++k) w.put_ue(k);
        BitReader br(w.bytes());
        for (std::uint32_t k = 0; k <= (1U << 16); ++k) {
            if (br.read_ue() != k) ++eg_failures;
        }
        if (br.bit_position() != w.bit_count()) ++eg_failures;
        BitWriter s;
        for (std::int32_t v = -(1 << 15); v <= (1 << 15); ++v) s.put_se(v);
        BitReader sr(s.bytes());
        for (std::int32_t v = -(1 << 15); v <= (1 << 15); ++v) {
            if (sr.read_se() != v) ++eg_failures;
        }
    }

    // NAL framing fuzz: each case belongs to a class with a known outcome.
    Rng rng(9);
    std::size_t crashes = 0;
    std::size_t misclassified = 0;
    constexpr int kCases = 10000;
    const auto outcome = [&](const std::function<void()>& fn) -> std::string {
        try {
            fn();
            return "none";
        } catch (const Error& e) {
            return std::string(to_string(e.kind()));
        } catch (...) {
            ++crashes;
            return "crash";
        }
    };
    const std::set<std::string> bitstream_kinds{"none", "MalformedStream", "TruncatedUnit", "BitstreamExhausted",
                                                "MissingParameterSet", "UnsupportedProfile", "RangeError"};
    for (int t = 0; t < kCases; ++t) {
        auto s = random_stream(rng);
        const int cls = t % 7;
        std::string expected;
        switch (cls) {
            case 0:
                expected = "none";
                break;
            case 1: {
                const auto at = s.header_offsets[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(s.header_offsets.size()) - 1))];
                s.bytes[at] |= 0x80;
                expected = "MalformedStream";
                break;
            }
            case 2:
                s.bytes.insert(s.bytes.begin(), static_cast<std::uint8_t>(uniform_int(rng, 2, 255)));
                expected = "MalformedStream";
                break;
            case 3: {
                // 00 00 02 can neither start a unit nor appear escaped.
                const auto at = s.header_offsets.back() + 1;
                const std::vector<std::uint8_t> bad{0, 0, 2};
                s.bytes.insert(s.bytes.begin() + static_cast<std::ptrdiff_t>(at), bad.begin(), bad.end());
                expected = "MalformedStream";
                break;
            }
            case 4: {
                const auto at = s.header_offsets[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(s.header_offsets.size()) - 1))];
                const std::vector<std::uint8_t> empty_unit{0, 0, 1};
                s.bytes.insert(s.bytes.begin() + static_cast<std::ptrdiff_t>(at), empty_unit.begin(), empty_unit.end());
                expected = "TruncatedUnit";
                break;
            }
            case 5:
                s.bytes.insert(s.bytes.end(), {0, 0, 1});
                expected = "TruncatedUnit";
                break;
            default:
                break;
        }
        if (cls <= 5) {
            std::vector<NalUnit> units;
            const auto got = outcome([&] { units = split_nal_units(s.bytes); });
            if (got != expected) ++misclassified;
            if (got == "none") {
                bool same = units.size() == s.payloads.size() && join_nal_units(units) == s.bytes;
                for (std::size_t i = 0; same && i < units.size(); ++i) same = units[i].payload == s.payloads[i];
                if (!same) ++misclassified;
            }
        } else {
            // Random byte damage to a real stream: any bitstream error kind is acceptable, nothing else.
            auto stream = valid_h264(rng, uniform_int(rng, 1, 4));
            const int edits = uniform_int(rng, 1, 4);
            for (int e = 0; e < edits; ++e) {
                const auto at = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(stream.size()) - 1));
                switch (uniform_int(rng, 0, 2)) {
                    case 0: stream[at] = static_cast<std::uint8_t>(uniform_int(rng, 0, 255)); break;
                    case 1: stream.erase(stream.begin() + static_cast<std::ptrdiff_t>(at)); break;
                    default: stream.resize(at + 1); break;
                }
                if (stream.empty()) break;
            }
            const auto got = outcome([&] { parse_stream(stream); });
            if (bitstream_kinds.count(got) == 0) ++misclassified;
        }
    }

    // Slice-header QP recovery on constructed streams.
    std::size_t qp_mismatch = 0;
    std::size_t slices = 0;
    for (int t = 0; t < 200; ++t) {
        SpsParams sps;
        sps.profile_idc = std::array{66, 77, 100}[static_cast<std::size_t>(t % 3)];
        sps.poc_type = t % 3;
        PpsParams pps;
        pps.pic_init_qp_minus26 = uniform_int(rng, -26, 25);
        pps.cabac = t % 2 == 1;
        pps.weighted_pred = t % 5 == 0;
        pps.weighted_bipred_idc = t % 3;
        std::vector<std::uint8_t> stream;
        append_nal(stream, 3, kNalSps, write_sps(sps));
        append_nal(stream, 3, kNalPps, write_pps(pps));
        std::vector<int> qps;
        for (int f = 0; f < 4; ++f) {
            SliceParams s;
            s.idr = f == 0;
            s.slice_type = f == 0 ? 2 : uniform_int(rng, 0, 2) + 5 * uniform_int(rng, 0, 1);
            s.frame_num = f;
            s.poc_lsb = 2 * f;
            s.override_refs = uniform_int(rng, 0, 1) == 1;
            s.disable_deblocking_filter_idc = uniform_int(rng, 0, 2);
            const int qp = uniform_int(rng, 0, 51);
            s.slice_qp_delta = qp - 26 - pps.pic_init_qp_minus26;
            qps.push_back(qp);
            append_nal(stream, 3, s.idr ? kNalSliceIdr : kNalSliceNonIdr, write_slice(s, sps, pps));
        }
        const auto summary = parse_stream(stream);
        if (summary.slices.size() != qps.size() || summary.frame_count() != 4) {
            ++qp_mismatch;
            continue;
        }
        for (std::size_t i = 0; i < qps.size(); ++i) {
            ++slices;
            if (summary.slices[i].base_qp != qps[i]) ++qp_mismatch;
        }
    }

    return {eg_failures == 0 && crashes == 0 && misclassified == 0 && qp_mismatch == 0,
            "exp-Golomb failures " + std::to_string(eg_failures) + "; " + std::to_string(kCases) +
                " fuzz cases: crashes " + std::to_string(crashes) + ", misclassified " +
                std::to_string(misclassified) + "; slice QP mismatches " + std::to_string(qp_mismatch) + " of " +
                std::to_string(slices)};
}

// ---------------------------------------------------------------------------
// 10. energy ratio

Outcome criterion_10() {
    constexpr int kTrials = 10;
    constexpr double kSigmaK = 0.0015;
    std::vector<double> base_pce;
    std::vector<SensorModel> sensors;
    std::vector<std::vector<Picture>> scenes;
    std::vector<Fingerprint> truth;
    for (int t = 0; t < kTrials; ++t) {
        sensors.push_back(SensorModel::random(128, 128, kSigmaK, 2.0, 100 + static_cast<std::uint64_t>(t)));
        SceneConfig sc;
        sc.frames = 2;
        sc.seed = 500 + static_cast<std::uint64_t>(t);
        sc.texture_amplitude = 60.0;
        scenes.push_back(generate_scene(sc));
        Fingerprint ref;
        ref.k_values = sensors.back().k_true;
        ref.support = Plane<std::uint8_t>(128, 128, 1);
        normalize_fingerprint(ref);
        truth.push_back(ref);
    }
    const auto mean_pce = [&](double e) {
        double sum = 0.0;
        for (int t = 0; t < kTrials; ++t) {
            auto scaled = sensors[static_cast<std::size_t>(t)];
            for (auto& v : scaled.k_true.values()) v *= e;
            const auto captured = simulate_capture(scaled, scenes[static_cast<std::size_t>(t)],
                                                   900 + static_cast<std::uint64_t>(t));
            sum += pce(estimate_reference(captured), truth[static_cast<std::size_t>(t)]).pce;
        }
        return sum / kTrials;
    };
    const double p1 = mean_pce(1.0);
    bool pass = p1 > 0.0;
    std::string detail = "base mean PCE " + fmt(p1) + ";";
    for (const double e : {0.5, 0.7, 1.5, 2.0}) {
        const double ratio = mean_pce(e) / p1;
        const double rel = ratio / (e * e) - 1.0;
        pass = pass && std::abs(rel) <= 0.30;
        detail += " e=" + format_double(e) + " ratio " + fmt(ratio) + " (rel err " + fmt(rel, 3) + ")";
    }
    return {pass, detail};
}

// ---------------------------------------------------------------------------
// 11. CLI determinism

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Files under `a` and `b` with their relative paths; mismatching names or bytes are listed.
std::vector<std::string> tree_differences(const fs::path& a, const fs::path& b) {
    const auto listing = [](const fs::path& root) {
        std::map<std::string, fs::path> files;
        if (!fs::exists(root)) return files;
        if (fs::is_regular_file(root)) {
            files[""] = root;
            return files;
        }
        for (const auto& e : fs::recursive_directory_iterator(root)) {
            if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = e.path();
        }
        return files;
    };
    const auto fa = listing(a);
    const auto fb = listing(b);
    std::vector<std::string> diffs;
    if (fa.empty()) diffs.push_back(a.string() + " is missing or empty");
    for (const auto& [name, path] : fa) {
        const auto it = fb.find(name);
        if (it == fb.end() || read_file(path) != read_file(it->second)) diffs.push_back(a.filename().string() + "/" + name);
    }
    for (const auto& [name, path] : fb) {
        if (fa.count(name) == 0) diffs.push_back(b.filename().string() + "/" + name);
    }
    return diffs;
}

Outcome criterion_11() {
    const fs::path dir = fs::temp_directory_path() / ("blockprnu_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string cli = BLOCKPRNU_CLI;
    constexpr int kMany = 4;

    std::vector<std::string> failures;
    int commands = 0;
    // `args` may contain {W} (worker count) and {D} (per-run output suffix).
    const auto run = [&](const std::string& name, const std::string& args, bool env_workers) {
        for (const int w : {1, kMany}) {
            std::string a = args;
            for (std::size_t p; (p = a.find("{W}")) != std::string::npos;) a.replace(p, 3, std::to_string(w));
            for (std::size_t p; (p = a.find("{D}")) != std::string::npos;) a.replace(p, 3, std::to_string(w));
            std::string cmd = "cd '" + dir.string() + "' && ";
            cmd += env_workers ? "BLOCKPRNU_WORKERS=" + std::to_string(w) + " " : "";
            cmd += "'" + cli + "' " + a + " > " + name + "_" + std::to_string(w) + ".stdout 2> " + name + "_" +
                   std::to_string(w) + ".stderr";
            ++commands;
            if (std::system(cmd.c_str()) != 0) failures.push_back(name + " exited nonzero at " + std::to_string(w) + " workers");
        }
        const auto d = tree_differences(dir / (name + "_1.stdout"), dir / (name + "_" + std::to_string(kMany) + ".stdout"));
        failures.insert(failures.end(), d.begin(), d.end());
    };
    // Each pattern names an output with {D} standing for the worker count.
    const auto compare = [&](const std::vector<std::string>& patterns) {
        for (const auto& pattern : patterns) {
            const auto at = pattern.find("{D}");
            const auto name = [&](int w) { return std::string(pattern).replace(at, 3, std::to_string(w)); };
            const auto d = tree_differences(dir / name(1), dir / name(kMany));
            failures.insert(failures.end(), d.begin(), d.end());
        }
    };

    const std::string small =
        " --cameras 3 --videos-per-camera 1 --calibration-cameras 2 --width 64 --height 64 --frames 4"
        " --reference-frames 6 --bitrates 1500 3000 --seed 5";

    run("simulate", "simulate --out-dir sim{D} --seed 7 --width 64 --height 64 --frames 6 --reference-frames 8", true);
    compare({"sim{D}"});
    run("inspect", "inspect sim1/trace.txt --out inspect{D}.txt", true);
    compare({"inspect{D}.txt"});
    run("calibrate_sim", "calibrate --simulate" + small + " --out-dir cal{D} --workers {W}", false);
    compare({"cal{D}"});
    run("calibrate_obs", "calibrate --observations cal1/lambda_r_observations.csv --kind lambda_r --buckets 4"
                         " --anchor-lambda-rate 60 --out lr{D}.table --report lr{D}_report.csv",
        true);
    compare({"lr{D}.table", "lr{D}_report.csv"});
    run("estimate_ref",
        "estimate --frames sim1/reference.yuv --width 64 --height 64 --id ref --out ref{D}.fp --workers {W}", false);
    compare({"ref{D}.fp", "ref{D}.fp.json"});
    for (const std::string scheme : {"conventional", "skip_eliminate", "qp_no_skip", "lambda_r"}) {
        std::string table;
        if (scheme == "qp_no_skip") table = " --table cal1/qp_no_skip.table";
        if (scheme == "lambda_r") table = " --table cal1/lambda_r.table";
        run("estimate_" + scheme, "estimate --frames sim1/decoded.yuv --trace sim1/trace.txt --scheme " + scheme +
                                      table + " --out " + scheme + "{D}.fp --workers {W}",
            false);
        compare({scheme + "{D}.fp", scheme + "{D}.fp.json"});
    }
    run("match", "match --test conventional1.fp lambda_r1.fp --reference ref1.fp --out match{D}.csv --workers {W}",
        false);
    compare({"match{D}.csv"});
    run("evaluate_sim", "evaluate --simulate" + small + " --out-dir ev{D} --workers {W}", false);
    compare({"ev{D}"});
    run("evaluate_grid", "evaluate --grid-dir ev1 --out-dir grid{D} --workers {W}", false);
    compare({"grid{D}"});

    if (failures.empty()) fs::remove_all(dir);
    std::string detail = std::to_string(commands) + " runs at 1 and " + std::to_string(kMany) + " workers";
    if (!failures.empty()) {
        detail += "; differences:";
        for (std::size_t i = 0; i < failures.size() && i < 8; ++i) detail += " " + failures[i];
        detail += " (kept " + dir.string() + ")";
    }
    return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"formula fidelity", criterion_1},
        {"estimator oracle equivalence", criterion_2},
        {"PCE calibration", criterion_3},
        {"attribution table fixture", criterion_4},
        {"cohort scheme ordering", criterion_5},
        {"static-content SBR", criterion_6},
        {"splicing conservation", criterion_7},
        {"calibration math", criterion_8},
        {"parser suite", criterion_9},
        {"energy-ratio property", criterion_10},
        {"CLI determinism", criterion_11},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int number = static_cast<int>(i) + 1;
        if (!selected.empty() && selected.count(number) == 0) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failed;
        std::printf("criterion %2d %-30s %s  %s [%.1fs]\n", number, criteria[i].first, o.pass ? "PASS" : "FAIL",
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
