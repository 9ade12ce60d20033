#include <array>
#include <memory>

#include "blockprnu/text.hpp"
#include "blockprnu/trace_io.hpp"
#include "cli_util.hpp"

namespace blockprnu::cli {

namespace {

struct InspectOptions {
    std::string trace;
    std::string stream;
    std::string out;
};

int run_inspect(const InspectOptions& o) {
    const auto trace = load_trace(o.trace);
    std::array<std::size_t, 4> counts{};
    for (const auto& r : trace.records) ++counts[static_cast<std::size_t>(r.type)];

    std::string text;
    text += "trace=" + o.trace + "\n";
    text += "frames=" + std::to_string(trace.header.frame_count) + " width=" + std::to_string(trace.header.width) +
            " height=" + std::to_string(trace.header.height) + " mb=" + std::to_string(trace.header.macroblock_size) +
            "\n";
    text += "blocks=" + std::to_string(trace.records.size());
    for (const auto t : {BlockType::I, BlockType::P, BlockType::B, BlockType::Skip}) {
        text += " " + std::string(to_string(t)) + "=" + std::to_string(counts[static_cast<std::size_t>(t)]);
    }
    text += "\n";
    text += "sbr=" + format_double(skipped_block_rate(trace)) + "\n";
    text += "bpp=" + format_double(bits_per_pixel(trace)) + "\n";

    if (!o.stream.empty()) {
        const auto bytes = read_text_file(o.stream);
        const auto summary =
            parse_stream(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
        text += "stream=" + o.stream + " slices=" + std::to_string(summary.slices.size()) +
                " frames=" + std::to_string(summary.frame_count()) + "\n";
        for (const auto& w : cross_check(trace, summary)) text += "warning: " + w + "\n";
    }
    emit(o.out, text);
    return 0;
}

}  // namespace

CLI::App* add_inspect(CLI::App& app, Action& action) {
    auto o = std::make_shared<InspectOptions>();
    auto* cmd = app.add_subcommand("inspect", "Summarize a block trace: frames, block types, SBR, bits per pixel");
    cmd->add_option("trace", o->trace, "Block trace file")->required();
    cmd->add_option("--stream", o->stream, "H.264 Annex-B stream to cross-check slice QPs and frame count");
    cmd->add_option("--out", o->out, "Output file (default: stdout)");
    cmd->callback([o, &action] { action = [o] { return run_inspect(*o); }; });
    return cmd;
}

}  // namespace blockprnu::cli
