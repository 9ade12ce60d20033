#include <memory>
#include <vector>

#include "blockprnu/matching.hpp"
#include "cli_util.hpp"

namespace blockprnu::cli {

namespace {

struct MatchOptions {
    std::vector<std::string> tests;
    std::vector<std::string> references;
    double threshold = kDefaultPceThreshold;
    int exclusion = 5;
    bool zero_shift = false;
    std::string out;
    int workers = 1;
};

int run_match(const MatchOptions& o) {
    PceConfig cfg;
    cfg.threshold = o.threshold;
    cfg.exclusion_half_width = o.exclusion;
    cfg.search_window = o.zero_shift ? SearchWindow::ZeroShift : SearchWindow::FullPlane;

    std::vector<Fingerprint> tests;
    std::vector<Fingerprint> references;
    for (const auto& p : o.tests) tests.push_back(load_fingerprint(p));
    for (const auto& p : o.references) references.push_back(load_fingerprint(p));

    const auto cells = batch_match(tests, references, cfg, o.workers);
    std::string text = "test,reference,pce,dx,dy,decision\n";
    for (std::size_t i = 0; i < tests.size(); ++i) {
        for (std::size_t j = 0; j < references.size(); ++j) {
            text += format_match_report_line(o.tests[i], o.references[j], cells[i][j]) + "\n";
        }
    }
    emit(o.out, text);
    return 0;
}

}  // namespace

CLI::App* add_match(CLI::App& app, Action& action) {
    auto o = std::make_shared<MatchOptions>();
    auto* cmd = app.add_subcommand("match", "PCE of every test fingerprint against every reference fingerprint (CSV)");
    cmd->add_option("--test", o->tests, "Test fingerprint file(s)")->required();
    cmd->add_option("--reference", o->references, "Reference fingerprint file(s)")->required();
    cmd->add_option("--threshold", o->threshold, "Decision threshold: match when pce > threshold")
        ->capture_default_str();
    cmd->add_option("--exclusion-half-width", o->exclusion,
                    "Half width of the neighborhood excluded around the peak (5 gives 11x11)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_flag("--zero-shift", o->zero_shift, "Read the peak at zero shift instead of searching all shifts");
    cmd->add_option("--out", o->out, "Output CSV (default: stdout)");
    add_workers_option(cmd, o->workers);
    cmd->callback([o, &action] { action = [o] { return run_match(*o); }; });
    return cmd;
}

}  // namespace blockprnu::cli
