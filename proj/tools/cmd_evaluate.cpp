#include <algorithm>
#include <iostream>
#include <memory>
#include <set>

#include "blockprnu/evaluation.hpp"
#include "blockprnu/experiment.hpp"
#include "blockprnu/text.hpp"
#include "blockprnu/trace_io.hpp"
#include "cli_util.hpp"

namespace blockprnu::cli {

namespace {

struct EvaluateOptions {
    std::string grid_dir;
    std::string out_dir;
    std::vector<double> edges{kDefaultBppEdges.begin(), kDefaultBppEdges.end()};
    double threshold = kDefaultPceThreshold;
    std::vector<double> low_bitrates;
    bool simulate = false;
    CohortConfig cohort;
    int workers = 1;
};

std::string summary_by_bitrate(const ExperimentGrid& grid) {
    std::set<double> bitrates;
    for (const auto& r : grid.rows) bitrates.insert(r.bitrate);
    std::string out = "bitrate,scheme,reports,mean_pce,ratio_vs_conventional\n";
    for (const double b : bitrates) {
        const std::vector<double> one{b};
        for (const auto& s : summarize(grid, one)) {
            out += format_double(b) + "," + std::string(to_string(s.scheme)) + "," + std::to_string(s.reports) + "," +
                   format_significant(s.mean_pce, 6) + "," +
                   (s.ratio_vs_conventional ? format_ratio(*s.ratio_vs_conventional) : std::string("-")) + "\n";
        }
    }
    return out;
}

void write_analysis(const ExperimentGrid& grid, const EvaluateOptions& o, const std::vector<double>& low) {
    const auto table = format_threshold_table(threshold_table(grid, o.edges, o.threshold));
    if (o.out_dir.empty()) {
        emit("", table);
        return;
    }
    const std::filesystem::path dir(o.out_dir);
    ensure_directory(dir);
    write_text_file(dir / "table1.csv", table);
    write_text_file(dir / "summary.csv", format_summary(summarize(grid)));
    write_text_file(dir / "summary_by_bitrate.csv", summary_by_bitrate(grid));
    if (!low.empty()) write_text_file(dir / "summary_low.csv", format_summary(summarize(grid, low)));

    const bool has_non_matching =
        std::any_of(grid.rows.begin(), grid.rows.end(), [](const GridRow& r) { return !r.matching; });
    if (!has_non_matching) {
        std::cerr << "note: no non-matching rows, ROC curves skipped\n";
        return;
    }
    std::string aucs = "scheme,auc\n";
    for (const auto s : grid.schemes) {
        const auto col = grid.column(s);
        std::vector<double> pos;
        std::vector<double> neg;
        for (const auto& r : grid.rows) {
            const auto& cell = r.cells[col];
            if (!cell.ok()) continue;
            (r.matching ? pos : neg).push_back(cell.report->pce);
        }
        if (pos.empty() || neg.empty()) continue;
        const auto curve = roc(pos, neg);
        write_text_file(dir / ("roc_" + std::string(to_string(s)) + ".csv"), format_roc(curve));
        aucs += std::string(to_string(s)) + "," + format_double(curve.auc()) + "\n";
    }
    write_text_file(dir / "auc.csv", aucs);
}

int run_evaluate(const EvaluateOptions& o) {
    if (o.simulate) {
        if (o.out_dir.empty()) fail(ErrorKind::Usage, "--simulate requires --out-dir");
        auto cfg = o.cohort;
        cfg.workers = o.workers;
        const auto result = run_cohort(cfg);
        const std::filesystem::path dir(o.out_dir);
        ensure_directory(dir);
        write_text_file(dir / "grid.csv", serialize_grid(result.grid));
        write_text_file(dir / "sbr.csv", format_sbr_summary(sbr_summary(result.sbr)));
        save_weight_table(dir / "qp_all.table", result.tables.qp_all_dense);
        save_weight_table(dir / "qp_no_skip.table", result.tables.qp_no_skip_dense);
        save_weight_table(dir / "lambda_r.table", result.tables.lambda_r.table);
        write_text_file(dir / "cohort.json", cohort_json(cfg).dump(2) + "\n");
        auto low = o.low_bitrates;
        if (low.empty()) {
            auto sorted = cfg.bitrates;
            std::sort(sorted.begin(), sorted.end());
            low.assign(sorted.begin(), sorted.begin() + std::min<std::ptrdiff_t>(2, std::ssize(sorted)));
        }
        write_analysis(result.grid, o, low);
        return 0;
    }
    if (o.grid_dir.empty()) fail(ErrorKind::Usage, "--grid-dir or --simulate is required");
    const auto grid = parse_grid(read_text_file(std::filesystem::path(o.grid_dir) / "grid.csv"));
    write_analysis(grid, o, o.low_bitrates);
    return 0;
}

}  // namespace

CLI::App* add_evaluate(CLI::App& app, Action& action) {
    auto o = std::make_shared<EvaluateOptions>();
    auto* cmd = app.add_subcommand(
        "evaluate", "Attribution table, scheme summaries and ROC curves from a grid directory (grid.csv), "
                    "or from a freshly simulated cohort");
    cmd->add_option("--grid-dir", o->grid_dir, "Directory holding grid.csv");
    cmd->add_option("--out-dir", o->out_dir,
                    "Writes table1.csv, summary*.csv, roc_<scheme>.csv, auc.csv here (default: table to stdout)");
    cmd->add_option("--edges", o->edges, "Bits-per-pixel group edges, ascending")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--threshold", o->threshold, "PCE attribution threshold")->capture_default_str();
    cmd->add_option("--low-bitrates", o->low_bitrates,
                    "Bitrate proxies pooled into summary_low.csv (simulate default: the two lowest)")
        ->delimiter(',');
    cmd->add_flag("--simulate", o->simulate, "Simulate a cohort (calibration included) and evaluate it");
    add_cohort_options(cmd, o->cohort);
    add_workers_option(cmd, o->workers);
    cmd->callback([o, &action] { action = [o] { return run_evaluate(*o); }; });
    return cmd;
}

}  // namespace blockprnu::cli
