#include <memory>

#include "blockprnu/calibration.hpp"
#include "blockprnu/experiment.hpp"
#include "blockprnu/trace_io.hpp"
#include "cli_util.hpp"

namespace blockprnu::cli {

namespace {

struct CalibrateOptions {
    std::string observations;
    std::string kind = "qp";
    std::string scheme = "qp_all";
    int anchor_qp = kDefaultAnchorQp;
    double anchor_lambda_rate = kDefaultAnchorLambdaRate;
    int buckets = kDefaultLambdaRateBuckets;
    bool sparse = false;
    bool smooth = false;
    std::string out;
    std::string report;
    bool simulate = false;
    std::string out_dir;
    CohortConfig cohort;
    int workers = 1;
};

WeightTable maybe_smooth(const WeightTable& t, bool smooth) { return smooth ? monotone_smooth(t) : t; }

int run_from_observations(const CalibrateOptions& o) {
    if (o.out.empty()) fail(ErrorKind::Usage, "--out is required");
    const auto text = read_text_file(o.observations);
    CalibrationResult result;
    if (o.kind == "qp") {
        const auto scheme = parse_table_scheme(o.scheme);
        if (!scheme || (*scheme != TableScheme::QpAll && *scheme != TableScheme::QpNoSkip)) {
            fail(ErrorKind::Usage, "--scheme must be qp_all or qp_no_skip");
        }
        result = calibrate_qp(parse_qp_observations(text), *scheme, o.anchor_qp);
        if (!o.sparse) {
            result.table = densify_qp_table(*scheme, result.table.keys, result.table.weights, o.anchor_qp);
        }
    } else if (o.kind == "lambda_r") {
        result = calibrate_lambda_rate(parse_lambda_rate_observations(text), o.buckets, o.anchor_lambda_rate);
    } else {
        fail(ErrorKind::Usage, "--kind must be qp or lambda_r");
    }
    emit(o.out, serialize_weight_table(maybe_smooth(result.table, o.smooth)));
    if (!o.report.empty()) write_text_file(o.report, format_calibration_report(result));
    return 0;
}

int run_simulated(const CalibrateOptions& o) {
    if (o.out_dir.empty()) fail(ErrorKind::Usage, "--simulate requires --out-dir");
    auto cfg = o.cohort;
    cfg.workers = o.workers;
    const auto tables = calibrate_tables(cfg);
    const std::filesystem::path dir(o.out_dir);
    ensure_directory(dir);
    save_weight_table(dir / "qp_all.table", maybe_smooth(o.sparse ? tables.qp_all.table : tables.qp_all_dense, o.smooth));
    save_weight_table(dir / "qp_no_skip.table",
                      maybe_smooth(o.sparse ? tables.qp_no_skip.table : tables.qp_no_skip_dense, o.smooth));
    save_weight_table(dir / "lambda_r.table", maybe_smooth(tables.lambda_r.table, o.smooth));
    write_text_file(dir / "qp_all_report.csv", format_calibration_report(tables.qp_all));
    write_text_file(dir / "qp_no_skip_report.csv", format_calibration_report(tables.qp_no_skip));
    write_text_file(dir / "lambda_r_report.csv", format_calibration_report(tables.lambda_r));
    write_text_file(dir / "qp_all_observations.csv", serialize_qp_observations(tables.qp_all_observations));
    write_text_file(dir / "qp_no_skip_observations.csv", serialize_qp_observations(tables.qp_no_skip_observations));
    write_text_file(dir / "lambda_r_observations.csv",
                    serialize_lambda_rate_observations(tables.lambda_rate_observations));
    write_text_file(dir / "calibration.json", cohort_json(cfg).dump(2) + "\n");
    return 0;
}

}  // namespace

CLI::App* add_calibrate(CLI::App& app, Action& action) {
    auto o = std::make_shared<CalibrateOptions>();
    auto* cmd = app.add_subcommand(
        "calibrate", "Fit a weight table from (condition, PCE) observations, or simulate calibration cameras "
                     "and fit all three tables");
    cmd->add_option("--observations", o->observations,
                    "Observation CSV: 'camera_id,qp,pce' or 'camera_id,lambda_rate,pce' header");
    cmd->add_option("--kind", o->kind, "qp or lambda_r")->capture_default_str();
    cmd->add_option("--scheme", o->scheme, "QP table flavor: qp_all or qp_no_skip")->capture_default_str();
    cmd->add_option("--anchor-qp", o->anchor_qp, "QP whose mean PCE normalizes each camera")
        ->check(CLI::Range(kMinQp, kMaxQp))
        ->capture_default_str();
    cmd->add_option("--anchor-lambda-rate", o->anchor_lambda_rate,
                    "lambda*R value whose bucket normalizes each camera")
        ->capture_default_str();
    cmd->add_option("--buckets", o->buckets, "Equal-population lambda*R buckets")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_flag("--sparse", o->sparse, "Write QP tables at the observed QPs only instead of all 52");
    cmd->add_flag("--smooth", o->smooth, "Apply a monotone fit to the table before writing");
    cmd->add_option("--out", o->out, "Weight table output (- for stdout)");
    cmd->add_option("--report", o->report, "Per-camera audit CSV");
    cmd->add_flag("--simulate", o->simulate, "Calibrate on simulated cameras instead of an observation file");
    cmd->add_option("--out-dir", o->out_dir, "Output directory for --simulate");
    add_cohort_options(cmd, o->cohort);
    add_workers_option(cmd, o->workers);
    cmd->callback([o, &action] {
        action = [o] {
            if (o->simulate) return run_simulated(*o);
            if (o->observations.empty()) fail(ErrorKind::Usage, "--observations or --simulate is required");
            return run_from_observations(*o);
        };
    });
    return cmd;
}

}  // namespace blockprnu::cli
