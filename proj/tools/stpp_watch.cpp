// stpp-watch: simulate, train, calibrate, detect, evaluate and plot.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "run_config.hpp"
#include "stpp/core/parallel.hpp"
#include "stpp/error.hpp"
#include "stpp/evaluate/evaluate.hpp"
#include "stpp/io/json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stpp;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

// Records every file a command writes; written last as manifest.json.
class Manifest {
public:
    Manifest(std::string command, fs::path dir, const cli::RunConfig& cfg)
        : command_(std::move(command)), dir_(std::move(dir)), config_(cli::config_to_json(cfg)),
          start_(std::chrono::steady_clock::now()) {
        fs::create_directories(dir_);
    }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    void add(const std::string& name, const std::string& kind, json extra = json::object()) {
        extra["path"] = name;
        extra["kind"] = kind;
        outputs_.push_back(std::move(extra));
    }

    void write() const {
        json m{{"command", command_},
               {"config", config_},
               {"outputs", outputs_},
               {"elapsed_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count()}};
        io::write_json_file((dir_ / "manifest.json").string(), m);
    }

private:
    std::string command_;
    fs::path dir_;
    json config_;
    json outputs_ = json::array();
    std::chrono::steady_clock::time_point start_;
};

struct CommonOptions {
    std::string config_path;
    std::string output_dir;
    std::optional<std::uint64_t> seed;
    std::size_t jobs{0};
};

cli::RunConfig load_config(const CommonOptions& o) {
    cli::RunConfig cfg = o.config_path.empty() ? cli::config_from_json(json{{"version", cli::kConfigVersion}})
                                               : cli::config_from_json(io::read_json_file(o.config_path));
    if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
    if (o.seed) {
        cfg.seed = *o.seed;
        cfg.seeds = {*o.seed};
        cfg.calibration.seed = *o.seed;
        cfg.training.seed = *o.seed;
    }
    return cfg;
}

std::size_t resolve_jobs(std::size_t flag) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv("STPP_WATCH_JOBS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::logic_error&) {
        }
        throw ConfigError("STPP_WATCH_JOBS must be a positive integer");
    }
    return core::default_jobs();
}

std::string seed_name(const char* prefix, std::uint64_t seed, const char* ext) {
    return std::string(prefix) + "_" + std::to_string(seed) + ext;
}

void cmd_simulate(const CommonOptions& o, const std::vector<std::uint64_t>& seed_list) {
    auto cfg = load_config(o);
    if (!seed_list.empty()) cfg.seeds = seed_list;
    Manifest m("simulate", cfg.output_dir, cfg);
    for (auto seed : cfg.seeds) {
        const auto stream = sim::simulate(cfg.scenario, seed);
        const auto name = seed_name("stream", seed, ".csv");
        core::write_events_csv(m.path(name), stream);
        m.add(name, "events", {{"seed", seed}, {"events", stream.size()}});
    }
    m.write();
}

void cmd_train(const CommonOptions& o, const std::string& pre_data, const std::string& post_data) {
    const auto cfg = load_config(o);
    if (pre_data.empty() && post_data.empty()) throw ConfigError("train: give --pre and/or --post data");
    Manifest m("train", cfg.output_dir, cfg);
    for (const auto& [label, path] : {std::pair<std::string, std::string>{"pre", pre_data}, {"post", post_data}}) {
        if (path.empty()) continue;
        const auto data = core::read_events_csv(path);
        const auto r = score::train_score_model(data, cfg.detector.delta, cfg.scenario.domain, cfg.training);
        const auto ckpt = "checkpoint_" + label + ".json";
        io::write_json_file(m.path(ckpt), r.model.checkpoint());
        m.add(ckpt, "checkpoint", {{"data", path}, {"events", data.size()}});
        const auto loss = "loss_" + label + ".csv";
        score::write_loss_trace_csv(m.path(loss), r.loss_trace);
        m.add(loss, "loss_trace");
    }
    m.write();
}

void cmd_calibrate(const CommonOptions& o) {
    auto cfg = load_config(o);
    cfg.calibration.jobs = resolve_jobs(o.jobs);
    Manifest m("calibrate", cfg.output_dir, cfg);
    const auto det = cli::make_detector(cfg, cfg.detector.kind);
    const auto rep = calibrate::calibrate_threshold(det, cfg.scenario, cfg.calibration);
    auto j = rep.to_json();
    j["detector"] = cfg.detector.kind;
    io::write_json_file(m.path("calibration.json"), j);
    m.add("calibration.json", "calibration", {{"gamma", rep.gamma}});
    m.write();
    std::cout << "gamma " << rep.gamma << "\n";
}

void cmd_detect(const CommonOptions& o, const std::string& stream_path, const std::string& gamma_text,
                const std::string& calibration_path, bool online) {
    const auto cfg = load_config(o);
    double gamma = cfg.detector.gamma.value_or(std::numeric_limits<double>::infinity());
    if (!calibration_path.empty()) gamma = io::read_json_file(calibration_path).at("gamma").get<double>();
    if (!gamma_text.empty()) gamma = cli::parse_gamma(gamma_text);
    const auto stream = core::read_events_csv(stream_path);
    Manifest m("detect", cfg.output_dir, cfg);
    const auto det = cli::make_detector(cfg, cfg.detector.kind, online);
    const auto r = det(stream, gamma);
    auto j = r.to_json();
    j["detector"] = online ? "primary-online" : cfg.detector.kind;
    io::write_json_file(m.path("detection.json"), j);
    m.add("detection.json", "detection", {{"detected", r.detected}});
    r.write_trajectory_csv(m.path("trajectory.csv"));
    m.add("trajectory.csv", "trajectory");
    m.write();
    std::cout << (r.detected ? "detected at t = " + std::to_string(*r.nu) : std::string("no detection")) << "\n";
}

void cmd_evaluate(const CommonOptions& o) {
    auto cfg = load_config(o);
    const std::size_t jobs = resolve_jobs(o.jobs);
    cfg.calibration.jobs = jobs;
    const auto& ev = cfg.evaluation;
    Manifest m("evaluate", cfg.output_dir, cfg);
    std::vector<evaluate::Curve> curves;
    json summary = json::object();
    for (const auto& kind : ev.detectors) {
        const auto det = cli::make_detector(cfg, kind);
        const auto cal = calibrate::calibrate_threshold(det, cfg.scenario, cfg.calibration);
        std::vector<double> grid;
        for (double f : ev.gamma_factors) grid.push_back(f * cal.gamma);
        evaluate::TradeoffOptions topts{ev.n_trials, ev.n_null_trials, ev.arl_horizon, cfg.seed, jobs};
        auto points = evaluate::tradeoff_curve(cfg.scenario, det, grid, topts);
        const auto csv = "tradeoff_" + kind + ".csv";
        evaluate::write_tradeoff_csv(m.path(csv), points);
        m.add(csv, "tradeoff_table", {{"detector", kind}});

        const auto batch = evaluate::run_batch(cfg.scenario, kind, det, cal.gamma, ev.n_trials, cfg.seed, jobs);
        const auto e = evaluate::edd(batch);
        const auto jr = evaluate::jaccard_at_stop(batch, cfg.scenario.omega);
        summary[kind] = {{"calibration", cal.to_json()},
                         {"edd", e.to_json()},
                         {"jaccard", jr.to_json()},
                         {"mean_runtime_seconds", evaluate::mean_runtime(batch)}};
        curves.push_back({kind, std::move(points)});
    }
    if (!cfg.scenario.omega.empty())
        summary["jaccard_lower_bound"] =
            evaluate::jaccard_lower_bound(cfg.scenario.omega, cfg.detector.delta, cfg.scenario.domain.s_bounds);
    io::write_json_file(m.path("report.json"), summary);
    m.add("report.json", "report");
    evaluate::write_tradeoff_svg(m.path("tradeoff_edd.svg"), curves, evaluate::Metric::Edd);
    m.add("tradeoff_edd.svg", "plot");
    evaluate::write_tradeoff_svg(m.path("tradeoff_jaccard.svg"), curves, evaluate::Metric::Jaccard);
    m.add("tradeoff_jaccard.svg", "plot");

    const auto stream = sim::simulate(cfg.scenario, cfg.seed);
    const auto snaps = evaluate::region_evolution(stream, cli::make_detector(cfg, "primary"), ev.snapshot_times);
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        const auto name = "region_" + std::to_string(k) + ".svg";
        evaluate::write_region_svg(m.path(name), snaps[k], stream, cfg.scenario.omega, cfg.scenario.domain.s_bounds);
        m.add(name, "plot", {{"t", snaps[k].t}, {"jaccard", core::jaccard(snaps[k].region, cfg.scenario.omega)}});
    }
    m.write();
}

std::vector<evaluate::TradeoffPoint> read_tradeoff_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read " + path);
    std::string line;
    std::getline(f, line);
    if (line.rfind("gamma,arl,", 0) != 0) throw ConfigError(path + ": not a tradeoff table");
    std::vector<evaluate::TradeoffPoint> out;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        cells.resize(7);
        auto num = [&](const std::string& c) -> std::optional<double> {
            if (c.empty()) return std::nullopt;
            return cli::parse_gamma(c);
        };
        evaluate::TradeoffPoint p;
        p.gamma = num(cells[0]).value_or(0.0);
        p.arl = num(cells[1]).value_or(0.0);
        p.arl_censored = static_cast<std::size_t>(num(cells[2]).value_or(0.0));
        p.edd = num(cells[3]);
        p.jaccard = num(cells[4]);
        p.false_alarm_rate = num(cells[5]).value_or(0.0);
        p.mean_runtime = num(cells[6]).value_or(0.0);
        out.push_back(p);
    }
    return out;
}

void cmd_plot(const CommonOptions& o, const std::vector<std::string>& tables, const std::string& metric,
              const std::string& detection, const std::string& stream_path, const std::string& out) {
    const auto cfg = load_config(o);
    if (tables.empty() == detection.empty()) throw ConfigError("plot: give either --table or --detection");
    Manifest m("plot", cfg.output_dir, cfg);
    if (!tables.empty()) {
        std::vector<evaluate::Curve> curves;
        for (const auto& t : tables) {
            const auto colon = t.find('=');
            const std::string label = colon == std::string::npos ? fs::path(t).stem().string() : t.substr(0, colon);
            const std::string path = colon == std::string::npos ? t : t.substr(colon + 1);
            curves.push_back({label, read_tradeoff_csv(path)});
        }
        if (metric != "edd" && metric != "jaccard") throw ConfigError("plot: --metric must be edd or jaccard");
        const auto name = out.empty() ? "tradeoff_" + metric + ".svg" : out;
        evaluate::write_tradeoff_svg(m.path(name), curves,
                                     metric == "edd" ? evaluate::Metric::Edd : evaluate::Metric::Jaccard);
        m.add(name, "plot");
    } else {
        if (stream_path.empty()) throw ConfigError("plot: --detection needs --stream");
        const auto r = detect::DetectionResult::from_json(io::read_json_file(detection));
        const auto stream = core::read_events_csv(stream_path);
        evaluate::Snapshot snap;
        snap.t = r.nu.value_or(stream.empty() ? 0.0 : stream.events().back().t) + 1e-12;
        snap.region = r.omega_hat;
        const auto name = out.empty() ? std::string("region.svg") : out;
        evaluate::write_region_svg(m.path(name), snap, stream, cfg.scenario.omega, cfg.scenario.domain.s_bounds);
        m.add(name, "plot");
    }
    m.write();
}

void add_common(CLI::App* sub, CommonOptions& o) {
    sub->add_option("-c,--config", o.config_path, "JSON run config");
    sub->add_option("-o,--output-dir", o.output_dir, "Output directory (overrides output_dir)");
    sub->add_option("--seed", o.seed, "Seed (overrides seed, seeds and the calibration/training seeds)");
    sub->add_option("-j,--jobs", o.jobs, "Worker threads (default: STPP_WATCH_JOBS or all cores)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential change detection and localization for spatio-temporal event streams"};
    app.require_subcommand(1);
    CommonOptions common;

    std::vector<std::uint64_t> seed_list;
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate event streams, one CSV per seed");
    add_common(sim_cmd, common);
    sim_cmd->add_option("--seeds", seed_list, "Seeds (overrides the config seed list)")->delimiter(',');

    std::string pre_data, post_data;
    auto* train_cmd = app.add_subcommand("train", "Train neural score models by denoising score matching");
    add_common(train_cmd, common);
    train_cmd->add_option("--pre", pre_data, "Pre-change reference events CSV");
    train_cmd->add_option("--post", post_data, "Post-change reference events CSV");

    auto* cal_cmd = app.add_subcommand("calibrate", "Calibrate the detection threshold for a target ARL");
    add_common(cal_cmd, common);

    std::string stream_path, gamma_text, calibration_path;
    bool online = false;
    auto* det_cmd = app.add_subcommand("detect", "Run a detector on an event stream");
    add_common(det_cmd, common);
    det_cmd->add_option("-s,--stream", stream_path, "Events CSV")->required();
    det_cmd->add_option("-g,--gamma", gamma_text, "Threshold (number or inf)");
    det_cmd->add_option("--calibration", calibration_path, "Take the threshold from a calibration report");
    det_cmd->add_flag("--online", online, "Refit the post-change model online (neural models only)");

    auto* eval_cmd = app.add_subcommand("evaluate", "Tradeoff tables, metrics and plots");
    add_common(eval_cmd, common);

    std::vector<std::string> tables;
    std::string metric = "edd", detection, plot_out;
    auto* plot_cmd = app.add_subcommand("plot", "Plot tradeoff tables or a detection region");
    add_common(plot_cmd, common);
    plot_cmd->add_option("-t,--table", tables, "Tradeoff CSV, optionally label=path (repeatable)");
    plot_cmd->add_option("--metric", metric, "edd or jaccard");
    plot_cmd->add_option("--detection", detection, "Detection JSON to draw");
    plot_cmd->add_option("-s,--stream", stream_path, "Events CSV drawn under the detection");
    plot_cmd->add_option("--out", plot_out, "Output file name inside the output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*sim_cmd) cmd_simulate(common, seed_list);
        else if (*train_cmd) cmd_train(common, pre_data, post_data);
        else if (*cal_cmd) cmd_calibrate(common);
        else if (*det_cmd) cmd_detect(common, stream_path, gamma_text, calibration_path, online);
        else if (*eval_cmd) cmd_evaluate(common);
        else if (*plot_cmd) cmd_plot(common, tables, metric, detection, stream_path, plot_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DivergenceError& e) {
        std::cerr << "numerical divergence: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
