#include "run_config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "stpp/baselines/baselines.hpp"
#include "stpp/error.hpp"
#include "stpp/io/json.hpp"

namespace stpp::cli {

namespace {

using nlohmann::json;

constexpr std::uint64_t kReferenceIndex = 1'000'000;  // stream indices of fitted reference data

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

json gamma_to_json(const std::optional<double>& g) { return g ? json(*g) : json("inf"); }

std::optional<double> gamma_from_json(const json& j) {
    if (j.is_string()) {
        const double g = parse_gamma(j.get<std::string>());
        return std::isinf(g) ? std::nullopt : std::optional<double>(g);
    }
    return j.get<double>();
}

DetectorSpec detector_from_json(const json& j) {
    io::reject_unknown_keys(j,
                            {"kind", "delta", "K", "warm_start", "gamma", "weight", "score", "post_model",
                             "checkpoint_pre", "checkpoint_post", "grid", "dt_bin", "aggregation", "online"},
                            "detector");
    DetectorSpec d;
    read(j, "kind", d.kind);
    read(j, "delta", d.delta);
    read(j, "K", d.K);
    read(j, "warm_start", d.warm_start);
    if (j.contains("gamma")) d.gamma = gamma_from_json(j.at("gamma"));
    if (j.contains("weight")) {
        const auto& w = j.at("weight");
        io::reject_unknown_keys(w, {"mode", "cap"}, "detector.weight");
        if (w.contains("mode")) d.weight.mode = score::weight_mode_from_name(w.at("mode").get<std::string>());
        if (w.contains("cap") && !w.at("cap").is_null()) d.weight.cap = w.at("cap").get<double>();
    }
    read(j, "score", d.score);
    read(j, "post_model", d.post_model);
    read(j, "checkpoint_pre", d.checkpoint_pre);
    read(j, "checkpoint_post", d.checkpoint_post);
    read(j, "grid", d.grid);
    read(j, "dt_bin", d.dt_bin);
    read(j, "aggregation", d.aggregation);
    if (j.contains("online")) {
        const auto& o = j.at("online");
        io::reject_unknown_keys(o, {"eta", "steps_per_event", "sigma", "batch_cap", "seed"}, "detector.online");
        read(o, "eta", d.online.eta);
        read(o, "steps_per_event", d.online.steps_per_event);
        read(o, "sigma", d.online.sigma);
        read(o, "batch_cap", d.online.batch_cap);
        read(o, "seed", d.online.seed);
    }

    static const char* const kinds[] = {"primary", "cusum", "scusum", "pp-cusum", "min-cusum"};
    if (std::find(std::begin(kinds), std::end(kinds), d.kind) == std::end(kinds))
        throw ConfigError("detector: unknown kind '" + d.kind + "'");
    if (d.score != "analytic" && d.score != "neural") throw ConfigError("detector: score must be analytic or neural");
    if (d.post_model != "regional" && d.post_model != "global")
        throw ConfigError("detector: post_model must be regional or global");
    if (d.aggregation != "sum" && d.aggregation != "max") throw ConfigError("detector: aggregation must be sum or max");
    if (!(d.delta > 0.0)) throw ConfigError("detector: delta must be positive");
    if (d.grid < 1) throw ConfigError("detector: grid must be >= 1");
    if (!(d.dt_bin > 0.0)) throw ConfigError("detector: dt_bin must be positive");
    detect::DetectorOptions{1.0, d.K, d.warm_start}.validate();
    d.weight.validate();
    d.online.validate();
    return d;
}

json detector_to_json(const DetectorSpec& d) {
    return {{"kind", d.kind},
            {"delta", d.delta},
            {"K", d.K},
            {"warm_start", d.warm_start},
            {"gamma", gamma_to_json(d.gamma)},
            {"weight", {{"mode", score::weight_mode_name(d.weight.mode)}, {"cap", d.weight.cap ? json(*d.weight.cap) : json(nullptr)}}},
            {"score", d.score},
            {"post_model", d.post_model},
            {"checkpoint_pre", d.checkpoint_pre},
            {"checkpoint_post", d.checkpoint_post},
            {"grid", d.grid},
            {"dt_bin", d.dt_bin},
            {"aggregation", d.aggregation},
            {"online",
             {{"eta", d.online.eta},
              {"steps_per_event", d.online.steps_per_event},
              {"sigma", d.online.sigma},
              {"batch_cap", d.online.batch_cap},
              {"seed", d.online.seed}}}};
}

EvaluationSpec evaluation_from_json(const json& j) {
    io::reject_unknown_keys(j, {"n_trials", "n_null_trials", "arl_horizon", "gamma_factors", "snapshot_times", "detectors"},
                            "evaluation");
    EvaluationSpec e;
    read(j, "n_trials", e.n_trials);
    read(j, "n_null_trials", e.n_null_trials);
    read(j, "arl_horizon", e.arl_horizon);
    read(j, "gamma_factors", e.gamma_factors);
    read(j, "snapshot_times", e.snapshot_times);
    read(j, "detectors", e.detectors);
    if (e.n_trials == 0 || e.n_null_trials == 0) throw ConfigError("evaluation: trial counts must be positive");
    if (!(e.arl_horizon > 0.0)) throw ConfigError("evaluation: arl_horizon must be positive");
    if (e.gamma_factors.empty()) throw ConfigError("evaluation: gamma_factors must not be empty");
    for (double f : e.gamma_factors)
        if (!(f > 0.0)) throw ConfigError("evaluation: gamma_factors must be positive");
    return e;
}

json evaluation_to_json(const EvaluationSpec& e) {
    return {{"n_trials", e.n_trials},           {"n_null_trials", e.n_null_trials},
            {"arl_horizon", e.arl_horizon},     {"gamma_factors", e.gamma_factors},
            {"snapshot_times", e.snapshot_times}, {"detectors", e.detectors}};
}

score::NeuralScoreModel load_checkpoint(const std::string& path, const char* which) {
    if (path.empty()) throw ConfigError(std::string("detector: neural score needs checkpoint_") + which);
    return score::NeuralScoreModel::from_checkpoint(io::read_json_file(path));
}

core::Domain binning_domain(const core::Domain& base, const core::EventStream& s) {
    auto d = base;
    if (!s.empty()) d.t_end = std::max(d.t_end, s.events().back().t);
    return d;
}

}  // namespace

double parse_gamma(const std::string& text) {
    if (text == "inf" || text == "infinity" || text == "Infinity") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double g = std::stod(text, &used);
        if (used != text.size()) throw ConfigError("bad threshold '" + text + "'");
        return g;
    } catch (const std::logic_error&) {
        throw ConfigError("bad threshold '" + text + "'");
    }
}

RunConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    io::reject_unknown_keys(j,
                            {"version", "seed", "seeds", "output_dir", "scenario", "detector", "training",
                             "calibration", "evaluation"},
                            "config");
    if (!j.contains("version")) throw ConfigError("config: missing 'version'");
    RunConfig c;
    try {
        c.version = j.at("version").get<int>();
        if (c.version != kConfigVersion)
            throw ConfigError("config: unsupported version " + std::to_string(c.version));
        read(j, "seed", c.seed);
        c.seeds = {c.seed};
        read(j, "seeds", c.seeds);
        read(j, "output_dir", c.output_dir);
        if (j.contains("scenario")) c.scenario = sim::scenario_from_json(j.at("scenario"));
        if (j.contains("detector")) c.detector = detector_from_json(j.at("detector"));
        if (j.contains("training")) c.training = score::dsm_config_from_json(j.at("training"));
        if (j.contains("calibration")) c.calibration = calibrate::calibration_config_from_json(j.at("calibration"));
        if (j.contains("evaluation")) c.evaluation = evaluation_from_json(j.at("evaluation"));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (c.seeds.empty()) throw ConfigError("config: seeds must not be empty");
    return c;
}

json config_to_json(const RunConfig& c) {
    return {{"version", c.version},
            {"seed", c.seed},
            {"seeds", c.seeds},
            {"output_dir", c.output_dir},
            {"scenario", sim::scenario_to_json(c.scenario)},
            {"detector", detector_to_json(c.detector)},
            {"training", score::dsm_config_to_json(c.training)},
            {"calibration", calibrate::calibration_config_to_json(c.calibration)},
            {"evaluation", evaluation_to_json(c.evaluation)}};
}

calibrate::Detector make_detector(const RunConfig& cfg, const std::string& kind, bool online) {
    const auto& sc = cfg.scenario;
    const auto& d = cfg.detector;
    if (kind == "primary") {
        detect::DetectorOptions opts{0.0, d.K, d.warm_start};
        const auto wcfg = d.weight;
        if (online) {
            if (d.score != "neural") throw ConfigError("detect --online requires a neural score model");
            auto m0 = std::make_shared<score::NeuralScoreModel>(load_checkpoint(d.checkpoint_pre, "pre"));
            const auto oo = d.online;
            return [m0, wcfg, opts, oo](const core::EventStream& s, double gamma) {
                auto o = opts;
                o.gamma = gamma;
                return detect::run_online_detector(s, *m0, wcfg, o, oo);
            };
        }
        std::shared_ptr<const score::ScoreModel> m0, m1;
        if (d.score == "neural") {
            m0 = std::make_shared<score::NeuralScoreModel>(load_checkpoint(d.checkpoint_pre, "pre"));
            m1 = std::make_shared<score::NeuralScoreModel>(load_checkpoint(d.checkpoint_post, "post"));
        } else {
            m0 = std::make_shared<score::AnalyticScoreModel>(sc.pre, d.delta, sc.domain);
            if (d.post_model == "regional")
                m1 = std::make_shared<score::AnalyticScoreModel>(
                    score::AnalyticScoreModel::regional(sc.pre, sc.omega, sc.post.mu, d.delta, sc.domain));
            else
                m1 = std::make_shared<score::AnalyticScoreModel>(sc.post, d.delta, sc.domain);
        }
        return [m0, m1, wcfg, opts](const core::EventStream& s, double gamma) {
            auto o = opts;
            o.gamma = gamma;
            return detect::run_detector(s, *m0, *m1, wcfg, o);
        };
    }
    if (online) throw ConfigError("--online applies to the primary detector only");
    const int grid = d.grid;
    const double dt_bin = d.dt_bin;
    if (kind == "cusum") {
        return [sc, grid, dt_bin](const core::EventStream& s, double gamma) {
            const auto series = baselines::bin_events(s, grid, dt_bin, binning_domain(sc.domain, s));
            return baselines::cusum_binned(series, sc.pre.mu, sc.post.mu, gamma).result;
        };
    }
    if (kind == "min-cusum") {
        const auto agg = d.aggregation == "max" ? baselines::Aggregation::Max : baselines::Aggregation::Sum;
        return [sc, grid, dt_bin, agg](const core::EventStream& s, double gamma) {
            const auto series = baselines::bin_events(s, grid, dt_bin, binning_domain(sc.domain, s));
            return baselines::min_cusum(series, sc.pre.mu, sc.post.mu, gamma, agg).result;
        };
    }
    if (kind == "pp-cusum") {
        return [sc](const core::EventStream& s, double gamma) {
            return baselines::pp_cusum(s, sc.pre, sc.post, gamma, binning_domain(sc.domain, s)).result;
        };
    }
    if (kind == "scusum") {
        // Reference data: one pre-change stream and one stream in the post-change regime from t = 0.
        auto post_sc = sc;
        post_sc.tau = 0.0;
        const auto fit = [&](const sim::ChangeScenario& s, std::uint64_t index) {
            return baselines::GaussianModel::fit(
                baselines::bin_events(sim::simulate(s, cfg.seed, index), grid, dt_bin, s.domain));
        };
        const auto m0 = fit(sc.without_change(), kReferenceIndex);
        const auto m1 = fit(post_sc, kReferenceIndex + 1);
        return [sc, grid, dt_bin, m0, m1](const core::EventStream& s, double gamma) {
            const auto series = baselines::bin_events(s, grid, dt_bin, binning_domain(sc.domain, s));
            return baselines::scusum_binned(series, m0, m1, gamma).result;
        };
    }
    throw ConfigError("unknown detector kind '" + kind + "'");
}

}  // namespace stpp::cli
