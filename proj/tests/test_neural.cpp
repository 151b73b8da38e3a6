#include <doctest.h>

#include <cmath>
#include <random>

#include "stpp/error.hpp"
#include "stpp/score/neural.hpp"
#include "stpp/simulate/simulator.hpp"

using namespace stpp;
using namespace stpp::score;
using core::Box;
using core::Domain;
using core::Point;

namespace {

const Domain kUnit{1.0, Box{0, 0, 1, 1}};

NetWeights random_weights(std::uint64_t seed, int H = 4, int W = 6) {
    auto rng = sim::make_rng(seed);
    NetWeights w = NetWeights::initialize(H, W, rng);
    std::normal_distribution<double> n(0.0, 0.3);
    for (auto& p : w.params) p += n(rng);  // non-zero biases too
    w.x_mean = {0.1, 0.5, 0.5};
    w.x_scale = {0.2, 0.3, 0.3};
    w.h_mean = {0.3, 0.5, 0.5};
    w.h_scale = {0.4, 0.3, 0.3};
    w.output_scale = 1.7;
    return w;
}

NetSample sample_with_history(std::size_t n) {
    NetSample s;
    s.dt = 0.13;
    s.s = {0.42, 0.61};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t k = 0; k < n; ++k) s.history.push_back({u(rng), u(rng), u(rng)});
    return s;
}

double linear_loss(const NetWeights& w, const NetSample& s, const Vec3& c) {
    NetEvaluator ev(w);
    ev.encode(s);
    const Vec3 f = ev.head(s.dt, s.s);
    return c[0] * f[0] + c[1] * f[1] + c[2] * f[2];
}

}  // namespace

TEST_CASE("backpropagation matches finite differences") {
    for (std::size_t n_hist : {0u, 1u, 6u}) {
        NetWeights w = random_weights(11 + n_hist);
        const NetSample s = sample_with_history(n_hist);
        const Vec3 c{0.7, -1.3, 0.4};
        std::vector<double> grad(w.parameter_count(), 0.0);
        NetEvaluator ev(w);
        ev.encode(s);
        (void)ev.head(s.dt, s.s);
        ev.backward(c, grad);

        const double h = 1e-6;
        for (std::size_t i = 0; i < w.params.size(); ++i) {
            const double saved = w.params[i];
            w.params[i] = saved + h;
            const double lp = linear_loss(w, s, c);
            w.params[i] = saved - h;
            const double lm = linear_loss(w, s, c);
            w.params[i] = saved;
            const double fd = (lp - lm) / (2.0 * h);
            CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("dsm loss examples") {
    class Zero final : public ScoreModel {
    public:
        [[nodiscard]] Vec3 score(const ScoreInput&) const override { return {0, 0, 0}; }
        [[nodiscard]] std::optional<Vec3> jacobian_diag(const ScoreInput&) const override { return std::nullopt; }
        [[nodiscard]] double delta() const override { return 0.1; }
        [[nodiscard]] const Domain& domain() const override { return kUnit; }
        [[nodiscard]] bool needs_history() const override { return false; }
        [[nodiscard]] double history_radius() const override { return 0.1; }
        [[nodiscard]] double history_lag() const override { return 0.0; }
        [[nodiscard]] std::size_t local_cap() const override { return 1; }
        [[nodiscard]] std::unique_ptr<ScoreModel> clone() const override { return std::make_unique<Zero>(); }
        [[nodiscard]] std::string kind() const override { return "zero"; }
    } zero;
    const ScoreInput in{0.5, 0.2, {0.5, 0.5}, nullptr, nullptr};
    const double sigma = 0.1;
    const Vec3 eps{0.01, -0.02, 0.03};
    const double expected = (0.01 * 0.01 + 0.02 * 0.02 + 0.03 * 0.03) / std::pow(sigma, 4);
    CHECK(dsm_loss(zero, in, eps, sigma) == doctest::Approx(expected).epsilon(1e-12));

    AnalyticScoreModel hpp(sim::HawkesParams{50, 0, 1, 0.02, sim::KernelKind::Gaussian}, 0.1, kUnit);
    const Vec3 f = hpp.score(in);
    CHECK(dsm_loss(hpp, in, {0, 0, 0}, sigma) ==
          doctest::Approx(f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).epsilon(1e-12));
    CHECK_THROWS_AS((void)dsm_loss(zero, in, eps, 0.0), ConfigError);
}

TEST_CASE("checkpoint round trip") {
    const NeuralScoreModel m(random_weights(3, 8, 16), 0.1, kUnit, 7);
    const auto j = m.checkpoint();
    const auto back = NeuralScoreModel::from_checkpoint(nlohmann::json::parse(j.dump()));
    CHECK(back.weights().params == m.weights().params);
    CHECK(back.weights().output_scale == m.weights().output_scale);
    CHECK(back.max_history() == 7);
    const ScoreInput in{0.5, 0.3, {0.4, 0.4}, nullptr, nullptr};
    CHECK(back.score(in) == m.score(in));

    auto bad = j;
    bad["layers"][0]["shape"][1] = 3;
    CHECK_THROWS_AS((void)NeuralScoreModel::from_checkpoint(bad), ConfigError);
    bad = j;
    bad["format_version"] = 99;
    CHECK_THROWS_AS((void)NeuralScoreModel::from_checkpoint(bad), ConfigError);
}

TEST_CASE("dsm config json") {
    DSMConfig c;
    c.epochs = 3;
    c.learning_rate = 1e-2;
    const auto back = dsm_config_from_json(dsm_config_to_json(c));
    CHECK(back.epochs == 3);
    CHECK(back.learning_rate == 1e-2);
    CHECK_THROWS_AS((void)dsm_config_from_json({{"epochs", 2}, {"lr", 0.1}}), ConfigError);
    CHECK_THROWS_AS((void)dsm_config_from_json({{"sigma", -1.0}}), ConfigError);
}

TEST_CASE("training is deterministic and the loss decreases") {
    auto sc = sim::reference_scenario(0.0);
    sc.pre.mu = 50.0;
    sc.post.mu = 50.0;
    sc.domain.t_end = 20.0;
    const auto data = sim::simulate(sc, 4);
    DSMConfig cfg;
    cfg.epochs = 12;
    cfg.hidden_width = 16;
    cfg.seed = 9;
    const auto a = train_score_model(data, 0.1, sc.domain, cfg);
    const auto b = train_score_model(data, 0.1, sc.domain, cfg);
    CHECK(a.model.weights().params == b.model.weights().params);
    REQUIRE(a.loss_trace.size() == 12);
    double first = 0.0, last = 0.0;
    for (int i = 0; i < 4; ++i) {
        first += a.loss_trace[i];
        last += a.loss_trace[8 + i];
    }
    CHECK(last <= first * 1.02);

    cfg.learning_rate = 1e300;
    CHECK_THROWS_AS((void)train_score_model(data, 0.1, sc.domain, cfg), DivergenceError);
    CHECK_THROWS_AS((void)train_score_model(core::EventStream{}, 0.1, sc.domain, DSMConfig{}), ConfigError);
}

TEST_CASE("unperturbed training features match the inference features") {
    auto sc = sim::reference_scenario(0.0);
    sc.domain.t_end = 0.3;
    sc.tau = 0.2;
    const auto data = sim::simulate(sc, 2);
    const double delta = 0.1, sigma = 0.02;
    const std::size_t cap = 8;
    const auto points = make_dsm_points(data, delta, sc.domain, sigma, cap);
    HistoryTracker tracker(sc.domain, delta, false, delta, 0.0, cap);
    REQUIRE(points.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& in = tracker.prepare(data[i]);
        const NetSample a = make_sample(in, cap);
        const NetSample b = perturbed_sample(points[i], {0, 0, 0}, delta, cap);
        CHECK(a.dt == b.dt);
        CHECK(a.history == b.history);
        tracker.add(data[i]);
    }
}
