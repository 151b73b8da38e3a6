#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "stpp/core/events.hpp"
#include "stpp/score/model.hpp"

namespace stpp::score {

// Recurrent history encoder (gated cell, width H) followed by a feed-forward head
// (one tanh layer of width W, three outputs). Parameters live in one flat vector.
struct NetWeights {
    static constexpr int kFormatVersion = 1;
    static constexpr int kInputDim = 3;
    static constexpr int kHistoryDim = 3;

    int recurrent_width{8};
    int hidden_width{64};
    std::vector<double> params;
    std::array<double, 3> x_mean{0, 0, 0};
    std::array<double, 3> x_scale{1, 1, 1};
    std::array<double, 3> h_mean{0, 0, 0};
    std::array<double, 3> h_scale{1, 1, 1};
    double output_scale{1.0};
    // Time inputs (dt and history lags) enter as log(v + time_offset).
    double time_offset{1.0};

    struct Layout {
        std::size_t wz, bz, wc, bc, w1, b1, w2, b2, total;
    };
    [[nodiscard]] Layout layout() const;
    [[nodiscard]] std::size_t parameter_count() const { return layout().total; }

    // Glorot-uniform weights, zero biases.
    static NetWeights initialize(int recurrent_width, int hidden_width, std::mt19937_64& rng);

    [[nodiscard]] nlohmann::json to_json() const;
    // Throws ConfigError on version or shape mismatch and on non-finite entries.
    static NetWeights from_json(const nlohmann::json& j);
};

// Features of one training or evaluation point.
struct NetSample {
    double dt{0.0};
    core::Point s{};
    // (t_n - t_j, s_j) for the most recent in-ball events, oldest first.
    std::vector<std::array<double, 3>> history;
};

[[nodiscard]] NetSample make_sample(const ScoreInput& in, std::size_t max_history);

// Training point: event plus the recent events in a ball widened by the noise
// reach, so the local history can be rebuilt around a perturbed location.
struct DSMPoint {
    double t{0.0};
    core::Point s{};
    std::vector<std::array<double, 3>> candidates;  // (t_j, s_j), oldest first
};

[[nodiscard]] double dsm_candidate_radius(double delta, double sigma);
[[nodiscard]] std::size_t dsm_candidate_cap(double delta, double sigma, std::size_t max_history);

// `in.local` must hold the events of the widened ball (see dsm_candidate_radius).
[[nodiscard]] DSMPoint make_dsm_point(const ScoreInput& in);
[[nodiscard]] std::vector<DSMPoint> make_dsm_points(const core::EventStream& data, double delta,
                                                    const core::Domain& domain, double sigma,
                                                    std::size_t max_history);

// Features at x + ε: the local history and t_n are recomputed for the ℓ∞ ball
// around the perturbed location; dt = max(0, t + ε_t - t_n).
[[nodiscard]] NetSample perturbed_sample(const DSMPoint& p, const Vec3& eps, double delta,
                                         std::size_t max_history);

// Forward/backward passes for a single sample.
class NetEvaluator {
public:
    explicit NetEvaluator(const NetWeights& w);

    // Encodes the history; must precede head().
    void encode(const NetSample& sample);
    // Score at (dt, s) given the last encoding.
    [[nodiscard]] Vec3 head(double dt, const core::Point& s);
    // Accumulates ∂L/∂θ into `grad` for dL/df = `dl_df` at the last head() call.
    void backward(const Vec3& dl_df, std::vector<double>& grad);

private:
    const NetWeights& w_;
    int H_, W_;
    std::vector<double> steps_;  // per step: v (3+H), z (H), c (H), h_prev (H)
    std::size_t n_steps_{0};
    std::vector<double> h_;
    std::vector<double> xin_;
    std::vector<double> act_;
};

class NeuralScoreModel final : public ScoreModel {
public:
    NeuralScoreModel(NetWeights weights, double delta, core::Domain domain,
                     std::size_t max_history = 32);

    [[nodiscard]] Vec3 score(const ScoreInput& in) const override;
    [[nodiscard]] std::optional<Vec3> jacobian_diag(const ScoreInput&) const override {
        return std::nullopt;
    }
    [[nodiscard]] double delta() const override { return delta_; }
    [[nodiscard]] const core::Domain& domain() const override { return domain_; }
    [[nodiscard]] bool needs_history() const override { return false; }
    [[nodiscard]] double history_radius() const override { return delta_; }
    [[nodiscard]] double history_lag() const override { return 0.0; }
    [[nodiscard]] std::size_t local_cap() const override { return max_history_; }
    [[nodiscard]] std::unique_ptr<ScoreModel> clone() const override;
    [[nodiscard]] std::string kind() const override { return "neural"; }

    [[nodiscard]] const NetWeights& weights() const { return weights_; }
    NetWeights& mutable_weights() { return weights_; }
    [[nodiscard]] std::size_t max_history() const { return max_history_; }

    [[nodiscard]] nlohmann::json checkpoint() const;
    static NeuralScoreModel from_checkpoint(const nlohmann::json& j);

private:
    NetWeights weights_;
    double delta_;
    core::Domain domain_;
    std::size_t max_history_;
};

struct DSMConfig {
    double sigma{0.02};
    int epochs{60};
    int batch_size{128};
    double learning_rate{2e-3};
    // Learning rate decays linearly to learning_rate * final_lr_fraction.
    double final_lr_fraction{0.05};
    // Exponential moving average of the weights; the averaged weights are returned.
    // 0 disables averaging.
    double ema_decay{0.999};
    std::uint64_t seed{0};
    int recurrent_width{8};
    int hidden_width{64};
    std::size_t max_history{32};

    void validate() const;
};

[[nodiscard]] nlohmann::json dsm_config_to_json(const DSMConfig& c);
[[nodiscard]] DSMConfig dsm_config_from_json(const nlohmann::json& j);

// ‖f(x + ε) + ε/σ²‖² with ε added to (dt, s1, s2) and dt clamped at 0.
[[nodiscard]] double dsm_loss(const ScoreModel& model, const ScoreInput& in, const Vec3& eps,
                              double sigma);

struct TrainingResult {
    NeuralScoreModel model;
    std::vector<double> loss_trace;  // mean loss per epoch
};

// Adam on the empirical DSM loss over the stream's transformed events.
// Throws ConfigError on empty data and DivergenceError on a non-finite loss.
[[nodiscard]] TrainingResult train_score_model(const core::EventStream& data, double delta,
                                               const core::Domain& domain, const DSMConfig& cfg);

// One plain gradient step of size eta on the mean DSM loss over `points`
// (one noise draw per point). Returns the mean loss before the step.
double dsm_gradient_step(NeuralScoreModel& model, const std::vector<const DSMPoint*>& points,
                         double sigma, double eta, std::mt19937_64& rng);

void write_loss_trace_csv(const std::string& path, const std::vector<double>& trace);

}  // namespace stpp::score
