#pragma once

#include <memory>
#include <optional>
#include <string>

#include "stpp/core/events.hpp"
#include "stpp/score/weight.hpp"
#include "stpp/simulate/hawkes.hpp"

namespace stpp::score {

// Evaluation point for a score model. `t_n` is the most recent earlier event
// inside the δ-ball of the anchoring event; both buffers are fixed when the
// evaluation point is perturbed for finite differences.
struct ScoreInput {
    double t{0.0};
    double t_n{0.0};
    core::Point s{};
    // Events with t_j < t whose kernel mass can reach the ball (any order).
    const sim::EventBuffer* history{nullptr};
    // In-ball events before t, oldest first (at most the model's history cap).
    const sim::EventBuffer* local{nullptr};

    [[nodiscard]] double dt() const { return t - t_n; }
    [[nodiscard]] core::TransformedEvent transformed() const { return {t - t_n, s}; }
};

// f(x; δ) = ∇_x log p(x; δ), ordered (∂dt, ∂s1, ∂s2).
class ScoreModel {
public:
    virtual ~ScoreModel() = default;

    [[nodiscard]] virtual Vec3 score(const ScoreInput& in) const = 0;
    // Diagonal of ∇f when available in closed form.
    [[nodiscard]] virtual std::optional<Vec3> jacobian_diag(const ScoreInput& in) const = 0;
    [[nodiscard]] virtual double delta() const = 0;
    [[nodiscard]] virtual const core::Domain& domain() const = 0;

    // Whether `history` must be supplied, how far from s it must reach, and the
    // lag beyond which events can be dropped.
    [[nodiscard]] virtual bool needs_history() const = 0;
    [[nodiscard]] virtual double history_radius() const = 0;
    [[nodiscard]] virtual double history_lag() const = 0;
    // Number of most recent in-ball events the model reads from `local`.
    [[nodiscard]] virtual std::size_t local_cap() const = 0;

    [[nodiscard]] virtual std::unique_ptr<ScoreModel> clone() const = 0;
    [[nodiscard]] virtual std::string kind() const = 0;
};

enum class IntegralMethod { ClosedForm, Quadrature };

// Exact score of the localized conditional density of a Hawkes regime.
class AnalyticScoreModel final : public ScoreModel {
public:
    AnalyticScoreModel(sim::HawkesParams params, double delta, core::Domain domain,
                       IntegralMethod method = IntegralMethod::ClosedForm);

    // Regime whose base rate is `region_mu` on `region` and params.mu elsewhere,
    // e.g. the post-change process of a localized change.
    static AnalyticScoreModel regional(sim::HawkesParams params, const core::RegionUnion& region,
                                       double region_mu, double delta, core::Domain domain,
                                       IntegralMethod method = IntegralMethod::ClosedForm);

    [[nodiscard]] Vec3 score(const ScoreInput& in) const override;
    [[nodiscard]] std::optional<Vec3> jacobian_diag(const ScoreInput& in) const override;
    [[nodiscard]] double delta() const override { return delta_; }
    [[nodiscard]] const core::Domain& domain() const override { return domain_; }
    [[nodiscard]] bool needs_history() const override { return params_.alpha > 0.0; }
    [[nodiscard]] double history_radius() const override;
    [[nodiscard]] double history_lag() const override { return sim::negligible_lag(params_.beta); }
    [[nodiscard]] std::size_t local_cap() const override { return 1; }
    [[nodiscard]] std::unique_ptr<ScoreModel> clone() const override;
    [[nodiscard]] std::string kind() const override { return "analytic"; }

    [[nodiscard]] const sim::HawkesParams& params() const { return params_; }
    [[nodiscard]] bool is_regional() const { return !region_.empty(); }
    // Base rate at s.
    [[nodiscard]] double base_rate(const core::Point& s) const;
    [[nodiscard]] IntegralMethod method() const { return method_; }
    // λ at the evaluation point; throws DegenerateIntensityError when it is not positive.
    [[nodiscard]] double intensity(const ScoreInput& in) const;
    // log p(x; δ) = log λ(x) - Λ over [t_n, t) × B(x).
    [[nodiscard]] double log_density(const ScoreInput& in) const;

private:
    [[nodiscard]] Vec3 score_closed_form(const ScoreInput& in) const;
    [[nodiscard]] Vec3 score_quadrature(const ScoreInput& in) const;
    // ∫_B μ(s') ds' and its derivatives in s1, s2 (the ball moves with s).
    struct BaseMass {
        double value, d1, d2;
    };
    [[nodiscard]] BaseMass base_mass(const core::Point& s, const core::Box& B) const;

    sim::HawkesParams params_;
    double delta_;
    core::Domain domain_;
    IntegralMethod method_;
    sim::SpatialKernel kernel_;
    std::vector<core::Box> region_;  // disjoint boxes
    double region_excess_{0.0};       // region rate minus params.mu
};

// Maintains the score inputs of a stream processed in time order.
class HistoryTracker {
public:
    // `history_radius` and `history_lag` are the maxima over the models served;
    // `local_cap` the largest in-ball history requested.
    HistoryTracker(const core::Domain& domain, double delta, bool needs_history,
                   double history_radius, double history_lag, std::size_t local_cap);
    // Convenience: sized for every model in the list.
    HistoryTracker(const core::Domain& domain, std::initializer_list<const ScoreModel*> models);

    // Input for x; every event added so far is treated as history. The returned
    // reference stays valid until the next call.
    const ScoreInput& prepare(const core::Event& x);
    void add(const core::Event& x);

    // Independent copies of the buffers of the last prepared input.
    struct Snapshot {
        double t{0.0};
        double t_n{0.0};
        core::Point s{};
        std::shared_ptr<const sim::EventBuffer> history;
        std::shared_ptr<const sim::EventBuffer> local;
        [[nodiscard]] ScoreInput input() const { return {t, t_n, s, history.get(), local.get()}; }
    };
    [[nodiscard]] Snapshot snapshot() const;

private:
    core::Domain domain_;
    double delta_;
    bool needs_history_;
    double radius_;
    std::size_t local_cap_;
    sim::ExcitationIndex index_;
    sim::EventBuffer history_;
    sim::EventBuffer local_;
    ScoreInput input_;
};

// Score inputs for every event of a stream, as independent snapshots.
[[nodiscard]] std::vector<HistoryTracker::Snapshot> build_inputs(
    const core::EventStream& stream, const core::Domain& domain, double delta,
    std::initializer_list<const ScoreModel*> models);

}  // namespace stpp::score
