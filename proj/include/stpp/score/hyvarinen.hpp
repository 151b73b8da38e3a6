#pragma once

#include "stpp/score/model.hpp"
#include "stpp/score/weight.hpp"
#include "stpp/simulate/hawkes.hpp"

namespace stpp::score {

enum class DivergenceMethod { Auto, ClosedForm, FiniteDifference };

inline constexpr double kDivergenceStep = 1e-4;

// div[w ⊙ f] at the input. Auto uses the closed-form Jacobian when the model has
// one and finite differences otherwise (one-sided in dt when dt < step).
[[nodiscard]] double divergence(const ScoreModel& model, const WeightConfig& wcfg,
                                const ScoreInput& in, DivergenceMethod method = DivergenceMethod::Auto,
                                double step = kDivergenceStep);

// ψ = ‖√w ⊙ f‖² + 2 div[w ⊙ f].
[[nodiscard]] double hyvarinen(const ScoreModel& model, const WeightConfig& wcfg,
                               const ScoreInput& in, DivergenceMethod method = DivergenceMethod::Auto);

// Δ = ψ0 - ψ1.
[[nodiscard]] inline double anomaly(double psi0, double psi1) { return psi0 - psi1; }

// Δ(x) for a pair of models sharing δ and domain.
[[nodiscard]] double anomaly(const ScoreModel& model0, const ScoreModel& model1,
                             const WeightConfig& wcfg, const ScoreInput& in);

// Closed-form Hawkes score difference f1 - f0 with the translation-invariance
// simplification k(x) = 0: (μ0 - μ1)·(|B(x)|, 0, 0). Throws ConfigError when the
// regimes differ in anything but μ.
[[nodiscard]] Vec3 score_diff_closed_form(const sim::HawkesParams& pre, const sim::HawkesParams& post,
                                          const ScoreInput& in, double delta,
                                          const core::Domain& domain);

// Exact difference for the same pair, keeping the kernel-gradient term
// (μ0 - μ1)·[α Σ_j ∇_x κ(x, x_j) / (λ1 λ0) + (|B|, dt ∂|B|/∂s1, dt ∂|B|/∂s2)].
[[nodiscard]] Vec3 score_diff_exact(const sim::HawkesParams& pre, const sim::HawkesParams& post,
                                    const ScoreInput& in, double delta, const core::Domain& domain);

}  // namespace stpp::score
