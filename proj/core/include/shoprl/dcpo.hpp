// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <shoprl/reward.hpp>
#include <shoprl/rng.hpp>
#include <shoprl/trajectory.hpp>

#include <nlohmann/json.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shoprl
{

enum class Pool
{
    Good,
    Mid,
    Bad,
};

std::string_view to_string(Pool p);

/// How K is split into three pools.
enum class PoolSizing
{
    /// K/3 each; requires K divisible by 6.
    Equal,
    /// ceil(K/3), ceil(K/3), remainder; lets K = 16 run as 6/6/4.
    CeilFallback,
};

enum class KlEstimator
{
    /// mean(logp_new - logp_ref)
    LogRatio,
    /// mean((logp_new - logp_ref)^2 / 2); non-negative, slope linear in the log-ratio.
    K2,
    /// mean(r - 1 - log r) with r = pi_ref / pi_new; non-negative, slope grows like r.
    K3,
};

std::string_view to_string(KlEstimator e);
KlEstimator kl_estimator_from_string(std::string_view name);

struct DcpoConfig
{
    /// Trajectories sampled per query.
    std::size_t K = 18;
    /// Clip threshold of the importance ratio.
    double epsilon = 0.2;
    /// KL penalty weight.
    double lambda_kl = 0.01;
    /// Stabilizer in the advantage denominator.
    double delta = 1e-8;
    std::uint64_t seed = 0;
    PoolSizing pool_sizing = PoolSizing::Equal;
    /// When false every sampled trajectory is kept (GRPO).
    bool selection_enabled = true;
    KlEstimator kl_estimator = KlEstimator::LogRatio;

    /// Throws ConfigError when K, epsilon, delta or lambda are out of range.
    void validate() const;
};

/// A sampled trajectory with its reward and reasoning length.
struct ScoredTrajectory
{
    std::shared_ptr<const Trajectory> trajectory;
    RewardBreakdown reward;
    std::size_t length = 0;
};

/// Scores a trajectory; length is reasoning_length(*t).
ScoredTrajectory make_scored(std::shared_ptr<const Trajectory> t, RewardBreakdown reward,
                             const TokenCounter& count = whitespace_token_count);

/// Indices into `cands`, best first: reward descending, then reasoning
/// length ascending; full ties keep sampling order.
std::vector<std::size_t> rank_lexicographic(std::span<const ScoredTrajectory> cands);

/// Sizes of the good, mid and bad pools for K trajectories.
std::array<std::size_t, 3> pool_sizes(std::size_t K, PoolSizing sizing = PoolSizing::Equal);

/// Pool label of every rank position (0 = best).
std::vector<Pool> partition_pools(std::size_t K, PoolSizing sizing = PoolSizing::Equal);

/// |S(q)| = ceil(K/2).
std::size_t selection_size(std::size_t K) noexcept;

/// Per-pool quotas for the non-anchor slots: proportional to what remains in
/// each pool after removing the anchors, rounded by largest remainder (ties
/// go to the better pool).
std::array<std::size_t, 3> stratified_quotas(const std::array<std::size_t, 3>& sizes, std::size_t slots);

struct Selection
{
    /// Rank positions kept, ascending. Always contains 0 and K-1.
    std::vector<std::size_t> positions;
    std::array<std::size_t, 3> quotas {};
};

/// Anchors plus a stratified uniform draw within each pool.
Selection select_positions(const std::vector<Pool>& pools, Rng& rng);

/// (r - mean) / (std + delta) with the population std of `rewards`.
std::vector<double> advantages(std::span<const double> rewards, double delta);

/// min(rho * adv, clip(rho, 1 - eps, 1 + eps) * adv). Throws DomainError if rho <= 0.
double surrogate_term(double rho, double adv, double epsilon);

/// d surrogate_term / d log rho: rho * adv on the unclipped branch, else 0.
double surrogate_logp_weight(double rho, double adv, double epsilon);

double kl_estimate(std::span<const double> logp_new, std::span<const double> logp_ref, KlEstimator estimator);

struct ObjectiveTerms
{
    double surrogate = 0.0;
    double kl = 0.0;
    double value = 0.0;
};

/// mean_i surrogate_term(exp(logp_new - logp_old), adv, eps) - lambda * kl.
/// Throws NonFiniteLogProb for any non-finite log-probability.
ObjectiveTerms objective(std::span<const double> logp_new, std::span<const double> logp_old,
                         std::span<const double> logp_ref, std::span<const double> adv, const DcpoConfig& cfg);

/// w_i = d objective / d logp_new(tau_i), so that the parameter gradient is
/// sum_i w_i * grad logp_new(tau_i).
std::vector<double> objective_logp_weights(std::span<const double> logp_new, std::span<const double> logp_old,
                                           std::span<const double> logp_ref, std::span<const double> adv,
                                           const DcpoConfig& cfg);

/// The K candidates of one query after ranking and selection.
struct SelectionSet
{
    std::vector<ScoredTrajectory> all;
    /// Indices into `all`, best first.
    std::vector<std::size_t> ranked;
    /// Pool of each rank position; empty when selection is disabled.
    std::vector<Pool> pools;
    /// Indices into `all` of the kept trajectories, in rank order.
    std::vector<std::size_t> selected;
    std::optional<std::size_t> best;
    std::optional<std::size_t> worst;
    std::array<std::size_t, 3> quotas {};
    /// Aligned with `selected`.
    std::vector<double> advantages;
};

/// Ranks, pools, selects and normalizes. With selection disabled the kept
/// set is every candidate in sampling order.
SelectionSet build_selection(std::vector<ScoredTrajectory> all, const DcpoConfig& cfg, Rng& rng);

/// Group-normalized advantages over all K candidates, in sampling order.
std::vector<double> grpo_baseline(std::span<const ScoredTrajectory> all, const DcpoConfig& cfg);

/// {query_id, K, ranks[], pools[], selected_ids[], anchors{best,worst},
/// advantages[], rewards[], lengths[]}. ranks, pools, rewards and lengths are
/// per sampled index; rewards are full breakdowns; ranks are 1-based.
nlohmann::json audit_record(const SelectionSet& set, std::string_view query_id);

void to_json(nlohmann::json& j, const DcpoConfig& c);
void from_json(const nlohmann::json& j, DcpoConfig& c);

} // namespace shoprl
