// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <shoprl/catalog.hpp>
#include <shoprl/dcpo.hpp>
#include <shoprl/grading.hpp>
#include <shoprl/remote_judge.hpp>
#include <shoprl/reward.hpp>
#include <shoprl/toy_policy.hpp>

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shoprl
{

enum class Algo
{
    Dcpo,
    Grpo,
};

std::string_view to_string(Algo a);
Algo algo_from_string(std::string_view name);

/// When the behaviour policy pi_old is re-snapshotted.
enum class OldPolicyRefresh
{
    Batch,
    Epoch,
};

enum class JudgeKind
{
    Oracle,
    Remote,
};

struct EnvConfig
{
    std::uint64_t seed = 7;
    std::size_t catalog_size = 200;
    std::size_t queries_per_category = 20;
};

struct Environment
{
    EnvConfig config;
    Catalog catalog;
    std::vector<Query> queries;
};

Environment make_environment(const EnvConfig& cfg);

struct TrainConfig
{
    Algo algo = Algo::Dcpo;
    HrmConfig hrm;
    /// Defaults to K = 12 with the squared log-ratio KL estimator.
    DcpoConfig dcpo = default_dcpo();
    /// Step budget. When epochs > 0 it wins: epochs * ceil(queries / batch_size).
    std::size_t steps = 200;
    std::size_t epochs = 0;
    /// Queries per step.
    std::size_t batch_size = 16;
    /// Step size of the gradient ascent on the toy logits. Large-model
    /// recipes use about 1e-6; the 60-logit policy needs a far larger step.
    double learning_rate = 1.0;
    /// Gradient steps per sampled batch. Later steps see rho != 1.
    std::size_t updates_per_batch = 1;
    OldPolicyRefresh old_policy_refresh = OldPolicyRefresh::Batch;
    std::size_t eval_runs = 4;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    EnvConfig env;
    JudgeKind judge = JudgeKind::Oracle;
    RemoteJudgeConfig remote;

    /// Throws ConfigError on any invalid field, including the nested configs.
    void validate() const;
    [[nodiscard]] std::size_t total_steps(std::size_t n_queries) const;

    static DcpoConfig default_dcpo();
};

struct CurvePoint
{
    std::size_t step = 0;
    double mean_reward = 0.0;
    double mean_reasoning_length = 0.0;
    /// Fraction of sampled trajectories passing the L1 gate.
    double l1_avg_at_k = 0.0;
    /// Fraction of batch queries whose K samples all pass.
    double pass_hat_k = 0.0;
    /// Mean and sample std of L2 scores over gate-passing samples.
    double l2_avg = 0.0;
    double l2_std = 0.0;
    double mean_tool_calls = 0.0;

    bool operator==(const CurvePoint&) const = default;
};

struct Checkpoint
{
    static constexpr int kVersion = 1;

    int version = kVersion;
    /// Completed steps.
    std::size_t step = 0;
    ToyPolicy policy;
    ToyPolicy reference;
    /// Seed and engine state of the batch-order stream.
    std::uint64_t rng_seed = 0;
    std::string rng_state;
    TrainConfig config;
};

struct TrainCallbacks
{
    std::function<void(const CurvePoint&)> on_step;
    /// One record per query per step.
    std::function<void(const nlohmann::json&)> on_audit;
    /// Called with the last consistent state before a backend failure is rethrown.
    std::function<void(const Checkpoint&)> on_abort;
};

struct TrainResult
{
    std::vector<CurvePoint> curves;
    Checkpoint checkpoint;
};

/// Sample K rollouts per query, grade, reward, select, and step the policy.
/// The reference policy is `initial` (warm start by default) and stays
/// frozen. Throws NonFiniteLoss with the offending audit record in the
/// message; BackendUnavailable after calling on_abort.
TrainResult train(const TrainConfig& cfg, const Environment& env, JudgeBackend& judge,
                  const TrainCallbacks& callbacks = {}, std::optional<ToyPolicy> initial = std::nullopt);

struct EvalReport
{
    std::size_t runs = 0;
    CorpusMetrics overall;
    std::map<QueryCategory, CorpusMetrics> by_category;
    double mean_tool_calls = 0.0;
    double mean_reasoning_length = 0.0;
};

/// k_runs independent rollouts per query, graded and aggregated overall and
/// per query category. Never modifies the policy.
EvalReport evaluate(const ToyPolicy& policy, std::span<const Query> queries, const Catalog& catalog,
                    JudgeBackend& judge, std::size_t k_runs, std::uint64_t seed, std::size_t threads = 1);

struct MetricDelta
{
    std::string metric;
    /// Mean over the final 10% of steps (at least one).
    double a_end = 0.0;
    double b_end = 0.0;
    /// a_end - b_end
    double end_delta = 0.0;
    /// Least-squares slope per step.
    double a_trend = 0.0;
    double b_trend = 0.0;
    /// a_trend - b_trend
    double trend_delta = 0.0;
};

/// Endpoint and trend deltas of every curve metric. Throws LengthMismatch
/// when the runs have different step counts and EmptyInput when empty.
std::vector<MetricDelta> compare_runs(std::span<const CurvePoint> a, std::span<const CurvePoint> b);

/// Least-squares slope of ys against 0, 1, 2, ...; 0 for fewer than two points.
double trend_slope(std::span<const double> ys);

/// Mean of the metric over steps in [from, to).
double window_mean(std::span<const CurvePoint> curves, double CurvePoint::*metric, std::size_t from, std::size_t to);

// -- JSON --
void to_json(nlohmann::json& j, const EnvConfig& c);
void from_json(const nlohmann::json& j, EnvConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
/// Unknown keys are rejected with ConfigError; missing keys keep defaults.
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const CurvePoint& p);
void to_json(nlohmann::json& j, const Checkpoint& c);
void from_json(const nlohmann::json& j, Checkpoint& c);
void to_json(nlohmann::json& j, const EvalReport& r);
void to_json(nlohmann::json& j, const MetricDelta& d);

/// Oracle judge over env.catalog, or a remote judge with env overrides applied.
std::unique_ptr<JudgeBackend> make_judge(const TrainConfig& cfg, const Environment& env);

} // namespace shoprl
