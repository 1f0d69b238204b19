// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <shoprl/grading.hpp>
#include <shoprl/trajectory.hpp>

#include <nlohmann/json.hpp>

#include <optional>

namespace shoprl
{

/// Hierarchical reward hyperparameters.
struct HrmConfig
{
    /// Weight of the sharpened L2 bonus on top of the feasibility constant.
    double alpha = 0.5;
    /// Weight of the process (tool-use) reward.
    double beta = 0.05;
    /// L2 score a trajectory must reach before tool use is rewarded.
    double eta = 0.7;
    /// Exponent sharpening the L2 score.
    int k_exp = 5;

    /// Throws ConfigError on non-finite or out-of-range fields.
    void validate() const;
};

struct RewardBreakdown
{
    int g_l1 = 0;
    std::optional<double> g_l2;
    double r_out = 0.0;
    double r_proc = 0.0;
    double total = 0.0;
};

/// 0 when the feasibility gate is closed, else 1 + alpha * g2^k.
/// Throws DomainError unless g1 is 0 or 1 and g2 is in [0, 1].
double outcome_reward(int g1, double g2, const HrmConfig& cfg);

/// tool_score when g1 == 1 and g2 >= eta, else 0.
/// Throws DomainError unless tool_score is in [0, 1].
double process_reward(int g1, double g2, double tool_score, const HrmConfig& cfg);

/// The full breakdown from gate, L2 score and tool score. g2 must be present
/// when g1 == 1; when absent it counts as 0.
RewardBreakdown hierarchical_reward(int g1, std::optional<double> g2, double tool_score, const HrmConfig& cfg);

/// r_out + beta * r_proc for a graded trajectory.
RewardBreakdown total_reward(const Trajectory& t, const GradeReport& report, double tool_score, const HrmConfig& cfg);

void to_json(nlohmann::json& j, const HrmConfig& c);
void from_json(const nlohmann::json& j, HrmConfig& c);
void to_json(nlohmann::json& j, const RewardBreakdown& r);

} // namespace shoprl
