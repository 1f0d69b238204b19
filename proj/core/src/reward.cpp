// SPDX-License-Identifier: Apache-2.0
#include <shoprl/errors.hpp>
#include <shoprl/reward.hpp>

#include <cmath>

namespace shoprl
{

using nlohmann::json;

void HrmConfig::validate() const
{
    if (!std::isfinite(alpha) || alpha < 0.0)
        throw ConfigError("hrm.alpha must be finite and >= 0");
    if (!std::isfinite(beta) || beta < 0.0)
        throw ConfigError("hrm.beta must be finite and >= 0");
    if (!std::isfinite(eta) || eta < 0.0 || eta > 1.0)
        throw ConfigError("hrm.eta must lie in [0, 1]");
    if (k_exp < 1)
        throw ConfigError("hrm.k_exp must be a positive integer");
}

namespace
{

    void check_gate(int g1)
    {
        if (g1 != 0 && g1 != 1)
            throw DomainError("L1 gate must be 0 or 1, got " + std::to_string(g1));
    }

    void check_unit(double x, const char* what)
    {
        if (!(x >= 0.0 && x <= 1.0))
            throw DomainError(std::string(what) + " must lie in [0, 1]");
    }

} // namespace

double outcome_reward(int g1, double g2, const HrmConfig& cfg)
{
    check_gate(g1);
    check_unit(g2, "L2 score");
    if (g1 == 0)
        return 0.0;
    return 1.0 + cfg.alpha * std::pow(g2, cfg.k_exp);
}

double process_reward(int g1, double g2, double tool_score, const HrmConfig& cfg)
{
    check_gate(g1);
    check_unit(tool_score, "tool score");
    if (g1 == 1 && g2 >= cfg.eta)
        return tool_score;
    return 0.0;
}

RewardBreakdown hierarchical_reward(int g1, std::optional<double> g2, double tool_score, const HrmConfig& cfg)
{
    check_gate(g1);
    if (g1 == 1 && !g2)
        throw DomainError("a trajectory past the L1 gate needs an L2 score");
    RewardBreakdown r;
    r.g_l1 = g1;
    r.g_l2 = g2;
    r.r_out = outcome_reward(g1, g2.value_or(0.0), cfg);
    r.r_proc = process_reward(g1, g2.value_or(0.0), tool_score, cfg);
    r.total = r.r_out + cfg.beta * r.r_proc;
    return r;
}

RewardBreakdown total_reward(const Trajectory& /*t*/, const GradeReport& report, double tool_score,
                             const HrmConfig& cfg)
{
    std::optional<double> g2;
    if (report.l2)
        g2 = report.l2->score();
    return hierarchical_reward(gate_l1(report.l1), g2, tool_score, cfg);
}

void to_json(json& j, const HrmConfig& c)
{
    j = json { { "alpha", c.alpha }, { "beta", c.beta }, { "eta", c.eta }, { "k_exp", c.k_exp } };
}

void from_json(const json& j, HrmConfig& c)
{
    HrmConfig d;
    c.alpha = j.value("alpha", d.alpha);
    c.beta = j.value("beta", d.beta);
    c.eta = j.value("eta", d.eta);
    c.k_exp = j.value("k_exp", d.k_exp);
}

void to_json(json& j, const RewardBreakdown& r)
{
    j = json { { "g_l1", r.g_l1 },
               { "g_l2", r.g_l2 ? json(*r.g_l2) : json(nullptr) },
               { "r_out", r.r_out },
               { "r_proc", r.r_proc },
               { "total", r.total } };
}

} // namespace shoprl
