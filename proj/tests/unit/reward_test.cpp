// SPDX-License-Identifier: Apache-2.0
#include "reference.hpp"

#include <shoprl/errors.hpp>
#include <shoprl/reward.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace shoprl;

namespace
{

const HrmConfig kDefaults {};

GradeReport report_with(bool gate, std::size_t l2_passed)
{
    GradeReport r;
    for (Verdict* v: { &r.l1.relevance, &r.l1.ui_format, &r.l1.ui_trigger, &r.l1.ui_completeness, &r.l1.text_relevance,
                       &r.l1.description_faithfulness })
        v->pass = true;
    r.l1.description_faithfulness.pass = gate;
    if (gate)
    {
        L2Report l2;
        for (std::size_t i = 0; i < l2_passed; ++i)
            l2.items[i].pass = true;
        r.l2 = l2;
    }
    return r;
}

} // namespace

TEST(OutcomeReward, Examples)
{
    EXPECT_EQ(outcome_reward(0, 0.9, kDefaults), 0.0);
    EXPECT_DOUBLE_EQ(outcome_reward(1, 1.0, kDefaults), 1.5);
    EXPECT_NEAR(outcome_reward(1, 0.8, kDefaults), 1.16384, 1e-12);
}

TEST(ProcessReward, Examples)
{
    EXPECT_EQ(process_reward(1, 0.6, 0.9, kDefaults), 0.0);
    EXPECT_EQ(process_reward(1, 0.7, 0.9, kDefaults), 0.9);
    EXPECT_EQ(process_reward(0, 1.0, 1.0, kDefaults), 0.0);
}

TEST(TotalReward, Examples)
{
    auto const a = hierarchical_reward(1, 1.0, 0.9, kDefaults);
    EXPECT_DOUBLE_EQ(a.r_out, 1.5);
    EXPECT_DOUBLE_EQ(a.r_proc, 0.9);
    EXPECT_NEAR(a.total, 1.545, 1e-12);
    auto const b = hierarchical_reward(1, 0.8, 1.0, kDefaults);
    EXPECT_NEAR(b.total, 1.21384, 1e-12);
    auto const c = hierarchical_reward(0, 1.0, 1.0, kDefaults);
    EXPECT_EQ(c.total, 0.0);
    EXPECT_EQ(c.r_out, 0.0);
    EXPECT_EQ(c.r_proc, 0.0);
}

TEST(TotalReward, FromGradeReport)
{
    Trajectory t;
    auto const pass = total_reward(t, report_with(true, 7), 0.5, kDefaults);
    EXPECT_EQ(pass.g_l1, 1);
    ASSERT_TRUE(pass.g_l2.has_value());
    EXPECT_EQ(*pass.g_l2, 1.0);
    EXPECT_DOUBLE_EQ(pass.total, 1.5 + 0.05 * 0.5);
    auto const fail = total_reward(t, report_with(false, 0), 1.0, kDefaults);
    EXPECT_EQ(fail.total, 0.0);
    EXPECT_FALSE(fail.g_l2.has_value());
}

TEST(TotalReward, DomainErrors)
{
    EXPECT_THROW(outcome_reward(2, 0.5, kDefaults), DomainError);
    EXPECT_THROW(outcome_reward(1, 1.5, kDefaults), DomainError);
    EXPECT_THROW(outcome_reward(1, std::numeric_limits<double>::quiet_NaN(), kDefaults), DomainError);
    EXPECT_THROW(process_reward(1, 0.9, -0.1, kDefaults), DomainError);
    EXPECT_THROW(hierarchical_reward(1, std::nullopt, 1.0, kDefaults), DomainError);
}

TEST(HrmConfig, Validation)
{
    EXPECT_NO_THROW(kDefaults.validate());
    HrmConfig c;
    c.eta = 1.2;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.alpha = std::numeric_limits<double>::infinity();
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.k_exp = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RewardProperties, MatchesReferenceAndGates)
{
    reference::Gen g(31);
    for (int i = 0; i < 2000; ++i)
    {
        HrmConfig cfg;
        cfg.alpha = g.uniform(0.0, 2.0);
        cfg.beta = g.uniform(0.0, 0.5);
        cfg.eta = g.uniform();
        cfg.k_exp = 1 + static_cast<int>(g.below(8));
        int const g1 = g.coin() ? 1 : 0;
        double const g2 = g.coin(0.1) ? cfg.eta : g.uniform();
        double const tool = g.uniform();
        auto const got = hierarchical_reward(g1, g2, tool, cfg);
        auto const want = reference::hrm(g1, g2, tool, cfg.alpha, cfg.beta, cfg.eta, cfg.k_exp);
        ASSERT_NEAR(got.r_out, want.r_out, 1e-12);
        ASSERT_NEAR(got.r_proc, want.r_proc, 1e-12);
        ASSERT_NEAR(got.total, want.total, 1e-12);
        if (g1 == 0)
        {
            ASSERT_EQ(got.total, 0.0);
        }
        else
        {
            ASSERT_GE(got.total, 1.0);
        }
        if (got.r_proc != 0.0)
        {
            ASSERT_TRUE(g1 == 1 && g2 >= cfg.eta);
        }
        ASSERT_EQ(got.total, got.r_out + cfg.beta * got.r_proc);
    }
}

TEST(RewardProperties, StrictlyIncreasingInL2)
{
    HrmConfig cfg;
    double prev = outcome_reward(1, 0.0, cfg);
    for (int i = 1; i <= 1000; ++i)
    {
        auto const r = outcome_reward(1, i / 1000.0, cfg);
        ASSERT_GT(r, prev);
        prev = r;
    }
}

TEST(RewardProperties, SharpeningFavoursTopOfScale)
{
    auto gap_ratio = [](int k) {
        HrmConfig cfg;
        cfg.k_exp = k;
        auto const top = outcome_reward(1, 1.0, cfg) - outcome_reward(1, 0.9, cfg);
        auto const bottom = outcome_reward(1, 0.1, cfg) - outcome_reward(1, 0.0, cfg);
        return top / bottom;
    };
    EXPECT_GT(gap_ratio(5), gap_ratio(1));
    EXPECT_NEAR(gap_ratio(1), 1.0, 1e-9);
}

TEST(RewardJson, AllFiveFields)
{
    auto const j = nlohmann::json(hierarchical_reward(1, 0.8, 1.0, kDefaults));
    for (auto key: { "g_l1", "g_l2", "r_out", "r_proc", "total" })
    {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    auto const c = nlohmann::json(kDefaults).get<HrmConfig>();
    EXPECT_EQ(c.alpha, 0.5);
    EXPECT_EQ(c.beta, 0.05);
    EXPECT_EQ(c.eta, 0.7);
    EXPECT_EQ(c.k_exp, 5);
}
