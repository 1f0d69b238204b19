// SPDX-License-Identifier: Apache-2.0
#include "generators.hpp"
#include "scripted_judge.hpp"

#include <shoprl/errors.hpp>
#include <shoprl/grading.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace shoprl;

namespace
{

L1Report l1_with(bool pc, bool tr, bool df)
{
    L1Report r;
    r.relevance.pass = pc;
    r.ui_format.pass = true;
    r.ui_trigger.pass = true;
    r.ui_completeness.pass = true;
    r.text_relevance.pass = tr;
    r.description_faithfulness.pass = df;
    return r;
}

GradeReport gated(bool pass, std::optional<double> l2 = std::nullopt)
{
    GradeReport r;
    r.l1 = l1_with(pass, pass, pass);
    if (pass)
    {
        L2Report rep;
        auto const n = static_cast<std::size_t>(std::lround(l2.value_or(1.0) * 7));
        for (std::size_t i = 0; i < n; ++i)
            rep.items[i].pass = true;
        r.l2 = rep;
    }
    return r;
}

Trajectory response_with(std::vector<ProductCard> cards, std::vector<std::string> mentioned)
{
    Trajectory t;
    for (const auto& c: cards)
        t.response.text += render_card(c) + " ";
    t.response.cards = std::move(cards);
    t.response.mentioned_ids = std::move(mentioned);
    return t;
}

} // namespace

TEST(Completeness, MentionWithoutCardFails)
{
    auto const t = response_with({ { { "PD_1" }, true } }, { "PD_1", "PD_7" });
    EXPECT_FALSE(check_ui_completeness(t.response).pass);
}

TEST(Completeness, BundleCardWithBothMentions)
{
    auto const t = response_with({ { { "PD_1", "PD_2" }, true } }, { "PD_1", "PD_2" });
    EXPECT_TRUE(check_ui_format(t.response).pass);
    EXPECT_TRUE(check_ui_completeness(t.response).pass);
}

TEST(Completeness, SymmetricUnderPermutation)
{
    reference::Gen g(21);
    for (int i = 0; i < 300; ++i)
    {
        auto t = gen::trajectory(g);
        if (g.coin(0.3))
            t.response.mentioned_ids.push_back(gen::product_id(g));
        auto const before = check_ui_completeness(t.response).pass;
        auto r = t.response;
        for (std::size_t j = r.cards.size(); j > 1; --j)
            std::swap(r.cards[j - 1], r.cards[g.below(j)]);
        for (std::size_t j = r.mentioned_ids.size(); j > 1; --j)
            std::swap(r.mentioned_ids[j - 1], r.mentioned_ids[g.below(j)]);
        ASSERT_EQ(check_ui_completeness(r).pass, before);
    }
}

TEST(Format, MalformedCardInTextFails)
{
    FinalResponse r;
    r.text = "see <product>PD_1, PD_2</product>";
    EXPECT_FALSE(check_ui_format(r).pass);
    r.text = "see <product>PD_1,PD_2</product>";
    EXPECT_TRUE(check_ui_format(r).pass);
}

TEST(L2, ScoreIsPassedOverSeven)
{
    L2Report r;
    EXPECT_EQ(r.score(), 0.0);
    for (auto& v: r.items)
        v.pass = true;
    EXPECT_EQ(r.score(), 1.0);
    r.items[0].pass = r.items[3].pass = false;
    EXPECT_NEAR(r.score(), 0.714286, 1e-6);
    EXPECT_NEAR(r.score() * 7, 5.0, 1e-12);
}

TEST(Gate, Examples)
{
    EXPECT_EQ(gate_l1(l1_with(true, true, true)), 1);
    EXPECT_EQ(gate_l1(l1_with(true, true, false)), 0);
    EXPECT_EQ(gate_l1(l1_with(false, false, false)), 0);
}

TEST(Gate, ProductOfDimensionsOnAllReports)
{
    for (int mask = 0; mask < 64; ++mask)
    {
        L1Report r;
        r.relevance.pass = mask & 1;
        r.ui_format.pass = mask & 2;
        r.ui_trigger.pass = mask & 4;
        r.ui_completeness.pass = mask & 8;
        r.text_relevance.pass = mask & 16;
        r.description_faithfulness.pass = mask & 32;
        bool const pc = (mask & 15) == 15;
        EXPECT_EQ(r.product_correctness(), pc);
        auto const d = r.dimensions();
        EXPECT_EQ(gate_l1(r), int(d[0]) * int(d[1]) * int(d[2]));
        EXPECT_EQ(gate_l1(r) == 1, mask == 63);
    }
}

TEST(Grade, L2OnlyWhenGatePasses)
{
    fake::ScriptedJudge judge;
    Query q;
    Trajectory t;
    auto r = grade(q, t, judge);
    EXPECT_EQ(gate_l1(r.l1), 1);
    ASSERT_TRUE(r.l2.has_value());
    EXPECT_EQ(judge.l2_calls, 1);

    judge.l1.text_relevance.pass = false;
    r = grade(q, t, judge);
    EXPECT_FALSE(r.l2.has_value());
    EXPECT_EQ(judge.l2_calls, 1);
}

TEST(Grade, InvalidTrajectoryRejected)
{
    fake::ScriptedJudge judge;
    Trajectory t;
    Step s;
    s.actions.push_back({ ToolKind::WebSearch, { { "query", "x" } }, "c" });
    t.steps.push_back(s);
    EXPECT_THROW(grade(Query {}, t, judge), InvalidTrajectory);
}

TEST(Grade, ValidTrajectoriesAlwaysAccepted)
{
    fake::ScriptedJudge judge;
    reference::Gen g(22);
    for (int i = 0; i < 100; ++i)
        EXPECT_NO_THROW(grade(Query {}, gen::trajectory(g), judge));
}

TEST(Grade, CapabilityIsEnforced)
{
    fake::ScriptedJudge judge;
    judge.caps.supports_l2 = false;
    EXPECT_THROW(grade(Query {}, Trajectory {}, judge), CapabilityError);
    judge.caps = { false, true, true };
    EXPECT_THROW(grade_l1(Query {}, Trajectory {}, judge), CapabilityError);
    judge.caps = { true, true, false };
    EXPECT_THROW(judge.tool_score(Query {}, Trajectory {}), CapabilityError);
}

TEST(Grade, OutOfRangeToolScoreRejected)
{
    fake::ScriptedJudge judge;
    judge.score = 1.5;
    EXPECT_THROW(judge.tool_score(Query {}, Trajectory {}), BackendMalformedOutput);
}

TEST(Aggregate, AllPass)
{
    std::vector<GradeReport> rs(4, gated(true));
    auto const m = aggregate_runs(rs, 4);
    EXPECT_EQ(m.avg_at_k, 1.0);
    EXPECT_EQ(m.pass_hat_k, 1.0);
}

TEST(Aggregate, OneFailure)
{
    std::vector<GradeReport> rs { gated(true), gated(false), gated(true), gated(true) };
    auto const m = aggregate_runs(rs, 4);
    EXPECT_EQ(m.avg_at_k, 0.75);
    EXPECT_EQ(m.pass_hat_k, 0.0);
}

TEST(Aggregate, L2SampleStd)
{
    // 0.6 and 0.8 are not multiples of 1/7, so build the reports by hand.
    std::vector<GradeReport> rs { gated(true, 4.0 / 7), gated(true, 6.0 / 7) };
    auto const m = aggregate_runs(rs, 2);
    EXPECT_NEAR(m.l2_avg, 5.0 / 7, 1e-12);
    EXPECT_NEAR(m.l2_std, std::sqrt(2.0) / 7, 1e-12);
    // The closed form for 0.6 and 0.8: mean 0.7, std 0.141421.
    auto const mo = reference::moments({ 0.6, 0.8 }, true);
    EXPECT_NEAR(static_cast<double>(mo.mean), 0.7, 1e-12);
    EXPECT_NEAR(static_cast<double>(mo.std), 0.141421, 1e-6);
}

TEST(Aggregate, Errors)
{
    std::vector<GradeReport> rs(3, gated(true));
    EXPECT_THROW(aggregate_runs(rs, 0), EmptyInput);
    EXPECT_THROW(aggregate_runs(rs, 4), LengthMismatch);
    EXPECT_THROW(aggregate_corpus({}), EmptyInput);
    EXPECT_THROW(aggregate_corpus({ rs, std::vector<GradeReport>(2, gated(true)) }), LengthMismatch);
}

TEST(Aggregate, PassHatNeverExceedsAvg)
{
    reference::Gen g(23);
    for (int i = 0; i < 500; ++i)
    {
        auto const k = 1 + g.below(6);
        std::vector<GradeReport> rs;
        for (std::size_t j = 0; j < k; ++j)
            rs.push_back(gen::report(g, g.uniform()));
        auto const m = aggregate_runs(rs, k);
        ASSERT_LE(m.pass_hat_k, m.avg_at_k);
        ASSERT_GE(m.pass_hat_k, 0.0);
        ASSERT_LE(m.avg_at_k, 1.0);
        for (const auto& r: rs)
            if (r.l2)
            {
                ASSERT_GE(r.l2->score(), 0.0);
                ASSERT_LE(r.l2->score(), 1.0);
                ASSERT_NEAR(r.l2->score() * 7, std::round(r.l2->score() * 7), 1e-12);
            }
    }
}

TEST(Aggregate, CorpusMatchesEnumeration)
{
    reference::Gen g(24);
    for (int trial = 0; trial < 50; ++trial)
    {
        std::vector<std::vector<GradeReport>> reports;
        std::vector<std::vector<reference::RunOutcome>> cells;
        for (std::size_t q = 0, nq = 1 + g.below(30); q < nq; ++q)
        {
            reports.emplace_back();
            cells.emplace_back();
            for (int run = 0; run < 4; ++run)
            {
                auto r = gen::report(g);
                cells.back().push_back(
                    { gate_l1(r.l1) == 1, r.l2 ? std::optional<int>(static_cast<int>(r.l2->passed())) : std::nullopt });
                reports.back().push_back(std::move(r));
            }
        }
        auto const got = aggregate_corpus(reports);
        auto const want = reference::metrics(cells);
        ASSERT_EQ(got.avg_at_k, want.avg);
        ASSERT_EQ(got.pass_hat_k, want.pass_hat);
        ASSERT_NEAR(got.l2_avg, want.l2_avg, 1e-12);
        ASSERT_NEAR(got.l2_std, want.l2_std, 1e-12);
    }
}

TEST(Json, ReportShape)
{
    auto const j = nlohmann::json(gated(true));
    EXPECT_EQ(j["l1"]["gate"], 1);
    EXPECT_TRUE(j["l1"]["product_correctness"]["is_pass"].get<bool>());
    EXPECT_EQ(j["l2"]["items"].size(), 7u);
    EXPECT_TRUE(nlohmann::json(gated(false))["l2"].is_null());
}
