// SPDX-License-Identifier: Apache-2.0
// Hand-rolled random instance generators for property tests.
#pragma once

#include "reference.hpp"

#include <shoprl/dcpo.hpp>
#include <shoprl/grading.hpp>
#include <shoprl/trajectory.hpp>

#include <memory>
#include <string>
#include <vector>

namespace gen
{

inline std::string words(reference::Gen& g, std::size_t n)
{
    static const char* vocab[] = { "check", "price", "noise", "compare", "budget", "rating", "then", "pick" };
    std::string out;
    for (std::size_t i = 0; i < n; ++i)
    {
        if (i)
            out += g.coin(0.2) ? "  " : " ";
        out += vocab[g.below(8)];
    }
    return out;
}

inline std::string product_id(reference::Gen& g) { return "PD_" + std::to_string(1 + g.below(300)); }

/// A structurally valid trajectory with random tools, payloads and cards.
inline shoprl::Trajectory trajectory(reference::Gen& g)
{
    using namespace shoprl;
    Trajectory t;
    t.query_id = "q" + std::to_string(g.below(1000));
    std::size_t callNo = 0;
    auto const steps = g.below(5);
    for (std::size_t s = 0; s < steps; ++s)
    {
        Step step;
        step.reasoning = words(g, g.below(40));
        auto const calls = g.below(3);
        for (std::size_t c = 0; c < calls; ++c)
        {
            ToolCall call;
            call.call_id = "c" + std::to_string(callNo++);
            Observation obs;
            obs.source_call_id = call.call_id;
            switch (g.below(3))
            {
                case 0:
                    call.tool = ToolKind::ProductSearch;
                    call.arguments["category"] = "=Electronics";
                    if (g.coin())
                        call.arguments["price"] = "<100.00";
                    obs.payload = std::vector<std::string> { product_id(g), product_id(g) };
                    break;
                case 1:
                    call.tool = ToolKind::WebSearch;
                    call.arguments["query"] = product_id(g) + " rating";
                    obs.payload = std::string("rating=4.20");
                    break;
                default:
                    call.tool = ToolKind::PythonExecute;
                    call.arguments["code"] = "12.5 + 3";
                    obs.payload = std::string("15.5");
                    break;
            }
            step.actions.push_back(call);
            step.observations.push_back(obs);
        }
        t.steps.push_back(std::move(step));
    }
    auto const cards = g.below(3);
    for (std::size_t c = 0; c < cards; ++c)
    {
        ProductCard card;
        card.product_ids.push_back(product_id(g));
        if (g.coin(0.3))
            card.product_ids.push_back(product_id(g));
        card.well_formed = g.coin(0.9);
        t.response.text += render_card(card) + " ";
        for (const auto& id: card.product_ids)
            t.response.mentioned_ids.push_back(id);
        t.response.cards.push_back(card);
    }
    t.response.text += words(g, 10 + g.below(20));
    t.log_prob_old = -g.uniform(0.0, 40.0);
    t.decision_schema = "toy-policy/v1";
    for (std::size_t i = 0, n = g.below(6); i < n; ++i)
        t.decisions.push_back({ static_cast<int>(g.below(26)), static_cast<int>(g.below(2)) });
    return t;
}

/// A grade report with random verdicts; L2 present iff the gate passes.
inline shoprl::GradeReport report(reference::Gen& g, double pass_bias = 0.7)
{
    using namespace shoprl;
    GradeReport r;
    for (Verdict* v: { &r.l1.relevance, &r.l1.ui_format, &r.l1.ui_trigger, &r.l1.ui_completeness,
                       &r.l1.text_relevance, &r.l1.description_faithfulness })
        v->pass = g.coin(pass_bias);
    if (gate_l1(r.l1) == 1)
    {
        L2Report l2;
        for (auto& item: l2.items)
            item.pass = g.coin();
        r.l2 = l2;
    }
    return r;
}

inline shoprl::RewardBreakdown reward_of(double total)
{
    shoprl::RewardBreakdown b;
    b.g_l1 = total > 0 ? 1 : 0;
    b.total = total;
    b.r_out = total;
    return b;
}

/// K scored candidates whose rewards come from a small discrete set, so
/// ties are common, and whose lengths are drawn from a narrow range.
inline std::vector<shoprl::ScoredTrajectory> candidates(reference::Gen& g, std::size_t K)
{
    static const double levels[] = { 0.0, 1.0, 1.05, 1.16384, 1.21384, 1.5, 1.55 };
    std::vector<shoprl::ScoredTrajectory> out;
    for (std::size_t i = 0; i < K; ++i)
    {
        auto t = std::make_shared<shoprl::Trajectory>();
        t->query_id = "q";
        shoprl::ScoredTrajectory s;
        s.trajectory = t;
        s.reward = reward_of(levels[g.below(g.coin(0.3) ? 2 : 7)]);
        s.length = 20 * g.below(6);
        out.push_back(s);
    }
    return out;
}

} // namespace gen
