// SPDX-License-Identifier: Apache-2.0
#include <shoprl/errors.hpp>
#include <shoprl/toy_policy.hpp>

#include <algorithm>
#include <cmath>

namespace shoprl
{

using nlohmann::json;

BlockInfo block_info(int b)
{
    if (b == block::kSegments)
        return { 0, kMaxSegments, false };
    if (b == block::kVerbosity)
        return { 8, kVerbosityLevels, false };
    if (b >= block::kToolPlan && b < block::kPick)
        return { 16 + kToolPlanCount * static_cast<std::size_t>(b - block::kToolPlan), kToolPlanCount, false };
    if (b == block::kPick)
        return { 40, kPickStrategyCount, false };
    if (b >= block::kEmitCards && b < block::kCount)
        return { 43 + static_cast<std::size_t>(b - block::kEmitCards), 2, true };
    throw SchemaMismatch("no decision block " + std::to_string(b));
}

namespace
{

    int category_index(QueryCategory c)
    {
        return static_cast<int>(c);
    }

    double log_sigmoid(double x)
    {
        return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
    }

    double sigmoid(double x)
    {
        if (x >= 0.0)
            return 1.0 / (1.0 + std::exp(-x));
        auto const e = std::exp(x);
        return e / (1.0 + e);
    }

    void check_decision(const Decision& d)
    {
        auto const info = block_info(d.block);
        if (d.choice < 0 || static_cast<std::size_t>(d.choice) >= info.arity)
            throw SchemaMismatch("choice " + std::to_string(d.choice) + " out of range for block "
                                 + std::to_string(d.block));
    }

} // namespace

std::vector<Decision> EpisodeChoices::decisions(QueryCategory cat) const
{
    std::vector<Decision> out;
    out.reserve(segments + 14);
    out.push_back({ block::kSegments, static_cast<int>(segments) - 1 });
    for (auto v: verbosity)
        out.push_back({ block::kVerbosity, static_cast<int>(v) });
    out.push_back({ block::kToolPlan + category_index(cat), static_cast<int>(plan) });
    out.push_back({ block::kPick, static_cast<int>(pick) });
    out.push_back({ block::kEmitCards + category_index(cat), emit_cards ? 1 : 0 });
    for (std::size_t i = 0; i < kRubricFeatureCount; ++i)
        out.push_back({ block::kRubric + static_cast<int>(i), rubric[i] ? 1 : 0 });
    out.push_back({ block::kFidelity, faithful ? 1 : 0 });
    out.push_back({ block::kCardFormat, card_format_ok ? 1 : 0 });
    out.push_back({ block::kCardCompleteness, cards_complete ? 1 : 0 });
    out.push_back({ block::kTopicMention, mentions_topic ? 1 : 0 });
    return out;
}

EpisodeChoices choices_from_decisions(std::span<const Decision> ds, QueryCategory cat)
{
    std::size_t i = 0;
    auto next = [&](int expectedBlock) {
        if (i >= ds.size())
            throw SchemaMismatch("decision record too short");
        auto const& d = ds[i++];
        if (d.block != expectedBlock)
            throw SchemaMismatch("expected block " + std::to_string(expectedBlock) + ", got "
                                 + std::to_string(d.block));
        check_decision(d);
        return d.choice;
    };

    EpisodeChoices c;
    c.segments = static_cast<std::size_t>(next(block::kSegments)) + 1;
    c.verbosity.clear();
    for (std::size_t s = 0; s < c.segments; ++s)
        c.verbosity.push_back(static_cast<std::size_t>(next(block::kVerbosity)));
    c.plan = static_cast<ToolPlan>(next(block::kToolPlan + category_index(cat)));
    c.pick = static_cast<PickStrategy>(next(block::kPick));
    c.emit_cards = next(block::kEmitCards + category_index(cat)) == 1;
    for (std::size_t r = 0; r < kRubricFeatureCount; ++r)
        c.rubric[r] = next(block::kRubric + static_cast<int>(r)) == 1;
    c.faithful = next(block::kFidelity) == 1;
    c.card_format_ok = next(block::kCardFormat) == 1;
    c.cards_complete = next(block::kCardCompleteness) == 1;
    c.mentions_topic = next(block::kTopicMention) == 1;
    if (i != ds.size())
        throw SchemaMismatch("decision record has trailing entries");
    return c;
}

ToyPolicy::ToyPolicy(): _params(kToyParamCount, 0.0)
{
}

ToyPolicy::ToyPolicy(std::vector<double> params): _params(std::move(params))
{
    if (_params.size() != kToyParamCount)
        throw ConfigError("toy policy needs " + std::to_string(kToyParamCount) + " parameters, got "
                          + std::to_string(_params.size()));
    for (double p: _params)
        if (!std::isfinite(p))
            throw ConfigError("toy policy parameter is not finite");
}

ToyPolicy ToyPolicy::warm_start()
{
    ToyPolicy p;
    auto set = [&](int b, std::initializer_list<double> logits) {
        auto const info = block_info(b);
        std::copy(logits.begin(), logits.end(), p._params.begin() + static_cast<std::ptrdiff_t>(info.offset));
    };
    set(block::kSegments, { 1.0, 1.2, 0.4, -0.4, -1.0, -1.6, -2.2, -2.8 });
    set(block::kVerbosity, { -0.6, -0.3, 0.0, 0.2, 0.3, 0.2, 0.0, -0.3 });
    for (auto cat: kAllQueryCategories)
    {
        set(block::kToolPlan + category_index(cat), { -0.8, 0.6, 0.4, 0.3 });
        set(block::kEmitCards + category_index(cat), { cat == QueryCategory::QAConsultation ? -0.5 : 1.5 });
    }
    set(block::kPick, { 1.0, 0.6, -0.6 });
    for (std::size_t r = 0; r < kRubricFeatureCount; ++r)
        set(block::kRubric + static_cast<int>(r), { -0.2 });
    set(block::kFidelity, { 1.8 });
    set(block::kCardFormat, { 2.0 });
    set(block::kCardCompleteness, { 1.8 });
    set(block::kTopicMention, { 1.8 });
    return p;
}

std::vector<double> ToyPolicy::probabilities(int b) const
{
    auto const info = block_info(b);
    if (info.bernoulli)
    {
        auto const p1 = sigmoid(_params[info.offset]);
        return { 1.0 - p1, p1 };
    }
    auto const first = _params.begin() + static_cast<std::ptrdiff_t>(info.offset);
    auto const maxLogit = *std::max_element(first, first + static_cast<std::ptrdiff_t>(info.arity));
    std::vector<double> probs(info.arity);
    double sum = 0.0;
    for (std::size_t c = 0; c < info.arity; ++c)
    {
        probs[c] = std::exp(_params[info.offset + c] - maxLogit);
        sum += probs[c];
    }
    for (double& x: probs)
        x /= sum;
    return probs;
}

int ToyPolicy::sample(int b, Rng& rng) const
{
    auto const info = block_info(b);
    auto const u = rng.uniform();
    if (info.bernoulli)
        return u < sigmoid(_params[info.offset]) ? 1 : 0;
    auto const probs = probabilities(b);
    double acc = 0.0;
    for (std::size_t c = 0; c + 1 < probs.size(); ++c)
    {
        acc += probs[c];
        if (u < acc)
            return static_cast<int>(c);
    }
    return static_cast<int>(probs.size() - 1);
}

EpisodeChoices ToyPolicy::sample_choices(QueryCategory cat, Rng& rng) const
{
    EpisodeChoices c;
    c.segments = static_cast<std::size_t>(sample(block::kSegments, rng)) + 1;
    c.verbosity.clear();
    for (std::size_t s = 0; s < c.segments; ++s)
        c.verbosity.push_back(static_cast<std::size_t>(sample(block::kVerbosity, rng)));
    c.plan = static_cast<ToolPlan>(sample(block::kToolPlan + category_index(cat), rng));
    c.pick = static_cast<PickStrategy>(sample(block::kPick, rng));
    c.emit_cards = sample(block::kEmitCards + category_index(cat), rng) == 1;
    for (std::size_t r = 0; r < kRubricFeatureCount; ++r)
        c.rubric[r] = sample(block::kRubric + static_cast<int>(r), rng) == 1;
    c.faithful = sample(block::kFidelity, rng) == 1;
    c.card_format_ok = sample(block::kCardFormat, rng) == 1;
    c.cards_complete = sample(block::kCardCompleteness, rng) == 1;
    c.mentions_topic = sample(block::kTopicMention, rng) == 1;
    return c;
}

double ToyPolicy::log_prob(const Decision& d) const
{
    check_decision(d);
    auto const info = block_info(d.block);
    if (info.bernoulli)
    {
        auto const x = _params[info.offset];
        return d.choice == 1 ? log_sigmoid(x) : log_sigmoid(-x);
    }
    auto const first = _params.begin() + static_cast<std::ptrdiff_t>(info.offset);
    auto const maxLogit = *std::max_element(first, first + static_cast<std::ptrdiff_t>(info.arity));
    double sum = 0.0;
    for (std::size_t c = 0; c < info.arity; ++c)
        sum += std::exp(_params[info.offset + c] - maxLogit);
    return _params[info.offset + static_cast<std::size_t>(d.choice)] - maxLogit - std::log(sum);
}

double ToyPolicy::log_prob(std::span<const Decision> decisions) const
{
    double lp = 0.0;
    for (const auto& d: decisions)
        lp += log_prob(d);
    return lp;
}

double ToyPolicy::log_prob(const Trajectory& t) const
{
    if (t.decision_schema != kToyDecisionSchema)
        throw SchemaMismatch("trajectory uses decision schema \"" + t.decision_schema + "\"");
    return log_prob(std::span<const Decision>(t.decisions));
}

void ToyPolicy::accumulate_grad(const Decision& d, double weight, std::span<double> grad) const
{
    check_decision(d);
    if (grad.size() != kToyParamCount)
        throw LengthMismatch("gradient buffer must have " + std::to_string(kToyParamCount) + " entries");
    auto const info = block_info(d.block);
    if (info.bernoulli)
    {
        // d/dx log sigmoid(+-x) = 1 - sigmoid(x) or -sigmoid(x).
        auto const p1 = sigmoid(_params[info.offset]);
        grad[info.offset] += weight * ((d.choice == 1 ? 1.0 : 0.0) - p1);
        return;
    }
    auto const probs = probabilities(d.block);
    for (std::size_t c = 0; c < info.arity; ++c)
        grad[info.offset + c] += weight * ((static_cast<int>(c) == d.choice ? 1.0 : 0.0) - probs[c]);
}

void ToyPolicy::accumulate_grad(const Trajectory& t, double weight, std::span<double> grad) const
{
    if (t.decision_schema != kToyDecisionSchema)
        throw SchemaMismatch("trajectory uses decision schema \"" + t.decision_schema + "\"");
    for (const auto& d: t.decisions)
        accumulate_grad(d, weight, grad);
}

std::vector<double> ToyPolicy::grad_log_prob(const Trajectory& t) const
{
    std::vector<double> g(kToyParamCount, 0.0);
    accumulate_grad(t, 1.0, g);
    return g;
}

void to_json(json& j, const ToyPolicy& p)
{
    j = json { { "schema", std::string(kToyDecisionSchema) },
               { "params", std::vector<double>(p.params().begin(), p.params().end()) } };
}

void from_json(const json& j, ToyPolicy& p)
{
    if (j.value("schema", std::string(kToyDecisionSchema)) != kToyDecisionSchema)
        throw SchemaMismatch("policy was saved under schema " + j.at("schema").get<std::string>());
    p = ToyPolicy(j.at("params").get<std::vector<double>>());
}

} // namespace shoprl
