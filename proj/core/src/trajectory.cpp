// SPDX-License-Identifier: Apache-2.0
#include <shoprl/errors.hpp>
#include <shoprl/trajectory.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>

namespace shoprl
{

using nlohmann::json;

std::string_view to_string(ToolKind kind)
{
    switch (kind)
    {
        case ToolKind::WebSearch: return "web_search";
        case ToolKind::PythonExecute: return "python_execute";
        case ToolKind::ProductSearch: return "product_search";
    }
    return "unknown";
}

ToolKind tool_kind_from_string(std::string_view name)
{
    if (name == "web_search")
        return ToolKind::WebSearch;
    if (name == "python_execute")
        return ToolKind::PythonExecute;
    if (name == "product_search")
        return ToolKind::ProductSearch;
    throw DomainError("unknown tool: " + std::string(name));
}

std::size_t whitespace_token_count(std::string_view text)
{
    std::size_t count = 0;
    bool inToken = false;
    for (char c: text)
    {
        bool const space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !inToken)
            ++count;
        inToken = !space;
    }
    return count;
}

std::size_t reasoning_length(const Trajectory& t, const TokenCounter& count)
{
    std::size_t total = 0;
    for (const auto& step: t.steps)
        total += count(step.reasoning);
    return total;
}

std::size_t tool_call_count(const Trajectory& t)
{
    std::size_t n = 0;
    for (const auto& step: t.steps)
        n += step.actions.size();
    return n;
}

std::string_view to_string(ViolationKind kind)
{
    switch (kind)
    {
        case ViolationKind::MisalignedObservations: return "MisalignedObservations";
        case ViolationKind::DuplicateCallId: return "DuplicateCallId";
        case ViolationKind::OrphanObservation: return "OrphanObservation";
        case ViolationKind::ProductSearchWithoutFilter: return "ProductSearchWithoutFilter";
        case ViolationKind::EmptyCard: return "EmptyCard";
        case ViolationKind::NonFiniteLogProb: return "NonFiniteLogProb";
    }
    return "Unknown";
}

std::vector<Violation> validate(const Trajectory& t)
{
    std::vector<Violation> out;
    std::set<std::string> seenIds;

    for (std::size_t s = 0; s < t.steps.size(); ++s)
    {
        const auto& step = t.steps[s];
        if (step.observations.size() != step.actions.size())
            out.push_back({ ViolationKind::MisalignedObservations,
                            s,
                            std::to_string(step.actions.size()) + " actions, "
                                + std::to_string(step.observations.size()) + " observations" });

        for (const auto& call: step.actions)
        {
            if (!seenIds.insert(call.call_id).second)
                out.push_back({ ViolationKind::DuplicateCallId, s, call.call_id });
            if (call.tool == ToolKind::ProductSearch && call.arguments.empty())
                out.push_back({ ViolationKind::ProductSearchWithoutFilter, s, call.call_id });
        }

        for (std::size_t j = 0; j < step.observations.size(); ++j)
        {
            const auto& obs = step.observations[j];
            auto const matches = std::count_if(step.actions.begin(), step.actions.end(), [&](const ToolCall& a) {
                return a.call_id == obs.source_call_id;
            });
            bool const aligned = j < step.actions.size() && step.actions[j].call_id == obs.source_call_id;
            if (matches == 0 || !aligned)
                out.push_back({ ViolationKind::OrphanObservation, s, obs.source_call_id });
        }
    }

    for (const auto& card: t.response.cards)
        if (card.product_ids.empty())
            out.push_back({ ViolationKind::EmptyCard, std::nullopt, {} });

    if (!std::isfinite(t.log_prob_old))
        out.push_back({ ViolationKind::NonFiniteLogProb, std::nullopt, {} });

    return out;
}

// -- cards --

bool is_product_id(std::string_view id)
{
    if (id.size() < 4 || id.substr(0, 3) != "PD_")
        return false;
    return std::all_of(id.begin() + 3, id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
    });
}

namespace
{

    std::vector<std::string> split_ids(std::string_view body, char sep)
    {
        std::vector<std::string> ids;
        std::size_t start = 0;
        while (start <= body.size())
        {
            auto end = body.find(sep, start);
            if (end == std::string_view::npos)
                end = body.size();
            ids.emplace_back(body.substr(start, end - start));
            start = end + 1;
        }
        return ids;
    }

    bool strict_body(std::string_view body)
    {
        if (body.empty())
            return false;
        auto ids = split_ids(body, ',');
        return std::all_of(ids.begin(), ids.end(), [](const std::string& id) { return is_product_id(id); });
    }

    // Pulls anything that looks like a product id out of a malformed body.
    std::vector<std::string> lenient_ids(std::string_view body)
    {
        std::vector<std::string> ids;
        std::size_t i = 0;
        while ((i = body.find("PD_", i)) != std::string_view::npos)
        {
            auto j = i + 3;
            while (j < body.size() && (std::isalnum(static_cast<unsigned char>(body[j])) != 0 || body[j] == '_'))
                ++j;
            if (j > i + 3)
                ids.emplace_back(body.substr(i, j - i));
            i = j;
        }
        return ids;
    }

} // namespace

bool is_well_formed_card_tag(std::string_view tag)
{
    if (tag.size() < kCardOpen.size() + kCardClose.size())
        return false;
    if (tag.substr(0, kCardOpen.size()) != kCardOpen)
        return false;
    if (tag.substr(tag.size() - kCardClose.size()) != kCardClose)
        return false;
    return strict_body(tag.substr(kCardOpen.size(), tag.size() - kCardOpen.size() - kCardClose.size()));
}

std::string render_card(const ProductCard& card)
{
    std::string body;
    for (std::size_t i = 0; i < card.product_ids.size(); ++i)
    {
        if (i > 0)
            body += card.well_formed ? "," : "; ";
        body += card.product_ids[i];
    }
    if (card.well_formed)
        return std::string(kCardOpen) + body + std::string(kCardClose);
    // Attribute-style opener: recognisably a card, but outside the grammar.
    return "<product " + body + ">";
}

std::vector<ProductCard> extract_cards(std::string_view text)
{
    std::vector<ProductCard> cards;
    std::size_t pos = 0;
    while ((pos = text.find("<product", pos)) != std::string_view::npos)
    {
        auto const closeTag = text.find(kCardClose, pos);
        auto const nextOpen = text.find("<product", pos + 1);
        if (text.substr(pos, kCardOpen.size()) == kCardOpen && closeTag != std::string_view::npos
            && (nextOpen == std::string_view::npos || closeTag < nextOpen))
        {
            auto const end = closeTag + kCardClose.size();
            auto const tag = text.substr(pos, end - pos);
            auto const body = tag.substr(kCardOpen.size(), tag.size() - kCardOpen.size() - kCardClose.size());
            ProductCard card;
            card.well_formed = strict_body(body);
            card.product_ids = card.well_formed ? split_ids(body, ',') : lenient_ids(body);
            cards.push_back(std::move(card));
            pos = end;
            continue;
        }
        // Malformed opener: take everything up to the next '>' as the body.
        auto const gt = text.find('>', pos);
        auto const end = gt == std::string_view::npos ? text.size() : gt + 1;
        ProductCard card;
        card.well_formed = false;
        card.product_ids = lenient_ids(text.substr(pos, end - pos));
        cards.push_back(std::move(card));
        pos = end;
    }
    return cards;
}

// -- JSON --

void to_json(json& j, const ToolCall& call)
{
    j = json { { "tool", std::string(to_string(call.tool)) },
               { "arguments", call.arguments },
               { "call_id", call.call_id } };
}

void from_json(const json& j, ToolCall& call)
{
    call.tool = tool_kind_from_string(j.at("tool").get<std::string>());
    call.arguments = j.at("arguments").get<std::map<std::string, std::string>>();
    call.call_id = j.at("call_id").get<std::string>();
}

void to_json(json& j, const Observation& obs)
{
    j = json { { "source_call_id", obs.source_call_id } };
    if (const auto* ids = std::get_if<std::vector<std::string>>(&obs.payload))
        j["product_ids"] = *ids;
    else
        j["text"] = std::get<std::string>(obs.payload);
}

void from_json(const json& j, Observation& obs)
{
    obs.source_call_id = j.at("source_call_id").get<std::string>();
    if (j.contains("product_ids"))
        obs.payload = j.at("product_ids").get<std::vector<std::string>>();
    else
        obs.payload = j.at("text").get<std::string>();
}

void to_json(json& j, const Step& step)
{
    j = json { { "reasoning", step.reasoning }, { "actions", step.actions }, { "observations", step.observations } };
}

void from_json(const json& j, Step& step)
{
    step.reasoning = j.at("reasoning").get<std::string>();
    step.actions = j.at("actions").get<std::vector<ToolCall>>();
    step.observations = j.at("observations").get<std::vector<Observation>>();
}

void to_json(json& j, const ProductCard& card)
{
    j = json { { "product_ids", card.product_ids }, { "well_formed", card.well_formed } };
}

void from_json(const json& j, ProductCard& card)
{
    card.product_ids = j.at("product_ids").get<std::vector<std::string>>();
    card.well_formed = j.at("well_formed").get<bool>();
}

void to_json(json& j, const FinalResponse& r)
{
    j = json { { "text", r.text }, { "cards", r.cards }, { "mentioned_ids", r.mentioned_ids } };
}

void from_json(const json& j, FinalResponse& r)
{
    r.text = j.at("text").get<std::string>();
    r.cards = j.at("cards").get<std::vector<ProductCard>>();
    r.mentioned_ids = j.at("mentioned_ids").get<std::vector<std::string>>();
}

void to_json(json& j, const Trajectory& t)
{
    j = json { { "query_id", t.query_id },
               { "steps", t.steps },
               { "response", t.response },
               { "log_prob_old", t.log_prob_old } };
    if (!t.decision_schema.empty() || !t.decisions.empty())
    {
        json decisions = json::array();
        for (const auto& d: t.decisions)
            decisions.push_back(json::array({ d.block, d.choice }));
        j["decision_schema"] = t.decision_schema;
        j["decisions"] = std::move(decisions);
    }
}

void from_json(const json& j, Trajectory& t)
{
    t.query_id = j.at("query_id").get<std::string>();
    t.steps = j.at("steps").get<std::vector<Step>>();
    t.response = j.at("response").get<FinalResponse>();
    t.log_prob_old = j.at("log_prob_old").get<double>();
    t.decision_schema = j.value("decision_schema", std::string {});
    t.decisions.clear();
    if (j.contains("decisions"))
        for (const auto& d: j.at("decisions"))
            t.decisions.push_back({ d.at(0).get<int>(), d.at(1).get<int>() });
}

std::string encode_jsonl(const Trajectory& t)
{
    // Round-trip precision for log_prob_old is guaranteed by nlohmann's
    // shortest-representation double printer.
    return json(t).dump();
}

Trajectory decode_jsonl(std::string_view line)
{
    try
    {
        return json::parse(line).get<Trajectory>();
    }
    catch (const json::exception& e)
    {
        throw SchemaMismatch(std::string("not a trajectory record: ") + e.what());
    }
}

} // namespace shoprl
