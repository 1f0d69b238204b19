// SPDX-License-Identifier: Apache-2.0
#include <shoprl/oracle_judge.hpp>
#include <shoprl/rollout.hpp>

#include <algorithm>
#include <cctype>
#include <set>

namespace shoprl
{

bool contains_word(std::string_view text, std::string_view word)
{
    if (word.empty())
        return false;
    auto isWordChar = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    std::size_t pos = 0;
    while ((pos = text.find(word, pos)) != std::string_view::npos)
    {
        auto const end = pos + word.size();
        auto const leftOk = pos == 0 || !isWordChar(text[pos - 1]);
        auto const rightOk = end == text.size() || !isWordChar(text[end]);
        if (leftOk && rightOk)
            return true;
        ++pos;
    }
    return false;
}

namespace
{

    std::set<std::string> carded_ids(const FinalResponse& r)
    {
        std::set<std::string> ids;
        for (const auto& card: r.cards)
            ids.insert(card.product_ids.begin(), card.product_ids.end());
        return ids;
    }

} // namespace

SemanticL1 OracleJudge::do_judge_l1(const Query& q, const Trajectory& t)
{
    SemanticL1 out;
    auto const carded = carded_ids(t.response);

    out.relevance = { true, "every carded product satisfies the request" };
    for (const auto& id: carded)
    {
        const auto* p = _catalog->find(id);
        if (!p)
        {
            out.relevance = { false, id + " is not in the catalog" };
            break;
        }
        if (!q.satisfied_by(*p))
        {
            out.relevance = { false, id + " does not satisfy the request" };
            break;
        }
    }

    auto const wantCards = is_search_oriented(q.category) || q.category == QueryCategory::QACompare;
    auto const hasCards = !t.response.cards.empty();
    if (wantCards == hasCards)
        out.ui_trigger = { true, hasCards ? "cards shown for a product request" : "no cards for a consultation" };
    else
        out.ui_trigger = { false, hasCards ? "cards shown where none were needed" : "product request without cards" };

    out.description_faithfulness = { true, "claims match the catalog" };
    for (const auto& c: extract_claims(t.response.text))
    {
        const auto* p = _catalog->find(c.product_id);
        auto const v = p ? p->get(c.attribute) : std::nullopt;
        if (!v || format_attribute(*v) != c.value)
        {
            out.description_faithfulness = { false, "claim " + c.product_id + " " + c.attribute + "=" + c.value
                                                         + " contradicts the catalog" };
            break;
        }
    }

    if (contains_word(prose_of(t.response.text), q.topic_token))
        out.text_relevance = { true, "response addresses " + q.topic_token };
    else
        out.text_relevance = { false, "response never addresses " + q.topic_token };
    return out;
}

std::array<Verdict, kRubricItemCount> OracleJudge::do_judge_l2(const Query&, const Trajectory& t)
{
    std::array<Verdict, kRubricItemCount> items;
    for (std::size_t i = 0; i < kRubricItemCount; ++i)
    {
        auto const present = t.response.text.find(kRubricMarkers[i]) != std::string::npos;
        items[i] = { present, std::string(kRubricItems[i]) + (present ? " realized" : " missing") };
    }
    return items;
}

double OracleJudge::do_tool_score(const Query&, const Trajectory& t)
{
    std::set<std::string> recommended = carded_ids(t.response);
    recommended.insert(t.response.mentioned_ids.begin(), t.response.mentioned_ids.end());
    auto const claims = extract_claims(t.response.text);

    std::size_t calls = 0;
    std::size_t useful = 0;
    for (const auto& step: t.steps)
    {
        for (std::size_t j = 0; j < step.actions.size(); ++j)
        {
            const auto& call = step.actions[j];
            ++calls;
            if (call.arguments.empty() || j >= step.observations.size())
                continue;
            const auto& payload = step.observations[j].payload;
            bool used = false;
            switch (call.tool)
            {
                case ToolKind::ProductSearch:
                    if (const auto* ids = std::get_if<std::vector<std::string>>(&payload))
                        used = std::any_of(ids->begin(), ids->end(),
                                           [&](const std::string& id) { return recommended.contains(id); });
                    break;
                case ToolKind::WebSearch: {
                    auto const it = call.arguments.find("query");
                    if (it == call.arguments.end())
                        break;
                    auto const space = it->second.find(' ');
                    auto const id = it->second.substr(0, space);
                    auto const attr = space == std::string::npos ? std::string {} : it->second.substr(space + 1);
                    used = attr != "price" && std::any_of(claims.begin(), claims.end(), [&](const Claim& c) {
                               return c.product_id == id && c.attribute == attr;
                           });
                    break;
                }
                case ToolKind::PythonExecute:
                    if (const auto* text = std::get_if<std::string>(&payload))
                        used = !text->empty()
                               && (t.response.text.find("[total=" + *text + "]") != std::string::npos
                                   || t.response.text.find("[difference=" + *text + "]") != std::string::npos);
                    break;
            }
            useful += used ? 1 : 0;
        }
    }
    return calls == 0 ? 1.0 : static_cast<double>(useful) / static_cast<double>(calls);
}

} // namespace shoprl
