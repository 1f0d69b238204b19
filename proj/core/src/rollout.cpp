// SPDX-License-Identifier: Apache-2.0
#include <shoprl/errors.hpp>
#include <shoprl/rollout.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace shoprl
{

std::vector<std::string> MockTools::product_search(const std::vector<Predicate>& filters, std::size_t limit) const
{
    std::vector<std::string> ids;
    for (const auto* p: _catalog->search(filters, limit))
        ids.push_back(p->id);
    return ids;
}

std::string MockTools::web_search(std::string_view query) const
{
    auto const space = query.find(' ');
    if (space == std::string_view::npos)
        return "no results";
    auto const id = std::string(query.substr(0, space));
    auto const attr = std::string(query.substr(space + 1));
    const auto* p = _catalog->find(id);
    if (!p)
        return "no results";
    auto const v = p->get(attr);
    if (!v)
        return "no results";
    return id + " " + attr + "=" + format_attribute(*v);
}

std::string MockTools::python_execute(std::string_view expression) const
{
    return format_attribute(evaluate_arithmetic(expression));
}

namespace
{

    class ArithmeticParser
    {
      public:
        explicit ArithmeticParser(std::string_view s): _s(s) {}

        double parse()
        {
            auto const v = sum();
            skip_space();
            if (_pos != _s.size())
                fail();
            return v;
        }

      private:
        [[noreturn]] void fail() const
        {
            throw DomainError("cannot evaluate \"" + std::string(_s) + "\" at offset " + std::to_string(_pos));
        }

        void skip_space()
        {
            while (_pos < _s.size() && std::isspace(static_cast<unsigned char>(_s[_pos])))
                ++_pos;
        }

        bool eat(char c)
        {
            skip_space();
            if (_pos < _s.size() && _s[_pos] == c)
            {
                ++_pos;
                return true;
            }
            return false;
        }

        double sum()
        {
            auto v = product();
            for (;;)
            {
                if (eat('+'))
                    v += product();
                else if (eat('-'))
                    v -= product();
                else
                    return v;
            }
        }

        double product()
        {
            auto v = unary();
            for (;;)
            {
                if (eat('*'))
                    v *= unary();
                else if (eat('/'))
                    v /= unary();
                else
                    return v;
            }
        }

        double unary()
        {
            if (eat('-'))
                return -unary();
            if (eat('('))
            {
                auto const v = sum();
                if (!eat(')'))
                    fail();
                return v;
            }
            skip_space();
            auto const start = _pos;
            while (_pos < _s.size() && (std::isdigit(static_cast<unsigned char>(_s[_pos])) || _s[_pos] == '.'))
                ++_pos;
            if (start == _pos)
                fail();
            try
            {
                return std::stod(std::string(_s.substr(start, _pos - start)));
            }
            catch (const std::exception&)
            {
                fail();
            }
        }

        std::string_view _s;
        std::size_t _pos = 0;
    };

} // namespace

double evaluate_arithmetic(std::string_view expression)
{
    return ArithmeticParser(expression).parse();
}

std::string render_claim(const Claim& c)
{
    return "[claim " + c.product_id + " " + c.attribute + "=" + c.value + "]";
}

std::vector<Claim> extract_claims(std::string_view text)
{
    std::vector<Claim> out;
    constexpr std::string_view open = "[claim ";
    std::size_t pos = 0;
    while ((pos = text.find(open, pos)) != std::string_view::npos)
    {
        auto const start = pos + open.size();
        auto const end = text.find(']', start);
        if (end == std::string_view::npos)
            break;
        auto const body = text.substr(start, end - start);
        auto const space = body.find(' ');
        auto const eq = body.find('=');
        if (space != std::string_view::npos && eq != std::string_view::npos && eq > space)
            out.push_back({ std::string(body.substr(0, space)), std::string(body.substr(space + 1, eq - space - 1)),
                            std::string(body.substr(eq + 1)) });
        pos = end + 1;
    }
    return out;
}

std::string prose_of(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    char closer = 0;
    for (char c: text)
    {
        if (closer)
        {
            if (c == closer)
                closer = 0;
            continue;
        }
        if (c == '[')
            closer = ']';
        else if (c == '<')
            closer = '>';
        else
            out.push_back(c);
    }
    return out;
}

std::optional<std::string> discussed_attribute(const Query& q)
{
    switch (q.category)
    {
        case QueryCategory::SearchFuzzy:
        case QueryCategory::SearchMultiConstraint:
            for (const auto& c: q.constraints)
                if (c.attribute != "category" && c.attribute != "price")
                    return c.attribute;
            return std::nullopt;
        case QueryCategory::QACompare:
        case QueryCategory::QAConsultation: return std::string("rating");
        default: return std::nullopt;
    }
}

namespace
{

    constexpr std::array<std::string_view, 12> kFiller { "check",   "the",     "request", "against", "each",   "option",
                                                         "weigh",   "price",   "and",     "fit",     "before", "deciding" };

    std::string filler(std::size_t tokens, std::size_t offset)
    {
        std::string out;
        out.reserve(tokens * 8);
        for (std::size_t i = 0; i < tokens; ++i)
        {
            if (i)
                out.push_back(' ');
            out += kFiller[(i + offset) % kFiller.size()];
        }
        return out;
    }

    std::string perturb(const AttributeValue& v)
    {
        if (const auto* d = std::get_if<double>(&v))
            return format_attribute(*d * 1.15 + 1.0);
        if (const auto* b = std::get_if<bool>(&v))
            return format_attribute(!*b);
        return std::get<std::string>(v) + "x";
    }

    std::vector<const ProductRecord*> draw_distinct(const std::vector<const ProductRecord*>& pool, std::size_t n,
                                                    Rng& rng)
    {
        auto copy = pool;
        n = std::min(n, copy.size());
        for (std::size_t i = 0; i < n; ++i)
            std::swap(copy[i], copy[i + rng.below(copy.size() - i)]);
        copy.resize(n);
        return copy;
    }

    std::vector<const ProductRecord*> all_products(const Catalog& catalog)
    {
        std::vector<const ProductRecord*> out;
        out.reserve(catalog.size());
        for (const auto& p: catalog.products())
            out.push_back(&p);
        return out;
    }

    std::vector<Predicate> id_filter(const std::string& id)
    {
        return { { "id", PredicateOp::Equal, id } };
    }

    struct Builder
    {
        std::vector<Step> steps;
        std::size_t nextCall = 0;

        std::string add_call(std::size_t step, ToolKind tool, std::map<std::string, std::string> args,
                             ObservationPayload payload)
        {
            auto id = "call-" + std::to_string(nextCall++);
            steps[step].actions.push_back({ tool, std::move(args), id });
            steps[step].observations.push_back({ id, std::move(payload) });
            return id;
        }

        void add_search(std::size_t step, const MockTools& tools, const std::vector<Predicate>& filters,
                        std::vector<std::string>* results)
        {
            std::map<std::string, std::string> args;
            for (const auto& f: filters)
                args[f.attribute] = f.argument();
            auto ids = tools.product_search(filters);
            if (results)
                *results = ids;
            add_call(step, ToolKind::ProductSearch, std::move(args), std::move(ids));
        }
    };

} // namespace

Trajectory assemble_episode(const EpisodeChoices& ch, const Query& q, const Catalog& catalog, Rng& rng)
{
    if (ch.segments < 1 || ch.segments > kMaxSegments || ch.verbosity.size() != ch.segments)
        throw DomainError("episode choices need one verbosity level per segment");

    MockTools const tools(catalog);
    Builder b;
    b.steps.resize(ch.segments);
    auto const searches = ch.plan != ToolPlan::None;
    auto const usesResults = searches && ch.pick != PickStrategy::Guess;

    std::vector<const ProductRecord*> picks;
    switch (q.category)
    {
        case QueryCategory::SearchFuzzy:
        case QueryCategory::SearchMultiConstraint:
        case QueryCategory::SearchGeneral: {
            // Each reasoning segment works one more constraint into the search.
            std::vector<Predicate> const covered(
                q.constraints.begin(),
                q.constraints.begin() + static_cast<std::ptrdiff_t>(std::min(ch.segments, q.constraints.size())));
            std::vector<std::string> results;
            if (searches)
                b.add_search(0, tools, covered, &results);
            if (usesResults && !results.empty())
            {
                std::vector<const ProductRecord*> found;
                for (const auto& id: results)
                    found.push_back(&catalog.at(id));
                if (ch.pick == PickStrategy::Best)
                    found.resize(std::min<std::size_t>(2, found.size()));
                else
                    found = draw_distinct(found, 2, rng);
                picks = std::move(found);
            }
            else
            {
                auto const category = product_category_from_string(std::get<std::string>(q.constraints.front().value));
                picks = draw_distinct(catalog.in_category(category), 2, rng);
            }
            break;
        }
        case QueryCategory::SearchBundle: {
            auto const everything = all_products(catalog);
            for (std::size_t r = 0; r < q.roles.size(); ++r)
            {
                std::vector<std::string> results;
                auto const covered = r < ch.segments;
                if (searches && covered)
                    b.add_search(r, tools, { { "category", PredicateOp::Equal, std::string(to_string(q.roles[r])) } },
                                 &results);
                if (usesResults && covered && !results.empty())
                {
                    auto const idx = ch.pick == PickStrategy::Best ? 0 : rng.below(results.size());
                    picks.push_back(&catalog.at(results[idx]));
                }
                else
                {
                    picks.push_back(everything[rng.below(everything.size())]);
                }
            }
            break;
        }
        case QueryCategory::QACompare:
            if (searches)
                b.add_search(0, tools, id_filter(q.named_products.front()), nullptr);
            for (const auto& id: q.named_products)
                picks.push_back(&catalog.at(id));
            break;
        case QueryCategory::QAConsultation:
            if (searches)
                b.add_search(0, tools, id_filter(q.named_products.front()), nullptr);
            if (ch.emit_cards)
                picks.push_back(&catalog.at(q.named_products.front()));
            break;
    }

    FinalResponse response;
    if (ch.emit_cards && !picks.empty())
    {
        if (q.category == QueryCategory::SearchBundle)
        {
            ProductCard card;
            for (const auto* p: picks)
                card.product_ids.push_back(p->id);
            response.cards.push_back(std::move(card));
        }
        else
        {
            for (const auto* p: picks)
                response.cards.push_back({ { p->id }, true });
        }
        if (!ch.card_format_ok)
            response.cards.front().well_formed = false;
    }
    for (const auto* p: picks)
        if (std::find(response.mentioned_ids.begin(), response.mentioned_ids.end(), p->id)
            == response.mentioned_ids.end())
            response.mentioned_ids.push_back(p->id);
    if (!ch.cards_complete)
    {
        // Talk about one more product without giving it a card.
        const auto& products = catalog.products();
        for (std::size_t tries = 0; tries < products.size(); ++tries)
        {
            const auto& extra = products[rng.below(products.size())];
            if (std::find(response.mentioned_ids.begin(), response.mentioned_ids.end(), extra.id)
                == response.mentioned_ids.end())
            {
                response.mentioned_ids.push_back(extra.id);
                break;
            }
        }
    }

    std::vector<Claim> claims;
    auto const attr = discussed_attribute(q);
    if (q.category == QueryCategory::QAConsultation)
    {
        const auto& subject = catalog.at(q.named_products.front());
        claims.push_back({ subject.id, *attr, format_attribute(*subject.get(*attr)) });
    }
    for (const auto* p: picks)
    {
        claims.push_back({ p->id, "price", format_attribute(p->price()) });
        if (attr)
            claims.push_back({ p->id, *attr, format_attribute(*p->get(*attr)) });
    }
    if (!ch.faithful && !claims.empty())
    {
        const auto& c = claims.front();
        claims.front().value = perturb(*catalog.at(c.product_id).get(c.attribute));
    }

    auto const last = ch.segments - 1;
    if (ch.plan == ToolPlan::SearchWeb || ch.plan == ToolPlan::SearchWebPython)
    {
        auto const subject = picks.empty() ? q.named_products.front() : picks.front()->id;
        auto const webQuery = subject + " " + attr.value_or("price");
        b.add_call(std::min<std::size_t>(1, last), ToolKind::WebSearch, { { "query", webQuery } },
                   tools.web_search(webQuery));
    }
    std::string computed;
    if (ch.plan == ToolPlan::SearchWebPython)
    {
        std::string expr;
        if (q.category == QueryCategory::SearchBundle)
        {
            for (std::size_t i = 0; i < picks.size(); ++i)
                expr += (i ? " + " : "") + format_attribute(picks[i]->price());
        }
        else if (q.category == QueryCategory::QACompare)
            expr = format_attribute(picks[0]->price()) + " - " + format_attribute(picks[1]->price());
        else if (!picks.empty())
            expr = format_attribute(picks.front()->price()) + " * 1.08";
        else
            expr = "0";
        auto result = tools.python_execute(expr);
        if (q.category == QueryCategory::SearchBundle)
            computed = "[total=" + result + "]";
        else if (q.category == QueryCategory::QACompare)
            computed = "[difference=" + result + "]";
        b.add_call(last, ToolKind::PythonExecute, { { "expression", expr } }, std::move(result));
    }

    std::size_t features = 0;
    for (bool f: ch.rubric)
        features += f ? 1 : 0;
    for (std::size_t s = 0; s < ch.segments; ++s)
    {
        auto tokens = kSegmentBaseTokens + kSegmentTokensPerLevel * ch.verbosity[s];
        if (s == last)
            tokens += kPlanningTokensPerFeature * features;
        b.steps[s].reasoning = filler(tokens, s);
    }

    std::string text = "Here is my answer.";
    if (ch.mentions_topic)
        text += " This covers " + q.topic_token + ".";
    for (const auto& card: response.cards)
        text += " " + render_card(card);
    for (const auto& c: claims)
        text += " " + render_claim(c);
    for (const auto& id: response.mentioned_ids)
    {
        auto const carded = std::any_of(response.cards.begin(), response.cards.end(), [&](const ProductCard& c) {
            return std::find(c.product_ids.begin(), c.product_ids.end(), id) != c.product_ids.end();
        });
        if (!carded)
            text += " Also consider " + id + ".";
    }
    for (std::size_t i = 0; i < kRubricFeatureCount; ++i)
        if (ch.rubric[i])
            text += " " + std::string(kRubricMarkers[i]);
    if (!computed.empty())
        text += " " + computed;
    response.text = std::move(text);

    Trajectory t;
    t.query_id = q.id;
    t.steps = std::move(b.steps);
    t.response = std::move(response);
    t.decision_schema = std::string(kToyDecisionSchema);
    t.decisions = ch.decisions(q.category);
    return t;
}

Trajectory rollout(const ToyPolicy& policy, const Query& q, const Catalog& catalog, Rng& rng)
{
    auto const choices = policy.sample_choices(q.category, rng);
    auto t = assemble_episode(choices, q, catalog, rng);
    t.log_prob_old = policy.log_prob(t);
    return t;
}

} // namespace shoprl
