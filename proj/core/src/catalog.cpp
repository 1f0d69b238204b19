// SPDX-License-Identifier: Apache-2.0
#include <shoprl/catalog.hpp>
#include <shoprl/errors.hpp>
#include <shoprl/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace shoprl
{

using nlohmann::json;

namespace
{

    constexpr std::array<std::string_view, kProductCategoryCount> kProductCategoryNames {
        "apparel", "electronics", "home_goods", "kitchen", "beauty", "sports", "toys", "garden", "pets", "office",
    };

    constexpr std::array<std::string_view, kQueryCategoryCount> kQueryCategoryNames {
        "SearchFuzzy", "SearchMultiConstraint", "SearchBundle", "SearchGeneral", "QACompare", "QAConsultation",
    };

    constexpr std::array<std::string_view, 6> kBrands { "acme", "borealis", "cobalt", "dynamo", "evergreen", "fathom" };

    constexpr std::array<std::string_view, 4> kScenarioWords { "travel", "outdoors", "commuting", "family" };

    double round_to(double x, double quantum)
    {
        return std::round(x / quantum) * quantum;
    }

    double uniform_in(Rng& rng, double lo, double hi)
    {
        return lo + (hi - lo) * rng.uniform();
    }

    const char* op_symbol(PredicateOp op)
    {
        switch (op)
        {
            case PredicateOp::Less: return "<";
            case PredicateOp::Greater: return ">";
            case PredicateOp::Equal: return "=";
        }
        return "?";
    }

    PredicateOp op_from_symbol(std::string_view s)
    {
        if (s == "<")
            return PredicateOp::Less;
        if (s == ">")
            return PredicateOp::Greater;
        if (s == "=")
            return PredicateOp::Equal;
        throw DomainError("unknown predicate op: " + std::string(s));
    }

} // namespace

std::string_view to_string(ProductCategory c)
{
    return kProductCategoryNames.at(static_cast<std::size_t>(c));
}

ProductCategory product_category_from_string(std::string_view name)
{
    for (std::size_t i = 0; i < kProductCategoryNames.size(); ++i)
        if (kProductCategoryNames[i] == name)
            return static_cast<ProductCategory>(i);
    throw DomainError("unknown product category: " + std::string(name));
}

std::string_view to_string(QueryCategory c)
{
    return kQueryCategoryNames.at(static_cast<std::size_t>(c));
}

QueryCategory query_category_from_string(std::string_view name)
{
    for (std::size_t i = 0; i < kQueryCategoryNames.size(); ++i)
        if (kQueryCategoryNames[i] == name)
            return static_cast<QueryCategory>(i);
    throw DomainError("unknown query category: " + std::string(name));
}

bool is_search_oriented(QueryCategory c)
{
    return c == QueryCategory::SearchFuzzy || c == QueryCategory::SearchMultiConstraint
           || c == QueryCategory::SearchBundle || c == QueryCategory::SearchGeneral;
}

std::string format_attribute(const AttributeValue& v)
{
    if (const auto* d = std::get_if<double>(&v))
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.2f", *d);
        return buf;
    }
    if (const auto* b = std::get_if<bool>(&v))
        return *b ? "yes" : "no";
    return std::get<std::string>(v);
}

// -- ProductRecord --

double ProductRecord::price() const
{
    return std::get<double>(attributes.at("price"));
}

std::optional<AttributeValue> ProductRecord::get(const std::string& key) const
{
    if (key == "category")
        return AttributeValue(std::string(to_string(category)));
    if (key == "id")
        return AttributeValue(id);
    auto it = attributes.find(key);
    if (it == attributes.end())
        return std::nullopt;
    return it->second;
}

// -- Predicate --

bool Predicate::holds(const ProductRecord& p) const
{
    auto v = p.get(attribute);
    if (!v)
        return false;
    switch (op)
    {
        case PredicateOp::Equal: return *v == value;
        case PredicateOp::Less:
        case PredicateOp::Greater: {
            const auto* lhs = std::get_if<double>(&*v);
            const auto* rhs = std::get_if<double>(&value);
            if (!lhs || !rhs)
                return false;
            return op == PredicateOp::Less ? *lhs < *rhs : *lhs > *rhs;
        }
    }
    return false;
}

std::string Predicate::argument() const
{
    return op_symbol(op) + format_attribute(value);
}

// -- Query --

bool Query::satisfied_by(const ProductRecord& p) const
{
    switch (category)
    {
        case QueryCategory::QACompare:
        case QueryCategory::QAConsultation:
            return std::find(named_products.begin(), named_products.end(), p.id) != named_products.end();
        case QueryCategory::SearchBundle:
            return std::find(roles.begin(), roles.end(), p.category) != roles.end();
        default:
            return std::all_of(constraints.begin(), constraints.end(), [&](const Predicate& c) { return c.holds(p); });
    }
}

// -- Catalog --

Catalog::Catalog(std::vector<ProductRecord> products): _products(std::move(products))
{
    for (std::size_t i = 0; i < _products.size(); ++i)
        if (!_index.emplace(_products[i].id, i).second)
            throw ConfigError("duplicate product id " + _products[i].id);
}

const ProductRecord* Catalog::find(std::string_view id) const
{
    auto it = _index.find(std::string(id));
    return it == _index.end() ? nullptr : &_products[it->second];
}

const ProductRecord& Catalog::at(std::string_view id) const
{
    const auto* p = find(id);
    if (!p)
        throw DomainError("unknown product id " + std::string(id));
    return *p;
}

std::vector<const ProductRecord*> Catalog::search(const std::vector<Predicate>& filters, std::size_t limit) const
{
    std::vector<const ProductRecord*> hits;
    for (const auto& p: _products)
        if (std::all_of(filters.begin(), filters.end(), [&](const Predicate& f) { return f.holds(p); }))
            hits.push_back(&p);
    std::stable_sort(hits.begin(), hits.end(), [](const ProductRecord* a, const ProductRecord* b) {
        auto const ra = std::get<double>(a->attributes.at("rating"));
        auto const rb = std::get<double>(b->attributes.at("rating"));
        return ra > rb;
    });
    if (hits.size() > limit)
        hits.resize(limit);
    return hits;
}

std::vector<const ProductRecord*> Catalog::in_category(ProductCategory c) const
{
    std::vector<const ProductRecord*> out;
    for (const auto& p: _products)
        if (p.category == c)
            out.push_back(&p);
    return out;
}

Catalog generate_catalog(std::uint64_t seed, std::size_t size)
{
    if (size < kProductCategoryCount)
        throw ConfigError("catalog size must be at least " + std::to_string(kProductCategoryCount));

    std::vector<ProductRecord> products;
    products.reserve(size);
    for (std::size_t i = 0; i < size; ++i)
    {
        auto rng = Rng::derive(seed, { 0xca7a1090ULL, i });
        ProductRecord p;
        p.id = "PD_" + std::to_string(1001 + i);
        p.category = static_cast<ProductCategory>(i % kProductCategoryCount);
        p.attributes["price"] = round_to(uniform_in(rng, 12.0, 420.0), 0.01);
        p.attributes["noise_db"] = round_to(uniform_in(rng, 28.0, 85.0), 0.1);
        p.attributes["rating"] = round_to(uniform_in(rng, 2.0, 5.0), 0.1);
        p.attributes["brand"] = std::string(kBrands[rng.below(kBrands.size())]);
        for (auto flag: kFeatureFlags)
            p.attributes[std::string(flag)] = rng.uniform() < 0.5;
        products.push_back(std::move(p));
    }
    return Catalog(std::move(products));
}

std::size_t witness_count(const Catalog& catalog, const Query& q)
{
    if (q.category == QueryCategory::SearchBundle)
    {
        // Every role needs its own witness.
        std::size_t minimum = catalog.size();
        for (auto role: q.roles)
            minimum = std::min(minimum, catalog.in_category(role).size());
        return q.roles.empty() ? 0 : minimum;
    }
    return static_cast<std::size_t>(std::count_if(catalog.products().begin(), catalog.products().end(),
                                                  [&](const ProductRecord& p) { return q.satisfied_by(p); }));
}

namespace
{

    // Threshold at a random quantile of the category's values so that some
    // products pass and some fail.
    double quantile_threshold(const std::vector<const ProductRecord*>& pool, const std::string& attr, Rng& rng,
                              double lo_q, double hi_q)
    {
        std::vector<double> values;
        for (const auto* p: pool)
            values.push_back(std::get<double>(p->attributes.at(attr)));
        std::sort(values.begin(), values.end());
        auto const q = uniform_in(rng, lo_q, hi_q);
        auto const idx = std::min(values.size() - 1, static_cast<std::size_t>(q * static_cast<double>(values.size())));
        return std::ceil(values[idx] + 0.5);
    }

    Query draw_query(const Catalog& catalog, QueryCategory cat, Rng& rng)
    {
        Query q;
        q.category = cat;
        auto const pc = static_cast<ProductCategory>(rng.below(kProductCategoryCount));
        auto const pcName = std::string(to_string(pc));
        auto const pool = catalog.in_category(pc);
        auto const feature = std::string(kFeatureFlags[rng.below(kFeatureFlags.size())]);

        switch (cat)
        {
            case QueryCategory::SearchFuzzy:
                q.constraints = { { "category", PredicateOp::Equal, pcName }, { feature, PredicateOp::Equal, true } };
                q.topic_token = feature;
                q.text = "something " + feature + " in " + pcName + " that just works for me";
                break;
            case QueryCategory::SearchMultiConstraint: {
                auto const price = quantile_threshold(pool, "price", rng, 0.55, 0.95);
                q.constraints = { { "category", PredicateOp::Equal, pcName }, { "price", PredicateOp::Less, price } };
                std::string third;
                if (rng.uniform() < 0.5)
                {
                    auto const noise = quantile_threshold(pool, "noise_db", rng, 0.55, 0.95);
                    q.constraints.push_back({ "noise_db", PredicateOp::Less, noise });
                    third = "quieter than " + format_attribute(noise) + " dB";
                }
                else
                {
                    q.constraints.push_back({ feature, PredicateOp::Equal, true });
                    third = feature;
                }
                q.topic_token = pcName;
                q.text = pcName + " under $" + format_attribute(price) + ", " + third;
                break;
            }
            case QueryCategory::SearchBundle: {
                auto const nRoles = 2 + rng.below(2);
                std::vector<std::size_t> cats(kProductCategoryCount);
                for (std::size_t i = 0; i < cats.size(); ++i)
                    cats[i] = i;
                for (std::size_t i = 0; i < nRoles; ++i)
                    std::swap(cats[i], cats[i + rng.below(cats.size() - i)]);
                std::string roleText;
                for (std::size_t i = 0; i < nRoles; ++i)
                {
                    q.roles.push_back(static_cast<ProductCategory>(cats[i]));
                    roleText += (i ? " + " : "") + std::string(to_string(q.roles.back()));
                }
                q.topic_token = "bundle";
                q.text = "a complete bundle: " + roleText;
                break;
            }
            case QueryCategory::SearchGeneral: {
                auto const price = quantile_threshold(pool, "price", rng, 0.4, 0.9);
                q.constraints = { { "category", PredicateOp::Equal, pcName }, { "price", PredicateOp::Less, price } };
                q.topic_token = pcName;
                q.text = "recommend " + pcName + " under $" + format_attribute(price);
                break;
            }
            case QueryCategory::QACompare: {
                if (pool.size() < 2)
                    return q;
                auto const a = rng.below(pool.size());
                auto b = rng.below(pool.size() - 1);
                if (b >= a)
                    ++b;
                q.named_products = { pool[a]->id, pool[b]->id };
                q.topic_token = "versus";
                q.text = pool[a]->id + " vs " + pool[b]->id + ": which one should I get?";
                break;
            }
            case QueryCategory::QAConsultation: {
                if (pool.empty())
                    return q;
                auto const& subject = *pool[rng.below(pool.size())];
                auto const scenario = std::string(kScenarioWords[rng.below(kScenarioWords.size())]);
                q.named_products = { subject.id };
                q.topic_token = scenario;
                q.text = "is " + subject.id + " good for " + scenario + "?";
                break;
            }
        }
        return q;
    }

    bool acceptable(const Catalog& catalog, const Query& q)
    {
        switch (q.category)
        {
            case QueryCategory::QACompare: return q.named_products.size() == 2;
            case QueryCategory::QAConsultation: return q.named_products.size() == 1;
            case QueryCategory::SearchBundle: return q.roles.size() >= 2 && witness_count(catalog, q) >= 1;
            default: break;
        }
        if (witness_count(catalog, q) < 3)
            return false;
        // The non-category constraints must exclude something in the category.
        auto const& category = std::get<std::string>(q.constraints.front().value);
        auto const inCategory =
            catalog.in_category(product_category_from_string(category));
        auto const violators = std::count_if(inCategory.begin(), inCategory.end(),
                                             [&](const ProductRecord* p) { return !q.satisfied_by(*p); });
        return violators >= 1;
    }

} // namespace

std::vector<Query> generate_queries(const Catalog& catalog, std::uint64_t seed, std::size_t n_per_category)
{
    constexpr std::size_t kMaxAttempts = 200;
    std::vector<Query> out;
    out.reserve(n_per_category * kQueryCategoryCount);
    for (auto cat: kAllQueryCategories)
    {
        for (std::size_t i = 0; i < n_per_category; ++i)
        {
            bool found = false;
            for (std::size_t attempt = 0; attempt < kMaxAttempts && !found; ++attempt)
            {
                auto rng = Rng::derive(seed, { 0x9e7e5ULL, static_cast<std::uint64_t>(cat), i, attempt });
                auto q = draw_query(catalog, cat, rng);
                if (!acceptable(catalog, q))
                    continue;
                char id[64];
                std::snprintf(id, sizeof id, "q-%s-%04zu", std::string(to_string(cat)).c_str(), i);
                q.id = id;
                out.push_back(std::move(q));
                found = true;
            }
            if (!found)
                throw Unsatisfiable("no satisfiable " + std::string(to_string(cat)) + " query after "
                                    + std::to_string(kMaxAttempts) + " draws");
        }
    }
    return out;
}

// -- JSON --

namespace
{

    json attribute_to_json(const AttributeValue& v)
    {
        return std::visit([](const auto& x) { return json(x); }, v);
    }

    AttributeValue attribute_from_json(const json& j)
    {
        if (j.is_boolean())
            return j.get<bool>();
        if (j.is_number())
            return j.get<double>();
        return j.get<std::string>();
    }

} // namespace

void to_json(json& j, const ProductRecord& p)
{
    json attrs = json::object();
    for (const auto& [k, v]: p.attributes)
        attrs[k] = attribute_to_json(v);
    j = json { { "id", p.id }, { "category", std::string(to_string(p.category)) }, { "attributes", attrs } };
}

void from_json(const json& j, ProductRecord& p)
{
    p.id = j.at("id").get<std::string>();
    p.category = product_category_from_string(j.at("category").get<std::string>());
    p.attributes.clear();
    for (const auto& [k, v]: j.at("attributes").items())
        p.attributes[k] = attribute_from_json(v);
}

void to_json(json& j, const Predicate& p)
{
    j = json { { "attribute", p.attribute }, { "op", op_symbol(p.op) }, { "value", attribute_to_json(p.value) } };
}

void from_json(const json& j, Predicate& p)
{
    p.attribute = j.at("attribute").get<std::string>();
    p.op = op_from_symbol(j.at("op").get<std::string>());
    p.value = attribute_from_json(j.at("value"));
}

void to_json(json& j, const Query& q)
{
    json roles = json::array();
    for (auto r: q.roles)
        roles.push_back(std::string(to_string(r)));
    j = json { { "id", q.id },
               { "category", std::string(to_string(q.category)) },
               { "text", q.text },
               { "constraints", q.constraints },
               { "roles", roles },
               { "named_products", q.named_products },
               { "topic_token", q.topic_token } };
}

void from_json(const json& j, Query& q)
{
    q.id = j.at("id").get<std::string>();
    q.category = query_category_from_string(j.at("category").get<std::string>());
    q.text = j.at("text").get<std::string>();
    q.constraints = j.at("constraints").get<std::vector<Predicate>>();
    q.roles.clear();
    for (const auto& r: j.at("roles"))
        q.roles.push_back(product_category_from_string(r.get<std::string>()));
    q.named_products = j.at("named_products").get<std::vector<std::string>>();
    q.topic_token = j.at("topic_token").get<std::string>();
}

} // namespace shoprl
