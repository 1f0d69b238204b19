// SPDX-License-Identifier: Apache-2.0
#include <shoprl/catalog.hpp>
#include <shoprl/errors.hpp>

#include <gtest/gtest.h>

#include <map>
#include <set>

using namespace shoprl;

namespace
{

std::size_t brute_force_witnesses(const Catalog& c, const Query& q)
{
    std::size_t n = 0;
    for (const auto& p: c.products())
    {
        bool ok = true;
        if (q.category == QueryCategory::QACompare || q.category == QueryCategory::QAConsultation)
            ok = std::find(q.named_products.begin(), q.named_products.end(), p.id) != q.named_products.end();
        else if (q.category == QueryCategory::SearchBundle)
            ok = std::find(q.roles.begin(), q.roles.end(), p.category) != q.roles.end();
        else
            for (const auto& pred: q.constraints)
                ok = ok && pred.holds(p);
        n += ok ? 1 : 0;
    }
    return n;
}

} // namespace

TEST(Catalog, Deterministic)
{
    auto const a = generate_catalog(1, 100);
    auto const b = generate_catalog(1, 100);
    ASSERT_EQ(a.size(), 100u);
    EXPECT_EQ(nlohmann::json(a.products()), nlohmann::json(b.products()));
    EXPECT_NE(nlohmann::json(a.products()), nlohmann::json(generate_catalog(2, 100).products()));
}

TEST(Catalog, EveryCategoryPresent)
{
    auto const c = generate_catalog(1, 100);
    for (std::size_t i = 0; i < kProductCategoryCount; ++i)
    {
        EXPECT_FALSE(c.in_category(static_cast<ProductCategory>(i)).empty());
    }
}

TEST(Catalog, TooSmallIsConfigError)
{
    EXPECT_THROW(generate_catalog(1, 5), ConfigError);
    EXPECT_NO_THROW(generate_catalog(1, 10));
}

TEST(Catalog, RecordsAreComplete)
{
    auto const c = generate_catalog(3, 60);
    std::set<std::string> ids;
    for (const auto& p: c.products())
    {
        EXPECT_TRUE(ids.insert(p.id).second);
        EXPECT_GT(p.price(), 0.0);
        for (auto key: { "price", "noise_db", "rating", "brand" })
        {
            EXPECT_TRUE(p.attributes.count(key)) << key;
        }
        for (auto flag: kFeatureFlags)
        {
            EXPECT_TRUE(p.attributes.count(std::string(flag)));
        }
    }
}

TEST(Catalog, DuplicateIdsRejected)
{
    ProductRecord p;
    p.id = "PD_1";
    p.attributes["price"] = 10.0;
    EXPECT_THROW(Catalog({ p, p }), ConfigError);
}

TEST(Catalog, SearchOrdersByRatingThenId)
{
    auto const c = generate_catalog(4, 200);
    auto const hits = c.search({ { "category", PredicateOp::Equal, std::string("kitchen") } }, 50);
    ASSERT_FALSE(hits.empty());
    for (std::size_t i = 1; i < hits.size(); ++i)
    {
        auto const ra = std::get<double>(hits[i - 1]->attributes.at("rating"));
        auto const rb = std::get<double>(hits[i]->attributes.at("rating"));
        ASSERT_TRUE(ra > rb || (ra == rb && hits[i - 1]->id < hits[i]->id));
    }
    EXPECT_LE(c.search({}, 3).size(), 3u);
}

TEST(Predicate, HoldsAndArgument)
{
    ProductRecord p;
    p.id = "PD_9";
    p.category = ProductCategory::Electronics;
    p.attributes = { { "price", 120.0 }, { "noise_db", 45.0 }, { "wireless", true } };
    EXPECT_FALSE((Predicate { "price", PredicateOp::Less, 100.0 }.holds(p)));
    EXPECT_TRUE((Predicate { "noise_db", PredicateOp::Less, 50.0 }.holds(p)));
    EXPECT_TRUE((Predicate { "wireless", PredicateOp::Equal, true }.holds(p)));
    EXPECT_TRUE((Predicate { "category", PredicateOp::Equal, std::string("electronics") }.holds(p)));
    EXPECT_FALSE((Predicate { "missing", PredicateOp::Greater, 1.0 }.holds(p)));
    EXPECT_EQ((Predicate { "price", PredicateOp::Less, 100.0 }.argument()), "<100.00");
    EXPECT_EQ((Predicate { "wireless", PredicateOp::Equal, true }.argument()), "=yes");
}

TEST(Queries, TwentyPerCategoryGivesOneHundredTwenty)
{
    auto const c = generate_catalog(7, 200);
    auto const qs = generate_queries(c, 7, 20);
    ASSERT_EQ(qs.size(), 120u);
    std::map<QueryCategory, int> counts;
    std::set<std::string> ids;
    for (const auto& q: qs)
    {
        ++counts[q.category];
        EXPECT_TRUE(ids.insert(q.id).second);
        EXPECT_FALSE(q.topic_token.empty());
    }
    for (auto cat: kAllQueryCategories)
    {
        EXPECT_EQ(counts[cat], 20);
    }
}

TEST(Queries, ShapeInvariantsAndWitnesses)
{
    for (std::uint64_t seed: { 1u, 7u, 19u })
    {
        auto const c = generate_catalog(seed, 200);
        for (const auto& q: generate_queries(c, seed, 20))
        {
            if (q.category == QueryCategory::SearchMultiConstraint)
            {
                EXPECT_GE(q.constraints.size(), 2u);
            }
            if (q.category == QueryCategory::SearchBundle)
            {
                EXPECT_GE(q.roles.size(), 2u);
            }
            if (q.category == QueryCategory::QACompare)
            {
                EXPECT_EQ(q.named_products.size(), 2u);
            }
            auto const n = brute_force_witnesses(c, q);
            ASSERT_GE(n, 1u) << q.id;
            if (q.category != QueryCategory::SearchBundle)
            {
                EXPECT_EQ(witness_count(c, q), n);
            }
            if (q.category == QueryCategory::SearchBundle)
                for (auto role: q.roles)
                {
                    EXPECT_FALSE(c.in_category(role).empty());
                }
            if (!is_search_oriented(q.category))
                continue;
            if (q.category != QueryCategory::SearchBundle)
            {
                EXPECT_GE(n, 3u) << q.id;
                EXPECT_GE(c.size() - n, 3u) << q.id;
            }
        }
    }
}

TEST(Queries, Deterministic)
{
    auto const c = generate_catalog(2, 150);
    EXPECT_EQ(nlohmann::json(generate_queries(c, 5, 4)), nlohmann::json(generate_queries(c, 5, 4)));
}

TEST(Queries, UnwitnessableCatalogThrows)
{
    // One product per category cannot name two products of the same category.
    auto const c = generate_catalog(1, 10);
    EXPECT_THROW(generate_queries(c, 1, 1), Unsatisfiable);
}

TEST(Queries, JsonRoundTrip)
{
    auto const c = generate_catalog(8, 100);
    for (const auto& q: generate_queries(c, 8, 3))
    {
        auto const back = nlohmann::json(q).get<Query>();
        EXPECT_EQ(nlohmann::json(back), nlohmann::json(q));
    }
}

TEST(Names, CategoryStringsRoundTrip)
{
    for (auto cat: kAllQueryCategories)
    {
        EXPECT_EQ(query_category_from_string(to_string(cat)), cat);
    }
    for (std::size_t i = 0; i < kProductCategoryCount; ++i)
    {
        auto const pc = static_cast<ProductCategory>(i);
        EXPECT_EQ(product_category_from_string(to_string(pc)), pc);
    }
    EXPECT_THROW(query_category_from_string("Nope"), DomainError);
}
