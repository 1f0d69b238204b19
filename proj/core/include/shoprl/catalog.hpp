// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace shoprl
{

enum class ProductCategory
{
    Apparel,
    Electronics,
    HomeGoods,
    Kitchen,
    Beauty,
    Sports,
    Toys,
    Garden,
    Pets,
    Office,
};

inline constexpr std::size_t kProductCategoryCount = 10;
std::string_view to_string(ProductCategory c);
ProductCategory product_category_from_string(std::string_view name);

enum class QueryCategory
{
    SearchFuzzy,
    SearchMultiConstraint,
    SearchBundle,
    SearchGeneral,
    QACompare,
    QAConsultation,
};

inline constexpr std::size_t kQueryCategoryCount = 6;
inline constexpr std::array<QueryCategory, kQueryCategoryCount> kAllQueryCategories {
    QueryCategory::SearchFuzzy, QueryCategory::SearchMultiConstraint, QueryCategory::SearchBundle,
    QueryCategory::SearchGeneral, QueryCategory::QACompare, QueryCategory::QAConsultation,
};

std::string_view to_string(QueryCategory c);
QueryCategory query_category_from_string(std::string_view name);
bool is_search_oriented(QueryCategory c);

/// Numeric attribute, boolean feature flag or string (brand, category).
using AttributeValue = std::variant<double, bool, std::string>;

/// Text form used in tool arguments and claims: prices with two decimals,
/// flags as yes/no.
std::string format_attribute(const AttributeValue& v);

struct ProductRecord
{
    std::string id;
    ProductCategory category = ProductCategory::Apparel;
    /// Always contains "price", "noise_db", "rating", "brand" and the feature flags.
    std::map<std::string, AttributeValue> attributes;

    [[nodiscard]] double price() const;
    /// The attribute, or nullopt. "category" resolves to the category name.
    [[nodiscard]] std::optional<AttributeValue> get(const std::string& key) const;
};

inline constexpr std::array<std::string_view, 4> kFeatureFlags { "wireless", "waterproof", "portable", "eco" };

enum class PredicateOp
{
    Less,
    Greater,
    Equal,
};

struct Predicate
{
    std::string attribute;
    PredicateOp op = PredicateOp::Equal;
    AttributeValue value;

    [[nodiscard]] bool holds(const ProductRecord& p) const;
    /// Filter argument form, e.g. "<100.00" or "=yes".
    [[nodiscard]] std::string argument() const;
};

struct Query
{
    std::string id;
    QueryCategory category = QueryCategory::SearchGeneral;
    std::string text;
    /// Search constraints in the order an agent would work through them.
    std::vector<Predicate> constraints;
    /// SearchBundle: complementary product categories, one product each.
    std::vector<ProductCategory> roles;
    /// QACompare / QAConsultation: products the user names.
    std::vector<std::string> named_products;
    /// Token the response must reference to count as on-topic.
    std::string topic_token;

    /// True iff `p` satisfies every constraint (id membership for QA queries).
    [[nodiscard]] bool satisfied_by(const ProductRecord& p) const;
};

class Catalog
{
  public:
    Catalog() = default;
    explicit Catalog(std::vector<ProductRecord> products);

    [[nodiscard]] const std::vector<ProductRecord>& products() const noexcept { return _products; }
    [[nodiscard]] std::size_t size() const noexcept { return _products.size(); }
    [[nodiscard]] const ProductRecord* find(std::string_view id) const;
    [[nodiscard]] const ProductRecord& at(std::string_view id) const;

    /// Products satisfying all predicates, best rating first (ties by id).
    [[nodiscard]] std::vector<const ProductRecord*> search(const std::vector<Predicate>& filters,
                                                           std::size_t limit = 10) const;

    [[nodiscard]] std::vector<const ProductRecord*> in_category(ProductCategory c) const;

  private:
    std::vector<ProductRecord> _products;
    std::unordered_map<std::string, std::size_t> _index;
};

/// Seed-deterministic catalog covering all ten product categories.
/// Throws ConfigError when size < 10.
Catalog generate_catalog(std::uint64_t seed, std::size_t size);

/// `n_per_category` queries of each of the six categories, each with at
/// least one witness product. Throws Unsatisfiable when the catalog cannot
/// witness a freshly drawn constraint set after repeated redraws.
std::vector<Query> generate_queries(const Catalog& catalog, std::uint64_t seed, std::size_t n_per_category);

/// Number of products satisfying the query, by brute-force scan.
std::size_t witness_count(const Catalog& catalog, const Query& q);

// -- JSON / JSONL --
void to_json(nlohmann::json& j, const ProductRecord& p);
void from_json(const nlohmann::json& j, ProductRecord& p);
void to_json(nlohmann::json& j, const Predicate& p);
void from_json(const nlohmann::json& j, Predicate& p);
void to_json(nlohmann::json& j, const Query& q);
void from_json(const nlohmann::json& j, Query& q);

} // namespace shoprl
