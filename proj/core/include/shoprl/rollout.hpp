// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <shoprl/catalog.hpp>
#include <shoprl/rng.hpp>
#include <shoprl/toy_policy.hpp>
#include <shoprl/trajectory.hpp>

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace shoprl
{

/// Text markers that realize each rubric item, in rubric order.
inline constexpr std::array<std::string_view, kRubricFeatureCount> kRubricMarkers {
    "[decision-axis]", "[consistency-check]", "[next-step]",       "[paths]",
    "[priority]",      "[product-comparison]", "[risk-mitigation]",
};

/// Tokens of reasoning per segment at verbosity v: base + step * v.
inline constexpr std::size_t kSegmentBaseTokens = 4;
inline constexpr std::size_t kSegmentTokensPerLevel = 10;
/// Extra planning tokens in the last segment per realized rubric item.
inline constexpr std::size_t kPlanningTokensPerFeature = 4;

/// Deterministic tool mocks over a catalog.
class MockTools
{
  public:
    explicit MockTools(const Catalog& catalog): _catalog(&catalog) {}

    /// Ids of matching products, best rating first.
    [[nodiscard]] std::vector<std::string> product_search(const std::vector<Predicate>& filters,
                                                          std::size_t limit = 10) const;
    /// "PD_x attr=value" for a query of the form "PD_x attr"; catalog facts only.
    [[nodiscard]] std::string web_search(std::string_view query) const;
    /// Evaluates + - * / and parentheses over numbers.
    [[nodiscard]] std::string python_execute(std::string_view expression) const;

  private:
    const Catalog* _catalog;
};

/// Evaluates an arithmetic expression. Throws DomainError on a syntax error.
double evaluate_arithmetic(std::string_view expression);

/// A `[claim PD_x attr=value]` marker found in response text.
struct Claim
{
    std::string product_id;
    std::string attribute;
    std::string value;
};

std::vector<Claim> extract_claims(std::string_view text);
std::string render_claim(const Claim& c);

/// Response text with bracketed markers and card tags removed.
std::string prose_of(std::string_view text);

/// The non-price attribute a response discusses for this query, if any.
std::optional<std::string> discussed_attribute(const Query& q);

/// Builds the trajectory that a fixed set of choices produces. `rng` drives
/// only world randomness (random picks and guesses), never policy decisions.
Trajectory assemble_episode(const EpisodeChoices& choices, const Query& q, const Catalog& catalog, Rng& rng);

/// Samples decisions from `policy`, runs the mocked tools, and records the
/// decision log and log_prob_old.
Trajectory rollout(const ToyPolicy& policy, const Query& q, const Catalog& catalog, Rng& rng);

} // namespace shoprl
