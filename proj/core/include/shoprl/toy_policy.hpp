// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <shoprl/catalog.hpp>
#include <shoprl/rng.hpp>
#include <shoprl/trajectory.hpp>

#include <nlohmann/json.hpp>

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace shoprl
{

inline constexpr std::string_view kToyDecisionSchema = "toy-policy/v1";
inline constexpr std::size_t kMaxSegments = 8;
inline constexpr std::size_t kVerbosityLevels = 8;
inline constexpr std::size_t kToolPlanCount = 4;
inline constexpr std::size_t kPickStrategyCount = 3;
inline constexpr std::size_t kRubricFeatureCount = 7;

/// Decision blocks. Categorical blocks own one logit per outcome; Bernoulli
/// blocks own one logit for "true" (choice 1).
namespace block
{
    inline constexpr int kSegments = 0;
    /// Sampled once per segment.
    inline constexpr int kVerbosity = 1;
    /// kToolPlan + query category index.
    inline constexpr int kToolPlan = 2;
    inline constexpr int kPick = 8;
    /// kEmitCards + query category index.
    inline constexpr int kEmitCards = 9;
    /// kRubric + rubric item index.
    inline constexpr int kRubric = 15;
    inline constexpr int kFidelity = 22;
    inline constexpr int kCardFormat = 23;
    inline constexpr int kCardCompleteness = 24;
    inline constexpr int kTopicMention = 25;
    inline constexpr int kCount = 26;
} // namespace block

/// Tool plans; each adds one tool on top of the previous.
enum class ToolPlan
{
    None = 0,
    Search = 1,
    SearchWeb = 2,
    SearchWebPython = 3,
};

enum class PickStrategy
{
    /// Top search results.
    Best = 0,
    /// Random search results.
    Random = 1,
    /// Ignore the search and guess from the category.
    Guess = 2,
};

struct BlockInfo
{
    std::size_t offset = 0;
    /// Number of outcomes (2 for Bernoulli).
    std::size_t arity = 0;
    bool bernoulli = false;
};

BlockInfo block_info(int block);

inline constexpr std::size_t kToyParamCount = 60;

/// Every decision the agent makes in one episode.
struct EpisodeChoices
{
    std::size_t segments = 1;
    /// One verbosity level per segment.
    std::vector<std::size_t> verbosity { 0 };
    ToolPlan plan = ToolPlan::None;
    PickStrategy pick = PickStrategy::Best;
    bool emit_cards = true;
    std::array<bool, kRubricFeatureCount> rubric {};
    bool faithful = true;
    bool card_format_ok = true;
    bool cards_complete = true;
    bool mentions_topic = true;

    /// The decision record for a query of category `cat`.
    [[nodiscard]] std::vector<Decision> decisions(QueryCategory cat) const;
};

/// Rebuilds choices from a decision record. Throws SchemaMismatch when the
/// record does not follow the episode layout.
EpisodeChoices choices_from_decisions(std::span<const Decision> decisions, QueryCategory cat);

/// Small parametric stochastic policy over the episode decisions.
class ToyPolicy
{
  public:
    /// All logits zero: every decision uniform.
    ToyPolicy();
    /// Throws ConfigError unless params.size() == kToyParamCount or any is non-finite.
    explicit ToyPolicy(std::vector<double> params);

    /// Heuristic starting point used as the reference policy.
    static ToyPolicy warm_start();

    [[nodiscard]] std::span<const double> params() const noexcept { return _params; }
    [[nodiscard]] std::span<double> params() noexcept { return _params; }

    /// Probabilities of each outcome of `block`.
    [[nodiscard]] std::vector<double> probabilities(int block) const;

    int sample(int block, Rng& rng) const;
    EpisodeChoices sample_choices(QueryCategory cat, Rng& rng) const;

    [[nodiscard]] double log_prob(const Decision& d) const;
    [[nodiscard]] double log_prob(std::span<const Decision> decisions) const;
    /// Sum of decision log-probs. Throws SchemaMismatch for a foreign schema
    /// or an out-of-range decision.
    [[nodiscard]] double log_prob(const Trajectory& t) const;

    /// grad += weight * d log_prob / d params.
    void accumulate_grad(const Decision& d, double weight, std::span<double> grad) const;
    void accumulate_grad(const Trajectory& t, double weight, std::span<double> grad) const;
    [[nodiscard]] std::vector<double> grad_log_prob(const Trajectory& t) const;

    bool operator==(const ToyPolicy&) const = default;

  private:
    std::vector<double> _params;
};

void to_json(nlohmann::json& j, const ToyPolicy& p);
void from_json(const nlohmann::json& j, ToyPolicy& p);

} // namespace shoprl
