// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace shoprl
{

enum class ToolKind
{
    WebSearch,
    PythonExecute,
    ProductSearch,
};

std::string_view to_string(ToolKind kind);
ToolKind tool_kind_from_string(std::string_view name);

struct ToolCall
{
    ToolKind tool = ToolKind::WebSearch;
    /// For ProductSearch the keys are filter attributes, e.g. {"price": "<100"}.
    std::map<std::string, std::string> arguments;
    std::string call_id;

    bool operator==(const ToolCall&) const = default;
};

/// ProductSearch returns product ids; the other tools return text.
using ObservationPayload = std::variant<std::vector<std::string>, std::string>;

struct Observation
{
    std::string source_call_id;
    ObservationPayload payload;

    bool operator==(const Observation&) const = default;
};

/// One reasoning-action-observation cycle. observations[j] answers actions[j].
struct Step
{
    std::string reasoning;
    std::vector<ToolCall> actions;
    std::vector<Observation> observations;

    bool operator==(const Step&) const = default;
};

/// A product card; several ids form a bundle card.
struct ProductCard
{
    std::vector<std::string> product_ids;
    bool well_formed = true;

    bool operator==(const ProductCard&) const = default;
};

struct FinalResponse
{
    std::string text;
    std::vector<ProductCard> cards;
    std::vector<std::string> mentioned_ids;

    bool operator==(const FinalResponse&) const = default;
};

/// One sampled policy decision: which decision block and which outcome.
struct Decision
{
    int block = 0;
    int choice = 0;

    bool operator==(const Decision&) const = default;
};

struct Trajectory
{
    std::string query_id;
    std::vector<Step> steps;
    FinalResponse response;
    /// log pi_old(trajectory), recorded when the trajectory was sampled.
    double log_prob_old = 0.0;
    /// Identifies the decision layout `decisions` was sampled under.
    std::string decision_schema;
    std::vector<Decision> decisions;

    bool operator==(const Trajectory&) const = default;
};

using TokenCounter = std::function<std::size_t(std::string_view)>;

/// Counts whitespace-delimited tokens.
std::size_t whitespace_token_count(std::string_view text);

/// Total reasoning tokens over all steps. Response and observation text are
/// not counted.
std::size_t reasoning_length(const Trajectory& t, const TokenCounter& count = whitespace_token_count);

std::size_t tool_call_count(const Trajectory& t);

enum class ViolationKind
{
    MisalignedObservations,
    DuplicateCallId,
    OrphanObservation,
    ProductSearchWithoutFilter,
    EmptyCard,
    NonFiniteLogProb,
};

std::string_view to_string(ViolationKind kind);

struct Violation
{
    ViolationKind kind;
    /// Step index, or nullopt for trajectory-level violations.
    std::optional<std::size_t> step;
    std::string detail;
};

/// Structural invariant check. Returns one entry per violated invariant
/// instance; empty means the trajectory is valid.
std::vector<Violation> validate(const Trajectory& t);

// -- Product card wire form: <product>PD_1[,PD_2...]</product> --

inline constexpr std::string_view kCardOpen = "<product>";
inline constexpr std::string_view kCardClose = "</product>";

/// True iff `tag` is exactly one well-formed card tag.
bool is_well_formed_card_tag(std::string_view tag);

/// Renders a card in its wire form. Malformed cards are rendered with a
/// broken separator so that parsing reproduces well_formed == false.
std::string render_card(const ProductCard& card);

/// Finds every card tag in `text`, leniently. Cards whose tag breaks the
/// grammar are returned with well_formed == false.
std::vector<ProductCard> extract_cards(std::string_view text);

bool is_product_id(std::string_view id);

// -- JSON / JSONL --

void to_json(nlohmann::json& j, const ToolCall& call);
void from_json(const nlohmann::json& j, ToolCall& call);
void to_json(nlohmann::json& j, const Observation& obs);
void from_json(const nlohmann::json& j, Observation& obs);
void to_json(nlohmann::json& j, const Step& step);
void from_json(const nlohmann::json& j, Step& step);
void to_json(nlohmann::json& j, const ProductCard& card);
void from_json(const nlohmann::json& j, ProductCard& card);
void to_json(nlohmann::json& j, const FinalResponse& r);
void from_json(const nlohmann::json& j, FinalResponse& r);
void to_json(nlohmann::json& j, const Trajectory& t);
void from_json(const nlohmann::json& j, Trajectory& t);

/// One JSONL line (no trailing newline).
std::string encode_jsonl(const Trajectory& t);
/// Throws SchemaMismatch for anything that is not a trajectory record.
Trajectory decode_jsonl(std::string_view line);

} // namespace shoprl
