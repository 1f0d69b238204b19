// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <shoprl/catalog.hpp>
#include <shoprl/trajectory.hpp>

#include <nlohmann/json.hpp>

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shoprl
{

struct Verdict
{
    bool pass = false;
    std::string reason;

    bool operator==(const Verdict&) const = default;
};

/// Level-1 verdicts. Product correctness is the conjunction of its four
/// sub-checks and is derived, never stored.
struct L1Report
{
    Verdict relevance;
    Verdict ui_format;
    Verdict ui_trigger;
    Verdict ui_completeness;
    Verdict text_relevance;
    Verdict description_faithfulness;

    [[nodiscard]] bool product_correctness() const noexcept
    {
        return relevance.pass && ui_format.pass && ui_trigger.pass && ui_completeness.pass;
    }

    /// The three gate dimensions c_1..c_3.
    [[nodiscard]] std::array<bool, 3> dimensions() const noexcept
    {
        return { product_correctness(), text_relevance.pass, description_faithfulness.pass };
    }
};

inline constexpr std::size_t kRubricItemCount = 7;

/// Rubric items in wire order: three structure items, then four depth items.
inline constexpr std::array<std::string_view, kRubricItemCount> kRubricItems {
    "core_decision_axis",   "logical_consistency",      "actionable_next_step", "path_differentiation",
    "route_prioritization", "product_level_comparison", "risk_mitigation",
};

struct L2Report
{
    std::array<Verdict, kRubricItemCount> items;

    [[nodiscard]] std::size_t passed() const noexcept;
    /// Fraction of passed rubric items.
    [[nodiscard]] double score() const noexcept { return static_cast<double>(passed()) / kRubricItemCount; }
};

struct GradeReport
{
    L1Report l1;
    /// Present iff the L1 gate passed.
    std::optional<L2Report> l2;
};

/// G_L1: 1 iff all three dimensions pass.
int gate_l1(const L1Report& r) noexcept;

struct JudgeCapabilities
{
    bool supports_l1_semantic = false;
    bool supports_l2 = false;
    bool supports_tool_score = false;
};

/// Semantic L1 verdicts that need a judge; format and completeness are
/// checked locally.
struct SemanticL1
{
    Verdict relevance;
    Verdict ui_trigger;
    Verdict text_relevance;
    Verdict description_faithfulness;
};

/// A judge backend. Public entry points check the declared capabilities and
/// throw CapabilityError instead of falling back to a default.
class JudgeBackend
{
  public:
    virtual ~JudgeBackend() = default;

    [[nodiscard]] virtual JudgeCapabilities capabilities() const = 0;

    SemanticL1 judge_l1(const Query& q, const Trajectory& t);
    std::array<Verdict, kRubricItemCount> judge_l2(const Query& q, const Trajectory& t);
    /// Score(A, O) in [0, 1].
    double tool_score(const Query& q, const Trajectory& t);

  protected:
    virtual SemanticL1 do_judge_l1(const Query& q, const Trajectory& t) = 0;
    virtual std::array<Verdict, kRubricItemCount> do_judge_l2(const Query& q, const Trajectory& t) = 0;
    virtual double do_tool_score(const Query& q, const Trajectory& t) = 0;
};

/// Rule-based checks.
Verdict check_ui_format(const FinalResponse& r);
Verdict check_ui_completeness(const FinalResponse& r);

/// Throws InvalidTrajectory when validate(t) is non-empty.
L1Report grade_l1(const Query& q, const Trajectory& t, JudgeBackend& backend);
L2Report grade_l2(const Query& q, const Trajectory& t, JudgeBackend& backend);

/// L1, then L2 only if the gate passed.
GradeReport grade(const Query& q, const Trajectory& t, JudgeBackend& backend);

/// Per-query metrics over k independent runs.
struct RunMetrics
{
    std::size_t n_runs = 0;
    double avg_at_k = 0.0;
    double pass_hat_k = 0.0;
    /// Mean and sample (n-1) std of L2 scores over the runs that have one;
    /// 0 when there are none (std: fewer than two).
    double l2_avg = 0.0;
    double l2_std = 0.0;
    std::size_t l2_count = 0;
};

/// Throws EmptyInput when k == 0 and LengthMismatch when reports.size() != k.
RunMetrics aggregate_runs(std::span<const GradeReport> reports, std::size_t k);

/// Corpus-level metrics over queries x runs.
struct CorpusMetrics
{
    std::size_t n_queries = 0;
    std::size_t n_runs = 0;
    /// Mean over queries of per-query Avg@k and Pass^k.
    double avg_at_k = 0.0;
    double pass_hat_k = 0.0;
    /// L2 Avg@k: mean over runs of the run's mean L2 score; L2 Std@k: sample
    /// std across those run means.
    double l2_avg = 0.0;
    double l2_std = 0.0;
    /// Per-dimension pass rates over all graded responses.
    double product_correctness = 0.0;
    double text_relevance = 0.0;
    double description_faithfulness = 0.0;
};

/// reports[q][run]; every query must have the same number of runs.
CorpusMetrics aggregate_corpus(const std::vector<std::vector<GradeReport>>& reports);

void to_json(nlohmann::json& j, const Verdict& v);
void to_json(nlohmann::json& j, const L1Report& r);
void to_json(nlohmann::json& j, const L2Report& r);
void to_json(nlohmann::json& j, const GradeReport& r);
void to_json(nlohmann::json& j, const RunMetrics& m);
void to_json(nlohmann::json& j, const CorpusMetrics& m);

} // namespace shoprl
