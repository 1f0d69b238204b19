// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <shoprl/catalog.hpp>
#include <shoprl/grading.hpp>

namespace shoprl
{

/// Rule-based judge for the synthetic world. Every verdict is a pure
/// function of (query, trajectory, catalog).
///
/// relevance: every carded product exists and satisfies the query.
/// ui_trigger: cards are present iff the query is search-oriented or a
/// comparison of named products.
/// faithfulness: every claim matches the catalog value.
/// text relevance: the topic token appears as a word in the prose.
/// L2: an item passes iff its marker appears in the response text.
/// tool score: fraction of calls that are well parameterized and whose
/// observation the response uses; 1 when there are no calls.
class OracleJudge: public JudgeBackend
{
  public:
    explicit OracleJudge(const Catalog& catalog): _catalog(&catalog) {}

    [[nodiscard]] JudgeCapabilities capabilities() const override { return { true, true, true }; }

  protected:
    SemanticL1 do_judge_l1(const Query& q, const Trajectory& t) override;
    std::array<Verdict, kRubricItemCount> do_judge_l2(const Query& q, const Trajectory& t) override;
    double do_tool_score(const Query& q, const Trajectory& t) override;

  private:
    const Catalog* _catalog;
};

/// True iff `word` occurs in `text` delimited by non-word characters.
bool contains_word(std::string_view text, std::string_view word);

} // namespace shoprl
