// SPDX-License-Identifier: Apache-2.0
#include <shoprl/errors.hpp>
#include <shoprl/grading.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace shoprl
{

using nlohmann::json;

std::size_t L2Report::passed() const noexcept
{
    return static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [](const Verdict& v) { return v.pass; }));
}

int gate_l1(const L1Report& r) noexcept
{
    int g = 1;
    for (bool c: r.dimensions())
        g *= c ? 1 : 0;
    return g;
}

SemanticL1 JudgeBackend::judge_l1(const Query& q, const Trajectory& t)
{
    if (!capabilities().supports_l1_semantic)
        throw CapabilityError("judge backend does not support L1 semantic checks");
    return do_judge_l1(q, t);
}

std::array<Verdict, kRubricItemCount> JudgeBackend::judge_l2(const Query& q, const Trajectory& t)
{
    if (!capabilities().supports_l2)
        throw CapabilityError("judge backend does not support L2 rubric grading");
    return do_judge_l2(q, t);
}

double JudgeBackend::tool_score(const Query& q, const Trajectory& t)
{
    if (!capabilities().supports_tool_score)
        throw CapabilityError("judge backend does not support tool scoring");
    auto const s = do_tool_score(q, t);
    if (!(s >= 0.0 && s <= 1.0))
        throw BackendMalformedOutput("tool score outside [0,1]: " + std::to_string(s));
    return s;
}

Verdict check_ui_format(const FinalResponse& r)
{
    for (const auto& card: r.cards)
        if (!card.well_formed)
            return { false, "card violates <product>ID[,ID...]</product>" };
    for (const auto& card: extract_cards(r.text))
        if (!card.well_formed)
            return { false, "malformed card tag in response text" };
    return { true, "all card tags well formed" };
}

Verdict check_ui_completeness(const FinalResponse& r)
{
    std::set<std::string> carded;
    for (const auto& card: r.cards)
        carded.insert(card.product_ids.begin(), card.product_ids.end());
    std::set<std::string> const mentioned(r.mentioned_ids.begin(), r.mentioned_ids.end());

    for (const auto& id: mentioned)
        if (!carded.contains(id))
            return { false, id + " is mentioned without a card" };
    for (const auto& id: carded)
        if (!mentioned.contains(id))
            return { false, id + " has a card but is not discussed" };
    return { true, "mentions and cards agree" };
}

namespace
{

    void require_valid(const Trajectory& t)
    {
        auto const violations = validate(t);
        if (!violations.empty())
            throw InvalidTrajectory("trajectory " + t.query_id + " fails validation: "
                                    + std::string(to_string(violations.front().kind)));
    }

} // namespace

L1Report grade_l1(const Query& q, const Trajectory& t, JudgeBackend& backend)
{
    require_valid(t);
    auto semantic = backend.judge_l1(q, t);
    L1Report r;
    r.relevance = std::move(semantic.relevance);
    r.ui_trigger = std::move(semantic.ui_trigger);
    r.text_relevance = std::move(semantic.text_relevance);
    r.description_faithfulness = std::move(semantic.description_faithfulness);
    r.ui_format = check_ui_format(t.response);
    r.ui_completeness = check_ui_completeness(t.response);
    return r;
}

L2Report grade_l2(const Query& q, const Trajectory& t, JudgeBackend& backend)
{
    require_valid(t);
    return L2Report { backend.judge_l2(q, t) };
}

GradeReport grade(const Query& q, const Trajectory& t, JudgeBackend& backend)
{
    GradeReport report;
    report.l1 = grade_l1(q, t, backend);
    if (gate_l1(report.l1) == 1)
        report.l2 = grade_l2(q, t, backend);
    return report;
}

namespace
{

    struct MeanStd
    {
        double mean = 0.0;
        double std = 0.0;
    };

    MeanStd sample_mean_std(const std::vector<double>& xs)
    {
        MeanStd out;
        if (xs.empty())
            return out;
        double sum = 0.0;
        for (double x: xs)
            sum += x;
        out.mean = sum / static_cast<double>(xs.size());
        if (xs.size() < 2)
            return out;
        double ss = 0.0;
        for (double x: xs)
            ss += (x - out.mean) * (x - out.mean);
        out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        return out;
    }

} // namespace

RunMetrics aggregate_runs(std::span<const GradeReport> reports, std::size_t k)
{
    if (k == 0)
        throw EmptyInput("aggregate_runs: k must be at least 1");
    if (reports.size() != k)
        throw LengthMismatch("aggregate_runs: expected " + std::to_string(k) + " reports, got "
                             + std::to_string(reports.size()));

    RunMetrics m;
    m.n_runs = k;
    std::size_t passes = 0;
    std::vector<double> l2;
    for (const auto& r: reports)
    {
        passes += static_cast<std::size_t>(gate_l1(r.l1));
        if (r.l2)
            l2.push_back(r.l2->score());
    }
    m.avg_at_k = static_cast<double>(passes) / static_cast<double>(k);
    m.pass_hat_k = passes == k ? 1.0 : 0.0;
    auto const ms = sample_mean_std(l2);
    m.l2_avg = ms.mean;
    m.l2_std = ms.std;
    m.l2_count = l2.size();
    return m;
}

CorpusMetrics aggregate_corpus(const std::vector<std::vector<GradeReport>>& reports)
{
    CorpusMetrics c;
    if (reports.empty())
        throw EmptyInput("aggregate_corpus: no queries");
    auto const k = reports.front().size();
    c.n_queries = reports.size();
    c.n_runs = k;

    std::vector<double> runSum(k, 0.0);
    std::vector<std::size_t> runCount(k, 0);
    std::size_t pc = 0;
    std::size_t tr = 0;
    std::size_t df = 0;
    for (const auto& perQuery: reports)
    {
        auto const m = aggregate_runs(perQuery, k);
        c.avg_at_k += m.avg_at_k;
        c.pass_hat_k += m.pass_hat_k;
        for (std::size_t run = 0; run < k; ++run)
        {
            const auto& r = perQuery[run];
            pc += r.l1.product_correctness() ? 1 : 0;
            tr += r.l1.text_relevance.pass ? 1 : 0;
            df += r.l1.description_faithfulness.pass ? 1 : 0;
            if (r.l2)
            {
                runSum[run] += r.l2->score();
                ++runCount[run];
            }
        }
    }
    auto const nq = static_cast<double>(c.n_queries);
    auto const total = nq * static_cast<double>(k);
    c.avg_at_k /= nq;
    c.pass_hat_k /= nq;
    c.product_correctness = static_cast<double>(pc) / total;
    c.text_relevance = static_cast<double>(tr) / total;
    c.description_faithfulness = static_cast<double>(df) / total;

    std::vector<double> runMeans;
    for (std::size_t run = 0; run < k; ++run)
        if (runCount[run] > 0)
            runMeans.push_back(runSum[run] / static_cast<double>(runCount[run]));
    auto const ms = sample_mean_std(runMeans);
    c.l2_avg = ms.mean;
    c.l2_std = ms.std;
    return c;
}

// -- JSON --

void to_json(json& j, const Verdict& v)
{
    j = json { { "is_pass", v.pass }, { "reason", v.reason } };
}

void to_json(json& j, const L1Report& r)
{
    j = json {
        { "product_correctness",
          { { "is_pass", r.product_correctness() },
            { "relevance", r.relevance },
            { "ui_format", r.ui_format },
            { "ui_trigger", r.ui_trigger },
            { "ui_completeness", r.ui_completeness } } },
        { "text_relevance", r.text_relevance },
        { "description_faithfulness", r.description_faithfulness },
        { "gate", gate_l1(r) },
    };
}

void to_json(json& j, const L2Report& r)
{
    json items = json::object();
    for (std::size_t i = 0; i < kRubricItemCount; ++i)
        items[std::string(kRubricItems[i])] = r.items[i];
    j = json { { "items", items }, { "score", r.score() } };
}

void to_json(json& j, const GradeReport& r)
{
    j = json { { "l1", r.l1 }, { "l2", r.l2 ? json(*r.l2) : json(nullptr) } };
}

void to_json(json& j, const RunMetrics& m)
{
    j = json { { "n_runs", m.n_runs },   { "avg_at_k", m.avg_at_k }, { "pass_hat_k", m.pass_hat_k },
               { "l2_avg", m.l2_avg },   { "l2_std", m.l2_std },     { "l2_count", m.l2_count } };
}

void to_json(json& j, const CorpusMetrics& m)
{
    j = json { { "n_queries", m.n_queries },
               { "n_runs", m.n_runs },
               { "avg_at_k", m.avg_at_k },
               { "pass_hat_k", m.pass_hat_k },
               { "l2_avg", m.l2_avg },
               { "l2_std", m.l2_std },
               { "product_correctness", m.product_correctness },
               { "text_relevance", m.text_relevance },
               { "description_faithfulness", m.description_faithfulness } };
}

} // namespace shoprl
