// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <shoprl/grading.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace shoprl
{

struct RemoteJudgeConfig
{
    /// e.g. "http://127.0.0.1:8080/judge"; stages are POSTed to <base>/l1, /l2, /tool_score.
    std::string base_url;
    std::string api_key;
    std::size_t max_retries = 3;
    std::chrono::milliseconds initial_backoff { 250 };
    std::chrono::milliseconds timeout { 60000 };
    /// Upper bound on concurrent in-flight requests.
    std::size_t max_in_flight = 4;
    /// Optional prompt templates with {query}, {trajectory}, {response}
    /// placeholders; sent as the request's "prompt" field when non-empty.
    std::string l1_prompt_template;
    std::string l2_prompt_template;
};

/// Applies SHOPRL_JUDGE_URL and SHOPRL_JUDGE_API_KEY when set.
RemoteJudgeConfig apply_judge_env_overrides(RemoteJudgeConfig cfg);

// -- wire protocol --

/// Request body: {"stage", "query_id", "query", "trajectory", "response"[, "prompt"]}.
nlohmann::json make_judge_request(const Query& q, const Trajectory& t, std::string_view stage,
                                  std::string_view prompt_template = {});

/// Parses the three-key L1 reply
/// {description_faithfulness, ui_completeness, text_relevance: {is_pass, reason}}.
/// The judge's card verdict (completeness and timing) supplies ui_trigger; an
/// optional "product_relevance" entry supplies relevance, otherwise the card
/// verdict does. Throws BackendMalformedOutput on any schema violation,
/// including non-boolean is_pass.
SemanticL1 parse_l1_reply(const nlohmann::json& reply);
nlohmann::json l1_reply_to_json(const SemanticL1& verdicts);

/// Parses the L2 reply: an array of exactly seven {is_pass, reason} objects
/// in rubric order.
std::array<Verdict, kRubricItemCount> parse_l2_reply(const nlohmann::json& reply);
nlohmann::json l2_reply_to_json(const std::array<Verdict, kRubricItemCount>& items);

/// {"score": number in [0,1]}.
double parse_tool_score_reply(const nlohmann::json& reply);

/// Result of one transport attempt. A missing body means a transport-level
/// failure (connection refused, timeout).
struct TransportResponse
{
    int status = 0;
    std::string body;
};

using JudgeTransport =
    std::function<std::optional<TransportResponse>(const std::string& path, const std::string& body)>;

/// HTTP transport over cpp-httplib.
JudgeTransport make_http_transport(const RemoteJudgeConfig& cfg);

/// LLM-judge backend speaking the JSON protocol above. Transport failures
/// and 5xx replies are retried with exponential backoff; after max_retries
/// retries the call throws BackendUnavailable.
class RemoteJudge: public JudgeBackend
{
  public:
    explicit RemoteJudge(RemoteJudgeConfig cfg);
    RemoteJudge(RemoteJudgeConfig cfg, JudgeTransport transport);
    ~RemoteJudge() override;

    [[nodiscard]] JudgeCapabilities capabilities() const override { return { true, true, true }; }

  protected:
    SemanticL1 do_judge_l1(const Query& q, const Trajectory& t) override;
    std::array<Verdict, kRubricItemCount> do_judge_l2(const Query& q, const Trajectory& t) override;
    double do_tool_score(const Query& q, const Trajectory& t) override;

  private:
    nlohmann::json post(const std::string& path, const nlohmann::json& request);

    struct Limiter;

    RemoteJudgeConfig _cfg;
    JudgeTransport _transport;
    std::unique_ptr<Limiter> _limiter;
};

} // namespace shoprl
