// SPDX-License-Identifier: Apache-2.0
#include <shoprl/errors.hpp>
#include <shoprl/remote_judge.hpp>

#include <httplib.h>

#include <cstdlib>
#include <semaphore>
#include <thread>

namespace shoprl
{

using nlohmann::json;

RemoteJudgeConfig apply_judge_env_overrides(RemoteJudgeConfig cfg)
{
    if (const char* url = std::getenv("SHOPRL_JUDGE_URL"); url && *url)
        cfg.base_url = url;
    if (const char* key = std::getenv("SHOPRL_JUDGE_API_KEY"); key && *key)
        cfg.api_key = key;
    return cfg;
}

namespace
{

    std::string substitute(std::string text, std::string_view placeholder, const std::string& value)
    {
        std::size_t pos = 0;
        while ((pos = text.find(placeholder, pos)) != std::string::npos)
        {
            text.replace(pos, placeholder.size(), value);
            pos += value.size();
        }
        return text;
    }

    Verdict parse_verdict(const json& j, std::string_view where)
    {
        if (!j.is_object())
            throw BackendMalformedOutput(std::string(where) + ": expected an object");
        auto const pass = j.find("is_pass");
        if (pass == j.end() || !pass->is_boolean())
            throw BackendMalformedOutput(std::string(where) + ": is_pass must be a boolean");
        auto const reason = j.find("reason");
        if (reason == j.end() || !reason->is_string())
            throw BackendMalformedOutput(std::string(where) + ": reason must be a string");
        return { pass->get<bool>(), reason->get<std::string>() };
    }

    json verdict_json(const Verdict& v)
    {
        return json { { "is_pass", v.pass }, { "reason", v.reason } };
    }

} // namespace

json make_judge_request(const Query& q, const Trajectory& t, std::string_view stage, std::string_view prompt_template)
{
    json request { { "stage", std::string(stage) },
                   { "query_id", q.id },
                   { "query", q.text },
                   { "trajectory", t.steps },
                   { "response", t.response } };
    if (!prompt_template.empty())
    {
        auto prompt = substitute(std::string(prompt_template), "{query}", q.text);
        prompt = substitute(std::move(prompt), "{trajectory}", json(t.steps).dump());
        prompt = substitute(std::move(prompt), "{response}", json(t.response).dump());
        request["prompt"] = std::move(prompt);
    }
    return request;
}

SemanticL1 parse_l1_reply(const json& reply)
{
    if (!reply.is_object())
        throw BackendMalformedOutput("L1 reply must be a JSON object");
    auto field = [&](const char* key) {
        auto it = reply.find(key);
        if (it == reply.end())
            throw BackendMalformedOutput(std::string("L1 reply lacks \"") + key + "\"");
        return parse_verdict(*it, key);
    };

    SemanticL1 out;
    out.description_faithfulness = field("description_faithfulness");
    out.ui_trigger = field("ui_completeness");
    out.text_relevance = field("text_relevance");
    if (reply.contains("product_relevance"))
        out.relevance = parse_verdict(reply.at("product_relevance"), "product_relevance");
    else
        out.relevance = out.ui_trigger;
    return out;
}

json l1_reply_to_json(const SemanticL1& v)
{
    json j { { "description_faithfulness", verdict_json(v.description_faithfulness) },
             { "ui_completeness", verdict_json(v.ui_trigger) },
             { "text_relevance", verdict_json(v.text_relevance) } };
    if (v.relevance != v.ui_trigger)
        j["product_relevance"] = verdict_json(v.relevance);
    return j;
}

std::array<Verdict, kRubricItemCount> parse_l2_reply(const json& reply)
{
    if (!reply.is_array())
        throw BackendMalformedOutput("L2 reply must be a JSON array");
    if (reply.size() != kRubricItemCount)
        throw BackendMalformedOutput("L2 reply has " + std::to_string(reply.size()) + " items, rubric has "
                                     + std::to_string(kRubricItemCount));
    std::array<Verdict, kRubricItemCount> out;
    for (std::size_t i = 0; i < kRubricItemCount; ++i)
        out[i] = parse_verdict(reply[i], kRubricItems[i]);
    return out;
}

json l2_reply_to_json(const std::array<Verdict, kRubricItemCount>& items)
{
    json j = json::array();
    for (const auto& v: items)
        j.push_back(verdict_json(v));
    return j;
}

double parse_tool_score_reply(const json& reply)
{
    if (!reply.is_object() || !reply.contains("score") || !reply.at("score").is_number())
        throw BackendMalformedOutput("tool score reply must be {\"score\": number}");
    auto const s = reply.at("score").get<double>();
    if (!(s >= 0.0 && s <= 1.0))
        throw BackendMalformedOutput("tool score outside [0,1]");
    return s;
}

JudgeTransport make_http_transport(const RemoteJudgeConfig& cfg)
{
    if (cfg.base_url.empty())
        throw ConfigError("remote judge needs a base URL (set SHOPRL_JUDGE_URL)");
    // Split "scheme://host:port/prefix" into the client origin and path prefix.
    auto const schemeEnd = cfg.base_url.find("://");
    auto const pathStart =
        cfg.base_url.find('/', schemeEnd == std::string::npos ? 0 : schemeEnd + 3);
    auto const origin = cfg.base_url.substr(0, pathStart);
    auto const prefix = pathStart == std::string::npos ? std::string {} : cfg.base_url.substr(pathStart);
    auto const apiKey = cfg.api_key;
    auto const timeout = cfg.timeout;

    return [origin, prefix, apiKey, timeout](const std::string& path,
                                             const std::string& body) -> std::optional<TransportResponse> {
        httplib::Client client(origin);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count() + 1);
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count() + 1);
        httplib::Headers headers;
        if (!apiKey.empty())
            headers.emplace("Authorization", "Bearer " + apiKey);
        auto res = client.Post(prefix + path, headers, body, "application/json");
        if (!res)
            return std::nullopt;
        return TransportResponse { res->status, res->body };
    };
}

struct RemoteJudge::Limiter
{
    explicit Limiter(std::size_t n): slots(static_cast<std::ptrdiff_t>(n == 0 ? 1 : n)) {}

    std::counting_semaphore<> slots;
};

RemoteJudge::RemoteJudge(RemoteJudgeConfig cfg): RemoteJudge(cfg, make_http_transport(cfg))
{
}

RemoteJudge::RemoteJudge(RemoteJudgeConfig cfg, JudgeTransport transport):
    _cfg(std::move(cfg)), _transport(std::move(transport)), _limiter(std::make_unique<Limiter>(_cfg.max_in_flight))
{
    if (!_transport)
        throw ConfigError("remote judge needs a transport");
}

RemoteJudge::~RemoteJudge() = default;

json RemoteJudge::post(const std::string& path, const json& request)
{
    auto const body = request.dump();
    std::string lastError = "no attempt made";
    for (std::size_t attempt = 0; attempt <= _cfg.max_retries; ++attempt)
    {
        if (attempt > 0)
            std::this_thread::sleep_for(_cfg.initial_backoff * (1LL << (attempt - 1)));

        std::optional<TransportResponse> res;
        {
            _limiter->slots.acquire();
            struct Release
            {
                std::counting_semaphore<>& s;
                ~Release() { s.release(); }
            } release { _limiter->slots };
            res = _transport(path, body);
        }

        if (!res)
        {
            lastError = "transport failure";
            continue;
        }
        if (res->status >= 500 || res->status == 429)
        {
            lastError = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300)
            throw BackendUnavailable("judge " + path + " rejected the request: HTTP " + std::to_string(res->status));

        auto parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded())
            throw BackendMalformedOutput("judge " + path + " replied with invalid JSON");
        return parsed;
    }
    throw BackendUnavailable("judge " + path + " unavailable after " + std::to_string(_cfg.max_retries)
                             + " retries: " + lastError);
}

SemanticL1 RemoteJudge::do_judge_l1(const Query& q, const Trajectory& t)
{
    return parse_l1_reply(post("/l1", make_judge_request(q, t, "l1", _cfg.l1_prompt_template)));
}

std::array<Verdict, kRubricItemCount> RemoteJudge::do_judge_l2(const Query& q, const Trajectory& t)
{
    return parse_l2_reply(post("/l2", make_judge_request(q, t, "l2", _cfg.l2_prompt_template)));
}

double RemoteJudge::do_tool_score(const Query& q, const Trajectory& t)
{
    return parse_tool_score_reply(post("/tool_score", make_judge_request(q, t, "tool_score")));
}

} // namespace shoprl
