// SPDX-License-Identifier: Apache-2.0
#include <shoprl/errors.hpp>
#include <shoprl/oracle_judge.hpp>
#include <shoprl/parallel.hpp>
#include <shoprl/rollout.hpp>
#include <shoprl/trainer.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace shoprl
{

using nlohmann::json;

std::string_view to_string(Algo a)
{
    return a == Algo::Dcpo ? "dcpo" : "grpo";
}

Algo algo_from_string(std::string_view name)
{
    if (name == "dcpo")
        return Algo::Dcpo;
    if (name == "grpo")
        return Algo::Grpo;
    throw ConfigError("unknown algo: " + std::string(name));
}

Environment make_environment(const EnvConfig& cfg)
{
    Environment env;
    env.config = cfg;
    env.catalog = generate_catalog(cfg.seed, cfg.catalog_size);
    env.queries = generate_queries(env.catalog, cfg.seed, cfg.queries_per_category);
    return env;
}

DcpoConfig TrainConfig::default_dcpo()
{
    DcpoConfig d;
    d.K = 12;
    d.kl_estimator = KlEstimator::K2;
    return d;
}

void TrainConfig::validate() const
{
    hrm.validate();
    auto d = dcpo;
    if (algo == Algo::Grpo)
        d.selection_enabled = false;
    d.validate();
    if (steps == 0 && epochs == 0)
        throw ConfigError("steps or epochs must be positive");
    if (batch_size == 0)
        throw ConfigError("batch_size must be positive");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning_rate must be finite and >= 0");
    if (updates_per_batch == 0)
        throw ConfigError("updates_per_batch must be positive");
    if (eval_runs == 0)
        throw ConfigError("eval_runs must be at least 1");
    if (threads == 0)
        throw ConfigError("threads must be positive");
    if (env.catalog_size < kProductCategoryCount)
        throw ConfigError("env.catalog_size must be at least 10");
    if (env.queries_per_category == 0)
        throw ConfigError("env.queries_per_category must be positive");
}

std::size_t TrainConfig::total_steps(std::size_t n_queries) const
{
    if (epochs == 0)
        return steps;
    return epochs * ((n_queries + batch_size - 1) / batch_size);
}

namespace
{

    struct Sample
    {
        std::shared_ptr<const Trajectory> trajectory;
        GradeReport report;
        RewardBreakdown reward;
        std::size_t length = 0;
        std::size_t tool_calls = 0;
    };

    Sample score_rollout(const ToyPolicy& policy, const Query& q, const Catalog& catalog, JudgeBackend& judge,
                         const HrmConfig& hrm, Rng rng)
    {
        auto t = std::make_shared<Trajectory>(rollout(policy, q, catalog, rng));
        Sample s;
        s.report = grade(q, *t, judge);
        auto const toolScore = judge.tool_score(q, *t);
        s.reward = total_reward(*t, s.report, toolScore, hrm);
        s.length = reasoning_length(*t);
        s.tool_calls = tool_call_count(*t);
        s.trajectory = std::move(t);
        return s;
    }

    double sample_std(const std::vector<double>& xs, double mean)
    {
        if (xs.size() < 2)
            return 0.0;
        double ss = 0.0;
        for (double x: xs)
            ss += (x - mean) * (x - mean);
        return std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }

    CurvePoint summarize(std::size_t step, const std::vector<std::vector<Sample>>& batch)
    {
        CurvePoint p;
        p.step = step;
        std::size_t n = 0;
        std::size_t allPass = 0;
        std::vector<double> l2;
        for (const auto& group: batch)
        {
            bool every = true;
            for (const auto& s: group)
            {
                ++n;
                p.mean_reward += s.reward.total;
                p.mean_reasoning_length += static_cast<double>(s.length);
                p.mean_tool_calls += static_cast<double>(s.tool_calls);
                auto const pass = gate_l1(s.report.l1) == 1;
                p.l1_avg_at_k += pass ? 1.0 : 0.0;
                every = every && pass;
                if (s.report.l2)
                    l2.push_back(s.report.l2->score());
            }
            allPass += every ? 1 : 0;
        }
        auto const dn = static_cast<double>(n);
        p.mean_reward /= dn;
        p.mean_reasoning_length /= dn;
        p.mean_tool_calls /= dn;
        p.l1_avg_at_k /= dn;
        p.pass_hat_k = static_cast<double>(allPass) / static_cast<double>(batch.size());
        if (!l2.empty())
        {
            p.l2_avg = std::accumulate(l2.begin(), l2.end(), 0.0) / static_cast<double>(l2.size());
            p.l2_std = sample_std(l2, p.l2_avg);
        }
        return p;
    }

    bool all_finite(std::span<const double> xs)
    {
        return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
    }

} // namespace

TrainResult train(const TrainConfig& cfg, const Environment& env, JudgeBackend& judge,
                  const TrainCallbacks& callbacks, std::optional<ToyPolicy> initial)
{
    cfg.validate();
    if (env.queries.empty())
        throw EmptyInput("train: environment has no queries");

    auto dcpo = cfg.dcpo;
    if (cfg.algo == Algo::Grpo)
        dcpo.selection_enabled = false;

    auto const reference = initial.value_or(ToyPolicy::warm_start());
    auto policy = reference;
    auto behaviour = reference;

    auto const nQueries = env.queries.size();
    auto const totalSteps = cfg.total_steps(nQueries);
    auto const stepsPerEpoch = (nQueries + cfg.batch_size - 1) / cfg.batch_size;
    auto const orderSeed = mix64(cfg.seed ^ 0x6f72646572ULL);
    Rng orderRng(orderSeed);
    std::vector<std::size_t> order(nQueries);
    std::iota(order.begin(), order.end(), std::size_t { 0 });
    std::size_t cursor = nQueries;

    TrainResult result;
    auto checkpoint = [&](std::size_t completed) {
        Checkpoint c;
        c.step = completed;
        c.policy = policy;
        c.reference = reference;
        c.rng_seed = orderSeed;
        c.rng_state = orderRng.state();
        c.config = cfg;
        return c;
    };

    for (std::size_t step = 0; step < totalSteps; ++step)
    {
        if (cfg.old_policy_refresh == OldPolicyRefresh::Batch || step % stepsPerEpoch == 0)
            behaviour = policy;

        std::vector<std::size_t> batch;
        batch.reserve(cfg.batch_size);
        while (batch.size() < cfg.batch_size)
        {
            if (cursor == nQueries)
            {
                for (std::size_t i = nQueries; i > 1; --i)
                    std::swap(order[i - 1], order[orderRng.below(i)]);
                cursor = 0;
            }
            batch.push_back(order[cursor++]);
        }

        auto const K = dcpo.K;
        std::vector<std::vector<Sample>> samples(batch.size(), std::vector<Sample>(K));
        try
        {
            parallel_for(batch.size() * K, cfg.threads, [&](std::size_t task) {
                auto const b = task / K;
                auto const k = task % K;
                samples[b][k] = score_rollout(behaviour, env.queries[batch[b]], env.catalog, judge, cfg.hrm,
                                              Rng::derive(cfg.seed, { 1, step, b, k }));
            });
        }
        catch (const BackendUnavailable&)
        {
            if (callbacks.on_abort)
                callbacks.on_abort(checkpoint(step));
            throw;
        }

        std::vector<SelectionSet> sets;
        std::vector<json> audit;
        sets.reserve(batch.size());
        for (std::size_t b = 0; b < batch.size(); ++b)
        {
            std::vector<ScoredTrajectory> scored;
            scored.reserve(K);
            for (const auto& s: samples[b])
                scored.push_back({ s.trajectory, s.reward, s.length });
            auto selRng = Rng::derive(cfg.seed, { 2, step, b });
            sets.push_back(build_selection(std::move(scored), dcpo, selRng));
            auto record = audit_record(sets.back(), env.queries[batch[b]].id);
            record["step"] = step;
            audit.push_back(std::move(record));
        }

        for (std::size_t u = 0; u < cfg.updates_per_batch; ++u)
        {
            std::vector<double> grad(kToyParamCount, 0.0);
            double maxSqNorm = 0.0;
            for (std::size_t b = 0; b < sets.size(); ++b)
            {
                const auto& set = sets[b];
                std::vector<double> lpNew;
                std::vector<double> lpOld;
                std::vector<double> lpRef;
                std::vector<std::vector<double>> grads;
                for (auto idx: set.selected)
                {
                    const auto& t = *set.all[idx].trajectory;
                    lpNew.push_back(policy.log_prob(t));
                    lpOld.push_back(t.log_prob_old);
                    lpRef.push_back(reference.log_prob(t));
                    grads.push_back(policy.grad_log_prob(t));
                }
                auto const terms = objective(lpNew, lpOld, lpRef, set.advantages, dcpo);
                auto const w = objective_logp_weights(lpNew, lpOld, lpRef, set.advantages, dcpo);
                if (!std::isfinite(terms.value) || !all_finite(w))
                    throw NonFiniteLoss("non-finite objective at step " + std::to_string(step) + ": "
                                        + audit[b].dump());
                for (std::size_t i = 0; i < grads.size(); ++i)
                {
                    double sq = 0.0;
                    for (std::size_t p = 0; p < kToyParamCount; ++p)
                    {
                        grad[p] += w[i] * grads[i][p] / static_cast<double>(sets.size());
                        sq += grads[i][p] * grads[i][p];
                    }
                    maxSqNorm = std::max(maxSqNorm, sq);
                }
            }
            if (!all_finite(grad))
                throw NonFiniteLoss("non-finite gradient at step " + std::to_string(step) + ": "
                                    + audit.front().dump());

            // Keep the KL pull a contraction: lr * lambda * curvature <= 1.
            auto lr = cfg.learning_rate;
            if (dcpo.lambda_kl > 0.0 && maxSqNorm > 0.0)
                lr = std::min(lr, 1.0 / (dcpo.lambda_kl * maxSqNorm));
            auto params = policy.params();
            for (std::size_t p = 0; p < kToyParamCount; ++p)
                params[p] += lr * grad[p];
        }

        auto const point = summarize(step, samples);
        result.curves.push_back(point);
        if (callbacks.on_audit)
            for (const auto& record: audit)
                callbacks.on_audit(record);
        if (callbacks.on_step)
            callbacks.on_step(point);
    }

    result.checkpoint = checkpoint(totalSteps);
    return result;
}

EvalReport evaluate(const ToyPolicy& policy, std::span<const Query> queries, const Catalog& catalog,
                    JudgeBackend& judge, std::size_t k_runs, std::uint64_t seed, std::size_t threads)
{
    if (k_runs == 0)
        throw EmptyInput("evaluate: k_runs must be at least 1");
    if (queries.empty())
        throw EmptyInput("evaluate: no queries");

    struct Run
    {
        GradeReport report;
        std::size_t tool_calls = 0;
        std::size_t length = 0;
    };
    std::vector<std::vector<Run>> runs(queries.size(), std::vector<Run>(k_runs));
    parallel_for(queries.size() * k_runs, threads, [&](std::size_t task) {
        auto const qi = task / k_runs;
        auto const r = task % k_runs;
        auto rng = Rng::derive(seed, { 3, r, qi });
        auto const t = rollout(policy, queries[qi], catalog, rng);
        runs[qi][r] = { grade(queries[qi], t, judge), tool_call_count(t), reasoning_length(t) };
    });

    EvalReport out;
    out.runs = k_runs;
    std::vector<std::vector<GradeReport>> all;
    std::map<QueryCategory, std::vector<std::vector<GradeReport>>> grouped;
    double calls = 0.0;
    double length = 0.0;
    for (std::size_t qi = 0; qi < queries.size(); ++qi)
    {
        std::vector<GradeReport> reports;
        for (const auto& run: runs[qi])
        {
            reports.push_back(run.report);
            calls += static_cast<double>(run.tool_calls);
            length += static_cast<double>(run.length);
        }
        grouped[queries[qi].category].push_back(reports);
        all.push_back(std::move(reports));
    }
    out.overall = aggregate_corpus(all);
    for (const auto& [cat, reports]: grouped)
        out.by_category[cat] = aggregate_corpus(reports);
    auto const n = static_cast<double>(queries.size() * k_runs);
    out.mean_tool_calls = calls / n;
    out.mean_reasoning_length = length / n;
    return out;
}

double trend_slope(std::span<const double> ys)
{
    auto const n = ys.size();
    if (n < 2)
        return 0.0;
    auto const xMean = static_cast<double>(n - 1) / 2.0;
    double yMean = 0.0;
    for (double y: ys)
        yMean += y;
    yMean /= static_cast<double>(n);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        auto const dx = static_cast<double>(i) - xMean;
        sxy += dx * (ys[i] - yMean);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

double window_mean(std::span<const CurvePoint> curves, double CurvePoint::*metric, std::size_t from, std::size_t to)
{
    to = std::min(to, curves.size());
    if (from >= to)
        throw EmptyInput("window_mean: empty window");
    double sum = 0.0;
    for (std::size_t i = from; i < to; ++i)
        sum += curves[i].*metric;
    return sum / static_cast<double>(to - from);
}

namespace
{

    struct NamedMetric
    {
        const char* name;
        double CurvePoint::*field;
    };

    constexpr std::array<NamedMetric, 7> kCurveMetrics { {
        { "mean_reward", &CurvePoint::mean_reward },
        { "mean_reasoning_length", &CurvePoint::mean_reasoning_length },
        { "l1_avg_at_k", &CurvePoint::l1_avg_at_k },
        { "pass_hat_k", &CurvePoint::pass_hat_k },
        { "l2_avg", &CurvePoint::l2_avg },
        { "l2_std", &CurvePoint::l2_std },
        { "mean_tool_calls", &CurvePoint::mean_tool_calls },
    } };

} // namespace

std::vector<MetricDelta> compare_runs(std::span<const CurvePoint> a, std::span<const CurvePoint> b)
{
    if (a.size() != b.size())
        throw LengthMismatch("runs differ in step count: " + std::to_string(a.size()) + " vs "
                             + std::to_string(b.size()));
    if (a.empty())
        throw EmptyInput("compare_runs: no steps");
    auto const n = a.size();
    auto const tail = std::max<std::size_t>(1, n / 10);

    std::vector<MetricDelta> out;
    for (const auto& m: kCurveMetrics)
    {
        std::vector<double> ya;
        std::vector<double> yb;
        for (std::size_t i = 0; i < n; ++i)
        {
            ya.push_back(a[i].*m.field);
            yb.push_back(b[i].*m.field);
        }
        MetricDelta d;
        d.metric = m.name;
        d.a_end = window_mean(a, m.field, n - tail, n);
        d.b_end = window_mean(b, m.field, n - tail, n);
        d.end_delta = d.a_end - d.b_end;
        d.a_trend = trend_slope(ya);
        d.b_trend = trend_slope(yb);
        d.trend_delta = d.a_trend - d.b_trend;
        out.push_back(std::move(d));
    }
    return out;
}

std::unique_ptr<JudgeBackend> make_judge(const TrainConfig& cfg, const Environment& env)
{
    if (cfg.judge == JudgeKind::Oracle)
        return std::make_unique<OracleJudge>(env.catalog);
    return std::make_unique<RemoteJudge>(apply_judge_env_overrides(cfg.remote));
}

// -- JSON --

void to_json(json& j, const EnvConfig& c)
{
    j = json { { "seed", c.seed }, { "catalog_size", c.catalog_size }, { "queries_per_category", c.queries_per_category } };
}

void from_json(const json& j, EnvConfig& c)
{
    EnvConfig const d;
    for (const auto& [key, _]: j.items())
        if (key != "seed" && key != "catalog_size" && key != "queries_per_category")
            throw ConfigError("unknown env key: " + key);
    c.seed = j.value("seed", d.seed);
    c.catalog_size = j.value("catalog_size", d.catalog_size);
    c.queries_per_category = j.value("queries_per_category", d.queries_per_category);
}

namespace
{

    json judge_json(const TrainConfig& c)
    {
        return json { { "backend", c.judge == JudgeKind::Oracle ? "oracle" : "remote" },
                      { "base_url", c.remote.base_url },
                      { "max_retries", c.remote.max_retries },
                      { "initial_backoff_ms", c.remote.initial_backoff.count() },
                      { "timeout_ms", c.remote.timeout.count() },
                      { "max_in_flight", c.remote.max_in_flight } };
    }

    void judge_from_json(const json& j, TrainConfig& c)
    {
        auto const backend = j.value("backend", std::string("oracle"));
        if (backend == "oracle")
            c.judge = JudgeKind::Oracle;
        else if (backend == "remote")
            c.judge = JudgeKind::Remote;
        else
            throw ConfigError("unknown judge backend: " + backend);
        RemoteJudgeConfig const d;
        c.remote.base_url = j.value("base_url", d.base_url);
        c.remote.api_key = j.value("api_key", d.api_key);
        c.remote.max_retries = j.value("max_retries", d.max_retries);
        c.remote.initial_backoff = std::chrono::milliseconds(j.value("initial_backoff_ms", d.initial_backoff.count()));
        c.remote.timeout = std::chrono::milliseconds(j.value("timeout_ms", d.timeout.count()));
        c.remote.max_in_flight = j.value("max_in_flight", d.max_in_flight);
        c.remote.l1_prompt_template = j.value("l1_prompt_template", d.l1_prompt_template);
        c.remote.l2_prompt_template = j.value("l2_prompt_template", d.l2_prompt_template);
    }

} // namespace

void to_json(json& j, const TrainConfig& c)
{
    j = json { { "algo", std::string(to_string(c.algo)) },
               { "hrm", c.hrm },
               { "dcpo", c.dcpo },
               { "steps", c.steps },
               { "epochs", c.epochs },
               { "batch_size", c.batch_size },
               { "learning_rate", c.learning_rate },
               { "updates_per_batch", c.updates_per_batch },
               { "old_policy_refresh", c.old_policy_refresh == OldPolicyRefresh::Batch ? "batch" : "epoch" },
               { "eval_runs", c.eval_runs },
               { "seed", c.seed },
               { "threads", c.threads },
               { "env", c.env },
               { "judge", judge_json(c) } };
}

void from_json(const json& j, TrainConfig& c)
{
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known { "algo",   "hrm",         "dcpo",       "steps",
                                               "epochs", "batch_size",  "learning_rate", "updates_per_batch",
                                               "old_policy_refresh", "eval_runs", "seed", "threads",
                                               "env",    "judge" };
    for (const auto& [key, _]: j.items())
        if (!known.contains(key))
            throw ConfigError("unknown config key: " + key);

    TrainConfig const d;
    try
    {
        c.algo = algo_from_string(j.value("algo", std::string("dcpo")));
        c.hrm = j.contains("hrm") ? j.at("hrm").get<HrmConfig>() : d.hrm;
        c.dcpo = d.dcpo;
        if (j.contains("dcpo"))
        {
            // Fields absent from the file keep the trainer defaults.
            json merged = d.dcpo;
            merged.update(j.at("dcpo"));
            c.dcpo = merged.get<DcpoConfig>();
        }
        c.steps = j.value("steps", d.steps);
        c.epochs = j.value("epochs", d.epochs);
        c.batch_size = j.value("batch_size", d.batch_size);
        c.learning_rate = j.value("learning_rate", d.learning_rate);
        c.updates_per_batch = j.value("updates_per_batch", d.updates_per_batch);
        auto const refresh = j.value("old_policy_refresh", std::string("batch"));
        if (refresh == "batch")
            c.old_policy_refresh = OldPolicyRefresh::Batch;
        else if (refresh == "epoch")
            c.old_policy_refresh = OldPolicyRefresh::Epoch;
        else
            throw ConfigError("unknown old_policy_refresh: " + refresh);
        c.eval_runs = j.value("eval_runs", d.eval_runs);
        c.seed = j.value("seed", d.seed);
        c.threads = j.value("threads", d.threads);
        c.env = j.contains("env") ? j.at("env").get<EnvConfig>() : d.env;
        c.judge = d.judge;
        c.remote = d.remote;
        if (j.contains("judge"))
            judge_from_json(j.at("judge"), c);
    }
    catch (const json::exception& e)
    {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    c.validate();
}

void to_json(json& j, const CurvePoint& p)
{
    j = json { { "step", p.step },
               { "mean_reward", p.mean_reward },
               { "mean_reasoning_length", p.mean_reasoning_length },
               { "l1_avg_at_k", p.l1_avg_at_k },
               { "pass_hat_k", p.pass_hat_k },
               { "l2_avg", p.l2_avg },
               { "l2_std", p.l2_std },
               { "mean_tool_calls", p.mean_tool_calls } };
}

void to_json(json& j, const Checkpoint& c)
{
    j = json { { "version", c.version },
               { "step", c.step },
               { "policy", c.policy },
               { "reference", c.reference },
               { "rng", { { "seed", c.rng_seed }, { "state", c.rng_state } } },
               { "config", c.config } };
}

void from_json(const json& j, Checkpoint& c)
{
    try
    {
        c.version = j.at("version").get<int>();
        if (c.version != Checkpoint::kVersion)
            throw SchemaMismatch("unsupported checkpoint version " + std::to_string(c.version));
        c.step = j.at("step").get<std::size_t>();
        c.policy = j.at("policy").get<ToyPolicy>();
        c.reference = j.at("reference").get<ToyPolicy>();
        c.rng_seed = j.at("rng").at("seed").get<std::uint64_t>();
        c.rng_state = j.at("rng").at("state").get<std::string>();
        c.config = j.at("config").get<TrainConfig>();
    }
    catch (const json::exception& e)
    {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
}

void to_json(json& j, const EvalReport& r)
{
    json cats = json::object();
    for (const auto& [cat, m]: r.by_category)
        cats[std::string(to_string(cat))] = m;
    j = json { { "runs", r.runs },
               { "overall", r.overall },
               { "by_category", cats },
               { "mean_tool_calls", r.mean_tool_calls },
               { "mean_reasoning_length", r.mean_reasoning_length } };
}

void to_json(json& j, const MetricDelta& d)
{
    j = json { { "metric", d.metric },   { "a_end", d.a_end },     { "b_end", d.b_end },
               { "end_delta", d.end_delta }, { "a_trend", d.a_trend }, { "b_trend", d.b_trend },
               { "trend_delta", d.trend_delta } };
}

} // namespace shoprl
