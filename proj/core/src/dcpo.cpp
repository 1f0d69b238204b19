// SPDX-License-Identifier: Apache-2.0
#include <shoprl/dcpo.hpp>
#include <shoprl/errors.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace shoprl
{

using nlohmann::json;

std::string_view to_string(Pool p)
{
    switch (p)
    {
        case Pool::Good: return "good";
        case Pool::Mid: return "mid";
        case Pool::Bad: return "bad";
    }
    return "?";
}

std::string_view to_string(KlEstimator e)
{
    switch (e)
    {
        case KlEstimator::LogRatio: return "log_ratio";
        case KlEstimator::K2: return "k2";
        case KlEstimator::K3: return "k3";
    }
    return "?";
}

KlEstimator kl_estimator_from_string(std::string_view name)
{
    if (name == "k3")
        return KlEstimator::K3;
    if (name == "k2")
        return KlEstimator::K2;
    if (name == "log_ratio" || name == "k1")
        return KlEstimator::LogRatio;
    throw ConfigError("unknown KL estimator: " + std::string(name));
}

void DcpoConfig::validate() const
{
    if (K < 6)
        throw ConfigError("dcpo.K must be at least 6 so the anchors are distinct");
    if (pool_sizing == PoolSizing::Equal && K % 6 != 0)
        throw ConfigError("dcpo.K must be divisible by 6 for equal pools (got " + std::to_string(K) + ")");
    if (pool_sizing == PoolSizing::CeilFallback && K % 2 != 0)
        throw ConfigError("dcpo.K must be even");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ConfigError("dcpo.epsilon must lie in (0, 1)");
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw ConfigError("dcpo.delta must be positive");
    if (!(lambda_kl >= 0.0) || !std::isfinite(lambda_kl))
        throw ConfigError("dcpo.lambda_kl must be finite and >= 0");
}

ScoredTrajectory make_scored(std::shared_ptr<const Trajectory> t, RewardBreakdown reward, const TokenCounter& count)
{
    ScoredTrajectory s;
    s.length = t ? reasoning_length(*t, count) : 0;
    s.trajectory = std::move(t);
    s.reward = reward;
    return s;
}

std::vector<std::size_t> rank_lexicographic(std::span<const ScoredTrajectory> cands)
{
    std::vector<std::size_t> order(cands.size());
    std::iota(order.begin(), order.end(), std::size_t { 0 });
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = cands[a];
        const auto& y = cands[b];
        if (x.reward.total != y.reward.total)
            return x.reward.total > y.reward.total;
        return x.length < y.length;
    });
    return order;
}

std::array<std::size_t, 3> pool_sizes(std::size_t K, PoolSizing sizing)
{
    if (K % 3 == 0)
        return { K / 3, K / 3, K / 3 };
    if (sizing == PoolSizing::Equal)
        throw ConfigError("K = " + std::to_string(K) + " cannot be split into three equal pools");
    auto const top = (K + 2) / 3;
    if (2 * top >= K)
        throw ConfigError("K = " + std::to_string(K) + " too small for three pools");
    return { top, top, K - 2 * top };
}

std::vector<Pool> partition_pools(std::size_t K, PoolSizing sizing)
{
    auto const sizes = pool_sizes(K, sizing);
    std::vector<Pool> out;
    out.reserve(K);
    out.insert(out.end(), sizes[0], Pool::Good);
    out.insert(out.end(), sizes[1], Pool::Mid);
    out.insert(out.end(), sizes[2], Pool::Bad);
    return out;
}

std::size_t selection_size(std::size_t K) noexcept
{
    return (K + 1) / 2;
}

std::array<std::size_t, 3> stratified_quotas(const std::array<std::size_t, 3>& sizes, std::size_t slots)
{
    // The anchors come out of the good and bad pools.
    std::array<std::size_t, 3> const remaining { sizes[0] - 1, sizes[1], sizes[2] - 1 };
    auto const den = remaining[0] + remaining[1] + remaining[2];
    if (slots > den)
        throw ConfigError("more selection slots than non-anchor trajectories");

    std::array<std::size_t, 3> quotas {};
    std::array<std::size_t, 3> rems {};
    std::size_t assigned = 0;
    for (std::size_t p = 0; p < 3; ++p)
    {
        auto const num = slots * remaining[p];
        quotas[p] = den == 0 ? 0 : num / den;
        rems[p] = den == 0 ? 0 : num % den;
        assigned += quotas[p];
    }
    std::array<std::size_t, 3> order { 0, 1, 2 };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rems[a] > rems[b]; });
    for (std::size_t i = 0; assigned < slots; ++i)
    {
        auto const p = order[i % 3];
        if (quotas[p] < remaining[p])
        {
            ++quotas[p];
            ++assigned;
        }
    }
    return quotas;
}

Selection select_positions(const std::vector<Pool>& pools, Rng& rng)
{
    auto const K = pools.size();
    if (selection_size(K) < 2)
        throw ConfigError("K/2 must be at least 2 to hold both anchors");

    std::array<std::size_t, 3> sizes {};
    for (auto p: pools)
        ++sizes[static_cast<std::size_t>(p)];

    Selection sel;
    sel.quotas = stratified_quotas(sizes, selection_size(K) - 2);
    sel.positions = { 0, K - 1 };

    for (std::size_t p = 0; p < 3; ++p)
    {
        std::vector<std::size_t> candidates;
        for (std::size_t pos = 1; pos + 1 < K; ++pos)
            if (static_cast<std::size_t>(pools[pos]) == p)
                candidates.push_back(pos);
        // Partial Fisher-Yates: the first quota entries become the sample.
        for (std::size_t i = 0; i < sel.quotas[p]; ++i)
        {
            auto const j = i + rng.below(candidates.size() - i);
            std::swap(candidates[i], candidates[j]);
            sel.positions.push_back(candidates[i]);
        }
    }
    std::sort(sel.positions.begin(), sel.positions.end());
    return sel;
}

std::vector<double> advantages(std::span<const double> rewards, double delta)
{
    if (rewards.empty())
        throw EmptyInput("advantages: empty group");
    // Centre on the first reward so an all-equal group gives exact zeros.
    auto const n = static_cast<double>(rewards.size());
    auto const shift = rewards.front();
    double mean = 0.0;
    for (double r: rewards)
        mean += r - shift;
    mean /= n;
    double ss = 0.0;
    for (double r: rewards)
        ss += (r - shift - mean) * (r - shift - mean);
    auto const sigma = std::sqrt(ss / n);

    std::vector<double> out;
    out.reserve(rewards.size());
    for (double r: rewards)
        out.push_back((r - shift - mean) / (sigma + delta));
    return out;
}

double surrogate_term(double rho, double adv, double epsilon)
{
    if (!(rho > 0.0) || !std::isfinite(rho))
        throw DomainError("importance ratio must be positive and finite");
    auto const clipped = std::clamp(rho, 1.0 - epsilon, 1.0 + epsilon);
    return std::min(rho * adv, clipped * adv);
}

double surrogate_logp_weight(double rho, double adv, double epsilon)
{
    auto const clipped = std::clamp(rho, 1.0 - epsilon, 1.0 + epsilon);
    // The clipped branch is constant in rho outside the trust region.
    if (rho * adv <= clipped * adv)
        return rho * adv;
    return 0.0;
}

namespace
{

    void check_finite(std::span<const double> xs, const char* what)
    {
        for (double x: xs)
            if (!std::isfinite(x))
                throw NonFiniteLogProb(std::string("non-finite ") + what);
    }

    void check_sizes(std::size_t n, std::initializer_list<std::size_t> sizes)
    {
        for (auto s: sizes)
            if (s != n)
                throw LengthMismatch("objective inputs differ in length");
    }

} // namespace

double kl_estimate(std::span<const double> logp_new, std::span<const double> logp_ref, KlEstimator estimator)
{
    check_sizes(logp_new.size(), { logp_ref.size() });
    check_finite(logp_new, "log pi_theta");
    check_finite(logp_ref, "log pi_ref");
    if (logp_new.empty())
        return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < logp_new.size(); ++i)
    {
        auto const d = logp_new[i] - logp_ref[i];
        switch (estimator)
        {
            case KlEstimator::LogRatio: sum += d; break;
            case KlEstimator::K2: sum += 0.5 * d * d; break;
            case KlEstimator::K3: sum += std::expm1(-d) + d; break;
        }
    }
    return sum / static_cast<double>(logp_new.size());
}

ObjectiveTerms objective(std::span<const double> logp_new, std::span<const double> logp_old,
                         std::span<const double> logp_ref, std::span<const double> adv, const DcpoConfig& cfg)
{
    check_sizes(logp_new.size(), { logp_old.size(), logp_ref.size(), adv.size() });
    check_finite(logp_new, "log pi_theta");
    check_finite(logp_old, "log pi_old");
    if (logp_new.empty())
        throw EmptyInput("objective: no selected trajectories");

    ObjectiveTerms t;
    for (std::size_t i = 0; i < logp_new.size(); ++i)
        t.surrogate += surrogate_term(std::exp(logp_new[i] - logp_old[i]), adv[i], cfg.epsilon);
    t.surrogate /= static_cast<double>(logp_new.size());
    t.kl = kl_estimate(logp_new, logp_ref, cfg.kl_estimator);
    t.value = t.surrogate - cfg.lambda_kl * t.kl;
    return t;
}

std::vector<double> objective_logp_weights(std::span<const double> logp_new, std::span<const double> logp_old,
                                           std::span<const double> logp_ref, std::span<const double> adv,
                                           const DcpoConfig& cfg)
{
    check_sizes(logp_new.size(), { logp_old.size(), logp_ref.size(), adv.size() });
    check_finite(logp_new, "log pi_theta");
    check_finite(logp_old, "log pi_old");
    check_finite(logp_ref, "log pi_ref");
    auto const n = static_cast<double>(logp_new.size());
    std::vector<double> w(logp_new.size());
    for (std::size_t i = 0; i < w.size(); ++i)
    {
        auto const rho = std::exp(logp_new[i] - logp_old[i]);
        auto const d = logp_new[i] - logp_ref[i];
        // d/dd of the per-sample KL estimate.
        double klSlope = 1.0;
        if (cfg.kl_estimator == KlEstimator::K2)
            klSlope = d;
        else if (cfg.kl_estimator == KlEstimator::K3)
            klSlope = -std::expm1(-d);
        w[i] = (surrogate_logp_weight(rho, adv[i], cfg.epsilon) - cfg.lambda_kl * klSlope) / n;
    }
    return w;
}

SelectionSet build_selection(std::vector<ScoredTrajectory> all, const DcpoConfig& cfg, Rng& rng)
{
    if (all.size() != cfg.K)
        throw LengthMismatch("expected " + std::to_string(cfg.K) + " candidates, got " + std::to_string(all.size()));

    SelectionSet set;
    set.all = std::move(all);
    set.ranked = rank_lexicographic(set.all);

    if (!cfg.selection_enabled)
    {
        set.selected.resize(set.all.size());
        std::iota(set.selected.begin(), set.selected.end(), std::size_t { 0 });
    }
    else
    {
        set.pools = partition_pools(cfg.K, cfg.pool_sizing);
        auto const sel = select_positions(set.pools, rng);
        set.quotas = sel.quotas;
        for (auto pos: sel.positions)
            set.selected.push_back(set.ranked[pos]);
        set.best = set.ranked.front();
        set.worst = set.ranked.back();
    }

    std::vector<double> rewards;
    rewards.reserve(set.selected.size());
    for (auto i: set.selected)
        rewards.push_back(set.all[i].reward.total);
    set.advantages = advantages(rewards, cfg.delta);
    return set;
}

std::vector<double> grpo_baseline(std::span<const ScoredTrajectory> all, const DcpoConfig& cfg)
{
    std::vector<double> rewards;
    rewards.reserve(all.size());
    for (const auto& s: all)
        rewards.push_back(s.reward.total);
    return advantages(rewards, cfg.delta);
}

json audit_record(const SelectionSet& set, std::string_view query_id)
{
    auto const K = set.all.size();
    std::vector<std::size_t> ranks(K);
    std::vector<std::string> pools(set.pools.empty() ? 0 : K);
    for (std::size_t pos = 0; pos < K; ++pos)
    {
        ranks[set.ranked[pos]] = pos + 1;
        if (!set.pools.empty())
            pools[set.ranked[pos]] = std::string(to_string(set.pools[pos]));
    }
    json breakdowns = json::array();
    std::vector<std::size_t> lengths;
    for (const auto& s: set.all)
    {
        breakdowns.push_back(s.reward);
        lengths.push_back(s.length);
    }
    json anchors = json::object();
    anchors["best"] = set.best ? json(*set.best) : json(nullptr);
    anchors["worst"] = set.worst ? json(*set.worst) : json(nullptr);
    return json { { "query_id", std::string(query_id) },
                  { "K", K },
                  { "ranks", ranks },
                  { "pools", pools },
                  { "selected_ids", set.selected },
                  { "anchors", anchors },
                  { "advantages", set.advantages },
                  { "rewards", breakdowns },
                  { "lengths", lengths } };
}

void to_json(json& j, const DcpoConfig& c)
{
    j = json { { "K", c.K },
               { "epsilon", c.epsilon },
               { "lambda_kl", c.lambda_kl },
               { "delta", c.delta },
               { "seed", c.seed },
               { "pool_sizing", c.pool_sizing == PoolSizing::Equal ? "equal" : "ceil_fallback" },
               { "selection_enabled", c.selection_enabled },
               { "kl_estimator", std::string(to_string(c.kl_estimator)) } };
}

void from_json(const json& j, DcpoConfig& c)
{
    DcpoConfig d;
    c.K = j.value("K", d.K);
    c.epsilon = j.value("epsilon", d.epsilon);
    c.lambda_kl = j.value("lambda_kl", d.lambda_kl);
    c.delta = j.value("delta", d.delta);
    c.seed = j.value("seed", d.seed);
    auto const sizing = j.value("pool_sizing", std::string("equal"));
    if (sizing == "equal")
        c.pool_sizing = PoolSizing::Equal;
    else if (sizing == "ceil_fallback")
        c.pool_sizing = PoolSizing::CeilFallback;
    else
        throw ConfigError("unknown pool_sizing: " + sizing);
    c.selection_enabled = j.value("selection_enabled", d.selection_enabled);
    c.kl_estimator = kl_estimator_from_string(j.value("kl_estimator", std::string(to_string(d.kl_estimator))));
}

} // namespace shoprl
