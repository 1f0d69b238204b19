// SPDX-License-Identifier: Apache-2.0
// Independent reference implementations. They are written from the
// definitions directly and share no code with the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace reference
{

inline std::filesystem::path data_dir()
{
    return std::filesystem::path(SHOPRL_TEST_DATA_DIR);
}

struct Hrm
{
    double r_out;
    double r_proc;
    double total;
};

/// Gated outcome plus doubly gated process reward, using repeated
/// multiplication for the exponent.
inline Hrm hrm(int g1, double g2, double tool, double alpha, double beta, double eta, int k)
{
    Hrm r { 0.0, 0.0, 0.0 };
    if (g1 == 0)
        return r;
    double power = 1.0;
    for (int i = 0; i < k; ++i)
        power *= g2;
    r.r_out = 1.0 + alpha * power;
    r.r_proc = g2 >= eta ? tool : 0.0;
    r.total = r.r_out + beta * r.r_proc;
    return r;
}

/// Selection sort on (reward desc, length asc, index asc). O(n^2) on purpose.
inline std::vector<std::size_t> rank(const std::vector<double>& reward, const std::vector<std::size_t>& length)
{
    std::vector<std::size_t> left(reward.size());
    for (std::size_t i = 0; i < left.size(); ++i)
        left[i] = i;
    std::vector<std::size_t> out;
    while (!left.empty())
    {
        std::size_t best = 0;
        for (std::size_t j = 1; j < left.size(); ++j)
        {
            auto const a = left[j];
            auto const b = left[best];
            bool better = reward[a] > reward[b] || (reward[a] == reward[b] && length[a] < length[b])
                          || (reward[a] == reward[b] && length[a] == length[b] && a < b);
            if (better)
                best = j;
        }
        out.push_back(left[best]);
        left.erase(left.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return out;
}

/// (r - mean) / (population std + delta), accumulated in long double.
inline std::vector<double> advantages(const std::vector<double>& r, double delta)
{
    long double mean = 0;
    for (double x: r)
        mean += x;
    mean /= static_cast<long double>(r.size());
    long double var = 0;
    for (double x: r)
        var += (x - mean) * (x - mean);
    var /= static_cast<long double>(r.size());
    auto const sd = std::sqrt(var);
    std::vector<double> out;
    for (double x: r)
        out.push_back(static_cast<double>((x - mean) / (sd + delta)));
    return out;
}

struct Moments
{
    long double mean;
    long double std;
};

inline Moments moments(const std::vector<double>& xs, bool sample)
{
    long double mean = 0;
    for (double x: xs)
        mean += x;
    mean /= static_cast<long double>(xs.size());
    long double ss = 0;
    for (double x: xs)
        ss += (x - mean) * (x - mean);
    auto const den = static_cast<long double>(sample ? xs.size() - 1 : xs.size());
    return { mean, xs.size() < 2 && sample ? 0.0L : std::sqrt(ss / den) };
}

/// Per-query reports reduced to their gate and optional L2 pass count.
struct RunOutcome
{
    bool pass;
    std::optional<int> l2_passed;
};

struct Metrics
{
    double avg;
    double pass_hat;
    double l2_avg;
    double l2_std;
};

/// Corpus metrics by enumerating every (query, run) cell: Avg@k is the
/// share of passing cells per query averaged over queries, Pass^k the share
/// of queries whose runs all pass, and the L2 figures the mean and sample
/// std of the per-run L2 means.
inline Metrics metrics(const std::vector<std::vector<RunOutcome>>& cells)
{
    // Integer counts, then one correctly rounded division each.
    auto const k = cells.front().size();
    std::size_t passingCells = 0;
    std::size_t allPass = 0;
    for (const auto& q: cells)
    {
        std::size_t passes = 0;
        for (const auto& c: q)
            passes += c.pass ? 1 : 0;
        passingCells += passes;
        allPass += passes == k ? 1 : 0;
    }
    std::vector<double> runMeans;
    for (std::size_t run = 0; run < k; ++run)
    {
        long double sum = 0;
        std::size_t n = 0;
        for (const auto& q: cells)
            if (q[run].l2_passed)
            {
                sum += static_cast<long double>(*q[run].l2_passed) / 7.0L;
                ++n;
            }
        if (n)
            runMeans.push_back(static_cast<double>(sum / static_cast<long double>(n)));
    }
    Metrics m {};
    m.avg = static_cast<double>(passingCells) / (static_cast<double>(k) * static_cast<double>(cells.size()));
    m.pass_hat = static_cast<double>(allPass) / static_cast<double>(cells.size());
    if (!runMeans.empty())
    {
        auto const mo = moments(runMeans, true);
        m.l2_avg = static_cast<double>(mo.mean);
        m.l2_std = static_cast<double>(mo.std);
    }
    return m;
}

/// Central finite difference of f along coordinate i.
template <typename F>
double central_difference(F&& f, std::vector<double> x, std::size_t i, double h)
{
    auto const x0 = x[i];
    x[i] = x0 + h;
    auto const up = f(x);
    x[i] = x0 - h;
    auto const down = f(x);
    return (up - down) / (2.0 * h);
}

/// Test-side random source, deliberately a different engine from the library's.
class Gen
{
  public:
    explicit Gen(std::uint32_t seed): _e(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0)
    {
        return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(_e);
    }

    std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(_e); }

    bool coin(double p = 0.5) { return uniform() < p; }

  private:
    std::mt19937 _e;
};

} // namespace reference
