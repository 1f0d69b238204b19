// SPDX-License-Identifier: Apache-2.0
#include <shoprl/errors.hpp>
#include <shoprl/rng.hpp>

#include <sstream>

namespace shoprl
{

namespace
{
__extension__ using u128 = unsigned __int128;
}

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed): _seed(seed), _engine(mix64(seed))
{
}

Rng Rng::derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
{
    auto h = mix64(seed);
    for (auto id: path)
        h = mix64(h ^ mix64(id + 0x632be59bd9b4e019ULL));
    return Rng(h);
}

Rng Rng::split(std::uint64_t stream) const
{
    return derive(_seed, { stream });
}

std::uint64_t Rng::next_u64()
{
    return _engine();
}

double Rng::uniform()
{
    return static_cast<double>(_engine() >> 11) * 0x1.0p-53;
}

std::size_t Rng::below(std::size_t n)
{
    if (n == 0)
        throw DomainError("Rng::below: n must be positive");
    // Lemire's nearly-divisionless bounded draw.
    auto const bound = static_cast<std::uint64_t>(n);
    auto x = _engine();
    auto m = static_cast<u128>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound)
    {
        auto const threshold = -bound % bound;
        while (low < threshold)
        {
            x = _engine();
            m = static_cast<u128>(x) * bound;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::size_t>(m >> 64);
}

std::string Rng::state() const
{
    std::ostringstream out;
    out << _engine;
    return out.str();
}

void Rng::restore(std::uint64_t seed, const std::string& state)
{
    std::istringstream in(state);
    std::mt19937_64 engine;
    in >> engine;
    if (in.fail())
        throw ConfigError("Rng::restore: malformed engine state");
    _seed = seed;
    _engine = engine;
}

} // namespace shoprl
