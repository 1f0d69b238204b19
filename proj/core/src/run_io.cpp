// SPDX-License-Identifier: Apache-2.0
#include <shoprl/errors.hpp>
#include <shoprl/run_io.hpp>

#include <charconv>
#include <cstdio>
#include <sstream>

namespace shoprl
{

using nlohmann::json;

namespace
{

    std::string exact(double x)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return buf;
    }

    std::ofstream open_out(const std::filesystem::path& path)
    {
        if (path.has_parent_path())
            std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw Error("cannot write " + path.string());
        return out;
    }

    std::string slurp(const std::filesystem::path& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw Error("cannot read " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    // from_chars keeps subnormals, which stod reports as out of range.
    double parse_double(const std::string& field)
    {
        double v = 0.0;
        auto const* end = field.data() + field.size();
        auto const [ptr, ec] = std::from_chars(field.data(), end, v);
        if (ec != std::errc {} || ptr != end)
            throw std::invalid_argument(field);
        return v;
    }

} // namespace

std::string curves_csv(std::span<const CurvePoint> curves)
{
    std::string out(kCurvesHeader);
    out += '\n';
    for (const auto& p: curves)
    {
        out += std::to_string(p.step);
        for (double v: { p.mean_reward, p.mean_reasoning_length, p.l1_avg_at_k, p.pass_hat_k, p.l2_avg, p.l2_std,
                         p.mean_tool_calls })
            out += ',' + exact(v);
        out += '\n';
    }
    return out;
}

std::vector<CurvePoint> parse_curves_csv(std::string_view text)
{
    std::istringstream in { std::string(text) };
    std::string line;
    if (!std::getline(in, line) || line != kCurvesHeader)
        throw SchemaMismatch("curves file does not start with the expected header");
    std::vector<CurvePoint> out;
    std::size_t lineNo = 1;
    while (std::getline(in, line))
    {
        ++lineNo;
        if (line.empty())
            continue;
        std::vector<std::string> fields;
        std::stringstream row(line);
        std::string field;
        while (std::getline(row, field, ','))
            fields.push_back(field);
        if (fields.size() != 8)
            throw SchemaMismatch("curves line " + std::to_string(lineNo) + " has " + std::to_string(fields.size())
                                 + " fields");
        try
        {
            CurvePoint p;
            p.step = static_cast<std::size_t>(std::stoull(fields[0]));
            p.mean_reward = parse_double(fields[1]);
            p.mean_reasoning_length = parse_double(fields[2]);
            p.l1_avg_at_k = parse_double(fields[3]);
            p.pass_hat_k = parse_double(fields[4]);
            p.l2_avg = parse_double(fields[5]);
            p.l2_std = parse_double(fields[6]);
            p.mean_tool_calls = parse_double(fields[7]);
            out.push_back(p);
        }
        catch (const std::logic_error&)
        {
            throw SchemaMismatch("curves line " + std::to_string(lineNo) + " has a non-numeric field");
        }
    }
    return out;
}

void write_curves_csv(const std::filesystem::path& path, std::span<const CurvePoint> curves)
{
    open_out(path) << curves_csv(curves);
}

std::vector<CurvePoint> read_curves_csv(const std::filesystem::path& path)
{
    return parse_curves_csv(slurp(path));
}

void write_json(const std::filesystem::path& path, const json& j)
{
    open_out(path) << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path)
{
    auto j = json::parse(slurp(path), nullptr, false);
    if (j.is_discarded())
        throw ConfigError(path.string() + " is not valid JSON");
    return j;
}

void write_jsonl(const std::filesystem::path& path, std::span<const json> records)
{
    auto out = open_out(path);
    for (const auto& r: records)
        out << r.dump() << '\n';
}

std::vector<json> read_jsonl(const std::filesystem::path& path)
{
    std::istringstream in(slurp(path));
    std::vector<json> out;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line))
    {
        ++lineNo;
        if (line.empty())
            continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw SchemaMismatch(path.string() + ":" + std::to_string(lineNo) + " is not valid JSON");
        out.push_back(std::move(j));
    }
    return out;
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path): _out(open_out(path))
{
}

void JsonlWriter::write(const json& record)
{
    _out << record.dump() << '\n';
    _out.flush();
}

void write_catalog_jsonl(const std::filesystem::path& path, const Catalog& catalog)
{
    std::vector<json> records(catalog.products().begin(), catalog.products().end());
    write_jsonl(path, records);
}

Catalog read_catalog_jsonl(const std::filesystem::path& path)
{
    std::vector<ProductRecord> products;
    for (const auto& j: read_jsonl(path))
        products.push_back(j.get<ProductRecord>());
    return Catalog(std::move(products));
}

void write_queries_jsonl(const std::filesystem::path& path, std::span<const Query> queries)
{
    std::vector<json> records(queries.begin(), queries.end());
    write_jsonl(path, records);
}

std::vector<Query> read_queries_jsonl(const std::filesystem::path& path)
{
    std::vector<Query> out;
    for (const auto& j: read_jsonl(path))
        out.push_back(j.get<Query>());
    return out;
}

} // namespace shoprl
