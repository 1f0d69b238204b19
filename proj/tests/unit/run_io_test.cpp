// SPDX-License-Identifier: Apache-2.0
#include "reference.hpp"

#include <shoprl/errors.hpp>
#include <shoprl/run_io.hpp>

#include <gtest/gtest.h>

#include <fstream>
#include <limits>

using namespace shoprl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace
{

class TempDir
{
  public:
    TempDir()
    {
        auto const* info = ::testing::UnitTest::GetInstance()->current_test_info();
        _path = fs::temp_directory_path() / (std::string("shoprl_") + info->test_suite_name() + "_" + info->name());
        fs::remove_all(_path);
        fs::create_directories(_path);
    }
    ~TempDir() { fs::remove_all(_path); }

    [[nodiscard]] const fs::path& path() const { return _path; }

  private:
    fs::path _path;
};

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream(p, std::ios::binary) << text;
}

} // namespace

TEST(CurvesCsv, RoundTripsBitExactly)
{
    reference::Gen g(5);
    std::vector<CurvePoint> curves;
    for (std::size_t i = 0; i < 200; ++i)
        curves.push_back({ i, g.uniform(0, 1.6), g.uniform(0, 900), g.uniform(), g.uniform(), g.uniform(),
                           g.uniform(0, 0.3), g.uniform(0, 3) });
    curves.push_back({ 200, 0.1, 1e-300, std::numeric_limits<double>::denorm_min(), 1.0 / 3.0, 0, 0, 0 });
    TempDir dir;
    write_curves_csv(dir.path() / "curves.csv", curves);
    auto const back = read_curves_csv(dir.path() / "curves.csv");
    EXPECT_EQ(back, curves);
    EXPECT_EQ(curves_csv(back), curves_csv(curves));
}

TEST(CurvesCsv, HeaderOnlyIsEmpty)
{
    EXPECT_TRUE(parse_curves_csv(std::string(kCurvesHeader) + "\n").empty());
}

TEST(CurvesCsv, RejectsMalformedInput)
{
    std::string const header(kCurvesHeader);
    EXPECT_THROW(parse_curves_csv(""), SchemaMismatch);
    EXPECT_THROW(parse_curves_csv("step,reward\n0,1\n"), SchemaMismatch);
    EXPECT_THROW(parse_curves_csv(header + "\n0,1,2,3\n"), SchemaMismatch);
    EXPECT_THROW(parse_curves_csv(header + "\n0,1,2,3,4,5,6,7,8\n"), SchemaMismatch);
    EXPECT_THROW(parse_curves_csv(header + "\n0,1,2,x,4,5,6,7\n"), SchemaMismatch);
    EXPECT_THROW(parse_curves_csv(header + "\n0,1,2,3.5abc,4,5,6,7\n"), SchemaMismatch);
    EXPECT_THROW(parse_curves_csv(header + "\nzero,1,2,3,4,5,6,7\n"), SchemaMismatch);
}

TEST(JsonFiles, RoundTrip)
{
    TempDir dir;
    json const j = { { "a", 1 }, { "b", { 1.5, "x" } } };
    write_json(dir.path() / "nested" / "x.json", j);
    EXPECT_EQ(read_json(dir.path() / "nested" / "x.json"), j);

    write_text(dir.path() / "bad.json", "{\"a\": ");
    EXPECT_THROW(read_json(dir.path() / "bad.json"), ConfigError);
    EXPECT_THROW(read_json(dir.path() / "missing.json"), Error);
}

TEST(JsonlFiles, RoundTripAndStreaming)
{
    TempDir dir;
    std::vector<json> records { json { { "i", 0 } }, json::array({ 1, 2 }), json("s") };
    write_jsonl(dir.path() / "r.jsonl", records);
    EXPECT_EQ(read_jsonl(dir.path() / "r.jsonl"), records);
    {
        JsonlWriter w(dir.path() / "w.jsonl");
        for (const auto& r: records)
            w.write(r);
        // Flushed per record: readable before the writer closes.
        EXPECT_EQ(read_jsonl(dir.path() / "w.jsonl"), records);
    }
    write_text(dir.path() / "bad.jsonl", "{\"i\": 0}\n\n{oops\n");
    EXPECT_THROW(read_jsonl(dir.path() / "bad.jsonl"), SchemaMismatch);
}

TEST(EnvironmentFiles, CatalogAndQueriesRoundTrip)
{
    auto const catalog = generate_catalog(7, 60);
    auto const queries = generate_queries(catalog, 7, 3);
    TempDir dir;
    write_catalog_jsonl(dir.path() / "catalog.jsonl", catalog);
    write_queries_jsonl(dir.path() / "queries.jsonl", queries);

    auto const c2 = read_catalog_jsonl(dir.path() / "catalog.jsonl");
    ASSERT_EQ(c2.size(), catalog.size());
    for (std::size_t i = 0; i < catalog.size(); ++i)
        EXPECT_EQ(json(c2.products()[i]), json(catalog.products()[i]));

    auto const q2 = read_queries_jsonl(dir.path() / "queries.jsonl");
    ASSERT_EQ(q2.size(), queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i)
        EXPECT_EQ(json(q2[i]), json(queries[i]));
}
