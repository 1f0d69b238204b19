// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <shoprl/catalog.hpp>
#include <shoprl/trainer.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace shoprl
{

/// curves.csv header, in CurvePoint field order.
inline constexpr std::string_view kCurvesHeader =
    "step,mean_reward,mean_reasoning_length,l1_avg_at_k,pass_hat_k,l2_avg,l2_std,mean_tool_calls";

/// Doubles are written with 17 significant digits so they read back exactly.
std::string curves_csv(std::span<const CurvePoint> curves);
std::vector<CurvePoint> parse_curves_csv(std::string_view text);

void write_curves_csv(const std::filesystem::path& path, std::span<const CurvePoint> curves);
std::vector<CurvePoint> read_curves_csv(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

void write_jsonl(const std::filesystem::path& path, std::span<const nlohmann::json> records);
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// Appends one record per line, flushing after each.
class JsonlWriter
{
  public:
    explicit JsonlWriter(const std::filesystem::path& path);
    void write(const nlohmann::json& record);

  private:
    std::ofstream _out;
};

void write_catalog_jsonl(const std::filesystem::path& path, const Catalog& catalog);
Catalog read_catalog_jsonl(const std::filesystem::path& path);
void write_queries_jsonl(const std::filesystem::path& path, std::span<const Query> queries);
std::vector<Query> read_queries_jsonl(const std::filesystem::path& path);

} // namespace shoprl
