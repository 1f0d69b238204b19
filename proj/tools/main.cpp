// SPDX-License-Identifier: Apache-2.0
#include <shoprl/errors.hpp>
#include <shoprl/run_io.hpp>
#include <shoprl/trainer.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

int run_train(const std::string& configPath, const std::string& algo, std::optional<std::uint64_t> seed,
              std::optional<std::size_t> threads, const fs::path& out)
{
    shoprl::TrainConfig cfg;
    if (!configPath.empty())
        cfg = shoprl::read_json(configPath).get<shoprl::TrainConfig>();
    if (!algo.empty())
        cfg.algo = shoprl::algo_from_string(algo);
    if (seed)
        cfg.seed = *seed;
    if (threads)
        cfg.threads = *threads;
    cfg.validate();

    auto const env = shoprl::make_environment(cfg.env);
    auto judge = shoprl::make_judge(cfg, env);

    fs::create_directories(out);
    shoprl::write_json(out / "config.json", cfg);
    shoprl::JsonlWriter audit(out / "audit.jsonl");
    shoprl::TrainCallbacks callbacks;
    callbacks.on_audit = [&](const json& record) { audit.write(record); };
    callbacks.on_step = [&](const shoprl::CurvePoint& p) {
        if (p.step % 10 == 0)
            std::cerr << "step " << p.step << " reward " << p.mean_reward << " length " << p.mean_reasoning_length
                      << " tools " << p.mean_tool_calls << '\n';
    };
    callbacks.on_abort = [&](const shoprl::Checkpoint& c) { shoprl::write_json(out / "checkpoint.json", c); };

    auto const result = shoprl::train(cfg, env, *judge, callbacks);
    shoprl::write_curves_csv(out / "curves.csv", result.curves);
    shoprl::write_json(out / "checkpoint.json", result.checkpoint);

    auto const report = shoprl::evaluate(result.checkpoint.policy, env.queries, env.catalog, *judge, cfg.eval_runs,
                                         cfg.seed, cfg.threads);
    shoprl::write_json(out / "report.json", report);
    std::cout << json(report.overall).dump(2) << '\n';
    return 0;
}

int run_eval(const fs::path& policyPath, std::size_t runs, std::optional<std::uint64_t> seed, const fs::path& out)
{
    auto const ckpt = shoprl::read_json(policyPath).get<shoprl::Checkpoint>();
    auto const env = shoprl::make_environment(ckpt.config.env);
    auto judge = shoprl::make_judge(ckpt.config, env);
    auto const report = shoprl::evaluate(ckpt.policy, env.queries, env.catalog, *judge, runs,
                                         seed.value_or(ckpt.config.seed), ckpt.config.threads);
    fs::create_directories(out);
    shoprl::write_json(out / "report.json", report);
    std::cout << json(report.overall).dump(2) << '\n';
    return 0;
}

int run_compare(const fs::path& a, const fs::path& b)
{
    auto const ca = shoprl::read_curves_csv(a / "curves.csv");
    auto const cb = shoprl::read_curves_csv(b / "curves.csv");
    json summary = json::array();
    for (const auto& d: shoprl::compare_runs(ca, cb))
        summary.push_back(d);
    std::cout << summary.dump(2) << '\n';
    return 0;
}

int run_gen_env(std::uint64_t seed, std::size_t catalogSize, std::size_t perCategory, const fs::path& out)
{
    auto const env = shoprl::make_environment({ seed, catalogSize, perCategory });
    shoprl::write_catalog_jsonl(out / "catalog.jsonl", env.catalog);
    shoprl::write_queries_jsonl(out / "queries.jsonl", env.queries);
    std::cout << "wrote " << env.catalog.size() << " products and " << env.queries.size() << " queries to "
              << out.string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app { "Train and evaluate shopping agents with hierarchical rewards and contrastive selection" };
    app.require_subcommand(1);

    std::string configPath;
    std::string algo;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::string out = "run";
    auto* train = app.add_subcommand("train", "Train a policy and write curves, audit log and report");
    train->add_option("--config", configPath, "JSON config mirroring TrainConfig")->check(CLI::ExistingFile);
    train->add_option("--algo", algo, "dcpo or grpo")->check(CLI::IsMember({ "dcpo", "grpo" }));
    train->add_option("--seed", seed, "Run seed");
    train->add_option("--threads", threads, "Rollout workers");
    train->add_option("--out", out, "Output directory")->required();

    std::string policyPath;
    std::size_t runs = 4;
    std::string evalOut = "eval";
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval->add_option("--policy", policyPath, "checkpoint.json from a train run")->required()->check(CLI::ExistingFile);
    eval->add_option("--runs", runs, "Independent runs per query")->check(CLI::PositiveNumber);
    eval->add_option("--seed", seed, "Evaluation seed");
    eval->add_option("--out", evalOut, "Output directory")->required();

    std::string dirA;
    std::string dirB;
    auto* compare = app.add_subcommand("compare", "Compare the curves of two runs");
    compare->add_option("--a", dirA, "First run directory")->required()->check(CLI::ExistingDirectory);
    compare->add_option("--b", dirB, "Second run directory")->required()->check(CLI::ExistingDirectory);

    std::uint64_t envSeed = 7;
    std::size_t catalogSize = 200;
    std::size_t perCategory = 20;
    std::string envOut = ".";
    auto* genEnv = app.add_subcommand("gen-env", "Write a synthetic catalog and query set as JSONL");
    genEnv->add_option("--seed", envSeed, "Environment seed");
    genEnv->add_option("--catalog-size", catalogSize, "Number of products");
    genEnv->add_option("--queries-per-cat", perCategory, "Queries per query category");
    genEnv->add_option("--out", envOut, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*train)
            return run_train(configPath, algo, seed, threads, out);
        if (*eval)
            return run_eval(policyPath, runs, seed, evalOut);
        if (*compare)
            return run_compare(dirA, dirB);
        if (*genEnv)
            return run_gen_env(envSeed, catalogSize, perCategory, envOut);
    }
    catch (const shoprl::ConfigError& e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
