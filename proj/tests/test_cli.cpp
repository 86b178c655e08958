#include "doctest.h"
#include "json.hpp"
#include "process.hpp"

using nlohmann::json;
using testing::run;

namespace {

const std::string kCli = HUMBR_CLI_PATH;

std::string fx(const std::string& name) { return std::string(HUMBR_FIXTURE_DIR) + "/" + name; }

std::vector<json> lines(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

}  // namespace

TEST_CASE("cli: usage errors") {
  CHECK(run(kCli, {}).exit_code != 0);
  CHECK(run(kCli, {"frobnicate"}).exit_code != 0);
  const auto v = run(kCli, {"--version"});
  CHECK(v.exit_code == 0);
  CHECK(v.out.find("0.1.0") != std::string::npos);
}

TEST_CASE("cli select: exit 0 when every pool is answered") {
  const auto r = run(kCli, {"select", "--tau", "0", fx("pool.jsonl")});
  CHECK(r.exit_code == 0);
  CHECK(r.err.empty());
  const auto recs = lines(r.out);
  REQUIRE(recs.size() == 2);
  CHECK(recs[1].at("prompt_id") == "sum");
}

TEST_CASE("cli select: exit 2 on abstention, 1 on malformed input") {
  const auto abstain = run(kCli, {"select", "--tau", "0.99", fx("pool.jsonl")});
  CHECK(abstain.exit_code == 2);
  for (const auto& rec : lines(abstain.out)) CHECK(rec.at("verdict") == "abstain");

  const auto bad = run(kCli, {"select", fx("pool_malformed.jsonl")});
  CHECK(bad.exit_code == 1);
  CHECK(lines(bad.out).size() == 1);
  CHECK(lines(bad.err).size() == 2);
}

TEST_CASE("cli select: empty input and stdin") {
  const auto empty = run(kCli, {"select", "-"}, "");
  CHECK(empty.exit_code == 0);
  CHECK(empty.out.empty());
  const auto piped = run(kCli, {"select", "--tau", "0"}, testing::slurp(fx("pool.jsonl")));
  CHECK(piped.exit_code == 0);
  CHECK(piped.out == run(kCli, {"select", "--tau", "0", fx("pool.jsonl")}).out);
}

TEST_CASE("cli select: output file and preset") {
  testing::TempDir dir;
  const auto path = (dir / "out.jsonl").string();
  const auto r = run(kCli, {"select", "--preset", "production", "--tau", "0", "-o", path, fx("pool.jsonl")});
  CHECK(r.exit_code == 0);
  CHECK(r.out.empty());
  const auto recs = lines(testing::slurp(path));
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].at("config").at("alpha") == 0.65);
}

TEST_CASE("cli generate -> select round trip is deterministic") {
  testing::TempDir dir;
  const auto pools = (dir / "pools.jsonl").string();
  const auto gen = run(kCli, {"generate", "--config", fx("stub_config.json"), "-o", pools, fx("prompts.jsonl")});
  REQUIRE(gen.exit_code == 0);
  CHECK(lines(testing::slurp(pools)).size() == 16);
  const auto one = run(kCli, {"select", "--config", fx("stub_config.json"), pools});
  const auto two = run(kCli, {"select", "--config", fx("stub_config.json"), pools});
  CHECK(one.out == two.out);
  CHECK(one.exit_code == two.exit_code);
  CHECK(lines(one.out).size() == 2);
}

TEST_CASE("cli generate: failures") {
  testing::TempDir dir;
  json cfg = json::parse(testing::slurp(fx("stub_config.json")));
  cfg["providers"][1]["stub"]["failure"] = "auth";
  const auto partial_cfg = (dir / "partial.json").string();
  testing::spit(partial_cfg, cfg.dump());
  const auto partial = run(kCli, {"generate", "--config", partial_cfg, fx("prompts.jsonl")});
  CHECK(partial.exit_code == 0);  // half the pool survives, which meets the default minimum
  CHECK(lines(partial.out).size() == 8);
  CHECK(lines(partial.err).size() == 8);

  const auto strict = run(kCli, {"generate", "--config", partial_cfg, "--min-pool", "5", fx("prompts.jsonl")});
  CHECK(strict.exit_code == 1);

  cfg["providers"][0]["stub"]["failure"] = "auth";
  const auto dead_cfg = (dir / "dead.json").string();
  testing::spit(dead_cfg, cfg.dump());
  const auto dead = run(kCli, {"generate", "--config", dead_cfg, fx("prompts.jsonl")});
  CHECK(dead.exit_code == 1);
  CHECK(dead.err.find("all-providers-failed") != std::string::npos);
}

TEST_CASE("cli plan and pareto") {
  const auto plan = run(kCli, {"plan", "--catalog", fx("catalog.json"), "--tau", "0.7", "--epsilon", "1e-4",
                               "--certify", "hoeffding", "--max-m", "4"});
  REQUIRE(plan.exit_code == 0);
  const auto rec = json::parse(plan.out);
  CHECK(rec.at("k") == 4);
  CHECK(rec.at("m") == 4);
  CHECK(rec.at("cost") == 16.0);

  const auto exact = run(kCli, {"plan", "--catalog", fx("catalog.json"), "--tau", "0.7", "--epsilon", "1e-4"});
  REQUIRE(exact.exit_code == 0);
  CHECK(json::parse(exact.out).at("cost") == 6.0);

  const auto none = run(kCli, {"plan", "--catalog", fx("catalog.json"), "--tau", "0.7", "--epsilon", "1e-40",
                               "--max-m", "2"});
  CHECK(none.exit_code == 1);
  CHECK(json::parse(none.out).at("feasible") == false);

  const auto pareto = run(kCli, {"pareto", "--catalog", fx("catalog.json"), "--tau", "0.7", "--budgets", "1,4,16"});
  REQUIRE(pareto.exit_code == 0);
  const auto points = lines(pareto.out);
  REQUIRE(points.size() == 3);
  CHECK(points[2].at("p_fail").get<double>() <= points[0].at("p_fail").get<double>());
  CHECK(run(kCli, {"pareto", "--catalog", fx("catalog.json"), "--budgets", "x"}).exit_code == 1);
}

TEST_CASE("cli riskexact and simulate") {
  const auto exact = run(kCli, {"riskexact", "--k", "4", "--m", "4", "--mu", "0.1", "--rho", "0.5", "--tau", "0.7"});
  REQUIRE(exact.exit_code == 0);
  const auto rec = json::parse(exact.out);
  CHECK(rec.at("exact").get<double>() > 0);
  CHECK(rec.at("hoeffding").get<double>() <= 1.0);

  const std::vector<std::string> sim = {"simulate", "--k", "4", "--m", "4", "--mu", "0.1", "--rho", "0.5",
                                        "--tau", "0.7", "--trials", "50000", "--seed", "4"};
  const auto a = run(kCli, sim);
  const auto b = run(kCli, sim);
  REQUIRE(a.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(json::parse(a.out).at("monte_carlo").at("seed") == 4);
  CHECK(run(kCli, {"riskexact", "--k", "4"}).exit_code == 1);
}

TEST_CASE("cli monitor") {
  const auto r = run(kCli, {"monitor", fx("results.jsonl"), fx("results.jsonl")});
  REQUIRE(r.exit_code == 0);
  const auto rec = json::parse(r.out);
  CHECK(rec.at("models").at("alpha").at("pools") == 4);
  CHECK(run(kCli, {"monitor", fx("pool.jsonl")}).exit_code == 1);
}

TEST_CASE("cli config validate and show") {
  const auto bad = run(kCli, {"config", "validate", fx("bad_config.json")});
  CHECK(bad.exit_code == 1);
  CHECK(bad.out.find("api_key") != std::string::npos);
  CHECK(bad.out.find("sk-should-not-be-here") == std::string::npos);
  CHECK(run(kCli, {"config", "validate", fx("stub_config.json")}).exit_code == 0);

  const auto show = run(kCli, {"config", "show", "--config", fx("stub_config.json"), "--seed", "3"});
  REQUIRE(show.exit_code == 0);
  const auto cfg = json::parse(show.out);
  CHECK(cfg.at("seed") == 3);
  CHECK(cfg.at("tau") == 0.5);
}
