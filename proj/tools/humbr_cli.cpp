// humbr command-line front end. Everything below goes through the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "humbr/humbr.h"
#include "json.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitAbstained = 2;

struct Failure {
  std::string message;
};

// Owns a humbr_buffer.
class Buffer {
 public:
  Buffer() = default;
  Buffer(const Buffer&) = delete;
  Buffer& operator=(const Buffer&) = delete;
  ~Buffer() { humbr_buffer_free(buf_); }
  humbr_buffer** out() { return &buf_; }
  std::string_view view() const { return {humbr_buffer_data(buf_), humbr_buffer_size(buf_)}; }

 private:
  humbr_buffer* buf_ = nullptr;
};

class Engine {
 public:
  explicit Engine(const std::string& config_json);
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;
  ~Engine() { humbr_engine_destroy(engine_); }
  humbr_engine* get() const { return engine_; }

 private:
  humbr_engine* engine_ = nullptr;
};

void check(humbr_status st, const std::string& context) {
  if (st == HUMBR_OK) return;
  std::string msg = context + ": " + humbr_status_string(st);
  const std::string detail = humbr_last_error();
  if (!detail.empty()) msg += ": " + detail;
  throw Failure{msg};
}

Engine::Engine(const std::string& config_json) {
  check(humbr_engine_create(config_json.c_str(), &engine_), "engine");
}

std::string read_input(const std::string& path) {
  if (path == "-") {
    return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{"cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, std::string_view text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Failure{"cannot write " + path};
  out << text;
  if (!out) throw Failure{"write failed: " + path};
}

// Catalog files are either a JSON array or one entry per line.
json read_catalog(const std::string& path) {
  const std::string text = read_input(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return json::array();
  try {
    if (text[first] == '[') return json::parse(text);
    json arr = json::array();
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      arr.push_back(json::parse(line));
    }
    return arr;
  } catch (const json::exception& e) {
    throw Failure{"catalog " + path + ": " + e.what()};
  }
}

// Flags shared by every command that builds an engine. Unset flags leave the
// config file (or built-in default) in charge.
struct CommonFlags {
  std::string config_path;
  std::optional<std::string> preset;
  std::optional<double> alpha, tau, epsilon;
  std::optional<std::uint64_t> seed, trials;
  std::optional<std::size_t> parallelism, min_pool;
  std::optional<std::string> catalog_path;
  std::optional<unsigned> max_m, max_models;
  std::optional<std::string> certify;
  std::string output;

  json overrides() const {
    json o = json::object();
    if (preset) o["preset"] = *preset;
    if (alpha) o["alpha"] = *alpha;
    if (tau) o["tau"] = *tau;
    if (epsilon) o["epsilon"] = *epsilon;
    if (seed) o["seed"] = *seed;
    if (trials) o["trials"] = *trials;
    if (parallelism) o["parallelism"] = *parallelism;
    if (min_pool) o["min_pool"] = *min_pool;
    if (catalog_path) o["catalog"] = read_catalog(*catalog_path);
    if (max_m) o["planner"]["max_samples"] = *max_m;
    if (max_models) o["planner"]["max_models"] = *max_models;
    if (certify) o["planner"]["certification"] = *certify;
    return o;
  }

  std::string resolved() const {
    const std::string file = config_path.empty() ? std::string() : read_input(config_path);
    const std::string over = overrides().dump();
    Buffer out;
    check(humbr_config_resolve(file.c_str(), over.c_str(), out.out()), "config");
    return std::string(out.view());
  }
};

void add_config_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--preset", f.preset, "Built-in preset: default or production")
      ->check(CLI::IsMember({"default", "production"}));
  cmd->add_option("--parallelism", f.parallelism, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("-o,--output", f.output, "Output file (default: stdout)");
}

void add_selection_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--alpha", f.alpha, "Semantic weight in [0,1]")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--tau", f.tau, "Consensus threshold in [0,1]")->check(CLI::Range(0.0, 1.0));
}

void add_planner_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--catalog", f.catalog_path, "Model catalog (JSON array or JSON lines)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--tau", f.tau, "Consensus threshold")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--epsilon", f.epsilon, "Failure tolerance in (0,1)");
  cmd->add_option("--max-m", f.max_m, "Largest samples-per-model to consider");
  cmd->add_option("--max-models", f.max_models, "Largest subset size (0 = catalog size)");
  cmd->add_option("--certify", f.certify, "auto (exact when enumerable) or hoeffding")
      ->check(CLI::IsMember({"auto", "hoeffding"}));
}

struct RiskFlags {
  std::optional<std::string> params_path;
  std::optional<unsigned> k, m;
  std::optional<double> mu, rho, rho_bar;
  std::optional<unsigned> ceiling;
};

void add_risk_flags(CLI::App* cmd, RiskFlags& r, CommonFlags& f) {
  cmd->add_option("--params", r.params_path, "Risk parameter JSON file")->check(CLI::ExistingFile);
  cmd->add_option("--k", r.k, "Number of models");
  cmd->add_option("--m", r.m, "Samples per model");
  cmd->add_option("--mu", r.mu, "Per-sample error rate");
  cmd->add_option("--rho", r.rho, "Intra-model correlation");
  cmd->add_option("--rho-bar", r.rho_bar, "Override the correlation used for N_eff");
  cmd->add_option("--ceiling", r.ceiling, "Largest N for exact enumeration");
  cmd->add_option("--tau", f.tau, "Consensus threshold")->check(CLI::Range(0.5, 1.0));
  cmd->add_option("--epsilon", f.epsilon, "Failure tolerance in (0,1)");
}

std::string risk_params(const RiskFlags& r, const json& cfg) {
  json p;
  if (r.params_path) {
    try {
      p = json::parse(read_input(*r.params_path));
    } catch (const json::exception& e) {
      throw Failure{"params: " + std::string(e.what())};
    }
  } else {
    if (!r.k || !r.m || !r.mu || !r.rho) {
      throw Failure{"give --params or all of --k, --m, --mu, --rho"};
    }
    p = {{"k", *r.k}, {"m", *r.m}, {"mu", *r.mu}, {"rho", *r.rho}};
  }
  if (!p.is_object()) throw Failure{"params must be a JSON object"};
  if (!p.contains("tau")) p["tau"] = cfg.at("tau");
  if (!p.contains("epsilon")) p["epsilon"] = cfg.at("epsilon");
  if (r.rho_bar) p["rho_bar"] = *r.rho_bar;
  if (r.ceiling) p["ceiling"] = *r.ceiling;
  return p.dump();
}

std::vector<double> parse_budgets(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Failure{"bad budget \"" + item + "\""};
    }
  }
  if (out.empty()) throw Failure{"--budgets needs at least one value"};
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"humbr: consensus selection with abstention, risk estimation and ensemble planning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(humbr_version()));

  CommonFlags flags;
  RiskFlags risk;
  std::string input = "-";
  std::vector<std::string> inputs;
  std::string question;
  std::string budgets;

  auto* select = app.add_subcommand("select", "Pick a consensus answer for each pool");
  add_config_flags(select, flags);
  add_selection_flags(select, flags);
  select->add_option("input", input, "Pool file (JSON lines, - for stdin)");

  auto* generate = app.add_subcommand("generate", "Sample candidate pools from the configured providers");
  add_config_flags(generate, flags);
  generate->add_option("--min-pool", flags.min_pool, "Smallest acceptable pool");
  generate->add_option("input", input, "Prompt file (JSON lines, - for stdin)");

  auto* usc = app.add_subcommand("usc", "Universal Self-Consistency baseline using the judge provider");
  add_config_flags(usc, flags);
  usc->add_option("--question", question, "Question shown to the judge")->required();
  usc->add_option("input", input, "Pool file (first pool is used)");

  auto* plan = app.add_subcommand("plan", "Cheapest ensemble meeting the failure tolerance");
  add_config_flags(plan, flags);
  add_planner_flags(plan, flags);

  auto* pareto = app.add_subcommand("pareto", "Cost versus failure-probability frontier");
  add_config_flags(pareto, flags);
  add_planner_flags(pareto, flags);
  pareto->add_option("--budgets", budgets, "Comma-separated budgets")->required();

  auto* riskexact = app.add_subcommand("riskexact", "Exact failure probability and Hoeffding bound");
  add_config_flags(riskexact, flags);
  add_risk_flags(riskexact, risk, flags);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo failure probability");
  add_config_flags(simulate, flags);
  add_risk_flags(simulate, risk, flags);
  simulate->add_option("--trials", flags.trials, "Monte Carlo trials (>= 1000)");

  auto* monitor = app.add_subcommand("monitor", "Per-model divergence report from result files");
  add_config_flags(monitor, flags);
  monitor->add_option("inputs", inputs, "Result files (JSON lines)")->required();

  auto* config = app.add_subcommand("config", "Inspect configuration");
  config->require_subcommand(1);
  std::string validate_path;
  auto* validate = config->add_subcommand("validate", "Check a config file");
  validate->add_option("file", validate_path, "Config file")->required()->check(CLI::ExistingFile);
  auto* show = config->add_subcommand("show", "Print the resolved configuration");
  add_config_flags(show, flags);
  add_selection_flags(show, flags);
  show->add_option("--epsilon", flags.epsilon, "Failure tolerance");
  show->add_option("--min-pool", flags.min_pool, "Smallest acceptable pool");
  show->add_option("--trials", flags.trials, "Monte Carlo trials");
  show->add_option("--catalog", flags.catalog_path, "Model catalog")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*select) {
      Engine engine(flags.resolved());
      const std::string pools = read_input(input);
      Buffer results, diagnostics;
      std::size_t abstained = 0;
      check(humbr_engine_select(engine.get(), pools.c_str(), results.out(), diagnostics.out(),
                                &abstained),
            "select");
      write_output(flags.output, results.view());
      std::cerr << diagnostics.view();
      if (!diagnostics.view().empty()) return kExitError;
      return abstained > 0 ? kExitAbstained : kExitOk;
    }
    if (*generate) {
      Engine engine(flags.resolved());
      const std::string prompts = read_input(input);
      Buffer pools, warnings;
      std::size_t failed = 0;
      const humbr_status st =
          humbr_engine_generate(engine.get(), prompts.c_str(), pools.out(), warnings.out(), &failed);
      std::cerr << warnings.view();
      check(st, "generate");
      write_output(flags.output, pools.view());
      return failed > 0 ? kExitError : kExitOk;
    }
    if (*usc) {
      Engine engine(flags.resolved());
      const std::string pools = read_input(input);
      std::size_t index = 0;
      check(humbr_engine_usc(engine.get(), pools.c_str(), question.c_str(), &index), "usc");
      write_output(flags.output, json({{"selected_index", index}}).dump() + "\n");
      return kExitOk;
    }
    if (*plan) {
      Engine engine(flags.resolved());
      Buffer record;
      int feasible = 0;
      check(humbr_engine_plan(engine.get(), record.out(), &feasible), "plan");
      write_output(flags.output, record.view());
      if (!feasible) {
        std::cerr << "infeasible: no configuration within limits meets epsilon\n";
        return kExitError;
      }
      return kExitOk;
    }
    if (*pareto) {
      Engine engine(flags.resolved());
      const auto grid = parse_budgets(budgets);
      Buffer records;
      check(humbr_engine_pareto(engine.get(), grid.data(), grid.size(), records.out()), "pareto");
      write_output(flags.output, records.view());
      return kExitOk;
    }
    if (*riskexact || *simulate) {
      const json cfg = json::parse(flags.resolved());
      const std::string params = risk_params(risk, cfg);
      Buffer record;
      if (*riskexact) {
        check(humbr_risk_exact(params.c_str(), record.out()), "riskexact");
      } else {
        check(humbr_risk_simulate(params.c_str(), cfg.at("trials").get<std::uint64_t>(),
                                  cfg.at("seed").get<std::uint64_t>(), record.out()),
              "simulate");
      }
      write_output(flags.output, record.view());
      return kExitOk;
    }
    if (*monitor) {
      std::string all;
      for (const auto& path : inputs) {
        all += read_input(path);
        if (!all.empty() && all.back() != '\n') all += '\n';
      }
      Buffer record;
      check(humbr_monitor(all.c_str(), record.out()), "monitor");
      write_output(flags.output, record.view());
      return kExitOk;
    }
    if (*validate) {
      const std::string file = read_input(validate_path);
      Buffer report;
      int valid = 0;
      check(humbr_config_validate(file.c_str(), report.out(), &valid), "config validate");
      std::cout << report.view() << "\n";
      return valid ? kExitOk : kExitError;
    }
    if (*show) {
      write_output(flags.output, flags.resolved() + "\n");
      return kExitOk;
    }
  } catch (const Failure& f) {
    std::cerr << "humbr: " << f.message << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "humbr: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
