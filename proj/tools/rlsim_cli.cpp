// Command-line front end: dataset generation, curation prefilter, scheduler
// simulation and ablations, toy GRPO training, and report rendering.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "rlsim/harness.hpp"

namespace {

using namespace rlsim;

std::string resolve_out(const std::string& path) {
  const char* dir = std::getenv("RLSIM_OUT_DIR");
  if (dir == nullptr || path.empty() || std::filesystem::path(path).is_absolute()) return path;
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / path).string();
}

int cmd_gen_data(const std::string& config, std::uint64_t seed, const std::string& out_path) {
  ExperimentSpec spec = config.empty() ? default_toy_spec() : load_experiment_spec(config);
  auto problems = generate_dataset(spec.synth, seed);
  save_dataset(problems, resolve_out(out_path));
  std::cout << "wrote " << problems.size() << " problems to " << resolve_out(out_path) << "\n";
  return 0;
}

int cmd_prefilter(const std::string& data, int rollouts, double threshold, std::uint64_t seed,
                  const std::string& out_path) {
  auto problems = load_dataset(data);
  auto outcome = run_prefilter(problems, rollouts, threshold, seed);
  save_dataset(outcome.kept, resolve_out(out_path));
  std::cout << "kept " << outcome.kept.size() << ", dropped easy " << outcome.dropped_easy
            << ", dropped unsolvable " << outcome.dropped_unsolvable << "\n";
  return 0;
}

int cmd_simulate(const std::string& config, const std::string& mode, std::uint64_t seed, int steps,
                 const std::string& out_path) {
  ExperimentSpec spec = config.empty() ? ExperimentSpec{} : load_experiment_spec(config);
  SimConfig cfg = config.empty() ? SimConfig{} : spec.sim;
  cfg.mode = mode_from_string(mode);
  cfg.seed = seed;
  std::ofstream out(resolve_out(out_path));
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << "step,mode,wall_time,gpu_busy_time,gpu_idle_time,gpu_idle_ratio,launched,"
         "valid_generated,aborted,sample_waste_ratio\n";
  PassStats carry{cfg.initial_invalid_rate / 2.0, cfg.initial_invalid_rate / 2.0};
  for (int s = 0; s < steps; ++s) {
    StepResult r = run_step(cfg, s, nullptr, &carry);
    const auto& m = r.metrics;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d,%s,%.6f,%.6f,%.6f,%.6f,%d,%d,%d,", s,
                  to_string(cfg.mode).c_str(), m.wall_time, m.gpu_busy_time, m.gpu_idle_time,
                  m.gpu_idle_ratio(), m.launched, m.valid_generated, m.aborted);
    out << buf << (m.waste_defined ? std::to_string(m.sample_waste_ratio) : std::string("/"))
        << "\n";
  }
  std::cout << "wrote " << steps << " steps to " << resolve_out(out_path) << "\n";
  return 0;
}

int cmd_ablate(const std::string& config, std::uint64_t seed, int steps,
               const std::string& out_path, bool with_validation, int validation_problems) {
  ExperimentSpec spec = config.empty() ? ExperimentSpec{} : load_experiment_spec(config);
  SimConfig cfg = config.empty() ? SimConfig{} : spec.sim;
  cfg.seed = seed;
  std::vector<EngineMode> modes = {EngineMode::kStatic, EngineMode::kNaiveDynamic,
                                   EngineMode::kSeamlessNoAsyncNoEarlyTerm,
                                   EngineMode::kSeamlessNoEarlyTerm, EngineMode::kSeamless};
  auto rows = run_ablation(cfg, modes, steps);
  write_ablation_csv(rows, resolve_out(out_path));
  std::cout << render_report(rows);
  if (with_validation) {
    auto vm = run_validation(validation_problems, cfg);
    std::cout << "\n" << render_validation_report(vm);
  }
  return 0;
}

int cmd_train_toy(const std::string& config, std::uint64_t seed, const std::string& out_path) {
  ExperimentSpec spec = config.empty() ? default_toy_spec() : load_experiment_spec(config);
  ToyTrainingResult result = run_toy_training(spec, seed);
  write_training_csv(result, resolve_out(out_path));
  const auto& first = result.iterations.front();
  const auto& last = result.iterations.back();
  std::cout << "iterations " << result.iterations.size() << ": mean reward "
            << first.mean_reward << " -> " << last.mean_reward << ", pool " << last.pool_size
            << ", hard problems with signal " << result.hard_problems_with_signal << "/"
            << result.hard_problem_count << "\n";
  return 0;
}

int cmd_report(const std::string& in_path, const std::string& out_path) {
  auto rows = read_ablation_csv(in_path);
  std::string table = render_report(rows);
  if (!out_path.empty()) {
    std::ofstream out(resolve_out(out_path));
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << table;
  }
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RL rollout scheduling simulator and toy GRPO trainer"};
  app.require_subcommand(1);

  std::string config, data, mode = "seamless", out_path, in_path;
  std::uint64_t seed = 0;
  int steps = 5, rollouts = 16, iterations = 0, validation_problems = 256;
  double threshold = 0.9;
  bool with_validation = false;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--config", config);
  gen->add_option("--seed", seed);
  gen->add_option("--out", out_path)->required();

  auto* pre = app.add_subcommand("prefilter", "Pass-rate curation prefilter");
  pre->add_option("--data", data)->required();
  pre->add_option("--rollouts", rollouts);
  pre->add_option("--threshold", threshold);
  pre->add_option("--seed", seed);
  pre->add_option("--out", out_path)->required();

  auto* sim = app.add_subcommand("simulate", "Run scheduler steps in one mode");
  sim->add_option("--config", config);
  sim->add_option("--mode", mode);
  sim->add_option("--seed", seed);
  sim->add_option("--steps", steps);
  sim->add_option("--out", out_path)->required();

  auto* abl = app.add_subcommand("ablate", "Compare scheduler modes");
  abl->add_option("--config", config);
  abl->add_option("--seed", seed);
  abl->add_option("--steps", steps);
  abl->add_option("--out", out_path)->required();
  abl->add_flag("--validation", with_validation, "Also run the validation comparison");
  abl->add_option("--validation-problems", validation_problems);

  auto* toy = app.add_subcommand("train-toy", "End-to-end toy GRPO training");
  toy->add_option("--config", config);
  toy->add_option("--seed", seed);
  toy->add_option("--iterations", iterations);
  toy->add_option("--out", out_path)->required();

  auto* rep = app.add_subcommand("report", "Render a metrics CSV as a table");
  rep->add_option("--in", in_path)->required();
  rep->add_option("--out", out_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(config, seed, out_path);
    if (pre->parsed()) return cmd_prefilter(data, rollouts, threshold, seed, out_path);
    if (sim->parsed()) return cmd_simulate(config, mode, seed, steps, out_path);
    if (abl->parsed()) return cmd_ablate(config, seed, steps, out_path, with_validation, validation_problems);
    if (toy->parsed()) {
      if (iterations > 0) {
        ExperimentSpec spec = config.empty() ? rlsim::default_toy_spec() : rlsim::load_experiment_spec(config);
        spec.iterations = iterations;
        auto result = rlsim::run_toy_training(spec, seed);
        rlsim::write_training_csv(result, resolve_out(out_path));
        std::cout << "iterations " << result.iterations.size() << ": mean reward "
                  << result.iterations.front().mean_reward << " -> " << result.final_mean_reward
                  << "\n";
        return 0;
      }
      return cmd_train_toy(config, seed, out_path);
    }
    if (rep->parsed()) return cmd_report(in_path, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
