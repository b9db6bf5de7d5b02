#include "commands.hpp"
#include "manifest.hpp"

#include "taskgraph/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace taskgraph::cli;

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

// Non-negative, with "inf" allowed (oldest prediction only).
const CLI::Validator kDecay(
    [](const std::string& v) -> std::string {
      double d = 0.0;
      try {
        d = std::stod(v);
      } catch (const std::exception&) {
        return "not a number: " + v;
      }
      return d >= 0.0 ? std::string() : "decay must be >= 0";
    },
    "DECAY>=0");

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--jobs", c.jobs, "Concurrent workers")->check(CLI::PositiveNumber);
  app->add_option("--config", c.config, "Run config file (key = value)")->check(CLI::ExistingFile);
  app->add_option("--set", c.sets, "Config override key=value (repeatable, wins over --config)");
  app->add_option("--manifest", c.manifest, "Where to write the run manifest");
}

int run(std::vector<std::string> args, const std::vector<std::string>* recorded = nullptr);

int replay(const std::string& path) {
  const RunManifest m = read_manifest(path);
  for (const HashedFile& f : m.inputs) {
    if (sha256_file(f.path) != f.sha256) {
      throw taskgraph::InputError("input changed since the manifest was written: " + f.path);
    }
  }
  std::vector<std::string> args = m.argv;
  for (const auto& [key, value] : m.config) {
    args.push_back("--set");
    args.push_back(key + "=" + value);
  }
  return run(args, &m.argv);
}

int run(std::vector<std::string> args, const std::vector<std::string>* recorded) {
  CLI::App app{"Scene-graph task learning: data, training, evaluation and online action selection",
               "taskgraph"};
  app.require_subcommand(1);
  Common common;
  common.argv = recorded != nullptr ? *recorded : args;

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic demonstration dataset");
  add_common(gen_cmd, common);
  gen_cmd->add_option("--task", gen.task, "cooking | insert | wiping")
      ->check(CLI::IsMember({"cooking", "insert", "wiping"}));
  gen_cmd->add_option("--subjects", gen.subjects)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--takes", gen.takes, "Takes per subject")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_flag("--relations", gen.relations, "Store relation rows in the take files");

  const std::vector<std::string> encoders = {"mpnn", "dreher", "rgcn", "transformer", "none"};
  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Leave-one-subject-out training (or --all)");
  add_common(train_cmd, common);
  train_cmd->add_option("--data", tr.data, "Dataset directory")->required();
  train_cmd->add_option("--out", tr.out, "Run directory")->required();
  train_cmd->add_option("--encoder", tr.encoder)->check(CLI::IsMember(encoders));
  train_cmd->add_flag("--all", tr.all, "Train one model on every take, no held-out subject");
  train_cmd->add_flag("--quiet", tr.quiet, "No per-epoch log lines");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate trained runs on their held-out subjects");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--data", ev.data, "Dataset directory")->required();
  eval_cmd->add_option("--run", ev.runs, "Run directory written by train (repeatable)")->required();
  eval_cmd->add_option("--encoder", ev.encoders, "Only rows of these variants")
      ->check(CLI::IsMember(encoders));
  eval_cmd->add_flag("--best", ev.best, "Use best-validation checkpoints");
  eval_cmd->add_option("--out", ev.out, "Report file (JSON)");

  RolloutArgs ro;
  auto* rollout_cmd = app.add_subcommand("rollout", "Ensembled per-step predictions over one take");
  add_common(rollout_cmd, common);
  rollout_cmd->add_option("--checkpoint", ro.checkpoint)->required()->check(CLI::ExistingFile);
  rollout_cmd->add_option("--input", ro.input, "Take file")->required()->check(CLI::ExistingFile);
  rollout_cmd->add_option("--out", ro.out, "Output records (default stdout)");
  rollout_cmd->add_option("--decay", ro.decay, "Ensemble decay m (inf: oldest only)")->check(kDecay);

  FinetuneArgs ft;
  auto* finetune_cmd = app.add_subcommand("finetune", "Train the decoder with the encoder frozen");
  add_common(finetune_cmd, common);
  finetune_cmd->add_option("--checkpoint", ft.checkpoint)->required()->check(CLI::ExistingFile);
  finetune_cmd->add_option("--data", ft.data, "Dataset directory")->required();
  finetune_cmd->add_option("--out", ft.out, "Output checkpoint")->required();

  SelectArgs sel;
  auto* select_cmd = app.add_subcommand("select-action", "Online action selection over a frame stream");
  add_common(select_cmd, common);
  select_cmd->add_option("--checkpoint", sel.checkpoint)->required()->check(CLI::ExistingFile);
  select_cmd->add_option("--input", sel.input, "Take file, or - for standard input");
  select_cmd->add_option("--decay", sel.decay, "Ensemble decay m (inf: oldest only)")->check(kDecay);
  select_cmd->add_option("--primitive-frames", sel.primitive_frames, "Frames a triggered primitive runs")
      ->check(CLI::PositiveNumber);

  GradCheckArgs gc;
  auto* grad_cmd = app.add_subcommand("grad-check", "Finite-difference check of the joint loss");
  add_common(grad_cmd, common);
  grad_cmd->add_option("--samples", gc.samples)->check(CLI::PositiveNumber);
  grad_cmd->add_option("--nodes", gc.nodes)->check(CLI::Range(2, 64));
  grad_cmd->add_option("--tolerance", gc.tolerance)->check(CLI::PositiveNumber);
  grad_cmd->add_option("--step", gc.step)->check(CLI::PositiveNumber);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulated execution trials with precondition checks");
  add_common(sim_cmd, common);
  sim_cmd->add_option("--task", sim.task)->check(CLI::IsMember({"cooking", "insert", "wiping"}));
  sim_cmd->add_option("--predictor", sim.predictor, "oracle | drop | model")
      ->check(CLI::IsMember({"oracle", "drop", "model"}));
  sim_cmd->add_option("--checkpoint", sim.checkpoint)->check(CLI::ExistingFile);
  sim_cmd->add_option("--trials", sim.trials)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--drop-index", sim.drop_index, "Left-hand reference entry never proposed");
  sim_cmd->add_option("--drop-trial", sim.drop_trial, "Trial to drop it in (-1: all)");
  sim_cmd->add_option("--primitive-frames", sim.primitive_frames)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--step-cap", sim.step_cap)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--decay", sim.decay, "Ensemble decay m (inf: oldest only)")->check(kDecay);
  sim_cmd->add_option("--out", sim.out, "Trial report (JSON)");

  std::string manifest_path;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a run manifest");
  replay_cmd->add_option("manifest", manifest_path)->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  if (*gen_cmd) return gen_data(common, gen);
  if (*train_cmd) return train(common, tr);
  if (*eval_cmd) return eval(common, ev);
  if (*rollout_cmd) return rollout(common, ro);
  if (*finetune_cmd) return finetune(common, ft);
  if (*select_cmd) return select_action(common, sel);
  if (*grad_cmd) return grad_check(common, gc);
  if (*sim_cmd) return simulate(common, sim);
  if (*replay_cmd) return replay(manifest_path);
  return kUsageError;
}

}  // namespace

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  try {
    return run(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const taskgraph::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}
