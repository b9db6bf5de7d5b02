#pragma once

#include "taskgraph/config.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace taskgraph::cli {

/// Flags shared by every subcommand.
struct Common {
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string config;              // key = value file
  std::vector<std::string> sets;   // key=value overrides, applied after the file
  std::string manifest;            // manifest path override
  std::vector<std::string> argv;   // full argument list, for the manifest
};

struct GenDataArgs {
  std::string task = "cooking";
  int subjects = 4;
  int takes = 10;
  std::string out;
  bool relations = false;
};

struct TrainArgs {
  std::string data;
  std::string out;
  std::string encoder;
  bool all = false;
  bool quiet = false;
};

struct EvalArgs {
  std::string data;
  std::vector<std::string> runs;
  std::vector<std::string> encoders;
  bool best = false;
  std::string out;
};

struct RolloutArgs {
  std::string checkpoint;
  std::string input;
  std::string out;
  std::optional<double> decay;
};

struct FinetuneArgs {
  std::string checkpoint;
  std::string data;
  std::string out;
};

struct SelectArgs {
  std::string checkpoint;
  std::string input = "-";
  std::optional<double> decay;
  int primitive_frames = 12;
};

struct GradCheckArgs {
  int samples = 200;
  int nodes = 4;
  double tolerance = 1e-3;
  double step = 1e-5;
};

struct SimulateArgs {
  std::string task = "cooking";
  std::string predictor = "oracle";  // oracle | drop | model
  std::string checkpoint;
  int trials = 10;
  int drop_index = 0;
  int drop_trial = -1;
  int primitive_frames = 12;
  int step_cap = 3000;
  std::optional<double> decay;
  std::string out;
};

int gen_data(const Common& c, const GenDataArgs& a);
int train(const Common& c, const TrainArgs& a);
int eval(const Common& c, const EvalArgs& a);
int rollout(const Common& c, const RolloutArgs& a);
int finetune(const Common& c, const FinetuneArgs& a);
int select_action(const Common& c, const SelectArgs& a);
int grad_check(const Common& c, const GradCheckArgs& a);
int simulate(const Common& c, const SimulateArgs& a);

/// Config precedence: `base`, then the config file, then --set entries.
[[nodiscard]] RunConfig resolve_config(RunConfig base, const Common& c);

}  // namespace taskgraph::cli
