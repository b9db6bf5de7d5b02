#include "taskgraph/dataset/splits.hpp"

#include "taskgraph/errors.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace taskgraph {

std::vector<Fold> split_loso(const std::vector<Demonstration>& demos) {
  std::vector<std::string> subjects;
  for (const Demonstration& d : demos) {
    if (std::ranges::find(subjects, d.subject) == subjects.end()) subjects.push_back(d.subject);
  }
  if (subjects.size() < 2) throw ConfigError("leave-one-subject-out needs at least two subjects");

  std::vector<Fold> folds;
  for (const std::string& s : subjects) {
    Fold fold;
    fold.test_subject = s;
    std::vector<Demonstration> train_demos;
    for (std::size_t i = 0; i < demos.size(); ++i) {
      if (demos[i].subject == s) {
        fold.test.push_back(i);
      } else {
        fold.train.push_back(i);
        train_demos.push_back(demos[i]);
      }
    }
    fold.stats = Standardizer::fit(train_demos);
    folds.push_back(std::move(fold));
  }
  return folds;
}

std::vector<std::vector<std::size_t>> batches(std::size_t count, int batch_size,
                                              std::uint64_t seed, int epoch) {
  if (count == 0) throw ConfigError("cannot batch an empty slice set");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> out;
  const auto b = static_cast<std::size_t>(batch_size);
  for (std::size_t i = 0; i < count; i += b) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(count, i + b)));
  }
  return out;
}

}  // namespace taskgraph
