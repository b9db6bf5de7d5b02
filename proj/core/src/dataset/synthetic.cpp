#include "taskgraph/dataset/synthetic.hpp"

#include "taskgraph/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>

namespace taskgraph {

namespace {

constexpr double kRestHeight = 0.03;   // object centers resting on the table
constexpr double kGraspHeight = 0.03;  // hand center above a grasped object
constexpr double kLiftHeight = 0.12;
constexpr double kMinSeparation = 0.08;
constexpr int kFrameCap = 20000;

const Point kRightHome(0.25, 0.0, 0.15);
const Point kLeftHome(-0.25, 0.0, 0.15);

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
}

ScriptStep step(std::string action, std::string object, int lo, int hi, std::string target = "",
                std::string after = "", std::string tag = "") {
  return ScriptStep{std::move(action), std::move(object), std::move(target), lo, hi,
                    std::move(after),  std::move(tag)};
}

struct HandState {
  std::vector<const ScriptStep*> steps;
  std::size_t next = 0;
  const ScriptStep* active = nullptr;
  int start = 0;
  int duration = 0;
  Point from;
  Point home;
  int holding = -1;
  std::set<std::string> done_tags;
  bool finished = false;
};

struct Attachment {
  int parent = -1;
  Point offset = Point::Zero();
};

class TakeSimulator {
 public:
  TakeSimulator(const SyntheticTaskSpec& spec, const Vocab& vocab, std::mt19937_64& rng,
                const Point& workspace_offset, double speed)
      : spec_(spec), vocab_(vocab), rng_(rng), offset_(workspace_offset), speed_(speed) {}

  Demonstration run() {
    place_objects();
    build_scripts();

    Demonstration demo;
    demo.roster = roster_;
    demo.frame_rate = spec_.frame_rate;

    const int lead_in = uniform_int(rng_, spec_.lead_in_min, spec_.lead_in_max);
    for (int f = 0; f < lead_in; ++f) emit(demo);

    int frame = 0;
    while (!(hands_[kRight].finished && hands_[kLeft].finished)) {
      if (frame > kFrameCap) throw ConfigError("synthetic script deadlocks: " + spec_.task);
      for (int h = 0; h < kNumHands; ++h) advance(h, frame);
      for (int h = 0; h < kNumHands; ++h) move_hand(h, frame);
      resolve_attachments();
      emit(demo);
      ++frame;
    }
    const int tail = uniform_int(rng_, spec_.tail_min, spec_.tail_max);
    for (int f = 0; f < tail; ++f) emit(demo);
    return demo;
  }

 private:
  void place_objects() {
    roster_ = {vocab_.right_hand_class(), vocab_.left_hand_class()};
    positions_ = {kRightHome + offset_, kLeftHome + offset_};

    int required = 0;
    std::vector<std::size_t> optional;
    for (std::size_t i = 0; i < spec_.roles.size(); ++i) {
      if (spec_.roles[i].optional) {
        optional.push_back(i);
      } else {
        ++required;
      }
    }
    const int lo = std::max(0, spec_.min_objects - 2 - required);
    const int hi = std::min(static_cast<int>(optional.size()), spec_.max_objects - 2 - required);
    const int extra = uniform_int(rng_, lo, std::max(lo, hi));
    std::shuffle(optional.begin(), optional.end(), rng_);
    std::set<std::size_t> chosen(optional.begin(), optional.begin() + extra);

    for (std::size_t i = 0; i < spec_.roles.size(); ++i) {
      const ObjectRole& role = spec_.roles[i];
      if (role.optional && !chosen.contains(i)) continue;
      const auto& cls = role.classes[static_cast<std::size_t>(
          uniform_int(rng_, 0, static_cast<int>(role.classes.size()) - 1))];
      Point p;
      for (int attempt = 0; attempt < 200; ++attempt) {
        p = Point(uniform(rng_, role.region_min.x(), role.region_max.x()),
                  uniform(rng_, role.region_min.y(), role.region_max.y()), kRestHeight) +
            Point(offset_.x(), offset_.y(), 0.0);
        bool clear = true;
        for (std::size_t n = 2; n < positions_.size(); ++n) {
          clear = clear && (positions_[n] - p).head<2>().norm() >= kMinSeparation;
        }
        if (clear) break;
      }
      role_node_[role.name] = static_cast<int>(roster_.size());
      roster_.push_back(vocab_.object_class(cls));
      positions_.push_back(p);
    }
    homes_ = positions_;
    attach_.assign(positions_.size(), Attachment{});
  }

  void build_scripts() {
    for (int h = 0; h < kNumHands; ++h) {
      std::vector<const SubTask*> order;
      for (const SubTask& s : spec_.scripts[static_cast<std::size_t>(h)]) order.push_back(&s);
      for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i + 1;
        if (order[i]->shuffle_group >= 0) {
          while (j < order.size() && order[j]->shuffle_group == order[i]->shuffle_group) ++j;
          std::shuffle(order.begin() + static_cast<std::ptrdiff_t>(i),
                       order.begin() + static_cast<std::ptrdiff_t>(j), rng_);
        }
        i = j;
      }
      HandState& hs = hands_[static_cast<std::size_t>(h)];
      for (const SubTask* s : order) {
        for (const ScriptStep& st : s->steps) hs.steps.push_back(&st);
      }
      hs.home = positions_[static_cast<std::size_t>(h)];
      hs.from = hs.home;
      hs.finished = hs.steps.empty();
    }
  }

  int node(const std::string& role) const {
    auto it = role_node_.find(role);
    if (it == role_node_.end()) throw ConfigError("unresolved object role: " + role);
    return it->second;
  }

  void advance(int h, int frame) {
    HandState& hs = hands_[static_cast<std::size_t>(h)];
    const HandState& other = hands_[static_cast<std::size_t>(1 - h)];
    if (hs.active != nullptr && frame - hs.start >= hs.duration) {
      finish_step(h);
    }
    if (hs.active != nullptr || hs.finished) return;
    if (hs.next >= hs.steps.size()) {
      hs.finished = true;
      return;
    }
    const ScriptStep& st = *hs.steps[hs.next];
    if (!st.after.empty()) {
      const bool ready = st.after == "*" ? other.finished : other.done_tags.contains(st.after);
      if (!ready) return;
    }
    hs.active = &st;
    ++hs.next;
    hs.start = frame;
    const int base = uniform_int(rng_, st.min_frames, st.max_frames);
    hs.duration = std::max(2, static_cast<int>(std::lround(base * speed_)));
    hs.from = positions_[static_cast<std::size_t>(h)];
    if (st.action == "lift") {
      const int o = node(st.object);
      hs.holding = o;
      attach_[static_cast<std::size_t>(o)] = {h, positions_[static_cast<std::size_t>(o)] - hs.from};
    }
  }

  void finish_step(int h) {
    HandState& hs = hands_[static_cast<std::size_t>(h)];
    const ScriptStep& st = *hs.active;
    if (st.action == "place" && hs.holding >= 0) {
      attach_[static_cast<std::size_t>(hs.holding)] = {};
      hs.holding = -1;
    } else if (st.action == "insert" && hs.holding >= 0) {
      const int t = node(st.target);
      const auto o = static_cast<std::size_t>(hs.holding);
      attach_[o] = {t, positions_[o] - positions_[static_cast<std::size_t>(t)]};
      hs.holding = -1;
    }
    if (!st.tag.empty()) hs.done_tags.insert(st.tag);
    hs.active = nullptr;
    if (hs.next >= hs.steps.size()) hs.finished = true;
  }

  void move_hand(int h, int frame) {
    HandState& hs = hands_[static_cast<std::size_t>(h)];
    Point& pos = positions_[static_cast<std::size_t>(h)];
    if (hs.active == nullptr) return;
    const ScriptStep& st = *hs.active;
    const int k = frame - hs.start + 1;
    const double tau = static_cast<double>(k) / hs.duration;
    const double side = h == kRight ? 1.0 : -1.0;
    const double two_pi = 2.0 * std::numbers::pi;

    Point target = hs.from;
    Point wobble = Point::Zero();
    double s = min_jerk(tau);
    const auto at = [&](const std::string& role) {
      return positions_[static_cast<std::size_t>(node(role))];
    };

    if (st.action == "approach") {
      target = at(st.object) + Point(0, 0, kGraspHeight);
    } else if (st.action == "lift") {
      target = hs.from + Point(0, 0, kLiftHeight);
    } else if (st.action == "pour") {
      target = at(st.target) + Point(side * 0.07, 0.0, 0.15);
      s = min_jerk(tau / 0.5);
      if (tau > 0.5) wobble.z() = 0.01 * std::sin(two_pi * (tau - 0.5) * hs.duration / 12.0);
    } else if (st.action == "stir") {
      target = at(st.target) + Point(0, 0, 0.09);
      s = min_jerk(tau / 0.3);
      if (tau > 0.3) {
        const double phi = two_pi * (tau - 0.3) * hs.duration / 15.0;
        wobble = Point(0.025 * (std::cos(phi) - 1.0), 0.025 * std::sin(phi), 0.0);
      }
    } else if (st.action == "wipe") {
      target = at(st.target) + Point(0, 0, 0.07);
      s = min_jerk(tau / 0.3);
      if (tau > 0.3) wobble.x() = 0.05 * std::sin(two_pi * (tau - 0.3) * hs.duration / 20.0);
    } else if (st.action == "insert") {
      target = at(st.target) + Point(0, 0, 0.06);
    } else if (st.action == "place") {
      if (hs.holding >= 0) {
        const auto o = static_cast<std::size_t>(hs.holding);
        target = homes_[o] - attach_[o].offset;
      }
    } else if (st.action == "hold") {
      wobble.z() = 0.004 * std::sin(two_pi * k / 25.0);
    } else if (st.action == "retreat") {
      target = hs.home;
    }
    pos = hs.from + s * (target - hs.from) + wobble;
  }

  void resolve_attachments() {
    for (int pass = 0; pass < 3; ++pass) {
      for (std::size_t n = 2; n < positions_.size(); ++n) {
        if (attach_[n].parent >= 0) {
          positions_[n] = positions_[static_cast<std::size_t>(attach_[n].parent)] + attach_[n].offset;
        }
      }
    }
  }

  HandLabel label(int h) const {
    const HandState& hs = hands_[static_cast<std::size_t>(h)];
    if (hs.active != nullptr) {
      const ScriptStep& st = *hs.active;
      const int obj = st.object.empty() ? vocab_.none_object()
                                        : roster_[static_cast<std::size_t>(node(st.object))];
      return {vocab_.action(st.action), obj};
    }
    if (hs.holding >= 0) {
      return {vocab_.action("hold"), roster_[static_cast<std::size_t>(hs.holding)]};
    }
    return {vocab_.idle_action(), vocab_.none_object()};
  }

  void emit(Demonstration& demo) const {
    Frame f;
    f.frame_id = demo.num_frames();
    f.positions = positions_;
    f.hands = {label(kRight), label(kLeft)};
    demo.frames.push_back(std::move(f));
  }

  const SyntheticTaskSpec& spec_;
  const Vocab& vocab_;
  std::mt19937_64& rng_;
  Point offset_;
  double speed_;

  std::vector<int> roster_;
  std::vector<Point> positions_;
  std::vector<Point> homes_;
  std::vector<Attachment> attach_;
  std::map<std::string, int> role_node_;
  std::array<HandState, kNumHands> hands_;
};

}  // namespace

double min_jerk(double s) {
  s = std::clamp(s, 0.0, 1.0);
  const double s3 = s * s * s;
  return s3 * (10.0 - 15.0 * s + 6.0 * s * s);
}

void SyntheticTaskSpec::validate(const Vocab& vocab) const {
  (void)vocab.task(task);
  std::set<std::string> required;
  std::set<std::string> names;
  int optional_count = 0;
  for (const ObjectRole& r : roles) {
    if (!names.insert(r.name).second) throw ConfigError("duplicate object role: " + r.name);
    if (r.classes.empty()) throw ConfigError("object role without classes: " + r.name);
    for (const auto& c : r.classes) {
      const int cls = vocab.object_class(c);
      if (cls == vocab.right_hand_class() || cls == vocab.left_hand_class()) {
        throw ConfigError("object role cannot be a hand: " + r.name);
      }
    }
    if (r.optional) {
      ++optional_count;
    } else {
      required.insert(r.name);
    }
  }
  const int base = 2 + static_cast<int>(required.size());
  if (min_objects > max_objects || max_objects < base || min_objects > base + optional_count) {
    throw ConfigError("object count range incompatible with the roles of " + task);
  }
  for (const auto& script : scripts) {
    std::set<int> closed;
    int previous = -1;
    for (const SubTask& s : script) {
      if (s.shuffle_group != previous) {
        if (previous >= 0) closed.insert(previous);
        if (s.shuffle_group >= 0 && closed.contains(s.shuffle_group)) {
          throw ConfigError("shuffle group sub-tasks must be consecutive");
        }
        previous = s.shuffle_group;
      }
      for (const ScriptStep& st : s.steps) {
        (void)vocab.action(st.action);
        for (const std::string* role : {&st.object, &st.target}) {
          if (!role->empty() && !required.contains(*role)) {
            throw ConfigError("unresolvable object role in script: " + *role);
          }
        }
        if (st.min_frames < 2 || st.max_frames < st.min_frames) {
          throw ConfigError("step durations must satisfy 2 <= min <= max");
        }
      }
    }
  }
  if (noise_stddev < 0 || workspace_offset < 0 || speed_min <= 0 || speed_max < speed_min ||
      lead_in_min < 0 || lead_in_max < lead_in_min || tail_min < 0 || tail_max < tail_min ||
      frame_rate <= 0) {
    throw ConfigError("invalid synthetic timing/noise parameters");
  }
}

SyntheticTaskSpec builtin_task_spec(const std::string& task) {
  SyntheticTaskSpec s;
  s.task = task;
  if (task == "cooking") {
    s.roles = {
        {"bowl", {"bowl"}, Point(-0.03, 0.22, 0), Point(0.03, 0.28, 0), false},
        {"pourer", {"bottle", "cup"}, Point(-0.26, 0.26, 0), Point(-0.16, 0.36, 0), false},
        {"whisk", {"whisk", "spoon"}, Point(0.16, 0.26, 0), Point(0.26, 0.36, 0), false},
        {"distractor", {"plate", "sponge"}, Point(-0.05, 0.40, 0), Point(0.05, 0.45, 0), true},
    };
    s.min_objects = 5;
    s.max_objects = 6;
    s.scripts[kLeft] = {{{
        step("approach", "pourer", 20, 30),
        step("lift", "pourer", 10, 15),
        step("pour", "pourer", 30, 45, "bowl"),
        step("place", "pourer", 20, 25),
        step("retreat", "pourer", 15, 25, "", "", "poured"),
        step("approach", "bowl", 15, 25),
        step("lift", "bowl", 8, 12, "", "", "bowl_up"),
        step("hold", "bowl", 20, 30),
        step("place", "bowl", 15, 25, "", "*"),
        step("retreat", "bowl", 15, 25),
    }}};
    s.scripts[kRight] = {{{
        step("approach", "whisk", 28, 36, "", "poured"),
        step("lift", "whisk", 10, 15),
        step("stir", "whisk", 40, 60, "bowl", "bowl_up"),
        step("place", "whisk", 20, 25),
        step("retreat", "whisk", 15, 25),
    }}};
  } else if (task == "insert") {
    s.roles = {
        {"bowl", {"bowl"}, Point(-0.10, 0.20, 0), Point(-0.02, 0.28, 0), false},
        {"item_a", {"cube"}, Point(0.08, 0.12, 0), Point(0.32, 0.40, 0), false},
        {"item_b", {"ball"}, Point(0.08, 0.12, 0), Point(0.32, 0.40, 0), false},
        {"item_c", {"spoon"}, Point(0.08, 0.12, 0), Point(0.32, 0.40, 0), false},
        {"distractor", {"cup", "plate"}, Point(-0.32, 0.30, 0), Point(-0.22, 0.40, 0), true},
    };
    s.min_objects = 6;
    s.max_objects = 7;
    s.scripts[kLeft] = {{{
        step("approach", "bowl", 15, 25),
        step("lift", "bowl", 8, 12, "", "", "bowl_up"),
        step("hold", "bowl", 20, 30),
        step("place", "bowl", 15, 25, "", "*"),
        step("retreat", "bowl", 15, 25),
    }}};
    for (const char* item : {"item_a", "item_b", "item_c"}) {
      s.scripts[kRight].push_back(SubTask{{
                                              step("approach", item, 15, 25, "", "bowl_up"),
                                              step("lift", item, 8, 12),
                                              step("insert", item, 20, 30, "bowl"),
                                              step("retreat", item, 12, 20),
                                          },
                                          0});
    }
  } else if (task == "wiping") {
    s.roles = {
        {"plate", {"plate"}, Point(-0.08, 0.22, 0), Point(0.0, 0.30, 0), false},
        {"sponge", {"sponge"}, Point(0.16, 0.20, 0), Point(0.28, 0.34, 0), false},
        {"distractor_a", {"cup"}, Point(-0.30, 0.30, 0), Point(-0.20, 0.40, 0), true},
        {"distractor_b", {"ball", "cube"}, Point(0.05, 0.40, 0), Point(0.15, 0.45, 0), true},
    };
    s.min_objects = 4;
    s.max_objects = 6;
    s.scripts[kLeft] = {{{
        step("approach", "plate", 15, 25),
        step("lift", "plate", 8, 12, "", "", "plate_up"),
        step("hold", "plate", 20, 30),
        step("place", "plate", 15, 25, "", "*"),
        step("retreat", "plate", 15, 25),
    }}};
    s.scripts[kRight] = {{{
        step("approach", "sponge", 20, 30, "", "plate_up"),
        step("lift", "sponge", 8, 12),
        step("wipe", "sponge", 40, 60, "plate"),
        step("place", "sponge", 20, 25),
        step("retreat", "sponge", 15, 25),
    }}};
  } else {
    throw ConfigError("no builtin synthetic task named " + task);
  }
  return s;
}

std::vector<Demonstration> generate_synthetic(const SyntheticTaskSpec& spec, const Vocab& vocab,
                                              int subjects, int takes, std::uint64_t seed,
                                              const GeneratorOptions& options) {
  if (subjects < 1 || takes < 1) throw ConfigError("subject and take counts must be >= 1");
  spec.validate(vocab);
  std::vector<Demonstration> out;
  for (int s = 0; s < subjects; ++s) {
    std::seed_seq style_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                            0x5eedu, static_cast<std::uint32_t>(s)};
    std::mt19937_64 style_rng(style_seq);
    const Point offset(uniform(style_rng, -spec.workspace_offset, spec.workspace_offset),
                       uniform(style_rng, -spec.workspace_offset, spec.workspace_offset), 0.0);
    const double speed = uniform(style_rng, spec.speed_min, spec.speed_max);

    for (int t = 0; t < takes; ++t) {
      std::seed_seq take_seq{static_cast<std::uint32_t>(seed),
                             static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(s),
                             static_cast<std::uint32_t>(t)};
      std::mt19937_64 rng(take_seq);
      Demonstration demo = TakeSimulator(spec, vocab, rng, offset, speed).run();
      demo.subject = "s" + std::to_string(s + 1);
      demo.task = vocab.task(spec.task);
      demo.take = t;
      if (spec.noise_stddev > 0) {
        std::normal_distribution<double> noise(0.0, spec.noise_stddev);
        for (Frame& f : demo.frames) {
          for (Point& p : f.positions) p += Point(noise(rng), noise(rng), noise(rng));
        }
      }
      recompute_relations(demo, options.thresholds, options.relation_step);
      validate(demo, vocab);
      out.push_back(std::move(demo));
    }
  }
  return out;
}

std::vector<HandLabel> primitive_sequence(const Demonstration& demo, int hand, const Vocab& vocab) {
  std::vector<HandLabel> seq;
  for (const Frame& f : demo.frames) {
    const HandLabel& l = f.hands[static_cast<std::size_t>(hand)];
    if (l.action == vocab.idle_action()) continue;
    if (seq.empty() || !(seq.back() == l)) seq.push_back(l);
  }
  return seq;
}

}  // namespace taskgraph
