#include "taskgraph/vocab.hpp"

#include "taskgraph/errors.hpp"
#include "taskgraph/relations.hpp"

namespace taskgraph {
namespace {

std::unordered_map<std::string, int> index_of(const std::vector<std::string>& names,
                                              const char* what) {
  std::unordered_map<std::string, int> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].empty()) throw ConfigError(std::string("empty ") + what + " label");
    if (!out.emplace(names[i], static_cast<int>(i)).second) {
      throw ConfigError(std::string("duplicate ") + what + " label: " + names[i]);
    }
  }
  return out;
}

int lookup(const std::unordered_map<std::string, int>& map, std::string_view name,
           const char* what) {
  auto it = map.find(std::string(name));
  if (it == map.end()) throw InputError(std::string("unknown ") + what + ": " + std::string(name));
  return it->second;
}

}  // namespace

Vocab::Vocab(std::vector<std::string> object_classes, std::vector<std::string> action_labels,
             std::vector<std::string> task_labels, std::vector<std::string> relation_labels)
    : objects_(std::move(object_classes)),
      actions_(std::move(action_labels)),
      tasks_(std::move(task_labels)),
      relations_(std::move(relation_labels)) {
  object_index_ = index_of(objects_, "object class");
  action_index_ = index_of(actions_, "action");
  task_index_ = index_of(tasks_, "task");
  (void)index_of(relations_, "relation");

  for (const auto& name : {std::string(kNone), std::string(kPad)}) {
    if (object_index_.contains(name)) {
      throw ConfigError("object class name is reserved: " + name);
    }
  }
  auto find = [](const auto& map, std::string_view name, const char* what) {
    auto it = map.find(std::string(name));
    if (it == map.end()) {
      throw ConfigError(std::string(what) + " vocabulary must contain '" + std::string(name) + "'");
    }
    return it->second;
  };
  idle_ = find(action_index_, kIdle, "action");
  pad_ = find(action_index_, kPad, "action");
  right_hand_ = find(object_index_, kRightHand, "object");
  left_hand_ = find(object_index_, kLeftHand, "object");
  if (tasks_.empty()) throw ConfigError("task vocabulary is empty");
  if (relations_.size() != kRelationNames.size()) {
    throw ConfigError("relation vocabulary must have " + std::to_string(kRelationNames.size()) +
                      " labels");
  }
  for (std::size_t i = 0; i < relations_.size(); ++i) {
    if (relations_[i] != kRelationNames[i]) {
      throw ConfigError("relation label " + std::to_string(i) + " must be " +
                        std::string(kRelationNames[i]));
    }
  }
}

Vocab Vocab::builtin() {
  std::vector<std::string> relations(kRelationNames.begin(), kRelationNames.end());
  return Vocab({"right_hand", "left_hand", "bowl", "whisk", "bottle", "cup", "sponge", "plate",
                "cube", "ball", "spoon"},
               {"idle", "approach", "lift", "place", "retreat", "hold", "pour", "stir", "insert",
                "wipe", "pad"},
               {"cooking", "insert", "wiping"}, std::move(relations));
}

int Vocab::object_class(std::string_view name) const {
  return lookup(object_index_, name, "object class");
}

int Vocab::action(std::string_view name) const { return lookup(action_index_, name, "action"); }

int Vocab::task(std::string_view name) const { return lookup(task_index_, name, "task"); }

int Vocab::object_label(std::string_view name) const {
  if (name == kNone) return none_object();
  if (name == kPad) return pad_object();
  return object_class(name);
}

const std::string& Vocab::action_name(int index) const {
  if (index < 0 || index >= num_actions()) throw InputError("action index out of range");
  return actions_[static_cast<std::size_t>(index)];
}

const std::string& Vocab::object_class_name(int index) const {
  if (index < 0 || index >= num_object_classes()) {
    throw InputError("object class index out of range");
  }
  return objects_[static_cast<std::size_t>(index)];
}

std::string Vocab::object_label_name(int index) const {
  if (index == none_object()) return std::string(kNone);
  if (index == pad_object()) return std::string(kPad);
  return object_class_name(index);
}

const std::string& Vocab::task_name(int index) const {
  if (index < 0 || index >= num_tasks()) throw InputError("task index out of range");
  return tasks_[static_cast<std::size_t>(index)];
}

int Vocab::mirrored_class(int object_class) const {
  if (object_class == right_hand_) return left_hand_;
  if (object_class == left_hand_) return right_hand_;
  return object_class;
}

int Vocab::mirrored_object_label(int object_label) const {
  if (object_label >= num_object_classes()) return object_label;
  return mirrored_class(object_label);
}

}  // namespace taskgraph
