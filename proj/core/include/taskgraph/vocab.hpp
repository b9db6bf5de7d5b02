#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace taskgraph {

/// Label vocabularies shared by the data model, the network and all files.
///
/// Object *classes* index node identities (and set d_V = classes + 3). Object
/// *labels* (the targets paired with actions) extend the classes with two
/// reserved entries, `none` (idle hand) and `pad`, appended in that order.
class Vocab {
 public:
  static constexpr std::string_view kIdle = "idle";
  static constexpr std::string_view kPad = "pad";
  static constexpr std::string_view kNone = "none";
  static constexpr std::string_view kRightHand = "right_hand";
  static constexpr std::string_view kLeftHand = "left_hand";

  Vocab() = default;
  Vocab(std::vector<std::string> object_classes, std::vector<std::string> action_labels,
        std::vector<std::string> task_labels, std::vector<std::string> relation_labels);

  /// Inventory used by the synthetic generator.
  static Vocab builtin();

  [[nodiscard]] const std::vector<std::string>& object_classes() const { return objects_; }
  [[nodiscard]] const std::vector<std::string>& action_labels() const { return actions_; }
  [[nodiscard]] const std::vector<std::string>& task_labels() const { return tasks_; }
  [[nodiscard]] const std::vector<std::string>& relation_labels() const { return relations_; }

  [[nodiscard]] int num_object_classes() const { return static_cast<int>(objects_.size()); }
  [[nodiscard]] int num_object_labels() const { return num_object_classes() + 2; }
  [[nodiscard]] int num_actions() const { return static_cast<int>(actions_.size()); }
  [[nodiscard]] int num_tasks() const { return static_cast<int>(tasks_.size()); }
  [[nodiscard]] int num_relations() const { return static_cast<int>(relations_.size()); }

  [[nodiscard]] int node_feature_dim() const { return num_object_classes() + 3; }
  [[nodiscard]] int edge_feature_dim() const { return num_relations(); }
  [[nodiscard]] int global_feature_dim() const { return num_tasks(); }

  [[nodiscard]] int object_class(std::string_view name) const;
  [[nodiscard]] int action(std::string_view name) const;
  [[nodiscard]] int task(std::string_view name) const;
  /// Object label index: a class name, `none` or `pad`.
  [[nodiscard]] int object_label(std::string_view name) const;

  [[nodiscard]] const std::string& action_name(int index) const;
  [[nodiscard]] const std::string& object_class_name(int index) const;
  [[nodiscard]] std::string object_label_name(int index) const;
  [[nodiscard]] const std::string& task_name(int index) const;

  [[nodiscard]] int idle_action() const { return idle_; }
  [[nodiscard]] int pad_action() const { return pad_; }
  [[nodiscard]] int none_object() const { return num_object_classes(); }
  [[nodiscard]] int pad_object() const { return num_object_classes() + 1; }
  [[nodiscard]] int right_hand_class() const { return right_hand_; }
  [[nodiscard]] int left_hand_class() const { return left_hand_; }

  /// Class index after swapping left/right hands (identity for non-hands).
  [[nodiscard]] int mirrored_class(int object_class) const;
  /// Same for object labels (reserved labels map to themselves).
  [[nodiscard]] int mirrored_object_label(int object_label) const;

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.objects_ == b.objects_ && a.actions_ == b.actions_ && a.tasks_ == b.tasks_ &&
           a.relations_ == b.relations_;
  }

 private:
  std::vector<std::string> objects_;
  std::vector<std::string> actions_;
  std::vector<std::string> tasks_;
  std::vector<std::string> relations_;
  std::unordered_map<std::string, int> object_index_;
  std::unordered_map<std::string, int> action_index_;
  std::unordered_map<std::string, int> task_index_;
  int idle_ = -1;
  int pad_ = -1;
  int right_hand_ = -1;
  int left_hand_ = -1;
};

}  // namespace taskgraph
