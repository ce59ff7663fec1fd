#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "psp/common.hpp"

namespace psp {

// Streaming per-query features observed at each pool expansion ("pop"):
//   f1  EMA of the popped node's inner product with the query
//   f2  EMA of (popped norm / running min norm)
//   f3  EMA of (popped ip / running max ip)
//   f4  EMA of a 0/1 indicator: did this pop land in the current top-k
// Running min/max update BEFORE the EMAs; the first observation initializes
// each EMA to its raw value.
struct FeatureState {
  double beta = 0.9;
  bool primed = false;
  double min_norm = std::numeric_limits<double>::infinity();
  double max_ip = -std::numeric_limits<double>::infinity();
  std::array<double, 4> f{0, 0, 0, 0};

  explicit FeatureState(double b = 0.9) : beta(b) {}
};

void update_features(FeatureState& st, double ip, double norm, bool topk_changed);

// Binary decision tree, node 0 = root; a node with left == 0 is a leaf
// (node 0 is always the root, so 0 can never be a real child).
// Leaves carry training counts: pos = continue rows, neg = stop rows.
// A leaf votes stop iff neg > theta * pos — IEEE semantics give the intended
// edge cases (pos = 0 stops for finite theta; theta = inf never stops).
struct AetTreeNode {
  uint8_t feature = 0;
  float threshold = 0.f;
  uint32_t left = 0;
  uint32_t right = 0;
  uint32_t pos = 0;
  uint32_t neg = 0;

  bool is_leaf() const { return left == 0; }
};

// Tree compiled to an ordered list of conjunctive rules (one per leaf, in
// left-to-right leaf order). The runtime evaluator walks the rule list; the
// raw tree is kept for serialization and as an independent check.
struct AetRule {
  struct Cond {
    uint8_t feature;
    bool less;  // true: f[feature] < threshold, false: >=
    float threshold;
  };
  std::vector<Cond> conds;
  uint32_t pos = 0, neg = 0;
};

struct AetModel {
  std::vector<AetTreeNode> nodes;
  float theta = 2.0f;
  std::vector<AetRule> rules;  // derived, rebuilt by compile_rules()

  void compile_rules();
};

struct TrainRow {
  std::array<float, 4> f;
  uint8_t label;  // 1 = continue, 0 = stop
};

// CART with Gini impurity, depth capped at max_depth (default 4 = #features),
// sibling leaves with identical predictions at `theta` collapsed.
// Throws SingleClassData when all labels agree.
AetModel train_tree(const std::vector<TrainRow>& rows, uint32_t max_depth = 4,
                    float theta = 2.0f);

// stop/continue decision via the compiled rule list
bool aet_evaluate(const AetModel& model, const FeatureState& st);
bool aet_evaluate(const AetModel& model, const FeatureState& st, float theta);
// independent route used by the fidelity property test
bool aet_evaluate_tree(const AetModel& model, const FeatureState& st);
bool aet_evaluate_tree(const AetModel& model, const FeatureState& st, float theta);

// clause text in the style of: "if (F4 < 0.5 & F3 < 0.6) stop;"
std::string export_rules(const AetModel& model);

std::vector<char> serialize_aet(const AetModel& model);
AetModel deserialize_aet(const char* bytes, size_t len);

}  // namespace psp
