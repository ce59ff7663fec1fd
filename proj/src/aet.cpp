#include "psp/aet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace psp {

void update_features(FeatureState& st, double ip, double norm, bool topk_changed) {
  if (!std::isfinite(ip)) throw DataError("NonFiniteValue: ip in feature update");
  if (!(norm > 0)) throw DataError("InvalidParam: norm must be positive in feature update");
  st.min_norm = std::min(st.min_norm, norm);
  st.max_ip = std::max(st.max_ip, ip);
  double obs[4];
  obs[0] = ip;
  obs[1] = norm / st.min_norm;
  obs[2] = std::abs(st.max_ip) < 1e-300 ? 1.0 : ip / st.max_ip;
  obs[3] = topk_changed ? 1.0 : 0.0;
  if (!st.primed) {
    for (int i = 0; i < 4; ++i) st.f[i] = obs[i];
    st.primed = true;
  } else {
    for (int i = 0; i < 4; ++i) st.f[i] = st.beta * st.f[i] + (1.0 - st.beta) * obs[i];
  }
}

namespace {

bool leaf_stops(uint32_t pos, uint32_t neg, float theta) {
  // neg > theta*pos; 0*inf = NaN compares false, so theta=inf never stops
  return static_cast<double>(neg) > static_cast<double>(theta) * static_cast<double>(pos);
}

double gini(uint64_t pos, uint64_t neg) {
  uint64_t tot = pos + neg;
  if (tot == 0) return 0.0;
  double p = static_cast<double>(pos) / static_cast<double>(tot);
  return 2.0 * p * (1.0 - p);
}

struct SplitChoice {
  bool found = false;
  uint8_t feature = 0;
  float threshold = 0.f;
  double impurity = 0.0;
};

SplitChoice best_split(const std::vector<TrainRow>& rows, const std::vector<uint32_t>& idx) {
  SplitChoice best;
  double best_imp = 0.0;
  uint64_t tot_pos = 0, tot_neg = 0;
  for (uint32_t i : idx) (rows[i].label ? tot_pos : tot_neg)++;
  const double parent = gini(tot_pos, tot_neg);
  best_imp = parent;
  for (uint8_t feat = 0; feat < 4; ++feat) {
    // sort row indices by feature value; scan split points between distinct values
    std::vector<std::pair<float, uint8_t>> vals;
    vals.reserve(idx.size());
    for (uint32_t i : idx) vals.emplace_back(rows[i].f[feat], rows[i].label);
    std::sort(vals.begin(), vals.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    uint64_t lp = 0, ln = 0;
    for (size_t i = 0; i + 1 < vals.size(); ++i) {
      (vals[i].second ? lp : ln)++;
      if (vals[i].first == vals[i + 1].first) continue;
      uint64_t rp = tot_pos - lp, rn = tot_neg - ln;
      double w = static_cast<double>(idx.size());
      double imp = (static_cast<double>(lp + ln) / w) * gini(lp, ln) +
                   (static_cast<double>(rp + rn) / w) * gini(rp, rn);
      if (imp + 1e-12 < best_imp) {
        best_imp = imp;
        best.found = true;
        best.feature = feat;
        // midpoint threshold; left branch takes f < threshold
        best.threshold = 0.5f * (vals[i].first + vals[i + 1].first);
        best.impurity = imp;
      }
    }
  }
  return best;
}

uint32_t grow(AetModel& model, const std::vector<TrainRow>& rows, std::vector<uint32_t> idx,
              uint32_t depth, uint32_t max_depth) {
  uint32_t me = static_cast<uint32_t>(model.nodes.size());
  model.nodes.emplace_back();
  uint32_t pos = 0, neg = 0;
  for (uint32_t i : idx) (rows[i].label ? pos : neg)++;
  model.nodes[me].pos = pos;
  model.nodes[me].neg = neg;
  if (depth >= max_depth || pos == 0 || neg == 0 || idx.size() < 4) return me;
  SplitChoice split = best_split(rows, idx);
  if (!split.found) return me;
  std::vector<uint32_t> li, ri;
  for (uint32_t i : idx) (rows[i].f[split.feature] < split.threshold ? li : ri).push_back(i);
  if (li.empty() || ri.empty()) return me;
  idx.clear();
  idx.shrink_to_fit();
  uint32_t l = grow(model, rows, std::move(li), depth + 1, max_depth);
  uint32_t r = grow(model, rows, std::move(ri), depth + 1, max_depth);
  model.nodes[me].feature = split.feature;
  model.nodes[me].threshold = split.threshold;
  model.nodes[me].left = l;
  model.nodes[me].right = r;
  return me;
}

// collapse internal nodes whose two children are leaves with the same verdict
// at theta; returns true when the node became a leaf
bool prune_same(AetModel& model, uint32_t at, float theta) {
  AetTreeNode& nd = model.nodes[at];
  if (nd.is_leaf()) return true;
  bool lf = prune_same(model, nd.left, theta);
  bool rf = prune_same(model, nd.right, theta);
  if (lf && rf) {
    const AetTreeNode& l = model.nodes[nd.left];
    const AetTreeNode& r = model.nodes[nd.right];
    if (leaf_stops(l.pos, l.neg, theta) == leaf_stops(r.pos, r.neg, theta)) {
      nd.left = nd.right = 0;  // counts already aggregated at this node
      return true;
    }
  }
  return nd.is_leaf();
}

// drop unreachable nodes after pruning and renumber depth-first
void compact(AetModel& model) {
  std::vector<AetTreeNode> out;
  struct Item {
    uint32_t old_id;
    uint32_t parent;  // index in `out`
    bool is_left;
  };
  std::vector<Item> stack{{0, UINT32_MAX, false}};
  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    uint32_t nid = static_cast<uint32_t>(out.size());
    out.push_back(model.nodes[it.old_id]);
    if (it.parent != UINT32_MAX) {
      if (it.is_left)
        out[it.parent].left = nid;
      else
        out[it.parent].right = nid;
    }
    const AetTreeNode& src = model.nodes[it.old_id];
    if (!src.is_leaf()) {
      // push right first so left is emitted (and numbered) first
      stack.push_back({src.right, nid, false});
      stack.push_back({src.left, nid, true});
    } else {
      out[nid].left = out[nid].right = 0;
    }
  }
  model.nodes = std::move(out);
}

void collect_rules(const AetModel& model, uint32_t at, std::vector<AetRule::Cond>& path,
                   std::vector<AetRule>& rules) {
  const AetTreeNode& nd = model.nodes[at];
  if (nd.is_leaf()) {
    rules.push_back({path, nd.pos, nd.neg});
    return;
  }
  path.push_back({nd.feature, true, nd.threshold});
  collect_rules(model, nd.left, path, rules);
  path.back().less = false;
  collect_rules(model, nd.right, path, rules);
  path.pop_back();
}

}  // namespace

void AetModel::compile_rules() {
  rules.clear();
  if (nodes.empty()) return;
  std::vector<AetRule::Cond> path;
  collect_rules(*this, 0, path, rules);
}

AetModel train_tree(const std::vector<TrainRow>& rows, uint32_t max_depth, float theta) {
  if (rows.empty()) throw DataError("InvalidParam: no training rows");
  if (max_depth > 4) throw DataError("InvalidParam: tree depth capped at 4 (one per feature)");
  bool has_pos = false, has_neg = false;
  for (const auto& r : rows) (r.label ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw DataError("SingleClassData: training rows are all '" +
                    std::string(has_pos ? "continue" : "stop") + "'");
  AetModel model;
  model.theta = theta;
  std::vector<uint32_t> idx(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) idx[i] = static_cast<uint32_t>(i);
  grow(model, rows, std::move(idx), 0, max_depth);
  prune_same(model, 0, theta);
  compact(model);
  model.compile_rules();
  return model;
}

bool aet_evaluate(const AetModel& model, const FeatureState& st, float theta) {
  for (const AetRule& rule : model.rules) {
    bool match = true;
    for (const auto& c : rule.conds) {
      bool lt = st.f[c.feature] < c.threshold;
      if (lt != c.less) {
        match = false;
        break;
      }
    }
    if (match) return leaf_stops(rule.pos, rule.neg, theta);
  }
  throw InternalError("rule list not exhaustive");
}

bool aet_evaluate(const AetModel& model, const FeatureState& st) {
  return aet_evaluate(model, st, model.theta);
}

bool aet_evaluate_tree(const AetModel& model, const FeatureState& st, float theta) {
  if (model.nodes.empty()) throw DataError("InvalidParam: empty model");
  uint32_t at = 0;
  while (!model.nodes[at].is_leaf()) {
    const AetTreeNode& nd = model.nodes[at];
    at = st.f[nd.feature] < nd.threshold ? nd.left : nd.right;
  }
  return leaf_stops(model.nodes[at].pos, model.nodes[at].neg, theta);
}

bool aet_evaluate_tree(const AetModel& model, const FeatureState& st) {
  return aet_evaluate_tree(model, st, model.theta);
}

std::string export_rules(const AetModel& model) {
  std::ostringstream os;
  bool first = true;
  for (const AetRule& rule : model.rules) {
    if (!leaf_stops(rule.pos, rule.neg, model.theta)) continue;
    os << (first ? "if (" : "else if (");
    first = false;
    if (rule.conds.empty()) os << "true";
    for (size_t i = 0; i < rule.conds.size(); ++i) {
      const auto& c = rule.conds[i];
      if (i) os << " & ";
      os << "F" << static_cast<int>(c.feature) + 1 << (c.less ? " < " : " >= ") << c.threshold;
    }
    os << ") stop;\n";
  }
  if (first)
    os << "continue;\n";
  else
    os << "else continue;\n";
  return os.str();
}

std::vector<char> serialize_aet(const AetModel& model) {
  std::vector<char> buf;
  uint32_t cnt = static_cast<uint32_t>(model.nodes.size());
  buf.insert(buf.end(), reinterpret_cast<char*>(&cnt), reinterpret_cast<char*>(&cnt) + 4);
  for (const AetTreeNode& nd : model.nodes) {
    buf.push_back(static_cast<char>(nd.feature));
    const char* t = reinterpret_cast<const char*>(&nd.threshold);
    buf.insert(buf.end(), t, t + 4);
    for (uint32_t v : {nd.left, nd.right, nd.pos, nd.neg}) {
      const char* p = reinterpret_cast<const char*>(&v);
      buf.insert(buf.end(), p, p + 4);
    }
  }
  const char* th = reinterpret_cast<const char*>(&model.theta);
  buf.insert(buf.end(), th, th + 4);
  return buf;
}

AetModel deserialize_aet(const char* bytes, size_t len) {
  if (len < 8) throw DataError("MalformedRecord: AET section too short");
  AetModel model;
  uint32_t cnt;
  std::memcpy(&cnt, bytes, 4);
  size_t need = 4 + static_cast<size_t>(cnt) * 21 + 4;
  if (cnt == 0 || len != need)
    throw DataError("MalformedRecord: AET section size mismatch");
  size_t off = 4;
  model.nodes.resize(cnt);
  for (uint32_t i = 0; i < cnt; ++i) {
    AetTreeNode& nd = model.nodes[i];
    nd.feature = static_cast<uint8_t>(bytes[off]);
    off += 1;
    std::memcpy(&nd.threshold, bytes + off, 4);
    off += 4;
    std::memcpy(&nd.left, bytes + off, 4);
    off += 4;
    std::memcpy(&nd.right, bytes + off, 4);
    off += 4;
    std::memcpy(&nd.pos, bytes + off, 4);
    off += 4;
    std::memcpy(&nd.neg, bytes + off, 4);
    off += 4;
    if (nd.feature > 3) throw DataError("MalformedRecord: AET feature index out of range");
    if ((nd.left == 0) != (nd.right == 0) || nd.left >= cnt || nd.right >= cnt)
      throw DataError("MalformedRecord: AET child links inconsistent");
    if (!std::isfinite(nd.threshold))
      throw DataError("NonFiniteValue: AET threshold");
  }
  std::memcpy(&model.theta, bytes + off, 4);
  if (std::isnan(model.theta) || model.theta < 0)
    throw DataError("MalformedRecord: AET theta invalid");
  // reject cycles / unreachable-node padding: every non-root node must be
  // referenced exactly once and children must point forward
  std::vector<uint32_t> refs(cnt, 0);
  for (uint32_t i = 0; i < cnt; ++i) {
    const AetTreeNode& nd = model.nodes[i];
    if (!nd.is_leaf()) {
      if (nd.left <= i || nd.right <= i)
        throw DataError("MalformedRecord: AET child links not forward");
      refs[nd.left]++;
      refs[nd.right]++;
    }
  }
  for (uint32_t i = 1; i < cnt; ++i)
    if (refs[i] != 1) throw DataError("MalformedRecord: AET node reference count");
  model.compile_rules();
  return model;
}

}  // namespace psp
