#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "anx/error.hpp"
#include "anx/learners.hpp"
#include "learners/internal.hpp"

namespace anx {

namespace {

constexpr double kProbClip = 1e-6;
constexpr double kMinGain = 1e-12;

double clip_prob(double p) { return std::clamp(p, kProbClip, 1.0 - kProbClip); }

double point_loss(int y, double raw) {
  const double p = clip_prob(detail::sigmoid(raw));
  return y == 1 ? -std::log(p) : -std::log(1.0 - p);
}

struct NodeStats {
  double w = 0.0;   // sum of weights
  double wr = 0.0;  // sum of weight * residual
  std::size_t count = 0;
};

struct SplitChoice {
  double gain = kMinGain;
  int feature = -1;
  double threshold = 0.0;
};

// Level-wise growth on presorted columns: one pass per (level, feature).
RegressionTree grow_tree(const Matrix& xs, const std::vector<std::vector<std::size_t>>& order,
                         const std::vector<double>& resid, const std::vector<double>& w, int max_depth,
                         int min_leaf, std::vector<int>& node_of) {
  const std::size_t n = xs.rows();
  RegressionTree tree;
  tree.nodes.push_back({});
  std::fill(node_of.begin(), node_of.end(), 0);
  std::vector<int> frontier = {0};
  const auto min_count = static_cast<std::size_t>(min_leaf);

  for (int depth = 0; depth < max_depth && !frontier.empty(); ++depth) {
    const std::size_t n_nodes = tree.nodes.size();
    std::vector<NodeStats> total(n_nodes);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = total[static_cast<std::size_t>(node_of[i])];
      s.w += w[i];
      s.wr += w[i] * resid[i];
      ++s.count;
    }
    std::vector<char> active(n_nodes, 0);
    for (int nd : frontier) {
      if (total[static_cast<std::size_t>(nd)].count >= 2 * min_count) active[static_cast<std::size_t>(nd)] = 1;
    }

    std::vector<SplitChoice> best(n_nodes);
    std::vector<NodeStats> left(n_nodes);
    std::vector<double> last(n_nodes);
    for (std::size_t f = 0; f < xs.cols(); ++f) {
      std::fill(left.begin(), left.end(), NodeStats{});
      for (std::size_t i : order[f]) {
        const auto nd = static_cast<std::size_t>(node_of[i]);
        if (!active[nd]) continue;
        const double v = xs(i, f);
        NodeStats& l = left[nd];
        const NodeStats& t = total[nd];
        if (l.count >= min_count && t.count - l.count >= min_count && v > last[nd]) {
          const double rw = t.w - l.w;
          const double rwr = t.wr - l.wr;
          const double gain = l.wr * l.wr / l.w + rwr * rwr / rw - t.wr * t.wr / t.w;
          if (gain > best[nd].gain) best[nd] = {gain, static_cast<int>(f), 0.5 * (last[nd] + v)};
        }
        l.w += w[i];
        l.wr += w[i] * resid[i];
        ++l.count;
        last[nd] = v;
      }
    }

    std::vector<int> next;
    std::vector<int> left_child(n_nodes, -1), right_child(n_nodes, -1);
    for (int nd : frontier) {
      const auto u = static_cast<std::size_t>(nd);
      if (!active[u] || best[u].feature < 0) continue;
      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      tree.nodes.push_back({});
      tree.nodes[u].feature = best[u].feature;
      tree.nodes[u].threshold = best[u].threshold;
      tree.nodes[u].left = l;
      tree.nodes[u].right = l + 1;
      left_child[u] = l;
      right_child[u] = l + 1;
      next.push_back(l);
      next.push_back(l + 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(node_of[i]);
      if (u >= n_nodes || left_child[u] < 0) continue;
      const auto& node = tree.nodes[u];
      node_of[i] = xs(i, static_cast<std::size_t>(node.feature)) <= node.threshold ? left_child[u] : right_child[u];
    }
    frontier = std::move(next);
  }
  return tree;
}

}  // namespace

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t k = 0;
  while (nodes[k].feature >= 0) {
    const auto& nd = nodes[k];
    k = static_cast<std::size_t>(x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right);
  }
  return nodes[k].value;
}

double weighted_logloss(std::span<const double> prob, std::span<const int> y, std::span<const double> w) {
  double acc = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    const double p = clip_prob(prob[i]);
    acc += wi * (y[i] == 1 ? -std::log(p) : -std::log(1.0 - p));
    wsum += wi;
  }
  return acc / wsum;
}

TrainedModel fit_gbc(const Matrix& x, std::span<const int> y, std::span<const double> w_in, const FitConfig& cfg) {
  // A single-class set is accepted: the clipped prior alone predicts it.
  detail::check_training_set(x, y, /*require_both_classes=*/false);
  const auto w = detail::resolve_weights(w_in, x.rows());

  TrainedModel model;
  model.kind = ModelKind::gbc;
  model.config = cfg;
  model.scaler = Scaler::fit(x);
  const Matrix xs = model.scaler.transform(x);
  const std::size_t n = xs.rows();

  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  double wy = 0.0;
  for (std::size_t i = 0; i < n; ++i) wy += w[i] * y[i];
  const double prior = clip_prob(wy / wsum);

  GbcParams p;
  p.learning_rate = cfg.learning_rate;
  p.init_score = std::log(prior / (1.0 - prior));

  std::vector<std::vector<std::size_t>> order(xs.cols(), std::vector<std::size_t>(n));
  for (std::size_t f = 0; f < xs.cols(); ++f) {
    std::iota(order[f].begin(), order[f].end(), std::size_t{0});
    std::stable_sort(order[f].begin(), order[f].end(), [&](std::size_t a, std::size_t b) { return xs(a, f) < xs(b, f); });
  }

  std::vector<double> raw(n, p.init_score), prob(n), resid(n);
  std::vector<int> node_of(n, 0);
  auto current_loss = [&] {
    for (std::size_t i = 0; i < n; ++i) prob[i] = detail::sigmoid(raw[i]);
    return weighted_logloss(prob, y, w);
  };
  p.stage_loss.push_back(current_loss());

  for (int stage = 0; stage < cfg.n_trees; ++stage) {
    for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - prob[i];
    RegressionTree tree = grow_tree(xs, order, resid, w, cfg.max_depth, cfg.min_leaf, node_of);

    // Newton leaf values, halved until the leaf's own weighted loss does not rise.
    std::vector<std::vector<std::size_t>> members(tree.nodes.size());
    for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(node_of[i])].push_back(i);
    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
      if (tree.nodes[k].feature >= 0 || members[k].empty()) continue;
      double num = 0.0, den = 0.0;
      for (std::size_t i : members[k]) {
        num += w[i] * resid[i];
        den += w[i] * prob[i] * (1.0 - prob[i]);
      }
      double value = den > 0.0 ? num / den : 0.0;
      auto leaf_loss = [&](double v) {
        double acc = 0.0;
        for (std::size_t i : members[k]) acc += w[i] * point_loss(y[i], raw[i] + cfg.learning_rate * v);
        return acc;
      };
      const double base = leaf_loss(0.0);
      int halvings = 0;
      while (leaf_loss(value) > base && halvings < 60) {
        value *= 0.5;
        ++halvings;
      }
      if (halvings == 60) value = 0.0;
      tree.nodes[k].value = value;
    }
    for (std::size_t i = 0; i < n; ++i) {
      raw[i] += cfg.learning_rate * tree.nodes[static_cast<std::size_t>(node_of[i])].value;
    }
    p.stage_loss.push_back(current_loss());
    p.trees.push_back(std::move(tree));
  }

  model.params = std::move(p);
  return model;
}

}  // namespace anx
