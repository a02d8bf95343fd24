#include "metaboost/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "metaboost/error.hpp"

namespace metaboost {

double Tree::predict(std::span<const double> row) const {
  int i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = row[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[i].value;
}

int Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  // Children are always appended after their parent.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) continue;
    d[nodes[i].left] = d[i] + 1;
    d[nodes[i].right] = d[i] + 1;
    best = std::max(best, d[i] + 1);
  }
  return best;
}

namespace {

using RowList = std::vector<std::uint32_t>;

struct GiniCriterion {
  struct Stats {
    double n0 = 0, n1 = 0;
    double n() const { return n0 + n1; }
  };
  std::span<const int> y;
  std::size_t min_samples_split;

  void add(Stats& s, std::uint32_t r) const { (y[r] ? s.n1 : s.n0) += 1.0; }
  Stats minus(const Stats& a, const Stats& b) const { return {a.n0 - b.n0, a.n1 - b.n1}; }
  static double impurity(const Stats& s) { return s.n() - (s.n0 * s.n0 + s.n1 * s.n1) / s.n(); }
  bool splittable(const Stats& s) const {
    return s.n0 > 0 && s.n1 > 0 && s.n() >= static_cast<double>(min_samples_split);
  }
  std::optional<double> gain(const Stats& l, const Stats& r, const Stats& parent) const {
    return impurity(parent) - impurity(l) - impurity(r);
  }
  double floor() const { return -std::numeric_limits<double>::infinity(); }
  double leaf(const Stats& s) const { return s.n1 / s.n(); }
};

struct GradientCriterion {
  struct Stats {
    double g = 0, h = 0;
  };
  std::span<const double> grad;
  std::span<const double> hess;
  BoostTreeParams p;

  void add(Stats& s, std::uint32_t r) const {
    s.g += grad[r];
    s.h += hess[r];
  }
  Stats minus(const Stats& a, const Stats& b) const { return {a.g - b.g, a.h - b.h}; }
  bool splittable(const Stats&) const { return true; }
  double term(const Stats& s) const { return s.g * s.g / (s.h + p.reg_lambda); }
  std::optional<double> gain(const Stats& l, const Stats& r, const Stats& parent) const {
    if (l.h < p.min_child_weight || r.h < p.min_child_weight) return std::nullopt;
    return 0.5 * (term(l) + term(r) - term(parent)) - p.gamma;
  }
  double floor() const { return 0.0; }
  double leaf(const Stats& s) const { return -p.learning_rate * s.g / (s.h + p.reg_lambda); }
};

template <class Criterion>
class Builder {
 public:
  Builder(const Matrix& x, Criterion crit, int max_depth, std::size_t max_features, Rng* rng)
      : x_(x), crit_(std::move(crit)), max_depth_(max_depth), max_features_(max_features), rng_(rng),
        go_left_(x.rows(), 0) {}

  Tree build(std::span<const std::uint32_t> rows) {
    const std::size_t d = x_.cols();
    std::vector<RowList> lists(d, RowList(rows.begin(), rows.end()));
    for (std::size_t f = 0; f < d; ++f) {
      std::sort(lists[f].begin(), lists[f].end(), [&](auto a, auto b) {
        const double va = x_(a, f), vb = x_(b, f);
        return va < vb || (va == vb && a < b);
      });
    }
    grow(std::move(lists), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  void scan(const RowList& list, std::size_t f, const typename Criterion::Stats& total, Split& best) const {
    typename Criterion::Stats left;
    for (std::size_t i = 0; i + 1 < list.size(); ++i) {
      crit_.add(left, list[i]);
      const double a = x_(list[i], f);
      const double b = x_(list[i + 1], f);
      if (!(b > a)) continue;
      auto g = crit_.gain(left, crit_.minus(total, left), total);
      if (!g || !(*g > best.gain)) continue;
      double thr = a + (b - a) / 2.0;
      if (!(thr < b)) thr = a;
      best = {static_cast<int>(f), thr, *g};
    }
  }

  Split find_split(const std::vector<RowList>& lists, const typename Criterion::Stats& total) {
    const std::size_t d = lists.size();
    Split best;
    best.gain = crit_.floor();
    if (max_features_ == 0 || max_features_ >= d) {
      for (std::size_t f = 0; f < d; ++f) scan(lists[f], f, total, best);
      return best;
    }
    std::vector<std::size_t> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(perm, *rng_);
    std::vector<std::size_t> first(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(max_features_));
    std::sort(first.begin(), first.end());
    for (auto f : first) scan(lists[f], f, total, best);
    // Keep drawing features until some split is admissible.
    for (std::size_t i = max_features_; i < d && best.feature < 0; ++i) scan(lists[perm[i]], perm[i], total, best);
    return best;
  }

  int make_leaf(const typename Criterion::Stats& s) {
    TreeNode n;
    n.value = crit_.leaf(s);
    tree_.nodes.push_back(n);
    return static_cast<int>(tree_.nodes.size()) - 1;
  }

  int grow(std::vector<RowList> lists, int depth) {
    typename Criterion::Stats total;
    for (auto r : lists.front()) crit_.add(total, r);
    const bool depth_left = max_depth_ < 0 || depth < max_depth_;
    if (!depth_left || !crit_.splittable(total) || lists.front().size() < 2) return make_leaf(total);
    const Split split = find_split(lists, total);
    if (split.feature < 0) return make_leaf(total);

    for (auto r : lists.front()) go_left_[r] = x_(r, split.feature) <= split.threshold;
    std::vector<RowList> left(lists.size()), right(lists.size());
    for (std::size_t f = 0; f < lists.size(); ++f) {
      for (auto r : lists[f]) (go_left_[r] ? left[f] : right[f]).push_back(r);
      RowList().swap(lists[f]);
    }

    const int index = static_cast<int>(tree_.nodes.size());
    TreeNode node;
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.value = crit_.leaf(total);
    tree_.nodes.push_back(node);
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    tree_.nodes[index].left = l;
    tree_.nodes[index].right = r;
    return index;
  }

  const Matrix& x_;
  Criterion crit_;
  int max_depth_;
  std::size_t max_features_;
  Rng* rng_;
  std::vector<char> go_left_;
  Tree tree_;
};

std::vector<std::uint32_t> to_u32(std::span<const std::size_t> rows) {
  return std::vector<std::uint32_t>(rows.begin(), rows.end());
}

}  // namespace

Tree build_cart(const Matrix& x, std::span<const int> y, std::span<const std::size_t> rows, const CartParams& params,
                Rng& rng) {
  if (rows.empty()) throw FitError("cannot grow a tree on zero rows");
  Builder<GiniCriterion> b(x, GiniCriterion{y, params.min_samples_split}, params.max_depth, params.max_features, &rng);
  const auto r = to_u32(rows);
  return b.build(r);
}

Tree build_boost_tree(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
                      const BoostTreeParams& params) {
  if (x.rows() == 0) throw FitError("cannot grow a tree on zero rows");
  std::vector<std::uint32_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), 0u);
  Builder<GradientCriterion> b(x, GradientCriterion{grad, hess, params}, params.max_depth, 0, nullptr);
  return b.build(rows);
}

}  // namespace metaboost
