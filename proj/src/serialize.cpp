#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "metaboost/error.hpp"
#include "metaboost/models.hpp"

namespace metaboost {

namespace {

constexpr std::string_view kMagic = "metaboost-model";
constexpr int kVersion = 1;

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

void write_vector(std::ostream& out, std::string_view tag, const std::vector<double>& v) {
  out << tag << ' ' << v.size();
  for (double x : v) out << ' ' << hex(x);
  out << '\n';
}

void write_tree(std::ostream& out, const Tree& t) {
  out << "tree " << t.nodes.size() << '\n';
  for (const auto& n : t.nodes)
    out << n.feature << ' ' << hex(n.threshold) << ' ' << n.left << ' ' << n.right << ' ' << hex(n.value) << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw ParseError("model file truncated");
    return w;
  }
  void expect(std::string_view tag) {
    auto w = word();
    if (w != tag) throw ParseError("model file: expected \"" + std::string(tag) + "\", found \"" + w + "\"");
  }
  double real() {
    auto w = word();
    char* end = nullptr;
    const double v = std::strtod(w.c_str(), &end);
    if (end != w.c_str() + w.size()) throw ParseError("model file: bad number \"" + w + "\"");
    return v;
  }
  long long integer() {
    auto w = word();
    char* end = nullptr;
    const long long v = std::strtoll(w.c_str(), &end, 10);
    if (end != w.c_str() + w.size()) throw ParseError("model file: bad integer \"" + w + "\"");
    return v;
  }
  std::size_t count() {
    const auto v = integer();
    if (v < 0) throw ParseError("model file: negative count");
    return static_cast<std::size_t>(v);
  }
  std::vector<double> vec(std::string_view tag) {
    expect(tag);
    std::vector<double> v(count());
    for (auto& x : v) x = real();
    return v;
  }
  Tree tree(std::size_t n_features) {
    expect("tree");
    Tree t;
    t.nodes.resize(count());
    const auto n = static_cast<long long>(t.nodes.size());
    for (auto& node : t.nodes) {
      node.feature = static_cast<int>(integer());
      node.threshold = real();
      node.left = static_cast<int>(integer());
      node.right = static_cast<int>(integer());
      node.value = real();
      if (node.feature >= static_cast<long long>(n_features) ||
          (!node.is_leaf() && (node.left <= 0 || node.left >= n || node.right <= 0 || node.right >= n)))
        throw ParseError("model file: malformed tree node");
    }
    if (t.nodes.empty()) throw ParseError("model file: empty tree");
    return t;
  }

 private:
  std::istream& in_;
};

}  // namespace

void save_model(const Model& model, std::ostream& out) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "kind " << model_name(model.kind()) << '\n';
  out << "n_features " << model.n_features() << '\n';
  out << "seed " << model.seed() << '\n';
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DecisionTreeModel>) {
          write_tree(out, m.tree);
        } else if constexpr (std::is_same_v<T, RandomForestModel>) {
          out << "trees " << m.trees.size() << '\n';
          for (const auto& t : m.trees) write_tree(out, t);
        } else if constexpr (std::is_same_v<T, GbtModel>) {
          out << "base_score " << hex(m.base_score) << '\n';
          write_vector(out, "loss_history", m.loss_history);
          out << "trees " << m.trees.size() << '\n';
          for (const auto& t : m.trees) write_tree(out, t);
        } else {
          write_vector(out, "mean", m.scaling.mean());
          write_vector(out, "scale", m.scaling.scale());
          write_vector(out, "weights", m.weights);
          out << "bias " << hex(m.bias) << '\n';
        }
      },
      model.params());
  out << "end\n";
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  save_model(model, out);
}

Model load_model(std::istream& in) {
  while (in.peek() == '#') {
    std::string skipped;
    std::getline(in, skipped);
  }
  Reader r(in);
  r.expect(kMagic);
  if (const auto v = r.integer(); v != kVersion)
    throw ParseError("model file version " + std::to_string(v) + " is not supported");
  r.expect("kind");
  const ModelKind kind = parse_model_kind(r.word());
  r.expect("n_features");
  const std::size_t d = r.count();
  r.expect("seed");
  const auto seed_word = r.word();
  const std::uint64_t seed = std::strtoull(seed_word.c_str(), nullptr, 10);

  auto read_trees = [&] {
    r.expect("trees");
    std::vector<Tree> trees(r.count());
    for (auto& t : trees) t = r.tree(d);
    return trees;
  };

  Model::Params params;
  switch (kind) {
    case ModelKind::decision_tree:
      params = DecisionTreeModel{r.tree(d)};
      break;
    case ModelKind::random_forest:
      params = RandomForestModel{read_trees()};
      break;
    case ModelKind::gbt: {
      GbtModel m;
      r.expect("base_score");
      m.base_score = r.real();
      m.loss_history = r.vec("loss_history");
      m.trees = read_trees();
      params = std::move(m);
      break;
    }
    case ModelKind::logistic_regression: {
      LogisticModel m;
      auto mean = r.vec("mean");
      auto scale = r.vec("scale");
      m.scaling = Standardizer(std::move(mean), std::move(scale));
      m.weights = r.vec("weights");
      r.expect("bias");
      m.bias = r.real();
      if (m.weights.size() != d || m.scaling.dims() != d) throw ParseError("model file: weight count mismatch");
      params = std::move(m);
      break;
    }
  }
  r.expect("end");
  return Model(kind, std::move(params), d, seed);
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file " + path.string());
  return load_model(in);
}

}  // namespace metaboost
