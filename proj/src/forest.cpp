#include "pfgap/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <stdexcept>

#include "pfgap/parallel.hpp"

namespace pfgap {

double gini_impurity(const std::vector<int>& class_counts) {
    long total = 0;
    for (int c : class_counts) total += c;
    if (total == 0) return 0.0;
    double sum_sq = 0.0;
    for (int c : class_counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

double gini_gain(const std::vector<int>& parent_counts,
                 const std::vector<std::vector<int>>& child_counts) {
    long parent_total = 0;
    for (int c : parent_counts) parent_total += c;
    if (parent_total == 0) return 0.0;
    double weighted = 0.0;
    for (const auto& child : child_counts) {
        long child_total = 0;
        for (int c : child) child_total += c;
        weighted += (static_cast<double>(child_total) / static_cast<double>(parent_total)) *
                    gini_impurity(child);
    }
    return gini_impurity(parent_counts) - weighted;
}

BootstrapSample bootstrap_sample(int n, RandomStream& rng) {
    if (n < 2) throw std::invalid_argument("bootstrap: need at least 2 series");
    BootstrapSample s;
    s.inbag_count.assign(n, 0);
    for (int k = 0; k < n; ++k) ++s.inbag_count[rng.next_index(static_cast<std::size_t>(n))];
    for (int i = 0; i < n; ++i)
        if (s.inbag_count[i] == 0) s.oob.push_back(i);
    return s;
}

namespace {

// Distinct indices with bootstrap multiplicities; the working set of a node.
struct NodeData {
    std::vector<int> indices;
    std::vector<int> counts;

    long total() const {
        long t = 0;
        for (int c : counts) t += c;
        return t;
    }
};

struct GrowContext {
    const TimeSeriesDataset& data;
    const ForestConfig& config;
    const DatasetStats& stats;
    std::vector<MeasureKind> pool;  // kinds usable at this tree's splits
    ProximityTree& tree;
    RandomStream& rng;
};

std::vector<int> class_histogram(const GrowContext& ctx, const NodeData& node) {
    std::vector<int> counts(ctx.data.num_classes(), 0);
    for (std::size_t k = 0; k < node.indices.size(); ++k)
        counts[ctx.data.series[node.indices[k]].label] += node.counts[k];
    return counts;
}

int majority_class(const std::vector<int>& histogram) {
    int best = -1, best_count = -1;
    for (std::size_t c = 0; c < histogram.size(); ++c)
        if (histogram[c] > best_count) {
            best = static_cast<int>(c);
            best_count = histogram[c];
        }
    return best;
}

int add_leaf(GrowContext& ctx, int label, const NodeData& node) {
    const int id = static_cast<int>(ctx.tree.nodes.size());
    TreeNode leaf;
    leaf.label = label;
    ctx.tree.nodes.push_back(std::move(leaf));
    for (int idx : node.indices) ctx.tree.leaf_of[idx] = id;
    return id;
}

// One occurrence of the given class, drawn uniformly over the node's
// multiset (duplicated indices are proportionally more likely).
int sample_exemplar(const GrowContext& ctx, const NodeData& node, int cls, RandomStream& rng) {
    long total = 0;
    for (std::size_t k = 0; k < node.indices.size(); ++k)
        if (ctx.data.series[node.indices[k]].label == cls) total += node.counts[k];
    long target = static_cast<long>(rng.next_index(static_cast<std::size_t>(total)));
    for (std::size_t k = 0; k < node.indices.size(); ++k) {
        if (ctx.data.series[node.indices[k]].label != cls) continue;
        target -= node.counts[k];
        if (target < 0) return node.indices[k];
    }
    return -1;  // unreachable
}

struct CandidateSplit {
    DistanceMeasure measure;
    std::vector<int> exemplars;          // one per class present, class-ascending
    std::vector<NodeData> buckets;       // parallel to exemplars
    std::vector<std::vector<int>> hist;  // class histograms per bucket
    double gain = -std::numeric_limits<double>::infinity();
};

int build_node(GrowContext& ctx, NodeData node, int depth) {
    const std::vector<int> histogram = class_histogram(ctx, node);
    std::vector<int> present;
    for (std::size_t c = 0; c < histogram.size(); ++c)
        if (histogram[c] > 0) present.push_back(static_cast<int>(c));

    if (present.size() == 1) return add_leaf(ctx, present[0], node);
    if (ctx.config.max_depth >= 0 && depth >= ctx.config.max_depth)
        return add_leaf(ctx, majority_class(histogram), node);

    CandidateSplit best;
    bool found = false;
    for (int cand = 0; cand < ctx.config.candidates; ++cand) {
        CandidateSplit split;
        const MeasureKind kind = ctx.pool[ctx.rng.next_index(ctx.pool.size())];
        split.measure = sample_parameters(kind, ctx.stats, ctx.rng);
        for (int cls : present) split.exemplars.push_back(sample_exemplar(ctx, node, cls, ctx.rng));

        split.buckets.resize(split.exemplars.size());
        for (std::size_t k = 0; k < node.indices.size(); ++k) {
            const TimeSeries& x = ctx.data.series[node.indices[k]];
            int branch = 0;
            double best_dist = std::numeric_limits<double>::infinity();
            for (std::size_t e = 0; e < split.exemplars.size(); ++e) {
                const double dist =
                    distance(split.measure, x, ctx.data.series[split.exemplars[e]]);
                if (dist < best_dist) {
                    best_dist = dist;
                    branch = static_cast<int>(e);
                }
            }
            split.buckets[branch].indices.push_back(node.indices[k]);
            split.buckets[branch].counts.push_back(node.counts[k]);
        }

        int nonempty = 0;
        for (const auto& bucket : split.buckets)
            if (!bucket.indices.empty()) ++nonempty;
        if (nonempty <= 1) continue;  // degenerate: all points on one branch

        split.hist.reserve(split.buckets.size());
        for (const auto& bucket : split.buckets) split.hist.push_back(class_histogram(ctx, bucket));
        split.gain = gini_gain(histogram, split.hist);
        if (!found || split.gain > best.gain) {
            best = std::move(split);
            found = true;
        }
    }

    if (!found) return add_leaf(ctx, majority_class(histogram), node);

    const int id = static_cast<int>(ctx.tree.nodes.size());
    {
        TreeNode internal;
        internal.measure = best.measure;
        internal.exemplars = best.exemplars;
        ctx.tree.nodes.push_back(std::move(internal));
    }
    for (std::size_t e = 0; e < best.buckets.size(); ++e) {
        int child;
        if (best.buckets[e].indices.empty()) {
            // No occupants: anchor the branch with the exemplar's class.
            child = add_leaf(ctx, ctx.data.series[best.exemplars[e]].label, best.buckets[e]);
        } else {
            child = build_node(ctx, std::move(best.buckets[e]), depth + 1);
        }
        ctx.tree.nodes[id].children.push_back(child);
    }
    return id;
}

std::vector<MeasureKind> usable_measures(const ForestConfig& config, const DatasetStats& stats) {
    std::vector<MeasureKind> pool;
    for (MeasureKind k : config.measures) {
        if (std::find(pool.begin(), pool.end(), k) != pool.end()) continue;
        if ((k == MeasureKind::DDTW || k == MeasureKind::WDDTW) && stats.min_length < 3) continue;
        if (k == MeasureKind::ED && !stats.equal_lengths) continue;
        pool.push_back(k);
    }
    if (pool.empty())
        throw std::invalid_argument(
            "no usable distance measure for this dataset (derivative measures need length >= 3, "
            "ED needs equal lengths)");
    return pool;
}

void validate_config(const ForestConfig& c) {
    if (c.trees < 1) throw std::invalid_argument("forest: trees must be >= 1");
    if (c.candidates < 1) throw std::invalid_argument("forest: candidate splits must be >= 1");
    if (c.measures.empty()) throw std::invalid_argument("forest: measure list is empty");
    if (c.threads < 0) throw std::invalid_argument("forest: threads must be >= 0");
}

}  // namespace

ProximityTree grow_tree(const TimeSeriesDataset& d, BootstrapSample sample,
                        const ForestConfig& config, const DatasetStats& stats,
                        const std::vector<MeasureKind>& measure_pool, RandomStream& rng) {
    const int n = d.size();
    ProximityTree tree;
    tree.inbag_count = std::move(sample.inbag_count);
    tree.oob = std::move(sample.oob);
    tree.leaf_of.assign(n, -1);

    NodeData root;
    for (int i = 0; i < n; ++i)
        if (tree.inbag_count[i] > 0) {
            root.indices.push_back(i);
            root.counts.push_back(tree.inbag_count[i]);
        }
    if (root.indices.empty()) throw std::invalid_argument("grow_tree: empty in-bag sample");

    GrowContext ctx{d, config, stats, measure_pool, tree, rng};
    if (config.selection_scope == SelectionScope::PerTree)
        ctx.pool = {measure_pool[rng.next_index(measure_pool.size())]};
    build_node(ctx, std::move(root), 0);

    for (int i : tree.oob) tree.leaf_of[i] = route(tree, d, d.series[i]);
    return tree;
}

int route(const ProximityTree& tree, const TimeSeriesDataset& train, const TimeSeries& x) {
    int node = 0;
    while (!tree.nodes[node].is_leaf()) {
        const TreeNode& nd = tree.nodes[node];
        int branch = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t e = 0; e < nd.exemplars.size(); ++e) {
            const double dist = distance(nd.measure, x, train.series[nd.exemplars[e]]);
            if (dist < best) {
                best = dist;
                branch = static_cast<int>(e);
            }
        }
        node = nd.children[branch];
    }
    return node;
}

ProximityForest fit(const TimeSeriesDataset& d, const ForestConfig& config) {
    validate_for_training(d);
    validate_config(config);
    for (int i = 0; i < d.size(); ++i)
        validate_series(d.series[i].values, "series " + std::to_string(i));

    ProximityForest forest;
    forest.config = config;
    forest.labels = d.labels();
    forest.class_labels = d.class_labels;
    forest.stats = compute_stats(d);
    forest.dataset_name = d.name;
    const std::vector<MeasureKind> pool = usable_measures(config, forest.stats);

    const int n = d.size();
    forest.trees.resize(config.trees);
    parallel_for(static_cast<std::size_t>(config.trees), config.threads, [&](std::size_t t) {
        RandomStream rng = RandomStream::child(config.seed, t);
        BootstrapSample sample;
        if (config.bootstrap) {
            sample = bootstrap_sample(n, rng);
        } else {
            sample.inbag_count.assign(n, 1);
        }
        forest.trees[t] = grow_tree(d, std::move(sample), config, forest.stats, pool, rng);
    });
    return forest;
}

int predict(const ProximityForest& f, const TimeSeriesDataset& train, const TimeSeries& x) {
    std::vector<int> votes(f.class_labels.empty() ? 1 : f.class_labels.back() + 1, 0);
    for (const auto& tree : f.trees) ++votes[tree.nodes[route(tree, train, x)].label];
    return majority_class(votes);
}

std::optional<int> oob_predict(const ProximityForest& f, int i) {
    if (i < 0 || i >= f.size()) throw std::invalid_argument("oob_predict: index out of range");
    std::vector<int> votes(f.class_labels.empty() ? 1 : f.class_labels.back() + 1, 0);
    bool any = false;
    for (const auto& tree : f.trees) {
        if (!std::binary_search(tree.oob.begin(), tree.oob.end(), i)) continue;
        ++votes[tree.nodes[tree.leaf_of[i]].label];
        any = true;
    }
    if (!any) return std::nullopt;
    return majority_class(votes);
}

std::vector<int> never_oob_indices(const ProximityForest& f) {
    std::vector<std::uint8_t> seen(f.size(), 0);
    for (const auto& tree : f.trees)
        for (int i : tree.oob) seen[i] = 1;
    std::vector<int> out;
    for (int i = 0; i < f.size(); ++i)
        if (!seen[i]) out.push_back(i);
    return out;
}

// --- serialization ---------------------------------------------------------

namespace {

using nlohmann::json;

json measure_to_json(const DistanceMeasure& m) {
    json j;
    j["kind"] = measure_name(m.kind);
    switch (m.kind) {
        case MeasureKind::DTW:
        case MeasureKind::DDTW: j["window"] = m.params.window; break;
        case MeasureKind::WDTW:
        case MeasureKind::WDDTW: j["weight"] = m.params.weight; break;
        case MeasureKind::TWE:
            j["stiffness"] = m.params.stiffness;
            j["penalty"] = m.params.penalty;
            break;
        case MeasureKind::ED: break;
        case MeasureKind::LCSS:
            j["epsilon"] = m.params.epsilon;
            j["window"] = m.params.window;
            break;
        case MeasureKind::MSM: j["cost"] = m.params.cost; break;
        case MeasureKind::ERP:
            j["gap_value"] = m.params.gap_value;
            j["window"] = m.params.window;
            break;
    }
    return j;
}

DistanceMeasure measure_from_json(const json& j) {
    const auto kind = measure_from_name(j.at("kind").get<std::string>());
    if (!kind) throw std::invalid_argument("model: unknown measure kind");
    DistanceMeasure m;
    m.kind = *kind;
    if (j.contains("window")) m.params.window = j["window"].get<int>();
    if (j.contains("weight")) m.params.weight = j["weight"].get<double>();
    if (j.contains("stiffness")) m.params.stiffness = j["stiffness"].get<double>();
    if (j.contains("penalty")) m.params.penalty = j["penalty"].get<double>();
    if (j.contains("epsilon")) m.params.epsilon = j["epsilon"].get<double>();
    if (j.contains("cost")) m.params.cost = j["cost"].get<double>();
    if (j.contains("gap_value")) m.params.gap_value = j["gap_value"].get<double>();
    return m;
}

}  // namespace

void save_forest(const ProximityForest& f, const std::string& path) {
    json j;
    j["format"] = "pfgap-forest";
    j["version"] = 1;
    json cfg;
    cfg["trees"] = f.config.trees;
    cfg["candidates"] = f.config.candidates;
    cfg["max_depth"] = f.config.max_depth;
    std::vector<std::string> names;
    for (MeasureKind k : f.config.measures) names.emplace_back(measure_name(k));
    cfg["measures"] = names;
    cfg["selection_scope"] =
        f.config.selection_scope == SelectionScope::PerSplit ? "per-split" : "per-tree";
    cfg["seed"] = f.config.seed;
    cfg["bootstrap"] = f.config.bootstrap;
    // threads is a runtime knob, not model structure; models stay
    // byte-identical across worker counts.
    j["config"] = std::move(cfg);

    j["dataset_name"] = f.dataset_name;
    j["labels"] = f.labels;
    j["class_labels"] = f.class_labels;
    j["stats"] = {{"value_stddev", f.stats.value_stddev},
                  {"max_length", f.stats.max_length},
                  {"min_length", f.stats.min_length},
                  {"equal_lengths", f.stats.equal_lengths}};

    json trees = json::array();
    for (const auto& tree : f.trees) {
        json t;
        t["inbag"] = tree.inbag_count;
        t["oob"] = tree.oob;
        t["leaf_of"] = tree.leaf_of;
        json nodes = json::array();
        for (const auto& node : tree.nodes) {
            json nd;
            if (node.is_leaf()) {
                nd["label"] = node.label;
            } else {
                nd["measure"] = measure_to_json(node.measure);
                nd["exemplars"] = node.exemplars;
                nd["children"] = node.children;
            }
            nodes.push_back(std::move(nd));
        }
        t["nodes"] = std::move(nodes);
        trees.push_back(std::move(t));
    }
    j["trees"] = std::move(trees);

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << j.dump() << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

ProximityForest load_forest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("model parse error: " + std::string(e.what()));
    }
    if (!j.contains("format") || j["format"] != "pfgap-forest")
        throw std::invalid_argument(path + ": not a pfgap forest model");
    if (j.at("version").get<int>() != 1)
        throw std::invalid_argument(path + ": unsupported model version");

    ProximityForest f;
    const json& cfg = j.at("config");
    f.config.trees = cfg.at("trees").get<int>();
    f.config.candidates = cfg.at("candidates").get<int>();
    f.config.max_depth = cfg.at("max_depth").get<int>();
    f.config.measures.clear();
    for (const auto& name : cfg.at("measures")) {
        const auto kind = measure_from_name(name.get<std::string>());
        if (!kind) throw std::invalid_argument("model: unknown measure name");
        f.config.measures.push_back(*kind);
    }
    f.config.selection_scope = cfg.at("selection_scope").get<std::string>() == "per-tree"
                                   ? SelectionScope::PerTree
                                   : SelectionScope::PerSplit;
    f.config.seed = cfg.at("seed").get<std::uint64_t>();
    f.config.bootstrap = cfg.at("bootstrap").get<bool>();
    f.config.threads = cfg.value("threads", 0);

    f.dataset_name = j.value("dataset_name", std::string());
    f.labels = j.at("labels").get<std::vector<int>>();
    f.class_labels = j.at("class_labels").get<std::vector<int>>();
    const json& stats = j.at("stats");
    f.stats.value_stddev = stats.at("value_stddev").get<double>();
    f.stats.max_length = stats.at("max_length").get<int>();
    f.stats.min_length = stats.at("min_length").get<int>();
    f.stats.equal_lengths = stats.at("equal_lengths").get<bool>();

    for (const auto& t : j.at("trees")) {
        ProximityTree tree;
        tree.inbag_count = t.at("inbag").get<std::vector<int>>();
        tree.oob = t.at("oob").get<std::vector<int>>();
        tree.leaf_of = t.at("leaf_of").get<std::vector<int>>();
        for (const auto& nd : t.at("nodes")) {
            TreeNode node;
            if (nd.contains("measure")) {
                node.measure = measure_from_json(nd.at("measure"));
                node.exemplars = nd.at("exemplars").get<std::vector<int>>();
                node.children = nd.at("children").get<std::vector<int>>();
            } else {
                node.label = nd.at("label").get<int>();
            }
            tree.nodes.push_back(std::move(node));
        }
        f.trees.push_back(std::move(tree));
    }
    return f;
}

bool structurally_equal(const ProximityForest& a, const ProximityForest& b) {
    auto params_equal = [](const DistanceMeasure& x, const DistanceMeasure& y) {
        return x.kind == y.kind && x.params.window == y.params.window &&
               x.params.weight == y.params.weight && x.params.stiffness == y.params.stiffness &&
               x.params.penalty == y.params.penalty && x.params.epsilon == y.params.epsilon &&
               x.params.cost == y.params.cost && x.params.gap_value == y.params.gap_value;
    };
    if (a.labels != b.labels || a.class_labels != b.class_labels) return false;
    if (a.trees.size() != b.trees.size()) return false;
    for (std::size_t t = 0; t < a.trees.size(); ++t) {
        const auto& ta = a.trees[t];
        const auto& tb = b.trees[t];
        if (ta.inbag_count != tb.inbag_count || ta.oob != tb.oob || ta.leaf_of != tb.leaf_of)
            return false;
        if (ta.nodes.size() != tb.nodes.size()) return false;
        for (std::size_t k = 0; k < ta.nodes.size(); ++k) {
            const auto& na = ta.nodes[k];
            const auto& nb = tb.nodes[k];
            if (na.label != nb.label || na.exemplars != nb.exemplars ||
                na.children != nb.children)
                return false;
            if (!na.is_leaf() && !params_equal(na.measure, nb.measure)) return false;
        }
    }
    return true;
}

}  // namespace pfgap
