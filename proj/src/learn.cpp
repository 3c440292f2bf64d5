#include "ioth/learn.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "ioth/csv.hpp"
#include "ioth/errors.hpp"
#include "ioth/json_util.hpp"
#include "ioth/log.hpp"
#include "ioth/rng.hpp"

namespace ioth::learn {

namespace {

constexpr const char* kStageFit = "fit";
constexpr const char* kStagePredict = "predict";
constexpr const char* kStageEvaluate = "evaluate";
constexpr const char* kStageGrid = "grid-search";
constexpr const char* kStageExperiment = "experiment";
constexpr const char* kStageModel = "model";

void validate_params(const ForestParams& p, const std::string& stage) {
    if (p.criterion != "gini" && p.criterion != "entropy") {
        throw IothError(stage, "unknown criterion '" + p.criterion + "'");
    }
    if (p.max_depth < 1) throw IothError(stage, "max_depth must be >= 1");
    if (p.min_samples_split < 2) throw IothError(stage, "min_samples_split must be >= 2");
    if (p.n_estimators < 1) throw IothError(stage, "n_estimators must be >= 1");
    if (p.feature_subsample < 0) throw IothError(stage, "feature_subsample must be >= 0");
}

}  // namespace

double gini_impurity(const std::vector<long>& counts) {
    long total = 0;
    for (long c : counts) total += c;
    if (total == 0) return 0.0;
    double sum_sq = 0.0;
    for (long c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

double entropy_impurity(const std::vector<long>& counts) {
    long total = 0;
    for (long c : counts) total += c;
    if (total == 0) return 0.0;
    double h = 0.0;
    for (long c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

namespace {

// Grows one tree on a bootstrap sample. Split search is exhaustive over the
// sampled feature subset: thresholds are midpoints between consecutive
// distinct values, rows with value <= threshold go left. Ties on impurity
// decrease resolve to the smallest feature index, then smallest threshold,
// which keeps the tree independent of feature draw order.
class TreeBuilder {
public:
    TreeBuilder(const std::vector<DataRow>& rows, const std::vector<int>& label_idx,
                int n_classes, const ForestParams& params, int mtry, Rng& rng)
        : rows_(rows),
          label_idx_(label_idx),
          n_classes_(n_classes),
          params_(params),
          mtry_(mtry),
          use_entropy_(params.criterion == "entropy"),
          rng_(rng) {}

    Tree grow(std::vector<int> sample) {
        tree_.nodes.clear();
        build(sample, 0);
        return std::move(tree_);
    }

private:
    std::vector<long> tally(const std::vector<int>& sample) const {
        std::vector<long> counts(static_cast<std::size_t>(n_classes_), 0);
        for (int i : sample) ++counts[static_cast<std::size_t>(label_idx_[static_cast<std::size_t>(i)])];
        return counts;
    }

    double impurity(const std::vector<long>& counts) const {
        return use_entropy_ ? entropy_impurity(counts) : gini_impurity(counts);
    }

    int make_leaf(std::vector<long> counts) {
        TreeNode node;
        node.class_counts = std::move(counts);
        tree_.nodes.push_back(std::move(node));
        return static_cast<int>(tree_.nodes.size()) - 1;
    }

    struct Split {
        int feature = -1;
        float threshold = 0.0f;
        double decrease = 0.0;
    };

    Split best_split(const std::vector<int>& sample, const std::vector<long>& counts,
                     double node_impurity) {
        auto candidates = rng_.sample_without_replacement(
            rows_[0].features.size(), static_cast<std::size_t>(mtry_));
        std::sort(candidates.begin(), candidates.end());

        const auto n = static_cast<double>(sample.size());
        Split best;
        std::vector<std::pair<float, int>> vals;
        vals.reserve(sample.size());
        std::vector<long> left(static_cast<std::size_t>(n_classes_));
        std::vector<long> right(static_cast<std::size_t>(n_classes_));
        for (std::size_t f : candidates) {
            vals.clear();
            for (int i : sample) {
                vals.emplace_back(rows_[static_cast<std::size_t>(i)].features[f],
                                  label_idx_[static_cast<std::size_t>(i)]);
            }
            std::sort(vals.begin(), vals.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            std::fill(left.begin(), left.end(), 0);
            right = counts;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                ++left[static_cast<std::size_t>(vals[i].second)];
                --right[static_cast<std::size_t>(vals[i].second)];
                const float lo = vals[i].first;
                const float hi = vals[i + 1].first;
                if (!(lo < hi)) continue;
                // Midpoint can round up to hi in float; fall back to lo so the
                // comparison v <= threshold reproduces this exact partition.
                auto threshold = static_cast<float>(
                    (static_cast<double>(lo) + static_cast<double>(hi)) / 2.0);
                if (!(threshold < hi)) threshold = lo;
                const double nl = static_cast<double>(i + 1);
                const double nr = n - nl;
                const double decrease =
                    node_impurity - (nl / n) * impurity(left) - (nr / n) * impurity(right);
                if (decrease > best.decrease) {
                    best.feature = static_cast<int>(f);
                    best.threshold = threshold;
                    best.decrease = decrease;
                }
            }
        }
        return best;
    }

    int build(const std::vector<int>& sample, int depth) {
        auto counts = tally(sample);
        const long node_total = static_cast<long>(sample.size());
        long top = 0;
        for (long c : counts) top = std::max(top, c);
        const bool pure = top == node_total;
        if (pure || depth >= params_.max_depth ||
            node_total < static_cast<long>(params_.min_samples_split)) {
            return make_leaf(std::move(counts));
        }

        const double node_impurity = impurity(counts);
        const Split split = best_split(sample, counts, node_impurity);
        if (split.feature < 0 || split.decrease <= 1e-12) {
            return make_leaf(std::move(counts));
        }

        std::vector<int> lhs, rhs;
        for (int i : sample) {
            const float v = rows_[static_cast<std::size_t>(i)].features[static_cast<std::size_t>(
                split.feature)];
            (v <= split.threshold ? lhs : rhs).push_back(i);
        }

        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        tree_.nodes[static_cast<std::size_t>(id)].feature = split.feature;
        tree_.nodes[static_cast<std::size_t>(id)].threshold = split.threshold;
        const int left_id = build(lhs, depth + 1);
        const int right_id = build(rhs, depth + 1);
        tree_.nodes[static_cast<std::size_t>(id)].left = left_id;
        tree_.nodes[static_cast<std::size_t>(id)].right = right_id;
        return id;
    }

    const std::vector<DataRow>& rows_;
    const std::vector<int>& label_idx_;
    int n_classes_;
    const ForestParams& params_;
    int mtry_;
    bool use_entropy_;
    Rng& rng_;
    Tree tree_;
};

// Leaf vote: majority class of the training rows that landed there, ties to
// the smallest class id (= smallest class index, classes are sorted).
int leaf_class_index(const TreeNode& leaf) {
    int best = 0;
    for (std::size_t c = 1; c < leaf.class_counts.size(); ++c) {
        if (leaf.class_counts[c] > leaf.class_counts[static_cast<std::size_t>(best)]) {
            best = static_cast<int>(c);
        }
    }
    return best;
}

int tree_class_index(const Tree& tree, const std::vector<float>& features) {
    int node = 0;
    for (;;) {
        const TreeNode& nd = tree.nodes[static_cast<std::size_t>(node)];
        if (nd.feature < 0) return leaf_class_index(nd);
        const float v = features[static_cast<std::size_t>(nd.feature)];
        node = v <= nd.threshold ? nd.left : nd.right;
    }
}

int majority_index(const std::vector<long>& votes) {
    int best = 0;
    for (std::size_t c = 1; c < votes.size(); ++c) {
        if (votes[c] > votes[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
    }
    return best;
}

void check_dimensions(const ForestModel& model, const std::vector<float>& features) {
    if (static_cast<int>(features.size()) != model.dimensionality) {
        throw IothError(kStagePredict,
                        "feature vector has " + std::to_string(features.size()) +
                            " dimensions, model expects " +
                            std::to_string(model.dimensionality));
    }
}

// Runs fn(i) for i in [0, n) on `threads` workers. Work items must be
// independent; the first exception wins and is rethrown after join.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex err_mutex;
    std::exception_ptr err;
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int count = std::min(threads, n);
    pool.reserve(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace

ForestModel fit(const std::vector<DataRow>& rows, const ForestParams& params,
                std::uint64_t seed, int threads) {
    validate_params(params, kStageFit);
    if (rows.empty()) throw IothError(kStageFit, "no training rows");
    const std::size_t dims = rows[0].features.size();
    if (dims == 0) throw IothError(kStageFit, "rows have no features");
    for (const auto& r : rows) {
        if (r.features.size() != dims) {
            throw IothError(kStageFit, "inconsistent feature dimensions (" +
                                           std::to_string(r.features.size()) + " vs " +
                                           std::to_string(dims) + ")");
        }
    }

    ForestModel model;
    model.params = params;
    model.seed = seed;
    model.dimensionality = static_cast<int>(dims);

    std::set<int> distinct;
    for (const auto& r : rows) distinct.insert(r.label);
    if (distinct.size() < 2) {
        throw IothError(kStageFit, "training data has a single class; need at least 2");
    }
    model.classes.assign(distinct.begin(), distinct.end());

    std::map<int, int> class_index;
    for (std::size_t i = 0; i < model.classes.size(); ++i) {
        class_index[model.classes[i]] = static_cast<int>(i);
    }
    std::vector<int> label_idx(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) label_idx[i] = class_index[rows[i].label];

    const int n_classes = static_cast<int>(model.classes.size());
    int mtry = params.feature_subsample;
    if (mtry == 0) mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(dims))));
    mtry = std::min(mtry, static_cast<int>(dims));

    const int n_trees = params.n_estimators;
    const std::size_t n = rows.size();
    // Seeds fixed before any tree is grown: tree t is a pure function of
    // tree_seeds[t], so the forest is identical for any thread count.
    std::vector<std::uint64_t> tree_seeds(static_cast<std::size_t>(n_trees));
    for (int t = 0; t < n_trees; ++t) {
        tree_seeds[static_cast<std::size_t>(t)] = derive_seed(seed, static_cast<std::uint64_t>(t));
    }

    model.trees.resize(static_cast<std::size_t>(n_trees));
    std::vector<std::vector<bool>> in_bag(static_cast<std::size_t>(n_trees));

    parallel_for(n_trees, threads, [&](int t) {
        Rng rng(tree_seeds[static_cast<std::size_t>(t)]);
        std::vector<int> sample(n);
        auto& bag = in_bag[static_cast<std::size_t>(t)];
        bag.assign(n, false);
        for (std::size_t i = 0; i < n; ++i) {
            const auto pick = rng.uniform_int(static_cast<std::uint64_t>(n));
            sample[i] = static_cast<int>(pick);
            bag[static_cast<std::size_t>(pick)] = true;
        }
        TreeBuilder builder(rows, label_idx, n_classes, params, mtry, rng);
        model.trees[static_cast<std::size_t>(t)] = builder.grow(std::move(sample));
    });

    // Out-of-bag accuracy: each row is scored only by trees whose bootstrap
    // missed it. Rows never out of bag are skipped.
    long scored = 0;
    long correct = 0;
    std::vector<long> votes(static_cast<std::size_t>(n_classes));
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(votes.begin(), votes.end(), 0);
        bool any = false;
        for (int t = 0; t < n_trees; ++t) {
            if (in_bag[static_cast<std::size_t>(t)][i]) continue;
            ++votes[static_cast<std::size_t>(
                tree_class_index(model.trees[static_cast<std::size_t>(t)], rows[i].features))];
            any = true;
        }
        if (!any) continue;
        ++scored;
        if (majority_index(votes) == label_idx[i]) ++correct;
    }
    model.oob_accuracy =
        scored > 0 ? static_cast<double>(correct) / static_cast<double>(scored) : 0.0;
    IOTH_DEBUG("learn", "fit: " << n_trees << " trees on " << n
                                << " rows, oob=" << model.oob_accuracy);
    return model;
}

std::vector<int> tree_votes(const ForestModel& model, const std::vector<float>& features) {
    check_dimensions(model, features);
    std::vector<int> out;
    out.reserve(model.trees.size());
    for (const auto& tree : model.trees) {
        out.push_back(model.classes[static_cast<std::size_t>(tree_class_index(tree, features))]);
    }
    return out;
}

int predict_one(const ForestModel& model, const std::vector<float>& features) {
    check_dimensions(model, features);
    std::vector<long> votes(model.classes.size(), 0);
    for (const auto& tree : model.trees) {
        ++votes[static_cast<std::size_t>(tree_class_index(tree, features))];
    }
    return model.classes[static_cast<std::size_t>(majority_index(votes))];
}

std::vector<int> predict(const ForestModel& model,
                         const std::vector<std::vector<float>>& rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(predict_one(model, r));
    return out;
}

Metrics evaluate(const std::vector<int>& truth, const std::vector<int>& predicted) {
    if (truth.empty()) throw IothError(kStageEvaluate, "no examples to score");
    if (truth.size() != predicted.size()) {
        throw IothError(kStageEvaluate, "truth has " + std::to_string(truth.size()) +
                                            " labels, predictions have " +
                                            std::to_string(predicted.size()));
    }

    std::set<int> class_set(truth.begin(), truth.end());
    class_set.insert(predicted.begin(), predicted.end());
    std::map<int, long> tp, fp, fn, support;
    for (int c : class_set) tp[c] = fp[c] = fn[c] = support[c] = 0;
    long correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++support[truth[i]];
        if (truth[i] == predicted[i]) {
            ++tp[truth[i]];
            ++correct;
        } else {
            ++fp[predicted[i]];
            ++fn[truth[i]];
        }
    }

    const auto n = static_cast<double>(truth.size());
    Metrics m;
    m.accuracy = static_cast<double>(correct) / n;

    // Macro and weighted means run over classes present in the truth;
    // classes that only appear in predictions still get a per-class row
    // (precision 0) but don't dilute the averages.
    long truth_classes = 0;
    for (int c : class_set) {
        ClassScore s;
        s.cls = c;
        s.support = support[c];
        const long denom_p = tp[c] + fp[c];
        const long denom_r = tp[c] + fn[c];
        s.precision = denom_p > 0 ? static_cast<double>(tp[c]) / static_cast<double>(denom_p) : 0.0;
        s.recall = denom_r > 0 ? static_cast<double>(tp[c]) / static_cast<double>(denom_r) : 0.0;
        s.f1 = (s.precision + s.recall) > 0.0
                   ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                   : 0.0;
        m.per_class.push_back(s);
        if (s.support > 0) {
            ++truth_classes;
            m.macro_precision += s.precision;
            m.macro_recall += s.recall;
            m.macro_f1 += s.f1;
            const double w = static_cast<double>(s.support) / n;
            m.weighted_precision += w * s.precision;
            m.weighted_recall += w * s.recall;
            m.weighted_f1 += w * s.f1;
        }
    }
    m.macro_precision /= static_cast<double>(truth_classes);
    m.macro_recall /= static_cast<double>(truth_classes);
    m.macro_f1 /= static_cast<double>(truth_classes);

    // Pooled counts. With one label per example these all collapse to
    // accuracy, which doubles as a cross-check in the tests.
    long tp_all = 0, fp_all = 0, fn_all = 0;
    for (int c : class_set) {
        tp_all += tp[c];
        fp_all += fp[c];
        fn_all += fn[c];
    }
    m.micro_precision = (tp_all + fp_all) > 0
                            ? static_cast<double>(tp_all) / static_cast<double>(tp_all + fp_all)
                            : 0.0;
    m.micro_recall = (tp_all + fn_all) > 0
                         ? static_cast<double>(tp_all) / static_cast<double>(tp_all + fn_all)
                         : 0.0;
    m.micro_f1 = (m.micro_precision + m.micro_recall) > 0.0
                     ? 2.0 * m.micro_precision * m.micro_recall /
                           (m.micro_precision + m.micro_recall)
                     : 0.0;
    return m;
}

GridSpec default_grid() { return GridSpec{}; }

GridSpec grid_from_json(const json& j) {
    GridSpec g;
    g.criterion = json_require<std::vector<std::string>>(j, "criterion", kStageGrid);
    g.max_depth = json_require<std::vector<int>>(j, "max_depth", kStageGrid);
    // The published table spells this key in the singular; accept both.
    if (j.contains("min_samples_split")) {
        g.min_samples_split = json_require<std::vector<int>>(j, "min_samples_split", kStageGrid);
    } else {
        g.min_samples_split = json_require<std::vector<int>>(j, "min_sample_split", kStageGrid);
    }
    g.n_estimators = json_require<std::vector<int>>(j, "n_estimators", kStageGrid);
    return g;
}

GridSpec grid_from_json_file(const std::string& path) {
    return grid_from_json(load_json_file(path, kStageGrid));
}

std::vector<ForestParams> expand_grid(const GridSpec& grid) {
    auto c = grid.criterion;
    auto d = grid.max_depth;
    auto s = grid.min_samples_split;
    auto e = grid.n_estimators;
    if (c.empty() || d.empty() || s.empty() || e.empty()) {
        throw IothError(kStageGrid, "grid has an empty dimension");
    }
    // Sorted + deduplicated, so expansion order is the lexicographic order of
    // the parameter tuple and "first best wins" picks the smallest tuple.
    auto canon = [](auto& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    canon(c);
    canon(d);
    canon(s);
    canon(e);
    std::vector<ForestParams> out;
    for (const auto& cr : c) {
        for (int md : d) {
            for (int ms : s) {
                for (int ne : e) {
                    ForestParams p;
                    p.criterion = cr;
                    p.max_depth = md;
                    p.min_samples_split = ms;
                    p.n_estimators = ne;
                    out.push_back(p);
                    validate_params(p, kStageGrid);
                }
            }
        }
    }
    return out;
}

namespace {

std::vector<int> distinct_groups(const std::vector<DataRow>& rows) {
    std::set<int> g;
    for (const auto& r : rows) g.insert(r.group);
    return {g.begin(), g.end()};
}

std::vector<std::vector<float>> feature_matrix(const std::vector<DataRow>& rows) {
    std::vector<std::vector<float>> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.features);
    return out;
}

std::vector<int> labels_of(const std::vector<DataRow>& rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.label);
    return out;
}

}  // namespace

std::map<int, int> fold_assignment(const std::vector<DataRow>& rows, int folds,
                                   std::uint64_t seed) {
    if (folds < 2) throw IothError(kStageGrid, "need at least 2 folds");
    if (rows.empty()) throw IothError(kStageGrid, "no rows");
    auto groups = distinct_groups(rows);
    if (static_cast<int>(groups.size()) < folds) {
        throw IothError(kStageGrid, "only " + std::to_string(groups.size()) +
                                        " press groups for " + std::to_string(folds) +
                                        "-fold cross-validation");
    }
    Rng fold_rng(derive_seed(seed, 0xF01D));
    fold_rng.shuffle(groups);
    std::map<int, int> fold_of;
    const auto g = groups.size();
    for (std::size_t i = 0; i < g; ++i) {
        fold_of[groups[i]] = static_cast<int>(i * static_cast<std::size_t>(folds) / g);
    }
    return fold_of;
}

GridSearchResult grid_search(const std::vector<DataRow>& rows, const GridSpec& grid,
                             int folds, std::uint64_t seed, int threads) {
    // Folds partition press groups, not packets: all packets of one press
    // land in the same fold, otherwise a press leaks into its own test set.
    const auto fold_of = fold_assignment(rows, folds, seed);

    const auto combos = expand_grid(grid);
    GridSearchResult result;
    result.table.reserve(combos.size());
    int best_idx = -1;
    for (std::size_t c = 0; c < combos.size(); ++c) {
        CvCell cell;
        cell.params = combos[c];
        for (int k = 0; k < folds; ++k) {
            std::vector<DataRow> train, test;
            for (const auto& r : rows) {
                (fold_of.at(r.group) == k ? test : train).push_back(r);
            }
            const auto model = fit(train, combos[c],
                                   derive_seed(seed, 0x100000 + c * 256 + static_cast<std::size_t>(k)),
                                   threads);
            const auto m = evaluate(labels_of(test), predict(model, feature_matrix(test)));
            cell.mean_accuracy += m.accuracy;
            cell.mean_macro_precision += m.macro_precision;
            cell.mean_macro_recall += m.macro_recall;
            cell.mean_macro_f1 += m.macro_f1;
        }
        cell.mean_accuracy /= folds;
        cell.mean_macro_precision /= folds;
        cell.mean_macro_recall /= folds;
        cell.mean_macro_f1 /= folds;
        result.table.push_back(cell);
        const bool better =
            best_idx < 0 ||
            cell.mean_accuracy > result.table[static_cast<std::size_t>(best_idx)].mean_accuracy ||
            (cell.mean_accuracy == result.table[static_cast<std::size_t>(best_idx)].mean_accuracy &&
             cell.mean_macro_f1 > result.table[static_cast<std::size_t>(best_idx)].mean_macro_f1);
        if (better) best_idx = static_cast<int>(c);
        IOTH_DEBUG("learn", "grid: " << cell.params.criterion << "/" << cell.params.max_depth
                                     << "/" << cell.params.min_samples_split << "/"
                                     << cell.params.n_estimators
                                     << " acc=" << cell.mean_accuracy);
    }
    result.best = result.table[static_cast<std::size_t>(best_idx)].params;
    return result;
}

namespace {

// Scalar metric fields aggregated by repeated_experiment, in report order.
constexpr std::array<double Metrics::*, 10> kMetricFields = {
    &Metrics::accuracy,        &Metrics::micro_precision, &Metrics::micro_recall,
    &Metrics::micro_f1,        &Metrics::macro_precision, &Metrics::macro_recall,
    &Metrics::macro_f1,        &Metrics::weighted_precision,
    &Metrics::weighted_recall, &Metrics::weighted_f1,
};

}  // namespace

RepeatedReport repeated_experiment(const std::vector<DataRow>& rows, const GridSpec& grid,
                                   int repetitions, double train_fraction, bool group_split,
                                   int folds, std::uint64_t seed, int threads) {
    if (repetitions < 1) throw IothError(kStageExperiment, "repetitions must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw IothError(kStageExperiment, "train fraction must be in (0, 1)");
    }
    if (rows.size() < 2) throw IothError(kStageExperiment, "need at least 2 rows");

    RepeatedReport report;
    report.repetitions.reserve(static_cast<std::size_t>(repetitions));
    for (int rep = 0; rep < repetitions; ++rep) {
        const std::uint64_t rep_seed = derive_seed(seed, 0xE000 + static_cast<std::uint64_t>(rep));
        Rng split_rng(derive_seed(rep_seed, 0));

        std::vector<DataRow> train, test;
        if (group_split) {
            auto groups = distinct_groups(rows);
            if (groups.size() < 2) {
                throw IothError(kStageExperiment, "grouped split needs at least 2 press groups");
            }
            split_rng.shuffle(groups);
            auto cut = static_cast<std::size_t>(train_fraction * static_cast<double>(groups.size()));
            cut = std::clamp<std::size_t>(cut, 1, groups.size() - 1);
            const std::set<int> train_groups(groups.begin(),
                                             groups.begin() + static_cast<std::ptrdiff_t>(cut));
            for (const auto& r : rows) {
                (train_groups.count(r.group) ? train : test).push_back(r);
            }
        } else {
            std::vector<std::size_t> order(rows.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            split_rng.shuffle(order);
            auto cut = static_cast<std::size_t>(train_fraction * static_cast<double>(rows.size()));
            cut = std::clamp<std::size_t>(cut, 1, rows.size() - 1);
            for (std::size_t i = 0; i < order.size(); ++i) {
                (i < cut ? train : test).push_back(rows[order[i]]);
            }
        }

        const auto search = grid_search(train, grid, folds, derive_seed(rep_seed, 1), threads);
        const auto model = fit(train, search.best, derive_seed(rep_seed, 2), threads);
        RepetitionOutcome outcome;
        outcome.chosen = search.best;
        outcome.metrics = evaluate(labels_of(test), predict(model, feature_matrix(test)));
        IOTH_INFO("learn", "rep " << rep << ": macro_f1=" << outcome.metrics.macro_f1
                                  << " best=" << search.best.criterion << "/"
                                  << search.best.max_depth << "/"
                                  << search.best.min_samples_split << "/"
                                  << search.best.n_estimators);
        report.repetitions.push_back(std::move(outcome));
    }

    const auto n = static_cast<double>(report.repetitions.size());
    for (auto field : kMetricFields) {
        double mean = 0.0;
        for (const auto& r : report.repetitions) mean += r.metrics.*field;
        mean /= n;
        double var = 0.0;
        for (const auto& r : report.repetitions) {
            const double d = r.metrics.*field - mean;
            var += d * d;
        }
        report.mean.*field = mean;
        report.variance.*field = var / n;  // population variance over the reps
    }
    return report;
}

std::vector<DataRow> rows_from_dataset(const std::vector<netcapture::LabeledRow>& rows) {
    std::vector<DataRow> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        if (r.label < 0) continue;  // packets outside every press window
        DataRow d;
        d.features.reserve(r.row.bits.size());
        for (auto b : r.row.bits) d.features.push_back(static_cast<float>(b));
        d.label = r.label;
        d.group = r.press_index;
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<DataRow> load_rows_csv(const std::string& path) {
    const auto t = csv::read_file(path, "load-rows");
    if (t.header.size() < 3 || t.header[t.header.size() - 2] != "label" ||
        t.header.back() != "group") {
        throw IothError("load-rows", "expected header f0..fN,label,group in " + path);
    }
    const std::size_t dims = t.header.size() - 2;
    std::vector<DataRow> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        DataRow d;
        d.features.reserve(dims);
        for (std::size_t i = 0; i < dims; ++i) {
            d.features.push_back(static_cast<float>(csv::parse_double(row[i], "load-rows")));
        }
        d.label = static_cast<int>(csv::parse_int(row[dims], "load-rows"));
        d.group = static_cast<int>(csv::parse_int(row[dims + 1], "load-rows"));
        out.push_back(std::move(d));
    }
    return out;
}

void save_model_json(const std::string& path, const ForestModel& model) {
    json j;
    j["format"] = "traffic-forest";
    j["version"] = 1;
    j["params"] = {{"criterion", model.params.criterion},
                   {"max_depth", model.params.max_depth},
                   {"min_samples_split", model.params.min_samples_split},
                   {"n_estimators", model.params.n_estimators},
                   {"feature_subsample", model.params.feature_subsample}};
    j["seed"] = model.seed;
    j["dimensionality"] = model.dimensionality;
    j["classes"] = model.classes;
    j["oob_accuracy"] = model.oob_accuracy;
    json trees = json::array();
    for (const auto& tree : model.trees) {
        json nodes = json::array();
        for (const auto& nd : tree.nodes) {
            if (nd.feature < 0) {
                nodes.push_back(json::array({-1, nd.class_counts}));
            } else {
                nodes.push_back(json::array(
                    {nd.feature, static_cast<double>(nd.threshold), nd.left, nd.right}));
            }
        }
        trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    save_json_file(path, j, kStageModel);
}

ForestModel load_model_json(const std::string& path) {
    const json j = load_json_file(path, kStageModel);
    if (json_or<std::string>(j, "format", "") != "traffic-forest") {
        throw IothError(kStageModel, path + " is not a forest model file");
    }
    if (json_require<int>(j, "version", kStageModel) != 1) {
        throw IothError(kStageModel, "unsupported model version in " + path);
    }
    ForestModel model;
    const json& p = j.at("params");
    model.params.criterion = json_require<std::string>(p, "criterion", kStageModel);
    model.params.max_depth = json_require<int>(p, "max_depth", kStageModel);
    model.params.min_samples_split = json_require<int>(p, "min_samples_split", kStageModel);
    model.params.n_estimators = json_require<int>(p, "n_estimators", kStageModel);
    model.params.feature_subsample = json_or<int>(p, "feature_subsample", 0);
    model.seed = json_require<std::uint64_t>(j, "seed", kStageModel);
    model.dimensionality = json_require<int>(j, "dimensionality", kStageModel);
    model.classes = json_require<std::vector<int>>(j, "classes", kStageModel);
    model.oob_accuracy = json_require<double>(j, "oob_accuracy", kStageModel);
    if (!j.contains("trees") || !j.at("trees").is_array()) {
        throw IothError(kStageModel, "missing trees array in " + path);
    }
    try {
        for (const auto& jt : j.at("trees")) {
            Tree tree;
            for (const auto& jn : jt) {
                TreeNode nd;
                const int f = jn.at(0).get<int>();
                if (f < 0) {
                    nd.class_counts = jn.at(1).get<std::vector<long>>();
                } else {
                    nd.feature = f;
                    nd.threshold = static_cast<float>(jn.at(1).get<double>());
                    nd.left = jn.at(2).get<int>();
                    nd.right = jn.at(3).get<int>();
                }
                tree.nodes.push_back(std::move(nd));
            }
            model.trees.push_back(std::move(tree));
        }
    } catch (const json::exception& e) {
        throw IothError(kStageModel, std::string("malformed tree node: ") + e.what());
    }
    validate_params(model.params, kStageModel);
    return model;
}

json params_to_json(const ForestParams& p) {
    return json{{"criterion", p.criterion},
                {"max_depth", p.max_depth},
                {"min_samples_split", p.min_samples_split},
                {"n_estimators", p.n_estimators}};
}

json metrics_to_json(const Metrics& m, bool with_per_class) {
    json j{{"accuracy", m.accuracy},
           {"micro_precision", m.micro_precision},
           {"micro_recall", m.micro_recall},
           {"micro_f1", m.micro_f1},
           {"macro_precision", m.macro_precision},
           {"macro_recall", m.macro_recall},
           {"macro_f1", m.macro_f1},
           {"weighted_precision", m.weighted_precision},
           {"weighted_recall", m.weighted_recall},
           {"weighted_f1", m.weighted_f1}};
    if (with_per_class) {
        json per = json::array();
        for (const auto& s : m.per_class) {
            per.push_back(json{{"class", s.cls},
                               {"support", s.support},
                               {"precision", s.precision},
                               {"recall", s.recall},
                               {"f1", s.f1}});
        }
        j["per_class"] = std::move(per);
    }
    return j;
}

}  // namespace ioth::learn
