#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ioth/errors.hpp"
#include "ioth/learn.hpp"
#include "ioth/rng.hpp"

using namespace ioth::learn;
using ioth::IothError;
using ioth::Rng;

namespace {

// Two well-separated blobs on feature 0; remaining features are noise.
std::vector<DataRow> separable_rows(int per_class, std::uint64_t seed = 11) {
    Rng rng(seed);
    std::vector<DataRow> rows;
    for (int cls = 1; cls <= 2; ++cls) {
        for (int i = 0; i < per_class; ++i) {
            DataRow r;
            const double center = cls == 1 ? -3.0 : 3.0;
            r.features = {static_cast<float>(center + rng.uniform(-1.0, 1.0)),
                          static_cast<float>(rng.uniform(-1.0, 1.0)),
                          static_cast<float>(rng.uniform(-1.0, 1.0)),
                          static_cast<float>(rng.uniform(-1.0, 1.0))};
            r.label = cls;
            r.group = static_cast<int>(rows.size()) / 2;  // two rows per group
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Forest assembled by hand: every tree is a single leaf, so each tree's vote
// is fixed and the majority logic can be checked in isolation.
ForestModel leaf_forest(const std::vector<int>& classes,
                        const std::vector<std::vector<long>>& leaf_counts) {
    ForestModel m;
    m.classes = classes;
    m.dimensionality = 1;
    for (const auto& counts : leaf_counts) {
        Tree t;
        TreeNode leaf;
        leaf.class_counts = counts;
        t.nodes.push_back(leaf);
        m.trees.push_back(t);
    }
    return m;
}

}  // namespace

TEST_CASE("impurity: zero on pure nodes, maximal on a uniform mix") {
    CHECK(gini_impurity({7, 0, 0}) == 0.0);
    CHECK(entropy_impurity({0, 12}) == 0.0);
    // uniform over C classes: gini = 1 - 1/C, entropy = log2(C)
    CHECK(gini_impurity({5, 5}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(gini_impurity({4, 4, 4, 4}) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(entropy_impurity({5, 5}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(entropy_impurity({4, 4, 4, 4}) == doctest::Approx(2.0).epsilon(1e-12));
    // hand value: [3,1] -> 1 - (9+1)/16
    CHECK(gini_impurity({3, 1}) == doctest::Approx(0.375).epsilon(1e-12));
    // any skew is strictly below the uniform maximum
    for (long a = 0; a <= 10; ++a) {
        if (a == 5) continue;
        CHECK(gini_impurity({a, 10 - a}) < 0.5);
        CHECK(entropy_impurity({a, 10 - a}) < 1.0);
    }
}

TEST_CASE("fit separates two clean classes and reproduces training labels") {
    const auto rows = separable_rows(20);
    ForestParams params;
    params.n_estimators = 25;
    params.max_depth = 10;
    const auto model = fit(rows, params, 99);
    CHECK(model.classes == std::vector<int>{1, 2});
    CHECK(model.dimensionality == 4);
    CHECK(static_cast<int>(model.trees.size()) == 25);
    for (const auto& r : rows) {
        CHECK(predict_one(model, r.features) == r.label);
    }
    CHECK(model.oob_accuracy > 0.95);
}

TEST_CASE("fit rejects empty data, one-class data and ragged rows") {
    ForestParams params;
    CHECK_THROWS_AS(fit({}, params, 1), IothError);

    std::vector<DataRow> one_class;
    for (int i = 0; i < 10; ++i) {
        one_class.push_back({{static_cast<float>(i)}, 7, i});
    }
    CHECK_THROWS_AS(fit(one_class, params, 1), IothError);

    auto ragged = separable_rows(5);
    ragged[3].features.pop_back();
    CHECK_THROWS_AS(fit(ragged, params, 1), IothError);
}

TEST_CASE("predict rejects a feature vector of the wrong width") {
    const auto model = fit(separable_rows(10), ForestParams{"gini", 5, 2, 5, 0}, 3);
    CHECK_THROWS_AS(predict_one(model, {1.0f, 2.0f}), IothError);
    CHECK_THROWS_AS(tree_votes(model, {1.0f, 2.0f, 3.0f, 4.0f, 5.0f}), IothError);
}

TEST_CASE("bootstrap samples are same-size and drawn with replacement") {
    // 2-class data with unique feature values: a fully grown tree has pure
    // leaves, so leaf counts sum to the bootstrap size and any leaf count
    // >= 2 is a row drawn more than once.
    std::vector<DataRow> rows;
    for (int i = 0; i < 100; ++i) {
        rows.push_back({{static_cast<float>(i)}, 1 + (i % 2), i});
    }
    ForestParams params;
    params.n_estimators = 8;
    params.max_depth = 64;
    params.feature_subsample = 1;
    const auto model = fit(rows, params, 2024);
    bool saw_duplicate = false;
    for (const auto& tree : model.trees) {
        long total = 0;
        for (const auto& node : tree.nodes) {
            if (node.feature >= 0) continue;
            long leaf_total = 0;
            for (long c : node.class_counts) leaf_total += c;
            total += leaf_total;
            if (leaf_total >= 2) saw_duplicate = true;
        }
        CHECK(total == 100);  // bootstrap size == training size
    }
    CHECK(saw_duplicate);  // P(no duplicate in any of 8 draws) ~ 1e-337
}

TEST_CASE("forest predictions equal an independent tally of per-tree votes") {
    const auto rows = separable_rows(15, 5);
    ForestParams params;
    params.n_estimators = 21;
    const auto model = fit(rows, params, 7);
    Rng rng(123);
    for (int i = 0; i < 50; ++i) {
        const std::vector<float> x = {static_cast<float>(rng.uniform(-5.0, 5.0)),
                                      static_cast<float>(rng.uniform(-2.0, 2.0)),
                                      static_cast<float>(rng.uniform(-2.0, 2.0)),
                                      static_cast<float>(rng.uniform(-2.0, 2.0))};
        const auto votes = tree_votes(model, x);
        REQUIRE(votes.size() == 21);
        std::map<int, int> tally;
        for (int v : votes) ++tally[v];
        int best = -1, best_count = -1;
        for (const auto& [cls, count] : tally) {  // map order -> smallest id wins ties
            if (count > best_count) {
                best = cls;
                best_count = count;
            }
        }
        CHECK(predict_one(model, x) == best);
    }
}

TEST_CASE("vote ties resolve to the smallest class id") {
    // two leaf-trees voting class 3 vs class 1: 1-1 tie -> class 1
    const auto tied = leaf_forest({1, 3}, {{0, 9}, {9, 0}});
    CHECK(predict_one(tied, {0.0f}) == 1);
    // within one leaf, a 2-2 count ties to the smaller class as well
    const auto leaf_tie = leaf_forest({2, 5}, {{2, 2}});
    CHECK(predict_one(leaf_tie, {0.0f}) == 2);
    // sanity: a real majority still wins over the tie rule
    const auto majority = leaf_forest({1, 3}, {{0, 9}, {9, 0}, {0, 9}});
    CHECK(predict_one(majority, {0.0f}) == 3);
}

TEST_CASE("same seed gives byte-identical models; thread count is irrelevant") {
    const auto rows = separable_rows(25, 31);
    ForestParams params;
    params.n_estimators = 30;
    const auto a = fit(rows, params, 555, 1);
    const auto b = fit(rows, params, 555, 1);
    const auto c = fit(rows, params, 555, 4);
    save_model_json("learn_model_a.json", a);
    save_model_json("learn_model_b.json", b);
    save_model_json("learn_model_c.json", c);
    const auto bytes_a = file_bytes("learn_model_a.json");
    CHECK(bytes_a == file_bytes("learn_model_b.json"));
    CHECK(bytes_a == file_bytes("learn_model_c.json"));
    // different seed actually changes the forest
    save_model_json("learn_model_d.json", fit(rows, params, 556, 1));
    CHECK(bytes_a != file_bytes("learn_model_d.json"));
    for (const char* f : {"learn_model_a.json", "learn_model_b.json", "learn_model_c.json",
                          "learn_model_d.json"}) {
        std::remove(f);
    }
}

TEST_CASE("model json round-trips through save and load") {
    const auto rows = separable_rows(12, 77);
    const auto model = fit(rows, ForestParams{"entropy", 8, 3, 9, 0}, 42);
    save_model_json("learn_roundtrip.json", model);
    const auto loaded = load_model_json("learn_roundtrip.json");
    CHECK(loaded.params.criterion == "entropy");
    CHECK(loaded.params.max_depth == 8);
    CHECK(loaded.classes == model.classes);
    CHECK(loaded.oob_accuracy == model.oob_accuracy);
    for (const auto& r : rows) {
        CHECK(predict_one(loaded, r.features) == predict_one(model, r.features));
    }
    // loading and re-saving is byte-stable
    save_model_json("learn_roundtrip2.json", loaded);
    CHECK(file_bytes("learn_roundtrip.json") == file_bytes("learn_roundtrip2.json"));
    std::remove("learn_roundtrip.json");
    std::remove("learn_roundtrip2.json");
}

TEST_CASE("model loader rejects files that are not forest models") {
    {
        std::ofstream out("learn_bad_model.json");
        out << "{\"format\": \"something-else\", \"version\": 1}\n";
    }
    CHECK_THROWS_AS(load_model_json("learn_bad_model.json"), IothError);
    std::remove("learn_bad_model.json");
}

TEST_CASE("out-of-bag accuracy tracks the scikit-learn reference on a benchmark set") {
    // tests/fixtures/synth4class.csv is generated once by
    // tests/tools/make_oob_fixture.py, which also prints the value below.
    const auto rows = load_rows_csv(std::string(IOTH_SOURCE_DIR) +
                                    "/tests/fixtures/synth4class.csv");
    REQUIRE(rows.size() == 200);
    REQUIRE(rows[0].features.size() == 12);
    ForestParams params;  // 200 gini trees, sqrt feature subsample
    const auto model = fit(rows, params, 42);
    const double sklearn_oob = 0.87;
    CHECK(std::abs(model.oob_accuracy - sklearn_oob) <= 0.05);
}

TEST_CASE("metrics match a worked confusion-matrix example") {
    // class 1: 4 examples, 3 correct; class 2: 6 examples, 4 correct,
    // the 2 misses predicted as class 1.
    const std::vector<int> truth = {1, 1, 1, 1, 2, 2, 2, 2, 2, 2};
    const std::vector<int> pred = {1, 1, 1, 2, 1, 1, 2, 2, 2, 2};
    const auto m = evaluate(truth, pred);
    CHECK(std::abs(m.micro_f1 - 0.7) < 1e-12);
    CHECK(std::abs(m.micro_precision - 0.7) < 1e-12);
    CHECK(std::abs(m.micro_recall - 0.7) < 1e-12);
    CHECK(std::abs(m.accuracy - 0.7) < 1e-12);
    CHECK(std::abs(m.macro_precision - 0.7) < 1e-12);  // (3/5 + 4/5) / 2
    CHECK(std::abs(m.macro_recall - 17.0 / 24.0) < 1e-12);  // (3/4 + 2/3) / 2
    REQUIRE(m.per_class.size() == 2);
    CHECK(m.per_class[0].cls == 1);
    CHECK(std::abs(m.per_class[0].precision - 0.6) < 1e-12);
    CHECK(std::abs(m.per_class[0].recall - 0.75) < 1e-12);
    CHECK(m.per_class[0].support == 4);
    CHECK(std::abs(m.per_class[1].precision - 0.8) < 1e-12);
    CHECK(std::abs(m.per_class[1].recall - 2.0 / 3.0) < 1e-12);
    // weighted recall collapses to accuracy for single-label data
    CHECK(std::abs(m.weighted_recall - m.accuracy) < 1e-12);
}

TEST_CASE("micro precision, recall and F1 all equal accuracy on random labelings") {
    Rng rng(2718);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_int(std::uint64_t{60}));
        const int classes = 2 + static_cast<int>(rng.uniform_int(std::uint64_t{5}));
        std::vector<int> truth(static_cast<std::size_t>(n)), pred(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            truth[static_cast<std::size_t>(i)] =
                static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(classes)));
            pred[static_cast<std::size_t>(i)] =
                static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(classes)));
        }
        const auto m = evaluate(truth, pred);
        CHECK(m.micro_precision == doctest::Approx(m.accuracy).epsilon(1e-12));
        CHECK(m.micro_recall == doctest::Approx(m.accuracy).epsilon(1e-12));
        CHECK(m.micro_f1 == doctest::Approx(m.accuracy).epsilon(1e-12));
        CHECK(m.weighted_recall == doctest::Approx(m.accuracy).epsilon(1e-12));
    }
}

TEST_CASE("metrics are invariant under relabeling the class ids") {
    Rng rng(31415);
    std::vector<int> truth, pred;
    for (int i = 0; i < 80; ++i) {
        truth.push_back(1 + static_cast<int>(rng.uniform_int(std::uint64_t{4})));
        pred.push_back(1 + static_cast<int>(rng.uniform_int(std::uint64_t{4})));
    }
    auto remap = [](int c) { return 100 - 10 * c; };  // order-reversing bijection
    std::vector<int> truth2, pred2;
    for (int c : truth) truth2.push_back(remap(c));
    for (int c : pred) pred2.push_back(remap(c));
    const auto a = evaluate(truth, pred);
    const auto b = evaluate(truth2, pred2);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.macro_precision == doctest::Approx(b.macro_precision).epsilon(1e-12));
    CHECK(a.macro_recall == doctest::Approx(b.macro_recall).epsilon(1e-12));
    CHECK(a.macro_f1 == doctest::Approx(b.macro_f1).epsilon(1e-12));
    CHECK(a.weighted_f1 == doctest::Approx(b.weighted_f1).epsilon(1e-12));
}

TEST_CASE("classes only present in predictions get precision 0 and stay out of the means") {
    const std::vector<int> truth = {1, 1, 2};
    const std::vector<int> pred = {1, 3, 2};
    const auto m = evaluate(truth, pred);
    REQUIRE(m.per_class.size() == 3);
    CHECK(m.per_class[2].cls == 3);
    CHECK(m.per_class[2].support == 0);
    CHECK(m.per_class[2].precision == 0.0);
    // macro means over truth classes {1, 2} only
    CHECK(m.macro_precision == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.macro_recall == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("evaluate rejects empty and mismatched inputs") {
    CHECK_THROWS_AS(evaluate({}, {}), IothError);
    CHECK_THROWS_AS(evaluate({1, 2}, {1}), IothError);
}

TEST_CASE("default grid expands to the full 54-combination table") {
    const auto combos = expand_grid(default_grid());
    REQUIRE(combos.size() == 54);
    std::set<std::string> seen;
    for (const auto& p : combos) {
        seen.insert(p.criterion + "/" + std::to_string(p.max_depth) + "/" +
                    std::to_string(p.min_samples_split) + "/" + std::to_string(p.n_estimators));
        CHECK((p.criterion == "gini" || p.criterion == "entropy"));
    }
    CHECK(seen.size() == 54);  // all distinct
    // expansion order is lexicographic in (criterion, depth, split, trees)
    CHECK(combos.front().criterion == "entropy");
    CHECK(combos.front().max_depth == 20);
    CHECK(combos.front().min_samples_split == 2);
    CHECK(combos.front().n_estimators == 200);
    CHECK(combos.back().criterion == "gini");
    CHECK(combos.back().max_depth == 80);
    CHECK(combos.back().min_samples_split == 10);
    CHECK(combos.back().n_estimators == 800);
}

TEST_CASE("grid expansion rejects empty dimensions and bad values") {
    GridSpec g;
    g.criterion.clear();
    CHECK_THROWS_AS(expand_grid(g), IothError);
    GridSpec h;
    h.criterion = {"gini", "entropia"};
    CHECK_THROWS_AS(expand_grid(h), IothError);
}

TEST_CASE("fold assignment partitions press groups into balanced folds") {
    const auto rows = separable_rows(30);  // 30 groups of 2 rows
    const int folds = 7;
    const auto fold_of = fold_assignment(rows, folds, 9001);
    std::set<int> groups;
    for (const auto& r : rows) groups.insert(r.group);
    REQUIRE(fold_of.size() == groups.size());  // every group exactly once
    std::map<int, int> sizes;
    for (const auto& [group, fold] : fold_of) {
        CHECK(groups.count(group) == 1);
        CHECK(fold >= 0);
        CHECK(fold < folds);
        ++sizes[fold];
    }
    REQUIRE(static_cast<int>(sizes.size()) == folds);  // no empty fold
    int lo = 1 << 30, hi = 0;
    for (const auto& [fold, n] : sizes) {
        lo = std::min(lo, n);
        hi = std::max(hi, n);
    }
    CHECK(hi - lo <= 1);
    // deterministic in the seed
    CHECK(fold_assignment(rows, folds, 9001) == fold_of);
    CHECK(fold_assignment(rows, folds, 9002) != fold_of);
}

TEST_CASE("grid search refuses cross-validation with fewer press groups than folds") {
    auto rows = separable_rows(10);
    for (auto& r : rows) r.group %= 5;  // collapse to 5 groups
    GridSpec g;
    g.criterion = {"gini"};
    g.max_depth = {10};
    g.min_samples_split = {2};
    g.n_estimators = {5};
    CHECK_THROWS_WITH_AS(static_cast<void>(grid_search(rows, g, 10, 1)),
                         doctest::Contains("press groups"), IothError);
}

TEST_CASE("a one-combination grid wins trivially and fills one table cell") {
    const auto rows = separable_rows(15);
    GridSpec g;
    g.criterion = {"entropy"};
    g.max_depth = {6};
    g.min_samples_split = {2};
    g.n_estimators = {10};
    const auto result = grid_search(rows, g, 3, 77);
    REQUIRE(result.table.size() == 1);
    CHECK(result.best.criterion == "entropy");
    CHECK(result.best.max_depth == 6);
    CHECK(result.best.n_estimators == 10);
    CHECK(result.table[0].mean_accuracy > 0.9);  // trivially separable
}

TEST_CASE("grid ties break toward the lexicographically smallest parameters") {
    // data so easy every combination scores identically
    const auto rows = separable_rows(12);
    GridSpec g;
    g.criterion = {"gini"};
    g.max_depth = {40, 20};
    g.min_samples_split = {2};
    g.n_estimators = {50, 25};
    const auto result = grid_search(rows, g, 3, 5);
    REQUIRE(result.table.size() == 4);
    const double acc0 = result.table[0].mean_accuracy;
    bool all_equal = true;
    for (const auto& cell : result.table) {
        if (cell.mean_accuracy != acc0 || cell.mean_macro_f1 != result.table[0].mean_macro_f1) {
            all_equal = false;
        }
    }
    REQUIRE(all_equal);  // precondition for the tie-break to be exercised
    CHECK(result.best.max_depth == 20);
    CHECK(result.best.n_estimators == 25);
}

TEST_CASE("repeated experiment: rep count, split sizes and variance of a single rep") {
    const auto rows = separable_rows(20);  // 40 rows, 20 groups
    GridSpec g;
    g.criterion = {"gini"};
    g.max_depth = {8};
    g.min_samples_split = {2};
    g.n_estimators = {10};

    const auto single = repeated_experiment(rows, g, 1, 0.75, false, 3, 1234);
    REQUIRE(single.repetitions.size() == 1);
    CHECK(single.mean.macro_f1 == single.repetitions[0].metrics.macro_f1);
    CHECK(single.variance.macro_f1 == 0.0);
    CHECK(single.variance.accuracy == 0.0);

    const auto multi = repeated_experiment(rows, g, 4, 0.75, false, 3, 1234);
    REQUIRE(multi.repetitions.size() == 4);
    double mean = 0.0;
    for (const auto& r : multi.repetitions) mean += r.metrics.accuracy;
    mean /= 4.0;
    CHECK(multi.mean.accuracy == doctest::Approx(mean).epsilon(1e-12));
    double var = 0.0;
    for (const auto& r : multi.repetitions) {
        var += (r.metrics.accuracy - mean) * (r.metrics.accuracy - mean);
    }
    CHECK(multi.variance.accuracy == doctest::Approx(var / 4.0).epsilon(1e-12));
}

TEST_CASE("repeated experiment is reproducible from the master seed") {
    const auto rows = separable_rows(16);
    GridSpec g;
    g.criterion = {"gini"};
    g.max_depth = {8};
    g.min_samples_split = {2};
    g.n_estimators = {8};
    const auto a = repeated_experiment(rows, g, 3, 0.75, false, 3, 42);
    const auto b = repeated_experiment(rows, g, 3, 0.75, false, 3, 42);
    REQUIRE(a.repetitions.size() == b.repetitions.size());
    for (std::size_t i = 0; i < a.repetitions.size(); ++i) {
        CHECK(a.repetitions[i].metrics.accuracy == b.repetitions[i].metrics.accuracy);
        CHECK(a.repetitions[i].metrics.macro_f1 == b.repetitions[i].metrics.macro_f1);
    }
    CHECK(a.mean.macro_f1 == b.mean.macro_f1);
    CHECK(a.variance.macro_f1 == b.variance.macro_f1);
}

TEST_CASE("grouped splits move whole presses into the held-out set") {
    // 3 rows per group; under a grouped split every test set is a union of
    // groups, so its size must be a multiple of 3. A packet split of 48 rows
    // always holds out exactly 12.
    std::vector<DataRow> rows;
    Rng rng(8);
    for (int grp = 0; grp < 16; ++grp) {
        for (int i = 0; i < 3; ++i) {
            DataRow r;
            const double center = grp % 2 == 0 ? -3.0 : 3.0;
            r.features = {static_cast<float>(center + rng.uniform(-1.0, 1.0)),
                          static_cast<float>(rng.uniform(-1.0, 1.0))};
            r.label = 1 + grp % 2;
            r.group = grp;
            rows.push_back(std::move(r));
        }
    }
    GridSpec g;
    g.criterion = {"gini"};
    g.max_depth = {8};
    g.min_samples_split = {2};
    g.n_estimators = {8};

    const auto grouped = repeated_experiment(rows, g, 3, 0.75, true, 3, 99);
    for (const auto& rep : grouped.repetitions) {
        long test_n = 0;
        for (const auto& s : rep.metrics.per_class) test_n += s.support;
        CHECK(test_n % 3 == 0);
        CHECK(test_n == 12);  // 4 of 16 groups held out
    }
    const auto packet = repeated_experiment(rows, g, 2, 0.75, false, 3, 99);
    for (const auto& rep : packet.repetitions) {
        long test_n = 0;
        for (const auto& s : rep.metrics.per_class) test_n += s.support;
        CHECK(test_n == 12);  // 48 - floor(0.75 * 48)
    }
}

TEST_CASE("repeated experiment validates its arguments") {
    const auto rows = separable_rows(8);
    GridSpec g;
    g.criterion = {"gini"};
    g.max_depth = {4};
    g.min_samples_split = {2};
    g.n_estimators = {4};
    CHECK_THROWS_AS(repeated_experiment(rows, g, 0, 0.75, false, 2, 1), IothError);
    CHECK_THROWS_AS(repeated_experiment(rows, g, 1, 0.0, false, 2, 1), IothError);
    CHECK_THROWS_AS(repeated_experiment(rows, g, 1, 1.0, false, 2, 1), IothError);
}

TEST_CASE("dataset rows convert to training rows on header bits only") {
    std::vector<ioth::netcapture::LabeledRow> rows(3);
    rows[0].row.rel_timestamp_s = 12.5;
    rows[0].row.bits.fill(0);
    rows[0].row.bits[5] = 1;
    rows[0].row.bits[700] = -1;
    rows[0].label = 2;
    rows[0].press_index = 9;
    rows[1].label = -1;  // unassigned packet: excluded from training
    rows[2].row.bits.fill(1);
    rows[2].label = 4;
    rows[2].press_index = 10;

    const auto converted = rows_from_dataset(rows);
    REQUIRE(converted.size() == 2);  // the unlabeled row is dropped
    CHECK(converted[0].features.size() == 800);  // bits only, no timestamp column
    CHECK(converted[0].features[5] == 1.0f);
    CHECK(converted[0].features[700] == -1.0f);
    CHECK(converted[0].label == 2);
    CHECK(converted[0].group == 9);
    CHECK(converted[1].label == 4);
}

TEST_CASE("benchmark csv loader insists on the label and group columns") {
    {
        std::ofstream out("learn_bad_rows.csv");
        out << "f0,f1,label\n1,2,1\n";
    }
    CHECK_THROWS_AS(load_rows_csv("learn_bad_rows.csv"), IothError);
    std::remove("learn_bad_rows.csv");
}
