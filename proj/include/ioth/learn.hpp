#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ioth/json_util.hpp"
#include "ioth/netcapture.hpp"

namespace ioth::learn {

// One training example: feature vector, class label, and the press it came
// from (the grouping key for leakage-safe cross-validation).
struct DataRow {
    std::vector<float> features;
    int label = 0;
    int group = 0;
};

struct ForestParams {
    std::string criterion = "gini";  // gini | entropy
    int max_depth = 40;
    int min_samples_split = 2;
    int n_estimators = 200;
    int feature_subsample = 0;  // features considered per split; 0 = ceil(sqrt(d))
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    float threshold = 0.0f;
    int left = -1;
    int right = -1;
    std::vector<long> class_counts;  // leaf only, indexed by class position
};

struct Tree {
    std::vector<TreeNode> nodes;  // node 0 is the root
};

struct ForestModel {
    ForestParams params;
    std::uint64_t seed = 0;
    int dimensionality = 0;
    std::vector<int> classes;  // sorted distinct labels
    std::vector<Tree> trees;
    double oob_accuracy = 0.0;
};

double gini_impurity(const std::vector<long>& counts);
double entropy_impurity(const std::vector<long>& counts);

// Trains a bagged forest: each tree fits a bootstrap sample of the rows and
// considers a fresh random feature subset at every split. Per-tree seeds are
// derived up front, so the result is identical for any thread count.
ForestModel fit(const std::vector<DataRow>& rows, const ForestParams& params,
                std::uint64_t seed, int threads = 1);

// Per-tree votes for one example, in tree order (the vote-count oracle).
std::vector<int> tree_votes(const ForestModel& model, const std::vector<float>& features);

// Majority vote across trees; ties go to the smallest class id.
int predict_one(const ForestModel& model, const std::vector<float>& features);
std::vector<int> predict(const ForestModel& model,
                         const std::vector<std::vector<float>>& rows);

struct ClassScore {
    int cls = 0;
    long support = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct Metrics {
    double accuracy = 0.0;
    double micro_precision = 0.0, micro_recall = 0.0, micro_f1 = 0.0;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
    std::vector<ClassScore> per_class;
};

Metrics evaluate(const std::vector<int>& truth, const std::vector<int>& predicted);

struct GridSpec {
    std::vector<std::string> criterion{"gini", "entropy"};
    std::vector<int> max_depth{20, 40, 80};
    std::vector<int> min_samples_split{2, 5, 10};
    std::vector<int> n_estimators{200, 400, 800};
};

// The published hyperparameter grid (54 combinations).
GridSpec default_grid();
GridSpec grid_from_json(const json& spec);
GridSpec grid_from_json_file(const std::string& path);
std::vector<ForestParams> expand_grid(const GridSpec& grid);

struct CvCell {
    ForestParams params;
    double mean_accuracy = 0.0;
    double mean_macro_precision = 0.0;
    double mean_macro_recall = 0.0;
    double mean_macro_f1 = 0.0;
};

struct GridSearchResult {
    ForestParams best;
    std::vector<CvCell> table;
};

// Deterministic fold label per distinct press group: every group lands in
// exactly one fold and fold sizes (in groups) differ by at most one.
std::map<int, int> fold_assignment(const std::vector<DataRow>& rows, int folds,
                                   std::uint64_t seed);

// k-fold CV where folds partition the press groups (all packets of a press
// stay in one fold). Winner: highest mean accuracy, ties by macro F1, then
// the lexicographically smallest parameter tuple.
GridSearchResult grid_search(const std::vector<DataRow>& rows, const GridSpec& grid,
                             int folds, std::uint64_t seed, int threads = 1);

struct RepetitionOutcome {
    Metrics metrics;
    ForestParams chosen;
};

struct RepeatedReport {
    std::vector<RepetitionOutcome> repetitions;
    Metrics mean;
    Metrics variance;  // population variance over the repetitions
};

// The full protocol: per repetition a fresh train/test split (by packet, or
// by press group when group_split), grid search on the training part, refit
// with the winner, score on the held-out part; means and variances over all
// repetitions.
RepeatedReport repeated_experiment(const std::vector<DataRow>& rows, const GridSpec& grid,
                                   int repetitions, double train_fraction, bool group_split,
                                   int folds, std::uint64_t seed, int threads = 1);

// Classifier inputs are the 800 header-bit features only; the timestamp
// column is bookkeeping, not signal, and feeding it to the forest would let
// packet-level splits memorize press windows instead of header signatures.
std::vector<DataRow> rows_from_dataset(const std::vector<netcapture::LabeledRow>& rows);

// Generic numeric CSV (f0..fN,label,group) for benchmark datasets.
std::vector<DataRow> load_rows_csv(const std::string& path);

void save_model_json(const std::string& path, const ForestModel& model);
ForestModel load_model_json(const std::string& path);

// Report plumbing shared by the train/report commands.
json params_to_json(const ForestParams& p);
json metrics_to_json(const Metrics& m, bool with_per_class = true);

}  // namespace ioth::learn
