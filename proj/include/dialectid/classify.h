#ifndef DIALECTID_CLASSIFY_H_
#define DIALECTID_CLASSIFY_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dialectid/features.h"
#include "dialectid/ingest.h"

namespace dialectid {

// Labeled vectors from one feature space.
struct Dataset {
  std::string space_id;
  std::uint32_t dim = 0;
  std::vector<SparseVector> x;
  std::vector<std::string> y;

  std::size_t size() const { return x.size(); }
  bool empty() const { return x.empty(); }
  void add(SparseVector v, std::string label);
  // Sorted distinct labels.
  std::vector<std::string> labels() const;

  // Concatenation; spaces must agree.
  static Dataset concat(const Dataset& a, const Dataset& b);
};

struct TrainOptions {
  std::vector<double> c_grid = {0.01, 0.1, 1.0, 10.0};
  double tolerance = 1e-4;  // relative change of the dual objective per epoch
  int max_epochs = 1000;
  std::uint64_t seed = 1;
  int jobs = 1;
  // removed[i] != 0 hides feature i from training; empty means no mask.
  std::vector<std::uint8_t> removed;
};

struct BinaryFit {
  std::vector<double> w;
  double bias = 0.0;
  bool converged = false;
  int epochs = 0;
};

// L2-regularized hinge-loss SVM, bias folded in as a constant feature:
//   min_w 1/2 |w|^2 + C sum_i max(0, 1 - y_i (w.x_i + b)),  y_i in {-1, +1}.
// Solved by dual coordinate descent over a seeded per-epoch permutation; the
// permutation depends only on the seed and the sample count, so relabeling
// y -> -y yields exactly -w.
BinaryFit fit_binary(const Dataset& data, std::span<const std::int8_t> y,
                     double c, const TrainOptions& options);

// One-vs-rest linear model. Classes are kept in sorted order.
class LinearModel {
 public:
  LinearModel() = default;
  LinearModel(std::vector<std::string> classes, std::string space_id,
              std::uint32_t dim, double c);

  const std::vector<std::string>& classes() const { return classes_; }
  std::size_t num_classes() const { return classes_.size(); }
  const std::string& space_id() const { return space_id_; }
  std::uint32_t dim() const { return dim_; }
  double c() const { return c_; }
  bool converged() const { return converged_; }
  void set_converged(bool v) { converged_ = v; }

  std::span<const double> weights(std::size_t k) const;
  std::span<double> mutable_weights(std::size_t k);
  double bias(std::size_t k) const { return bias_[k]; }
  void set_bias(std::size_t k, double b) { bias_[k] = b; }

  double score(std::size_t k, const SparseVector& x) const;
  // argmax_k w_k.x + b_k; ties go to the earliest class. No space check.
  std::size_t predict_index(const SparseVector& x) const;
  // Throws Error(kSpaceMismatch) when the vector is from another space.
  const std::string& predict(const FeatureVector& v) const;
  const std::string& predict(const SparseVector& x, std::string_view space_id) const;

  std::string to_json() const;
  static LinearModel from_json(std::string_view text);
  void save(const std::string& path) const;
  static LinearModel load(const std::string& path);

 private:
  std::vector<std::string> classes_;
  std::string space_id_;
  std::uint32_t dim_ = 0;
  double c_ = 1.0;
  bool converged_ = true;
  std::vector<double> weights_;  // row-major, classes x dim
  std::vector<double> bias_;
};

// Fits every class against the rest with a fixed C. Non-converged classes
// are appended to `warnings` when given.
LinearModel fit_ovr(const Dataset& train, double c, const TrainOptions& options,
                    std::vector<std::string>* warnings = nullptr);

struct TrainResult {
  LinearModel model;
  std::vector<std::pair<double, double>> dev_f1;  // (C, weighted F1)
  std::vector<std::string> warnings;
};

// Fits one OvR model per C in the grid and keeps the one with the best
// weighted F1 on `dev` (ties: smallest C). With a single C the dev set may be
// empty. Throws Error(kDegenerateData) with fewer than two classes.
TrainResult train(const Dataset& train, const Dataset& dev,
                  const TrainOptions& options);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct EvalReport {
  std::vector<std::string> classes;
  std::vector<ClassMetrics> per_class;
  ClassMetrics weighted;  // support-weighted means; support = total
  std::vector<std::vector<std::uint64_t>> confusion;  // rows = truth
  double accuracy = 0.0;

  std::string to_json() const;
  // "class,precision,recall,f1,support" plus a final "w. avg" row.
  void write_class_csv(std::ostream& out) const;
  // Header row of predicted classes, one row per true class.
  void write_confusion_csv(std::ostream& out) const;
};

// Zero denominators yield 0 for that metric.
EvalReport report_from_confusion(std::vector<std::string> classes,
                                 std::vector<std::vector<std::uint64_t>> confusion);

// Every test label must be one of the model's classes.
EvalReport evaluate(const LinearModel& model, const Dataset& test);

struct PairCount {
  std::string a;
  std::string b;
  std::uint64_t count = 0;
};

// confusion[i][j] + confusion[j][i] for every i < j.
std::vector<PairCount> similarity_from_confusion(
    const std::vector<std::string>& classes,
    const std::vector<std::vector<std::uint64_t>>& confusion);

// ---------------------------------------------------------------------------
// Experiments

struct SplitData {
  Dataset train;
  Dataset dev;
  Dataset test;
};

using RegisterData = std::map<Register, SplitData>;

enum class ExperimentMode { kWithin, kCross, kMerged };

struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::kWithin;
  Register train_register = Register::kWeb;
  Register test_register = Register::kWeb;  // ignored for kMerged
};

struct ExperimentResult {
  EvalReport report;
  LinearModel model;
  std::vector<std::string> warnings;
};

// kWithin: train/dev/test from one register. kCross: train+dev from
// train_register, test from test_register. kMerged: union of both registers
// for each split, keeping the per-register division.
ExperimentResult run_experiment(const RegisterData& data,
                                const ExperimentConfig& config,
                                const TrainOptions& options);

struct SweepRow {
  std::string feature_set;
  Register reg = Register::kWeb;
  double weighted_f1 = 0.0;
  double c = 0.0;
};

// Within-domain runs for every (feature set, register) present.
std::vector<SweepRow> run_baseline_sweep(
    const std::map<std::string, RegisterData>& by_feature_set,
    const TrainOptions& options);

}  // namespace dialectid

#endif  // DIALECTID_CLASSIFY_H_
