#include "dialectid/classify.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "dialectid/error.h"
#include "dialectid/parallel.h"
#include "dialectid/random.h"
#include "dialectid/text.h"
#include "json.hpp"

namespace dialectid {

void Dataset::add(SparseVector v, std::string label) {
  x.push_back(std::move(v));
  y.push_back(std::move(label));
}

std::vector<std::string> Dataset::labels() const {
  std::set<std::string> s(y.begin(), y.end());
  return {s.begin(), s.end()};
}

Dataset Dataset::concat(const Dataset& a, const Dataset& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.space_id != b.space_id || a.dim != b.dim) {
    throw Error(ErrorCode::kSpaceMismatch,
                "cannot merge datasets from " + a.space_id + " and " + b.space_id);
  }
  Dataset out = a;
  out.x.insert(out.x.end(), b.x.begin(), b.x.end());
  out.y.insert(out.y.end(), b.y.begin(), b.y.end());
  return out;
}

// ---------------------------------------------------------------------------
// Solver

namespace {

std::vector<SparseVector> apply_mask(const std::vector<SparseVector>& x,
                                     const std::vector<std::uint8_t>& removed) {
  std::vector<SparseVector> out;
  out.reserve(x.size());
  for (const auto& v : x) {
    SparseVector m;
    for (std::size_t k = 0; k < v.index.size(); ++k) {
      const std::uint32_t i = v.index[k];
      if (i < removed.size() && removed[i]) continue;
      m.index.push_back(i);
      m.value.push_back(v.value[k]);
    }
    out.push_back(std::move(m));
  }
  return out;
}

BinaryFit solve_dual_cd(const std::vector<SparseVector>& x,
                        std::span<const std::int8_t> y, std::uint32_t dim,
                        double c, const TrainOptions& options) {
  const std::size_t n = x.size();
  BinaryFit fit;
  fit.w.assign(dim, 0.0);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> qd(n, 1.0);  // the constant bias feature contributes 1
  for (std::size_t i = 0; i < n; ++i) {
    for (double v : x[i].value) qd[i] += v * v;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(options.seed);

  double b = 0.0;
  double prev_objective = 0.0;
  for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      const double yi = y[i];
      const double g = yi * (x[i].dot(fit.w) + b) - 1.0;
      double pg = g;
      if (alpha[i] == 0.0) {
        pg = std::min(g, 0.0);
      } else if (alpha[i] == c) {
        pg = std::max(g, 0.0);
      }
      if (pg == 0.0) continue;
      const double old = alpha[i];
      alpha[i] = std::min(std::max(old - g / qd[i], 0.0), c);
      const double d = (alpha[i] - old) * yi;
      if (d == 0.0) continue;
      const auto& xi = x[i];
      for (std::size_t k = 0; k < xi.index.size(); ++k) {
        fit.w[xi.index[k]] += d * xi.value[k];
      }
      b += d;
    }
    double sum_alpha = 0.0;
    for (double a : alpha) sum_alpha += a;
    double wnorm = b * b;
    for (double v : fit.w) wnorm += v * v;
    const double objective = sum_alpha - 0.5 * wnorm;
    fit.epochs = epoch;
    if (std::fabs(objective - prev_objective) <=
        options.tolerance * std::fabs(objective)) {
      fit.converged = true;
      break;
    }
    prev_objective = objective;
  }
  fit.bias = b;
  return fit;
}

void check_c(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw Error(ErrorCode::kInvalidArgument, "C must be a positive number");
  }
}

}  // namespace

BinaryFit fit_binary(const Dataset& data, std::span<const std::int8_t> y,
                     double c, const TrainOptions& options) {
  check_c(c);
  if (y.size() != data.size()) {
    throw Error(ErrorCode::kInvalidArgument, "label count differs from sample count");
  }
  if (options.removed.empty()) return solve_dual_cd(data.x, y, data.dim, c, options);
  return solve_dual_cd(apply_mask(data.x, options.removed), y, data.dim, c, options);
}

// ---------------------------------------------------------------------------
// LinearModel

LinearModel::LinearModel(std::vector<std::string> classes, std::string space_id,
                         std::uint32_t dim, double c)
    : classes_(std::move(classes)),
      space_id_(std::move(space_id)),
      dim_(dim),
      c_(c),
      weights_(classes_.size() * static_cast<std::size_t>(dim), 0.0),
      bias_(classes_.size(), 0.0) {}

std::span<const double> LinearModel::weights(std::size_t k) const {
  return {weights_.data() + k * dim_, dim_};
}

std::span<double> LinearModel::mutable_weights(std::size_t k) {
  return {weights_.data() + k * dim_, dim_};
}

double LinearModel::score(std::size_t k, const SparseVector& x) const {
  const double* w = weights_.data() + k * dim_;
  double s = bias_[k];
  for (std::size_t j = 0; j < x.index.size(); ++j) {
    if (x.index[j] < dim_) s += w[x.index[j]] * x.value[j];
  }
  return s;
}

std::size_t LinearModel::predict_index(const SparseVector& x) const {
  std::size_t best = 0;
  double best_score = -INFINITY;
  for (std::size_t k = 0; k < classes_.size(); ++k) {
    const double s = score(k, x);
    if (s > best_score) {
      best = k;
      best_score = s;
    }
  }
  return best;
}

const std::string& LinearModel::predict(const SparseVector& x,
                                        std::string_view space_id) const {
  if (space_id != space_id_) {
    throw Error(ErrorCode::kSpaceMismatch, "model space " + space_id_ +
                                               " cannot score a vector from " +
                                               std::string(space_id));
  }
  return classes_[predict_index(x)];
}

const std::string& LinearModel::predict(const FeatureVector& v) const {
  return predict(v.values, v.space.id());
}

std::string LinearModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "dialectid-linear-model";
  j["version"] = 1;
  j["space"] = space_id_;
  j["dim"] = dim_;
  j["C"] = c_;
  j["converged"] = converged_;
  j["classes"] = classes_;
  j["bias"] = bias_;
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < classes_.size(); ++k) {
    const auto w = weights(k);
    rows.push_back(std::vector<double>(w.begin(), w.end()));
  }
  j["weights"] = std::move(rows);
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

LinearModel LinearModel::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text.begin(), text.end());
    if (j.at("format") != "dialectid-linear-model" || j.at("version") != 1) {
      throw Error(ErrorCode::kParse, "not a version-1 dialectid model");
    }
    LinearModel m(j.at("classes").get<std::vector<std::string>>(),
                  j.at("space").get<std::string>(), j.at("dim").get<std::uint32_t>(),
                  j.at("C").get<double>());
    m.converged_ = j.value("converged", true);
    const auto bias = j.at("bias").get<std::vector<double>>();
    const auto& rows = j.at("weights");
    if (bias.size() != m.num_classes() || rows.size() != m.num_classes()) {
      throw Error(ErrorCode::kParse, "model has inconsistent class counts");
    }
    for (std::size_t k = 0; k < m.num_classes(); ++k) {
      const auto w = rows[k].get<std::vector<double>>();
      if (w.size() != m.dim_) throw Error(ErrorCode::kParse, "weight row has the wrong length");
      std::copy(w.begin(), w.end(), m.mutable_weights(k).begin());
      m.bias_[k] = bias[k];
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad model file: ") + e.what());
  }
}

void LinearModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << to_json() << '\n';
}

LinearModel LinearModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

// ---------------------------------------------------------------------------
// Training

LinearModel fit_ovr(const Dataset& train, double c, const TrainOptions& options,
                    std::vector<std::string>* warnings) {
  check_c(c);
  const auto classes = train.labels();
  if (classes.size() < 2) {
    throw Error(ErrorCode::kDegenerateData,
                "training needs at least two classes, got " +
                    std::to_string(classes.size()));
  }
  const std::vector<SparseVector> masked =
      options.removed.empty() ? std::vector<SparseVector>()
                              : apply_mask(train.x, options.removed);
  const std::vector<SparseVector>& x = options.removed.empty() ? train.x : masked;

  LinearModel model(classes, train.space_id, train.dim, c);
  std::vector<BinaryFit> fits(classes.size());
  parallel_for(classes.size(), options.jobs, [&](std::size_t k) {
    std::vector<std::int8_t> y(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      y[i] = train.y[i] == classes[k] ? 1 : -1;
    }
    fits[k] = solve_dual_cd(x, y, train.dim, c, options);
  });
  bool all_converged = true;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    std::copy(fits[k].w.begin(), fits[k].w.end(), model.mutable_weights(k).begin());
    model.set_bias(k, fits[k].bias);
    if (!fits[k].converged) {
      all_converged = false;
      if (warnings != nullptr) {
        warnings->push_back("NonConvergence: class " + classes[k] + " at C=" +
                            format_number(c) + " stopped after " +
                            std::to_string(fits[k].epochs) + " epochs");
      }
    }
  }
  model.set_converged(all_converged);
  return model;
}

TrainResult train(const Dataset& train_set, const Dataset& dev,
                  const TrainOptions& options) {
  if (options.c_grid.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "C grid is empty");
  }
  const auto classes = train_set.labels();
  if (classes.size() < 2) {
    throw Error(ErrorCode::kDegenerateData,
                "training needs at least two classes, got " +
                    std::to_string(classes.size()));
  }
  std::vector<double> grid = options.c_grid;
  for (double c : grid) check_c(c);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.size() > 1 && dev.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "tuning C needs a non-empty dev set");
  }

  TrainResult result;
  bool have_best = false;
  double best_f1 = -1.0;
  for (double c : grid) {
    std::vector<std::string> warnings;
    LinearModel model = fit_ovr(train_set, c, options, &warnings);
    double f1 = 0.0;
    if (!dev.empty()) f1 = evaluate(model, dev).weighted.f1;
    result.dev_f1.emplace_back(c, f1);
    if (!have_best || f1 > best_f1) {
      have_best = true;
      best_f1 = f1;
      result.model = std::move(model);
      result.warnings = std::move(warnings);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation

EvalReport report_from_confusion(std::vector<std::string> classes,
                                 std::vector<std::vector<std::uint64_t>> confusion) {
  const std::size_t k = classes.size();
  if (confusion.size() != k) {
    throw Error(ErrorCode::kInvalidArgument, "confusion matrix must be square");
  }
  for (const auto& row : confusion) {
    if (row.size() != k) {
      throw Error(ErrorCode::kInvalidArgument, "confusion matrix must be square");
    }
  }
  EvalReport r;
  r.classes = std::move(classes);
  r.confusion = std::move(confusion);
  r.per_class.resize(k);
  std::uint64_t total = 0;
  std::uint64_t correct = 0;
  for (std::size_t i = 0; i < k; ++i) {
    std::uint64_t support = 0;
    std::uint64_t predicted = 0;
    for (std::size_t j = 0; j < k; ++j) {
      support += r.confusion[i][j];
      predicted += r.confusion[j][i];
    }
    const double tp = static_cast<double>(r.confusion[i][i]);
    ClassMetrics& m = r.per_class[i];
    m.support = support;
    m.precision = predicted == 0 ? 0.0 : tp / static_cast<double>(predicted);
    m.recall = support == 0 ? 0.0 : tp / static_cast<double>(support);
    m.f1 = m.precision + m.recall == 0.0
               ? 0.0
               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    total += support;
    correct += r.confusion[i][i];
  }
  r.weighted.support = total;
  if (total > 0) {
    for (const auto& m : r.per_class) {
      const double w = static_cast<double>(m.support) / static_cast<double>(total);
      r.weighted.precision += w * m.precision;
      r.weighted.recall += w * m.recall;
      r.weighted.f1 += w * m.f1;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  }
  return r;
}

EvalReport evaluate(const LinearModel& model, const Dataset& test) {
  if (test.empty()) throw Error(ErrorCode::kInvalidArgument, "test set is empty");
  if (test.space_id != model.space_id()) {
    throw Error(ErrorCode::kSpaceMismatch, "model space " + model.space_id() +
                                               " differs from test space " +
                                               test.space_id);
  }
  const auto& classes = model.classes();
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < classes.size(); ++k) index[classes[k]] = k;
  std::vector<std::vector<std::uint64_t>> confusion(
      classes.size(), std::vector<std::uint64_t>(classes.size(), 0));
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto it = index.find(test.y[i]);
    if (it == index.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "test label '" + test.y[i] + "' is not a model class");
    }
    ++confusion[it->second][model.predict_index(test.x[i])];
  }
  return report_from_confusion(classes, std::move(confusion));
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["classes"] = classes;
  auto per = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const auto& m = per_class[k];
    per[classes[k]] = {{"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"support", m.support}};
  }
  j["per_class"] = std::move(per);
  j["weighted_avg"] = {{"precision", weighted.precision},
                       {"recall", weighted.recall},
                       {"f1", weighted.f1},
                       {"support", weighted.support}};
  j["accuracy"] = accuracy;
  j["confusion"] = confusion;
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace);
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(digits);
  ss << v;
  return ss.str();
}

}  // namespace

void EvalReport::write_class_csv(std::ostream& out) const {
  out << "class,precision,recall,f1,support\n";
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const auto& m = per_class[k];
    out << csv_escape(classes[k]) << ',' << fixed(m.precision, 4) << ','
        << fixed(m.recall, 4) << ',' << fixed(m.f1, 4) << ',' << m.support << '\n';
  }
  out << "w. avg," << fixed(weighted.precision, 4) << ','
      << fixed(weighted.recall, 4) << ',' << fixed(weighted.f1, 4) << ','
      << weighted.support << '\n';
}

void EvalReport::write_confusion_csv(std::ostream& out) const {
  out << "truth";
  for (const auto& c : classes) out << ',' << csv_escape(c);
  out << '\n';
  for (std::size_t i = 0; i < classes.size(); ++i) {
    out << csv_escape(classes[i]);
    for (auto n : confusion[i]) out << ',' << n;
    out << '\n';
  }
}

std::vector<PairCount> similarity_from_confusion(
    const std::vector<std::string>& classes,
    const std::vector<std::vector<std::uint64_t>>& confusion) {
  const std::size_t k = classes.size();
  if (confusion.size() != k) {
    throw Error(ErrorCode::kInvalidArgument, "confusion matrix must be square");
  }
  for (const auto& row : confusion) {
    if (row.size() != k) {
      throw Error(ErrorCode::kInvalidArgument, "confusion matrix must be square");
    }
  }
  std::vector<PairCount> out;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      out.push_back({classes[i], classes[j], confusion[i][j] + confusion[j][i]});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

const SplitData& register_data(const RegisterData& data, Register r) {
  const auto it = data.find(r);
  if (it == data.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("no prepared data for register ") + register_name(r));
  }
  return it->second;
}

}  // namespace

ExperimentResult run_experiment(const RegisterData& data,
                                const ExperimentConfig& config,
                                const TrainOptions& options) {
  Dataset train_set;
  Dataset dev;
  Dataset test;
  switch (config.mode) {
    case ExperimentMode::kWithin: {
      const auto& d = register_data(data, config.train_register);
      train_set = d.train;
      dev = d.dev;
      test = d.test;
      break;
    }
    case ExperimentMode::kCross: {
      if (config.train_register == config.test_register) {
        throw Error(ErrorCode::kInvalidArgument,
                    "cross-domain runs need two different registers");
      }
      const auto& tr = register_data(data, config.train_register);
      train_set = tr.train;
      dev = tr.dev;
      test = register_data(data, config.test_register).test;
      break;
    }
    case ExperimentMode::kMerged: {
      const auto& web = register_data(data, Register::kWeb);
      const auto& social = register_data(data, Register::kSocial);
      train_set = Dataset::concat(web.train, social.train);
      dev = Dataset::concat(web.dev, social.dev);
      test = Dataset::concat(web.test, social.test);
      break;
    }
  }
  TrainResult tr = train(train_set, dev, options);
  ExperimentResult result;
  result.report = evaluate(tr.model, test);
  result.model = std::move(tr.model);
  result.warnings = std::move(tr.warnings);
  return result;
}

std::vector<SweepRow> run_baseline_sweep(
    const std::map<std::string, RegisterData>& by_feature_set,
    const TrainOptions& options) {
  std::vector<SweepRow> rows;
  for (const auto& [name, data] : by_feature_set) {
    for (const auto& [reg, split] : data) {
      ExperimentConfig cfg{ExperimentMode::kWithin, reg, reg};
      const auto r = run_experiment(data, cfg, options);
      rows.push_back({name, reg, r.report.weighted.f1, r.model.c()});
    }
  }
  return rows;
}

}  // namespace dialectid
