#include "dialectid/unmasking.h"

#include <algorithm>
#include <iomanip>
#include <ostream>

#include "dialectid/error.h"

namespace dialectid {

UnmaskingCurve unmask(const Dataset& train_set, const Dataset& dev,
                      const Dataset& test, int rounds,
                      const TrainOptions& options) {
  if (rounds < 0) throw Error(ErrorCode::kInvalidArgument, "rounds must be >= 0");
  UnmaskingCurve curve;
  TrainOptions opts = options;
  opts.removed.assign(train_set.dim, 0);

  TrainResult first = train(train_set, dev, opts);
  curve.c = first.model.c();
  curve.rounds.push_back({0, evaluate(first.model, test).weighted.f1, {}});
  LinearModel model = std::move(first.model);
  opts.c_grid = {curve.c};

  std::size_t remaining = train_set.dim;
  for (int r = 1; r <= rounds; ++r) {
    if (remaining == 0) {
      curve.exhausted = true;
      break;
    }
    std::vector<std::uint32_t> picked;
    for (std::size_t k = 0; k < model.num_classes(); ++k) {
      const auto w = model.weights(k);
      std::int64_t hi = -1;
      std::int64_t lo = -1;
      for (std::uint32_t i = 0; i < w.size(); ++i) {
        if (opts.removed[i]) continue;
        if (hi < 0 || w[i] > w[hi]) hi = i;
        if (lo < 0 || w[i] < w[lo]) lo = i;
      }
      if (hi >= 0) picked.push_back(static_cast<std::uint32_t>(hi));
      if (lo >= 0) picked.push_back(static_cast<std::uint32_t>(lo));
    }
    std::sort(picked.begin(), picked.end());
    picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
    for (std::uint32_t i : picked) opts.removed[i] = 1;
    remaining -= picked.size();
    curve.removed_total += picked.size();

    model = fit_ovr(train_set, curve.c, opts);
    curve.rounds.push_back({r, evaluate(model, test).weighted.f1, std::move(picked)});
  }
  return curve;
}

void write_curve_csv(std::ostream& out, const UnmaskingCurve& curve) {
  out << "round,f1,n_removed\n";
  std::size_t cumulative = 0;
  for (const auto& r : curve.rounds) {
    cumulative += r.removed.size();
    out << r.round << ',' << std::fixed << std::setprecision(4) << r.f1 << ','
        << cumulative << '\n';
  }
  out.unsetf(std::ios::fixed);
}

void write_removed_log(std::ostream& out, const UnmaskingCurve& curve) {
  out << "round,feature\n";
  for (const auto& r : curve.rounds) {
    for (auto f : r.removed) out << r.round << ',' << f << '\n';
  }
}

}  // namespace dialectid
