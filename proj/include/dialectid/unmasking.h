#ifndef DIALECTID_UNMASKING_H_
#define DIALECTID_UNMASKING_H_

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dialectid/classify.h"

namespace dialectid {

struct UnmaskingRound {
  int round = 0;
  double f1 = 0.0;                     // weighted F1 on the test set
  std::vector<std::uint32_t> removed;  // features dropped before this round
};

struct UnmaskingCurve {
  std::vector<UnmaskingRound> rounds;
  std::size_t removed_total = 0;
  double c = 0.0;          // tuned on dev at round 0, then frozen
  bool exhausted = false;  // FeatureSpaceExhausted: curve was cut short
};

// Round 0 trains on the full space (tuning C on `dev` when the grid has
// several values). Every later round takes, for each class of the previous
// model, the not-yet-removed feature with the largest weight and the one with
// the smallest weight (lowest index on ties), removes their union through the
// training mask, retrains from scratch and records the weighted F1. Stops
// early, flagging exhaustion, when no features remain.
UnmaskingCurve unmask(const Dataset& train, const Dataset& dev,
                      const Dataset& test, int rounds,
                      const TrainOptions& options);

// "round,f1,n_removed" where n_removed is cumulative.
void write_curve_csv(std::ostream& out, const UnmaskingCurve& curve);
// "round,feature" for every removed feature.
void write_removed_log(std::ostream& out, const UnmaskingCurve& curve);

}  // namespace dialectid

#endif  // DIALECTID_UNMASKING_H_
