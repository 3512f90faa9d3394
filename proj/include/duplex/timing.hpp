#pragma once

#include <array>
#include <chrono>
#include <cstring>
#include <string>

namespace duplex {

// The instrumented solver components. One wall-time accumulator is kept per
// slot; kOther is the remainder against total wall time.
enum class Comp : int {
  kInvert = 0,
  kUpdateFactor,
  kChuzr,
  kBtran,
  kSpmv,
  kChuzc1,
  kChuzc2,
  kFtran,
  kFtranBfrt,
  kFtranDse,
  kUpdateDual,
  kUpdatePrimal,
  kUpdateWeight,
  kOther,
  kCount,
};

inline constexpr int kNumComp = static_cast<int>(Comp::kCount);

inline const char* comp_name(Comp c) {
  static const char* names[kNumComp] = {
      "INVERT",     "UPDATE-FACTOR", "CHUZR",      "BTRAN",         "SPMV",
      "CHUZC1",     "CHUZC2",        "FTRAN",      "FTRAN-BFRT",    "FTRAN-DSE",
      "UPDATE-DUAL", "UPDATE-PRIMAL", "UPDATE-WEIGHT", "OTHER",
  };
  return names[static_cast<int>(c)];
}

// Lower-case, underscore form used for CSV column headers.
inline std::string comp_csv_name(Comp c) {
  std::string s = comp_name(c);
  for (char& ch : s) {
    if (ch == '-') ch = '_';
    ch = static_cast<char>(tolower(static_cast<unsigned char>(ch)));
  }
  return s;
}

inline double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

// Per-component stopwatch set. In parallel phases each worker owns its own
// clock and the totals are merged, so component times are cumulative across
// workers (they can sum to more than wall time on multi-worker runs).
struct ComponentClock {
  std::array<double, kNumComp> secs{};

  void add(Comp c, double s) { secs[static_cast<int>(c)] += s; }

  void merge(const ComponentClock& other) {
    for (int i = 0; i < kNumComp; ++i) secs[i] += other.secs[i];
  }

  // Assigns the unattributed remainder of `total_wall` to kOther.
  void finalize(double total_wall) {
    double named = 0.0;
    for (int i = 0; i < kNumComp; ++i)
      if (i != static_cast<int>(Comp::kOther)) named += secs[i];
    const double other = total_wall - named;
    secs[static_cast<int>(Comp::kOther)] = other > 0.0 ? other : 0.0;
  }
};

class ScopedTimer {
 public:
  ScopedTimer(ComponentClock& clock, Comp c) : clock_(clock), comp_(c), start_(now_seconds()) {}
  ~ScopedTimer() { clock_.add(comp_, now_seconds() - start_); }
  ScopedTimer(const ScopedTimer&) = delete;
  ScopedTimer& operator=(const ScopedTimer&) = delete;

 private:
  ComponentClock& clock_;
  Comp comp_;
  double start_;
};

}  // namespace duplex
