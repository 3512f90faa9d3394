#pragma once

#include <cassert>
#include <cmath>
#include <cstring>
#include <utility>
#include <vector>

namespace duplex {

// Indexed sparse work vector: a dense value array plus an unordered list of the
// positions believed to be nonzero. This is the currency of every triangular
// solve and update kernel. The entry list may transiently contain positions
// whose value has cancelled to (near) zero; prune() re-tightens it.
//
// pack() snapshots the current entries into a side buffer. Solve routines use
// this to hand back intermediate stage results (e.g. the lower-solve partial
// needed later by the factor update) while the main buffers continue to the
// final result.
class SparseVector {
 public:
  SparseVector() = default;
  explicit SparseVector(int dim) { setup(dim); }

  void setup(int dim) {
    dim_ = dim;
    index_.clear();
    index_.reserve(dim);
    values_.assign(dim, 0.0);
    pack_index_.clear();
    pack_value_.clear();
  }

  int dim() const { return dim_; }
  int count() const { return static_cast<int>(index_.size()); }
  double density() const { return dim_ == 0 ? 0.0 : static_cast<double>(count()) / dim_; }

  const std::vector<int>& indices() const { return index_; }
  const double* values() const { return values_.data(); }
  double* values() { return values_.data(); }
  double value(int i) const { return values_[i]; }

  // Sparse O(count) reset; the dense array is zeroed entry by entry.
  void clear() {
    for (int i : index_) values_[i] = 0.0;
    index_.clear();
    pack_index_.clear();
    pack_value_.clear();
  }

  bool empty() const { return index_.empty(); }

  // Adds v at position i, registering i as nonzero if it was not yet tracked.
  void add(int i, double v) {
    assert(i >= 0 && i < dim_);
    if (values_[i] == 0.0 && v != 0.0) index_.push_back(i);
    values_[i] += v;
  }

  // Sets position i (must not already be tracked as nonzero).
  void set(int i, double v) {
    assert(values_[i] == 0.0);
    if (v == 0.0) return;
    values_[i] = v;
    index_.push_back(i);
  }

  void push_index(int i) { index_.push_back(i); }

  // Replaces the tracked-entry list wholesale; values are untouched. Callers
  // guarantee the new list covers every currently nonzero position.
  void replace_indices(const std::vector<int>& idx) { index_ = idx; }

  // Drops every tracked entry with |value| < zero_drop.
  void prune(double zero_drop) {
    int keep = 0;
    for (int e = 0; e < count(); ++e) {
      const int i = index_[e];
      if (std::abs(values_[i]) < zero_drop) {
        values_[i] = 0.0;
      } else {
        index_[keep++] = i;
      }
    }
    index_.resize(keep);
  }

  // Snapshots the live entries (pruned against zero_drop) into the pack
  // buffers. The live entries themselves are untouched.
  void pack(double zero_drop) {
    pack_index_.clear();
    pack_value_.clear();
    pack_index_.reserve(index_.size());
    pack_value_.reserve(index_.size());
    for (int i : index_) {
      const double v = values_[i];
      if (std::abs(v) >= zero_drop) {
        pack_index_.push_back(i);
        pack_value_.push_back(v);
      }
    }
  }

  int pack_count() const { return static_cast<int>(pack_index_.size()); }
  const std::vector<int>& pack_indices() const { return pack_index_; }
  const std::vector<double>& pack_values() const { return pack_value_; }

  // Loads packed (index, value) pairs as the live content. The vector must be
  // clear on entry.
  void load(const std::vector<int>& idx, const std::vector<double>& val) {
    assert(index_.empty());
    for (size_t k = 0; k < idx.size(); ++k) set(idx[k], val[k]);
  }

  void copy_from(const SparseVector& other) {
    clear();
    if (dim_ != other.dim_) setup(other.dim_);
    for (int i : other.index_) set(i, other.values_[i]);
  }

 private:
  int dim_ = 0;
  std::vector<int> index_;
  std::vector<double> values_;
  std::vector<int> pack_index_;
  std::vector<double> pack_value_;
};

// Computes <a, b> over the tracked entries of `a`.
inline double dot(const SparseVector& a, const SparseVector& b) {
  assert(a.dim() == b.dim());
  double sum = 0.0;
  for (int i : a.indices()) sum += a.value(i) * b.value(i);
  return sum;
}

}  // namespace duplex
