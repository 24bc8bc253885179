#pragma once

// Exact state machine for the fitness ecosystem.
//
// The population carries one fitness value in [0,1) per living member.  A
// step with increment i >= 0 inserts i newborn fitness values; a step with
// i < 0 removes the min(|i|, x) smallest living values.  Level queries count
// members with fitness <= f, and sup_deviation computes the exact sup-norm
// distance between the empirical fitness distribution and the uniform law on
// [f_c, 1].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fitpop/increments.hpp"
#include "fitpop/noise.hpp"

namespace fitpop {

// Ordered multiset of doubles tuned for this access pattern: batch inserts
// anywhere, removals only at the low end, rank queries by value, in-order
// scans.  Chunked sorted arrays give O(log x + chunk) inserts, amortized O(1)
// removal of the minimum, and O(#chunks + log chunk) rank queries.
class SortedMultiset {
 public:
  void insert(double v) {
    if (chunks_.empty()) {
      chunks_.emplace_back();
      chunks_.back().vals.push_back(v);
      ++size_;
      return;
    }
    std::size_t ti = chunks_.size() - 1;
    for (std::size_t i = 0; i < chunks_.size(); ++i) {
      if (chunks_[i].vals.back() >= v) {
        ti = i;
        break;
      }
    }
    Chunk& c = chunks_[ti];
    auto begin = c.vals.begin() + static_cast<std::ptrdiff_t>(c.head);
    auto it = std::upper_bound(begin, c.vals.end(), v);
    if (it == begin && c.head > 0) {
      c.vals[--c.head] = v;  // fill the gap left by earlier removals
    } else {
      c.vals.insert(it, v);
    }
    ++size_;
    if (c.size() >= static_cast<std::int64_t>(2 * kChunk)) split(ti);
  }

  // Remove the k smallest values; requires k <= size().
  void remove_smallest(std::int64_t k) {
    if (k <= 0) return;
    if (k > size_) throw std::logic_error("remove_smallest: k > size");
    size_ -= k;
    while (k > 0) {
      Chunk& c = chunks_.front();
      const std::int64_t avail = c.size();
      if (avail <= k) {
        k -= avail;
        chunks_.pop_front();
      } else {
        c.head += static_cast<std::size_t>(k);
        k = 0;
      }
    }
  }

  // Number of values <= f.
  std::int64_t rank_leq(double f) const {
    std::int64_t r = 0;
    for (const auto& c : chunks_) {
      if (c.vals.back() <= f) {
        r += c.size();
        continue;
      }
      auto begin = c.vals.begin() + static_cast<std::ptrdiff_t>(c.head);
      r += std::upper_bound(begin, c.vals.end(), f) - begin;
      break;  // later chunks hold strictly larger values
    }
    return r;
  }

  std::int64_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  double min() const {
    if (empty()) throw std::logic_error("min of empty multiset");
    const Chunk& c = chunks_.front();
    return c.vals[c.head];
  }

  template <class Fn>
  void for_each_sorted(Fn&& fn) const {
    for (const auto& c : chunks_)
      for (std::size_t i = c.head; i < c.vals.size(); ++i) fn(c.vals[i]);
  }

  std::vector<double> to_sorted_vector() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(size_));
    for_each_sorted([&](double v) { out.push_back(v); });
    return out;
  }

 private:
  struct Chunk {
    std::vector<double> vals;  // sorted; live range is [head, vals.size())
    std::size_t head = 0;
    std::int64_t size() const noexcept {
      return static_cast<std::int64_t>(vals.size() - head);
    }
  };

  static constexpr std::size_t kChunk = 1024;

  void split(std::size_t idx) {
    Chunk& c = chunks_[idx];
    const auto begin = c.vals.begin() + static_cast<std::ptrdiff_t>(c.head);
    const auto mid = begin + (c.vals.end() - begin) / 2;
    Chunk hi;
    hi.vals.assign(mid, c.vals.end());
    Chunk lo;
    lo.vals.assign(begin, mid);
    c = std::move(lo);
    chunks_.insert(chunks_.begin() + static_cast<std::ptrdiff_t>(idx) + 1,
                   std::move(hi));
  }

  std::deque<Chunk> chunks_;
  std::int64_t size_ = 0;
};

struct Snapshot {
  std::int64_t n = 0;
  std::int64_t x = 0;
  double sup_dev = 0.0;
  std::vector<std::int64_t> level_counts;  // aligned with the query grid
};

class EcosystemState {
 public:
  std::int64_t n() const noexcept { return n_; }
  std::int64_t x() const noexcept { return x_; }
  std::int64_t s_plus() const noexcept { return s_plus_; }
  std::int64_t s_minus() const noexcept { return s_minus_; }
  const SortedMultiset& living() const noexcept { return living_; }

  // One step: i >= 0 inserts exactly i uniforms, i < 0 removes the
  // min(|i|, x) smallest members.
  void step(std::int64_t inc, std::span<const double> uniforms) {
    const std::int64_t births = std::max<std::int64_t>(inc, 0);
    if (static_cast<std::int64_t>(uniforms.size()) != births)
      throw std::invalid_argument("step: expected max(i,0) uniforms");
    if (inc >= 0) {
      for (double u : uniforms) {
        if (!(u >= 0.0 && u < 1.0))
          throw std::invalid_argument("step: fitness outside [0,1)");
        living_.insert(u);
      }
      x_ += inc;
      s_plus_ += inc;
    } else {
      const std::int64_t removed = std::min(-inc, x_);
      living_.remove_smallest(removed);
      x_ -= removed;
      s_minus_ += -inc;
    }
    ++n_;
  }

  // L_n(f): living members with fitness <= f.
  std::int64_t level_count(double f) const {
    if (f < 0.0 || f > 1.0)
      throw std::domain_error("level_count: f outside [0,1]");
    return living_.rank_leq(f);
  }

  // Empirical fitness distribution; 0 when the population is empty.
  double empirical_cdf(double f) const {
    if (x_ == 0) return 0.0;
    return static_cast<double>(level_count(f)) / static_cast<double>(x_);
  }

  // Exact sup over f in [0,1] of |F_hat(f) - F(f)| with F uniform on
  // [f_c, 1].  F_hat is a right-continuous step function and F is continuous
  // and piecewise linear, so the sup is attained either at a stored value
  // (from above) or at its left limit (from below); both one-sided gaps are
  // evaluated at every jump.
  double sup_deviation(double f_c) const {
    if (f_c < 0.0 || f_c >= 1.0)
      throw std::domain_error("sup_deviation: f_c outside [0,1)");
    if (x_ == 0) return 1.0;  // F_hat == 0, sup attained at f = 1
    const double inv_x = 1.0 / static_cast<double>(x_);
    double best = 0.0;
    std::int64_t i = 0;
    living_.for_each_sorted([&](double y) {
      ++i;
      const double F = uniform_tail_cdf(y, f_c);
      best = std::max(best, static_cast<double>(i) * inv_x - F);
      best = std::max(best, F - static_cast<double>(i - 1) * inv_x);
    });
    return best;
  }

  // Per-urn prefix counts for a discrete fitness distribution given by its
  // cumulative probabilities.
  std::vector<std::int64_t> urn_counts(std::span<const double> cum_mu) const {
    double prev = 0.0;
    std::vector<std::int64_t> out;
    out.reserve(cum_mu.size());
    for (double c : cum_mu) {
      if (c <= prev || c > 1.0)
        throw std::invalid_argument("urn_counts: cumulative probabilities must "
                                    "be ascending in (0,1]");
      prev = c;
      out.push_back(level_count(c));
    }
    return out;
  }

 private:
  SortedMultiset living_;
  std::int64_t n_ = 0;
  std::int64_t x_ = 0;
  std::int64_t s_plus_ = 0;
  std::int64_t s_minus_ = 0;
};

struct TrajectoryResult {
  EcosystemState state;
  std::vector<Snapshot> snapshots;
};

// Drive an ecosystem for n_steps increments drawn from the law, recording a
// snapshot at each requested step count (0 allowed).  Deterministic given the
// stream.  Snapshots store level counts on the query grid rather than a copy
// of the population.
inline TrajectoryResult run_trajectory(
    const IncrementLaw& law, std::int64_t n_steps, NoiseStream& stream,
    std::vector<std::int64_t> snapshot_times = {},
    std::span<const double> f_grid = {},
    std::optional<double> f_c = std::nullopt) {
  if (n_steps < 0) throw std::invalid_argument("run_trajectory: n_steps < 0");
  std::sort(snapshot_times.begin(), snapshot_times.end());
  TrajectoryResult result;
  std::vector<double> births;
  auto maybe_snapshot = [&](std::size_t& next) {
    while (next < snapshot_times.size() &&
           snapshot_times[next] == result.state.n()) {
      Snapshot s;
      s.n = result.state.n();
      s.x = result.state.x();
      s.sup_dev = f_c ? result.state.sup_deviation(*f_c) : 0.0;
      for (double f : f_grid) s.level_counts.push_back(result.state.level_count(f));
      result.snapshots.push_back(std::move(s));
      ++next;
    }
  };
  std::size_t next = 0;
  maybe_snapshot(next);
  for (std::int64_t k = 0; k < n_steps; ++k) {
    const std::int64_t inc = sample_increment(law, stream);
    births.clear();
    for (std::int64_t j = 0; j < inc; ++j) births.push_back(stream.next_uniform());
    result.state.step(inc, births);
    maybe_snapshot(next);
  }
  return result;
}

}  // namespace fitpop
