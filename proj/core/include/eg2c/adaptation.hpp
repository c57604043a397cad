#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "eg2c/errors.hpp"

namespace eg2c {

enum class WindowMode : uint8_t {
  Sliding = 0,   // ring buffer, oldest sample evicted
  Tumbling = 1,  // window clears after each threshold update
};

enum class ThresholdMode : uint8_t {
  BinMidpoint = 0,  // midpoint of the selected bin, rounded to nearest
  SampleMean = 1,   // mean of window samples in the selected bin
};

// On-chip threshold adaptation: histogram the detector's outputs over a
// window of recent beats (a few days of monitoring), then place the
// threshold in the emptiest bin of the sensitive range, where the valley
// between the normal and anomalous modes sits.
struct AdaptConfig {
  int bins = 16;
  uint32_t window = 4096;           // N_w samples
  int t_days = 3;                   // metadata only; window is in samples
  std::optional<std::pair<int16_t, int16_t>> range;  // [lo, hi); auto if unset
  std::optional<std::pair<int, int>> sensitive;      // bin interval, default [1, B-2]
  WindowMode mode = WindowMode::Sliding;
  ThresholdMode threshold_mode = ThresholdMode::BinMidpoint;

  void validate() const;  // ConfigError on nonsense (bins < 2, lo >= hi, ...)
  std::pair<int, int> sensitive_bins() const;
};

class ThresholdAdapter {
 public:
  explicit ThresholdAdapter(const AdaptConfig& cfg);

  // Append a detector output; evicts the oldest sample once the window is
  // full (sliding mode). Histogram counts track the buffered samples.
  void observe(int16_t sample);

  // Bin of a sample under the current range: floor(B*(x-lo)/(hi-lo)),
  // clamped to the edge bins for out-of-range samples. Requires the range
  // to be known (fixed in config, or after the first full window).
  int bin_of(int16_t sample) const;

  // Recompute the threshold from the current histogram: argmin count over
  // the sensitive bins (ties: lowest bin, like a priority encoder), then
  // the bin midpoint (or in-bin sample mean) rounded to nearest.
  // Throws WindowNotFull before `window` samples have been observed.
  int16_t adapt_threshold();

  // Strictly-greater comparison against the current threshold.
  bool detect(int16_t detector_output) const;

  int16_t threshold() const { return threshold_; }
  void set_threshold(int16_t t) { threshold_ = t; }
  uint64_t samples_seen() const { return samples_seen_; }
  bool window_full() const { return buffer_count_ >= cfg_.window; }
  const std::vector<uint32_t>& counts() const { return counts_; }
  uint32_t buffered() const { return buffer_count_; }
  std::pair<int16_t, int16_t> active_range() const;

 private:
  void ensure_range();
  void rebuild_counts();

  AdaptConfig cfg_;
  std::vector<int16_t> ring_;
  uint32_t head_ = 0;
  uint32_t buffer_count_ = 0;
  uint64_t samples_seen_ = 0;
  std::vector<uint32_t> counts_;
  bool range_set_ = false;
  int16_t lo_ = 0;
  int16_t hi_ = 0;
  int16_t threshold_ = 0;
};

}  // namespace eg2c
