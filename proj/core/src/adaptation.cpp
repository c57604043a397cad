#include "eg2c/adaptation.hpp"

#include <algorithm>
#include <cmath>

namespace eg2c {

void AdaptConfig::validate() const {
  if (bins < 2) throw ConfigError("histogram needs at least 2 bins");
  if (window < uint32_t(bins))
    throw ConfigError("window smaller than the bin count");
  if (range && range->first >= range->second)
    throw ConfigError("histogram range is empty");
  if (sensitive) {
    const auto [lo, hi] = *sensitive;
    if (lo < 0 || lo > hi || hi >= bins)
      throw ConfigError("sensitive bin range outside [0, bins)");
  }
}

std::pair<int, int> AdaptConfig::sensitive_bins() const {
  if (sensitive) return *sensitive;
  return {1, bins - 2};  // interior bins
}

ThresholdAdapter::ThresholdAdapter(const AdaptConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  ring_.resize(cfg_.window);
  counts_.assign(size_t(cfg_.bins), 0);
  if (cfg_.range) {
    lo_ = cfg_.range->first;
    hi_ = cfg_.range->second;
    range_set_ = true;
  }
}

int ThresholdAdapter::bin_of(int16_t sample) const {
  if (!range_set_)
    throw WindowNotFull("histogram range not established yet");
  const long long span = int(hi_) - int(lo_);
  const long long scaled = (long long)(int(sample) - int(lo_)) * cfg_.bins;
  const long long b =
      scaled >= 0 ? scaled / span : -((-scaled + span - 1) / span);
  return int(std::clamp(b, 0LL, (long long)cfg_.bins - 1));
}

void ThresholdAdapter::observe(int16_t sample) {
  if (buffer_count_ == cfg_.window) {
    const int16_t evicted = ring_[head_];
    if (range_set_) --counts_[bin_of(evicted)];
  } else {
    ++buffer_count_;
  }
  ring_[head_] = sample;
  head_ = (head_ + 1) % cfg_.window;
  ++samples_seen_;
  if (range_set_) ++counts_[bin_of(sample)];
}

// First full window fixes the auto range to [min, max+1] of its samples;
// later samples outside it land in the edge bins.
void ThresholdAdapter::ensure_range() {
  if (range_set_) return;
  int16_t mn = ring_[0], mx = ring_[0];
  for (uint32_t i = 0; i < buffer_count_; ++i) {
    mn = std::min(mn, ring_[i]);
    mx = std::max(mx, ring_[i]);
  }
  lo_ = mn;
  hi_ = int16_t(std::min(int(mx) + 1, 32767));
  range_set_ = true;
  rebuild_counts();
}

void ThresholdAdapter::rebuild_counts() {
  std::fill(counts_.begin(), counts_.end(), 0);
  for (uint32_t i = 0; i < buffer_count_; ++i) ++counts_[bin_of(ring_[i])];
}

int16_t ThresholdAdapter::adapt_threshold() {
  if (!window_full())
    throw WindowNotFull("need " + std::to_string(cfg_.window) + " samples, have " +
                        std::to_string(buffer_count_));
  ensure_range();

  const auto [b_lo, b_hi] = cfg_.sensitive_bins();
  int best = b_lo;
  for (int b = b_lo + 1; b <= b_hi; ++b)
    if (counts_[b] < counts_[best]) best = b;  // ties keep the lowest bin

  double value;
  const double width = (double(hi_) - double(lo_)) / cfg_.bins;
  if (cfg_.threshold_mode == ThresholdMode::SampleMean && counts_[best] > 0) {
    long long sum = 0;
    uint32_t n = 0;
    for (uint32_t i = 0; i < buffer_count_; ++i) {
      if (bin_of(ring_[i]) == best) {
        sum += ring_[i];
        ++n;
      }
    }
    value = double(sum) / n;
  } else {
    value = double(lo_) + (best + 0.5) * width;
  }
  threshold_ = int16_t(std::llround(value));

  if (cfg_.mode == WindowMode::Tumbling) {
    buffer_count_ = 0;
    head_ = 0;
    std::fill(counts_.begin(), counts_.end(), 0);
  }
  return threshold_;
}

bool ThresholdAdapter::detect(int16_t detector_output) const {
  return detector_output > threshold_;
}

std::pair<int16_t, int16_t> ThresholdAdapter::active_range() const {
  if (!range_set_)
    throw WindowNotFull("histogram range not established yet");
  return {lo_, hi_};
}

}  // namespace eg2c
