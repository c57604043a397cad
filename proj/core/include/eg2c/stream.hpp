#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eg2c/tensor.hpp"

namespace eg2c {

// One heartbeat of input: the EGM frame plus the ground-truth anomaly
// label used for scoring dispatch decisions.
struct Beat {
  uint32_t index = 0;
  uint8_t label = 0;  // 1 = anomalous
  Tensor frame;
};

struct StreamFile {
  std::vector<Beat> beats;
};

// Synthesis parameters for gen_stream. Beats are synthetic intracardiac
// waveforms: a dominant depolarization pulse over noise, with amplitude
// carrying the class: anomalous beats run anomaly_gain times stronger
// than normal ones. `drift` models a worsening substrate: strong
// episodes keep occurring, but ever subtler ones join them, the mildest
// carrying only (1 - drift) of the original margin by the last beat.
// rate_growth makes episodes more frequent as well — the per-beat
// anomaly probability swings from rate*(1 - g/2) to rate*(1 + g/2)
// across the stream while averaging `rate`. The baseline rhythm stays
// put, so a threshold frozen at deployment time ages badly while a
// tracking one follows the shrinking valley. Quiet beats are occasional
// low-output normal beats; they sit well below the normal mode, so
// streams meant for histogram adaptation should leave quiet_rate at
// zero.
struct DriftSpec {
  double drift = 0.0;          // anomaly-margin spread lost by stream end
  double anomaly_gain = 1.40;  // amplitude ratio of full-strength anomalies
  double jitter = 0.08;        // per-beat uniform amplitude jitter
  double quiet_rate = 0.0;     // chance of a low-amplitude normal beat
  double rate_growth = 0.0;    // relative rise of the anomaly rate over the stream
};

// Deterministic: one seed, one stream, byte-identical across calls.
// Throws InvalidRate unless 0 <= anomaly_rate <= 1.
StreamFile gen_stream(uint64_t seed, uint32_t n_beats, double anomaly_rate,
                      const DriftSpec& drift);

// CSV with header beat_index,label,s0..s{n-1}; samples are int8.
void save_stream(const std::string& path, const StreamFile& stream);
StreamFile load_stream(const std::string& path);

// Score column CSV for adapt-demo: header "score", one int16 per row.
void save_scores(const std::string& path, const std::vector<int16_t>& scores);
std::vector<int16_t> load_scores(const std::string& path);

}  // namespace eg2c
