#pragma once

#include <cstdint>

#include "eg2c/executor.hpp"
#include "eg2c/model.hpp"

namespace eg2c {

// The processor's workload: one always-on anomaly detector plus two
// EGM-to-ECG converter networks sharing the same input frame. The frame
// is a single-channel 32x64 int8 beat window (2048 samples).
constexpr int kFrameC = 1;
constexpr int kFrameH = 32;
constexpr int kFrameW = 64;

struct ReferenceModel {
  ModelSpec spec;
  ModelWeights weights;
};

struct ReferenceSuite {
  ReferenceModel detector;          // int8, ~4K MACs, scalar 16-bit head
  ReferenceModel coarse;            // po2 4-bit, ~2.69M MACs
  ReferenceModel precise;           // int8, ~5.79M MACs
};

// Builds the three models with weights drawn from a fixed seeded PRNG and
// requantization shifts calibrated on a fixed synthetic input so each
// layer's outputs use at least 6 bits of dynamic range. Two calls return
// byte-identical weights.
ReferenceSuite build_reference_models();

// The frame used for shift calibration (loud end-of-range beat, so real
// streams stay inside the calibrated range).
Tensor calibration_frame();

}  // namespace eg2c
