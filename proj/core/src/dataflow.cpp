#include "eg2c/dataflow.hpp"

#include <algorithm>
#include <numeric>

#include "eg2c/errors.hpp"
#include "staging.hpp"

namespace eg2c {
namespace {

inline uint32_t ceil_div(uint32_t a, uint32_t b) { return (a + b - 1) / b; }

// Real weights in a PW vector (a trailing channel triplet may be short).
int pw_vector_channels(const LayerSpec& layer, uint32_t index) {
  const uint32_t triplets = (uint32_t(layer.cin) + 2) / 3;
  const uint32_t t = index % triplets;
  return std::min(3, layer.cin - int(t) * 3);
}

void finish(LaneSchedule& s) {
  for (const Wave& w : s.waves) s.compute_cycles += w.cycles;
  for (const WorkItem& it : s.items) {
    s.busy_lane_cycles += it.cycles;
    s.total_macs += it.macs;
  }
}

// Pack items into waves of at most `lanes`, in emission order. Lanes are
// filled from lane 0 upward; a wave lasts as long as its longest item. A
// wave also closes once the input rows its items read would no longer
// fit the staging buffer.
void pack_greedy(LaneSchedule& s, int lanes, const LayerSpec& layer,
                 uint64_t staging_limit) {
  uint32_t i = 0;
  const uint32_t n = uint32_t(s.items.size());
  std::vector<detail::StagedRow> staged;
  while (i < n) {
    Wave w;
    w.first_item = i;
    staged.clear();
    while (i < n && w.item_count < uint32_t(lanes)) {
      const size_t before = staged.size();
      detail::append_item_rows(layer, s.items[i], staged);
      if (w.item_count > 0 && staged.size() * layer.w > staging_limit) {
        staged.resize(before);
        break;
      }
      w.cycles = std::max(w.cycles, s.items[i].cycles);
      ++w.item_count;
      ++i;
    }
    s.waves.push_back(w);
  }
  finish(s);
}

// One item per wave: the strictly serial baseline.
void pack_serial(LaneSchedule& s) {
  for (uint32_t i = 0; i < s.items.size(); ++i)
    s.waves.push_back({i, 1, s.items[i].cycles});
  finish(s);
}

// Waves never span group boundaries (consecutive items sharing a key).
void pack_grouped(LaneSchedule& s, const std::vector<uint32_t>& group_of,
                  int lanes) {
  uint32_t i = 0;
  const uint32_t n = uint32_t(s.items.size());
  while (i < n) {
    Wave w;
    w.first_item = i;
    while (i < n && w.item_count < uint32_t(lanes) &&
           group_of[i] == group_of[w.first_item]) {
      w.cycles = std::max(w.cycles, s.items[i].cycles);
      ++w.item_count;
      ++i;
    }
    s.waves.push_back(w);
  }
  finish(s);
}

// Row-in-row mapping for normal conv, PW conv and FC: one item per
// (vector, output row), emitted row-major so a wave's lanes share their
// staged input rows.
LaneSchedule map_rir(const LayerSpec& layer, const std::vector<uint32_t>& vectors,
                     const EngineConfig& cfg, uint64_t staging_limit) {
  LaneSchedule s;
  s.kind = layer.kind;
  const uint32_t p = uint32_t(cfg.macs_per_lane_per_cycle);
  if (layer.kind == LayerKind::FC) {
    const uint32_t cycles = ceil_div(uint32_t(layer.cin), p);
    for (int co = 0; co < layer.cout; ++co) {
      WorkItem it;
      it.vector_index = uint32_t(co);
      it.out_row = 0;
      it.seg_len = 1;
      it.cycles = cycles;
      it.macs = uint32_t(layer.cin);
      s.items.push_back(it);
    }
    pack_greedy(s, cfg.lanes, layer, staging_limit);
    return s;
  }

  const uint32_t wout = uint32_t(layer.wout());
  const bool pw = layer.kind == LayerKind::ConvPW;
  // A 3x3 vector contributes three MACs per output element; a PW lane
  // consumes one three-channel group per element per cycle.
  const uint32_t cycles = pw ? ceil_div(wout, p) : ceil_div(3 * wout, p);
  for (uint32_t ho = 0; ho < uint32_t(layer.hout()); ++ho) {
    for (uint32_t v : vectors) {
      WorkItem it;
      it.vector_index = v;
      it.out_row = uint16_t(ho);
      it.seg_len = uint16_t(wout);
      it.cycles = cycles;
      it.macs = (pw ? uint32_t(pw_vector_channels(layer, v)) : 3) * wout;
      s.items.push_back(it);
    }
  }
  pack_greedy(s, cfg.lanes, layer, staging_limit);
  return s;
}

// Depth-wise mapping. Baseline runs one kernel-row item at a time; CIR
// issues the kernel rows of an output row together (filling spare lanes
// with further channels and rows); D-RIR splits rows into sub-rows on
// separate lanes.
LaneSchedule map_dw(const LayerSpec& layer, const std::vector<uint32_t>& vectors,
                    const EngineConfig& cfg, const DataflowFlags& flags,
                    uint64_t staging_limit) {
  LaneSchedule s;
  s.kind = layer.kind;
  const uint32_t p = uint32_t(cfg.macs_per_lane_per_cycle);
  const uint32_t wout = uint32_t(layer.wout());
  const uint32_t sub = uint32_t(cfg.drir_sub_row_len);
  const uint32_t segs = flags.drir ? ceil_div(wout, sub) : 1;

  // vectors, grouped per channel for (row, channel, kernel-row) emission
  std::vector<std::vector<uint32_t>> by_channel(layer.cin);
  for (uint32_t v : vectors) by_channel[v / 3].push_back(v);

  std::vector<uint32_t> group_of;
  for (uint32_t ho = 0; ho < uint32_t(layer.hout()); ++ho) {
    for (int c = 0; c < layer.cin; ++c) {
      for (uint32_t v : by_channel[c]) {
        for (uint32_t g = 0; g < segs; ++g) {
          WorkItem it;
          it.vector_index = v;
          it.out_row = uint16_t(ho);
          it.seg = uint16_t(g);
          it.seg_off = uint16_t(g * sub);
          it.seg_len = uint16_t(flags.drir ? std::min(sub, wout - g * sub) : wout);
          it.cycles = ceil_div(3 * it.seg_len, p);
          it.macs = 3 * it.seg_len;
          s.items.push_back(it);
          // D-RIR without CIR keeps kernel rows serial: sub-rows of one
          // (row, channel, kernel-row) share a wave, nothing else does.
          group_of.push_back(ho * uint32_t(layer.cin) * 3 + uint32_t(v));
        }
      }
    }
  }

  if (flags.cir) {
    pack_greedy(s, cfg.lanes, layer, staging_limit);
  } else if (flags.drir) {
    pack_grouped(s, group_of, cfg.lanes);
  } else {
    pack_serial(s);
  }
  return s;
}

std::vector<uint32_t> all_vectors(const LayerSpec& layer) {
  std::vector<uint32_t> v(dense_vector_count(layer));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

LaneSchedule map_layer(const LayerSpec& layer, const SparseLayer& sparse,
                       const EngineConfig& cfg, const DataflowFlags& flags,
                       uint64_t staging_limit) {
  std::vector<uint32_t> vectors;
  vectors.reserve(sparse.vectors.size());
  for (const WeightVector& v : sparse.vectors) vectors.push_back(v.index);
  if (layer.kind == LayerKind::ConvDW)
    return map_dw(layer, vectors, cfg, flags, staging_limit);
  return map_rir(layer, vectors, cfg, staging_limit);
}

LaneSchedule map_layer_dense(const LayerSpec& layer, const EngineConfig& cfg,
                             const DataflowFlags& flags,
                             uint64_t staging_limit) {
  if (layer.kind == LayerKind::FC) return map_rir(layer, {}, cfg, staging_limit);
  auto vectors = all_vectors(layer);
  if (layer.kind == LayerKind::ConvDW)
    return map_dw(layer, vectors, cfg, flags, staging_limit);
  return map_rir(layer, vectors, cfg, staging_limit);
}

UtilizationReport utilization_report(const ModelSpec& model,
                                     const ModelWeights& weights,
                                     const EngineConfig& cfg,
                                     const DataflowFlags& flags,
                                     uint64_t staging_limit) {
  model.validate();
  UtilizationReport rep;
  uint64_t conv_busy = 0, conv_cap = 0, all_busy = 0, all_cap = 0;
  for (size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    LaneSchedule s;
    if (l.kind == LayerKind::FC || !flags.sparsity) {
      s = map_layer_dense(l, cfg, flags, staging_limit);
    } else {
      s = map_layer(l, encode_sparse(l, weights[i]), cfg, flags, staging_limit);
    }
    LayerUtilization u;
    u.layer = int(i);
    u.kind = l.kind;
    u.compute_cycles = s.compute_cycles;
    u.busy_lane_cycles = s.busy_lane_cycles;
    u.utilization = s.utilization(cfg.lanes);
    rep.layers.push_back(u);
    const uint64_t cap = s.compute_cycles * cfg.lanes;
    all_busy += s.busy_lane_cycles;
    all_cap += cap;
    if (l.kind != LayerKind::FC) {
      conv_busy += s.busy_lane_cycles;
      conv_cap += cap;
    }
  }
  rep.aggregate_conv = conv_cap ? double(conv_busy) / conv_cap : 0.0;
  rep.aggregate_all = all_cap ? double(all_busy) / all_cap : 0.0;
  return rep;
}

}  // namespace eg2c
