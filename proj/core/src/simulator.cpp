#include "eg2c/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <optional>

#include "eg2c/errors.hpp"
#include "eg2c/quant.hpp"
#include "eg2c/reference_models.hpp"
#include "eg2c/report.hpp"
#include "eg2c/sparse.hpp"
#include "staging.hpp"

namespace eg2c {
namespace {

inline uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

// Weight triples addressable by dense vector index, for item execution.
struct VectorTable {
  std::vector<std::array<uint8_t, 3>> w;

  VectorTable(const LayerSpec& layer, const SparseLayer& sparse) {
    w.assign(dense_vector_count(layer), {po2::kZeroCode, po2::kZeroCode,
                                         po2::kZeroCode});
    if (layer.quant == QuantMode::Int8)
      std::fill(w.begin(), w.end(), std::array<uint8_t, 3>{0, 0, 0});
    for (const WeightVector& v : sparse.vectors) {
      if (v.index >= w.size())
        throw IndexOutOfRange("sparse index " + std::to_string(v.index));
      w[v.index] = v.w;
    }
  }
};

}  // namespace

double SimStats::energy_pj(const EnergyModel& em) const {
  return double(macs_po2) * em.pj_per_mac_po2 +
         double(macs_int8) * em.pj_per_mac_int8 +
         double(weight_bytes_read) * em.pj_per_weight_byte +
         double(index_bytes_read) * em.pj_per_index_byte +
         double(act_gb_reads) * em.pj_per_act_read_byte +
         double(act_gb_writes) * em.pj_per_act_write_byte +
         double(input_frame_bytes + offchip_act_accesses + offchip_weight_bytes) *
             em.pj_per_offchip_byte;
}

Engine::Engine(const EngineConfig& engine, const MemoryConfig& mem)
    : engine_(engine),
      mem_(mem),
      weight_gb_(mem.weight_gb, 0),
      index_sram_(mem.index_sram, 0),
      act_gb_a_(mem.act_gb_a, 0),
      act_gb_b_(mem.act_gb_b, 0) {}

void Engine::load_model(const AssembledProgram& prog, const ModelSpec& model,
                        const ModelWeights& weights) {
  model.validate();
  if (prog.placement.size() != model.layers.size() ||
      weights.size() != model.layers.size())
    throw ShapeMismatch("placement/weights do not cover the model");
  for (size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& layer = model.layers[i];
    const LayerPlacement& place = prog.placement[i];
    std::vector<uint8_t> payload, indices;
    if (place.sparse) {
      const SparseLayer enc = encode_sparse(layer, weights[i]);
      payload = detail::pack_sparse_payload(layer, enc);
      indices = detail::pack_indices(enc);
    } else {
      payload = detail::pack_dense(layer, weights[i]);
    }
    if (payload.size() != place.weight_bytes ||
        indices.size() != place.index_bytes)
      throw ShapeMismatch("placement extents do not match weights at layer " +
                          std::to_string(i));
    if (place.weight_off + payload.size() > weight_gb_.size())
      throw CapacityExceeded("weight GB preload");
    if (place.index_off + indices.size() > index_sram_.size())
      throw CapacityExceeded("index SRAM preload");
    std::copy(payload.begin(), payload.end(),
              weight_gb_.begin() + place.weight_off);
    std::copy(indices.begin(), indices.end(),
              index_sram_.begin() + place.index_off);
    offchip_weight_bytes_ += payload.size() + indices.size();
    // replace a previous extent at the same offset, else append
    auto it = std::find_if(resident_.begin(), resident_.end(),
                           [&](const LayerPlacement& p) {
                             return p.weight_off == place.weight_off;
                           });
    if (it != resident_.end())
      *it = place;
    else
      resident_.push_back(place);
  }
}

// Execution state of one run(): config registers, role tracking, stats.
struct Engine::Exec {
  Engine& e;
  const ModelSpec& model;
  const SimHooks* hooks;
  const bool trace;

  SimStats stats;
  ActTensor last_output;
  bool input_is_a = true;

  // registers
  std::optional<Instruction> layer_reg;  // last SET_LAYER
  uint16_t cin = 0, cout = 0, h = 0, w = 0;
  uint32_t addr[5] = {0, 0, 0, 0, 0};
  bool shapes_set = false;

  Exec(Engine& eng, const ModelSpec& m, const SimHooks* hk)
      : e(eng), model(m), hooks(hk), trace([] {
          const char* v = std::getenv("E_G2C_TRACE");
          return v && v[0] == '1';
        }()) {}

  std::vector<uint8_t>& input_gb() { return input_is_a ? e.act_gb_a_ : e.act_gb_b_; }
  std::vector<uint8_t>& output_gb() { return input_is_a ? e.act_gb_b_ : e.act_gb_a_; }

  const LayerPlacement& find_resident(uint32_t pc, uint32_t weight_off) const {
    for (const LayerPlacement& p : e.resident_)
      if (p.weight_off == weight_off) return p;
    throw Fault(pc, FaultCause::BadProgram,
                "no resident weight stream at offset " +
                    std::to_string(weight_off));
  }

  void run_layer(uint32_t pc, uint8_t id);
  void execute(const std::vector<uint32_t>& words);
};

void Engine::Exec::run_layer(uint32_t pc, uint8_t id) {
  if (!layer_reg || layer_reg->layer_id != id)
    throw Fault(pc, FaultCause::BadProgram,
                "RUN_LAYER " + std::to_string(id) + " without matching SET_LAYER");
  if (!shapes_set)
    throw Fault(pc, FaultCause::BadProgram, "RUN_LAYER before SET_SHAPE");
  if (id >= model.layers.size())
    throw Fault(pc, FaultCause::BadProgram,
                "layer id " + std::to_string(id) + " outside the model");
  const LayerSpec& layer = model.layers[id];
  if (layer.kind != layer_reg->kind || layer.quant != layer_reg->precision ||
      cin != layer.cin || cout != layer.cout || h != layer.h || w != layer.w)
    throw Fault(pc, FaultCause::BadProgram,
                "configured layer " + std::to_string(id) +
                    " does not match the model");

  const LayerPlacement& place =
      find_resident(pc, addr[size_t(AddrRegion::WeightGB)]);
  if (place.sparse != layer_reg->sparsity ||
      (place.sparse && place.index_off != addr[size_t(AddrRegion::IndexSram)]))
    throw Fault(pc, FaultCause::BadProgram,
                "resident stream does not match SET_LAYER flags");

  // rebuild the schedule and weights from the resident image
  SparseLayer sparse;
  if (place.sparse) {
    const auto pay0 = e.weight_gb_.begin() + place.weight_off;
    const auto idx0 = e.index_sram_.begin() + place.index_off;
    sparse = detail::unpack_sparse(
        layer, std::vector<uint8_t>(pay0, pay0 + place.weight_bytes),
        std::vector<uint8_t>(idx0, idx0 + place.index_bytes));
  } else if (layer.kind != LayerKind::FC) {
    const auto pay0 = e.weight_gb_.begin() + place.weight_off;
    const LayerWeights dense = detail::unpack_dense(
        layer, std::vector<uint8_t>(pay0, pay0 + place.weight_bytes));
    sparse = encode_sparse(layer, dense);
  }
  DataflowFlags flags;
  flags.sparsity = layer_reg->sparsity;
  flags.cir = layer_reg->cir;
  flags.drir = layer_reg->drir;

  const uint64_t stage_cap = e.mem_.in_act_buf;
  LaneSchedule sched;
  if (layer.kind == LayerKind::FC)
    sched = map_layer_dense(layer, e.engine_, flags, stage_cap);
  else if (place.sparse)
    sched = map_layer(layer, sparse, e.engine_, flags, stage_cap);
  else
    sched = map_layer_dense(layer, e.engine_, flags, stage_cap);

  const std::vector<uint8_t>& in = input_gb();
  if (layer.input_bytes() > in.size())
    throw Fault(pc, FaultCause::CapacityOverflow, "input exceeds act GB");
  const int8_t* src = reinterpret_cast<const int8_t*>(in.data());

  std::vector<int32_t> acc(size_t(layer.cout) * layer.hout() * layer.wout(), 0);
  const int hin = layer.h, win = layer.w, wout = layer.wout();
  const int stride = layer.stride, padt = layer.pad_top(), padl = layer.pad_left();
  const bool is_po2 = layer.quant == QuantMode::Po2_4bit;

  std::optional<VectorTable> table;
  if (layer.kind != LayerKind::FC) table.emplace(layer, sparse);

  // FC dense weights, straight from the resident block
  LayerWeights fc_dense;
  if (layer.kind == LayerKind::FC) {
    const auto pay0 = e.weight_gb_.begin() + place.weight_off;
    fc_dense = detail::unpack_dense(
        layer, std::vector<uint8_t>(pay0, pay0 + place.weight_bytes));
  }

  LayerStats ls;
  ls.layer = id;
  ls.kind = layer.kind;
  ls.busy_lane_cycles = sched.busy_lane_cycles;
  ls.waves = sched.waves.size();
  ls.items = sched.items.size();
  ls.macs = sched.total_macs;
  ls.utilization = sched.utilization(e.engine_.lanes);

  std::vector<detail::StagedRow> staged;
  uint64_t prep0 = 0, compute0 = 0;
  for (size_t wv = 0; wv < sched.waves.size(); ++wv) {
    const Wave& wave = sched.waves[wv];
    const uint64_t bytes = detail::wave_staging_bytes(layer, sched, wv, staged);
    if (bytes > e.mem_.in_act_buf)
      throw Fault(pc, FaultCause::BufferOverflow,
                  "wave stages " + std::to_string(bytes) + " bytes");
    const uint64_t prep = ceil_div(bytes, e.mem_.prep_bandwidth);
    ls.prep_cycles += prep;
    ls.compute_cycles += wave.cycles;
    stats.act_gb_reads += bytes;
    if (wv == 0) {
      prep0 = prep;
      compute0 = wave.cycles;
    }
    if (hooks && hooks->on_wave_staging) {
      std::vector<std::pair<int, int>> rows;
      if (layer.kind == LayerKind::FC) {
        if (wv == 0)
          for (int ci = 0; ci < layer.cin; ++ci) rows.emplace_back(ci, 0);
      } else {
        for (const detail::StagedRow& r : staged)
          rows.emplace_back(r.channel, r.row);
      }
      hooks->on_wave_staging(id, uint32_t(wv), rows);
    }

    // execute the wave's items
    for (uint32_t k = 0; k < wave.item_count; ++k) {
      const WorkItem& it = sched.items[wave.first_item + k];
      switch (layer.kind) {
        case LayerKind::ConvNormal:
        case LayerKind::ConvDW: {
          const uint32_t v = it.vector_index;
          const int kh = int(v % 3);
          const int ci = layer.kind == LayerKind::ConvDW ? int(v / 3)
                                                         : int(v / 3) % layer.cin;
          const int co = layer.kind == LayerKind::ConvDW ? int(v / 3)
                                                         : int(v / 3 / layer.cin);
          const int y = it.out_row * stride + kh - padt;
          if (y < 0 || y >= hin) break;
          const std::array<uint8_t, 3>& wv3 = table->w[v];
          const int8_t* row = src + (size_t(ci) * hin + y) * win;
          int32_t* out = acc.data() + (size_t(co) * layer.hout() + it.out_row) * wout;
          const int wo_begin = it.seg_off, wo_end = it.seg_off + it.seg_len;
          for (int kw = 0; kw < 3; ++kw) {
            const uint8_t code = wv3[kw];
            // valid output columns for this kernel column
            int lo = wo_begin, hi = wo_end;  // [lo, hi)
            // x = wo*stride + kw - padl must be in [0, win)
            while (lo < hi && lo * stride + kw - padl < 0) ++lo;
            while (hi > lo && (hi - 1) * stride + kw - padl >= win) --hi;
            const int x0 = lo * stride + kw - padl;
            if (is_po2) {
              if (po2::is_zero(code)) continue;
              const int ex = po2::exponent(code);
              const int32_t s = po2::sign_bit(code) ? -1 : 1;
              for (int wo = lo; wo < hi; ++wo)
                out[wo] += s * (int32_t(row[x0 + (wo - lo) * stride]) >> ex);
            } else {
              const int32_t wgt = int8_t(code);
              if (wgt == 0) continue;
              for (int wo = lo; wo < hi; ++wo)
                out[wo] += wgt * int32_t(row[x0 + (wo - lo) * stride]);
            }
          }
          break;
        }
        case LayerKind::ConvPW: {
          const uint32_t triplets = (uint32_t(layer.cin) + 2) / 3;
          const int co = int(it.vector_index / triplets);
          const int t = int(it.vector_index % triplets);
          const int y = it.out_row * stride;
          if (y >= hin) break;
          const std::array<uint8_t, 3>& wv3 = table->w[it.vector_index];
          int32_t* out = acc.data() + (size_t(co) * layer.hout() + it.out_row) * wout;
          for (int j = 0; j < 3; ++j) {
            const int ci = t * 3 + j;
            if (ci >= layer.cin) break;
            const uint8_t code = wv3[j];
            const int8_t* row = src + (size_t(ci) * hin + y) * win;
            if (is_po2) {
              if (po2::is_zero(code)) continue;
              const int ex = po2::exponent(code);
              const int32_t s = po2::sign_bit(code) ? -1 : 1;
              for (int wo = 0; wo < wout; ++wo)
                out[wo] += s * (int32_t(row[wo * stride]) >> ex);
            } else {
              const int32_t wgt = int8_t(code);
              if (wgt == 0) continue;
              for (int wo = 0; wo < wout; ++wo)
                out[wo] += wgt * int32_t(row[wo * stride]);
            }
          }
          break;
        }
        case LayerKind::FC: {
          const int co = int(it.vector_index);
          int32_t sum = 0;
          if (is_po2) {
            for (int ci = 0; ci < layer.cin; ++ci)
              sum += po2::mac(src[ci], fc_dense.w[size_t(co) * layer.cin + ci]);
          } else {
            for (int ci = 0; ci < layer.cin; ++ci)
              sum += int32_t(int8_t(fc_dense.w[size_t(co) * layer.cin + ci])) *
                     int32_t(src[ci]);
          }
          acc[size_t(co)] = sum;
          break;
        }
      }
    }
  }

  // requantize and write the output through out_act_buf
  const uint64_t serial = ls.compute_cycles + ls.prep_cycles;
  ls.cycles = std::max(ls.compute_cycles, ls.prep_cycles) +
              std::min(compute0, prep0);
  ls.overlap_saved_cycles = serial - ls.cycles;

  ActTensor out(layer.cout, layer.hout(), layer.wout(), layer.outbits);
  for (size_t i = 0; i < acc.size(); ++i) {
    int32_t v = acc[i] >> layer.requant_shift;
    if (layer.act == Activation::ReLU && v < 0) v = 0;
    out.data[i] = int16_t(clamp_to_bits(v, layer.outbits));
  }

  std::vector<uint8_t>& dst = output_gb();
  const uint32_t out_off = addr[size_t(AddrRegion::Output)];
  const size_t out_bytes = layer.output_bytes();
  if (out_off + out_bytes > dst.size())
    throw Fault(pc, FaultCause::CapacityOverflow, "output exceeds act GB");
  if (layer.outbits == 16) {
    for (size_t i = 0; i < out.data.size(); ++i) {
      dst[out_off + 2 * i] = uint8_t(uint16_t(out.data[i]));
      dst[out_off + 2 * i + 1] = uint8_t(uint16_t(out.data[i]) >> 8);
    }
  } else {
    for (size_t i = 0; i < out.data.size(); ++i)
      dst[out_off + i] = uint8_t(int8_t(out.data[i]));
  }
  stats.act_gb_writes += out_bytes;

  stats.weight_bytes_read += place.weight_bytes;
  stats.index_bytes_read += place.index_bytes;
  stats.macs_executed += sched.total_macs;
  (is_po2 ? stats.macs_po2 : stats.macs_int8) += sched.total_macs;
  stats.total_cycles += ls.cycles;
  stats.layers.push_back(ls);
  last_output = std::move(out);
  if (hooks && hooks->on_layer) hooks->on_layer(id, last_output);
}

void Engine::Exec::execute(const std::vector<uint32_t>& words) {
  if (words.empty())
    throw Fault(0, FaultCause::BadProgram, "empty program");
  uint32_t pc = 0;
  for (;; ++pc) {
    if (pc >= words.size())
      throw Fault(pc, FaultCause::MissingHalt, "ran past the last word");
    Instruction in;
    try {
      in = decode(words[pc]);
    } catch (const Fault& f) {
      throw Fault(pc, f.cause, f.what());
    }
    if (trace)
      std::fprintf(stderr, "[eg2c] pc=%u %s\n", pc,
                   disassemble_word(words[pc]).c_str());
    switch (in.op) {
      case Opcode::NOP:
        stats.instruction_cycles += 1;
        stats.total_cycles += 1;
        break;
      case Opcode::SET_LAYER:
        layer_reg = in;
        stats.instruction_cycles += 1;
        stats.total_cycles += 1;
        break;
      case Opcode::SET_SHAPE_A:
        cin = in.cin;
        cout = in.cout;
        shapes_set = true;
        stats.instruction_cycles += 1;
        stats.total_cycles += 1;
        break;
      case Opcode::SET_SHAPE_B:
        h = in.h;
        w = in.w;
        stats.instruction_cycles += 1;
        stats.total_cycles += 1;
        break;
      case Opcode::SET_ADDR:
        addr[size_t(in.region)] = in.addr;
        stats.instruction_cycles += 1;
        stats.total_cycles += 1;
        break;
      case Opcode::RUN_LAYER:
        run_layer(pc, in.layer_id);
        break;
      case Opcode::SWAP_GB:
        input_is_a = !input_is_a;
        stats.instruction_cycles += 1;
        stats.total_cycles += 1;
        break;
      case Opcode::CMP_THRESH: {
        if (last_output.data.empty())
          throw Fault(pc, FaultCause::BadProgram, "CMP_THRESH before any layer");
        stats.anomaly_flag = last_output.data[0] > e.threshold_reg_;
        stats.instruction_cycles += 1;
        stats.total_cycles += 1;
        break;
      }
      case Opcode::SET_THRESH:
        e.threshold_reg_ = in.threshold;
        stats.instruction_cycles += 1;
        stats.total_cycles += 1;
        break;
      case Opcode::HALT:
        stats.instruction_cycles += 1;
        stats.total_cycles += 1;
        stats.threshold = e.threshold_reg_;
        return;
    }
  }
}

RunResult Engine::run(const std::vector<uint32_t>& words, const ModelSpec& model,
                      const Tensor& input, const SimHooks* hooks) {
  model.validate();
  const LayerSpec& first = model.layers.front();
  if (first.kind == LayerKind::FC) {
    if (size_t(input.c) * input.h * input.w != size_t(first.cin))
      throw ShapeMismatch("input does not match the FC layer");
  } else if (input.c != first.cin || input.h != first.h || input.w != first.w) {
    throw ShapeMismatch("input does not match the first layer");
  }
  if (input.size() > act_gb_a_.size())
    throw CapacityExceeded("input frame exceeds act GB A");

  Exec ex(*this, model, hooks);
  std::memcpy(act_gb_a_.data(), input.data.data(), input.size());
  ex.stats.input_frame_bytes = input.size();
  ex.stats.frame_load_cycles = ceil_div(input.size(), mem_.prep_bandwidth);
  ex.stats.total_cycles += ex.stats.frame_load_cycles;

  ex.execute(words);

  uint64_t conv_busy = 0, conv_cap = 0, all_busy = 0, all_cap = 0;
  for (const LayerStats& ls : ex.stats.layers) {
    const uint64_t cap = ls.compute_cycles * engine_.lanes;
    all_busy += ls.busy_lane_cycles;
    all_cap += cap;
    if (ls.kind != LayerKind::FC) {
      conv_busy += ls.busy_lane_cycles;
      conv_cap += cap;
    }
  }
  ex.stats.utilization_conv = conv_cap ? double(conv_busy) / conv_cap : 0.0;
  ex.stats.utilization_all = all_cap ? double(all_busy) / all_cap : 0.0;

  RunResult r;
  r.output = std::move(ex.last_output);
  r.stats = std::move(ex.stats);
  return r;
}

RunResult run_program(const ModelSpec& model, const ModelWeights& weights,
                      const Tensor& input, const EngineConfig& engine,
                      const MemoryConfig& mem, const DataflowFlags& flags,
                      const SimHooks* hooks) {
  AssembleOptions opts;
  opts.flags = flags;
  const AssembledProgram prog = assemble(model, weights, engine, mem, opts);
  Engine eng(engine, mem);
  eng.load_model(prog, model, weights);
  RunResult r = eng.run(prog.program.words, model, input, hooks);
  r.stats.offchip_weight_bytes = eng.session_offchip_weight_bytes();
  return r;
}

SpeedupPoint speedup_vs_dense(const ModelSpec& model, const ModelWeights& weights,
                              double sparsity, const EngineConfig& engine,
                              const MemoryConfig& mem, DataflowFlags flags) {
  if (sparsity < 0.0 || sparsity >= 1.0)
    throw InvalidRate("sparsity must be in [0, 1)");
  SpeedupPoint pt;
  pt.requested_sparsity = sparsity;

  const ModelWeights pruned = prune_model(model, weights, sparsity);
  pt.achieved_sparsity = model_vector_sparsity(model, pruned);

  const Tensor frame = calibration_frame();
  DataflowFlags dense_flags = flags;
  dense_flags.sparsity = false;
  DataflowFlags sparse_flags = flags;
  sparse_flags.sparsity = true;

  pt.dense_cycles =
      run_program(model, weights, frame, engine, mem, dense_flags).stats.total_cycles;
  pt.sparse_cycles =
      run_program(model, pruned, frame, engine, mem, sparse_flags).stats.total_cycles;
  pt.speedup = double(pt.dense_cycles) / double(pt.sparse_cycles);
  return pt;
}

CalibrationResult calibrate_p(const EngineConfig& engine, const MemoryConfig& mem,
                              const DataflowFlags& flags, int p_max) {
  const ReferenceSuite suite = build_reference_models();
  const Tensor frame = calibration_frame();

  CalibrationResult result;
  result.target_detector_ms = kTargetDetectorMs;
  result.target_coarse_ms = kTargetCoarseMs;
  result.target_precise_ms = kTargetPreciseMs;

  double best = -1.0;
  for (int p = 1; p <= p_max; ++p) {
    EngineConfig cfg = engine;
    cfg.macs_per_lane_per_cycle = p;
    CalibrationRow row;
    row.p = p;
    row.detector_cycles =
        run_program(suite.detector.spec, suite.detector.weights, frame, cfg, mem, flags)
            .stats.total_cycles;
    row.coarse_cycles =
        run_program(suite.coarse.spec, suite.coarse.weights, frame, cfg, mem, flags)
            .stats.total_cycles;
    row.precise_cycles =
        run_program(suite.precise.spec, suite.precise.weights, frame, cfg, mem, flags)
            .stats.total_cycles;
    const double ms = 1e3 / double(cfg.clock_hz);
    const double e1 = std::abs(row.detector_cycles * ms - result.target_detector_ms) /
                      result.target_detector_ms;
    const double e2 = std::abs(row.coarse_cycles * ms - result.target_coarse_ms) /
                      result.target_coarse_ms;
    const double e3 = std::abs(row.precise_cycles * ms - result.target_precise_ms) /
                      result.target_precise_ms;
    row.mean_rel_error = (e1 + e2 + e3) / 3.0;
    if (best < 0.0 || row.mean_rel_error < best) {
      best = row.mean_rel_error;
      result.best_p = p;
    }
    result.rows.push_back(row);
  }
  return result;
}

}  // namespace eg2c
