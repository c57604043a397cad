#include "eg2c/assembler.hpp"

#include <string>

#include "eg2c/errors.hpp"
#include "staging.hpp"

namespace eg2c {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw CapacityExceeded(what);
}

}  // namespace

AssembledProgram assemble(const ModelSpec& model, const ModelWeights& weights,
                          const EngineConfig& engine, const MemoryConfig& mem,
                          const AssembleOptions& opts) {
  model.validate();
  if (weights.size() != model.layers.size())
    throw ShapeMismatch("weights for " + std::to_string(weights.size()) +
                        " layers, model has " +
                        std::to_string(model.layers.size()));
  if (model.layers.size() > 255)
    throw RangeError("layer id exceeds 8 bits");

  AssembledProgram out;
  out.program.role = model.role;
  out.program.layer_count = int(model.layers.size());
  uint32_t weight_off = opts.weight_base;
  uint32_t index_off = opts.index_base;
  std::vector<detail::StagedRow> scratch;

  auto emit = [&out](const Instruction& instr) {
    out.program.words.push_back(encode(instr));
  };

  for (size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& layer = model.layers[i];
    const bool sparse = opts.flags.sparsity && layer.kind != LayerKind::FC;
    const bool dw = layer.kind == LayerKind::ConvDW;

    LayerPlacement place;
    place.sparse = sparse;
    place.weight_off = weight_off;
    place.index_off = index_off;

    LaneSchedule sched;
    if (sparse) {
      SparseLayer enc = encode_sparse(layer, weights[i]);
      const SparsityStats stats = sparsity_stats(layer, enc);
      place.weight_bytes = uint32_t(stats.payload_bytes);
      place.index_bytes = uint32_t(stats.index_bytes);
      sched = map_layer(layer, enc, engine, opts.flags, mem.in_act_buf);
    } else {
      place.weight_bytes = uint32_t(detail::dense_payload_bytes(layer));
      sched = map_layer_dense(layer, engine, opts.flags, mem.in_act_buf);
    }
    weight_off += place.weight_bytes;
    index_off += place.index_bytes;
    require(weight_off <= mem.weight_gb,
            "weight GB overflow at layer " + std::to_string(i));
    require(index_off <= mem.index_sram,
            "index SRAM overflow at layer " + std::to_string(i));
    require(layer.input_bytes() <= mem.act_gb_a,
            "input activations overflow act GB at layer " + std::to_string(i));
    require(layer.output_bytes() <= mem.act_gb_b,
            "output activations overflow act GB at layer " + std::to_string(i));
    require(size_t(layer.wout()) * (layer.outbits == 16 ? 2 : 1) <=
                mem.out_act_buf,
            "output row overflows out_act_buf at layer " + std::to_string(i));
    for (size_t wv = 0; wv < sched.waves.size(); ++wv) {
      require(detail::wave_staging_bytes(layer, sched, wv, scratch) <=
                  mem.in_act_buf,
              "wave staging overflows in_act_buf at layer " +
                  std::to_string(i));
    }
    out.placement.push_back(place);

    Instruction set_layer;
    set_layer.op = Opcode::SET_LAYER;
    set_layer.kind = layer.kind;
    set_layer.precision = layer.quant;
    set_layer.sparsity = sparse;
    set_layer.cir = dw && opts.flags.cir;
    set_layer.drir = dw && opts.flags.drir;
    set_layer.layer_id = uint8_t(i);
    emit(set_layer);

    Instruction shape_a;
    shape_a.op = Opcode::SET_SHAPE_A;
    shape_a.cin = uint16_t(layer.cin);
    shape_a.cout = uint16_t(layer.cout);
    if (layer.cin > 0x3FFF || layer.cout > 0x3FFF)
      throw RangeError("layer shape exceeds 14 bits");
    emit(shape_a);

    Instruction shape_b;
    shape_b.op = Opcode::SET_SHAPE_B;
    shape_b.h = uint16_t(layer.h);
    shape_b.w = uint16_t(layer.w);
    if (layer.h > 0x3FFF || layer.w > 0x3FFF)
      throw RangeError("layer shape exceeds 14 bits");
    emit(shape_b);

    Instruction addr;
    addr.op = Opcode::SET_ADDR;
    addr.region = AddrRegion::WeightGB;
    addr.addr = place.weight_off;
    emit(addr);
    addr.region = AddrRegion::IndexSram;
    addr.addr = place.index_off;
    emit(addr);
    addr.region = AddrRegion::Output;
    addr.addr = 0;
    emit(addr);

    Instruction run;
    run.op = Opcode::RUN_LAYER;
    run.layer_id = uint8_t(i);
    emit(run);

    if (i + 1 < model.layers.size())
      emit(Instruction{.op = Opcode::SWAP_GB});
  }

  if (model.role == ModelRole::Detector)
    emit(Instruction{.op = Opcode::CMP_THRESH});
  emit(Instruction{.op = Opcode::HALT});

  // +1 headroom for the SET_THRESH a dispatcher prepends per beat
  require(out.program.words.size() + 1 <= mem.instr_words,
          "program exceeds instruction SRAM");
  out.weight_end = weight_off;
  out.index_end = index_off;
  return out;
}

}  // namespace eg2c
