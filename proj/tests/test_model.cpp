#include <cstdio>
#include <random>

#include <doctest.h>

#include "eg2c/executor.hpp"
#include "eg2c/model.hpp"
#include "eg2c/model_io.hpp"
#include "eg2c/reference_models.hpp"
#include "oracle.hpp"

using namespace eg2c;

namespace {

LayerSpec pw(int cin, int cout, int h, int w) {
  LayerSpec l;
  l.kind = LayerKind::ConvPW;
  l.cin = cin;
  l.cout = cout;
  l.h = h;
  l.w = w;
  return l;
}

}  // namespace

TEST_CASE("closed-form MAC count") {
  LayerSpec l = pw(4, 8, 2, 2);
  CHECK(layer_macs(l) == 128);

  // Strided depth-wise: spatial output shrinks by ceil(dim / stride).
  LayerSpec dw;
  dw.kind = LayerKind::ConvDW;
  dw.cin = dw.cout = 2;
  dw.h = 32;
  dw.w = 64;
  dw.stride = 4;
  CHECK(dw.hout() == 8);
  CHECK(dw.wout() == 16);
  CHECK(layer_macs(dw) == 2ull * 9 * 8 * 16);
}

TEST_CASE("model validation rejects inconsistent stacks") {
  ModelSpec m;
  CHECK_THROWS_AS(m.validate(), ShapeMismatch);

  m.layers = {pw(2, 3, 4, 4)};
  m.layers[0].kind = LayerKind::ConvDW;  // Cout != Cin
  CHECK_THROWS_AS(m.validate(), ShapeMismatch);

  m.layers = {pw(2, 3, 4, 4), pw(3, 3, 4, 4)};
  m.layers[0].outbits = 16;  // wide output mid-model
  CHECK_THROWS_AS(m.validate(), ShapeMismatch);

  m.layers = {pw(2, 3, 4, 4), pw(4, 3, 4, 4)};  // broken chaining
  CHECK_THROWS_AS(m.validate(), ShapeMismatch);

  m.layers = {pw(2, 3, 4, 4), pw(3, 3, 4, 4)};
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("dense forward agrees with the loop-nest oracle") {
  std::mt19937 rng(81);

  SUBCASE("all-zero weights give an all-zero output") {
    oracle::RandomLayer r =
        oracle::random_layer(rng, LayerKind::ConvNormal, QuantMode::Int8);
    std::fill(r.weights[0].w.begin(), r.weights[0].w.end(), 0);
    const ActTensor out = dense_forward(r.model, r.weights, r.input);
    for (int16_t v : out.data) CHECK(v == 0);
  }

  SUBCASE("single-weight point-wise identity") {
    ModelSpec m;
    m.layers = {pw(1, 1, 1, 1)};
    m.layers[0].act = Activation::Identity;
    LayerWeights w;
    w.w = {1};  // int8 +1, shift 0
    Tensor in(1, 1, 1);
    in.data[0] = 1;
    const ActTensor out = dense_forward(m, {w}, in);
    CHECK(out.data[0] == 1);
  }

  SUBCASE("random 3x3 layers, both precisions") {
    for (int rep = 0; rep < 40; ++rep) {
      const QuantMode mode = rep % 2 ? QuantMode::Po2_4bit : QuantMode::Int8;
      oracle::RandomLayer r =
          oracle::random_layer(rng, LayerKind::ConvNormal, mode);
      const ActTensor lib = dense_forward(r.model, r.weights, r.input);
      const ActTensor ref = oracle::forward_model(r.model, r.weights, r.input);
      CHECK(lib == ref);
    }
  }
}

TEST_CASE("reference models land on the published complexities") {
  const ReferenceSuite suite = build_reference_models();

  CHECK(model_macs(suite.detector.spec) >= 3920);
  CHECK(model_macs(suite.detector.spec) <= 4080);
  CHECK(model_macs(suite.coarse.spec) >= 2636200);
  CHECK(model_macs(suite.coarse.spec) <= 2743800);
  CHECK(model_macs(suite.precise.spec) >= 5674200);
  CHECK(model_macs(suite.precise.spec) <= 5905800);

  // Weight quantization per role: cheap po2 coarse path, int8 elsewhere.
  for (const LayerSpec& l : suite.coarse.spec.layers)
    CHECK(l.quant == QuantMode::Po2_4bit);
  for (const LayerSpec& l : suite.precise.spec.layers)
    CHECK(l.quant == QuantMode::Int8);

  SUBCASE("construction is deterministic") {
    const ReferenceSuite again = build_reference_models();
    CHECK(again.detector.weights == suite.detector.weights);
    CHECK(again.coarse.weights == suite.coarse.weights);
    CHECK(again.precise.weights == suite.precise.weights);
    CHECK(again.coarse.spec == suite.coarse.spec);
  }

  SUBCASE("every intermediate activation fits the global buffer") {
    for (const ReferenceModel* m :
         {&suite.detector, &suite.coarse, &suite.precise})
      for (const LayerSpec& l : m->spec.layers) {
        CHECK(l.input_bytes() <= 14336);
        CHECK(l.output_bytes() <= 14336);
      }
  }
}

TEST_CASE("model container round-trips") {
  const ReferenceSuite suite = build_reference_models();
  ModelFile file{{suite.detector, suite.coarse, suite.precise}};

  char path[] = "/tmp/eg2c_models_XXXXXX";
  REQUIRE(mkstemp(path) != -1);
  save_models(path, file);
  const ModelFile back = load_models(path);

  REQUIRE(back.models.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(back.models[i].spec == file.models[i].spec);
    CHECK(back.models[i].weights == file.models[i].weights);
  }
  std::remove(path);
}
