#include "eg2c/stream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "eg2c/reference_models.hpp"

namespace eg2c {
namespace {

constexpr double kPi = 3.14159265358979323846;

double u01(std::mt19937_64& g) {
  return double(g() >> 11) * 0x1p-53;
}

// One synthetic beat: a Gaussian-windowed oscillation (the depolarization
// complex) over uniform noise, laid out row-major into the frame. Both
// classes share the waveform shape; amplitude alone carries the class, so
// the detector's response separates them wherever it is monotone.
Tensor synth_beat(std::mt19937_64& g, double amplitude) {
  Tensor t(kFrameC, kFrameH, kFrameW);
  const int n = int(t.size());
  const double t0 = n / 2.0;
  const double sigma = 150.0;
  const double lambda = 96.0;
  for (int i = 0; i < n; ++i) {
    const double dt = i - t0;
    const double pulse =
        std::exp(-dt * dt / (2.0 * sigma * sigma)) * std::sin(2.0 * kPi * dt / lambda);
    const double noise = (u01(g) * 2.0 - 1.0) * 6.0;
    const double v = amplitude * pulse + noise;
    t.data[i] = int8_t(std::clamp(int(std::lround(v)), -127, 127));
  }
  return t;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

int parse_int(const std::string& s, const std::string& what, int lo, int hi) {
  size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw IoError("bad " + what + ": '" + s + "'");
  }
  if (pos != s.size() || v < lo || v > hi)
    throw IoError("bad " + what + ": '" + s + "'");
  return v;
}

}  // namespace

StreamFile gen_stream(uint64_t seed, uint32_t n_beats, double anomaly_rate,
                      const DriftSpec& drift) {
  if (!(anomaly_rate >= 0.0 && anomaly_rate <= 1.0))
    throw InvalidRate("anomaly_rate outside [0, 1]");
  std::mt19937_64 g(seed);
  StreamFile s;
  s.beats.reserve(n_beats);
  const double base_amp = 55.0;
  for (uint32_t i = 0; i < n_beats; ++i) {
    const double pos = n_beats > 1 ? double(i) / (n_beats - 1) : 0.0;
    const double p_anom =
        anomaly_rate * (1.0 + drift.rate_growth * (pos - 0.5));
    const bool anomalous = u01(g) < p_anom;
    double amp = base_amp * (1.0 + drift.jitter * (u01(g) * 2.0 - 1.0));
    if (anomalous) {
      // Severity uniform between the subtlest anomaly seen so far and
      // full strength; the subtle floor sinks as the stream progresses.
      const double margin =
          (drift.anomaly_gain - 1.0) * (1.0 - drift.drift * pos * u01(g));
      amp *= 1.0 + margin;
    } else if (u01(g) < drift.quiet_rate) {
      amp *= 0.45;
    }
    Beat b;
    b.index = i;
    b.label = anomalous ? 1 : 0;
    b.frame = synth_beat(g, amp);
    s.beats.push_back(std::move(b));
  }
  return s;
}

void save_stream(const std::string& path, const StreamFile& stream) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  const size_t n = stream.beats.empty() ? 0 : stream.beats.front().frame.size();
  f << "beat_index,label";
  for (size_t i = 0; i < n; ++i) f << ",s" << i;
  f << '\n';
  for (const Beat& b : stream.beats) {
    if (b.frame.size() != n) throw IoError("ragged stream");
    f << b.index << ',' << int(b.label);
    for (int8_t v : b.frame.data) f << ',' << int(v);
    f << '\n';
  }
  if (!f) throw IoError("write failed: " + path);
}

StreamFile load_stream(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty stream file: " + path);
  const auto header = split(line, ',');
  if (header.size() < 3 || header[0] != "beat_index" || header[1] != "label")
    throw IoError("bad stream header: " + path);
  const size_t n = header.size() - 2;
  if (n != size_t(kFrameC) * kFrameH * kFrameW)
    throw IoError("stream frame size " + std::to_string(n) +
                  " does not match the models");
  StreamFile s;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != header.size())
      throw IoError("ragged row in " + path);
    Beat b;
    b.index = uint32_t(parse_int(cols[0], "beat_index", 0, INT32_MAX));
    b.label = uint8_t(parse_int(cols[1], "label", 0, 1));
    b.frame = Tensor(kFrameC, kFrameH, kFrameW);
    for (size_t i = 0; i < n; ++i)
      b.frame.data[i] = int8_t(parse_int(cols[2 + i], "sample", -128, 127));
    s.beats.push_back(std::move(b));
  }
  return s;
}

void save_scores(const std::string& path, const std::vector<int16_t>& scores) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << "score\n";
  for (int16_t v : scores) f << v << '\n';
  if (!f) throw IoError("write failed: " + path);
}

std::vector<int16_t> load_scores(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path);
  std::string line;
  if (!std::getline(f, line) || line != "score")
    throw IoError("bad score header: " + path);
  std::vector<int16_t> out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    out.push_back(int16_t(parse_int(line, "score", -32768, 32767)));
  }
  return out;
}

}  // namespace eg2c
