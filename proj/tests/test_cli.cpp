#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "commands.hpp"
#include "eg2c/model_io.hpp"
#include "eg2c/stream.hpp"

using json = nlohmann::json;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = eg2c::cli::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string tmpdir() {
  char path[] = "/tmp/eg2c_cli_XXXXXX";
  REQUIRE(mkdtemp(path) != nullptr);
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Just enough of JSON Schema to enforce required keys, types and enums —
// the subset schema/report.schema.json actually uses.
void check_schema(const json& schema, const json& value, const std::string& at) {
  INFO("at ", at);
  if (schema.contains("type")) {
    const std::string t = schema.at("type").get<std::string>();
    const bool ok = t == "object"    ? value.is_object()
                    : t == "array"   ? value.is_array()
                    : t == "string"  ? value.is_string()
                    : t == "integer" ? value.is_number_integer()
                    : t == "number"  ? value.is_number()
                    : t == "boolean" ? value.is_boolean()
                                     : false;
    CHECK(ok);
    if (!ok) return;
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const json& e : schema.at("enum")) found = found || e == value;
    CHECK(found);
  }
  if (schema.contains("required"))
    for (const json& key : schema.at("required"))
      CHECK(value.contains(key.get<std::string>()));
  if (schema.contains("properties") && value.is_object())
    for (const auto& [key, sub] : schema.at("properties").items())
      if (value.contains(key)) check_schema(sub, value.at(key), at + "." + key);
  if (schema.contains("items") && value.is_array()) {
    size_t i = 0;
    for (const json& el : value)
      check_schema(schema.at("items"), el, at + "[" + std::to_string(i++) + "]");
  }
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("bare invocation and help") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"no-such-command"}).code == 1);
}

TEST_CASE("gen needs at least one output") {
  const CliResult r = cli({"gen", "--beats", "5"});
  CHECK(r.code == 1);
  CHECK(r.err.find("nothing to do") != std::string::npos);
}

TEST_CASE("gen writes byte-identical streams for one seed") {
  const std::string dir = tmpdir();
  const std::vector<std::string> args = {"gen",    "--seed", "5",
                                         "--beats", "12",    "--rate", "0.3"};
  auto with_out = [&](const std::string& p) {
    std::vector<std::string> a = args;
    a.push_back("--out");
    a.push_back(p);
    return a;
  };
  CHECK(cli(with_out(dir + "/a.csv")).code == 0);
  CHECK(cli(with_out(dir + "/b.csv")).code == 0);
  CHECK(slurp(dir + "/a.csv") == slurp(dir + "/b.csv"));

  const eg2c::StreamFile s = eg2c::load_stream(dir + "/a.csv");
  CHECK(s.beats.size() == 12);
}

TEST_CASE("gen rejects an out-of-range rate") {
  CHECK(cli({"gen", "--rate", "1.5", "--out", "/tmp/never.csv"}).code == 1);
}

TEST_CASE("compile then disassemble") {
  const std::string dir = tmpdir();
  const std::string prog = dir + "/detector.prog";
  const CliResult c = cli({"compile", "--role", "detector", "--out", prog,
                           "--schedule-json", dir + "/sched.json"});
  REQUIRE(c.code == 0);
  CHECK(c.out.find("wrote " + prog) != std::string::npos);

  const json sched = json::parse(slurp(dir + "/sched.json"));
  CHECK(sched.at("role") == "detector");
  CHECK(sched.at("layers").is_array());
  CHECK(sched.at("aggregate_all").is_number());

  const CliResult d = cli({"disasm", prog});
  REQUIRE(d.code == 0);
  CHECK(d.out.find("SET_SHAPE_A Cin=") != std::string::npos);
  CHECK(d.out.find("CMP_THRESH\nHALT\n") != std::string::npos);
}

TEST_CASE("compile requires a known role") {
  CHECK(cli({"compile", "--role", "oracle", "--out", "/tmp/x.prog"}).code == 1);
}

TEST_CASE("prune at zero sparsity is a byte-level no-op") {
  const std::string dir = tmpdir();
  const std::string base = dir + "/models.bin";
  const std::string pruned = dir + "/pruned.bin";
  REQUIRE(cli({"gen", "--models-out", base}).code == 0);
  const CliResult p =
      cli({"prune", "--models", base, "--sparsity", "0", "--out", pruned});
  REQUIRE(p.code == 0);
  CHECK(p.out.find("detector") != std::string::npos);
  CHECK(p.out.find("coarse") != std::string::npos);
  CHECK(p.out.find("precise") != std::string::npos);
  CHECK(slurp(base) == slurp(pruned));

  SUBCASE("and out-of-range sparsity never reaches the pruner") {
    CHECK(cli({"prune", "--models", base, "--sparsity", "1.2", "--out",
               dir + "/no.bin"})
              .code == 1);
  }
}

TEST_CASE("run emits a schema-valid, reproducible report") {
  const std::string dir = tmpdir();
  const std::string stream = dir + "/stream.csv";
  REQUIRE(cli({"gen", "--seed", "9", "--beats", "8", "--rate", "0.25", "--out",
               stream})
              .code == 0);

  auto run_once = [&](const std::string& tag) {
    return cli({"run", "--stream", stream, "--report", dir + "/" + tag + ".json",
                "--beats-csv", dir + "/" + tag + ".csv"});
  };
  const CliResult r = run_once("r1");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("8 beats") != std::string::npos);

  const json report = json::parse(slurp(dir + "/r1.json"));
  const json schema =
      json::parse(slurp(std::string(EG2C_SOURCE_DIR) + "/schema/report.schema.json"));
  check_schema(schema, report, "report");
  CHECK(report.at("dispatch").at("beats") == 8);
  CHECK(report.at("models").size() == 3);
  CHECK(report.at("counters").at("offchip_act_accesses") == 0);

  const std::string csv = slurp(dir + "/r1.csv");
  CHECK(csv.rfind("beat_index,label,anomaly,kind,", 0) == 0);
  CHECK(count_lines(csv) == 9);  // header + 8 beats

  REQUIRE(run_once("r2").code == 0);
  CHECK(slurp(dir + "/r1.json") == slurp(dir + "/r2.json"));
  CHECK(slurp(dir + "/r1.csv") == slurp(dir + "/r2.csv"));
}

TEST_CASE("config problems exit with the config code") {
  const std::string dir = tmpdir();
  const std::string stream = dir + "/s.csv";
  REQUIRE(cli({"gen", "--beats", "2", "--out", stream}).code == 0);

  std::ofstream(dir + "/unknown.json") << "{\"bogus\": {}}\n";
  CHECK(cli({"run", "--stream", stream, "--config", dir + "/unknown.json"}).code ==
        2);

  std::ofstream(dir + "/bad.json") << "{\"adapt\": {\"bins\": 1}}\n";
  CHECK(cli({"run", "--stream", stream, "--config", dir + "/bad.json"}).code == 2);
}

TEST_CASE("missing inputs exit with the io code") {
  CHECK(cli({"run", "--stream", "/tmp/eg2c_does_not_exist.csv"}).code == 1);
  CHECK(cli({"disasm", "/tmp/eg2c_does_not_exist.prog"}).code == 1);
}

TEST_CASE("adapt-demo replays scores on the documented cadence") {
  const std::string dir = tmpdir();
  std::vector<int16_t> scores;
  for (int i = 0; i < 32; ++i) {
    scores.push_back(10);
    scores.push_back(90);
  }
  eg2c::save_scores(dir + "/scores.csv", scores);

  const CliResult r = cli({"adapt-demo", "--scores", dir + "/scores.csv",
                           "--bins", "8", "--window", "32", "--refresh", "16",
                           "--out", dir + "/trace.csv"});
  REQUIRE(r.code == 0);
  // Range fixes to [10, 91): bins 0 and 7 carry all mass, the interior
  // ties at zero, bin 1 wins: llround(10 + 1.5 * 81 / 8) = 25 every time.
  CHECK(slurp(dir + "/trace.csv") ==
        "sample_index,threshold\n32,25\n48,25\n64,25\n");
}

TEST_CASE("sweep covers its grid in order") {
  const std::string dir = tmpdir();
  const CliResult r = cli({"sweep", "--grid", "0.5,0", "--jobs", "2", "--out",
                           dir + "/sweep.json"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("calibration best P=") != std::string::npos);

  const json j = json::parse(slurp(dir + "/sweep.json"));
  const json& curve = j.at("speedup_curve");
  REQUIRE(curve.size() == 2);
  CHECK(curve[0].at("sparsity") == 0.0);  // sorted despite reversed input
  CHECK(curve[1].at("sparsity") == 0.5);
  CHECK(curve[0].at("coarse").at("speedup").get<double>() <
        curve[1].at("coarse").at("speedup").get<double>());
  CHECK(j.at("calibration").at("best_p").is_number_integer());
}
