#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "rsm/eval.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

Run rsm_run(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "rsm_cli_test.log";
  const std::string cmd = std::string(RSM_BINARY) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

fs::path workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "rsm_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string p(const std::string& name) { return (workdir() / name).string(); }

const std::string kTiny =
    "--set hidden=16 --set encoder_hidden=16 --set cnn_channels=4 --set decoder_hidden=8 "
    "--set batch_size=32 --set decoder_batch_size=32";

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(rsm_run("").code == 2);
  CHECK(rsm_run("frobnicate").code == 2);
  CHECK(rsm_run("generate --env atari --split train --out " + p("x.rsmd")).code == 2);
  CHECK(rsm_run("eval --world " + p("missing.ckpt") + " --data " + p("missing.rsmd")).code == 2);
  CHECK(rsm_run("--help").code == 0);
}

TEST_CASE("end-to-end generate, train, eval, decode and report") {
  REQUIRE(rsm_run("generate --env shapes --split train --count 20 --length 5 --seed 3 --out " + p("train.rsmd")).code == 0);
  REQUIRE(rsm_run("generate --env shapes --split test-ood --count 6 --length 5 --out " + p("ood.rsmd")).code == 0);
  REQUIRE(rsm_run("generate --env balls --split train --count 2 --length 3 --out " + p("balls.rsmd")).code == 0);

  auto train = rsm_run("train --train " + p("train.rsmd") + " --out " + p("run") + " --seed 5 --set epochs=2 " + kTiny);
  INFO(train.output);
  REQUIRE(train.code == 0);
  CHECK(fs::exists(p("run/world.ckpt")));
  std::ifstream metrics(p("run/metrics.ndjson"));
  std::string line;
  int lines = 0;
  while (std::getline(metrics, line)) ++lines;
  CHECK(lines == 2);

  auto ev = rsm_run("eval --world " + p("run/world.ckpt") + " --data " + p("ood.rsmd") + " --horizons 1,5 --out " +
                    p("run"));
  INFO(ev.output);
  REQUIRE(ev.code == 0);
  const fs::path report = p("run/eval_shapes_test-ood_full_s5.json");
  REQUIRE(fs::exists(report));
  std::ifstream rin(report);
  std::stringstream rs;
  rs << rin.rdbuf();
  auto parsed = rsm::parse_report_json(rs.str());
  CHECK(parsed.horizons == std::vector<int>{1, 5});
  CHECK(parsed.episodes == 6);

  CHECK(rsm_run("eval --world " + p("run/world.ckpt") + " --data " + p("balls.rsmd")).code == 2);
  CHECK(rsm_run("eval --world " + p("run/world.ckpt") + " --data " + p("ood.rsmd") + " --horizons 9").code == 2);

  auto dec = rsm_run("train-decoder --world " + p("run/world.ckpt") + " --train " + p("train.rsmd") + " --out " +
                     p("run") + " --set decoder_epochs=1 " + kTiny);
  INFO(dec.output);
  REQUIRE(dec.code == 0);
  auto rec = rsm_run("reconstruct --world " + p("run/world.ckpt") + " --decoder " + p("run/decoder.ckpt") + " --data " +
                     p("ood.rsmd") + " --horizons 1 --out " + p("png"));
  INFO(rec.output);
  CHECK(rec.code == 0);
  CHECK(fs::exists(p("png/pred_h1.png")));

  auto rep = rsm_run("report " + report.string());
  CHECK(rep.code == 0);
  CHECK(rep.output.find("shapes") != std::string::npos);

  std::ofstream(p("corrupt.ckpt")) << "RSMC garbage";
  CHECK(rsm_run("eval --world " + p("corrupt.ckpt") + " --data " + p("ood.rsmd")).code == 2);
}
