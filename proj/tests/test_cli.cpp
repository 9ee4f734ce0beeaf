// Runs the command-line binary end to end on small generated inputs.
#include "testing.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "lkcfu/image.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("lkcf_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d / "a");
    fs::create_directories(d / "b");
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    for (const char* name : {"p1", "p2"}) {
      lkcf::Image a(250, 250), b(250, 250, 3);
      for (auto& v : a.data) v = u(rng);
      for (auto& v : b.data) v = u(rng);
      lkcf::write_png(a, (d / "a" / (std::string(name) + ".png")).string());
      lkcf::write_png(b, (d / "b" / (std::string(name) + ".png")).string());
    }
    std::atexit([] { fs::remove_all(fs::temp_directory_path() / ("lkcf_cli_" + std::to_string(::getpid()))); });
    return d;
  }();
  return dir;
}

struct Run {
  int exit = -1;
  std::string err;
};

Run cli(const std::string& args) {
  const auto err_path = workdir() / "stderr.txt";
  const std::string cmd = "cd '" + workdir().string() + "' && '" LKCF_CLI "' " + args + " 2> '" + err_path.string() + "' > /dev/null";
  const int status = std::system(cmd.c_str());
  Run r;
  r.exit = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err_path);
  std::getline(in, r.err);
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::string kTrain =
    "train --synthetic 3 --synthetic-size 64 --desk-scale --max-steps 2 --batch 2 --crop 48 --no-meta";

}  // namespace

TEST_CASE("train, fuse and eval") {
  REQUIRE(cli(kTrain + " --out m.ckpt --log log.jsonl").exit == 0);
  REQUIRE(cli(kTrain + " --out m2.ckpt --log log2.jsonl").exit == 0);
  CHECK(slurp(workdir() / "m.ckpt") == slurp(workdir() / "m2.ckpt"));
  CHECK(slurp(workdir() / "log.jsonl") == slurp(workdir() / "log2.jsonl"));

  REQUIRE(cli("fuse --checkpoint m.ckpt --src-a a --src-b b --out fused").exit == 0);
  const auto fused = lkcf::read_image((workdir() / "fused" / "p1.png").string());
  CHECK(fused.height == 250);
  CHECK(fused.width == 250);
  CHECK(fused.channels == 3);

  REQUIRE(cli("fuse --checkpoint m.ckpt --src-a a --src-b b --out fused2").exit == 0);
  CHECK(slurp(workdir() / "fused" / "p2.png") == slurp(workdir() / "fused2" / "p2.png"));

  REQUIRE(cli("eval --fused fused --src-a a --src-b b --out r.csv --json r.json --no-meta --dataset demo").exit == 0);
  REQUIRE(cli("eval --fused fused2 --src-a a --src-b b --out r2.csv --no-meta --dataset demo").exit == 0);
  const auto csv = slurp(workdir() / "r.csv");
  CHECK(csv == slurp(workdir() / "r2.csv"));
  CHECK(csv.find("image,SD,AG,SF,SCD,VIFF,SSIM\np1,") != std::string::npos);
  CHECK(csv.find("\nmean,") != std::string::npos);
  CHECK(slurp(workdir() / "r.json").find("\"columns\"") != std::string::npos);
}

TEST_CASE("error exit codes") {
  REQUIRE(cli(kTrain + " --out e.ckpt").exit == 0);

  auto r = cli("fuse --checkpoint e.ckpt --src-a a --src-b b --out f --row VI --desk-scale");
  CHECK(r.exit == 4);
  CHECK(r.err.rfind("error: code=fingerprint_mismatch exit=4 message=\"", 0) == 0);
  CHECK(r.err.find("use_mpafm") != std::string::npos);

  r = cli("fuse --checkpoint missing.ckpt --src-a a --src-b b --out f");
  CHECK(r.exit == 3);
  CHECK(r.err.rfind("error: code=io exit=3", 0) == 0);

  std::ofstream(workdir() / "junk.ckpt") << "junk";
  CHECK(cli("fuse --checkpoint junk.ckpt --src-a a --src-b b --out f").exit == 7);

  r = cli("train --no-such-flag --out x.ckpt");
  CHECK(r.exit == 2);
  CHECK(r.err.rfind("error: code=usage exit=2", 0) == 0);
  CHECK(cli("frobnicate").exit == 2);
  CHECK(cli("train --synthetic 2 --synthetic-size 64 --crop 128 --max-steps 1 --out x.ckpt").exit == 5);
  CHECK(cli("eval --fused nowhere --src-a a --src-b b --out x.csv").exit == 3);
}

TEST_CASE("ablate, analyses and bench") {
  REQUIRE(cli("ablate --rows I,Ours --desk-scale --synthetic 2 --synthetic-size 64 --eval-synthetic 2 "
              "--eval-synthetic-size 48 --eval-synthetic-seed 9 --max-steps 1 --batch 2 --crop 48 --out abl.csv")
              .exit == 0);
  const auto abl = slurp(workdir() / "abl.csv");
  CHECK(abl.rfind("row,config,SD,AG,SF,SCD,VIFF,SSIM", 0) == 0);
  CHECK(abl.find("\nI,") != std::string::npos);
  CHECK(abl.find("\nOurs,") != std::string::npos);

  REQUIRE(cli("analyze-hist --image a/p1.png --bins 64 --out h.csv --plot h.png").exit == 0);
  CHECK(fs::exists(workdir() / "h.png"));
  CHECK(slurp(workdir() / "h.csv").rfind("# sd=", 0) == 0);

  REQUIRE(cli("analyze-consistency --desk-scale --src-a a --src-b b --patch 25 --out cons").exit == 0);
  CHECK(slurp(workdir() / "cons" / "p1.txt").rfind("# layer=init_block patch=25 rows=10 cols=10\n", 0) == 0);

  REQUIRE(cli("bench --desk-scale --resolutions 64x48,48x48 --warmup 1 --reps 2 --out t.json").exit == 0);
  CHECK(slurp(workdir() / "t.json").find("\"resolution\": \"64x48\"") != std::string::npos);
  CHECK(cli("bench --desk-scale --resolutions 64by48 --out t.json").exit == 2);
}
