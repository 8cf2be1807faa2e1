#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct Run {
  int code;
  std::string out;
};

Run symtb(const std::string& args) {
  const std::string cmd = std::string(SYMTB_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("symtb_test_" + name)).string();
}

// Drops the "timing" object, the only field allowed to differ between runs.
std::string without_timing(const std::string& json) {
  std::istringstream in(json);
  std::string line, out;
  bool skip = false;
  while (std::getline(in, line)) {
    if (line.find("\"timing\"") != std::string::npos) skip = true;
    if (!skip) out += line + "\n";
    if (skip && line.find('}') != std::string::npos) skip = false;
  }
  return out;
}

}  // namespace

TEST_CASE("partition gen and check round trip", "[cli]") {
  for (const char* kind : {"affine", "projective"})
    for (int c : {2, 3, 4, 5}) {
      const auto path = tmp_path(std::string(kind) + std::to_string(c) + ".tbp");
      const auto gen = symtb(std::string("partition gen --kind ") + kind + " --c " + std::to_string(c) +
                             " --diagonals --out " + path);
      CHECK(gen.code == 0);
      const auto chk = symtb("partition check --file " + path);
      CHECK(chk.code == 0);
      CHECK(chk.out.find("with diagonals") != std::string::npos);
      std::filesystem::remove(path);
    }
  const auto fano = symtb("partition gen --kind projective --c 2");
  CHECK(fano.code == 0);
  CHECK(fano.out.rfind("steiner 7 3\n", 0) == 0);
  const auto js = symtb("partition gen --kind affine --c 4 --diagonals --format json");
  CHECK(js.out.find("\"K\": 20") != std::string::npos);
}

TEST_CASE("partition check reports a witness", "[cli]") {
  const auto path = tmp_path("bad.tbp");
  std::ofstream(path) << "steiner 4 2\n0 1\n0 2\n0 3\n1 2\n1 3\n";
  const auto r = symtb("partition check --file " + path);
  CHECK(r.code == 1);
  CHECK(r.out.find("{2,3}") != std::string::npos);
  std::filesystem::remove(path);
  CHECK(symtb("partition check --file " + std::string(TEST_DATA_DIR) + "/steiner_15_3_2.tbp").code == 0);
}

TEST_CASE("usage errors exit with 2", "[cli]") {
  CHECK(symtb("").code == 2);
  CHECK(symtb("frobnicate").code == 2);
  CHECK(symtb("bounds --kernel gemm --n1 4 --n2 4").code == 2);
  CHECK(symtb("partition gen --kind affine").code == 2);
  CHECK(symtb("simulate par --kernel syrk --n1 4 --n2 4").code == 2);
  CHECK(symtb("simulate seq --kernel syrk --n1 4,5 --n2 4 --M 20").code == 2);
  CHECK(symtb("--help").code == 0);
}

TEST_CASE("engine failures exit with 1", "[cli]") {
  CHECK(symtb("partition gen --kind affine --c 6").code == 1);
  CHECK(symtb("simulate seq --kernel syrk --n1 50 --n2 4 --M 3").code == 1);
  CHECK(symtb("simulate par --kernel syrk --n1 9 --n2 4 --p1 10 --algo 2d").code == 1);
}

TEST_CASE("bounds output", "[cli]") {
  const auto r = symtb("bounds --kernel syrk --n1 16 --n2 16 --M 32");
  CHECK(r.code == 0);
  CHECK(r.out.find("\"seq_lb\": 41") != std::string::npos);
  const auto q = symtb("bounds --kernel syrk --n1 16 --n2 16 --P 64");
  CHECK(q.out.find("\"case\": 3") != std::string::npos);
  CHECK(q.out.find("\"W\": 22.989") != std::string::npos);
  const auto d = symtb("bounds --kernel symm --n1 16 --n2 16");
  CHECK(d.out.find("seq_lb") == std::string::npos);
  CHECK(d.out.find("\"P\": 1.0") != std::string::npos);
}

TEST_CASE("simulate reports", "[cli]") {
  const auto s = symtb("simulate seq --kernel syrk --n1 4 --n2 2 --M 8 --seed 1");
  CHECK(s.code == 0);
  CHECK(s.out.find("\"reads\": 34") != std::string::npos);
  CHECK(s.out.find("\"writes\": 10") != std::string::npos);
  CHECK(s.out.find("\"correct\": true") != std::string::npos);

  const auto p = symtb("simulate par --kernel symm --n1 9 --n2 8 --P 12 --algo 2d");
  CHECK(p.code == 0);
  // 2 * (9*8/3) * (11/12) = 44
  CHECK(p.out.find("\"max_words_received\": 44") != std::string::npos);

  const auto lim = symtb("simulate par --kernel syrk --n1 36 --n2 16 --P 24 --algo 3d-lim --x 2");
  CHECK(lim.code == 0);
  CHECK(lim.out.find("\"memory_claim\"") != std::string::npos);
}

TEST_CASE("reports are reproducible", "[cli]") {
  const std::string args = "simulate par --kernel syr2k --n1 20 --n2 9 --P 12 --algo 3d --seed 7";
  const auto a = symtb(args), b = symtb(args);
  CHECK(a.code == 0);
  CHECK(without_timing(a.out) == without_timing(b.out));
  CHECK(a.out.find("\"timing\"") != std::string::npos);
}

TEST_CASE("sweeps append csv rows", "[cli]") {
  const auto csv = tmp_path("sweep.csv");
  std::filesystem::remove(csv);
  const auto r = symtb("simulate par --kernel syrk --n1 12,18 --n2 6 --P 6,12 --sweep --csv " + csv);
  CHECK(r.code == 0);
  std::ifstream in(csv);
  std::string header, line;
  std::getline(in, header);
  CHECK(header.rfind("engine,kernel,m,n1,n2,M,P,algo,p1,p2,c,b,seed,reads,writes,max_words_received", 0) == 0);
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
  std::filesystem::remove(csv);
}

TEST_CASE("operand dump and load", "[cli]") {
  const auto bin = tmp_path("ops.bin");
  const auto a = symtb("simulate seq --kernel symm --n1 10 --n2 3 --M 30 --seed 4 --dump " + bin);
  const auto b = symtb("simulate seq --kernel symm --M 30 --seed 4 --load " + bin);
  CHECK(a.code == 0);
  CHECK(b.code == 0);
  CHECK(b.out.find("\"n1\": 10") != std::string::npos);
  CHECK(symtb("simulate seq --kernel symm --M 30 --load " + std::string(TEST_DATA_DIR) + "/affine_c4.tbp").code == 1);
  std::filesystem::remove(bin);
}

TEST_CASE("grid output", "[cli]") {
  CHECK(symtb("grid --kernel syrk --n1 100 --n2 10000 --P 10").out.find("\"algo\": \"1d\"") != std::string::npos);
  const auto two = symtb("grid --kernel symm --n1 1000 --n2 10 --P 12");
  CHECK(two.out.find("\"algo\": \"2d\"") != std::string::npos);
  CHECK(two.out.find("\"c\": 3") != std::string::npos);
  const auto three = symtb("grid --kernel syrk --n1 16 --n2 16 --P 60 --x 4");
  CHECK(three.out.find("\"algo\": \"3d\"") != std::string::npos);
  CHECK(three.out.find("\"p2\": 5") != std::string::npos);
  CHECK(three.out.find("\"limited\"") != std::string::npos);
}
