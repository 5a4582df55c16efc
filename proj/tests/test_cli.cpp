#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mepath/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

class Workdir {
 public:
  Workdir() : dir_(fs::temp_directory_path() / ("mepath_cli_" + std::to_string(::getpid()))) {
    fs::create_directories(dir_);
  }
  ~Workdir() { fs::remove_all(dir_); }

  std::string operator/(const std::string& name) const { return (dir_ / name).string(); }

  Run run(const std::string& args) const {
    const std::string out = *this / "stdout.txt";
    const std::string err = *this / "stderr.txt";
    const std::string cmd =
        std::string(MEPATH_CLI) + " " + args + " >" + out + " 2>" + err;
    Run r;
    const int raw = std::system(cmd.c_str());
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = mepath::io::read_file(out);
    r.err = mepath::io::read_file(err);
    return r;
  }

 private:
  fs::path dir_;
};

// Small simulated study shared by the CLI tests.
const Workdir& study() {
  static const Workdir w;
  static const bool ready = [] {
    const Run r = w.run("simulate --users 12 --n-min 20 --n-max 40 --seed 3 --out " + w / "sim");
    REQUIRE(r.status == 0);
    return true;
  }();
  (void)ready;
  return w;
}

std::string data_flags(const Workdir& w) {
  return "--comparisons " + w / "sim/comparisons.csv" + " --features " + w / "sim/features.csv";
}

}  // namespace

TEST_CASE("simulate writes the study files") {
  const Workdir& w = study();
  for (const char* f : {"comparisons.csv", "features.csv", "truth.json", "ids.csv"}) {
    CHECK(fs::exists(w / (std::string("sim/") + f)));
  }
}

TEST_CASE("fit prints its resolved config and writes a path") {
  const Workdir& w = study();
  const Run r = w.run("fit " + data_flags(w) + " --kappa 5 --iters 50 --out " + w / "p.jsonl");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("alpha") != std::string::npos);
  CHECK(r.out.find("spectral-norm") != std::string::npos);
  CHECK(fs::exists(w / "p.jsonl"));

  // Rerun is byte-identical; so is a multi-threaded run.
  CHECK(w.run("fit " + data_flags(w) + " --kappa 5 --iters 50 --out " + w / "q.jsonl").status == 0);
  CHECK(mepath::io::read_file(w / "p.jsonl") == mepath::io::read_file(w / "q.jsonl"));
  CHECK(w.run("fit " + data_flags(w) + " --kappa 5 --iters 50 --threads 4 --out " +
              w / "r.jsonl")
            .status == 0);
  // Only the thread count in the recorded config differs.
  const std::string one = mepath::io::read_file(w / "p.jsonl");
  const std::string four = mepath::io::read_file(w / "r.jsonl");
  CHECK(one.substr(one.find('\n')) == four.substr(four.find('\n')));
}

TEST_CASE("exit codes") {
  const Workdir& w = study();
  CHECK(w.run("fit " + data_flags(w) + " --alpha 1000 --out " + w / "x.jsonl").status == 14);
  CHECK(w.run("fit --comparisons " + w / "missing.csv" + " --out " + w / "x.jsonl").status == 20);
  CHECK(w.run("fit --bogus").status == 2);
  const Run nosub = w.run("");
  CHECK(nosub.status == 2);

  // A path evaluated against different data.
  REQUIRE(w.run("fit " + data_flags(w) + " --iters 5 --out " + w / "h.jsonl").status == 0);
  std::ofstream(w / "other.csv") << "user,left,right,y\nu,i00,i01,1\n";
  const Run mismatch = w.run("evaluate --comparisons " + w / "other.csv" + " --features " +
                             w / "sim/features.csv" + " --path " + w / "h.jsonl");
  CHECK(mismatch.status == 23);
  CHECK(mismatch.err.find("HashMismatch") != std::string::npos);
}

TEST_CASE("evaluating the zero path gives one half") {
  const Workdir& w = study();
  REQUIRE(w.run("fit " + data_flags(w) + " --iters 0 --out " + w / "z.jsonl").status == 0);
  const Run r = w.run("evaluate " + data_flags(w) + " --path " + w / "z.jsonl");
  REQUIRE(r.status == 0);
  CHECK(r.out == "common,personalized\n0.5,0.5\n");
}

TEST_CASE("cv with a zero grid") {
  const Workdir& w = study();
  const Run r = w.run("cv " + data_flags(w) + " --folds 2 --t-grid 0 --iters 10 --out-report " +
                      w / "cv.csv" + " --out-state " + w / "s.json");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("t-cv = 0\n") != std::string::npos);
  CHECK(r.out.find("mean-error = 0.5\n") != std::string::npos);
  CHECK(fs::exists(w / "s.json"));
}

TEST_CASE("export kinds") {
  const Workdir& w = study();
  REQUIRE(w.run("fit " + data_flags(w) + " --kappa 2 --iters 300 --out " + w / "e.jsonl").status == 0);
  for (const char* kind : {"coefficients", "events", "deviation-ranking", "bias-report", "ranks"}) {
    const Run r = w.run("export-path " + data_flags(w) + " --path " + w / "e.jsonl" +
                        " --kind " + kind);
    CHECK(r.status == 0);
    CHECK(!r.out.empty());
  }
}

TEST_CASE("bench on one thread has unit speedup") {
  const Workdir& w = study();
  const Run r = w.run("bench " + data_flags(w) + " --iters 20 --repeats 2 --threads-list 1");
  REQUIRE(r.status == 0);
  std::istringstream in(r.out);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "M,mean_T,S");
  CHECK(row.substr(0, 2) == "1,");
  CHECK(row.substr(row.rfind(',') + 1) == "1");
}

TEST_CASE("config file supplies flags") {
  const Workdir& w = study();
  std::ofstream(w / "run.toml") << "[fit]\nkappa = 7\niters = 12\nloss = \"tm\"\n";
  const Run r =
      w.run("--config " + w / "run.toml" + " fit " + data_flags(w) + " --out " + w / "c.jsonl");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("kappa = 7") != std::string::npos);
  CHECK(r.out.find("iters = 12") != std::string::npos);
  CHECK(r.out.find("loss = \"tm\"") != std::string::npos);
}
