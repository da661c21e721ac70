// lazydict: workload generation, oracle verification and comparison-count
// measurement for the selectable-heap / lazy-search-tree library.
//
// Exit codes: 0 ok, 1 answer mismatch or validation failure, 2 usage error.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "lazydict/calibration.hpp"
#include "lazydict/engine.hpp"
#include "lazydict/workload.hpp"

namespace {

std::uint64_t seed_or_env(std::uint64_t seed, bool seed_set) {
  if (seed_set) return seed;
  if (const char* env = std::getenv("LAZYDICT_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 1;
}

lazydict::Workload load_workload(const std::string& path) {
  if (path == "-") return lazydict::parse_workload(std::cin);
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("workload", "cannot open " + path);
  return lazydict::parse_workload(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"selectable heaps and lazy search tree bench harness"};
  app.require_subcommand(1);

  // gen
  std::string kind = "mixed-dict";
  std::size_t n = 1000, q = 100, k = 16;
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string out_path;
  auto* gen = app.add_subcommand("gen", "generate a workload file");
  gen->add_option("--kind", kind, "uniform-pq | range-cluster | mixed-dict | multi-select");
  gen->add_option("--n", n, "element scale");
  gen->add_option("--q", q, "query scale");
  gen->add_option("--k", k, "batch size for selection workloads");
  gen->add_option("--seed", seed)->each([&](const std::string&) { seed_set = true; });
  gen->add_option("--out", out_path, "output file (default stdout)");

  // run
  std::string workload_path;
  std::string engine_name = "lst";
  auto* run = app.add_subcommand("run", "run a workload and emit per-op CSV");
  run->add_option("--workload", workload_path, "workload file ('-' for stdin)")->required();
  run->add_option("--engine", engine_name, "lst | fibheap | oracle");
  run->add_option("--out", out_path, "CSV output (default stdout)");

  // verify
  auto* verify = app.add_subcommand("verify", "diff lst against the oracle engine");
  verify->add_option("--workload", workload_path, "workload file ('-' for stdin)")->required();

  // calibrate
  std::string baseline_path = "baselines/calibration.json";
  auto* calibrate =
      app.add_subcommand("calibrate", "measure bound constants and write the baseline");
  calibrate->add_option("--out", baseline_path, "baseline JSON path");
  calibrate->add_option("--seed", seed)->each([&](const std::string&) { seed_set = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      auto w = lazydict::generate_workload(kind, n, q, k, seed_or_env(seed, seed_set));
      if (out_path.empty()) {
        lazydict::write_workload(w, std::cout);
      } else {
        std::ofstream out(out_path);
        lazydict::write_workload(w, out);
      }
      return 0;
    }
    if (run->parsed()) {
      auto w = load_workload(workload_path);
      auto engine = lazydict::make_engine(engine_name);
      if (out_path.empty()) {
        lazydict::run_workload(w, *engine, &std::cout);
      } else {
        std::ofstream out(out_path);
        lazydict::run_workload(w, *engine, &out);
      }
      return 0;
    }
    if (verify->parsed()) {
      auto w = load_workload(workload_path);
      int rc = lazydict::verify_workload(w, std::cerr);
      if (rc == 0) std::cerr << "verify: ok (" << w.ops.size() << " ops)\n";
      return rc;
    }
    if (calibrate->parsed()) {
      auto c = lazydict::measure_calibration(seed_or_env(seed, seed_set));
      std::ofstream out(baseline_path);
      if (!out) {
        std::cerr << "cannot write " << baseline_path << "\n";
        return 2;
      }
      lazydict::write_calibration(c, out);
      lazydict::write_calibration(c, std::cerr);
      return 0;
    }
  } catch (const lazydict::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
