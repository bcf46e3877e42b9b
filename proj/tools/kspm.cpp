// kspm: simulate, verify, bench and analyze the Kadanoff sand pile model.
//
// Exit codes: 0 ok, 1 a check failed, 2 bad usage, 3 I/O error or corrupt input.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kspm/kspm.hpp"

namespace {

using namespace kspm;

constexpr int kOk = 0, kCheckFailed = 1, kUsage = 2, kIo = 3;

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimulateArgs {
  Value grains = 0;
  Value d = 3;
  std::string out = "-";
  bool dense = false;
  Value snapshot_every = 0;
  std::string snapshot;
  std::string resume_from;
  std::string fixed_out;
  std::string shot_out;
  std::uint64_t seed = 1;
};

// Keeps the first `k` records of an existing trace file; anything after them
// belongs to a run that did not reach its next snapshot.
void truncate_trace(const std::string& path, Value k) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("resume: cannot read trace " + path);
  std::string kept, line;
  Value n = 0;
  while (n < k && std::getline(in, line)) {
    if (parse_trace_line(line).k != n + 1) throw corrupt_data("resume: trace out of sequence at line " + std::to_string(n + 1));
    kept += line;
    kept += '\n';
    ++n;
  }
  if (n < k) throw corrupt_data("resume: trace has " + std::to_string(n) + " records, snapshot expects " + std::to_string(k));
  in.close();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!(out << kept)) throw io_error("resume: cannot rewrite trace " + path);
}

template <class Fn>
void write_table(const std::string& path, Fn&& fn) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write " + path);
  fn(out);
  if (!out.flush()) throw io_error("cannot write " + path);
}

int cmd_simulate(const SimulateArgs& a) {
  if (a.grains < 0 || a.grains > kMaxGrains) throw usage_error("--grains must be in [0, 2^40]");
  if (a.snapshot_every < 0) throw usage_error("--snapshot-every must be non-negative");
  if (a.snapshot_every > 0 && a.snapshot.empty()) throw usage_error("--snapshot-every needs --snapshot");
  Parameters params(a.d);

  std::unique_ptr<Process> proc;
  if (!a.resume_from.empty()) {
    Snapshot snap = read_snapshot_file(a.resume_from);
    if (snap.params != params) throw usage_error("snapshot has D=" + std::to_string(snap.params.d));
    if (snap.k > a.grains) throw usage_error("snapshot is past --grains");
    try {
      proc = std::make_unique<Process>(snap.fixed_point, snap.shot, snap.k);
    } catch (const std::invalid_argument& e) {
      throw corrupt_data(std::string("snapshot state: ") + e.what());
    }
    if (a.out != "-") truncate_trace(a.out, snap.k);
  } else {
    proc = std::make_unique<Process>(params);
  }

  std::ofstream file;
  std::ostream* trace = &std::cout;
  if (a.out != "-") {
    auto mode = std::ios::binary | (a.resume_from.empty() ? std::ios::trunc : std::ios::app);
    file.open(a.out, mode);
    if (!file) throw io_error("cannot write " + a.out);
    trace = &file;
  }

  auto snapshot = [&] {
    if (!trace->flush()) throw io_error("trace write failed");
    write_snapshot_file(a.snapshot, Snapshot{Snapshot::kFormatVersion, params, proc->k(),
                                             proc->fixed_point().trimmed(), proc->shot(), a.seed});
  };

  while (proc->k() < a.grains) {
    Avalanche av = proc->step();
    *trace << serialize_trace_line(make_trace_line(av, proc->fixed_point()), a.dense) << '\n';
    if (a.snapshot_every > 0 && proc->k() % a.snapshot_every == 0) snapshot();
  }
  if (!trace->flush()) throw io_error("trace write failed");
  if (!a.snapshot.empty()) snapshot();

  write_table(a.fixed_out, [&](std::ostream& os) { write_fixed_point_table(os, proc->fixed_point()); });
  write_table(a.shot_out, [&](std::ostream& os) { write_shot_table(os, proc->shot()); });
  return kOk;
}

struct VerifyArgs {
  std::string suite;
  VerifyOptions opts;
  Value d = 3;
};

int cmd_verify(VerifyArgs a) {
  a.opts.params = Parameters(a.d);
  if (a.opts.grains < 0 || a.opts.grains > kMaxGrains) throw usage_error("--grains must be in [0, 2^40]");
  if (a.suite != "all" && std::find(suite_names().begin(), suite_names().end(), a.suite) == suite_names().end())
    throw usage_error("unknown suite: " + a.suite);
  bool all_ok = true;
  for (const SuiteResult& r : run_suites(a.suite, a.opts)) {
    std::cout << r.name << ": " << (r.checks - r.failures) << "/" << r.checks << " passed, " << r.failures
              << " failed -> " << (r.ok() ? "PASS" : "FAIL") << '\n';
    for (const auto& n : r.notes) std::cout << "  " << n << '\n';
    for (const auto& f : r.first_failures) std::cout << "  failed: " << f << '\n';
    all_ok = all_ok && r.ok();
  }
  return all_ok ? kOk : kCheckFailed;
}

struct BenchArgs {
  Value grains = 100000;
  Value d = 3;
  std::string mode = "both";
};

// Runs both engines side by side and compares every avalanche.
bool bench_equivalent(Value grains, Parameters params, std::string& why, bool& cost_ok) {
  Process naive(params);
  PseudoLocalProcess fast(params);
  cost_ok = true;
  for (Value k = 1; k <= grains; ++k) {
    Avalanche a = naive.step();
    std::uint64_t reads = fast.counters().prediction_reads, predicted = fast.counters().predicted_firings;
    PseudoLocalStep b = fast.step();
    // Chain cost: at most D-1 columns read per peak, plus the final failed scan.
    std::uint64_t dr = fast.counters().prediction_reads - reads, dp = fast.counters().predicted_firings - predicted;
    if (dr > static_cast<std::uint64_t>(params.d - 1) * (dp + 1)) cost_ok = false;
    if (a.strategy != b.avalanche.strategy) {
      why = "avalanche " + std::to_string(k) + " differs";
      return false;
    }
  }
  if (!(naive.fixed_point() == fast.fixed_point())) {
    why = "final fixed points differ";
    return false;
  }
  return true;
}

int cmd_bench(const BenchArgs& a) {
  if (a.grains < 0 || a.grains > kMaxGrains) throw usage_error("--grains must be in [0, 2^40]");
  if (a.mode != "naive" && a.mode != "pseudolocal" && a.mode != "both") throw usage_error("--mode must be naive, pseudolocal or both");
  Parameters params(a.d);
  bool run_naive = a.mode != "pseudolocal", run_fast = a.mode != "naive";

  bool cost_ok = true;
  if (run_fast) {
    std::string why;
    if (!bench_equivalent(a.grains, params, why, cost_ok)) {
      std::cerr << "pseudolocal process disagrees with replay: " << why << '\n';
      return kCheckFailed;
    }
    std::cerr << "equivalence: " << a.grains << " avalanches identical to replay\n";
  }

  using clock = std::chrono::steady_clock;
  std::cout << "mode\td\tgrains\tseconds\tfirings\treplayed\tpredicted\tsimulated_above_interval\t"
               "prediction_reads\thandoffs\tfallbacks\n";
  int rc = kOk;
  if (run_naive) {
    auto t0 = clock::now();
    Process proc(params);
    std::uint64_t firings = 0;
    for (Value k = 1; k <= a.grains; ++k) firings += proc.step().strategy.size();
    double secs = std::chrono::duration<double>(clock::now() - t0).count();
    std::cout << "naive\t" << a.d << '\t' << a.grains << '\t' << secs << '\t' << firings << '\t' << firings
              << "\t0\t0\t0\t0\t0\n";
  }
  if (run_fast) {
    auto t0 = clock::now();
    PseudoLocalProcess proc(params);
    std::uint64_t firings = 0;
    for (Value k = 1; k <= a.grains; ++k) firings += proc.step().avalanche.strategy.size();
    double secs = std::chrono::duration<double>(clock::now() - t0).count();
    const auto& c = proc.counters();
    std::cout << "pseudolocal\t" << a.d << '\t' << a.grains << '\t' << secs << '\t' << firings << '\t'
              << c.replayed_firings << '\t' << c.predicted_firings << '\t' << c.simulated_above_interval << '\t'
              << c.prediction_reads << '\t' << c.handoffs << '\t' << c.fallbacks << '\n';
    if (c.fallbacks > 0)
      std::cerr << "note: " << c.fallbacks << " nonempty avalanches never met the handoff condition and were replayed in full\n";
    if (c.simulated_above_interval != 0) {
      std::cerr << "pseudolocal process simulated " << c.simulated_above_interval << " firings above the interval\n";
      rc = kCheckFailed;
    }
    if (!cost_ok) {
      std::cerr << "suffix prediction read more than D-1 columns per predicted firing\n";
      rc = kCheckFailed;
    }
  }
  return rc;
}

struct AnalyzeArgs {
  Value j_max = 6;
  Value cap = 2000000;
  Value grains = 100000;
  Value fit_limit = 1000;
};

int cmd_analyze(const AnalyzeArgs& a) {
  if (a.j_max < 1 || a.cap < 0 || a.grains < 0 || a.grains > kMaxGrains || a.fit_limit < 2)
    throw usage_error("bad analyze arguments");
  auto sweep = prefix_onsets(a.j_max, a.cap);
  GrowthTracker tracker(a.j_max, a.fit_limit);
  Process proc(Parameters{3});
  for (Value k = 1; k <= a.grains; ++k) {
    Avalanche av = proc.step();
    tracker.observe(av, proc.fixed_point());
  }
  tracker.supply_n_min(sweep);
  GrowthReport rep = tracker.finish();

  std::cout << "j\tN_min\tratio\n";
  for (Value j = 1; j <= a.j_max; ++j) {
    const auto& n = rep.n_min[static_cast<std::size_t>(j - 1)];
    std::cout << j << '\t' << (n ? std::to_string(*n) : "none<=" + std::to_string(a.cap)) << '\t';
    if (j >= 2 && rep.ratios[static_cast<std::size_t>(j - 2)]) std::cout << *rep.ratios[static_cast<std::size_t>(j - 2)];
    std::cout << '\n';
  }
  std::cout << "# N_min growth rate per j: " << rep.growth_rate << '\n';
  std::cout << "# L_max(N) <= " << rep.c1 << " log4(N) + " << rep.c2 << "  (fit on N <= " << rep.fit_limit << ")\n";
  std::cout << "N\tL_max\te\te_bound\n";
  for (const auto& s : rep.samples)
    std::cout << s.n << '\t' << s.onset_max << '\t' << s.extent << '\t' << s.extent_bound << '\n';
  for (const auto& v : rep.violations) std::cout << "# violation: " << v << '\n';
  return rep.ok() ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kadanoff sand pile model KSPM(D)"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run the single-grain process and write its trace");
  simulate->add_option("--grains", sim.grains, "Number of grains N")->required();
  simulate->add_option("--d", sim.d, "Model parameter D (>= 2)");
  simulate->add_option("--out", sim.out, "Trace file (JSON lines), - for stdout");
  simulate->add_flag("--dense", sim.dense, "Write dense fixed-point prefixes");
  simulate->add_option("--snapshot-every", sim.snapshot_every, "Write a snapshot every K grains");
  simulate->add_option("--snapshot", sim.snapshot, "Snapshot file");
  simulate->add_option("--resume-from", sim.resume_from, "Continue from this snapshot");
  simulate->add_option("--fixed-out", sim.fixed_out, "Final fixed point table (TSV)");
  simulate->add_option("--shot-out", sim.shot_out, "Final shot vector table (TSV)");
  simulate->add_option("--seed", sim.seed, "Seed recorded in snapshots");

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify", "Run an invariant suite");
  verify->add_option("--suite", ver.suite, "single-fire, diamond, convergence, peaks, shot-vector, recurrence, projection, growth or all")->required();
  verify->add_option("--grains", ver.opts.grains, "Grains for process-based suites");
  verify->add_option("--d", ver.d, "Model parameter D");
  verify->add_option("--seeds", ver.opts.seeds, "Random stabilizations per configuration");
  verify->add_option("--seed", ver.opts.seed, "Seed for every random choice");
  verify->add_option("--configs", ver.opts.configs, "Random configurations");
  verify->add_option("--j-max", ver.opts.j_max, "Largest prefix length tracked by the growth suite");

  BenchArgs bench;
  auto* benchc = app.add_subcommand("bench", "Time replay against pseudo-local prediction");
  benchc->add_option("--grains", bench.grains, "Number of grains");
  benchc->add_option("--d", bench.d, "Model parameter D");
  benchc->add_option("--mode", bench.mode, "naive, pseudolocal or both");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "N_min sweep and growth laws (D=3)");
  analyze->add_option("--j-max", an.j_max, "Largest prefix length");
  analyze->add_option("--cap", an.cap, "Grain cap for the N_min sweep");
  analyze->add_option("--grains", an.grains, "Grains for L_max and e(N)");
  analyze->add_option("--fit-limit", an.fit_limit, "Fit the L_max bound on N <= this");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (verify->parsed()) return cmd_verify(ver);
    if (benchc->parsed()) return cmd_bench(bench);
    if (analyze->parsed()) return cmd_analyze(an);
  } catch (const usage_error& e) {
    std::cerr << "kspm: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "kspm: " << e.what() << '\n';
    return kUsage;
  } catch (const corrupt_data& e) {
    std::cerr << "kspm: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "kspm: " << e.what() << '\n';
    return kIo;
  }
  return kUsage;
}
