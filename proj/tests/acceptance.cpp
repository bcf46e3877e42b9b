// Acceptance run: one [PASS]/[FAIL] line per criterion, details indented below.
// Exit status is the number of failed criteria.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "kspm/kspm.hpp"

using namespace kspm;
namespace fs = std::filesystem;

namespace {

int failed = 0;

void report(int n, bool ok, const std::string& what, const std::vector<std::string>& details = {}) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << n << ' ' << what << '\n';
  for (const auto& d : details) std::cout << "    " << d << '\n';
  std::cout.flush();
  if (!ok) ++failed;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string secs(double s) {
  std::ostringstream os;
  os.precision(3);
  os << s << "s";
  return os.str();
}

constexpr Value kGrains = 20000;

// Criteria 1 and 3-6 share one pass over each D.
struct ProcessTallies {
  std::uint64_t avalanches = 0, double_fires = 0;
  std::uint64_t with_interval = 0, peak_mismatch = 0, suffix_mismatch = 0;
  std::uint64_t gap_violations = 0, equality_violations = 0;
  std::uint64_t residual_nonzero = 0, mass_mismatch = 0;
  double seconds = 0;
};

ProcessTallies process_pass() {
  ProcessTallies t;
  auto t0 = std::chrono::steady_clock::now();
  for (Value d : {3, 4, 5}) {
    Parameters p(d);
    VerifyOptions o;
    o.grains = kGrains;
    o.params = p;
    SuiteResult single = suite_single_fire(o);
    t.double_fires += single.failures;
    Process proc(p);
    for (Value k = 1; k <= kGrains; ++k) {
      Configuration prev = proc.fixed_point();
      Avalanche av = proc.step();
      ++t.avalanches;
      StructureReport rep = verify_avalanche_structure(av, prev, proc.fixed_point(), p);
      if (!rep.local_density_ok) ++t.gap_violations;
      if (av.interval_l) {
        ++t.with_interval;
        if (!rep.peaks_match) ++t.peak_mismatch;
        if (!rep.suffix_match) ++t.suffix_mismatch;
        if (!rep.equality_range_ok) ++t.equality_violations;
      }
      auto res = shot_identity_residual(proc.fixed_point(), proc.shot(), k, p);
      if (std::ranges::any_of(res, [](Value v) { return v != 0; })) ++t.residual_nonzero;
      if (weighted_mass(proc.fixed_point()) != k) ++t.mass_mismatch;
    }
  }
  t.seconds = seconds_since(t0);
  return t;
}

void criterion_2() {
  auto t0 = std::chrono::steady_clock::now();
  std::uint64_t checks = 0, fails = 0;
  std::vector<std::string> details;
  for (Value d : {3, 4, 5}) {
    VerifyOptions o;
    o.params = Parameters(d);
    o.configs = 500;
    o.seeds = 20;
    o.seed = 20240 + static_cast<std::uint64_t>(d);
    SuiteResult dia = suite_diamond(o), conv = suite_convergence(o);
    checks += dia.checks + conv.checks;
    fails += dia.failures + conv.failures;
    details.push_back("D=" + std::to_string(d) + ": " + std::to_string(dia.checks) + " fireable pairs, " +
                      std::to_string(conv.checks) + " stabilization comparisons, " +
                      std::to_string(dia.failures + conv.failures) + " failures");
  }
  double s = seconds_since(t0);
  details.push_back("runtime " + secs(s));
  report(2, fails == 0 && s < 60, "diamond closure and strong convergence (500 configs x 20 seeds per D)", details);
}

void criterion_7() {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> details;
  JordanData jd = jordan_data();

  // 1/2 (2x+1)(x-1)^2 = x^3 - 3/2 x^2 + 1/2
  Cubic expected{{Rational(1, 2), 0, Rational(-3, 2), 1}};
  bool poly_ok = jd.char_poly == expected;
  bool eig_ok = jd.eigenvalues.size() == 2 && jd.eigenvalues[0].value == Rational(-1, 2) &&
                jd.eigenvalues[1].value == Rational(1) && jd.eigenvalues[1].algebraic_multiplicity == 2 &&
                jd.eigenvalues[1].geometric_multiplicity == 1;
  details.push_back(std::string("det(xI - A) = 1/2 (2x+1)(x-1)^2: ") + (poly_ok ? "yes" : "no") +
                    "; eigenvalues {-1/2, 1 (double, one Jordan block)}: " + (eig_ok ? "yes" : "no"));

  auto onsets = prefix_onsets(3, 2000000);
  bool anchors_ok = onsets[0] == 2 && onsets[1] == 8;
  details.push_back("N_min(1) = " + std::to_string(onsets[0].value_or(-1)) + ", N_min(2) = " +
                    std::to_string(onsets[1].value_or(-1)) + ", N_min(3) = " + std::to_string(onsets[2].value_or(-1)));

  // Every trace N <= 2000 whose fixed point starts with (2,0)^j, j in {1,2,3}.
  std::uint64_t traces = 0, recurrence_bad = 0, contraction_bad = 0, corrected_bad = 0, literal_holds = 0, literal_checked = 0;
  std::string sample;
  Process proc(Parameters{3});
  for (Value n = 1; n <= 2000; ++n) {
    proc.step();
    const Configuration& fix = proc.fixed_point();
    Value len = std::min<Value>(prefix_20_length(fix), 3);
    if (len < 1) continue;
    ++traces;
    if (!verify_recurrence(build_u_vectors(proc.shot(), n, fix.size() + 1), fix).ok) ++recurrence_bad;
    for (Value j = 1; j <= len; ++j) {
      ProjectionLaw law = verify_projection_law(fix, proc.shot(), j);
      if (!law.double_step_ok || !law.contraction_ok) ++contraction_bad;
      if (!law.closed_form_ok || !law.scaling_ok || !law.positive_ok) ++corrected_bad;
      Rational pow4 = 1;
      for (Value i = 0; i < j; ++i) pow4 *= Rational(4);
      Rational literal = (Rational(n) + Rational(law.a0) + Rational(2, 27)) / Rational(9);
      ++literal_checked;
      if (literal == pow4 * law.x_j()) ++literal_holds;
      if (n == 8 && j == 2) {
        std::ostringstream os;
        os << "N=8: a_0=" << law.a0 << ", x_2=" << law.x_j() << ", 4^2 x_2=" << pow4 * law.x_j()
           << ", (N+a_0+2/27)/9=" << literal << ", (N+a_0+2/3)/9=" << law.closed_form;
        sample = os.str();
      }
    }
  }
  details.push_back(std::to_string(traces) + " traces with a (2,0)^j prefix: recurrence failures " +
                    std::to_string(recurrence_bad) + ", quarter-contraction failures " + std::to_string(contraction_bad));
  details.push_back("(N + a_0 + 2/3)/9 = 4^j x_j failures: " + std::to_string(corrected_bad) + " of " +
                    std::to_string(literal_checked));
  details.push_back("(N + a_0 + 2/27)/9 = 4^j x_j holds in " + std::to_string(literal_holds) + " of " +
                    std::to_string(literal_checked) + " (offset v = -2/27 e3 adds 2/27 after the division, i.e. 2/3 inside it)");
  details.push_back(sample);
  double s = seconds_since(t0);
  details.push_back("runtime " + secs(s));
  bool ok = poly_ok && eig_ok && anchors_ok && traces > 0 && recurrence_bad == 0 && contraction_bad == 0 &&
            corrected_bad == 0 && literal_holds == literal_checked && s < 60;
  report(7, ok, "D=3 exact algebra, recurrence, contraction and (N + a_0 + 2/27)/9 = 4^j x_j", details);
}

void criterion_8() {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> details;
  GrowthTracker tracker(5, 1000);
  Process proc(Parameters{3});
  for (Value k = 1; k <= 100000; ++k) {
    Avalanche av = proc.step();
    tracker.observe(av, proc.fixed_point());
  }
  tracker.supply_n_min(prefix_onsets(5, 2000000));
  GrowthReport rep = tracker.finish();

  std::ostringstream nm;
  nm << "N_min(j), j=1..5:";
  for (const auto& n : rep.n_min) nm << ' ' << (n ? std::to_string(*n) : "none");
  nm << "; ratios j=2..5:";
  for (const auto& r : rep.ratios) nm << ' ' << (r ? std::to_string(*r) : "-");
  details.push_back(nm.str());

  bool increasing = true, band = true, lmax_ok = true, extent_ok = true;
  for (const auto& v : rep.violations) {
    if (v.rfind("N_min not", 0) == 0) increasing = false;
    else if (v.rfind("N_min ratio", 0) == 0) band = false;
    else if (v.rfind("L_max", 0) == 0) lmax_ok = false;
    else extent_ok = false;
  }
  for (const auto& n : rep.n_min) increasing = increasing && n.has_value();
  details.push_back(std::string("strictly increasing: ") + (increasing ? "yes" : "no") +
                    "; ratios in [3.5, 4.5]: " + (band ? "yes" : "no"));
  std::ostringstream lm;
  lm << "L_max(N) <= " << rep.c1 << " log4(N) + " << rep.c2 << " fitted on N <= 1000, L_max(1e5) = "
     << rep.onset_max_at(100000) << ": " << (lmax_ok ? "holds" : "violated") << " for all N <= 1e5";
  details.push_back(lm.str());
  details.push_back(std::string("e(N) >= sqrt(2N/(D-1)) - 2 at every N <= 1e5: ") + (extent_ok ? "yes" : "no"));
  for (const auto& v : rep.violations) details.push_back("violation: " + v);
  double s = seconds_since(t0);
  details.push_back("runtime " + secs(s));
  report(8, increasing && band && lmax_ok && extent_ok && s < 600, "growth laws (N_min ratios, L_max bound, e(N) bound)", details);
}

void criterion_9() {
  std::vector<std::string> details;
  bool ok = true;
  for (Value d : {3, 4, 5}) {
    Parameters p(d);
    constexpr Value n = 100000;
    // Equivalence first.
    Process naive(p);
    PseudoLocalProcess fast(p);
    bool same = true, cost_ok = true;
    std::uint64_t worst_reads = 0, worst_suffix = 0;
    for (Value k = 1; k <= n && same; ++k) {
      Avalanche a = naive.step();
      auto before = fast.counters();
      PseudoLocalStep b = fast.step();
      std::uint64_t dr = fast.counters().prediction_reads - before.prediction_reads;
      std::uint64_t dp = fast.counters().predicted_firings - before.predicted_firings;
      if (dr > static_cast<std::uint64_t>(d - 1) * (dp + 1)) cost_ok = false;
      if (dr * (worst_suffix + 1) > worst_reads * (dp + 1)) worst_reads = dr, worst_suffix = dp;
      same = a.strategy == b.avalanche.strategy;
    }
    same = same && naive.fixed_point() == fast.fixed_point();
    const auto c = fast.counters();

    // Then timing.
    auto t0 = std::chrono::steady_clock::now();
    Process tn(p);
    for (Value k = 1; k <= n; ++k) tn.step();
    double naive_s = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    PseudoLocalProcess tf(p);
    for (Value k = 1; k <= n; ++k) tf.step();
    double fast_s = seconds_since(t0);

    std::ostringstream os;
    os << "D=" << d << ": equivalent " << (same ? "yes" : "NO") << ", simulated above interval "
       << c.simulated_above_interval << ", predicted " << c.predicted_firings << " firings with "
       << c.prediction_reads << " reads (worst avalanche " << worst_reads << " reads / " << worst_suffix
       << " predicted), replayed " << c.replayed_firings << ", fallbacks " << c.fallbacks << ", naive "
       << secs(naive_s) << ", pseudolocal " << secs(fast_s);
    details.push_back(os.str());
    ok = ok && same && c.simulated_above_interval == 0 && cost_ok && c.handoffs > 0;
  }
  report(9, ok, "pseudolocal prediction: equivalent to replay, nothing simulated above the interval, reads <= (D-1)(suffix+1)", details);
}

int sh(const std::string& cmd) {
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_10() {
  std::vector<std::string> details;
  fs::path dir = fs::temp_directory_path() / ("kspm_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = KSPM_CLI;
  auto p = [&](const std::string& name) { return (dir / name).string(); };
  bool ok = true;
  for (Value d : {3, 4}) {
    std::string base = cli + " simulate --grains 20000 --d " + std::to_string(d) + " --seed 17";
    int r1 = sh(base + " --out " + p("a.jsonl") + " --fixed-out " + p("a.tsv") + " --shot-out " + p("a_shot.tsv"));
    int r2 = sh(base + " --out " + p("b.jsonl") + " --fixed-out " + p("b.tsv") + " --shot-out " + p("b_shot.tsv"));
    bool same = r1 == 0 && r2 == 0 && slurp(p("a.jsonl")) == slurp(p("b.jsonl")) && slurp(p("a.tsv")) == slurp(p("b.tsv")) &&
                slurp(p("a_shot.tsv")) == slurp(p("b_shot.tsv"));

    // Interrupted run: snapshot at 12000, then 700 more records and a torn line.
    int r3 = sh(cli + " simulate --grains 12000 --d " + std::to_string(d) + " --seed 17 --snapshot-every 4000 --snapshot " +
                p("s.json") + " --out " + p("c.jsonl"));
    std::string full = slurp(p("a.jsonl"));
    std::size_t cut = 0;
    for (int i = 0; i < 12700; ++i) cut = full.find('\n', cut) + 1;
    std::ofstream(p("c.jsonl"), std::ios::binary | std::ios::trunc) << full.substr(0, cut) << "{\"k\":12701,";
    int r4 = sh(base + " --resume-from " + p("s.json") + " --out " + p("c.jsonl") + " --fixed-out " + p("c.tsv") +
                " --shot-out " + p("c_shot.tsv"));
    bool resumed = r3 == 0 && r4 == 0 && slurp(p("c.jsonl")) == full && slurp(p("c.tsv")) == slurp(p("a.tsv")) &&
                   slurp(p("c_shot.tsv")) == slurp(p("a_shot.tsv"));
    details.push_back("D=" + std::to_string(d) + ": identical runs byte-equal " + (same ? "yes" : "no") +
                      ", resume from k=12000 byte-equal " + (resumed ? "yes" : "no") + " (" +
                      std::to_string(full.size()) + " trace bytes)");
    ok = ok && same && resumed;
  }
  fs::remove_all(dir);
  report(10, ok, "CLI determinism and snapshot resume", details);
}

}  // namespace

int main() {
  std::cout << "kspm acceptance\n";
  ProcessTallies t = process_pass();
  std::string scope = "D in {3,4,5}, k <= 20000: " + std::to_string(t.avalanches) + " avalanches, " +
                      std::to_string(t.with_interval) + " with an interval; pass took " + secs(t.seconds);

  report(1, t.double_fires == 0 && t.seconds < 60, "every avalanche fires each column at most once",
         {scope, "double firings: " + std::to_string(t.double_fires)});
  criterion_2();
  report(3, t.peak_mismatch == 0 && t.suffix_mismatch == 0 && t.with_interval > 0,
         "predicted peaks and suffix equal the leftmost avalanche suffix",
         {scope, "peak mismatches " + std::to_string(t.peak_mismatch) + ", suffix mismatches " +
                     std::to_string(t.suffix_mismatch)});
  report(4, t.gap_violations == 0, "backward moves < D-1 onto the largest hole, forward moves <= D-1",
         {"violations: " + std::to_string(t.gap_violations)});
  report(5, t.equality_violations == 0, "pi(k)_j = pi(k-1)_j for l+D-1 <= j < max s^k",
         {"violations: " + std::to_string(t.equality_violations)});
  report(6, t.residual_nonzero == 0 && t.mass_mismatch == 0, "shot identity residuals 0 and weighted mass = k",
         {"nonzero residual vectors " + std::to_string(t.residual_nonzero) + ", mass mismatches " +
          std::to_string(t.mass_mismatch)});
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  std::cout << (10 - failed) << "/10 criteria passed\n";
  return failed;
}
