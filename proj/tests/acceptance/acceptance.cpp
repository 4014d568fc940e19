// Prints one PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.
// argv[1] is the orpa CLI, argv[2] a scratch directory for the determinism run.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <orpa/verification.hpp>

using namespace orpa;

namespace {

struct Outcome {
  bool passed = true;
  std::string note;
};

Outcome from_reports(const std::vector<CheckReport>& reports) {
  Outcome o;
  double worst_ratio = -1.0;
  std::string worst_name;
  for (const CheckReport& r : reports) {
    o.passed = o.passed && r.passed;
    if (!r.passed && o.note.empty()) o.note = "first failure " + r.name;
    const double ratio = r.bound != 0.0 ? r.measured / r.bound : r.measured;
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst_name = r.name;
    }
  }
  std::ostringstream s;
  s << reports.size() << " reports";
  if (!reports.empty()) s << ", tightest " << worst_name << " measured/bound " << worst_ratio;
  if (!o.note.empty()) s << ", " << o.note;
  o.note = s.str();
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const std::string& cli, const std::filesystem::path& scratch) {
  const std::filesystem::path a = scratch / "run_a", b = scratch / "run_b";
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
  for (const auto& dir : {a, b}) {
    const std::string cmd = "\"" + cli + "\" --quiet --seed 11 --out-dir \"" + dir.string() + "\" train";
    if (std::system(cmd.c_str()) != 0) return {false, "cli run failed: " + cmd};
  }
  const std::string ta = slurp(a / "trace_seed11.csv"), tb = slurp(b / "trace_seed11.csv");
  if (ta.empty()) return {false, "no trace written"};
  return {ta == tb, std::to_string(ta.size()) + " bytes compared"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: orpa_acceptance <orpa-cli> <scratch-dir>\n";
    return 2;
  }
  const std::string cli = argv[1];
  const std::filesystem::path scratch = argv[2];
  std::filesystem::create_directories(scratch);
  const std::uint64_t seed = 2024;

  struct Criterion {
    int id;
    const char* title;
    double time_limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "decomposition identity", 10.0, [&] { return from_reports({check_decomposition(seed, 100)}); }},
      {2, "counterexample closed forms", 0.0, [&] { return from_reports({check_counterexample()}); }},
      {3, "pointwise supremum vs grid", 0.0,
       [&] { return from_reports({check_pointwise_sup(seed, 1000, 100000)}); }},
      {4, "gradient exactness", 0.0, [&] { return from_reports(check_gradient_exactness(seed, 50)); }},
      {5, "estimator unbiasedness", 0.0, [&] { return from_reports(check_unbiasedness(seed, 100000)); }},
      {6, "constant bounds", 0.0, [&] { return from_reports(check_constant_bounds(seed, 200)); }},
      {7, "weak convexity", 0.0,
       [&] { return from_reports(check_weak_convexity(seed, 500, {1e-2, 1e-4})); }},
      {8, "envelope machinery", 0.0, [&] { return from_reports(check_prox_lemmas(seed, 100)); }},
      {9, "convergence rate", 300.0,
       [&] { return from_reports(check_convergence(seed, 16, {200, 800, 3200})); }},
      {10, "determinism across invocations", 0.0, [&] { return determinism(cli, scratch); }},
  };

  bool all = true;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit_s > 0.0 && secs > c.time_limit_s) {
      o.passed = false;
      o.note += ", over the time limit";
    }
    all = all && o.passed;
    std::printf("%s %d %s (%.2fs): %s\n", o.passed ? "PASS" : "FAIL", c.id, c.title, secs, o.note.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
