// Benchmark acceptance checks. Prints one PASS/FAIL line per criterion; the
// exit code is 1 when any criterion failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <set>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "fsflow/cases.hpp"
#include "fsflow/errors.hpp"

using namespace fsflow;

namespace {

using Clock = std::chrono::steady_clock;
int failures = 0;

struct Run {
  RunRecord rec;
  double seconds = 0.0;
  double max_mass_error(double t_max = 1e300) const {
    double m = 0.0;
    for (const auto& r : rec.rows)
      if (r.t <= t_max + 1e-9) m = std::max(m, r.mass_error);
    return m;
  }
  double min_quality() const {
    double q = 1.0;
    for (const auto& r : rec.rows) q = std::min(q, r.min_quality);
    return q;
  }
  double end_time() const { return rec.rows.back().t; }
  double corner_y(size_t k) const { return rec.rows[k].corners[static_cast<int>(rec.corner)].y(); }
};

struct Spec {
  std::string name, basis, scheme, mesh;
  double dt = 0.0, t_end = 0.0;
};

class Runner {
 public:
  const Run& get(const Spec& s) {
    const std::string key = fmt::format("{} {} {} {} {} {}", s.name, s.basis, s.scheme, s.mesh, s.dt, s.t_end);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    std::vector<ConfigEntry> e{{"case.basis", s.basis, 0},
                               {"case.scheme", s.scheme, 0},
                               {"case.mesh", s.mesh, 0},
                               {"case.dt", fmt::format("{:.17g}", s.dt), 0},
                               {"case.tmax", fmt::format("{:.17g}", s.t_end), 0}};
    CaseConfig cfg = parse_config(e, s.name);
    cfg.validate();
    std::cerr << fmt::format("run {}: ", key) << std::flush;
    const auto t0 = Clock::now();
    Run r;
    r.rec = march(cfg);
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    std::cerr << fmt::format("{} at t={:.6g} in {:.0f} s\n", to_string(r.rec.status), r.end_time(), r.seconds);
    return cache_.emplace(key, std::move(r)).first->second;
  }

 private:
  std::map<std::string, Run> cache_;
};

Spec sloshing(const std::string& basis, const std::string& scheme, const std::string& mesh = "12x12", double dt = 0.2) {
  return {"sloshing", basis, scheme, mesh, dt, 50.0};
}

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  if (!ok) ++failures;
  std::cout << fmt::format("{} {} {}: {}\n", ok ? "PASS" : "FAIL", id, what, detail) << std::flush;
}

const std::vector<std::string> kPde = {"pde-equal", "pde-normal", "pde-directional"};

void mass_conservation(Runner& r) {
  bool ok = true;
  std::string detail;
  for (const char* basis : {"nurbs2", "q1"})
    for (const auto& s : kPde) {
      const Run& run = r.get(sloshing(basis, s));
      const double m = run.max_mass_error();
      const bool good = run.rec.status == RunStatus::Completed && m <= 1e-9 && run.seconds < 300.0;
      ok = ok && good;
      detail += fmt::format("{}/{} max={:.3g} {:.0f}s{}; ", basis, s, m, run.seconds, good ? "" : " (!)");
    }
  report(1, ok, "mass conservation, limit 1e-9 and 300 s per run", detail);
}

void scheme_separation(Runner& r) {
  bool ok = true;
  std::string detail;
  for (auto [basis, point] : {std::pair{"nurbs2", "greville"}, std::pair{"q1", "node-normal"}}) {
    const Run& p = r.get(sloshing(basis, point));
    for (const auto& s : kPde) {
      const Run& q = r.get(sloshing(basis, s));
      const double t = std::min(p.end_time(), q.end_time());
      const double a = p.max_mass_error(t), b = q.max_mass_error(t);
      const double ratio = b > 0.0 ? a / b : INFINITY;
      ok = ok && ratio >= 1e3;
      detail += fmt::format("{} vs {} on [0,{:.4g}]: {:.3g}/{:.3g} = {:.3g}; ", point, s, t, a, b, ratio);
    }
  }
  report(2, ok, "scheme separation, ratio >= 1e3", detail);
}

void flux_convergence(Runner& r) {
  const std::vector<std::pair<double, double>> paper = {{0.2, 0.009404}, {0.1, 0.004748}, {0.05, 0.002393}};
  bool ok = true;
  std::string detail;
  std::vector<double> lx, ly;
  for (double dt : {0.2, 0.1, 0.05, 0.025}) {
    const Run& run = r.get(sloshing("nurbs2", "pde-directional", "12x12", dt));
    const bool done = run.rec.status == RunStatus::Completed;
    const double f = run.rec.flux_den > 0.0 ? flux_error(run.rec) : NAN;
    ok = ok && done;
    lx.push_back(std::log(dt));
    ly.push_back(std::log(f));
    detail += fmt::format("dt={} f={:.4g}", dt, f);
    for (auto [pdt, pf] : paper)
      if (pdt == dt) {
        const bool band = f >= pf / 2 && f <= pf * 2;
        ok = ok && band;
        detail += fmt::format(" (paper {}, ratio {:.3f})", pf, f / pf);
      }
    detail += "; ";
  }
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  ok = ok && std::abs(slope - 1.0) <= 0.15;
  detail += fmt::format("slope={:.4f}", slope);
  report(3, ok, "flux error within factor 2 of the table, slope 1 +- 0.15", detail);
}

void mesh_survival(Runner& r) {
  bool ok = true;
  std::string detail;
  for (const char* basis : {"nurbs2", "q1"}) {
    const Run& d = r.get(sloshing(basis, "pde-directional"));
    const bool good = d.rec.status == RunStatus::Completed && d.end_time() >= 50.0 - 1e-9 && d.min_quality() > 0.2;
    ok = ok && good;
    detail += fmt::format("{} directional {} t={:.4g} min quality {:.3f}; ", basis, to_string(d.rec.status),
                          d.end_time(), d.min_quality());
  }
  bool tangled = false;
  for (auto [mesh, dt] : {std::pair{"12x12", 0.2}, std::pair{"24x24", 0.1}}) {
    const Run& e = r.get(sloshing("nurbs2", "pde-equal", mesh, dt));
    tangled = tangled || (e.rec.status == RunStatus::Tangled && e.end_time() < 50.0);
    detail += fmt::format("equal {} dt={} {} t={:.4g} min quality {:.3f}; ", mesh, dt, to_string(e.rec.status),
                          e.end_time(), e.min_quality());
  }
  ok = ok && tangled;
  report(4, ok, "directional survives T=50 with quality > 0.2, equal tangles on one mesh", detail);
}

void die_swell(Runner& r) {
  const Run& n = r.get({"dieswell", "nurbs2", "pde-normal", "86x16", 0.015625, 14.25});
  const Run& d = r.get({"dieswell", "nurbs2", "pde-directional", "86x16", 0.015625, 14.25});
  bool ok = n.rec.status == RunStatus::Completed && d.rec.status == RunStatus::Completed;
  const size_t rows = std::min(n.rec.rows.size(), d.rec.rows.size());
  double amp = 0.0, diff = 0.0, low = INFINITY;
  for (size_t k = 0; k < rows; ++k) {
    amp = std::max({amp, std::abs(n.corner_y(k) - 10.0), std::abs(d.corner_y(k) - 10.0)});
    diff = std::max(diff, std::abs(n.corner_y(k) - d.corner_y(k)));
    if (n.rec.rows[k].t > 1.0) low = std::min({low, n.corner_y(k), d.corner_y(k)});
  }
  ok = ok && diff <= 0.01 * amp && low > 10.0;
  report(5, ok, "die swell normal vs directional within 1% of amplitude, corner_y > 10 for t > 1",
         fmt::format("normal {} t={:.4g} ({:.0f}s), directional {} t={:.4g} ({:.0f}s), amplitude {:.4g}, "
                     "max difference {:.4g} ({:.3g}%), min corner_y for t>1 {:.6g}",
                     to_string(n.rec.status), n.end_time(), n.seconds, to_string(d.rec.status), d.end_time(),
                     d.seconds, amp, diff, amp > 0 ? 100 * diff / amp : INFINITY, low));
}

void property_suites(const std::string& unit_tests) {
  if (unit_tests.empty()) {
    report(6, false, "property suites under 60 s", "no unit test binary given (--unit-tests)");
    return;
  }
  const auto t0 = Clock::now();
  const int rc = std::system(fmt::format("\"{}\" --gtest_brief=1 > /dev/null 2>&1", unit_tests).c_str());
  const double s = std::chrono::duration<double>(Clock::now() - t0).count();
  report(6, rc == 0 && s < 60.0, "property suites under 60 s", fmt::format("exit {} in {:.1f} s", rc, s));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark acceptance checks"};
  std::string unit_tests;
  std::vector<int> only;
  app.add_option("--unit-tests", unit_tests, "unit test binary for the property-suite timing");
  app.add_option("--only", only, "criteria to evaluate (default all)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  const std::set<int> pick = only.empty() ? std::set<int>{1, 2, 3, 4, 5, 6} : std::set<int>(only.begin(), only.end());
  Runner runner;
  try {
    if (pick.count(6)) property_suites(unit_tests);
    if (pick.count(1)) mass_conservation(runner);
    if (pick.count(2)) scheme_separation(runner);
    if (pick.count(4)) mesh_survival(runner);
    if (pick.count(3)) flux_convergence(runner);
    if (pick.count(5)) die_swell(runner);
  } catch (const Error& e) {
    std::cerr << "acceptance aborted: " << e.what() << "\n";
    return 2;
  }
  return failures > 0 ? 1 : 0;
}
