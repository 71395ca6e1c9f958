#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "surf/errors.hpp"
#include "surf/geometry.hpp"
#include "surf/mesh.hpp"
#include "surf/solver.hpp"

using namespace surf;

namespace {

// Rectangle in mm: bottom and top walls, right side `right`, left side `left`.
DomainOutline box(double w, double h, BoundaryTag left, BoundaryTag right) {
  DomainOutline o;
  o.outer = {Segment::line({0, 0}, {w, 0}, BoundaryTag::Wall), Segment::line({w, 0}, {w, h}, right),
             Segment::line({w, h}, {0, h}, BoundaryTag::Wall), Segment::line({0, h}, {0, 0}, left)};
  return o;
}

DesignPoint clamp_example() {
  DesignPoint dp;
  dp.variant = DatasetVariant::Dynamic;
  dp.set("DomainHeight", 400.0);
  dp.set("Inlet1v", 1.0);  // 0.4 m^2/s
  dp.set("Inlet2Angle", 90.0);
  dp.set("Inlet2vMean", 5.0);        // 0.1 m^2/s through 20 mm
  dp.set("Inlet2vAmplitude", 40.0);  // 0.8 m^2/s
  dp.set("Inlet2vFrequency", 2.0);
  dp.set("Inlet3Angle", 90.0);
  dp.set("Inlet3vMean", 0.0);
  dp.set("Inlet3vAmplitude", 0.0);
  dp.set("Inlet3vFrequency", 0.0);
  return dp;
}

// Dense sampling of the total influx over a few periods.
double sampled_min_influx(const DesignPoint& dp) {
  double best = 1e300;
  for (int k = 0; k <= 200000; ++k) best = std::min(best, total_influx(dp, 3.0 * k / 200000.0));
  return best;
}

}  // namespace

TEST_CASE("inlet velocity") {
  TransientInlet flat{5.0, 0.0, 3.0, {1, 0}, 300};
  for (double t : {0.0, 0.1, 1.7}) CHECK(inlet_velocity(flat, t) == 5.0);
  TransientInlet s{5.0, 2.0, 1.0, {1, 0}, 300};
  CHECK(inlet_velocity(s, 0.25) == doctest::Approx(7.0).epsilon(1e-14));
  CHECK(inlet_velocity(s, 0.75) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("reynolds number") {
  CHECK(reynolds_number(1, 2, 0.5, 0.001) == doctest::Approx(1000));
  CHECK(reynolds_number(1, 4, 0.5, 0.001) == doctest::Approx(2000));
  CHECK(reynolds_number(1, 2, 0.5, 0.002) == doctest::Approx(500));
}

TEST_CASE("amplitude clamp") {
  const auto r = clamp_amplitudes_report(clamp_example());
  CHECK(r.q1 == doctest::Approx(0.4));
  CHECK(r.factor == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(r.dp.real("Inlet2vAmplitude") == doctest::Approx(24.0).epsilon(1e-12));
  CHECK(r.worst == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(sampled_min_influx(r.dp) >= 0.05 * r.q1 - 1e-12);

  auto quiet = clamp_example();
  quiet.set("Inlet2vAmplitude", 0.0);
  CHECK(clamp_amplitudes(quiet).values == quiet.values);
  auto mild = clamp_example();
  mild.set("Inlet2vAmplitude", 10.0);
  CHECK(clamp_amplitudes(mild).values == mild.values);

  // Sampled variants: never increases amplitude, always meets the bound.
  for (const auto& dp : sample_design_points(DatasetVariant::Dynamic, 32, 4)) {
    const auto c = clamp_amplitudes_report(dp);
    CHECK(c.factor > 0.0);
    CHECK(c.factor <= 1.0);
    CHECK(c.dp.real("Inlet2vAmplitude") <= dp.real("Inlet2vAmplitude"));
    CHECK(sampled_min_influx(c.dp) >= 0.05 * c.q1 - 1e-12);
  }
}

TEST_CASE("quiescent fluid is a fixed point") {
  const Mesh m = triangulate(box(1000, 500, BoundaryTag::Wall, BoundaryTag::Wall), 0.1);
  BoundarySpec bc;
  bc[NodeType::Wall].velocity_fixed = true;
  const FluidProperties f{1.0, 0.01, 1.0, 1.0};
  const auto s0 = FieldState::uniform(m.num_nodes(), 310.0);
  const auto s1 = step(s0, m, f, bc, 0.0, 0.1);
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    CHECK(std::abs(s1.u[i]) < 1e-12);
    CHECK(std::abs(s1.v[i]) < 1e-12);
    CHECK(std::abs(s1.p[i]) < 1e-9);
    CHECK(s1.T[i] == doctest::Approx(310.0).epsilon(1e-12));
  }
}

TEST_CASE("conduction slab reaches the linear profile") {
  const Mesh m = triangulate(box(1000, 300, BoundaryTag::Inlet1, BoundaryTag::Inlet2), 0.08);
  BoundarySpec bc;
  for (auto t : {NodeType::Wall, NodeType::Inlet1, NodeType::Inlet2}) bc[t].velocity_fixed = true;
  bc[NodeType::Inlet1].temperature = 300.0;
  bc[NodeType::Inlet2].temperature = 400.0;
  FlowSolver solver(m, FluidProperties{1.0, 0.1, 1.0, 1.0}, bc);
  auto s = FieldState::uniform(m.num_nodes(), 350.0);
  for (int k = 0; k < 60; ++k) solver.step(s, 0.5 * k, 0.5);
  double worst = 0.0;
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    worst = std::max(worst, std::abs(s.T[i] - (300.0 + 100.0 * m.coords[i].x)));
  }
  CHECK(worst <= 1.0);
}

TEST_CASE("short Poiseuille channel") {
  const Mesh m = triangulate(box(4000, 1000, BoundaryTag::Inlet1, BoundaryTag::Outlet), 0.1);
  BoundarySpec bc;
  bc[NodeType::Inlet1].velocity_fixed = true;
  bc[NodeType::Inlet1].velocity = [](Vec2 p, double) { return Vec2{4 * p.y * (1 - p.y), 0}; };
  bc[NodeType::Inlet1].temperature = 300.0;
  bc[NodeType::Wall].velocity_fixed = true;
  bc[NodeType::Outlet].pressure_fixed = true;
  SolverOptions so;
  so.reference_speed = 1.0;
  FlowSolver solver(m, FluidProperties{1.0, 1.0, 1.0, 1.0}, bc, so);
  auto s = FieldState::uniform(m.num_nodes(), 300.0);
  double div = 0.0;
  for (int k = 0; k < 40; ++k) div = std::max(div, solver.step(s, 0.5 * k, 0.5).divergence);
  double e = 0, n = 0;
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    const double y = m.coords[i].y, ex = 4 * y * (1 - y);
    e += (s.u[i] - ex) * (s.u[i] - ex) + s.v[i] * s.v[i];
    n += ex * ex;
  }
  CHECK(std::sqrt(e / n) < 0.05);
  CHECK(div <= 1e-6);
  CHECK(div == doctest::Approx(solver.normalized_divergence(s, 20.0)));
  const double qin = -solver.boundary_flux(s, BoundaryTag::Inlet1);
  const double qout = solver.boundary_flux(s, BoundaryTag::Outlet);
  // Trapezoid flux of the nodal parabola at spacing h: 2/3 - 2h^2/3.
  CHECK(qin == doctest::Approx(2.0 / 3.0).epsilon(2e-2));
  CHECK(std::abs(qin - qout) / qin <= 1e-2);
  for (double t : s.T) CHECK(t == doctest::Approx(300.0));
}

TEST_CASE("iteration cap surfaces as solver failure") {
  const Mesh m = triangulate(box(2000, 1000, BoundaryTag::Inlet1, BoundaryTag::Outlet), 0.1);
  BoundarySpec bc;
  bc[NodeType::Inlet1].velocity_fixed = true;
  bc[NodeType::Inlet1].velocity = [](Vec2, double) { return Vec2{1, 0}; };
  bc[NodeType::Wall].velocity_fixed = true;
  bc[NodeType::Outlet].pressure_fixed = true;
  SolverOptions so;
  so.max_iter_factor = 0;
  FlowSolver solver(m, FluidProperties{1.0, 0.01, 1.0, 1.0}, bc, so);
  auto s = FieldState::uniform(m.num_nodes(), 300.0);
  try {
    solver.step(s, 0.0, 0.1);
    FAIL("expected a solver failure");
  } catch (const SolverFailure& e) {
    CHECK(e.residual() > 0.0);
  }
  CHECK_THROWS_AS(solver.step(s, 0.0, 0.0), SolverFailure);
}

TEST_CASE("transient runs on a design point") {
  auto dp = sample_design_points(DatasetVariant::Dynamic, 1, 5).front();
  dp.set("Inlet2vFrequency", 4.0);
  dp.set("Inlet3vFrequency", 4.0);
  const auto clamped = clamp_amplitudes(dp);
  const auto outline = build_outline(clamped);
  const Mesh m = triangulate(outline, 0.045);

  TransientOptions none;
  none.steps = 0;
  const auto r0 = run_transient(dp, m, none);
  REQUIRE(r0.states.size() == 1);
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    CHECK(r0.states[0].u[i] == 0.0);
    CHECK(r0.states[0].T[i] == dp.real("Inlet1T"));
  }

  TransientOptions opt;
  opt.steps = 50;
  opt.dt = 0.01;
  std::ostringstream log;
  opt.residual_log = &log;
  int observed = 0;
  opt.observer = [&](int k, const FieldState&) { CHECK(k == observed++); };
  const auto rec = run_transient(dp, m, opt);
  CHECK(observed == 51);
  REQUIRE(rec.states.size() == 51);
  CHECK(rec.reports.size() == 50);
  const std::string lines = log.str();
  CHECK(std::count(lines.begin(), lines.end(), '\n') == 50);

  double tlo = 1e300, thi = -1e300;
  for (auto key : {"Inlet1T", "Inlet2T", "Inlet3T", "Object1T"}) {
    tlo = std::min(tlo, dp.real(key));
    thi = std::max(thi, dp.real(key));
  }
  const double pad = 0.01 * (thi - tlo);
  for (const auto& r : rec.reports) CHECK(r.divergence <= 1e-6);
  for (const auto& s : rec.states) {
    for (std::size_t i = 0; i < m.num_nodes(); ++i) {
      REQUIRE(std::isfinite(s.u[i]));
      REQUIRE(std::isfinite(s.p[i]));
      CHECK(s.T[i] >= tlo - pad);
      CHECK(s.T[i] <= thi + pad);
    }
  }

  // Mean Inlet2 speed follows the configured sinusoid; its dominant
  // nonzero DFT bin is 4 Hz over the 0.5 s window (bin spacing 2 Hz).
  TransientInlet spec{clamped.real("Inlet2vMean"), clamped.real("Inlet2vAmplitude"), 4.0, {}, 0};
  std::vector<double> series;
  for (std::size_t k = 1; k < rec.states.size(); ++k) {
    const auto& s = rec.states[k];
    double sum = 0;
    int cnt = 0;
    for (std::size_t i = 0; i < m.num_nodes(); ++i) {
      if (m.node_type[i] != NodeType::Inlet2) continue;
      sum += std::hypot(s.u[i], s.v[i]);
      ++cnt;
    }
    REQUIRE(cnt > 0);
    series.push_back(sum / cnt);
    CHECK(sum / cnt == doctest::Approx(std::abs(inlet_velocity(spec, 0.01 * static_cast<double>(k)))).epsilon(1e-9));
  }
  if (spec.amplitude > 0.0) {
    const std::size_t n = series.size();
    double mean = 0;
    for (double x : series) mean += x / static_cast<double>(n);
    std::size_t best = 0;
    double best_mag = -1;
    for (std::size_t f = 1; f < n / 2; ++f) {
      std::complex<double> acc = 0;
      for (std::size_t j = 0; j < n; ++j) {
        acc += (series[j] - mean) * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(f * j) / static_cast<double>(n));
      }
      if (std::abs(acc) > best_mag) best_mag = std::abs(acc), best = f;
    }
    CHECK(static_cast<double>(best) / (0.01 * static_cast<double>(n)) == doctest::Approx(4.0));
  }
}
