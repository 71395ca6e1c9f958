#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "surf/geometry.hpp"
#include "surf/mesh.hpp"
#include "surf/param_space.hpp"

namespace surf {

struct FluidProperties {
  double rho = 1.225;     // kg/m^3, standard air
  double mu = 1.7894e-5;  // Pa s
  double k = 0.0258;      // W/(m K)
  double cp = 1006.0;     // J/(kg K)

  double diffusivity() const { return k / (rho * cp); }
};

// Density/viscosity defaults with the design point's thermal properties.
FluidProperties fluid_properties(const DesignPoint& dp, double rho = 1.225, double mu = 1.7894e-5);

struct TransientInlet {
  double mean = 0.0;       // m/s
  double amplitude = 0.0;  // m/s
  double frequency = 0.0;  // Hz
  Vec2 direction{1.0, 0.0};
  double temperature = 300.0;  // K
};

double inlet_velocity(const TransientInlet& spec, double t);

double reynolds_number(double rho, double u, double length, double mu);

// Amplitudes of Inlet2/Inlet3 scaled by one factor so the total influx per
// unit depth never drops below 5 % of the Inlet1 influx.
struct ClampResult {
  DesignPoint dp;
  double factor = 1.0;
  double q1 = 0.0;     // Inlet1 influx, m^2/s
  double worst = 0.0;  // min over time of the total influx after clamping
};
ClampResult clamp_amplitudes_report(const DesignPoint& dp);
DesignPoint clamp_amplitudes(const DesignPoint& dp);

// Total influx per unit depth at time t (m^2/s).
double total_influx(const DesignPoint& dp, double t);
// Lower bound on total_influx over t, attained when both side inlets bottom
// out together.
double min_total_influx(const DesignPoint& dp);

struct FieldState {
  std::vector<double> u, v, p, T;

  static FieldState uniform(std::size_t n, double temperature);
  std::size_t size() const { return u.size(); }
};

// Conditions applied to every node of one type.
struct NodeCondition {
  bool velocity_fixed = false;
  std::function<Vec2(Vec2 pos, double t)> velocity;  // empty means zero
  bool pressure_fixed = false;
  std::optional<double> temperature;
};

struct BoundarySpec {
  std::array<NodeCondition, kNodeTypeCount> by_type{};
  // ObjectWall temperature per 1-based object index; overrides by_type.
  std::map<int, double> object_temperature;

  NodeCondition& operator[](NodeType t) { return by_type[static_cast<std::size_t>(t)]; }
  const NodeCondition& operator[](NodeType t) const { return by_type[static_cast<std::size_t>(t)]; }
};

// No-slip walls and obstacles, three velocity inlets, zero-pressure outlet,
// Dirichlet temperatures on inlets and obstacles, adiabatic outer walls.
// `dp` should already be clamped.
BoundarySpec boundary_from_design(const DesignPoint& dp, const DomainOutline& outline);

struct SolverOptions {
  double pressure_tol = 1e-10;
  double transport_tol = 1e-8;
  int max_iter_factor = 10;  // iteration cap = factor * N
  bool stabilize = true;     // streamline diffusion in momentum
  // Speed used to normalize the divergence residual; <= 0 means "largest
  // boundary speed at t".
  double reference_speed = 0.0;
};

struct StepReport {
  double divergence = 0.0;  // normalized, see FlowSolver::normalized_divergence
  int momentum_iterations = 0;
  int pressure_iterations = 0;
  int energy_iterations = 0;
  double momentum_residual = 0.0;
  double pressure_residual = 0.0;
  double energy_residual = 0.0;
};

// P1 finite elements on triangles. Incremental pressure-correction
// projection: implicit momentum predictor with lagged convection, exact
// discrete pressure projection, then implicit energy transport with
// algebraic upwinding so temperatures obey a discrete maximum principle.
class FlowSolver {
 public:
  FlowSolver(const Mesh& mesh, FluidProperties props, BoundarySpec bc, SolverOptions opt = {});
  ~FlowSolver();
  FlowSolver(const FlowSolver&) = delete;
  FlowSolver& operator=(const FlowSolver&) = delete;

  // Advances `s` from time t to t + dt. Throws SolverFailure.
  StepReport step(FieldState& s, double t, double dt);

  // Boundary values at time t imposed on a state.
  void apply_boundary(FieldState& s, double t) const;

  // max |(C u)_i| / (U h) over constrained nodes; C is the discrete
  // divergence, U the reference speed, h the mean edge length.
  double normalized_divergence(const FieldState& s, double t) const;

  // Net flux through boundary edges of a tag (positive outward), m^2/s.
  double boundary_flux(const FieldState& s, BoundaryTag tag) const;

  const Mesh& mesh() const { return mesh_; }
  double mean_edge() const { return h_mean_; }
  // Continuity rows left unconstrained because they depend on others.
  int dropped_rows() const;

 private:
  struct Impl;
  const Mesh& mesh_;
  FluidProperties props_;
  BoundarySpec bc_;
  SolverOptions opt_;
  double h_mean_ = 0.0;
  std::unique_ptr<Impl> impl_;
};

// One step with a throwaway solver; convenient, not fast.
FieldState step(const FieldState& state, const Mesh& mesh, const FluidProperties& props,
                const BoundarySpec& bc, double t, double dt);

struct SimulationRecord {
  std::vector<FieldState> states;  // index = step, 0 is the initial condition
  double dt = 0.0;
  FluidProperties props;
  std::vector<StepReport> reports;
};

struct TransientOptions {
  double dt = 0.01;
  int steps = 300;
  double rho = 1.225;
  double mu = 1.7894e-5;
  SolverOptions solver;
  bool keep_states = true;
  // Called with every state including the initial one.
  std::function<void(int step, const FieldState&)> observer;
  std::ostream* residual_log = nullptr;  // line-delimited per-step record
};

// Clamps the design point, applies its boundary conditions and integrates.
// Failures rethrow as SolverFailure carrying the step index.
SimulationRecord run_transient(const DesignPoint& dp, const Mesh& mesh, const TransientOptions& opt);

}  // namespace surf
