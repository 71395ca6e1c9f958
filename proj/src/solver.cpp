#include "surf/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <set>

#include "surf/errors.hpp"

namespace surf {

FluidProperties fluid_properties(const DesignPoint& dp, double rho, double mu) {
  FluidProperties f;
  f.rho = rho;
  f.mu = mu;
  f.k = dp.real_or("ThermalConductivity", f.k);
  f.cp = dp.real_or("HeatCapacity", f.cp);
  return f;
}

double inlet_velocity(const TransientInlet& spec, double t) {
  return spec.mean + spec.amplitude * std::sin(2.0 * std::numbers::pi * spec.frequency * t);
}

double reynolds_number(double rho, double u, double length, double mu) {
  return rho * u * length / mu;
}

namespace {

struct Influx {
  double q1, mean, amplitude;  // amplitude already summed over both side inlets
};

double side_normal(const DesignPoint& dp, int i) {
  return std::sin(deg2rad(dp.real_or("Inlet" + std::to_string(i) + "Angle", 90.0)));
}

Influx influx_terms(const DesignPoint& dp) {
  const double w = kSideInletWidth * 1e-3;
  Influx f{};
  f.q1 = dp.real_or("DomainHeight", 400.0) * 1e-3 * dp.real("Inlet1v");
  for (int i = 2; i <= 3; ++i) {
    const std::string p = "Inlet" + std::to_string(i);
    const double s = side_normal(dp, i);
    f.mean += w * dp.real_or(p + "vMean", 0.0) * s;
    f.amplitude += w * std::abs(dp.real_or(p + "vAmplitude", 0.0)) * s;
  }
  return f;
}

}  // namespace

double total_influx(const DesignPoint& dp, double t) {
  const double w = kSideInletWidth * 1e-3;
  double q = dp.real_or("DomainHeight", 400.0) * 1e-3 * dp.real("Inlet1v");
  for (int i = 2; i <= 3; ++i) {
    const std::string p = "Inlet" + std::to_string(i);
    TransientInlet spec;
    spec.mean = dp.real_or(p + "vMean", 0.0);
    spec.amplitude = dp.real_or(p + "vAmplitude", 0.0);
    spec.frequency = dp.real_or(p + "vFrequency", 0.0);
    q += w * inlet_velocity(spec, t) * side_normal(dp, i);
  }
  return q;
}

double min_total_influx(const DesignPoint& dp) {
  const Influx f = influx_terms(dp);
  return f.q1 + f.mean - f.amplitude;
}

ClampResult clamp_amplitudes_report(const DesignPoint& dp) {
  ClampResult r;
  r.dp = dp;
  const Influx f = influx_terms(dp);
  r.q1 = f.q1;
  // Worst case lets both sinusoids bottom out together.
  const double budget = 0.95 * f.q1 + f.mean;
  if (f.amplitude > budget && f.amplitude > 0.0) r.factor = budget / f.amplitude;
  for (int i = 2; i <= 3; ++i) {
    const std::string key = "Inlet" + std::to_string(i) + "vAmplitude";
    if (dp.has(key)) r.dp.set(key, dp.real(key) * r.factor);
  }
  r.worst = min_total_influx(r.dp);
  return r;
}

DesignPoint clamp_amplitudes(const DesignPoint& dp) { return clamp_amplitudes_report(dp).dp; }

FieldState FieldState::uniform(std::size_t n, double temperature) {
  FieldState s;
  s.u.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.p.assign(n, 0.0);
  s.T.assign(n, temperature);
  return s;
}

BoundarySpec boundary_from_design(const DesignPoint& dp, const DomainOutline& outline) {
  BoundarySpec bc;
  const double t1 = dp.real_or("Inlet1T", 300.0);

  auto& in1 = bc[NodeType::Inlet1];
  in1.velocity_fixed = true;
  const Vec2 v1 = dp.real("Inlet1v") * outline.inflow_direction[0];
  in1.velocity = [v1](Vec2, double) { return v1; };
  in1.temperature = t1;

  for (int i = 2; i <= 3; ++i) {
    const std::string p = "Inlet" + std::to_string(i);
    TransientInlet spec;
    spec.mean = dp.real_or(p + "vMean", 0.0);
    spec.amplitude = dp.real_or(p + "vAmplitude", 0.0);
    spec.frequency = dp.real_or(p + "vFrequency", 0.0);
    spec.direction = outline.inflow_direction[static_cast<std::size_t>(i - 1)];
    spec.temperature = dp.real_or(p + "T", t1);
    auto& c = bc[i == 2 ? NodeType::Inlet2 : NodeType::Inlet3];
    c.velocity_fixed = true;
    c.velocity = [spec](Vec2, double t) { return inlet_velocity(spec, t) * spec.direction; };
    c.temperature = spec.temperature;
  }
  bc[NodeType::Wall].velocity_fixed = true;
  bc[NodeType::ObjectWall].velocity_fixed = true;
  bc[NodeType::Outlet].pressure_fixed = true;
  for (int i = 1; i <= 2; ++i) {
    const std::string key = "Object" + std::to_string(i) + "T";
    if (dp.has(key)) bc.object_temperature[i] = dp.real(key);
  }
  return bc;
}

// ---------------------------------------------------------------------------

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

struct Element {
  std::array<int, 3> v;
  double area;
  std::array<Vec2, 3> grad;  // shape function gradients
};

double xi(double pe) {
  if (pe < 1e-3) return pe / 3.0;
  if (pe > 20.0) return 1.0 - 1.0 / pe;
  return 1.0 / std::tanh(pe) - 1.0 / pe;
}

}  // namespace

struct FlowSolver::Impl {
  int n = 0;
  std::vector<Element> elems;
  std::vector<double> ml;
  SpMat pattern;                              // node graph, values rewritten per use
  std::vector<std::array<int, 9>> slots;      // element (a, b) -> value index
  std::vector<int> diag;                      // value index of (i, i)
  struct Edge {
    int a, b, ab, ba;
  };
  std::vector<Edge> edges;                    // unique a < b
  SpMat cx, cy;                               // divergence blocks
  SpMat lap;                                  // pressure projection matrix
  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> pcg;

  std::vector<char> vel_fixed, p_fixed, p_loose;
  int dropped_rows = 0;
  std::vector<char> t_fixed;
  std::vector<double> t_value;
  std::vector<int> fixed_vel_slots, fixed_t_slots;  // off-diagonal entries of Dirichlet rows
  struct BEdge {
    int a, b;
    Vec2 normal;  // outward unit
    double length;
    BoundaryTag tag;
  };
  std::vector<BEdge> bedges;
  std::vector<std::vector<int>> neighbors;

  int find_slot(int row, int col) const {
    const int* idx = pattern.innerIndexPtr();
    const int begin = pattern.outerIndexPtr()[col];
    const int end = pattern.outerIndexPtr()[col + 1];
    const int* it = std::lower_bound(idx + begin, idx + end, row);
    return static_cast<int>(it - idx);
  }
};

FlowSolver::FlowSolver(const Mesh& mesh, FluidProperties props, BoundarySpec bc, SolverOptions opt)
    : mesh_(mesh), props_(props), bc_(std::move(bc)), opt_(opt), impl_(std::make_unique<Impl>()) {
  auto& m = *impl_;
  m.n = static_cast<int>(mesh.num_nodes());
  const int n = m.n;
  if (n == 0) throw SolverFailure("empty mesh", 0.0);
  m.ml.assign(static_cast<std::size_t>(n), 0.0);
  m.neighbors.resize(static_cast<std::size_t>(n));

  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& t : mesh.triangles) {
    Element e;
    e.v = t;
    const Vec2 p0 = mesh.coords[static_cast<std::size_t>(t[0])];
    const Vec2 p1 = mesh.coords[static_cast<std::size_t>(t[1])];
    const Vec2 p2 = mesh.coords[static_cast<std::size_t>(t[2])];
    const double a2 = orient(p0, p1, p2);
    if (!(a2 > 0.0)) throw SolverFailure("mesh has a non-positive triangle", a2);
    e.area = 0.5 * a2;
    const Vec2 p[3] = {p0, p1, p2};
    for (int k = 0; k < 3; ++k) {
      const Vec2 pj = p[(k + 1) % 3], pk = p[(k + 2) % 3];
      e.grad[static_cast<std::size_t>(k)] = Vec2{pj.y - pk.y, pk.x - pj.x} / a2;
    }
    for (int a = 0; a < 3; ++a) {
      m.ml[static_cast<std::size_t>(t[static_cast<std::size_t>(a)])] += e.area / 3.0;
      for (int b = 0; b < 3; ++b) {
        trip.emplace_back(t[static_cast<std::size_t>(a)], t[static_cast<std::size_t>(b)], 1.0);
      }
    }
    m.elems.push_back(e);
  }
  m.pattern.resize(n, n);
  m.pattern.setFromTriplets(trip.begin(), trip.end());
  m.pattern.makeCompressed();
  for (const auto& e : m.elems) {
    std::array<int, 9> s{};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        s[static_cast<std::size_t>(3 * a + b)] = m.find_slot(e.v[static_cast<std::size_t>(a)], e.v[static_cast<std::size_t>(b)]);
      }
    }
    m.slots.push_back(s);
  }
  m.diag.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) m.diag[static_cast<std::size_t>(i)] = m.find_slot(i, i);
  {
    std::set<std::pair<int, int>> seen;
    for (const auto& t : mesh.triangles) {
      for (int k = 0; k < 3; ++k) {
        int a = t[static_cast<std::size_t>(k)], b = t[static_cast<std::size_t>((k + 1) % 3)];
        if (a > b) std::swap(a, b);
        if (seen.insert({a, b}).second) {
          m.edges.push_back({a, b, m.find_slot(a, b), m.find_slot(b, a)});
          m.neighbors[static_cast<std::size_t>(a)].push_back(b);
          m.neighbors[static_cast<std::size_t>(b)].push_back(a);
        }
      }
    }
    double sum = 0.0;
    for (const auto& e : m.edges) sum += dist(mesh.coords[static_cast<std::size_t>(e.a)], mesh.coords[static_cast<std::size_t>(e.b)]);
    h_mean_ = sum / static_cast<double>(m.edges.size());
  }

  // Node conditions.
  m.vel_fixed.assign(static_cast<std::size_t>(n), 0);
  m.p_fixed.assign(static_cast<std::size_t>(n), 0);
  m.p_loose.assign(static_cast<std::size_t>(n), 0);
  m.t_fixed.assign(static_cast<std::size_t>(n), 0);
  m.t_value.assign(static_cast<std::size_t>(n), 0.0);
  bool any_p = false;
  for (int i = 0; i < n; ++i) {
    const auto type = mesh.node_type[static_cast<std::size_t>(i)];
    const auto& c = bc_[type];
    m.vel_fixed[static_cast<std::size_t>(i)] = c.velocity_fixed;
    m.p_fixed[static_cast<std::size_t>(i)] = c.pressure_fixed;
    any_p = any_p || c.pressure_fixed;
    std::optional<double> temp = c.temperature;
    if (type == NodeType::ObjectWall) {
      const auto it = bc_.object_temperature.find(mesh.node_object[static_cast<std::size_t>(i)]);
      if (it != bc_.object_temperature.end()) temp = it->second;
    }
    if (temp) {
      m.t_fixed[static_cast<std::size_t>(i)] = 1;
      m.t_value[static_cast<std::size_t>(i)] = *temp;
    }
  }

  // Corner nodes carry the wall type but still close a Dirichlet temperature
  // edge; they take that edge's temperature.
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag == BoundaryTag::Wall || e.tag == BoundaryTag::ObjectWall) continue;
    const auto& temp = bc_[node_type_of(e.tag)].temperature;
    if (!temp) continue;
    for (int v : {e.a, e.b}) {
      const auto k = static_cast<std::size_t>(v);
      if (m.t_fixed[k]) continue;
      m.t_fixed[k] = 1;
      m.t_value[k] = *temp;
    }
  }

  for (int col = 0; col < n; ++col) {
    for (int k = m.pattern.outerIndexPtr()[col]; k < m.pattern.outerIndexPtr()[col + 1]; ++k) {
      const int row = m.pattern.innerIndexPtr()[k];
      if (row == col) continue;
      if (m.vel_fixed[static_cast<std::size_t>(row)]) m.fixed_vel_slots.push_back(k);
      if (m.t_fixed[static_cast<std::size_t>(row)]) m.fixed_t_slots.push_back(k);
    }
  }

  // Divergence blocks: (C u)_i = sum_e (A/3) div_e u.
  {
    std::vector<Eigen::Triplet<double>> tx, ty;
    for (const auto& e : m.elems) {
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          const auto& g = e.grad[static_cast<std::size_t>(b)];
          tx.emplace_back(e.v[static_cast<std::size_t>(a)], e.v[static_cast<std::size_t>(b)], e.area / 3.0 * g.x);
          ty.emplace_back(e.v[static_cast<std::size_t>(a)], e.v[static_cast<std::size_t>(b)], e.area / 3.0 * g.y);
        }
      }
    }
    m.cx.resize(n, n);
    m.cy.resize(n, n);
    m.cx.setFromTriplets(tx.begin(), tx.end());
    m.cy.setFromTriplets(ty.begin(), ty.end());
  }

  // Projection matrix C P M^-1 C^T restricted to free pressure nodes.
  {
    Vec d(n);
    for (int i = 0; i < n; ++i) {
      d[i] = m.vel_fixed[static_cast<std::size_t>(i)] ? 0.0 : 1.0 / m.ml[static_cast<std::size_t>(i)];
    }
    SpMat full = SpMat(m.cx * d.asDiagonal() * m.cx.transpose()) +
                 SpMat(m.cy * d.asDiagonal() * m.cy.transpose());
    double scale = 0.0;
    for (int k = 0; k < full.outerSize(); ++k) {
      for (SpMat::InnerIterator it(full, k); it; ++it) {
        if (it.row() == it.col()) scale = std::max(scale, std::abs(it.value()));
      }
    }
    for (int i = 0; i < n; ++i) {
      if (m.p_fixed[static_cast<std::size_t>(i)]) continue;
      if (!(full.coeff(i, i) > 1e-14 * scale)) m.p_loose[static_cast<std::size_t>(i)] = 1;
    }
    if (!any_p) {
      // Closed domain: pressure is defined up to a constant.
      for (int i = 0; i < n; ++i) {
        if (!m.p_loose[static_cast<std::size_t>(i)]) {
          m.p_fixed[static_cast<std::size_t>(i)] = 1;
          break;
        }
      }
    }
    const double unit = scale > 0 ? scale : 1.0;
    auto restrict = [&] {
      std::vector<Eigen::Triplet<double>> tl;
      for (int k = 0; k < full.outerSize(); ++k) {
        for (SpMat::InnerIterator it(full, k); it; ++it) {
          const auto r = static_cast<std::size_t>(it.row()), c = static_cast<std::size_t>(it.col());
          const bool rf = m.p_fixed[r] || m.p_loose[r];
          const bool cf = m.p_fixed[c] || m.p_loose[c];
          if (!rf && !cf) tl.emplace_back(it.row(), it.col(), it.value());
        }
      }
      for (int i = 0; i < n; ++i) {
        if (m.p_fixed[static_cast<std::size_t>(i)] || m.p_loose[static_cast<std::size_t>(i)]) tl.emplace_back(i, i, unit);
      }
      m.lap.resize(n, n);
      m.lap.setFromTriplets(tl.begin(), tl.end());
      m.lap.makeCompressed();
    };
    restrict();
    // Thin gaps between obstacles and walls can hold more continuity rows
    // than the free velocities there can satisfy. Such rows are linearly
    // dependent; the first one met in elimination order becomes loose until
    // the factorization has no vanishing pivot.
    for (int pass = 0; pass < n; ++pass) {
      Eigen::SimplicialLDLT<SpMat> ldlt(m.lap);
      const Vec dvec = ldlt.vectorD();
      const auto& perm = ldlt.permutationP().indices();
      int worst = -1, worst_pos = n;
      for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (m.p_fixed[k] || m.p_loose[k]) continue;
        const int pos = perm[i];
        if (!(dvec[pos] > 1e-9 * m.lap.coeff(i, i)) && pos < worst_pos) {
          worst = i;
          worst_pos = pos;
        }
      }
      if (worst < 0) break;
      m.p_loose[static_cast<std::size_t>(worst)] = 1;
      ++m.dropped_rows;
      restrict();
    }
    m.pcg.setTolerance(opt_.pressure_tol);
    m.pcg.setMaxIterations(opt_.max_iter_factor * n);
    m.pcg.compute(m.lap);
    if (m.pcg.info() != Eigen::Success) throw SolverFailure("pressure preconditioner failed", 0.0);
  }

  // Boundary edges with outward normals.
  {
    std::map<std::pair<int, int>, int> opposite;
    for (const auto& t : mesh.triangles) {
      for (int k = 0; k < 3; ++k) {
        int a = t[static_cast<std::size_t>((k + 1) % 3)], b = t[static_cast<std::size_t>((k + 2) % 3)];
        opposite[{std::min(a, b), std::max(a, b)}] = t[static_cast<std::size_t>(k)];
      }
    }
    for (const auto& e : mesh.boundary_edges) {
      const auto it = opposite.find({std::min(e.a, e.b), std::max(e.a, e.b)});
      if (it == opposite.end()) continue;
      const Vec2 pa = mesh.coords[static_cast<std::size_t>(e.a)], pb = mesh.coords[static_cast<std::size_t>(e.b)];
      const Vec2 pc = mesh.coords[static_cast<std::size_t>(it->second)];
      const double len = dist(pa, pb);
      Vec2 nrm{(pb - pa).y / len, -(pb - pa).x / len};
      if (dot(nrm, pc - pa) > 0) nrm = -nrm;
      m.bedges.push_back({e.a, e.b, nrm, len, e.tag});
    }
  }
}

FlowSolver::~FlowSolver() = default;

int FlowSolver::dropped_rows() const { return impl_->dropped_rows; }

void FlowSolver::apply_boundary(FieldState& s, double t) const {
  const auto& m = *impl_;
  for (int i = 0; i < m.n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (m.vel_fixed[k]) {
      const auto& c = bc_[mesh_.node_type[k]];
      const Vec2 val = c.velocity ? c.velocity(mesh_.coords[k], t) : Vec2{};
      s.u[k] = val.x;
      s.v[k] = val.y;
    }
    if (m.t_fixed[k]) s.T[k] = m.t_value[k];
  }
}

namespace {

template <class Solver>
void check(const Solver& solver, const char* what, double tol) {
  if (solver.info() != Eigen::Success && !(solver.error() <= 10 * tol)) {
    throw SolverFailure(std::string(what) + " solve did not converge (residual " +
                            std::to_string(solver.error()) + ")",
                        solver.error());
  }
}

}  // namespace

StepReport FlowSolver::step(FieldState& s, double t, double dt) {
  if (!(dt > 0.0)) throw SolverFailure("time step must be positive", 0.0);
  auto& m = *impl_;
  const int n = m.n;
  const double rho = props_.rho, mu = props_.mu;
  const double t1 = t + dt;
  StepReport rep;

  Eigen::Map<Vec> un(s.u.data(), n), vn(s.v.data(), n), pn(s.p.data(), n);

  // Momentum predictor.
  SpMat a = m.pattern;
  double* val = a.valuePtr();
  std::fill(val, val + a.nonZeros(), 0.0);
  for (std::size_t e = 0; e < m.elems.size(); ++e) {
    const auto& el = m.elems[e];
    Vec2 abar{};
    for (int v : el.v) abar += Vec2{s.u[static_cast<std::size_t>(v)], s.v[static_cast<std::size_t>(v)]};
    abar = abar / 3.0;
    const double speed = norm(abar);
    std::array<double, 3> adg{};
    double sum_abs = 0.0;
    for (int k = 0; k < 3; ++k) {
      adg[static_cast<std::size_t>(k)] = dot(abar, el.grad[static_cast<std::size_t>(k)]);
      sum_abs += std::abs(adg[static_cast<std::size_t>(k)]);
    }
    double tau = 0.0;
    if (opt_.stabilize && speed > 0.0 && sum_abs > 0.0) {
      const double h = 2.0 * speed / sum_abs;
      const double pe = rho * speed * h / (2.0 * mu);
      tau = h / (2.0 * speed) * xi(pe);
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const auto ii = static_cast<std::size_t>(i), jj = static_cast<std::size_t>(j);
        val[m.slots[e][3 * ii + jj]] += rho * el.area / 3.0 * adg[jj] +
                                        rho * tau * el.area * adg[ii] * adg[jj] +
                                        mu * el.area * dot(el.grad[ii], el.grad[jj]);
      }
    }
  }
  for (int i = 0; i < n; ++i) val[m.diag[static_cast<std::size_t>(i)]] += rho / dt * m.ml[static_cast<std::size_t>(i)];
  // Backflow through the outlet is damped.
  for (const auto& be : m.bedges) {
    if (be.tag != BoundaryTag::Outlet) continue;
    const Vec2 ua{s.u[static_cast<std::size_t>(be.a)], s.v[static_cast<std::size_t>(be.a)]};
    const Vec2 ub{s.u[static_cast<std::size_t>(be.b)], s.v[static_cast<std::size_t>(be.b)]};
    const double un_edge = dot(0.5 * (ua + ub), be.normal);
    if (un_edge < 0.0) {
      val[m.diag[static_cast<std::size_t>(be.a)]] += rho * (-un_edge) * be.length / 2;
      val[m.diag[static_cast<std::size_t>(be.b)]] += rho * (-un_edge) * be.length / 2;
    }
  }
  for (int k : m.fixed_vel_slots) val[k] = 0.0;
  Vec bx(n), by(n);
  {
    Vec gx = m.cx.transpose() * pn;
    Vec gy = m.cy.transpose() * pn;
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (m.vel_fixed[k]) {
        val[m.diag[k]] = 1.0;
        const auto& c = bc_[mesh_.node_type[k]];
        const Vec2 bv = c.velocity ? c.velocity(mesh_.coords[k], t1) : Vec2{};
        bx[i] = bv.x;
        by[i] = bv.y;
      } else {
        bx[i] = rho / dt * m.ml[k] * un[i] + gx[i];
        by[i] = rho / dt * m.ml[k] * vn[i] + gy[i];
      }
    }
  }
  Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> mom;
  mom.setTolerance(opt_.transport_tol);
  mom.setMaxIterations(opt_.max_iter_factor * n);
  mom.preconditioner().setDroptol(1e-4);
  mom.compute(a);
  if (mom.info() != Eigen::Success) throw SolverFailure("momentum preconditioner failed", 0.0);
  Vec us = mom.solveWithGuess(bx, un);
  check(mom, "momentum", opt_.transport_tol);
  rep.momentum_iterations += static_cast<int>(mom.iterations());
  rep.momentum_residual = std::max(rep.momentum_residual, mom.error());
  Vec vs = mom.solveWithGuess(by, vn);
  check(mom, "momentum", opt_.transport_tol);
  rep.momentum_iterations += static_cast<int>(mom.iterations());
  rep.momentum_residual = std::max(rep.momentum_residual, mom.error());

  // Pressure projection.
  Vec rhs = -(rho / dt) * (m.cx * us + m.cy * vs);
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (m.p_fixed[k] || m.p_loose[k]) rhs[i] = 0.0;
  }
  Vec phi = Vec::Zero(n);
  if (rhs.norm() > 0.0) {
    phi = m.pcg.solve(rhs);
    check(m.pcg, "pressure", opt_.pressure_tol);
    rep.pressure_iterations = static_cast<int>(m.pcg.iterations());
    rep.pressure_residual = m.pcg.error();
  }
  const Vec gx = m.cx.transpose() * phi;
  const Vec gy = m.cy.transpose() * phi;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!m.vel_fixed[k]) {
      us[i] += dt / rho * gx[i] / m.ml[k];
      vs[i] += dt / rho * gy[i] / m.ml[k];
    }
    s.u[k] = us[i];
    s.v[k] = vs[i];
    s.p[k] += phi[i];
  }
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!m.p_loose[k]) continue;
    double sum = 0.0;
    int cnt = 0;
    for (int j : m.neighbors[k]) {
      if (m.p_loose[static_cast<std::size_t>(j)]) continue;
      sum += s.p[static_cast<std::size_t>(j)];
      ++cnt;
    }
    if (cnt > 0) s.p[k] = sum / cnt;
  }

  // Energy: convection-diffusion with algebraic upwinding, backward Euler.
  {
    const double rc = rho * props_.cp;
    SpMat e = m.pattern;
    double* ev = e.valuePtr();
    std::fill(ev, ev + e.nonZeros(), 0.0);
    for (std::size_t k = 0; k < m.elems.size(); ++k) {
      const auto& el = m.elems[k];
      Vec2 abar{};
      for (int v : el.v) abar += Vec2{s.u[static_cast<std::size_t>(v)], s.v[static_cast<std::size_t>(v)]};
      abar = abar / 3.0;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const auto ii = static_cast<std::size_t>(i), jj = static_cast<std::size_t>(j);
          ev[m.slots[k][3 * ii + jj]] += rc * el.area / 3.0 * dot(abar, el.grad[jj]) +
                                         props_.k * el.area * dot(el.grad[ii], el.grad[jj]);
        }
      }
    }
    // The operator is -e; add diffusion until every off-diagonal of -e is >= 0.
    for (const auto& ed : m.edges) {
      const double d = std::max({0.0, ev[ed.ab], ev[ed.ba]});
      ev[ed.ab] -= d;
      ev[ed.ba] -= d;
      ev[m.diag[static_cast<std::size_t>(ed.a)]] += d;
      ev[m.diag[static_cast<std::size_t>(ed.b)]] += d;
    }
    Vec b(n);
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      ev[m.diag[k]] += rc / dt * m.ml[k];
      b[i] = rc / dt * m.ml[k] * s.T[k];
    }
    for (int k : m.fixed_t_slots) ev[k] = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (m.t_fixed[k]) {
        ev[m.diag[k]] = 1.0;
        b[i] = m.t_value[k];
      }
    }
    Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> en;
    en.setTolerance(opt_.transport_tol);
    en.setMaxIterations(opt_.max_iter_factor * n);
    en.preconditioner().setDroptol(1e-4);
    en.compute(e);
    if (en.info() != Eigen::Success) throw SolverFailure("energy preconditioner failed", 0.0);
    Eigen::Map<Vec> tn(s.T.data(), n);
    Vec tnew = en.solveWithGuess(b, tn);
    check(en, "energy", opt_.transport_tol);
    rep.energy_iterations = static_cast<int>(en.iterations());
    rep.energy_residual = en.error();
    tn = tnew;
  }

  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!std::isfinite(s.u[k]) || !std::isfinite(s.v[k]) || !std::isfinite(s.p[k]) ||
        !std::isfinite(s.T[k])) {
      throw SolverFailure("non-finite field value", std::nan(""));
    }
  }
  rep.divergence = normalized_divergence(s, t1);
  return rep;
}

double FlowSolver::normalized_divergence(const FieldState& s, double t) const {
  const auto& m = *impl_;
  const int n = m.n;
  Eigen::Map<const Vec> u(s.u.data(), n), v(s.v.data(), n);
  const Vec div = m.cx * u + m.cy * v;
  double ref = opt_.reference_speed;
  if (!(ref > 0.0)) {
    ref = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (!m.vel_fixed[k]) continue;
      const auto& c = bc_[mesh_.node_type[k]];
      if (c.velocity) ref = std::max(ref, norm(c.velocity(mesh_.coords[k], t)));
    }
    if (!(ref > 0.0)) ref = 1.0;
  }
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (m.p_fixed[k] || m.p_loose[k]) continue;
    worst = std::max(worst, std::abs(div[i]));
  }
  return worst / (ref * h_mean_);
}

double FlowSolver::boundary_flux(const FieldState& s, BoundaryTag tag) const {
  double q = 0.0;
  for (const auto& be : impl_->bedges) {
    if (be.tag != tag) continue;
    const Vec2 ua{s.u[static_cast<std::size_t>(be.a)], s.v[static_cast<std::size_t>(be.a)]};
    const Vec2 ub{s.u[static_cast<std::size_t>(be.b)], s.v[static_cast<std::size_t>(be.b)]};
    q += dot(0.5 * (ua + ub), be.normal) * be.length;
  }
  return q;
}

FieldState step(const FieldState& state, const Mesh& mesh, const FluidProperties& props,
                const BoundarySpec& bc, double t, double dt) {
  FlowSolver solver(mesh, props, bc);
  FieldState s = state;
  solver.step(s, t, dt);
  return s;
}

SimulationRecord run_transient(const DesignPoint& dp, const Mesh& mesh, const TransientOptions& opt) {
  if (opt.steps < 0) throw SolverFailure("negative step count", 0.0);
  const DesignPoint clamped = clamp_amplitudes(dp);
  const DomainOutline outline = build_outline(clamped);
  SimulationRecord rec;
  rec.dt = opt.dt;
  rec.props = fluid_properties(clamped, opt.rho, opt.mu);
  SolverOptions so = opt.solver;
  if (!(so.reference_speed > 0.0)) so.reference_speed = clamped.real("Inlet1v");
  FlowSolver solver(mesh, rec.props, boundary_from_design(clamped, outline), so);

  FieldState s = FieldState::uniform(mesh.num_nodes(), clamped.real_or("Inlet1T", 300.0));
  if (opt.observer) opt.observer(0, s);
  if (opt.keep_states) rec.states.push_back(s);
  for (int k = 0; k < opt.steps; ++k) {
    StepReport r;
    try {
      r = solver.step(s, k * opt.dt, opt.dt);
    } catch (const SolverFailure& e) {
      throw SolverFailure(std::string(e.what()) + " at step " + std::to_string(k + 1), e.residual(), k + 1);
    }
    if (opt.residual_log) {
      *opt.residual_log << std::setprecision(6) << "{\"step\":" << k + 1 << ",\"divergence\":" << r.divergence
                        << ",\"momentum_iterations\":" << r.momentum_iterations
                        << ",\"pressure_iterations\":" << r.pressure_iterations
                        << ",\"energy_iterations\":" << r.energy_iterations << "}\n";
    }
    rec.reports.push_back(r);
    if (opt.observer) opt.observer(k + 1, s);
    if (opt.keep_states) rec.states.push_back(s);
  }
  return rec;
}

}  // namespace surf
