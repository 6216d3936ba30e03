#include "tce/prodmp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tce/csv.hpp"
#include "tce/errors.hpp"

namespace tce {
namespace {

void validate(const MpConfig& c) {
  auto fail = [](const std::string& what) { throw ConstructionError("MpConfig: " + what); };
  if (c.num_dof < 1) fail("num_dof must be positive");
  if (c.num_basis < 1) fail("num_basis must be positive");
  if (!(c.duration > 0.0) || !std::isfinite(c.duration)) fail("duration must be positive and finite");
  if (c.num_steps < 1) fail("num_steps must be positive");
  if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) fail("alpha must be positive");
  if (!(c.alpha_x > 0.0) || !std::isfinite(c.alpha_x)) fail("alpha_x must be positive");
  if (!(c.basis_overlap > 0.0) || !std::isfinite(c.basis_overlap)) fail("basis_overlap must be positive");
  if (c.integration_substeps < 1) fail("integration_substeps must be positive");
  if (!std::isfinite(c.forcing_gain)) fail("forcing_gain must be finite");
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* name) {
  if (!m.allFinite()) throw ConstructionError(std::string("MpKernel: non-finite values in ") + name);
}

}  // namespace

double phase(const MpConfig& config, double t) { return std::exp(-config.alpha_x * t / config.duration); }

Eigen::VectorXd forcing_basis(const MpConfig& config, double t) {
  const int n = config.num_basis;
  const double spacing = n > 1 ? config.duration / (n - 1) : config.duration;
  const double width = 4.0 * config.basis_overlap / (spacing * spacing);
  // Recover time from the phase; the bumps live on the time axis.
  const double x = phase(config, t);
  const double tx = -config.duration * std::log(x) / config.alpha_x;
  Eigen::VectorXd phi(n);
  for (int i = 0; i < n; ++i) {
    const double center = n > 1 ? i * spacing : 0.5 * config.duration;
    const double d = tx - center;
    phi[i] = std::exp(-width * d * d);
  }
  const double total = phi.sum();
  if (total > 0.0) phi /= total;
  return phi;
}

MpKernel build_kernel(const MpConfig& config) {
  validate(config);

  MpKernel k;
  k.config = config;
  const int steps = config.num_steps;
  const int n = config.num_basis;
  const int points = steps + 1;
  const double tau = config.duration;
  const double a = config.alpha / (2.0 * tau);
  const double dt = config.dt();

  k.time.resize(points);
  for (int i = 0; i < points; ++i) k.time[i] = i * dt;
  k.phase.resize(points);
  k.y1.resize(points);
  k.y2.resize(points);
  k.dy1.resize(points);
  k.dy2.resize(points);
  k.q1.resize(points);
  k.q2.resize(points);
  k.dq1.resize(points);
  k.dq2.resize(points);
  for (int i = 0; i < points; ++i) {
    const double t = k.time[i];
    const double decay = std::exp(-a * t);
    const double growth = std::exp(a * t);
    k.phase[i] = phase(config, t);
    k.y1[i] = decay;
    k.y2[i] = t * decay;
    k.dy1[i] = -a * decay;
    k.dy2[i] = (1.0 - a * t) * decay;
    k.q1[i] = (a * t - 1.0) * growth + 1.0;
    k.q2[i] = a * (growth - 1.0);
    k.dq1[i] = a * a * t * growth;
    k.dq2[i] = a * a * growth;
  }

  // p1, p2: cumulative trapezoid on a grid refined by integration_substeps.
  const double scale = config.forcing_gain / (tau * tau);
  auto integrand = [&](double t) -> Eigen::VectorXd {
    return scale * std::exp(a * t) * phase(config, t) * forcing_basis(config, t);
  };
  k.p1 = Eigen::MatrixXd::Zero(n, points);
  k.p2 = Eigen::MatrixXd::Zero(n, points);
  k.dp1.resize(n, points);
  k.dp2.resize(n, points);
  {
    const int sub = config.integration_substeps;
    const double h = dt / sub;
    Eigen::VectorXd acc1 = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd acc2 = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd prev = integrand(0.0);
    k.dp2.col(0) = prev;
    k.dp1.col(0).setZero();
    double t_prev = 0.0;
    for (int i = 1; i < points; ++i) {
      for (int s = 1; s <= sub; ++s) {
        const double t = (i - 1) * dt + s * h;
        Eigen::VectorXd cur = integrand(t);
        acc2 += 0.5 * h * (prev + cur);
        acc1 += 0.5 * h * (t_prev * prev + t * cur);
        prev = std::move(cur);
        t_prev = t;
      }
      k.p1.col(i) = acc1;
      k.p2.col(i) = acc2;
      k.dp2.col(i) = prev;
      k.dp1.col(i) = k.time[i] * prev;
    }
  }

  k.pos_basis.resize(n + 1, points);
  k.vel_basis.resize(n + 1, points);
  for (int i = 0; i < points; ++i) {
    k.pos_basis.col(i).head(n) = k.y2[i] * k.p2.col(i) - k.y1[i] * k.p1.col(i);
    k.pos_basis(n, i) = k.y2[i] * k.q2[i] - k.y1[i] * k.q1[i];
    k.vel_basis.col(i).head(n) = k.dy2[i] * k.p2.col(i) - k.dy1[i] * k.p1.col(i);
    k.vel_basis(n, i) = k.dy2[i] * k.q2[i] - k.dy1[i] * k.q1[i];
  }

  // Boundary at t_b = 0.
  const int b = 0;
  const double y1b = k.y1[b], y2b = k.y2[b], dy1b = k.dy1[b], dy2b = k.dy2[b];
  const double den = y1b * dy2b - y2b * dy1b;
  k.xi1 = (dy2b * k.y1 - dy1b * k.y2) / den;
  k.xi2 = (y1b * k.y2 - y2b * k.y1) / den;
  k.xi3 = (dy1b * k.y2 - dy2b * k.y1) / den;
  k.xi4 = (y2b * k.y1 - y1b * k.y2) / den;
  k.dxi1 = (dy2b * k.dy1 - dy1b * k.dy2) / den;
  k.dxi2 = (y1b * k.dy2 - y2b * k.dy1) / den;
  k.dxi3 = (dy1b * k.dy2 - dy2b * k.dy1) / den;
  k.dxi4 = (y2b * k.dy1 - y1b * k.dy2) / den;

  const Eigen::VectorXd phi_b = k.pos_basis.col(b);
  const Eigen::VectorXd dphi_b = k.vel_basis.col(b);
  k.pos_map.resize(n + 1, points);
  k.vel_map.resize(n + 1, points);
  for (int i = 0; i < points; ++i) {
    k.pos_map.col(i) = k.xi3[i] * phi_b + k.xi4[i] * dphi_b + k.pos_basis.col(i);
    k.vel_map.col(i) = k.dxi3[i] * phi_b + k.dxi4[i] * dphi_b + k.vel_basis.col(i);
  }

  require_finite(k.phase, "phase");
  require_finite(k.p1, "p1");
  require_finite(k.p2, "p2");
  require_finite(k.q1, "q1");
  require_finite(k.q2, "q2");
  require_finite(k.pos_map, "position basis");
  require_finite(k.vel_map, "velocity basis");
  require_finite(k.xi1, "xi1");
  require_finite(k.dxi1, "dxi1");
  return k;
}

Trajectory compute_trajectory(const MpKernel& kernel, const Eigen::Ref<const Eigen::VectorXd>& params,
                              const Eigen::Ref<const Eigen::VectorXd>& boundary_pos,
                              const Eigen::Ref<const Eigen::VectorXd>& boundary_vel) {
  const int dofs = kernel.num_dof();
  const int per_dof = kernel.config.params_per_dof();
  if (params.size() != kernel.num_params()) {
    throw ArgumentError("compute_trajectory: expected " + std::to_string(kernel.num_params()) +
                        " parameters, got " + std::to_string(params.size()));
  }
  if (boundary_pos.size() != dofs || boundary_vel.size() != dofs) {
    throw ArgumentError("compute_trajectory: boundary state must have one entry per DoF");
  }
  Trajectory traj;
  traj.dt = kernel.dt();
  const int points = kernel.num_steps() + 1;
  traj.pos.resize(dofs, points);
  traj.vel.resize(dofs, points);
  for (int d = 0; d < dofs; ++d) {
    const auto w = params.segment(d * per_dof, per_dof);
    traj.pos.row(d) = (kernel.xi1 * boundary_pos[d] + kernel.xi2 * boundary_vel[d]).transpose() +
                      w.transpose() * kernel.pos_map;
    traj.vel.row(d) = (kernel.dxi1 * boundary_pos[d] + kernel.dxi2 * boundary_vel[d]).transpose() +
                      w.transpose() * kernel.vel_map;
  }
  return traj;
}

Eigen::MatrixXd finite_diff_derivatives(const Trajectory& traj, int order) {
  if (order < 1 || order > 3) throw ArgumentError("finite_diff_derivatives: order must be 1, 2 or 3");
  const int points = traj.num_points();
  if (points <= 2 * order) {
    throw ArgumentError("finite_diff_derivatives: need more than " + std::to_string(2 * order) +
                        " points for order " + std::to_string(order));
  }
  if (!(traj.dt > 0.0)) throw ArgumentError("finite_diff_derivatives: dt must be positive");
  const Eigen::MatrixXd& y = traj.pos;
  const double h = traj.dt;
  const int last = points - 1;
  Eigen::MatrixXd out(y.rows(), points);
  switch (order) {
    case 1:
      out.col(0) = (-3.0 * y.col(0) + 4.0 * y.col(1) - y.col(2)) / (2.0 * h);
      for (int i = 1; i < last; ++i) out.col(i) = (y.col(i + 1) - y.col(i - 1)) / (2.0 * h);
      out.col(last) = (3.0 * y.col(last) - 4.0 * y.col(last - 1) + y.col(last - 2)) / (2.0 * h);
      break;
    case 2: {
      const double h2 = h * h;
      out.col(0) = (2.0 * y.col(0) - 5.0 * y.col(1) + 4.0 * y.col(2) - y.col(3)) / h2;
      for (int i = 1; i < last; ++i) out.col(i) = (y.col(i + 1) - 2.0 * y.col(i) + y.col(i - 1)) / h2;
      out.col(last) = (2.0 * y.col(last) - 5.0 * y.col(last - 1) + 4.0 * y.col(last - 2) - y.col(last - 3)) / h2;
      break;
    }
    case 3: {
      const double h3 = h * h * h;
      for (int i = 0; i < 2; ++i) {
        out.col(i) = (-y.col(i) + 3.0 * y.col(i + 1) - 3.0 * y.col(i + 2) + y.col(i + 3)) / h3;
      }
      for (int i = 2; i <= last - 2; ++i) {
        out.col(i) = (y.col(i + 2) - 2.0 * y.col(i + 1) + 2.0 * y.col(i - 1) - y.col(i - 2)) / (2.0 * h3);
      }
      for (int i = last - 1; i <= last; ++i) {
        out.col(i) = (y.col(i) - 3.0 * y.col(i - 1) + 3.0 * y.col(i - 2) - y.col(i - 3)) / h3;
      }
      break;
    }
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,dof,pos,vel\n";
  for (int i = 0; i < traj.num_points(); ++i) {
    for (int d = 0; d < traj.num_dof(); ++d) {
      out << format_double(i * traj.dt) << ',' << d << ',' << format_double(traj.pos(d, i)) << ','
          << format_double(traj.vel(d, i)) << '\n';
    }
  }
}

Trajectory read_trajectory_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  if (table.header != std::vector<std::string>{"t", "dof", "pos", "vel"}) {
    throw ArgumentError("trajectory csv: expected header t,dof,pos,vel");
  }
  int dofs = 0;
  for (const auto& row : table.rows) dofs = std::max(dofs, std::stoi(row[1]) + 1);
  if (dofs == 0 || table.rows.size() % dofs != 0) throw ArgumentError("trajectory csv: ragged rows");
  const int points = static_cast<int>(table.rows.size()) / dofs;
  Trajectory traj;
  traj.pos.resize(dofs, points);
  traj.vel.resize(dofs, points);
  for (int i = 0; i < points; ++i) {
    for (int d = 0; d < dofs; ++d) {
      const auto& row = table.rows[static_cast<std::size_t>(i * dofs + d)];
      if (std::stoi(row[1]) != d) throw ArgumentError("trajectory csv: rows must be ordered by time then dof");
      traj.pos(d, i) = parse_double(row[2]);
      traj.vel(d, i) = parse_double(row[3]);
    }
  }
  // t_1 = 1 * dt is written exactly, so this round-trips bit-for-bit.
  traj.dt = points > 1 ? parse_double(table.rows[static_cast<std::size_t>(dofs)][0]) : 0.0;
  return traj;
}

}  // namespace tce
