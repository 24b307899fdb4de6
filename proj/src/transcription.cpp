#include "ovt/transcription.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace ovt {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double MotionProfile::saturation_time() const {
  if (accel == 0.0) return kInf;
  const double v_target = (accel > 0.0 ? v_cap : -v_cap);
  const double ts = (v_target - v0) / accel;
  return ts > 0.0 ? ts : 0.0;
}

double MotionProfile::v_at(double t) const {
  if (accel == 0.0) return v0;
  const double ts = saturation_time();
  if (t >= ts) return v0 + accel * ts;
  return v0 + accel * t;
}

double MotionProfile::x_at(double t) const {
  if (accel == 0.0) return x0 + v0 * t;
  const double ts = saturation_time();
  if (t <= ts) return x0 + v0 * t + 0.5 * accel * t * t;
  const double xs = x0 + v0 * ts + 0.5 * accel * ts * ts;
  return xs + (v0 + accel * ts) * (t - ts);
}

double MotionProfile::a_at(double t) const {
  if (accel == 0.0) return 0.0;
  return t < saturation_time() ? accel : 0.0;
}

BarrierInstance BarrierInstance::ellipse_front(const EllipseBarrier& e, const KappaPolynomial& k,
                                               const MotionProfile& front, double lane_y_) {
  BarrierInstance b;
  b.shape = Shape::ellipse;
  b.ellipse = e;
  b.kappa = k;
  b.other = front;
  b.lane_y = lane_y_;
  return b;
}

BarrierInstance BarrierInstance::longitudinal_opposing(const LongitudinalBarrier& lb,
                                                       const KappaPolynomial& k,
                                                       const MotionProfile& opposing) {
  BarrierInstance b;
  b.shape = Shape::longitudinal;
  b.longitudinal = lb;
  b.kappa = k;
  b.other = opposing;
  return b;
}

namespace detail {

namespace {

/// Second-order model term for rows whose curvature is tedious to hand-derive
/// (the VL-CBF residuals): central differences of the analytic gradient over
/// the row's support. The trailing `ndt` support entries are the time-step
/// prefix; the row depends on them only through their sum, so one aggregate
/// direction covers the whole block (the dt-dt block is a constant times the
/// all-ones matrix and the local-dt blocks are rank one).
void attach_fd_hess(nlp::Row& row, int num_vars, int ndt = 0) {
  const auto eval = row.eval;
  const std::vector<int> support = row.support;
  const std::size_t nlocal = support.size() - static_cast<std::size_t>(ndt);
  row.hess = [eval, support, num_vars, ndt, nlocal](const double* z, double w,
                                                    nlp::HessAccum& acc) {
    thread_local std::vector<double> zbuf, gp, gm;
    zbuf.assign(z, z + num_vars);
    gp.resize(support.size());
    gm.resize(support.size());

    for (std::size_t j = 0; j < nlocal; ++j) {
      const int vj = support[j];
      const double h = 1e-6 * std::max(1.0, std::abs(zbuf[static_cast<std::size_t>(vj)]));
      const double saved = zbuf[static_cast<std::size_t>(vj)];
      zbuf[static_cast<std::size_t>(vj)] = saved + h;
      eval(zbuf.data(), gp.data());
      zbuf[static_cast<std::size_t>(vj)] = saved - h;
      eval(zbuf.data(), gm.data());
      zbuf[static_cast<std::size_t>(vj)] = saved;
      const double inv = w / (2.0 * h);
      for (std::size_t a = 0; a <= j; ++a) {
        const double v = (gp[a] - gm[a]) * inv;
        if (v != 0.0) acc.add(support[a], vj, v);
      }
    }
    if (ndt <= 0) return;

    // Aggregate node-time direction: bump every prefix step together.
    const double h = 1e-7;
    for (std::size_t j = nlocal; j < support.size(); ++j)
      zbuf[static_cast<std::size_t>(support[j])] += h;
    eval(zbuf.data(), gp.data());
    for (std::size_t j = nlocal; j < support.size(); ++j)
      zbuf[static_cast<std::size_t>(support[j])] -= 2.0 * h;
    eval(zbuf.data(), gm.data());
    for (std::size_t j = nlocal; j < support.size(); ++j)
      zbuf[static_cast<std::size_t>(support[j])] += h;
    const double inv = w / (2.0 * h * ndt);
    for (std::size_t a = 0; a < nlocal; ++a) {
      const double v = (gp[a] - gm[a]) * inv;
      if (v == 0.0) continue;
      for (std::size_t j = nlocal; j < support.size(); ++j) acc.add(support[a], support[j], v);
    }
    const double htt = (gp[nlocal] - gm[nlocal]) * inv;  // any dt slot: d2/dt2
    if (htt != 0.0) {
      for (std::size_t j = nlocal; j < support.size(); ++j)
        for (std::size_t k = nlocal; k <= j; ++k) acc.add(support[k], support[j], htt);
    }
  };
}

/// Everything row closures need, shared and immutable.
struct BuildData {
  EgoState ego0;
  VehicleParams params;
  HorizonSpec horizon;
  GoalSpec goal;
  std::vector<BarrierInstance> barriers;
  std::optional<OpposingCoupling> opposing;
  Layout layout;

  void ego_node(const double* z, int i, double out[4]) const {
    if (i == 0) {
      out[0] = ego0.x;
      out[1] = ego0.y;
      out[2] = ego0.psi;
      out[3] = ego0.v;
    } else {
      const int base = layout.x(i, 0);
      out[0] = z[base];
      out[1] = z[base + 1];
      out[2] = z[base + 2];
      out[3] = z[base + 3];
    }
  }

  void opp_node(const double* z, int i, double out[2]) const {
    if (i == 0) {
      out[0] = opposing->initial.x;
      out[1] = opposing->initial.v;
    } else {
      const int base = layout.xo(i, 0);
      out[0] = z[base];
      out[1] = z[base + 1];
    }
  }

  double node_time(const double* z, int i) const {
    double t = 0.0;
    for (int j = 0; j < i; ++j) t += z[layout.dt(j)];
    return t;
  }
};

using DataPtr = std::shared_ptr<const BuildData>;

nlp::Row make_ego_defect_row(const DataPtr& d, int i, int c) {
  nlp::Row row;
  row.kind = nlp::RowKind::equality;
  row.tag = nlp::RowTag::defect_ego;
  int s_xn = -1, s_xp = -1, s_u = -1, s_dt = -1;
  s_xn = static_cast<int>(row.support.size());
  row.support.push_back(d->layout.x(i + 1, c));
  if (i > 0) {
    s_xp = static_cast<int>(row.support.size());
    for (int k = 0; k < 4; ++k) row.support.push_back(d->layout.x(i, k));
  }
  s_u = static_cast<int>(row.support.size());
  row.support.push_back(d->layout.u(i, 0));
  row.support.push_back(d->layout.u(i, 1));
  s_dt = static_cast<int>(row.support.size());
  row.support.push_back(d->layout.dt(i));

  row.eval = [d, i, c, s_xn, s_xp, s_u, s_dt](const double* z, double* g) -> double {
    double xs[4];
    d->ego_node(z, i, xs);
    const double al = z[d->layout.u(i, 0)];
    const double be = z[d->layout.u(i, 1)];
    const double dt = z[d->layout.dt(i)];
    const double co = std::cos(xs[2]);
    const double sn = std::sin(xs[2]);
    const double v = xs[3];
    const double lr = d->params.l_r;

    double f = 0.0, df_dpsi = 0.0, df_dv = 0.0, df_dal = 0.0, df_dbe = 0.0;
    switch (c) {
      case 0:
        f = v * co - v * sn * be;
        df_dpsi = -v * sn - v * co * be;
        df_dv = co - sn * be;
        df_dbe = -v * sn;
        break;
      case 1:
        f = v * sn + v * co * be;
        df_dpsi = v * co - v * sn * be;
        df_dv = sn + co * be;
        df_dbe = v * co;
        break;
      case 2:
        f = v * be / lr;
        df_dv = be / lr;
        df_dbe = v / lr;
        break;
      case 3:
        f = al;
        df_dal = 1.0;
        break;
    }
    const double xn = z[d->layout.x(i + 1, c)];
    const double r = xn - xs[c] - dt * f;
    if (g) {
      g[s_xn] = 1.0;
      if (s_xp >= 0) {
        for (int k = 0; k < 4; ++k) g[s_xp + k] = 0.0;
        g[s_xp + c] -= 1.0;
        g[s_xp + 2] -= dt * df_dpsi;
        g[s_xp + 3] -= dt * df_dv;
      }
      g[s_u] = -dt * df_dal;
      g[s_u + 1] = -dt * df_dbe;
      g[s_dt] = -f;
    }
    return r;
  };

  // Exact curvature of the bilinear defect: cross terms between dt and the
  // state/input channels plus dt times the model's own second derivatives.
  row.hess = [d, i, c](const double* z, double w, nlp::HessAccum& acc) {
    double xs[4];
    d->ego_node(z, i, xs);
    const double al = z[d->layout.u(i, 0)];
    const double be = z[d->layout.u(i, 1)];
    const double dt = z[d->layout.dt(i)];
    const double co = std::cos(xs[2]);
    const double sn = std::sin(xs[2]);
    const double v = xs[3];
    const double lr = d->params.l_r;
    const int vdt = d->layout.dt(i);
    const int vpsi = d->layout.x(i, 2), vv = d->layout.x(i, 3);
    const int val = d->layout.u(i, 0), vbe = d->layout.u(i, 1);

    double df_dpsi = 0, df_dv = 0, df_dal = 0, df_dbe = 0;
    double fpp = 0, fpv = 0, fpb = 0, fvb = 0;  // psi-psi, psi-v, psi-beta, v-beta
    switch (c) {
      case 0:
        df_dpsi = -v * sn - v * co * be;
        df_dv = co - sn * be;
        df_dbe = -v * sn;
        fpp = -v * co + v * sn * be;
        fpv = -sn - co * be;
        fpb = -v * co;
        fvb = -sn;
        break;
      case 1:
        df_dpsi = v * co - v * sn * be;
        df_dv = sn + co * be;
        df_dbe = v * co;
        fpp = -v * sn - v * co * be;
        fpv = co - sn * be;
        fpb = -v * sn;
        fvb = co;
        break;
      case 2:
        df_dv = be / lr;
        df_dbe = v / lr;
        fvb = 1.0 / lr;
        break;
      case 3:
        df_dal = 1.0;
        break;
    }
    // (dt, .) cross terms exist for node 0 too only through u; state cross
    // terms vanish when the node state is fixed.
    if (i > 0) {
      if (df_dpsi != 0) acc.add(vdt, vpsi, -w * df_dpsi);
      if (df_dv != 0) acc.add(vdt, vv, -w * df_dv);
      if (fpp != 0) acc.add(vpsi, vpsi, -w * dt * fpp);
      if (fpv != 0) acc.add(vpsi, vv, -w * dt * fpv);
      if (fpb != 0) acc.add(vpsi, vbe, -w * dt * fpb);
      if (fvb != 0) acc.add(vv, vbe, -w * dt * fvb);
    }
    if (df_dal != 0) acc.add(vdt, val, -w * df_dal);
    if (df_dbe != 0) acc.add(vdt, vbe, -w * df_dbe);
  };
  return row;
}

nlp::Row make_opp_defect_row(const DataPtr& d, int i, int c) {
  nlp::Row row;
  row.kind = nlp::RowKind::equality;
  row.tag = nlp::RowTag::defect_opp;
  const int s_xn = 0;
  row.support.push_back(d->layout.xo(i + 1, c));
  int s_xp = -1;
  if (i > 0) {
    s_xp = static_cast<int>(row.support.size());
    row.support.push_back(d->layout.xo(i, 0));
    row.support.push_back(d->layout.xo(i, 1));
  }
  const int s_u = static_cast<int>(row.support.size());
  row.support.push_back(d->layout.uo(i));
  const int s_dt = static_cast<int>(row.support.size());
  row.support.push_back(d->layout.dt(i));

  row.eval = [d, i, c, s_xn, s_xp, s_u, s_dt](const double* z, double* g) -> double {
    double xo[2];
    d->opp_node(z, i, xo);
    const double uo = z[d->layout.uo(i)];
    const double dt = z[d->layout.dt(i)];
    const double f = (c == 0) ? xo[1] : uo;
    const double r = z[d->layout.xo(i + 1, c)] - xo[c] - dt * f;
    if (g) {
      g[s_xn] = 1.0;
      if (s_xp >= 0) {
        g[s_xp] = 0.0;
        g[s_xp + 1] = 0.0;
        g[s_xp + c] -= 1.0;
        if (c == 0) g[s_xp + 1] -= dt;
      }
      g[s_u] = (c == 1) ? -dt : 0.0;
      g[s_dt] = -f;
    }
    return r;
  };
  row.hess = [d, i, c](const double*, double w, nlp::HessAccum& acc) {
    if (c == 0) {
      if (i > 0) acc.add(d->layout.dt(i), d->layout.xo(i, 1), -w);
    } else {
      acc.add(d->layout.dt(i), d->layout.uo(i), -w);
    }
  };
  return row;
}

/// VL-CBF residual row for an uncoupled barrier at step i, or the baseline's
/// plain h >= 0 row at node i (dc = true).
nlp::Row make_barrier_row(const DataPtr& d, int i, const BarrierInstance& bi, bool dc) {
  nlp::Row row;
  row.kind = nlp::RowKind::inequality_ge;
  row.tag = nlp::RowTag::cbf;
  int s_x = -1;
  if (i > 0) {
    s_x = static_cast<int>(row.support.size());
    for (int k = 0; k < 4; ++k) row.support.push_back(d->layout.x(i, k));
  }
  int s_u = -1;
  if (!dc) {
    s_u = static_cast<int>(row.support.size());
    row.support.push_back(d->layout.u(i, 0));
    row.support.push_back(d->layout.u(i, 1));
  }
  const int s_dt0 = static_cast<int>(row.support.size());
  for (int j = 0; j < i; ++j) row.support.push_back(d->layout.dt(j));

  row.eval = [d, i, bi, dc, s_x, s_u, s_dt0](const double* z, double* g) -> double {
    double xs[4];
    d->ego_node(z, i, xs);
    const double t_i = d->node_time(z, i);
    const double xf = bi.other.x_at(t_i);
    const double vf = bi.other.v_at(t_i);
    const double af = bi.other.a_at(t_i);
    const double x = xs[0], y = xs[1], psi = xs[2], v = xs[3];
    const double co = std::cos(psi);
    const double sn = std::sin(psi);

    if (bi.shape == BarrierInstance::Shape::ellipse) {
      const double b1 = bi.ellipse.beta1, b2 = bi.ellipse.beta2, b3 = bi.ellipse.beta3;
      const double dx = x - xf;
      const double dy = y - bi.lane_y;
      const double h = b1 * dx * dx + b2 * dy * dy - b3;
      if (dc) {
        if (g) {
          if (s_x >= 0) {
            g[s_x] = 2.0 * b1 * dx;
            g[s_x + 1] = 2.0 * b2 * dy;
            g[s_x + 2] = 0.0;
            g[s_x + 3] = 0.0;
          }
          const double dh_dt = -2.0 * b1 * dx * vf;
          for (int j = 0; j < i; ++j) g[s_dt0 + j] = dh_dt;
        }
        return h;
      }
      const double be = z[d->layout.u(i, 1)];
      const double res = 2.0 * b1 * dx * (v * co - vf) + 2.0 * b2 * dy * v * sn +
                         be * (-2.0 * b1 * dx * v * sn + 2.0 * b2 * dy * v * co) +
                         kappa_eval(bi.kappa, h);
      if (g) {
        const double kp = kappa_derivative(bi.kappa, h);
        const double gx = 2.0 * b1 * (v * co - vf) - 2.0 * b1 * be * v * sn + kp * 2.0 * b1 * dx;
        if (s_x >= 0) {
          g[s_x] = gx;
          g[s_x + 1] = 2.0 * b2 * v * sn + 2.0 * b2 * be * v * co + kp * 2.0 * b2 * dy;
          g[s_x + 2] = -2.0 * b1 * dx * v * sn + 2.0 * b2 * dy * v * co +
                       be * (-2.0 * b1 * dx * v * co - 2.0 * b2 * dy * v * sn);
          g[s_x + 3] = 2.0 * b1 * dx * co + 2.0 * b2 * dy * sn +
                       be * (-2.0 * b1 * dx * sn + 2.0 * b2 * dy * co);
        }
        g[s_u] = 0.0;
        g[s_u + 1] = -2.0 * b1 * dx * v * sn + 2.0 * b2 * dy * v * co;
        const double dres_dt = -gx * vf - 2.0 * b1 * dx * af;
        for (int j = 0; j < i; ++j) g[s_dt0 + j] = dres_dt;
      }
      return res;
    }

    // Longitudinal braking-distance barrier against the scheduled vehicle.
    const double a_l = bi.longitudinal.a_l;
    const double ve = v * co;
    const double dv = ve - vf;
    const double h = xf - x - dv * dv / (2.0 * a_l);
    if (dc) {
      if (g) {
        if (s_x >= 0) {
          g[s_x] = -1.0;
          g[s_x + 1] = 0.0;
          g[s_x + 2] = dv * v * sn / a_l;
          g[s_x + 3] = -dv * co / a_l;
        }
        const double dh_dt = vf + dv * af / a_l;
        for (int j = 0; j < i; ++j) g[s_dt0 + j] = dh_dt;
      }
      return h;
    }
    const double al = z[d->layout.u(i, 0)];
    const double be = z[d->layout.u(i, 1)];
    const double lr = d->params.l_r;
    const double ae_x = al * co - (v * v / lr) * be * sn;
    const double A = ae_x - af;
    // x_e dot = v cos psi - v beta sin psi, hence the v*be*sn term.
    const double res = (vf - ve) + v * be * sn - dv * A / a_l + kappa_eval(bi.kappa, h);
    if (g) {
      const double kp = kappa_derivative(bi.kappa, h);
      const double dve_dpsi = -v * sn;
      const double dve_dv = co;
      const double dae_dpsi = -al * sn - (v * v / lr) * be * co;
      const double dae_dv = -(2.0 * v / lr) * be * sn;
      const double dae_dbe = -(v * v / lr) * sn;
      if (s_x >= 0) {
        g[s_x] = kp * (-1.0);
        g[s_x + 1] = 0.0;
        g[s_x + 2] = -dve_dpsi + v * be * co - (dve_dpsi * A + dv * dae_dpsi) / a_l +
                     kp * (-dv * dve_dpsi / a_l);
        g[s_x + 3] = -dve_dv + be * sn - (dve_dv * A + dv * dae_dv) / a_l +
                     kp * (-dv * co / a_l);
      }
      g[s_u] = -dv * co / a_l;
      g[s_u + 1] = v * sn - dv * dae_dbe / a_l;
      const double dres_dvo = 1.0 + A / a_l + kp * dv / a_l;
      const double dres_dxo = kp;
      const double dres_dt = dres_dxo * vf + dres_dvo * af;
      for (int j = 0; j < i; ++j) g[s_dt0 + j] = dres_dt;
    }
    return res;
  };
  return row;
}

/// Coupled VL-CBF row at step i: the shared derivative of the longitudinal
/// barrier between the ego and the jointly-predicted opposing vehicle, rated
/// by the given polynomial (Lambda_eo for the ego row, Lambda_oe for the
/// opposing row).
nlp::Row make_coupled_row(const DataPtr& d, int i, const KappaPolynomial& kappa, bool ego_row) {
  nlp::Row row;
  row.kind = nlp::RowKind::inequality_ge;
  row.tag = ego_row ? nlp::RowTag::cbf_coupled_eo : nlp::RowTag::cbf_coupled_oe;
  int s_x = -1, s_xo = -1;
  if (i > 0) {
    s_x = static_cast<int>(row.support.size());
    for (int k = 0; k < 4; ++k) row.support.push_back(d->layout.x(i, k));
  }
  const int s_u = static_cast<int>(row.support.size());
  row.support.push_back(d->layout.u(i, 0));
  row.support.push_back(d->layout.u(i, 1));
  if (i > 0) {
    s_xo = static_cast<int>(row.support.size());
    row.support.push_back(d->layout.xo(i, 0));
    row.support.push_back(d->layout.xo(i, 1));
  }
  const int s_uo = static_cast<int>(row.support.size());
  row.support.push_back(d->layout.uo(i));

  row.eval = [d, i, kappa, s_x, s_u, s_xo, s_uo](const double* z, double* g) -> double {
    double xs[4], xo[2];
    d->ego_node(z, i, xs);
    d->opp_node(z, i, xo);
    const double al = z[d->layout.u(i, 0)];
    const double be = z[d->layout.u(i, 1)];
    const double uo = z[d->layout.uo(i)];
    const double a_l = d->opposing->barrier.a_l;
    const double lr = d->params.l_r;
    const double v = xs[3];
    const double co = std::cos(xs[2]);
    const double sn = std::sin(xs[2]);
    const double ve = v * co;
    const double dv = ve - xo[1];
    const double h = xo[0] - xs[0] - dv * dv / (2.0 * a_l);
    const double ae_x = al * co - (v * v / lr) * be * sn;
    const double A = ae_x - uo;
    // x_e dot = v cos psi - v beta sin psi, hence the v*be*sn term.
    const double res = (xo[1] - ve) + v * be * sn - dv * A / a_l + kappa_eval(kappa, h);
    if (g) {
      const double kp = kappa_derivative(kappa, h);
      const double dve_dpsi = -v * sn;
      const double dae_dpsi = -al * sn - (v * v / lr) * be * co;
      const double dae_dv = -(2.0 * v / lr) * be * sn;
      const double dae_dbe = -(v * v / lr) * sn;
      if (s_x >= 0) {
        g[s_x] = -kp;
        g[s_x + 1] = 0.0;
        g[s_x + 2] = -dve_dpsi + v * be * co - (dve_dpsi * A + dv * dae_dpsi) / a_l +
                     kp * (-dv * dve_dpsi / a_l);
        g[s_x + 3] = -co + be * sn - (co * A + dv * dae_dv) / a_l + kp * (-dv * co / a_l);
      }
      g[s_u] = -dv * co / a_l;
      g[s_u + 1] = v * sn - dv * dae_dbe / a_l;
      if (s_xo >= 0) {
        g[s_xo] = kp;
        g[s_xo + 1] = 1.0 + A / a_l + kp * dv / a_l;
      }
      g[s_uo] = dv / a_l;
    }
    return res;
  };
  return row;
}

nlp::Row make_terminal_x_row(const DataPtr& d) {
  nlp::Row row;
  row.kind = nlp::RowKind::inequality_ge;
  row.tag = nlp::RowTag::terminal;
  row.support.push_back(d->layout.x(d->horizon.n, 0));
  row.eval = [d](const double* z, double* g) -> double {
    if (g) g[0] = 1.0;
    return z[d->layout.x(d->horizon.n, 0)] - d->goal.x_g;
  };
  return row;
}

nlp::Row make_terminal_y_row(const DataPtr& d) {
  nlp::Row row;
  row.kind = nlp::RowKind::inequality_ge;
  row.tag = nlp::RowTag::terminal;
  row.support.push_back(d->layout.x(d->horizon.n, 1));
  row.eval = [d](const double* z, double* g) -> double {
    const double dy = z[d->layout.x(d->horizon.n, 1)] - d->goal.y_g;
    if (g) g[0] = -2.0 * dy;
    return d->goal.eps_y * d->goal.eps_y - dy * dy;
  };
  row.hess = [d](const double*, double w, nlp::HessAccum& acc) {
    const int vy = d->layout.x(d->horizon.n, 1);
    acc.add(vy, vy, -2.0 * w);
  };
  return row;
}

double barrier_value_at_start(const BarrierInstance& bi, const EgoState& ego) {
  if (bi.shape == BarrierInstance::Shape::ellipse) {
    const double dx = ego.x - bi.other.x0;
    const double dy = ego.y - bi.lane_y;
    return bi.ellipse.beta1 * dx * dx + bi.ellipse.beta2 * dy * dy - bi.ellipse.beta3;
  }
  const double dv = ego.v * std::cos(ego.psi) - bi.other.v0;
  return bi.other.x0 - ego.x - dv * dv / (2.0 * bi.longitudinal.a_l);
}

}  // namespace

TranscriptionProblem build_generic(const EgoState& ego0, const MotionProfile& front,
                                   const GoalSpec& goal, const HorizonSpec& horizon,
                                   const VehicleParams& params,
                                   const std::vector<BarrierInstance>& barriers,
                                   const std::optional<OpposingCoupling>& opposing,
                                   const BuildOptions& opts, SafetyRowMode mode) {
  if (horizon.n < 2) throw std::invalid_argument("build_problem: horizon N must be >= 2");
  if (!(horizon.dt_min > 0.0 && horizon.dt_min < horizon.t_max))
    throw std::invalid_argument("build_problem: need 0 < dt_min < t_max");
  if (!(goal.eps_y > 0.0)) throw std::invalid_argument("build_problem: eps_y must be > 0");
  for (const auto& b : barriers) {
    if (!b.kappa.valid()) throw std::invalid_argument("build_problem: invalid kappa polynomial");
    if (b.shape == BarrierInstance::Shape::ellipse) {
      if (b.ellipse.semi_axis_a() <= 0.5 * params.length ||
          b.ellipse.semi_axis_b() <= 0.5 * params.width)
        throw std::invalid_argument("build_problem: ellipse must clear the vehicle body");
    } else if (!(b.longitudinal.a_l > 0.0)) {
      throw std::invalid_argument("build_problem: a_l must be > 0");
    }
  }
  if (opposing) {
    if (!opposing->kappa_eo.valid() || !opposing->kappa_oe.valid())
      throw std::invalid_argument("build_problem: invalid opposing kappa polynomial");
  }

  if (opts.check_initial_levels) {
    for (const auto& b : barriers) {
      const double lvl = level_of_lambda0(b.kappa).epsilon;
      if (barrier_value_at_start(b, ego0) < lvl - 1e-9)
        throw InitialInfeasibility("initial infeasibility - overtaking must not start");
    }
    if (opposing) {
      const double dv = ego0.v * std::cos(ego0.psi) - opposing->initial.v;
      const double h = opposing->initial.x - ego0.x - dv * dv / (2.0 * opposing->barrier.a_l);
      if (h < level_of_lambda0(opposing->kappa_eo).epsilon - 1e-9 ||
          h < level_of_lambda0(opposing->kappa_oe).epsilon - 1e-9)
        throw InitialInfeasibility("initial infeasibility - overtaking must not start");
    }
  }

  auto data = std::make_shared<BuildData>();
  data->ego0 = ego0;
  data->params = params;
  data->horizon = horizon;
  data->goal = goal;
  data->barriers = barriers;
  data->opposing = opposing;

  const int N = horizon.n;
  Layout& L = data->layout;
  L.n_nodes = N;
  L.coupled = opposing.has_value();
  L.off_x = 0;
  L.off_u = 4 * N;
  L.off_dt = 6 * N;
  L.num_vars = 7 * N;
  if (opposing) {
    L.off_xo = 7 * N;
    L.off_uo = 9 * N;
    L.num_vars = 10 * N;
  }

  TranscriptionProblem p;
  p.layout_ = L;
  p.horizon_ = horizon;
  p.goal_ = goal;
  p.ego0_ = ego0;
  p.params_ = params;
  p.front_ = front;
  p.barriers_ = barriers;
  p.opposing_ = opposing;

  nlp::NlpProblem& q = p.nlp_;
  q.n = L.num_vars;
  q.cost_grad = Eigen::VectorXd::Zero(q.n);
  for (int i = 0; i < N; ++i) q.cost_grad[L.dt(i)] = 1.0;

  q.lb = Eigen::VectorXd::Constant(q.n, -kInf);
  q.ub = Eigen::VectorXd::Constant(q.n, kInf);
  // Typical magnitudes, used by the solver as its regularization metric.
  q.var_scale = Eigen::VectorXd::Ones(q.n);
  for (int i = 1; i <= N; ++i) {
    q.var_scale[L.x(i, 0)] = 20.0;
    q.var_scale[L.x(i, 1)] = 2.0;
    q.var_scale[L.x(i, 2)] = 0.5;
    q.var_scale[L.x(i, 3)] = 10.0;
  }
  for (int i = 0; i < N; ++i) {
    q.var_scale[L.u(i, 0)] = params.alpha_max;
    q.var_scale[L.u(i, 1)] = std::max(0.1, params.beta_max);
    q.var_scale[L.dt(i)] = 0.1;
  }
  if (opposing) {
    for (int i = 1; i <= N; ++i) {
      q.var_scale[L.xo(i, 0)] = 20.0;
      q.var_scale[L.xo(i, 1)] = 10.0;
    }
    for (int i = 0; i < N; ++i) q.var_scale[L.uo(i)] = opposing->input_limit;
  }
  for (int i = 1; i <= N; ++i) {
    q.lb[L.x(i, 1)] = opts.state_box.y_min;
    q.ub[L.x(i, 1)] = opts.state_box.y_max;
    q.lb[L.x(i, 2)] = opts.state_box.psi_min;
    q.ub[L.x(i, 2)] = opts.state_box.psi_max;
    q.lb[L.x(i, 3)] = params.v_min;
    q.ub[L.x(i, 3)] = params.v_max;
  }
  for (int i = 0; i < N; ++i) {
    q.lb[L.u(i, 0)] = -params.alpha_max;
    q.ub[L.u(i, 0)] = params.alpha_max;
    q.lb[L.u(i, 1)] = -params.beta_max;
    q.ub[L.u(i, 1)] = params.beta_max;
    q.lb[L.dt(i)] = horizon.dt_min;
    q.ub[L.dt(i)] = horizon.t_max;
  }
  if (opposing) {
    for (int i = 0; i < N; ++i) {
      q.lb[L.uo(i)] = -opposing->input_limit;
      q.ub[L.uo(i)] = opposing->input_limit;
    }
  }

  ProblemCounts& cnt = p.counts_;
  cnt.defect_blocks = N;
  cnt.input_boxes = N;
  cnt.state_boxes = N;
  cnt.dt_bounds = N;

  for (int i = 0; i < N; ++i)
    for (int c = 0; c < 4; ++c) q.rows.push_back(make_ego_defect_row(data, i, c));

  for (const auto& bi : barriers) {
    if (mode == SafetyRowMode::vlcbf) {
      for (int i = 0; i < N; ++i) {
        nlp::Row row = make_barrier_row(data, i, bi, false);
        attach_fd_hess(row, L.num_vars, i);
        q.rows.push_back(std::move(row));
      }
    } else {
      for (int i = 1; i <= N; ++i) {
        nlp::Row row = make_barrier_row(data, i, bi, true);
        attach_fd_hess(row, L.num_vars, i);
        q.rows.push_back(std::move(row));
      }
    }
    cnt.cbf_rows += N;
  }

  q.rows.push_back(make_terminal_x_row(data));
  q.rows.push_back(make_terminal_y_row(data));
  cnt.terminal_rows = 2;

  if (opposing) {
    for (int i = 0; i < N; ++i)
      for (int c = 0; c < 2; ++c) q.rows.push_back(make_opp_defect_row(data, i, c));
    cnt.opp_defect_blocks = N;
    cnt.opp_input_boxes = N;
    for (int i = 0; i < N; ++i) {
      nlp::Row eo = make_coupled_row(data, i, opposing->kappa_eo, true);
      nlp::Row oe = make_coupled_row(data, i, opposing->kappa_oe, false);
      attach_fd_hess(eo, L.num_vars);
      attach_fd_hess(oe, L.num_vars);
      q.rows.push_back(std::move(eo));
      q.rows.push_back(std::move(oe));
    }
    cnt.coupled_cbf_rows = 2 * N;
  }

  // Row scaling fixed from the canonical cold start so a problem is the same
  // object no matter what warm start later solves it.
  const Eigen::VectorXd z0 = p.initial_guess();
  std::vector<double> grad(64);
  for (auto& r : q.rows) {
    grad.resize(std::max(grad.size(), r.support.size()));
    r.eval(z0.data(), grad.data());
    double gmax = 0.0;
    for (std::size_t j = 0; j < r.support.size(); ++j) gmax = std::max(gmax, std::abs(grad[j]));
    r.scale = 1.0 / std::max(1.0, gmax);
  }
  return p;
}

}  // namespace detail

TranscriptionProblem build_problem(const EgoState& ego0, const MotionProfile& front,
                                   const GoalSpec& goal, const HorizonSpec& horizon,
                                   const VehicleParams& params,
                                   const std::vector<BarrierInstance>& barriers,
                                   const std::optional<OpposingCoupling>& opposing,
                                   const BuildOptions& opts) {
  return detail::build_generic(ego0, front, goal, horizon, params, barriers, opposing, opts,
                               detail::SafetyRowMode::vlcbf);
}

Eigen::VectorXd TranscriptionProblem::initial_guess() const {
  const int N = horizon_.n;
  const Layout& L = layout_;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(L.num_vars);

  // Straight-line rollout with a bang-bang speed profile toward the goal, so
  // the cold start already satisfies the defects exactly and roughly meets
  // the terminal row.
  const double dist = goal_.x_g - ego0_.x;
  double t_nom = 1.0;
  if (dist > 0.0) {
    const double a = std::max(0.5, params_.alpha_max);
    const double t_accel = std::max(0.0, (params_.v_max - ego0_.v) / a);
    const double d_accel = ego0_.v * t_accel + 0.5 * a * t_accel * t_accel;
    if (d_accel >= dist) {
      t_nom = (-ego0_.v + std::sqrt(ego0_.v * ego0_.v + 2.0 * a * dist)) / a;
    } else {
      t_nom = t_accel + (dist - d_accel) / std::max(1.0, params_.v_max);
    }
    t_nom = std::clamp(1.05 * t_nom, 0.2, N * horizon_.t_max);
  }
  const double dt0 = std::clamp(t_nom / N, horizon_.dt_min, horizon_.t_max);

  // Lateral template: when an ellipse barrier sits ahead, rough in a swerve
  // around it so the solver starts near the feasible homotopy class instead
  // of inside the obstacle's shadow.
  const BarrierInstance* ellipse = nullptr;
  for (const auto& b : barriers_)
    if (b.shape == BarrierInstance::Shape::ellipse) {
      ellipse = &b;
      break;
    }

  EgoState s = ego0_;
  double t_acc = 0.0;
  for (int i = 0; i < N; ++i) {
    double alpha = 0.0;
    if (dist > 0.0 && s.v < params_.v_max) {
      alpha = std::min(params_.alpha_max, (params_.v_max - s.v) / dt0);
    }
    double beta = 0.0;
    if (ellipse) {
      const double a_ax = ellipse->ellipse.semi_axis_a();
      const double b_ax = ellipse->ellipse.semi_axis_b();
      const double xf = ellipse->other.x_at(t_acc);
      double y_ref = goal_.y_g;
      if (s.x > xf - 3.0 * a_ax && s.x < xf + 1.5 * a_ax)
        y_ref = ellipse->lane_y + 1.2 * b_ax + 0.3;
      const double psi_des = std::clamp(0.8 * (y_ref - s.y) / std::max(s.v, 1.0), -0.3, 0.3);
      beta = std::clamp(1.5 * (psi_des - s.psi), -params_.beta_max, params_.beta_max);
    }
    const EgoInput u{alpha, beta};
    z[L.dt(i)] = dt0;
    z[L.u(i, 0)] = alpha;
    z[L.u(i, 1)] = beta;
    s = step_euler(s, u, params_, dt0);
    t_acc += dt0;
    z[L.x(i + 1, 0)] = s.x;
    z[L.x(i + 1, 1)] = s.y;
    z[L.x(i + 1, 2)] = s.psi;
    z[L.x(i + 1, 3)] = s.v;
  }
  if (opposing_) {
    PointState o = opposing_->initial;
    for (int i = 0; i < N; ++i) {
      o = step_euler(o, PointInput{0.0}, dt0);
      z[L.xo(i + 1, 0)] = o.x;
      z[L.xo(i + 1, 1)] = o.v;
    }
  }
  return z;
}

TranscriptionProblem::Decoded TranscriptionProblem::decode(const Eigen::VectorXd& z) const {
  Decoded out;
  const int N = horizon_.n;
  out.ego.resize(N + 1);
  out.inputs.resize(N);
  out.dts.resize(N);
  out.ego[0] = ego0_;
  for (int i = 1; i <= N; ++i)
    out.ego[i] = EgoState{z[layout_.x(i, 0)], z[layout_.x(i, 1)], z[layout_.x(i, 2)],
                          z[layout_.x(i, 3)]};
  for (int i = 0; i < N; ++i) {
    out.inputs[i] = EgoInput{z[layout_.u(i, 0)], z[layout_.u(i, 1)]};
    out.dts[i] = z[layout_.dt(i)];
  }
  if (opposing_) {
    out.opposing.resize(N + 1);
    out.opposing_inputs.resize(N);
    out.opposing[0] = opposing_->initial;
    for (int i = 1; i <= N; ++i)
      out.opposing[i] = PointState{z[layout_.xo(i, 0)], z[layout_.xo(i, 1)]};
    for (int i = 0; i < N; ++i) out.opposing_inputs[i] = PointInput{z[layout_.uo(i)]};
  }
  return out;
}

void TranscriptionProblem::dump(std::ostream& os) const {
  os << "tocbf-nlp-dump v1\n";
  os << "vars " << layout_.num_vars << " nodes " << layout_.n_nodes << " coupled "
     << (layout_.coupled ? 1 : 0) << "\n";
  os << "layout off_x " << layout_.off_x << " off_u " << layout_.off_u << " off_dt "
     << layout_.off_dt << " off_xo " << layout_.off_xo << " off_uo " << layout_.off_uo << "\n";
  os << "objective sum_dt\n";
  os << "bounds\n";
  for (int i = 0; i < layout_.num_vars; ++i)
    os << "  " << i << " " << nlp_.lb[i] << " " << nlp_.ub[i] << "\n";
  os << "rows " << nlp_.rows.size() << "\n";
  for (std::size_t k = 0; k < nlp_.rows.size(); ++k) {
    const auto& r = nlp_.rows[k];
    os << "  " << k << " " << (r.kind == nlp::RowKind::equality ? "eq" : "ge") << " tag "
       << static_cast<int>(r.tag) << " scale " << r.scale << " support";
    for (int s : r.support) os << " " << s;
    os << "\n";
  }
}

bool SolveReport::same_numerics(const SolveReport& o) const {
  if (status != o.status || iterations != o.iterations) return false;
  if (objective != o.objective || max_violation != o.max_violation) return false;
  if (z.size() != o.z.size()) return false;
  for (int i = 0; i < z.size(); ++i)
    if (z[i] != o.z[i]) return false;
  return true;
}

SolveReport solve(const TranscriptionProblem& p, const WarmStart* warm,
                  const nlp::SolverOptions& sopts) {
  const Eigen::VectorXd z0 =
      (warm && warm->z.size() == p.nlp().n) ? warm->z : p.initial_guess();
  const Eigen::VectorXd mult0 = (warm && warm->multipliers.size() ==
                                             static_cast<Eigen::Index>(p.nlp().rows.size()))
                                    ? warm->multipliers
                                    : Eigen::VectorXd();
  const nlp::SolveResult res = nlp::solve_nlp(p.nlp(), z0, sopts, mult0);

  SolveReport rep;
  rep.status = res.status;
  rep.objective = res.objective;
  rep.trajectory = p.decode(res.z);
  rep.max_violation = res.max_violation;
  rep.stationarity = res.stationarity;
  rep.iterations = res.iterations;
  rep.wall_ms = res.wall_ms;
  rep.z = res.z;
  rep.multipliers = res.multipliers;
  return rep;
}

bool feasibility_probe(const TranscriptionProblem& p, const nlp::SolverOptions& sopts) {
  const double v = nlp::phase1_min_violation(p.nlp(), p.initial_guess(), sopts, nullptr, 250);
  return v <= sopts.infeas_threshold;
}

}  // namespace ovt
