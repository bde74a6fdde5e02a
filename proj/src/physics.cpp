#include "mqe/physics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "mqe/kernels.hpp"

namespace mqe {

double Shape::bound_radius() const {
  switch (kind) {
    case ShapeKind::Disc: return radius;
    case ShapeKind::Rect: return std::sqrt(half_w * half_w + half_h * half_h);
    case ShapeKind::Segment: return 0.5 * norm(b - a);
  }
  return 0.0;
}

double RigidBody::inv_mass_x() const {
  if (body_class == BodyClass::Static || body_class == BodyClass::HingeLink) return 0.0;
  return 1.0 / mass;
}

double RigidBody::inv_mass_y() const {
  if (lock_y) return 0.0;
  return inv_mass_x();
}

double RigidBody::inv_inertia() const {
  if (body_class == BodyClass::Static) return 0.0;
  return 1.0 / inertia;
}

int WorldState::seesaw_joint() const {
  for (std::size_t i = 0; i < joints.size(); ++i)
    if (joints[i].axis == HingeAxis::Horizontal) return static_cast<int>(i);
  return -1;
}

double WorldState::seesaw_angle() const {
  const int j = seesaw_joint();
  return j < 0 ? 0.0 : joints[static_cast<std::size_t>(j)].angle;
}

double WorldState::support(Vec2 p) const {
  if (!arena) return 0.0;
  return height_at(*arena, p.x, p.y, seesaw_angle());
}

std::vector<RigidBody> wall_bodies(const Arena& arena, int first_id) {
  std::vector<RigidBody> out;
  out.reserve(arena.walls.size());
  for (const Segment& s : arena.walls) {
    RigidBody b;
    b.id = first_id++;
    b.shape = Shape::segment(s.a, s.b);
    b.pos = 0.5 * (s.a + s.b);
    b.body_class = BodyClass::Static;
    b.mass = 0.0;
    b.inertia = 0.0;
    b.friction_mu = 0.5;
    out.push_back(b);
  }
  return out;
}

double seesaw_torque_balance(const HingeJoint& plank, std::span<const LeverLoad> loads,
                             double gravity) {
  const double c = std::cos(plank.angle);
  double torque = plank.imbalance_torque;
  for (const LeverLoad& l : loads) torque += l.mass * gravity * (-l.arm) * c;
  return torque;
}

double kinetic_energy(const WorldState& world) {
  double e = 0.0;
  for (const RigidBody& b : world.bodies) {
    if (b.is_static()) continue;
    if (b.body_class != BodyClass::HingeLink) e += 0.5 * b.mass * norm2(b.vel);
    e += 0.5 * b.inertia * b.yaw_rate * b.yaw_rate;
  }
  return e;
}

Vec2 linear_momentum(const WorldState& world) {
  Vec2 p;
  for (const RigidBody& b : world.bodies) {
    if (b.is_static() || b.body_class == BodyClass::HingeLink) continue;
    p += b.mass * b.vel;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Narrow phase

namespace {

struct Poly {
  std::array<Vec2, 4> v;
  int n = 0;
};

Poly polygon(const RigidBody& b) {
  Poly p;
  if (b.shape.kind == ShapeKind::Segment) {
    p.v[0] = b.shape.a;
    p.v[1] = b.shape.b;
    p.n = 2;
    return p;
  }
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const Vec2 ax{c, s};
  const Vec2 ay{-s, c};
  const double hw = b.shape.half_w;
  const double hh = b.shape.half_h;
  p.v[0] = b.pos + ax * hw + ay * hh;
  p.v[1] = b.pos - ax * hw + ay * hh;
  p.v[2] = b.pos - ax * hw - ay * hh;
  p.v[3] = b.pos + ax * hw - ay * hh;
  p.n = 4;
  return p;
}

// Unit edge normals (one per distinct direction).
int poly_axes(const RigidBody& b, const Poly& p, std::array<Vec2, 2>& out) {
  if (b.shape.kind == ShapeKind::Segment) {
    const Vec2 d = p.v[1] - p.v[0];
    const double l = norm(d);
    out[0] = l > 0.0 ? perp(d) / l : Vec2{1.0, 0.0};
    return 1;
  }
  out[0] = {std::cos(b.yaw), std::sin(b.yaw)};
  out[1] = perp(out[0]);
  return 2;
}

void project(const Poly& p, Vec2 n, double& lo, double& hi) {
  lo = hi = dot(p.v[0], n);
  for (int i = 1; i < p.n; ++i) {
    const double d = dot(p.v[i], n);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
}

Vec2 closest_on_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double l2 = norm2(ab);
  if (l2 <= 0.0) return a;
  const double t = std::clamp(dot(p - a, ab) / l2, 0.0, 1.0);
  return a + ab * t;
}

void single_point(Contact& c, Vec2 point, double depth) {
  c.depth = depth;
  c.point = point;
  c.n_points = 1;
  c.points[0] = point;
  c.depths[0] = depth;
}

// Disc `d` against other shape `o`; normal points from the disc to `o`.
bool disc_vs(const RigidBody& d, const RigidBody& o, double margin, Contact& c) {
  const Vec2 center = d.pos;
  const double r = d.shape.radius;
  switch (o.shape.kind) {
    case ShapeKind::Disc: {
      const Vec2 diff = o.pos - center;
      const double dist = norm(diff);
      const double depth = r + o.shape.radius - dist;
      if (depth <= -margin) return false;
      c.normal = dist > 0.0 ? diff / dist : Vec2{1.0, 0.0};
      single_point(c, center + c.normal * (r - 0.5 * depth), depth);
      return true;
    }
    case ShapeKind::Segment: {
      const Vec2 q = closest_on_segment(center, o.shape.a, o.shape.b);
      const Vec2 diff = q - center;
      const double dist = norm(diff);
      const double depth = r - dist;
      if (depth <= -margin) return false;
      if (dist > 0.0) {
        c.normal = diff / dist;
      } else {
        const Vec2 dir = o.shape.b - o.shape.a;
        const double l = norm(dir);
        c.normal = l > 0.0 ? perp(dir) / l : Vec2{1.0, 0.0};
      }
      single_point(c, q, depth);
      return true;
    }
    case ShapeKind::Rect: {
      const double cs = std::cos(o.yaw);
      const double sn = std::sin(o.yaw);
      const Vec2 rel = center - o.pos;
      const Vec2 local{cs * rel.x + sn * rel.y, -sn * rel.x + cs * rel.y};
      const double hw = o.shape.half_w;
      const double hh = o.shape.half_h;
      const bool inside = std::abs(local.x) <= hw && std::abs(local.y) <= hh;
      if (inside) {
        const double dx = hw - std::abs(local.x);
        const double dy = hh - std::abs(local.y);
        Vec2 out_local = dx < dy ? Vec2{local.x >= 0 ? 1.0 : -1.0, 0.0}
                                 : Vec2{0.0, local.y >= 0 ? 1.0 : -1.0};
        const Vec2 out_world{cs * out_local.x - sn * out_local.y,
                             sn * out_local.x + cs * out_local.y};
        c.normal = -out_world;
        single_point(c, center, r + std::min(dx, dy));
        return true;
      }
      const Vec2 ql{std::clamp(local.x, -hw, hw), std::clamp(local.y, -hh, hh)};
      const Vec2 q = o.pos + Vec2{cs * ql.x - sn * ql.y, sn * ql.x + cs * ql.y};
      const Vec2 diff = q - center;
      const double dist = norm(diff);
      const double depth = r - dist;
      if (depth <= -margin) return false;
      c.normal = dist > 0.0 ? diff / dist : Vec2{1.0, 0.0};
      single_point(c, q, depth);
      return true;
    }
  }
  return false;
}

// Convex polygon pair (rect/segment) by separating axes; normal a -> b.
bool poly_vs_poly(const RigidBody& a, const RigidBody& b, double margin, Contact& c) {
  const Poly pa = polygon(a);
  const Poly pb = polygon(b);
  std::array<Vec2, 2> axa{}, axb{};
  const int na = poly_axes(a, pa, axa);
  const int nb = poly_axes(b, pb, axb);
  double best = 1e300;
  Vec2 best_n;
  auto test = [&](Vec2 n) {
    double alo, ahi, blo, bhi;
    project(pa, n, alo, ahi);
    project(pb, n, blo, bhi);
    const double fwd = ahi - blo;  // b on + side
    const double bwd = bhi - alo;  // b on - side
    const double overlap = std::min(fwd, bwd);
    if (overlap < best) {
      best = overlap;
      best_n = fwd <= bwd ? n : -n;
    }
    return overlap > -margin;
  };
  for (int i = 0; i < na; ++i)
    if (!test(axa[i])) return false;
  for (int i = 0; i < nb; ++i)
    if (!test(axb[i])) return false;

  const Vec2 n = best_n;
  const Vec2 t = perp(n);
  double alo, ahi, blo, bhi, at_lo, at_hi, bt_lo, bt_hi;
  project(pa, n, alo, ahi);
  project(pb, n, blo, bhi);
  project(pa, t, at_lo, at_hi);
  project(pb, t, bt_lo, bt_hi);
  constexpr double kEps = 1e-9;

  struct Cand { Vec2 p; double d; };
  std::array<Cand, 8> cands{};
  int nc = 0;
  for (int i = 0; i < pb.n; ++i) {
    const double d = ahi - dot(pb.v[i], n);
    const double tt = dot(pb.v[i], t);
    if (d > -margin && tt >= at_lo - kEps && tt <= at_hi + kEps) cands[nc++] = {pb.v[i], d};
  }
  for (int i = 0; i < pa.n; ++i) {
    const double d = dot(pa.v[i], n) - blo;
    const double tt = dot(pa.v[i], t);
    if (d > -margin && tt >= bt_lo - kEps && tt <= bt_hi + kEps) cands[nc++] = {pa.v[i], d};
  }
  c.normal = n;
  c.depth = best;
  if (nc == 0) {
    // Edge crossing with no vertex inside: use the overlap midpoint.
    const double tm = 0.5 * (std::max(at_lo, bt_lo) + std::min(at_hi, bt_hi));
    const double nm = 0.5 * (ahi + blo);
    single_point(c, n * nm + t * tm, best);
    c.depth = best;
    return true;
  }
  std::sort(cands.begin(), cands.begin() + nc,
            [](const Cand& x, const Cand& y) { return x.d > y.d; });
  c.n_points = std::min(nc, 2);
  for (int i = 0; i < c.n_points; ++i) {
    c.points[i] = cands[static_cast<std::size_t>(i)].p;
    c.depths[i] = std::min(cands[static_cast<std::size_t>(i)].d, best);
  }
  c.point = c.points[0];
  return true;
}

bool collide(const RigidBody& a, const RigidBody& b, double margin, Contact& c) {
  c.body_a = a.id;
  c.body_b = b.id;
  if (a.shape.kind == ShapeKind::Disc) return disc_vs(a, b, margin, c);
  if (b.shape.kind == ShapeKind::Disc) {
    if (!disc_vs(b, a, margin, c)) return false;
    c.normal = -c.normal;
    return true;
  }
  return poly_vs_poly(a, b, margin, c);
}

bool pair_active(const RigidBody& a, const RigidBody& b, const PhysicsParams& p) {
  const bool sa = a.is_static() || a.body_class == BodyClass::HingeLink;
  const bool sb = b.is_static() || b.body_class == BodyClass::HingeLink;
  if (sa && sb) return false;
  if (a.is_static() || b.is_static()) {
    const RigidBody& dyn = a.is_static() ? b : a;
    return dyn.z > 0.5 * kVoidDepth;
  }
  return std::abs(a.z - b.z) < p.level_separation;
}

void detect(const WorldState& w, double margin, PhysicsScratch& s) {
  const auto& bodies = w.bodies;
  const std::size_t n = bodies.size();
  s.contacts.clear();
  s.bx.resize(n);
  s.by.resize(n);
  s.br.resize(n);
  s.mask.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.bx[i] = bodies[i].pos.x;
    s.by[i] = bodies[i].pos.y;
    s.br[i] = bodies[i].shape.bound_radius();
  }
  const kernels::KernelTable& k = kernels::active();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t m = n - i - 1;
    k.circle_overlap(s.bx[i], s.by[i], s.br[i], s.bx.data() + i + 1, s.by.data() + i + 1,
                     s.br.data() + i + 1, m, margin, s.mask.data());
    for (std::size_t jj = 0; jj < m; ++jj) {
      if (!s.mask[jj]) continue;
      const std::size_t j = i + 1 + jj;
      if (!pair_active(bodies[i], bodies[j], w.params)) continue;
      Contact c;
      if (collide(bodies[i], bodies[j], margin, c)) s.contacts.push_back(c);
    }
  }
}

void check_finite(const WorldState& w, std::span<const Wrench> forces) {
  for (std::size_t i = 0; i < w.bodies.size(); ++i) {
    const RigidBody& b = w.bodies[i];
    const Wrench& f = forces[i];
    if (!finite(b.pos) || !finite(b.vel) || !std::isfinite(b.yaw) ||
        !std::isfinite(b.yaw_rate) || !std::isfinite(b.z)) {
      throw Fault("step_world: non-finite state on body " + std::to_string(b.id));
    }
    if (!finite(f.force) || !std::isfinite(f.torque))
      throw Fault("step_world: non-finite force on body " + std::to_string(b.id));
  }
}

Vec2 cross_w(double w, Vec2 r) { return {-w * r.y, w * r.x}; }

void apply_impulse(RigidBody& b, Vec2 r, Vec2 p, double sign) {
  b.vel.x += sign * p.x * b.inv_mass_x();
  b.vel.y += sign * p.y * b.inv_mass_y();
  b.yaw_rate += sign * b.inv_inertia() * cross(r, p);
}

double eff_mass_inv(const RigidBody& a, const RigidBody& b, Vec2 ra, Vec2 rb, Vec2 n) {
  const double rna = cross(ra, n);
  const double rnb = cross(rb, n);
  return n.x * n.x * (a.inv_mass_x() + b.inv_mass_x()) +
         n.y * n.y * (a.inv_mass_y() + b.inv_mass_y()) + a.inv_inertia() * rna * rna +
         b.inv_inertia() * rnb * rnb;
}

double torsion_radius(const Shape& s) {
  switch (s.kind) {
    case ShapeKind::Disc: return (2.0 / 3.0) * s.radius;
    case ShapeKind::Rect: return (1.0 / 3.0) * (s.half_w + s.half_h);
    case ShapeKind::Segment: return 0.0;
  }
  return 0.0;
}

void advance_seesaw(WorldState& w, double h) {
  const int ji = w.seesaw_joint();
  if (ji < 0 || !w.arena || !w.arena->seesaw) return;
  HingeJoint& j = w.joints[static_cast<std::size_t>(ji)];
  const SeesawGeometry& g = *w.arena->seesaw;
  const double sn = std::sin(j.angle);
  std::array<LeverLoad, 32> loads{};
  std::size_t nl = 0;
  double inertia = j.inertia;
  for (const RigidBody& b : w.bodies) {
    if (b.is_static() || b.body_class == BodyClass::HingeLink) continue;
    if (b.pos.x < g.x_near || b.pos.x > g.x_far) continue;
    if (std::abs(b.pos.y - g.y_center) > g.half_width) continue;
    const double arm = b.pos.x - g.pivot_x;
    const double plank_z = g.pivot_height + arm * sn;
    if (std::abs(b.z - plank_z) >= w.params.level_separation) continue;
    if (nl < loads.size()) loads[nl++] = {b.mass, arm};
    inertia += b.mass * arm * arm;
  }
  const double torque =
      seesaw_torque_balance(j, std::span<const LeverLoad>(loads.data(), nl), w.params.gravity);
  const bool hold = std::abs(j.ang_vel) < w.params.seesaw_quasi_static_speed &&
                    std::abs(torque) <= w.params.seesaw_hold_torque;
  if (hold) {
    j.ang_vel = 0.0;
  } else {
    j.ang_vel += h * (torque - j.damping * j.ang_vel) / inertia;
  }
  j.angle += h * j.ang_vel;
  if (j.angle <= j.lo) {
    j.angle = j.lo;
    if (j.ang_vel < 0.0) j.ang_vel = 0.0;
  } else if (j.angle >= j.hi) {
    j.angle = j.hi;
    if (j.ang_vel > 0.0) j.ang_vel = 0.0;
  }
}

}  // namespace

std::vector<Contact> detect_contacts(const WorldState& world) {
  PhysicsScratch s;
  detect(world, 0.0, s);
  std::vector<Contact> out;
  out.reserve(s.contacts.size());
  for (const Contact& c : s.contacts)
    if (c.depth > 0.0) out.push_back(c);
  return out;
}

void step_world(WorldState& w, std::span<const Wrench> forces, double dt,
                PhysicsScratch& s, StepReport* report, std::span<const int> robots) {
  if (!(dt > 0.0)) throw Fault("step_world: dt must be positive");
  if (forces.size() != w.bodies.size())
    throw Fault("step_world: force list length does not match body count");
  check_finite(w, forces);

  const std::size_t n = w.bodies.size();
  const PhysicsParams& p = w.params;
  const int substeps = std::max(1, p.substeps);
  const double h = dt / substeps;

  const std::size_t n_robots = robots.size();
  if (report) {
    report->robot_pair_impulse.assign(n_robots * (n_robots > 0 ? n_robots - 1 : 0) / 2, 0.0);
    report->robot_impulse.assign(n_robots, 0.0);
    report->max_depth = 0.0;
    s.robot_slot.assign(n, -1);
    for (std::size_t r = 0; r < n_robots; ++r)
      s.robot_slot[static_cast<std::size_t>(robots[r])] = static_cast<int>(r);
  }
  s.prev_pos.resize(n);
  s.ground_lin.resize(n);
  s.ground_ang.resize(n);

  for (int sub = 0; sub < substeps; ++sub) {
    advance_seesaw(w, h);

    for (std::size_t i = 0; i < n; ++i) {
      RigidBody& b = w.bodies[i];
      if (b.is_static()) continue;
      b.vel.x += h * forces[i].force.x * b.inv_mass_x();
      b.vel.y += h * forces[i].force.y * b.inv_mass_y();
      if (b.lock_y) b.vel.y = 0.0;
      b.yaw_rate += h * forces[i].torque * b.inv_inertia();
    }
    for (const HingeJoint& j : w.joints) {
      if (j.link_body < 0 || j.axis != HingeAxis::Vertical) continue;
      RigidBody& b = w.bodies[static_cast<std::size_t>(j.link_body)];
      b.yaw_rate /= 1.0 + h * j.damping / b.inertia;
    }

    detect(w, p.speculative_margin, s);
    const std::size_t nc = s.contacts.size();
    s.acc_n.assign(nc * 2, 0.0);
    s.acc_t.assign(nc * 2, 0.0);
    std::fill(s.ground_lin.begin(), s.ground_lin.end(), Vec2{});
    std::fill(s.ground_ang.begin(), s.ground_ang.end(), 0.0);

    for (int it = 0; it < p.solver_iterations; ++it) {
      for (std::size_t ci = 0; ci < nc; ++ci) {
        const Contact& c = s.contacts[ci];
        RigidBody& a = w.bodies[static_cast<std::size_t>(c.body_a)];
        RigidBody& b = w.bodies[static_cast<std::size_t>(c.body_b)];
        const double mu = std::sqrt(a.friction_mu * b.friction_mu);
        const Vec2 n_ = c.normal;
        const Vec2 t_ = perp(n_);
        for (int k = 0; k < c.n_points; ++k) {
          const Vec2 ra = c.points[k] - a.pos;
          const Vec2 rb = c.points[k] - b.pos;
          const Vec2 vrel = (b.vel + cross_w(b.yaw_rate, rb)) - (a.vel + cross_w(a.yaw_rate, ra));
          const double kn = eff_mass_inv(a, b, ra, rb, n_);
          if (kn <= 0.0) continue;
          const double vn = dot(vrel, n_);
          const double gap = c.depths[k] < 0.0 ? -c.depths[k] : 0.0;
          double& acc = s.acc_n[ci * 2 + static_cast<std::size_t>(k)];
          const double next = std::max(0.0, acc - (vn + gap / h) / kn);
          const double dl = next - acc;
          acc = next;
          if (dl != 0.0) {
            apply_impulse(a, ra, n_ * dl, -1.0);
            apply_impulse(b, rb, n_ * dl, 1.0);
          }
          if (mu > 0.0) {
            const Vec2 vrel2 =
                (b.vel + cross_w(b.yaw_rate, rb)) - (a.vel + cross_w(a.yaw_rate, ra));
            const double kt = eff_mass_inv(a, b, ra, rb, t_);
            if (kt <= 0.0) continue;
            double& acct = s.acc_t[ci * 2 + static_cast<std::size_t>(k)];
            const double lim = mu * acc;
            const double nt = std::clamp(acct - dot(vrel2, t_) / kt, -lim, lim);
            const double dt_ = nt - acct;
            acct = nt;
            if (dt_ != 0.0) {
              apply_impulse(a, ra, t_ * dt_, -1.0);
              apply_impulse(b, rb, t_ * dt_, 1.0);
            }
          }
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        RigidBody& b = w.bodies[i];
        if (!b.ground_friction || b.is_static() || b.body_class == BodyClass::HingeLink) continue;
        if (b.z <= 0.5 * kVoidDepth) continue;
        const double jmax = b.friction_mu * b.mass * p.gravity * h;
        Vec2 next = s.ground_lin[i] - b.vel * b.mass;
        if (b.lock_y) next.y = 0.0;
        const double mag = norm(next);
        if (mag > jmax) next = next * (jmax / mag);
        const Vec2 dp = next - s.ground_lin[i];
        s.ground_lin[i] = next;
        b.vel.x += dp.x * b.inv_mass_x();
        b.vel.y += dp.y * b.inv_mass_y();
        const double lmax = jmax * torsion_radius(b.shape);
        const double nl = std::clamp(s.ground_ang[i] - b.yaw_rate * b.inertia, -lmax, lmax);
        b.yaw_rate += (nl - s.ground_ang[i]) / b.inertia;
        s.ground_ang[i] = nl;
      }
    }

    if (report) {
      for (std::size_t ci = 0; ci < nc; ++ci) {
        const Contact& c = s.contacts[ci];
        const int ra = s.robot_slot[static_cast<std::size_t>(c.body_a)];
        const int rb = s.robot_slot[static_cast<std::size_t>(c.body_b)];
        if (ra < 0 || rb < 0) continue;
        const double imp = s.acc_n[ci * 2] + s.acc_n[ci * 2 + 1];
        report->robot_pair_impulse[pair_index(static_cast<std::size_t>(ra),
                                              static_cast<std::size_t>(rb), n_robots)] += imp;
        report->robot_impulse[static_cast<std::size_t>(ra)] += imp;
        report->robot_impulse[static_cast<std::size_t>(rb)] += imp;
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      RigidBody& b = w.bodies[i];
      s.prev_pos[i] = b.pos;
      if (b.is_static()) continue;
      if (b.body_class != BodyClass::HingeLink) b.pos += b.vel * h;
      b.yaw += b.yaw_rate * h;
    }

    // Positional projection on the linearized contact set.
    for (int pass = 0; pass < 3; ++pass) {
      for (std::size_t ci = 0; ci < nc; ++ci) {
        const Contact& c = s.contacts[ci];
        RigidBody& a = w.bodies[static_cast<std::size_t>(c.body_a)];
        RigidBody& b = w.bodies[static_cast<std::size_t>(c.body_b)];
        const Vec2 n_ = c.normal;
        const double ka = n_.x * n_.x * a.inv_mass_x() + n_.y * n_.y * a.inv_mass_y();
        const double kb = n_.x * n_.x * b.inv_mass_x() + n_.y * n_.y * b.inv_mass_y();
        if (ka + kb <= 0.0) continue;
        const Vec2 moved = (b.pos - s.prev_pos[static_cast<std::size_t>(c.body_b)]) -
                           (a.pos - s.prev_pos[static_cast<std::size_t>(c.body_a)]);
        const double depth = c.depth - dot(moved, n_);
        const double corr = depth - p.penetration_slop;
        if (corr <= 0.0) continue;
        const double lam = corr / (ka + kb);
        a.pos.x -= n_.x * lam * a.inv_mass_x();
        a.pos.y -= n_.y * lam * a.inv_mass_y();
        b.pos.x += n_.x * lam * b.inv_mass_x();
        b.pos.y += n_.y * lam * b.inv_mass_y();
      }
    }

    // Bodies cannot walk up steps higher than max_step_height.
    if (w.arena) {
      const double angle = w.seesaw_angle();
      for (std::size_t i = 0; i < n; ++i) {
        RigidBody& b = w.bodies[i];
        if (b.is_static() || b.body_class == BodyClass::HingeLink) continue;
        const Vec2 from = s.prev_pos[i];
        const double h0 = height_at(*w.arena, from.x, from.y, angle);
        if (!std::isfinite(h0)) continue;
        const double h1 = height_at(*w.arena, b.pos.x, b.pos.y, angle);
        if (h1 - h0 <= p.max_step_height) continue;
        const Vec2 to = b.pos;
        if (height_at(*w.arena, to.x, from.y, angle) - h0 <= p.max_step_height) {
          b.pos = {to.x, from.y};
          b.vel.y = 0.0;
        } else if (height_at(*w.arena, from.x, to.y, angle) - h0 <= p.max_step_height) {
          b.pos = {from.x, to.y};
          b.vel.x = 0.0;
        } else {
          b.pos = from;
          b.vel = {};
        }
      }
    }

    for (const HingeJoint& j : w.joints) {
      if (j.link_body < 0) continue;
      RigidBody& b = w.bodies[static_cast<std::size_t>(j.link_body)];
      if (b.yaw < j.lo) {
        b.yaw = j.lo;
        b.yaw_rate = std::max(0.0, b.yaw_rate);
      } else if (b.yaw > j.hi) {
        b.yaw = j.hi;
        b.yaw_rate = std::min(0.0, b.yaw_rate);
      }
    }
  }

  // Projection on freshly detected contacts, linearized between detections.
  for (int pass = 0; pass < p.projection_passes; ++pass) {
    detect(w, 0.0, s);
    const bool any = std::any_of(s.contacts.begin(), s.contacts.end(), [&](const Contact& c) {
      return c.depth > p.penetration_slop;
    });
    if (!any) break;
    for (std::size_t i = 0; i < n; ++i) s.prev_pos[i] = w.bodies[i].pos;
    for (int it = 0; it < 8; ++it) {
      for (const Contact& c : s.contacts) {
        RigidBody& a = w.bodies[static_cast<std::size_t>(c.body_a)];
        RigidBody& b = w.bodies[static_cast<std::size_t>(c.body_b)];
        const Vec2 n_ = c.normal;
        const Vec2 moved = (b.pos - s.prev_pos[static_cast<std::size_t>(c.body_b)]) -
                           (a.pos - s.prev_pos[static_cast<std::size_t>(c.body_a)]);
        const double corr = c.depth - dot(moved, n_) - p.penetration_slop;
        if (corr <= 0.0) continue;
        const double ka = n_.x * n_.x * a.inv_mass_x() + n_.y * n_.y * a.inv_mass_y();
        const double kb = n_.x * n_.x * b.inv_mass_x() + n_.y * n_.y * b.inv_mass_y();
        if (ka + kb <= 0.0) continue;
        const double lam = corr / (ka + kb);
        a.pos.x -= n_.x * lam * a.inv_mass_x();
        a.pos.y -= n_.y * lam * a.inv_mass_y();
        b.pos.x += n_.x * lam * b.inv_mass_x();
        b.pos.y += n_.y * lam * b.inv_mass_y();
      }
    }
  }

  for (HingeJoint& j : w.joints) {
    if (j.link_body < 0) continue;
    const RigidBody& b = w.bodies[static_cast<std::size_t>(j.link_body)];
    j.angle = b.yaw;
    j.ang_vel = b.yaw_rate;
  }

  if (w.arena) {
    const double angle = w.seesaw_angle();
    for (RigidBody& b : w.bodies) {
      if (b.is_static() || b.body_class == BodyClass::Robot ||
          b.body_class == BodyClass::HingeLink)
        continue;
      const double z = height_at(*w.arena, b.pos.x, b.pos.y, angle);
      b.z = std::isfinite(z) ? z : kVoidDepth;
    }
  }

  w.time += dt;
  ++w.step_count;
  if (report && report->measure_depth) {
    for (const Contact& c : detect_contacts(w)) report->max_depth = std::max(report->max_depth, c.depth);
  }
}

WorldState stepped(const WorldState& world, std::span<const Wrench> forces, double dt) {
  WorldState out = world;
  PhysicsScratch scratch;
  step_world(out, forces, dt, scratch);
  return out;
}

}  // namespace mqe
