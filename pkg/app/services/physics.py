"""Planar rigid-body world: a rod on a pedestal table and two kinematic two-finger grippers.

x is horizontal, z vertical, tilt is the rod axis angle from +x. Contacts are
penalty springs with a viscous tangential term clamped to the Coulomb cone.
Integration is semi-implicit Euler at h = dt / substeps with the controls held
over the whole step.

Each gripper is a frame tracking its velocity command through a first-order
servo, with one finger disc above and one below the frame. Fingers close under
force control: the aperture moves until the mean resisting finger force equals
the commanded pinch force (times gripper_force_scale).
"""
import logging
import math

import numpy as np

from app.core.errors import InputError
from app.models.world import AgentControl, ContactPoint, GripperState, RodState, WorldState
from app.schemas.base import ensure_valid
from app.schemas.world import WorldConfig
from app.services.seeding import WORLD, make_rng

logger = logging.getLogger(__name__)

N_AGENTS = 2
UPPER = 0
LOWER = 1

# Initial gripper placement: clearance beyond the rod ends, height above its centreline
START_X_CLEARANCE = (0.10, 0.35)
START_Z_OFFSET = (0.05, 0.25)


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    return math.pi - ((math.pi - theta) % (2.0 * math.pi))


# ---------- contact model ----------

def _contact_force_xy(
    penetration: float,
    vx: float,
    vz: float,
    nx: float,
    nz: float,
    stiffness: float,
    damping: float,
    mu: float,
    friction_damping: float,
) -> tuple[float, float]:
    if penetration <= 0.0:
        return 0.0, 0.0
    vn = vx * nx + vz * nz
    fn = stiffness * penetration - damping * vn
    if fn <= 0.0:
        return 0.0, 0.0
    ftx = -friction_damping * (vx - vn * nx)
    ftz = -friction_damping * (vz - vn * nz)
    mag = math.hypot(ftx, ftz)
    limit = mu * fn
    if mag > limit:
        s = limit / mag
        ftx *= s
        ftz *= s
    return fn * nx + ftx, fn * nz + ftz


def contact_force(
    penetration: float,
    rel_velocity,
    normal,
    config: WorldConfig,
    stiffness: float | None = None,
) -> np.ndarray:
    """Force on the rod from one penalty contact.

    `normal` is the unit direction the contact pushes the rod; `rel_velocity`
    is the rod point velocity relative to the other body.
    """
    k = config.contact_stiffness if stiffness is None else stiffness
    fx, fz = _contact_force_xy(
        float(penetration),
        float(rel_velocity[0]),
        float(rel_velocity[1]),
        float(normal[0]),
        float(normal[1]),
        k,
        config.contact_damping,
        config.friction_mu,
        config.friction_damping,
    )
    return np.array([fx, fz])


def _disc_rod_contact(px, pz, radius, cx, cz, ca, sa, hl, hh):
    """Disc vs rod rectangle: (penetration, outward normal, rod surface point) or None."""
    dx, dz = px - cx, pz - cz
    du = dx * ca + dz * sa
    dw = -dx * sa + dz * ca
    if abs(du) <= hl and abs(dw) <= hh:
        to_side = hh - abs(dw)
        to_end = hl - abs(du)
        if to_side <= to_end:
            ou, ow = 0.0, (1.0 if dw >= 0.0 else -1.0)
            pen = radius + to_side
            qu, qw = du, ow * hh
        else:
            ou, ow = (1.0 if du >= 0.0 else -1.0), 0.0
            pen = radius + to_end
            qu, qw = ou * hl, dw
    else:
        qu = min(max(du, -hl), hl)
        qw = min(max(dw, -hh), hh)
        eu, ew = du - qu, dw - qw
        d = math.hypot(eu, ew)
        if d >= radius:
            return None
        ou, ow = eu / d, ew / d
        pen = radius - d
    onx = ou * ca - ow * sa
    onz = ou * sa + ow * ca
    qx = cx + qu * ca - qw * sa
    qz = cz + qu * sa + qw * ca
    return pen, onx, onz, qx, qz


class _Sim:
    """Mutable float mirror of a WorldState used inside the substep loop."""

    __slots__ = ("rx", "rz", "th", "rvx", "rvz", "om", "gx", "gz", "gvx", "gvz", "ap", "apr")

    def __init__(self, state: WorldState):
        rod = state.rod
        self.rx, self.rz = float(rod.position[0]), float(rod.position[1])
        self.th = float(rod.tilt)
        self.rvx, self.rvz = float(rod.linear_velocity[0]), float(rod.linear_velocity[1])
        self.om = float(rod.angular_velocity)
        self.gx = [float(g.position[0]) for g in state.grippers]
        self.gz = [float(g.position[1]) for g in state.grippers]
        self.gvx = [float(g.velocity[0]) for g in state.grippers]
        self.gvz = [float(g.velocity[1]) for g in state.grippers]
        self.ap = [float(g.aperture) for g in state.grippers]
        self.apr = [float(g.aperture_rate) for g in state.grippers]

    def finite(self) -> bool:
        values = [self.rx, self.rz, self.th, self.rvx, self.rvz, self.om]
        values += self.gx + self.gz + self.gvx + self.gvz + self.ap + self.apr
        return all(math.isfinite(v) for v in values)


def _contacts(s: _Sim, config: WorldConfig) -> list[tuple]:
    """Raw contacts: (finger_id, pen, nx, nz, rvx, rvz, fx, fz, px, pz)."""
    out = []
    ca, sa = math.cos(s.th), math.sin(s.th)
    hl, hh = 0.5 * config.rod_length, 0.5 * config.rod_thickness
    k = config.rod_contact_stiffness
    c, mu, cf = config.contact_damping, config.friction_mu, config.friction_damping
    rf = config.finger_radius

    def point_velocity(px, pz):
        return s.rvx - s.om * (pz - s.rz), s.rvz + s.om * (px - s.rx)

    for agent in range(N_AGENTS):
        half = 0.5 * s.ap[agent] + rf
        for finger, sign in ((UPPER, 1.0), (LOWER, -1.0)):
            fx_c = s.gx[agent]
            fz_c = s.gz[agent] + sign * half
            hit = _disc_rod_contact(fx_c, fz_c, rf, s.rx, s.rz, ca, sa, hl, hh)
            if hit is None:
                continue
            pen, onx, onz, qx, qz = hit
            nx, nz = -onx, -onz
            vpx, vpz = point_velocity(qx, qz)
            rvx = vpx - s.gvx[agent]
            rvz = vpz - (s.gvz[agent] + sign * 0.5 * s.apr[agent])
            fx, fz = _contact_force_xy(pen, rvx, rvz, nx, nz, k, c, mu, cf)
            out.append(((agent, finger), pen, nx, nz, rvx, rvz, fx, fz, qx, qz))

    half_w = 0.5 * config.table_width
    top = config.table_height

    # Table top corners against the rod's bottom face
    for tx in (-half_w, half_w):
        dx, dz = tx - s.rx, top - s.rz
        du = dx * ca + dz * sa
        dw = -dx * sa + dz * ca
        if abs(du) <= hl and -hh < dw <= 0.0:
            pen = dw + hh
            nx, nz = -sa, ca
            rvx, rvz = point_velocity(tx, top)
            fx, fz = _contact_force_xy(pen, rvx, rvz, nx, nz, k, c, mu, cf)
            out.append((None, pen, nx, nz, rvx, rvz, fx, fz, tx, top))

    # Rod corners against the table top
    for su in (-hl, hl):
        for sw in (-hh, hh):
            qx = s.rx + su * ca - sw * sa
            qz = s.rz + su * sa + sw * ca
            if abs(qx) <= half_w and qz < top:
                pen = top - qz
                rvx, rvz = point_velocity(qx, qz)
                fx, fz = _contact_force_xy(pen, rvx, rvz, 0.0, 1.0, k, c, mu, cf)
                out.append((None, pen, 0.0, 1.0, rvx, rvz, fx, fz, qx, qz))
    return out


def _to_contact_points(raw: list[tuple]) -> tuple[ContactPoint, ...]:
    return tuple(
        ContactPoint(
            finger_id=fid,
            penetration=pen,
            contact_normal=np.array([nx, nz]),
            relative_velocity=np.array([rvx, rvz]),
            force=np.array([fx, fz]),
            point=np.array([px, pz]),
        )
        for fid, pen, nx, nz, rvx, rvz, fx, fz, px, pz in raw
    )


def _grasp_flags(raw: list[tuple], config: WorldConfig) -> list[bool]:
    best = [[0.0, 0.0] for _ in range(N_AGENTS)]
    for fid, _pen, nx, nz, _rvx, _rvz, fx, fz, _px, _pz in raw:
        if fid is None:
            continue
        agent, finger = fid
        best[agent][finger] = max(best[agent][finger], fx * nx + fz * nz)
    return [min(b) >= config.f_grasp_min for b in best]


def _build_state(s: _Sim, config: WorldConfig, sim_time: float, step_count: int) -> WorldState:
    raw = _contacts(s, config)
    flags = _grasp_flags(raw, config)
    rod = RodState(
        position=np.array([s.rx, s.rz]),
        tilt=s.th,
        linear_velocity=np.array([s.rvx, s.rvz]),
        angular_velocity=s.om,
    )
    grippers = tuple(
        GripperState(
            position=np.array([s.gx[a], s.gz[a]]),
            velocity=np.array([s.gvx[a], s.gvz[a]]),
            aperture=s.ap[a],
            aperture_rate=s.apr[a],
            grasp_flag=flags[a],
        )
        for a in range(N_AGENTS)
    )
    return WorldState(
        rod=rod,
        grippers=grippers,
        contacts=_to_contact_points(raw),
        sim_time=sim_time,
        step_count=step_count,
    )


def refresh_contacts(state: WorldState, config: WorldConfig) -> WorldState:
    """Recompute contacts and grasp flags from the state's kinematics."""
    return _build_state(_Sim(state), config, state.sim_time, state.step_count)


# ---------- operations ----------

def world_reset(config: WorldConfig, seed: int) -> WorldState:
    """Rod at rest on the table at x = 0, grippers open and out of reach at seeded offsets."""
    config = ensure_valid(config, prefix="world")
    rng = make_rng(seed, WORLD)
    hl = 0.5 * config.rod_length
    z_rod = config.rest_height

    rod = RodState(position=np.array([0.0, z_rod]), tilt=0.0, linear_velocity=np.zeros(2), angular_velocity=0.0)
    grippers = []
    for side in (-1.0, 1.0):
        x = side * (hl + rng.uniform(*START_X_CLEARANCE))
        z = z_rod + rng.uniform(*START_Z_OFFSET)
        grippers.append(
            GripperState(
                position=np.array([x, z]),
                velocity=np.zeros(2),
                aperture=config.aperture_max,
                aperture_rate=0.0,
                grasp_flag=False,
            )
        )
    state = WorldState(rod=rod, grippers=tuple(grippers), contacts=(), sim_time=0.0, step_count=0)
    return refresh_contacts(state, config)


def _check_controls(controls) -> None:
    if len(controls) != N_AGENTS:
        raise InputError(f"expected {N_AGENTS} controls, got {len(controls)}")
    for i, ctrl in enumerate(controls):
        vel = np.asarray(ctrl.velocity, dtype=float)
        if vel.shape != (2,) or not np.all(np.isfinite(vel)) or not math.isfinite(float(ctrl.pinch)):
            raise InputError(f"control for agent {i} is not a finite (vx, vz, pinch) command")


def world_step(state: WorldState, controls: tuple[AgentControl, AgentControl], config: WorldConfig) -> WorldState:
    """Advance one physics step (dt) with the controls held constant."""
    _check_controls(controls)
    s = _Sim(state)
    h = config.h
    m = config.rod_mass
    inertia = config.rod_inertia
    g = config.gravity
    tau = config.servo_time_constant
    commands = [
        (float(c.velocity[0]), float(c.velocity[1]), max(0.0, float(c.pinch)) * config.gripper_force_scale)
        for c in controls
    ]

    for _ in range(config.substeps):
        raw = _contacts(s, config)
        fx_sum = fz_sum = torque = 0.0
        resist = [[0.0, 0.0] for _ in range(N_AGENTS)]
        for fid, _pen, _nx, _nz, _rvx, _rvz, fx, fz, px, pz in raw:
            fx_sum += fx
            fz_sum += fz
            torque += (px - s.rx) * fz - (pz - s.rz) * fx
            if fid is not None:
                agent, finger = fid
                # Component of the reaction on the finger that opposes closing
                resist[agent][finger] += -fz if finger == UPPER else fz

        s.rvx += (fx_sum / m) * h
        s.rvz += (fz_sum / m - g) * h
        s.om += (torque / inertia) * h
        s.rx += s.rvx * h
        s.rz += s.rvz * h
        s.th += s.om * h

        for a, (vx_cmd, vz_cmd, pinch) in enumerate(commands):
            s.gvx[a] += (vx_cmd - s.gvx[a]) * (h / tau)
            s.gvz[a] += (vz_cmd - s.gvz[a]) * (h / tau)
            s.gx[a] += s.gvx[a] * h
            s.gz[a] += s.gvz[a] * h

            if pinch > 0.0:
                rate = (0.5 * (resist[a][UPPER] + resist[a][LOWER]) - pinch) / config.pinch_damping
                # fingers close no faster than they open
                rate = max(rate, -config.aperture_open_rate)
            else:
                rate = config.aperture_open_rate
            aperture = s.ap[a] + rate * h
            if aperture <= 0.0:
                aperture, rate = 0.0, 0.0
            elif aperture >= config.aperture_max:
                aperture, rate = config.aperture_max, 0.0
            s.ap[a] = aperture
            s.apr[a] = rate

    s.th = wrap_angle(s.th)
    if not s.finite():
        raise InputError("simulation produced non-finite state; controls or config out of range")
    return _build_state(s, config, state.sim_time + config.dt, state.step_count + 1)


def finger_forces(state: WorldState) -> np.ndarray:
    """Force each finger applies to the rod, shape (agent, finger, axis)."""
    forces = np.zeros((N_AGENTS, 2, 2))
    for contact in state.finger_contacts:
        agent, finger = contact.finger_id
        forces[agent, finger] += contact.force
    return forces


# ---------- derived quantities ----------

def rod_axis(tilt: float) -> np.ndarray:
    return np.array([math.cos(tilt), math.sin(tilt)])


def grasp_points(state: WorldState, config: WorldConfig) -> np.ndarray:
    """World positions of the two grasp points on the rod centreline, shape (2, 2)."""
    axis = rod_axis(state.rod.tilt)
    offsets = (-config.grasp_offset, config.grasp_offset)
    return np.stack([state.rod.position + u * axis for u in offsets])


def rod_energy(state: WorldState, config: WorldConfig) -> float:
    """Kinetic + gravitational + contact elastic energy of the rod."""
    rod = state.rod
    kinetic = 0.5 * config.rod_mass * float(rod.linear_velocity @ rod.linear_velocity)
    kinetic += 0.5 * config.rod_inertia * rod.angular_velocity**2
    potential = config.rod_mass * config.gravity * float(rod.position[1])
    elastic = sum(0.5 * config.rod_contact_stiffness * c.penetration**2 for c in state.contacts)
    return kinetic + potential + elastic


def rod_touches_table(state: WorldState) -> bool:
    return any(c.penetration > 0.0 for c in state.table_contacts)
