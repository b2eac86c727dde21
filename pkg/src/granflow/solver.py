"""Time integration by splitting.

One step is the composition of

1. an explicit first-order path-conservative finite-volume update of the
   per-layer fluxes, the hydrostatic pressure gradient (with hydrostatic
   reconstruction at interfaces for exact lake-at-rest balance) and the
   downslope driving source, and
2. a semi-implicit per-column solve for the inter-layer viscous couplings,
   the mass-transfer momentum terms and the basal Coulomb friction: one
   linear tridiagonal system per column with coefficients frozen at the
   post-hyperbolic state, the friction entering as a constant force on the
   bottom layer (flowing columns) or as the exact holding force of a pinned
   bottom layer (stopping columns, complementarity branch solved in closed
   form via a rank-one update).

Embedding the Coulomb term in the implicit solve matters twice over: the
steady uniform-flow fixed point becomes independent of dt (a friction
projection applied after the solve biases the first interior shear by
O(dt g_t / l_0), amplified by the flat mu(I) slope), and statically
admissible columns lock exactly instead of creeping at the splitting scale.
In the weak-coupling limit (viscosities -> 0) both friction branches reduce
to the classical per-layer projection formulas implemented by
``friction_step``.

The composed step conserves total mass to round-off whenever the basal mass
exchange is zero and nothing crosses an open boundary.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .multilayer import (
    H_DRY,
    Environment,
    GridState,
    LayerPartition,
    basal_shear_estimate,
    compute_interface_fields,
    interface_spacing,
    replace_h,
    total_energy,
)
from .rheology import (
    Regularization,
    RheologyParams,
    friction_coefficient,
)


class SolverError(RuntimeError):
    """Internal scheme failure (CFL violation, non-finite state, ...)."""


class Boundary(enum.Enum):
    OPEN = "open"
    WALL = "wall"


class FrictionMode(enum.Enum):
    MU_OF_I = "mu-i"
    CONSTANT = "constant"


@dataclass(frozen=True)
class SolverConfig:
    cfl: float = 0.5
    t_end: float = 1.0
    max_steps: int = 10_000_000
    shear_order: int = 1
    friction_mode: FrictionMode = FrictionMode.MU_OF_I
    regularization: Regularization = field(default_factory=Regularization)
    boundary_left: Boundary = Boundary.OPEN
    boundary_right: Boundary = Boundary.OPEN
    dt_max: float | None = None
    u_stop: float = 1.0e-4
    n_stop: int = 10
    steady_tol: float | None = None
    monolayer_basal_factor: float = 0.75

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"cfl must be in (0, 1], got {self.cfl}")
        if self.t_end < 0.0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end}")
        if self.shear_order not in (1, 2):
            raise ValueError(f"shear_order must be 1 or 2, got {self.shear_order}")


@dataclass
class StepReport:
    t: float
    dt: float
    mass: float
    energy: float
    max_speed: float
    energy_increase_flag: bool


@dataclass
class RunResult:
    state: GridState
    n_steps: int
    stop_reason: str              # "t_end" | "quiescent" | "steady"
    t_quiescent: float | None     # time the first quiescent step ended
    mass_drift: float             # max relative per-step mass change
    energy_increase_total: float  # sum of positive per-step energy jumps
    censored: bool                # reached t_end without quiescence


def _ghost(values: np.ndarray, left: Boundary, right: Boundary,
           flip_sign: bool) -> np.ndarray:
    """Pad a (..., nx) array with one ghost cell per side."""
    lv = values[..., :1].copy()
    rv = values[..., -1:].copy()
    if flip_sign:
        if left is Boundary.WALL:
            lv = -lv
        if right is Boundary.WALL:
            rv = -rv
    return np.concatenate([lv, values, rv], axis=-1)


def stable_dt(state: GridState, env: Environment, cfl: float,
              t_remaining: float = math.inf,
              dt_max: float | None = None) -> float:
    """CFL time step cfl*dx / max(|u| + sqrt(g_n h)) over wet cells.

    Capped by the remaining time and an optional hard dt ceiling; an all-dry
    state simply returns the remaining time (nothing moves).
    """
    wet = state.wet_mask()
    if not np.any(wet):
        return t_remaining
    celerity = np.sqrt(env.g_n * state.h[wet])
    speed = np.max(np.abs(state.u[:, wet]), axis=0)
    lam = float(np.max(speed + celerity))
    dt = t_remaining if lam <= 0.0 else min(cfl * state.dx / lam, t_remaining)
    if dt_max is not None:
        dt = min(dt, dt_max)
    if dt <= 0.0:
        raise SolverError(f"non-positive time step: {dt}")
    return dt


def hyperbolic_step(state: GridState, env: Environment,
                    partition: LayerPartition, dt: float,
                    boundary_left: Boundary = Boundary.OPEN,
                    boundary_right: Boundary = Boundary.OPEN) -> GridState:
    """First-order Rusanov update of (h, q_alpha) with hydrostatic reconstruction.

    Advances the conservative fluxes, the pressure gradient g_n h d(z_b+h)/dx
    and the driving source g_t h; preserves non-negative thickness under the
    CFL bound and keeps a lake at rest exactly (the reconstructed interface
    states make flux and topography source cancel to round-off).
    """
    l = partition.fractions
    hp = _ghost(state.h, boundary_left, boundary_right, False)
    up = _ghost(state.u, boundary_left, boundary_right, True)
    zp = _ghost(state.z_b, boundary_left, boundary_right, False)

    z_star = np.maximum(zp[:-1], zp[1:])
    hL = np.maximum(hp[:-1] + zp[:-1] - z_star, 0.0)
    hR = np.maximum(hp[1:] + zp[1:] - z_star, 0.0)
    uL = up[:, :-1]
    uR = up[:, 1:]

    lam = np.maximum(
        np.max(np.abs(uL), axis=0) + np.sqrt(env.g_n * hL),
        np.max(np.abs(uR), axis=0) + np.sqrt(env.g_n * hR),
    )

    qL = hL[None, :] * uL
    qR = hR[None, :] * uR
    flux_h = 0.5 * (l @ qL + l @ qR) - 0.5 * lam * (hR - hL)
    half_gn = 0.5 * env.g_n
    flux_q = 0.5 * (qL * uL + qR * uR
                    + (half_gn * (hL * hL + hR * hR))[None, :]) \
        - 0.5 * lam[None, :] * (qR - qL)

    inv_dx = dt / state.dx
    h_new = state.h - inv_dx * (flux_h[1:] - flux_h[:-1]) - dt * env.G_half
    # reconstruction source: hL[1:] is the left state at each cell's right
    # interface, hR[:-1] the right state at its left interface; at rest the
    # term cancels the pressure-flux difference exactly
    q_new = state.h[None, :] * state.u \
        - inv_dx * (flux_q[:, 1:] - flux_q[:, :-1]) \
        + (inv_dx * half_gn * (hL[1:] ** 2 - hR[:-1] ** 2))[None, :] \
        + (dt * env.g_t) * state.h[None, :]

    if not np.all(np.isfinite(h_new)):
        raise SolverError("non-finite thickness after hyperbolic step")
    floor = -1.0e-12 * max(1.0, float(np.max(state.h, initial=0.0)))
    if np.min(h_new, initial=0.0) < floor:
        raise SolverError("negative thickness after hyperbolic step (CFL violation?)")
    h_new = np.maximum(h_new, 0.0)

    wet = h_new >= H_DRY
    u_new = np.where(wet[None, :], q_new / np.where(wet, h_new, 1.0), 0.0)
    if not np.all(np.isfinite(u_new)):
        raise SolverError("non-finite velocity after hyperbolic step")
    return GridState(state.dx, state.x_centers, h_new, u_new, state.z_b,
                     state.t + dt)


def _basal_mu(state: GridState, partition: LayerPartition, env: Environment,
              params: RheologyParams, mode: FrictionMode, wet: np.ndarray,
              monolayer_factor: float = 1.0) -> np.ndarray:
    if mode is FrictionMode.CONSTANT:
        return np.full(state.nx, params.mu_s)
    shear_b = basal_shear_estimate(state, partition, monolayer_factor)
    p_b = params.rho * env.g_n * np.where(wet, state.h, 1.0)
    I_b = np.where(wet, params.d_s * shear_b / np.sqrt(p_b / params.rho_s), 0.0)
    return friction_coefficient(I_b, params)


def _implicit_column_solve(state: GridState, env: Environment,
                           partition: LayerPartition, params: RheologyParams,
                           reg: Regularization, dt: float, shear_order: int,
                           friction_mode: FrictionMode | None,
                           monolayer_basal_factor: float = 0.75) -> GridState:
    """Shared semi-implicit solve; friction_mode None drops the Coulomb term.

    Per wet column the tridiagonal system

        rho l_j h (u*_j - u_j)/dt = K*_{j-1/2} - K*_{j+1/2}
            + (rho/2) G_{j+1/2} (u*_{j+1} + u*_j)
            - (rho/2) G_{j-1/2} (u*_j + u*_{j-1})
            - lambda delta_{j0}

    is solved with eta and G frozen at the input state.  With friction on,
    lambda is the basal Coulomb force: where the holding force
    u_free_0 / w_0 (w = T^{-1} e_0, a rank-one update) stays within the
    bound mu rho g_n h, layer 0 is pinned at exactly zero; otherwise
    lambda = mu rho g_n h sign(u_0) acts as a constant flowing force.
    Stopped columns then freeze further layers bottom-up while the leftover
    Coulomb impulse covers their momentum (rigid-block stopping), which is
    what lets deposits and statically admissible slopes lock exactly.
    """
    n = state.n_layers
    wet = state.wet_mask()
    if not np.any(wet):
        return state.copy()

    fields = compute_interface_fields(state, partition, env, params, reg,
                                      shear_order)
    rho = params.rho
    l = partition.fractions
    h = state.h[wet]
    s = interface_spacing(replace_h(state, np.where(wet, state.h, 1.0)),
                          partition)[:, wet]
    eta = fields.eta[:, wet]
    G = fields.mass_transfer[:, wet]
    u = state.u[:, wet]
    ncol = h.size

    cond = eta / s              # conductances eta_k / s_k
    cond[0] = 0.0               # bottom interface: Coulomb, not viscous

    inertia = rho * l[:, None] * h[None, :] / dt
    half_rho_G = 0.5 * rho * G

    diag = inertia + cond[:n] + cond[1:] - half_rho_G[1:] + half_rho_G[:n]
    sub = -cond[:n] + half_rho_G[:n]     # multiplies u*_{j-1}
    sup = -cond[1:] - half_rho_G[1:]     # multiplies u*_{j+1}
    sub[0] = 0.0    # u*_{-1} = 0 (bottom wall velocity)
    sup[-1] = 0.0   # u*_{n} = 0 (atmosphere at rest)
    rhs = inertia * u

    nuk = n * ncol
    ab = np.zeros((3, nuk))
    ab[0, 1:] = sup.T.ravel()[:-1]
    ab[1, :] = diag.T.ravel()
    ab[2, :-1] = sub.T.ravel()[1:]

    b = np.empty((nuk, 2))
    b[:, 0] = rhs.T.ravel()
    unit = np.zeros((ncol, n))
    unit[:, 0] = 1.0
    b[:, 1] = unit.ravel()
    try:
        x = solve_banded((1, 1), ab, b, overwrite_ab=True, overwrite_b=True,
                         check_finite=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise SolverError("singular exchange system") from exc
    if not np.all(np.isfinite(x)):
        raise SolverError("non-finite velocities from implicit solve")

    u_free = x[:, 0].reshape(ncol, n).T   # (n, ncol)
    if friction_mode is None:
        u_out = state.u.copy()
        u_out[:, wet] = u_free
        return GridState(state.dx, state.x_centers, state.h, u_out,
                         state.z_b, state.t)

    w = x[:, 1].reshape(ncol, n).T        # response to unit basal force
    w0 = np.maximum(w[0], 1e-300)
    p_bed = rho * env.g_n * h             # basal overburden [Pa]
    hold = u_free[0] / w0                 # force that would pin layer 0

    # stop test against the stiction bound mu(I=0) = mu_s: pinning is
    # admissible only if the holding force fits the static Coulomb cone
    stop = np.abs(hold) <= params.mu_s * p_bed

    if friction_mode is FrictionMode.CONSTANT:
        c_flow = params.mu_s * p_bed
    else:
        # flowing force mu(I_b) p with I_b at the *post-solve* basal
        # velocity: |u*_0| = |u_free_0| - c w_0 makes mu(I_b) p = c a
        # quadratic in c (smaller root; real for all inputs)
        if n > 1:
            k_b = 2.0 * params.d_s / (l[0] * h * np.sqrt(p_bed / params.rho_s))
        else:
            k_b = monolayer_basal_factor * params.d_s \
                / (h * np.sqrt(p_bed / params.rho_s))
        a = k_b * np.abs(u_free[0])
        bq = k_b * w0
        B = params.I0 + a + params.mu_2 * p_bed * bq
        C = p_bed * (params.mu_s * params.I0 + params.mu_2 * a)
        disc = np.sqrt(np.maximum(B * B - 4.0 * bq * C, 0.0))
        c_flow = 2.0 * C / (B + disc)     # smaller root, stable form

    force = np.where(stop, hold, np.sign(u_free[0]) * c_flow)
    u_star = u_free - force[None, :] * w
    u_star[0] = np.where(stop, 0.0, u_star[0])
    # a flowing force that would drag layer 0 past zero within the step
    # arrests it instead (mid-step zero crossing, not a static lock)
    flipped = ~stop & (u_star[0] * u_free[0] < 0.0)
    if np.any(flipped):
        pin = np.where(flipped, hold, force)
        u_star = u_free - pin[None, :] * w
        u_star[0] = np.where(stop | flipped, 0.0, u_star[0])

    if n > 1:
        # rigid-block lock: spend leftover static Coulomb impulse on slow
        # upper layers of statically stopped columns, bottom-up, so locked
        # deposits do not carry the regularized creep
        bound_s = params.mu_s * p_bed
        budget = np.where(stop, (bound_s - np.abs(hold)) * dt, 0.0)
        rate_cap = bound_s * dt / (rho * h)
        frozen = stop
        for j in range(1, n):
            speed = np.abs(u_star[j])
            need = rho * l[j] * h * speed
            can = frozen & (need <= budget) & (speed <= rate_cap / l[j])
            u_star[j] = np.where(can, 0.0, u_star[j])
            budget = np.where(can, budget - need, budget)
            frozen = can
            if not np.any(frozen):
                break

    u_out = state.u.copy()
    u_out[:, wet] = u_star
    return GridState(state.dx, state.x_centers, state.h, u_out, state.z_b,
                     state.t)


def exchange_step(state: GridState, env: Environment,
                  partition: LayerPartition, params: RheologyParams,
                  reg: Regularization, dt: float,
                  shear_order: int = 1) -> GridState:
    """Semi-implicit inter-layer momentum exchange, no basal friction.

    Solves the frozen-coefficient tridiagonal system of
    ``_implicit_column_solve`` with the Coulomb term excluded; with G = 0 it
    conserves column momentum sum_j l_j h u_j exactly, and for one layer it
    is the identity.
    """
    return _implicit_column_solve(state, env, partition, params, reg, dt,
                                  shear_order, friction_mode=None)


def friction_step(state: GridState, env: Environment,
                  partition: LayerPartition, params: RheologyParams,
                  dt: float,
                  mode: FrictionMode = FrictionMode.MU_OF_I,
                  monolayer_basal_factor: float = 0.75) -> GridState:
    """Basal Coulomb projection in its decoupled form.

    Flowing branch: |u_0| drops by dt mu g_n / l_0, never crossing zero.
    Stop branch: if layer 0 carries less momentum than the friction impulse
    (rho l_0 h |u_0| <= dt mu rho g_n h) it stops exactly, and the leftover
    impulse freezes slow upper layers bottom-up (rigid-block stopping).
    This is the weak-coupling limit of the friction branch embedded in the
    composed step's implicit solve; it is exposed for configurations that
    skip the exchange solve and as the reference for its limit behavior.
    """
    l = partition.fractions
    wet = state.wet_mask()
    u = state.u.copy()
    if not np.any(wet):
        return GridState(state.dx, state.x_centers, state.h, u, state.z_b,
                         state.t)

    mu = _basal_mu(state, partition, env, params, mode, wet,
                   monolayer_basal_factor)
    cap = np.where(wet, dt * mu * env.g_n, 0.0)  # impulse per unit rho h

    speed0 = np.abs(u[0])
    stop0 = wet & (l[0] * speed0 <= cap)
    flow0 = wet & ~stop0
    u[0] = np.where(stop0, 0.0, u[0])
    u[0] = np.where(flow0, u[0] - np.sign(u[0]) * cap / l[0], u[0])

    if state.n_layers > 1:
        budget = np.where(stop0, cap - l[0] * speed0, 0.0)
        frozen = stop0
        for j in range(1, state.n_layers):
            speed = np.abs(u[j])
            can = frozen & (l[j] * speed <= budget) & (speed <= cap / l[j])
            u[j] = np.where(can, 0.0, u[j])
            budget = np.where(can, budget - l[j] * speed, budget)
            frozen = can
            if not np.any(frozen):
                break

    return GridState(state.dx, state.x_centers, state.h, u, state.z_b, state.t)


def step(state: GridState, partition: LayerPartition, env: Environment,
         params: RheologyParams, config: SolverConfig,
         t_remaining: float = math.inf):
    """One composed step: CFL dt -> hyperbolic -> implicit exchange+friction."""
    dt = stable_dt(state, env, config.cfl, t_remaining, config.dt_max)
    e_before = total_energy(state, partition, env, params.rho)
    new = hyperbolic_step(state, env, partition, dt,
                          config.boundary_left, config.boundary_right)
    new = _implicit_column_solve(new, env, partition, params,
                                 config.regularization, dt,
                                 config.shear_order, config.friction_mode,
                                 config.monolayer_basal_factor)
    e_after = total_energy(new, partition, env, params.rho)
    report = StepReport(
        t=new.t,
        dt=dt,
        mass=new.total_mass(),
        energy=e_after,
        max_speed=new.max_speed(),
        energy_increase_flag=e_after > e_before,
    )
    return new, report


def run(state: GridState, partition: LayerPartition, env: Environment,
        params: RheologyParams, config: SolverConfig,
        sink=None, snapshot_dt: float | None = None) -> RunResult:
    """Integrate until t_end, quiescence or a steady profile.

    ``sink(state, report)`` is called for the initial state (report None),
    then whenever the simulated time crosses a multiple of ``snapshot_dt``
    (every step if None), and for the final state.  Quiescence is
    ``max |u| < u_stop`` for ``n_stop`` consecutive steps; ``steady_tol``
    additionally stops once max |du|/dt drops below it.  Deterministic:
    identical inputs produce identical results.
    """
    if sink is not None:
        sink(state, None)

    t0 = state.t
    mass_prev = state.total_mass()
    energy_prev = total_energy(state, partition, env, params.rho)
    mass_drift = 0.0
    energy_up = 0.0
    quiet_streak = 0
    t_quiescent = None
    stop_reason = "t_end"
    next_snap = None if snapshot_dt is None else t0 + snapshot_dt
    n_steps = 0

    while state.t < config.t_end - 1.0e-15:
        if n_steps >= config.max_steps:
            if sink is not None:
                sink(state, None)
            raise SolverError(f"max_steps={config.max_steps} exceeded at t={state.t}")
        u_prev = state.u
        state, report = step(state, partition, env, params, config,
                             t_remaining=config.t_end - state.t)
        n_steps += 1

        if mass_prev > 0.0:
            mass_drift = max(mass_drift, abs(report.mass - mass_prev) / mass_prev)
        mass_prev = report.mass
        if report.energy > energy_prev:
            energy_up += report.energy - energy_prev
        energy_prev = report.energy

        if sink is not None and (next_snap is None or state.t >= next_snap - 1.0e-12):
            sink(state, report)
            if next_snap is not None:
                while next_snap <= state.t + 1.0e-12:
                    next_snap += snapshot_dt

        if report.max_speed < config.u_stop:
            quiet_streak += 1
            if quiet_streak == 1:
                t_quiescent = state.t
            if quiet_streak >= config.n_stop:
                stop_reason = "quiescent"
                break
        else:
            quiet_streak = 0
            t_quiescent = None

        if config.steady_tol is not None:
            rate = float(np.max(np.abs(state.u - u_prev))) / report.dt
            if rate < config.steady_tol:
                stop_reason = "steady"
                break

    if sink is not None:
        sink(state, None)
    return RunResult(
        state=state,
        n_steps=n_steps,
        stop_reason=stop_reason,
        t_quiescent=t_quiescent,
        mass_drift=mass_drift,
        energy_increase_total=energy_up,
        censored=stop_reason == "t_end" and t_quiescent is None,
    )
