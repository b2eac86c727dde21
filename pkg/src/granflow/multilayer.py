"""Discrete multilayer column state and its closed-form interface quantities.

A thin flow of total thickness ``h(x)`` is split into ``N`` layers of fixed
fractions ``l_j`` (``sum l_j = 1``); each layer carries one downslope velocity
``u_j(x)``.  Everything else at the layer interfaces -- hydrostatic pressure,
shear-rate estimates, effective viscosity, mass transfer and the viscous
coupling -- is a closed-form function of ``(h, u)`` and is computed here.

Conventions
-----------
* layers ``j = 0..N-1`` from bottom to top, ``u`` has shape ``(N, nx)``;
* interfaces ``k = 0..N``: ``k = 0`` is the bottom, ``k = N`` the free
  surface; interface arrays have shape ``(N+1, nx)``;
* the frame is slope-aligned: ``x`` points downslope, ``z_b`` is the bottom
  elevation in that frame (0 for a plane), gravity splits into a normal part
  ``g_n = g cos(theta)`` and a driving part ``g_t = g sin(theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rheology import (
    GRAVITY,
    Regularization,
    RheologyParams,
    effective_viscosity,
)

#: Cells thinner than this [m] are treated as dry: velocities forced to zero,
#: no shear or pressure evaluation.  Far below any particle diameter.
H_DRY = 1.0e-8


@dataclass(frozen=True)
class LayerPartition:
    """Normalized layer fractions l_0..l_{N-1} with cumulative sums.

    ``cumulative`` has length N+1: ``cumulative[k]`` is the thickness fraction
    below interface ``k`` (0 at the bottom, 1 at the surface).
    """

    fractions: np.ndarray
    cumulative: np.ndarray = field(init=False)

    def __post_init__(self):
        frac = np.asarray(self.fractions, dtype=float)
        if frac.ndim != 1 or frac.size < 1:
            raise ValueError("fractions must be a 1-D array with at least one layer")
        if np.any(frac <= 0.0):
            raise ValueError("all layer fractions must be positive")
        if abs(frac.sum() - 1.0) > 1.0e-12:
            raise ValueError(f"layer fractions must sum to 1, got {frac.sum()!r}")
        object.__setattr__(self, "fractions", frac)
        cum = np.concatenate([[0.0], np.cumsum(frac)])
        cum[-1] = 1.0
        object.__setattr__(self, "cumulative", cum)

    @property
    def n_layers(self) -> int:
        return self.fractions.size

    @staticmethod
    def uniform(n_layers: int) -> "LayerPartition":
        if n_layers < 1:
            raise ValueError("need at least one layer")
        return LayerPartition(np.full(n_layers, 1.0 / n_layers))


@dataclass(frozen=True)
class Environment:
    """Gravity split, surface pressure and basal mass exchange."""

    theta: float = 0.0
    g: float = GRAVITY
    p_S: float = 0.0
    G_half: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta < math.pi / 2:
            raise ValueError(f"theta must be in [0, pi/2), got {self.theta}")

    @property
    def g_n(self) -> float:
        """Slope-normal gravity g cos(theta)."""
        return self.g * math.cos(self.theta)

    @property
    def g_t(self) -> float:
        """Downslope driving gravity g sin(theta)."""
        return self.g * math.sin(self.theta)


@dataclass
class GridState:
    """Cell-centered state on a 1-D mesh: total thickness and layer velocities."""

    dx: float
    x_centers: np.ndarray
    h: np.ndarray
    u: np.ndarray
    z_b: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.x_centers = np.asarray(self.x_centers, dtype=float)
        self.h = np.asarray(self.h, dtype=float)
        self.u = np.atleast_2d(np.asarray(self.u, dtype=float))
        self.z_b = np.asarray(self.z_b, dtype=float)
        if self.h.shape != self.x_centers.shape or self.z_b.shape != self.h.shape:
            raise ValueError("h, z_b and x_centers must share one shape")
        if self.u.shape[1] != self.h.size:
            raise ValueError("u must have shape (n_layers, nx)")
        if np.any(self.h < 0.0):
            raise ValueError("thickness must be non-negative")

    @property
    def nx(self) -> int:
        return self.h.size

    @property
    def n_layers(self) -> int:
        return self.u.shape[0]

    def copy(self) -> "GridState":
        return GridState(self.dx, self.x_centers.copy(), self.h.copy(),
                         self.u.copy(), self.z_b.copy(), self.t)

    def wet_mask(self) -> np.ndarray:
        return self.h >= H_DRY

    def total_mass(self) -> float:
        """Cross-sectional volume integral of h [m^2]."""
        return float(np.sum(self.h) * self.dx)

    def max_speed(self) -> float:
        return float(np.max(np.abs(self.u))) if self.u.size else 0.0


@dataclass
class InterfaceFields:
    """Per-interface quantities, all arrays shaped (N+1, nx).

    ``coupling[0]`` is not populated (the bottom interface carries Coulomb
    friction, handled by the solver's friction step); ``shear[0]`` holds the
    one-sided basal shear estimate used for the basal inertial number.
    """

    pressure: np.ndarray
    shear: np.ndarray
    eta: np.ndarray
    mass_transfer: np.ndarray
    coupling: np.ndarray


def interface_pressure(h, partition: LayerPartition, env: Environment,
                       alpha: int, rho: float):
    """Hydrostatic pressure at interface ``alpha`` (0 = bottom, N = surface).

    p = p_S + rho * g_n * h * (1 - L_alpha), the weight of the layers above.
    """
    if not 0 <= alpha <= partition.n_layers:
        raise ValueError(f"interface index out of range: {alpha}")
    h = np.asarray(h, dtype=float)
    out = env.p_S + rho * env.g_n * h * (1.0 - partition.cumulative[alpha])
    return float(out) if out.ndim == 0 else out


def interface_pressures(state: GridState, partition: LayerPartition,
                        env: Environment, rho: float) -> np.ndarray:
    """All interface pressures at once, shape (N+1, nx)."""
    above = (1.0 - partition.cumulative)[:, None]
    return env.p_S + rho * env.g_n * above * state.h[None, :]


def interface_spacing(state: GridState, partition: LayerPartition) -> np.ndarray:
    """Distance between midpoints of the layers adjoining each interface.

    Shape (N+1, nx); entry k = (h_{k-1} + h_k)/2 for interior interfaces,
    and the one-sided half/full layer heights at the bottom and surface
    (bottom: half of layer 0, down to the no-slip wall; surface: layer N-1).
    """
    l = partition.fractions
    n = partition.n_layers
    s = np.empty((n + 1, state.nx))
    s[0] = 0.5 * l[0] * state.h
    if n > 1:
        s[1:n] = 0.5 * (l[:-1] + l[1:])[:, None] * state.h[None, :]
    s[n] = l[-1] * state.h
    return s


def velocity_jumps(state: GridState) -> np.ndarray:
    """u_{k} - u_{k-1} across interior interfaces; 0 rows at bottom/surface."""
    n = state.n_layers
    du = np.zeros((n + 1, state.nx))
    if n > 1:
        du[1:n] = np.diff(state.u, axis=0)
    return du


def shear_estimate(state: GridState, partition: LayerPartition,
                   order: int = 1) -> np.ndarray:
    """Norm of the strain rate at each interface, shape (N+1, nx).

    Interior interfaces use the velocity-jump quotient
    ``Q_k = (u_k - u_{k-1}) / s_k`` with ``s_k`` the midpoint spacing; at
    ``order=2`` the downslope-gradient correction
    ``sqrt(Q^2 + (d/dx (u_k + u_{k-1}))^2)`` is added.  Row 0 carries the
    one-sided basal estimate (2|u_0|/(l_0 h), or |u_0|/h for one layer) and
    row N the surface-side estimate |u_{N-1}| / (l_{N-1} h).  Dry cells
    return 0 in every row.
    """
    if order not in (1, 2):
        raise ValueError(f"shear order must be 1 or 2, got {order}")
    n = state.n_layers
    wet = state.wet_mask()
    h_safe = np.where(wet, state.h, 1.0)
    s = interface_spacing(replace_h(state, h_safe), partition)
    q = np.abs(velocity_jumps(state)) / s
    if n > 1:
        q[0] = 2.0 * np.abs(state.u[0]) / (partition.fractions[0] * h_safe)
    else:
        q[0] = np.abs(state.u[0]) / h_safe
    q[n] = np.abs(state.u[-1]) / (partition.fractions[-1] * h_safe)
    if order == 2 and n > 1:
        usum = state.u[1:] + state.u[:-1]
        grad = gradient_x(usum, state.dx)
        q[1:n] = np.sqrt(q[1:n] ** 2 + grad ** 2)
    return np.where(wet[None, :], q, 0.0)


def gradient_x(values: np.ndarray, dx: float) -> np.ndarray:
    """d/dx by centered differences, one-sided at the boundary cells.

    Single-cell grids carry no representable x-variation and return zeros.
    """
    if values.shape[-1] < 2:
        return np.zeros_like(values)
    return np.gradient(values, dx, axis=-1)


def replace_h(state: GridState, h: np.ndarray) -> GridState:
    """Shallow view of ``state`` with another thickness array (no copies)."""
    out = GridState.__new__(GridState)
    out.dx = state.dx
    out.x_centers = state.x_centers
    out.h = h
    out.u = state.u
    out.z_b = state.z_b
    out.t = state.t
    return out


def xi_coefficient(partition: LayerPartition, alpha: int, gamma: int) -> float:
    """Mass-transfer weight xi_{alpha,gamma} (1-based layer indices).

    Equals ``(1 - L_alpha) l_gamma`` for gamma <= alpha and
    ``-L_alpha l_gamma`` otherwise; each row sums to zero.
    """
    n = partition.n_layers
    if not (1 <= alpha <= n and 1 <= gamma <= n):
        raise ValueError(f"indices out of range: alpha={alpha}, gamma={gamma}")
    L_a = partition.cumulative[alpha]
    l_g = partition.fractions[gamma - 1]
    return (1.0 - L_a) * l_g if gamma <= alpha else -L_a * l_g


def xi_matrix(partition: LayerPartition) -> np.ndarray:
    """All xi_{alpha,gamma} as an (N, N) array, rows alpha = 1..N."""
    n = partition.n_layers
    l = partition.fractions
    L = partition.cumulative[1:]
    gamma_le_alpha = np.tril(np.ones((n, n), dtype=bool))
    return np.where(gamma_le_alpha, (1.0 - L)[:, None] * l[None, :],
                    -L[:, None] * l[None, :])


def mass_transfer(state: GridState, partition: LayerPartition,
                  env: Environment) -> np.ndarray:
    """Normal mass flux G through every interface, shape (N+1, nx).

    G_k = (1 - L_k) G_{1/2} + sum_gamma xi_{k,gamma} d/dx(h u_gamma), with
    centered differences (one-sided at the boundary cells).  The surface row
    is identically zero: no exchange with the atmosphere.
    """
    n = state.n_layers
    q = state.h[None, :] * state.u
    div_q = gradient_x(q, state.dx)
    G = np.empty((n + 1, state.nx))
    G[0] = env.G_half
    if n > 1:
        G[1:n] = xi_matrix(partition)[:-1] @ div_q \
            + (1.0 - partition.cumulative[1:n])[:, None] * env.G_half
    G[n] = 0.0
    return G


def interface_viscosity(state: GridState, partition: LayerPartition,
                        env: Environment, params: RheologyParams,
                        reg: Regularization, shear: np.ndarray) -> np.ndarray:
    """Effective viscosity at interfaces 1..N from pressure and shear.

    Row 0 is left at zero: the bottom interface is Coulomb friction, not a
    viscous coupling.  With p_S = 0 the surface row is zero as well.
    """
    n = state.n_layers
    p = interface_pressures(state, partition, env, params.rho)
    eta = np.zeros_like(p)
    eta[1:] = effective_viscosity(shear[1:], p[1:], params, reg,
                                  state.h[None, :])
    eta[:, ~state.wet_mask()] = 0.0
    return eta


def viscous_coupling(state: GridState, partition: LayerPartition,
                     eta: np.ndarray) -> np.ndarray:
    """Interface shear force K_k = -eta_k (u_k - u_{k-1}) / s_k, (N+1, nx).

    Opposes the velocity jump across each interior interface.  The surface
    row uses the atmosphere at rest, K_N = eta_N u_{N-1} / (l_{N-1} h); the
    bottom row is zero here (Coulomb friction lives in the solver).
    """
    n = state.n_layers
    wet = state.wet_mask()
    h_safe = np.where(wet, state.h, 1.0)
    s = interface_spacing(replace_h(state, h_safe), partition)
    K = -eta * velocity_jumps(state) / s
    K[n] = eta[n] * state.u[-1] / (partition.fractions[-1] * h_safe)
    K[0] = 0.0
    return np.where(wet[None, :], K, 0.0)


def basal_shear_estimate(state: GridState, partition: LayerPartition,
                         monolayer_factor: float = 0.75) -> np.ndarray:
    """One-sided shear estimate at the bottom.

    2|u_0|/(l_0 h) for a multilayer state (difference to the no-slip wall
    over half the bottom layer); monolayer_factor * |u_0|/h for one layer.
    The factor encodes the assumed profile shape behind the depth average
    (2.5 for a no-slip Bagnold profile, below 1 for plug-like flow with
    basal slip); the 0.75 default matches the sliding-dominated regime the
    depth-averaged model is used for.
    """
    wet = state.wet_mask()
    h_safe = np.where(wet, state.h, 1.0)
    if state.n_layers > 1:
        q = 2.0 * np.abs(state.u[0]) / (partition.fractions[0] * h_safe)
    else:
        q = monolayer_factor * np.abs(state.u[0]) / h_safe
    return np.where(wet, q, 0.0)


def bottom_friction_bound(h, env: Environment, params: RheologyParams,
                          I_basal=None):
    """Coulomb bound mu * rho * g_n * h [Pa] on the basal shear stress.

    ``I_basal`` selects mu(I); None means the constant-friction variant
    (mu = mu_s).  The solver applies the bound opposing u_0 and caps the
    stopping force so the sign of u_0 never flips.
    """
    h = np.asarray(h, dtype=float)
    if I_basal is None:
        mu = params.mu_s
    else:
        I = np.asarray(I_basal, dtype=float)
        mu = params.mu_s + (params.mu_2 - params.mu_s) * I / (params.I0 + I)
    out = mu * params.rho * env.g_n * h
    return float(out) if out.ndim == 0 else out


def compute_interface_fields(state: GridState, partition: LayerPartition,
                             env: Environment, params: RheologyParams,
                             reg: Regularization,
                             shear_order: int = 1) -> InterfaceFields:
    """Evaluate every interface quantity for the current state."""
    p = interface_pressures(state, partition, env, params.rho)
    shear = shear_estimate(state, partition, shear_order)
    eta = interface_viscosity(state, partition, env, params, reg, shear)
    G = mass_transfer(state, partition, env)
    K = viscous_coupling(state, partition, eta)
    return InterfaceFields(pressure=p, shear=shear, eta=eta,
                           mass_transfer=G, coupling=K)


def vertical_velocity(state: GridState, partition: LayerPartition,
                      env: Environment):
    """Slope-normal velocity endpoints of the linear-in-z profile per layer.

    Returns ``(w_bottom, w_top)`` with shape (N, nx): the value at the base
    of each layer (continuity side coming from below) and at its top within
    the layer.  Built bottom-up from the basal kinematic condition
    ``w = u_0 dz_b/dx - G_{1/2}`` and the incompressibility of each layer;
    across interfaces w jumps by ``(u_{j+1} - u_j) dz_k/dx``.
    """
    n = state.n_layers
    dzb = gradient_x(state.z_b, state.dx)
    du_dx = gradient_x(state.u, state.dx)
    h_layer = partition.fractions[:, None] * state.h[None, :]
    z_if = state.z_b[None, :] + partition.cumulative[:, None] * state.h[None, :]

    w_bottom = np.empty((n, state.nx))
    w_top = np.empty((n, state.nx))
    w_plus = state.u[0] * dzb - env.G_half
    for j in range(n):
        w_bottom[j] = w_plus
        w_top[j] = w_plus - h_layer[j] * du_dx[j]
        if j + 1 < n:
            dz_if = gradient_x(z_if[j + 1], state.dx)
            w_plus = (state.u[j + 1] - state.u[j]) * dz_if + w_top[j]
    return w_bottom, w_top


def total_energy(state: GridState, partition: LayerPartition,
                 env: Environment, rho: float) -> float:
    """Column energy rho * sum_cells sum_layers E_j * dx.

    E_j = h_j (u_j^2 / 2 + p_S / rho + g_n (z_b + h/2)); the potential term
    telescopes so a column at rest contributes g_n h^2 / 2 (+ surface work).
    """
    h_layer = partition.fractions[:, None] * state.h[None, :]
    e = h_layer * (0.5 * state.u ** 2
                   + env.p_S / rho
                   + env.g_n * (state.z_b + 0.5 * state.h)[None, :])
    return float(rho * np.sum(e) * state.dx)
