"""Probe-state optimization under the normalization constraint."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError
from .personick import MomentTable, mmse_flat_closed_form, solve
from .prior import Prior
from .states import FockSuperposition, beam_splitter_state, noon

DEFAULT_RESTARTS = 16
XATOL = 1e-10
FATOL = 1e-12
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    state: FockSuperposition
    mmse: float
    restarts_used: int
    converged: bool
    #: for grid searches, the largest objective change to a neighbouring grid point
    resolution: float = 0.0


def sphere_point(angles) -> np.ndarray:
    """Unit vector in R^(n+1) from n hyperspherical angles."""
    angles = np.asarray(angles, dtype=float)
    n = angles.size
    out = np.empty(n + 1)
    s = 1.0
    for k in range(n):
        out[k] = s * np.cos(angles[k])
        s *= np.sin(angles[k])
    out[n] = s
    return out


def sphere_angles(x) -> np.ndarray:
    """Inverse of :func:`sphere_point` for a real unit vector."""
    x = np.asarray(x, dtype=float)
    n = x.size - 1
    angles = np.zeros(n)
    for k in range(n - 1):
        tail = np.linalg.norm(x[k:])
        angles[k] = np.arccos(np.clip(x[k] / tail, -1.0, 1.0)) if tail > 0 else 0.0
    if n >= 1:
        angles[n - 1] = np.arctan2(x[n], x[n - 1])
    return angles


def _coefficients(params, n: int, allow_phases: bool) -> np.ndarray:
    amps = sphere_point(params[:n]).astype(complex)
    if allow_phases:
        amps[1:] *= np.exp(1j * np.asarray(params[n:]))
    return amps


def canonicalize(state: FockSuperposition, table: MomentTable | None = None) -> FockSuperposition:
    """Deterministic representative of a state's MMSE-equivalence class.

    * moduli: when replacing every amplitude by its modulus costs nothing
      (always the case for the flat prior), the moduli are reported;
    * global phase: first non-zero amplitude real and positive;
    * reflection ``a_l -> a_(n-l)``: reported when it sorts first and has the
      same MMSE (true whenever the prior is mirror symmetric).
    """
    def fix(c):
        nz = np.flatnonzero(np.abs(c) > 1e-12)
        c = c * np.exp(-1j * np.angle(c[nz[0]]))
        c = np.where(np.abs(c.imag) < 1e-13, c.real, c)
        return c.astype(complex)

    c = fix(np.array(state.coeffs))
    if table is not None:
        mod = np.abs(c).astype(complex)
        if table.mmse(mod) - table.mmse(c) < 1e-12:
            c = mod
    r = fix(c[::-1].copy())

    def key(v):
        return tuple(np.round(np.column_stack([v.real, v.imag]).ravel(), 9))

    if key(r) < key(c) and table is not None:
        if abs(table.mmse(r) - table.mmse(c)) < 1e-12:
            c = r
    return FockSuperposition.normalized(c)


def _seeds(n: int, allow_phases: bool, restarts: int, rng: np.random.Generator):
    n_phase = n if allow_phases else 0
    fixed = [
        np.full(n + 1, 1.0 / np.sqrt(n + 1)),
        noon(n).coeffs.real,
        beam_splitter_state(n, 0.5).coeffs.real,
    ]
    for i in range(restarts):
        if i < len(fixed):
            angles = sphere_angles(fixed[i])
            phases = np.zeros(n_phase)
        else:
            v = rng.normal(size=n + 1)
            angles = sphere_angles(v / np.linalg.norm(v))
            phases = rng.uniform(-np.pi, np.pi, n_phase)
        yield np.concatenate([angles, phases])


def optimize_coefficients(n: int, prior: Prior, allow_phases: bool = False, *,
                          restarts: int = DEFAULT_RESTARTS, seed: int = 0,
                          maxfev: int | None = None) -> OptimizationResult:
    """Minimize the MMSE over normalized ``n``-photon probes.

    Multi-start Nelder-Mead over hyperspherical amplitude angles and, with
    ``allow_phases``, the phases of ``a_1 .. a_n`` relative to ``a_0``.
    Seeds: uniform amplitudes, NOON, balanced beam splitter, then random
    points drawn from ``seed``.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if restarts < 1:
        raise DomainError("need at least one restart")
    n = int(n)
    table = MomentTable(prior, n)
    rng = np.random.default_rng(seed)

    def objective(p):
        return table.mmse(_coefficients(p, n, allow_phases))

    best = None
    for x0 in _seeds(n, allow_phases, restarts, rng):
        dim = x0.size
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"xatol": XATOL, "fatol": FATOL,
                                "maxfev": maxfev or 2000 * dim, "maxiter": maxfev or 2000 * dim,
                                "adaptive": dim > 4})
        if best is None or res.fun < best.fun:
            best = res
    state = canonicalize(FockSuperposition.normalized(_coefficients(best.x, n, allow_phases)), table)
    return OptimizationResult(state, solve(state, prior, table).mmse, restarts, bool(best.success))


def brute_force_oracle(n: int, prior: Prior, grid_steps: int, chunk: int = 16384) -> OptimizationResult:
    """Exhaustive search over non-negative real amplitudes.

    The ``n`` hyperspherical angles each take ``grid_steps + 1`` values in
    ``[0, pi/2]``.  ``resolution`` reports how much the objective changes to
    the best point's grid neighbours.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if n > 3:
        raise DomainError(f"brute force refused for n = {n} > 3 (cost grows as grid_steps**n)")
    if grid_steps < 32:
        raise DomainError("grid_steps must be at least 32")
    n = int(n)
    table = MomentTable(prior, n)
    axis = np.linspace(0.0, np.pi / 2, grid_steps + 1)
    shape = (grid_steps + 1,) * n
    total = (grid_steps + 1) ** n
    values = np.empty(total)
    for start in range(0, total, chunk):
        idx = np.unravel_index(np.arange(start, min(start + chunk, total)), shape)
        angles = np.stack([axis[i] for i in idx], axis=1)
        amps = np.empty((angles.shape[0], n + 1))
        s = np.ones(angles.shape[0])
        for k in range(n):
            amps[:, k] = s * np.cos(angles[:, k])
            s = s * np.sin(angles[:, k])
        amps[:, n] = s
        values[start:start + angles.shape[0]] = table.mmse_batch(amps)
    flat = int(np.argmin(values))
    best_idx = np.unravel_index(flat, shape)
    grid = values.reshape(shape)
    spread = 0.0
    for step in itertools.product((-1, 0, 1), repeat=n):
        nb = tuple(i + d for i, d in zip(best_idx, step))
        if all(0 <= i <= grid_steps for i in nb):
            spread = max(spread, abs(grid[nb] - values[flat]))
    state = FockSuperposition.normalized(sphere_point(axis[list(best_idx)]))
    return OptimizationResult(state, float(values[flat]), 1, True, resolution=spread)


def golden_section(f, lo: float, hi: float, tol: float = 1e-6) -> float:
    """Minimizer of a unimodal ``f`` on ``[lo, hi]`` to within ``tol``."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def optimize_bs_transmissivity(n: int, scan: int = 101, tol: float = 1e-6) -> tuple[float, float]:
    """Best beam-splitter transmissivity for the flat prior.

    A coarse scan brackets the minimum, golden-section search refines it.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")

    def f(tau):
        return mmse_flat_closed_form(beam_splitter_state(int(n), float(tau)))

    taus = np.linspace(0.0, 1.0, scan)
    vals = np.array([f(t) for t in taus])
    i = int(np.argmin(vals))
    tau = golden_section(f, taus[max(i - 1, 0)], taus[min(i + 1, scan - 1)], tol)
    return tau, f(tau)
