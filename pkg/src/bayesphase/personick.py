"""Optimal Bayesian phase measurement for a pure fixed-photon probe.

For the phase-shifted probe ``rho(phi)`` and a prior ``P`` the operators

    Gamma_k = int P(phi) phi**k rho(phi) dphi,   k = 0, 1, 2

have entries ``a_l conj(a_l') M_k(2(l - l'))`` in the Fock basis, where
``M_k`` are the prior moments.  The optimal estimator operator ``B`` solves
``B Gamma_0 + Gamma_0 B = 2 Gamma_1``; the minimum mean-square error is
``tr Gamma_2 - tr(B Gamma_1)`` and the eigenvectors of ``B`` give the optimal
projective measurement, its eigenvalues the estimates.

Operators are plain complex ``numpy`` arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, InvalidGaugeError, InvalidOperatorError
from .prior import Prior
from .states import FockSuperposition

NULL_TOL = 1e-12
NEGATIVE_TOL = 1e-8
DEGENERACY_TOL = 1e-10
GAUGE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class MeasurementSpec:
    """Projective measurement: row ``k`` of ``vectors`` is ``|h_k>``.

    Outcomes are ordered by descending estimate.
    """

    vectors: np.ndarray
    estimates: np.ndarray

    @property
    def dim(self) -> int:
        return self.estimates.size


@dataclass(frozen=True, eq=False)
class PersonickSolution:
    gamma0: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    tr_gamma2: float
    b_op: np.ndarray
    mmse: float
    measurement: MeasurementSpec


class MomentTable:
    """Prior moments ``M_k(2(l - l'))`` arranged as ``(n+1) x (n+1)`` matrices.

    They depend only on the prior and ``n``, so repeated solves for different
    amplitudes (the optimizer's inner loop) reuse them.
    """

    def __init__(self, prior: Prior, n: int):
        self.prior = prior
        self.n = int(n)
        d = np.arange(-self.n, self.n + 1)
        ell = np.arange(self.n + 1)
        index = (ell[:, None] - ell[None, :]) + self.n
        self.m = []
        for k in range(3):
            vals = np.asarray(prior.moments(k, 2.0 * d), dtype=complex)
            self.m.append(vals[index])
        self.tr_weight = self.m[2][0, 0].real  # M_2(0) = int phi^2 P

    def gamma(self, coeffs, k: int) -> np.ndarray:
        a = np.asarray(coeffs, dtype=complex)
        return np.outer(a, a.conj()) * self.m[k]

    def mmse(self, coeffs) -> float:
        """MMSE for a single amplitude vector (not necessarily normalized)."""
        return float(self.mmse_batch(np.asarray(coeffs, dtype=complex)[None, :])[0])

    def mmse_batch(self, coeffs) -> np.ndarray:
        """MMSE for a stack of amplitude vectors, shape ``(N, n+1)``."""
        a = np.asarray(coeffs, dtype=complex)
        a = a / np.linalg.norm(a, axis=1, keepdims=True)
        rho = a[:, :, None] * a.conj()[:, None, :]
        g0 = rho * self.m[0]
        g1 = rho * self.m[1]
        gam, u = np.linalg.eigh(g0)
        gam = np.clip(gam, 0.0, None)
        g1e = np.conj(np.swapaxes(u, 1, 2)) @ g1 @ u
        denom = gam[:, :, None] + gam[:, None, :]
        mask = denom > NULL_TOL
        ratio = np.where(mask, np.abs(g1e) ** 2 / np.where(mask, denom, 1.0), 0.0)
        tr_bg1 = 2.0 * ratio.sum(axis=(1, 2))
        # tr Gamma_2 = sum_l |a_l|^2 M_2(0) = M_2(0)
        return self.tr_weight - tr_bg1


def build_gamma(state: FockSuperposition, prior: Prior, k: int) -> np.ndarray:
    """``Gamma_k`` on the ``(n+1)``-dimensional Fock basis."""
    if k not in (0, 1, 2):
        raise DomainError(f"k must be 0, 1 or 2, got {k}")
    return MomentTable(prior, state.n).gamma(state.coeffs, k)


def _check_hermitian(op, name):
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise InvalidOperatorError(f"{name} must be a square matrix")
    scale = max(1.0, float(np.max(np.abs(op))))
    if np.max(np.abs(op - op.conj().T)) > 1e-12 * scale:
        raise InvalidOperatorError(f"{name} is not Hermitian")
    return op


def solve_b(gamma0, gamma1, null_tol: float = NULL_TOL) -> np.ndarray:
    """Minimal-norm solution of ``B Gamma_0 + Gamma_0 B = 2 Gamma_1``.

    In the eigenbasis of ``Gamma_0 = U diag(g) U^dagger`` the equation
    decouples entry-wise: ``B_ij = 2 (U^dagger Gamma_1 U)_ij / (g_i + g_j)``.
    Entries with ``g_i + g_j <= null_tol`` (the kernel block) are set to zero.
    """
    g0 = _check_hermitian(gamma0, "Gamma_0")
    g1 = _check_hermitian(gamma1, "Gamma_1")
    if g0.shape != g1.shape:
        raise InvalidOperatorError("Gamma_0 and Gamma_1 differ in shape")
    gam, u = np.linalg.eigh(g0)
    if gam[0] < -NEGATIVE_TOL:
        raise InvalidOperatorError(f"Gamma_0 has negative eigenvalue {gam[0]:.3g}")
    gam = np.clip(gam, 0.0, None)
    denom = gam[:, None] + gam[None, :]
    g1e = u.conj().T @ g1 @ u
    mask = denom > null_tol
    be = np.zeros_like(g1e)
    be[mask] = 2.0 * g1e[mask] / denom[mask]
    b = u @ be @ u.conj().T
    return 0.5 * (b + b.conj().T)


def anticommutator_residual(b, gamma0, gamma1, null_tol: float = NULL_TOL) -> float:
    """Frobenius norm of ``B G0 + G0 B - 2 G1`` projected on the support of G0."""
    gam, u = np.linalg.eigh(gamma0)
    v = u[:, gam > null_tol]
    p = v @ v.conj().T
    r = b @ gamma0 + gamma0 @ b - 2.0 * gamma1
    return float(np.linalg.norm(p @ r @ p))


def _phase_fix(v):
    mag = np.abs(v)
    idx = int(np.flatnonzero(mag >= mag.max() - 1e-9)[0])
    return v * np.exp(-1j * np.angle(v[idx]))


def measurement_from_operator(b, tol: float = DEGENERACY_TOL) -> MeasurementSpec:
    """Eigen-decomposition of ``B`` in a deterministic gauge.

    Eigenvalues closer than ``tol`` form one block whose basis is rebuilt by
    Gram-Schmidt on the projected canonical basis vectors.  Every vector has
    its first largest-magnitude entry made real positive.
    """
    b = np.asarray(b, dtype=complex)
    vals, vecs = np.linalg.eigh(b)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    dim = vals.size
    out_vals, out_vecs = [], []
    i = 0
    while i < dim:
        j = i + 1
        while j < dim and vals[j - 1] - vals[j] < tol:
            j += 1
        block = vecs[:, i:j]
        if j - i == 1:
            chosen = [block[:, 0]]
        else:
            proj = block @ block.conj().T
            chosen = []
            for e in np.eye(dim, dtype=complex):
                w = proj @ e
                for c in chosen:
                    w = w - np.vdot(c, w) * c
                nrm = np.linalg.norm(w)
                if nrm > 1e-8:
                    chosen.append(w / nrm)
                if len(chosen) == j - i:
                    break
            chosen.sort(key=lambda v: tuple(-_phase_fix(v).real))
        mean_val = float(np.mean(vals[i:j]))
        for v in chosen:
            out_vecs.append(_phase_fix(v))
            out_vals.append(mean_val if j - i > 1 else float(vals[i]))
        i = j
    vectors = np.array(out_vecs)
    estimates = np.array(out_vals)
    vectors.setflags(write=False)
    estimates.setflags(write=False)
    return MeasurementSpec(vectors, estimates)


def _trace_real(x) -> float:
    return float(np.real(np.trace(x)))


def solve(state: FockSuperposition, prior: Prior, table: MomentTable | None = None) -> PersonickSolution:
    """Optimal measurement and MMSE for ``state`` under ``prior``."""
    table = table or MomentTable(prior, state.n)
    g0, g1, g2 = (table.gamma(state.coeffs, k) for k in range(3))
    b = solve_b(g0, g1)
    tr2 = _trace_real(g2)
    mmse = tr2 - _trace_real(b @ g1)
    return PersonickSolution(g0, g1, g2, tr2, b, mmse, measurement_from_operator(b))


def outcome_probabilities(state: FockSuperposition, meas: MeasurementSpec, phi) -> np.ndarray:
    """Born probabilities ``|<h_k|psi(phi)>|^2``, shape ``(len(phi), dim)``."""
    amps = state.at_phase(np.atleast_1d(np.asarray(phi, dtype=float)))
    return np.abs(amps @ meas.vectors.conj().T) ** 2


def mse_of_measurement(state: FockSuperposition, prior: Prior, meas: MeasurementSpec,
                       quad_size: int | None = None) -> float:
    """Outcome-sum mean-square error ``int P sum_k P(k|phi) (h_k - phi)^2``.

    Integrated numerically over the prior (Gauss-Legendre for the flat
    windows, Simpson on the nodes of a grid prior).
    """
    if meas.dim != state.n + 1:
        raise DomainError(f"measurement has dimension {meas.dim}, state needs {state.n + 1}")
    if quad_size is None:
        lo, hi = prior.support
        quad_size = 128 + int(np.ceil(4 * state.n * (hi - lo)))
    x, w = prior.quadrature(quad_size)
    probs = outcome_probabilities(state, meas, x)
    sq = (meas.estimates[None, :] - x[:, None]) ** 2
    return float(w @ np.sum(probs * sq, axis=1))


def mmse_flat_closed_form(state: FockSuperposition) -> float:
    """Flat-prior MMSE; depends only on the populations ``|a_l|^2``.

    ``pi^2/3 - sum_{l != l'} p_l p_l' / (2 (l - l')^2 (p_l + p_l'))``.
    """
    p = state.populations
    ell = np.arange(p.size)
    diff = ell[:, None] - ell[None, :]
    s = p[:, None] + p[None, :]
    keep = (diff != 0) & (s >= 1e-14)
    terms = np.zeros_like(s)
    terms[keep] = (p[:, None] * p[None, :])[keep] / (2.0 * diff[keep] ** 2 * s[keep])
    return float(np.pi ** 2 / 3 - terms.sum())


# delta / m^2 = sum_k c_k (m n)^(2k) near m n = 0
_NOON_SERIES = np.array([1 / 12, -1 / 36, 1 / 180, -1 / 2100, 1 / 42525, -1 / 1309770,
                         1 / 56756700, -1 / 3283780500, 2 / 488462349375, -1 / 22686362448750])
_SERIES_BELOW = 0.5


def mmse_noon_truncated_closed_form(n: int, m: float) -> float:
    """NOON-state MMSE for the uniform prior on ``[0, m]``.

    The closed form cancels catastrophically for small ``m n``; below 0.5 the
    Taylor series ``m^2 (1/12 - (mn)^2/36 + (mn)^4/180 - ...)`` is used
    instead (truncation error below 1e-18 relative).
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if not 0.0 < m <= 2 * np.pi + 1e-12:
        raise DomainError(f"m must lie in (0, 2pi], got {m}")
    x = m * n
    if x < _SERIES_BELOW:
        return float(m * m * np.polynomial.polynomial.polyval(x * x, _NOON_SERIES))
    num = (2 * x ** 4 - 3 * x ** 2 + (3 - 3 * x ** 2) * np.cos(2 * x)
           + 6 * x * np.sin(2 * x) - 3)
    return float(num / (24 * m * m * n ** 4))


def gauge_perturb(solution: PersonickSolution, k_op) -> PersonickSolution:
    """Replace ``B`` by ``B + K`` for a Hermitian ``K`` with ``K G0 = G0 K = 0``.

    Such a ``K`` leaves the anticommutator equation and the MMSE unchanged;
    the measurement is re-extracted from the shifted operator.
    """
    k_op = np.asarray(k_op, dtype=complex)
    if k_op.shape != solution.b_op.shape:
        raise InvalidGaugeError("gauge operator has the wrong shape")
    if np.max(np.abs(k_op - k_op.conj().T), initial=0.0) > 1e-12:
        raise InvalidGaugeError("gauge operator is not Hermitian")
    g0 = solution.gamma0
    if (np.linalg.norm(k_op @ g0) >= GAUGE_TOL
            or np.linalg.norm(g0 @ k_op) >= GAUGE_TOL):
        raise InvalidGaugeError("gauge operator does not annihilate Gamma_0")
    b = solution.b_op + k_op
    mmse = solution.tr_gamma2 - _trace_real(b @ solution.gamma1)
    if abs(mmse - solution.mmse) > GAUGE_TOL:
        raise InvalidGaugeError(f"gauge shift changed the MMSE by {mmse - solution.mmse:.3g}")
    return replace(solution, b_op=b, mmse=mmse, measurement=measurement_from_operator(b))


__all__ = [
    "MeasurementSpec", "PersonickSolution", "MomentTable", "build_gamma", "solve_b",
    "anticommutator_residual", "measurement_from_operator", "solve", "outcome_probabilities",
    "mse_of_measurement", "mmse_flat_closed_form", "mmse_noon_truncated_closed_form",
    "gauge_perturb",
]
