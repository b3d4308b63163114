"""Prior densities over the phase and their oscillatory moments.

Every operator the estimator needs reduces to integrals of the form

    M_k(omega) = int phi**k exp(i omega phi) P(phi) dphi,   k = 0, 1, 2,

so each prior exposes :meth:`moment`.  Flat and truncated-flat priors use
exact antiderivatives; grid priors (posteriors) use composite Simpson
quadrature on their nodes.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ._quad import gauss_legendre, simpson_weights
from .errors import DegeneratePosteriorError, DomainError

TWO_PI = 2.0 * np.pi
DEFAULT_GRID_NODES = 4096
# below this |omega| the closed forms switch to their omega = 0 branch
OMEGA_ZERO = 1e-12
EVIDENCE_FLOOR = 1e-14
_PHASE_SLACK = 1e-12

Likelihood = Callable[[np.ndarray], np.ndarray]


def _check_phase(phi):
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < -_PHASE_SLACK) or np.any(phi > TWO_PI + _PHASE_SLACK):
        raise DomainError(f"phase outside [0, 2pi]: {phi}")
    return phi


def _window_moment(lo: float, hi: float, k: int, omega: float) -> complex:
    """Exact ``int_lo^hi phi**k exp(i omega phi) dphi`` for k <= 2."""
    if abs(omega) < OMEGA_ZERO:
        return complex((hi ** (k + 1) - lo ** (k + 1)) / (k + 1))

    iw = 1j * omega

    def antiderivative(x):
        e = np.exp(iw * x)
        if k == 0:
            return e / iw
        if k == 1:
            return e * (x / iw + 1.0 / omega ** 2)
        return e * (x * x / iw + 2.0 * x / omega ** 2 - 2.0 / (iw * omega ** 2))

    return complex(antiderivative(hi) - antiderivative(lo))


class Prior:
    """Common interface of the prior variants."""

    #: support of the density, ``(lo, hi)``
    support: tuple[float, float]

    def density(self, phi):
        raise NotImplementedError

    def moment(self, k: int, omega: float) -> complex:
        raise NotImplementedError

    def quadrature(self, size: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and prior-weighted weights: ``int f P ~= sum(w * f(x))``."""
        raise NotImplementedError

    def moments(self, k: int, omegas) -> np.ndarray:
        return np.array([self.moment(k, float(w)) for w in np.ravel(omegas)])

    def mean_and_variance(self) -> tuple[float, float]:
        mean = self.moment(1, 0.0).real
        return mean, self.moment(2, 0.0).real - mean * mean


@dataclass(frozen=True)
class FlatPrior(Prior):
    """Uniform density ``1/2pi`` on ``[0, 2pi]``."""

    @property
    def support(self):
        return (0.0, TWO_PI)

    def density(self, phi):
        phi = _check_phase(phi)
        out = np.full(phi.shape, 1.0 / TWO_PI)
        return out if out.ndim else float(out)

    def moment(self, k, omega):
        _check_order(k)
        return _window_moment(0.0, TWO_PI, k, omega) / TWO_PI

    def quadrature(self, size=None):
        x, w = gauss_legendre(0.0, TWO_PI, size or 256)
        return x, w / TWO_PI

    def __str__(self):
        return "flat"


@dataclass(frozen=True)
class TruncatedFlatPrior(Prior):
    """Uniform density ``1/(hi - lo)`` on ``[lo, hi]``."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi <= TWO_PI + _PHASE_SLACK):
            raise DomainError(f"need 0 <= lo < hi <= 2pi, got ({self.lo}, {self.hi})")

    @property
    def support(self):
        return (self.lo, self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def density(self, phi):
        phi = _check_phase(phi)
        inside = (phi >= self.lo) & (phi <= self.hi)
        out = np.where(inside, 1.0 / self.width, 0.0)
        return out if out.ndim else float(out)

    def moment(self, k, omega):
        _check_order(k)
        return _window_moment(self.lo, self.hi, k, omega) / self.width

    def quadrature(self, size=None):
        x, w = gauss_legendre(self.lo, self.hi, size or 256)
        return x, w / self.width

    def __str__(self):
        return f"trunc:{self.lo!r}..{self.hi!r}"


@dataclass(frozen=True, eq=False)
class GridPrior(Prior):
    """Density sampled on strictly increasing nodes.

    Values between nodes are linearly interpolated and the density is zero
    outside ``[phi[0], phi[-1]]``.  The samples are rescaled on construction
    so that Simpson's rule on the nodes integrates the density to one.
    """

    phi: np.ndarray
    values: np.ndarray
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        values = np.array(self.values, dtype=float)
        if phi.ndim != 1 or phi.shape != values.shape:
            raise DomainError("grid nodes and densities must be 1-d arrays of equal length")
        if phi.size < 3:
            raise DomainError("a grid prior needs at least 3 nodes")
        if np.any(np.diff(phi) <= 0):
            raise DomainError("grid nodes must be strictly increasing")
        _check_phase(phi)
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise DomainError("grid densities must be finite and non-negative")
        w = simpson_weights(phi)
        total = float(w @ values)
        if not total > 0:
            raise DomainError("grid density integrates to zero")
        values = values / total
        for arr in (phi, values, w):
            arr.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, lo: float, hi: float, func, size: int = DEFAULT_GRID_NODES) -> "GridPrior":
        """Sample ``func`` on ``size`` uniform nodes over ``[lo, hi]``."""
        phi = np.linspace(lo, hi, size)
        return cls(phi, func(phi))

    @classmethod
    def from_csv(cls, path) -> "GridPrior":
        """Read ``phi,density`` rows; a non-numeric first row is a header."""
        rows = []
        with open(Path(path), newline="") as fh:
            for i, row in enumerate(csv.reader(fh)):
                if not row or not "".join(row).strip():
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    if i == 0:
                        continue
                    raise DomainError(f"{path}: bad grid row {i + 1}: {row}") from None
        if not rows:
            raise DomainError(f"{path}: no grid rows")
        arr = np.array(rows)
        return cls(arr[:, 0], arr[:, 1])

    @property
    def support(self):
        return (float(self.phi[0]), float(self.phi[-1]))

    def density(self, phi):
        phi = _check_phase(phi)
        out = np.interp(phi, self.phi, self.values, left=0.0, right=0.0)
        return out if np.ndim(out) else float(out)

    def moment(self, k, omega):
        _check_order(k)
        return complex(np.sum(self.weights * self.values * self.phi ** k * np.exp(1j * omega * self.phi)))

    def moments(self, k, omegas):
        _check_order(k)
        omegas = np.ravel(np.asarray(omegas, dtype=float))
        wp = self.weights * self.values * self.phi ** k
        return np.exp(1j * np.outer(omegas, self.phi)) @ wp

    def quadrature(self, size=None):
        return self.phi, self.weights * self.values

    def __str__(self):
        return f"grid[{self.phi.size} nodes on {self.support[0]:.6g}..{self.support[1]:.6g}]"


def _check_order(k):
    if k not in (0, 1, 2):
        raise DomainError(f"moment order must be 0, 1 or 2, got {k}")


def density(prior: Prior, phi):
    return prior.density(phi)


def moment(prior: Prior, k: int, omega: float) -> complex:
    return prior.moment(k, omega)


def mean_and_variance(prior: Prior) -> tuple[float, float]:
    return prior.mean_and_variance()


def update(prior: Prior, likelihood: Likelihood,
           size: int | None = None) -> tuple[GridPrior, float]:
    """Bayes update returning ``(posterior, evidence)``.

    Flat and truncated priors are resampled on ``size`` uniform nodes over
    their support (default 4096).  A grid prior keeps its own nodes unless
    ``size`` asks for a different resolution, in which case it is
    re-interpolated over its node range.
    """
    if isinstance(prior, GridPrior) and (size is None or size == prior.phi.size):
        phi, base = prior.phi, prior.values
    else:
        lo, hi = prior.support
        phi = np.linspace(lo, hi, size or DEFAULT_GRID_NODES)
        if isinstance(prior, GridPrior):
            base = np.interp(phi, prior.phi, prior.values)
        else:
            base = np.full(phi.shape, 1.0 / (hi - lo))
    lik = np.asarray(likelihood(phi), dtype=float)
    if np.any(lik < -1e-12) or np.any(lik > 1 + 1e-12):
        raise DomainError("likelihood values must lie in [0, 1]")
    unnorm = np.clip(lik, 0.0, None) * base
    evidence = float(simpson_weights(phi) @ unnorm)
    if evidence < EVIDENCE_FLOOR:
        raise DegeneratePosteriorError(f"evidence {evidence:.3g} is below {EVIDENCE_FLOOR:g}")
    return GridPrior(phi, unnorm), evidence


def bayes_update(prior: Prior, likelihood: Likelihood, size: int | None = None) -> GridPrior:
    return update(prior, likelihood, size)[0]


def spike_prior(centers, width: float, points_per_width: int = 64) -> GridPrior:
    """Equal-weight flat-top spikes of the given width, on a shared uniform grid.

    The spacing divides ``pi`` into an even number of steps so spikes whose
    centres differ by a multiple of ``pi`` are sampled identically.
    """
    centers = np.sort(np.asarray(centers, dtype=float))
    steps = int(np.ceil(points_per_width * np.pi / width))
    steps += steps % 2
    h = np.pi / steps
    pad = int(np.ceil(width / h)) + 2
    pad += pad % 2
    lo = centers[0] - pad * h
    n_nodes = int(round((centers[-1] - centers[0]) / h)) + 2 * pad + 1
    phi = lo + h * np.arange(n_nodes)
    w = simpson_weights(phi)
    values = np.zeros(n_nodes)
    for c in centers:
        mask = np.abs(phi - c) <= width / 2 + 1e-15
        # each spike gets exactly 1/len(centers) of the quadrature mass
        values[mask] += 1.0 / (len(centers) * w[mask].sum())
    return GridPrior(phi, values)


def parse_prior(spec: str) -> Prior:
    """Parse ``flat``, ``trunc:<lo>..<hi>`` or ``grid:<path>``.

    Bounds accept decimals and simple multiples of pi such as ``pi/2``.
    """
    spec = spec.strip()
    if spec == "flat":
        return FlatPrior()
    if spec.startswith("trunc:"):
        body = spec[len("trunc:"):]
        if ".." not in body:
            raise DomainError(f"expected trunc:<lo>..<hi>, got {spec!r}")
        lo, hi = body.split("..", 1)
        return TruncatedFlatPrior(parse_angle(lo), parse_angle(hi))
    if spec.startswith("grid:"):
        return GridPrior.from_csv(spec[len("grid:"):])
    raise DomainError(f"unknown prior spec {spec!r}")


def parse_angle(text: str) -> float:
    """Parse a decimal or an expression like ``pi``, ``2pi``, ``3*pi/4``."""
    t = text.strip().lower().replace(" ", "")
    try:
        return float(t)
    except ValueError:
        pass
    if "pi" not in t:
        raise DomainError(f"cannot parse angle {text!r}")
    head, _, tail = t.partition("pi")
    head = head.rstrip("*")
    try:
        coef = float(head) if head not in ("", "+") else 1.0
        if head == "-":
            coef = -1.0
        div = 1.0
        if tail:
            if not tail.startswith("/"):
                raise ValueError
            div = float(tail[1:])
    except ValueError:
        raise DomainError(f"cannot parse angle {text!r}") from None
    return coef * np.pi / div
