"""Two-mode probe states with a fixed total photon number.

A state is stored as its Fock amplitudes ``a_l`` on the basis
``|l, n-l>``, ``l = 0..n``.  Under the phase shift the upper mode picks up
``phi`` and the lower mode ``-phi``, so ``a_l -> a_l exp(i(2l-n)phi)``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

NORM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class FockSuperposition:
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.size < 1:
            raise DomainError("a state needs at least one amplitude")
        norm = float(np.vdot(c, c).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise DomainError(f"amplitudes are not normalized (sum |a_l|^2 = {norm!r})")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def normalized(cls, coeffs) -> "FockSuperposition":
        c = np.asarray(coeffs, dtype=complex).ravel()
        norm = np.linalg.norm(c)
        if norm == 0:
            raise DomainError("cannot normalize the zero vector")
        return cls(c / norm)

    @property
    def n(self) -> int:
        return self.coeffs.size - 1

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.coeffs) ** 2

    def at_phase(self, phi):
        """Amplitudes after the phase shift; ``phi`` may be an array (rows)."""
        phase = np.exp(1j * np.multiply.outer(phi, 2 * np.arange(self.n + 1) - self.n))
        return phase * self.coeffs

    def canonical(self) -> "FockSuperposition":
        """Same state with the global phase chosen so ``a_0`` is real and >= 0.

        If ``a_0`` vanishes the first non-zero amplitude is made real positive.
        """
        c = self.coeffs
        idx = int(np.flatnonzero(np.abs(c) > 1e-15)[0])
        return FockSuperposition(c * np.exp(-1j * np.angle(c[idx])))

    def allclose(self, other: "FockSuperposition", atol: float = 1e-12) -> bool:
        return self.n == other.n and np.allclose(self.coeffs, other.coeffs, rtol=0, atol=atol)

    def __repr__(self):
        return f"FockSuperposition(n={self.n}, coeffs={np.array2string(self.coeffs, precision=6)})"


def noon(n: int) -> FockSuperposition:
    """``(|n,0> + |0,n>)/sqrt(2)``."""
    if int(n) != n or n < 1:
        raise DomainError(f"NOON state needs n >= 1, got {n}")
    c = np.zeros(int(n) + 1, dtype=complex)
    c[0] = c[-1] = 1 / np.sqrt(2)
    return FockSuperposition(c)


def beam_splitter_state(n: int, tau: float) -> FockSuperposition:
    """Output of a beam splitter with transmissivity ``tau`` fed ``|n, 0>``.

    ``c_l = sqrt(binom(n, l) tau**l (1 - tau)**(n - l))``.
    """
    if int(n) != n or n < 0:
        raise DomainError(f"photon number must be a non-negative integer, got {n}")
    if not 0.0 <= tau <= 1.0:
        raise DomainError(f"transmissivity must lie in [0, 1], got {tau}")
    n = int(n)
    c = np.zeros(n + 1)
    if tau == 0.0:
        c[0] = 1.0
    elif tau == 1.0:
        c[n] = 1.0
    else:
        ell = np.arange(n + 1)
        log_binom = gammaln(n + 1) - gammaln(ell + 1) - gammaln(n - ell + 1)
        c = np.exp(0.5 * (log_binom + ell * np.log(tau) + (n - ell) * np.log1p(-tau)))
    return FockSuperposition.normalized(c)


def apply_phase(state: FockSuperposition, phi: float) -> FockSuperposition:
    """``a_l -> a_l exp(i(2l - n) phi)``."""
    return FockSuperposition(state.at_phase(float(phi)))


_COEFFS_RE = re.compile(r"^coeffs:\[(.*)\]$")


def parse_state(spec: str) -> FockSuperposition:
    """Parse ``noon:<n>``, ``bs:<n>:<tau>`` or ``coeffs:[re,im;re,im;...]``.

    Explicit coefficient lists are normalized.
    """
    spec = spec.strip()
    try:
        if spec.startswith("noon:"):
            return noon(int(spec[5:]))
        if spec.startswith("bs:"):
            n, tau = spec[3:].split(":")
            return beam_splitter_state(int(n), float(tau))
        m = _COEFFS_RE.match(spec)
        if m:
            pairs = [p for p in m.group(1).split(";") if p.strip()]
            amps = []
            for p in pairs:
                parts = [float(x) for x in p.split(",")]
                if len(parts) == 1:
                    parts.append(0.0)
                if len(parts) != 2:
                    raise ValueError(p)
                amps.append(complex(parts[0], parts[1]))
            return FockSuperposition.normalized(amps)
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"cannot parse state spec {spec!r}") from None
    raise DomainError(f"unknown state spec {spec!r}")
