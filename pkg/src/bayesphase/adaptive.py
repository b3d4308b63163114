"""Adaptive single-photon phase estimation on a tree of outcomes.

Each node holds a prior, the optimal one-photon probe for that prior and its
optimal two-outcome measurement.  Expanding a node conditions the prior on
each outcome (Bayes rule with the Born likelihood) and re-optimizes probe and
measurement for the two posteriors.  Outcome ``1`` is the larger estimate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePosteriorError, DomainError
from .optimize import DEFAULT_RESTARTS, optimize_coefficients
from .personick import PersonickSolution, outcome_probabilities, solve
from .prior import GridPrior, Prior, spike_prior, update
from .states import FockSuperposition

MAX_ALL_BRANCH_DEPTH = 12
MAX_COMPARE_STEPS = 10
POLICIES = ("all-branches", "leftmost-path")


@dataclass(eq=False)
class AdaptiveNode:
    step: int
    outcome_path: tuple[int, ...]
    prior: Prior
    state: FockSuperposition
    solution: PersonickSolution
    outcome_probabilities: np.ndarray
    path_probability: float = 1.0
    children: list = field(default_factory=lambda: [None, None])

    @property
    def mmse(self) -> float:
        return self.solution.mmse

    @property
    def key(self) -> str:
        return ",".join(map(str, self.outcome_path))


@dataclass(eq=False)
class AdaptiveTree:
    root: AdaptiveNode
    levels: list[list[AdaptiveNode]]
    policy: str

    def step_mmse(self) -> list[float]:
        """Smallest node MMSE at every step."""
        return [min(node.mmse for node in level) for level in self.levels]

    def step_spread(self) -> list[float]:
        return [max(n.mmse for n in level) - min(n.mmse for n in level) for level in self.levels]

    def leftmost_path(self) -> list[AdaptiveNode]:
        path, node = [], self.root
        while node is not None:
            path.append(node)
            node = node.children[0]
        return path

    def nodes(self):
        for level in self.levels:
            yield from level


def born_likelihood(state: FockSuperposition, projector):
    """``phi -> |<projector|psi(phi)>|^2`` for a one-photon probe."""
    if state.n != 1:
        raise DomainError(f"adaptive likelihoods support n = 1 only, got n = {state.n}")
    v = np.asarray(projector, dtype=complex).ravel()
    if v.size != 2:
        raise DomainError("projector must be a 2-vector")
    v = v / np.linalg.norm(v)

    def likelihood(phi):
        amps = state.at_phase(np.asarray(phi, dtype=float))
        return np.clip(np.abs(amps @ v.conj()) ** 2, 0.0, 1.0)

    return likelihood


def _marginals(state, solution, prior):
    x, w = prior.quadrature()
    return w @ outcome_probabilities(state, solution.measurement, x)


def make_node(prior: Prior, state: FockSuperposition | None = None, *, step: int = 1,
              outcome_path=(), path_probability: float = 1.0,
              restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> AdaptiveNode:
    """Node for ``prior``; the probe is optimized unless ``state`` is given."""
    if state is None:
        state = optimize_coefficients(1, prior, True, restarts=restarts, seed=seed).state
    sol = solve(state, prior)
    return AdaptiveNode(step, tuple(outcome_path), prior, state, sol,
                        _marginals(state, sol, prior), path_probability)


def expand(node: AdaptiveNode, reoptimize: bool = True, *, grid: int | None = None,
           restarts: int = DEFAULT_RESTARTS, seed: int = 0):
    """Create both children of ``node``.

    A child whose outcome has zero probability is left as ``None``.
    """
    if node.solution.measurement.dim != 2:
        raise DomainError("adaptive expansion needs a two-outcome measurement")
    children = []
    for j, vec in enumerate(node.solution.measurement.vectors):
        try:
            posterior, evidence = update(node.prior, born_likelihood(node.state, vec), grid)
        except DegeneratePosteriorError:
            children.append(None)
            continue
        child = make_node(posterior, None if reoptimize else node.state,
                          step=node.step + 1, outcome_path=node.outcome_path + (j + 1,),
                          path_probability=node.path_probability * evidence,
                          restarts=restarts, seed=seed)
        children.append(child)
    node.children = children
    return tuple(children)


def run_tree(initial_prior: Prior, depth: int, policy: str = "all-branches", *,
             reoptimize: bool = True, grid: int | None = None,
             restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> AdaptiveTree:
    """Breadth-first adaptive run to ``depth`` steps.

    ``all-branches`` grows all ``2**(s-1)`` nodes per step; ``leftmost-path``
    follows outcome 1 (largest estimate) only.
    """
    if policy not in POLICIES:
        raise DomainError(f"policy must be one of {POLICIES}, got {policy!r}")
    if depth < 1:
        raise DomainError("depth must be at least 1")
    if policy == "all-branches" and depth > MAX_ALL_BRANCH_DEPTH:
        raise DomainError(f"all-branches depth is capped at {MAX_ALL_BRANCH_DEPTH}")
    root = make_node(initial_prior, restarts=restarts, seed=seed)
    levels = [[root]]
    for _ in range(depth - 1):
        frontier = levels[-1] if policy == "all-branches" else levels[-1][:1]
        nxt = []
        for node in frontier:
            kids = expand(node, reoptimize, grid=grid, restarts=restarts, seed=seed)
            live = [k for k in kids if k is not None]
            nxt.extend(live if policy == "all-branches" else live[:1])
        if not nxt:
            break
        levels.append(nxt)
    return AdaptiveTree(root, levels, policy)


def compare_single_shot(initial_prior: Prior, max_steps: int, policy: str | None = None, *,
                        grid: int | None = None, restarts: int = DEFAULT_RESTARTS,
                        seed: int = 0, tree: AdaptiveTree | None = None):
    """Rows ``(s, adaptive_mmse, single_shot_mmse)`` for ``s = 1..max_steps``.

    The single-shot column spends the same photon budget in one ``s``-photon
    probe optimized for the unchanged initial prior.  Without an explicit
    policy, all branches are grown up to 5 steps and the leftmost path beyond.
    """
    if max_steps < 1 or max_steps > MAX_COMPARE_STEPS:
        raise DomainError(f"max_steps must lie in 1..{MAX_COMPARE_STEPS}")
    if tree is None:
        policy = policy or ("all-branches" if max_steps <= 5 else "leftmost-path")
        tree = run_tree(initial_prior, max_steps, policy, grid=grid, restarts=restarts, seed=seed)
    adaptive = tree.step_mmse()
    rows = []
    for s in range(1, max_steps + 1):
        single = optimize_coefficients(s, initial_prior, True, restarts=restarts, seed=seed).mmse
        rows.append((s, adaptive[s - 1] if s <= len(adaptive) else float("nan"), single))
    return rows


def delta_infinity_check(width: float = 1e-3, peaks: int = 2, *, restarts: int = 4) -> float:
    """Best one-photon MMSE for equal spikes ``pi`` apart (or a single spike).

    Two spikes separated by ``pi`` give identical probe states, so the MMSE
    tends to the prior variance ``pi^2/4``; one spike gives zero.
    """
    if peaks not in (1, 2):
        raise DomainError("peaks must be 1 or 2")
    centers = [np.pi / 2] if peaks == 1 else [np.pi / 2, 3 * np.pi / 2]
    prior = spike_prior(centers, width)
    return optimize_coefficients(1, prior, True, restarts=restarts).mmse


def _pairs(arr) -> list:
    arr = np.asarray(arr, dtype=complex)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def _sample_prior(prior: Prior, size: int) -> dict:
    lo, hi = prior.support
    phi = np.linspace(lo, hi, size)
    if isinstance(prior, GridPrior):
        dens = np.interp(phi, prior.phi, prior.values)
    else:
        dens = np.asarray(prior.density(phi), dtype=float)
    return {"phi": phi.tolist(), "density": dens.tolist()}


def node_to_dict(node: AdaptiveNode, prior_samples: int = 256) -> dict:
    meas = node.solution.measurement
    return {
        "step": node.step,
        "outcome_path": list(node.outcome_path),
        "prior": _sample_prior(node.prior, prior_samples),
        "coefficients": _pairs(node.state.coeffs),
        "b_op": _pairs(node.solution.b_op),
        "estimates": meas.estimates.tolist(),
        "projectors": _pairs(meas.vectors),
        "outcome_probabilities": np.asarray(node.outcome_probabilities).tolist(),
        "path_probability": node.path_probability,
        "mmse": node.mmse,
    }


def tree_to_dict(tree: AdaptiveTree, prior_samples: int = 256) -> dict:
    """JSON-ready export; nodes are keyed by their outcome path ("" is the root)."""
    return {
        "policy": tree.policy,
        "steps": [
            {"step": s + 1, "nodes": len(level), "best_mmse": best, "mmse_spread": spread}
            for s, (level, best, spread) in enumerate(
                zip(tree.levels, tree.step_mmse(), tree.step_spread()))
        ],
        "nodes": {node.key: node_to_dict(node, prior_samples) for node in tree.nodes()},
    }
