"""Acceptance criteria, each checked at its stated tolerance and time budget.

Run under pytest (one test per criterion, summary lines at the end of the
session) or directly with ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import sys
import time

import numpy as np
import pytest

from bayesphase.adaptive import compare_single_shot, make_node, run_tree
from bayesphase.optimize import (brute_force_oracle, optimize_bs_transmissivity,
                                 optimize_coefficients)
from bayesphase.personick import (gauge_perturb, mmse_noon_truncated_closed_form,
                                  mse_of_measurement, solve)
from bayesphase.prior import FlatPrior, GridPrior, TruncatedFlatPrior
from bayesphase.states import FockSuperposition, noon

PI = np.pi

ROWS = {
    1: [0.707107, 0.707107],
    2: [0.55108, 0.626595, 0.55108],
    3: [0.453382, 0.542627, 0.542627, 0.453382],
    4: [0.386101, 0.474686, 0.501197, 0.474686, 0.386101],
    5: [0.336767, 0.420815, 0.457715, 0.457715, 0.420815, 0.336767],
}
TABLES = {
    "trunc:0..pi": (TruncatedFlatPrior(0, PI), [0.572467, 0.44203, 0.361202, 0.305933, 0.265637]),
    "trunc:0..pi/2": (TruncatedFlatPrior(0, PI / 2), [0.104296, 0.0664533, 0.0468982, 0.0352759, 0.0276983]),
    "trunc:0..pi/10": (TruncatedFlatPrior(0, PI / 10),
                       [0.00795939, 0.00760144, 0.00717076, 0.00669102, 0.0061858]),
    "flat": (FlatPrior(), [3.03987, 2.90943, 2.82860, 2.77333, 2.73304]),
}

RESULTS: dict[int, str] = {}


def _record(number, title, ok, detail, elapsed, budget):
    in_time = budget is None or elapsed < budget
    passed = ok and in_time
    timing = f"{elapsed:.1f}s" + (f" (budget {budget:g}s)" if budget else "")
    line = f"{'PASS' if passed else 'FAIL'}  criterion {number:>2}  {title}: {detail}; {timing}"
    RESULTS[number] = line
    return passed, line


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def criterion_1():
    def work():
        return max(abs(solve(noon(n), FlatPrior()).mmse - (PI ** 2 / 3 - 1 / (4 * n * n)))
                   for n in range(1, 11))
    err, dt = _timed(work)
    return _record(1, "NOON flat closed form", err < 1e-8, f"max |err| = {err:.2e} (tol 1e-8)", dt, 1)


def criterion_2():
    def work():
        worst = 0.0
        for m in (0.1, 0.3, 1.0, 3.0):
            prior = TruncatedFlatPrior(0, m)
            for n in range(1, 21):
                worst = max(worst, abs(solve(noon(n), prior).mmse - mmse_noon_truncated_closed_form(n, m)))
        # locate the turning point on a range that contains it
        curve = [mmse_noon_truncated_closed_form(n, 0.1) for n in range(1, 41)]
        return worst, int(np.argmin(curve)) + 1
    (worst, argmin), dt = _timed(work)
    ok = worst < 1e-6 and abs(argmin - 20) <= 2
    return _record(2, "truncated NOON", ok,
                   f"max |pipeline - closed| = {worst:.2e} (tol 1e-6), m=0.1 minimum at n={argmin} (want 20+-2)",
                   dt, 5)


def criterion_3():
    def work():
        bad = []
        for name, (prior, deltas) in TABLES.items():
            for n in range(1, 6):
                res = optimize_coefficients(n, prior)
                d_err = abs(res.mmse - deltas[n - 1])
                c_err = float(np.max(np.abs(res.state.coeffs - np.array(ROWS[n]))))
                if d_err > 1e-4 or c_err > 2e-3:
                    bad.append(f"{name} n={n} (delta {res.mmse:.6g} vs {deltas[n - 1]:.6g}, "
                               f"coeff err {c_err:.2g})")
        return bad
    bad, dt = _timed(work)
    detail = "all 20 rows reproduced" if not bad else f"{20 - len(bad)}/20 rows; mismatched: " + "; ".join(bad)
    return _record(3, "table reproduction", not bad, detail, dt, 120)


def criterion_4():
    def work():
        c_pi = mmse_noon_truncated_closed_form(1, PI)
        c_half = mmse_noon_truncated_closed_form(1, PI / 2)
        opt_pi = optimize_coefficients(1, TruncatedFlatPrior(0, PI)).mmse
        opt_half = optimize_coefficients(1, TruncatedFlatPrior(0, PI / 2)).mmse
        errs = [abs(c_pi - (PI ** 2 / 12 - 0.25)), abs(0.572467 - c_pi), abs(opt_pi - c_pi),
                abs(0.104296 - c_half), abs(opt_half - c_half)]
        return max(errs)
    err, dt = _timed(work)
    return _record(4, "cross-check identity", err < 1e-6, f"max |err| = {err:.2e} (tol 1e-6)", dt, None)


def criterion_5():
    def work():
        return {n: optimize_bs_transmissivity(n)[0] for n in (1, 2, 5, 10, 50, 100)}
    taus, dt = _timed(work)
    worst = max(abs(t - 0.5) for t in taus.values())
    return _record(5, "beam-splitter optimum", worst <= 1e-3, f"max |tau - 0.5| = {worst:.2e} (tol 1e-3)", dt, 10)


def _random_prior(rng):
    kind = rng.integers(3)
    if kind == 0:
        return FlatPrior()
    lo = rng.uniform(0, 3)
    hi = rng.uniform(lo + 0.1, 2 * PI)
    if kind == 1:
        return TruncatedFlatPrior(lo, hi)
    a, b = rng.uniform(0.2, 2, 2)
    return GridPrior.uniform(lo, hi, lambda x: 1 + a * np.cos(b * x) ** 2, 1025)


def criterion_6():
    def work():
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(50):
            n = int(rng.integers(2, 7))
            c = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
            zeros = rng.choice(n + 1, size=int(rng.integers(1, n)), replace=False)
            c[zeros] = 0
            sol = solve(FockSuperposition.normalized(c), _random_prior(rng))
            gam, u = np.linalg.eigh(sol.gamma0)
            null = u[:, gam < 1e-12]
            h = rng.normal(size=(null.shape[1],) * 2) + 1j * rng.normal(size=(null.shape[1],) * 2)
            k = null @ ((h + h.conj().T) / 2) @ null.conj().T
            shifted = gauge_perturb(sol, k)
            recomputed = sol.tr_gamma2 - float(np.real(np.trace(shifted.b_op @ sol.gamma1)))
            worst = max(worst, abs(recomputed - sol.mmse))
        return worst
    worst, dt = _timed(work)
    return _record(6, "gauge freedom", worst < 1e-10, f"max |delta' - delta| = {worst:.2e} over 50 cases (tol 1e-10)",
                   dt, None)


def criterion_7():
    def work():
        root = make_node(FlatPrior())
        b_err = float(np.max(np.abs(root.solution.b_op - np.array([[PI, 0.5j], [-0.5j, PI]]))))
        e_err = float(np.max(np.abs(root.solution.measurement.estimates - [PI + 0.5, PI - 0.5])))
        seq = run_tree(FlatPrior(), 10, "leftmost-path").step_mmse()
        return b_err, e_err, seq
    (b_err, e_err, seq), dt = _timed(work)
    decreasing = all(b < a for a, b in zip(seq, seq[1:]))
    gap = abs(seq[-1] - PI ** 2 / 4)
    ok = b_err < 1e-10 and e_err < 1e-10 and decreasing and gap <= 2e-2
    detail = (f"root B err {b_err:.1e}, estimate err {e_err:.1e}, strictly decreasing={decreasing}, "
              f"|delta_10 - pi^2/4| = {gap:.4f} (tol 2e-2)")
    return _record(7, "flat-prior adaptive", ok, detail, dt, 60)


def criterion_8():
    def work():
        report = []
        for name in ("trunc:0..pi", "trunc:0..pi/2", "trunc:0..pi/10", "flat"):
            prior = TABLES[name][0]
            tree = run_tree(prior, 5, "all-branches")
            rows = compare_single_shot(prior, 5, tree=tree)
            spread = max(tree.step_spread())
            adaptive = [r[1] for r in rows]
            single = [r[2] for r in rows]
            dominated = [s for s in range(1, 6) if adaptive[s - 1] > single[s - 1] + 1e-12]
            eq1 = abs(adaptive[0] - single[0])
            report.append((name, spread, dominated, eq1))
        return report
    report, dt = _timed(work)
    ok = all(sp < 1e-5 and not dom and e1 < 1e-6 for _, sp, dom, e1 in report)
    detail = "; ".join(f"{name}: spread {sp:.1e}, adaptive > single-shot at s={dom or 'none'}, "
                       f"s=1 gap {e1:.0e}" for name, sp, dom, e1 in report)
    return _record(8, "branch equality and dominance", ok, detail, dt, 300)


def criterion_9():
    def work():
        rng = np.random.default_rng(99)
        worst = 0.0
        for _ in range(100):
            n = int(rng.integers(1, 7))
            state = FockSuperposition.normalized(rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1))
            prior = _random_prior(rng)
            sol = solve(state, prior)
            worst = max(worst, abs(sol.mmse - mse_of_measurement(state, prior, sol.measurement)))
        return worst
    worst, dt = _timed(work)
    return _record(9, "formulation equivalence", worst < 1e-8, f"max |trace - outcome sum| = {worst:.2e} (tol 1e-8)",
                   dt, None)


def criterion_10():
    def work():
        priors = [FlatPrior(), TruncatedFlatPrior(0, PI), TruncatedFlatPrior(0, PI / 2),
                  TruncatedFlatPrior(0, PI / 10), TruncatedFlatPrior(0.4, 2.0)]
        excess = []
        for prior in priors:
            for n in (1, 2):
                oracle = brute_force_oracle(n, prior, 256)
                opt = optimize_coefficients(n, prior).mmse
                excess.append(opt - oracle.mmse - oracle.resolution)
        return max(excess)
    worst, dt = _timed(work)
    return _record(10, "oracle consistency", worst <= 0,
                   f"max (optimizer - oracle - resolution) = {worst:.2e} (must be <= 0)", dt, None)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("check", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 11)])
def test_criterion(check):
    passed, line = check()
    print(line)
    assert passed, line


if __name__ == "__main__":
    failures = 0
    for check in CRITERIA:
        passed, line = check()
        print(line, flush=True)
        failures += not passed
    sys.exit(1 if failures else 0)
