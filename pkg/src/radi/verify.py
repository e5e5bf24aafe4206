"""Seeded property suites cross-validating the iteration against the oracles.

Each suite runs a fixed set of checks on randomly generated (but fully
seeded) problems and reports the worst deviation per check. They are the
machine-checkable form of the method's exactness properties: equivalence
of all four formulations, Löwner monotonicity of the iterates, the
low-rank residual identity, the shift-objective gradient, the Lyapunov
reduction, and the generalized-equation variant.
"""

from dataclasses import dataclass

import numpy as np

from .dense import (
    cayley_subspace_step,
    dense_care_solve,
    dense_residual,
    loewner_and_stability_checks,
    qadi_dense_step,
)
from .iteration import radi_step_complex, radi_step_generalized, lyapunov_adi_step
from .problem import LowRankState, RiccatiProblem, Shift, assemble_dense
from .shifts import ProjectedResidual, residual_min_gradient, residual_min_objective

_TINY = 1e-300


@dataclass(frozen=True)
class CheckResult:
    name: str
    deviation: float
    tol: float

    @property
    def passed(self):
        return self.deviation <= self.tol


def random_stable_problem(n, m, p, rng, spread=1.0):
    """Dense problem with the spectrum of A shifted into the left half-plane."""
    a = spread * rng.standard_normal((n, n))
    margin = np.max(np.linalg.eigvals(a).real) + 0.5 * spread
    a = a - margin * np.eye(n)
    b = rng.standard_normal((n, m)) if m else None
    c = rng.standard_normal((p, n))
    return RiccatiProblem(a, b, c)


def random_shift_sequence(count, rng, complex_fraction=0.5):
    """Elementary left half-plane shifts with conjugate pairs adjacent."""
    out = []
    while len(out) < count:
        if len(out) + 2 <= count and rng.random() < complex_fraction:
            s = complex(-rng.uniform(0.3, 3.0), rng.uniform(0.3, 2.0))
            out.extend([s, s.conjugate()])
        else:
            out.append(complex(-rng.uniform(0.3, 3.0), 0.0))
    return out


def equivalence_deviation(problem, shifts):
    """Worst pairwise relative deviation of the three iterate sequences."""
    state = LowRankState.initial(problem)
    x_qadi = np.zeros((problem.n, problem.n))
    x_cayley = np.zeros((problem.n, problem.n))
    worst = 0.0
    for sigma in shifts:
        radi_step_complex(state, problem, Shift.from_value(sigma))
        x_radi = assemble_dense(state)
        x_qadi = qadi_dense_step(x_qadi, problem, sigma)
        x_cayley = cayley_subspace_step(x_cayley, problem, sigma)
        scale = max(np.linalg.norm(x_radi, 2), _TINY)
        for lhs, rhs in ((x_radi, x_qadi), (x_radi, x_cayley), (x_qadi, x_cayley)):
            worst = max(worst, np.linalg.norm(lhs - rhs, 2) / scale)
    return worst


def _suite_equivalence(n, seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for trial in range(5):
        m = int(rng.integers(1, 4))
        p = int(rng.integers(1, 4))
        problem = random_stable_problem(n, m, p, rng)
        shifts = random_shift_sequence(8, rng)
        worst = max(worst, equivalence_deviation(problem, shifts))
    return [CheckResult("four-way iterate equivalence", worst, 1e-8)]


def _suite_monotonicity(n, seed):
    rng = np.random.default_rng(seed)
    worst_step = 0.0
    worst_gap = 0.0
    for trial in range(3):
        problem = random_stable_problem(n, int(rng.integers(1, 3)), int(rng.integers(1, 3)), rng)
        x_star = dense_care_solve(problem)
        shifts = random_shift_sequence(8, rng)
        state = LowRankState.initial(problem)
        x_prev = np.zeros((problem.n, problem.n))
        for sigma in shifts:
            radi_step_complex(state, problem, Shift.from_value(sigma))
            x_next = assemble_dense(state)
            scale = max(np.linalg.norm(x_next, 2), _TINY)
            report = loewner_and_stability_checks(x_prev, x_next, problem)
            worst_step = max(worst_step, -report.diff_min_eig / scale)
            gap = loewner_and_stability_checks(x_next, x_star, problem)
            worst_gap = max(
                worst_gap, -gap.diff_min_eig / max(np.linalg.norm(x_star, 2), _TINY)
            )
            x_prev = x_next
    return [
        CheckResult("X_{k+1} - X_k above -tol*||X||", worst_step, 1e-10),
        CheckResult("X - X_k above -tol*||X||", worst_gap, 1e-10),
    ]


def residual_identity_deviation(problem, shifts):
    """Worst deviations of R R^H from the dense residual and between Lemma forms."""
    state = LowRankState.initial(problem)
    worst_prop = 0.0
    worst_lemma = 0.0
    prev = None  # (V_k, sigma_k, X_k, R_k)
    for sigma in shifts:
        radi_step_complex(state, problem, Shift.from_value(sigma))
        x = assemble_dense(state)
        res, nrm = dense_residual(x, problem)
        outer = state.r @ state.r.conj().T
        worst_prop = max(worst_prop, np.linalg.norm(outer - res, 2) / max(nrm, _TINY))
        v = state.z[:, -problem.p :]
        g = problem.b @ problem.b.T
        s = np.sqrt(-2.0 * np.real(sigma))
        r1 = (problem.a.T - x @ g - np.conj(sigma) * np.eye(problem.n)) @ v / s
        scale = max(np.linalg.norm(state.r, 2), _TINY)
        worst_lemma = max(worst_lemma, np.linalg.norm(r1 - state.r, 2) / scale)
        if prev is not None:
            x_prev, r_prev = prev
            r2 = (problem.a.T - x_prev @ g + sigma * np.eye(problem.n)) @ v / s
            scale_prev = max(np.linalg.norm(r_prev, 2), _TINY)
            worst_lemma = max(worst_lemma, np.linalg.norm(r2 - r_prev, 2) / scale_prev)
        prev = (x, state.r.copy())
    return worst_prop, worst_lemma


def _suite_residual_identity(n, seed):
    rng = np.random.default_rng(seed)
    worst_prop = 0.0
    worst_lemma = 0.0
    for trial in range(3):
        problem = random_stable_problem(n, int(rng.integers(1, 3)), int(rng.integers(1, 3)), rng)
        shifts = random_shift_sequence(6, rng)
        wp, wl = residual_identity_deviation(problem, shifts)
        worst_prop = max(worst_prop, wp)
        worst_lemma = max(worst_lemma, wl)
    return [
        CheckResult("R R^H matches dense residual", worst_prop, 1e-8),
        CheckResult("residual-factor forms agree", worst_lemma, 1e-8),
    ]


def random_projected_problem(ell, m, rng):
    """Random stable projected residual-equation data for shift-objective tests."""
    ap = rng.standard_normal((ell, ell))
    ap = ap - (np.max(np.linalg.eigvals(ap).real) + 0.5) * np.eye(ell)
    bp = rng.standard_normal((ell, m))
    rp = rng.standard_normal((ell, 1))
    ham = np.block([[ap, bp @ bp.T], [rp @ rp.T, -ap.T]])
    return ProjectedResidual(ham, np.eye(ell), ap, bp, rp)


def gradient_fd_deviation(projected, sigmas):
    worst = 0.0
    for sigma in sigmas:
        grad = residual_min_gradient(projected, sigma)
        h = 1e-6 * abs(sigma)
        fd = np.array(
            [
                (
                    residual_min_objective(projected, sigma + h)
                    - residual_min_objective(projected, sigma - h)
                )
                / (2 * h),
                (
                    residual_min_objective(projected, sigma + 1j * h)
                    - residual_min_objective(projected, sigma - 1j * h)
                )
                / (2 * h),
            ]
        )
        scale = max(np.linalg.norm(fd), np.linalg.norm(grad), _TINY)
        worst = max(worst, np.linalg.norm(grad - fd) / scale)
    return worst


def _suite_gradient(n, seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for trial in range(5):
        projected = random_projected_problem(min(n, 10), int(rng.integers(1, 4)), rng)
        sigmas = [
            complex(-rng.uniform(0.3, 3.0), rng.uniform(-2.0, 2.0)) for _ in range(20)
        ]
        worst = max(worst, gradient_fd_deviation(projected, sigmas))
    return [CheckResult("gradient matches central differences", worst, 1e-5)]


def lyapunov_reduction_deviation(problem, shifts):
    """Per-step deviation between the Riccati step with B = 0 and plain Lyapunov ADI."""
    state_r = LowRankState.initial(problem)
    state_l = LowRankState.initial(problem)
    worst = 0.0
    y_exact = True
    for sigma in shifts:
        radi_step_complex(state_r, problem, Shift.from_value(sigma))
        lyapunov_adi_step(state_l, problem, Shift.from_value(sigma))
        scale = max(np.linalg.norm(state_l.z, 2), _TINY)
        worst = max(worst, np.linalg.norm(state_r.z - state_l.z, 2) / scale)
        worst = max(
            worst,
            np.linalg.norm(state_r.r - state_l.r, 2)
            / max(np.linalg.norm(problem.c.T, 2), _TINY),
        )
        y_exact = y_exact and all(
            np.array_equal(y, np.eye(problem.p)) for y in state_r.yblocks
        )
    return worst, y_exact


def _suite_lyapunov(n, seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    y_ok = True
    for m in (0, 2):
        problem = random_stable_problem(n, 0, int(rng.integers(1, 3)), rng)
        if m:
            problem = RiccatiProblem(problem.a, np.zeros((n, m)), problem.c)
        shifts = random_shift_sequence(5, rng)
        dev, y_exact = lyapunov_reduction_deviation(problem, shifts)
        worst = max(worst, dev)
        y_ok = y_ok and y_exact
    return [
        CheckResult("B = 0 reduces to Lyapunov ADI", worst, 1e-12),
        CheckResult("Y blocks exactly identity", 0.0 if y_ok else 1.0, 0.0),
    ]


def random_spd(n, rng):
    w = rng.standard_normal((n, n))
    return w @ w.T + n * np.eye(n)


def generalized_residual_deviation(problem, shifts, steps=40, tol=1e-11):
    """Relative generalized residual after iterating a cycled shift list."""
    from .iteration import SolveOptions, solve
    from .shifts import UserList

    options = SolveOptions(tol=tol, maxiter=steps)
    outcome = solve(problem, UserList(tuple(shifts)), options)
    x = assemble_dense(outcome.state)
    _, nrm = dense_residual(x, problem)
    qnorm = np.linalg.norm(problem.c.T @ problem.c, 2)
    return nrm / max(qnorm, _TINY), outcome


def _suite_generalized(n, seed):
    rng = np.random.default_rng(seed)
    problem = RiccatiProblem(
        random_stable_problem(n, 2, 2, rng).a,
        rng.standard_normal((n, 2)),
        rng.standard_normal((2, n)),
        e=random_spd(n, rng),
    )
    shifts = random_shift_sequence(10, rng)
    rel, _ = generalized_residual_deviation(problem, shifts, steps=120)
    # E = I must reproduce the standard iteration exactly.
    rng2 = np.random.default_rng(seed + 1)
    std = random_stable_problem(n, 2, 2, rng2)
    with_e = RiccatiProblem(std.a, std.b, std.c, e=np.eye(n))
    s_std = LowRankState.initial(std)
    s_gen = LowRankState.initial(with_e)
    worst_id = 0.0
    for sigma in random_shift_sequence(6, rng2):
        radi_step_complex(s_std, std, Shift.from_value(sigma))
        radi_step_generalized(s_gen, with_e, Shift.from_value(sigma))
        scale = max(np.linalg.norm(s_std.z, 2), _TINY)
        worst_id = max(worst_id, np.linalg.norm(s_std.z - s_gen.z, 2) / scale)
        worst_id = max(worst_id, np.linalg.norm(s_std.r - s_gen.r, 2) / scale)
    return [
        CheckResult("generalized residual at convergence", rel, 1e-8),
        CheckResult("E = I reproduces standard path", worst_id, 1e-12),
    ]


SUITES = {
    "equivalence": _suite_equivalence,
    "monotonicity": _suite_monotonicity,
    "residual-identity": _suite_residual_identity,
    "gradient": _suite_gradient,
    "lyapunov-reduction": _suite_lyapunov,
    "generalized": _suite_generalized,
}


def run_verify(suite, n=12, seed=0, quiet=False):
    """Run one named property suite on seeded random instances.

    Prints one line per check with the observed worst deviation and
    returns the list of :class:`CheckResult`.
    """
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; expected one of {sorted(SUITES)}")
    results = SUITES[suite](n, seed)
    if not quiet:
        for res in results:
            verdict = "PASS" if res.passed else "FAIL"
            print(f"{suite}: {res.name}: max deviation {res.deviation:.3e} "
                  f"(tol {res.tol:.1e}) {verdict}")
    return results
