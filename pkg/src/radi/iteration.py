"""The low-rank Riccati ADI iteration and its convergence driver.

Three step variants are provided:

* :func:`radi_step_complex` -- one iteration in complex arithmetic,
* :func:`radi_step_real_pair` -- two iterations with a conjugate shift
  pair merged into a single all-real update around one complex solve,
* :func:`radi_step_generalized` -- the variant for equations with a mass
  matrix E.

Setting B = 0 reduces every variant to the low-rank Lyapunov ADI method,
which :func:`lyapunov_adi_step` also implements standalone for
cross-checking. :func:`solve` wires the steps to a shift strategy and a
stopping rule on the relative residual.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .exceptions import (
    NoShiftsError,
    NoStableShiftError,
    RadiError,
    RealShiftError,
    ShiftDomainError,
)
from .linsolve import ShiftedFactorization, smw_shifted_solve
from .problem import LowRankState, Shift, relative_residual

#: Iterations a relative-residual improvement below STAGNATION_FACTOR may span
#: before the driver gives up.
STAGNATION_WINDOW = 20
STAGNATION_FACTOR = 1e-3


class Arithmetic(enum.Enum):
    COMPLEX = "complex"
    REAL_MERGED = "real"


class Status(enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max-iter"
    STAGNATED = "stagnated"


@dataclass(frozen=True)
class SolveOptions:
    """Stopping rule and arithmetic mode of the driver."""

    tol: float = 1e-11
    maxiter: int = 300
    arithmetic: Arithmetic = Arithmetic.REAL_MERGED
    norm: str = "2"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.maxiter < 1:
            raise ValueError(f"maxiter must be at least 1, got {self.maxiter}")
        if self.norm not in ("2", "fro"):
            raise ValueError(f"norm must be '2' or 'fro', got {self.norm!r}")


@dataclass
class SolveOutcome:
    """Result of a driver run."""

    state: LowRankState
    status: Status
    diagnostic: str = ""

    @property
    def history(self):
        return self.state.history

    @property
    def converged(self):
        return self.status is Status.CONVERGED


def _sqrt_factor(sigma):
    return math.sqrt(-2.0 * sigma.real)


def _solve_v(state, problem, sigma, solver=None, factorization=None):
    """The shifted closed-loop solve shared by all step variants."""
    if state.width == 0:
        # First pass: K = 0, no correction needed.
        if factorization is None:
            factorization = ShiftedFactorization(problem, sigma, solver=solver)
        return factorization.solve(state.r)
    return smw_shifted_solve(
        problem, sigma, state.k, state.r, solver=solver, factorization=factorization
    )


def _apply_et(problem, mat):
    return problem.e.T @ mat if problem.has_e else mat


def _single_step(state, problem, sigma, norm, solver=None, factorization=None):
    s = _sqrt_factor(sigma)
    scalar = sigma.real if sigma.imag == 0.0 else sigma
    v = s * _solve_v(state, problem, scalar, solver, factorization)
    u = v.conj().T @ problem.b  # (p, m)
    ytil = np.eye(problem.p, dtype=u.dtype if u.size else float)
    if u.size:
        ytil = ytil - (u @ u.conj().T) / (2.0 * sigma.real)
    w = _y_solve(ytil, v)
    w = _apply_et(problem, w)
    state.r = state.r + s * w
    state.k = state.k + w @ u if u.size else state.k
    state.z = np.hstack([state.z, v]) if state.width else v.copy()
    state.yblocks.append(ytil)
    state.steps += 1
    state.record(sigma, relative_residual(state, problem, norm=norm))
    return state


def _y_solve(y, v):
    """V Y^{-1} through a Cholesky solve of the Hermitian PD block Y."""
    try:
        cf = sla.cho_factor(y)
    except sla.LinAlgError as exc:
        raise RadiError("Y block is not positive definite") from exc
    return sla.cho_solve(cf, v.conj().T).conj().T


def radi_step_complex(state, problem, shift, norm="2", solver=None, factorization=None):
    """One Riccati ADI iteration in complex arithmetic.

    Appends V = sqrt(-2 Re sigma) (A^T - K B^T + sigma I)^{-1} R to Z,
    extends the block diagonal of Y, and updates the residual factor R and
    feedback matrix K in place. The first step solves with A^T + sigma I
    directly since K = 0.
    """
    sigma = _shift_value(shift)
    if problem.has_e:
        raise ValueError("problem has a mass matrix; use radi_step_generalized")
    return _single_step(state, problem, sigma, norm, solver, factorization)


def radi_step_generalized(state, problem, shift, norm="2", solver=None, factorization=None):
    """One iteration for the equation with mass matrix E.

    Identical to :func:`radi_step_complex` except that the solve uses
    A^T - K B^T + sigma E^T and the R and K updates carry an extra factor
    E^T, so that Z Y^{-1} Z^T approximates the solution of the generalized
    equation.
    """
    sigma = _shift_value(shift)
    if not problem.has_e:
        raise ValueError("problem has no mass matrix; use radi_step_complex")
    return _single_step(state, problem, sigma, norm, solver, factorization)


def radi_step_real_pair(state, problem, shift, norm="2", solver=None, factorization=None):
    """Two iterations with shifts (sigma, conj(sigma)) merged into one.

    Performs a single complex solve for V and assembles the real 2p-by-2p
    Y block from the split V = Re V + i Im V, keeping Z, Y, R and K real
    throughout. Requires a real state and a genuinely complex shift.
    """
    sigma = _shift_value(shift)
    if sigma.imag == 0.0:
        raise RealShiftError(f"shift {sigma} is real; the pair step needs Im(sigma) != 0")
    if not state.is_real:
        raise RadiError("the merged pair step requires an all-real state")
    s = _sqrt_factor(sigma)
    v = s * _solve_v(state, problem, sigma, solver, factorization)
    vr_mat, vi_mat = np.ascontiguousarray(v.real), np.ascontiguousarray(v.imag)
    p, m = problem.p, problem.m
    re, im = sigma.real, sigma.imag
    asq = abs(sigma) ** 2
    vr = vr_mat.T @ problem.b  # (p, m)
    vi = vi_mat.T @ problem.b
    yhat = np.zeros((2 * p, 2 * p))
    yhat[:p, :p] = np.eye(p)
    yhat[p:, p:] = 0.5 * np.eye(p)
    if m:
        f1 = np.vstack([-re * vr - im * vi, im * vr - re * vi])
        f2 = np.vstack([vr, vi])
        yhat -= (f1 @ f1.T) / (4.0 * asq * re)
        yhat -= (f2 @ f2.T) / (4.0 * re)
    f3 = np.vstack([im * np.eye(p), re * np.eye(p)])
    yhat -= (f3 @ f3.T) / (2.0 * asq)
    yhat = 0.5 * (yhat + yhat.T)
    pair = np.hstack([vr_mat, vi_mat])
    w = _y_solve(yhat, pair)
    w = _apply_et(problem, w)
    state.r = state.r + s * w[:, :p]
    if m:
        state.k = state.k + w @ np.vstack([vr, vi])
    state.z = np.hstack([state.z, pair]) if state.width else pair
    state.yblocks.append(yhat)
    state.steps += 1
    state.record(sigma, relative_residual(state, problem, norm=norm))
    return state


def lyapunov_adi_step(state, problem, shift, norm="2", solver=None, factorization=None):
    """One low-rank Lyapunov ADI iteration (the B = 0 special case).

    V = sqrt(-2 Re sigma) (A^T + sigma E^T)^{-1} R, R grows by
    sqrt(-2 Re sigma) E^T V, and the Y block is exactly the identity.
    Kept as an independent implementation so the Riccati step can be
    validated against it.
    """
    if problem.m != 0 and np.any(problem.b):
        raise ValueError("lyapunov_adi_step requires B = 0")
    sigma = _shift_value(shift)
    s = _sqrt_factor(sigma)
    scalar = sigma.real if sigma.imag == 0.0 else sigma
    if factorization is None:
        factorization = ShiftedFactorization(problem, scalar, solver=solver)
    v = s * factorization.solve(state.r)
    state.r = state.r + s * _apply_et(problem, v)
    state.z = np.hstack([state.z, v]) if state.width else v.copy()
    state.yblocks.append(np.eye(problem.p))
    state.steps += 1
    state.record(sigma, relative_residual(state, problem, norm=norm))
    return state


def _shift_value(shift):
    if isinstance(shift, Shift):
        return shift.value
    sigma = complex(shift)
    if sigma.real >= 0:
        raise ShiftDomainError(f"shift {sigma} is not in the open left half-plane")
    return sigma


@dataclass
class _FactorizationCache:
    """Per-solve cache of shifted factorizations, keyed by the shift value."""

    problem: object
    solver: object = None
    max_entries: int = 40
    _entries: dict = field(default_factory=dict)

    def get(self, sigma):
        sigma = complex(sigma)
        fact = self._entries.get(sigma)
        if fact is None:
            fact = ShiftedFactorization(self.problem, sigma, solver=self.solver)
            if len(self._entries) >= self.max_entries:
                self._entries.pop(next(iter(self._entries)))
            self._entries[sigma] = fact
        return fact


def solve(problem, strategy, options=None, linear_solver=None):
    """Run the Riccati ADI iteration until the relative residual drops below tol.

    Parameters
    ----------
    problem : RiccatiProblem
    strategy : PenzlConfig, DynamicConfig, UserList, or list of shifts
        Shift-selection strategy; see :mod:`radi.shifts`.
    options : SolveOptions, optional
    linear_solver : callable, optional
        User solver callback ``solver(sigma, rhs) -> V`` for the shifted
        systems; replaces the built-in factorizations.

    Returns
    -------
    SolveOutcome
        Final state, status, and per-iteration history. Numerical
        breakdowns are reported through the status and diagnostic, never
        raised.
    """
    from .shifts import make_session

    options = options or SolveOptions()
    state = LowRankState.initial(problem)
    session = make_session(strategy, problem, options)
    cache = _FactorizationCache(problem, solver=linear_solver)
    use_pair = options.arithmetic is Arithmetic.REAL_MERGED
    fallback = _PenzlFallback(problem)
    relres = 1.0
    while True:
        if relres <= options.tol:
            return SolveOutcome(state, Status.CONVERGED)
        if state.steps >= options.maxiter:
            return SolveOutcome(state, Status.MAX_ITER)
        if _stagnated(state.history):
            return SolveOutcome(
                state,
                Status.STAGNATED,
                f"relative residual improved by < {STAGNATION_FACTOR:g} "
                f"over {STAGNATION_WINDOW} iterations",
            )
        try:
            shift = session.next(state)
        except NoStableShiftError:
            try:
                shift = fallback.next()
            except NoShiftsError as exc:
                return SolveOutcome(state, Status.STAGNATED, f"no usable shift: {exc}")
        except NoShiftsError as exc:
            return SolveOutcome(state, Status.STAGNATED, f"shift supply exhausted: {exc}")
        try:
            _dispatch_step(state, problem, shift, options, cache, use_pair)
        except RadiError as exc:
            # Numerical breakdown (singular shift, SMW capacitance, Y block):
            # retry once with a precomputed fallback shift, then give up.
            try:
                retry = fallback.next()
                _dispatch_step(state, problem, retry, options, cache, use_pair)
            except (RadiError, NoShiftsError) as exc2:
                return SolveOutcome(
                    state,
                    Status.STAGNATED,
                    f"breakdown at shift {shift.value}: {exc}; fallback failed: {exc2}",
                )
        relres = state.history[-1].relres


class _PenzlFallback:
    """Lazily computed Penzl shifts used when a dynamic strategy breaks down."""

    def __init__(self, problem):
        self.problem = problem
        self._shifts = None
        self._at = 0

    def next(self):
        from .shifts import PenzlConfig, penzl_shifts

        if self._shifts is None:
            dim = max(2, min(10, self.problem.n))
            cfg = PenzlConfig(kplus=dim, kminus=dim, count=5)
            self._shifts = [Shift.from_value(s) for s in penzl_shifts(self.problem, cfg)]
        shift = self._shifts[self._at % len(self._shifts)]
        self._at += 1
        return shift


def _dispatch_step(state, problem, shift, options, cache, use_pair):
    fact = cache.get(shift.value)
    if use_pair and not shift.is_real:
        return radi_step_real_pair(
            state, problem, shift, norm=options.norm, factorization=fact
        )
    step = radi_step_generalized if problem.has_e else radi_step_complex
    return step(state, problem, shift, norm=options.norm, factorization=fact)


def _stagnated(history):
    if len(history) <= STAGNATION_WINDOW:
        return False
    old = history[-(STAGNATION_WINDOW + 1)].relres
    new = history[-1].relres
    return (old - new) < STAGNATION_FACTOR * old
