"""Shift-parameter selection for the Riccati ADI iteration.

Three families are provided behind one session interface:

* Penzl shifts: Ritz values of A (or of the Hamiltonian matrix) and of
  its inverse, filtered to the left half-plane and ranked by the classic
  greedy min-max heuristic; precomputed once and cycled.
* Residual Hamiltonian shifts: for each step, the stable eigenvalue of
  the Hamiltonian matrix of the projected residual equation whose
  eigenvector has the largest lower half, computed from a window of the
  last ``ell`` columns of Z (``ell = inf`` keeps the whole factor).
* Residual minimizing shifts: the Hamiltonian shift post-optimized by a
  quasi-Newton descent on the norm of the next projected residual.

User-supplied shift lists are accepted as well, either in code or from a
text file with one ``re im`` pair per line.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
import scipy.optimize as sopt
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .exceptions import NoShiftsError, NoStableShiftError, ShiftDomainError
from .iteration import Arithmetic
from .problem import Shift

#: Optimizer budget for the residual-minimizing post-optimization.
OPTIMIZER_MAXITER = 50


@dataclass(frozen=True)
class PenzlConfig:
    """Precomputed-and-cycled shifts from Krylov Ritz values.

    ``source`` selects the matrix whose Ritz values are harvested: the
    system matrix itself or the Hamiltonian matrix, whose stable spectrum
    governs convergence of the Riccati iteration.
    """

    source: str = "a"
    kplus: int = 40
    kminus: int = 40
    count: int = 20
    cycle: bool = True

    def __post_init__(self):
        if self.source not in ("a", "hamiltonian"):
            raise ValueError(f"source must be 'a' or 'hamiltonian', got {self.source!r}")
        if self.kplus < 1 or self.kminus < 1:
            raise ValueError("Krylov dimensions must be at least 1")
        if self.count < 1:
            raise ValueError("count must be at least 1")


@dataclass(frozen=True)
class DynamicConfig:
    """Per-step shifts from the projected residual Hamiltonian.

    ``ell`` is the projection window in columns of Z (at least p;
    ``math.inf`` projects onto the whole factor) and ``optimize`` enables
    the residual-minimizing post-optimization.
    """

    ell: float
    optimize: bool = False

    def __post_init__(self):
        if self.ell != math.inf:
            if int(self.ell) != self.ell or self.ell < 1:
                raise ValueError(f"ell must be a positive integer or inf, got {self.ell}")


@dataclass(frozen=True)
class UserList:
    """An explicit shift sequence, cycled once exhausted.

    Every value must lie in the open left half-plane and complex values
    must appear in adjacent conjugate pairs.
    """

    shifts: tuple
    cycle: bool = True

    def __post_init__(self):
        values = tuple(complex(s) for s in self.shifts)
        object.__setattr__(self, "shifts", values)
        if not values:
            raise NoShiftsError("empty shift list")
        for v in values:
            if v.real >= 0:
                raise ShiftDomainError(f"shift {v} is not in the open left half-plane")
        _check_pairing(values)

    @classmethod
    def from_file(cls, path, cycle=True):
        """Read shifts from a text file, one ``re im`` pair per line."""
        values = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.strip()
                if not text:
                    continue
                parts = text.split()
                if len(parts) != 2:
                    raise ValueError(
                        f"{path}:{lineno}: expected 're im', got {text!r}"
                    )
                try:
                    re, im = float(parts[0]), float(parts[1])
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from exc
                values.append(complex(re, im))
        return cls(tuple(values), cycle=cycle)


def _check_pairing(values):
    i = 0
    while i < len(values):
        v = values[i]
        if v.imag != 0.0:
            partner = values[i + 1] if i + 1 < len(values) else None
            if partner is None or abs(partner - v.conjugate()) > 1e-12 * abs(v):
                raise ValueError(
                    f"complex shift {v} must be immediately followed by its conjugate"
                )
            i += 2
        else:
            i += 1


class ProjectedResidual(NamedTuple):
    """Projected residual-equation data: the small Hamiltonian plus basis."""

    hamiltonian: np.ndarray
    basis: np.ndarray
    a: np.ndarray
    b: np.ndarray
    r: np.ndarray


# ---------------------------------------------------------------------------
# Penzl shifts


def _arnoldi_ritz(apply_m, n, k, v0):
    """Ritz values from k Arnoldi steps; stops early on breakdown."""
    k = min(k, n)
    basis = np.zeros((n, k + 1))
    hess = np.zeros((k + 1, k))
    basis[:, 0] = v0 / np.linalg.norm(v0)
    used = 0
    for j in range(k):
        w = np.asarray(apply_m(basis[:, j]), dtype=float)
        scale = np.linalg.norm(w)
        coeffs = basis[:, : j + 1].T @ w
        w = w - basis[:, : j + 1] @ coeffs
        extra = basis[:, : j + 1].T @ w
        w = w - basis[:, : j + 1] @ extra
        hess[: j + 1, j] = coeffs + extra
        beta = np.linalg.norm(w)
        used = j + 1
        if beta <= 1e-12 * max(scale, 1.0):
            break
        hess[j + 1, j] = beta
        basis[:, j + 1] = w / beta
    if used == 0:
        return np.array([], dtype=complex)
    return np.linalg.eigvals(hess[:used, :used])


def _system_operators(problem):
    """Actions of M = E^{-1} A and M^{-1} = A^{-1} E."""
    a = problem.a

    def apply(v):
        return problem.esolve(a @ v)

    if sps.issparse(a):
        try:
            alu = spla.splu(a.tocsc())
        except RuntimeError as exc:
            raise NoShiftsError(f"A could not be factorized: {exc}") from exc

        def apply_inv(v):
            return alu.solve((problem.e @ v) if problem.has_e else v)

        def apply_inv_t(v):
            rhs = np.asarray(v)
            return problem.e.T @ alu.solve(rhs, trans="T") if problem.has_e else alu.solve(rhs, trans="T")

    else:
        try:
            lu = sla.lu_factor(a)
        except (ValueError, sla.LinAlgError) as exc:
            raise NoShiftsError(f"A could not be factorized: {exc}") from exc

        def apply_inv(v):
            return sla.lu_solve(lu, (problem.e @ v) if problem.has_e else v)

        def apply_inv_t(v):
            sol = sla.lu_solve(lu, v, trans=1)
            return problem.e.T @ sol if problem.has_e else sol

    return apply, apply_inv, apply_inv_t


def _hamiltonian_operators(problem):
    """Actions of the Hamiltonian matrix of the (reverted) equation and its inverse.

    The inverse never forms the dense rank-corrected blocks: it expands
    H = blkdiag(M, -M^T) + low-rank through the SMW identity, with
    M = E^{-1} A.
    """
    n, m, p = problem.n, problem.m, problem.p
    apply_m, apply_minv, apply_minv_t = _system_operators(problem)
    bhat = problem.esolve(problem.b) if problem.has_e else problem.b
    ct = problem.c.T

    def apply(v):
        v1, v2 = v[:n], v[n:]
        top = apply_m(v1) + (bhat @ (bhat.T @ v2) if m else 0.0)
        bottom = ct @ (problem.c @ v1) - _apply_mt(v2)
        return np.concatenate([top, bottom])

    def _apply_mt(v):
        # M^T v = A^T E^{-T} v
        if problem.has_e:
            return problem.a.T @ problem.etsolve(v)
        return problem.a.T @ v

    def dinv(w):
        w1, w2 = w[:n] if w.ndim == 1 else w[:n, :], w[n:] if w.ndim == 1 else w[n:, :]
        return np.concatenate([apply_minv(w1), -apply_minv_t(w2)])

    # H = D + U V^T with U = [[Bhat, 0], [0, C^T]], V^T = [[0, Bhat^T], [C, 0]].
    umat = np.zeros((2 * n, m + p))
    umat[:n, :m] = bhat
    umat[n:, m:] = ct
    vmat_t = np.zeros((m + p, 2 * n))
    vmat_t[:m, n:] = bhat.T
    vmat_t[m:, :n] = problem.c
    dinv_u = np.column_stack([dinv(umat[:, j]) for j in range(m + p)]) if m + p else umat
    cap = np.eye(m + p) + vmat_t @ dinv_u
    try:
        cap_lu = sla.lu_factor(cap)
    except (ValueError, sla.LinAlgError) as exc:
        raise NoShiftsError(f"Hamiltonian matrix is singular: {exc}") from exc

    def apply_inv(v):
        base = dinv(v)
        if m + p == 0:
            return base
        return base - dinv_u @ sla.lu_solve(cap_lu, vmat_t @ base)

    return apply, apply_inv


def penzl_shifts(problem, config):
    """Precompute an ordered list of left half-plane shifts.

    Builds Arnoldi Ritz values of the source matrix and of its inverse,
    keeps the stable ones, mirrors unstable ones to their negatives, and
    greedily selects ``config.count`` shifts maximizing the min-max
    suppression ratio prod |t - sigma_j| / |t + conj(sigma_j)| over the
    candidate set. Complex shifts are returned with their conjugates
    adjacent (positive imaginary part first).
    """
    if config.source == "hamiltonian":
        apply_m, apply_minv = _hamiltonian_operators(problem)
        dim = 2 * problem.n
    else:
        apply_m, apply_minv, _ = _system_operators(problem)
        dim = problem.n
    v0 = np.ones(dim)
    ritz_plus = _arnoldi_ritz(apply_m, dim, config.kplus, v0)
    ritz_minus = _arnoldi_ritz(apply_minv, dim, config.kminus, v0)
    cands = list(_stabilize(ritz_plus))
    cands.extend(_stabilize(1.0 / t for t in ritz_minus if t != 0))
    cands = _dedup(cands)
    if not cands:
        raise NoShiftsError("no stable Ritz values found")
    return _greedy_select(cands, config.count)


def _stabilize(values):
    for v in values:
        v = complex(v)
        if not np.isfinite(v.real) or not np.isfinite(v.imag):
            continue
        if v.real < 0:
            yield v
        elif v.real > 0:
            yield -v


def _dedup(values, rtol=1e-10):
    # Collapse near-duplicates and keep complex values as Im > 0 leads.
    leads = []
    for v in values:
        v = complex(v.real, abs(v.imag))
        if not any(abs(v - u) <= rtol * max(abs(u), 1e-300) for u in leads):
            leads.append(v)
    leads.sort(key=lambda v: (abs(v), v.real, v.imag))
    return leads


def _pair_ratio(t, sigma):
    num = abs(t - sigma)
    den = abs(t + sigma.conjugate())
    if sigma.imag != 0.0:
        num *= abs(t - sigma.conjugate())
        den *= abs(t + sigma)
    return num / den


def _greedy_select(leads, count):
    points = []
    for v in leads:
        points.append(v)
        if v.imag != 0.0:
            points.append(v.conjugate())

    def worst_single(sigma):
        return max(_pair_ratio(t, sigma) for t in points)

    first = min(leads, key=lambda s: (worst_single(s), abs(s), s.real, s.imag))
    chosen_leads = [first]
    suppression = {t: _pair_ratio(t, first) for t in points}
    shifts = _expand(first)
    remaining = [v for v in leads if v != first]
    while remaining and len(shifts) < count:
        slots = count - len(shifts)
        pool = remaining
        if slots == 1:
            real_pool = [v for v in remaining if v.imag == 0.0]
            if real_pool:
                pool = real_pool
        best = max(pool, key=lambda v: (suppression[v], -abs(v)))
        chosen_leads.append(best)
        shifts.extend(_expand(best))
        remaining.remove(best)
        for t in points:
            suppression[t] *= _pair_ratio(t, best)
    return shifts


def _expand(lead):
    if lead.imag == 0.0:
        return [lead]
    return [lead, lead.conjugate()]


# ---------------------------------------------------------------------------
# Projection of the residual equation


def _orth(cols):
    """Orthonormal basis of the columns: thin QR, rank-revealing, one reorthogonalization."""
    if cols.size == 0:
        return cols.reshape(cols.shape[0], 0)
    q, rmat, _ = sla.qr(cols, mode="economic", pivoting=True)
    diag = np.abs(np.diag(rmat))
    if diag.size == 0 or diag[0] == 0.0:
        return np.zeros((cols.shape[0], 0))
    rank = int(np.sum(diag > max(cols.shape) * np.finfo(float).eps * diag[0]))
    q = q[:, :rank]
    if rank:
        q, _ = sla.qr(q, mode="economic")
    return q


class _IncrementalBasis:
    """Gram-Schmidt-extended orthonormal basis for the ell = inf window."""

    def __init__(self, n):
        self.q = np.zeros((n, 0))

    def extend(self, cols):
        if cols.size == 0:
            return
        if np.iscomplexobj(cols) and not np.iscomplexobj(self.q):
            self.q = self.q.astype(complex)
        drop = 100 * cols.shape[0] * np.finfo(float).eps
        for j in range(cols.shape[1]):
            v = np.array(cols[:, j], dtype=self.q.dtype if self.q.size else cols.dtype)
            scale = np.linalg.norm(v)
            for _ in range(2):
                if self.q.shape[1]:
                    v = v - self.q @ (self.q.conj().T @ v)
            nv = np.linalg.norm(v)
            if scale == 0.0 or nv <= drop * scale:
                continue
            self.q = np.column_stack([self.q, v / nv])


def _window_columns(state, problem, ell):
    """Columns the projection basis is built from, in standard coordinates.

    Before the first step the only available data is the residual factor
    itself; afterwards the window covers the trailing ``ell`` columns of Z
    (premultiplied by E^T for generalized problems, whose Z lives in the
    equation's own coordinates).
    """
    if state.width == 0:
        return state.r
    take = state.width if ell == math.inf else min(int(ell), state.width)
    cols = state.z[:, state.width - take :]
    return problem.e.T @ cols if problem.has_e else cols


def _project_from_basis(state, problem, u):
    if u.shape[1] == 0:
        raise NoStableShiftError("projection basis is empty")
    au = problem.a @ u
    if problem.m and np.any(state.k):
        au = au - problem.b @ (state.k.conj().T @ u)
    if problem.has_e:
        au = problem.esolve(au)
    ap = u.conj().T @ au
    bsrc = problem.esolve(problem.b) if problem.has_e else problem.b
    bp = u.conj().T @ bsrc
    rp = u.conj().T @ state.r
    ham = np.block(
        [[ap, bp @ bp.conj().T], [rp @ rp.conj().T, -ap.conj().T]]
    )
    return ProjectedResidual(ham, u, ap, bp, rp)


def projected_hamiltonian(state, problem, ell):
    """Hamiltonian matrix of the residual equation projected onto a Z window.

    Returns a :class:`ProjectedResidual` whose first two fields are the
    2 ell' x 2 ell' Hamiltonian and the orthonormal basis U (ell' shrinks
    when the window is rank deficient, it never fails).
    """
    u = _orth(_window_columns(state, problem, ell))
    return _project_from_basis(state, problem, u)


def _stable_eig_selection(ham):
    lam, vecs = np.linalg.eig(ham)
    stable = lam.real < 0
    if not np.any(stable):
        raise NoStableShiftError("projected Hamiltonian has no stable eigenvalue")
    lam, vecs = lam[stable], vecs[:, stable]
    half = ham.shape[0] // 2
    qnorm = np.linalg.norm(vecs[half:, :], axis=0)
    order = np.lexsort((np.abs(lam), np.abs(lam.imag), -qnorm))
    return lam[order[0]]


def _as_shift(lam, snap=1e-8):
    # A vestigial imaginary part would make the merged pair step singular,
    # so nearly-real values are snapped onto the axis.
    lam = complex(lam)
    if abs(lam.imag) <= snap * abs(lam):
        return Shift.from_value(lam.real)
    return Shift.from_value(complex(lam.real, abs(lam.imag)))


def residual_hamiltonian_shift(state, problem, ell):
    """Stable projected-Hamiltonian eigenvalue with the largest lower eigenvector.

    Eigenvectors are normalized to unit length; ties in the lower-half
    norm are broken toward smaller imaginary part, then smaller magnitude.
    Complex winners are returned as pair leads with positive imaginary
    part.
    """
    proj = projected_hamiltonian(state, problem, ell)
    return _as_shift(_stable_eig_selection(proj.hamiltonian))


# ---------------------------------------------------------------------------
# Residual-minimizing shifts


def _reduced_residual(projected):
    rp = projected.r
    if rp.shape[1] == 1:
        return rp
    _, _, vh = np.linalg.svd(rp, full_matrices=False)
    return rp @ vh[0].conj().reshape(-1, 1)


def residual_min_objective(projected, sigma):
    """Squared norm of the next projected residual as a function of the shift.

    For more than one residual column the factor is first compressed onto
    its leading right singular vector so the objective stays smooth.
    """
    sigma = complex(sigma)
    if sigma.real >= 0:
        raise ShiftDomainError(f"shift {sigma} is not in the open left half-plane")
    rvec = _reduced_residual(projected)
    f, _ = _resmin_pieces(projected, rvec, sigma)
    return f


def _resmin_pieces(projected, rvec, sigma):
    """Next residual vector of one projected iteration and its squared norm.

    The one-column update gives X_1 = -2 Re(sigma) w w^H / ytil with
    w = (A^H + sigma I)^{-1} r and ytil = 1 + w^H G w, and the next
    residual r_1 = (A^H - X_1 G - conj(sigma) I) w.
    """
    ap, bp = projected.a, projected.b
    ell = ap.shape[0]
    eye = np.eye(ell)
    aph = ap.conj().T
    gp = bp @ bp.conj().T
    w = sla.solve(aph + sigma * eye, rvec)
    ytil = 1.0 + float(np.real(w.conj().T @ gp @ w)[0, 0])
    x1 = (-2.0 * sigma.real / ytil) * (w @ w.conj().T)
    r1 = (aph - x1 @ gp - np.conj(sigma) * eye) @ w
    f = float(np.real(r1.conj().T @ r1)[0, 0])
    return f, (w, ytil, x1, r1, gp, aph, eye)


def residual_min_gradient(projected, sigma):
    """Gradient of :func:`residual_min_objective` in (Re sigma, Im sigma).

    Closed form for the one-column (p = 1 after reduction) objective,
    obtained by differentiating the update in sigma and conj(sigma)
    separately; valid for Re sigma < 0.
    """
    sigma = complex(sigma)
    if sigma.real >= 0:
        raise ShiftDomainError(f"shift {sigma} is not in the open left half-plane")
    rvec = _reduced_residual(projected)
    _, (w, ytil, x1, r1, gp, aph, eye) = _resmin_pieces(projected, rvec, sigma)
    minv_w = sla.solve(aph + sigma * eye, w)
    gw = gp @ w
    ww = w @ w.conj().T
    dy = -complex((w.conj().T @ (gp @ minv_w))[0, 0])
    ssum = 2.0 * sigma.real
    dx = -ww / ytil - ssum * (-(minv_w @ w.conj().T) / ytil - ww * dy / ytil**2)
    dx_bar = -ww / ytil - ssum * (
        -(w @ minv_w.conj().T) / ytil - ww * dy.conjugate() / ytil**2
    )
    closed_loop = aph - x1 @ gp - np.conj(sigma) * eye
    dr = -(dx @ gw) - closed_loop @ minv_w
    dr_bar = -(dx_bar @ gw) - w
    df = complex((dr_bar.conj().T @ r1 + r1.conj().T @ dr)[0, 0])
    return np.array([2.0 * df.real, -2.0 * df.imag])


def _optimize_shift(proj, start, problem):
    """Quasi-Newton descent on the projected objective from a starting shift.

    Degrades gracefully: the starting shift is returned whenever the
    optimizer fails, worsens the objective, or drifts toward zero (shifts
    near zero stall the iteration).
    """
    eps_sigma = 1e-8 * max(problem.a_norm1(), 1e-300)
    rvec = _reduced_residual(proj)
    sigma0 = start.value
    x0 = np.array([min(sigma0.real, -eps_sigma), sigma0.imag])
    f0, _ = _resmin_pieces(proj, rvec, complex(x0[0], x0[1]))

    def fun(x):
        sigma = complex(min(x[0], -eps_sigma), x[1])
        f, _ = _resmin_pieces(proj, rvec, sigma)
        return f, residual_min_gradient(proj, sigma)

    try:
        res = sopt.minimize(
            fun,
            x0,
            jac=True,
            method="L-BFGS-B",
            bounds=[(None, -eps_sigma), (None, None)],
            options={"maxiter": OPTIMIZER_MAXITER, "gtol": max(1e-6 * f0, 1e-300)},
        )
        cand = complex(res.x[0], res.x[1])
        f_cand, _ = _resmin_pieces(proj, rvec, cand)
    except Exception:
        return start
    if not np.isfinite(f_cand) or f_cand > f0 or abs(cand) < eps_sigma:
        return start
    return _as_shift(cand)


def residual_minimizing_shift(state, problem, ell):
    """Post-optimize the residual Hamiltonian shift on the projected problem.

    Runs a bound-constrained quasi-Newton descent on the squared next
    residual norm, starting from the Hamiltonian shift and keeping
    Re sigma below a small negative margin.
    """
    proj = projected_hamiltonian(state, problem, ell)
    start = _as_shift(_stable_eig_selection(proj.hamiltonian))
    return _optimize_shift(proj, start, problem)


# ---------------------------------------------------------------------------
# Sessions consumed by the solver driver


def make_session(strategy, problem, options):
    """Create the per-solve mutable shift source for a strategy."""
    if isinstance(strategy, (list, tuple)):
        strategy = UserList(tuple(strategy))
    merged = options.arithmetic is Arithmetic.REAL_MERGED
    if isinstance(strategy, UserList):
        return _ListSession(strategy.shifts, strategy.cycle, merged)
    if isinstance(strategy, PenzlConfig):
        values = penzl_shifts(problem, strategy)
        return _ListSession(values, strategy.cycle, merged)
    if isinstance(strategy, DynamicConfig):
        if strategy.ell != math.inf and strategy.ell < problem.p:
            raise ValueError(
                f"ell must be at least p={problem.p} columns, got {strategy.ell}"
            )
        return _DynamicSession(problem, strategy)
    raise TypeError(f"unknown shift strategy: {strategy!r}")


class _ListSession:
    def __init__(self, values, cycle, merged):
        if merged:
            emission = []
            i = 0
            while i < len(values):
                v = complex(values[i])
                if v.imag == 0.0:
                    emission.append(Shift.from_value(v))
                    i += 1
                else:
                    emission.append(Shift.from_value(complex(v.real, abs(v.imag))))
                    partner = values[i + 1] if i + 1 < len(values) else None
                    if partner is not None and abs(partner - v.conjugate()) <= 1e-12 * abs(v):
                        i += 2
                    else:
                        i += 1
            self._emission = emission
        else:
            self._emission = [Shift.from_value(v) for v in values]
        if not self._emission:
            raise NoShiftsError("empty shift list")
        self._cycle = cycle
        self._at = 0

    def next(self, state):
        if self._at >= len(self._emission):
            if not self._cycle:
                raise NoShiftsError("shift list exhausted")
            self._at = 0
        shift = self._emission[self._at]
        self._at += 1
        return shift


class _DynamicSession:
    def __init__(self, problem, config):
        self.problem = problem
        self.config = config
        self._basis = _IncrementalBasis(problem.n) if config.ell == math.inf else None
        self._seen = 0

    def _projection(self, state):
        if self._basis is not None and state.width > 0:
            new = state.z[:, self._seen :]
            if new.shape[1]:
                cols = self.problem.e.T @ new if self.problem.has_e else new
                self._basis.extend(cols)
                self._seen = state.width
            return _project_from_basis(state, self.problem, self._basis.q)
        return projected_hamiltonian(state, self.problem, self.config.ell)

    def next(self, state):
        proj = self._projection(state)
        shift = _as_shift(_stable_eig_selection(proj.hamiltonian))
        if not self.config.optimize:
            return shift
        return _optimize_shift(proj, shift, self.problem)
