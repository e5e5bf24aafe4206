"""Problem and iterate data model for the low-rank Riccati ADI iteration.

The equation solved is

    A^T X + X A + C^T C - X B B^T X = 0,

or, when a mass matrix E is present,

    A^T X E + E^T X A + C^T C - E^T X B B^T X E = 0.

Iterates are kept in the factored form X_k = Z Y^{-1} Z^T with Y block
diagonal, together with the residual factor R (so that the Riccati
residual equals R R^T) and the feedback matrix K = X_k B (generalized
case: E^T X_k B).
"""

import enum
import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .exceptions import DimensionError, RadiError, ShiftDomainError, SingularEError

#: Largest n for which iterates are materialized as dense n-by-n arrays.
DENSE_CAP = 2000


def _as_2d(name, mat, dtype=float):
    if sps.issparse(mat):
        return mat
    arr = np.atleast_2d(np.asarray(mat, dtype=dtype))
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got ndim={arr.ndim}")
    return arr


class ShiftKind(enum.Enum):
    """Whether a shift stands alone or represents a conjugate pair."""

    REAL = "real"
    COMPLEX_PAIR_LEAD = "complex-pair-lead"


@dataclass(frozen=True)
class Shift:
    """A left half-plane shift parameter.

    Complex shifts carry the ``COMPLEX_PAIR_LEAD`` kind: consumed by the
    merged real-arithmetic step they stand for the pair (sigma, conj(sigma)),
    while the complex-arithmetic step uses the value singly.
    """

    value: complex
    kind: ShiftKind

    def __post_init__(self):
        if not np.isfinite(self.value.real) or not np.isfinite(self.value.imag):
            raise ShiftDomainError(f"shift {self.value} is not finite")
        if self.value.real >= 0:
            raise ShiftDomainError(f"shift {self.value} is not in the open left half-plane")

    @classmethod
    def from_value(cls, value):
        """Wrap a raw complex number, deriving the kind from its imaginary part."""
        value = complex(value)
        kind = ShiftKind.REAL if value.imag == 0.0 else ShiftKind.COMPLEX_PAIR_LEAD
        return cls(value, kind)

    @property
    def is_real(self):
        return self.kind is ShiftKind.REAL


@dataclass(frozen=True)
class IterationRecord:
    """One accepted (possibly merged) iteration of the solver."""

    step: int
    shift: complex
    relres: float
    width: int
    wall_time_s: float


class RiccatiProblem:
    """Coefficient matrices of a (generalized) continuous-time Riccati equation.

    Parameters
    ----------
    a : (n, n) array_like or sparse matrix
        System matrix. Real.
    b : (n, m) array_like, optional
        Input matrix; ``None`` yields an (n, 0) matrix, i.e. a Lyapunov
        equation.
    c : (p, n) array_like
        Output matrix, stored with rows as outputs.
    e : (n, n) array_like or sparse matrix, optional
        Mass matrix; ``None`` means identity. Must be invertible, which is
        checked by factorizing it once at construction.

    Instances are immutable after construction and may be shared freely
    across threads for read-only use.
    """

    def __init__(self, a, b=None, c=None, e=None):
        a = _as_2d("A", a)
        n = a.shape[0]
        if a.shape[1] != n:
            raise DimensionError(f"A must be square, got {a.shape}")
        if b is None:
            b = np.zeros((n, 0))
        b = np.asarray(b, dtype=float)
        if b.ndim == 1:
            b = b.reshape(n, 1)
        if c is None:
            raise DimensionError("C is required")
        c = np.asarray(c, dtype=float)
        if c.ndim == 1:
            c = c.reshape(1, n)
        if b.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got {b.shape}")
        if c.shape[1] != n:
            raise DimensionError(f"C must have {n} columns, got {c.shape}")
        m, p = b.shape[1], c.shape[0]
        if p > n or m > n:
            raise DimensionError(f"need p <= n and m <= n, got n={n}, m={m}, p={p}")
        if e is not None:
            e = _as_2d("E", e)
            if e.shape != (n, n):
                raise DimensionError(f"E must be {n}x{n}, got {e.shape}")
        self.a = a
        self.b = b
        self.c = c
        self.e = e
        self.n, self.m, self.p = n, m, p
        self._e_solve = _factorize_e(e) if e is not None else None

    @property
    def has_e(self):
        return self.e is not None

    @property
    def is_sparse(self):
        return sps.issparse(self.a)

    def esolve(self, rhs):
        """Solve E V = rhs with the factorization cached at construction."""
        if self._e_solve is None:
            return np.asarray(rhs)
        return self._e_solve(rhs, False)

    def etsolve(self, rhs):
        """Solve E^T V = rhs with the cached factorization."""
        if self._e_solve is None:
            return np.asarray(rhs)
        return self._e_solve(rhs, True)

    def initial_residual_factor(self):
        """R_0 = C^T, the residual factor of the zero initial iterate."""
        return self.c.T.copy()

    def a_norm1(self):
        """1-norm of A, used to scale shift magnitude guards."""
        if self.is_sparse:
            return abs(self.a).sum(axis=0).max()
        return np.linalg.norm(self.a, 1)

    def __repr__(self):
        kind = "sparse" if self.is_sparse else "dense"
        e = ", with E" if self.has_e else ""
        return f"RiccatiProblem(n={self.n}, m={self.m}, p={self.p}, {kind}{e})"


def _factorize_e(e):
    if sps.issparse(e):
        try:
            lu = spla.splu(e.tocsc())
        except RuntimeError as exc:
            raise SingularEError(f"E could not be factorized: {exc}") from exc

        def solve(rhs, transpose):
            rhs = np.asarray(rhs)
            trans = "T" if transpose else "N"
            if np.iscomplexobj(rhs):
                return lu.solve(rhs.real, trans=trans) + 1j * lu.solve(rhs.imag, trans=trans)
            return lu.solve(rhs, trans=trans)

        return solve
    try:
        lu, piv = sla.lu_factor(e)
    except (ValueError, sla.LinAlgError) as exc:
        raise SingularEError(f"E could not be factorized: {exc}") from exc
    if not np.all(np.isfinite(lu)):
        raise SingularEError("E could not be factorized: non-finite factors")
    rcond = _lu_rcond(e, lu, piv)
    if rcond < 1e-14:
        raise SingularEError(f"E is numerically singular (rcond ~ {rcond:.2e})")

    def solve(rhs, transpose):
        return sla.lu_solve((lu, piv), np.asarray(rhs), trans=1 if transpose else 0)

    return solve


def _lu_rcond(mat, lu, piv):
    anorm = np.linalg.norm(mat, 1)
    if np.iscomplexobj(lu):
        rcond, _ = sla.lapack.zgecon(lu, anorm)
    else:
        rcond, _ = sla.lapack.dgecon(lu, anorm)
    return rcond


class LowRankState:
    """Mutable low-rank iterate of the Riccati ADI iteration.

    Attributes
    ----------
    z : (n, w) ndarray
        Accumulated solution factor; grows by p columns per real step and
        2p per merged conjugate pair.
    yblocks : list of ndarray
        Hermitian positive definite blocks whose block-diagonal assembly
        is Y in X = Z Y^{-1} Z^T.
    r : (n, p) ndarray
        Residual factor.
    k : (n, m) ndarray
        Feedback matrix X_k B (generalized case: E^T X_k B).
    steps : int
        Number of accepted (possibly merged) iterations.
    history : list of IterationRecord
    """

    def __init__(self, z, yblocks, r, k, steps=0, history=None):
        self.z = z
        self.yblocks = list(yblocks)
        self.r = r
        self.k = k
        self.steps = steps
        self.history = list(history) if history else []
        self._t0 = time.perf_counter()

    @classmethod
    def initial(cls, problem):
        """Zero iterate: empty Z, R_0 = C^T, K = 0."""
        r0 = problem.initial_residual_factor()
        if not np.any(r0):
            raise DimensionError("C is zero: the equation is trivial and the iteration undefined")
        return cls(
            z=np.zeros((problem.n, 0)),
            yblocks=[],
            r=r0,
            k=np.zeros((problem.n, problem.m)),
            steps=0,
        )

    @property
    def width(self):
        return self.z.shape[1]

    @property
    def is_real(self):
        return not (
            np.iscomplexobj(self.z)
            or np.iscomplexobj(self.r)
            or np.iscomplexobj(self.k)
            or any(np.iscomplexobj(y) for y in self.yblocks)
        )

    def elapsed(self):
        """Monotonic seconds since this state was created."""
        return time.perf_counter() - self._t0

    def record(self, shift, relres):
        rec = IterationRecord(
            step=self.steps,
            shift=complex(shift),
            relres=float(relres),
            width=self.width,
            wall_time_s=self.elapsed(),
        )
        self.history.append(rec)
        return rec

    def __repr__(self):
        return f"LowRankState(steps={self.steps}, width={self.width})"


def residual_norm(r, norm="2"):
    """Norm of R^H R without ever forming an n-by-n matrix.

    Because the Riccati residual of the iterate factors as R R^H, its norm
    equals the norm of the small p-by-p Gram matrix R^H R in both the
    2-norm and the Frobenius norm.

    Parameters
    ----------
    r : (n, p) ndarray
        Residual factor with at least one column.
    norm : {"2", "fro"}
        Matrix norm applied to R^H R.
    """
    r = np.asarray(r)
    if r.ndim == 1:
        r = r.reshape(-1, 1)
    if r.size == 0 or r.shape[1] == 0:
        raise DimensionError("residual factor must have at least one column")
    gram = r.conj().T @ r
    if norm == "2":
        # Hermitian PSD: the 2-norm is the largest eigenvalue.
        return float(max(sla.eigvalsh(gram)[-1], 0.0))
    if norm == "fro":
        return float(np.linalg.norm(gram, "fro"))
    raise ValueError(f"unknown norm {norm!r}; expected '2' or 'fro'")


def relative_residual(state, problem, norm="2"):
    """||R^H R|| relative to the residual norm ||C C^T|| of the zero iterate."""
    denom = residual_norm(problem.c.T, norm=norm)
    if denom == 0.0:
        raise DimensionError("C is zero: relative residual undefined")
    return residual_norm(state.r, norm=norm) / denom


def assemble_dense(state, max_n=DENSE_CAP):
    """Materialize X = Z Y^{-1} Z^H as a dense Hermitian matrix.

    Guarded by ``max_n`` since the result is n-by-n. Y is applied through
    per-block Cholesky solves; the blocks are positive definite whenever the
    state was produced by left half-plane shifts.
    """
    n = state.r.shape[0]
    if n > max_n:
        raise DimensionError(f"refusing to materialize {n}x{n} dense iterate (cap {max_n})")
    dtype = complex if np.iscomplexobj(state.z) else float
    x = np.zeros((n, n), dtype=dtype)
    at = 0
    for y in state.yblocks:
        w = y.shape[0]
        cols = state.z[:, at : at + w]
        at += w
        try:
            cf = sla.cho_factor(y)
        except sla.LinAlgError as exc:
            raise RadiError(
                "internal inconsistency: Y block is not positive definite"
            ) from exc
        x = x + cols @ sla.cho_solve(cf, cols.conj().T)
    if at != state.z.shape[1]:
        raise DimensionError(
            f"Z has {state.z.shape[1]} columns but Y blocks cover {at}"
        )
    return 0.5 * (x + x.conj().T)
