"""Shifted linear solves (A^T + sigma E^T) V = RHS and their SMW variant.

These are the only large-n kernels of the iteration. A factorization is
built once per shift and reused for every right-hand side; the rank-m
closed-loop correction -K B^T is folded in through the
Sherman-Morrison-Woodbury identity so that each iteration costs two
multi-RHS solves with the uncorrected matrix.
"""

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .exceptions import ShiftDomainError, SingularShiftError, SmwBreakdownError

#: Reciprocal condition estimate below which a shifted matrix is rejected.
RCOND_FLOOR = 1e-14


def _check_shift(sigma):
    sigma = complex(sigma)
    if sigma.real >= 0 or not np.isfinite(sigma.real) or not np.isfinite(sigma.imag):
        raise ShiftDomainError(f"shift {sigma} is not in the open left half-plane")
    return sigma


class ShiftedFactorization:
    """Reusable factorization of A^T + sigma E^T for one fixed shift.

    Parameters
    ----------
    problem : RiccatiProblem
    sigma : complex
        Shift with negative real part.
    solver : callable, optional
        User-supplied solver ``solver(sigma, rhs) -> V`` replacing the
        built-in factorization. It must return V with
        (A^T + sigma E^T) V = rhs to working accuracy.
    """

    def __init__(self, problem, sigma, solver=None):
        sigma = _check_shift(sigma)
        self.sigma = sigma
        self.problem = problem
        self._solver = solver
        self.backend = "callback"
        if solver is not None:
            return
        scalar = sigma.real if sigma.imag == 0.0 else sigma
        if problem.is_sparse:
            self.backend = "sparse"
            if problem.has_e:
                eye = problem.e.T if sps.issparse(problem.e) else sps.csc_matrix(problem.e.T)
            else:
                eye = sps.identity(problem.n, format="csc")
            mat = (problem.a.T + scalar * eye).tocsc()
            try:
                self._lu = spla.splu(mat)
            except RuntimeError as exc:
                raise SingularShiftError(sigma, str(exc)) from exc
            self._check_sparse_rcond(mat)
        else:
            self.backend = "dense"
            if problem.has_e:
                eye = problem.e.toarray().T if sps.issparse(problem.e) else problem.e.T
            else:
                eye = np.eye(problem.n)
            mat = problem.a.T + scalar * eye
            anorm = np.linalg.norm(mat, 1)
            try:
                self._lu = sla.lu_factor(mat)
            except (ValueError, sla.LinAlgError) as exc:
                raise SingularShiftError(sigma, str(exc)) from exc
            gecon = sla.lapack.zgecon if np.iscomplexobj(mat) else sla.lapack.dgecon
            rcond, _ = gecon(self._lu[0], anorm)
            if not np.isfinite(rcond) or rcond < RCOND_FLOOR:
                raise SingularShiftError(sigma, f"rcond ~ {rcond:.2e}")

    def _check_sparse_rcond(self, mat):
        lu = self._lu
        op = spla.LinearOperator(
            mat.shape,
            matvec=lu.solve,
            rmatvec=lambda v: lu.solve(v, trans="H"),
            dtype=mat.dtype,
        )
        try:
            inv_norm = spla.onenormest(op)
        except Exception:
            return  # estimator failure is not evidence of singularity
        norm = spla.onenormest(mat)
        if not np.isfinite(inv_norm) or inv_norm * norm > 1.0 / RCOND_FLOOR:
            raise SingularShiftError(self.sigma, f"rcond ~ {1.0 / (inv_norm * norm):.2e}")

    def solve(self, rhs):
        """Return V with (A^T + sigma E^T) V = rhs."""
        rhs = np.asarray(rhs)
        if self._solver is not None:
            return np.asarray(self._solver(self.sigma, rhs))
        if self.backend == "sparse":
            if np.iscomplexobj(rhs) and not np.iscomplexobj(self._lu.U):
                return self._lu.solve(rhs.real) + 1j * self._lu.solve(rhs.imag)
            return self._lu.solve(rhs.astype(self._lu.U.dtype, copy=False))
        if np.iscomplexobj(rhs) and not np.iscomplexobj(self._lu[0]):
            return sla.lu_solve(self._lu, rhs.real) + 1j * sla.lu_solve(self._lu, rhs.imag)
        return sla.lu_solve(self._lu, rhs)


def shifted_solve(problem, sigma, rhs, solver=None, factorization=None):
    """Solve (A^T + sigma E^T) V = rhs (E^T omitted when E is absent).

    Parameters
    ----------
    problem : RiccatiProblem
    sigma : complex
        Shift with Re(sigma) < 0 such that -sigma is not an eigenvalue of A
        (of the pencil (A, E) in the generalized case).
    rhs : (n, r) ndarray
    solver : callable, optional
        User solver callback, see :class:`ShiftedFactorization`.
    factorization : ShiftedFactorization, optional
        Reuse an existing factorization instead of building one.
    """
    if factorization is None:
        factorization = ShiftedFactorization(problem, sigma, solver=solver)
    return factorization.solve(rhs)


def smw_shifted_solve(
    problem, sigma, k, rhs, solver=None, factorization=None, method="smw"
):
    """Solve (A^T - K B^T + sigma E^T) V = rhs.

    The default path expands the low-rank correction by the
    Sherman-Morrison-Woodbury identity, costing exactly two multi-RHS
    solves with A^T + sigma E^T (one for ``rhs``, one for ``k``). Setting
    ``method="direct"`` assembles and factors the corrected matrix instead,
    which is only supported on the dense backend.

    Raises
    ------
    SmwBreakdownError
        If the m-by-m capacitance matrix I - B^T (A^T + sigma E^T)^{-1} K
        is singular, signalling a shift too close to a closed-loop
        eigenvalue.
    """
    sigma = _check_shift(sigma)
    k = np.asarray(k)
    if method == "direct":
        if problem.is_sparse:
            raise ValueError("direct assembly is only supported for dense problems")
        if problem.has_e:
            eye = problem.e.toarray().T if sps.issparse(problem.e) else problem.e.T
        else:
            eye = np.eye(problem.n)
        scalar = sigma.real if sigma.imag == 0.0 and not np.iscomplexobj(k) else sigma
        mat = problem.a.T - k @ problem.b.T + scalar * eye
        try:
            return sla.solve(mat, np.asarray(rhs))
        except (ValueError, sla.LinAlgError) as exc:
            raise SingularShiftError(sigma, str(exc)) from exc
    if method != "smw":
        raise ValueError(f"unknown method {method!r}; expected 'smw' or 'direct'")
    if factorization is None:
        factorization = ShiftedFactorization(problem, sigma, solver=solver)
    w_rhs = factorization.solve(rhs)
    if problem.m == 0 or not np.any(k):
        return w_rhs
    w_k = factorization.solve(k)
    cap = np.eye(problem.m, dtype=np.result_type(w_k, 1.0)) - problem.b.T @ w_k
    cond = np.linalg.cond(cap)
    if not np.isfinite(cond) or cond > 1.0 / RCOND_FLOOR:
        raise SmwBreakdownError(sigma, f"capacitance condition ~ {cond:.2e}")
    return w_rhs + w_k @ np.linalg.solve(cap, problem.b.T @ w_rhs)
