"""Dense small-scale reference solvers for cross-validating the iteration.

The quadratic ADI recurrence, the Cayley-transformed subspace iteration,
and the Hamiltonian invariant-subspace approximation all generate exactly
the same sequence of iterates as the low-rank method when started from
zero with shared shifts. These reference implementations keep full n-by-n
matrices and exist purely so that equivalence, monotonicity, and residual
identities can be executed as tests; they make no attempt at large-n
performance.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps

from .exceptions import DimensionError, OracleFailure
from .problem import DENSE_CAP


def _dense(mat):
    return mat.toarray() if sps.issparse(mat) else np.asarray(mat)


def _dense_coeffs(problem):
    a = _dense(problem.a)
    q = problem.c.T @ problem.c
    g = problem.b @ problem.b.T
    return a, q, g


def hamiltonian_matrix(problem):
    """The 2n-by-2n block matrix [[A, G], [Q, -A^T]] with Q = C^T C, G = B B^T."""
    a, q, g = _dense_coeffs(problem)
    return np.block([[a, g], [q, -a.T]])


def _reverted(problem):
    """Map the generalized equation to standard form (E^{-1}A, E^{-1}B, C)."""
    from .problem import RiccatiProblem

    a = problem.esolve(_dense(problem.a))
    b = problem.esolve(problem.b) if problem.m else problem.b
    return RiccatiProblem(a, b, problem.c)


@dataclass(frozen=True)
class StabilityReport:
    """Löwner-order and closed-loop checks between consecutive iterates."""

    diff_min_eig: float
    next_min_eig: float
    closed_loop_max_real: float


def dense_care_solve(problem, max_n=DENSE_CAP):
    """Stabilizing solution of the Riccati equation via the Hamiltonian Schur form.

    Computes an ordered real Schur decomposition of the Hamiltonian matrix,
    takes the basis [P; Q] of its n-dimensional stable invariant subspace,
    and returns X = -Q P^{-1}. Generalized problems are reverted to
    standard form and the solution mapped back. The result is validated
    against its own residual and closed-loop spectrum.
    """
    if problem.n > max_n:
        raise DimensionError(f"dense oracle capped at n={max_n}, got {problem.n}")
    if problem.has_e:
        std = _reverted(problem)
        xhat = dense_care_solve(std, max_n=max_n)
        einv = problem.esolve(np.eye(problem.n))
        x = einv.T @ xhat @ einv
        return 0.5 * (x + x.T)
    ham = hamiltonian_matrix(problem)
    t, zsch, sdim = sla.schur(ham, output="real", sort=lambda re, im: re < 0)
    if sdim != problem.n:
        raise OracleFailure(
            f"stable invariant subspace has dimension {sdim}, expected {problem.n}"
        )
    pmat = zsch[: problem.n, : problem.n]
    qmat = zsch[problem.n :, : problem.n]
    try:
        x = -np.linalg.solve(pmat.T, qmat.T).T
    except np.linalg.LinAlgError as exc:
        raise OracleFailure(f"stable subspace is not a graph subspace: {exc}") from exc
    x = 0.5 * (x + x.T)
    _validate_care_solution(problem, x)
    return x


def _validate_care_solution(problem, x):
    a, q, g = _dense_coeffs(problem)
    _, nrm = dense_residual(x, problem)
    qnorm = np.linalg.norm(q, 2)
    # Round-off floor keeps the check meaningful when Q (and hence X) is zero.
    thresh = 1e-9 * qnorm + 1e-11 * (1.0 + np.linalg.norm(a, 2) * np.linalg.norm(x, 2))
    if nrm > thresh:
        raise OracleFailure(f"residual {nrm:.2e} too large relative to ||Q||={qnorm:.2e}")
    if np.max(np.real(np.linalg.eigvals(a - g @ x))) >= 0:
        raise OracleFailure("computed solution is not stabilizing")


def invariant_subspace_approx(problem, k, selection=None):
    """Rank-k approximation -Q_k (Q_k^H P_k)^{-1} Q_k^H from stable Hamiltonian eigenpairs.

    Parameters
    ----------
    problem : RiccatiProblem
    k : int
        Number of stable eigenpairs used; k = n recovers the stabilizing
        solution and k = 0 the zero matrix.
    selection : sequence of int, optional
        Indices into the stable eigenvalue list (sorted by ascending |Re|,
        ties by ascending |Im|). Defaults to the first k.
    """
    if problem.has_e:
        raise DimensionError("invariant subspace oracle expects a standard problem")
    if k == 0:
        return np.zeros((problem.n, problem.n))
    lam, vecs = stable_hamiltonian_eigenpairs(problem)
    if k > lam.size:
        raise OracleFailure(f"only {lam.size} stable eigenvalues available, need {k}")
    idx = np.arange(k) if selection is None else np.asarray(selection)
    pmat = vecs[: problem.n, idx]
    qmat = vecs[problem.n :, idx]
    small = qmat.conj().T @ pmat
    try:
        x = -qmat @ np.linalg.solve(small, qmat.conj().T)
    except np.linalg.LinAlgError as exc:
        raise OracleFailure(f"Q_k^H P_k is singular: {exc}") from exc
    return 0.5 * (x + x.conj().T)


def stable_hamiltonian_eigenpairs(problem):
    """Stable eigenvalues and eigenvectors of the Hamiltonian matrix.

    Sorted by ascending |Re|, ties by ascending |Im|; conjugate partners
    are adjacent with the positive imaginary part first.
    """
    ham = hamiltonian_matrix(problem)
    lam, vecs = np.linalg.eig(ham)
    stable = lam.real < 0
    lam, vecs = lam[stable], vecs[:, stable]
    order = np.lexsort((-lam.imag, np.abs(lam.imag), np.abs(lam.real)))
    return lam[order], vecs[:, order]


def qadi_dense_step(x, problem, sigma):
    """One dense quadratic ADI double-step.

    Solves the two one-sided half-step equations

        X_{k+1/2} (A + conj(sigma) I - G X_k) = -Q - (A^T - conj(sigma) I) X_k
        (A^T + sigma I - X_{k+1/2} G) X_{k+1} = -Q - X_{k+1/2} (A - sigma I)

    by factoring the n-by-n coefficient and applying it to n right-hand
    sides. Inserting G = 0 recovers the dense Lyapunov ADI step.
    """
    a, q, g = _dense_coeffs(problem)
    x = np.asarray(x)
    n = problem.n
    eye = np.eye(n)
    sig = complex(sigma)
    if sig.imag == 0.0 and not np.iscomplexobj(x):
        sig = sig.real
    m1 = a + np.conj(sig) * eye - g @ x
    rhs1 = -q - (a.T - np.conj(sig) * eye) @ x
    try:
        xhalf = sla.solve(m1.T, rhs1.T).T
    except (sla.LinAlgError, ValueError) as exc:
        raise OracleFailure(f"first half-step matrix is singular: {exc}") from exc
    m2 = a.T + sig * eye - xhalf @ g
    rhs2 = -q - xhalf @ (a - sig * eye)
    try:
        xnext = sla.solve(m2, rhs2)
    except (sla.LinAlgError, ValueError) as exc:
        raise OracleFailure(f"second half-step matrix is singular: {exc}") from exc
    if not np.all(np.isfinite(xnext)):
        raise OracleFailure("half-step solve produced non-finite entries")
    return 0.5 * (xnext + xnext.conj().T)


def cayley_subspace_step(x, problem, sigma):
    """One Cayley-transformed Hamiltonian subspace iteration.

    Forms [M; N] = (H - sigma I)^{-1} (H + conj(sigma) I) [I; -X] by one
    dense 2n-by-2n solve and returns -N M^{-1}, Hermitian-symmetrized.
    """
    ham = hamiltonian_matrix(problem)
    x = np.asarray(x)
    n = problem.n
    sig = complex(sigma)
    if sig.imag == 0.0 and not np.iscomplexobj(x):
        sig = sig.real
    stack = np.vstack([np.eye(n, dtype=x.dtype), -x])
    rhs = ham @ stack + np.conj(sig) * stack
    try:
        mn = sla.solve(ham - sig * np.eye(2 * n), rhs)
    except (sla.LinAlgError, ValueError) as exc:
        raise OracleFailure(f"H - sigma I is singular: {exc}") from exc
    mmat, nmat = mn[:n], mn[n:]
    try:
        xnext = -sla.solve(mmat.T, nmat.T).T
    except (sla.LinAlgError, ValueError) as exc:
        raise OracleFailure(f"M is singular: {exc}") from exc
    if not np.all(np.isfinite(xnext)):
        raise OracleFailure("Cayley step produced non-finite entries")
    return 0.5 * (xnext + xnext.conj().T)


def dense_residual(x, problem, norm="2"):
    """Riccati residual A^T X + X A + Q - X G X and its norm.

    With a mass matrix present the generalized form
    A^T X E + E^T X A + Q - E^T X G X E is evaluated instead.
    """
    a, q, g = _dense_coeffs(problem)
    x = np.asarray(x)
    if x.shape != (problem.n, problem.n):
        raise DimensionError(f"X must be {problem.n}x{problem.n}, got {x.shape}")
    if problem.has_e:
        e = _dense(problem.e)
        res = a.T @ x @ e + e.T @ x @ a + q - e.T @ x @ g @ x @ e
    else:
        res = a.T @ x + x @ a + q - x @ g @ x
    if norm == "2":
        nrm = float(np.linalg.norm(res, 2))
    elif norm == "fro":
        nrm = float(np.linalg.norm(res, "fro"))
    else:
        raise ValueError(f"unknown norm {norm!r}")
    return res, nrm


def loewner_and_stability_checks(x_prev, x_next, problem):
    """Monotonicity and stabilization diagnostics for consecutive iterates.

    Reports the smallest eigenvalue of X_next - X_prev (negative values
    beyond round-off violate the Löwner chain), the smallest eigenvalue of
    X_next, and the largest real part of the closed-loop spectrum.
    """
    x_prev = np.asarray(x_prev)
    x_next = np.asarray(x_next)
    diff = 0.5 * (x_next - x_prev + (x_next - x_prev).conj().T)
    diff_min = float(sla.eigvalsh(diff)[0])
    next_min = float(sla.eigvalsh(0.5 * (x_next + x_next.conj().T))[0])
    a, _, g = _dense_coeffs(problem)
    if problem.has_e:
        e = _dense(problem.e)
        lam = sla.eigvals(a - g @ x_next @ e, e)
    else:
        lam = sla.eigvals(a - g @ x_next)
    return StabilityReport(
        diff_min_eig=diff_min,
        next_min_eig=next_min,
        closed_loop_max_real=float(np.max(lam.real)),
    )
