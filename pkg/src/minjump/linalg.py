"""Dense matrix kernels: matrix exponential, symmetric eigenvalues, SPD tests.

The matrices handled here are small (at most a dozen rows), so the kernels
favor robustness and auditability over large-scale performance:

- expm uses scaling-and-squaring with the order-(13,13) diagonal Pade
  approximant and the standard 1-norm squaring threshold.
- the symmetric eigensolver runs cyclic Jacobi sweeps to a 1e-12
  off-diagonal norm.
- positive definiteness and SPD inversion go through Cholesky.
"""

import numpy as np

from .errors import DimensionError, FactorizationError, NumericError

# 1-norm threshold above which the argument is halved before the order-13
# Pade evaluation; below it the approximant is accurate to double precision.
_PADE13_THETA = 5.371920351148152

_PADE13_B = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)

_JACOBI_OFF_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 100


def _as_square(M, name="matrix"):
    M = np.array(M, dtype=float, copy=True)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NumericError(f"{name} contains non-finite entries")
    return M


def _as_symmetric(S, name="matrix"):
    S = _as_square(S, name)
    scale = max(1.0, float(np.abs(S).max()))
    if np.abs(S - S.T).max() > 1e-9 * scale:
        raise DimensionError(f"{name} is not symmetric")
    return 0.5 * (S + S.T)


def sym(M):
    """Symmetric part (M + M^T)/2."""
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def expm(M, t=1.0):
    """e^{M t} by Pade-(13,13) scaling and squaring.

    Relative accuracy is at the double-precision level for the moderate
    norms arising here (the squaring count grows with log2 of the 1-norm).
    """
    M = _as_square(M, "expm argument")
    if not np.isfinite(t):
        raise NumericError("expm time must be finite")
    n = M.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    W = M * float(t)
    nrm = np.linalg.norm(W, 1)
    squarings = 0
    if nrm > _PADE13_THETA:
        squarings = int(np.ceil(np.log2(nrm / _PADE13_THETA)))
        W = W / (2.0 ** squarings)

    b = _PADE13_B
    ident = np.eye(n)
    W2 = W @ W
    W4 = W2 @ W2
    W6 = W4 @ W2
    U = W @ (W6 @ (b[13] * W6 + b[11] * W4 + b[9] * W2)
             + b[7] * W6 + b[5] * W4 + b[3] * W2 + b[1] * ident)
    V = (W6 @ (b[12] * W6 + b[10] * W4 + b[8] * W2)
         + b[6] * W6 + b[4] * W4 + b[2] * W2 + b[0] * ident)
    try:
        E = np.linalg.solve(V - U, V + U)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"expm Pade solve failed: {exc}") from exc
    for _ in range(squarings):
        E = E @ E
    if not np.all(np.isfinite(E)):
        raise NumericError("expm overflowed; argument norm too large")
    return E


def _jacobi_sweeps(S):
    A = S.copy()
    n = A.shape[0]
    if n < 2:
        return A
    scale = max(1.0, float(np.linalg.norm(A)))
    tol = _JACOBI_OFF_TOL * scale
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = np.sqrt(max(0.0, np.sum(A * A) - np.sum(np.diag(A) ** 2)))
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 0.1 * tol / (n * n):
                    continue
                app = A[p, p]
                aqq = A[q, q]
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    tnum = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    tnum = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + tnum * tnum)
                s = tnum * c
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp = A[:, p].copy()
                cq = A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                A[p, q] = 0.0
                A[q, p] = 0.0
    return A


def sym_eigvals(S):
    """All eigenvalues of a symmetric matrix, ascending, via cyclic Jacobi."""
    S = _as_symmetric(S, "eig argument")
    if S.shape[0] == 0:
        return np.zeros(0)
    A = _jacobi_sweeps(S)
    return np.sort(np.diag(A))


def sym_eig_max(S):
    """Largest eigenvalue of a symmetric matrix."""
    vals = sym_eigvals(S)
    if vals.size == 0:
        raise DimensionError("eig argument is empty")
    return float(vals[-1])


def is_pd(S, tol=0.0):
    """True iff the Cholesky factorization of S - tol*I succeeds."""
    if tol < 0.0:
        raise ValueError("tol must be nonnegative")
    try:
        S = _as_symmetric(S, "is_pd argument")
    except (DimensionError, NumericError):
        return False
    n = S.shape[0]
    try:
        np.linalg.cholesky(S - tol * np.eye(n))
    except np.linalg.LinAlgError:
        return False
    return True


def inv_spd(S):
    """Inverse of a symmetric positive definite matrix via Cholesky."""
    S = _as_symmetric(S, "inv_spd argument")
    n = S.shape[0]
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError("matrix is not positive definite") from exc
    Z = np.linalg.solve(L, np.eye(n))
    X = np.linalg.solve(L.T, Z)
    return 0.5 * (X + X.T)
