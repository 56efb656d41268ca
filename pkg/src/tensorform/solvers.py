"""Conjugate gradients with optional Jacobi preconditioning."""
import numpy as np

from .errors import CGNotConverged


def solve_cg(A, b, rtol=1e-10, max_iter=None, jacobi=True, x0=None):
    """Solve ``A x = b`` for symmetric positive definite ``A``.

    Stops when ``||b - A x|| <= rtol * ||b||`` (true residual, 2-norm).
    Returns ``(x, info)`` with ``info["iterations"]`` and ``info["residuals"]``.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    max_iter = 10 * n if max_iter is None else max_iter
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), {"iterations": 0, "residuals": [0.0]}
    inv_diag = None
    if jacobi:
        diag = A.diagonal() if hasattr(A, "diagonal") else np.diag(A)
        inv_diag = np.where(diag != 0.0, 1.0 / np.where(diag != 0.0, diag, 1.0), 1.0)
    precondition = (lambda r: inv_diag * r) if jacobi else (lambda r: r)
    r = b - A @ x
    z = precondition(r)
    p = z.copy()
    rz = r @ z
    history = [np.linalg.norm(r)]
    target = rtol * bnorm
    for it in range(1, max_iter + 1):
        if history[-1] <= target:
            return x, {"iterations": it - 1, "residuals": history}
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0.0:
            raise CGNotConverged(f"CG did not converge: matrix is not positive definite (p'Ap = {pAp:.3e})", history)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if it % 50 == 0:  # guard against drift of the recursive residual
            r = b - A @ x
        history.append(np.linalg.norm(r))
        z = precondition(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    true = np.linalg.norm(b - A @ x)
    if true <= target:
        return x, {"iterations": max_iter, "residuals": history}
    raise CGNotConverged(
        f"CG did not converge in {max_iter} iterations: final residual {true:.3e} > {target:.3e}", history
    )
