"""Pure numpy implementation of the stencil kernels; same contract as the
compiled ``_ckernels`` module.
"""
import numpy as np


def apply_operator(gx, gy, gz, diag, x):
    out = diag * x
    d = gx * (x[:, :, :-1] - x[:, :, 1:])
    out[:, :, :-1] += d
    out[:, :, 1:] -= d
    d = gy * (x[:, :-1, :] - x[:, 1:, :])
    out[:, :-1, :] += d
    out[:, 1:, :] -= d
    d = gz * (x[:-1] - x[1:])
    out[:-1] += d
    out[1:] -= d
    return out


def pcg(gx, gy, gz, diag, inv_precond, rhs, x0, rtol, maxiter):
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0.0:
        return np.zeros_like(rhs), 0, 0.0
    x = np.array(x0, dtype=np.float64, copy=True)
    r = rhs - apply_operator(gx, gy, gz, diag, x)
    z = inv_precond * r
    p = z.copy()
    rz = np.vdot(r, z)
    target = rtol * bnorm
    it = 0
    while np.linalg.norm(r) > target and it < maxiter:
        q = apply_operator(gx, gy, gz, diag, p)
        pq = np.vdot(p, q)
        if pq <= 0.0:
            break
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        z = inv_precond * r
        rz_new = np.vdot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1
    r = rhs - apply_operator(gx, gy, gz, diag, x)
    return x, it, float(np.linalg.norm(r) / bnorm)
