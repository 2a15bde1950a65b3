"""Naive pair-by-pair evaluation of the pairwise functionals.

Independent of the convolution engine in ``pair``: it loops over every
cell v, pairs it with every other cell w, builds the vector fields b_k and
their lifts explicitly, and differentiates b~_j . grad log F along the six
coordinate directions by central differences of the local quadratic model
of log F. That model is a polynomial of degree two, so unit-step central
differences are exact. Meant for grids with n <= 8.
"""

from __future__ import annotations

import numpy as np

from landau_fisher.grid import log_derivatives
from landau_fisher.kernels import CUTOFF, RAW, KernelSpec, a_matrix, alpha, alpha_log_slope_weight, sqrt_alpha_and_slope

E = np.eye(3)
NAMES = ("d_par", "d_rad", "d_sph", "r_sph", "slope_term", "entropy_dissipation", "j1", "j2", "full_gradient")


def _b(k, z):
    """b_k(z) = e_k x z for z of shape (m, 3)."""
    return np.cross(E[k], z)


def _s(j, dv, dw, v, w, G, g, Hv, Hw):
    """b~_j . grad log F at (v + dv, w + dw) under the quadratic model of log F around (v, w)."""
    grad_v = G + Hv @ dv
    grad_w = g + np.einsum("mab,b->ma", Hw, dw)
    return np.sum(_b(j, (v + dv) - (w + dw)) * (grad_v - grad_w), axis=1)


def _grad6(j, v, w, G, g, Hv, Hw):
    out = np.empty((w.shape[0], 6))
    for m in range(6):
        step = np.zeros(6)
        step[m] = 1.0
        plus = _s(j, step[:3], step[3:], v, w, G, g, Hv, Hw)
        minus = _s(j, -step[:3], -step[3:], v, w, G, g, Hv, Hw)
        out[:, m] = 0.5 * (plus - minus)
    return out


def brute_force_terms(f, spec: KernelSpec, mode: str = RAW) -> dict:
    """Every pairwise functional by explicit loops; D-terms in ``mode``, J-terms cut off."""
    grid = f.grid
    logd = log_derivatives(f)
    pts = grid.mesh.reshape(3, -1).T
    vals = f.values.ravel()
    grads = logd.grad.reshape(3, -1).T
    hess = np.moveaxis(logd.hess.reshape(3, 3, -1), -1, 0)
    sm = KernelSpec(spec.gamma, spec.epsilon, mode)
    sc = KernelSpec(spec.gamma, spec.epsilon, CUTOFF)
    sraw = KernelSpec(spec.gamma, spec.epsilon, RAW)
    acc = dict.fromkeys(NAMES, 0.0)
    idx = np.arange(len(vals))
    for p in range(len(vals)):
        others = idx != p
        v, fv, G, Hv = pts[p], vals[p], grads[p], hess[p]
        w, fw, g, Hw = pts[others], vals[others], grads[others], hess[others]
        z = v - w
        r = np.sqrt(np.sum(z * z, axis=1))
        F = fv * fw
        al = alpha(r, sm)
        root, slope = sqrt_alpha_and_slope(r, sm)
        n0 = z / r[:, None]
        n6 = np.concatenate([n0, -n0], axis=1) / np.sqrt(2.0)
        xi = G - g
        grads6 = [_grad6(j, v, w, G, g, Hv, Hw) for j in range(3)]
        lifts = [np.concatenate([_b(k, z), -_b(k, z)], axis=1) for k in range(3)]
        grad_log_F = np.concatenate([np.broadcast_to(G, g.shape), g], axis=1)
        s_vals = [np.sum(lifts[k] * grad_log_F, axis=1) for k in range(3)]
        par = np.zeros_like(r)
        sph = np.zeros_like(r)
        rad = np.zeros_like(r)
        full = np.zeros_like(r)
        for j in range(3):
            for i in range(3):
                par += (grads6[j][:, i] + grads6[j][:, 3 + i]) ** 2
                sph += np.sum(lifts[i] * grads6[j], axis=1) ** 2
        for i in range(3):
            # n . grad sqrt(alpha(|v - w|)) = sqrt(2) (sqrt alpha)'
            d = np.sqrt(2.0) * slope * s_vals[i] + root * np.sum(n6 * grads6[i], axis=1)
            rad += d * d
            gfull = root[:, None] * grads6[i] + (slope * s_vals[i])[:, None] * np.sqrt(2.0) * n6
            full += np.sum(gfull * gfull, axis=1)
        ssq = sum(s * s for s in s_vals)
        a = a_matrix(z)
        at = alpha(r, sc)
        j1 = np.zeros_like(r)
        j2 = np.zeros_like(r)
        for i in range(3):
            bi = _b(i, z)
            for j in range(3):
                bj = _b(j, z)
                j1 += np.einsum("ma,ab,mb->m", bi, Hv, bj) ** 2
                # (b_i . grad_v) b_j by a unit central difference; b_j is linear in v
                dbj = 0.5 * (_b(j, z + bi) - _b(j, z - bi))
                j2 += np.sum(dbj * xi, axis=1) ** 2
        acc["d_par"] += np.sum(0.5 * al * F * par)
        acc["d_sph"] += np.sum(al / (2 * r * r) * F * sph)
        acc["d_rad"] += np.sum(F * rad)
        acc["full_gradient"] += np.sum(F * full)
        acc["r_sph"] += np.sum(al / (r * r) * F * ssq)
        acc["slope_term"] += np.sum(alpha_log_slope_weight(r, sm) * F * ssq)
        acc["entropy_dissipation"] += np.sum(0.5 * alpha(r, sraw) * F * np.einsum("ma,mab,mb->m", xi, a, xi))
        acc["j1"] += np.sum(at / (r * r) * F * j1)
        acc["j2"] += np.sum(2 * at / (r * r) * F * j2)
    h6 = grid.cell_volume**2
    out = {k: float(v) * h6 for k, v in acc.items()}
    out["fisher_dissipation_total"] = out["d_par"] + out["d_rad"] + out["d_sph"] - out["slope_term"]
    return out
