"""Gaussian (covariance-matrix) engine for the C3MSV.

The squeezing operator is quadratic in the mode operators, so it acts on
(a, b, c, a^dag, b^dag, c^dag) as a linear map.  With K the exponent of the
squeezing operator and [K, v_i] = sum_j G_ij v_j, the Heisenberg picture
output is exp(-G) v.  The state is the image of vacuum, hence zero-mean
Gaussian, and every observable follows from the blocks alpha, beta of
exp(-G).

Nothing here touches Fock amplitudes; agreement with :mod:`c3msv.fock` is a
genuine cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.linalg import expm

from .fock import ConsistencyError
from .moments import QuadratureForm
from .params import SqueezeParams

BOGOLIUBOV_ATOL = 1e-10

# relative rounding error tolerated before a result is recomputed with
# extended precision
_MAX_REL_ROUNDOFF = 1e-12
_EPS = np.finfo(float).eps

# symplectic form on (X_a, P_a, X_b, P_b, X_c, P_c); [R_i, R_j] = (i/2) OMEGA_ij
OMEGA = np.kron(np.eye(3), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True, eq=False)
class ModeTransform:
    """a_out = alpha @ a_in + beta @ a_in^dag (3x3 complex blocks)."""

    alpha: np.ndarray
    beta: np.ndarray

    def bogoliubov_residuals(self) -> tuple[float, float]:
        a, b = self.alpha, self.beta
        unitarity = np.max(np.abs(a @ a.conj().T - b @ b.conj().T - np.eye(3)))
        ab = a @ b.T
        symmetry = np.max(np.abs(ab - ab.T))
        return float(unitarity), float(symmetry)

    def symplectic(self) -> np.ndarray:
        """Real 6x6 S with R_out = S R_in on (X_a, P_a, X_b, P_b, X_c, P_c)."""
        plus = self.alpha + self.beta
        minus = self.alpha - self.beta
        s = np.empty((6, 6))
        s[0::2, 0::2] = plus.real
        s[0::2, 1::2] = -minus.imag
        s[1::2, 0::2] = plus.imag
        s[1::2, 1::2] = minus.real
        return s

    def normal_moments(self) -> np.ndarray:
        """N[j, k] = <a_j^dag a_k> on the output state."""
        return self.beta.conj() @ self.beta.T

    def anomalous_moments(self) -> np.ndarray:
        """M[j, k] = <a_j a_k> on the output state."""
        return self.alpha @ self.beta.T


def generator(params: SqueezeParams) -> np.ndarray:
    """G with [K, v] = G v for v = (a, b, c, a^dag, b^dag, c^dag)."""
    x1, x2 = params.xi1, params.xi2
    g = np.zeros((6, 6), dtype=complex)
    # [K, a] = xi1 b^dag, [K, b] = xi1 a^dag + xi2 c^dag, [K, c] = xi2 b^dag
    g[0, 4] = x1
    g[1, 3], g[1, 5] = x1, x2
    g[2, 4] = x2
    # [K, a^dag] = xi1* b, [K, b^dag] = xi1* a + xi2* c, [K, c^dag] = xi2* b
    g[3, 1] = x1.conjugate()
    g[4, 0], g[4, 2] = x1.conjugate(), x2.conjugate()
    g[5, 1] = x2.conjugate()
    return g


@lru_cache(maxsize=4096)
def mode_transform(params: SqueezeParams) -> ModeTransform:
    t = expm(-generator(params))
    alpha = np.ascontiguousarray(t[:3, :3])
    beta = np.ascontiguousarray(t[:3, 3:])
    for arr in (alpha, beta):
        arr.flags.writeable = False
    transform = ModeTransform(alpha, beta)
    unitarity, symmetry = transform.bogoliubov_residuals()
    scale = max(1.0, float(np.max(np.abs(alpha))) ** 2)
    if unitarity > BOGOLIUBOV_ATOL * scale or symmetry > BOGOLIUBOV_ATOL * scale:
        raise ConsistencyError(
            f"Bogoliubov conditions violated (unitarity {unitarity:.3g}, symmetry {symmetry:.3g})"
        )
    return transform


@lru_cache(maxsize=4096)
def _covariance(params: SqueezeParams) -> np.ndarray:
    s = mode_transform(params).symplectic()
    sigma = 0.25 * (s @ s.T)
    sigma = 0.5 * (sigma + sigma.T)
    sigma.flags.writeable = False
    return sigma


def covariance_matrix(params: SqueezeParams) -> np.ndarray:
    """Symmetrized quadrature covariance S (I/4) S^T; the vacuum gives I/4."""
    return _covariance(params).copy()


def _mp_transform(params: SqueezeParams, dps: int):
    with mpmath.workdps(dps):
        xi1 = mpmath.mpf(params.r1) * mpmath.expj(mpmath.mpf(params.theta1))
        xi2 = mpmath.mpf(params.r2) * mpmath.expj(mpmath.mpf(params.theta2))
        g = mpmath.zeros(6, 6)
        g[0, 4] = xi1
        g[1, 3], g[1, 5] = xi1, xi2
        g[2, 4] = xi2
        g[3, 1] = mpmath.conj(xi1)
        g[4, 0], g[4, 2] = mpmath.conj(xi1), mpmath.conj(xi2)
        g[5, 1] = mpmath.conj(xi2)
        t = mpmath.expm(-g)
        alpha = [[t[i, j] for j in range(3)] for i in range(3)]
        beta = [[t[i, j + 3] for j in range(3)] for i in range(3)]
    return alpha, beta


def _digits_needed(scale: float) -> int:
    return 30 + 2 * max(0, math.ceil(math.log10(max(scale, 1.0))))


def quad_variance_g(params: SqueezeParams, form: QuadratureForm) -> float:
    """w^T sigma w for w = (u_a, v_a, u_b, v_b, u_c, v_c)."""
    w = form.interleaved
    sigma = _covariance(params)
    value = float(w @ sigma @ w)
    scale = float(np.abs(w) @ np.abs(sigma) @ np.abs(w))
    if scale * _EPS <= _MAX_REL_ROUNDOFF * abs(value):
        return value
    return _quad_variance_mp(params, w, scale)


def _quad_variance_mp(params: SqueezeParams, w: np.ndarray, scale: float) -> float:
    dps = _digits_needed(scale)
    alpha, beta = _mp_transform(params, dps)
    with mpmath.workdps(dps):
        # W = sum_j z_j a_j^out + conj(z_j) a_j^out^dag with z = (u - i v)/2;
        # on input vacuum only the a_in^dag part of z . a_out survives
        u = [mpmath.mpf(float(x)) for x in w[0::2]]
        v = [mpmath.mpf(float(x)) for x in w[1::2]]
        z = [(u[j] - 1j * v[j]) / 2 for j in range(3)]
        # coefficient of a_in^dag_k in W (from both a_out and a_out^dag terms)
        create = [
            sum(z[j] * beta[j][k] + mpmath.conj(z[j]) * mpmath.conj(alpha[j][k]) for j in range(3))
            for k in range(3)
        ]
        value = sum(abs(c) ** 2 for c in create)
        return float(value)


def intensity_variance_g(params: SqueezeParams, c_a: float, c_b: float, c_c: float) -> float:
    """Var(sum_j c_j n_j) by Wick factorization of zero-mean Gaussian moments.

    Var(n_j) = N_jj^2 + N_jj + |M_jj|^2, Cov(n_j, n_k) = |N_jk|^2 + |M_jk|^2.
    At large squeezing the terms grow like exp(4r) while differences such as
    n_b - n_a stay moderate; when double precision cannot resolve the result
    the computation is repeated with mpmath.
    """
    c = np.array([c_a, c_b, c_c], dtype=float)
    t = mode_transform(params)
    n = t.normal_moments()
    m = t.anomalous_moments()
    pair = np.abs(n) ** 2 + np.abs(m) ** 2
    diag = np.real(np.diag(n))
    value = float(c @ pair @ c + c ** 2 @ diag)
    scale = float(np.abs(c) @ pair @ np.abs(c) + c ** 2 @ diag)
    if scale * _EPS * 64 <= _MAX_REL_ROUNDOFF * abs(value):
        return value
    return _intensity_variance_mp(params, c, scale)


def _intensity_variance_mp(params: SqueezeParams, c: np.ndarray, scale: float) -> float:
    dps = _digits_needed(scale)
    alpha, beta = _mp_transform(params, dps)
    with mpmath.workdps(dps):
        cc = [mpmath.mpf(float(x)) for x in c]
        n = [[sum(mpmath.conj(beta[j][i]) * beta[k][i] for i in range(3)) for k in range(3)] for j in range(3)]
        m = [[sum(alpha[j][i] * beta[k][i] for i in range(3)) for k in range(3)] for j in range(3)]
        value = mpmath.mpf(0)
        for j in range(3):
            value += cc[j] ** 2 * mpmath.re(n[j][j])
            for k in range(3):
                value += cc[j] * cc[k] * (abs(n[j][k]) ** 2 + abs(m[j][k]) ** 2)
        if abs(value) <= scale * mpmath.mpf(10) ** (-(dps - 10)):
            return 0.0
        return float(value)


def mean_photon_numbers(params: SqueezeParams) -> np.ndarray:
    return np.real(np.diag(mode_transform(params).normal_moments())).copy()


def is_physical(sigma: np.ndarray, atol: float = 1e-10) -> bool:
    """sigma + (i/4) Omega must be positive semidefinite."""
    eig = np.linalg.eigvalsh(sigma + 0.25j * OMEGA)
    return bool(eig.min() >= -atol * max(1.0, float(np.abs(sigma).max())))
