"""Operator moments of the C3MSV computed from its Fock amplitudes, and the
variance / shot-noise / decibel bookkeeping built on them.

Quadratures follow X = (a + a^dag)/2, P = (a - a^dag)/(2i), so the vacuum
variance of each is 1/4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import ConsistencyError, TruncatedFockState

# structurally zero moments must come out below this, or the index
# bookkeeping is wrong
STRUCTURAL_ZERO_ATOL = 1e-10

MODES = ("a", "b", "c")


@dataclass(frozen=True)
class IntensityMoments:
    mean_a: float
    mean_b: float
    mean_c: float
    var_a: float
    var_b: float
    var_c: float
    cov_ab: float
    cov_bc: float
    cov_ac: float

    @property
    def means(self) -> np.ndarray:
        return np.array([self.mean_a, self.mean_b, self.mean_c])

    @property
    def covariance(self) -> np.ndarray:
        """3x3 covariance matrix of (n_a, n_b, n_c)."""
        return np.array([
            [self.var_a, self.cov_ab, self.cov_ac],
            [self.cov_ab, self.var_b, self.cov_bc],
            [self.cov_ac, self.cov_bc, self.var_c],
        ])


@dataclass(frozen=True)
class MomentTable:
    """First and second moments of the mode operators.

    ``first`` holds <a>, <b>, <c>.  Together with the fields below it fixes
    the variance of any form linear in X_j, P_j.
    """

    n_a: float
    n_b: float
    n_c: float
    m_ab: complex  # <a b>
    m_bc: complex  # <b c>
    m_ac: complex  # <a c>
    x_ac: complex  # <a^dag c>
    sq_a: complex  # <a^2>
    sq_b: complex
    sq_c: complex
    cross_ab: complex  # <a^dag b>
    cross_bc: complex  # <b^dag c>
    first: tuple[complex, complex, complex] = (0j, 0j, 0j)

    def normal_matrix(self) -> np.ndarray:
        """N[j, k] = <a_j^dag a_k>."""
        n = np.array([
            [self.n_a, self.cross_ab, self.x_ac],
            [0, self.n_b, self.cross_bc],
            [0, 0, self.n_c],
        ], dtype=complex)
        lower = np.tril_indices(3, -1)
        n[lower] = n.T.conj()[lower]
        return n

    def anomalous_matrix(self) -> np.ndarray:
        """M[j, k] = <a_j a_k>."""
        return np.array([
            [self.sq_a, self.m_ab, self.m_ac],
            [self.m_ab, self.sq_b, self.m_bc],
            [self.m_ac, self.m_bc, self.sq_c],
        ], dtype=complex)


@dataclass(frozen=True)
class QuadratureForm:
    """W = sum_j u_j X_j + v_j P_j over modes a, b, c."""

    u_a: float = 0.0
    u_b: float = 0.0
    u_c: float = 0.0
    v_a: float = 0.0
    v_b: float = 0.0
    v_c: float = 0.0

    def __post_init__(self):
        for name, value in zip(("u_a", "u_b", "u_c", "v_a", "v_b", "v_c"), self.weights):
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")

    @classmethod
    def x(cls, h1: float, h2: float, h3: float) -> "QuadratureForm":
        return cls(u_a=h1, u_b=h2, u_c=h3)

    @classmethod
    def p(cls, h1: float, h2: float, h3: float) -> "QuadratureForm":
        return cls(v_a=h1, v_b=h2, v_c=h3)

    @property
    def weights(self) -> tuple[float, ...]:
        return (self.u_a, self.u_b, self.u_c, self.v_a, self.v_b, self.v_c)

    @property
    def interleaved(self) -> np.ndarray:
        """Weights ordered as (X_a, P_a, X_b, P_b, X_c, P_c)."""
        return np.array([self.u_a, self.v_a, self.u_b, self.v_b, self.u_c, self.v_c])

    def mode_weights(self) -> np.ndarray:
        """w with W = sum_j w_j a_j + conj(w_j) a_j^dag."""
        u = np.array([self.u_a, self.u_b, self.u_c])
        v = np.array([self.v_a, self.v_b, self.v_c])
        return (u - 1j * v) / 2


@dataclass(frozen=True)
class SqueezingReport:
    variance: float
    snl: float
    db: float  # -inf when the variance is exactly zero

    @property
    def squeezed(self) -> bool:
        return self.db < 0.0


def intensity_moments(state: TruncatedFockState) -> IntensityMoments:
    """Photon-number means, variances and covariances.

    The probabilities are renormalized by the captured mass so the truncation
    does not bias the result.
    """
    prob = state.probabilities / state.captured_mass
    counts = (
        state.n_index.astype(float),
        state.m_index.astype(float),
        state.l_index.astype(float),
    )
    means = [float(np.dot(prob, c)) for c in counts]
    # centered products: raw E[xy] - E[x]E[y] cancels badly for weak modes
    dev = [c - mu for c, mu in zip(counts, means)]

    def cov(i, j):
        return float(np.dot(prob, dev[i] * dev[j]))

    return IntensityMoments(
        mean_a=means[0], mean_b=means[1], mean_c=means[2],
        var_a=cov(0, 0), var_b=cov(1, 1), var_c=cov(2, 2),
        cov_ab=cov(0, 1), cov_bc=cov(1, 2), cov_ac=cov(0, 2),
    )


def _shift_overlap(state: TruncatedFockState, shift: tuple[int, int, int], coeff) -> complex:
    """<psi| O |psi> for an operator O that maps |n, m, l> to
    coeff(n, m, l) |n + da, m + db, l + dc>.

    Target kets off the |n', n'+l', l'> support, or beyond the cutoff,
    contribute nothing; a structurally zero moment is therefore an honest
    (empty) sum rather than a hard-coded zero.
    """
    da, db, dc = shift
    # m' - n' - l' = db - da - dc for every source ket
    if db != da + dc:
        return 0j
    n, m, l = state.n_index, state.m_index, state.l_index
    keep = (n + da >= 0) & (l + dc >= 0) & (m + db <= state.max_pairs)
    n, m, l = n[keep], m[keep], l[keep]
    target = state.offsets[m + db] + n + da
    amps = state.amplitudes
    c = coeff(n.astype(float), m.astype(float), l.astype(float))
    total = np.dot(np.conj(amps[target]), c * amps[keep])
    return complex(total) / state.captured_mass


def second_moment_table(state: TruncatedFockState) -> MomentTable:
    """All first and second moments, each as an index-shifted overlap sum.

    Raises ConsistencyError if a moment that the |n, n+l, l> support forces
    to vanish exceeds 1e-10.
    """
    ov = lambda shift, coeff: _shift_overlap(state, shift, coeff)
    mean = lambda idx: float(np.dot(state.probabilities, idx)) / state.captured_mass

    table = MomentTable(
        n_a=mean(state.n_index),
        n_b=mean(state.m_index),
        n_c=mean(state.l_index),
        m_ab=ov((-1, -1, 0), lambda n, m, l: np.sqrt(n * m)),
        m_bc=ov((0, -1, -1), lambda n, m, l: np.sqrt(l * m)),
        m_ac=ov((-1, 0, -1), lambda n, m, l: np.sqrt(n * l)),
        x_ac=ov((1, 0, -1), lambda n, m, l: np.sqrt((n + 1) * l)),
        sq_a=ov((-2, 0, 0), lambda n, m, l: np.sqrt(n * (n - 1).clip(0))),
        sq_b=ov((0, -2, 0), lambda n, m, l: np.sqrt(m * (m - 1).clip(0))),
        sq_c=ov((0, 0, -2), lambda n, m, l: np.sqrt(l * (l - 1).clip(0))),
        cross_ab=ov((1, -1, 0), lambda n, m, l: np.sqrt((n + 1) * m)),
        cross_bc=ov((0, 1, -1), lambda n, m, l: np.sqrt((m + 1) * l)),
        first=(
            ov((-1, 0, 0), lambda n, m, l: np.sqrt(n)),
            ov((0, -1, 0), lambda n, m, l: np.sqrt(m)),
            ov((0, 0, -1), lambda n, m, l: np.sqrt(l)),
        ),
    )
    zeros = {
        "m_ac": table.m_ac, "sq_a": table.sq_a, "sq_b": table.sq_b, "sq_c": table.sq_c,
        "cross_ab": table.cross_ab, "cross_bc": table.cross_bc,
        "<a>": table.first[0], "<b>": table.first[1], "<c>": table.first[2],
    }
    for name, value in zeros.items():
        if abs(value) > STRUCTURAL_ZERO_ATOL:
            raise ConsistencyError(f"{name} should vanish on the C3MSV, got {value}")
    return table


def number_combo_variance(im: IntensityMoments, c_a: float, c_b: float, c_c: float) -> float:
    """Var(c_a n_a + c_b n_b + c_c n_c).

    Results within rounding of zero are reported as exactly 0.0 (the
    eigenstate combination n_b - n_a - n_c in particular).
    """
    c = np.array([c_a, c_b, c_c], dtype=float)
    return roundoff_floor(float(c @ im.covariance @ c), float(np.abs(c) @ np.abs(im.covariance) @ np.abs(c)))


def roundoff_floor(value: float, scale: float) -> float:
    """Zero out a variance that is indistinguishable from zero given the
    magnitude ``scale`` of the terms that were summed to produce it."""
    if value <= 64 * np.finfo(float).eps * scale:
        return 0.0
    return value


def number_combo_snl(im: IntensityMoments, c_a: float, c_b: float, c_c: float) -> float:
    """Shot-noise limit: independent coherent modes with matched means, so
    each mode contributes c_j^2 <n_j>."""
    return float(c_a ** 2 * im.mean_a + c_b ** 2 * im.mean_b + c_c ** 2 * im.mean_c)


def quad_variance(table: MomentTable, form: QuadratureForm) -> float:
    """<W^2> - <W>^2 assembled from the moment table.

    With W = sum_j w_j a_j + conj(w_j) a_j^dag:
    <W^2> = 2 Re(w^T M w) + 2 w^H N w + |w|^2.
    """
    w = form.mode_weights()
    n = table.normal_matrix()
    m = table.anomalous_matrix()
    second = 2 * (w @ m @ w).real + 2 * (w.conj() @ n @ w).real + float(np.vdot(w, w).real)
    mean = 2 * (w @ np.array(table.first)).real
    return float(second - mean ** 2)


def quad_snl(form: QuadratureForm) -> float:
    return 0.25 * sum(x * x for x in form.weights)


def squeezing_db(variance: float, snl: float) -> SqueezingReport:
    if not snl > 0.0:
        raise ValueError(f"shot-noise limit must be > 0 (degenerate observable), got {snl}")
    if variance < 0.0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    db = -math.inf if variance == 0.0 else 10.0 * math.log10(variance / snl)
    return SqueezingReport(variance=float(variance), snl=float(snl), db=db)
