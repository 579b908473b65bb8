"""Truncated Fock-basis representation of the coupled three-mode squeezed vacuum.

The state is supported on kets |n, n+l, l>, so it is stored as a packed
triangle of amplitudes indexed by the pair number m = n + l and by n.
Row m holds A(0, m), A(1, m-1), ..., A(m, 0) at offsets m(m+1)/2 + n.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import betaln

from .params import SqueezeParams

DEFAULT_TOL = 1e-12
DEFAULT_MAX_PAIRS = 5000
MAX_PAIRS_ENV = "C3MSV_MAX_PAIRS"

# recurrence vs log-gamma spot check
_SPOT_CHECKS = 128
_SPOT_RTOL = 1e-11
_SPOT_FLOOR = 1e-250


class CutoffExceeded(RuntimeError):
    """The Fock truncation needed for the requested tolerance is too large."""

    def __init__(self, needed, max_pairs: int):
        super().__init__(
            f"Fock truncation needs {needed} pairs (limit {max_pairs}); "
            "use the gaussian engine for this squeezing strength"
        )
        self.needed = needed
        self.max_pairs = max_pairs


class ConsistencyError(RuntimeError):
    """An internal numerical self-check failed."""


def default_max_pairs() -> int:
    value = os.environ.get(MAX_PAIRS_ENV)
    if value is None or value == "":
        return DEFAULT_MAX_PAIRS
    try:
        result = int(value)
    except ValueError:
        raise ValueError(f"{MAX_PAIRS_ENV} must be an integer, got {value!r}") from None
    if result < 0:
        raise ValueError(f"{MAX_PAIRS_ENV} must be >= 0, got {result}")
    return result


def _ratios(params: SqueezeParams) -> tuple[float, float]:
    """(r1/r) tanh r and (r2/r) tanh r; zero for the vacuum."""
    if params.r == 0.0:
        return 0.0, 0.0
    t = math.tanh(params.r)
    return params.r1 / params.r * t, params.r2 / params.r * t


def amplitude(params: SqueezeParams, n: int, l: int) -> complex:
    """Closed-form amplitude of |n, n+l, l>, evaluated in log space (log-gamma/beta)."""
    if n < 0 or l < 0:
        raise ValueError(f"Fock indices must be >= 0, got n={n}, l={l}")
    if params.r == 0.0:
        return 1.0 + 0.0j if n == 0 and l == 0 else 0.0j
    x1, x2 = _ratios(params)
    if (n > 0 and x1 == 0.0) or (l > 0 and x2 == 0.0):
        return 0.0j
    log_mag = -math.log(math.cosh(params.r))
    if n > 0:
        log_mag += n * math.log(x1)
    if l > 0:
        log_mag += l * math.log(x2)
    # log C(n+l, n) through betaln avoids cancelling three large lgamma terms
    log_mag += 0.5 * (-math.log(n + l + 1) - float(betaln(n + 1, l + 1)))
    phase = math.pi * ((n + l) % 2) + math.fmod(n * params.theta1 + l * params.theta2, 2 * math.pi)
    return math.exp(log_mag) * complex(math.cos(phase), math.sin(phase))


def _tail_moment(x: float, k: int, start: int) -> float:
    """sum_{m >= start} m^k (1 - x) x^m for k in {0, 1, 2}."""
    head = x ** start
    if k == 0:
        return head
    s0 = 1.0
    s1 = x / (1.0 - x)
    if k == 1:
        return head * (start * s0 + s1)
    s2 = x * (1.0 + x) / (1.0 - x) ** 2
    return head * (start * start * s0 + 2 * start * s1 + s2)


def pair_cutoff(params: SqueezeParams, tol: float = DEFAULT_TOL, moment_order: int = 0) -> int:
    """Smallest M whose discarded tail satisfies
    sum_{m > M} m^k P(m) <= tol * E[m^k], with k = ``moment_order``.

    P(m) = (1 - tanh^2 r) tanh^(2m) r, so for k = 0 this is
    tanh(r)^(2(M+1)) <= tol.  k = 2 bounds the truncation error of every
    second moment of the mode operators.  Raises CutoffExceeded when tanh(r)
    rounds to 1.
    """
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    if moment_order not in (0, 1, 2):
        raise ValueError(f"moment_order must be 0, 1 or 2, got {moment_order}")
    if params.r == 0.0:
        return 0
    t2 = math.tanh(params.r) ** 2
    if t2 == 0.0:
        return 0
    if t2 >= 1.0:
        raise CutoffExceeded(math.inf, default_max_pairs())
    m = max(0, math.ceil(math.log(tol) / math.log(t2)) - 1)
    if moment_order == 0:
        while t2 ** (m + 1) > tol:
            m += 1
        while m > 0 and t2 ** m <= tol:
            m -= 1
        return m
    budget = tol * _tail_moment(t2, moment_order, 0)
    while _tail_moment(t2, moment_order, m + 1) > budget:
        m += 1
    while m > 0 and _tail_moment(t2, moment_order, m) <= budget:
        m -= 1
    return m


def _offsets(max_pairs: int) -> np.ndarray:
    m = np.arange(max_pairs + 2, dtype=np.int64)
    return m * (m + 1) // 2


@dataclass(frozen=True, eq=False)
class TruncatedFockState:
    params: SqueezeParams
    max_pairs: int
    amplitudes: np.ndarray  # packed triangle, see module docstring
    tail_bound: float

    @cached_property
    def offsets(self) -> np.ndarray:
        return _offsets(self.max_pairs)

    @cached_property
    def m_index(self) -> np.ndarray:
        m = np.arange(self.max_pairs + 1, dtype=np.int64)
        return np.repeat(m, m + 1)

    @cached_property
    def n_index(self) -> np.ndarray:
        return np.arange(self.amplitudes.size, dtype=np.int64) - self.offsets[self.m_index]

    @cached_property
    def l_index(self) -> np.ndarray:
        return self.m_index - self.n_index

    @cached_property
    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        p.flags.writeable = False
        return p

    @cached_property
    def captured_mass(self) -> float:
        return float(np.sum(self.probabilities))

    def __getitem__(self, nl: tuple[int, int]) -> complex:
        n, l = nl
        if n < 0 or l < 0:
            raise IndexError(f"negative Fock index ({n}, {l})")
        m = n + l
        if m > self.max_pairs:
            return 0.0j
        return complex(self.amplitudes[self.offsets[m] + n])

    def index_of(self, n: np.ndarray, l: np.ndarray) -> np.ndarray:
        """Packed positions of (n, l); -1 where the pair lies outside the triangle."""
        n = np.asarray(n, dtype=np.int64)
        l = np.asarray(l, dtype=np.int64)
        m = n + l
        ok = (n >= 0) & (l >= 0) & (m <= self.max_pairs)
        pos = np.full(n.shape, -1, dtype=np.int64)
        pos[ok] = self.offsets[m[ok]] + n[ok]
        return pos


def _recurrence(params: SqueezeParams, max_pairs: int) -> np.ndarray:
    # Row m is filled outward from its binomial peak k = floor((m+1) p):
    # the peak comes from row m-1 via the n- (or l-) step, the rest by the
    # ratio A(n+1, l-1)/A(n, l).  Magnitudes only shrink away from the
    # peak, so underflow never cuts off a non-negligible entry.
    # 1/cosh r and the branching weights are derived from the same rounded
    # tanh r and r1/r, r2/r used in the steps: rounding then perturbs r
    # rather than the norm, which would otherwise drift by ~M * eps.
    t = math.tanh(params.r)
    s1, s2 = params.r1 / params.r, params.r2 / params.r
    p, q = s1 * s1, s2 * s2
    e1 = complex(math.cos(params.theta1), math.sin(params.theta1))
    e2 = complex(math.cos(params.theta2), math.sin(params.theta2))
    step1 = -e1 * s1 * t  # A(n+1, l) = A(n, l) * step1 * sqrt((n+l+1)/(n+1))
    step2 = -e2 * s2 * t  # A(n, l+1) = A(n, l) * step2 * sqrt((n+l+1)/(l+1))
    up = e1 / e2 * (s1 / s2) if s2 > 0.0 else 0.0
    down = e2 / e1 * (s2 / s1) if s1 > 0.0 else 0.0

    amps = np.zeros(int(_offsets(max_pairs)[max_pairs + 1]), dtype=np.complex128)
    amps[0] = math.sqrt((1.0 - t) * (1.0 + t) / (p + q))
    prev_start = 0
    for m in range(1, max_pairs + 1):
        start = m * (m + 1) // 2
        k = min(m, int(math.floor((m + 1) * p)))
        if k >= 1:
            # from A(k-1, m-k), which sits within one place of row m-1's peak
            peak = amps[prev_start + k - 1] * step1 * math.sqrt(m / k)
        else:
            peak = amps[prev_start] * step2
        amps[start + k] = peak
        if k < m:
            n = np.arange(k, m)  # A(n+1, m-n-1) from A(n, m-n)
            amps[start + k + 1:start + m + 1] = peak * np.cumprod(up * np.sqrt((m - n) / (n + 1)))
        if k > 0:
            n = np.arange(k - 1, -1, -1)  # A(n, m-n) from A(n+1, m-n-1)
            amps[start:start + k] = (peak * np.cumprod(down * np.sqrt((n + 1) / (m - n))))[::-1]
        prev_start = start
    return amps


def _spot_check(state: TruncatedFockState, rng: np.random.Generator) -> None:
    size = state.amplitudes.size
    picks = rng.integers(0, size, size=min(_SPOT_CHECKS, size))
    for pos in np.unique(np.concatenate([[0, size - 1], picks])):
        n, l = int(state.n_index[pos]), int(state.l_index[pos])
        expected = amplitude(state.params, n, l)
        got = complex(state.amplitudes[pos])
        if abs(expected) < _SPOT_FLOOR:
            if abs(got) > 10 * _SPOT_FLOOR:
                raise ConsistencyError(f"A({n},{l}) = {got}, closed form gives {expected}")
            continue
        if abs(got - expected) > _SPOT_RTOL * abs(expected):
            raise ConsistencyError(
                f"recurrence A({n},{l}) = {got} disagrees with closed form {expected}"
            )


def build_state(
    params: SqueezeParams,
    tol: float = DEFAULT_TOL,
    max_pairs: int | None = None,
    moment_order: int = 0,
) -> TruncatedFockState:
    """Amplitudes up to the pair cutoff for ``tol``, filled by recurrence.

    A seeded sample of entries is compared against :func:`amplitude`.
    ``moment_order`` selects the truncation rule of :func:`pair_cutoff`;
    ``tail_bound`` is always the discarded probability mass.
    Raises CutoffExceeded if the cutoff exceeds ``max_pairs`` (default 5000,
    or the ``C3MSV_MAX_PAIRS`` environment variable).
    """
    if max_pairs is None:
        max_pairs = default_max_pairs()
    try:
        cutoff = pair_cutoff(params, tol, moment_order)
    except CutoffExceeded:
        raise CutoffExceeded(math.inf, max_pairs) from None
    if cutoff > max_pairs:
        raise CutoffExceeded(cutoff, max_pairs)
    if params.r == 0.0:
        amps = np.ones(1, dtype=np.complex128)
        tail = 0.0
    else:
        amps = _recurrence(params, cutoff)
        tail = (math.tanh(params.r) ** 2) ** (cutoff + 1)
    amps.flags.writeable = False
    state = TruncatedFockState(params, cutoff, amps, tail)
    _spot_check(state, np.random.default_rng(cutoff))
    return state


def pair_distribution(state: TruncatedFockState) -> np.ndarray:
    """P(m) = sum over n + l = m of |A(n, l)|^2 for m = 0..M."""
    return np.add.reduceat(state.probabilities, state.offsets[: state.max_pairs + 1])


def amplitude_rows(state: TruncatedFockState):
    """Yield (n, l, m, amplitude, probability) in (m asc, n asc) order."""
    for pos in range(state.amplitudes.size):
        yield (
            int(state.n_index[pos]),
            int(state.l_index[pos]),
            int(state.m_index[pos]),
            complex(state.amplitudes[pos]),
            float(state.probabilities[pos]),
        )
