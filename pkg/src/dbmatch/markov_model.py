"""Closed-form numerics for the structured Markov row model.

Rows are stationary first-order Markov chains with transition matrix
``P = gamma * I + (1 - gamma) * U`` where every row of ``U`` equals the base
distribution ``u``.  Because ``U @ U = U``, powers stay in the same family:
``P^k = gamma^k * I + (1 - gamma^k) * U``.  Everything here (entropy rates,
matching capacity) is computed from that closed form.  All entropies are in
bits and ``0 * log 0`` is taken as 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GammaOutOfRange, InvalidDelta, InvalidDistribution

MAX_ALPHABET = 255


@dataclass(frozen=True)
class MarkovParams:
    """Validated model parameters; build with :func:`validate_params`."""

    gamma: float
    u: np.ndarray

    @property
    def alphabet_size(self) -> int:
        return int(self.u.shape[0])

    @property
    def stationary(self) -> np.ndarray:
        return self.u

    @property
    def gamma_lower_bound(self) -> float:
        return gamma_lower_bound(self.u)

    def transition_matrix(self) -> np.ndarray:
        return transition_power(self, 1).entries

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MarkovParams):
            return NotImplemented
        return self.gamma == other.gamma and np.array_equal(self.u, other.u)

    def __hash__(self) -> int:
        return hash((self.gamma, self.u.tobytes()))


@dataclass(frozen=True)
class TransitionMatrix:
    order: int
    entries: np.ndarray


@dataclass(frozen=True)
class CapacityResult:
    capacity_bits: float
    terms_used: int
    tail_bound_bits: float
    closed_form_bits: float

    @property
    def agrees(self) -> bool:
        return abs(self.capacity_bits - self.closed_form_bits) <= self.tail_bound_bits + 1e-9


def _as_distribution(p) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 2:
        raise InvalidDistribution(f"need a 1-D vector of length >= 2, got shape {arr.shape}")
    if arr.shape[0] > MAX_ALPHABET:
        raise InvalidDistribution(f"alphabet size {arr.shape[0]} exceeds {MAX_ALPHABET}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise InvalidDistribution("all entries must be finite and strictly positive")
    return arr / arr.sum()


def gamma_lower_bound(u) -> float:
    """Exclusive lower end of the admissible gamma interval, ``-min u/(1-u)``."""
    u = np.asarray(u, dtype=np.float64)
    return float(-np.min(u / (1.0 - u)))


def validate_params(gamma: float, u) -> MarkovParams:
    """Check ``gamma`` and ``u`` and return normalized, immutable parameters.

    ``u`` is renormalized to sum to one.  ``gamma`` must lie in the open
    interval ``(-min_j u_j / (1 - u_j), 1)``, which keeps every entry of the
    transition matrix strictly positive.
    """
    u = _as_distribution(u)
    gamma = float(gamma)
    lo = gamma_lower_bound(u)
    if not math.isfinite(gamma) or not (lo < gamma < 1.0):
        raise GammaOutOfRange(f"gamma={gamma} outside ({lo:.12g}, 1)")
    u.setflags(write=False)
    return MarkovParams(gamma=gamma, u=u)


def transition_power(params: MarkovParams, power: int) -> TransitionMatrix:
    """``P^power`` from the closed form, without repeated multiplication."""
    if power < 1:
        raise ValueError(f"power must be >= 1, got {power}")
    g = params.gamma ** power
    k = params.alphabet_size
    entries = (1.0 - g) * np.broadcast_to(params.u, (k, k)) + g * np.eye(k)
    return TransitionMatrix(order=power, entries=entries)


def entropy_bits(p) -> float:
    p = np.asarray(p, dtype=np.float64)
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def _xlog2x(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out


def conditional_entropy_rate(params: MarkovParams, gap: int) -> float:
    """``H(X_0 | X_{-gap-1})`` in bits: the entropy rate of ``P^(gap+1)`` under ``u``."""
    if gap < 0:
        raise ValueError(f"gap must be >= 0, got {gap}")
    P = transition_power(params, gap + 1).entries
    return float(-(params.u * _xlog2x(P).sum(axis=1)).sum())


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if not (0.0 <= delta <= 1.0):
        raise InvalidDelta(f"delta must lie in [0, 1], got {delta}")
    return delta


def closed_form_capacity(params: MarkovParams, delta: float) -> float:
    """Evaluated form of the capacity, summed independently of the series.

    With ``g_r = gamma^(r+1)`` and ``S2 = sum_i u_i^2``::

        C = (1-delta)(1-gamma)/(1-gamma*delta) * [H(u) + sum_i u_i^2 log u_i]
            - (1-delta)^2 sum_r delta^r [ sum_i u_i d_ir log d_ir
                                          + (1-S2)(1-g_r) log(1-g_r) ]

    where ``d_ir = g_r + (1-g_r) u_i`` is the diagonal of ``P^(r+1)``.  The
    second bracket term collects the off-diagonal entries of ``P^(r+1)``.
    The bracket tends to ``c = sum_i u_i^2 log u_i``; the constant part is
    summed exactly and only the decaying difference is accumulated.
    """
    delta = _check_delta(delta)
    if delta == 1.0:
        return 0.0
    u, gamma = params.u, params.gamma
    s2 = float((u ** 2).sum())
    c = float((u ** 2 * np.log2(u)).sum())
    lead = (1 - delta) * (1 - gamma) / (1 - gamma * delta) * (entropy_bits(u) + c)

    scale = 2.0 * math.log2(params.alphabet_size) + 4.0
    diff = 0.0
    start, chunk = 0, 256
    while start < 10_000_000:
        r = np.arange(start, start + chunk, dtype=np.float64)
        g = gamma ** (r + 1)
        weight = delta ** r
        d = g[:, None] + (1 - g[:, None]) * u[None, :]
        term = (u[None, :] * _xlog2x(d)).sum(axis=1) + (1 - s2) * _xlog2x(1 - g)
        diff += math.fsum((weight * (term - c)).tolist())
        ag = abs(g[-1])
        # |term - c| <= |g| (scale - log2|g|): bound on everything after this chunk
        if ag == 0.0 or weight[-1] * ag * (scale - math.log2(ag)) < 1e-18 or weight[-1] == 0.0:
            break
        start += chunk
        chunk = min(chunk * 2, 1 << 16)
    return lead - (1 - delta) * c - (1 - delta) ** 2 * diff


def _mixing_tail(gamma: float, power: int, log_k: float) -> float:
    """Bound on ``H(u) - H(X_0 | X_{-power})``, valid while ``|gamma|^power <= 1/2``."""
    g = abs(gamma) ** power
    if g >= 0.5:
        return math.inf
    return g * log_k + entropy_bits([g, 1 - g])


def matching_capacity(params: MarkovParams, delta: float, tolerance: float = 1e-12) -> CapacityResult:
    """Matching capacity in bits per column for deletion probability ``delta``.

    The series ``(1-delta)^2 sum_r delta^r H(X_0 | X_{-r-1})`` is summed for
    ``r < R`` and stops at the first ``R`` where either certified bound on the
    rest is within ``tolerance``:

    * geometric: the rest is at most ``(1-delta) delta^R log2|X|`` and is dropped;
    * mixing: every later term is within ``|g| log2|X| + h(|g|)`` of ``H(u)``
      (``g = gamma^(R+1)``), so the rest is replaced by its limit
      ``(1-delta) delta^R H(u)``.

    The result carries the independently summed closed form for cross-checking.
    """
    delta = _check_delta(delta)
    if not tolerance > 0:
        raise ValueError(f"tolerance must be > 0, got {tolerance}")
    log_k = math.log2(params.alphabet_size)
    if delta == 1.0:
        return CapacityResult(0.0, 0, 0.0, 0.0)
    if delta == 0.0:
        h0 = conditional_entropy_rate(params, 0)
        return CapacityResult(h0, 1, 0.0, closed_form_capacity(params, 0.0))

    h_u = entropy_bits(params.u)
    total = 0.0
    weight = 1.0
    r = 0
    limit = 0.0
    while True:
        total += weight * conditional_entropy_rate(params, r)
        weight *= delta
        r += 1
        tail = (1 - delta) * weight * log_k
        if tail <= tolerance:
            break
        mixed = (1 - delta) * weight * _mixing_tail(params.gamma, r + 1, log_k)
        if mixed <= tolerance:
            tail = mixed
            limit = (1 - delta) * weight * h_u
            break
    capacity = (1 - delta) ** 2 * total + limit
    return CapacityResult(
        capacity_bits=capacity,
        terms_used=r,
        tail_bound_bits=tail,
        closed_form_bits=closed_form_capacity(params, delta),
    )


def iid_capacity(p_x, delta: float) -> float:
    """``(1 - delta) * H(p_x)``: the capacity when columns are independent."""
    delta = _check_delta(delta)
    p = _as_distribution(p_x)
    return (1 - delta) * entropy_bits(p)


def output_entropy_rate(params: MarkovParams, delta: float) -> float:
    """Entropy rate of the erased row process: ``h(delta) + C``."""
    return entropy_bits([delta, 1 - delta]) + matching_capacity(params, delta).capacity_bits


def joint_entropy_rate(params: MarkovParams, delta: float) -> float:
    """Joint entropy rate of (row, erased row): ``H(X0|X-1) + h(delta)``."""
    return conditional_entropy_rate(params, 0) + entropy_bits([delta, 1 - delta])
