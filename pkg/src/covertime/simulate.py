"""Monte Carlo samplers for the cover time and for the switchback count.

Sample ``i`` of a batch always uses stream ``i`` of the counter-based
generator, so a batch is reproducible from ``(base_seed, parameters)``
alone and does not depend on how work is split across workers.

Counter layout of a cover-time stream: step ``k`` (0-based) reads counter
``3k`` for its Gaussian increment and ``3k+1`` / ``3k+2`` for the upper and
lower bridge draws.  The path is therefore the same with or without bridge
correction.  A switchback stream reads counter ``r`` in round ``r``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import rng
from .analytic import DomainError, RangeState

__all__ = [
    "SimPlan",
    "CoverTimeSample",
    "SwitchbackChain",
    "SimulationError",
    "sample_cover_time",
    "sample_cover_times",
    "sample_switchbacks",
    "sample_switchback_counts",
    "sample_exit",
    "estimate_transform",
]

_BLOCK = 1024
_CHUNK = 1024
_U64 = np.uint64


class SimulationError(RuntimeError):
    """Internal failure of a sampler (never expected with a correct RNG)."""


@dataclass(frozen=True)
class SimPlan:
    """Everything that determines a Monte Carlo run.

    ``dt`` is only used by the path samplers.  ``n_streams`` is the number
    of worker threads; it never changes the output.
    """

    n_samples: int = 10_000
    dt: float = 1e-4
    bridge_correction: bool = True
    base_seed: int = 0
    n_streams: int = 1

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise DomainError(f"n_samples must be an integer >= 1, got {self.n_samples!r}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise DomainError(f"dt must be finite and > 0, got {self.dt!r}")
        if int(self.n_streams) != self.n_streams or self.n_streams < 1:
            raise DomainError(f"n_streams must be an integer >= 1, got {self.n_streams!r}")
        object.__setattr__(self, "n_samples", int(self.n_samples))
        object.__setattr__(self, "n_streams", int(self.n_streams))
        object.__setattr__(self, "base_seed", int(self.base_seed) & rng.MASK64)


@dataclass(frozen=True)
class CoverTimeSample:
    """One simulated cover time.

    ``extremes`` is (min, max) of the range at the moment it reaches
    length ``L``; ``n_steps`` counts the time steps taken, including the
    step in which the crossing happened.
    """

    theta: float
    n_steps: int
    extremes: tuple[float, float]


@dataclass(frozen=True)
class SwitchbackChain:
    initial_a: float
    L: float
    a_trajectory: tuple[float, ...]

    @property
    def nu(self) -> int:
        return len(self.a_trajectory) - 1


# ---------------------------------------------------------------------------
# path engine


def _path_block(keys, x, start, dt, bridge):
    """Endpoints and within-step extremes for steps ``start .. start+_BLOCK-1``."""
    k = keys[:, None]
    ctr = (np.arange(start, start + _BLOCK, dtype=_U64) * _U64(3))[None, :]
    dx = math.sqrt(dt) * rng.normals(k, ctr)
    if not np.isfinite(dx).all():
        raise SimulationError("non-finite Gaussian increment")
    xs = x[:, None] + np.cumsum(dx, axis=1)
    x0 = np.concatenate([x[:, None], xs[:, :-1]], axis=1)
    if not bridge:
        return x0, xs, xs, xs
    # exact draws of the Brownian-bridge max/min over each step, so
    # P(top >= b) = exp(-2 (b - x0)(b - x1) / dt) for any b >= max(x0, x1)
    d2 = (xs - x0) ** 2
    s = x0 + xs
    top = 0.5 * (s + np.sqrt(d2 - 2.0 * dt * np.log(rng.uniforms(k, ctr + _U64(1)))))
    bot = 0.5 * (s - np.sqrt(d2 - 2.0 * dt * np.log(rng.uniforms(k, ctr + _U64(2)))))
    return x0, xs, top, bot


def _max_steps(scale2: float, dt: float) -> int:
    return int(2000.0 * scale2 / dt) + 10 * _BLOCK


def _cover_engine(keys: np.ndarray, L: float, dt: float, bridge: bool):
    n = keys.size
    theta = np.empty(n)
    n_steps = np.empty(n, dtype=np.int64)
    lo = np.empty(n)
    hi = np.empty(n)
    x = np.zeros(n)
    m = np.zeros(n)
    M = np.zeros(n)
    active = np.arange(n)
    start = 0
    limit = _max_steps(L * L, dt)
    while active.size:
        if start > limit:
            raise SimulationError(f"range did not reach L={L} within {limit} steps")
        x0, xs, top, bot = _path_block(keys[active], x[active], start, dt, bridge)
        M_run = np.maximum.accumulate(np.concatenate([M[active, None], top], axis=1), axis=1)
        m_run = np.minimum.accumulate(np.concatenate([m[active, None], bot], axis=1), axis=1)
        M_prev = M_run[:, :-1]
        m_prev = m_run[:, :-1]

        up_disc = xs - m_prev >= L
        dn_disc = M_prev - xs >= L
        hit = up_disc | dn_disc
        if bridge:
            up_br = top - m_prev >= L
            dn_br = M_prev - bot >= L
            hit |= up_br | dn_br
        done = hit.any(axis=1)

        r = np.nonzero(done)[0]
        j = hit[r].argmax(axis=1)
        idx = active[r]
        a0, a1 = x0[r, j], xs[r, j]
        mp_, Mp = m_prev[r, j], M_prev[r, j]
        ud, dd = up_disc[r, j], dn_disc[r, j]
        # precedence: discrete crossing, then upper bridge, then lower bridge
        upper = ud | (~dd & (up_br[r, j] if bridge else False))
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(ud, (mp_ + L - a0) / (a1 - a0),
                            np.where(dd, (a0 - (Mp - L)) / (a0 - a1), 0.5))
        steps = start + j
        theta[idx] = (steps + frac) * dt
        n_steps[idx] = steps + 1
        lo[idx] = np.where(upper, mp_, Mp - L)
        hi[idx] = np.where(upper, mp_ + L, Mp)

        keep = ~done
        cont = active[keep]
        x[cont] = xs[keep, -1]
        M[cont] = M_run[keep, -1]
        m[cont] = m_run[keep, -1]
        active = cont
        start += _BLOCK
    return theta, n_steps, lo, hi


def _check_dt(dt: float, L: float) -> None:
    if dt >= L * L / 4.0:
        raise DomainError(f"dt={dt} is too coarse for L={L}; need dt < L^2/4")


def sample_cover_time(plan: SimPlan, L: float, stream_index: int) -> CoverTimeSample:
    """Simulate one cover time of a circle of circumference ``L``.

    Tracks the running range of a Gaussian random walk with step ``dt`` and
    stops at the first step in which the range reaches ``L``.  With bridge
    correction on, each step also draws the exact within-step maximum and
    minimum of the Brownian bridge between its endpoints, tested against the
    current opposite extreme plus (or minus) ``L``, upper side first.
    A crossing seen at the step endpoint is placed by linear interpolation;
    one seen only through the bridge is placed at the step midpoint.
    """
    L = RangeState(L, L).L
    _check_dt(plan.dt, L)
    keys = np.atleast_1d(rng.stream_keys(plan.base_seed, int(stream_index)))
    theta, n_steps, lo, hi = _cover_engine(keys, L, plan.dt, plan.bridge_correction)
    return CoverTimeSample(float(theta[0]), int(n_steps[0]), (float(lo[0]), float(hi[0])))


def _batched(plan: SimPlan, fn) -> np.ndarray:
    starts = range(0, plan.n_samples, _CHUNK)

    def run(i0):
        idx = np.arange(i0, min(i0 + _CHUNK, plan.n_samples), dtype=_U64)
        return fn(rng.stream_keys(plan.base_seed, idx))

    if plan.n_streams == 1:
        parts = [run(i0) for i0 in starts]
    else:
        with ThreadPoolExecutor(max_workers=plan.n_streams) as pool:
            parts = list(pool.map(run, starts))
    return np.concatenate(parts)


def sample_cover_times(plan: SimPlan, L: float) -> np.ndarray:
    """``plan.n_samples`` cover times; entry ``i`` equals ``sample_cover_time(plan, L, i).theta``."""
    L = RangeState(L, L).L
    _check_dt(plan.dt, L)
    return _batched(plan, lambda keys: _cover_engine(keys, L, plan.dt, plan.bridge_correction)[0])


def _exit_engine(keys: np.ndarray, a: float, y: float, dt: float, bridge: bool):
    n = keys.size
    tau = np.empty(n)
    upper_first = np.empty(n, dtype=bool)
    x = np.zeros(n)
    active = np.arange(n)
    start = 0
    limit = _max_steps((a + y) ** 2, dt)
    while active.size:
        if start > limit:
            raise SimulationError("path did not leave the strip")
        x0, xs, top, bot = _path_block(keys[active], x[active], start, dt, bridge)
        up_d = xs >= y
        dn_d = xs <= -a
        up_b = top >= y
        dn_b = bot <= -a
        hit = up_b | dn_b if bridge else up_d | dn_d
        done = hit.any(axis=1)
        r = np.nonzero(done)[0]
        j = hit[r].argmax(axis=1)
        idx = active[r]
        a0, a1 = x0[r, j], xs[r, j]
        ud, dd = up_d[r, j], dn_d[r, j]
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(ud, (y - a0) / (a1 - a0), np.where(dd, (a0 + a) / (a0 - a1), 0.5))
        tau[idx] = (start + j + frac) * dt
        upper_first[idx] = ud | (~dd & up_b[r, j])
        keep = ~done
        x[active[keep]] = xs[keep, -1]
        active = active[keep]
        start += _BLOCK
    return tau, upper_first


def sample_exit(plan: SimPlan, a: float, y: float) -> tuple[np.ndarray, np.ndarray]:
    """Exit times of (-a, y) from 0 and whether ``y`` was hit first.

    Used to check the joint transforms of the two hitting times by
    simulation; same path and bridge machinery as the cover-time sampler.
    """
    a = RangeState(a, a).a
    y = RangeState(y, y).a
    _check_dt(plan.dt, a + y)
    taus, ups = [], []
    for i0 in range(0, plan.n_samples, _CHUNK):
        idx = np.arange(i0, min(i0 + _CHUNK, plan.n_samples), dtype=_U64)
        t, u = _exit_engine(rng.stream_keys(plan.base_seed, idx), a, y, plan.dt, plan.bridge_correction)
        taus.append(t)
        ups.append(u)
    return np.concatenate(taus), np.concatenate(ups)


# ---------------------------------------------------------------------------
# switchback chain


def _switchback_engine(keys: np.ndarray, a: float, L: float, record: bool = False):
    n = keys.size
    cur = np.full(n, a)
    counts = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    trail = [] if record else None
    r = 0
    while active.size:
        u = rng.uniforms(keys[active], np.full(active.size, r, dtype=_U64))
        # inverse of P(M <= y) = y / (a + y)
        jump = cur[active] * u / (1.0 - u)
        go = jump < L - cur[active]
        moved = active[go]
        counts[moved] += 1
        cur[moved] += jump[go]
        if record and go.any():
            trail.append(float(cur[moved][0]))
        active = moved
        r += 1
    return counts, trail


def sample_switchbacks(plan: SimPlan, r: RangeState, stream_index: int) -> SwitchbackChain:
    """Exact switchback chain from range length ``r.a`` to ``r.L``.

    Each round draws the overshoot ``M = a U / (1 - U)`` of the current range
    before the far end is hit.  If ``M >= L - a`` the range reaches ``L``
    first and the chain stops; otherwise a switchback occurs and
    ``a <- a + M``.
    """
    if not isinstance(r, RangeState):
        r = RangeState(*r)
    keys = np.atleast_1d(rng.stream_keys(plan.base_seed, int(stream_index)))
    _, trail = _switchback_engine(keys, r.a, r.L, record=True)
    return SwitchbackChain(r.a, r.L, (r.a, *trail))


def sample_switchback_counts(plan: SimPlan, a: float, L: float) -> np.ndarray:
    """Switchback counts for ``plan.n_samples`` independent chains."""
    r = RangeState(a, L)
    return _batched(plan, lambda keys: _switchback_engine(keys, r.a, r.L)[0])


# ---------------------------------------------------------------------------


def estimate_transform(samples: Iterable, s: float) -> tuple[float, float]:
    """Sample mean of exp(-s theta) and its standard error."""
    s = float(s)
    if not (math.isfinite(s) and s >= 0.0):
        raise DomainError(f"s must be finite and >= 0, got {s}")
    theta = _as_thetas(samples)
    if theta.size == 0:
        raise DomainError("no samples")
    if s == 0.0:
        return 1.0, 0.0
    w = np.exp(-s * theta)
    se = float(w.std(ddof=1) / math.sqrt(w.size)) if w.size > 1 else float("nan")
    return float(w.mean()), se


def _as_thetas(samples) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        return samples.astype(float, copy=False).ravel()
    items: Sequence = list(samples)
    return np.array([x.theta if isinstance(x, CoverTimeSample) else float(x) for x in items])
