"""Continuum limit objects: parabolic-drift Brownian motion, the absorbed
square-root SDE pair (Z, C), its time-change construction, barrier hitting
times, and the deterministic curves of the drifting-window regime.

Two independent simulation routes exist for the same law and are compared
statistically by the verification suites:

* `simulate_sde` -- full-truncation Euler-Maruyama for
      dZ = sqrt(Z) dW + (lam - C) Z dt,  dC = Z dt,  Z(0) = x,
  absorbed at zero;
* `lamperti_route` -- simulate X(t) = B(t) + lam*t - t**2/2 on its own grid,
  then integrate the time change dC/dt = x + X(C) and read Z = x + X(C),
  stopping when C reaches the first time x + X hits zero.

Drift is always applied analytically on the grid; only the Brownian part is
sampled.  Ensemble variants are vectorized across paths and draw from a
single stream, which keeps them deterministic given (seed, label).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CritwinError, RngStream

__all__ = [
    "InsufficientSampleError",
    "ParabolicBMPath",
    "SdePath",
    "HittingSample",
    "DeterministicLimit",
    "sample_parabolic_bm",
    "simulate_sde",
    "sde_ensemble",
    "lamperti_route",
    "lamperti_marginals",
    "sample_hitting_time",
    "hitting_ensemble",
    "eval_deterministic",
    "self_similarity_test",
]


class InsufficientSampleError(CritwinError):
    """Too few paths survived to the comparison time."""


@dataclass(frozen=True)
class ParabolicBMPath:
    """Grid path of x_offset + B(t) + lam*t - t**2/2."""

    dt: float
    lam: float
    x_offset: float
    values: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.size) * self.dt


@dataclass(frozen=True)
class SdePath:
    """Grid path of (Z, C); Z is identically zero from ``absorbed_at`` on."""

    dt: float
    z: np.ndarray
    c: np.ndarray
    absorbed_at: int | None


@dataclass(frozen=True)
class HittingSample:
    """First grid time at which x + X drops to zero or below."""

    T: float
    truncated: bool


def _drift(lam: float, t: np.ndarray) -> np.ndarray:
    return lam * t - 0.5 * t * t


def sample_parabolic_bm(
    lam: float,
    x_offset: float = 0.0,
    dt: float = 1e-4,
    t_max: float = 1.0,
    rng: RngStream | None = None,
) -> ParabolicBMPath:
    """One path on the grid 0, dt, ..., ~t_max via exact Gaussian increments."""
    if rng is None:
        raise ValueError("an RngStream is required")
    if not (dt > 0 and t_max >= dt):
        raise ValueError(f"need dt > 0 and t_max >= dt, got dt={dt}, t_max={t_max}")
    m = int(round(t_max / dt))
    values = np.empty(m + 1)
    values[0] = 0.0
    np.cumsum(rng.standard_normal(m), out=values[1:])
    values[1:] *= math.sqrt(dt)
    t = np.arange(1, m + 1) * dt
    values[1:] += _drift(lam, t)
    values += x_offset
    return ParabolicBMPath(dt=dt, lam=lam, x_offset=x_offset, values=values)


def simulate_sde(
    x: float,
    lam: float,
    dt: float = 1e-4,
    t_max: float = 1.0,
    rng: RngStream | None = None,
) -> SdePath:
    """Full-truncation Euler-Maruyama path of (Z, C), absorbed at zero.

    Z[i+1] = Z[i] + sqrt(Z[i]+) sqrt(dt) N + (lam - C[i]) Z[i]+ dt and
    C[i+1] = C[i] + Z[i]+ dt; at the first Z[i+1] <= 0 the path is absorbed
    (Z set to 0, C frozen).
    """
    if rng is None:
        raise ValueError("an RngStream is required")
    if not x > 0:
        raise ValueError(f"need x > 0, got {x}")
    if not (dt > 0 and t_max >= dt):
        raise ValueError(f"need dt > 0 and t_max >= dt, got dt={dt}, t_max={t_max}")
    m = int(round(t_max / dt))
    z = np.zeros(m + 1)
    c = np.zeros(m + 1)
    z[0] = x
    sq = math.sqrt(dt)
    noise = rng.standard_normal(m)
    zi, ci = float(x), 0.0
    absorbed_at = None
    for i in range(m):
        zpos = zi if zi > 0.0 else 0.0
        znext = zi + math.sqrt(zpos) * sq * noise[i] + (lam - ci) * zpos * dt
        ci = ci + zpos * dt
        if znext <= 0.0:
            c[i + 1 :] = ci
            absorbed_at = i + 1
            break
        zi = znext
        z[i + 1] = zi
        c[i + 1] = ci
    return SdePath(dt=dt, z=z, c=c, absorbed_at=absorbed_at)


def sde_ensemble(
    z0,
    lam,
    dt: float,
    n_steps: int,
    rng: RngStream,
    c0=None,
):
    """Vectorized Euler-Maruyama over paths; same scheme as `simulate_sde`.

    ``z0``, ``lam``, ``c0`` broadcast across paths (per-path drift parameters
    are what the self-similarity restart needs).  Absorbed paths drop out of
    the update loop.  Returns (z_final, c_final, absorbed_at) with
    absorbed_at = -1 for paths alive at the horizon.
    """
    z0 = np.atleast_1d(np.asarray(z0, dtype=np.float64))
    n = z0.size
    if np.any(z0 <= 0):
        raise ValueError("all starting values must be > 0")
    lam_v = np.broadcast_to(np.asarray(lam, dtype=np.float64), (n,)).copy()
    c_v = (
        np.zeros(n)
        if c0 is None
        else np.broadcast_to(np.asarray(c0, dtype=np.float64), (n,)).copy()
    )
    z_final = np.zeros(n)
    c_final = np.zeros(n)
    absorbed_at = np.full(n, -1, dtype=np.int64)
    alive = np.arange(n)
    za, ca, la = z0.copy(), c_v, lam_v
    sq = math.sqrt(dt)
    for i in range(1, n_steps + 1):
        noise = rng.standard_normal(za.size)
        znext = za + np.sqrt(za) * sq * noise + (la - ca) * za * dt
        ca = ca + za * dt
        za = znext
        dead = za <= 0.0
        if dead.any():
            idx = alive[dead]
            c_final[idx] = ca[dead]
            absorbed_at[idx] = i
            keep = ~dead
            za, ca, la, alive = za[keep], ca[keep], la[keep], alive[keep]
            if za.size == 0:
                break
    z_final[alive] = za
    c_final[alive] = ca
    return z_final, c_final, absorbed_at


def _parabolic_matrix(lam: float, dt: float, m: int, n_paths: int, rng: RngStream):
    """(n_paths, m+1) matrix of X values on the grid."""
    x = np.empty((n_paths, m + 1))
    x[:, 0] = 0.0
    noise = rng.standard_normal((n_paths, m))
    np.cumsum(noise, axis=1, out=x[:, 1:])
    x[:, 1:] *= math.sqrt(dt)
    t = np.arange(1, m + 1) * dt
    x[:, 1:] += _drift(lam, t)
    return x


def _first_crossing(x: float, xmat: np.ndarray, dt: float, rng: RngStream | None = None):
    """First root of x + X per path; (times, truncated).

    Grid crossings are refined by linear interpolation inside the crossing
    cell.  When a stream is supplied, between-grid crossings are additionally
    detected with the Brownian-bridge probability exp(-2ab/dt) on every cell
    with positive endpoints (placed at the cell midpoint), removing the
    O(sqrt(dt)) late bias of grid-only detection.
    """
    s = x + xmat
    neg = s <= 0.0
    hit = neg.any(axis=1)
    first = np.argmax(neg, axis=1)
    first[~hit] = 1  # placeholder, masked out below
    rows = np.arange(s.shape[0])
    a = s[rows, first - 1]
    b = s[rows, first]
    denom = np.where(a - b != 0.0, a - b, 1.0)
    t_cross = (first - 1 + a / denom) * dt
    t_cross[~hit] = np.inf
    if rng is not None:
        m = s.shape[1] - 1
        block = max(1, 4_000_000 // s.shape[0])
        for lo in range(0, m, block):
            hi = min(lo + block, m)
            left = s[:, lo:hi]
            right = s[:, lo + 1 : hi + 1]
            interior = (left > 0.0) & (right > 0.0)
            prob = np.exp(-2.0 * np.clip(left * right, 0.0, None) / dt)
            fired = interior & (rng.random(left.shape) < prob)
            any_fired = fired.any(axis=1)
            if not any_fired.any():
                continue
            col = np.argmax(fired, axis=1)
            t_fire = (lo + col + 0.5) * dt
            t_cross = np.where(any_fired, np.minimum(t_cross, t_fire), t_cross)
            if np.all(t_cross <= hi * dt):
                break
        hit = np.isfinite(t_cross)
    truncated = ~hit
    t_cross[truncated] = (s.shape[1] - 1) * dt
    return t_cross, truncated


def _time_change(x, dt, n_steps, xmat, t_cross, record=False):
    """Euler integration of dC/dt = x + X(C) with linear interpolation.

    A path is stopped (Z = 0, C frozen) once C comes within one grid cell of
    its crossing time, or once Z falls to one step's worth of mass (<= dt).
    Past that resolution the piecewise-linear interpolant only crawls toward
    a crossing it cannot resolve, while the rough continuum path would absorb
    within O(sqrt(dt)) extra time.
    """
    cn = xmat.shape[0]
    m = xmat.shape[1] - 1
    z_final = np.zeros(cn)
    c_final = np.zeros(cn)
    absorbed_at = np.full(cn, -1, dtype=np.int64)
    z_path = c_path = None
    if record:
        z_path = np.zeros((cn, n_steps + 1))
        c_path = np.zeros((cn, n_steps + 1))
        z_path[:, 0] = x
    rows = np.arange(cn)
    za = np.full(cn, float(x))
    ca = np.zeros(cn)
    ra = rows
    inv_dt = 1.0 / dt
    for i in range(1, n_steps + 1):
        stopping = (t_cross[ra] - ca <= dt) | (za <= dt)
        if stopping.any():
            idx = ra[stopping]
            # final-approach stops sit within a couple of cells of the
            # crossing; report that crossing time as the frozen C
            near = t_cross[idx] - ca[stopping] <= 2.0 * dt
            c_final[idx] = np.where(near, t_cross[idx], ca[stopping])
            absorbed_at[idx] = i
            if record:
                c_path[idx, i:] = c_final[idx, None]
            keep = ~stopping
            za, ca, ra = za[keep], ca[keep], ra[keep]
            if ra.size == 0:
                break
        ca = ca + za * dt
        pos = ca * inv_dt
        i0 = np.minimum(pos.astype(np.int64), m - 1)
        frac = pos - i0
        xc = xmat[ra, i0] * (1.0 - frac) + xmat[ra, i0 + 1] * frac
        za = np.maximum(x + xc, 0.0)
        if record:
            z_path[ra, i] = za
            c_path[ra, i] = ca
    z_final[ra] = za
    c_final[ra] = ca
    if record:
        return z_final, c_final, absorbed_at, z_path, c_path
    return z_final, c_final, absorbed_at


def _default_grid_span(x: float, lam: float) -> float:
    t0 = lam + math.sqrt(lam * lam + 2.0 * x)
    return 3.0 * t0 + 8.0


def lamperti_route(
    x: float,
    lam: float,
    dt: float = 1e-4,
    t_max: float = 1.0,
    rng: RngStream | None = None,
    grid_t_max: float | None = None,
) -> SdePath:
    """Single (Z, C) path built by time-changing a parabolic-drift path.

    The X grid spans ``grid_t_max`` (default: generously past the hitting
    time) with the same step dt as the time-change integration.
    """
    if rng is None:
        raise ValueError("an RngStream is required")
    if not x > 0:
        raise ValueError(f"need x > 0, got {x}")
    if grid_t_max is None:
        grid_t_max = _default_grid_span(x, lam)
    m = int(round(grid_t_max / dt))
    xmat = _parabolic_matrix(lam, dt, m, 1, rng)
    t_cross, _truncated = _first_crossing(x, xmat, dt, rng)
    n_steps = int(round(t_max / dt))
    _, _, absorbed_at, z_path, c_path = _time_change(
        x, dt, n_steps, xmat, t_cross, record=True
    )
    ab = int(absorbed_at[0])
    return SdePath(
        dt=dt, z=z_path[0], c=c_path[0], absorbed_at=None if ab < 0 else ab
    )


def lamperti_marginals(
    x: float,
    lam: float,
    dt: float,
    t_max: float,
    n_paths: int,
    rng: RngStream,
    grid_t_max: float | None = None,
    chunk: int = 256,
):
    """Time-change route marginals at t_max for an ensemble of paths.

    Returns (z, c, t_cross, truncated); paths are processed in chunks to
    bound the stored X-grid memory.
    """
    if grid_t_max is None:
        grid_t_max = _default_grid_span(x, lam)
    m = int(round(grid_t_max / dt))
    n_steps = int(round(t_max / dt))
    z_out = np.empty(n_paths)
    c_out = np.empty(n_paths)
    t_out = np.empty(n_paths)
    trunc_out = np.zeros(n_paths, dtype=bool)
    done = 0
    while done < n_paths:
        cn = min(chunk, n_paths - done)
        xmat = _parabolic_matrix(lam, dt, m, cn, rng)
        t_cross, truncated = _first_crossing(x, xmat, dt, rng)
        zf, cf, _ = _time_change(x, dt, n_steps, xmat, t_cross)
        sl = slice(done, done + cn)
        z_out[sl], c_out[sl], t_out[sl], trunc_out[sl] = zf, cf, t_cross, truncated
        done += cn
    return z_out, c_out, t_out, trunc_out


def hitting_ensemble(
    x: float,
    lam: float,
    dt: float,
    t_max: float,
    n_paths: int,
    rng: RngStream,
    bridge: bool = True,
):
    """First passage of x + X to zero for an ensemble; (T, truncated).

    Crossings are detected on the grid; with ``bridge`` enabled an interval
    with positive endpoints a, b additionally registers a crossing with the
    Brownian-bridge probability exp(-2ab/dt).  The same draws are consumed
    either way, so runs with the flag on and off couple pathwise under a
    common stream.
    """
    if not x > 0:
        raise ValueError(f"need x > 0, got {x}")
    m = int(round(t_max / dt))
    va = np.full(n_paths, float(x))
    t_hit = np.full(n_paths, np.nan)
    done = np.zeros(n_paths, dtype=bool)
    sq = math.sqrt(dt)
    block = max(1, min(m, 2_000_000 // max(n_paths, 1)))
    i = 0
    while i < m:
        nb = min(block, m - i)
        noise = rng.standard_normal((nb, n_paths))
        bridge_u = rng.random((nb, n_paths))
        for j in range(nb):
            t_prev = (i + j) * dt
            t_cur = t_prev + dt
            vb = va + noise[j] * sq + lam * dt - 0.5 * (t_cur * t_cur - t_prev * t_prev)
            hit = vb <= 0.0
            if bridge:
                interior = ~hit & (va > 0.0)
                cross_p = np.exp(-2.0 * np.clip(va * vb, 0.0, None) / dt)
                hit |= interior & (bridge_u[j] < cross_p)
            newly = hit & ~done
            if newly.any():
                t_hit[newly] = t_cur
                done |= newly
            va = vb
        if done.all():
            break
        i += nb
    truncated = ~done
    t_hit[truncated] = m * dt
    return t_hit, truncated


def sample_hitting_time(
    x: float,
    lam: float,
    dt: float = 1e-4,
    t_max: float = 10.0,
    rng: RngStream | None = None,
    bridge: bool = True,
) -> HittingSample:
    """Single first-passage sample; see `hitting_ensemble`."""
    if rng is None:
        raise ValueError("an RngStream is required")
    t_hit, truncated = hitting_ensemble(x, lam, dt, t_max, 1, rng, bridge=bridge)
    return HittingSample(T=float(t_hit[0]), truncated=bool(truncated[0]))


@dataclass(frozen=True)
class DeterministicLimit:
    """Closed-form curves of the drifting-window limit.

    f(t) = x + lam*t - t**2/2 with largest root t0 = lam + sqrt(lam**2 + 2x);
    c solves c' = f(c), c(0) = 0, in closed hyperbolic-tangent form;
    z = f(c); the cumulative limit is the cubic integral of f frozen at t0.
    """

    x: float
    lam: float

    def __post_init__(self):
        if not self.x > 0:
            raise ValueError(f"need x > 0, got {self.x}")

    @property
    def s(self) -> float:
        return math.sqrt(2.0 * self.x + self.lam * self.lam)

    @property
    def t0(self) -> float:
        return self.lam + self.s

    def f(self, t):
        t = np.asarray(t, dtype=np.float64)
        return self.x + self.lam * t - 0.5 * t * t

    def c(self, t):
        t = np.asarray(t, dtype=np.float64)
        s = self.s
        phase = 0.5 * s * t + math.atanh(-self.lam / s)
        return self.lam + s * np.tanh(phase)

    def z(self, t):
        return np.maximum(self.f(self.c(t)), 0.0)

    def k_limit(self, t):
        tm = np.minimum(np.asarray(t, dtype=np.float64), self.t0)
        return self.x * tm + 0.5 * self.lam * tm * tm - tm**3 / 6.0


def eval_deterministic(x: float, lam: float, t: float):
    """(f(t), c(t), z(t), K(t)) for the deterministic limit curves."""
    lim = DeterministicLimit(x=x, lam=lam)
    return float(lim.f(t)), float(lim.c(t)), float(lim.z(t)), float(lim.k_limit(t))


def self_similarity_test(
    x: float,
    lam: float,
    t0: float,
    s: float,
    N: int,
    dt: float,
    rng: RngStream,
    tolerance: float = 0.05,
):
    """Restart test: continuing past t0 vs restarting from the observed state.

    For each path alive at t0 with state (z, mu) = (Z(t0), C(t0)), the
    continued value Z(t0 + s) and an independent restart from z with drift
    parameter lam - mu run for s carry the same law; the report compares the
    two populations (KS distance, first-moment delta).
    """
    from .analysis import ComparisonReport, ks_statistic

    if not (t0 > 0 and s >= 0):
        raise ValueError(f"need t0 > 0 and s >= 0, got t0={t0}, s={s}")
    steps1 = int(round(t0 / dt))
    steps2 = int(round(s / dt))
    z1, c1, ab1 = sde_ensemble(np.full(N, float(x)), lam, dt, steps1, rng)
    alive = ab1 < 0
    n_alive = int(alive.sum())
    if n_alive < N / 10:
        raise InsufficientSampleError(
            f"only {n_alive} of {N} paths alive at t0={t0}; need at least N/10"
        )
    if steps2 == 0:
        continued = z1[alive].copy()
        restarted = z1[alive].copy()
    else:
        continued, _, _ = sde_ensemble(z1[alive], lam, dt, steps2, rng, c0=c1[alive])
        restarted, _, _ = sde_ensemble(z1[alive], lam - c1[alive], dt, steps2, rng)
    ks = ks_statistic(continued, restarted)
    mean_delta = float(continued.mean() - restarted.mean())
    se = math.sqrt(continued.var(ddof=1) / n_alive + restarted.var(ddof=1) / n_alive)
    return ComparisonReport(
        test_name="self-similarity-restart",
        statistic=ks,
        tolerance=tolerance,
        passed=ks <= tolerance,
        N=N,
        details={
            "paths_alive_at_t0": n_alive,
            "mean_delta": mean_delta,
            "mean_delta_se": se,
            "noise_floor_95": 1.36 * math.sqrt(2.0 / n_alive),
        },
    )
