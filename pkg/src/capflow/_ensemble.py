"""Vectorized Monte Carlo over many chain trajectories.

The per-path simulator in :mod:`capflow.chains` is the reference
implementation; these routines run thousands of replicas in lockstep
numpy rounds, recording only the sparse events the callers need (well
entries, absorption times, accumulated running costs).  All randomness
comes from one counter-based generator keyed by the seed, so results are
reproducible and independent of any outer parallelism.
"""

from __future__ import annotations

import numpy as np

from .chains import RateChain
from .errors import SolverFailure, ValidationError

_MAX_ROUNDS = 50_000_000


def _jump_tables(chain: RateChain):
    """Padded neighbor / cumulative-probability tables for batched jumps."""
    R = chain.rates.tocsr()
    n = chain.n_states
    lam = chain.total_rates
    deg = np.diff(R.indptr)
    maxdeg = max(int(deg.max()), 1)
    neigh = np.tile(np.arange(n, dtype=np.int64)[:, None], (1, maxdeg))
    cump = np.ones((n, maxdeg))
    for x in range(n):
        lo, hi = R.indptr[x], R.indptr[x + 1]
        if hi == lo:
            continue
        p = R.data[lo:hi] / lam[x]
        c = np.cumsum(p)
        c[-1] = 1.0
        k = hi - lo
        neigh[x, :k] = R.indices[lo:hi]
        neigh[x, k:] = R.indices[hi - 1]
        cump[x, :k] = c
        cump[x, k:] = 1.0
    return neigh, cump, lam


def ensemble_trace(chain: RateChain, labels: np.ndarray, x0: int,
                   horizon: float, n_paths: int, seed: int):
    """Simulate n_paths trajectories, recording well-entry events.

    ``labels`` maps states to 0 (outside all wells) or a well label >= 1.
    Returns (events, trace_time, delta_time) where events is a list of
    (entry_times_array, labels_array) per path in trace-clock units (time
    spent outside wells excised), trace_time is the per-path total well
    time and delta_time the per-path time spent outside wells.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels[x0] <= 0:
        raise ValidationError("ensemble paths must start inside a well")
    neigh, cump, lam = _jump_tables(chain)
    rng = np.random.Generator(np.random.Philox(seed))

    x = np.full(n_paths, int(x0), dtype=np.int64)
    t = np.zeros(n_paths)
    tr = np.zeros(n_paths)
    tdelta = np.zeros(n_paths)
    last_well = np.full(n_paths, labels[x0], dtype=np.int64)
    active = np.arange(n_paths)
    ev_path: list[np.ndarray] = []
    ev_time: list[np.ndarray] = []
    ev_lab: list[np.ndarray] = []

    rounds = 0
    while active.size:
        rounds += 1
        if rounds > _MAX_ROUNDS:
            raise SolverFailure("ensemble simulation exceeded the round budget")
        xa = x[active]
        la = lam[xa]
        dt = np.where(la > 0, rng.standard_exponential(active.size) / np.maximum(la, 1e-300),
                      np.inf)
        rem = horizon - t[active]
        over = dt >= rem
        dt_eff = np.where(over, rem, dt)
        in_v = labels[xa] > 0
        tr[active] += dt_eff * in_v
        tdelta[active] += dt_eff * (~in_v)
        t[active] += dt_eff
        cont = active[~over]
        if cont.size:
            xc = x[cont]
            u = rng.random(cont.size)
            k = (u[:, None] > cump[xc]).sum(axis=1)
            y = neigh[xc, k]
            x[cont] = y
            laby = labels[y]
            changed = (laby > 0) & (laby != last_well[cont])
            if changed.any():
                sel = cont[changed]
                ev_path.append(sel.copy())
                ev_time.append(tr[sel].copy())
                ev_lab.append(laby[changed].copy())
                last_well[sel] = laby[changed]
        active = cont

    if ev_path:
        pid = np.concatenate(ev_path)
        ptime = np.concatenate(ev_time)
        plab = np.concatenate(ev_lab)
        order = np.argsort(pid, kind="stable")
        pid, ptime, plab = pid[order], ptime[order], plab[order]
        bounds = np.searchsorted(pid, np.arange(n_paths + 1))
    else:
        pid = np.zeros(0, dtype=np.int64)
        ptime = np.zeros(0)
        plab = np.zeros(0, dtype=np.int64)
        bounds = np.zeros(n_paths + 1, dtype=np.int64)

    start_lab = int(labels[x0])
    events = []
    for p in range(n_paths):
        lo, hi = bounds[p], bounds[p + 1]
        times = np.concatenate([[0.0], ptime[lo:hi]])
        labs = np.concatenate([[start_lab], plab[lo:hi]]).astype(np.int64)
        events.append((times, labs))
    return events, tr, tdelta


def ensemble_hitting(chain: RateChain, x0, target_mask: np.ndarray,
                     n_paths: int, seed: int, f: np.ndarray | None = None,
                     horizon: float = np.inf):
    """Run until the target (or the horizon) and integrate a running cost.

    ``x0`` is a state index or a probability vector over states.  Returns
    (integrals, hit_before_horizon, hit_times).
    """
    target_mask = np.asarray(target_mask, dtype=bool)
    neigh, cump, lam = _jump_tables(chain)
    rng = np.random.Generator(np.random.Philox(seed))
    if np.isscalar(x0) or np.asarray(x0).ndim == 0:
        x = np.full(n_paths, int(x0), dtype=np.int64)
    else:
        probs = np.asarray(x0, dtype=float)
        probs = probs / probs.sum()
        x = rng.choice(len(probs), size=n_paths, p=probs).astype(np.int64)

    cost = np.zeros(n_paths)
    t = np.zeros(n_paths)
    hit = np.zeros(n_paths, dtype=bool)
    hit_time = np.full(n_paths, np.nan)
    alive = ~target_mask[x]
    hit[~alive] = True
    hit_time[~alive] = 0.0
    active = np.nonzero(alive)[0]

    rounds = 0
    while active.size:
        rounds += 1
        if rounds > _MAX_ROUNDS:
            raise SolverFailure("ensemble simulation exceeded the round budget")
        xa = x[active]
        la = lam[xa]
        dt = np.where(la > 0, rng.standard_exponential(active.size) / np.maximum(la, 1e-300),
                      np.inf)
        rem = horizon - t[active]
        over = dt >= rem
        dt_eff = np.where(over, rem, dt)
        if f is not None:
            cost[active] += f[xa] * dt_eff
        t[active] += dt_eff
        cont = active[~over]
        if cont.size:
            xc = x[cont]
            u = rng.random(cont.size)
            k = (u[:, None] > cump[xc]).sum(axis=1)
            y = neigh[xc, k]
            x[cont] = y
            arrived = target_mask[y]
            if arrived.any():
                sel = cont[arrived]
                hit[sel] = True
                hit_time[sel] = t[sel]
            cont = cont[~arrived]
        active = cont
    return cost, hit, hit_time
