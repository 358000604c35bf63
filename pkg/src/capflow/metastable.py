"""Wells, reduced inter-well dynamics, trace projection and its diagnostics.

A well partition splits the states into sublevel wells V_1..V_n around
the global minima plus the residual region Delta.  On the time scale
theta the dynamics between wells is described by a reduced chain whose
holding rates are

    lambda_j = theta Cap(V_j, breve V_j) / mu(V_j),

where breve V_j is the union of the other wells.  Jump rates:

* reversible chains use the capacity-difference formula
  r(j,k) = theta / (2 mu(V_j)) [ Cap(V_j, breve V_j) + Cap(V_k, breve V_k)
                                  - Cap(V_j u V_k, rest) ],
* non-reversible chains use r(j,k) = lambda_j P[hit V_k first] computed
  on the chain in which V_j has been collapsed to a single state with
  mu-averaged outgoing rates (the collapse preserves the stationary
  measure, which is asserted).

For reversible inputs both formulas are computed and cross-checked.

The trace path excises the time spent in Delta: with T(t) the occupation
time of the wells up to t and S its generalized inverse, the projected
process reports the well label at trace time t, in units of theta.  The
comparison with the reduced chain is by total variation between the
empirical law of (y(t_1), ..., y(t_m)) and the exact finite-dimensional
law of the reduced chain (matrix exponentials on the label space).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.stats import kstest

from ._ensemble import ensemble_hitting, ensemble_trace
from .captheory import capacity, equilibrium_potentials
from .chains import (
    EdgeDecomposition,
    Measure,
    RateChain,
    SamplePath,
    StateSet,
    build_chain,
    solve_poisson,
    stationary_measure,
)
from .errors import (
    EmptyWell,
    HorizonTooShort,
    InsufficientSamples,
    NegativeRate,
    NoSaddle,
    SolverFailure,
    UnequalMinima,
    ValidationError,
    WellMergeError,
)
from .landscape import (
    Landscape,
    find_critical_points,
    grid_neighbors,
    minimax_saddle,
    potential_grid,
    sublevel_component,
)


@dataclass
class WellPartition:
    wells: list                    # list[StateSet], labels 1..n in order
    delta: StateSet
    minima: list                   # flat state index of each well's minimum
    kappa: float
    labels: np.ndarray             # state -> 0 (Delta) or well label 1..n

    @property
    def n_wells(self) -> int:
        return len(self.wells)

    def breve(self, j: int) -> StateSet:
        """Union of all wells except well j (1-based label)."""
        out = set()
        for k, w in enumerate(self.wells, start=1):
            if k != j:
                out |= w.members
        return StateSet(out)


@dataclass
class ReducedChain:
    n_labels: int
    lam: np.ndarray                # holding rates, one per label
    r: np.ndarray                  # jump rates, zero diagonal
    theta: float

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        if self.r.min() < 0:
            raise NegativeRate("reduced chain has a negative jump rate")
        rows = self.r.sum(axis=1)
        scale = max(self.lam.max(), 1e-300)
        if np.abs(rows - self.lam).max() > 1e-6 * scale:
            raise SolverFailure(
                f"reduced rates row sums {rows} do not match holding rates {self.lam}")

    def generator(self) -> np.ndarray:
        return self.r - np.diag(self.r.sum(axis=1))

    def transition_matrix(self, t: float) -> np.ndarray:
        return expm(self.generator() * t)

    def as_rate_chain(self) -> RateChain:
        entries = [(j, k, self.r[j, k]) for j in range(self.n_labels)
                   for k in range(self.n_labels) if j != k and self.r[j, k] > 0]
        return build_chain(self.n_labels, entries)

    def to_json_dict(self) -> dict:
        return {"labels": self.n_labels, "lambda": [float(v) for v in self.lam],
                "r": [[float(v) for v in row] for row in self.r],
                "theta": float(self.theta)}


@dataclass
class TracePath:
    """Well-label path in trace time (Delta sojourns excised), theta units."""

    times: np.ndarray              # entry times, times[0] == 0
    labels: np.ndarray             # well labels, labels[0] is the start well
    duration: float                # total trace time observed
    delta_fraction: float          # share of original time spent in Delta
    theta: float
    horizon: float
    path: SamplePath | None = None
    tv_times: np.ndarray | None = None     # original jump times
    tv_values: np.ndarray | None = None    # well-occupation time at those times

    def label_at(self, t: float) -> int:
        """Well label at trace time t (t <= duration)."""
        if t > self.duration:
            raise ValidationError("queried beyond the observed trace")
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return int(self.labels[k])

    def n_transitions(self) -> int:
        return len(self.times) - 1


def build_wells(ls: Landscape, chain: RateChain, kappa: float | None = None,
                height_tol: float = 1e-9,
                require_equal_minima: bool = True) -> WellPartition:
    """Wells as sublevel components around the global minima.

    The separating level is the communication height between the minima
    minus the margin kappa (default: 10% of the barrier).  All local
    minima must sit at the global height unless ``require_equal_minima``
    is switched off, in which case only the global ones seed wells.
    """
    if chain.n_states != ls.n_states:
        raise ValidationError("chain does not match the landscape grid")
    cps = find_critical_points(ls)
    minima = [p for p in cps if p.kind == "minimum"]
    if not minima:
        raise ValidationError("no local minima found on the grid")
    vals = np.array([p.value for p in minima])
    vmin = vals.min()
    scale = max(1.0, float(np.abs(vals).max()))
    is_global = vals <= vmin + height_tol * scale
    if require_equal_minima and not is_global.all():
        raise UnequalMinima(
            f"local minima heights {sorted(vals)} are not all equal; "
            "pass require_equal_minima=False to keep only the global ones")
    seeds = [p for p, g in zip(minima, is_global) if g]

    Vflat = potential_grid(ls).ravel()
    nbrs = grid_neighbors(ls)
    if len(seeds) >= 2:
        heights = []
        for ia in range(len(seeds)):
            for ib in range(ia + 1, len(seeds)):
                h, _, _ = minimax_saddle(Vflat, nbrs, seeds[ia].index, seeds[ib].index)
                heights.append(h)
        sigma_height = min(heights)
    else:
        sigma_height = float(Vflat.max())
    barrier = sigma_height - vmin
    if barrier <= 0:
        raise NoSaddle("no barrier above the minima")
    kap = kappa if kappa is not None else (
        ls.kappa if ls.kappa is not None else 0.1 * barrier)
    if kap >= barrier:
        raise ValidationError(f"margin kappa={kap} swallows the barrier {barrier}")
    level = sigma_height - kap

    labels = np.zeros(ls.n_states, dtype=np.int64)
    wells, well_minima = [], []
    for p in seeds:
        if labels[p.index] != 0:
            raise WellMergeError(
                f"minima at {p.coords} share a sublevel component; "
                "increase kappa resolution or refine the grid")
        comp = sublevel_component(Vflat, nbrs, level, p.index)
        if labels[comp].any():
            raise WellMergeError("two minima share a sublevel component")
        labels[comp] = len(wells) + 1
        wells.append(StateSet(comp.tolist()))
        well_minima.append(int(p.index))
    delta = StateSet(np.nonzero(labels == 0)[0].tolist())
    return WellPartition(wells=wells, delta=delta, minima=well_minima,
                         kappa=float(kap), labels=labels)


def is_reversible(decomp: EdgeDecomposition, rtol: float = 1e-12) -> bool:
    smax = decomp.s.data.max() if decomp.s.nnz else 0.0
    jmax = np.abs(decomp.j.data).max() if decomp.j.nnz else 0.0
    return jmax <= rtol * max(smax, 1e-300)


def collapse_well(chain: RateChain, decomp: EdgeDecomposition,
                  wells: WellPartition, j: int, check: bool = True) -> RateChain:
    """Merge well j (1-based) into one state with mu-averaged exit rates.

    State order: all states outside the well keep their relative order,
    the merged state goes last; ``state_labels`` maps back to original
    indices with -1 for the merged state.  The stationary measure is
    preserved (the well's mass lands on the merged state), asserted when
    ``check`` is on.
    """
    if not 1 <= j <= wells.n_wells:
        raise ValidationError(f"no well labeled {j}")
    widx = wells.wells[j - 1].indices
    if widx.size == 0:
        raise EmptyWell(f"well {j} has no states")
    n = chain.n_states
    keep = np.setdiff1d(np.arange(n), widx)
    m = keep.size
    star = m
    newidx = np.full(n, -1, dtype=np.int64)
    newidx[keep] = np.arange(m)
    mu = decomp.mu.weights
    mu_well = mu[widx].sum()

    R = chain.rates.tocoo()
    rows, cols, vals = [], [], []
    in_well_r = np.isin(R.row, widx)
    in_well_c = np.isin(R.col, widx)
    # outside -> outside
    mask = ~in_well_r & ~in_well_c
    rows.append(newidx[R.row[mask]])
    cols.append(newidx[R.col[mask]])
    vals.append(R.data[mask])
    # outside -> star: summed rates into the well
    mask = ~in_well_r & in_well_c
    rows.append(newidx[R.row[mask]])
    cols.append(np.full(mask.sum(), star))
    vals.append(R.data[mask])
    # star -> outside: mu-weighted average of the well's exit rates
    mask = in_well_r & ~in_well_c
    rows.append(np.full(mask.sum(), star))
    cols.append(newidx[R.col[mask]])
    vals.append(mu[R.row[mask]] * R.data[mask] / mu_well)
    entries = zip(np.concatenate(rows).tolist(),
                  np.concatenate(cols).tolist(),
                  np.concatenate(vals).tolist())
    labels = [int(k) for k in keep] + [-1]
    collapsed = build_chain(m + 1, list(entries), state_labels=labels)
    if check:
        mu_c = stationary_measure(collapsed).weights
        expected = np.concatenate([mu[keep], [mu_well]])
        expected = expected / expected.sum()
        if np.abs(mu_c - expected).max() > 1e-10:
            raise SolverFailure("collapse did not preserve the stationary measure")
    return collapsed


def _well_capacities(chain, decomp, wells):
    caps = np.zeros(wells.n_wells)
    masses = np.zeros(wells.n_wells)
    mu = decomp.mu.weights
    for j in range(1, wells.n_wells + 1):
        masses[j - 1] = mu[wells.wells[j - 1].indices].sum()
        if wells.n_wells >= 2:
            caps[j - 1] = capacity(chain, decomp, wells.wells[j - 1],
                                   wells.breve(j)).cap
    return caps, masses


def _collapsed_jump_probs(chain, decomp, wells, j):
    """P[from collapsed well j, the first other well hit is k] for all k."""
    collapsed = collapse_well(chain, decomp, wells, j, check=False)
    labels = np.asarray(collapsed.state_labels)
    star = int(np.nonzero(labels == -1)[0][0])
    n_new = collapsed.n_states
    old_to_new = {int(lab): i for i, lab in enumerate(labels) if lab >= 0}
    probs = np.zeros(wells.n_wells)
    others = [k for k in range(1, wells.n_wells + 1) if k != j]
    all_other = set()
    per_well = {}
    for k in others:
        tgt = {old_to_new[s] for s in wells.wells[k - 1].members}
        per_well[k] = tgt
        all_other |= tgt
    for k in others:
        b = np.zeros(n_new)
        b[list(per_well[k])] = 1.0
        h = solve_poisson(collapsed, StateSet(all_other), b=b, f=0.0)
        probs[k - 1] = h[star]
    return probs


def reduced_chain(chain: RateChain, decomp: EdgeDecomposition,
                  wells: WellPartition, theta: float | None = None) -> ReducedChain:
    """Reduced inter-well chain on the time scale theta.

    Default theta normalizes the fastest well so its holding rate is 1.
    """
    nw = wells.n_wells
    caps, masses = _well_capacities(chain, decomp, wells)
    if nw == 1:
        return ReducedChain(1, np.zeros(1), np.zeros((1, 1)), float(theta or 1.0))
    escape = caps / masses
    if theta is None:
        theta = 1.0 / escape.max()
    theta = float(theta)
    if theta <= 0:
        raise ValidationError("theta must be positive")
    lam = theta * escape

    reversible = is_reversible(decomp)
    r_coll = np.zeros((nw, nw))
    for j in range(1, nw + 1):
        probs = _collapsed_jump_probs(chain, decomp, wells, j)
        r_coll[j - 1] = lam[j - 1] * probs

    if reversible:
        r_rev = np.zeros((nw, nw))
        mu = decomp.mu.weights
        for j in range(1, nw + 1):
            for k in range(1, nw + 1):
                if j == k:
                    continue
                rest = set()
                for l in range(1, nw + 1):
                    if l not in (j, k):
                        rest |= wells.wells[l - 1].members
                if rest:
                    pair = StateSet(wells.wells[j - 1].members
                                    | wells.wells[k - 1].members)
                    cap_jk = capacity(chain, decomp, pair, StateSet(rest)).cap
                else:
                    cap_jk = 0.0
                val = theta / (2 * masses[j - 1]) * (caps[j - 1] + caps[k - 1] - cap_jk)
                if val < -1e-6 * lam[j - 1]:
                    raise NegativeRate(
                        f"capacity-difference rate r({j},{k}) = {val} is negative; "
                        "the metastability hypotheses look violated")
                r_rev[j - 1, k - 1] = max(val, 0.0)
        mismatch = np.abs(r_rev - r_coll).max()
        if mismatch > 1e-6 * max(lam.max(), 1e-300):
            raise SolverFailure(
                f"reversible rate formulas disagree by {mismatch:.3e}")
        return ReducedChain(nw, lam, r_rev, theta)
    return ReducedChain(nw, lam, r_coll, theta)


def trace_project(path: SamplePath, wells: WellPartition, theta: float,
                  min_transitions: int = 0) -> TracePath:
    """Excise Delta sojourns from a sample path and project to labels."""
    labels = wells.labels
    t = np.append(path.times, path.horizon)
    durations = np.diff(t)
    state_labels = labels[path.states]
    entry_times = [0.0]
    entry_labels = [0]
    # the first recorded label is the first well visited
    trace_t = 0.0
    delta_t = 0.0
    cur = 0
    started = False
    for lab, dur in zip(state_labels, durations):
        if lab > 0:
            if not started:
                entry_labels[0] = int(lab)
                cur = int(lab)
                started = True
            elif lab != cur:
                entry_times.append(trace_t)
                entry_labels.append(int(lab))
                cur = int(lab)
            trace_t += dur
        else:
            delta_t += dur
    if not started:
        raise HorizonTooShort("path never visits a well")
    n_trans = len(entry_times) - 1
    if n_trans < min_transitions:
        raise HorizonTooShort(
            f"{n_trans} well transitions observed, {min_transitions} required")
    tv_values = np.concatenate([[0.0], np.cumsum(np.where(state_labels > 0,
                                                          durations, 0.0))])
    return TracePath(times=np.asarray(entry_times) / theta,
                     labels=np.asarray(entry_labels, dtype=np.int64),
                     duration=trace_t / theta,
                     delta_fraction=delta_t / path.horizon if path.horizon > 0 else 0.0,
                     theta=theta, horizon=path.horizon, path=path,
                     tv_times=path.times.copy(), tv_values=tv_values[:-1])


def trace_ensemble(chain: RateChain, wells: WellPartition, x0: int,
                   horizon: float, n_paths: int, seed: int,
                   theta: float) -> list[TracePath]:
    """Vectorized batch of trace paths started at state x0 (inside a well)."""
    events, tr, tdelta = ensemble_trace(chain, wells.labels, x0, horizon,
                                        n_paths, seed)
    out = []
    for p in range(n_paths):
        times, labs = events[p]
        out.append(TracePath(times=times / theta, labels=labs,
                             duration=tr[p] / theta,
                             delta_fraction=tdelta[p] / horizon,
                             theta=theta, horizon=horizon))
    return out


def sojourn_samples(paths: list, n_labels: int) -> dict:
    """Completed sojourn durations per well label, in trace-time units."""
    out = {j: [] for j in range(1, n_labels + 1)}
    for tp in paths:
        for k in range(len(tp.times) - 1):
            out[int(tp.labels[k])].append(tp.times[k + 1] - tp.times[k])
    return {j: np.asarray(v) for j, v in out.items()}


def sojourn_exponentiality(paths: list, reduced: ReducedChain) -> dict:
    """Kolmogorov-Smirnov test of each well's sojourns against Exp(lambda_j)."""
    samples = sojourn_samples(paths, reduced.n_labels)
    out = {}
    for j, s in samples.items():
        lam = reduced.lam[j - 1]
        if len(s) == 0 or lam <= 0:
            out[j] = {"n": len(s), "statistic": None, "pvalue": None}
            continue
        res = kstest(s, "expon", args=(0.0, 1.0 / lam))
        out[j] = {"n": int(len(s)), "statistic": float(res.statistic),
                  "pvalue": float(res.pvalue)}
    return out


@dataclass
class FddResult:
    times: list
    tv_distance: float
    n_paths: int
    mc_radius: float               # a-priori multinomial TV radius sqrt(K/4N)
    empirical: dict                # tuple(label,...) -> frequency
    exact: dict


def fdd_compare(paths: list, reduced: ReducedChain, time_vectors,
                x0_label: int, min_paths: int = 100) -> list[FddResult]:
    """Total-variation distance between empirical and exact joint laws.

    Each entry of ``time_vectors`` is an increasing sequence of trace
    times; paths too short for a vector are dropped, and fewer than
    ``min_paths`` usable paths raises.
    """
    results = []
    nl = reduced.n_labels
    for tv in time_vectors:
        tv = [float(t) for t in tv]
        if sorted(tv) != tv:
            raise ValidationError("time vectors must be increasing")
        usable = [p for p in paths if p.duration >= tv[-1]]
        if len(usable) < min_paths:
            raise InsufficientSamples(
                f"{len(usable)} paths cover t={tv[-1]}, need {min_paths}")
        counts: dict = {}
        for p in usable:
            key = tuple(p.label_at(t) for t in tv)
            counts[key] = counts.get(key, 0) + 1
        emp = {k: v / len(usable) for k, v in counts.items()}

        gaps = np.diff([0.0] + tv)
        mats = [reduced.transition_matrix(g) for g in gaps]
        exact: dict = {}

        def rec(prefix, prob, row):
            depth = len(prefix)
            if depth == len(tv):
                exact[tuple(prefix)] = prob
                return
            P = mats[depth]
            for nxt in range(1, nl + 1):
                p2 = prob * P[row - 1, nxt - 1]
                rec(prefix + [nxt], p2, nxt)

        rec([], 1.0, x0_label)
        keys = set(emp) | set(exact)
        tvd = 0.5 * sum(abs(emp.get(k, 0.0) - exact.get(k, 0.0)) for k in keys)
        radius = float(np.sqrt(nl ** len(tv) / (4.0 * len(usable))))
        results.append(FddResult(times=tv, tv_distance=float(tvd),
                                 n_paths=len(usable), mc_radius=radius,
                                 empirical={",".join(map(str, k)): v for k, v in sorted(emp.items())},
                                 exact={",".join(map(str, k)): v for k, v in sorted(exact.items())}))
    return results


@dataclass
class WellDiagnostics:
    label: int
    instant_jump_estimate: float | None
    instant_jump_halfwidth: float | None
    visit_ratio: float | None      # sup_y Cap(V_j, breve V_j) / Cap({y},{z_j})
    n_replicas: int


def diagnostics(chain: RateChain, decomp: EdgeDecomposition,
                wells: WellPartition, theta: float, r_small: float,
                seed: int, replicas: int = 2000,
                z_states: list | None = None) -> list[WellDiagnostics]:
    """Metastability health checks per well.

    Instant-jump: Monte Carlo estimate of P[H(other wells) <= r_small
    theta] from the well minimum and from the well's highest state (a
    worst-case proxy for the sup over the well).  Visit-points: the exact
    capacity ratio sup_{y in V_j} Cap(V_j, breve V_j) / Cap({y}, {z_j})
    with z_j the well minimum unless overridden.  Small values of both
    support the reduced-chain description.
    """
    Vflat = None
    out = []
    mu = decomp.mu.weights
    for j in range(1, wells.n_wells + 1):
        widx = wells.wells[j - 1].indices
        z = int(z_states[j - 1]) if z_states is not None else wells.minima[j - 1]
        if wells.n_wells >= 2:
            breve = wells.breve(j)
            target = np.zeros(chain.n_states, dtype=bool)
            target[breve.indices] = True
            cap_j = capacity(chain, decomp, wells.wells[j - 1], breve).cap
            ests = []
            starts = {z}
            if Vflat is None:
                Vflat = np.zeros(chain.n_states)
            # worst-case proxy: lowest-mass state of the well
            starts.add(int(widx[np.argmin(mu[widx])]))
            for si, s in enumerate(sorted(starts)):
                _, hit, _ = ensemble_hitting(chain, s, target, replicas,
                                             seed + 1000 * j + si,
                                             horizon=r_small * theta)
                ests.append(hit.mean())
            p_hat = float(max(ests))
            half = float(1.96 * np.sqrt(max(p_hat * (1 - p_hat), 1.0 / replicas)
                                        / replicas))
        else:
            cap_j, p_hat, half = None, None, None
        if widx.size <= 1 or wells.n_wells < 2:
            ratio = None
        else:
            worst = 0.0
            for y in widx:
                if int(y) == z:
                    continue
                cap_y = capacity(chain, decomp, StateSet([int(y)]),
                                 StateSet([z])).cap
                worst = max(worst, cap_j / cap_y)
            ratio = float(worst)
        out.append(WellDiagnostics(label=j, instant_jump_estimate=p_hat,
                                   instant_jump_halfwidth=half,
                                   visit_ratio=ratio, n_replicas=replicas))
    return out
