"""Potential landscapes on the periodic grid and their chain discretizations.

A landscape is a potential V, a diagonal anisotropy a, an optional drift c
and a temperature epsilon on the d-dimensional unit torus sampled at n
points per axis (spacing 1/n).  The discretizer produces nearest-neighbor
jump rates

    r(x, x +- e_i/n) = epsilon n^2 a_i(midpoint) exp(-(V(y) - V(x)) / (2 epsilon))

whose reversible part satisfies detailed balance with respect to the
Gibbs weights exp(-V/epsilon) exactly at every grid size.  A drift is
embedded as an antisymmetric edge current built from midpoint samples of
exp(-V/epsilon) c and then projected onto exactly divergence-free
currents with one sparse Poisson solve, so the Gibbs measure stays
stationary to solver precision; the projection residual is reported.

Admissible drifts satisfy c . grad V = 0 and div c = 0.  For expression
fields both residuals are checked with symbolic derivatives (exact for
valid inputs); finite-difference residuals are also reported and decay
like 1/n^2 under refinement.

Critical points: minima and maxima come from 3^d-neighborhood grid scans;
the saddle between two minima is the highest point along a minimax
(communication-height) path, located with a Dijkstra-type search.  For a
saddle sigma the product matrix  hess V(sigma) . diag(a(sigma))  has a
unique negative eigenvalue -mu, which enters the transition-time
prediction

    E[transition time] ~ p exp(Lambda/epsilon),
    p = (2 pi / mu) sqrt(-det hess V(sigma)) / sqrt(det hess V(m1)),

with barrier Lambda = V(sigma) - V(m1).  The sweep compares this against
the exact mean hitting time of the chain, obtained by a linear solve.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._util import pmap
from .chains import Measure, RateChain, StateSet, build_chain, solve_poisson
from .errors import (
    DegenerateCritical,
    NegativeRate,
    NoSaddle,
    NonpositiveBarrier,
    NotAMinimum,
    NotASaddle,
    SolverFailure,
    ValidationError,
)
from .exprfield import ScalarField, parse_scalar_field


@dataclass
class Landscape:
    """Potential landscape on the d-dimensional periodic grid."""

    d: int
    n: int
    epsilon: float
    V: Callable
    a: list | None = None          # d callables, None means a == 1
    c: list | None = None          # d callables, None means no drift
    kappa: float | None = None     # sublevel margin; None -> 10% of barrier
    drift_tol: float | None = None

    def __post_init__(self):
        if not (1 <= self.d <= 3):
            raise ValidationError("dimension must be 1, 2 or 3")
        if self.n < 3:
            raise ValidationError("need at least 3 grid points per axis")
        if self.epsilon <= 0:
            raise ValidationError("epsilon must be positive")
        if self.a is not None and len(self.a) != self.d:
            raise ValidationError("anisotropy needs one entry per axis")
        if self.c is not None and len(self.c) != self.d:
            raise ValidationError("drift needs one entry per axis")

    @property
    def n_states(self) -> int:
        return self.n ** self.d

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.d


def _as_field(spec, d: int):
    if spec is None or callable(spec):
        return spec
    return parse_scalar_field(str(spec), d)


def make_landscape(d: int, n: int, epsilon: float, V, a=None, c=None,
                   kappa: float | None = None,
                   drift_tol: float | None = None) -> Landscape:
    """Build a landscape from expressions or callables.

    ``V`` is an expression over x1..xd or a callable on d coordinate
    arrays; ``a`` and ``c`` are lists with one entry per axis (or None).
    """
    Vf = _as_field(V, d)
    af = None if a is None else [_as_field(ai, d) for ai in a]
    cf = None if c is None else [_as_field(ci, d) for ci in c]
    return Landscape(d=d, n=n, epsilon=float(epsilon), V=Vf, a=af, c=cf,
                     kappa=kappa, drift_tol=drift_tol)


_CONFIG_KEYS = {"d", "n", "epsilon", "V", "a", "c", "kappa"}


def landscape_from_config(doc: dict) -> Landscape:
    """Strict parser for the JSON landscape configuration."""
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ValidationError(f"unknown landscape config keys: {sorted(unknown)}")
    missing = {"d", "n", "epsilon", "V"} - set(doc)
    if missing:
        raise ValidationError(f"landscape config missing keys: {sorted(missing)}")
    return make_landscape(int(doc["d"]), int(doc["n"]), float(doc["epsilon"]),
                          doc["V"], doc.get("a"), doc.get("c"),
                          kappa=doc.get("kappa"))


def grid_coordinates(ls: Landscape) -> list:
    """d meshgrid arrays of shape ls.shape with points k/n."""
    axes = [np.arange(ls.n) / ls.n for _ in range(ls.d)]
    return list(np.meshgrid(*axes, indexing="ij"))


def grid_neighbors(ls: Landscape) -> np.ndarray:
    """(N, 2d) flat indices of x + e_i/n and x - e_i/n per axis."""
    idx = np.arange(ls.n_states).reshape(ls.shape)
    cols = []
    for i in range(ls.d):
        cols.append(np.roll(idx, -1, axis=i).ravel())
        cols.append(np.roll(idx, +1, axis=i).ravel())
    return np.stack(cols, axis=1)


def _eval_field(field, coords, default: float):
    if field is None:
        return np.full_like(coords[0], default)
    out = field(*coords)
    return np.broadcast_to(np.asarray(out, dtype=float), coords[0].shape).copy()


def potential_grid(ls: Landscape) -> np.ndarray:
    return _eval_field(ls.V, grid_coordinates(ls), 0.0)


def drift_residuals(ls: Landscape) -> dict:
    """Residuals of c . grad V and div c, symbolic when possible.

    Finite-difference residuals decay like 1/n^2 for smooth valid inputs;
    symbolic residuals are rounding-level for expression fields.
    """
    coords = grid_coordinates(ls)
    Vg = _eval_field(ls.V, coords, 0.0)
    delta = 1.0 / ls.n
    gradV_fd = [(np.roll(Vg, -1, axis=i) - np.roll(Vg, 1, axis=i)) / (2 * delta)
                for i in range(ls.d)]
    scale = max(float(max(np.abs(g).max() for g in gradV_fd)), 1e-300)
    out = {"grad_scale": scale}
    if ls.c is None:
        out.update(cdotgrad_fd=0.0, divc_fd=0.0, cdotgrad_sym=0.0, divc_sym=0.0,
                   symbolic=True)
        return out
    cg = [_eval_field(ci, coords, 0.0) for ci in ls.c]
    cdot = sum(cg[i] * gradV_fd[i] for i in range(ls.d))
    divc = sum((np.roll(cg[i], -1, axis=i) - np.roll(cg[i], 1, axis=i)) / (2 * delta)
               for i in range(ls.d))
    out["cdotgrad_fd"] = float(np.abs(cdot).max())
    out["divc_fd"] = float(np.abs(divc).max())
    symbolic = isinstance(ls.V, ScalarField) and all(
        isinstance(ci, ScalarField) for ci in ls.c)
    out["symbolic"] = symbolic
    if symbolic:
        gradV = [ls.V.derivative(i)(*coords) for i in range(ls.d)]
        cdot_s = sum(cg[i] * np.broadcast_to(gradV[i], Vg.shape) for i in range(ls.d))
        divc_s = sum(np.broadcast_to(ls.c[i].derivative(i)(*coords), Vg.shape)
                     for i in range(ls.d))
        out["cdotgrad_sym"] = float(np.abs(cdot_s).max())
        out["divc_sym"] = float(np.abs(divc_s).max())
    return out


@dataclass
class GridDiscretization:
    chain: RateChain
    gibbs: Measure                 # exact stationary measure, normalized
    projection_residual: float     # max |div j| after the projection solve
    drift: dict | None


def _weighted_laplacian(ls: Landscape, idx: np.ndarray,
                        edge_weights: list) -> sp.csr_matrix:
    """Conductance Laplacian with per-axis edge weights on (x, x + e_i/n)."""
    N = ls.n_states
    rows, cols, vals = [], [], []
    for i in range(ls.d):
        nxt = np.roll(idx, -1, axis=i).ravel()
        wflat = edge_weights[i].ravel()
        rows += [idx.ravel(), nxt]
        cols += [nxt, idx.ravel()]
        vals += [wflat, wflat]
    A = sp.csr_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    A.sum_duplicates()
    deg = np.asarray(A.sum(axis=1)).ravel()
    return (A - sp.diags(deg)).tocsr()


def build_grid_chain(ls: Landscape) -> GridDiscretization:
    """Discretize the landscape; the Gibbs measure is stationary exactly."""
    coords = grid_coordinates(ls)
    Vg = _eval_field(ls.V, coords, 0.0)
    eps, n, d = ls.epsilon, ls.n, ls.d
    delta = 1.0 / n
    N = ls.n_states
    idx = np.arange(N).reshape(ls.shape)
    Vmin = Vg.min()
    w = np.exp(-(Vg - Vmin) / eps).ravel()

    drift = None
    if ls.c is not None:
        drift = drift_residuals(ls)
        if ls.drift_tol is not None:
            resid = max(drift.get("cdotgrad_sym", drift["cdotgrad_fd"]),
                        drift.get("divc_sym", drift["divc_fd"]))
            if resid > ls.drift_tol * drift["grad_scale"]:
                raise ValidationError(
                    f"drift conditions violated: residual {resid:.3e} "
                    f"exceeds {ls.drift_tol:.1e} of gradient scale")
        elif drift["symbolic"]:
            resid = max(drift["cdotgrad_sym"], drift["divc_sym"])
            if resid > 1e-6 * drift["grad_scale"]:
                raise ValidationError(
                    f"drift conditions violated symbolically: residual {resid:.3e}")

    rows, cols, vals = [], [], []
    currents = []                  # per axis: j0 on edges (x, x + e_i/n)
    mid_weights = []               # midpoint Gibbs weights per axis
    for i in range(d):
        mid = [c.copy() for c in coords]
        mid[i] = mid[i] + delta / 2.0
        a_mid = _eval_field(ls.a[i] if ls.a is not None else None, mid, 1.0)
        if a_mid.min() <= 0:
            raise ValidationError("anisotropy must be uniformly positive")
        dV = np.roll(Vg, -1, axis=i) - Vg
        fwd = eps * n * n * a_mid * np.exp(-dV / (2 * eps))
        bwd = eps * n * n * a_mid * np.exp(dV / (2 * eps))
        nxt = np.roll(idx, -1, axis=i)
        rows += [idx.ravel(), nxt.ravel()]
        cols += [nxt.ravel(), idx.ravel()]
        vals += [fwd.ravel(), bwd.ravel()]
        if ls.c is not None:
            Vmid = _eval_field(ls.V, mid, 0.0)
            wmid = np.exp(-(Vmid - Vmin) / eps)
            c_mid = _eval_field(ls.c[i], mid, 0.0)
            mid_weights.append(wmid)
            currents.append((n / 2.0) * wmid * c_mid)

    proj_residual = 0.0
    if ls.c is not None:
        div0 = np.zeros(ls.shape)
        for i in range(d):
            div0 += currents[i] - np.roll(currents[i], 1, axis=i)
        # project onto exactly divergence-free currents; the Gibbs-weighted
        # Laplacian keeps the correction proportional to the local flow
        # scale, so it never overwhelms the reversible rates
        lap = _weighted_laplacian(ls, idx, mid_weights).tolil()
        lap[0, :] = 0.0
        lap[0, 0] = 1.0
        rhs = div0.ravel().copy()
        rhs[0] = 0.0
        try:
            lu = spla.splu(lap.tocsc())
        except RuntimeError as exc:
            raise SolverFailure(f"current projection failed: {exc}") from exc
        psi = lu.solve(rhs)
        for i in range(d):
            grad_i = (np.roll(psi.reshape(ls.shape), -1, axis=i)
                      - psi.reshape(ls.shape))
            currents[i] = currents[i] - mid_weights[i] * grad_i
        div = np.zeros(ls.shape)
        for i in range(d):
            div += currents[i] - np.roll(currents[i], 1, axis=i)
        flow_scale = max(max(np.abs(j).max() for j in currents), 1e-300)
        proj_residual = float(np.abs(div).max() / flow_scale)
        if proj_residual > 1e-9:
            raise SolverFailure(
                f"divergence-free projection residual {proj_residual:.3e}")
        # add the antisymmetric drift rates on top of the reversible part
        axis_offset = 0
        for i in range(d):
            jflat = currents[i].ravel()
            nxt = np.roll(idx, -1, axis=i).ravel()
            vals[axis_offset] = vals[axis_offset] + jflat / w
            vals[axis_offset + 1] = vals[axis_offset + 1] - jflat / w[nxt]
            axis_offset += 2

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    if vals.min() < 0:
        raise NegativeRate(
            f"drift correction exceeds the symmetric rate (min {vals.min():.3e}); "
            "refine the grid or reduce |c|")
    entries = list(zip(rows.tolist(), cols.tolist(), vals.tolist()))
    chain = build_chain(N, entries)
    return GridDiscretization(chain=chain, gibbs=Measure(w / w.sum()),
                              projection_residual=proj_residual, drift=drift)


def discretize(ls: Landscape) -> RateChain:
    """Nearest-neighbor chain whose stationary measure is the Gibbs one."""
    return build_grid_chain(ls).chain


@dataclass
class CriticalPoint:
    index: int                     # flat grid index
    coords: tuple
    kind: str                      # "minimum" | "saddle" | "other"
    value: float                   # V at the point
    hessian: np.ndarray
    mu_neg: float | None = None    # saddles: |negative eigenvalue| of hess.a
    ties: int = 0                  # saddles: minimax bottleneck ties


def _hessian_fd(Vg: np.ndarray, flat: int, n: int, d: int) -> np.ndarray:
    delta = 1.0 / n
    base = np.array(np.unravel_index(flat, Vg.shape))

    def at(off):
        return float(Vg[tuple((base + off) % n)])

    H = np.zeros((d, d))
    for i in range(d):
        ei = np.zeros(d, dtype=int)
        ei[i] = 1
        H[i, i] = (at(ei) - 2 * at(ei * 0) + at(-ei)) / delta ** 2
        for j in range(i + 1, d):
            ej = np.zeros(d, dtype=int)
            ej[j] = 1
            H[i, j] = H[j, i] = (at(ei + ej) - at(ei - ej) - at(-ei + ej)
                                 + at(-ei - ej)) / (4 * delta ** 2)
    return H


def _local_extrema(Vg: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Strict local minima and maxima over the 3^d - 1 neighborhood."""
    lo = np.ones(Vg.shape, dtype=bool)
    hi = np.ones(Vg.shape, dtype=bool)
    offsets = np.array(np.meshgrid(*([[-1, 0, 1]] * d), indexing="ij")).reshape(d, -1).T
    for off in offsets:
        if not off.any():
            continue
        shifted = np.roll(Vg, tuple(-off), axis=tuple(range(d)))
        lo &= Vg < shifted
        hi &= Vg > shifted
    return np.nonzero(lo.ravel())[0], np.nonzero(hi.ravel())[0]


def minimax_saddle(Vflat: np.ndarray, nbrs: np.ndarray, src: int, dst: int,
                   tie_tol: float = 1e-9) -> tuple[float, int, int]:
    """Communication height between src and dst, the arg-max grid point of
    the optimal path, and the number of tying bottleneck nodes."""
    N = Vflat.size
    best = np.full(N, np.inf)
    best[src] = Vflat[src]
    prev = np.full(N, -1, dtype=np.int64)
    heap = [(best[src], src)]
    seen = np.zeros(N, dtype=bool)
    while heap:
        k, x = heapq.heappop(heap)
        if seen[x]:
            continue
        seen[x] = True
        if x == dst:
            break
        for y in nbrs[x]:
            nk = max(k, Vflat[y])
            if nk < best[y]:
                best[y] = nk
                prev[y] = x
                heapq.heappush(heap, (nk, int(y)))
    if not seen[dst]:
        raise NoSaddle("no path between the minima")
    # walk the optimal path and pick its highest point
    path = [dst]
    while path[-1] != src:
        path.append(int(prev[path[-1]]))
    heights = Vflat[path]
    top = int(np.argmax(heights))
    height = float(heights[top])
    ties = int(np.sum(np.abs(heights - height) <= tie_tol * max(1.0, abs(height)))) - 1
    return height, int(path[top]), ties


def find_critical_points(ls: Landscape,
                         degenerate_tol: float = 1e-8) -> list[CriticalPoint]:
    """Grid minima and maxima plus the minimax saddles between minima."""
    coords = grid_coordinates(ls)
    Vg = _eval_field(ls.V, coords, 0.0)
    Vflat = Vg.ravel()
    nbrs = grid_neighbors(ls)
    minima, maxima = _local_extrema(Vg, ls.d)

    def coords_of(flat):
        return tuple(float(c) / ls.n for c in np.unravel_index(flat, ls.shape))

    def a_at(flat):
        pt = [np.asarray(x) for x in coords_of(flat)]
        if ls.a is None:
            return np.ones(ls.d)
        return np.array([float(_eval_field(ai, pt, 1.0)) for ai in ls.a])

    def check_eigs(H, flat):
        eigs = np.linalg.eigvalsh(H)
        if np.abs(eigs).min() < degenerate_tol:
            raise DegenerateCritical(
                f"Hessian eigenvalue {np.abs(eigs).min():.3e} at grid point "
                f"{coords_of(flat)} is below threshold {degenerate_tol:.1e}")
        return eigs

    points: dict[int, CriticalPoint] = {}
    for m in minima:
        H = _hessian_fd(Vg, int(m), ls.n, ls.d)
        check_eigs(H, m)
        points[int(m)] = CriticalPoint(int(m), coords_of(m), "minimum",
                                       float(Vflat[m]), H)
    saddle_idx = set()
    mins = sorted(int(m) for m in minima)
    for ia in range(len(mins)):
        for ib in range(ia + 1, len(mins)):
            height, sad, ties = minimax_saddle(Vflat, nbrs, mins[ia], mins[ib])
            if sad in points:
                continue
            H = _hessian_fd(Vg, sad, ls.n, ls.d)
            eigs = check_eigs(H, sad)
            mu_neg = None
            if int(np.sum(eigs < 0)) == 1:
                M = H @ np.diag(a_at(sad))
                ev = np.linalg.eigvals(M)
                neg = ev[ev.real < 0]
                if len(neg) == 1 and abs(neg[0].imag) <= 1e-8 * max(1.0, abs(neg[0].real)):
                    mu_neg = float(-neg[0].real)
            points[sad] = CriticalPoint(sad, coords_of(sad), "saddle",
                                        float(Vflat[sad]), H, mu_neg=mu_neg,
                                        ties=ties)
            saddle_idx.add(sad)
    for m in maxima:
        m = int(m)
        if m in points:
            continue
        H = _hessian_fd(Vg, m, ls.n, ls.d)
        check_eigs(H, m)
        points[m] = CriticalPoint(m, coords_of(m), "other", float(Vflat[m]), H)
    return sorted(points.values(), key=lambda p: p.index)


@dataclass
class KramersPrediction:
    Lambda: float
    prefactor: float
    predicted_time: float
    theta: float


def kramers_prefactor(hess_min: np.ndarray, hess_saddle: np.ndarray,
                      a_saddle: np.ndarray | None = None) -> tuple[float, float]:
    """(prefactor, mu) from the curvatures at the minimum and the saddle."""
    hess_min = np.atleast_2d(np.asarray(hess_min, dtype=float))
    hess_saddle = np.atleast_2d(np.asarray(hess_saddle, dtype=float))
    d = hess_min.shape[0]
    if a_saddle is None:
        a_saddle = np.ones(d)
    M = hess_saddle @ np.diag(np.asarray(a_saddle, dtype=float))
    ev = np.linalg.eigvals(M)
    neg = ev[ev.real < 0]
    if len(neg) != 1:
        raise NotASaddle(
            f"hess.a at the saddle has {len(neg)} negative eigenvalues, expected 1")
    mu = float(-neg[0].real)
    det_min = float(np.linalg.det(hess_min))
    det_sad = float(np.linalg.det(hess_saddle))
    if det_min <= 0:
        raise NotAMinimum("Hessian at the minimum is not positive definite")
    if -det_sad <= 0:
        raise NotASaddle("saddle Hessian does not have signature (1, d-1)")
    p = (2.0 * np.pi / mu) * np.sqrt(-det_sad) / np.sqrt(det_min)
    return p, mu


def kramers_prediction(ls: Landscape, m1: CriticalPoint,
                       sigma: CriticalPoint) -> KramersPrediction:
    """Transition-time prediction p exp(Lambda/epsilon) from m1 over sigma."""
    if m1.kind != "minimum":
        raise NotAMinimum(f"{m1.coords} is not a minimum")
    if sigma.kind != "saddle":
        raise NotASaddle(f"{sigma.coords} is not a saddle")
    Lam = sigma.value - m1.value
    if Lam <= 0:
        raise NonpositiveBarrier(f"barrier {Lam} is not positive")
    a_sad = np.ones(ls.d)
    if ls.a is not None:
        pt = [np.asarray(x) for x in sigma.coords]
        a_sad = np.array([float(_eval_field(ai, pt, 1.0)) for ai in ls.a])
    p, _ = kramers_prefactor(m1.hessian, sigma.hessian, a_sad)
    theta = float(np.exp(Lam / ls.epsilon))
    return KramersPrediction(Lambda=float(Lam), prefactor=float(p),
                             predicted_time=float(p) * theta, theta=theta)


def exact_transition_time(chain: RateChain, x: int, target) -> float:
    """E_x[H_target] by the Poisson solve with unit running cost."""
    target = StateSet.coerce(target, chain.n_states)
    u = solve_poisson(chain, target, b=0.0, f=1.0)
    return float(u[int(x)])


def sublevel_component(Vflat: np.ndarray, nbrs: np.ndarray, level: float,
                       seed: int) -> np.ndarray:
    """Flat indices of the connected sublevel component {V < level} at seed."""
    if Vflat[seed] >= level:
        raise ValidationError("seed point is not below the level")
    inside = Vflat < level
    visited = np.zeros(Vflat.size, dtype=bool)
    stack = [int(seed)]
    visited[seed] = True
    while stack:
        x = stack.pop()
        for y in nbrs[x]:
            if inside[y] and not visited[y]:
                visited[y] = True
                stack.append(int(y))
    return np.nonzero(visited)[0]


@dataclass
class KramersRow:
    epsilon: float
    exact: float
    predicted: float
    ratio: float
    regime: str                    # "asymptotic" | "large-epsilon"


def kramers_sweep(ls: Landscape, epsilons: Sequence[float],
                  threads: int = 1) -> list[KramersRow]:
    """Exact versus predicted transition times across temperatures.

    Requires a double-well landscape: exactly two local minima.  The walk
    starts at the shallower minimum; the target is the sublevel
    neighborhood of the other minimum with margin kappa (default 10% of
    the barrier).  For epsilon not small against the barrier the
    asymptotic prediction is not meant to apply and the row is flagged.
    """
    cps = find_critical_points(ls)
    minima = [p for p in cps if p.kind == "minimum"]
    if len(minima) != 2:
        raise ValidationError(
            f"transition-time sweep needs a double well, found {len(minima)} minima")
    lo, hi = sorted(minima, key=lambda p: (p.value, p.index))
    m1, m2 = hi, lo                # start in the shallower well
    saddles = [p for p in cps if p.kind == "saddle"]
    if not saddles:
        raise NoSaddle("no saddle between the minima")
    sigma = min(saddles, key=lambda p: p.value)
    Lam = sigma.value - m1.value
    kap = ls.kappa if ls.kappa is not None else 0.1 * Lam
    Vflat = potential_grid(ls).ravel()
    nbrs = grid_neighbors(ls)
    target = sublevel_component(Vflat, nbrs, sigma.value - kap, m2.index)

    def one(eps: float) -> KramersRow:
        lse = replace(ls, epsilon=float(eps))
        chain = build_grid_chain(lse).chain
        exact = exact_transition_time(chain, m1.index, target)
        pred = kramers_prediction(lse, m1, sigma)
        regime = "asymptotic" if eps <= Lam / 4.0 else "large-epsilon"
        return KramersRow(epsilon=float(eps), exact=exact,
                          predicted=pred.predicted_time,
                          ratio=exact / pred.predicted_time, regime=regime)

    return pmap(one, list(epsilons), threads=threads)
