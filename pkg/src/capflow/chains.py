"""Finite continuous-time Markov chains as sparse rate matrices.

Conventions used throughout the package:

* A chain on states {0, ..., n-1} is a set of off-diagonal jump rates
  r(x, y) >= 0; the generator acts as (Lf)(x) = sum_y r(x,y) (f(y) - f(x))
  and lambda(x) = sum_y r(x,y) is the total jump rate.
* The stationary measure mu solves mu L = 0; it is unique and strictly
  positive for irreducible chains.
* The stationary edge flow mu(x) r(x,y) splits into a symmetric
  conductance s(x,y) = (mu(x) r(x,y) + mu(y) r(y,x)) / 2 and an
  antisymmetric current j(x,y) = (mu(x) r(x,y) - mu(y) r(y,x)) / 2.
  Stationarity of mu is equivalent to sum_y j(x,y) = 0 for every x.
* The adjoint (time-reversed) chain has rates r*(x,y) = mu(y) r(y,x) / mu(x)
  and shares the stationary measure mu.

Discrete-time walks enter through their continuous-time lift with rates
equal to the one-step probabilities.  With stationary weights M and total
rates lambda, capacities satisfy

    Cap(A, B) = sum_{x in A} M(x) lambda(x) P_x[H_B < H_A^+],

which for lambda == 1 is the discrete-time escape-probability formula, so
both conventions give the same number after this normalization.

Sector constant.  Write the stationary bilinear form of the generator as
int (Lf) g dmu = -D(f,g) + B(f,g), where D is the symmetric Dirichlet form
D(f,g) = (1/2) sum_{x,y} s(x,y) (f(y)-f(x)) (g(y)-g(x)) and B is
antisymmetric.  On the space orthogonal to constants B(f,g) = <T f, g>_D
for a D-skew operator T, and the smallest constant with

    ( int (Lf) g dmu )^2  <=  C0 D(f,f) D(g,g)

is C0 = 1 + ||T||_D^2.  The norm is computed as the largest singular value
of K^{+1/2} J K^{+1/2}, where K is the conductance Laplacian (weights s)
and J the current matrix; see :func:`sector_constant`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .errors import (
    EmptyTargetSet,
    NegativeRate,
    NotIrreducible,
    NotStationary,
    SolverFailure,
    ValidationError,
)

# Direct solves are used everywhere; at the scales this package targets
# (up to ~1e5 states) they are exact to working precision.
_GTH_MAX_STATES = 1500


@dataclass(eq=True)
class StateSet:
    """An (immutable) subset of a chain's states."""

    members: frozenset

    def __init__(self, members: Iterable[int]):
        self.members = frozenset(int(m) for m in members)

    @property
    def indices(self) -> np.ndarray:
        return np.fromiter(sorted(self.members), dtype=np.int64, count=len(self.members))

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(sorted(self.members))

    def __contains__(self, x):
        return int(x) in self.members

    @staticmethod
    def coerce(obj, n_states: int | None = None) -> "StateSet":
        s = obj if isinstance(obj, StateSet) else StateSet(obj)
        if n_states is not None:
            bad = [m for m in s.members if m < 0 or m >= n_states]
            if bad:
                raise ValidationError(f"state indices out of range: {sorted(bad)[:5]}")
        return s


@dataclass
class RateChain:
    """Irreducible continuous-time chain given by off-diagonal rates."""

    n_states: int
    rates: sp.csr_matrix          # off-diagonal, nonnegative, zero diagonal
    state_labels: list | None = None
    total_rates: np.ndarray = field(init=False)

    def __post_init__(self):
        self.total_rates = np.asarray(self.rates.sum(axis=1)).ravel()

    def generator(self) -> sp.csr_matrix:
        """L = R - diag(lambda) as a sparse matrix."""
        return (self.rates - sp.diags(self.total_rates)).tocsr()

    def apply_generator(self, f: np.ndarray) -> np.ndarray:
        return self.rates @ f - self.total_rates * f


@dataclass
class Measure:
    """Positive weights on states; ``normalized`` means they sum to one."""

    weights: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights <= 0):
            raise ValidationError("measure weights must be strictly positive")
        if self.normalized and abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValidationError("normalized measure must sum to 1 within 1e-12")

    def normalize(self) -> "Measure":
        if self.normalized:
            return self
        return Measure(self.weights / self.weights.sum(), normalized=True)

    def total(self) -> float:
        return float(self.weights.sum())


@dataclass
class EdgeDecomposition:
    """Stationary measure plus symmetric / antisymmetric edge split.

    ``s`` and ``j`` are stored on the same canonical sparsity pattern so
    flow constructions can mix them entry by entry.
    """

    mu: Measure
    s: sp.csr_matrix              # conductances, exactly symmetric
    j: sp.csr_matrix              # currents, exactly antisymmetric
    lam: np.ndarray               # total jump rates of the underlying chain

    @property
    def n_states(self) -> int:
        return self.s.shape[0]

    def s_inverse(self) -> sp.csr_matrix:
        """1/s on the conductance pattern (all stored s entries are > 0)."""
        inv = self.s.copy()
        inv.data = 1.0 / inv.data
        return inv


@dataclass
class SamplePath:
    """A simulated trajectory: ``states[i]`` is occupied on [times[i], times[i+1])."""

    times: np.ndarray             # strictly increasing, times[0] == 0
    states: np.ndarray
    horizon: float
    seed: int


def build_chain(n: int, entries: Sequence[tuple], state_labels=None) -> RateChain:
    """Assemble a validated chain from (from, to, rate) triples.

    Duplicate entries are summed.  The positive-rate digraph must be
    strongly connected.
    """
    if n < 1:
        raise ValidationError("chain needs at least one state")
    rows, cols, vals = [], [], []
    for x, y, r in entries:
        x, y, r = int(x), int(y), float(r)
        if x == y:
            raise ValidationError(f"self-rate at state {x} is not allowed")
        if not (0 <= x < n and 0 <= y < n):
            raise ValidationError(f"edge ({x}, {y}) outside 0..{n - 1}")
        if r < 0:
            raise NegativeRate(f"rate({x}, {y}) = {r} is negative")
        rows.append(x)
        cols.append(y)
        vals.append(r)
    R = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    R.sum_duplicates()
    R.eliminate_zeros()
    _check_irreducible(R, n)
    return RateChain(n, R, state_labels)


def _check_irreducible(R: sp.csr_matrix, n: int) -> None:
    if n == 1:
        return
    ncomp, _ = connected_components(R, directed=True, connection="strong")
    if ncomp != 1:
        raise NotIrreducible(
            f"positive-rate graph has {ncomp} strongly connected components"
        )


def load_chain(path) -> RateChain:
    """Read the JSON chain format {"n":…, "rates":[[x,y,r],…], "labels":…}."""
    with open(path) as fh:
        doc = json.load(fh)
    allowed = {"n", "rates", "labels"}
    unknown = set(doc) - allowed
    if unknown:
        raise ValidationError(f"unknown keys in chain file: {sorted(unknown)}")
    return build_chain(int(doc["n"]), doc["rates"], doc.get("labels"))


def save_chain(chain: RateChain, path) -> None:
    coo = chain.rates.tocoo()
    doc = {
        "n": chain.n_states,
        "rates": [[int(i), int(j), float(v)] for i, j, v in zip(coo.row, coo.col, coo.data)],
    }
    if chain.state_labels is not None:
        doc["labels"] = list(chain.state_labels)
    with open(path, "w") as fh:
        json.dump(doc, fh)


def _gth_stationary(R_dense: np.ndarray) -> np.ndarray:
    """Stationary vector by state reduction (no subtractions, so the tiny
    entries of stiff Gibbs-type measures keep full relative accuracy)."""
    A = np.array(R_dense, dtype=float)
    n = A.shape[0]
    for k in range(n - 1, 0, -1):
        s = A[k, :k].sum()
        if s <= 0.0:
            raise SolverFailure("state reduction hit a zero pivot (chain reducible?)")
        A[:k, k] /= s
        A[:k, :k] += np.outer(A[:k, k], A[k, :k])
    x = np.zeros(n)
    x[0] = 1.0
    for k in range(1, n):
        x[k] = x[:k] @ A[:k, k]
    return x / x.sum()


def _sparse_stationary(chain: RateChain) -> np.ndarray:
    """Direct sparse solve of mu L = 0 with a normalization row in place of
    one (redundant) balance equation, plus iterative refinement."""
    n = chain.n_states
    A = chain.generator().transpose().tocoo()
    keep = A.row < n - 1
    rows = np.concatenate([A.row[keep], np.full(n, n - 1)])
    cols = np.concatenate([A.col[keep], np.arange(n)])
    vals = np.concatenate([A.data[keep], np.ones(n)])
    M = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
    b = np.zeros(n)
    b[n - 1] = 1.0
    try:
        lu = spla.splu(M)
    except RuntimeError as exc:
        raise SolverFailure(f"stationary solve failed: {exc}") from exc
    x = lu.solve(b)
    for _ in range(2):
        x = x + lu.solve(b - M @ x)
    if x.min() <= 0:
        raise SolverFailure("stationary solve produced nonpositive entries")
    return x / x.sum()


def stationary_measure(chain: RateChain) -> Measure:
    """The unique normalized solution of mu L = 0.

    Small chains go through the cancellation-free state-reduction
    algorithm; larger ones use a sparse direct solve with refinement.
    The residual ||mu L||_inf is verified against the rate scale.
    """
    n = chain.n_states
    if n == 1:
        return Measure(np.ones(1))
    if n <= _GTH_MAX_STATES:
        mu = _gth_stationary(chain.rates.toarray())
    else:
        mu = _sparse_stationary(chain)
    res = np.abs(chain.generator().T @ mu).max()
    scale = max(1.0, chain.total_rates.max()) * np.abs(mu).max()
    if res > 1e-11 * scale:
        raise SolverFailure(f"stationary residual {res:.3e} exceeds tolerance")
    return Measure(mu)


def adjoint_chain(chain: RateChain, mu: Measure) -> RateChain:
    """Time reversal: r*(x,y) = mu(y) r(y,x) / mu(x)."""
    w = mu.weights
    Rs = sp.diags(1.0 / w) @ chain.rates.transpose().tocsr() @ sp.diags(w)
    return RateChain(chain.n_states, Rs.tocsr(), chain.state_labels)


def symmetrized_chain(decomp: EdgeDecomposition) -> RateChain:
    """The reversible chain with rates s(x,y)/mu(x); shares mu."""
    w = decomp.mu.weights
    S = decomp.s.copy()
    S.eliminate_zeros()
    R = (sp.diags(1.0 / w) @ S).tocsr()
    return RateChain(decomp.n_states, R)


def edge_decomposition(chain: RateChain, mu: Measure) -> EdgeDecomposition:
    """Split mu(x) r(x,y) into conductances and currents.

    Raises NotStationary when the currents fail to be divergence free,
    which is the signature of mu not being the stationary measure.
    """
    w = mu.weights
    if w.shape[0] != chain.n_states:
        raise ValidationError("measure size does not match the chain")
    n = chain.n_states
    F = chain.rates.multiply(w[:, None]).tocoo()
    # shared canonical pattern: union of the flow pattern and its transpose
    # (plain sparse arithmetic would prune exactly cancelling currents)
    kf = F.row.astype(np.int64) * n + F.col.astype(np.int64)
    kt = F.col.astype(np.int64) * n + F.row.astype(np.int64)
    keys = np.union1d(kf, kt)
    vf = np.zeros(keys.size)
    vf[np.searchsorted(keys, kf)] = F.data
    vt = np.zeros(keys.size)
    vt[np.searchsorted(keys, kt)] = F.data
    rows = (keys // n).astype(np.int32)
    cols = (keys % n).astype(np.int32)
    S = sp.csr_matrix((0.5 * (vf + vt), (rows, cols)), shape=(n, n))
    J = sp.csr_matrix((0.5 * (vf - vt), (rows, cols)), shape=(n, n))
    S.sort_indices()
    J.sort_indices()
    if not (np.array_equal(S.indptr, J.indptr) and np.array_equal(S.indices, J.indices)):
        raise SolverFailure("conductance and current patterns diverged")
    div = np.asarray(J.sum(axis=1)).ravel()
    scale = (w * chain.total_rates).max()
    worst = np.abs(div).max()
    if worst > 1e-9 * scale:
        raise NotStationary(
            f"current divergence {worst:.3e} exceeds 1e-9 of flow scale {scale:.3e}"
        )
    return EdgeDecomposition(mu=mu, s=S, j=J, lam=chain.total_rates.copy())


def _eval_on(values, idx: np.ndarray, n: int) -> np.ndarray:
    """Evaluate a scalar / array / callable prescription on given states."""
    if callable(values):
        return np.array([float(values(int(i))) for i in idx])
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        return np.full(len(idx), float(arr))
    if arr.shape[0] != n:
        raise ValidationError("value array must cover all states")
    return arr[idx]


def solve_poisson(chain: RateChain, C, b=0.0, f=0.0) -> np.ndarray:
    """Solve L u = -f off C with u = b on C.

    Probabilistically u(x) = E_x[ b(X_{H_C}) + int_0^{H_C} f(X_t) dt ].
    ``b`` and ``f`` may be scalars, arrays over all states, or callables.
    """
    n = chain.n_states
    C = StateSet.coerce(C, n)
    if len(C) == 0:
        raise EmptyTargetSet("boundary set C must be nonempty")
    cidx = C.indices
    mask = np.zeros(n, dtype=bool)
    mask[cidx] = True
    oidx = np.nonzero(~mask)[0]
    u = np.zeros(n)
    u[cidx] = _eval_on(b, cidx, n)
    if oidx.size == 0:
        return u
    L = chain.generator()
    Loo = L[oidx][:, oidx].tocsc()
    fo = _eval_on(f, oidx, n)
    rhs = -fo - L[oidx][:, cidx] @ u[cidx]
    try:
        lu = spla.splu(Loo)
    except RuntimeError as exc:
        raise SolverFailure(f"Poisson solve failed: {exc}") from exc
    v = lu.solve(rhs)
    v = v + lu.solve(rhs - Loo @ v)
    u[oidx] = v
    res = np.abs((L @ u)[oidx] + fo).max()
    scale = max(np.abs(fo).max() if fo.size else 0.0,
                (chain.total_rates * np.abs(u)).max(), 1e-300)
    if res > 1e-10 * scale:
        raise SolverFailure(f"Poisson residual {res:.3e} exceeds 1e-10 relative")
    return u


def simulate(chain: RateChain, x0: int, horizon: float, seed: int) -> SamplePath:
    """Exact jump-chain simulation (exponential holds, embedded jumps).

    All randomness comes from a counter-based generator keyed by ``seed``,
    so equal seeds give identical paths.
    """
    if horizon < 0:
        raise ValidationError("horizon must be nonnegative")
    x0 = int(x0)
    if not (0 <= x0 < chain.n_states):
        raise ValidationError(f"start state {x0} out of range")
    rng = np.random.Generator(np.random.Philox(seed))
    R = chain.rates
    lam = chain.total_rates
    indptr, indices, data = R.indptr, R.indices, R.data
    times = [0.0]
    states = [x0]
    t, x = 0.0, x0
    while True:
        rate = lam[x]
        if rate <= 0.0:
            break
        t += rng.exponential(1.0 / rate)
        if t >= horizon:
            break
        lo, hi = indptr[x], indptr[x + 1]
        p = data[lo:hi] / rate
        x = int(indices[lo:hi][rng.choice(hi - lo, p=p)])
        times.append(t)
        states.append(x)
    return SamplePath(np.array(times), np.array(states, dtype=np.int64),
                      float(horizon), int(seed))


def occupation_fractions(path: SamplePath, n_states: int) -> np.ndarray:
    """Fraction of [0, horizon] spent in each state."""
    t = np.append(path.times, path.horizon)
    dur = np.diff(t)
    out = np.zeros(n_states)
    np.add.at(out, path.states, dur)
    if path.horizon > 0:
        out /= path.horizon
    else:
        out[path.states[0]] = 1.0
    return out


def sector_constant(decomp: EdgeDecomposition) -> float:
    """Smallest C0 with (int (Lf) g dmu)^2 <= C0 D(f,f) D(g,g).

    Computed as 1 + sigma_max(K^{+1/2} J K^{+1/2})^2 where K is the
    conductance Laplacian and J the current matrix (see module docs).
    Dense eigenvalue computation; intended for desk-scale chains.
    """
    S = decomp.s.toarray()
    J = decomp.j.toarray()
    if np.abs(J).max() == 0.0:
        return 1.0
    K = np.diag(S.sum(axis=1)) - S
    try:
        w, U = np.linalg.eigh(K)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure(f"eigendecomposition failed: {exc}") from exc
    tol = w.max() * K.shape[0] * np.finfo(float).eps * 10
    pos = w > tol
    Kph = (U[:, pos] * (1.0 / np.sqrt(w[pos]))) @ U[:, pos].T
    G = Kph @ J @ Kph
    try:
        smax = np.linalg.norm(G, 2)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure(f"singular value computation failed: {exc}") from exc
    return 1.0 + float(smax) ** 2
