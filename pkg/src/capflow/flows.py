"""Flow spaces and the Dirichlet / Thomson variational certificates.

Antisymmetric edge functions ("flows") live on the support of the
conductances s.  For a scalar function f two canonical flows exist:

    Psi_f(x,y) = s(x,y) (f(y) - f(x))
    Phi_f(x,y) = s(x,y) (f(y) - f(x)) - j(x,y) (f(x) + f(y))

The midpoint coupling to the current j is what makes the divergence
identity sum_y Phi_f(x,y) = mu(x) (L* f)(x) hold with zero
discretization error; everything below rests on it.

The flow inner product is <phi, psi> = (1/2) sum_{s>0} phi psi / s, and
<Psi_h, Psi_h> = Cap(A,B) for the equilibrium potential h.  Feasibility:
a flow belongs to F_gamma when its divergence vanishes off A u B and its
total divergence over A equals gamma.  With f = alpha on A and 0 on B,

    <Phi_f - phi, Psi_h> = gamma + alpha Cap(A,B),

which yields the two variational principles:

* Dirichlet (upper bounds):  Cap = inf over f in C_{1,0}, phi in F_0 of
  <Phi_f - phi, Phi_f - phi>, attained at f = (h + h*)/2 and
  phi = Phi_f - Psi_h.
* Thomson (lower bounds):  1/Cap = inf over f in C_{0,0}, phi in F_1,
  attained at f = (h - h*)/(2 Cap) and phi = Phi_f - Psi_{h/Cap}.

No numerical minimizer is provided: the optimizers are in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .captheory import Potentials, dirichlet_energy, equilibrium_potentials, _check_pair
from .chains import EdgeDecomposition, RateChain, StateSet
from .errors import InfeasibleInputs, SupportMismatch, ValidationError

FEAS_TOL = 1e-9
BOUNDARY_RTOL = 1e-9


class EdgeFlow:
    """Antisymmetric edge function stored as a sparse matrix."""

    __slots__ = ("values",)

    def __init__(self, values: sp.csr_matrix, _skip_check: bool = False):
        values = values.tocsr()
        if not _skip_check:
            asym = values + values.transpose()
            if asym.nnz and np.abs(asym.data).max() > 1e-12 * max(
                np.abs(values.data).max() if values.nnz else 0.0, 1e-300
            ):
                raise ValidationError("flow matrix is not antisymmetric")
            values = ((values - values.transpose()) * 0.5).tocsr()
        values.sort_indices()
        self.values = values

    @classmethod
    def from_edges(cls, n: int, entries) -> "EdgeFlow":
        """Build from (x, y, value) triples; duplicate edges are summed."""
        rows, cols, vals = [], [], []
        for x, y, v in entries:
            x, y, v = int(x), int(y), float(v)
            if x == y:
                raise ValidationError("flow entries must join distinct states")
            rows += [x, y]
            cols += [y, x]
            vals += [v, -v]
        M = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        M.sum_duplicates()
        return cls(M, _skip_check=True)

    @classmethod
    def zero(cls, n: int) -> "EdgeFlow":
        return cls(sp.csr_matrix((n, n)), _skip_check=True)

    @property
    def n_states(self) -> int:
        return self.values.shape[0]

    def divergence(self) -> np.ndarray:
        return np.asarray(self.values.sum(axis=1)).ravel()

    def scaled(self, c: float) -> "EdgeFlow":
        return EdgeFlow(self.values * float(c), _skip_check=True)

    def __add__(self, other: "EdgeFlow") -> "EdgeFlow":
        return EdgeFlow((self.values + other.values).tocsr(), _skip_check=True)

    def __sub__(self, other: "EdgeFlow") -> "EdgeFlow":
        return EdgeFlow((self.values - other.values).tocsr(), _skip_check=True)


@dataclass
class FlowFeasibility:
    divergence_residual: float    # max |div phi| off A u B
    flux_A: float                 # total divergence over A
    gamma_target: float
    member: bool


@dataclass
class Certificate:
    value: float
    kind: str                     # "dirichlet-upper" | "thomson-reciprocal"
    feasibility: FlowFeasibility
    boundary_ok: bool


def make_flows(decomp: EdgeDecomposition, f: np.ndarray) -> tuple[EdgeFlow, EdgeFlow]:
    """Build (Psi_f, Phi_f) on the conductance pattern."""
    f = np.asarray(f, dtype=float)
    S, J = decomp.s, decomp.j
    coo = S.tocoo()
    df = f[coo.col] - f[coo.row]
    sf = f[coo.col] + f[coo.row]
    psi_vals = coo.data * df
    phi_vals = psi_vals - J.data * sf      # identical patterns by construction
    n = decomp.n_states
    psi = sp.csr_matrix((psi_vals, S.indices.copy(), S.indptr.copy()), shape=(n, n))
    phi = sp.csr_matrix((phi_vals, S.indices.copy(), S.indptr.copy()), shape=(n, n))
    return EdgeFlow(psi, _skip_check=True), EdgeFlow(phi, _skip_check=True)


def _check_support(decomp: EdgeDecomposition, flow: EdgeFlow) -> None:
    P = flow.values.copy()
    P.data = np.abs(P.data)
    Spat = decomp.s.copy()
    Spat.data = np.ones_like(Spat.data)
    off = P - P.multiply(Spat)
    if off.nnz and np.abs(off.data).max() > 0:
        raise SupportMismatch("flow lives on an edge with zero conductance")


def flow_inner(decomp: EdgeDecomposition, phi: EdgeFlow, psi: EdgeFlow) -> float:
    """<phi, psi> = (1/2) sum over edges with s > 0 of phi psi / s."""
    _check_support(decomp, phi)
    _check_support(decomp, psi)
    prod = phi.values.multiply(psi.values)
    if prod.nnz == 0:
        return 0.0
    val = prod.multiply(decomp.s_inverse())
    return 0.5 * float(val.sum())


def flow_norm2(decomp: EdgeDecomposition, phi: EdgeFlow) -> float:
    return flow_inner(decomp, phi, phi)


def flow_feasibility(phi: EdgeFlow, A, B, gamma: float,
                     tol: float = FEAS_TOL) -> FlowFeasibility:
    """Report divergence off A u B and the flux through A against gamma."""
    n = phi.n_states
    A = StateSet.coerce(A, n)
    B = StateSet.coerce(B, n)
    if A.members & B.members:
        raise ValidationError("A and B overlap")
    div = phi.divergence()
    inside = np.zeros(n, dtype=bool)
    inside[A.indices] = True
    inside[B.indices] = True
    resid = float(np.abs(div[~inside]).max()) if (~inside).any() else 0.0
    flux = float(div[A.indices].sum())
    # scale for the tolerance: largest absolute row mass of the flow
    P = phi.values.copy()
    if P.nnz:
        P.data = np.abs(P.data)
        scale = max(1.0, float(np.asarray(P.sum(axis=1)).max()))
    else:
        scale = 1.0
    member = resid <= tol * scale and abs(flux - gamma) <= tol * scale
    return FlowFeasibility(divergence_residual=resid, flux_A=flux,
                           gamma_target=float(gamma), member=member)


def _check_boundary(f: np.ndarray, A: StateSet, B: StateSet,
                    alpha: float, beta: float) -> bool:
    scale = max(1.0, np.abs(f).max())
    ok_a = np.abs(f[A.indices] - alpha).max() <= BOUNDARY_RTOL * scale if len(A) else True
    ok_b = np.abs(f[B.indices] - beta).max() <= BOUNDARY_RTOL * scale if len(B) else True
    return bool(ok_a and ok_b)


def bilinear_identity_residual(chain_decomp: EdgeDecomposition, f: np.ndarray,
                               alpha: float, gamma: float, phi: EdgeFlow,
                               h: np.ndarray, A, B) -> float:
    """|<Phi_f - phi, Psi_h> - (gamma + alpha Cap)| for feasible inputs.

    ``h`` must be the equilibrium potential of (A, B); the capacity is
    recovered from it as <Psi_h, Psi_h>.
    """
    n = chain_decomp.n_states
    A = StateSet.coerce(A, n)
    B = StateSet.coerce(B, n)
    f = np.asarray(f, dtype=float)
    if not _check_boundary(f, A, B, alpha, 0.0):
        raise InfeasibleInputs("f is not constant alpha on A and 0 on B")
    feas = flow_feasibility(phi, A, B, gamma)
    if not feas.member:
        raise InfeasibleInputs(
            f"flow not in F_{gamma!r}: divergence residual "
            f"{feas.divergence_residual!r}, flux {feas.flux_A!r}"
        )
    psi_h, _ = make_flows(chain_decomp, h)
    cap = flow_inner(chain_decomp, psi_h, psi_h)
    _, phi_f = make_flows(chain_decomp, f)
    lhs = flow_inner(chain_decomp, phi_f - phi, psi_h)
    return abs(lhs - (gamma + alpha * cap))


def dirichlet_certificate(decomp: EdgeDecomposition, A, B, f: np.ndarray,
                          phi: EdgeFlow) -> Certificate:
    """Upper-bound certificate: value >= Cap(A,B) for feasible (f, phi)."""
    n = decomp.n_states
    A, B = _check_pair(n, A, B)
    f = np.asarray(f, dtype=float)
    boundary_ok = _check_boundary(f, A, B, 1.0, 0.0)
    if not boundary_ok:
        raise InfeasibleInputs("f must be 1 on A and 0 on B")
    feas = flow_feasibility(phi, A, B, 0.0)
    if not feas.member:
        raise InfeasibleInputs("flow is not in F_0")
    _, phi_f = make_flows(decomp, f)
    value = flow_norm2(decomp, phi_f - phi)
    return Certificate(value=value, kind="dirichlet-upper",
                       feasibility=feas, boundary_ok=boundary_ok)


def thomson_certificate(decomp: EdgeDecomposition, A, B, f: np.ndarray,
                        phi: EdgeFlow) -> Certificate:
    """Reciprocal certificate: value >= 1/Cap(A,B), i.e. Cap >= 1/value."""
    n = decomp.n_states
    A, B = _check_pair(n, A, B)
    f = np.asarray(f, dtype=float)
    boundary_ok = _check_boundary(f, A, B, 0.0, 0.0)
    if not boundary_ok:
        raise InfeasibleInputs("f must vanish on A and B")
    feas = flow_feasibility(phi, A, B, 1.0)
    if not feas.member:
        raise InfeasibleInputs("flow is not in F_1")
    _, phi_f = make_flows(decomp, f)
    value = flow_norm2(decomp, phi_f - phi)
    return Certificate(value=value, kind="thomson-reciprocal",
                       feasibility=feas, boundary_ok=boundary_ok)


@dataclass
class OptimalPairs:
    dirichlet: tuple[np.ndarray, EdgeFlow]
    thomson: tuple[np.ndarray, EdgeFlow]
    cap: float


def optimal_pairs(chain: RateChain, decomp: EdgeDecomposition, A, B,
                  potentials: Potentials | None = None) -> OptimalPairs:
    """Closed-form optimizers of both principles, built from h and h*."""
    pots = potentials or equilibrium_potentials(chain, decomp, A, B)
    h, hs = pots.h, pots.h_star
    psi_h, _ = make_flows(decomp, h)
    cap = flow_inner(decomp, psi_h, psi_h)

    f_dir = 0.5 * (h + hs)
    _, phi_fdir = make_flows(decomp, f_dir)
    phi_dir = phi_fdir - psi_h

    f_th = (h - hs) / (2.0 * cap)
    _, phi_fth = make_flows(decomp, f_th)
    phi_th = phi_fth - psi_h.scaled(1.0 / cap)

    return OptimalPairs(dirichlet=(f_dir, phi_dir), thomson=(f_th, phi_th), cap=cap)
