"""Equilibrium potentials, capacities, harmonic measure, mean hitting times.

For disjoint nonempty sets A, B the equilibrium potentials are

    h      harmonic off A u B for the chain,      h = 1 on A, 0 on B,
    h*     harmonic off A u B for the adjoint,    h* = 1 on A, 0 on B,

with stochastic representations h(x) = P_x[H_A < H_B] and the analogous
statement for the time-reversed dynamics.  The capacity is reported from
the symmetric Dirichlet form,

    Cap(A, B) = D(h, h),   D(f, f) = (1/2) sum_{x,y} s(x,y) (f(y)-f(x))^2,

and cross-checked against the escape-probability formula

    Cap(A, B) = sum_{x in A} mu(x) lambda(x) P_x[H_B < H_A^+]
              = sum_{x in A} mu(x) sum_y r(x,y) (1 - h(y)),

the adjoint capacity D(h*, h*), and the capacity of the symmetrized
chain.  All four agree exactly in the discrete setting, so disagreement
beyond rounding signals a numerical failure and raises.

The harmonic measure on A is nu(x) = mu(x) (-L* h*)(x) / Cap(A, B); its
normalizing constant equals the adjoint capacity.  With this choice the
mean-hitting identity

    E_nu[ int_0^{H_B} f dt ] = (1/Cap(A,B)) sum_x h*(x) f(x) mu(x)

holds exactly, which pins the discrete definition of nu.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chains import (
    EdgeDecomposition,
    Measure,
    RateChain,
    StateSet,
    adjoint_chain,
    solve_poisson,
    symmetrized_chain,
)
from .errors import EmptyTargetSet, OverlappingSets, SolverFailure

IDENTITY_RTOL = 1e-9


@dataclass
class Potentials:
    """Forward and adjoint equilibrium potentials for a pair (A, B)."""

    h: np.ndarray
    h_star: np.ndarray
    A: StateSet
    B: StateSet


@dataclass
class CapacityReport:
    cap: float
    cap_star: float
    cap_sym: float
    cap_hitting: float
    sector_C0: float | None = None
    sector_bound_ok: bool | None = None

    def to_json_dict(self) -> dict:
        return {
            "cap": self.cap,
            "cap_star": self.cap_star,
            "cap_sym": self.cap_sym,
            "cap_hitting": self.cap_hitting,
            "sector_C0": self.sector_C0,
        }


@dataclass
class HarmonicMeasure:
    """Probability weights on A: the hitting distribution of the
    conditioned process, equivalently the normalized equilibrium flux."""

    nu: np.ndarray                # full-length array, zero off A
    A: StateSet


def _check_pair(n: int, A, B) -> tuple[StateSet, StateSet]:
    A = StateSet.coerce(A, n)
    B = StateSet.coerce(B, n)
    if len(A) == 0 or len(B) == 0:
        raise EmptyTargetSet("A and B must be nonempty")
    if A.members & B.members:
        raise OverlappingSets(f"A and B overlap on {sorted(A.members & B.members)[:5]}")
    return A, B


def indicator(n: int, s: StateSet) -> np.ndarray:
    out = np.zeros(n)
    out[s.indices] = 1.0
    return out


def dirichlet_energy(decomp: EdgeDecomposition, f: np.ndarray, g=None) -> float:
    """D(f, g) = (1/2) sum_{x,y} s(x,y) (f(y)-f(x)) (g(y)-g(x))."""
    if g is None:
        g = f
    coo = decomp.s.tocoo()
    df = f[coo.col] - f[coo.row]
    dg = g[coo.col] - g[coo.row] if g is not f else df
    return 0.5 * float(np.dot(coo.data * df, dg))


def equilibrium_potentials(chain: RateChain, decomp: EdgeDecomposition,
                           A, B) -> Potentials:
    """Solve the two boundary value problems defining h and h*."""
    A, B = _check_pair(chain.n_states, A, B)
    boundary = StateSet(A.members | B.members)
    ind = indicator(chain.n_states, A)
    h = solve_poisson(chain, boundary, b=ind, f=0.0)
    adj = adjoint_chain(chain, decomp.mu)
    h_star = solve_poisson(adj, boundary, b=ind, f=0.0)
    return Potentials(h=h, h_star=h_star, A=A, B=B)


def _hitting_capacity(chain: RateChain, mu: np.ndarray, A: StateSet,
                      h: np.ndarray) -> float:
    idx = A.indices
    # one-step decomposition of P_x[H_B < H_A^+] for x in A
    esc = chain.rates[idx] @ (1.0 - h)
    return float(np.dot(mu[idx], esc))


def capacity(chain: RateChain, decomp: EdgeDecomposition, A, B,
             sector_c0: float | None = None,
             potentials: Potentials | None = None) -> CapacityReport:
    """Capacity between A and B with all cross-checking routes enforced."""
    A, B = _check_pair(chain.n_states, A, B)
    pots = potentials or equilibrium_potentials(chain, decomp, A, B)
    mu = decomp.mu.weights
    cap = dirichlet_energy(decomp, pots.h)
    cap_star = dirichlet_energy(decomp, pots.h_star)
    cap_hit = _hitting_capacity(chain, mu, A, pots.h)

    boundary = StateSet(A.members | B.members)
    chain_s = symmetrized_chain(decomp)
    h_s = solve_poisson(chain_s, boundary, b=indicator(chain.n_states, A), f=0.0)
    cap_sym = dirichlet_energy(decomp, h_s)

    if cap <= 0:
        raise SolverFailure("capacity came out nonpositive")
    if abs(cap - cap_star) > IDENTITY_RTOL * cap:
        raise SolverFailure(
            f"Cap = {cap!r} and Cap* = {cap_star!r} disagree beyond tolerance"
        )
    if abs(cap - cap_hit) > IDENTITY_RTOL * cap:
        raise SolverFailure(
            f"Dirichlet form {cap!r} and escape probability {cap_hit!r} disagree"
        )
    if cap_sym > cap * (1.0 + IDENTITY_RTOL):
        raise SolverFailure("symmetrized capacity exceeds the capacity")

    bound_ok = None
    if sector_c0 is not None:
        bound_ok = bool(cap <= sector_c0 * cap_sym * (1.0 + IDENTITY_RTOL))
    return CapacityReport(cap=cap, cap_star=cap_star, cap_sym=cap_sym,
                          cap_hitting=cap_hit, sector_C0=sector_c0,
                          sector_bound_ok=bound_ok)


def harmonic_measure(chain: RateChain, decomp: EdgeDecomposition, A, B,
                     potentials: Potentials | None = None) -> HarmonicMeasure:
    """nu(x) = mu(x) (-L* h*)(x) / Cap(A,B) for x in A.

    The unnormalized weights sum to the adjoint capacity, which is
    asserted before normalizing.
    """
    A, B = _check_pair(chain.n_states, A, B)
    pots = potentials or equilibrium_potentials(chain, decomp, A, B)
    mu = decomp.mu.weights
    adj = adjoint_chain(chain, decomp.mu)
    flux = -mu * adj.apply_generator(pots.h_star)
    raw = np.zeros(chain.n_states)
    raw[A.indices] = flux[A.indices]
    total = raw.sum()
    cap_star = dirichlet_energy(decomp, pots.h_star)
    if abs(total - cap_star) > 1e-9 * max(cap_star, 1e-300):
        raise SolverFailure(
            f"harmonic-measure mass {total!r} does not match Cap* {cap_star!r}"
        )
    if raw.min() < -1e-12 * max(raw.max(), 1e-300):
        raise SolverFailure("harmonic measure has a negative weight")
    raw = np.maximum(raw, 0.0)
    return HarmonicMeasure(nu=raw / raw.sum(), A=A)


def mean_hitting_identity(chain: RateChain, decomp: EdgeDecomposition,
                          A, B, f) -> tuple[float, float]:
    """Both sides of E_nu[int_0^{H_B} f dt] = (1/Cap) int h* f dmu.

    Returns (lhs, rhs); they are required to agree to 1e-8 relative.
    """
    A, B = _check_pair(chain.n_states, A, B)
    pots = equilibrium_potentials(chain, decomp, A, B)
    nu = harmonic_measure(chain, decomp, A, B, potentials=pots)
    fvec = np.asarray(f, dtype=float) if not np.isscalar(f) else np.full(chain.n_states, float(f))
    u = solve_poisson(chain, B, b=0.0, f=fvec)
    lhs = float(np.dot(nu.nu, u))
    cap = dirichlet_energy(decomp, pots.h)
    rhs = float(np.dot(pots.h_star * fvec, decomp.mu.weights)) / cap
    scale = max(abs(lhs), abs(rhs))
    if scale > 0 and abs(lhs - rhs) > 1e-8 * scale:
        raise SolverFailure(
            f"mean-hitting identity violated: lhs={lhs!r} rhs={rhs!r}"
        )
    return lhs, rhs
