"""capflow: potential theory for non-reversible Markov chains.

Capacities and equilibrium potentials, Dirichlet and Thomson variational
certificates with closed-form optimizers, grid discretizations of drifted
diffusions with exact Gibbs stationary measure, metastable reduced-chain
extraction, and capacity-based recurrence tests for planar walks.
"""

from .chains import (
    EdgeDecomposition,
    Measure,
    RateChain,
    SamplePath,
    StateSet,
    adjoint_chain,
    build_chain,
    edge_decomposition,
    load_chain,
    save_chain,
    sector_constant,
    simulate,
    solve_poisson,
    stationary_measure,
    symmetrized_chain,
)
from .captheory import (
    CapacityReport,
    HarmonicMeasure,
    Potentials,
    capacity,
    dirichlet_energy,
    equilibrium_potentials,
    harmonic_measure,
    mean_hitting_identity,
)
from .flows import (
    Certificate,
    EdgeFlow,
    FlowFeasibility,
    OptimalPairs,
    bilinear_identity_residual,
    dirichlet_certificate,
    flow_feasibility,
    flow_inner,
    flow_norm2,
    make_flows,
    optimal_pairs,
    thomson_certificate,
)
from . import errors

__version__ = "0.1.0"
