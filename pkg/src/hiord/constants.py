"""Numerical tolerances shared across the package.

Every default threshold lives here so a change in one place propagates to
graph checks, stability tests, the simulator and the CLI alike.
"""

# graph
WEIGHT_EQ_TOL = 1e-12          # structural graph equality
BALANCE_TOL = 1e-12            # column sums of the Laplacian

# lti / gains
RANK_TOL = 1e-9                # relative to the largest singular value
CANONICAL_TOL = 1e-9           # canonical-form shape residual
PLACEMENT_TOL = 1e-7
OBSERVABILITY_COND_WARN = 1e10

# analysis
STOCHASTIC_TOL = 1e-9
STOCHASTIC_CLIP_TOL = 1e-12    # negative dirt tolerated before clipping

# engine
DEFAULT_DT = 1e-3
DIVERGENCE_GUARD = 1e12
CONSENSUS_TOL = 1e-3
CONSENSUS_WINDOW_FRACTION = 0.10
MONOTONE_TOL = 1e-9
RESIDUAL_TOL = 1e-4             # reduction residual at dt = 1e-3
EQUILIBRIUM_TOL = 1e-3          # robot equilibrium identity
