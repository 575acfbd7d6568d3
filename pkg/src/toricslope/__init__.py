"""Numerical toolkit for toric test configurations: Deligne pairings,
Hermitian bundles over toric surfaces and the coupled alpha_k energy."""

from .alpha_k import PairState, alpha_k_energy_closed, alpha_k_energy_path, q1_prime, q2_prime
from .bundles import BundleMetric, donaldson_functional, line_bundle, m_prime, split_bundle, trivial_bundle
from .conventions import LEDGER, POLYTOPE_FACTOR, Ledger
from .geometry import InvariantPotential, KahlerStructure, LogGrid, make_product, make_projective_space
from .kernels import BACKEND
from .pairings import deligne_pairing, ma_energy, mabuchi, modified_pairing
from .testconfig import (
    PLFunction,
    ToricTestConfig,
    bundle_correction_terms,
    df_invariant,
    make_ray,
    slope_estimate,
    theorem_check,
)

__version__ = "0.1.0"

__all__ = [
    "LEDGER",
    "POLYTOPE_FACTOR",
    "Ledger",
    "BACKEND",
    "__version__",
    "LogGrid",
    "KahlerStructure",
    "InvariantPotential",
    "make_projective_space",
    "make_product",
    "deligne_pairing",
    "modified_pairing",
    "ma_energy",
    "mabuchi",
    "BundleMetric",
    "line_bundle",
    "split_bundle",
    "trivial_bundle",
    "donaldson_functional",
    "m_prime",
    "PairState",
    "alpha_k_energy_closed",
    "alpha_k_energy_path",
    "q1_prime",
    "q2_prime",
    "PLFunction",
    "ToricTestConfig",
    "make_ray",
    "df_invariant",
    "bundle_correction_terms",
    "slope_estimate",
    "theorem_check",
]
