"""Karhunen-Loeve expansions of empirical random elements in finite-dimensional
Hilbert spaces with weighted, dense-Gram or block (vector-field) inner products."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .data_io import (
    MortalityTable,
    load_grid_image,
    parse_mortality_csv,
    synth_ensemble,
    table_to_ensemble,
)
from .ensemble import (
    Ensemble,
    bochner_norm_sq,
    center,
    cov_apply,
    expectation,
    h_apply,
    make_ensemble,
)
from .kle import (
    KleDecomposition,
    decompose,
    naturality_gap,
    reconstruct,
    truncate,
    truncation_error,
)
from .space import (
    GramFactor,
    SpaceSpec,
    grid_l2_space,
    inner,
    make_space,
    norm_sq,
    project,
)
from .vector_field import (
    TruncationReport,
    compare,
    componentwise_truncate,
    vectorfield_truncate,
)
