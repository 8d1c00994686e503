"""Input adapters: mortality tables, synthetic ensembles and PNM images."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels_py
from .ensemble import make_ensemble
from .errors import (
    BadMagic,
    DimensionMismatch,
    DuplicateCell,
    MalformedRow,
    MaxvalZero,
    MissingCell,
    NegativeValue,
    SpectrumTooLong,
)
from .space import grid_l2_space, make_space

__all__ = [
    "MortalityTable",
    "parse_mortality_csv",
    "table_to_ensemble",
    "synth_ensemble",
    "synth_draws",
    "load_grid_image",
    "parse_pnm",
    "PRNG_ID",
    "MORTALITY_HEADER",
]

MORTALITY_HEADER = ["year", "age", "region", "value"]
OPEN_AGE = "110+"
TRANSFORMS = {"identity": lambda x: x, "log1p": np.log1p}
PRNG_ID = "numpy.random.Generator(PCG64)"


@dataclass(frozen=True, eq=False)
class MortalityTable:
    """Complete ``years x ages x regions`` grid.

    ``values[t, q * len(ages) + a]`` holds year ``years[t]``, region
    ``regions[q]`` and age ``ages[a]`` after ``transform``.
    """

    years: tuple
    ages: tuple
    regions: tuple
    values: np.ndarray
    transform: str = "identity"

    def __eq__(self, other):
        if not isinstance(other, MortalityTable):
            return NotImplemented
        return (
            (self.years, self.ages, self.regions, self.transform)
            == (other.years, other.ages, other.regions, other.transform)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


def _parse_age(token, lineno):
    if token == OPEN_AGE:
        return 110
    try:
        age = int(token)
    except ValueError:
        raise MalformedRow(lineno, f"bad age {token!r}") from None
    if not 0 <= age <= 110:
        raise MalformedRow(lineno, f"age {age} outside 0..110")
    return age


def parse_mortality_csv(text, region_filter=None, transform="identity", years=None):
    """Parse long-format ``year,age,region,value`` text into a :class:`MortalityTable`.

    Parameters
    ----------
    text : str
    region_filter : sequence of str, optional
        Regions to keep, in the order they should be stacked. Without a
        filter every region is kept, sorted by name.
    transform : {"identity", "log1p"}
    years : (int, int), optional
        Inclusive year range to keep.

    The result does not depend on row order. Lines starting with ``#`` and
    blank lines are skipped; the age token ``110+`` is stored as age 110.
    """
    if transform not in TRANSFORMS:
        raise ValueError(f"unknown transform {transform!r}")
    keep = None if region_filter is None else list(region_filter)
    cells = {}
    header_seen = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = [f.strip() for f in next(csv.reader([stripped]))]
        if not header_seen:
            if fields != MORTALITY_HEADER:
                raise MalformedRow(lineno, "expected header year,age,region,value")
            header_seen = True
            continue
        if len(fields) != 4:
            raise MalformedRow(lineno, f"expected 4 fields, got {len(fields)}")
        year_tok, age_tok, region, value_tok = fields
        try:
            year = int(year_tok)
        except ValueError:
            raise MalformedRow(lineno, f"bad year {year_tok!r}") from None
        age = _parse_age(age_tok, lineno)
        try:
            value = float(value_tok)
        except ValueError:
            raise MalformedRow(lineno, f"bad value {value_tok!r}") from None
        if not math.isfinite(value):
            raise MalformedRow(lineno, f"non-finite value {value_tok!r}")
        if value < 0:
            raise NegativeValue(lineno, value)
        if keep is not None and region not in keep:
            continue
        if years is not None and not years[0] <= year <= years[1]:
            continue
        key = (year, age, region)
        if key in cells:
            raise DuplicateCell(year, age, region, lineno)
        cells[key] = value
    if not header_seen:
        raise MalformedRow(1, "missing header year,age,region,value")
    if not cells:
        raise MalformedRow(1, "no data rows after filtering")

    year_list = sorted({k[0] for k in cells})
    age_list = sorted({k[1] for k in cells})
    seen_regions = {k[2] for k in cells}
    if keep is not None:
        missing = [r for r in keep if r not in seen_regions]
        if missing:
            raise MissingCell(year_list[0], age_list[0], missing[0])
        region_list = keep
    else:
        region_list = sorted(seen_regions)

    n_ages = len(age_list)
    values = np.empty((len(year_list), len(region_list) * n_ages))
    for t, year in enumerate(year_list):
        for a, age in enumerate(age_list):
            for q, region in enumerate(region_list):
                try:
                    values[t, q * n_ages + a] = cells[(year, age, region)]
                except KeyError:
                    raise MissingCell(year, age, region) from None
    values = TRANSFORMS[transform](values)
    values.setflags(write=False)
    return MortalityTable(tuple(year_list), tuple(age_list), tuple(region_list), values, transform)


def table_to_ensemble(table):
    """Years become equally weighted samples in ``l^2(ages, R^Q)`` (identity Gram)."""
    q, n_ages = len(table.regions), len(table.ages)
    space = make_space(q * n_ages, "identity", blocks=(q, n_ages))
    return make_ensemble(space, table.values)


def synth_draws(seed, N, Q, base_dim, spectrum, cross_coupling=0.0):
    """Synthetic ensemble together with its latent draws.

    Samples are ``mean + sum_r spectrum[r] * xi[i, r] * psi[r]`` with uniform
    weights, orthonormal modes ``psi`` and scores ``xi`` drawn standard normal,
    then centred and orthonormalised so that ``mean(xi[:, r] * xi[:, s])`` is
    ``delta_rs``. The fitted eigenvalues are therefore exactly
    ``spectrum**2``. With ``cross_coupling == 0`` mode ``r`` lives on block
    ``r % Q`` only; larger values blend in a dense random direction.
    Returns ``(ensemble, xi, psi)``.
    """
    spectrum = np.asarray(spectrum, dtype=float).reshape(-1)
    n_modes = spectrum.size
    if not 0.0 <= cross_coupling <= 1.0:
        raise ValueError("cross_coupling must lie in [0, 1]")
    if np.any(spectrum <= 0) or np.any(np.diff(spectrum) > 0):
        raise ValueError("spectrum must be positive and nonincreasing")
    if n_modes >= N:
        raise SpectrumTooLong(f"{n_modes} modes need more than {N} samples")
    per_block = -(-n_modes // Q) if n_modes else 0
    if per_block > base_dim:
        raise SpectrumTooLong(f"{n_modes} modes do not fit {Q} blocks of size {base_dim}")

    dim = Q * base_dim
    rng = np.random.Generator(np.random.PCG64(seed))
    mean = rng.standard_normal(dim)
    local = np.zeros((n_modes, dim))
    for r in range(n_modes):
        q = r % Q
        local[r, q * base_dim:(q + 1) * base_dim] = rng.standard_normal(base_dim)
    dense = rng.standard_normal((n_modes, dim))
    raw = (1.0 - cross_coupling) * local + cross_coupling * dense
    # Euclidean MGS keeps exact zeros, so block supports survive when uncoupled.
    # Always the Python kernel: fixtures must not depend on which backend is built.
    psi, _, failed = _kernels_py.g_orthonormalize(raw, raw, 1e-10)
    if failed >= 0:
        raise SpectrumTooLong("could not draw independent modes")
    xi = rng.standard_normal((N, n_modes))
    # Centred, orthonormal score columns make the sample covariance exactly
    # sum_r spectrum[r]**2 psi_r psi_r^T (block diagonal when uncoupled).
    xi -= xi.mean(axis=0)
    xi_rows, _, failed = _kernels_py.g_orthonormalize(xi.T, xi.T, 1e-10)
    if failed >= 0:
        raise SpectrumTooLong("could not draw independent scores")
    xi = xi_rows.T * np.sqrt(N)
    samples = mean + (xi * spectrum) @ psi
    space = make_space(dim, "identity", blocks=(Q, base_dim))
    return make_ensemble(space, samples), xi, psi


def synth_ensemble(seed, N, Q, base_dim, spectrum, cross_coupling=0.0):
    """Deterministic synthetic blocked ensemble; see :func:`synth_draws`."""
    return synth_draws(seed, N, Q, base_dim, spectrum, cross_coupling)[0]


def _pnm_tokens(text):
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        yield from line.split()


def parse_pnm(text):
    """Parse an ASCII PGM (P2) or PPM (P3) image.

    Returns ``(pixels, maxval)`` with ``pixels`` of shape ``(rows, cols, channels)``.
    """
    tokens = _pnm_tokens(text)
    magic = next(tokens, None)
    if magic not in ("P2", "P3"):
        raise BadMagic(f"expected P2 or P3, got {magic!r}")
    channels = 1 if magic == "P2" else 3
    try:
        cols, rows, maxval = (int(next(tokens)) for _ in range(3))
        data = [int(tok) for tok in tokens]
    except (StopIteration, ValueError) as exc:
        raise DimensionMismatch(f"truncated or malformed image header: {exc}") from None
    if maxval == 0:
        raise MaxvalZero("image maxval is 0")
    if len(data) != rows * cols * channels:
        raise DimensionMismatch(f"expected {rows * cols * channels} samples, got {len(data)}")
    return np.array(data, dtype=float).reshape(rows, cols, channels), maxval


def load_grid_image(path, m, n, channels=1):
    """Embed an ``m``-row by ``n``-column P2/P3 image as a point of ``grid_l2_space(m, n, channels)``.

    Intensities are divided by maxval; coefficients are channel-major, row-major.
    """
    with open(path, encoding="ascii") as fh:
        pixels, maxval = parse_pnm(fh.read())
    rows, cols, ch = pixels.shape
    if ch != channels:
        raise DimensionMismatch(f"image has {ch} channel(s), {channels} requested")
    if (rows, cols) != (m, n):
        raise DimensionMismatch(f"image is {rows}x{cols}, expected {m}x{n}")
    space = grid_l2_space(m, n, channels)
    coeffs = (pixels / maxval).transpose(2, 0, 1).reshape(-1)
    return space.check_point(coeffs)
