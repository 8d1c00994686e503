"""Random instance generators shared by the test modules."""
import numpy as np

from hilbert_kle import make_ensemble, make_space

GRAM_KINDS = ("identity", "diagonal", "dense")


def random_spd(rng, d):
    A = rng.standard_normal((d, d))
    return A @ A.T / d + 0.5 * np.eye(d)


def random_space(rng, d, kind, blocks=None):
    if kind == "identity":
        return make_space(d, "identity", blocks)
    if kind == "diagonal":
        return make_space(d, ("diagonal", rng.uniform(0.25, 4.0, d)), blocks)
    return make_space(d, ("dense", random_spd(rng, d)), blocks)


def random_weights(rng, n, uniform=False):
    if uniform:
        return None
    w = rng.uniform(0.2, 1.0, n)
    return w / w.sum()


def random_ensemble(rng, space, n, low_rank=None, uniform=False):
    d = space.dim
    if low_rank is None:
        X = rng.standard_normal((n, d)) * rng.uniform(0.2, 2.0, d)
    else:
        X = rng.standard_normal((n, low_rank)) @ rng.standard_normal((low_rank, d))
    X += rng.standard_normal(d)
    return make_ensemble(space, X, random_weights(rng, n, uniform))


def random_instance(rng, n_range=(2, 60), d_range=(1, 50), kinds=GRAM_KINDS):
    kind = kinds[rng.integers(len(kinds))]
    d = int(rng.integers(d_range[0], d_range[1] + 1))
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    space = random_space(rng, d, kind)
    low = None
    if rng.random() < 0.3 and min(n, d) > 2:
        low = int(rng.integers(1, min(n, d)))
    return random_ensemble(rng, space, n, low_rank=low, uniform=rng.random() < 0.3)


def oracle_covariance_eigs(ens):
    """Eigenvalues of the covariance operator from an explicitly assembled matrix.

    Forms ``C = sum_i w_i v0_i v0_i^T`` and diagonalises the symmetric matrix
    ``L^T C L`` (``G = L L^T`` from numpy) with a dense symmetric eigensolver.
    """
    X = np.asarray(ens.samples)
    w = np.asarray(ens.weights)
    v0 = X - w @ X
    C = (v0 * w[:, None]).T @ v0
    L = np.linalg.cholesky(ens.space.gram_matrix())
    S = L.T @ C @ L
    ev = np.linalg.eigvalsh(0.5 * (S + S.T))
    return np.sort(ev)[::-1]


def mortality_csv(seed=0, years=range(1947, 2024), regions=("Hokkaido", "Aomori", "Iwate", "Miyagi", "Akita"),
                  max_age=110, shared=0.8):
    """Lee-Carter style synthetic death counts in the long CSV layout.

    log m(x, t, q) = a_x + b_x k_t^q with period indices that share a common
    trend across regions (``shared``) so that components are correlated.
    """
    rng = np.random.default_rng(seed)
    ages = np.arange(max_age + 1)
    years = list(years)
    T = len(years)
    a = -9.5 + 0.085 * ages + 2.0 * np.exp(-ages / 2.0)
    b = np.exp(-((ages - 65.0) / 30.0) ** 2)
    b /= b.sum()
    common = np.cumsum(rng.normal(-1.2, 1.0, T))
    lines = ["# synthetic fixture", "year,age,region,value"]
    for qi, region in enumerate(regions):
        own = np.cumsum(rng.normal(-1.0, 1.0, T))
        k = shared * common + (1 - shared) * own
        bq = b * (1.0 + 0.3 * np.sin(ages / (10.0 + qi)))
        pop = 1e5 * (1 + qi) * np.exp(-ages / 60.0)
        for t, year in enumerate(years):
            logm = a + 60.0 * bq * k[t] / T + 0.02 * rng.standard_normal(ages.size)
            deaths = np.round(pop * np.exp(np.minimum(logm, 0.0)), 3)
            for x in ages:
                tok = "110+" if x == 110 else str(x)
                lines.append(f"{year},{tok},{region},{float(deaths[x])!r}")
    return "\n".join(lines) + "\n"
