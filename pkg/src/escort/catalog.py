"""Named benchmark mixtures.

Where the published description fixes a number it is used verbatim. Every
other constant below is a documented choice:

* variance 0.1 for a "minimal" variance, 1.0 when no variance is given;
* mean magnitudes of the 20D modes (2.0, or 3.0 for subspace modes);
* correlation values for modes described only qualitatively;
* the scalability family layout (simplex vertices, construction seed 42).

Any covariance whose smallest eigenvalue falls below 1e-6 is shifted up to it.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ContractError
from .targets import GmmSpec, repair_spd

MINIMAL_VAR = 0.1
DEFAULT_VAR = 1.0
SCALABILITY_DIMS = (1, 5, 20, 50, 100, 200)
SCAL_SEED = 42
SCAL_SEPARATION = 6.0


def _corr(d, pairs, var=None):
    """Covariance from unit-diagonal correlations ``{(i, j): rho}`` (1-based) and variances."""
    c = np.eye(d)
    for (i, j), rho in pairs.items():
        c[i - 1, j - 1] = c[j - 1, i - 1] = rho
    sd = np.sqrt(np.full(d, DEFAULT_VAR) if var is None else np.asarray(var, dtype=float))
    return c * np.outer(sd, sd)


def _spec(weights, means, covs):
    covs = [repair_spd(np.asarray(c, dtype=float)) for c in covs]
    return GmmSpec(np.asarray(weights, dtype=float), np.asarray(means, dtype=float), np.stack(covs))


def _gmm1d():
    return _spec([0.3, 0.4, 0.3], [[-3.0], [0.0], [3.0]], [[[0.8]], [[0.5]], [[0.5]]])


def _gmm2d():
    return _spec(
        [0.35, 0.30, 0.35],
        [[-2, -2], [0, 0], [2, 2]],
        [[[1.0, 0.8], [0.8, 1.0]], [[0.5, 0.0], [0.0, 0.5]], [[1.0, -0.8], [-0.8, 1.0]]],
    )


def _gmm3d():
    m = MINIMAL_VAR
    covs = [
        _corr(3, {(1, 2): 0.95}, [1.0, 1.0, m]),
        _corr(3, {(1, 3): 0.95}, [1.0, m, 1.0]),
        _corr(3, {(2, 3): 0.95}, [m, 1.0, 1.0]),
        [[1.0, 0.7, -0.7], [0.7, 1.0, -0.7], [-0.7, -0.7, 1.0]],
        # hierarchical: strength halves with dimensional distance
        _corr(3, {(1, 2): 0.6, (2, 3): 0.6, (1, 3): 0.3}),
        np.diag([0.2, 0.2, 4.0]),
    ]
    means = [[-2.5, -2.5, -2.5], [2.5, -2.5, 2.5], [-2.5, 2.5, 2.5], [2.5, 2.5, -2.5], [0, 0, 4], [0, 0, -4]]
    return _spec([0.2, 0.15, 0.15, 0.2, 0.15, 0.15], means, covs)


def _gmm5d():
    means = [
        [-2, -2, -2, -2, -2],
        [2, -2, 2, -2, 2],
        [-2, 2, 2, 2, -2],
        [2, 2, -2, 2, 2],
        [0, 0, 3, 0, 0],
        [0, 0, 0, 0, 3],
        [0, 3, 0, 3, 0],
        [-3, -3, -3, 3, 3],
    ]
    weights = [0.15, 0.15, 0.10, 0.15, 0.10, 0.10, 0.10, 0.15]
    covs = [
        _corr(5, {(1, 2): 0.85, (3, 4): 0.6, (4, 5): 0.6, (3, 5): 0.36}),
        _corr(5, {(1, 3): 0.8, (3, 5): 0.8, (1, 5): 0.8}),
        _corr(5, {(1, 5): 0.85, (2, 3): 0.5, (3, 4): 0.5, (2, 4): 0.5}),
        _corr(5, {(1, 3): -0.7, (3, 5): -0.7, (1, 5): 0.4}),
        _corr(5, {(1, 2): 0.7, (2, 3): 0.5, (1, 3): 0.35}),
        _corr(5, {(1, 5): 0.1, (2, 5): 0.1, (3, 5): 0.1, (4, 5): 0.1}, [1, 1, 1, 1, 3.0]),
        _corr(5, {(2, 4): 0.8}, [1, 2.0, 1, 2.0, 1]),
        _corr(5, {(1, 2): 0.7, (2, 3): 0.7, (1, 3): 0.7, (4, 5): 0.7}),
    ]
    return _spec(weights, means, covs)


def _gmm20d():
    d = 20
    idx = np.arange(d)
    means = np.zeros((10, d))
    means[0] = np.where(idx < 10, -2.0, 2.0)
    means[1] = np.where(idx % 2 == 0, 2.0, -2.0)
    means[2] = np.linspace(-3.0, 3.0, d)
    for k in range(4):
        means[3 + k, 5 * k : 5 * k + 5] = 3.0
    means[7] = 3.0 * np.sin(2 * np.pi * idx / 10)
    means[8] = 3.0 * ((idx - 9.5) / 9.5) ** 2 - 1.5
    means[9] = -2.0

    sign = np.where(idx % 2 == 0, 1.0, -1.0)
    same_block = (idx[:, None] // 5) == (idx[None, :] // 5)
    covs = []
    # 1: four 5x5 blocks of alternating-sign correlations
    c = np.where(same_block, 0.7 * np.outer(sign, sign), 0.0)
    covs.append(c)
    # 2: odd/even checkerboard
    covs.append(0.75 * np.outer(sign, sign))
    # 3: exponentially decaying band of width 5
    lag = np.abs(idx[:, None] - idx[None, :])
    covs.append(np.where(lag <= 5, 0.9**lag, 0.0))
    # 4-7: strong correlations inside one 5-dim subspace each
    for k in range(4):
        c = np.eye(d)
        sub = slice(5 * k, 5 * k + 5)
        c[sub, sub] = 0.85
        covs.append(c)
    # 8: strong within groups, weak between
    covs.append(np.where(same_block, 0.7, 0.3))
    # 9: opposite ends, sign by parity of the lower index
    c = np.eye(d)
    for i in range(d // 2):
        c[i, d - 1 - i] = c[d - 1 - i, i] = 0.7 if i % 2 == 0 else -0.7
    covs.append(c)
    # 10: sparse weak correlations
    rng = np.random.default_rng(2020)
    c = np.eye(d)
    pairs = rng.choice(d * (d - 1) // 2, size=12, replace=False)
    iu = np.triu_indices(d, k=1)
    for p in pairs:
        i, j = iu[0][p], iu[1][p]
        c[i, j] = c[j, i] = rng.uniform(-0.09, 0.09)
    covs.append(c)
    for c in covs:
        np.fill_diagonal(c, 1.0)
    weights = [0.12, 0.12, 0.10, 0.08, 0.08, 0.08, 0.08, 0.12, 0.12, 0.10]
    return _spec(weights, means, covs)


def _scal_pattern(kind, d, rng):
    idx = np.arange(d)
    if kind == "block":
        same = (idx[:, None] // 5) == (idx[None, :] // 5)
        c = np.where(same, 0.8, 0.0)
    elif kind == "banded":
        lag = np.abs(idx[:, None] - idx[None, :])
        c = np.where(lag <= 3, 0.8**lag, 0.0)
    elif kind == "long-range":
        c = np.eye(d)
        for i in range(d // 2):
            c[i, d - 1 - i] = c[d - 1 - i, i] = 0.7
    elif kind == "sparse":
        c = np.eye(d)
        if d > 1:
            iu = np.triu_indices(d, k=1)
            count = max(1, d // 2)
            for p in rng.choice(iu[0].size, size=min(count, iu[0].size), replace=False):
                c[iu[0][p], iu[1][p]] = c[iu[1][p], iu[0][p]] = rng.choice([-0.5, 0.5])
    else:
        c = np.eye(d)
    np.fill_diagonal(c, 1.0)
    return c


def scalability_gmm(d: int) -> GmmSpec:
    """Five equally weighted modes with block/banded/long-range/sparse/identity correlations.

    Modes sit at the vertices of a regular simplex with edge length 6,
    embedded by a fixed random rotation; below 5 dimensions they are spread
    evenly along a fixed random direction instead.
    """
    if d < 1:
        raise ContractError("dimension must be positive")
    rng = np.random.default_rng(SCAL_SEED)
    if d >= 5:
        verts = np.eye(5) - 0.2
        verts *= SCAL_SEPARATION / np.sqrt(2.0)
        basis, _ = np.linalg.qr(rng.standard_normal((d, 5)))
        # vertices span the 4-dim subspace orthogonal to the all-ones vector
        means = verts @ basis.T
    else:
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        means = np.outer(np.linspace(-2, 2, 5) * SCAL_SEPARATION / 2.0, u)
    kinds = ("block", "banded", "long-range", "sparse", "identity")
    covs = [_scal_pattern(kind, d, rng) for kind in kinds]
    return _spec(np.full(5, 0.2), means, covs)


_BUILDERS = {"gmm1d": _gmm1d, "gmm2d": _gmm2d, "gmm3d": _gmm3d, "gmm5d": _gmm5d, "gmm20d": _gmm20d}


def target_names() -> list[str]:
    return list(_BUILDERS) + [f"scal-{d}" for d in SCALABILITY_DIMS]


@lru_cache(maxsize=None)
def benchmark_catalog(name: str) -> GmmSpec:
    """Look up a benchmark mixture by its stable name."""
    if name in _BUILDERS:
        return _BUILDERS[name]()
    if name.startswith("scal-"):
        try:
            d = int(name[5:])
        except ValueError:
            raise KeyError(f"unknown target {name!r}") from None
        if d >= 1:
            return scalability_gmm(d)
    raise KeyError(f"unknown target {name!r}")
