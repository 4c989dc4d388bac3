"""Levy concentration function of <x, xi>: exact enumeration, Monte Carlo,
the window-regularized variant, and rich/poor classification.

Exact values come from enumerating the finite support of the weighted sum and
sliding a closed window of width 2*eps over the sorted atoms; the supremum
over window centers is attained with the window's left edge at an atom, so
the sweep is exhaustive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .ensembles import DistributionSpec, RngStream

DEFAULT_EXACT_CAP_TWO_ATOM = 22
DEFAULT_EXACT_CAP_THREE_ATOM = 13
DEFAULT_MAX_EXACT_SUBSETS = 1_000_000
DEFAULT_SUBSET_SAMPLES = 2000


@dataclass(frozen=True)
class RhoEstimate:
    """A value of the concentration function, with provenance.

    method "exact" has trials == 0 and std_error == 0; "monte_carlo" carries
    the usual binomial standard error and is biased upward (the best window
    is chosen from the same data it is evaluated on).
    """

    value: float
    method: str
    trials: int
    std_error: float
    optimal_center: float


@dataclass(frozen=True)
class RegularizedRho:
    """Worst concentration over coordinate subsets of a fixed even size.

    In "sampled_subsets" mode the value is only an upper bound on the true
    infimum (a minimum over the sampled subsets); "exact_subsets" enumerates
    every subset. witness_subset holds 0-based coordinate indices.
    """

    value: float
    window_size: int
    witness_subset: tuple[int, ...]
    mode: str
    subsets_evaluated: int


@dataclass(frozen=True)
class RichPoorLabel:
    label: str  # "rich" | "poor"
    rho_beta: RegularizedRho
    threshold: float
    scale: float

    @property
    def is_poor(self) -> bool:
        return self.label == "poor"


@dataclass(frozen=True)
class RestrictionCheck:
    rho_full: float
    rho_sub: float
    holds: bool


@dataclass(frozen=True)
class StabilityCheck:
    lhs: float
    rhs: float
    holds: bool


@dataclass(frozen=True)
class BoundedConcentrationProbe:
    worst_v: np.ndarray
    rho_at_c: float
    margin: float
    passed: bool


def exact_cap(dist: DistributionSpec) -> int:
    """Largest vector length accepted for exact enumeration."""
    k = dist.atoms()[0].size
    return DEFAULT_EXACT_CAP_TWO_ATOM if k <= 2 else DEFAULT_EXACT_CAP_THREE_ATOM


def _require_exact(dist: DistributionSpec, n: int, cap: int | None) -> None:
    if not dist.is_finite:
        raise ValueError(f"exact enumeration needs a finite-atom law, got {dist.kind}")
    limit = cap if cap is not None else exact_cap(dist)
    if n > limit:
        raise ValueError(f"vector length {n} exceeds exact enumeration cap {limit}")


def _sum_support(x: np.ndarray, dist: DistributionSpec) -> tuple[np.ndarray, np.ndarray]:
    """Sorted support of sum_i x_i xi_i with exact probabilities, consolidated
    coordinate by coordinate so structured vectors stay small."""
    atoms, aprobs = dist.atoms()
    sums = np.zeros(1)
    probs = np.ones(1)
    for xi in x:
        s = (sums[:, None] + xi * atoms[None, :]).ravel()
        p = (probs[:, None] * aprobs[None, :]).ravel()
        sums, inv = np.unique(s, return_inverse=True)
        probs = np.bincount(inv, weights=p)
    return sums, probs


def _window_max(sums: np.ndarray, probs: np.ndarray, radius: float) -> tuple[float, float]:
    """Best closed window [y - radius, y + radius]: (mass, center)."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    hi = sums + 2.0 * radius
    right = np.searchsorted(sums, hi, side="right")
    cum = np.cumsum(probs)
    mass = cum[right - 1] - cum + probs
    i = int(np.argmax(mass))
    center = sums[i] + radius
    return float(mass[i]), float(center) if math.isfinite(center) else 0.0


def rho_exact(
    x: np.ndarray,
    eps: float,
    dist: DistributionSpec,
    cap: int | None = None,
) -> RhoEstimate:
    """Exact sup_y P(|<x, xi> - y| <= eps) for a finite-atom law."""
    x = np.asarray(x, dtype=float)
    if eps < 0:
        raise ValueError("eps must be >= 0")
    _require_exact(dist, x.size, cap)
    sums, probs = _sum_support(x, dist)
    value, center = _window_max(sums, probs, eps)
    return RhoEstimate(min(value, 1.0), "exact", 0, 0.0, center)


def rho_mc(
    x: np.ndarray,
    eps: float,
    dist: DistributionSpec,
    trials: int,
    rng: RngStream,
) -> RhoEstimate:
    """Monte Carlo estimate of the concentration function.

    Sorts the sampled sums and takes the best closed window of width 2*eps
    (two-pointer sweep). Because the window is chosen from the sample, the
    estimator is biased upward.
    """
    x = np.asarray(x, dtype=float)
    if trials < 1000:
        raise ValueError("need at least 1000 trials")
    if eps < 0:
        raise ValueError("eps must be >= 0")
    n = x.size
    samples = np.empty(trials)
    block = max(1, (1 << 22) // max(1, n))
    pos = 0
    while pos < trials:
        b = min(block, trials - pos)
        draws = np.atleast_2d(dist.sample(rng, size=(b, n)))
        samples[pos : pos + b] = draws @ x
        pos += b
    samples.sort()
    right = np.searchsorted(samples, samples + 2.0 * eps, side="right")
    counts = right - np.arange(trials)
    i = int(np.argmax(counts))
    value = counts[i] / trials
    std_error = math.sqrt(value * (1.0 - value) / trials)
    return RhoEstimate(float(value), "monte_carlo", trials, std_error, float(samples[i] + eps))


# ---------------------------------------------------------------------------
# Regularized rho over coordinate windows
# ---------------------------------------------------------------------------

def window_size(n: int, beta: float) -> int:
    """The subset size 2*floor(beta*n); floors kept literally."""
    return 2 * math.floor(beta * n)


def _subset_rho_batch(
    x: np.ndarray,
    subsets: np.ndarray,
    radius: float,
    dist: DistributionSpec,
) -> np.ndarray:
    """rho_exact(x_I, radius) for every row I of `subsets`, vectorized over
    the m^w outcome patterns shared by all subsets."""
    atoms, aprobs = dist.atoms()
    m = atoms.size
    w = subsets.shape[1]
    if m**w > (1 << 22):  # pattern table would not fit; consolidate per subset
        out = np.empty(subsets.shape[0])
        for idx in range(subsets.shape[0]):
            s, p = _sum_support(x[subsets[idx]], dist)
            out[idx] = min(_window_max(s, p, radius)[0], 1.0)
        return out
    patterns = np.indices((m,) * w).reshape(w, -1).T  # (m^w, w) atom indices
    pvals = atoms[patterns]
    pprobs = aprobs[patterns].prod(axis=1)
    out = np.empty(subsets.shape[0])
    chunk = max(1, (1 << 22) // max(1, m**w))
    for lo in range(0, subsets.shape[0], chunk):
        sub = subsets[lo : lo + chunk]
        sums = x[sub] @ pvals.T  # (chunk, m^w)
        order = np.argsort(sums, axis=1)
        ssort = np.take_along_axis(sums, order, axis=1)
        psort = pprobs[order]
        cum = np.cumsum(psort, axis=1)
        for r in range(sub.shape[0]):
            row = ssort[r]
            right = np.searchsorted(row, row + 2.0 * radius, side="right")
            mass = cum[r, right - 1] - cum[r] + psort[r]
            out[lo + r] = min(float(mass.max()), 1.0)
    return out


def rho_regularized(
    x: np.ndarray,
    r: float,
    beta: float | None,
    dist: DistributionSpec,
    mode: str = "exact_subsets",
    rng: RngStream | None = None,
    subset_samples: int = DEFAULT_SUBSET_SAMPLES,
    window: int | None = None,
    cap: int | None = None,
    max_exact_subsets: int = DEFAULT_MAX_EXACT_SUBSETS,
) -> RegularizedRho:
    """Infimum of rho over coordinate subsets of size 2*floor(beta*n).

    Exact mode enumerates all subsets in lexicographic order (bounded by
    max_exact_subsets); sampled mode takes the minimum over `subset_samples`
    uniformly drawn subsets, which upper-bounds the true infimum. Pass
    `window` to fix the subset size directly instead of deriving it from beta.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    w = window if window is not None else window_size(n, beta)
    if w % 2 != 0:
        raise ValueError(f"window size must be even, got {w}")
    if w < 2:
        raise ValueError(f"window size must be >= 2, got {w}")
    if w > n:
        raise ValueError(f"window size {w} exceeds vector length {n}")
    _require_exact(dist, w, cap)
    if r < 0:
        raise ValueError("radius must be >= 0")

    if mode == "exact_subsets":
        count = math.comb(n, w)
        if count > max_exact_subsets:
            raise ValueError(
                f"C({n},{w}) = {count} subsets exceed the exact cap {max_exact_subsets}"
            )
        subsets = np.array(list(combinations(range(n), w)), dtype=np.intp)
    elif mode == "sampled_subsets":
        if rng is None:
            raise ValueError("sampled_subsets mode needs an RngStream")
        g = rng.generator
        subsets = np.array(
            [np.sort(g.choice(n, size=w, replace=False)) for _ in range(subset_samples)],
            dtype=np.intp,
        )
    else:
        raise ValueError(f"unknown mode {mode!r}")

    values = _subset_rho_batch(x, subsets, r, dist)
    best = int(np.argmin(values))
    return RegularizedRho(
        value=float(values[best]),
        window_size=w,
        witness_subset=tuple(int(i) for i in subsets[best]),
        mode=mode,
        subsets_evaluated=subsets.shape[0],
    )


def classify_rich_poor(
    x: np.ndarray,
    eta: float,
    alpha: float,
    beta: float | None,
    dist: DistributionSpec,
    mode: str = "exact_subsets",
    rng: RngStream | None = None,
    subset_samples: int = DEFAULT_SUBSET_SAMPLES,
    window: int | None = None,
) -> RichPoorLabel:
    """poor iff rho_beta(x, eta) <= alpha; rich otherwise."""
    rb = rho_regularized(
        x, eta, beta, dist, mode=mode, rng=rng,
        subset_samples=subset_samples, window=window,
    )
    label = "poor" if rb.value <= alpha else "rich"
    return RichPoorLabel(label, rb, alpha, eta)


# ---------------------------------------------------------------------------
# Lemma-shaped numeric checks
# ---------------------------------------------------------------------------

def restriction_check(
    x: np.ndarray, I: tuple[int, ...], r: float, dist: DistributionSpec
) -> RestrictionCheck:
    """Operative restriction direction: rho(x, r) <= rho(x_I, r)."""
    x = np.asarray(x, dtype=float)
    sub = x[np.asarray(I, dtype=np.intp)]
    full = rho_exact(x, r, dist).value
    part = rho_exact(sub, r, dist).value
    return RestrictionCheck(full, part, full <= part + 1e-12)


def levy_stability_check(
    y: np.ndarray,
    z: np.ndarray,
    r: float,
    s: float,
    dist: DistributionSpec,
    c: float = 1.0,
) -> StabilityCheck:
    """Perturbation stability: rho(y, r+s) >= rho(z, r) - e*exp(-c s^2 / ||y-z||^2).

    The constant c is existential (configuration, default 1). For y == z the
    penalty term is taken as 0, the monotone limit.
    """
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    gap = float(np.linalg.norm(y - z))
    penalty = 0.0 if gap == 0.0 else math.e * math.exp(-c * s * s / (gap * gap))
    lhs = rho_exact(y, r + s, dist).value
    rhs = rho_exact(z, r, dist).value - penalty
    return StabilityCheck(lhs, rhs, lhs >= rhs - 1e-12)


def bounded_concentration_check(
    dist: DistributionSpec,
    n: int = 6,
    c: float = 0.1,
    samples: int = 8,
    rng: RngStream | None = None,
    mc_trials: int = 20000,
) -> BoundedConcentrationProbe:
    """Sanity probe of sup over unit vectors of rho(v, c) <= 1 - c.

    Candidates: the coordinate vectors, the constant vector, and `samples`
    uniform random unit directions. Not a proof; the constant c is
    configuration (default 0.1).
    """
    if rng is None:
        rng = RngStream(0, 0)
    g = rng.generator
    candidates = [np.eye(n)[i] for i in range(n)]
    candidates.append(np.ones(n) / math.sqrt(n))
    for _ in range(samples):
        v = g.standard_normal(n)
        candidates.append(v / np.linalg.norm(v))

    worst = candidates[0]
    worst_rho = -1.0
    use_exact = dist.is_finite and n <= exact_cap(dist)
    for v in candidates:
        if use_exact:
            val = rho_exact(v, c, dist).value
        else:
            val = rho_mc(v, c, dist, mc_trials, rng).value
        if val > worst_rho:
            worst_rho, worst = val, v
    margin = (1.0 - c) - worst_rho
    return BoundedConcentrationProbe(worst, worst_rho, margin, margin >= 0.0)
