"""Entry laws, random symmetric matrices, deterministic perturbations, RNG streams.

Everything here is a pure function of its inputs and an explicit RngStream, so
trials can be farmed out to any number of workers and still reproduce
bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.random import Generator, Philox

_MASK64 = (1 << 64) - 1
_LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# Entry distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DistributionSpec:
    """A mean-0, variance-1 entry law.

    kind is one of "rademacher", "gaussian", "uniform_pm" (uniform on
    [-sqrt(3), sqrt(3)]) or "lazy_rademacher" (mass q at 0, remaining mass
    split on two atoms rescaled to keep variance 1).  K is the subgaussian
    constant; it is informational and never enforced.
    """

    kind: str
    q: float = 0.0
    K: float = 0.0

    _KINDS = ("rademacher", "gaussian", "uniform_pm", "lazy_rademacher")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "lazy_rademacher" and not 0.0 <= self.q < 1.0:
            raise ValueError("lazy_rademacher needs 0 <= q < 1")
        if self.K <= 0.0:
            object.__setattr__(self, "K", _default_K(self.kind, self.q))

    @property
    def is_finite(self) -> bool:
        """True when the law has finitely many atoms (exact enumeration possible)."""
        return self.kind in ("rademacher", "lazy_rademacher")

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """(values, probabilities) for finite-atom laws. Probabilities sum to 1 exactly."""
        if self.kind == "rademacher":
            return np.array([-1.0, 1.0]), np.array([0.5, 0.5])
        if self.kind == "lazy_rademacher":
            a = 1.0 / math.sqrt(1.0 - self.q)
            h = (1.0 - self.q) / 2.0
            return np.array([-a, 0.0, a]), np.array([h, self.q, h])
        raise ValueError(f"{self.kind} has no finite atom list")

    def sample(self, rng: "RngStream", size=None) -> np.ndarray | float:
        """Draw from the law, advancing the stream deterministically."""
        g = rng.generator
        if self.kind == "rademacher":
            out = g.integers(0, 2, size=size) * 2.0 - 1.0
        elif self.kind == "gaussian":
            out = g.standard_normal(size=size)
        elif self.kind == "uniform_pm":
            r = math.sqrt(3.0)
            out = g.uniform(-r, r, size=size)
        else:  # lazy_rademacher
            vals, probs = self.atoms()
            out = g.choice(vals, size=size, p=probs)
        return out


def _default_K(kind: str, q: float) -> float:
    # Smallest K making P(|X| >= t) <= 2 exp(-t^2/K^2) hold for all t:
    # for a law bounded by B that is K = B / sqrt(ln 2); gaussian takes sqrt(2).
    if kind == "rademacher":
        return 1.0 / math.sqrt(_LN2)
    if kind == "gaussian":
        return math.sqrt(2.0)
    if kind == "uniform_pm":
        return math.sqrt(3.0 / _LN2)
    return (1.0 / math.sqrt(1.0 - q)) / math.sqrt(_LN2)


def rademacher() -> DistributionSpec:
    return DistributionSpec("rademacher")


def gaussian() -> DistributionSpec:
    return DistributionSpec("gaussian")


def uniform_pm() -> DistributionSpec:
    return DistributionSpec("uniform_pm")


def lazy_rademacher(q: float) -> DistributionSpec:
    return DistributionSpec("lazy_rademacher", q=q)


def distribution_from_name(name: str, q: float = 0.5) -> DistributionSpec:
    """Build a DistributionSpec from a CLI/config name."""
    if name == "lazy_rademacher":
        return lazy_rademacher(q)
    return DistributionSpec(name)


# ---------------------------------------------------------------------------
# RNG streams (counter-based, schedule independent)
# ---------------------------------------------------------------------------

@dataclass
class RngStream:
    """A reproducible random stream keyed by (master_seed, stream_index).

    The pair is packed into a 128-bit Philox key, so each stream is a
    counter-based generator with no shared state: the sequence depends only
    on the key, never on which thread or in which order streams are used.
    """

    master_seed: int
    stream_index: int
    _gen: Generator | None = field(default=None, repr=False, compare=False)

    @property
    def generator(self) -> Generator:
        if self._gen is None:
            key = (self.master_seed & _MASK64) | ((self.stream_index & _MASK64) << 64)
            self._gen = Generator(Philox(key=key))
        return self._gen

    def fresh(self) -> "RngStream":
        """A rewound copy: same key, state at the start of the sequence."""
        return RngStream(self.master_seed, self.stream_index)


def derive_trial_stream(master_seed: int, trial_index: int) -> RngStream:
    """Stream for one trial. Injective in trial_index for a fixed master seed."""
    return RngStream(master_seed, trial_index)


def sample_entry(dist: DistributionSpec, rng: RngStream) -> float:
    """One draw from the law."""
    return float(dist.sample(rng))


# ---------------------------------------------------------------------------
# Symmetric matrices
# ---------------------------------------------------------------------------

class DimensionMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class SymmetricMatrix:
    """Dense real symmetric matrix; a(i,j) == a(j,i) bit-for-bit."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"square matrix required, got shape {a.shape}")
        if a.shape[0] < 1:
            raise ValueError("dimension must be >= 1")
        if not np.array_equal(a, a.T):
            raise ValueError("matrix is not exactly symmetric")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_upper(cls, raw: np.ndarray) -> "SymmetricMatrix":
        """Mirror the upper triangle of `raw` (the authoritative half) onto the lower."""
        raw = np.asarray(raw, dtype=float)
        a = np.triu(raw) + np.triu(raw, 1).T
        return cls(a)

    def upper_entries(self) -> np.ndarray:
        """Row-major upper-triangle entries, the storage-order serialization."""
        iu = np.triu_indices(self.n)
        return self.entries[iu]


def sample_wigner(n: int, dist: DistributionSpec, rng: RngStream) -> SymmetricMatrix:
    """Symmetric matrix with i.i.d. entries on and above the diagonal."""
    if n < 1:
        raise ValueError("n must be >= 1")
    draws = np.atleast_1d(dist.sample(rng, size=n * (n + 1) // 2))
    a = np.zeros((n, n))
    a[np.triu_indices(n)] = draws
    return SymmetricMatrix(a + np.triu(a, 1).T)


def compose(M: SymmetricMatrix, N: SymmetricMatrix) -> SymmetricMatrix:
    """Entrywise sum M + N."""
    if M.n != N.n:
        raise DimensionMismatchError(f"dimensions differ: {M.n} vs {N.n}")
    return SymmetricMatrix(M.entries + N.entries)


# ---------------------------------------------------------------------------
# Deterministic perturbations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerturbationSpec:
    """Recipe for the deterministic summand.

    kind: "zero" | "scaled_identity" | "diagonal_ramp" | "rank_one" | "custom".
    s scales the named shapes; rank_one uses direction u (default e_1, always
    renormalized); custom reads an upper-triangle text file at `path`.
    target_norm, when set, rescales so the operator norm matches it.
    """

    kind: str = "zero"
    s: float = 1.0
    u: tuple[float, ...] | None = None
    path: str | None = None
    target_norm: float | None = None

    _KINDS = ("zero", "scaled_identity", "diagonal_ramp", "rank_one", "custom")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if self.kind == "custom" and not self.path:
            raise ValueError("custom perturbation needs a file path")
        if self.target_norm is not None and self.target_norm <= 0:
            raise ValueError("target_norm must be positive")


def read_matrix_file(path: str | Path) -> SymmetricMatrix:
    """Parse the plain-text format: header n, then n(n+1)/2 upper-triangle
    reals, row-major, whitespace separated."""
    tokens = Path(path).read_text().split()
    if not tokens:
        raise ValueError(f"{path}: empty matrix file")
    try:
        n = int(tokens[0])
    except ValueError:
        raise ValueError(f"{path}: header must be the integer dimension, got {tokens[0]!r}")
    if n < 1:
        raise ValueError(f"{path}: dimension must be >= 1, got {n}")
    expected = n * (n + 1) // 2
    if len(tokens) - 1 != expected:
        raise ValueError(
            f"{path}: expected {expected} upper-triangle entries for n={n}, got {len(tokens) - 1}"
        )
    try:
        vals = np.array([float(t) for t in tokens[1:]])
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})")
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"{path}: entries must be finite")
    a = np.zeros((n, n))
    a[np.triu_indices(n)] = vals
    return SymmetricMatrix(a + np.triu(a, 1).T)


def write_matrix_file(M: SymmetricMatrix, path: str | Path) -> None:
    """Inverse of read_matrix_file."""
    body = " ".join(repr(v) for v in M.upper_entries())
    Path(path).write_text(f"{M.n}\n{body}\n")


def make_perturbation(spec: PerturbationSpec, n: int) -> SymmetricMatrix:
    """Realize the deterministic matrix for dimension n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if spec.kind == "zero":
        a = np.zeros((n, n))
    elif spec.kind == "scaled_identity":
        a = spec.s * np.eye(n)
    elif spec.kind == "diagonal_ramp":
        a = np.diag(spec.s * np.arange(1, n + 1) / n)
    elif spec.kind == "rank_one":
        u = np.zeros(n)
        if spec.u is None:
            u[0] = 1.0
        else:
            u0 = np.asarray(spec.u, dtype=float)
            if u0.shape != (n,):
                raise ValueError(f"rank_one direction has length {u0.size}, need {n}")
            nrm = np.linalg.norm(u0)
            if nrm == 0:
                raise ValueError("rank_one direction must be nonzero")
            u = u0 / nrm
        a = spec.s * np.outer(u, u)
    else:  # custom
        m = read_matrix_file(spec.path)
        if m.n != n:
            raise DimensionMismatchError(f"custom file has n={m.n}, requested {n}")
        a = np.array(m.entries)

    if spec.target_norm is not None:
        cur = float(np.abs(np.linalg.eigvalsh(a)).max()) if n > 0 else 0.0
        if cur == 0.0:
            raise ValueError("cannot rescale a zero matrix to a nonzero target norm")
        a = a * (spec.target_norm / cur)
    return SymmetricMatrix.from_upper(a)
