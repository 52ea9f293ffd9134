"""Monte Carlo measurement simulation and statistical post-processing.

Outcome sampling is inverse-CDF over the exact outcome distribution;
covariant runs never materialize a POVM and instead apply the tight-frame
closed-form estimator (d+1) <b|U O U^dag|b> - tr(O) per draw. Shot streams are
reproducible bit-for-bit given the seed: chunk sizes are fixed constants, so
the generator consumption order never depends on the requested shot count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import require_density, require_hermitian
from .povms import Povm
from .frames import DualFrame

_COVARIANT_CHUNK = 32768


def sample_outcomes(povm: Povm, rho: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. outcome indices drawn from p_b = <mu_b, rho>."""
    rho = require_density(rho)
    probs = povm.probabilities(rho)
    probs = np.where(probs < 0, 0.0, probs)
    total = probs.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"outcome probabilities sum to {total}, not 1")
    cdf = np.cumsum(probs / total)
    cdf[-1] = 1.0
    draws = np.searchsorted(cdf, rng.random(n), side="right")
    return np.minimum(draws, povm.n_outcomes - 1).astype(np.int64)


def evaluate_estimator(dual: DualFrame, observable: np.ndarray, outcomes: np.ndarray) -> np.ndarray:
    """Per-shot estimator values o(b_k) = <O, mu~_{b_k}>."""
    outcomes = np.asarray(outcomes)
    if outcomes.size and (outcomes.min() < 0 or outcomes.max() >= dual.povm.n_outcomes):
        raise IndexError("outcome index out of range for this dual frame")
    return dual.values(observable)[outcomes]


def median_of_means(values: np.ndarray, groups: int) -> float:
    """Median of ``groups`` contiguous group means; remainder shots go to the first groups."""
    n = len(values)
    if not 2 <= groups <= n:
        raise ValueError(f"need 2 <= K <= N, got K = {groups}, N = {n}")
    base, extra = divmod(n, groups)
    sizes = np.full(groups, base)
    sizes[:extra] += 1
    edges = np.concatenate([[0], np.cumsum(sizes)])
    means = np.array([values[a:b].mean() for a, b in zip(edges[:-1], edges[1:])])
    return float(np.median(means))


@dataclass
class RunSummary:
    """Sample statistics of one shot stream."""

    n: int
    mean: float
    sample_variance: float            # 1/(N-1) sum (o_k - mean)^2
    median_of_means: float | None = None
    mom_groups: int | None = None
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "sample_variance": self.sample_variance,
            "median_of_means": self.median_of_means,
            "mom_groups": self.mom_groups,
            "seed": self.seed,
        }


def summarize(values: np.ndarray, mom_groups: int | None = None, seed: int | None = None) -> RunSummary:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise ValueError("need at least two shots to summarize")
    mom = median_of_means(values, mom_groups) if mom_groups is not None else None
    return RunSummary(
        n=int(values.size),
        mean=float(values.mean()),
        sample_variance=float(values.var(ddof=1)),
        median_of_means=mom,
        mom_groups=mom_groups,
        seed=seed,
    )


def covariant_values(
    d: int, rho: np.ndarray, observable: np.ndarray, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Per-shot canonical-estimator values for the covariant measurement.

    Each shot draws U ~ Haar, samples b with probability <b|U rho U^dag|b>,
    and evaluates (d+1) <b|U O U^dag|b> - tr(O).
    """
    rho = require_density(rho)
    observable = require_hermitian(observable, what="observable")
    tr_o = np.trace(observable).real
    out = np.empty(n)
    done = 0
    while done < n:
        chunk = min(_COVARIANT_CHUNK, n - done)
        z = rng.standard_normal((chunk, d, d)) + 1j * rng.standard_normal((chunk, d, d))
        q, r = np.linalg.qr(z / np.sqrt(2))
        diag = np.einsum("bii->bi", r)
        u = q * (diag / np.abs(diag))[:, None, :]
        probs = np.einsum("bki,ij,bkj->bk", u, rho, u.conj()).real
        probs = np.clip(probs, 0.0, None)
        cdf = np.cumsum(probs, axis=1)
        cdf /= cdf[:, -1:]
        picks = (rng.random(chunk)[:, None] > cdf).sum(axis=1)
        picks = np.minimum(picks, d - 1)
        rows = u[np.arange(chunk), picks]
        core = np.einsum("bi,ij,bj->b", rows, observable, rows.conj()).real
        out[done : done + chunk] = (d + 1) * core - tr_o
        done += chunk
    return out


def covariant_run(
    d: int,
    rho: np.ndarray,
    observable: np.ndarray,
    n: int,
    rng: np.random.Generator,
    mom_groups: int | None = None,
    seed: int | None = None,
) -> RunSummary:
    return summarize(covariant_values(d, rho, observable, n, rng), mom_groups, seed)


@dataclass
class Histogram:
    """Fixed-width binning of estimator values; densities integrate to 1."""

    edges: np.ndarray       # (bins + 1,)
    counts: np.ndarray      # (bins,)
    densities: np.ndarray   # counts / (N * width)

    def rows(self) -> list[tuple[float, float, int, float]]:
        return [
            (float(self.edges[i]), float(self.edges[i + 1]), int(self.counts[i]), float(self.densities[i]))
            for i in range(len(self.counts))
        ]


def histogram_export(values: np.ndarray, bins: int) -> Histogram:
    if bins < 1:
        raise ValueError("need at least one bin")
    values = np.asarray(values, dtype=float)
    counts, edges = np.histogram(values, bins=bins)
    widths = np.diff(edges)
    densities = counts / (values.size * widths)
    return Histogram(edges=edges, counts=counts, densities=densities)


def probability_mass(values: np.ndarray, decimals: int = 10) -> list[tuple[float, float]]:
    """Exact probability-mass table for finite-outcome estimator streams."""
    rounded = np.round(np.asarray(values, dtype=float), decimals)
    uniq, counts = np.unique(rounded, return_counts=True)
    return [(float(v), float(c) / len(rounded)) for v, c in zip(uniq, counts)]


@dataclass
class RunningMoments:
    """Mergeable count/mean/M2 accumulator for partitioned shot generation."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def add(self, values: np.ndarray) -> "RunningMoments":
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return self
        other = RunningMoments(
            count=int(values.size),
            mean=float(values.mean()),
            m2=float(((values - values.mean()) ** 2).sum()),
        )
        return self.merge(other)

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean, other.m2
            return self
        if other.count == 0:
            return self
        total = self.count + other.count
        delta = other.mean - self.mean
        self.mean += delta * other.count / total
        self.m2 += other.m2 + delta**2 * self.count * other.count / total
        self.count = total
        return self

    @property
    def sample_variance(self) -> float:
        if self.count < 2:
            raise ValueError("need at least two shots")
        return self.m2 / (self.count - 1)
