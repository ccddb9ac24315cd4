"""Censored-block-model instances.

A problem instance is an Erdos-Renyi graph G(n, alpha/n) whose nodes
carry hidden signs sigma_i in {-1,+1}; each present edge reveals the
product sigma_i*sigma_j flipped with probability epsilon.  This module
generates instances, computes the detection / exact-recovery thresholds
and the flip-invariant overlap score, and defines the on-disk instance
format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import MAX_SEED, substream

FORMAT_HEADER = "%cbm 1"


class InstanceFormatError(ValueError):
    """An instance file violates the on-disk format."""


def sign_pm1(x) -> np.ndarray:
    """Elementwise sign into {-1,+1} with the convention sign(0) = +1."""
    return np.where(np.asarray(x) >= 0, 1, -1).astype(np.int64)


@dataclass(frozen=True)
class CbmParams:
    """Generation parameters: size, target average degree, noise, seed."""

    n: int
    alpha: float
    epsilon: float
    seed: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 <= self.epsilon <= 0.5:
            raise ValueError(f"epsilon must lie in [0, 0.5], got {self.epsilon}")
        if self.alpha / self.n > 1.0:
            raise ValueError(
                f"alpha/n = {self.alpha / self.n} exceeds 1 (invalid edge probability)"
            )
        if not 0 <= self.seed <= MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class Labeling:
    """A full assignment of {-1,+1} labels to the n nodes."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.int64)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("labeling must be a non-empty 1-d array")
        if not np.all(np.abs(vals) == 1):
            raise ValueError("labels must be +1 or -1")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class CbmInstance:
    """One generated problem: planted signs plus censored edge list.

    ``edges`` is an (m, 3) int64 array with rows (i, j, w), i < j,
    w in {-1,+1}, kept sorted by (i, j).  Instances are immutable after
    construction and safe to share read-only across workers.
    """

    params: CbmParams
    sigma: np.ndarray
    edges: np.ndarray

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=np.int64)
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 3)
        n = self.params.n
        if sigma.shape != (n,):
            raise ValueError(f"sigma must have shape ({n},), got {sigma.shape}")
        if not np.all(np.abs(sigma) == 1):
            raise ValueError("sigma entries must be +1 or -1")
        if edges.size:
            i, j, w = edges[:, 0], edges[:, 1], edges[:, 2]
            if i.min() < 0 or j.max() >= n:
                raise ValueError("edge endpoint out of range")
            if np.any(i >= j):
                raise ValueError("edges must satisfy i < j (no self-loops)")
            if not np.all(np.abs(w) == 1):
                raise ValueError("edge weights must be +1 or -1")
            order = np.lexsort((j, i))
            edges = edges[order]
            dup = (np.diff(edges[:, 0]) == 0) & (np.diff(edges[:, 1]) == 0)
            if np.any(dup):
                raise ValueError("duplicate edge")
        sigma.setflags(write=False)
        edges.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "edges", edges)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def m(self) -> int:
        return self.edges.shape[0]

    def degrees(self) -> np.ndarray:
        d = np.bincount(self.edges[:, 0], minlength=self.n)
        d += np.bincount(self.edges[:, 1], minlength=self.n)
        return d


def _sample_pair_indices(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Indices of present pairs among the C(n,2) linearized node pairs.

    Geometric skip-sampling: jump lengths between selected pairs are
    drawn by inverting the geometric CDF, which is O(m) regardless of n.
    """
    total = n * (n - 1) // 2
    if total == 0 or p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    log1mp = math.log1p(-p)
    block = int(min(4 << 20, total * p + 6.0 * math.sqrt(total * p) + 16.0))
    chunks = []
    cum = 0.0
    while True:
        u = rng.random(block)
        with np.errstate(divide="ignore"):
            jumps = np.floor(np.log(u) / log1mp) + 1.0
        c = cum + np.cumsum(jumps)
        if not np.isfinite(c[-1]) or c[-1] > total:
            chunks.append(c[np.isfinite(c) & (c <= total)])
            break
        chunks.append(c)
        cum = float(c[-1])
    pos = np.concatenate(chunks) - 1.0
    return pos.astype(np.int64)


def _decode_pair_indices(pos: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map linear pair indices to (i, j) with i < j; row i holds pairs (i, i+1..n-1)."""

    def row_start(i):
        return i * (2 * n - i - 1) // 2

    k = pos.astype(np.float64)
    tn = 2.0 * n - 1.0
    i = np.floor((tn - np.sqrt(tn * tn - 8.0 * k)) / 2.0).astype(np.int64)
    np.clip(i, 0, n - 2, out=i)
    # float inversion can be off by one near row boundaries; fix up exactly
    while True:
        too_low = pos < row_start(i)
        if not np.any(too_low):
            break
        i[too_low] -= 1
    while True:
        too_high = pos >= row_start(i + 1)
        if not np.any(too_high):
            break
        i[too_high] += 1
    j = i + 1 + (pos - row_start(i))
    return i, j


def generate(params: CbmParams) -> CbmInstance:
    """Draw one instance; a pure function of ``params``.

    Signs are i.i.d. uniform on {-1,+1}; each node pair is an edge
    independently with probability alpha/n; a present edge (i, j)
    carries w = sigma_i*sigma_j with probability 1-epsilon and the
    opposite sign otherwise.
    """
    n = params.n
    p = params.alpha / n
    sigma = 2 * substream(params.seed, "sigma").integers(0, 2, size=n, dtype=np.int64) - 1
    pos = _sample_pair_indices(n, p, substream(params.seed, "edges"))
    i, j = _decode_pair_indices(pos, n)
    u = substream(params.seed, "noise").random(pos.size)
    w = sigma[i] * sigma[j] * np.where(u < params.epsilon, -1, 1)
    edges = np.column_stack([i, j, w]) if pos.size else np.empty((0, 3), dtype=np.int64)
    return CbmInstance(params=params, sigma=sigma, edges=edges)


def _label_array(labeling) -> np.ndarray:
    if isinstance(labeling, Labeling):
        return labeling.values
    return Labeling(np.asarray(labeling)).values


def overlap(truth, guess) -> float:
    """Flip-invariant agreement score in [0, 1].

    With a = fraction of agreeing labels, returns 2*(max(a, 1-a) - 1/2):
    1 for perfect recovery up to a global sign flip, ~0 for a random
    guess.
    """
    t = _label_array(truth)
    g = _label_array(guess)
    if t.shape != g.shape:
        raise ValueError(f"length mismatch: {t.shape} vs {g.shape}")
    agree = int(np.count_nonzero(t == g))
    best = max(agree, t.size - agree)  # integer max keeps the global flip exact
    return 2.0 * (best / t.size - 0.5)


def alpha_detect(epsilon: float) -> float:
    """Average degree above which partial recovery becomes possible."""
    if not 0.0 <= epsilon < 0.5:
        raise ValueError(
            f"no finite detection threshold for epsilon = {epsilon} (need 0 <= epsilon < 0.5)"
        )
    return 1.0 / (1.0 - 2.0 * epsilon) ** 2


def alpha_exact(epsilon: float, n) -> float:
    """Average degree above which exact recovery becomes possible at size n."""
    if not 0.0 <= epsilon < 0.5:
        raise ValueError(
            f"no finite exact-recovery threshold for epsilon = {epsilon} (need 0 <= epsilon < 0.5)"
        )
    if not n >= 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return 2.0 * math.log(n) / (1.0 - 2.0 * epsilon) ** 2


def beta0(epsilon: float) -> float:
    """Coupling strength of the posterior, (1/2)*log((1-eps)/eps)."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"infinite coupling at epsilon = {epsilon} (need 0 < epsilon < 1)")
    return 0.5 * math.log((1.0 - epsilon) / epsilon)


def empirical_alpha(instance: CbmInstance) -> float:
    """Realized average degree 2m/n of a generated graph."""
    return 2.0 * instance.m / instance.n


def write_instance(instance: CbmInstance, path) -> None:
    """Serialize to the text instance format (see ``read_instance``)."""
    lines = [FORMAT_HEADER]
    lines.append(
        f"{instance.n} {instance.m} {instance.params.epsilon!r} {instance.params.seed}"
    )
    lines.append("sigma")
    lines.append(" ".join(str(int(s)) for s in instance.sigma))
    for i, j, w in instance.edges:
        lines.append(f"{i} {j} {w}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_instance(path) -> CbmInstance:
    """Parse an instance file.

    Format (UTF-8 text, ``#`` lines are comments):
    line 1 ``%cbm 1``; line 2 ``n m epsilon seed``; line 3 ``sigma``;
    line 4 the n signs; then m lines ``i j w`` with 0-based i < j and
    w in {-1, 1}.

    The file does not carry the generation target alpha, so the returned
    params hold the realized average degree 2m/n instead.
    """
    raw = Path(path).read_text(encoding="utf-8").splitlines()
    lines = [ln.strip() for ln in raw if not ln.lstrip().startswith("#")]
    if not lines or lines[0] != FORMAT_HEADER:
        raise InstanceFormatError(f"bad header, expected {FORMAT_HEADER!r}")
    try:
        n_s, m_s, eps_s, seed_s = lines[1].split()
        n, m, eps, seed = int(n_s), int(m_s), float(eps_s), int(seed_s)
    except (IndexError, ValueError) as exc:
        raise InstanceFormatError(f"bad size line: {exc}") from exc
    if len(lines) < 4 or lines[2] != "sigma":
        raise InstanceFormatError("missing 'sigma' marker line")
    try:
        sigma = np.array([int(t) for t in lines[3].split()], dtype=np.int64)
    except ValueError as exc:
        raise InstanceFormatError(f"bad sigma line: {exc}") from exc
    if sigma.size != n:
        raise InstanceFormatError(f"expected {n} sigma entries, got {sigma.size}")
    edge_lines = lines[4:]
    if len(edge_lines) != m:
        raise InstanceFormatError(f"expected {m} edge lines, got {len(edge_lines)}")
    edges = np.empty((m, 3), dtype=np.int64)
    for k, ln in enumerate(edge_lines):
        toks = ln.split()
        if len(toks) != 3:
            raise InstanceFormatError(f"bad edge line {k}: {ln!r}")
        try:
            edges[k] = [int(t) for t in toks]
        except ValueError as exc:
            raise InstanceFormatError(f"bad edge line {k}: {exc}") from exc
    alpha = 2.0 * m / n if m else 0.5 / n  # params require alpha > 0
    try:
        params = CbmParams(n=n, alpha=alpha, epsilon=eps, seed=seed)
        return CbmInstance(params=params, sigma=sigma, edges=edges)
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from exc
