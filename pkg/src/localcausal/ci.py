"""Conditional-independence backends and the counting cache.

Independence is the positive return: ``test(a, b, s) -> True`` means a and b
are judged independent given s. The cache canonicalizes queries, counts
distinct evaluations and keeps every discovered separation, which the
learners later use to license orientation rules.
"""

from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass, field
from typing import Iterable, Protocol, runtime_checkable

import numpy as np
from scipy.stats import norm

from .errors import NumericalError, ParseError
from .graph import Dag, d_separated


@runtime_checkable
class CITester(Protocol):
    """Behavioral contract: symmetric in (a, b), deterministic given state."""

    n_vars: int

    def test(self, a: int, b: int, s: Iterable[int] = ()) -> bool: ...


def _validate_args(n_vars: int, a: int, b: int, s: Iterable[int]) -> frozenset[int]:
    ss = frozenset(s)
    for v in (a, b, *ss):
        if not isinstance(v, (int, np.integer)) or not (0 <= v < n_vars):
            raise ValueError(f"invalid variable index {v!r}")
    if a == b:
        raise ValueError("variables must differ")
    if a in ss or b in ss:
        raise ValueError("conditioning set must exclude both variables")
    return ss


# -- oracle backend -----------------------------------------------------------


class OracleCI:
    """Exact independence answers read off a known DAG."""

    def __init__(self, dag: Dag):
        self.dag = dag

    @property
    def n_vars(self) -> int:
        return self.dag.n

    def test(self, a: int, b: int, s: Iterable[int] = ()) -> bool:
        return d_separated(self.dag, a, b, s)


def oracle_test(g: Dag, a: int, b: int, s: Iterable[int] = ()) -> bool:
    return d_separated(g, a, b, s)


# -- Gaussian backend ---------------------------------------------------------


@dataclass
class GaussianTestConfig:
    """Partial-correlation z-test settings over a fixed correlation matrix."""

    correlation: np.ndarray
    sample_size: int
    alpha: float = 0.01

    def __post_init__(self):
        self.correlation = np.asarray(self.correlation, dtype=float)
        p = self.correlation.shape[0]
        if self.correlation.shape != (p, p):
            raise ValueError("correlation matrix must be square")
        if not np.allclose(self.correlation, self.correlation.T, atol=1e-8):
            raise ValueError("correlation matrix must be symmetric")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")
        if self.sample_size < 1:
            raise ValueError("sample size must be positive")


class GaussianCI:
    """Fisher-z partial-correlation test against a correlation matrix."""

    def __init__(self, correlation: np.ndarray, sample_size: int,
                 alpha: float = 0.01):
        self.config = GaussianTestConfig(correlation, sample_size, alpha)
        self._r = self.config.correlation
        self._threshold = norm.ppf(1.0 - alpha / 2.0)

    @classmethod
    def from_data(cls, data: np.ndarray, alpha: float = 0.01) -> "GaussianCI":
        data = np.asarray(data, dtype=float)
        if data.ndim != 2 or data.shape[0] < 2:
            raise ValueError("data must be a 2-d array with at least 2 rows")
        return cls(np.corrcoef(data, rowvar=False), data.shape[0], alpha)

    @classmethod
    def from_csv(cls, path: str, alpha: float = 0.01) -> "GaussianCI":
        _, data = load_csv_dataset(path)
        return cls.from_data(data, alpha)

    @property
    def n_vars(self) -> int:
        return self._r.shape[0]

    @property
    def alpha(self) -> float:
        return self.config.alpha

    @property
    def sample_size(self) -> int:
        return self.config.sample_size

    def partial_correlation(self, a: int, b: int,
                            s: Iterable[int] = ()) -> float:
        ss = _validate_args(self.n_vars, a, b, s)
        cond = sorted(ss)
        r = self._r
        try:
            if len(cond) == 0:
                return float(r[a, b])
            if len(cond) <= 2:
                return _recursive_partial(r, a, b, cond)
            idx = [a, b, *cond]
            prec = np.linalg.inv(r[np.ix_(idx, idx)])
            denom = prec[0, 0] * prec[1, 1]
            if denom <= 0:
                raise NumericalError("non-positive precision diagonal")
            return float(-prec[0, 1] / math.sqrt(denom))
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"singular correlation submatrix for ({a}, {b} | {cond})"
            ) from exc

    def statistic(self, a: int, b: int, s: Iterable[int] = ()) -> float:
        ss = frozenset(s)
        if self.sample_size <= len(ss) + 3:
            raise ValueError(
                f"sample size {self.sample_size} too small for |s|={len(ss)}"
            )
        rho = self.partial_correlation(a, b, ss)
        rho = max(min(rho, 1.0 - 1e-12), -1.0 + 1e-12)
        z = 0.5 * math.log((1.0 + rho) / (1.0 - rho))
        return math.sqrt(self.sample_size - len(ss) - 3) * abs(z)

    def test(self, a: int, b: int, s: Iterable[int] = ()) -> bool:
        return self.statistic(a, b, s) <= self._threshold

    def association(self, a: int, b: int, s: Iterable[int] = ()) -> float:
        """Strength score used to rank candidates during blanket growth."""
        return abs(self.partial_correlation(a, b, s))


def _recursive_partial(r: np.ndarray, a: int, b: int, cond: list[int]) -> float:
    if not cond:
        return float(r[a, b])
    c, rest = cond[-1], cond[:-1]
    r_ab = _recursive_partial(r, a, b, rest)
    r_ac = _recursive_partial(r, a, c, rest)
    r_bc = _recursive_partial(r, b, c, rest)
    denom = (1.0 - r_ac * r_ac) * (1.0 - r_bc * r_bc)
    if denom <= 1e-24:
        raise NumericalError(
            f"degenerate partial correlation for ({a}, {b} | {cond})"
        )
    return (r_ab - r_ac * r_bc) / math.sqrt(denom)


def gaussian_test(cfg: GaussianTestConfig, a: int, b: int,
                  s: Iterable[int] = ()) -> bool:
    tester = GaussianCI(cfg.correlation, cfg.sample_size, cfg.alpha)
    return tester.test(a, b, s)


def load_csv_dataset(path: str) -> tuple[list[str], np.ndarray]:
    """Read a numeric CSV with a header row into (names, samples)."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                names = next(reader)
            except StopIteration:
                raise ParseError(f"{path}: empty file") from None
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(names):
                    raise ParseError(f"{path}:{lineno}: ragged row")
                try:
                    rows.append([float(x) for x in row])
                except ValueError as exc:
                    raise ParseError(f"{path}:{lineno}: {exc}") from None
    except OSError as exc:
        raise ParseError(f"cannot read dataset {path}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return [n.strip() for n in names], np.asarray(rows, dtype=float)


# -- counting / caching layer -------------------------------------------------


@dataclass
class CICache:
    """Memoized results plus the set of certified separations.

    ``count`` increments only on cache misses, so it equals the number of
    distinct canonical queries evaluated. ``ind_set`` maps each unordered
    pair to every conditioning set under which it tested independent. Pass
    ``synchronized=True`` when one cache is shared across threads.
    """

    synchronized: bool = False
    count: int = 0
    _store: dict = field(default_factory=dict, repr=False)
    ind_set: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.synchronized:
            self._lock = threading.Lock()

    @staticmethod
    def key(a: int, b: int, s: Iterable[int]) -> tuple[int, int, frozenset[int]]:
        lo, hi = (a, b) if a < b else (b, a)
        return (lo, hi, frozenset(s))

    def _evaluate(self, inner, a, b, ss):
        key = self.key(a, b, ss)
        hit = self._store.get(key)
        if hit is not None:
            return hit
        if hasattr(inner, "association"):
            score = inner.association(a, b, ss)
            independent = inner.test(a, b, ss)
        else:
            score = None
            independent = inner.test(a, b, ss)
        self.count += 1
        self._store[key] = (independent, score)
        if independent:
            self.ind_set.setdefault((key[0], key[1]), set()).add(key[2])
        return independent, score

    def test(self, inner: CITester, a: int, b: int,
             s: Iterable[int] = ()) -> bool:
        ss = frozenset(s)
        if self._lock is not None:
            with self._lock:
                return self._evaluate(inner, a, b, ss)[0]
        return self._evaluate(inner, a, b, ss)[0]

    def test_with_score(self, inner: CITester, a: int, b: int,
                        s: Iterable[int] = ()) -> tuple[bool, float | None]:
        ss = frozenset(s)
        if self._lock is not None:
            with self._lock:
                return self._evaluate(inner, a, b, ss)
        return self._evaluate(inner, a, b, ss)

    def separators(self, a: int, b: int) -> set[frozenset[int]]:
        lo, hi = (a, b) if a < b else (b, a)
        return self.ind_set.get((lo, hi), set())

    def has_separator(self, a: int, b: int) -> bool:
        return bool(self.separators(a, b))

    def has_separator_containing(self, a: int, b: int, v: int) -> bool:
        return any(v in s for s in self.separators(a, b))


def cached_test(cache: CICache, inner: CITester, a: int, b: int,
                s: Iterable[int] = ()) -> bool:
    return cache.test(inner, a, b, s)


class CachedTester:
    """A tester bound to its cache; the learners' working handle."""

    def __init__(self, inner: CITester, cache: CICache | None = None):
        self.inner = inner
        self.cache = cache if cache is not None else CICache()

    @property
    def n_vars(self) -> int:
        return self.inner.n_vars

    @property
    def count(self) -> int:
        return self.cache.count

    def test(self, a: int, b: int, s: Iterable[int] = ()) -> bool:
        return self.cache.test(self.inner, a, b, s)

    def test_with_score(self, a: int, b: int,
                        s: Iterable[int] = ()) -> tuple[bool, float | None]:
        return self.cache.test_with_score(self.inner, a, b, s)

    @property
    def ranks_candidates(self) -> bool:
        return hasattr(self.inner, "association")


def as_session(tester, cache: CICache | None = None) -> CachedTester:
    """Wrap a raw tester (idempotent for CachedTester without a new cache)."""
    if isinstance(tester, CachedTester):
        if cache is None or tester.cache is cache:
            return tester
        return CachedTester(tester.inner, cache)
    return CachedTester(tester, cache)
