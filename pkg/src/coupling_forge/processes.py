"""Independent tilted processes ``(Z_i)_{i<=n}`` whose law, conditioned on
``sum i*Z_i = n``, is the law of the component counts.

* assembly:  ``Z_i ~ Poisson(m_i x^i / i!)``, ``x > 0``
* multiset:  ``Z_i ~ NegBin(m_i, x^i)``, ``0 < x < 1``
* selection: ``Z_i ~ Binomial(m_i, x^i / (1 + x^i))``, ``x > 0``

Everything is evaluated in log space where it matters so that large
weights (``m_i = (i-1)!``) and large ``x`` neither overflow nor cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .special import beta_pair, gamma_pq, log_binomial_pmf, log_poisson_pmf
from .structures import ColumnLabel, StructureSpec, count_structures, enumerate_column_labels

VALID_RANGE = {
    "assembly": "x > 0",
    "multiset": "0 < x < 1",
    "selection": "0 < x < inf",
}

NEG_INF = -math.inf


def check_parameter(kind: str, x: float) -> float:
    x = float(x)
    ok = x > 0 and math.isfinite(x)
    if kind == "multiset":
        ok = ok and x < 1
    if not ok:
        raise ParameterError(f"parameter x={x} out of range for {kind}: need {VALID_RANGE[kind]}")
    return x


def _logsumexp(values):
    finite = [v for v in values if v != NEG_INF]
    if not finite:
        return NEG_INF
    top = max(finite)
    return top + math.log(math.fsum(math.exp(v - top) for v in finite))


@dataclass(frozen=True)
class ProcessFamily:
    """The process ``(Z_i(n, x))_{i<=n}`` for one structure and one ``x``."""

    spec: StructureSpec
    x: float
    # per-index parameters, index 0 <-> i = 1
    _log_rate: tuple = field(init=False, repr=False, compare=False)
    _p: tuple = field(init=False, repr=False, compare=False)
    _q: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = check_parameter(self.spec.kind, self.x)
        object.__setattr__(self, "x", x)
        logx = math.log(x)
        log_rate, p, q = [], [], []
        for i in range(1, self.spec.n + 1):
            mi = self.spec.weight(i)
            if self.spec.kind == "assembly":
                log_rate.append(math.log(mi) + i * logx - math.lgamma(i + 1) if mi else NEG_INF)
                p.append(math.nan)
                q.append(math.nan)
            elif self.spec.kind == "multiset":
                log_rate.append(NEG_INF)
                p.append(math.exp(i * logx))
                q.append(-math.expm1(i * logx))
            else:
                t = i * logx
                log_rate.append(NEG_INF)
                # logistic split keeps both sides accurate for large |t|
                if t >= 0:
                    e = math.exp(-t)
                    p.append(1.0 / (1.0 + e))
                    q.append(e / (1.0 + e))
                else:
                    e = math.exp(t)
                    p.append(e / (1.0 + e))
                    q.append(1.0 / (1.0 + e))
        object.__setattr__(self, "_log_rate", tuple(log_rate))
        object.__setattr__(self, "_p", tuple(p))
        object.__setattr__(self, "_q", tuple(q))

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def kind(self) -> str:
        return self.spec.kind

    def _index(self, i):
        if not 1 <= i <= self.spec.n:
            raise ParameterError(f"index i={i} outside 1..{self.spec.n}")
        return self.spec.weight(i)

    def rate(self, i: int) -> float:
        """Poisson mean ``m_i x^i / i!`` (assemblies only)."""
        self._index(i)
        return math.exp(self._log_rate[i - 1])

    def success(self, i: int) -> tuple[float, float]:
        """``(p, 1 - p)`` of the negative-binomial or binomial ``Z_i``."""
        self._index(i)
        return self._p[i - 1], self._q[i - 1]

    def log_pmf(self, i: int, k: int) -> float:
        mi = self._index(i)
        if k < 0:
            return NEG_INF
        if mi == 0:
            return 0.0 if k == 0 else NEG_INF
        if self.kind == "assembly":
            return log_poisson_pmf(k, math.exp(self._log_rate[i - 1]))
        p, q = self._p[i - 1], self._q[i - 1]
        if self.kind == "multiset":
            # C(m+k-1, k) p^k q^m = m/(m+k) * C(m+k, m) q^m p^k
            return math.log(mi / (mi + k)) + log_binomial_pmf(mi, mi + k, q, p)
        if k > mi:
            return NEG_INF
        return log_binomial_pmf(k, mi, p, q)

    def pmf(self, i: int, k: int) -> float:
        """``P(Z_i = k)``."""
        return math.exp(self.log_pmf(i, k))

    def cdf(self, i: int, k: int) -> float:
        """``P(Z_i <= k)``; zero for negative ``k``."""
        mi = self._index(i)
        if k < 0:
            return 0.0
        if mi == 0:
            return 1.0
        if self.kind == "assembly":
            lam = math.exp(self._log_rate[i - 1])
            return gamma_pq(k + 1, lam)[1]
        p, q = self._p[i - 1], self._q[i - 1]
        if self.kind == "multiset":
            return beta_pair(p, k + 1, mi, y=q)[1]
        if k >= mi:
            return 1.0
        return beta_pair(q, mi - k, k + 1, y=p)[0]

    def sf(self, i: int, k: int) -> float:
        """``P(Z_i >= k) = 1 - cdf(i, k - 1)``, computed without cancellation."""
        mi = self._index(i)
        if k <= 0:
            return 1.0
        if mi == 0:
            return 0.0
        if self.kind == "assembly":
            lam = math.exp(self._log_rate[i - 1])
            return gamma_pq(k, lam)[0]
        p, q = self._p[i - 1], self._q[i - 1]
        if self.kind == "multiset":
            return beta_pair(p, k, mi, y=q)[0]
        if k > mi:
            return 0.0
        return beta_pair(q, mi - k + 1, k, y=p)[1]

    def support_max(self, i: int) -> float:
        """Largest value ``Z_i`` can take (``inf`` when unbounded)."""
        mi = self._index(i)
        if mi == 0:
            return 0
        return mi if self.kind == "selection" else math.inf

    def sample(self, i: int, rng: np.random.Generator, size=None):
        """Unconditional draws of ``Z_i``."""
        mi = self._index(i)
        if mi == 0:
            return np.zeros(size, dtype=np.int64) if size is not None else 0
        if self.kind == "assembly":
            return rng.poisson(math.exp(self._log_rate[i - 1]), size=size)
        p, q = self._p[i - 1], self._q[i - 1]
        if self.kind == "multiset":
            return rng.negative_binomial(mi, q, size=size)
        return rng.binomial(mi, p, size=size)

    def to_dict(self) -> dict:
        return {"structure": self.spec.to_dict(), "x": self.x}


def z_pmf(fam: ProcessFamily, i: int, k: int) -> float:
    return fam.pmf(i, k)


def z_cdf(fam: ProcessFamily, i: int, k: int) -> float:
    return fam.cdf(i, k)


def log_weighted_sum_pmf(fam: ProcessFamily) -> float:
    """``log P(sum_i i*Z_i = n)`` by a dynamic program over partial sums."""
    n = fam.n
    dp = [0.0] + [NEG_INF] * n
    for i in range(1, n + 1):
        log_mass = [fam.log_pmf(i, k) for k in range(n // i + 1)]
        new = []
        for s in range(n + 1):
            new.append(_logsumexp(dp[s - i * k] + lm for k, lm in enumerate(log_mass) if i * k <= s))
        dp = new
    return dp[n]


def weighted_sum_pmf(fam: ProcessFamily) -> float:
    """``P(sum_i i*Z_i = n)``.  May underflow to 0; use the log form then."""
    return math.exp(log_weighted_sum_pmf(fam))


@dataclass
class ConditioningReport:
    passed: bool
    tol: float
    max_residual: float
    residuals: list  # (label, exact, conditioned, |diff|)
    failures: list

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "tol": self.tol,
            "max_residual": self.max_residual,
            "residuals": [
                {"label": list(lab.a), "exact": e, "conditioned": c, "residual": r}
                for lab, e, c, r in self.residuals
            ],
            "failures": [list(lab.a) for lab in self.failures],
        }


def verify_conditioning(fam: ProcessFamily, tol: float = 1e-9) -> ConditioningReport:
    """Compare the exact component law with the conditioned independent process."""
    if not tol > 0:
        raise ParameterError(f"tolerance must be positive, got {tol}")
    k_n = count_structures(fam.spec)
    log_norm = log_weighted_sum_pmf(fam)
    residuals, failures = [], []
    for label in enumerate_column_labels(fam.spec):
        exact = label.multiplicity / k_n
        log_joint = math.fsum(fam.log_pmf(i, ai) for i, ai in enumerate(label.a, start=1))
        conditioned = math.exp(log_joint - log_norm)
        r = abs(exact - conditioned)
        residuals.append((label, exact, conditioned, r))
        if not r <= tol:
            failures.append(label)
    max_res = max(r for *_, r in residuals)
    return ConditioningReport(not failures, tol, max_res, residuals, failures)
