"""Closed-form error probabilities, bounds and exponents for the memoryless
q-ary erasure channel.

Conventions: rates ``R`` are in nats per channel symbol, ``r = R / log q`` is
the normalised rate, ``alpha = 1 - r`` the coding overhead and ``pi`` the
erasure probability.  ``P_i`` is the probability that exactly ``i`` of ``N``
symbols arrive, ``P_i = C(N, i) (1-pi)^i pi^(N-i)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

GOLDEN_TOL = 1e-10


class AnalyticsError(ValueError):
    pass


class RateAboveCapacity(AnalyticsError):
    pass


class AboveCapacity(AnalyticsError):
    pass


class InvalidWeight(AnalyticsError):
    pass


def capacity(q: int, pi: float) -> float:
    return (1.0 - pi) * math.log(q)


def critical_rate(q: int, pi: float) -> float:
    return (1.0 - pi) / (1.0 - pi + pi * q) * math.log(q)


def r_tilde(R: float, q: int) -> float:
    """Normalised rate rounded up to the next multiple of 1/(q+1)."""
    x = (q + 1) * R / math.log(q)
    k = round(x)
    if abs(x - k) > 1e-9 * max(1.0, abs(x)):
        k = math.ceil(x)
    return k / (q + 1)


@dataclass(frozen=True)
class RatePoint:
    R: float
    q: int

    @property
    def r(self) -> float:
        return self.R / math.log(self.q)

    @property
    def r_tilde(self) -> float:
        return r_tilde(self.R, self.q)

    @property
    def alpha(self) -> float:
        return 1.0 - self.r


# --- MDS exponent -------------------------------------------------------------------

def u_alpha(alpha: float, pi: float) -> float:
    """Large-deviation exponent of the event "more than alpha*N erasures"."""
    if alpha <= pi:
        return 0.0
    if pi == 0.0:
        return math.inf
    if alpha >= 1.0:
        return math.log(1.0 / pi)
    return alpha * math.log(alpha * (1 - pi) / (pi * (1 - alpha))) - math.log((1 - pi) / (1 - alpha))


def u_of_R(R: float, q: int, pi: float) -> float:
    """Stepwise MDS exponent: rates only reachable in steps of log q / (q+1)."""
    rt = r_tilde(R, q)
    if rt >= 1 - pi:
        return 0.0
    return -rt * math.log((1 - pi) * (1 - rt) / (rt * pi)) - math.log(pi / (1 - rt))


def envelope_u(R: float, q: int, pi: float) -> float:
    return u_alpha(1.0 - R / math.log(q), pi)


# --- random coding exponent -----------------------------------------------------------

def gallager_E0(rho: float, q: int, pi: float) -> float:
    return -math.log((1 - pi) / q**rho + pi)


def erasure_transition_matrix(q: int, pi: float) -> np.ndarray:
    """q x (q+1) matrix P(j|k); the last output column is the erasure symbol."""
    P = np.zeros((q, q + 1))
    P[np.arange(q), np.arange(q)] = 1 - pi
    P[:, q] = pi
    return P


def gallager_E0_general(rho: float, Q: np.ndarray, P: np.ndarray) -> float:
    """Gallager's E0 for an arbitrary input law Q and transition matrix P."""
    inner = (Q[:, None] * P ** (1.0 / (1.0 + rho))).sum(axis=0)
    return -math.log(float(np.sum(inner ** (1.0 + rho))))


def random_exponent(R: float, q: int, pi: float) -> float:
    """Random-coding exponent E_r(R), closed form."""
    C = capacity(q, pi)
    if R > C * (1 + 1e-12):
        raise RateAboveCapacity(f"R={R} exceeds capacity {C}")
    r = min(R / math.log(q), 1 - pi)
    if R <= critical_rate(q, pi):
        return -math.log((1 - pi + pi * q) / q) - R
    if r >= 1 - pi:
        return 0.0
    return max(0.0, -r * math.log((1 - pi) * (1 - r) / (r * pi)) - math.log(pi / (1 - r)))


def _golden_max(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return max(((f(x), x), (f(lo), lo), (f(hi), hi)))[::-1]


def random_exponent_via_search(R: float, q: int, pi: float, tol: float = GOLDEN_TOL) -> float:
    """E_r(R) by golden-section maximisation of -rho R + E0(rho) on [0, 1]."""
    _, best = _golden_max(lambda rho: -rho * R + gallager_E0(rho, q, pi), 0.0, 1.0, tol)
    return best


# --- binomial tail of the erasure count ------------------------------------------

def log_received_pmf(N: int, pi: float) -> np.ndarray:
    """log P_i for i = 0..N (probability that exactly i symbols arrive)."""
    i = np.arange(N + 1)
    if pi in (0, 1):
        out = np.full(N + 1, -np.inf)
        out[N if pi == 0 else 0] = 0.0
        return out
    with np.errstate(divide="ignore"):
        return (gammaln(N + 1) - gammaln(i + 1) - gammaln(N - i + 1)
                + i * np.log1p(-pi) + (N - i) * np.log(pi))


@dataclass(frozen=True)
class TailTerms:
    N: int
    K: int
    q: int
    pi: float
    P: np.ndarray = field(repr=False)
    Q: np.ndarray = field(repr=False)

    @property
    def i0(self) -> float:
        return (self.N + 1) * (1 - self.pi) / (1 - self.pi + self.q * self.pi)

    @property
    def i_star(self) -> int:
        return math.floor(self.i0)


def tail_terms(N: int, K: int, q: int, pi: float) -> TailTerms:
    logP = log_received_pmf(N, pi)
    i = np.arange(N + 1)
    logQ = logP - (i - K + 1) * math.log(q)
    return TailTerms(N, K, q, pi, np.exp(logP), np.exp(logQ))


def mds_tail_log(N: int, K: int, pi: float) -> float:
    """log of the bounded-distance failure probability sum_{i<K} P_i."""
    if not 1 <= K < N + 1:
        raise AnalyticsError(f"need 1 <= K <= N, got N={N}, K={K}")
    return float(logsumexp(log_received_pmf(N, pi)[:K]))


def mds_tail_exact(N: int, K: int, pi: float) -> float:
    if pi == 0:
        return 0.0
    if pi == 1:
        return 1.0
    return min(1.0, math.exp(mds_tail_log(N, K, pi)))


def mds_tail_bounds(N: int, K: int, pi: float) -> tuple[float, float]:
    """Entropy-bound sandwich on the MDS bounded-distance failure probability."""
    alpha = (N - K) / N
    if alpha <= pi:
        raise AboveCapacity(f"overhead {alpha} <= pi={pi}: rate at or above capacity")
    if pi == 0:
        return 0.0, 0.0
    e = math.exp(-N * u_alpha(alpha, pi))
    lower = pi * (1 - alpha) * N * e / ((1 - pi) * (N + 1) * (alpha * N + 1))
    upper = pi * (1 - alpha) ** 2 * N**2 * e / ((1 - pi) * (alpha * N + 1))
    return lower, upper


def mds_ml_error(N: int, K: int, q: int, pi: float) -> float:
    """Exact ML error of an [N, K] MDS code on the memoryless channel.

    With i < K symbols received the ML decoder still guesses right with
    probability q^(i-K).
    """
    logP = log_received_pmf(N, pi)[:K]
    i = np.arange(K)
    terms = np.exp(logP) * -np.expm1((i - K) * math.log(q))
    return math.fsum(terms)


def ml_sandwich(p_sub: float, q: int) -> tuple[float, float]:
    if not 0 <= p_sub <= 1:
        raise AnalyticsError(f"p_sub must be a probability, got {p_sub}")
    return p_sub * (1 - 1 / q), p_sub


# --- linear random codes ------------------------------------------------------------

def lin_conditional_error(N: int, K: int, m: int, q: int) -> tuple[float, float]:
    """P{rank of the K x (N-m) reduced generator < K} and its Bernoulli bound."""
    if not 0 <= m <= N - K:
        raise InvalidWeight(f"weight {m} outside [0, N-K={N - K}]")
    lo = N - m - K + 1
    s = math.fsum(math.log1p(-float(q) ** -i) for i in range(lo, N - m + 1))
    return -math.expm1(s), K * float(q) ** -lo


def lin_tail_exact(N: int, K: int, q: int, pi: float) -> float:
    """Ensemble error of the reduced-generator decoder for linear random codes."""
    if pi == 0:
        return lin_conditional_error(N, K, 0, q)[0]
    if pi == 1:
        return 1.0
    P = np.exp(log_received_pmf(N, pi))
    terms = list(P[:K])
    for i in range(K, N + 1):
        terms.append(P[i] * lin_conditional_error(N, K, N - i, q)[0])
    return min(1.0, math.fsum(terms))


def v_exponent(R: float, N: int, q: int, pi: float) -> float:
    """Finite-N exponent of the below-critical linear-code bound (exact form).

    Only defined while 1 < i0 < N; returns nan outside that range.
    """
    a = N * (1 - pi) - pi * q
    b = N * pi * q - 1 + pi
    if a <= 0 or b <= 0:
        return math.nan
    s = 1 - pi + pi * q
    return (a / (N * s) * math.log(a / ((N + 1) * (1 - pi)))
            - math.log(pi * N * s / b) - R)


def _lin_bound_log(N: int, r: float, q: int, pi: float) -> float:
    R = r * math.log(q)
    if R >= capacity(q, pi):
        return 0.0
    if R >= critical_rate(q, pi) * (1 + 1 / N):
        coef = pi * N**2 * r**2 * (N - N * r + 2) / ((1 - pi) * (N - N * r + 1))
        return math.log(coef) - N * random_exponent(R, q, pi)
    v = v_exponent(R, N, q, pi)
    if math.isnan(v):
        # i0 >= N: the Q_i are increasing up to i = N, so bound with Q_N
        K = N * r
        logQN = N * math.log1p(-pi) - (N - K + 1) * math.log(q)
        return math.log((N - K + 2) * K) + logQN
    return math.log((N - r * N + 2) * N * r) - N * v


def lin_error_bound(N: int, K: int, q: int, pi: float) -> float:
    """Piecewise upper bound on :func:`lin_tail_exact`.

    The branch switches at R = R_c (1 + 1/N); the boundary itself takes the
    above-critical branch.  At or above capacity the trivial bound 1 is
    returned.
    """
    return math.exp(_lin_bound_log(N, K / N, q, pi))


def regime(R: float, q: int, pi: float) -> str:
    if R > capacity(q, pi):
        return "above_capacity"
    if R < critical_rate(q, pi):
        return "below_critical"
    return "above_critical"


# --- optimality sandwich -------------------------------------------------------------

def sandwich_coefficients(N: int, K: int, q: int, pi: float) -> dict:
    """Polynomial factors relating random / linear-random errors to MDS."""
    r = K / N
    rand = (1 - pi) * (N + 1) * (N - r * N + 1) / ((1 - 1 / q) * pi * r * N)
    lin = pi * N * r * (N + 1) * (N - r * N + 2) / (1 - 1 / q)
    return {"lower": 1.0, "random_upper": rand, "linear_upper": lin}


def optimality_sandwich(N: int, K: int, q: int, pi: float, doublings: int = 4) -> dict:
    """Report the sandwich coefficients and how their per-symbol log decays."""
    coefs = sandwich_coefficients(N, K, q, pi)
    R = K / N * math.log(q)
    p_mds = mds_ml_error(N, K, q, pi)
    p_sub = mds_tail_exact(N, K, pi)
    p_lin = lin_tail_exact(N, K, q, pi)
    lo, hi = ml_sandwich(p_sub, q)
    scaling = []
    for k in range(doublings + 1):
        n = N * 2**k
        kk = round(K * 2**k)
        c = sandwich_coefficients(n, kk, q, pi)
        scaling.append({
            "N": n, "K": kk,
            "random_upper_rate": math.log(c["random_upper"]) / n,
            "linear_upper_rate": math.log(c["linear_upper"]) / n,
        })
    for prev, cur in zip(scaling, scaling[1:]):
        cur["random_ratio"] = cur["random_upper_rate"] / prev["random_upper_rate"]
        cur["linear_ratio"] = cur["linear_upper_rate"] / prev["linear_upper_rate"]
    return {
        "inputs": {"N": N, "K": K, "q": q, "pi": pi},
        "R": R,
        "above_critical": R >= critical_rate(q, pi),
        "coefficients": coefs,
        "coefficient_rates": {k: math.log(v) / N for k, v in coefs.items()},
        "p_ml_mds": p_mds,
        "p_sub_mds": p_sub,
        "p_sub_lin": p_lin,
        "ml_sandwich": [lo, hi],
        "ml_sandwich_holds": lo <= p_mds * (1 + 1e-12) and p_mds <= hi * (1 + 1e-12),
        "linear_sandwich_holds": p_mds <= p_lin * (1 + 1e-12)
        and p_lin <= coefs["linear_upper"] * p_mds,
        "scaling": scaling,
    }


# --- curves ------------------------------------------------------------------------

CURVE_COLUMNS = ["R_nats", "r", "r_tilde", "u_R", "envelope_u", "E_r", "lin_bound", "regime"]


@dataclass
class ExponentCurve:
    q: int
    pi: float
    N: int
    rows: list = field(default_factory=list)

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for row in self.rows:
            w.writerow([_fmt(row[c]) for c in CURVE_COLUMNS])


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return format(float(x), ".12g")


def curve_rates(q: int, points: int) -> list[float]:
    """Uniform grid on (0, log q) merged with every r~ breakpoint."""
    lq = math.log(q)
    fractions = {round(i / points, 15) for i in range(1, points)}
    fractions |= {round(i / (q + 1), 15) for i in range(1, q + 1)}
    return [f * lq for f in sorted(fractions)]


def exponent_curve(q: int, pi: float, points: int = 400, N: int | None = None) -> ExponentCurve:
    """Sample u(R), its envelope, E_r(R) and the linear-code bound exponent.

    ``lin_bound`` is ``-(1/N) log`` of the piecewise linear-code bound, so it
    reads on the same scale as the exponents; ``N`` defaults to q + 1.
    """
    if not 0 < pi < 1:
        raise AnalyticsError("pi must lie strictly between 0 and 1")
    N = q + 1 if N is None else N
    curve = ExponentCurve(q, pi, N)
    C = capacity(q, pi)
    lq = math.log(q)
    for R in curve_rates(q, points):
        reg = regime(R, q, pi)
        er = 0.0 if reg == "above_capacity" else random_exponent(R, q, pi)
        curve.rows.append({
            "R_nats": R,
            "r": R / lq,
            "r_tilde": r_tilde(R, q),
            "u_R": u_of_R(R, q, pi),
            "envelope_u": envelope_u(R, q, pi),
            "E_r": er,
            "lin_bound": 0.0 if R >= C else -_lin_bound_log(N, R / lq, q, pi) / N,
            "regime": reg,
        })
    return curve
