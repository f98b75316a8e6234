"""The covering Markov chain, its parameter schedule, and the tail bounds.

The chain has states ``v_0 .. v_{s*}``; from ``v_s`` it advances with
probability ``p_s`` and stays with ``q_s = 1 - p_s``. ``p_0 = 1`` and
``p_s = z_s / (1 + z_s)`` with ``z_s = (kbar - s) * 80 * delta**2 / (s - 1/2)``.

Schedule quantities grow like ``exp(20 * alpha)`` and are handled through
their logarithms; ``log`` is the natural logarithm throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .errors import BudgetExceeded, DomainError, ParameterError, ScheduleError
from .evaluation import min_covered_for_alpha
from .rng import RngStream

LOG2 = math.log(2.0)
# delta is ceiled only while representable exactly; beyond that the ceiling is below one ulp
CEIL_LIMIT_LOG = 53 * LOG2
# alpha this close to 1 is treated as the eps = 0 boundary
ALPHA_VALID_SLACK = 1e-12
MAX_CHAIN_STATES = 10**7


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class ScheduleValues:
    k_bar: float
    log_k_bar: float
    delta_exp: float
    alpha: float
    eps: float
    delta_real: float
    log_delta_real: float
    delta_sched: float
    log_delta: float
    u: float
    log_u: float
    s_star: int | None
    valid: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def schedule(k_bar: float | None, delta_exp: float, log_k_bar: float | None = None) -> ScheduleValues:
    """Evaluate alpha, eps, delta, u and s* for a given kbar and delta exponent.

    Pass ``log_k_bar`` instead of ``k_bar`` to go past the binary64 range.
    ``valid`` is False when ``alpha <= 1`` (then ``eps <= 0`` and the tail
    bound is vacuous).
    """
    if not 0 < delta_exp <= 1 / 120:
        raise ParameterError(f"delta exponent must lie in (0, 1/120], got {delta_exp!r}")
    if log_k_bar is None:
        if k_bar is None or not k_bar > 0:
            raise ScheduleError(f"kbar must be positive, got {k_bar!r}")
        log_k_bar = math.log(k_bar)
    elif k_bar is None:
        k_bar = _exp(log_k_bar)
    alpha = delta_exp * log_k_bar
    if not alpha > 0:
        raise ScheduleError(f"alpha = {alpha} <= 0 (kbar must exceed 1)")
    eps = math.log(alpha) / (120.0 * alpha)
    log_delta_real = 0.5 * math.log(alpha) + 20.0 * alpha * (1.0 + eps)
    delta_real = _exp(log_delta_real)
    if log_delta_real < CEIL_LIMIT_LOG:
        delta = float(math.ceil(delta_real))
        log_delta = math.log(delta)
    else:
        delta, log_delta = delta_real, log_delta_real
    log_u = math.log(alpha) - LOG2 - 2.0 * log_delta
    u = _exp(log_u)
    s_star = None
    if math.isfinite(k_bar) and math.isfinite(delta) and delta >= 1 and float(k_bar).is_integer():
        s_star = min_covered_for_alpha(int(k_bar), delta, alpha)
    return ScheduleValues(
        k_bar=k_bar, log_k_bar=log_k_bar, delta_exp=delta_exp, alpha=alpha, eps=eps,
        delta_real=delta_real, log_delta_real=log_delta_real, delta_sched=delta,
        log_delta=log_delta, u=u, log_u=log_u, s_star=s_star,
        valid=alpha > 1 + ALPHA_VALID_SLACK,
    )


@dataclass(frozen=True)
class Inequalities:
    i1: bool
    i2: bool
    i3: bool
    i4: bool
    i5: bool

    @property
    def all(self) -> bool:
        return self.i1 and self.i2 and self.i3 and self.i4 and self.i5

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def check_inequalities(k_bar: float | None, delta_exp: float, log_k_bar: float | None = None) -> Inequalities:
    sc = schedule(k_bar, delta_exp, log_k_bar)
    lk = sc.log_k_bar
    log_k = lk + math.log1p(_exp(-lk))  # log(kbar + 1)
    i1 = -log_k <= sc.log_u < -LOG2
    # I2: delta * log(1 + 40 alpha) >= -2 log u, compared in log space
    rhs = -2.0 * sc.log_u
    i2 = rhs <= 0 or sc.log_delta + math.log(math.log1p(40.0 * sc.alpha)) >= math.log(rhs)
    if sc.eps > 0:
        le = math.log(sc.eps)
        le3 = le - math.log(3.0)
        i3 = -lk <= le - math.log(9.0)
        i4 = -math.log(80.0) - 2.0 * sc.log_delta <= le3 + sc.log_u
        # I5 divided through by (eps/3)^2
        lhs = _exp(sc.log_u - 2.0 * le3) + (1.0 + sc.eps / 3.0) * _exp(2.0 * sc.log_u - le3)
        i5 = lhs <= 1.0
    else:
        i3 = i4 = i5 = False
    return Inequalities(i1, i2, i3, i4, i5)


def inequality_scan(delta_exp: float, exponents=range(3, 301, 3)) -> list[dict]:
    """Truth values of I1..I5 at kbar = 10**e for each exponent e."""
    out = []
    for e in exponents:
        lk = e * math.log(10.0)
        sc = schedule(None, delta_exp, log_k_bar=lk)
        row = {"log10_k_bar": e, "alpha": sc.alpha, "valid": sc.valid}
        if sc.valid:
            row.update(check_inequalities(None, delta_exp, log_k_bar=lk).as_dict())
        else:
            row.update({f"i{n}": False for n in range(1, 6)})
        out.append(row)
    return out


def z_and_p(k_bar: int, delta_geom: float, s: int) -> tuple[float, float]:
    if s == 0:
        raise DomainError("s = 0 has no z; the chain uses p_0 = 1")
    if not 1 <= s <= k_bar:
        raise ParameterError(f"s = {s} outside [1, {k_bar}]")
    z = (k_bar - s) * 80.0 * delta_geom**2 / (s - 0.5)
    if z == 0:
        return 0.0, 0.0
    return z, 1.0 / (1.0 + 1.0 / z)


@dataclass(frozen=True)
class ChainParams:
    s_star: int
    p: tuple[float, ...]
    truncation: float
    z: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.p) != self.s_star:
            raise ParameterError("need exactly s* transition probabilities p_0..p_{s*-1}")
        if any(not 0 <= v <= 1 for v in self.p):
            raise ParameterError("transition probabilities must lie in [0, 1]")

    @property
    def q(self) -> tuple[float, ...]:
        return tuple(1.0 - v for v in self.p)


def chain_params(k_bar: int, delta_geom: float, alpha: float) -> ChainParams:
    s_star = min_covered_for_alpha(k_bar, delta_geom, alpha)
    if s_star > MAX_CHAIN_STATES:
        raise BudgetExceeded(f"s* = {s_star} states exceeds {MAX_CHAIN_STATES}")
    zs = [math.inf] + [z_and_p(k_bar, delta_geom, s)[0] for s in range(1, s_star)]
    ps = [1.0] + [z_and_p(k_bar, delta_geom, s)[1] for s in range(1, s_star)]
    return ChainParams(s_star, tuple(ps[:s_star]), float(delta_geom), tuple(zs[:s_star]))


def chain_params_from_schedule(sc: ScheduleValues) -> ChainParams:
    if sc.s_star is None:
        raise BudgetExceeded("schedule kbar is outside the exactly representable range")
    return chain_params(int(sc.k_bar), sc.delta_sched, sc.alpha)


def hitting_probability_dp(params: ChainParams, steps: int) -> float:
    """Exact probability that v_{s*} is reached from v_0 within ``steps`` moves."""
    if steps < 0:
        raise ParameterError("steps must be >= 0")
    n = params.s_star
    if n == 0:
        return 1.0
    p = np.array(params.p)
    q = 1.0 - p
    P = np.zeros(n + 1)
    P[0] = 1.0
    for _ in range(min(steps, _dp_horizon(params, steps))):
        nxt = np.empty_like(P)
        nxt[:n] = P[:n] * q
        nxt[n] = P[n]
        nxt[1:] += P[:n] * p
        P = nxt
    return float(min(1.0, P[n]))


def _dp_horizon(params: ChainParams, steps: int) -> int:
    # once every p is 1 the walk is deterministic; no need to iterate past s*
    if all(v == 1.0 for v in params.p):
        return params.s_star
    return steps


def simulate_chain(params: ChainParams, steps: int, rng: RngStream) -> bool:
    """One walk from v_0; draw ``j`` decides move ``j``."""
    s = 0
    for _ in range(steps):
        if s == params.s_star:
            break
        if rng.uniform() < params.p[s]:
            s += 1
    return s == params.s_star


def simulate_walks(params: ChainParams, steps: int, walks: int, base_seed: int,
                   first_walk: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`simulate_chain` over walks ``first_walk ..``.

    Returns ``(hit, absorbed_at)``; ``absorbed_at`` is the number of moves
    taken to reach v_{s*}, or -1 if it was not reached within ``steps``.
    """
    keys = rngmod.stream_keys(base_seed, np.arange(first_walk, first_walk + walks))
    p_ext = np.append(np.array(params.p, dtype=np.float64), 0.0)
    state = np.zeros(walks, dtype=np.int64)
    absorbed = np.full(walks, -1, dtype=np.int64)
    if params.s_star == 0:
        absorbed[:] = 0
        return np.ones(walks, dtype=bool), absorbed
    for j in range(steps):
        live = state < params.s_star
        if not live.any():
            break
        u = rngmod.uniforms(keys, j)
        state += (live & (u < p_ext[state])).astype(np.int64)
        absorbed[(absorbed < 0) & (state == params.s_star)] = j + 1
    return state == params.s_star, absorbed


def expected_steps(params: ChainParams) -> tuple[float, float]:
    """(E[X], E[Y]) with X_s geometric(p_s) and Y_s = min(X_s, truncation)."""
    ex = ey = 0.0
    for p in params.p:
        if p == 0:
            return math.inf, math.inf
        ex += 1.0 / p
        ey += (1.0 - (1.0 - p) ** params.truncation) / p
    return ex, ey


def hoeffding_log_rate(sc: ScheduleValues, real_delta: bool = False) -> float:
    """log of 2 eps^2 u^2 / (9 delta^2), the per-kbar Hoeffding exponent."""
    if not sc.eps > 0:
        raise ScheduleError("eps <= 0: schedule only valid for alpha > 1")
    log_delta = sc.log_delta_real if real_delta else sc.log_delta
    log_u = sc.log_u if not real_delta else math.log(sc.alpha) - LOG2 - 2.0 * log_delta
    return LOG2 + 2.0 * math.log(sc.eps) + 2.0 * log_u - math.log(9.0) - 2.0 * log_delta


def lemma20_log_rate(sc: ScheduleValues) -> float:
    """log of eps^2 alpha^-2 exp(-120 alpha) / 18, the factored form of the same rate."""
    if not sc.eps > 0:
        raise ScheduleError("eps <= 0: schedule only valid for alpha > 1")
    return 2.0 * math.log(sc.eps) - 2.0 * math.log(sc.alpha) - 120.0 * sc.alpha - math.log(18.0)


def hoeffding_bound(k_bar: float | None, delta_exp: float, log_k_bar: float | None = None) -> float:
    sc = schedule(k_bar, delta_exp, log_k_bar)
    if not sc.valid:
        raise ScheduleError(f"alpha = {sc.alpha:.6g} <= 1: no finite-kbar tail bound")
    return _exp(-_exp(sc.log_k_bar + hoeffding_log_rate(sc)))


@dataclass(frozen=True)
class TheoremBound:
    value: float
    valid: bool


def theorem_bound(k: int, delta_exp: float) -> TheoremBound:
    """2**-k + exp(-kbar * rate), capped at 1; vacuous (1, invalid) when alpha <= 1."""
    if k < 2:
        raise ParameterError("k must be >= 2")
    try:
        h = hoeffding_bound(k - 1, delta_exp)
    except ScheduleError:
        return TheoremBound(1.0, False)
    return TheoremBound(min(1.0, 2.0**-k + h), True)


def theorem_bound_scan(delta_exp: float, ks) -> list[dict]:
    """theorem_bound over increasing ``ks``; ``monotone_ok`` is False where it went up."""
    rows, prev = [], None
    for k in ks:
        tb = theorem_bound(k, delta_exp)
        ok = True
        if prev is not None and prev.valid and tb.valid:
            ok = tb.value <= prev.value
        rows.append({"k": k, "bound": tb.value, "valid": tb.valid, "monotone_ok": ok})
        prev = tb
    return rows
