"""n-firm equilibria for the four linear-demand model families.

Families are keyed by market structure (simultaneous Cournot vs sequential
Stackelberg) and cost shape (linear c*x vs quadratic c*x^2).  Cournot and
linear-cost Stackelberg outcomes have closed forms; the quadratic-cost
Stackelberg aggregate follows a one-dimensional share recursion and the
per-firm outputs come from forward substitution of the stage shares.

Shares are expressed against the zero-price benchmark output M = A/B (for
quadratic costs) or the marginal-cost benchmark (A-c)/B (for linear costs).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .market import CostSpec, DemandSpec, MarketSpec, price, profit


@dataclass(frozen=True)
class FamilyParams:
    """Linear inverse demand A - B*Q with one cost coefficient c for all firms."""

    A: float
    B: float
    c: float

    def __post_init__(self):
        if not (self.B > 0.0):
            raise ValueError(f"demand slope B must be > 0, got {self.B}")
        if not (self.A > 0.0):
            raise ValueError(f"demand intercept A must be > 0, got {self.A}")
        if self.c < 0.0:
            raise ValueError(f"cost coefficient c must be >= 0, got {self.c}")

    @property
    def zero_price_output(self) -> float:
        """M = A/B, aggregate output at which the price reaches zero."""
        return self.A / self.B

    @property
    def marginal_cost_output(self) -> float:
        """(A - c)/B, aggregate output at which the price reaches c."""
        return (self.A - self.c) / self.B

    @property
    def delta(self) -> float:
        """Cost-to-slope ratio c/B used by the quadratic-cost recursions."""
        return self.c / self.B


class Family(enum.Enum):
    """Market structure x cost shape."""

    COURNOT_LINEAR = "CL"
    COURNOT_QUADRATIC = "CQ"
    STACKELBERG_LINEAR = "SL"
    STACKELBERG_QUADRATIC = "SQ"

    @property
    def structure(self) -> str:
        return "cournot" if self.value[0] == "C" else "stackelberg"

    @property
    def cost(self) -> str:
        return "linear" if self.value[1] == "L" else "quadratic"


def family_from_code(code: str) -> Family:
    try:
        return Family(code.upper())
    except ValueError:
        raise ValueError(f"unknown family code {code!r}; expected CL, CQ, SL, or SQ") from None


@dataclass
class LargeMarketRow:
    """Per-n equilibrium record for one family."""

    n: int
    family: str
    Q_total: float
    price: float
    per_firm_outputs: list[float]
    per_firm_profits: list[float]
    profit_total: float
    residual: float          # 1 - Q / limit_Q
    gap_Q: float             # limit_Q - Q
    gap_P: float             # price - limit_P
    cs: float
    ts: float

    @property
    def x_first(self) -> float:
        return self.per_firm_outputs[0]

    @property
    def x_last(self) -> float:
        return self.per_firm_outputs[-1]


@dataclass
class RecursionState:
    """Share sequences behind a quadratic-cost sequential equilibrium.

    ``lambda_seq[m]`` is the joint share of the last m movers in the
    remaining benchmark output; ``mu_seq[m-1]`` the own share of the firm
    leading an m-firm tail; ``q_seq[n-1]`` the aggregate share after n firms
    (independent recursion, equal to lambda for all cost ratios);
    ``rho_seq[n-1] = 1 - q_seq[n-1]`` the residual share.
    """

    lambda_seq: list[float]
    mu_seq: list[float]
    q_seq: list[float]
    rho_seq: list[float]


def _market(params: FamilyParams, n: int, cost: str) -> MarketSpec:
    demand = DemandSpec.linear(params.A, params.B)
    spec = CostSpec.linear(params.c) if cost == "linear" else CostSpec.quadratic(params.c)
    return MarketSpec.symmetric(n, demand, spec)


def cournot_linear(n: int, params: FamilyParams) -> LargeMarketRow:
    """Symmetric simultaneous equilibrium with linear costs.

    Q = n(A-c)/(B(n+1)), P = (A+nc)/(n+1), per-firm profit (A-c)^2/(B(n+1)^2).
    """
    _check_n(n)
    A, B, c = params.A, params.B, params.c
    x = (A - c) / (B * (n + 1))
    q_total = n * x
    p = (A + n * c) / (n + 1)
    pi = (A - c) ** 2 / (B * (n + 1) ** 2)
    limit = params.marginal_cost_output
    return _row(params, n, Family.COURNOT_LINEAR, q_total, p, [x] * n, [pi] * n,
                residual=1.0 / (n + 1), gap_q=limit / (n + 1), gap_p=p - c)


def cournot_quadratic(n: int, params: FamilyParams) -> LargeMarketRow:
    """Symmetric simultaneous equilibrium with quadratic costs.

    Q = A n / (B(n+1) + 2c); the residual against M = A/B is
    (1 + 2*delta) / (n + 1 + 2*delta).
    """
    _check_n(n)
    A, B, c = params.A, params.B, params.c
    denom = B * (n + 1) + 2.0 * c
    x = A / denom
    q_total = n * x
    p = A - B * q_total
    pi = x * p - c * x * x
    two_delta = 2.0 * params.delta
    residual = (1.0 + two_delta) / (n + 1 + two_delta)
    gap_q = params.zero_price_output * residual
    return _row(params, n, Family.COURNOT_QUADRATIC, q_total, p, [x] * n, [pi] * n,
                residual=residual, gap_q=gap_q, gap_p=p)


def stackelberg_linear(n: int, params: FamilyParams) -> LargeMarketRow:
    """Sequential equilibrium with linear costs: successive halving.

    Firm k produces (A-c)/B * 2^-k, so the aggregate is (A-c)/B * (1 - 2^-n)
    and the price is c + (A-c) * 2^-n.  Total profit is
    (A-c)^2/B * (2^n - 1)/4^n.
    """
    _check_n(n)
    A, B, c = params.A, params.B, params.c
    benchmark = params.marginal_cost_output
    outputs = [benchmark * 2.0 ** -(k + 1) for k in range(n)]
    p = c + (A - c) * 2.0 ** -n
    margin = (A - c) * 2.0 ** -n
    profits = [x * margin for x in outputs]
    q_total = benchmark * (1.0 - 2.0 ** -n)
    return _row(params, n, Family.STACKELBERG_LINEAR, q_total, p, outputs, profits,
                residual=2.0 ** -n, gap_q=benchmark * 2.0 ** -n, gap_p=p - c)


def share_recursion(n: int, delta: float) -> RecursionState:
    """Stage-share sequences for the quadratic-cost sequential market.

    The tail share obeys lambda_0 = 0 and
    lambda_m = mu_m + lambda_{m-1} * (1 - mu_m) with own share
    mu_m = (1 - lambda_{m-1}) / (2*(1 - lambda_{m-1}) + 2*delta).
    The aggregate share q_n follows its own recursion,
    q_1 = 1/(2*(1+delta)), q_n = q_{n-1} + (1-q_{n-1})^2 / (2*(1-q_{n-1}+delta)),
    kept as a separate expression path so the two can be checked against
    each other.
    """
    if delta <= 0.0:
        raise ValueError(f"cost ratio delta must be > 0, got {delta}")
    lambdas = [0.0]
    mus = []
    for _ in range(n):
        lam = lambdas[-1]
        mu = (1.0 - lam) / (2.0 * (1.0 - lam) + 2.0 * delta)
        mus.append(mu)
        lambdas.append(mu + lam * (1.0 - mu))
    qs = []
    q = 1.0 / (2.0 * (1.0 + delta))
    qs.append(q)
    for _ in range(1, n):
        q = q + (1.0 - q) ** 2 / (2.0 * (1.0 - q + delta))
        qs.append(q)
    rhos = [1.0 - v for v in qs]
    return RecursionState(lambda_seq=lambdas, mu_seq=mus, q_seq=qs, rho_seq=rhos)


def aggregate_recursion(n: int, params: FamilyParams) -> list[float]:
    """Quadratic-cost sequential aggregates by the direct output recursion.

    Q_0 = 0, Q_m = (M^2 + M Q_{m-1} - Q_{m-1}^2) / (3M - 2 Q_{m-1}); valid
    for the cost ratio delta = 1/2 (2c = B).  Returns [Q_1, ..., Q_n].
    """
    _check_n(n)
    m = params.zero_price_output
    out = []
    q = 0.0
    for _ in range(n):
        q = (m * m + m * q - q * q) / (3.0 * m - 2.0 * q)
        out.append(q)
    return out


def stackelberg_quadratic(n: int, params: FamilyParams) -> tuple[LargeMarketRow, RecursionState]:
    """Sequential equilibrium with quadratic costs.

    The firm leading an m-firm tail produces mu_m times the benchmark output
    still uncommitted; forward substitution yields every firm's output and
    the aggregate equals M * lambda_n.  Profits are evaluated from the
    outputs and the market price.
    """
    _check_n(n)
    state = share_recursion(n, params.delta)
    m = params.zero_price_output
    outputs = []
    remaining = m
    for k in range(n):
        mu = state.mu_seq[n - 1 - k]       # own share of the firm leading an (n-k)-firm tail
        x = mu * remaining
        outputs.append(x)
        remaining -= x
    q_total = m * state.lambda_seq[n]
    p = params.A - params.B * q_total
    market = _market(params, n, "quadratic")
    profits = [profit(market, i, outputs) for i in range(n)]
    rho = state.rho_seq[-1]
    row = _row(params, n, Family.STACKELBERG_QUADRATIC, q_total, p, outputs, profits,
               residual=rho, gap_q=m * rho, gap_p=p)
    return row, state


def residual_sequences(n_max: int, params: FamilyParams) -> tuple[list[float], list[float]]:
    """Residual shares 1 - Q_n/limit for the quadratic-cost families.

    Returns (sequential, simultaneous) sequences for n = 1..n_max.  When
    2c = B the sequential residual follows the closed recursion
    rho_n = rho_{n-1} (1 + rho_{n-1}) / (1 + 2 rho_{n-1}) from rho_0 = 1;
    otherwise it is derived from the aggregate-share recursion.
    """
    _check_n(n_max)
    two_delta = 2.0 * params.delta
    if params.delta == 0.5:
        rhos = []
        rho = 1.0
        for _ in range(n_max):
            rho = rho * (1.0 + rho) / (1.0 + 2.0 * rho)
            rhos.append(rho)
    else:
        rhos = share_recursion(n_max, params.delta).rho_seq
    rs = [(1.0 + two_delta) / (n + 1 + two_delta) for n in range(1, n_max + 1)]
    return rhos, rs


def limits_and_gaps(family: Family, params: FamilyParams, n: int) -> dict[str, float]:
    """Large-market limits and the finite-n gaps for one family."""
    row = equilibrium_row(family, params, n)
    limit_q = params.marginal_cost_output if family.cost == "linear" else params.zero_price_output
    limit_p = params.c if family.cost == "linear" else 0.0
    return {"limit_Q": limit_q, "limit_P": limit_p, "gap_Q": row.gap_Q, "gap_P": row.gap_P}


def surplus_row(family: Family, params: FamilyParams, n: int) -> dict[str, float]:
    """Consumer surplus B*Q^2/2 and total surplus (cs + profits) at size n."""
    row = equilibrium_row(family, params, n)
    return {"cs": row.cs, "ts": row.ts}


def equilibrium_row(family: Family, params: FamilyParams, n: int) -> LargeMarketRow:
    if family is Family.COURNOT_LINEAR:
        return cournot_linear(n, params)
    if family is Family.COURNOT_QUADRATIC:
        return cournot_quadratic(n, params)
    if family is Family.STACKELBERG_LINEAR:
        return stackelberg_linear(n, params)
    row, _ = stackelberg_quadratic(n, params)
    return row


@dataclass
class OrderingRow:
    """Inequality checks between the families at one market size."""

    n: int
    q_stackelberg_above_linear: bool
    q_stackelberg_above_quadratic: bool
    p_stackelberg_below_linear: bool
    p_stackelberg_below_quadratic: bool
    first_last_pattern_linear: bool      # x_last^S < x^C < x_first^S
    first_last_pattern_quadratic: bool
    monopoly_equal: bool                 # flags the n = 1 coincidence


def ordering_checks(params: FamilyParams, n_range) -> list[OrderingRow]:
    """Structure comparisons per market size.

    For every n in ``n_range``, checks that the sequential structure
    produces more and prices lower than the simultaneous one under both
    cost shapes, and that individual outputs straddle the symmetric one
    (last mover below it, leader above it).  n = 1 is flagged as the
    monopoly coincidence instead of a strict inequality.
    """
    out = []
    for n in n_range:
        cl = cournot_linear(n, params)
        cq = cournot_quadratic(n, params)
        sl = stackelberg_linear(n, params)
        sq, _ = stackelberg_quadratic(n, params)
        equal_tol_q = 1e-9 * params.zero_price_output
        monopoly = n == 1 and (abs(sl.Q_total - cl.Q_total) <= equal_tol_q
                               and abs(sq.Q_total - cq.Q_total) <= equal_tol_q)
        out.append(OrderingRow(
            n=n,
            q_stackelberg_above_linear=sl.Q_total > cl.Q_total,
            q_stackelberg_above_quadratic=sq.Q_total > cq.Q_total,
            p_stackelberg_below_linear=sl.price < cl.price,
            p_stackelberg_below_quadratic=sq.price < cq.price,
            first_last_pattern_linear=sl.x_last < cl.x_first < sl.x_first,
            first_last_pattern_quadratic=sq.x_last < cq.x_first < sq.x_first,
            monopoly_equal=monopoly,
        ))
    return out


def _row(params, n, family, q_total, p, outputs, profits,
         residual, gap_q, gap_p) -> LargeMarketRow:
    profit_total = math.fsum(profits)
    cs = 0.5 * params.B * q_total * q_total
    return LargeMarketRow(
        n=n, family=family.value, Q_total=q_total, price=p,
        per_firm_outputs=list(outputs), per_firm_profits=list(profits),
        profit_total=profit_total,
        residual=residual, gap_Q=gap_q, gap_P=gap_p,
        cs=cs, ts=cs + profit_total,
    )


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError(f"market size must be >= 1, got {n}")
