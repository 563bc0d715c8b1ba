"""Cash-management scheduling problem.

A network of ``n_points`` cash points (branches and ATMs) is planned over
``n_days`` days. The decision variable is the discretized cash level
``M[c][t]`` in {0..3}, two bits per cell, so an instance with C points and
D days occupies V = 2*C*D binary variables. Bit ``2*(c*D + t) + i`` is bit
``i`` of cell (c, t); M = b0 + 2*b1, equivalently M = 3/2 + z0/2 + z1 on
spins z = 2b - 1.

A transaction happens at (c, t) whenever the chosen level differs from the
cash the point would hold with no shipment that day (the forecast on day
0, carried forecast afterwards). Day-0 transactions cost more. Hard
constraints: the network total on the last day is capped, and the number
of transactions per day is capped, giving D + 1 constraints in all. The
per-cell level bounds hold by construction and are never checked.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from movco.errors import InvalidArgumentError, ResourceLimitError

LEVELS = 4                      # discrete cash levels per point; 2 bits per cell
EXHAUSTIVE_LIMIT = 24           # largest V for which full enumeration is allowed
ENUMERATION_CHUNK = 1 << 16

PRICE_LOW, PRICE_HIGH = 1, 4    # other-day price range (inclusive)
FORECAST_LOW, FORECAST_HIGH = -2, 5


@dataclass(frozen=True)
class CmpInstance:
    """Fixed data of one cash-management instance.

    ``first_day_price[c]`` must exceed ``price[c]``: a day-0 transaction is
    an urgent request. ``forecast[c][t]`` may fall outside the allowed
    level range [0, 3]; such cells force a transaction.
    """

    n_points: int
    n_days: int
    levels: int
    first_day_price: tuple[float, ...]
    price: tuple[float, ...]
    forecast: tuple[tuple[int, ...], ...]
    max_final_total: int
    max_daily_tx: int
    seed: int | None = None
    satisfiability_cap: int | None = None

    def __post_init__(self):
        if self.n_points < 1 or self.n_days < 1:
            raise InvalidArgumentError("need at least one cash point and one day")
        if self.levels != LEVELS:
            raise InvalidArgumentError(f"only {LEVELS} cash levels are supported")
        if len(self.first_day_price) != self.n_points or len(self.price) != self.n_points:
            raise InvalidArgumentError("price vectors must have one entry per cash point")
        if any(k <= 0 for k in self.first_day_price) or any(k <= 0 for k in self.price):
            raise InvalidArgumentError("prices must be positive")
        if any(k >= k0 for k, k0 in zip(self.price, self.first_day_price)):
            raise InvalidArgumentError("first-day price must exceed the other-day price")
        if len(self.forecast) != self.n_points or any(
            len(row) != self.n_days for row in self.forecast
        ):
            raise InvalidArgumentError("forecast must be an n_points x n_days matrix")
        if self.max_final_total < 0 or self.max_daily_tx < 0:
            raise InvalidArgumentError("constraint caps must be non-negative")
        if self.satisfiability_cap is not None and not (
            0 <= self.satisfiability_cap <= self.n_days + 1
        ):
            raise InvalidArgumentError("satisfiability cap out of range")

    @property
    def level_min(self) -> int:
        return 0

    @property
    def level_max(self) -> int:
        return self.levels - 1

    @property
    def n_vars(self) -> int:
        """Binary variables / qubits: 2 per cell."""
        return 2 * self.n_points * self.n_days

    @property
    def n_constraints(self) -> int:
        return self.n_days + 1

    @property
    def constraint_normalizer(self) -> int:
        """Divisor for satisfied-constraint fractions: the cap when known."""
        if self.satisfiability_cap is not None:
            return self.satisfiability_cap
        return self.n_constraints

    def with_cap(self, cap: int) -> "CmpInstance":
        return replace(self, satisfiability_cap=int(cap))

    def forecast_array(self) -> np.ndarray:
        return np.asarray(self.forecast, dtype=np.int64)


@dataclass(frozen=True)
class ConstraintReport:
    """Outcome of the D+1 hard constraints for one schedule."""

    final_total_ok: bool
    daily_tx_ok: tuple[bool, ...]
    satisfied_count: int
    total: int
    fraction: float


@dataclass(frozen=True)
class BatchEvaluation:
    """Vectorized evaluation of K schedules.

    ``daily_tx[k, t]`` counts transactions of sample k on day t;
    ``sat_counts`` counts satisfied constraints out of D+1.
    """

    costs: np.ndarray
    sat_counts: np.ndarray
    final_totals: np.ndarray
    daily_tx: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.costs.shape[0]


def qubit_index(point: int, day: int, bit: int, n_days: int) -> int:
    """Position of bit ``bit`` of cell (point, day) in the bitstring."""
    return 2 * (point * n_days + day) + bit


def decode(bits, instance: CmpInstance) -> np.ndarray:
    """Bitstring -> level matrix M, shape (n_points, n_days)."""
    arr = np.asarray(bits, dtype=np.int64).ravel()
    if arr.size != instance.n_vars:
        raise InvalidArgumentError(
            f"expected {instance.n_vars} bits, got {arr.size}"
        )
    cells = arr.reshape(instance.n_points, instance.n_days, 2)
    return cells[:, :, 0] + 2 * cells[:, :, 1]


def encode(schedule, instance: CmpInstance) -> np.ndarray:
    """Level matrix -> bitstring; inverse of decode."""
    m = _schedule_array(schedule, instance)
    bits = np.empty((instance.n_points, instance.n_days, 2), dtype=np.uint8)
    bits[:, :, 0] = m & 1
    bits[:, :, 1] = m >> 1
    return bits.ravel()


def _schedule_array(schedule, instance: CmpInstance) -> np.ndarray:
    m = np.asarray(schedule, dtype=np.int64)
    if m.shape != (instance.n_points, instance.n_days):
        raise InvalidArgumentError(
            f"schedule shape {m.shape} != ({instance.n_points}, {instance.n_days})"
        )
    if m.min() < instance.level_min or m.max() > instance.level_max:
        raise InvalidArgumentError("schedule levels out of range")
    return m


def no_transaction_cash(schedule, instance: CmpInstance) -> np.ndarray:
    """Cash each point would hold with no shipment that day.

    Day 0 is the raw forecast; afterwards the previous day's adjustment
    (chosen level minus forecast) carries over.
    """
    m = _schedule_array(schedule, instance)
    p = instance.forecast_array()
    w = np.empty_like(p)
    w[:, 0] = p[:, 0]
    if instance.n_days > 1:
        w[:, 1:] = p[:, 1:] + (m[:, :-1] - p[:, :-1])
    return w


def transactions(schedule, instance: CmpInstance) -> np.ndarray:
    """Boolean matrix: True where the schedule forces a shipment/withdrawal."""
    m = _schedule_array(schedule, instance)
    return m != no_transaction_cash(m, instance)


def transaction_cost(schedule, instance: CmpInstance) -> float:
    """Total delivery cost: first-day price on day 0, regular price after."""
    moved = transactions(schedule, instance)
    k0 = np.asarray(instance.first_day_price)
    k = np.asarray(instance.price)
    return float(moved[:, 0] @ k0 + (moved[:, 1:].T @ k).sum())


def check_constraints(schedule, instance: CmpInstance) -> ConstraintReport:
    """Evaluate the D+1 hard constraints for one schedule.

    The reported fraction divides by the satisfiability cap when the
    instance carries one, so it reaches 1.0 on instances where no schedule
    can satisfy everything.
    """
    m = _schedule_array(schedule, instance)
    moved = transactions(m, instance)
    daily_ok = tuple(bool(v) for v in moved.sum(axis=0) <= instance.max_daily_tx)
    final_ok = bool(m[:, -1].sum() <= instance.max_final_total)
    satisfied = int(final_ok) + sum(daily_ok)
    return ConstraintReport(
        final_total_ok=final_ok,
        daily_tx_ok=daily_ok,
        satisfied_count=satisfied,
        total=instance.n_constraints,
        fraction=satisfied / instance.constraint_normalizer,
    )


def penalized_cost(
    schedule,
    instance: CmpInstance,
    lambda_final: float,
    lambda_daily: float,
) -> float:
    """Transaction cost plus a fixed penalty per violated constraint.

    Only strict violations are penalized (a boundary-tight schedule is
    feasible), so the penalty vanishes exactly on the feasible set.
    """
    if lambda_final < 0 or lambda_daily < 0:
        raise InvalidArgumentError("penalty weights must be non-negative")
    m = _schedule_array(schedule, instance)
    moved = transactions(m, instance)
    cost = transaction_cost(m, instance)
    if m[:, -1].sum() > instance.max_final_total:
        cost += lambda_final
    cost += lambda_daily * int((moved.sum(axis=0) > instance.max_daily_tx).sum())
    return float(cost)


def cost_upper_bound(instance: CmpInstance) -> float:
    """Cost of transacting everywhere: sum(k0) + (D-1) * sum(k).

    No schedule can cost more, since each cell contributes at most its
    day's price.
    """
    return float(
        sum(instance.first_day_price) + (instance.n_days - 1) * sum(instance.price)
    )


def evaluate_bits(bits: np.ndarray, instance: CmpInstance) -> BatchEvaluation:
    """Vectorized cost and constraint evaluation of a (K, V) bit matrix."""
    bits = np.asarray(bits)
    if bits.ndim != 2 or bits.shape[1] != instance.n_vars:
        raise InvalidArgumentError(
            f"bit matrix must have {instance.n_vars} columns"
        )
    n_samples = bits.shape[0]
    c, d = instance.n_points, instance.n_days
    cells = bits.reshape(n_samples, c, d, 2).astype(np.int16)
    m = cells[:, :, :, 0] + 2 * cells[:, :, :, 1]
    diff = m - instance.forecast_array()[None, :, :].astype(np.int16)
    moved = np.empty((n_samples, c, d), dtype=bool)
    moved[:, :, 0] = diff[:, :, 0] != 0
    if d > 1:
        moved[:, :, 1:] = diff[:, :, 1:] != diff[:, :, :-1]
    k0 = np.asarray(instance.first_day_price)
    k = np.asarray(instance.price)
    costs = moved[:, :, 0] @ k0 + np.einsum("kcd,c->k", moved[:, :, 1:], k)
    daily_tx = moved.sum(axis=1, dtype=np.int16)
    final_totals = m[:, :, -1].sum(axis=1, dtype=np.int16)
    sat_counts = (daily_tx <= instance.max_daily_tx).sum(axis=1, dtype=np.int16)
    sat_counts += final_totals <= instance.max_final_total
    return BatchEvaluation(
        costs=costs.astype(np.float64),
        sat_counts=sat_counts,
        final_totals=final_totals,
        daily_tx=daily_tx,
    )


def penalized_costs_from_batch(
    batch: BatchEvaluation,
    instance: CmpInstance,
    lambda_final: float,
    lambda_daily: float,
) -> np.ndarray:
    """Per-sample penalized cost from an evaluated batch."""
    viol_daily = (batch.daily_tx > instance.max_daily_tx).sum(axis=1)
    viol_final = batch.final_totals > instance.max_final_total
    return batch.costs + lambda_final * viol_final + lambda_daily * viol_daily


def enumerate_batches(
    instance: CmpInstance,
    chunk: int = ENUMERATION_CHUNK,
    limit: int = EXHAUSTIVE_LIMIT,
) -> Iterator[tuple[np.ndarray, BatchEvaluation]]:
    """Yield (basis indices, evaluation) over all 2^V schedules, chunked."""
    v = instance.n_vars
    if v > limit:
        raise ResourceLimitError(
            f"{v} variables exceed the exhaustive-search limit of {limit}"
        )
    shifts = np.arange(v - 1, -1, -1, dtype=np.int64)
    for start in range(0, 1 << v, chunk):
        idx = np.arange(start, min(start + chunk, 1 << v), dtype=np.int64)
        bits = ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
        yield idx, evaluate_bits(bits, instance)


def max_satisfiable(instance: CmpInstance, limit: int = EXHAUSTIVE_LIMIT) -> int:
    """Largest constraint count any schedule satisfies, by full enumeration."""
    best = 0
    for _, batch in enumerate_batches(instance, limit=limit):
        best = max(best, int(batch.sat_counts.max()))
        if best == instance.n_constraints:
            break
    return best


def cost_table(instance: CmpInstance, limit: int = EXHAUSTIVE_LIMIT) -> np.ndarray:
    """Transaction cost of every schedule, indexed by basis state (V <= limit)."""
    table = np.empty(1 << instance.n_vars, dtype=np.float64)
    for idx, batch in enumerate_batches(instance, limit=limit):
        table[idx[0]:idx[-1] + 1] = batch.costs
    table.setflags(write=False)
    return table


def expected_cost_product(one_probs: np.ndarray, instance: CmpInstance) -> float:
    """Exact expected transaction cost under independent per-bit probabilities.

    Each cost term touches only the two cells of one point on consecutive
    days, so the expectation needs nothing beyond four-bit marginals; this
    stays exact for hundreds of variables.
    """
    p1 = np.asarray(one_probs, dtype=np.float64).ravel()
    if p1.size != instance.n_vars:
        raise InvalidArgumentError(f"expected {instance.n_vars} probabilities")
    c, d = instance.n_points, instance.n_days
    bit_probs = p1.reshape(c, d, 2)
    # level_probs[c, t, m] = P(M_ct = m), m = b0 + 2*b1
    b0, b1 = bit_probs[:, :, 0], bit_probs[:, :, 1]
    level_probs = np.stack(
        [
            (1 - b0) * (1 - b1),
            b0 * (1 - b1),
            (1 - b0) * b1,
            b0 * b1,
        ],
        axis=-1,
    )
    p = instance.forecast_array()
    total = 0.0
    for point in range(c):
        p0 = p[point, 0]
        match = level_probs[point, 0, p0] if 0 <= p0 <= instance.level_max else 0.0
        total += instance.first_day_price[point] * (1.0 - match)
        for t in range(1, d):
            dp = p[point, t] - p[point, t - 1]
            stay = 0.0
            for m in range(LEVELS):
                prev = m - dp
                if 0 <= prev <= instance.level_max:
                    stay += level_probs[point, t, m] * level_probs[point, t - 1, prev]
            total += instance.price[point] * (1.0 - stay)
    return float(total)


def _round_half_away(x: float) -> int:
    return int(np.floor(x + 0.5)) if x >= 0 else -int(np.floor(-x + 0.5))


def generate_instance(
    n_points: int,
    n_days: int,
    rng: np.random.Generator,
    seed: int | None = None,
) -> CmpInstance:
    """Draw a random instance.

    Regular prices are uniform integers in [1, 4] and day-0 prices double
    them; forecasts are uniform integers in [-2, 5]; the final-day network
    cap equals the point count; the daily transaction cap is 1 for two
    points and round(3C/4) otherwise (half away from zero). The draw order
    (prices first, then forecasts row-major) is part of the
    reproducibility contract.
    """
    if n_points < 1 or n_days < 1:
        raise InvalidArgumentError("need at least one cash point and one day")
    k = rng.integers(PRICE_LOW, PRICE_HIGH + 1, size=n_points)
    p = rng.integers(FORECAST_LOW, FORECAST_HIGH + 1, size=(n_points, n_days))
    daily_cap = 1 if n_points == 2 else _round_half_away(0.75 * n_points)
    return CmpInstance(
        n_points=n_points,
        n_days=n_days,
        levels=LEVELS,
        first_day_price=tuple(float(2 * v) for v in k),
        price=tuple(float(v) for v in k),
        forecast=tuple(tuple(int(x) for x in row) for row in p),
        max_final_total=n_points,
        max_daily_tx=daily_cap,
        seed=seed,
    )
