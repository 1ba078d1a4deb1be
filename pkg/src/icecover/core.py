"""Problem-agnostic online covering with request predictions.

A covering problem hands out integer requests one by one; a solution is a set
of priced items, and any union of feasible partial solutions stays feasible
for the union of their requests.  This module holds the shared abstractions
(instances, partial solutions, online-algorithm adapters), the prediction
error metric, and the layered charging engine that wraps any online adapter:
it routes unpredicted requests to one incarnation of the adapter, predicted
requests to another, accrues the latter's spending in an ``excess`` counter,
and buys precomputed decomposition layers whenever the counter reaches their
cost (reinitializing the predicted-side incarnation after each purchase).
"""

from __future__ import annotations

import abc
import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class ConfigurationError(ValueError):
    """Inputs are structurally inconsistent (e.g. layers do not partition)."""


class AdapterContractViolation(RuntimeError):
    """An online adapter failed to cover the request it was stepped with."""


class OracleContractViolation(RuntimeError):
    """A partial-cover oracle returned less coverage than its contract."""


class InfeasibleInstanceError(ValueError):
    """A request is covered by no item at all."""


class InstanceParseError(ValueError):
    """Malformed instance input; carries the 1-based offending line if known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class GenerationError(RuntimeError):
    """Random instance generation could not satisfy its post-conditions."""


class SizeLimitError(ValueError):
    """Instance exceeds the configured cap for an exact computation."""


class NodeBudgetExceeded(RuntimeError):
    """Branch-and-bound ran out of nodes; carries incumbent and bound."""

    def __init__(self, message: str, incumbent=None, lower_bound: Fraction | None = None):
        super().__init__(message)
        self.incumbent = incumbent
        self.lower_bound = lower_bound


# ---------------------------------------------------------------------------
# Instances and solutions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PartialSolution:
    """A priced subset of the item space plus the requests it covers."""

    items: frozenset[int]
    covered: frozenset[int]
    cost: Fraction

    @property
    def is_empty(self) -> bool:
        return not self.items


EMPTY_SOLUTION = PartialSolution(frozenset(), frozenset(), Fraction(0))


class CoveringInstance(abc.ABC):
    """Requests plus a weighted item space with a coverage relation.

    Every request must be covered by at least one item and item costs are
    nonnegative exact rationals, so that spending comparisons are exact.
    """

    @property
    @abc.abstractmethod
    def requests(self) -> frozenset[int]: ...

    @property
    @abc.abstractmethod
    def item_ids(self) -> tuple[int, ...]: ...

    @abc.abstractmethod
    def item_cost(self, item_id: int) -> Fraction: ...

    @abc.abstractmethod
    def item_covers(self, item_id: int) -> frozenset[int]:
        """Requests covered by the item, restricted to this instance."""

    def solution(self, items: Iterable[int]) -> PartialSolution:
        """Build a consistent PartialSolution from item ids."""
        ids = frozenset(items)
        covered: frozenset[int] = frozenset()
        cost = Fraction(0)
        for i in sorted(ids):
            covered |= self.item_covers(i)
            cost += self.item_cost(i)
        return PartialSolution(items=ids, covered=covered & self.requests, cost=cost)

    def covering_items(self, request: int) -> tuple[int, ...]:
        """Item ids covering the request, ascending."""
        return tuple(i for i in self.item_ids if request in self.item_covers(i))


def covered_by(instance: CoveringInstance, items: Iterable[int]) -> frozenset[int]:
    out: frozenset[int] = frozenset()
    for i in items:
        out |= instance.item_covers(i)
    return out & instance.requests


# ---------------------------------------------------------------------------
# Prediction error
# ---------------------------------------------------------------------------


def prediction_error(actual: Iterable[int], predicted: Iterable[int]) -> int:
    """Symmetric-difference error between arrivals and prediction, capped at
    the number of arrivals."""
    a = frozenset(actual)
    p = frozenset(predicted)
    return min(len(a), len(a ^ p))


# ---------------------------------------------------------------------------
# Online adapters
# ---------------------------------------------------------------------------


def derive_seed(base: int, tag: str) -> int:
    """Stable 64-bit sub-seed for (base, tag); independent of PYTHONHASHSEED."""
    digest = hashlib.sha256(f"{base}:{tag}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


class OnlineState(abc.ABC):
    """One incarnation of an online algorithm.  Purchases grow monotonically
    and the state is confined to a single run."""

    purchased: set[int]

    @abc.abstractmethod
    def step(self, request: int) -> tuple[tuple[int, ...], Fraction]:
        """Serve one request; returns (items bought now, incremental cost)."""


class OnlineAdapter(abc.ABC):
    """Factory for fresh incarnations of an online covering algorithm.

    ``fresh(tag)`` must be deterministic given the adapter's seed and the
    tag, so that distinct incarnations inside one run are reproducible.
    """

    @abc.abstractmethod
    def fresh(self, tag: str) -> OnlineState: ...


def _layer_ranks(tie_break) -> Mapping[int, int]:
    if tie_break is None:
        return {}
    if hasattr(tie_break, "item_layer_ranks"):
        return tie_break.item_layer_ranks()
    return tie_break


class _CheapestItemState(OnlineState):
    def __init__(self, instance: CoveringInstance, ranks: Mapping[int, int]):
        self._instance = instance
        self._ranks = ranks
        self.purchased: set[int] = set()
        self._covered: set[int] = set()

    def step(self, request: int) -> tuple[tuple[int, ...], Fraction]:
        if request in self._covered:
            return (), Fraction(0)
        candidates = self._instance.covering_items(request)
        if not candidates:
            raise InfeasibleInstanceError(f"request {request} covered by no item")
        big = len(self._ranks) + len(self._instance.item_ids) + 1
        best = min(
            candidates,
            key=lambda i: (self._instance.item_cost(i), self._ranks.get(i, big), i),
        )
        self.purchased.add(best)
        self._covered.update(self._instance.item_covers(best))
        return (best,), self._instance.item_cost(best)


class CheapestItemAdapter(OnlineAdapter):
    """Baseline adapter: buy the cheapest item covering each uncovered
    request, cost ties broken by lowest decomposition layer then lowest id."""

    def __init__(self, instance: CoveringInstance, tie_break=None):
        self._instance = instance
        self._ranks = dict(_layer_ranks(tie_break))

    def fresh(self, tag: str) -> OnlineState:
        return _CheapestItemState(self._instance, self._ranks)


# ---------------------------------------------------------------------------
# The charging engine
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IceOptions:
    """Run options.

    skip_covered suppresses passing a predicted request to the predicted-side
    incarnation when bought layers already cover it; this only reduces cost
    and preserves feasibility.
    """

    skip_covered: bool = False


@dataclass(frozen=True)
class IceEvent:
    request: int
    routed_to: str  # "ALG+" or "ALG-"
    items: tuple[int, ...]
    cost: Fraction
    excess_after: Fraction
    layer_after: int  # 1-based index of the next unpurchased layer


@dataclass
class IceTrace:
    """Full replay record of one charging-engine run."""

    events: list[IceEvent]
    layers_bought: list[tuple[int, int]]  # (1-based layer index, event position)
    total_cost: Fraction  # plus-side + all minus-side incarnations + layers
    solution_cost: Fraction  # cost of the union of all distinct items bought
    purchased: frozenset[int]
    k: int
    k_plus: int
    k_minus: int
    delta_minus: int
    excess_final: Fraction
    alg_plus_cost: Fraction = Fraction(0)
    alg_minus_costs: list[Fraction] = field(default_factory=list)
    layer_cost_total: Fraction = Fraction(0)

    def to_text(self) -> str:
        """Canonical serialization, used for byte-for-byte determinism checks."""
        lines = [
            f"k {self.k} k_plus {self.k_plus} k_minus {self.k_minus} "
            f"delta_minus {self.delta_minus}",
            f"total {self.total_cost} solution {self.solution_cost} "
            f"excess {self.excess_final}",
            "layers " + " ".join(f"{i}@{p}" for i, p in self.layers_bought),
        ]
        for e in self.events:
            lines.append(
                f"{e.request} {e.routed_to} [{' '.join(map(str, e.items))}] "
                f"{e.cost} {e.excess_after} {e.layer_after}"
            )
        return "\n".join(lines) + "\n"


def ice_run(
    instance: CoveringInstance,
    prediction: Iterable[int],
    decomposition,
    adapter: OnlineAdapter,
    arrivals: Sequence[int],
    options: IceOptions = IceOptions(),
) -> IceTrace:
    """Run the charging engine over an arrival sequence.

    Requests outside the prediction go to the plus-side incarnation.
    Predicted requests go to the minus side; its incremental cost accrues in
    ``excess``, and while ``excess`` is at least the next layer's cost that
    layer is bought, its cost (the one just bought) subtracted, and the layer
    pointer advanced.  The minus side is reinitialized once after the loop
    drains.  Once layers are exhausted the loop is skipped permanently.
    """
    predicted = frozenset(prediction)
    layers = tuple(decomposition.layers)
    layer_union = frozenset().union(*(l.requests for l in layers)) if layers else frozenset()
    if layer_union != predicted or sum(len(l.requests) for l in layers) != len(predicted):
        raise ConfigurationError("decomposition layers do not partition the prediction")
    arrival_list = list(arrivals)
    if len(set(arrival_list)) != len(arrival_list):
        raise ConfigurationError("arrivals contain duplicates")
    unknown = set(arrival_list) - instance.requests
    if unknown:
        raise ConfigurationError(f"arrivals outside the instance: {sorted(unknown)}")

    excess = Fraction(0)
    layer = 0  # 0-based index of the next unpurchased layer
    alg_plus = adapter.fresh("plus")
    minus_idx = 0
    alg_minus = adapter.fresh(f"minus/{minus_idx}")

    purchased: set[int] = set()
    covered: set[int] = set()  # requests covered by the global purchase union
    layers_covered: set[int] = set()  # requests covered by bought layers only
    events: list[IceEvent] = []
    layers_bought: list[tuple[int, int]] = []
    alg_plus_cost = Fraction(0)
    alg_minus_costs = [Fraction(0)]
    layer_cost_total = Fraction(0)

    def _absorb(items: Iterable[int]) -> None:
        for i in items:
            if i not in purchased:
                purchased.add(i)
                covered.update(instance.item_covers(i))

    for pos, x in enumerate(arrival_list):
        if x not in predicted:
            items, inc = alg_plus.step(x)
            alg_plus_cost += inc
            _absorb(items)
            if x not in covered_by(instance, alg_plus.purchased):
                raise AdapterContractViolation(f"plus side left request {x} uncovered")
            events.append(IceEvent(x, "ALG+", tuple(sorted(items)), inc, excess, layer + 1))
        else:
            if options.skip_covered and x in layers_covered:
                events.append(IceEvent(x, "ALG-", (), Fraction(0), excess, layer + 1))
                continue
            items, inc = alg_minus.step(x)
            alg_minus_costs[minus_idx] += inc
            excess += inc
            _absorb(items)
            if x not in covered_by(instance, alg_minus.purchased):
                raise AdapterContractViolation(f"minus side left request {x} uncovered")
            bought_now = False
            while layer < len(layers) and excess >= layers[layer].solution.cost:
                sol = layers[layer].solution
                layer_cost_total += sol.cost
                _absorb(sol.items)
                layers_covered.update(sol.covered)
                layers_bought.append((layer + 1, pos))
                excess -= sol.cost
                layer += 1
                bought_now = True
            if bought_now:
                minus_idx += 1
                alg_minus = adapter.fresh(f"minus/{minus_idx}")
                alg_minus_costs.append(Fraction(0))
            events.append(IceEvent(x, "ALG-", tuple(sorted(items)), inc, excess, layer + 1))
        if x not in covered:
            raise AdapterContractViolation(f"request {x} uncovered after its event")

    solution_cost = sum((instance.item_cost(i) for i in purchased), Fraction(0))
    total = alg_plus_cost + sum(alg_minus_costs, Fraction(0)) + layer_cost_total
    k_plus = sum(1 for x in arrival_list if x not in predicted)
    return IceTrace(
        events=events,
        layers_bought=layers_bought,
        total_cost=total,
        solution_cost=solution_cost,
        purchased=frozenset(purchased),
        k=len(arrival_list),
        k_plus=k_plus,
        k_minus=len(arrival_list) - k_plus,
        delta_minus=len(predicted - set(arrival_list)),
        excess_final=excess,
        alg_plus_cost=alg_plus_cost,
        alg_minus_costs=alg_minus_costs,
        layer_cost_total=layer_cost_total,
    )
