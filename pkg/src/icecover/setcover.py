"""Weighted set cover: parsing, generation, oracles, and the online baseline.

Elements are 1..n, sets carry exact rational costs.  Internally sets are
bitmasks (element e maps to bit e-1), which keeps the greedy, the exact
branch-and-bound, and the fractional update loops fast at benchmark scale.
"""

from __future__ import annotations

import io
import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .core import (
    CoveringInstance,
    EMPTY_SOLUTION,
    GenerationError,
    InfeasibleInstanceError,
    InstanceParseError,
    NodeBudgetExceeded,
    OnlineAdapter,
    OnlineState,
    OracleContractViolation,
    PartialSolution,
    SizeLimitError,
    derive_seed,
    _layer_ranks,
)

ONE_MINUS_1_OVER_E = 1.0 - 1.0 / math.e

# seeded3 enumerates O(|S|^3) seeds; past this many sets it is too slow to be
# the default and the plain variant (with its weaker constant) is used.
DEFAULT_SEEDED3_MAX_SETS = 20

_SUBSET_SUM_CAP = 4096


@dataclass(frozen=True)
class CoverSet:
    id: int
    members: frozenset[int]
    cost: Fraction


class SetCoverInstance(CoveringInstance):
    """Immutable weighted set cover instance over elements 1..n_elements."""

    def __init__(self, n_elements: int, sets: list[CoverSet] | tuple[CoverSet, ...]):
        if n_elements <= 0:
            raise InstanceParseError("n_elements must be positive")
        self.n_elements = n_elements
        self.sets = tuple(sets)
        seen_ids = set()
        covered_all: set[int] = set()
        for s in self.sets:
            if s.id in seen_ids:
                raise InstanceParseError(f"duplicate set id {s.id}")
            seen_ids.add(s.id)
            if not s.members:
                raise InstanceParseError(f"set {s.id} is empty")
            if s.cost < 0:
                raise InstanceParseError(f"set {s.id} has negative cost")
            for e in s.members:
                if not 1 <= e <= n_elements:
                    raise InstanceParseError(f"set {s.id}: element {e} out of range")
            covered_all.update(s.members)
        missing = set(range(1, n_elements + 1)) - covered_all
        if missing:
            raise InstanceParseError(f"uncoverable element {min(missing)}")
        self._requests = frozenset(range(1, n_elements + 1))
        self._by_id = {s.id: s for s in self.sets}
        self._ids = tuple(s.id for s in self.sets)
        self._mask = {s.id: _to_mask(s.members) for s in self.sets}
        self._covering: dict[int, tuple[int, ...]] = {e: () for e in self._requests}
        for s in self.sets:
            for e in sorted(s.members):
                self._covering[e] = self._covering[e] + (s.id,)

    # CoveringInstance surface -------------------------------------------------

    @property
    def requests(self) -> frozenset[int]:
        return self._requests

    @property
    def item_ids(self) -> tuple[int, ...]:
        return self._ids

    def item_cost(self, item_id: int) -> Fraction:
        return self._by_id[item_id].cost

    def item_covers(self, item_id: int) -> frozenset[int]:
        return self._by_id[item_id].members

    def covering_items(self, request: int) -> tuple[int, ...]:
        return self._covering.get(request, ())

    # bitmask helpers ----------------------------------------------------------

    def mask_of(self, item_id: int) -> int:
        return self._mask[item_id]

    def unit_costs(self) -> bool:
        return len({s.cost for s in self.sets}) == 1

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SetCoverInstance)
            and self.n_elements == other.n_elements
            and self.sets == other.sets
        )

    def __hash__(self):
        return hash((self.n_elements, self.sets))


def _to_mask(members) -> int:
    m = 0
    for e in members:
        m |= 1 << (e - 1)
    return m


def _from_mask(mask: int) -> frozenset[int]:
    out = set()
    while mask:
        low = mask & -mask
        out.add(low.bit_length())
        mask ^= low
    return frozenset(out)


# ---------------------------------------------------------------------------
# Parsing and generation
# ---------------------------------------------------------------------------


def load_instance(source, format: str = "pace") -> SetCoverInstance:
    """Parse an instance from text/bytes/stream in 'pace' or 'json' format."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    if format == "pace":
        return _parse_pace(text)
    if format == "json":
        return _parse_json(text)
    raise ValueError(f"unknown format {format!r}")


def _parse_pace(text: str) -> SetCoverInstance:
    n = m = None
    sets: list[CoverSet] = []
    next_id = 1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "hs":
                raise InstanceParseError(f"malformed header {line!r}", line=lineno)
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise InstanceParseError(f"malformed header {line!r}", line=lineno)
            continue
        if n is None:
            raise InstanceParseError("set line before header", line=lineno)
        try:
            elems = [int(t) for t in line.split()]
        except ValueError:
            raise InstanceParseError(f"non-integer token in {line!r}", line=lineno)
        if not elems:
            raise InstanceParseError("empty set", line=lineno)
        if len(set(elems)) != len(elems):
            raise InstanceParseError("duplicate member in set", line=lineno)
        for e in elems:
            if not 1 <= e <= n:
                raise InstanceParseError(f"element {e} out of range 1..{n}", line=lineno)
        sets.append(CoverSet(next_id, frozenset(elems), Fraction(1)))
        next_id += 1
    if n is None:
        raise InstanceParseError("missing header")
    if m is not None and len(sets) != m:
        raise InstanceParseError(f"header promised {m} sets, found {len(sets)}")
    return SetCoverInstance(n, sets)


def _parse_json(text: str) -> SetCoverInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(f"invalid json: {exc}", line=exc.lineno)
    if not isinstance(doc, dict) or "n" not in doc or "sets" not in doc:
        raise InstanceParseError("json must carry 'n' and 'sets'")
    sets = []
    for entry in doc["sets"]:
        members = entry["members"]
        if len(set(members)) != len(members):
            raise InstanceParseError(f"duplicate member in set {entry.get('id')}")
        sets.append(
            CoverSet(int(entry["id"]), frozenset(int(e) for e in members), Fraction(str(entry["cost"])))
        )
    return SetCoverInstance(int(doc["n"]), sets)


def dump_instance(instance: SetCoverInstance, format: str = "json") -> str:
    if format == "json":
        doc = {
            "n": instance.n_elements,
            "sets": [
                {"id": s.id, "cost": f"{s.cost.numerator}/{s.cost.denominator}", "members": sorted(s.members)}
                for s in instance.sets
            ],
        }
        return json.dumps(doc)
    if format == "pace":
        if any(s.cost != 1 for s in instance.sets):
            raise ValueError("pace format carries unit costs only")
        lines = [f"p hs {instance.n_elements} {len(instance.sets)}"]
        lines += [" ".join(map(str, sorted(s.members))) for s in instance.sets]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {format!r}")


def gen_random(seed: int, n_elements: int, n_sets: int, set_size: int) -> SetCoverInstance:
    """Random unit-cost instance: each set is a uniform sample without
    replacement; resampled wholesale until every element is covered."""
    if set_size > n_elements:
        raise ValueError("set_size exceeds n_elements")
    rng = random.Random(seed)
    universe = list(range(1, n_elements + 1))
    for _ in range(100):
        sets = [
            CoverSet(i + 1, frozenset(rng.sample(universe, set_size)), Fraction(1))
            for i in range(n_sets)
        ]
        covered = set().union(*(s.members for s in sets))
        if len(covered) == n_elements:
            return SetCoverInstance(n_elements, sets)
    raise GenerationError(
        f"could not cover {n_elements} elements with {n_sets} sets of {set_size} in 100 attempts"
    )


# ---------------------------------------------------------------------------
# Budgeted maximum coverage greedy
# ---------------------------------------------------------------------------


def _greedy_fill(
    instance: SetCoverInstance,
    residual_mask: int,
    budget: Fraction,
    start_items: tuple[int, ...],
    start_cost: Fraction,
    start_cover: int,
) -> tuple[tuple[int, ...], Fraction, int]:
    """Complete a seed greedily by coverage-per-cost among sets fitting the
    remaining budget.  Returns (items, cost, covered-mask)."""
    items = list(start_items)
    chosen = set(start_items)
    cover = start_cover
    cost = start_cost
    while True:
        best = None
        best_gain = 0
        best_cost = Fraction(0)
        for s in instance.sets:
            if s.id in chosen or cost + s.cost > budget:
                continue
            gain = (instance.mask_of(s.id) & residual_mask & ~cover).bit_count()
            if gain <= 0:
                continue
            # maximize gain/cost exactly; ties to lower id via iteration order
            if best is None or _ratio_gt(gain, s.cost, best_gain, best_cost):
                best, best_gain, best_cost = s, gain, s.cost
        if best is None:
            return tuple(items), cost, cover
        items.append(best.id)
        chosen.add(best.id)
        cover |= instance.mask_of(best.id)
        cost += best.cost


def _ratio_gt(gain: int, cost: Fraction, best_gain: int, best_cost: Fraction) -> bool:
    """gain/cost > best_gain/best_cost with zero costs ranked as infinite."""
    if cost == 0 and best_cost == 0:
        return gain > best_gain
    if cost == 0:
        return True
    if best_cost == 0:
        return False
    return gain * best_cost > best_gain * cost


def _better(a: tuple[int, Fraction, tuple[int, ...]], b) -> bool:
    """Order candidate solutions by (coverage desc, cost asc, items lex)."""
    if b is None:
        return True
    return (-a[0], a[1], tuple(sorted(a[2]))) < (-b[0], b[1], tuple(sorted(b[2])))


def bmc_greedy(
    instance: SetCoverInstance,
    residual,
    budget: Fraction,
    variant: str = "plain",
) -> PartialSolution:
    """Greedy budgeted maximum coverage over the residual elements.

    plain: ratio greedy plus the best single set within budget.
    seeded3: every seed of at most 3 sets within budget is completed greedily;
    this variant carries the (1 - 1/e) coverage guarantee.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    residual_mask = _to_mask(frozenset(residual) & instance.requests)
    best: tuple[int, Fraction, tuple[int, ...]] | None = None

    def consider(items: tuple[int, ...], cost: Fraction, cover: int) -> None:
        nonlocal best
        cand = ((cover & residual_mask).bit_count(), cost, items)
        if _better(cand, best):
            best = cand

    consider((), Fraction(0), 0)
    if variant == "plain":
        consider(*_relabel(_greedy_fill(instance, residual_mask, budget, (), Fraction(0), 0)))
        for s in instance.sets:  # best single set
            if s.cost <= budget:
                consider((s.id,), s.cost, instance.mask_of(s.id))
    elif variant == "seeded3":
        sets = instance.sets
        idx = range(len(sets))
        seeds: list[tuple[int, ...]] = [()]
        seeds += [(i,) for i in idx]
        seeds += [(i, j) for i in idx for j in idx if i < j]
        seeds += [
            (i, j, k) for i in idx for j in idx if i < j for k in idx if j < k
        ]
        for seed in seeds:
            cost = sum((sets[i].cost for i in seed), Fraction(0))
            if cost > budget:
                continue
            cover = 0
            for i in seed:
                cover |= instance.mask_of(sets[i].id)
            items = tuple(sets[i].id for i in seed)
            consider(items, cost, cover)
            consider(*_relabel(_greedy_fill(instance, residual_mask, budget, items, cost, cover)))
    else:
        raise ValueError(f"unknown variant {variant!r}")

    covered_mask = 0
    for i in best[2]:
        covered_mask |= instance.mask_of(i)
    return PartialSolution(
        items=frozenset(best[2]),
        covered=_from_mask(covered_mask) & instance.requests,
        cost=best[1],
    )


def _relabel(filled):
    items, cost, cover = filled
    return items, cost, cover


# ---------------------------------------------------------------------------
# The (1, e/(e-1)) oracle: budget search around the greedy
# ---------------------------------------------------------------------------


def coverage_target(i: int) -> int:
    """ceil((1 - 1/e) * i); the factor is irrational so the guard is safe."""
    return math.ceil(i * ONE_MINUS_1_OVER_E - 1e-12)


def _candidate_budgets(instance: SetCoverInstance) -> list[Fraction]:
    """All subset sums when small enough, else set costs plus prefix sums of
    an unconstrained greedy run (iteratively closed by the caller)."""
    sums = {Fraction(0)}
    for s in instance.sets:
        sums |= {v + s.cost for v in sums}
        if len(sums) > _SUBSET_SUM_CAP:
            break
    else:
        return sorted(sums)
    coarse = {Fraction(0), sum((s.cost for s in instance.sets), Fraction(0))}
    coarse |= {s.cost for s in instance.sets}
    return sorted(coarse)


def partial_cover_oracle(
    instance: SetCoverInstance,
    residual,
    i: int,
    variant: str | None = None,
) -> PartialSolution:
    """Cover at least ceil((1-1/e)*i) residual elements at cost at most the
    exact optimum for covering i of them, by searching the smallest
    sufficient budget among achievable cost points."""
    residual_set = frozenset(residual) & instance.requests
    if not 1 <= i <= len(residual_set):
        raise ValueError(f"i={i} outside 1..{len(residual_set)}")
    if variant is None:
        variant = "seeded3" if len(instance.sets) <= DEFAULT_SEEDED3_MAX_SETS else "plain"
    target = coverage_target(i)
    candidates = _candidate_budgets(instance)

    def run(budget: Fraction) -> PartialSolution:
        return bmc_greedy(instance, residual_set, budget, variant=variant)

    if instance.unit_costs():
        # equal costs make greedy coverage monotone in the budget
        lo, hi = 0, len(candidates) - 1
        best = None
        while lo <= hi:
            mid = (lo + hi) // 2
            sol = run(candidates[mid])
            if len(sol.covered & residual_set) >= target:
                best = sol
                hi = mid - 1
            else:
                lo = mid + 1
        if best is not None:
            return best
    else:
        seen = set()
        frontier = list(candidates)
        while frontier:
            frontier.sort()
            budget = frontier.pop(0)
            if budget in seen:
                continue
            seen.add(budget)
            sol = run(budget)
            if len(sol.covered & residual_set) >= target:
                return sol
            # realized totals are fixpoints of the greedy; refine around them
            if sol.cost not in seen and sol.cost not in frontier:
                frontier.append(sol.cost)
    raise OracleContractViolation(
        f"no budget reached coverage {target} for i={i}"
    )


# ---------------------------------------------------------------------------
# Exact partial cover (branch and bound)
# ---------------------------------------------------------------------------


@dataclass
class _BnbBest:
    cost: Fraction | None = None
    coverage: int = -1
    items: tuple[int, ...] = ()

    def consider(self, cost: Fraction, coverage: int, items: tuple[int, ...]) -> None:
        key = (cost, -coverage, tuple(sorted(items)))
        if self.cost is None or key < (self.cost, -self.coverage, tuple(sorted(self.items))):
            self.cost, self.coverage, self.items = cost, coverage, items


def exact_partial_cover(
    instance: SetCoverInstance,
    residual,
    i: int,
    *,
    max_nodes: int = 2_000_000,
    cap_elements: int | None = None,
    cap_items: int | None = None,
    coverage_table: dict | None = None,
) -> PartialSolution:
    """True minimum-cost solution covering at least i residual elements.

    Equal-cost optima are resolved toward larger coverage, then lexicographic
    item ids, which keeps downstream constructions deterministic.  Raises
    NodeBudgetExceeded (with incumbent and certified lower bound) when the
    node budget runs out.  coverage_table, when given, caches the exact
    max-coverage-per-cardinality subresults across calls on one instance.
    """
    if cap_elements is not None and instance.n_elements > cap_elements:
        raise SizeLimitError(f"{instance.n_elements} elements exceed cap {cap_elements}")
    if cap_items is not None and len(instance.sets) > cap_items:
        raise SizeLimitError(f"{len(instance.sets)} sets exceed cap {cap_items}")
    residual_set = frozenset(residual) & instance.requests
    if i <= 0:
        return EMPTY_SOLUTION
    if i > len(residual_set):
        raise ValueError(f"i={i} exceeds |residual|={len(residual_set)}")
    residual_mask = _to_mask(residual_set)
    if i == len(residual_set):
        return _exact_full_cover(instance, residual_mask, max_nodes)
    if instance.unit_costs():
        return _exact_partial_uniform(instance, residual_mask, i, max_nodes, coverage_table)
    return _exact_partial_general(instance, residual_mask, i, max_nodes)


def _exact_partial_uniform(
    instance: SetCoverInstance,
    residual_mask: int,
    need: int,
    max_nodes: int,
    coverage_table: dict | None = None,
) -> PartialSolution:
    """Equal costs: the optimum is the fewest sets reaching the coverage, so
    search max coverage per cardinality s = 1, 2, ..."""
    unit = instance.sets[0].cost
    budget = [max_nodes]
    for s in range(1, len(instance.sets) + 1):
        key = (residual_mask, s)
        if coverage_table is not None and key in coverage_table:
            cover, items = coverage_table[key]
        else:
            cover, items = max_coverage_exact(instance, residual_mask, s, node_budget=budget)
            if coverage_table is not None:
                coverage_table[key] = (cover, items)
        if cover >= need:
            covered = 0
            for it in items:
                covered |= instance.mask_of(it)
            return PartialSolution(frozenset(items), _from_mask(covered) & instance.requests, unit * len(items))
    raise InfeasibleInstanceError("residual cannot be covered to the requested count")


def _exact_full_cover(
    instance: SetCoverInstance, residual_mask: int, max_nodes: int
) -> PartialSolution:
    """Min-cost cover of every residual element, branching on an uncovered
    element with the fewest usable covering sets."""
    idx_of = {s.id: j for j, s in enumerate(instance.sets)}
    masks = [instance.mask_of(s.id) & residual_mask for s in instance.sets]
    costs = [s.cost for s in instance.sets]
    ids = [s.id for s in instance.sets]
    m = len(ids)
    covering_idx: dict[int, tuple[int, ...]] = {}
    for e in _iter_bits(residual_mask):
        covering_idx[e] = tuple(j for j in range(m) if masks[j] >> (e - 1) & 1)
        if not covering_idx[e]:
            raise InfeasibleInstanceError(f"element {e} covered by no set")
    unit = instance.unit_costs()
    min_cost = min(costs)

    best = _BnbBest()
    greedy = _greedy_cover_at_least(masks, costs, ids, residual_mask, residual_mask.bit_count())
    if greedy is not None:
        best.consider(*greedy)

    nodes = 0
    open_lb: list[Fraction] = []

    def lb_of(cover: int, banned: int) -> Fraction:
        uncovered = residual_mask & ~cover
        if not uncovered:
            return Fraction(0)
        best_gain = 0
        for j in range(m):
            if banned >> j & 1:
                continue
            g = (masks[j] & uncovered).bit_count()
            if g > best_gain:
                best_gain = g
        if best_gain == 0:
            return Fraction(10**12)
        return min_cost * ((uncovered.bit_count() + best_gain - 1) // best_gain)

    def dfs(cover: int, cost: Fraction, chosen: tuple[int, ...], banned: int) -> None:
        nonlocal nodes
        nodes += 1
        if nodes > max_nodes:
            # every unexplored subproblem hangs off the current path, so the
            # certified bound is the min over path-node bounds and incumbent
            certified = [b for b in open_lb]
            if best.cost is not None:
                certified.append(best.cost)
            raise NodeBudgetExceeded(
                f"node budget {max_nodes} exhausted",
                incumbent=_solution_from(instance, best) if best.cost is not None else None,
                lower_bound=min(certified, default=None),
            )
        uncovered = residual_mask & ~cover
        if not uncovered:
            best.consider(cost, residual_mask.bit_count(), chosen)
            return
        bound = cost + lb_of(cover, banned)
        if best.cost is not None and bound > best.cost:
            return
        open_lb.append(bound)
        # most-constrained uncovered element
        pick_e = None
        pick_opts: tuple[int, ...] = ()
        for e in _iter_bits(uncovered):
            opts = tuple(j for j in covering_idx[e] if not banned >> j & 1)
            if not opts:
                open_lb.pop()
                return
            if pick_e is None or len(opts) < len(pick_opts):
                pick_e, pick_opts = e, opts
                if len(opts) == 1:
                    break
        order = sorted(
            pick_opts, key=lambda j: (-(masks[j] & uncovered).bit_count(), costs[j], j)
        ) if unit else sorted(
            pick_opts,
            key=lambda j: (costs[j], -(masks[j] & uncovered).bit_count(), j),
        )
        new_banned = banned
        for j in order:
            dfs(cover | masks[j], cost + costs[j], chosen + (ids[j],), new_banned)
            new_banned |= 1 << j  # later branches may not reuse this set
        open_lb.pop()

    dfs(0, Fraction(0), (), 0)
    if best.cost is None:
        raise InfeasibleInstanceError("residual cannot be covered")
    return _solution_from(instance, best)


def max_coverage_exact(
    instance: SetCoverInstance,
    residual_mask: int,
    s: int,
    node_budget: list[int] | None = None,
) -> tuple[int, tuple[int, ...]]:
    """Exact max coverage of the residual with at most s sets (ids lex-min
    among ties).  node_budget is a mutable one-element countdown shared
    across calls."""
    if node_budget is None:
        node_budget = [2_000_000]
    order = sorted(
        instance.sets,
        key=lambda t: (-(instance.mask_of(t.id) & residual_mask).bit_count(), t.id),
    )
    masks = [instance.mask_of(t.id) & residual_mask for t in order]
    ids = [t.id for t in order]
    best_cover = -1
    best_items: tuple[int, ...] = ()

    def consider(cover: int, items: tuple[int, ...]) -> None:
        nonlocal best_cover, best_items
        if (-cover, tuple(sorted(items))) < (-best_cover, tuple(sorted(best_items))):
            best_cover, best_items = cover, items

    # stack of (next index, chosen ids, covered mask); branch on sets[idx]
    stack: list[tuple[int, tuple[int, ...], int]] = [(0, (), 0)]
    while stack:
        idx, chosen, cover = stack.pop()
        node_budget[0] -= 1
        if node_budget[0] < 0:
            raise NodeBudgetExceeded(
                "max-coverage node budget exhausted",
                incumbent=best_items,
                lower_bound=None,
            )
        covered_count = cover.bit_count()
        consider(covered_count, chosen)
        if len(chosen) == s or idx >= len(ids):
            continue
        remaining_picks = s - len(chosen)
        gains = sorted(
            ((masks[j] & ~cover).bit_count() for j in range(idx, len(ids))),
            reverse=True,
        )
        bound = covered_count + sum(gains[:remaining_picks])
        if bound <= best_cover:
            continue
        # exclude branch first so the include branch is explored first (LIFO)
        stack.append((idx + 1, chosen, cover))
        if (masks[idx] & ~cover).bit_count() > 0:
            stack.append((idx + 1, chosen + (ids[idx],), cover | masks[idx]))
    return best_cover, best_items


def _exact_partial_general(
    instance: SetCoverInstance, residual_mask: int, need: int, max_nodes: int
) -> PartialSolution:
    sets = sorted(
        instance.sets,
        key=lambda t: (
            -(instance.mask_of(t.id) & residual_mask).bit_count(),
            t.cost,
            t.id,
        ),
    )
    masks = [instance.mask_of(t.id) & residual_mask for t in sets]
    costs = [t.cost for t in sets]
    ids = [t.id for t in sets]
    max_size = max((m.bit_count() for m in masks), default=1) or 1
    # cheapest item cost per residual element, for the per-element lower bound
    cheapest: dict[int, Fraction] = {}
    for m, c in zip(masks, costs):
        mm = m
        while mm:
            low = mm & -mm
            e = low.bit_length()
            if e not in cheapest or c < cheapest[e]:
                cheapest[e] = c
            mm ^= low

    best = _BnbBest()
    greedy = _greedy_cover_at_least(masks, costs, ids, residual_mask, need)
    if greedy is not None:
        best.consider(*greedy)

    def lower_bound(cover: int, remaining_idx: int) -> Fraction:
        needed = need - (cover & residual_mask).bit_count()
        if needed <= 0:
            return Fraction(0)
        uncovered = residual_mask & ~cover
        vals = sorted(cheapest[e] for e in _iter_bits(uncovered))
        if len(vals) < needed:
            return Fraction(10**12)  # cannot reach the count: prune
        lb1 = sum(vals[:needed], Fraction(0)) / max_size
        best_gain = 0
        min_cost: Fraction | None = None
        for j in range(remaining_idx, len(masks)):
            g = (masks[j] & uncovered).bit_count()
            if g > best_gain:
                best_gain = g
            if g > 0 and (min_cost is None or costs[j] < min_cost):
                min_cost = costs[j]
        if best_gain == 0:
            return Fraction(10**12)
        lb2 = (min_cost or Fraction(0)) * ((needed + best_gain - 1) // best_gain)
        return max(lb1, lb2)

    nodes = 0
    open_bounds: list[Fraction] = []
    stack: list[tuple[int, tuple[int, ...], int, Fraction]] = [(0, (), 0, Fraction(0))]
    while stack:
        idx, chosen, cover, cost = stack.pop()
        nodes += 1
        if nodes > max_nodes:
            open_bounds.extend(c + lower_bound(cv, ix) for ix, _, cv, c in stack)
            lb = min(open_bounds, default=best.cost)
            if best.cost is not None and best.cost < lb:
                lb = best.cost
            raise NodeBudgetExceeded(
                f"node budget {max_nodes} exhausted",
                incumbent=_solution_from(instance, best) if best.cost is not None else None,
                lower_bound=lb,
            )
        covered_count = (cover & residual_mask).bit_count()
        if covered_count >= need:
            best.consider(cost, covered_count, chosen)
            continue
        if idx >= len(masks):
            continue
        lb = cost + lower_bound(cover, idx)
        if best.cost is not None and lb > best.cost:
            continue
        # equal-bound nodes stay open: they may improve the coverage tie-break
        # branch on the next set: exclude first (LIFO order explores include first)
        stack.append((idx + 1, chosen, cover, cost))
        stack.append((idx + 1, chosen + (ids[idx],), cover | masks[idx], cost + costs[idx]))
    if best.cost is None:
        raise InfeasibleInstanceError("residual cannot be covered to the requested count")
    return _solution_from(instance, best)


def _solution_from(instance: SetCoverInstance, best: _BnbBest) -> PartialSolution:
    covered = 0
    for it in best.items:
        covered |= instance.mask_of(it)
    return PartialSolution(
        frozenset(best.items), _from_mask(covered) & instance.requests, best.cost
    )


def _greedy_cover_at_least(masks, costs, ids, residual_mask, need):
    cover = 0
    cost = Fraction(0)
    chosen: list[int] = []
    used = set()
    while (cover & residual_mask).bit_count() < need:
        best_j = None
        best_gain = 0
        for j in range(len(masks)):
            if j in used:
                continue
            g = (masks[j] & residual_mask & ~cover).bit_count()
            if g <= 0:
                continue
            if best_j is None or g * costs[best_j] > best_gain * costs[j]:
                best_j, best_gain = j, g
        if best_j is None:
            return None
        used.add(best_j)
        chosen.append(ids[best_j])
        cover |= masks[best_j]
        cost += costs[best_j]
    return cost, (cover & residual_mask).bit_count(), tuple(chosen)


def _iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length()
        mask ^= low


def enumerate_partial_cover(instance: SetCoverInstance, residual, i: int) -> PartialSolution:
    """Brute-force reference oracle: scan all item subsets.  Desk scale only."""
    residual_mask = _to_mask(frozenset(residual) & instance.requests)
    n = len(instance.sets)
    best = _BnbBest()
    for bits in range(1 << n):
        cover = 0
        cost = Fraction(0)
        items = []
        b = bits
        while b:
            low = b & -b
            j = low.bit_length() - 1
            cover |= instance.mask_of(instance.sets[j].id)
            cost += instance.sets[j].cost
            items.append(instance.sets[j].id)
            b ^= low
        if (cover & residual_mask).bit_count() >= i:
            best.consider(cost, (cover & residual_mask).bit_count(), tuple(items))
    if best.cost is None:
        raise InfeasibleInstanceError("no subset reaches the requested coverage")
    return _solution_from(instance, best)


# ---------------------------------------------------------------------------
# Online baseline: multiplicative fractional updates + threshold rounding
# ---------------------------------------------------------------------------


@dataclass
class FractionalState:
    """Monotone fractional solution plus the threshold-rounding bookkeeping."""

    instance: SetCoverInstance
    seed: int
    tie_break_ranks: dict[int, int] = field(default_factory=dict)
    x: dict[int, float] = field(default_factory=dict)
    thresholds: dict[int, list[float]] = field(default_factory=dict)
    purchased: set[int] = field(default_factory=set)
    k_est: int = 1
    arrivals_seen: int = 0
    frac_cost: float = 0.0

    def __post_init__(self):
        self._rng = random.Random(self.seed)
        self.x = {i: 0.0 for i in self.instance.item_ids}
        self._covered: set[int] = set()
        self._redraw()

    def _redraw(self) -> None:
        count = math.ceil(2 * math.log2(self.k_est + 1))
        for i in self.instance.item_ids:
            self.thresholds[i] = sorted(self._rng.random() for _ in range(count))


def online_step(
    state: FractionalState,
    instance: SetCoverInstance,
    element: int,
    tie_break=None,
) -> tuple[FractionalState, tuple[int, ...], Fraction]:
    """One arrival of the online baseline.

    The fractional value of every set containing the element is raised
    multiplicatively (plus an additive 1/(d*cost) kick) until the element is
    fractionally covered; sets are bought when their value crosses a sampled
    threshold, and a cheapest covering set is bought as feasibility fallback.
    The state is updated in place and returned.
    """
    covering = instance.covering_items(element)
    if not covering:
        raise InfeasibleInstanceError(f"element {element} covered by no set")
    state.arrivals_seen += 1
    while state.arrivals_seen > state.k_est:
        state.k_est *= 2
        state._redraw()

    d = len(covering)
    fcost = {i: float(instance.item_cost(i)) for i in covering}
    total = sum(state.x[i] for i in covering)
    while total < 1.0 - 1e-12:
        total = 0.0
        for i in covering:
            c = fcost[i]
            if c == 0.0:
                state.x[i] = 1.0
            else:
                new = state.x[i] * (1.0 + 1.0 / c) + 1.0 / (d * c)
                state.frac_cost += c * (new - state.x[i])
                state.x[i] = new
            total += state.x[i]

    bought: list[int] = []

    def buy(i: int) -> None:
        if i not in state.purchased:
            state.purchased.add(i)
            state._covered.update(instance.item_covers(i))
            bought.append(i)

    for i in instance.item_ids:
        ts = state.thresholds[i]
        while ts and state.x[i] >= ts[0]:
            ts.pop(0)
            buy(i)

    if element not in state._covered:
        ranks = _layer_ranks(tie_break) if tie_break is not None else state.tie_break_ranks
        big = len(instance.item_ids) + len(ranks) + 1
        fallback = min(
            covering,
            key=lambda i: (instance.item_cost(i), ranks.get(i, big), i),
        )
        buy(fallback)

    inc = sum((instance.item_cost(i) for i in bought), Fraction(0))
    return state, tuple(sorted(bought)), inc


class _SetCoverOnlineState(OnlineState):
    def __init__(self, instance: SetCoverInstance, seed: int, ranks: dict[int, int]):
        self._state = FractionalState(instance, seed, tie_break_ranks=ranks)
        self._instance = instance

    @property
    def purchased(self) -> set[int]:
        return self._state.purchased

    def step(self, request: int) -> tuple[tuple[int, ...], Fraction]:
        _, items, inc = online_step(self._state, self._instance, request)
        return items, inc


class SetCoverOnlineAdapter(OnlineAdapter):
    """Adapter wrapping the fractional/rounding baseline for the engine."""

    def __init__(self, instance: SetCoverInstance, seed: int = 0, tie_break=None):
        self._instance = instance
        self._seed = seed
        self._ranks = dict(_layer_ranks(tie_break))

    def fresh(self, tag: str) -> OnlineState:
        return _SetCoverOnlineState(self._instance, derive_seed(self._seed, tag), self._ranks)
