"""Weighted path augmentation and the parking permit special case.

Path elements 1..n fail online; each link covers a consecutive interval at a
rational cost.  Exact partial covers come from a shortest-path / interval
block dynamic program, online algorithms run over a laminarized instance
(links pairwise disjoint or nested, one link per cost class per element):
a deterministic interval-charging rule and a randomized threshold rounding
of a monotone fractional solution.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .core import (
    CoveringInstance,
    EMPTY_SOLUTION,
    GenerationError,
    InfeasibleInstanceError,
    InstanceParseError,
    OnlineAdapter,
    OnlineState,
    PartialSolution,
    derive_seed,
)


@dataclass(frozen=True)
class Link:
    id: int
    a: int
    b: int
    cost: Fraction


class WpapInstance(CoveringInstance):
    """Immutable path instance: elements 1..n, interval links."""

    def __init__(self, n: int, links):
        if n <= 0:
            raise InstanceParseError("n must be positive")
        self.n = n
        self.links = tuple(links)
        seen = set()
        covered = set()
        for l in self.links:
            if l.id in seen:
                raise InstanceParseError(f"duplicate link id {l.id}")
            seen.add(l.id)
            if not 1 <= l.a <= l.b <= n:
                raise InstanceParseError(f"link {l.id}: bad interval [{l.a},{l.b}]")
            if l.cost < 0:
                raise InstanceParseError(f"link {l.id}: negative cost")
            covered.update(range(l.a, l.b + 1))
        missing = set(range(1, n + 1)) - covered
        if missing:
            raise InstanceParseError(f"uncoverable element {min(missing)}")
        self._requests = frozenset(range(1, n + 1))
        self._by_id = {l.id: l for l in self.links}
        self._ids = tuple(l.id for l in self.links)
        self._covers = {l.id: frozenset(range(l.a, l.b + 1)) for l in self.links}
        self._covering: dict[int, tuple[int, ...]] = {
            e: tuple(l.id for l in self.links if l.a <= e <= l.b) for e in self._requests
        }
        self._interval_cache: dict[tuple[int, int], PartialSolution | None] = {}

    @property
    def requests(self) -> frozenset[int]:
        return self._requests

    @property
    def item_ids(self) -> tuple[int, ...]:
        return self._ids

    def item_cost(self, item_id: int) -> Fraction:
        return self._by_id[item_id].cost

    def item_covers(self, item_id: int) -> frozenset[int]:
        return self._covers[item_id]

    def covering_items(self, request: int) -> tuple[int, ...]:
        return self._covering.get(request, ())

    def link(self, link_id: int) -> Link:
        return self._by_id[link_id]

    def __eq__(self, other):
        return isinstance(other, WpapInstance) and self.n == other.n and self.links == other.links

    def __hash__(self):
        return hash((self.n, self.links))


def load_wpap(source) -> WpapInstance:
    """Parse the json link format."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(f"invalid json: {exc}", line=exc.lineno)
    links = [
        Link(int(e["id"]), int(e["a"]), int(e["b"]), Fraction(str(e["cost"])))
        for e in doc["links"]
    ]
    return WpapInstance(int(doc["n"]), links)


def dump_wpap(instance: WpapInstance) -> str:
    doc = {
        "n": instance.n,
        "links": [
            {"id": l.id, "a": l.a, "b": l.b, "cost": f"{l.cost.numerator}/{l.cost.denominator}"}
            for l in instance.links
        ],
    }
    return json.dumps(doc)


# ---------------------------------------------------------------------------
# Exact covers by dynamic programming
# ---------------------------------------------------------------------------


def interval_cover_cost(instance: WpapInstance, j: int, k: int) -> PartialSolution | None:
    """Cheapest full cover of elements j..k using links inside [j, k].

    Links may not start before j or extend past k.  Returns None when no such
    cover exists; k < j yields the empty solution.
    """
    if k < j:
        return EMPTY_SOLUTION
    key = (j, k)
    if key in instance._interval_cache:
        return instance._interval_cache[key]
    admissible = [l for l in instance.links if l.a >= j and l.b <= k]
    # shortest path on positions j..k+1: being at p means j..p-1 is covered
    INF = None
    dist: list[Fraction | None] = [INF] * (k + 2 - j)
    parent: list[tuple[int, Link] | None] = [None] * (k + 2 - j)
    dist[0] = Fraction(0)
    for p in range(j, k + 1):
        dp = dist[p - j]
        if dp is None:
            continue
        for l in admissible:
            if l.a <= p <= l.b:
                nd = dp + l.cost
                tgt = l.b + 1 - j
                if dist[tgt] is None or nd < dist[tgt]:
                    dist[tgt] = nd
                    parent[tgt] = (p - j, l)
    if dist[k + 1 - j] is None:
        instance._interval_cache[key] = None
        return None
    items = []
    at = k + 1 - j
    while at > 0:
        prev, l = parent[at]
        items.append(l.id)
        at = prev
    sol = instance.solution(items)
    instance._interval_cache[key] = sol
    return sol


def _partial_cover_dp(
    instance: WpapInstance, residual: frozenset[int], need: int
) -> PartialSolution | None:
    """Min-cost links covering at least ``need`` residual elements.

    Any union of links is a disjoint set of fully covered intervals, so the
    states walk positions left to right choosing maximal blocks [pos, v]
    priced by interval_cover_cost, with a mandatory gap after each block.
    """
    if need <= 0:
        return EMPTY_SOLUTION
    n = instance.n
    res_prefix = [0] * (n + 2)
    for e in range(1, n + 1):
        res_prefix[e] = res_prefix[e - 1] + (1 if e in residual else 0)

    def res_count(u: int, v: int) -> int:
        return res_prefix[v] - res_prefix[u - 1]

    memo: dict[tuple[int, int], tuple[Fraction, tuple] | None] = {}

    def best(pos: int, t: int) -> tuple[Fraction, tuple] | None:
        """(cost, choice) covering >= t residual elements within pos..n."""
        if t <= 0:
            return (Fraction(0), ("stop",))
        if pos > n:
            return None
        key = (pos, t)
        if key in memo:
            return memo[key]
        out = None
        skip = best(pos + 1, t)
        if skip is not None:
            out = (skip[0], ("skip",))
        for v in range(pos, n + 1):
            block = interval_cover_cost(instance, pos, v)
            if block is None:
                continue
            rest = best(v + 2, t - res_count(pos, v))
            if rest is None:
                continue
            cand = block.cost + rest[0]
            if out is None or cand < out[0]:
                out = (cand, ("block", v, block))
        memo[key] = out
        return out

    top = best(1, need)
    if top is None:
        return None
    items: set[int] = set()
    pos, t = 1, need
    while t > 0 and pos <= n:
        entry = memo.get((pos, t)) or best(pos, t)
        kind = entry[1][0]
        if kind == "skip":
            pos += 1
        elif kind == "block":
            _, v, block = entry[1]
            items.update(block.items)
            t -= res_count(pos, v)
            pos = v + 2
        else:
            break
    return instance.solution(items)


def dp_partial_cover(instance: WpapInstance, i: int) -> PartialSolution:
    """Exact minimum cost to cover at least i path elements (the exact oracle)."""
    if not 1 <= i <= instance.n:
        raise ValueError(f"i={i} outside 1..{instance.n}")
    sol = _partial_cover_dp(instance, instance.requests, i)
    if sol is None:
        raise InfeasibleInstanceError("instance cannot cover the requested count")
    return sol


def exact_partial_cover_subset(
    instance: WpapInstance, residual, i: int
) -> PartialSolution:
    """Exact minimum cost covering at least i elements of the residual."""
    residual_set = frozenset(residual) & instance.requests
    if not 0 <= i <= len(residual_set):
        raise ValueError(f"i={i} outside 0..{len(residual_set)}")
    sol = _partial_cover_dp(instance, residual_set, i)
    if sol is None:
        raise InfeasibleInstanceError("residual cannot be covered to the requested count")
    return sol


def exact_cover_subset(instance: WpapInstance, required) -> PartialSolution:
    """Exact minimum cost covering every required element (others optional)."""
    req = frozenset(required)
    out_of_range = req - instance.requests
    if out_of_range:
        raise ValueError(f"required elements outside the path: {sorted(out_of_range)}")
    if not req:
        return EMPTY_SOLUTION
    sol = _partial_cover_dp(instance, req, len(req))
    if sol is None or len(sol.covered & req) < len(req):
        raise InfeasibleInstanceError("some required element cannot be covered")
    return sol


def enumerate_cover(instance: WpapInstance, residual, need: int) -> PartialSolution | None:
    """Brute-force reference: scan all link subsets (tests only)."""
    residual_set = frozenset(residual) & instance.requests
    links = instance.links
    best: tuple[Fraction, tuple[int, ...]] | None = None
    for bits in range(1 << len(links)):
        cover: set[int] = set()
        cost = Fraction(0)
        items = []
        for idx, l in enumerate(links):
            if bits >> idx & 1:
                cover.update(range(l.a, l.b + 1))
                cost += l.cost
                items.append(l.id)
        if len(cover & residual_set) >= need:
            key = (cost, tuple(sorted(items)))
            if best is None or key < best:
                best = key
    if best is None:
        return None
    return instance.solution(best[1])


# ---------------------------------------------------------------------------
# Laminarization
# ---------------------------------------------------------------------------


def is_laminar(links) -> bool:
    """Pairwise: intervals disjoint or nested."""
    ls = list(links)
    for i in range(len(ls)):
        for j in range(i + 1, len(ls)):
            p, q = ls[i], ls[j]
            disjoint = p.b < q.a or q.b < p.a
            nested = (p.a <= q.a and q.b <= p.b) or (q.a <= p.a and p.b <= q.b)
            if not (disjoint or nested):
                return False
    return True


class LaminarInstance(WpapInstance):
    """A laminar path instance with cost classes and a provenance map back to
    the links it was assembled from."""

    def __init__(self, n, links, class_of: dict[int, int], provenance: dict[int, frozenset[int]]):
        super().__init__(n, links)
        self.class_of = dict(class_of)
        self.provenance = dict(provenance)
        if not is_laminar(self.links):
            raise InstanceParseError("links are not laminar")
        per_class: dict[tuple[int, int], int] = {}
        for l in self.links:
            for e in range(l.a, l.b + 1):
                key = (self.class_of[l.id], e)
                if key in per_class:
                    raise InstanceParseError(
                        f"element {e} covered twice in class {self.class_of[l.id]}"
                    )
                per_class[key] = l.id
        # links strictly inside another link (boundary-exclusive), per link
        self.strict_parents: dict[int, tuple[int, ...]] = {
            l.id: tuple(
                u.id for u in self.links if u.a < l.a and l.b < u.b
            )
            for l in self.links
        }

    def class_links(self, element: int) -> list[Link]:
        """Links covering the element, ascending by class."""
        out = [self.link(i) for i in self.covering_items(element)]
        out.sort(key=lambda l: self.class_of[l.id])
        return out


def as_laminar(instance: WpapInstance) -> LaminarInstance:
    """Wrap an already-laminar instance, classing links by distinct cost."""
    costs = sorted({l.cost for l in instance.links})
    class_of = {l.id: costs.index(l.cost) for l in instance.links}
    provenance = {l.id: frozenset([l.id]) for l in instance.links}
    return LaminarInstance(instance.n, instance.links, class_of, provenance)


def _round_up_pow4(cost: Fraction) -> tuple[Fraction, int]:
    """Smallest power of four >= cost, with its exponent."""
    if cost <= 0:
        raise ValueError("cost must be positive to round to a power of four")
    z = 0
    val = Fraction(1)
    while val < cost:
        val *= 4
        z += 1
    while val / 4 >= cost:
        val /= 4
        z -= 1
    return val, z


def laminarize(
    instance: WpapInstance,
    opt_guess: Fraction,
    classes_cap: int | None = None,
) -> LaminarInstance:
    """Produce a laminar instance whose optimum is within a constant of the
    original's.

    Links costlier than the guess are pruned (cheaper than guess/4^cap too,
    when a cap is given), except that each element keeps its cheapest link as
    a safety valve; costs round up to powers of four; per class, nested links
    are dropped and overlaps shortened into disjointness; classes are then
    merged bottom-up, extending each link over lower-class links crossing its
    boundary so only nesting or disjointness remains.
    """
    if opt_guess <= 0:
        raise ValueError("opt_guess must be positive")
    lo = opt_guess / (4 ** classes_cap) if classes_cap is not None else None
    kept = [
        l
        for l in instance.links
        if l.cost <= opt_guess and (lo is None or l.cost >= lo)
    ]
    covered = set()
    for l in kept:
        covered.update(range(l.a, l.b + 1))
    for e in sorted(instance.requests - covered):
        best = min(
            (instance.link(i) for i in instance.covering_items(e)),
            key=lambda l: (l.cost, l.id),
        )
        if best not in kept:
            kept.append(best)
            covered.update(range(best.a, best.b + 1))

    by_class: dict[int, list[tuple[int, int, frozenset[int]]]] = {}
    class_cost: dict[int, Fraction] = {}
    for l in kept:
        cost4, z = _round_up_pow4(l.cost)
        class_cost[z] = cost4
        by_class.setdefault(z, []).append((l.a, l.b, frozenset([l.id])))

    # within each class: drop nested links, shorten overlaps into disjointness
    for z, entries in by_class.items():
        entries.sort(key=lambda t: (t[0], -t[1]))
        maximal: list[tuple[int, int, frozenset[int]]] = []
        max_b = 0
        for a, b, prov in entries:
            if b <= max_b:
                continue
            maximal.append((a, b, prov))
            max_b = b
        disjoint: list[tuple[int, int, frozenset[int]]] = []
        prev_end = 0
        for a, b, prov in maximal:
            a = max(a, prev_end + 1)
            if a > b:
                continue
            disjoint.append((a, b, prov))
            prev_end = b
        by_class[z] = disjoint

    # bottom-up cross-class merge: extend over boundary-crossing lower links
    placed: list[tuple[int, int, int, frozenset[int]]] = []  # (class, a, b, prov)
    next_id = 1
    out_links: list[Link] = []
    class_of: dict[int, int] = {}
    provenance: dict[int, frozenset[int]] = {}
    class_index = {z: i for i, z in enumerate(sorted(by_class))}
    for z in sorted(by_class):
        prev_end = 0
        for a, b, prov in by_class[z]:
            a = max(a, prev_end + 1)
            if a > b:
                continue
            changed = True
            while changed:
                changed = False
                for _, la, lb, lprov in placed:
                    crosses = (la < a <= lb) or (la <= b < lb)
                    if crosses:
                        na, nb = min(a, la), max(b, lb)
                        if (na, nb) != (a, b):
                            a, b, prov = na, nb, prov | lprov
                            changed = True
            if a <= prev_end:
                # swallowed into the previous same-class link; merge spans
                last = out_links[-1]
                out_links[-1] = Link(last.id, last.a, max(last.b, b), last.cost)
                provenance[last.id] = provenance[last.id] | prov
                prev_end = out_links[-1].b
                continue
            link = Link(next_id, a, b, class_cost[z])
            out_links.append(link)
            class_of[link.id] = class_index[z]
            provenance[link.id] = prov
            placed.append((class_index[z], a, b, prov))
            next_id += 1
            prev_end = b

    # provenance closure: absorbed links contribute their own originals
    result = LaminarInstance(instance.n, out_links, class_of, provenance)
    uncovered = instance.requests - set().union(*(result.item_covers(i) for i in result.item_ids))
    if uncovered:
        raise GenerationError(f"laminarization lost coverage of {sorted(uncovered)}")
    return result


# ---------------------------------------------------------------------------
# Online algorithms over a laminar instance
# ---------------------------------------------------------------------------


@dataclass
class WpapDetState:
    """Interval-charging state: per-link spending on purchases strictly inside."""

    instance: LaminarInstance
    purchased: set[int] = field(default_factory=set)
    spend: dict[int, Fraction] = field(default_factory=dict)
    covered: set[int] = field(default_factory=set)


def det_online_step(
    state: WpapDetState, instance: LaminarInstance, element: int
) -> tuple[WpapDetState, tuple[int, ...], Fraction]:
    """Deterministic step: buy the element's cheapest-class link when it is
    uncovered; whenever the purchases strictly inside a link reach its cost,
    buy that link too, cascading upward."""
    if element in state.covered:
        return state, (), Fraction(0)
    chain = instance.class_links(element)
    if not chain:
        raise InfeasibleInstanceError(f"element {element} covered by no link")
    bought: list[int] = []
    inc = Fraction(0)
    stack = [chain[0].id]
    while stack:
        lid = stack.pop()
        if lid in state.purchased:
            continue
        state.purchased.add(lid)
        state.covered.update(instance.item_covers(lid))
        cost = instance.item_cost(lid)
        bought.append(lid)
        inc += cost
        for up in instance.strict_parents[lid]:
            state.spend[up] = state.spend.get(up, Fraction(0)) + cost
            if up not in state.purchased and state.spend[up] >= instance.item_cost(up):
                stack.append(up)
    return state, tuple(sorted(bought)), inc


@dataclass
class WpapRandState:
    """Monotone fractional values over links plus one threshold draw."""

    instance: LaminarInstance
    tau: float
    x: dict[int, float] = field(default_factory=dict)
    purchased: set[int] = field(default_factory=set)
    covered: set[int] = field(default_factory=set)
    frac_cost: float = 0.0

    def __post_init__(self):
        self.x = {i: 0.0 for i in self.instance.item_ids}


def rand_online_step(
    state: WpapRandState, instance: LaminarInstance, element: int
) -> tuple[WpapRandState, tuple[int, ...], Fraction]:
    """Randomized step: raise the fractional values of the element's links
    until they sum to one, then buy the link of the class where the suffix
    sum first reaches the threshold drawn at state creation."""
    chain = instance.class_links(element)
    if not chain:
        raise InfeasibleInstanceError(f"element {element} covered by no link")
    d = len(chain)
    total = sum(state.x[l.id] for l in chain)
    while total < 1.0 - 1e-12:
        total = 0.0
        for l in chain:
            c = float(l.cost)
            if c == 0.0:
                state.x[l.id] = 1.0
            else:
                new = state.x[l.id] * (1.0 + 1.0 / c) + 1.0 / (d * c)
                state.frac_cost += c * (new - state.x[l.id])
                state.x[l.id] = new
            total += state.x[l.id]

    bought: list[int] = []
    inc = Fraction(0)

    def buy(lid: int) -> None:
        nonlocal inc
        if lid not in state.purchased:
            state.purchased.add(lid)
            state.covered.update(instance.item_covers(lid))
            bought.append(lid)
            inc += instance.item_cost(lid)

    # classes descending; pick the class where the suffix sum reaches tau
    suffix = 0.0
    pick = None
    for l in sorted(chain, key=lambda l: -instance.class_of[l.id]):
        suffix += state.x[l.id]
        if suffix >= state.tau:
            pick = l.id
            break
    if pick is None:
        pick = min(chain, key=lambda l: (l.cost, l.id)).id  # feasibility fallback
    buy(pick)
    return state, tuple(sorted(bought)), inc


class _WpapDetOnlineState(OnlineState):
    def __init__(self, instance: LaminarInstance):
        self._state = WpapDetState(instance)
        self._instance = instance

    @property
    def purchased(self) -> set[int]:
        return self._state.purchased

    def step(self, request: int) -> tuple[tuple[int, ...], Fraction]:
        _, items, inc = det_online_step(self._state, self._instance, request)
        return items, inc


class WpapDetAdapter(OnlineAdapter):
    def __init__(self, instance: LaminarInstance):
        self._instance = instance

    def fresh(self, tag: str) -> OnlineState:
        return _WpapDetOnlineState(self._instance)


class _WpapRandOnlineState(OnlineState):
    def __init__(self, instance: LaminarInstance, tau: float):
        self._state = WpapRandState(instance, tau)
        self._instance = instance

    @property
    def purchased(self) -> set[int]:
        return self._state.purchased

    def step(self, request: int) -> tuple[tuple[int, ...], Fraction]:
        _, items, inc = rand_online_step(self._state, self._instance, request)
        return items, inc


class WpapRandAdapter(OnlineAdapter):
    def __init__(self, instance: LaminarInstance, seed: int = 0):
        self._instance = instance
        self._seed = seed

    def fresh(self, tag: str) -> OnlineState:
        rng = random.Random(derive_seed(self._seed, tag))
        return _WpapRandOnlineState(self._instance, rng.random())


def cheapest_lowest_index_run(instance: WpapInstance, arrivals) -> tuple[Fraction, set[int]]:
    """Naive strategy: on each uncovered arrival buy the cheapest covering
    link, ties to the lowest id.  The adversarial generator defeats it."""
    purchased: set[int] = set()
    covered: set[int] = set()
    total = Fraction(0)
    for e in arrivals:
        if e in covered:
            continue
        options = instance.covering_items(e)
        if not options:
            raise InfeasibleInstanceError(f"element {e} covered by no link")
        pick = min(options, key=lambda i: (instance.item_cost(i), i))
        purchased.add(pick)
        covered.update(instance.item_covers(pick))
        total += instance.item_cost(pick)
    return total, purchased


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def gen_parking_permit(K: int, durations, costs, horizon: int) -> WpapInstance:
    """Aligned permit windows: each duration class tiles 1..horizon."""
    durations = list(durations)
    costs = [Fraction(c) for c in costs]
    if len(durations) != K or len(costs) != K:
        raise ValueError("durations and costs must both have length K")
    links = []
    next_id = 1
    for d, c in zip(durations, costs):
        if d > horizon:
            raise ValueError(f"duration {d} exceeds horizon {horizon}")
        start = 1
        while start <= horizon:
            links.append(Link(next_id, start, min(start + d - 1, horizon), c))
            next_id += 1
            start += d
    return WpapInstance(horizon, links)


def gen_adversarial(k: int) -> tuple[WpapInstance, tuple[int, ...]]:
    """k unit-cost links, link i covering [1, i]; arrivals 1..k in order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    links = [Link(i, 1, i, Fraction(1)) for i in range(1, k + 1)]
    return WpapInstance(k, links), tuple(range(1, k + 1))


def gen_random_wpap(seed: int, n: int, n_links: int) -> WpapInstance:
    """Random instance with full coverage; costs are small random rationals."""
    rng = random.Random(seed)
    links = []
    next_id = 1
    for _ in range(n_links):
        a = rng.randint(1, n)
        b = rng.randint(a, min(n, a + rng.randint(0, max(1, n // 2))))
        cost = Fraction(rng.randint(1, 16), rng.choice([1, 2, 4]))
        links.append(Link(next_id, a, b, cost))
        next_id += 1
    covered = set()
    for l in links:
        covered.update(range(l.a, l.b + 1))
    for e in sorted(set(range(1, n + 1)) - covered):
        links.append(Link(next_id, e, e, Fraction(rng.randint(1, 8))))
        next_id += 1
    return WpapInstance(n, links)


def gen_random_laminar(seed: int, n: int, n_classes: int = 3) -> LaminarInstance:
    """Random laminar instance: class c tiles the path with aligned blocks of
    length 2^c at cost 4^c, with some blocks dropped at higher classes."""
    rng = random.Random(seed)
    links = []
    next_id = 1
    class_of = {}
    for c in range(n_classes):
        width = 2**c
        cost = Fraction(4**c)
        start = 1
        while start <= n:
            if c == 0 or rng.random() < 0.8:
                links.append(Link(next_id, start, min(start + width - 1, n), cost))
                class_of[next_id] = c
                next_id += 1
            start += width
    provenance = {l.id: frozenset([l.id]) for l in links}
    return LaminarInstance(n, links, class_of, provenance)
