"""Shared fixtures: reference instances, random builders, trace checkers."""

import random
from fractions import Fraction

from icecover import bench, decomp, setcover
from icecover.core import CheapestItemAdapter, IceOptions, ice_run
from icecover.decomp import Decomposition, DecompositionLayer


def SCB() -> setcover.SetCoverInstance:
    """Elements {1..4}; A={1,2,3} cost 1, B={3,4} cost 1, C={4} cost 1/2."""
    return setcover.SetCoverInstance(
        4,
        [
            setcover.CoverSet(1, frozenset({1, 2, 3}), Fraction(1)),
            setcover.CoverSet(2, frozenset({3, 4}), Fraction(1)),
            setcover.CoverSet(3, frozenset({4}), Fraction(1, 2)),
        ],
    )


def scb_decomposition(inst: setcover.SetCoverInstance) -> Decomposition:
    """The reference two-layer split: ({1,2,3}, {A}) then ({4}, {C})."""
    return Decomposition(
        (
            DecompositionLayer(frozenset({1, 2, 3}), inst.solution([1])),
            DecompositionLayer(frozenset({4}), inst.solution([3])),
        ),
        frozenset({1, 2, 3, 4}),
    )


def tiered_instance(seed: int) -> setcover.SetCoverInstance:
    """Escalating-cost tiers so decompositions stack four or more layers.

    Tier 0 is a block of eight elements covered by one cheap set; later tiers
    halve in size while their singleton costs grow by a random factor >= 4.
    """
    rng = random.Random(seed)
    sets = [setcover.CoverSet(1, frozenset(range(1, 9)), Fraction(1))]
    next_id = 2
    element = 9
    cost = Fraction(1)
    for tier_size in (4, 2, 1, 1):
        cost *= rng.choice([4, 5, 8])
        for _ in range(tier_size):
            sets.append(setcover.CoverSet(next_id, frozenset({element}), cost))
            next_id += 1
            element += 1
    return setcover.SetCoverInstance(element - 1, sets)


def random_weighted_instance(seed: int, n_elements: int, n_sets: int) -> setcover.SetCoverInstance:
    """Random instance with rational costs spread over two orders of magnitude."""
    rng = random.Random(seed)
    universe = list(range(1, n_elements + 1))
    sets = []
    for sid in range(1, n_sets + 1):
        size = rng.randint(2, max(2, n_elements // 2))
        members = frozenset(rng.sample(universe, size))
        cost = Fraction(rng.randint(1, 64), rng.choice([1, 2, 4]))
        sets.append(setcover.CoverSet(sid, members, cost))
    covered = set().union(*(s.members for s in sets))
    next_id = n_sets + 1
    for e in sorted(set(universe) - covered):
        sets.append(setcover.CoverSet(next_id, frozenset({e}), Fraction(rng.randint(1, 8))))
        next_id += 1
    return setcover.SetCoverInstance(n_elements, sets)


def random_engine_run(seed: int):
    """One randomized (instance, prediction, alpha, adapter) engine run."""
    rng = random.Random(seed)
    kind = rng.random()
    if kind < 0.4:
        inst = setcover.gen_random(rng.randrange(2**31), 12, 8, 4)
    elif kind < 0.8:
        inst = random_weighted_instance(rng.randrange(2**31), 12, 8)
    else:
        inst = tiered_instance(rng.randrange(2**31))
    predicted, pool = bench.make_prediction(inst, rng.randrange(2**31))
    spec = bench.exact_setcover_spec(inst)
    d = decomp.build_decomposition(inst, predicted, spec)
    alpha = rng.choice([Fraction(0), Fraction(1, 4), Fraction(1, 2)])
    arrivals = bench.perturb(predicted, pool, alpha, rng.randrange(2**31))
    if rng.random() < 0.5:
        adapter = CheapestItemAdapter(inst, tie_break=d)
    else:
        adapter = setcover.SetCoverOnlineAdapter(inst, seed=rng.randrange(2**31), tie_break=d)
    options = IceOptions(skip_covered=rng.random() < 0.5)
    trace = ice_run(inst, predicted, d, adapter, arrivals, options)
    return inst, d, adapter, arrivals, predicted, options, trace


def check_prefix_feasibility(inst, d, trace):
    """After every event, the purchase union covers all requests so far."""
    buys_at = {}
    for layer_idx, pos in trace.layers_bought:
        buys_at.setdefault(pos, []).append(layer_idx)
    purchased = set()
    arrived = set()
    for pos, event in enumerate(trace.events):
        arrived.add(event.request)
        purchased.update(event.items)
        for layer_idx in buys_at.get(pos, []):
            purchased.update(d.layers[layer_idx - 1].solution.items)
        covered = set()
        for item in purchased:
            covered |= inst.item_covers(item)
        assert arrived <= covered, f"request uncovered after event {pos}"
    assert purchased == set(trace.purchased)


def check_excess_accounting(d, trace):
    """excess always equals accrued minus-side spend less the bought layers,
    and stays below the next unpurchased layer's cost between purchases."""
    spent = Fraction(0)
    bought = Fraction(0)
    layer_costs = [l.solution.cost for l in d.layers]
    buys_at = {}
    for layer_idx, pos in trace.layers_bought:
        buys_at.setdefault(pos, []).append(layer_idx)
    n_bought = 0
    for pos, event in enumerate(trace.events):
        if event.routed_to == "ALG-":
            spent += event.cost
        for layer_idx in buys_at.get(pos, []):
            assert layer_idx == n_bought + 1
            assert spent - bought >= layer_costs[layer_idx - 1]
            bought += layer_costs[layer_idx - 1]
            n_bought += 1
        assert event.excess_after == spent - bought
        assert event.excess_after >= 0
        if n_bought < len(layer_costs):
            assert event.excess_after < layer_costs[n_bought]
    assert trace.excess_final == spent - bought


def check_head_layers_dominated(d, trace):
    """With >= 3 layers bought, the early layers cost at most four times the
    last two.  Returns True when the run was eligible for the check."""
    i = len(trace.layers_bought)
    if i < 3:
        return False
    costs = [l.solution.cost for l in d.layers]
    head = sum(costs[: i - 2], Fraction(0))
    assert head <= 4 * (costs[i - 2] + costs[i - 1])
    return True
