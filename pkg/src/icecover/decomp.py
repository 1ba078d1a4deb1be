"""Layered decompositions of a predicted request set.

Given an oracle that covers at least i/gamma of any residual at cost within
alpha of the optimum for covering i, the construction splits the prediction
into layers (X_i, S_i): each layer grabs at least half of what remains, and
layer costs are kept under control by a nested family of candidate solutions
satisfying five repair conditions, followed by a two-case selection rule.
A verifier re-derives the four structural properties (A)-(D) against an
exact reference oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

from .core import (
    CoveringInstance,
    OracleContractViolation,
    PartialSolution,
    SizeLimitError,
)

Rational = Fraction | float


def g_value(alpha: Rational, gamma: Rational, t: int) -> Rational:
    """Approximation inflation of the iterative covering loop.

    Equals alpha when gamma is 1 (exact value), otherwise
    alpha * (1 + log t / log(gamma/(gamma-1))); the ratio of logarithms is
    base-free, natural logs are used.
    """
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if gamma == 1:
        return Fraction(alpha)
    g = float(gamma)
    return float(alpha) * (1.0 + math.log(t) / math.log(g / (g - 1.0)))


def _ceil_frac(h: int, gamma: Rational) -> int:
    """ceil(h / gamma) for exact or float gamma."""
    if isinstance(gamma, Fraction) or gamma == 1:
        gamma = Fraction(gamma)
        return -((-h * gamma.denominator) // gamma.numerator)
    return math.ceil(h / float(gamma) - 1e-12)


@dataclass(frozen=True)
class OracleSpec:
    """A partial-cover oracle with its quality parameters.

    oracle(residual, i) must cover at least i/gamma residual requests at cost
    at most alpha times the cheapest way to cover i of them, and must be
    deterministic in its inputs.
    """

    alpha: Rational
    gamma: Rational
    oracle: Callable[[frozenset[int], int], PartialSolution]
    instance: CoveringInstance
    name: str = "oracle"


@dataclass(frozen=True)
class DecompositionLayer:
    requests: frozenset[int]  # the slice of the prediction this layer owns
    solution: PartialSolution


@dataclass(frozen=True)
class Decomposition:
    layers: tuple[DecompositionLayer, ...]
    prediction: frozenset[int]

    def residual_before(self, i: int) -> frozenset[int]:
        """Prediction minus the slices of layers 1..i-1 (i is 1-based)."""
        out = self.prediction
        for layer in self.layers[: i - 1]:
            out = out - layer.requests
        return out

    def item_layer_ranks(self) -> dict[int, int]:
        """Lowest 1-based layer index holding each item; tie-break hook."""
        ranks: dict[int, int] = {}
        for idx, layer in enumerate(self.layers, start=1):
            for item in layer.solution.items:
                ranks.setdefault(item, idx)
        return ranks

    def to_text(self) -> str:
        lines = []
        for idx, layer in enumerate(self.layers, start=1):
            c = layer.solution.cost
            lines.append(
                f"layer {idx} cost {c.numerator}/{c.denominator} "
                f"requests {' '.join(map(str, sorted(layer.requests)))} "
                f"items {' '.join(map(str, sorted(layer.solution.items)))}"
            )
        return "\n".join(lines) + ("\n" if lines else "")


def decomposition_from_text(text: str, instance: CoveringInstance) -> Decomposition:
    """Parse the line-oriented layer format back into a Decomposition."""
    layers = []
    prediction: frozenset[int] = frozenset()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] != "layer" or "cost" not in tokens or "requests" not in tokens or "items" not in tokens:
            raise ValueError(f"line {lineno}: malformed layer line")
        ci = tokens.index("cost")
        ri = tokens.index("requests")
        ii = tokens.index("items")
        cost = Fraction(tokens[ci + 1])
        requests = frozenset(int(t) for t in tokens[ri + 1 : ii])
        items = frozenset(int(t) for t in tokens[ii + 1 :])
        sol = instance.solution(items)
        if sol.cost != cost:
            raise ValueError(f"line {lineno}: cost {cost} does not match items ({sol.cost})")
        layers.append(DecompositionLayer(requests, sol))
        prediction |= requests
    return Decomposition(tuple(layers), prediction)


EMPTY_DECOMPOSITION = Decomposition((), frozenset())


# ---------------------------------------------------------------------------
# Iterated covering loop
# ---------------------------------------------------------------------------


def approx_min_cover(
    spec: OracleSpec,
    residual: Iterable[int],
    i: int,
    stats: dict | None = None,
) -> PartialSolution:
    """Cover at least i residual requests by iterating the oracle.

    Each round asks the oracle to cover the still-needed count h among the
    remaining requests, removes what it covered, and shrinks h; the combined
    cost stays within g_value(alpha, gamma, |residual|) of the optimum for
    covering i.
    """
    remaining = frozenset(residual) & spec.instance.requests
    if not 1 <= i <= len(remaining):
        raise ValueError(f"i={i} outside 1..{len(remaining)}")
    h = i
    items: set[int] = set()
    iterations = 0
    while h > 0:
        iterations += 1
        sol = spec.oracle(remaining, h)
        newly = sol.covered & remaining
        if len(newly) < _ceil_frac(h, spec.gamma):
            raise OracleContractViolation(
                f"{spec.name} covered {len(newly)} < ceil({h}/gamma) of the residual"
            )
        items.update(sol.items)
        remaining = remaining - newly
        h -= len(newly)
    if stats is not None:
        stats["iterations"] = iterations
    return spec.instance.solution(items)


# ---------------------------------------------------------------------------
# Layer construction
# ---------------------------------------------------------------------------


def _cheapest_item_for(instance: CoveringInstance, e: int) -> tuple[Fraction, int]:
    """(cost, id) of the cheapest item covering e, ties to lowest id."""
    best: tuple[Fraction, int] | None = None
    for item in instance.covering_items(e):
        key = (instance.item_cost(item), item)
        if best is None or key < best:
            best = key
    if best is None:
        raise OracleContractViolation(f"request {e} covered by no item")
    return best


def _build_family(
    spec: OracleSpec, residual: frozenset[int]
) -> dict[int, tuple[frozenset[int], PartialSolution]]:
    """Nested candidate family over the residual for j = ceil(|R|/2)..|R|.

    Enforces, by repair passes: coverage at least j, monotone nondecreasing
    cost in j, cost plateaus after over-coverage, and the marginal-element
    condition (adding the cheapest item covering an outside element may never
    beat the next family member).
    """
    instance = spec.instance
    jmin = -((-len(residual)) // 2)
    jmax = len(residual)
    fam: dict[int, tuple[frozenset[int], PartialSolution]] = {}
    for j in range(jmin, jmax + 1):
        sol = approx_min_cover(spec, residual, j)
        fam[j] = (sol.covered & residual, sol)

    # condition iii): copy cheaper later solutions down
    for j in range(jmax - 1, jmin - 1, -1):
        if fam[j][1].cost > fam[j + 1][1].cost:
            fam[j] = fam[j + 1]

    cheapest = {e: _cheapest_item_for(instance, e) for e in residual}
    max_passes = len(residual) * len(residual) + len(residual) + 4
    for _ in range(max_passes):
        fixed_any = False
        for j in range(jmin, jmax):
            xj, sj = fam[j]
            cost_next = fam[j + 1][1].cost
            if len(xj) > j and cost_next != sj.cost:
                # condition iv): over-coverage propagates equal cost upward
                fam[j + 1] = (sj.covered & residual, sj)
                fixed_any = True
                break
            violating = [
                (cheapest[e][0], e)
                for e in residual - xj
                if cheapest[e][0] + sj.cost < cost_next
            ]
            if violating:
                # condition v): patch with the cheapest outside element's item
                _, e = min(violating)
                cost_e, item_e = cheapest[e]
                new_items = set(sj.items) | {item_e}
                new_sol = instance.solution(new_items)
                fam[j + 1] = (new_sol.covered & residual, new_sol)
                fixed_any = True
                break
        if not fixed_any:
            break
    else:
        raise OracleContractViolation("family repair did not reach a fixpoint")
    return fam


def build_decomposition(
    instance: CoveringInstance,
    prediction: Iterable[int],
    spec: OracleSpec,
    family_log: list[list[Fraction]] | None = None,
) -> Decomposition:
    """Split the prediction into layers with controlled costs.

    Layer 1 covers at least half the prediction via the iterated oracle; each
    later stage builds the candidate family over the residual and either
    takes the half-residual member (when its cost at least doubles the
    previous layer's) or the largest member within ten times the previous
    layer's cost.
    """
    predicted = frozenset(prediction) & instance.requests
    if not predicted:
        return EMPTY_DECOMPOSITION
    layers: list[DecompositionLayer] = []
    residual = predicted
    first = approx_min_cover(spec, residual, -((-len(residual)) // 2))
    x1 = first.covered & residual
    layers.append(DecompositionLayer(x1, first))
    residual = residual - x1
    while residual:
        fam = _build_family(spec, residual)
        jmin = -((-len(residual)) // 2)
        jmax = len(residual)
        if family_log is not None:
            family_log.append([fam[j][1].cost for j in range(jmin, jmax + 1)])
        prev_cost = layers[-1].solution.cost
        if fam[jmin][1].cost >= 2 * prev_cost:
            choice = jmin  # Case 1
        else:
            choice = jmin  # Case 2: largest index within 10x the previous cost
            for j in range(jmax, jmin - 1, -1):
                if fam[j][1].cost <= 10 * prev_cost:
                    choice = j
                    break
        xs, sol = fam[choice]
        xs = xs & residual
        layers.append(DecompositionLayer(xs, sol))
        residual = residual - xs
    total = frozenset().union(*(l.requests for l in layers))
    if total != predicted or sum(len(l.requests) for l in layers) != len(predicted):
        raise OracleContractViolation("construction failed to partition the prediction")
    return Decomposition(tuple(layers), predicted)


# ---------------------------------------------------------------------------
# Property verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LayerReport:
    a_ok: bool
    b_ok: bool | None  # None when vacuous
    c_ok: bool | None
    d_ok: bool
    c1: Fraction | None
    c2: Fraction


@dataclass(frozen=True)
class PropertyReport:
    layers: tuple[LayerReport, ...]
    g: Rational

    @property
    def all_ok(self) -> bool:
        return all(
            r.a_ok and r.b_ok is not False and r.c_ok is not False and r.d_ok
            for r in self.layers
        )

    def violations(self) -> list[str]:
        out = []
        for idx, r in enumerate(self.layers, start=1):
            if not r.a_ok:
                out.append(f"layer {idx}: (A) violated")
            if r.b_ok is False:
                out.append(f"layer {idx}: (B) violated")
            if r.c_ok is False:
                out.append(f"layer {idx}: (C) violated")
            if not r.d_ok:
                out.append(f"layer {idx}: (D) violated")
        return out


def _leq_with_g(cost: Fraction, g: Rational, witness: Fraction) -> bool:
    if isinstance(g, Fraction):
        return cost <= g * witness
    return float(cost) <= g * float(witness) * (1.0 + 1e-12) + 1e-15


def verify_properties(
    instance: CoveringInstance,
    decomposition: Decomposition,
    alpha: Rational,
    gamma: Rational,
    exact_oracle: Callable[[frozenset[int], int], PartialSolution],
    max_requests: int = 12,
) -> PropertyReport:
    """Check the four layer properties against brute-force witnesses.

    (A) each layer grabs at least half of its residual; (B) a cost drop below
    doubling forces an eight-fold jump two layers later; (C) a jump past ten
    times the previous cost is still within g of the half-residual optimum;
    (D) every layer is within g of the optimum for its own cardinality.
    The exact oracle computes the witness optima, so this is desk scale only.
    """
    if len(instance.requests) > max_requests:
        raise SizeLimitError(
            f"{len(instance.requests)} requests exceed the verification cap {max_requests}"
        )
    layers = decomposition.layers
    g = g_value(alpha, gamma, max(1, len(decomposition.prediction)))
    reports = []
    for idx, layer in enumerate(layers, start=1):
        r_prev = decomposition.residual_before(idx)
        cost = layer.solution.cost
        a_ok = 2 * len(layer.requests) >= len(r_prev)

        b_ok: bool | None = None
        if 2 <= idx <= len(layers) - 1:
            prev_cost = layers[idx - 2].solution.cost
            if cost < 2 * prev_cost:
                b_ok = 8 * prev_cost < layers[idx].solution.cost
        c_ok: bool | None = None
        c1 = None
        if idx >= 2:
            prev_cost = layers[idx - 2].solution.cost
            if cost > 10 * prev_cost:
                c1 = exact_oracle(r_prev, -((-len(r_prev)) // 2)).cost
                c_ok = _leq_with_g(cost, g, c1)
        if idx == 1:
            c2 = exact_oracle(r_prev, -((-len(decomposition.prediction)) // 2)).cost
        else:
            c2 = exact_oracle(r_prev, len(layer.requests)).cost
        d_ok = _leq_with_g(cost, g, c2)
        reports.append(LayerReport(a_ok, b_ok, c_ok, d_ok, c1, c2))
    return PropertyReport(tuple(reports), g)
