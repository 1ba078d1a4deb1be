"""Decomposition construction and property-verifier tests."""

import math
import random
from fractions import Fraction

import pytest

from icecover import bench, decomp, setcover
from icecover.core import OracleContractViolation
from icecover.decomp import (
    Decomposition,
    DecompositionLayer,
    approx_min_cover,
    build_decomposition,
    decomposition_from_text,
    g_value,
    verify_properties,
)

from helpers import SCB, random_weighted_instance, tiered_instance


class TestGValue:
    def test_gamma_one_is_alpha(self):
        assert g_value(1, 1, 100) == 1

    def test_gamma_one_ignores_t(self):
        assert g_value(3, 1, 7) == 3

    def test_bmc_gamma_reduces_to_one_plus_ln(self):
        # gamma/(gamma-1) = e here, so the closed form is 1 + ln(t)
        t = math.ceil(math.e**3)  # 21
        got = g_value(1, math.e / (math.e - 1), t)
        assert got == pytest.approx(1 + math.log(21), rel=1e-12)
        assert got == pytest.approx(4.044522437723423, rel=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            g_value(1, Fraction(1, 2), 5)
        with pytest.raises(ValueError):
            g_value(Fraction(1, 2), 1, 5)
        with pytest.raises(ValueError):
            g_value(1, 1, 0)

    def test_exact_fraction_when_gamma_one(self):
        out = g_value(Fraction(3, 2), Fraction(1), 10)
        assert isinstance(out, Fraction) and out == Fraction(3, 2)


class TestApproxMinCover:
    def test_scb_exact_single_iteration(self):
        inst = SCB()
        spec = bench.exact_setcover_spec(inst)
        stats = {}
        sol = approx_min_cover(spec, {1, 2, 3, 4}, 3, stats=stats)
        assert sol.items == frozenset({1})
        assert sol.cost == 1
        assert stats["iterations"] == 1

    def test_full_residual_gamma_one_is_oracle_answer(self):
        inst = SCB()
        spec = bench.exact_setcover_spec(inst)
        stats = {}
        sol = approx_min_cover(spec, {1, 2, 3, 4}, 4, stats=stats)
        assert stats["iterations"] == 1
        assert sol.items == spec.oracle(frozenset({1, 2, 3, 4}), 4).items

    def test_bmc_oracle_iteration_and_cost_bound(self):
        inst = setcover.gen_random(31, 10, 6, 4)
        spec = bench.bmc_setcover_spec(inst)
        stats = {}
        sol = approx_min_cover(spec, inst.requests, 10, stats=stats)
        assert len(sol.covered) >= 10
        # the still-needed count shrinks by at least (1 - 1/e) per round
        assert stats["iterations"] <= math.ceil(math.log(10)) + 1
        opt10 = setcover.enumerate_partial_cover(inst, inst.requests, 10).cost
        assert float(sol.cost) <= (1 + math.log(10)) * float(opt10) + 1e-9

    def test_bad_oracle_detected(self):
        inst = SCB()

        def lazy_oracle(residual, i):
            return inst.solution([])  # covers nothing

        spec = decomp.OracleSpec(Fraction(1), Fraction(1), lazy_oracle, inst)
        with pytest.raises(OracleContractViolation):
            approx_min_cover(spec, {1, 2, 3, 4}, 2)

    def test_out_of_range_i(self):
        inst = SCB()
        spec = bench.exact_setcover_spec(inst)
        with pytest.raises(ValueError):
            approx_min_cover(spec, {1, 2}, 3)


class TestBuildDecomposition:
    def test_scb_reference_layers(self):
        inst = SCB()
        d = build_decomposition(inst, {1, 2, 3, 4}, bench.exact_setcover_spec(inst))
        assert len(d.layers) == 2
        # layer 1 targets ceil(4/2)=2 but the optimum over-covers to {1,2,3}
        assert d.layers[0].requests == frozenset({1, 2, 3})
        assert d.layers[0].solution.items == frozenset({1})
        assert d.layers[0].solution.cost == 1
        # layer 2 lands in the cheap case: cost 1/2 < 2 * 1
        assert d.layers[1].requests == frozenset({4})
        assert d.layers[1].solution.items == frozenset({3})
        assert d.layers[1].solution.cost == Fraction(1, 2)

    def test_single_request_prediction(self):
        inst = SCB()
        d = build_decomposition(inst, {4}, bench.exact_setcover_spec(inst))
        assert len(d.layers) == 1
        assert d.layers[0].solution.items == frozenset({3})  # cheapest covering item

    def test_empty_prediction(self):
        inst = SCB()
        d = build_decomposition(inst, set(), bench.exact_setcover_spec(inst))
        assert d.layers == ()

    def test_partition_on_random_instances(self):
        for seed in range(25):
            inst = setcover.gen_random(seed, 12, 8, 4)
            predicted, _ = bench.make_prediction(inst, seed + 1000)
            d = build_decomposition(inst, predicted, bench.exact_setcover_spec(inst))
            slices = [l.requests for l in d.layers]
            assert frozenset().union(*slices) == predicted if slices else not predicted
            assert sum(len(s) for s in slices) == len(predicted)

    def test_family_costs_monotone(self):
        log = []
        inst = random_weighted_instance(77, 12, 8)
        predicted, _ = bench.make_prediction(inst, 78)
        build_decomposition(inst, predicted, bench.exact_setcover_spec(inst), family_log=log)
        for stage in log:
            assert all(a <= b for a, b in zip(stage, stage[1:]))

    def test_geometric_pair_consequence(self):
        """c(S_j) + c(S_{j+1}) <= 3/4 (c(S_{j+2}) + c(S_{j+3})) wherever four
        consecutive layers exist."""
        found = 0
        instances = [tiered_instance(seed) for seed in range(20)]
        instances += [random_weighted_instance(seed, 14, 9) for seed in range(20)]
        for inst in instances:
            d = build_decomposition(inst, inst.requests, bench.exact_setcover_spec(inst))
            costs = [l.solution.cost for l in d.layers]
            for j in range(len(costs) - 3):
                assert costs[j] + costs[j + 1] <= Fraction(3, 4) * (costs[j + 2] + costs[j + 3])
                found += 1
        assert found >= 10

    def test_serialization_round_trip(self):
        inst = random_weighted_instance(5, 12, 8)
        predicted, _ = bench.make_prediction(inst, 6)
        d = build_decomposition(inst, predicted, bench.exact_setcover_spec(inst))
        assert decomposition_from_text(d.to_text(), inst) == d
        assert "cost" in d.to_text() and d.to_text().startswith("layer 1 ")


class TestVerifyProperties:
    def test_scb_all_pass_with_vacuous_tail(self):
        inst = SCB()
        spec = bench.exact_setcover_spec(inst)
        d = build_decomposition(inst, {1, 2, 3, 4}, spec)
        report = verify_properties(inst, d, 1, 1, spec.oracle)
        assert report.all_ok
        assert report.layers[-1].b_ok is None  # vacuous at the last layer
        assert report.violations() == []

    def test_merged_layers_violate_halving(self):
        inst = SCB()
        spec = bench.exact_setcover_spec(inst)
        # layer 1 grabs a single request out of four: violates (A)
        corrupted = Decomposition(
            (
                DecompositionLayer(frozenset({4}), inst.solution([3])),
                DecompositionLayer(frozenset({1, 2, 3}), inst.solution([1])),
            ),
            frozenset({1, 2, 3, 4}),
        )
        report = verify_properties(inst, corrupted, 1, 1, spec.oracle)
        assert not report.layers[0].a_ok
        assert any("(A)" in v for v in report.violations())

    def test_single_layer_vacuums_b_and_c(self):
        inst = SCB()
        spec = bench.exact_setcover_spec(inst)
        d = build_decomposition(inst, {4}, spec)
        report = verify_properties(inst, d, 1, 1, spec.oracle)
        assert report.layers[0].b_ok is None
        assert report.layers[0].c_ok is None
        assert report.layers[0].a_ok and report.layers[0].d_ok

    def test_random_instances_zero_violations(self):
        rng = random.Random(11)
        for _ in range(30):
            if rng.random() < 0.5:
                inst = setcover.gen_random(rng.randrange(2**31), 12, 8, 4)
            else:
                inst = random_weighted_instance(rng.randrange(2**31), 12, 8)
            predicted, _ = bench.make_prediction(inst, rng.randrange(2**31))
            spec = bench.exact_setcover_spec(inst)
            d = build_decomposition(inst, predicted, spec)
            report = verify_properties(inst, d, 1, 1, spec.oracle)
            assert report.all_ok, report.violations()

    def test_size_cap(self):
        inst = setcover.gen_random(3, 20, 8, 8)
        spec = bench.exact_setcover_spec(inst)
        d = build_decomposition(inst, bench.make_prediction(inst, 4)[0], spec)
        with pytest.raises(decomp.SizeLimitError):
            verify_properties(inst, d, 1, 1, spec.oracle, max_requests=12)
