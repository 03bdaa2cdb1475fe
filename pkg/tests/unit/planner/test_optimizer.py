"""
Purpose: Test suite for fusion detection, reordering and plan construction
"""
import random
from itertools import permutations

import pytest

from src.core.exceptions import NonPositiveSpeed
from src.core.models.plan import ExecutionPlan, OpDescriptor, OpType, Resources
from src.core.planner.optimizer import (
    UnitEstimate,
    best_order,
    detect_fusible_groups,
    estimate_fused_speed,
    order_cost,
    plan,
    reorder_group,
)
from tests.helpers import probe_report

RESOURCES = Resources(cpu_count=4, mem_bytes=1 << 30)


def text_filter(name="f"):
    return OpDescriptor(name, OpType.FILTER, commutative_filter=True)


def image_filter(name="img"):
    return OpDescriptor(name, OpType.FILTER, commutative_filter=True, shared_inputs=("images",))


def mapper(name="m"):
    return OpDescriptor(name, OpType.MAPPER)


class TestFusibleGroups:
    def test_barriers_split_groups_and_shared_inputs_fuse(self):
        ops = [text_filter(), image_filter(), mapper(), image_filter(), image_filter(),
               text_filter(), OpDescriptor("dedup", OpType.DEDUPLICATOR, supports_batch=False)]
        assert detect_fusible_groups(ops) == [
            [[0], [1]],
            [[2]],
            [[3, 4], [5]],
            [[6]],
        ]

    def test_non_commutative_filter_is_a_barrier(self):
        ops = [text_filter(), OpDescriptor("odd", OpType.FILTER), text_filter()]
        assert detect_fusible_groups(ops) == [[[0]], [[1]], [[2]]]

    def test_bridging_filter_merges_units(self):
        bridge = OpDescriptor("both", OpType.FILTER, commutative_filter=True,
                              shared_inputs=("images", "audios"))
        audio = OpDescriptor("aud", OpType.FILTER, commutative_filter=True,
                             shared_inputs=("audios",))
        assert detect_fusible_groups([image_filter(), audio, bridge]) == [[[0, 1, 2]]]


class TestEstimates:
    def test_fused_speed_is_harmonic(self):
        assert estimate_fused_speed([2.0, 2.0]) == pytest.approx(1.0)
        assert estimate_fused_speed([10.0]) == pytest.approx(10.0)

    @pytest.mark.parametrize("speeds", [[], [0.0], [5.0, -1.0], [None]])
    def test_non_positive_speed(self, speeds):
        with pytest.raises(NonPositiveSpeed):
            estimate_fused_speed(speeds)

    def test_reorder_by_speed_with_failures_last(self):
        group = [UnitEstimate([0], 5.0, 1.0), UnitEstimate([1], None, 1.0),
                 UnitEstimate([2], 50.0, 1.0), UnitEstimate([3], 5.0, 1.0)]
        assert [u.op_indices for u in reorder_group(group)] == [[2], [0], [3], [1]]

    def test_order_cost_shrinks_by_selectivity(self):
        order = [UnitEstimate([0], 10.0, 0.1), UnitEstimate([1], 100.0, 1.0)]
        assert order_cost(order, 1000) == pytest.approx(101.0)
        assert order_cost(list(reversed(order)), 1000) == pytest.approx(110.0)


class TestBestOrder:
    def test_selective_slow_filter_goes_first(self):
        group = [UnitEstimate([0], 100.0, 1.0), UnitEstimate([1], 10.0, 0.1)]
        assert [u.op_indices for u in best_order(group, 1000)] == [[1], [0]]
        assert [u.op_indices for u in best_order(group, 1000, speed_only=True)] == [[0], [1]]

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_brute_force_optimum(self, seed):
        rng = random.Random(seed)
        group = [UnitEstimate([i], rng.uniform(1, 100), rng.uniform(0.05, 1.0))
                 for i in range(rng.randint(2, 6))]
        chosen = order_cost(best_order(group, 1000), 1000)
        optimum = min(order_cost(p, 1000) for p in permutations(group))
        assert chosen == pytest.approx(optimum)

    def test_large_groups_never_get_worse(self):
        rng = random.Random(3)
        group = [UnitEstimate([i], rng.uniform(1, 100), rng.uniform(0.5, 1.0)) for i in range(10)]
        assert order_cost(best_order(group, 1000), 1000) <= order_cost(group, 1000)

    def test_failed_units_stay_in_the_group(self):
        group = [UnitEstimate([0], None, 1.0), UnitEstimate([1], 1.0, 1.0)]
        assert [u.op_indices for u in best_order(group, 10)] == [[1], [0]]


class TestPlan:
    def test_unoptimized_plan_keeps_recipe_order(self, engine_config):
        ops = [text_filter(), text_filter(), mapper()]
        report = probe_report([1.0, 100.0, 10.0])
        execution = plan(ops, report, RESOURCES, dataset_size=1000, optimize=False,
                         config=engine_config)

        assert [s.op_indices for s in execution.steps()] == [[0], [1], [2]]
        assert execution.estimated_total_time == pytest.approx(execution.raw_estimated_time)
        assert not execution.optimized

    def test_optimized_plan_reorders_and_fuses(self, engine_config):
        ops = [text_filter(), image_filter(), image_filter(), mapper(), text_filter()]
        report = probe_report([1.0, 50.0, 50.0, 10.0, 5.0], [1.0, 0.5, 1.0, 1.0, 1.0])
        execution = plan(ops, report, RESOURCES, dataset_size=1000, config=engine_config)

        assert [s.op_indices for s in execution.steps()] == [[1, 2], [0], [3], [4]]
        assert execution.steps()[0].fused
        assert execution.steps()[0].speed == pytest.approx(25.0)
        assert sorted(execution.op_order()) == list(range(5))
        assert execution.estimated_total_time < execution.raw_estimated_time

    def test_steps_get_batch_size_and_workers(self, engine_config):
        execution = plan([text_filter()], probe_report([10.0]), RESOURCES, config=engine_config,
                         np_cap=2)
        step = execution.steps()[0]
        assert step.batch_size == engine_config.default_batch_size
        assert step.worker_count == 2

    def test_estimate_uses_probe_size_without_dataset_size(self, engine_config):
        execution = plan([text_filter()], probe_report([10.0], size=50), RESOURCES,
                         config=engine_config)
        assert execution.estimated_total_time == pytest.approx(5.0)

    def test_plan_round_trips(self, engine_config):
        execution = plan([text_filter(), image_filter()], probe_report([2.0, 3.0]), RESOURCES,
                         speed_only=True, config=engine_config)
        assert ExecutionPlan.from_dict(execution.as_dict()) == execution
        assert execution.speed_only
