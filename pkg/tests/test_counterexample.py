from fractions import Fraction

import pytest

from torusapprox.counterexample import (
    BlockSchedule,
    CounterexampleInstance,
    block_union_set,
    build_counterexample,
    divergence_partial_sum,
    instance_from_prime_blocks,
    verify_block_measure,
    verify_containment,
)
from torusapprox.errors import BudgetError

F = Fraction


def test_block_schedule_validation():
    with pytest.raises(ValueError):
        BlockSchedule(blocks=0)
    with pytest.raises(ValueError):
        BlockSchedule(blocks=2, eps=(F(1, 2),))
    with pytest.raises(ValueError):
        BlockSchedule(blocks=1, mode="fast")
    assert BlockSchedule(blocks=3).eps_for(3) == F(1, 8)


def test_hand_construction_p6():
    inst = build_counterexample(BlockSchedule(blocks=1, eps=(F(1, 2),)))
    block = inst.blocks[0]
    assert block.primes == (2, 3)
    assert block.P == 6
    assert block.divisors == (2, 3, 6)
    assert inst.psi_of(2) == F(1, 6)
    assert inst.psi_of(3) == F(1, 4)
    assert inst.psi_of(6) == F(1, 2)
    assert inst.y_of(2) == F(2, 3)
    assert inst.y_of(3) == F(3, 2)
    assert inst.y_of(6) == 0
    assert inst.psi_of(5) == 0 and inst.y_of(5) == 0

    union = block_union_set(inst, 1)
    # the residues 1/6 and 5/6 thickened by 1/12
    assert union.pieces == ((F(1, 12), F(1, 4)), (F(3, 4), F(11, 12)))
    assert union.measure() == F(1, 3)
    assert verify_containment(inst, 1)
    measure = verify_block_measure(inst, 1)
    assert measure == (F(1, 3), F(1, 3), True)
    assert divergence_partial_sum(inst, 1) == F(5, 12)
    assert divergence_partial_sum(inst, 0) == 0


def test_single_prime_block():
    inst = build_counterexample(BlockSchedule(blocks=1, eps=(F(1),)))
    assert inst.blocks[0].P == 2
    assert inst.psi_of(2) == F(1, 2)
    assert inst.y_of(2) == 0
    assert block_union_set(inst, 1).pieces == ((F(1, 4), F(3, 4)),)
    measure = verify_block_measure(inst, 1)
    assert measure.measure == F(1, 2) and measure.bound == F(1, 2) and measure.ok
    assert divergence_partial_sum(inst, 1) == F(1, 4)


def test_prime_mode_second_block_starts_after_largest_prime():
    inst = build_counterexample(
        BlockSchedule(blocks=2, eps=(F(1, 2), F(1, 2)), mode="prime")
    )
    assert inst.blocks[0].primes == (2, 3)
    assert inst.blocks[1].primes[0] == 5
    prime_sets = [set(blk.primes) for blk in inst.blocks]
    assert prime_sets[0].isdisjoint(prime_sets[1])


def test_prime_mode_small_second_block_verifies():
    # keep eps mild so the second block stays within the piece budget
    inst = build_counterexample(
        BlockSchedule(blocks=2, eps=(F(1, 2), F(4, 5)), mode="prime")
    )
    assert inst.blocks[1].primes == (5, 7)
    assert verify_containment(inst, 2)
    assert verify_block_measure(inst, 2).ok
    total = divergence_partial_sum(inst, 2)
    assert total == F(5, 12) + F(34, 70)


def test_product_mode_second_block_starts_past_previous_product():
    inst = build_counterexample(
        BlockSchedule(blocks=2, eps=(F(1, 2), F(9, 10)), mode="product")
    )
    assert inst.blocks[0].P == 6
    assert inst.blocks[1].primes[0] == 7


def test_fixture_instances_p30_p210():
    for primes, density in [((2, 3, 5), F(4, 15)), ((2, 3, 5, 7), F(8, 35))]:
        inst = instance_from_prime_blocks([primes])
        block = inst.blocks[0]
        assert block.density == density
        assert verify_containment(inst, 1)
        measure = verify_block_measure(inst, 1)
        assert measure.measure == density == measure.bound
        assert divergence_partial_sum(inst, 1) == F(block.P - 1, 2 * block.P)


def test_interval_radius_equals_thickening_radius():
    inst = instance_from_prime_blocks([[2, 3, 5]])
    P = inst.blocks[0].P
    for q in inst.blocks[0].divisors:
        assert F(inst.psi_of(q), q) == F(1, 2 * P)


def test_residue_override_is_verified_too():
    inst = instance_from_prime_blocks([[2, 3]], residue_override={2: 2})
    assert inst.y_of(2) == F(4, 3)
    assert verify_containment(inst, 1)
    with pytest.raises(ValueError):
        instance_from_prime_blocks([[2, 3]], residue_override={2: 3})  # 3 not reduced mod 3


def test_corrupted_target_breaks_containment():
    inst = instance_from_prime_blocks([[2, 3]])
    inst.y[2] = F(1, 2)  # center leaves the P=6 residue grid
    assert not verify_containment(inst, 1)


def test_validation_rejections():
    with pytest.raises(ValueError, match="not prime"):
        instance_from_prime_blocks([[4]])
    with pytest.raises(ValueError, match="reused"):
        instance_from_prime_blocks([[2, 3], [3, 5]])
    inst = instance_from_prime_blocks([[2, 3]])
    inst.psi[2] = F(1, 7)
    with pytest.raises(ValueError, match="q/\\(2P\\)"):
        inst.validate()


def test_budget_refusals():
    with pytest.raises(BudgetError, match="divisors"):
        inst = instance_from_prime_blocks([[2, 3, 5, 7]], divisor_cap=4)
        block_union_set(inst, 1)
    inst = instance_from_prime_blocks([[2, 3, 5]])
    with pytest.raises(BudgetError, match="pieces"):
        block_union_set(inst, 1, piece_cap=3)
    with pytest.raises(BudgetError, match="block 1"):
        build_counterexample(BlockSchedule(blocks=1, eps=(F(1, 10**4),), prime_run_cap=10))


def test_deferred_block_closed_form_divergence():
    inst = instance_from_prime_blocks([[2, 3, 5, 7, 11, 13]], divisor_cap=8)
    assert inst.blocks[0].divisors is None
    P = inst.blocks[0].P
    assert divergence_partial_sum(inst, 1) == F(P - 1, 2 * P)
    assert inst.psi_of(30030) == F(30030, 2 * P)
    assert inst.psi_of(7) == F(7, 2 * P)


def test_json_round_trip():
    inst = build_counterexample(BlockSchedule(blocks=1, eps=(F(1, 2),)))
    text = inst.to_json()
    again = CounterexampleInstance.from_json(text)
    assert again.to_json() == text
    assert verify_containment(again, 1)
    assert verify_block_measure(again, 1) == verify_block_measure(inst, 1)


def test_json_file_round_trip(tmp_path):
    inst = instance_from_prime_blocks([[2, 3, 5]])
    path = tmp_path / "instance.json"
    inst.save(path)
    again = CounterexampleInstance.load(path)
    assert again.to_json() == inst.to_json()


def test_block_supports_disjoint():
    inst = build_counterexample(
        BlockSchedule(blocks=2, eps=(F(1, 2), F(4, 5)), mode="prime")
    )
    supports = [set(blk.divisors) for blk in inst.blocks]
    assert supports[0].isdisjoint(supports[1])
    for q in supports[0]:
        assert inst.block_of(q) == 1
    for q in supports[1]:
        assert inst.block_of(q) == 2
