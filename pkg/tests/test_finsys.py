import itertools
from fractions import Fraction

import numpy as np
import pytest

from approxdiag.abstraction import AbstractionParams, build_abstraction, solve_epsilon
from approxdiag.errors import DomainError
from approxdiag.finsys import FiniteSystem, observation_symbol, synchronized_product
from approxdiag.fixtures import d1, e1, nd1, random_finite_system


def test_ball_states_examples():
    s = d1()  # 1-D embeddings 0, 2, 4
    assert s.ball_states({1}, 0) == {1}
    assert s.ball_states({1}, 1) == {1}  # distance 2 to both neighbors
    assert s.ball_states({1}, 2) == {0, 1, 2}
    assert s.ball_states({1}, 100) == {0, 1, 2}
    assert s.ball_states(set(), 5) == frozenset()


def test_ball_states_monotone_in_rho():
    rng = np.random.default_rng(40)
    for _ in range(30):
        s, spec = random_finite_system(rng)
        smaller = s.ball_states(spec.faults, 0)
        bigger = s.ball_states(spec.faults, 1)
        assert smaller <= bigger
        assert smaller == spec.faults  # injective integer embeddings


def test_output_run():
    s = d1()
    assert s.output_run((0,)) == ((Fraction(0),),)
    assert s.output_run((0, 1, 1)) == ((Fraction(0),), (Fraction(2),), (Fraction(2),))
    with pytest.raises(DomainError):
        s.output_run((0, 0))  # no self-loop at the initial state
    with pytest.raises(DomainError):
        s.output_run((1, 1))  # not anchored at an initial state


def test_product_diagonal_when_outputs_distinct():
    s = d1()  # all outputs distinct
    twin = synchronized_product(s)
    assert set(twin.pairs) == {(i, i) for i in range(s.n_states)}


def test_product_contains_offdiagonal_confusion():
    s = nd1()
    twin = synchronized_product(s)
    assert (1, 2) in twin.pairs  # the faulty/clean confusion pair
    k = twin.pairs.index((1, 2))
    assert k in twin.system.succ[k][0]  # it loops on itself


def test_product_empty_without_initial_states():
    s = d1()
    empty = FiniteSystem(s.states, (), s.inputs, s.succ, s.outputs, s.p)
    twin = synchronized_product(empty)
    assert twin.system.initial == ()


def enumerate_runs(s: FiniteSystem, length: int):
    """All state runs with `length` states, by brute expansion."""
    runs = [[i] for i in s.initial]
    for _ in range(length - 1):
        runs = [r + [j] for r in runs for j in s.successors_any(r[-1])]
    return [tuple(r) for r in runs]


def test_product_soundness_by_enumeration():
    rng = np.random.default_rng(41)
    for _ in range(10):
        s, _spec = random_finite_system(rng)
        twin = synchronized_product(s)
        horizon = 5
        # Product runs decode to pairs of runs with identical output runs.
        pair_runs = enumerate_runs(twin.system, horizon)
        decoded = {
            (tuple(twin.pairs[k][0] for k in pr), tuple(twin.pairs[k][1] for k in pr))
            for pr in pair_runs
        }
        for run_a, run_b in itertools.islice(decoded, 200):
            assert s.is_run(run_a) and s.is_run(run_b)
            assert s.output_run(run_a) == s.output_run(run_b)
        # Conversely, equal-output run pairs lift into the product.
        runs = enumerate_runs(s, horizon)
        by_out = {}
        for r in runs:
            by_out.setdefault(tuple(s.outputs[i] for i in r), []).append(r)
        lifted = 0
        for group in by_out.values():
            for ra in group[:4]:
                for rb in group[:4]:
                    assert (ra, rb) in decoded
                    lifted += 1
        assert lifted > 0


def test_abstraction_model_round_trip(tmp_path):
    sysdef, cert = e1()
    params = AbstractionParams(solve_epsilon(cert, 0.5, 0.5), 0.5, 0.5)
    system = build_abstraction(sysdef, cert, params)
    path = tmp_path / "model.json"
    system.save(str(path))
    back = FiniteSystem.load(str(path))
    assert back.states == system.states
    assert back.succ == system.succ
    assert back.initial == system.initial
    assert back.outputs == system.outputs
    assert back.deterministic


def test_raw_system_round_trip(tmp_path):
    s = nd1()
    path = tmp_path / "nd1.json"
    s.save(str(path))
    back = FiniteSystem.load(str(path))
    assert back.states == s.states
    assert back.succ == s.succ
    assert not back.deterministic  # two successors under one input


def test_deterministic_flag():
    assert not d1().deterministic
    sysdef, cert = e1()
    params = AbstractionParams(solve_epsilon(cert, 0.5, 0.5), 0.5, 0.5)
    assert build_abstraction(sysdef, cert, params).deterministic


def test_observation_symbol_lattice_and_raw():
    sysdef, cert = e1()
    params = AbstractionParams(solve_epsilon(cert, 0.5, 0.5), 0.5, 0.5)
    system = build_abstraction(sysdef, cert, params)
    # 0.9 lies in the cell of embedding 1.0 on the 1.0-grid.
    assert observation_symbol(system, [0.9]) == (2 * Fraction(0.5) * 1,)
    raw = d1()
    assert observation_symbol(raw, [2]) == (Fraction(2),)
    assert observation_symbol(raw, ["4"]) == (Fraction(4),)
