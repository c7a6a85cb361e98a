import numpy as np
import pytest

from approxdiag.abstraction import AbstractionParams
from approxdiag.bridge import (
    DIAGNOSABLE_ABOVE,
    INCONCLUSIVE,
    NOT_DIAGNOSABLE,
    conclude,
    falsify_plant,
    fault_lattice_dilated,
    fault_lattice_eroded,
    smallest_refute_k,
)
from approxdiag.errors import EmptyErosionError, FaultSpecError, ParamCheckError
from approxdiag.fixtures import e1
from approxdiag.lattice import lattice_points_in
from approxdiag.regions import Box, BoxUnion

WIDE = Box((-10.0, -10.0), (10.0, 10.0))


def test_dilated_examples():
    region = BoxUnion.of(Box((0.95, 0.95), (1.05, 1.05)))
    assert fault_lattice_dilated(region, 0.1, 0.5, WIDE) == [(1, 1)]
    point = BoxUnion.of(Box((1.0, 1.0), (1.0, 1.0)))
    assert fault_lattice_dilated(point, 0.0, 0.5, WIDE) == [(1, 1)]
    outside = BoxUnion.of(Box((50.0, 50.0), (51.0, 51.0)))
    assert fault_lattice_dilated(outside, 0.1, 0.5, WIDE) == []


def test_eroded_examples():
    square = BoxUnion.of(Box((0.0, 0.0), (1.0, 1.0)))
    pts = fault_lattice_eroded(square, 0.2, 0.1, WIDE)
    assert len(pts) == 16  # the eroded core [0.2, 0.8]^2 on the 0.2-grid
    assert set(pts) == {(a, b) for a in range(1, 5) for b in range(1, 5)}
    assert fault_lattice_eroded(square, 0.6, 0.1, WIDE) == []  # past the inradius
    all_inside = fault_lattice_eroded(square, 0.0, 0.1, WIDE)
    assert set(all_inside) == {pt.coords for pt in lattice_points_in(square, 0.1)}


def test_eroded_respects_union_geometry():
    # Two abutting boxes: erosion may straddle the interior seam.
    union = BoxUnion.of(Box((0.0, 0.0), (0.5, 1.0)), Box((0.5, 0.0), (1.0, 1.0)))
    pts = fault_lattice_eroded(union, 0.2, 0.1, WIDE)
    assert (3, 3) in pts  # embedding (0.6, 0.6): its ball crosses the seam


def test_smallest_refute_k_examples():
    assert smallest_refute_k(0.5, 0.2, 0.1) == 10
    assert smallest_refute_k(0.0, 0.1, 0.1) == 3  # exact multiple: min h = 2
    assert smallest_refute_k(0.05, 0.3, 0.03) == 23


def test_sandwich_on_random_instances():
    rng = np.random.default_rng(70)
    for _ in range(50):
        lo = rng.uniform(-2, 1, size=2)
        region = BoxUnion.of(Box(tuple(lo), tuple(lo + rng.uniform(0.3, 2.0, size=2))))
        eps = float(rng.uniform(0.01, 0.4))
        eta = float(rng.choice([0.05, 0.1, 0.25]))
        dil = set(fault_lattice_dilated(region, eps, eta, WIDE))
        ero = set(fault_lattice_eroded(region, eps, eta, WIDE))
        plain = {pt.coords for pt in lattice_points_in(region, eta)}
        assert ero <= plain <= dil


def prove_params():
    return AbstractionParams(0.5, 0.05, 0.025)


def refute_params():
    return AbstractionParams(0.3, 0.03, 0.01)


def test_conclude_requires_valid_params():
    sysdef, cert = e1()
    region = BoxUnion.of(Box((1.7, -1.0), (1.9, 1.0)))
    with pytest.raises(ParamCheckError):
        conclude(sysdef, cert, AbstractionParams(0.5, 0.1, 0.1), region, "prove")


def test_conclude_rejects_fault_meeting_initial_set():
    sysdef, cert = e1()
    region = BoxUnion.of(Box((0.0, 0.0), (0.5, 0.5)))
    with pytest.raises(FaultSpecError):
        conclude(sysdef, cert, prove_params(), region, "prove")


def test_conclude_prove_bound_arithmetic():
    # An unreachable fault box exercises the k/bound arithmetic exactly.
    sysdef, cert = e1()
    region = BoxUnion.of(Box((2.1, -1.0), (2.3, 1.0)))
    verdict = conclude(
        sysdef, cert, AbstractionParams(1.0, 0.1, 0.05), region, "prove", k=2
    )
    assert verdict.direction == DIAGNOSABLE_ABOVE
    assert verdict.rho_bound == 2.2  # 2*eps + k*eta, exact float arithmetic


def test_conclude_prove_observable_fault():
    sysdef, cert = e1()
    region = BoxUnion.of(Box((1.7, -1.0), (1.9, 1.0)))
    verdict = conclude(sysdef, cert, prove_params(), region, "prove")
    assert verdict.direction == DIAGNOSABLE_ABOVE
    assert verdict.k == 20 and verdict.rho_bound == 2.0
    assert verdict.finite.diagnosable


def test_conclude_refute_empty_erosion():
    sysdef, cert = e1()
    thin = BoxUnion.of(Box((1.7, -1.0), (1.9, 1.0)))  # width 0.2 < 2*eps
    with pytest.raises(EmptyErosionError):
        conclude(sysdef, cert, refute_params(), thin, "refute", rho=0.05)


def test_conclude_refute_inconclusive_when_finite_diagnosable():
    # Fault visible through the observed coordinate: refutation gets nothing.
    sysdef, cert = e1()
    region = BoxUnion.of(Box((1.4, -1.2), (2.1, 1.2)))
    verdict = conclude(sysdef, cert, refute_params(), region, "refute", rho=0.05)
    assert verdict.direction == INCONCLUSIVE
    assert verdict.finite is not None and verdict.finite.diagnosable


def test_conclude_refute_hidden_fault():
    sysdef, cert = e1()
    region = BoxUnion.of(Box((1.02, 0.22), (1.98, 0.98)))
    verdict = conclude(sysdef, cert, refute_params(), region, "refute", rho=0.05)
    assert verdict.direction == NOT_DIAGNOSABLE
    assert verdict.k == 23
    assert not verdict.finite.diagnosable


def test_falsify_trivial_cases():
    sysdef, _ = e1()
    region = BoxUnion.of(Box((1.02, 0.22), (1.98, 0.98)))
    assert falsify_plant(sysdef, region, 0.05, trials=0, horizon=10) is None
    assert falsify_plant(sysdef, region, 100.0, trials=200, horizon=10) is None


def test_falsify_finds_hidden_fault_pair():
    sysdef, _ = e1()
    region = BoxUnion.of(Box((1.02, 0.22), (1.98, 0.98)))
    cx = falsify_plant(sysdef, region, 0.05, trials=400, horizon=30, seed=0)
    assert cx is not None
    # Re-validate the pair against the definition directly.
    assert region.contains(cx.traj_fault[cx.fault_time])
    assert all(not region.contains(x) for x in cx.traj_fault[: cx.fault_time])
    assert all(region.distance_to(x) > 0.05 for x in cx.traj_safe)
    from approxdiag.system import quantized_output_trace

    tf = quantized_output_trace(sysdef, cx.x0_fault, cx.inputs)
    ts = quantized_output_trace(sysdef, cx.x0_safe, cx.inputs)
    assert [q.coords for q in tf] == [q.coords for q in ts]
    assert cx.fault_time >= 1


def test_falsify_reproducible():
    sysdef, _ = e1()
    region = BoxUnion.of(Box((1.02, 0.22), (1.98, 0.98)))
    a = falsify_plant(sysdef, region, 0.05, trials=400, horizon=30, seed=0)
    b = falsify_plant(sysdef, region, 0.05, trials=400, horizon=30, seed=0)
    assert a == b
