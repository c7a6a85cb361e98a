import numpy as np
import pytest

from approxdiag.abstraction import (
    AbstractionParams,
    build_abstraction,
    certify_relation,
    check_params,
    solve_epsilon,
)
from approxdiag.errors import BoundExceededError, ParamCheckError
from approxdiag.fixtures import e1, e1_config
from approxdiag.system import parse_system


def test_check_params_examples():
    _, cert = e1()
    ok = check_params(cert, AbstractionParams(1.0, 0.1, 0.05))
    assert ok.ok and ok.slack_decrease == 0.0 and ok.slack_bound == pytest.approx(0.9)
    assert not check_params(cert, AbstractionParams(0.5, 0.1, 0.1)).ok
    tiny = check_params(cert, AbstractionParams(1.0, 1e-9, 1e-9))
    assert tiny.ok


def test_solve_epsilon_examples():
    _, cert = e1()
    assert solve_epsilon(cert, 0.1, 0.05) == 1.0
    assert solve_epsilon(cert, 0.2, 0.1) == 2.0
    assert solve_epsilon(cert, 1e-9, 1e-9) < 1e-6


def test_solve_epsilon_postcondition():
    _, cert = e1()
    rng = np.random.default_rng(50)
    for _ in range(50):
        eta = float(rng.uniform(1e-4, 0.5))
        mu = float(rng.uniform(1e-4, 0.5))
        eps = solve_epsilon(cert, eta, mu)
        assert check_params(cert, AbstractionParams(eps * (1 + 1e-9), eta, mu)).ok


def build_e1_coarse(**kw):
    sysdef, cert = e1()
    params = AbstractionParams(solve_epsilon(cert, 0.5, 0.5), 0.5, 0.5)
    return build_abstraction(sysdef, cert, params, **kw)


def test_e1_initial_states_are_quantizer_image():
    system = build_e1_coarse()
    init = {system.state_coords[i] for i in system.initial}
    assert init == {(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1)}


def test_e1_successors_of_origin():
    system = build_e1_coarse()
    k = system.state_coords.index((0, 0))
    succs = {system.state_coords[t[0]] for t in system.succ[k]}
    assert succs == {(-1, 0), (0, 0), (1, 0)}


def test_abstraction_closed_and_deterministic():
    system = build_e1_coarse()
    assert system.deterministic
    for row in system.succ:
        for (j,) in row:
            assert 0 <= j < system.n_states  # every target expanded


def test_finiteness_bound():
    sysdef, cert = e1()
    system = build_e1_coarse()
    per_axis = [
        (cert.explore_bound.upper[i] - cert.explore_bound.lower[i]) / (2 * 0.5) + 1
        for i in range(sysdef.n)
    ]
    assert system.n_states <= per_axis[0] * per_axis[1]


def test_reproducible_across_runs_and_threads():
    a = build_e1_coarse()
    b = build_e1_coarse(threads=4)
    assert a.state_coords == b.state_coords
    assert a.succ == b.succ
    assert a.initial == b.initial


def test_param_enforcement():
    sysdef, cert = e1()
    with pytest.raises(ParamCheckError):
        build_abstraction(sysdef, cert, AbstractionParams(0.5, 0.1, 0.1))


def test_bound_exceeded_reports_state():
    doc = e1_config()
    doc["certificate"]["explore_bound"] = {"lower": [-1.2, -1.2], "upper": [1.2, 1.2]}
    sysdef, cert = parse_system(doc)
    params = AbstractionParams(solve_epsilon(cert, 0.5, 0.5), 0.5, 0.5)
    with pytest.raises(BoundExceededError) as err:
        build_abstraction(sysdef, cert, params)
    assert err.value.coords is not None


def test_certify_relation_valid_params():
    sysdef, cert = e1()
    params = AbstractionParams(1.0, 0.1, 0.05)
    system = build_abstraction(sysdef, cert, params)
    rep = certify_relation(sysdef, cert, params, system, samples=2000, seed=0)
    assert rep.passed
    assert rep.max_v_next <= rep.threshold


def test_certify_relation_diagonal():
    # A state is related to its own embedding with certificate value zero.
    sysdef, cert = e1()
    params = AbstractionParams(1.0, 0.1, 0.05)
    system = build_abstraction(sysdef, cert, params)
    xi = tuple(float(v) for v in system.states[0])
    assert cert.v(xi, xi) == 0.0 <= cert.alpha_lo(params.epsilon)


def test_certify_relation_negative_control():
    sysdef, cert = e1()
    bad = AbstractionParams(1.0, 0.5, 0.05)
    assert not check_params(cert, bad).ok
    system = build_abstraction(sysdef, cert, bad, enforce_params=False)
    rep = certify_relation(sysdef, cert, bad, system, samples=4000, seed=0)
    assert rep.violations_step > 0
