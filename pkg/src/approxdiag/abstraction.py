"""Symbolic abstraction of the plant on a uniform state/input lattice.

The abstraction's states are lattice points, its single successor per
(state, input) is the quantized image of the dynamics, and its accuracy is
certified by two inequalities linking the quantization parameters to the
certificate:

    L*eta + sigma(mu) <= (lam o alpha_lo)(epsilon)
    alpha_hi(eta)     <= alpha_lo(epsilon)

Only the accessible part is ever built, by breadth-first closure from the
quantizer image of the initial set.  Frontier levels are expanded in
lexicographic coordinate order, so the resulting state numbering (and any
serialized model file) is bit-reproducible, independent of thread count.

Reachability is not bounded analytically: the certificate carries an
explicit exploration box instead, and the builder fails loudly when a
reached state escapes it.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BoundExceededError, ParamCheckError
from .finsys import FiniteSystem
from .kfun import compose_inverse
from .lattice import lattice_image, quantize, quantize_index
from .rational import to_rational
from .system import Certificate, SystemDef, _sample_union, step

SOLVE_EPS_TOL = 1e-9


@dataclass(frozen=True)
class AbstractionParams:
    """Accuracy epsilon, state/output quantization eta, input quantization mu."""

    epsilon: float
    eta: float
    mu: float

    def __post_init__(self):
        if not (self.epsilon > 0 and self.eta > 0 and self.mu > 0):
            raise ParamCheckError("epsilon, eta and mu must all be positive")


@dataclass(frozen=True)
class ParamCheck:
    """Result of the parameter inequalities, with both slack values."""

    ok: bool
    slack_decrease: float  # (lam o alpha_lo)(eps) - (L*eta + sigma(mu))
    slack_bound: float  # alpha_lo(eps) - alpha_hi(eta)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "slack_decrease": self.slack_decrease,
            "slack_bound": self.slack_bound,
        }


def check_params(cert: Certificate, params: AbstractionParams) -> ParamCheck:
    """Evaluate both accuracy inequalities and report their slacks."""
    lhs = cert.lipschitz * params.eta + cert.sigma(params.mu)
    rhs = cert.lam(cert.alpha_lo(params.epsilon))
    slack_decrease = rhs - lhs
    slack_bound = cert.alpha_lo(params.epsilon) - cert.alpha_hi(params.eta)
    return ParamCheck(slack_decrease >= 0 and slack_bound >= 0, slack_decrease, slack_bound)


def solve_epsilon(cert: Certificate, eta: float, mu: float) -> float:
    """Smallest accuracy epsilon compatible with the given eta and mu:
    max of the two inequality inversions.  The result passes check_params
    after a relative nudge of SOLVE_EPS_TOL."""
    target = cert.lipschitz * eta + cert.sigma(mu)
    eps_decrease = compose_inverse(cert.lam, cert.alpha_lo, target)
    eps_bound = cert.alpha_lo.inverse(cert.alpha_hi(eta))
    eps = max(eps_decrease, eps_bound)
    if not check_params(cert, AbstractionParams(max(eps, 1e-300), eta, mu)).ok:
        eps *= 1.0 + SOLVE_EPS_TOL
    return eps


def _expand_chunk(fn, input_embeds, eta, chunk):
    out = []
    for coords, emb in chunk:
        row = []
        for u_emb in input_embeds:
            nxt = fn(emb, u_emb)
            row.append(tuple(quantize_index(v, eta) for v in nxt))
        out.append((coords, row))
    return out


def build_abstraction(
    sysdef: SystemDef,
    cert: Certificate,
    params: AbstractionParams,
    *,
    enforce_params: bool = True,
    threads: int | None = None,
    config_digest: str | None = None,
) -> FiniteSystem:
    """Breadth-first closure of the lattice abstraction.

    Initial states are the quantizer image of X0 on the eta-lattice, the
    input alphabet is the quantizer image of U on the mu-lattice, and each
    (state, input) has the single successor [f(state, input)] on the
    eta-lattice.  Raises BoundExceededError when any reached state embeds
    outside the certificate's exploration box.  ``enforce_params=False``
    skips the accuracy check; it exists for negative-control experiments.
    """
    if enforce_params:
        chk = check_params(cert, params)
        if not chk.ok:
            raise ParamCheckError(
                f"quantization parameters rejected: slacks {chk.slack_decrease}, {chk.slack_bound}"
            )
    eta, mu = params.eta, params.mu
    fn = sysdef.compiled()
    bound = cert.explore_bound

    input_points = lattice_image(sysdef.u_set, mu)
    input_coords = [pt.coords for pt in input_points]
    input_embeds = [pt.embed() for pt in input_points]

    init_points = lattice_image(sysdef.x0, eta)
    index: dict[tuple[int, ...], int] = {}
    embeds: list[tuple[float, ...]] = []

    def admit(coords, source=None, input_label=None) -> int:
        emb = tuple(2.0 * eta * c for c in coords)
        if not bound.contains(emb):
            raise BoundExceededError(coords, emb, source, input_label)
        index[coords] = len(embeds)
        embeds.append(emb)
        return index[coords]

    for pt in init_points:  # already sorted lexicographically
        admit(pt.coords)
    initial = tuple(range(len(init_points)))

    succ_rows: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
    level = [pt.coords for pt in init_points]
    workers = max(1, int(threads)) if threads else 1
    while level:
        tasks = [(coords, embeds[index[coords]]) for coords in level]
        if workers > 1 and len(tasks) > 1:
            chunk_size = math.ceil(len(tasks) / workers)
            chunks = [tasks[i : i + chunk_size] for i in range(0, len(tasks), chunk_size)]
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = [
                    item
                    for part in pool.map(
                        lambda ch: _expand_chunk(fn, input_embeds, eta, ch), chunks
                    )
                    for item in part
                ]
        else:
            results = _expand_chunk(fn, input_embeds, eta, tasks)
        fresh: dict[tuple[int, ...], tuple] = {}
        for coords, row in results:
            succ_rows[coords] = row
            for u_pos, tgt in enumerate(row):
                if tgt not in index and tgt not in fresh:
                    fresh[tgt] = (coords, input_coords[u_pos])
        ordered = sorted(fresh)
        for coords in ordered:
            src, label = fresh[coords]
            admit(coords, src, label)
        level = ordered

    coords_list = sorted(index, key=index.get)
    succ = tuple(
        tuple((index[tgt],) for tgt in succ_rows[coords]) for coords in coords_list
    )
    two_eta = 2 * to_rational(eta)
    states = tuple(tuple(two_eta * c for c in coords) for coords in coords_list)
    outputs = tuple(s[: sysdef.p] for s in states)
    two_mu = 2 * to_rational(mu)
    inputs = tuple(tuple(two_mu * c for c in coords) for coords in input_coords)
    meta = {"epsilon": params.epsilon}
    if config_digest is not None:
        meta["config_digest"] = config_digest
    return FiniteSystem(
        states,
        initial,
        inputs,
        succ,
        outputs,
        sysdef.p,
        state_theta=eta,
        input_theta=mu,
        state_coords=tuple(coords_list),
        input_coords=tuple(input_coords),
        meta=meta,
    )


# -- statistical certification of the accuracy relation --------------------


@dataclass(frozen=True)
class RelationReport:
    """Sampled evidence for the accuracy relation V(x, xi) <= alpha_lo(eps).

    Counts violations of: initial-state matching, the distance bound
    d(x, xi) <= eps on related pairs (before and after the step), and
    preservation of the relation by one synchronous step.  max_v_next is
    the largest certificate value reached after a step, to be compared
    against the threshold.
    """

    samples: int
    threshold: float
    max_v_next: float
    violations_initial: int
    violations_distance: int
    violations_step: int

    @property
    def passed(self) -> bool:
        return (
            self.violations_initial == 0
            and self.violations_distance == 0
            and self.violations_step == 0
        )

    def to_json(self) -> dict:
        return {
            "samples": self.samples,
            "threshold": self.threshold,
            "max_v_next": self.max_v_next,
            "violations_initial": self.violations_initial,
            "violations_distance": self.violations_distance,
            "violations_step": self.violations_step,
            "verdict": "PASS" if self.passed else "FAIL",
        }


def certify_relation(
    sysdef: SystemDef,
    cert: Certificate,
    params: AbstractionParams,
    system: FiniteSystem,
    samples: int = 10_000,
    seed: int = 0,
) -> RelationReport:
    """Sample the accuracy relation on the built abstraction.

    Each sample draws a related pair (x, xi) with V(x, xi) <= alpha_lo(eps)
    (the sublevel set is a box around the state's embedding, so sampling is
    exact), a plant input u, and checks that the plant successor f(x, u)
    stays related to the abstraction successor under the quantized input.
    Also samples initial states of the plant and checks they are matched by
    quantization into the abstraction's initial set.  Report-only.
    """
    threshold = cert.alpha_lo(params.epsilon)
    eps = params.epsilon
    rng = np.random.default_rng(seed)
    coords_index = {c: i for i, c in enumerate(system.state_coords)}
    input_index = {c: i for i, c in enumerate(system.input_coords)}
    state_embeds = [tuple(2.0 * params.eta * c for c in coords) for coords in system.state_coords]

    viol_init = viol_dist = viol_step = 0
    max_v_next = 0.0

    init_samples = _sample_union(rng, sysdef.x0, samples)
    init_set = set(system.initial)
    for x in init_samples:
        x = tuple(x)
        q = quantize(x, params.eta)
        idx = coords_index.get(q.coords)
        if idx is None or idx not in init_set:
            viol_init += 1
            continue
        if cert.v(x, state_embeds[idx]) > threshold:
            viol_init += 1

    state_picks = rng.integers(0, system.n_states, size=samples)
    u_samples = _sample_union(rng, sysdef.u_set, samples)
    unit = rng.uniform(-1.0, 1.0, size=(samples, sysdef.n))
    for k in range(samples):
        s_idx = int(state_picks[k])
        xi = state_embeds[s_idx]
        x = tuple(
            xi_i + unit[k][i] * threshold / cert.weights[i] for i, xi_i in enumerate(xi)
        )
        if max(abs(a - b) for a, b in zip(x, xi)) > eps:
            viol_dist += 1
        u = tuple(u_samples[k])
        v_coords = quantize(u, params.mu).coords
        u_idx = input_index.get(v_coords)
        if u_idx is None:
            viol_step += 1
            continue
        x_next = step(sysdef, x, u)
        xi_next_idx = system.succ[s_idx][u_idx][0]
        xi_next = state_embeds[xi_next_idx]
        v_next = cert.v(x_next, xi_next)
        max_v_next = max(max_v_next, v_next)
        if v_next > threshold:
            viol_step += 1
        elif max(abs(a - b) for a, b in zip(x_next, xi_next)) > eps:
            viol_dist += 1
    return RelationReport(samples, threshold, float(max_v_next), viol_init, viol_dist, viol_step)
