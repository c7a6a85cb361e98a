"""Approximate diagnosability of finite metric systems.

A system is diagnosable for a fault set and ball radius rho when some
output-driven detector can, within a uniform finite delay, raise an alarm
after the state first enters the fault set, while every alarm guarantees a
recent visit to the closed rho-neighborhood of the faults.

The decision procedure searches the twin plant: pairs of runs synchronized
on equal outputs, one side tracking "has entered the fault set", the other
"has stayed outside the ball".  Both tags are monotone, so pairs that are
simultaneously fault-seen and safe-so-far form a region whose paths are
exactly the ambiguity windows:

  * an arbitrarily extensible region path (a reachable region cycle) means
    no detector can ever commit, hence not diagnosable, and the cycle
    unrolls into a witness pair of runs;
  * otherwise the delay is the longest region path from its entry points,
    plus one.

The complement of the fault set never appears; every test is against the
complement of the ball, which is what makes the procedure approximate.
An independent bounded-horizon oracle (`brute_force_check`) re-derives the
same verdict from output-stream enumeration and run-subset tracking, and
the synthesized diagnoser is a belief automaton whose alarm means "every
run consistent with the observations has entered the ball".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    FaultSpecError,
    InfeasibleObservationError,
    InitialStateInBallError,
    NonDiagnosableError,
    ResourceLimitError,
)
from .finsys import FiniteSystem, _to_rho

BRUTE_MAX_STATES = 64
BRUTE_MAX_HORIZON = 24


@dataclass(frozen=True)
class FaultSpec:
    """Fault state indices plus the ball radius rho (stored exactly)."""

    faults: frozenset[int]
    rho: Fraction

    @staticmethod
    def of(faults, rho) -> "FaultSpec":
        return FaultSpec(frozenset(int(i) for i in faults), _to_rho(rho))

    def validate(self, system: FiniteSystem):
        for i in self.faults:
            if not 0 <= i < system.n_states:
                raise FaultSpecError(f"fault state index {i} out of range")
        bad = self.faults & set(system.initial)
        if bad:
            raise FaultSpecError(f"fault set meets the initial states: {sorted(bad)}")


@dataclass(frozen=True)
class Verdict:
    """Diagnosability decision: either a certified delay, or a witness pair
    of output-indistinguishable runs (fault-entering vs ball-avoiding)."""

    diagnosable: bool
    delta: int | None = None
    witness: tuple[tuple[int, ...], tuple[int, ...]] | None = None
    method: str = "twin-plant"
    stats: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.diagnosable:
            assert self.delta is not None and self.witness is None
        else:
            assert self.delta is None and self.witness is not None

    def to_json(self) -> dict:
        doc = {"diagnosable": self.diagnosable, "method": self.method}
        if self.diagnosable:
            doc["delta"] = self.delta
        else:
            doc["witness"] = [list(self.witness[0]), list(self.witness[1])]
        doc.update(self.stats)
        return doc


def validate_witness(system: FiniteSystem, spec: FaultSpec, witness) -> bool:
    """A witness must be a pair of runs with identical output runs, the
    first entering the fault set, the second never entering the ball."""
    run_f, run_s = witness
    if len(run_f) != len(run_s):
        return False
    if not (system.is_run(run_f) and system.is_run(run_s)):
        return False
    if system.output_run(run_f) != system.output_run(run_s):
        return False
    ball = system.ball_states(spec.faults, spec.rho)
    return any(i in spec.faults for i in run_f) and all(j not in ball for j in run_s)


# -- twin-plant checker ----------------------------------------------------


def check_diagnosability(system: FiniteSystem, spec: FaultSpec) -> Verdict:
    """Decide diagnosability by tag analysis of the twin plant.

    Polynomial in the number of state pairs.  The returned delay is the
    smallest this construction certifies, not necessarily the smallest that
    exists; the bounded oracle reports the true minimum at desk scale.
    """
    spec.validate(system)
    if not spec.faults:
        return Verdict(True, delta=0, stats={"region_states": 0})
    ball = system.ball_states(spec.faults, spec.rho)
    faults = spec.faults
    n = system.n_states

    def enc(i, j):
        return i * n + j

    def pair_moves(code):
        i, j = divmod(code, n)
        si = system.successors_by_output(i)
        sj = system.successors_by_output(j)
        for out, ilist in si.items():
            jlist = sj.get(out)
            if jlist is None:
                continue
            for a in ilist:
                for b in jlist:
                    yield a, b

    # Phase A: pairs with no fault seen on the left and no ball visit on the
    # right, reached from output-matched initial pairs.
    roots = [
        (i, j)
        for i in system.initial
        for j in system.initial
        if system.outputs[i] == system.outputs[j] and j not in ball
    ]
    a_parent: dict[int, int | None] = {}
    entries: dict[int, int | None] = {}  # region entry -> predecessor in phase A
    frontier = []
    for i, j in roots:
        code = enc(i, j)
        if code not in a_parent:
            a_parent[code] = None
            frontier.append(code)
    while frontier:
        nxt = []
        for code in frontier:
            for a, b in pair_moves(code):
                if b in ball:
                    continue
                tgt = enc(a, b)
                if a in faults:
                    if tgt not in entries:
                        entries[tgt] = code
                elif tgt not in a_parent:
                    a_parent[tgt] = code
                    nxt.append(tgt)
        frontier = nxt

    if not entries:
        return Verdict(True, delta=1, stats={"region_states": 0, "phase_a_pairs": len(a_parent)})

    # Phase B: region = fault-seen x safe-so-far pairs, explored from the
    # entries; within the region only the ball constraint remains.
    b_parent: dict[int, int | None] = {code: None for code in entries}
    frontier = list(entries)
    while frontier:
        nxt = []
        for code in frontier:
            for a, b in pair_moves(code):
                if b in ball:
                    continue
                tgt = enc(a, b)
                if tgt not in b_parent:
                    b_parent[tgt] = code
                    nxt.append(tgt)
        frontier = nxt
    region = b_parent.keys()

    def region_succs(code):
        return [enc(a, b) for a, b in pair_moves(code) if b not in ball]

    # Iterative DFS: a back edge exposes a region cycle (not diagnosable);
    # otherwise the reverse postorder supports a longest-path pass.
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {code: WHITE for code in region}
    postorder: list[int] = []
    for start in entries:
        if color[start] != WHITE:
            continue
        stack = [(start, iter(region_succs(start)))]
        color[start] = GRAY
        while stack:
            node, it = stack[-1]
            advanced = False
            for tgt in it:
                if color[tgt] == GRAY:
                    cycle_start = next(k for k, (c, _) in enumerate(stack) if c == tgt)
                    cycle = [c for c, _ in stack[cycle_start:]]
                    witness = _unroll_witness(system, a_parent, entries, b_parent, cycle, n)
                    return Verdict(
                        False,
                        witness=witness,
                        stats={"region_states": len(b_parent), "phase_a_pairs": len(a_parent)},
                    )
                if color[tgt] == WHITE:
                    color[tgt] = GRAY
                    stack.append((tgt, iter(region_succs(tgt))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                postorder.append(node)
                stack.pop()

    # Acyclic region: the delay is the longest entry-anchored path plus one.
    dist = {code: 0 for code in entries}
    for node in reversed(postorder):
        base = dist.get(node)
        if base is None:
            continue
        for tgt in region_succs(node):
            if dist.get(tgt, -1) < base + 1:
                dist[tgt] = base + 1
    delta = max(dist.values()) + 1
    return Verdict(
        True,
        delta=delta,
        stats={"region_states": len(b_parent), "phase_a_pairs": len(a_parent)},
    )


def _unroll_witness(system, a_parent, entries, b_parent, cycle, n):
    """Entry path + twice-unrolled region cycle, decoded into two runs."""
    path = []
    node = cycle[0]
    while node is not None:
        path.append(node)
        node = b_parent[node]
    path.reverse()  # entry .. cycle[0]
    entry = path[0]
    prefix = []
    node = entries[entry]
    while node is not None:
        prefix.append(node)
        node = a_parent[node]
    prefix.reverse()  # initial pair .. entry predecessor
    loop = cycle[1:] + [cycle[0]]
    codes = prefix + path + loop + loop
    run_f = tuple(code // n for code in codes)
    run_s = tuple(code % n for code in codes)
    return run_f, run_s


# -- bounded-horizon oracle --------------------------------------------------


def brute_force_check(system: FiniteSystem, spec: FaultSpec, horizon: int) -> Verdict:
    """Direct bounded-horizon decision from the definition.

    Enumerates output streams depth-first up to the horizon while tracking
    every consistent run: states reachable by not-yet-faulty runs, earliest
    fault-entry times, and states reachable by ball-avoiding runs.  A fault
    margin of m at depth d means some pair of output-identical runs has one
    side faulted since d - m while the other never touched the ball; the
    reported delay is the largest margin plus one.  Non-diagnosability is
    declared only on pumping evidence: the same faulted state and the same
    ball-free state recur at two depths of one stream, which lets the pair
    be extended forever.  Agreement with the twin-plant checker is expected
    once the horizon exceeds the pair-graph revisit length (about twice the
    squared state count plus the delay).
    """
    spec.validate(system)
    if horizon < 1:
        raise ResourceLimitError("horizon must be at least 1")
    if system.n_states > BRUTE_MAX_STATES or horizon > BRUTE_MAX_HORIZON:
        raise ResourceLimitError(
            f"bounded enumeration limited to {BRUTE_MAX_STATES} states "
            f"and horizon {BRUTE_MAX_HORIZON}"
        )
    if not spec.faults:
        return Verdict(True, delta=0, method=f"bounded-enumeration(T={horizon})")

    n = system.n_states
    ball = system.ball_states(spec.faults, spec.rho)
    ball_mask = _mask(ball)
    fault_mask = _mask(spec.faults)
    outputs = system.outputs
    out_values = sorted(set(outputs), key=repr)

    succ_by_out = [
        {out: _mask(js) for out, js in ((o, list(v)) for o, v in system.successors_by_output(i).items())}
        for i in range(n)
    ]

    # States from which the fault set is reachable (any number of steps).
    can_reach_fault = set(spec.faults)
    changed = True
    while changed:
        changed = False
        for i in range(n):
            if i not in can_reach_fault and any(
                j in can_reach_fault for j in system.successors_any(i)
            ):
                can_reach_fault.add(i)
                changed = True
    reach_fault_mask = _mask(can_reach_fault)

    best_margin = -1
    pump: dict | None = None

    def advance_mask(mask: int, out) -> int:
        acc = 0
        i = 0
        m = mask
        while m:
            if m & 1:
                acc |= succ_by_out[i].get(out, 0)
            m >>= 1
            i += 1
        return acc

    def search(depth, unfauled_mask, faulted, safe_mask, fault_chains, safe_chains, stream):
        nonlocal best_margin, pump
        if pump is not None:
            return
        if safe_mask and faulted:
            margin = depth - min(faulted.values())
            if margin > best_margin:
                best_margin = margin
            for k, (fch, sch) in enumerate(zip(fault_chains, safe_chains)):
                f_loop = next((i for i, m in fch.items() if m >> i & 1), None)
                s_loop = next((j for j, m in sch.items() if m >> j & 1), None)
                if f_loop is not None and s_loop is not None and k < depth:
                    pump = {
                        "k": k,
                        "d": depth,
                        "fault_state": f_loop,
                        "safe_state": s_loop,
                        "stream": tuple(stream),
                    }
                    return
        if depth == horizon:
            return
        if not safe_mask:
            return
        if not faulted and not (unfauled_mask & reach_fault_mask):
            return
        for out in out_values:
            out_unf = 0
            new_faulted: dict[int, int] = {}
            m = unfauled_mask
            i = 0
            while m:
                if m & 1:
                    tgt = succ_by_out[i].get(out, 0)
                    out_unf |= tgt
                m >>= 1
                i += 1
            for s, t in faulted.items():
                tgt = succ_by_out[s].get(out, 0)
                j = 0
                while tgt:
                    if tgt & 1 and (j not in new_faulted or new_faulted[j] > t):
                        new_faulted[j] = t
                    tgt >>= 1
                    j += 1
            fresh_faults = out_unf & fault_mask
            j = 0
            while fresh_faults:
                if fresh_faults & 1 and (j not in new_faulted or new_faulted[j] > depth + 1):
                    new_faulted[j] = depth + 1
                fresh_faults >>= 1
                j += 1
            new_unf = out_unf & ~fault_mask
            if not new_unf and not new_faulted:
                continue
            new_safe = advance_mask(safe_mask, out) & ~ball_mask
            new_fchains = [
                {s: advance_mask(m, out) for s, m in ch.items()} for ch in fault_chains
            ]
            new_schains = [
                {s: advance_mask(m, out) & ~ball_mask for s, m in ch.items()}
                for ch in safe_chains
            ]
            new_fchains.append({s: 1 << s for s in new_faulted})
            new_schains.append(
                {j: 1 << j for j in range(n) if new_safe >> j & 1}
            )
            stream.append(out)
            search(depth + 1, new_unf, new_faulted, new_safe, new_fchains, new_schains, stream)
            stream.pop()
            if pump is not None:
                return

    for out in sorted({outputs[i] for i in system.initial}, key=repr):
        unf = _mask(i for i in system.initial if outputs[i] == out)
        safe = unf & ~ball_mask
        fchains = [{}]
        schains = [{j: 1 << j for j in range(n) if safe >> j & 1}]
        search(0, unf, {}, safe, fchains, schains, [out])

    method = f"bounded-enumeration(T={horizon})"
    if pump is not None:
        witness = _reconstruct_pump_witness(system, spec, ball, pump)
        return Verdict(False, witness=witness, method=method)
    return Verdict(True, delta=max(best_margin, 0) + 1, method=method)


def _mask(indices) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def _find_run(system, stream, start_set, end_state, upto, *, forbidden=frozenset(), need_fault=None):
    """Backtracking search for one run consistent with stream[0..upto] that
    ends at end_state, avoids ``forbidden`` and, when need_fault is given,
    visits it at least once.  Desk-scale helper for witness assembly."""

    outputs = system.outputs

    def rec(t, state, seen_fault, path):
        if outputs[state] != stream[t] or state in forbidden:
            return None
        seen = seen_fault or (need_fault is not None and state in need_fault)
        path.append(state)
        if t == upto:
            if state == end_state and (need_fault is None or seen):
                return list(path)
            path.pop()
            return None
        for nxt in system.successors_any(state):
            got = rec(t + 1, nxt, seen, path)
            if got is not None:
                return got
        path.pop()
        return None

    for s0 in start_set:
        got = rec(0, s0, False, [])
        if got is not None:
            return got
    return None


def _find_loop(system, stream, k, d, state, *, forbidden=frozenset()):
    """Path state -> state over stream[k+1..d], avoiding forbidden states."""

    outputs = system.outputs

    def rec(t, cur, path):
        if t == d:
            return list(path) if cur == state else None
        for nxt in system.successors_any(cur):
            if nxt in forbidden or outputs[nxt] != stream[t + 1]:
                continue
            path.append(nxt)
            got = rec(t + 1, nxt, path)
            if got is not None:
                return got
            path.pop()
        return None

    return rec(k, state, [])


def _reconstruct_pump_witness(system, spec, ball, pump):
    stream = pump["stream"]
    k, d = pump["k"], pump["d"]
    i, j = pump["fault_state"], pump["safe_state"]
    base_f = _find_run(system, stream, system.initial, i, k, need_fault=spec.faults)
    base_s = _find_run(system, stream, system.initial, j, k, forbidden=ball)
    loop_f = _find_loop(system, stream, k, d, i)
    loop_s = _find_loop(system, stream, k, d, j, forbidden=ball)
    assert base_f and base_s and loop_f is not None and loop_s is not None
    run_f = tuple(base_f + loop_f + loop_f)
    run_s = tuple(base_s + loop_s + loop_s)
    return run_f, run_s


# -- belief diagnoser --------------------------------------------------------

Belief = frozenset  # of (state index, visited_ball: bool) pairs


def belief_decision(belief: Belief) -> int:
    """Alarm exactly when every consistent run has entered the ball."""
    return int(all(v for _, v in belief))


@dataclass(frozen=True)
class Diagnoser:
    """Deterministic belief automaton over output symbols.

    The belief after an observation prefix holds every state consistent
    with the prefix, tagged False when some consistent run reaching it has
    avoided the ball so far.  The initial decision is 0 by construction
    because synthesis rejects initial states inside the ball.
    """

    system: FiniteSystem
    spec: FaultSpec
    ball: frozenset[int]
    delta: int

    def start(self, y) -> tuple[Belief, int]:
        members = frozenset(
            (s, s in self.ball) for s in self.system.initial if self.system.outputs[s] == y
        )
        if not members:
            raise InfeasibleObservationError(f"no initial state produces output {y}")
        return members, belief_decision(members)

    def step(self, belief: Belief, y) -> tuple[Belief, int]:
        if not belief:
            raise InfeasibleObservationError("empty belief")
        members = set()
        for s, visited in belief:
            for out, js in self.system.successors_by_output(s).items():
                if out != y:
                    continue
                for j in js:
                    members.add((j, visited or j in self.ball))
        if not members:
            raise InfeasibleObservationError(f"no consistent run produces output {y}")
        return frozenset(members), belief_decision(frozenset(members))


def diagnoser_step(diag: Diagnoser, belief: Belief, y) -> tuple[Belief, int]:
    """Online evaluation: advance the belief by one observed output."""
    return diag.step(belief, y)


def synthesize_diagnoser(system: FiniteSystem, spec: FaultSpec) -> Diagnoser:
    """Build the belief diagnoser for a diagnosable system.

    Raises NonDiagnosableError when the twin-plant check refuses, and
    InitialStateInBallError when an initial state already lies inside the
    ball (the required initial decision 0 would then contradict the alarm
    semantics, so synthesis refuses rather than guess).
    """
    verdict = check_diagnosability(system, spec)
    if not verdict.diagnosable:
        raise NonDiagnosableError("system is not diagnosable for this fault spec")
    ball = system.ball_states(spec.faults, spec.rho)
    if ball & set(system.initial):
        raise InitialStateInBallError(
            f"initial states {sorted(ball & set(system.initial))} lie inside the ball"
        )
    return Diagnoser(system, spec, ball, verdict.delta)


# -- Monte Carlo behavioral contract ----------------------------------------


@dataclass(frozen=True)
class ContractReport:
    runs: int
    checked_alarm: int
    checked_window: int
    violations_alarm: int
    violations_window: int

    @property
    def passed(self) -> bool:
        return self.violations_alarm == 0 and self.violations_window == 0


def monte_carlo_contract(
    system: FiniteSystem,
    spec: FaultSpec,
    diag: Diagnoser,
    n_runs: int = 1000,
    seed: int = 0,
    horizon: int | None = None,
) -> ContractReport:
    """Simulate random runs and test both diagnosability clauses.

    Alarm clause: on a run first entering the fault set at time t that
    stays observable through t + delta, the decision turns 1 by t + delta.
    Window clause: at the first alarm time t', some state of a run
    consistent with the whole observed prefix lies in the ball within
    [max(t' - delta, 0), t'] (computed by backward-pruning the beliefs).
    """
    rng = np.random.default_rng(seed)
    ball = diag.ball
    delta = diag.delta
    horizon = horizon if horizon is not None else delta + 2 * system.n_states + 4
    checked_alarm = checked_window = viol_alarm = viol_window = 0

    for _ in range(n_runs):
        s = int(rng.choice(system.initial))
        run = [s]
        for _ in range(horizon):
            succs = system.successors_any(run[-1])
            if not succs:
                break
            run.append(int(succs[rng.integers(0, len(succs))]))

        beliefs = []
        belief, decision = diag.start(system.outputs[run[0]])
        beliefs.append(belief)
        alarm_at = None if decision == 0 else 0
        for t in range(1, len(run)):
            belief, decision = diag.step(belief, system.outputs[run[t]])
            beliefs.append(belief)
            if alarm_at is None and decision == 1:
                alarm_at = t

        t_fault = next((t for t, i in enumerate(run) if i in spec.faults), None)
        if t_fault is not None and len(run) - 1 >= t_fault + delta:
            checked_alarm += 1
            if alarm_at is None or alarm_at > t_fault + delta:
                viol_alarm += 1
        if alarm_at is not None:
            checked_window += 1
            lo = max(alarm_at - delta, 0)
            consistent = [frozenset(s for s, _ in b) for b in beliefs[: alarm_at + 1]]
            for t in range(alarm_at - 1, -1, -1):
                keep = set()
                for s in consistent[t]:
                    nxt = system.successors_by_output(s).get(system.outputs[run[t + 1]], ())
                    if any(j in consistent[t + 1] for j in nxt):
                        keep.add(s)
                consistent[t] = frozenset(keep)
            if not any(consistent[t] & ball for t in range(lo, alarm_at + 1)):
                viol_window += 1
    return ContractReport(n_runs, checked_alarm, checked_window, viol_alarm, viol_window)
