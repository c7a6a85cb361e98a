"""Finite metric transition systems with embedded states.

States carry exact rational embeddings: abstraction states embed as
2*theta*coords with theta converted exactly to Fraction, hand-written
automata supply rational embeddings directly.  Output equality, ball
membership and the twin-plant synchronization below therefore never
compare floats.

Hand-written systems may be nondeterministic; abstractions are
deterministic by construction.  Two systems can share embeddings between
distinct states; fault sets are specified by state index, not by region,
precisely so that case stays unambiguous.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DimensionMismatchError, DomainError
from .rational import to_rational

SCHEMA_VERSION = 1


def _to_fraction(v) -> Fraction:
    # Decimal intent: 0.4 in a JSON file means 2/5, not the binary float.
    try:
        return to_rational(v)
    except TypeError as exc:
        raise DomainError(str(exc)) from exc


def _fraction_json(v: Fraction):
    return int(v) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


@dataclass(frozen=True)
class FiniteSystem:
    """Finite system S = (X, X0, U, ->, Y, H) with infinity-norm metric."""

    states: tuple[tuple[Fraction, ...], ...]
    initial: tuple[int, ...]
    inputs: tuple
    succ: tuple[tuple[tuple[int, ...], ...], ...]  # succ[state][input] sorted
    outputs: tuple[tuple[Fraction, ...], ...]
    p: int
    # Lattice provenance, present when built by the abstraction engine.
    state_theta: float | None = None
    input_theta: float | None = None
    state_coords: tuple[tuple[int, ...], ...] | None = None
    input_coords: tuple[tuple[int, ...], ...] | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ns = len(self.states)
        if len(self.succ) != ns or len(self.outputs) != ns:
            raise DimensionMismatchError("states, succ and outputs must align")
        for i in self.initial:
            if not 0 <= i < ns:
                raise DomainError(f"initial state index {i} out of range")
        for row in self.succ:
            if len(row) != len(self.inputs):
                raise DimensionMismatchError("successor rows must cover every input")
            for targets in row:
                for j in targets:
                    if not 0 <= j < ns:
                        raise DomainError(f"successor index {j} out of range")

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def deterministic(self) -> bool:
        return all(len(t) <= 1 for row in self.succ for t in row)

    # -- run machinery ---------------------------------------------------

    def successors_any(self, i: int) -> tuple[int, ...]:
        """Distinct successors of state i under any input (input-erased)."""
        cache = self.meta.setdefault("_succ_any", {})
        if i not in cache:
            cache[i] = tuple(sorted({j for targets in self.succ[i] for j in targets}))
        return cache[i]

    def successors_by_output(self, i: int) -> dict:
        """Input-erased successors of i grouped by their output value."""
        cache = self.meta.setdefault("_succ_by_out", {})
        if i not in cache:
            groups: dict = {}
            for j in self.successors_any(i):
                groups.setdefault(self.outputs[j], []).append(j)
            cache[i] = {out: tuple(js) for out, js in groups.items()}
        return cache[i]

    def is_run(self, run) -> bool:
        if not run or run[0] not in self.initial:
            return False
        return all(b in self.successors_any(a) for a, b in zip(run, run[1:]))

    def output_run(self, run) -> tuple:
        """Pointwise outputs of a state run; the run must be a valid path."""
        if not self.is_run(run):
            raise DomainError(f"not a run of this system: {run}")
        return tuple(self.outputs[i] for i in run)

    def distance(self, i: int, j: int) -> Fraction:
        return max(abs(a - b) for a, b in zip(self.states[i], self.states[j]))

    def ball_states(self, fault: frozenset[int] | set[int], rho) -> frozenset[int]:
        """States within infinity-norm distance rho of the fault set
        (closed ball); exact rational comparison, equals the fault set at
        rho = 0 when embeddings are injective."""
        r = _to_rho(rho)
        fault = frozenset(fault)
        if not fault:
            return frozenset()
        return frozenset(
            i
            for i in range(self.n_states)
            if any(self.distance(i, j) <= r for j in fault)
        )

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        if self.state_coords is not None:
            assert self.deterministic
            return {
                "kind": "abstraction-model",
                "schema": SCHEMA_VERSION,
                "p": self.p,
                "n": len(self.state_coords[0]) if self.state_coords else 0,
                "m": len(self.input_coords[0]) if self.input_coords else 0,
                "state_theta": self.state_theta,
                "input_theta": self.input_theta,
                "states": [list(c) for c in self.state_coords],
                "inputs": [list(c) for c in self.input_coords],
                "initial": list(self.initial),
                "successors": [[t[0] for t in row] for row in self.succ],
                **{k: v for k, v in self.meta.items() if not k.startswith("_")},
            }
        return {
            "kind": "finite-system",
            "schema": SCHEMA_VERSION,
            "p": self.p,
            "raw_states": [[_fraction_json(v) for v in s] for s in self.states],
            "raw_outputs": [[_fraction_json(v) for v in o] for o in self.outputs],
            "inputs": list(self.inputs),
            "initial": list(self.initial),
            "transitions": [
                [i, u, j]
                for i, row in enumerate(self.succ)
                for u, targets in enumerate(row)
                for j in targets
            ],
            **{k: v for k, v in self.meta.items() if not k.startswith("_")},
        }

    def save(self, path: str):
        from .report import canonical_json

        with open(path, "w") as fh:
            fh.write(canonical_json(self.to_json()))
            fh.write("\n")

    @staticmethod
    def from_json(doc: dict) -> "FiniteSystem":
        kind = doc.get("kind")
        if kind == "abstraction-model":
            theta = float(doc["state_theta"])
            two_theta = 2 * to_rational(theta)
            coords = tuple(tuple(int(c) for c in row) for row in doc["states"])
            p = int(doc["p"])
            states = tuple(tuple(two_theta * c for c in row) for row in coords)
            outputs = tuple(s[:p] for s in states)
            in_coords = tuple(tuple(int(c) for c in row) for row in doc["inputs"])
            succ = tuple(tuple((int(j),) for j in row) for row in doc["successors"])
            mu = float(doc["input_theta"])
            two_mu = 2 * to_rational(mu)
            inputs = tuple(tuple(two_mu * c for c in row) for row in in_coords)
            meta = {
                k: doc[k]
                for k in ("config_digest", "epsilon")
                if k in doc and doc[k] is not None
            }
            return FiniteSystem(
                states,
                tuple(int(i) for i in doc["initial"]),
                inputs,
                succ,
                outputs,
                p,
                state_theta=theta,
                input_theta=mu,
                state_coords=coords,
                input_coords=in_coords,
                meta=meta,
            )
        if kind == "finite-system":
            states = tuple(tuple(_to_fraction(v) for v in row) for row in doc["raw_states"])
            outputs = tuple(tuple(_to_fraction(v) for v in row) for row in doc["raw_outputs"])
            inputs = tuple(doc["inputs"])
            n_states, n_inputs = len(states), len(inputs)
            table = [[set() for _ in range(n_inputs)] for _ in range(n_states)]
            for i, u, j in doc["transitions"]:
                table[int(i)][int(u)].add(int(j))
            succ = tuple(tuple(tuple(sorted(t)) for t in row) for row in table)
            return FiniteSystem(
                states,
                tuple(int(i) for i in doc["initial"]),
                inputs,
                succ,
                outputs,
                int(doc["p"]),
            )
        raise DomainError(f"unknown model kind {kind!r}")

    @staticmethod
    def load(path: str) -> "FiniteSystem":
        with open(path) as fh:
            return FiniteSystem.from_json(json.load(fh))


def _to_rho(rho) -> Fraction:
    r = to_rational(rho)
    if r < 0:
        raise DomainError("ball radius must be nonnegative")
    return r


@dataclass(frozen=True)
class TwinProduct:
    """Self-product synchronized on equal outputs (inputs existentially
    quantified, since the diagnoser observes outputs only)."""

    system: FiniteSystem
    pairs: tuple[tuple[int, int], ...]

    def pair_index(self, i: int, j: int) -> int:
        return self.pairs.index((i, j))


def synchronized_product(s: FiniteSystem) -> TwinProduct:
    """Materialized twin plant over all equal-output state pairs.

    Pair (i, j) steps to (i', j') when i -> i' under some input, j -> j'
    under some (possibly different) input, and the target outputs agree.
    Intended for desk-scale systems; the diagnosability checker explores
    the same product implicitly.
    """
    pairs = [
        (i, j)
        for i in range(s.n_states)
        for j in range(s.n_states)
        if s.outputs[i] == s.outputs[j]
    ]
    index = {pair: k for k, pair in enumerate(pairs)}
    initial = tuple(
        index[(i, j)] for i in s.initial for j in s.initial if s.outputs[i] == s.outputs[j]
    )
    succ_rows = []
    for i, j in pairs:
        si = s.successors_by_output(i)
        sj = s.successors_by_output(j)
        targets = sorted(
            index[(a, b)]
            for out, alist in si.items()
            if out in sj
            for a in alist
            for b in sj[out]
        )
        succ_rows.append((tuple(targets),))
    states = tuple(s.states[i] + s.states[j] for i, j in pairs)
    outputs = tuple(s.outputs[i] for i, j in pairs)
    product = FiniteSystem(
        states,
        initial,
        ("*",),
        tuple(succ_rows),
        outputs,
        s.p,
    )
    return TwinProduct(product, tuple(pairs))


def observation_symbol(s: FiniteSystem, values) -> tuple[Fraction, ...]:
    """Map an observed numeric output vector onto the system's own output
    value domain: via the output quantizer for lattice-backed models, via
    exact decimal conversion for hand-written ones."""
    if len(values) != s.p:
        raise DimensionMismatchError(f"expected {s.p} output components")
    if s.state_theta is not None:
        from .lattice import quantize

        q = quantize(tuple(float(v) for v in values), s.state_theta)
        return q.embed_exact()
    return tuple(_to_fraction(v) for v in values)
