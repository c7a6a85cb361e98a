"""Plant definition: dynamics x(t+1) = f(x(t), u(t)), projected quantized
outputs, and the incremental-stability certificate used to calibrate the
symbolic abstraction.

The candidate certificate function is restricted to weighted infinity-norm
differences V(x, x') = max_i w_i |x_i - x'_i|.  That family evaluates
exactly, has the exact Lipschitz constant 2 * max_i w_i under the product
norm max(||a - a'||, ||b - b'||), and makes the sublevel relation used for
certification a box, so relation checks are decidable rather than merely
samplable.  Certificate validity itself is checked statistically: the
toolkit trusts a certificate after randomized validation, it does not
prove one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import exprs
from .errors import ConfigError, NumericError
from .kfun import KFunction
from .lattice import LatticePoint, quantize
from .regions import Box, BoxUnion

ORIGIN_FIXPOINT_TOL = 1e-12
CERT_VIOLATION_TOL = 1e-9


@dataclass(frozen=True)
class SystemDef:
    """The plant: dimensions, dynamics forest, initial/input sets, output
    quantization parameter.  Outputs are the first p state coordinates."""

    n: int
    m: int
    p: int
    f_nodes: tuple[exprs.Node, ...]
    f_sources: tuple[str, ...]
    x0: BoxUnion
    u_set: BoxUnion
    eta: float

    def compiled(self):
        fn = getattr(self, "_compiled", None)
        if fn is None:
            fn = exprs.compile_forest(self.f_nodes)
            object.__setattr__(self, "_compiled", fn)
        return fn


@dataclass(frozen=True)
class Certificate:
    """Incremental-stability data: comparison-function bounds alpha_lo,
    alpha_hi, decrease rate lam, input gain sigma, Lipschitz constant of V,
    the V weights, and the state-space box the abstraction may explore."""

    alpha_lo: KFunction
    alpha_hi: KFunction
    lam: KFunction
    sigma: KFunction
    lipschitz: float
    weights: tuple[float, ...]
    explore_bound: Box

    def v(self, a, b) -> float:
        return max(w * abs(x - y) for w, x, y in zip(self.weights, a, b))


def step(sysdef: SystemDef, x, u):
    """One step of the dynamics; raises NumericError on non-finite results."""
    out = sysdef.compiled()(tuple(x), tuple(u))
    for v in out:
        if not math.isfinite(v):
            raise NumericError(f"non-finite state {out} from x={tuple(x)}, u={tuple(u)}")
    return out


def output(sysdef: SystemDef, x):
    """Projection onto the first p coordinates."""
    return tuple(x[: sysdef.p])


def quantized_output_trace(sysdef: SystemDef, x0, inputs) -> list[LatticePoint]:
    """Simulate from x0 under the input sequence and quantize each output.

    Element t depends only on x0 and inputs[0:t]; the trace has one more
    element than the input sequence.
    """
    x = tuple(x0)
    trace = [quantize(output(sysdef, x), sysdef.eta)]
    for u in inputs:
        u_t = (u,) if np.isscalar(u) else tuple(u)
        x = step(sysdef, x, u_t)
        trace.append(quantize(output(sysdef, x), sysdef.eta))
    return trace


# -- config parsing -------------------------------------------------------


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ConfigError(f"{where}.{key}" if where else key, "missing field")
    return doc[key]


def _box_union(doc, where: str, dim: int) -> BoxUnion:
    try:
        union = BoxUnion.from_json(doc, dim=dim)
    except Exception as exc:
        raise ConfigError(where, str(exc)) from exc
    if union.dim != dim:
        raise ConfigError(where, f"dimension {union.dim} != expected {dim}")
    if not union.is_bounded():
        raise ConfigError(where, "set must be bounded")
    return union


def parse_system(doc) -> tuple[SystemDef, Certificate]:
    """Parse and fully validate a system-config document (dict or JSON text).

    Checks, in order: field presence and shapes, expression syntax and
    identifier scope, p < n, the origin fixed point f(0, 0) = 0, 0 in U,
    boundedness of the initial and input sets, and certificate shape.
    """
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from exc
    if not isinstance(doc, dict):
        raise ConfigError("", "config root must be an object")

    n = int(_require(doc, "n", ""))
    m = int(_require(doc, "m", ""))
    p = int(_require(doc, "p", ""))
    if n < 1 or m < 1 or p < 1:
        raise ConfigError("n/m/p", "dimensions must be positive")
    if p >= n:
        raise ConfigError("p", f"output dimension {p} must be smaller than n = {n}")

    f_sources = _require(doc, "f", "")
    if not isinstance(f_sources, list) or len(f_sources) != n:
        raise ConfigError("f", f"expected {n} expression strings")
    f_nodes = []
    for i, src in enumerate(f_sources):
        try:
            f_nodes.append(exprs.parse_expr(src, n, m))
        except Exception as exc:
            raise ConfigError(f"f[{i}]", str(exc)) from exc

    eta = float(_require(doc, "eta", ""))
    if not eta > 0:
        raise ConfigError("eta", "output quantization parameter must be positive")

    x0 = _box_union(_require(doc, "X0", ""), "X0", n)
    u_set = _box_union(_require(doc, "U", ""), "U", m)
    if x0.is_empty():
        raise ConfigError("X0", "initial set must be nonempty")
    if not u_set.contains((0.0,) * m):
        raise ConfigError("U", "input set must contain the origin")

    sysdef = SystemDef(n, m, p, tuple(f_nodes), tuple(str(s) for s in f_sources), x0, u_set, eta)

    try:
        fx0 = step(sysdef, (0.0,) * n, (0.0,) * m)
    except Exception as exc:
        raise ConfigError("f", f"dynamics not evaluable at the origin: {exc}") from exc
    if max(abs(v) for v in fx0) > ORIGIN_FIXPOINT_TOL:
        raise ConfigError("f", f"origin is not a fixed point: f(0, 0) = {fx0}")

    cert_doc = _require(doc, "certificate", "")
    cert = _parse_certificate(cert_doc, n)
    return sysdef, cert


def _parse_certificate(doc: dict, n: int) -> Certificate:
    where = "certificate"
    if not isinstance(doc, dict):
        raise ConfigError(where, "must be an object")

    def kfun(key: str) -> KFunction:
        try:
            return KFunction.from_json(_require(doc, key, where))
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"{where}.{key}", str(exc)) from exc

    alpha_lo = kfun("alpha_lo")
    alpha_hi = kfun("alpha_hi")
    lam = kfun("lambda")
    sigma = kfun("sigma")
    lipschitz = float(_require(doc, "L", where))
    if not lipschitz > 0:
        raise ConfigError(f"{where}.L", "Lipschitz constant must be positive")
    weights = tuple(float(w) for w in _require(doc, "V_weights", where))
    if len(weights) != n or any(not w > 0 for w in weights):
        raise ConfigError(f"{where}.V_weights", f"expected {n} strictly positive weights")
    try:
        bound = Box.from_json(_require(doc, "explore_bound", where))
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"{where}.explore_bound", str(exc)) from exc
    if bound.dim != n or not bound.is_bounded():
        raise ConfigError(f"{where}.explore_bound", f"must be a bounded box of dimension {n}")
    return Certificate(alpha_lo, alpha_hi, lam, sigma, lipschitz, weights, bound)


def system_to_json(sysdef: SystemDef, cert: Certificate) -> dict:
    return {
        "n": sysdef.n,
        "m": sysdef.m,
        "p": sysdef.p,
        "f": list(sysdef.f_sources),
        "eta": sysdef.eta,
        "X0": sysdef.x0.to_json(),
        "U": sysdef.u_set.to_json(),
        "certificate": {
            "alpha_lo": cert.alpha_lo.to_json(),
            "alpha_hi": cert.alpha_hi.to_json(),
            "lambda": cert.lam.to_json(),
            "sigma": cert.sigma.to_json(),
            "L": cert.lipschitz,
            "V_weights": list(cert.weights),
            "explore_bound": cert.explore_bound.to_json(),
        },
    }


# -- certificate validation ------------------------------------------------


@dataclass(frozen=True)
class CertificateReport:
    """Worst sampled violations of the certificate inequalities.

    A negative violation means the inequality held with that much slack;
    the verdict passes when no violation exceeds CERT_VIOLATION_TOL.
    Report-only: a failing certificate is a finding, not an exception.
    """

    samples: int
    violation_bounds: float
    violation_decrease: float
    violation_lipschitz: float

    @property
    def passed(self) -> bool:
        worst = max(self.violation_bounds, self.violation_decrease, self.violation_lipschitz)
        return worst <= CERT_VIOLATION_TOL

    def to_json(self) -> dict:
        return {
            "samples": self.samples,
            "violation_bounds": self.violation_bounds,
            "violation_decrease": self.violation_decrease,
            "violation_lipschitz": self.violation_lipschitz,
            "verdict": "PASS" if self.passed else "FAIL",
        }


def _sample_union(rng: np.random.Generator, union: BoxUnion, count: int) -> np.ndarray:
    """Uniform samples: pick a member box uniformly, then uniform inside."""
    if not union.boxes:
        raise ConfigError("", "cannot sample from an empty union")
    picks = rng.integers(0, len(union.boxes), size=count)
    out = np.empty((count, union.dim))
    for i, k in enumerate(picks):
        b = union.boxes[int(k)]
        out[i] = [rng.uniform(lo, hi) if hi > lo else lo for lo, hi in zip(b.lower, b.upper)]
    return out


def _sample_box(rng: np.random.Generator, box: Box, count: int) -> np.ndarray:
    return _sample_union(rng, BoxUnion.of(box), count)


def validate_certificate(
    sysdef: SystemDef, cert: Certificate, samples: int = 10_000, seed: int = 0
) -> CertificateReport:
    """Randomized check of the certificate inequalities.

    Draws state pairs from the exploration bound and input pairs from U and
    reports the maximum violation of (i) the alpha sandwich, (ii) the
    decrease condition V(f(x,u), f(x',u')) - V <= -lam(V) + sigma(|u - u'|),
    and the declared Lipschitz bound on V under the product norm
    max(||a - a'||, ||b - b'||).  Zero samples yield a vacuous pass.
    """
    if samples <= 0:
        return CertificateReport(0, -math.inf, -math.inf, -math.inf)
    rng = np.random.default_rng(seed)
    xs = _sample_box(rng, cert.explore_bound, samples)
    xps = _sample_box(rng, cert.explore_bound, samples)
    us = _sample_union(rng, sysdef.u_set, samples)
    ups = _sample_union(rng, sysdef.u_set, samples)

    worst_bounds = -math.inf
    worst_decrease = -math.inf
    worst_lip = -math.inf
    prev_pair = None
    for x, xp, u, up in zip(xs, xps, us, ups):
        x, xp, u, up = tuple(x), tuple(xp), tuple(u), tuple(up)
        d = max(abs(a - b) for a, b in zip(x, xp))
        v = cert.v(x, xp)
        worst_bounds = max(worst_bounds, cert.alpha_lo(d) - v, v - cert.alpha_hi(d))
        du = max(abs(a - b) for a, b in zip(u, up))
        v_next = cert.v(step(sysdef, x, u), step(sysdef, xp, up))
        worst_decrease = max(worst_decrease, v_next - v + cert.lam(v) - cert.sigma(du))
        if prev_pair is not None:
            a, b = prev_pair
            dprod = max(
                max(abs(p - q) for p, q in zip(a, x)),
                max(abs(p - q) for p, q in zip(b, xp)),
            )
            worst_lip = max(worst_lip, abs(cert.v(a, b) - v) - cert.lipschitz * dprod)
        prev_pair = (x, xp)
    return CertificateReport(samples, worst_bounds, worst_decrease, worst_lip)
