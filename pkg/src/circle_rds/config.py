"""Reference systems and the JSON config interface.

Configs travel as a single JSON document with sections ``measures``,
``experiment`` and ``output``.  Every number is a decimal string; parsing
coerces to double precision, and canonicalization re-emits each number
with 17 significant digits so semantically equal documents hash equally.

Generators are stored as construction recipes (rotation, hyperbolic,
conjugate, explicit matrix, piecewise linear) rather than raw entries:
rebuilding a map through the same arithmetic as the in-code builders
keeps file-loaded and code-built systems bit-identical.

The standard pair frozen here is load-bearing for the test suite.  Its
geometry: g stretches toward 0, k is g conjugated by a small rotation
(axes tilted by 0.06), and a low-weight rotation atom smooths the
stationary measures' support; the second measure is the whole family
conjugated a quarter turn, placing its attractors and repulsors in the
gaps of the first.  The contraction rate this tunes to (about -0.41)
matters: much stronger contraction collapses grid images to identical
doubles near the attractor and starves the interval-based repulsor
estimator at horizon 60.
"""

import dataclasses
import hashlib
import json
import math
from typing import Optional

from .maps import (GeneratorSystem, MapWord, MoebiusMap, PiecewiseLinearMap)
from .walk import StepMeasure
from .experiments import ExperimentConfig

SEED = 20260816
STRETCH = 1.3
AXIS_TILT = 0.06
SCRAMBLE_ANGLE = 0.03
SCRAMBLE_WEIGHT = 0.2
QUARTER_TURN = 0.25
X0 = 0.0
Y0 = 0.37
N_VALUES = tuple(range(5, 61, 5))
TRIALS = 2000
EPS = (0.95,)
K_GRID = 512
BALL_RADIUS = 0.02
ROTATION_A = 0.6180339887498949
ROTATION_B = 0.41421356237309515


class ConfigError(ValueError):
    """Raised on invalid config documents; carries all diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _hyperbolic_doc(strength):
    return {"kind": "hyperbolic", "strength": _fmt(strength)}


def _rotation_doc(angle):
    return {"kind": "rotation", "angle": _fmt(angle)}


def _conjugate_doc(by_doc, map_doc):
    return {"kind": "conjugate", "by": by_doc, "map": map_doc}


def standard_document() -> dict:
    """The frozen standard-pair config as a raw JSON document."""
    base = {
        "g": _hyperbolic_doc(STRETCH),
        "k": _conjugate_doc(_rotation_doc(AXIS_TILT), _hyperbolic_doc(STRETCH)),
        "s": _rotation_doc(SCRAMBLE_ANGLE),
    }
    turned = {
        name: _conjugate_doc(_rotation_doc(QUARTER_TURN), doc)
        for name, doc in base.items()
    }
    w = (1.0 - SCRAMBLE_WEIGHT) / 2.0
    atoms = [
        {"word": ["g"], "weight": _fmt(w)},
        {"word": ["k"], "weight": _fmt(w)},
        {"word": ["s"], "weight": _fmt(SCRAMBLE_WEIGHT)},
    ]
    return {
        "measures": {
            "measure_1": {"generators": base, "atoms": atoms},
            "measure_2": {"generators": turned, "atoms": atoms},
        },
        "experiment": {
            "n_values": [str(n) for n in N_VALUES],
            "trials": str(TRIALS),
            "eps": [_fmt(e) for e in EPS],
            "K": str(K_GRID),
            "seed": str(SEED),
            "x0": _fmt(X0),
            "y0": _fmt(Y0),
            "radius": _fmt(BALL_RADIUS),
            "asserted_proximal": True,
        },
        "output": {"dir": "out"},
    }


def rotations_document() -> dict:
    """Rotations-only control: isometries, no proximality."""
    gens = {"r": _rotation_doc(ROTATION_A), "q": _rotation_doc(ROTATION_B)}
    atoms = [
        {"word": ["r"], "weight": "0.5"},
        {"word": ["q"], "weight": "0.5"},
    ]
    measure = {"generators": gens, "atoms": atoms}
    return {
        "measures": {"measure_1": measure, "measure_2": measure},
        "experiment": {
            "n_values": [str(n) for n in N_VALUES],
            "trials": str(TRIALS),
            "eps": [_fmt(e) for e in EPS],
            "K": str(K_GRID),
            "seed": str(SEED),
            "x0": _fmt(X0),
            "y0": _fmt(Y0),
            "radius": _fmt(BALL_RADIUS),
            "asserted_proximal": False,
        },
        "output": {"dir": "out"},
    }


def _num(value, where, diags) -> Optional[float]:
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        diags.append(f"{where}: expected a decimal string")
        return None
    try:
        x = float(value)
    except ValueError:
        diags.append(f"{where}: not a number: {value!r}")
        return None
    if not math.isfinite(x):
        diags.append(f"{where}: not finite")
        return None
    return x


def _int(value, where, diags) -> Optional[int]:
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        diags.append(f"{where}: expected an integer string")
        return None
    try:
        return int(str(value))
    except ValueError:
        diags.append(f"{where}: not an integer: {value!r}")
        return None


def _build_generator(doc, where, diags):
    if not isinstance(doc, dict) or "kind" not in doc:
        diags.append(f"{where}: generator needs a 'kind'")
        return None
    kind = doc["kind"]
    if kind == "rotation":
        angle = _num(doc.get("angle"), f"{where}.angle", diags)
        return None if angle is None else MoebiusMap.rotation(angle)
    if kind == "hyperbolic":
        s = _num(doc.get("strength"), f"{where}.strength", diags)
        if s is None:
            return None
        if s <= 0.0:
            diags.append(f"{where}.strength: must be positive")
            return None
        return MoebiusMap.hyperbolic(s)
    if kind == "conjugate":
        by = _build_generator(doc.get("by"), f"{where}.by", diags)
        inner = _build_generator(doc.get("map"), f"{where}.map", diags)
        if by is None or inner is None:
            return None
        if not isinstance(by, MoebiusMap) or not isinstance(inner, MoebiusMap):
            diags.append(f"{where}: conjugation needs Moebius parts")
            return None
        return by.compose(inner).compose(by.inverse())
    if kind == "moebius":
        m = doc.get("matrix")
        if (not isinstance(m, list) or len(m) != 2
                or any(not isinstance(r, list) or len(r) != 2 for r in m)):
            diags.append(f"{where}.matrix: expected a 2x2 array")
            return None
        entries = [_num(m[i][j], f"{where}.matrix[{i}][{j}]", diags)
                   for i in range(2) for j in range(2)]
        if any(e is None for e in entries):
            return None
        try:
            return MoebiusMap(*entries)
        except ValueError as exc:
            diags.append(f"{where}.matrix: {exc}")
            return None
    if kind == "pl":
        bp = doc.get("breakpoints")
        im = doc.get("images")
        if not isinstance(bp, list) or not isinstance(im, list):
            diags.append(f"{where}: pl needs breakpoints and images arrays")
            return None
        bps = [_num(v, f"{where}.breakpoints[{i}]", diags) for i, v in enumerate(bp)]
        ims = [_num(v, f"{where}.images[{i}]", diags) for i, v in enumerate(im)]
        if any(v is None for v in bps + ims):
            return None
        try:
            return PiecewiseLinearMap(bps, ims)
        except ValueError as exc:
            diags.append(f"{where}: {exc}")
            return None
    diags.append(f"{where}: unknown generator kind {kind!r}")
    return None


def _build_measure(doc, where, diags) -> Optional[StepMeasure]:
    if not isinstance(doc, dict):
        diags.append(f"{where}: expected an object")
        return None
    gens_doc = doc.get("generators")
    atoms_doc = doc.get("atoms")
    if not isinstance(gens_doc, dict) or not gens_doc:
        diags.append(f"{where}.generators: expected a nonempty object")
        return None
    if not isinstance(atoms_doc, list) or not atoms_doc:
        diags.append(f"{where}.atoms: expected a nonempty array")
        return None
    named = []
    for name, gdoc in gens_doc.items():
        g = _build_generator(gdoc, f"{where}.generators.{name}", diags)
        if g is None:
            return None
        named.append((name, g))
    system = GeneratorSystem(named)
    atoms = []
    total = 0.0
    for i, adoc in enumerate(atoms_doc):
        if not isinstance(adoc, dict):
            diags.append(f"{where}.atoms[{i}]: expected an object")
            return None
        word = adoc.get("word")
        if not isinstance(word, list) or not all(isinstance(t, str) for t in word):
            diags.append(f"{where}.atoms[{i}].word: expected an array of names")
            return None
        weight = _num(adoc.get("weight"), f"{where}.atoms[{i}].weight", diags)
        if weight is None:
            return None
        if weight <= 0.0:
            diags.append(f"{where}.atoms[{i}].weight: must be positive")
            return None
        try:
            atoms.append((MapWord.from_names(system, word), weight))
        except ValueError as exc:
            diags.append(f"{where}.atoms[{i}].word: {exc}")
            return None
        total += weight
    if abs(total - 1.0) > 1e-12:
        diags.append(f"{where}: weights sum to {total!r}, expected 1")
        return None
    return StepMeasure(atoms)


def _parse_document(doc, diags):
    if not isinstance(doc, dict):
        diags.append("top level: expected an object")
        return None, None
    measures = doc.get("measures")
    if not isinstance(measures, dict) or "measure_1" not in measures:
        diags.append("measures: expected an object with measure_1")
        return None, None
    mu1 = _build_measure(measures["measure_1"], "measures.measure_1", diags)
    mu2 = None
    if "measure_2" in measures:
        mu2 = _build_measure(measures["measure_2"], "measures.measure_2", diags)
    exp = doc.get("experiment")
    if not isinstance(exp, dict):
        diags.append("experiment: expected an object")
        return None, None
    n_raw = exp.get("n_values")
    if not isinstance(n_raw, list) or not n_raw:
        diags.append("experiment.n_values: expected a nonempty array")
        n_values = None
    else:
        ns = [_int(v, f"experiment.n_values[{i}]", diags) for i, v in enumerate(n_raw)]
        n_values = None if any(v is None for v in ns) else tuple(ns)
        if n_values is not None and any(
                b <= a for a, b in zip(n_values, n_values[1:])):
            diags.append("experiment.n_values: must be strictly increasing")
            n_values = None
        if n_values is not None and n_values[0] < 1:
            diags.append("experiment.n_values: must start at 1 or later")
            n_values = None
    trials = _int(exp.get("trials"), "experiment.trials", diags)
    if trials is not None and trials < 1:
        diags.append("experiment.trials: must be >= 1")
        trials = None
    eps_raw = exp.get("eps")
    if not isinstance(eps_raw, list) or not eps_raw:
        diags.append("experiment.eps: expected a nonempty array")
        eps = None
    else:
        es = [_num(v, f"experiment.eps[{i}]", diags) for i, v in enumerate(eps_raw)]
        eps = None if any(v is None for v in es) else tuple(es)
        if eps is not None and any(not 0.0 < e < 1.0 for e in eps):
            diags.append("experiment.eps: every value must lie in (0,1)")
            eps = None
    K = _int(exp.get("K"), "experiment.K", diags)
    if K is not None and K < 3:
        diags.append("experiment.K: must be >= 3")
        K = None
    seed = _int(exp.get("seed"), "experiment.seed", diags)
    x0 = _num(exp.get("x0"), "experiment.x0", diags)
    y0 = _num(exp.get("y0"), "experiment.y0", diags)
    radius = _num(exp.get("radius", "0.02"), "experiment.radius", diags)
    if radius is not None and not 0.0 < radius < 0.25:
        diags.append("experiment.radius: must lie in (0, 0.25)")
        radius = None
    proximal = exp.get("asserted_proximal", True)
    if not isinstance(proximal, bool):
        diags.append("experiment.asserted_proximal: expected true or false")
        proximal = None
    out_dir = None
    output = doc.get("output")
    if output is not None:
        if not isinstance(output, dict):
            diags.append("output: expected an object")
        else:
            out_dir = output.get("dir")
            if out_dir is not None and not isinstance(out_dir, str):
                diags.append("output.dir: expected a string")
                out_dir = None
    parts = (mu1, n_values, trials, eps, K, seed, x0, y0, radius, proximal)
    if diags or any(p is None for p in parts):
        return None, out_dir
    cfg = ExperimentConfig(
        measure_1=mu1, measure_2=mu2, n_values=n_values, trials=trials,
        eps=eps, K=K, seed=seed, x0=x0, y0=y0, radius=radius,
        asserted_proximal=proximal)
    return cfg, out_dir


@dataclasses.dataclass(frozen=True)
class LoadedConfig:
    config: ExperimentConfig
    out_dir: Optional[str]
    digest: str


def parse_config(doc: dict) -> LoadedConfig:
    diags: list = []
    cfg, out_dir = _parse_document(doc, diags)
    if cfg is None:
        raise ConfigError(diags or ["config did not parse"])
    return LoadedConfig(cfg, out_dir, config_digest(doc))


def load_config(path: str) -> LoadedConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON: {exc}"]) from exc
    return parse_config(doc)


def validate_config(path: str) -> list:
    """All diagnostics for the file; empty means valid."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        return [f"{path}: cannot read: {exc}"]
    except json.JSONDecodeError as exc:
        return [f"{path}: invalid JSON: {exc}"]
    diags: list = []
    _parse_document(doc, diags)
    return diags


def _canonical(value):
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return _fmt(value)
    if isinstance(value, str):
        try:
            return _fmt(float(value))
        except ValueError:
            return value
    if isinstance(value, list):
        return [_canonical(v) for v in value]
    if isinstance(value, dict):
        return {k: _canonical(value[k]) for k in sorted(value)}
    return value


def canonical_json(doc: dict) -> str:
    """Key-sorted, number-normalized form; the digest input."""
    return json.dumps(_canonical(doc), sort_keys=True, separators=(",", ":"))


def config_digest(doc: dict) -> str:
    return hashlib.sha256(canonical_json(doc).encode("utf-8")).hexdigest()


def standard_config(**overrides) -> ExperimentConfig:
    cfg = parse_config(standard_document()).config
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def rotations_config(**overrides) -> ExperimentConfig:
    cfg = parse_config(rotations_document()).config
    return dataclasses.replace(cfg, **overrides) if overrides else cfg
