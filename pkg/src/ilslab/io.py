"""Instance documents: loading, validation, serialisation and generation.

An instance is one self-contained JSON document::

    {"quotient": {"s": 2, "m": 1, "A": [[1, 0]], "norm": "euclidean"},
     "base": {"points": [[0], [1], [2]], "metric": "induced", "weights": [1, 1, 1]},
     "sections": {"phi": {"values": [[0, 0], [1, 2], [2, 4]], "scale": 1}},
     "fields": {"f": {"values": [[1, 0], [3, 0], [0, 0]]}},
     "schedule": {"radii": [2.5, 1.5]},
     "class": {"c": 2, "boundRadius": 10}}

Sections may give ``"lift"`` coordinates instead of ``"values"``.  Floats
are written with ``repr`` so a dump/load round trip is exact.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cheeger import AdmissibleClass
from .exceptions import BadDims, IlslabError, ParseError, ValidationError
from .functionals import ScaleSchedule
from .quotient import SampledBase, build_quotient
from .sections import PlainField, lift_section, validate_section


@dataclass
class Instance:
    quotient: object
    base: SampledBase
    sections: dict
    fields: dict = field(default_factory=dict)
    schedule: ScaleSchedule = None
    admissible: AdmissibleClass = None

    def section(self, name):
        try:
            return self.sections[name]
        except KeyError:
            raise KeyError(f"no section named {name!r}; have {sorted(self.sections)}") from None

    def field_or_section(self, name):
        if name in self.sections:
            return self.sections[name]
        if name in self.fields:
            return self.fields[name]
        raise KeyError(f"no section or field named {name!r}")

    def to_dict(self):
        Q, B = self.quotient, self.base
        doc = {
            "quotient": {"s": Q.s, "m": Q.m, "A": Q.A.tolist(), "norm": Q.norm},
            "base": {
                "points": B.points.tolist(),
                "metric": "induced" if B.metric is None else B.metric.tolist(),
                "weights": B.weights.tolist(),
            },
            "sections": {name: {"values": sec.values.tolist(), "scale": sec.scale}
                         for name, sec in self.sections.items()},
        }
        if B.labels is not None:
            doc["base"]["labels"] = list(B.labels)
        if self.fields:
            doc["fields"] = {name: {"values": f.values.tolist()} for name, f in self.fields.items()}
        if self.schedule is not None:
            doc["schedule"] = {"radii": list(self.schedule.radii)}
        if self.admissible is not None:
            doc["class"] = {"c": self.admissible.c, "boundRadius": self.admissible.bound_radius}
        return doc


def _get(doc, path):
    node = doc
    for key in path.split("."):
        if not isinstance(node, dict) or key not in node:
            raise ValidationError(path, "missing")
        node = node[key]
    return node


def _wrap(path, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ValidationError:
        raise
    except (IlslabError, ValueError, TypeError) as exc:
        raise ValidationError(path, f"{type(exc).__name__}: {exc}") from exc


def instance_from_dict(doc):
    """Validate a parsed document; errors carry the offending field path."""
    if not isinstance(doc, dict):
        raise ValidationError("<root>", "instance must be a JSON object")
    q = _get(doc, "quotient")
    A = _get(doc, "quotient.A")
    Q = _wrap("quotient.A", build_quotient, A, q.get("norm", "euclidean"))
    for key, want in (("s", Q.s), ("m", Q.m)):
        if key in q and int(q[key]) != want:
            raise ValidationError(f"quotient.{key}", f"declared {q[key]} but A implies {want}")
    b = _get(doc, "base")
    points = _get(doc, "base.points")
    base = _wrap("base.points", SampledBase, points, b.get("weights"), b.get("metric"),
                 b.get("labels"))
    if base.dim != Q.m:
        raise ValidationError("base.points", f"points have dimension {base.dim}, expected m={Q.m}")
    sections = {}
    for name, spec in (doc.get("sections") or {}).items():
        path = f"sections.{name}"
        scale = spec.get("scale", 1.0)
        if "values" in spec:
            sections[name] = _wrap(path, validate_section, Q, base, spec["values"], scale)
        elif "lift" in spec:
            sections[name] = _wrap(path, lift_section, Q, base, spec["lift"], scale)
        else:
            raise ValidationError(path, "needs 'values' or 'lift'")
    fields = {}
    for name, spec in (doc.get("fields") or {}).items():
        vals = _wrap(f"fields.{name}", np.asarray, spec.get("values"), dtype=float)
        if vals.shape != (base.n, Q.s) or not np.all(np.isfinite(vals)):
            raise ValidationError(f"fields.{name}", f"expected finite values of shape {(base.n, Q.s)}")
        vals.flags.writeable = False
        fields[name] = PlainField(Q, base, vals)
    schedule = None
    if "schedule" in doc:
        schedule = _wrap("schedule.radii", ScaleSchedule, tuple(_get(doc, "schedule.radii")))
    cls = None
    if "class" in doc:
        c = doc["class"]
        cls = _wrap("class", AdmissibleClass, float(c.get("c", 2.0)),
                    float(c.get("boundRadius", 10.0)))
    return Instance(Q, base, sections, fields, schedule, cls)


def load_instance(path):
    """Read and fully validate an instance file.

    Raises
    ------
    ParseError
        If the file is missing or not valid JSON.
    ValidationError
        With the field path of the first invalid entry.
    """
    try:
        text = Path(path).read_text()
        doc = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read instance {path}: {exc}") from exc
    return instance_from_dict(doc)


def dump_instance(inst, path=None):
    text = json.dumps(inst.to_dict(), indent=1, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _separated_points(rng, n, m, max_tries=200):
    # rejection sampling in [-1, 1]^m with a minimum spacing
    spacing = 0.5 * (2.0 ** m / n) ** (1.0 / m)
    for _ in range(max_tries):
        pts = []
        for _ in range(50 * n):
            p = rng.uniform(-1.0, 1.0, size=m)
            if all(np.abs(p - q).max() >= spacing for q in pts):
                pts.append(p)
                if len(pts) == n:
                    return np.array(pts)
        spacing *= 0.9
    raise BadDims("could not place well-separated base points")


def generate_instance(s, m, n, seed=0, sections=3, amplitude=0.3, norm="euclidean"):
    """Random well-conditioned instance, deterministic per seed.

    ``A`` is Gaussian, resampled until its condition number is at most
    1e3; base points are spread in ``[-1, 1]^m`` with a minimum spacing;
    sections are random lifts with coordinates of size ``amplitude`` and
    the admissibility box is sized to contain them and the flat lift.
    """
    if not (1 <= m < s <= 8):
        raise BadDims(f"need 1 <= m < s <= 8, got s={s}, m={m}")
    if not (2 <= n <= 64):
        raise BadDims(f"need 2 <= n <= 64, got n={n}")
    rng = np.random.default_rng(seed)
    while True:
        A = rng.standard_normal((m, s))
        sv = np.linalg.svd(A, compute_uv=False)
        if sv[-1] > 0 and sv[0] / sv[-1] <= 1e3:
            break
    Q = build_quotient(A, norm)
    base = SampledBase(_separated_points(rng, n, m), rng.uniform(0.5, 1.5, size=n))
    secs = {}
    for i in range(sections):
        u = amplitude * rng.uniform(-1.0, 1.0, size=(n, s - m))
        secs[f"phi{i}"] = lift_section(Q, base, u)
    D = base.distance_matrix(Q)
    nn = np.where(np.eye(n, dtype=bool), np.inf, D).min(axis=1).max()
    radii = (4.0 * nn, 2.5 * nn, 1.5 * nn)
    flat = base.points @ Q.pinv.T
    reach = max([np.abs(flat).max()] + [sec.sup_norm() for sec in secs.values()])
    cls = AdmissibleClass(2.0, float(np.ceil(2.0 * reach + 1.0)))
    return Instance(Q, base, secs, {}, ScaleSchedule(radii), cls)
