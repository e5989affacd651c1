"""Dataset files: JSON for structured objects, JSON lines for samples.

Every complex number is written as a ``[re, im]`` pair and every float
with Python's shortest round-trip representation, so ``load(save(x))``
reproduces the arrays bit for bit. Each file starts with a header naming
its type:

* ``statespace`` - ``{"type", "domain", "E", "A", "B", "C"}``
* ``quadruplet`` - matrices plus kind, domain and provenance points
* ``shifts`` - interpolation points, damping values, domain and side
* ``rule`` - quadrature nodes and weights
* ``samples`` - a JSON-lines stream: header line
  ``{"type": "samples", "p", "m", "domain"}`` then one line per point
  ``{"point": [re, im], "value": ..., "derivative": ...}`` (``derivative``
  optional)

Writes are atomic (temporary file plus rename).
"""
import json
import os
import tempfile

import numpy as np

from . import systems
from .errors import FileFormat, ValidationError
from .quadrature import QuadratureRule, SampleSet, ShiftSet
from .quadruplet import DataQuadruplet

TAGS = ("statespace", "quadruplet", "shifts", "rule", "samples")


# -- encoding -----------------------------------------------------------------

def encode_array(a):
    """Nested lists with ``[re, im]`` leaves."""
    a = np.asarray(a)
    c = a.astype(complex)
    pairs = np.stack([c.real, c.imag], axis=-1)
    return pairs.tolist()


def decode_array(x, line=None, name="array"):
    try:
        arr = np.asarray(x, dtype=float)
    except (TypeError, ValueError):
        raise FileFormat(f"{name}: entries must be [re, im] pairs", line) from None
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise FileFormat(f"{name}: entries must be [re, im] pairs", line)
    out = arr[..., 0] + 1j * arr[..., 1]
    if not np.any(arr[..., 1]):
        return arr[..., 0].copy()
    return out


def _atomic_write(path, text):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _opt(a):
    return None if a is None else encode_array(a)


def to_dict(obj):
    """JSON-ready dictionary for a structured object (not samples)."""
    if isinstance(obj, systems.StateSpace):
        return {"type": "statespace", "domain": obj.domain, "E": encode_array(obj.E),
                "A": encode_array(obj.A), "B": encode_array(obj.B), "C": encode_array(obj.C)}
    if isinstance(obj, DataQuadruplet):
        return {"type": "quadruplet", "kind": obj.kind, "domain": obj.domain,
                "Eq": encode_array(obj.Eq), "Aq": encode_array(obj.Aq),
                "Bq": encode_array(obj.Bq), "Cq": encode_array(obj.Cq),
                "right_points": _opt(obj.right_points), "left_points": _opt(obj.left_points),
                "right_dirs": _opt(obj.right_dirs), "left_dirs": _opt(obj.left_dirs)}
    if isinstance(obj, ShiftSet):
        return {"type": "shifts", "domain": obj.domain, "side": obj.side,
                "shifts": encode_array(obj.shifts), "zetas": obj.zetas.tolist()}
    if isinstance(obj, QuadratureRule):
        return {"type": "rule", "domain": obj.domain, "factor_weights": obj.factor_weights,
                "nodes": obj.nodes.tolist(), "weights": obj.weights.tolist(),
                "meta": {k: v for k, v in obj.meta.items()
                         if isinstance(v, (int, float, str, bool)) or v is None}}
    raise ValidationError(f"cannot serialize {type(obj).__name__}")


def _get(d, key, line=1):
    if key not in d:
        raise FileFormat(f"missing field {key!r}", line)
    return d[key]


def from_dict(d, line=1):
    """Inverse of :func:`to_dict`."""
    if not isinstance(d, dict):
        raise FileFormat("top-level value must be an object", line)
    tag = d.get("type")
    try:
        if tag == "statespace":
            return systems.StateSpace(*(decode_array(_get(d, k), line, k) for k in "EABC"),
                                      domain=_get(d, "domain"))
        if tag == "quadruplet":
            opt = {k: (None if d.get(k) is None else decode_array(d[k], line, k))
                   for k in ("right_points", "left_points", "right_dirs", "left_dirs")}
            mats = [decode_array(_get(d, k), line, k) for k in ("Eq", "Aq", "Bq", "Cq")]
            return DataQuadruplet(*mats, kind=_get(d, "kind"), domain=_get(d, "domain"), **opt)
        if tag == "shifts":
            return ShiftSet(np.asarray(decode_array(_get(d, "shifts"), line, "shifts"), complex),
                            np.asarray(_get(d, "zetas"), float), _get(d, "domain"),
                            d.get("side", "input"))
        if tag == "rule":
            return QuadratureRule(np.asarray(_get(d, "nodes"), float),
                                  np.asarray(_get(d, "weights"), float), d.get("domain", "interval"),
                                  bool(d.get("factor_weights", False)), dict(d.get("meta", {})))
    except FileFormat:
        raise
    except (ValidationError, TypeError, ValueError) as exc:
        raise FileFormat(f"invalid {tag} content: {exc}", line) from None
    raise FileFormat(f"unknown header tag {tag!r}; allowed tags: {', '.join(TAGS)}", line)


# -- samples ------------------------------------------------------------------

def samples_to_lines(samples):
    head = {"type": "samples", "p": samples.p, "m": samples.m, "domain": samples.domain}
    lines = [json.dumps(head)]
    for k in range(len(samples)):
        rec = {"point": encode_array(samples.points[k]),
               "value": encode_array(samples.values[k])}
        if samples.has_derivative(k):
            rec["derivative"] = encode_array(samples.derivatives[k])
        lines.append(json.dumps(rec))
    return "\n".join(lines) + "\n"


def _parse_line(text, lineno):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormat(f"malformed JSON ({exc.msg})", lineno) from None


def samples_from_lines(lines):
    lines = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if not lines:
        raise FileFormat("empty samples file", 1)
    lineno, text = lines[0]
    head = _parse_line(text, lineno)
    if not isinstance(head, dict) or head.get("type") != "samples":
        raise FileFormat("first line must be a samples header", lineno)
    p, m = int(_get(head, "p", lineno)), int(_get(head, "m", lineno))
    domain = _get(head, "domain", lineno)
    pts, vals, ders = [], [], []
    nan = np.full((p, m), np.nan, dtype=complex)
    for lineno, text in lines[1:]:
        rec = _parse_line(text, lineno)
        if not isinstance(rec, dict):
            raise FileFormat("sample record must be an object", lineno)
        s = decode_array(_get(rec, "point", lineno), lineno, "point")
        G = np.asarray(decode_array(_get(rec, "value", lineno), lineno, "value"), complex)
        if G.shape != (p, m):
            raise FileFormat(f"value must be {p}x{m}, got {G.shape}", lineno)
        dG = nan
        if "derivative" in rec:
            dG = np.asarray(decode_array(rec["derivative"], lineno, "derivative"), complex)
            if dG.shape != (p, m):
                raise FileFormat(f"derivative must be {p}x{m}, got {dG.shape}", lineno)
        pts.append(complex(s))
        vals.append(G)
        ders.append(dG)
    if not pts:
        raise FileFormat("samples file has a header but no records", lines[-1][0] + 1)
    ders = np.array(ders)
    try:
        return SampleSet(np.array(pts), np.array(vals),
                         ders if np.any(np.isfinite(ders)) else None, domain)
    except ValidationError as exc:
        raise FileFormat(f"invalid samples: {exc}", 1) from None


# -- files --------------------------------------------------------------------

def save(obj, path):
    """Write `obj` to `path` (JSON, or JSON lines for a SampleSet)."""
    if isinstance(obj, SampleSet):
        text = samples_to_lines(obj)
    else:
        text = json.dumps(to_dict(obj)) + "\n"
    _atomic_write(path, text)


def load_dataset(path):
    """Read any dataset file, dispatching on its header tag.

    Raises
    ------
    FileFormat
        Malformed content (with the offending line number) or an unknown
        tag (listing the allowed ones).
    """
    with open(path) as fh:
        text = fh.read()
    first = next((ln for ln in text.splitlines() if ln.strip()), None)
    if first is None:
        raise FileFormat("empty file", 1)
    try:
        head = json.loads(first)
    except json.JSONDecodeError:
        head = None
    if isinstance(head, dict) and head.get("type") == "samples":
        return samples_from_lines(text.splitlines())
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormat(f"malformed JSON ({exc.msg})", exc.lineno) from None
    return from_dict(d)


load = load_dataset
