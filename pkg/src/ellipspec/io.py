"""Deterministic table/record writers with provenance headers, and golden-table diffs.

Numbers are written with 12 significant digits and headers carry no
timestamps, so identical (config, seed) runs produce identical bytes.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

DIGITS = 12


def fmt(x, digits: int = DIGITS) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    try:
        v = float(x)
    except (TypeError, ValueError):
        return str(x)
    if math.isnan(v):
        return "nan"
    return f"{v:.{digits}g}"


def clean(obj, digits: int = DIGITS):
    """JSON-ready copy with floats rounded to ``digits`` significant digits."""
    if isinstance(obj, dict):
        return {str(k): clean(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v, digits) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist(), digits)
    if hasattr(obj, "item"):  # numpy scalar
        return clean(obj.item(), digits)
    v = float(obj)
    if not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return float(f"{v:.{digits}g}")


def config_hash(config: dict) -> str:
    blob = json.dumps(clean(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def provenance(command: str, config: dict, seed: int) -> dict:
    return {"package": "ellipspec", "version": __version__, "command": command,
            "config_sha256": config_hash(config), "seed": int(seed)}


def render_csv(columns, rows, prov: dict) -> str:
    buf = io.StringIO()
    for key in ("package", "version", "command", "config_sha256", "seed"):
        buf.write(f"# {key}: {prov[key]}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    for r in rows:
        wr.writerow([fmt(v) for v in r])
    return buf.getvalue()


def render_json(data, prov: dict) -> str:
    return json.dumps({"provenance": prov, "data": clean(data)}, indent=2, sort_keys=True) + "\n"


def write_text(path, text: str):
    """Write via a temporary sibling so a failed run never leaves a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def read_csv(text: str):
    """(columns, rows) with comment lines skipped."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        return [], []
    return rows[0], rows[1:]


# --- golden comparison -------------------------------------------------------------

@dataclass
class GoldenReport:
    checked: list = field(default_factory=list)
    problems: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.problems

    def text(self) -> str:
        out = [f"{'PASS' if self.passed else 'FAIL'}: {len(self.checked)} files checked, "
               f"{len(self.problems)} problems"]
        out.extend("  " + p for p in self.problems)
        return "\n".join(out) + "\n"


def _as_float(s):
    try:
        return float(s)
    except (TypeError, ValueError):
        return None


def _close(got, want, tol) -> bool:
    rtol, atol = tol
    return abs(got - want) <= atol + rtol * abs(want)


def _cell_ok(got, want, tol) -> bool:
    g, w = _as_float(got), _as_float(want)
    if g is None or w is None:
        return str(got) == str(want)
    if math.isnan(w):
        return math.isnan(g)
    return _close(g, w, tol)


def _tol_for(spec: dict, column: str):
    t = spec.get("fields", {}).get(column, spec.get("default", [0.0, 0.0]))
    return float(t[0]), float(t[1])


def compare_csv(name: str, got_text: str, want_text: str, spec: dict) -> list:
    gc, gr = read_csv(got_text)
    wc, wr = read_csv(want_text)
    if gc != wc:
        return [f"{name}: columns {gc} differ from golden {wc}"]
    out = []
    if len(gr) != len(wr):
        out.append(f"{name}: {len(gr)} rows, golden has {len(wr)}")
    for r, (a, b) in enumerate(zip(gr, wr)):
        for c, col in enumerate(wc):
            x = a[c] if c < len(a) else ""
            y = b[c] if c < len(b) else ""
            tol = _tol_for(spec, col)
            if not _cell_ok(x, y, tol):
                out.append(f"{name}: row {r} column {col!r}: got {x}, golden {y} "
                           f"(rtol {tol[0]:g}, atol {tol[1]:g})")
    return out


def _leaves(obj, path=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _leaves(obj[k], f"{path}.{k}" if path else str(k))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _leaves(v, f"{path}[{i}]")
    else:
        yield path, obj


def _field_of(path: str) -> str:
    last = path.rsplit(".", 1)[-1]
    return last.split("[", 1)[0]


def compare_json(name: str, got_text: str, want_text: str, spec: dict) -> list:
    try:
        got = json.loads(got_text).get("data")
    except (json.JSONDecodeError, AttributeError) as exc:
        return [f"{name}: unreadable JSON ({exc})"]
    want = json.loads(want_text).get("data")
    g = dict(_leaves(got))
    w = dict(_leaves(want))
    out = []
    for p in sorted(set(w) - set(g)):
        out.append(f"{name}: missing field {p}")
    for p in sorted(set(g) - set(w)):
        out.append(f"{name}: unexpected field {p}")
    for p in sorted(set(g) & set(w)):
        a, b = g[p], w[p]
        if isinstance(b, bool) or isinstance(a, bool) or b is None or isinstance(b, str):
            ok = a == b
        elif isinstance(a, (int, float)):
            ok = _close(float(a), float(b), _tol_for(spec, _field_of(p)))
        else:
            ok = False
        if not ok:
            tol = _tol_for(spec, _field_of(p))
            out.append(f"{name}: {p}: got {a}, golden {b} (rtol {tol[0]:g}, atol {tol[1]:g})")
    return out


def golden_diff(results_dir, golden_dir, tolerances: dict) -> GoldenReport:
    """Compare every golden file against its namesake in ``results_dir``."""
    results_dir, golden_dir = Path(results_dir), Path(golden_dir)
    rep = GoldenReport()
    for name in sorted(tolerances):
        want = golden_dir / name
        got = results_dir / name
        rep.checked.append(name)
        if not want.exists():
            rep.problems.append(f"{name}: golden file missing from {golden_dir}")
            continue
        if not got.exists():
            rep.problems.append(f"{name}: missing from results directory {results_dir}")
            continue
        spec = tolerances[name]
        cmp = compare_json if name.endswith(".json") else compare_csv
        rep.problems.extend(cmp(name, got.read_text(), want.read_text(), spec))
    return rep
