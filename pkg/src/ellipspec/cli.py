"""Command-line experiment runner.

Every subcommand validates its configuration before any solve, writes one
table (CSV) or record set (JSON) with a provenance header, and exits with
0 (ok), 1 (numerical failure) or 2 (invalid configuration).  Settings come
from flags, optionally overridden by a ``--config`` file (JSON or TOML).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as eio

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

GOLDEN_DIR = Path(__file__).with_name("golden")

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    def __init__(self, field_name: str, msg: str):
        super().__init__(f"{field_name}: {msg}")
        self.field = field_name


# per-subcommand parameters and their defaults; None means "not set"
_COMMON = {"format": None, "output": None, "seed": 0}
PARAMS = {
    "disk-spectrum": {"boundary": "dirichlet", "count": 4, "parity": "all", "format": "csv"},
    "ball-spectrum": {"count": 6, "format": "csv"},
    "zeros": {"orders": "0..2", "count": 2, "half_integer": False, "format": "csv"},
    "bourget": {"orders": "0..10", "zeros": 20, "half_integer": False, "tolerance": 1e-6,
                "lommel_trials": 10, "format": "json"},
    "schrodinger": {"potential": "harmonic", "h": "0.1", "window": "0,2",
                    "points_per_wavelength": 60, "kinetic_form": None, "modes": 2,
                    "format": "csv"},
    "sturm": {"profile": "circle", "k": "1..3", "h": "0.2,0.1,0.05", "p": 1, "count": 1,
              "window": None, "cells": 400, "format": "csv"},
    "oval": {"profile": "circle", "boundary": "double-dirichlet", "h": "1.0", "K": 16,
             "cells": 400, "count": 6, "window": None, "backend": "galerkin", "spacing": 0.02,
             "format": "json"},
    "branches": {"profile": "circle", "boundary": "dirichlet", "h_from": 1.0, "h_to": 0.05,
                 "h_points": 29, "count": 6, "K": 16, "cells": 400, "format": "csv"},
    "crossing": {"profile": "circle", "boundary": "dirichlet", "window": "0.1,0.9",
                 "odd_index": 0, "even_index": None, "K": 16, "cells": 400, "tol": 1e-3,
                 "format": "json"},
    "ellipsoid": {"profile": "circle", "m": "0..4", "h": "1.0,0.5,0.25", "count": 4, "K": 12,
                  "cells": 400, "limits": False, "format": "json"},
    "scan": {"profile": "circle", "boundary": "dirichlet", "samples": 10, "range": "0.2,1.0",
             "h": None, "count": 8, "tol": 1e-4, "K": 16, "cells": 1600, "format": "json"},
    "golden-check": {"results": None, "run": False, "golden": None, "format": "text"},
}
JSON_ONLY = {"bourget", "crossing", "scan"}


@dataclass
class RunConfig:
    """Validated settings of one run.  ``params`` holds the subcommand fields."""

    subcommand: str
    params: dict = field(default_factory=dict)
    output: str | None = None
    format: str = "csv"
    seed: int = 0

    def hashed(self) -> dict:
        # the output path does not change results, so it stays out of the hash
        return {"subcommand": self.subcommand, "params": self.params, "format": self.format,
                "seed": self.seed}

    @property
    def profile(self):
        return self.params.get("profile")

    @property
    def boundary(self):
        return self.params.get("boundary")


# --- parsing of list / range values --------------------------------------------------

def parse_floats(name: str, value, positive: bool = True) -> list:
    if value is None:
        raise ConfigError(name, "a value is required")
    items = value if isinstance(value, (list, tuple)) else str(value).replace(" ", "").split(",")
    out = []
    for s in items:
        try:
            v = float(s)
        except (TypeError, ValueError):
            raise ConfigError(name, f"not a number: {s!r}") from None
        if not math.isfinite(v):
            raise ConfigError(name, f"must be finite, got {s!r}")
        if positive and v <= 0:
            raise ConfigError(name, f"must be positive, got {v}")
        out.append(v)
    if not out:
        raise ConfigError(name, "empty list")
    return out


def parse_ints(name: str, value, lo: int = 0) -> list:
    """'0..4' (inclusive), '1,2,5', a list, or a single integer."""
    if isinstance(value, int) and not isinstance(value, bool):
        items = [value]
    elif isinstance(value, (list, tuple)):
        items = list(value)
    else:
        s = str(value).replace(" ", "")
        if ".." in s:
            a, _, b = s.partition("..")
            try:
                a, b = int(a), int(b)
            except ValueError:
                raise ConfigError(name, f"malformed range {value!r}; use a..b") from None
            if b < a:
                raise ConfigError(name, f"empty range {value!r}")
            items = list(range(a, b + 1))
        else:
            items = s.split(",")
    out = []
    for v in items:
        try:
            iv = int(v)
        except (TypeError, ValueError):
            raise ConfigError(name, f"not an integer: {v!r}") from None
        if iv < lo:
            raise ConfigError(name, f"must be >= {lo}, got {iv}")
        out.append(iv)
    return out


def parse_window(name: str, value):
    if value is None:
        return None
    w = parse_floats(name, value, positive=False)
    if len(w) != 2 or not w[0] < w[1]:
        raise ConfigError(name, f"need two increasing numbers a,b, got {value!r}")
    return w


def _int(name, value, lo=None, hi=None):
    if isinstance(value, bool):
        raise ConfigError(name, f"not an integer: {value!r}")
    try:
        v = int(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"not an integer: {value!r}") from None
    if isinstance(value, float) and v != value:
        raise ConfigError(name, f"not an integer: {value!r}")
    if lo is not None and v < lo:
        raise ConfigError(name, f"must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(name, f"must be <= {hi}, got {v}")
    return v


def _float(name, value, positive=True):
    return parse_floats(name, [value], positive)[0]


def _bool(name, value):
    if isinstance(value, bool):
        return value
    s = str(value).lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(name, f"not a boolean: {value!r}")


def _choice(name, value, options):
    v = str(value).lower()
    if v not in options:
        raise ConfigError(name, f"{value!r} is not one of {sorted(options)}")
    return v


def _profile(value):
    from .profiles import ProfileError, get_profile
    try:
        p = get_profile(str(value))
        p.validate()
    except (ProfileError, ValueError) as exc:
        raise ConfigError("profile", str(exc)) from None
    return str(value)


def _geometric_grid(h_from, h_to, n):
    return np.geomspace(h_from, h_to, n)


def validate(sub: str, raw: dict) -> RunConfig:
    """Turn merged raw settings into a RunConfig, or raise ConfigError."""
    if sub not in PARAMS:
        raise ConfigError("subcommand", f"unknown subcommand {sub!r}")
    known = set(PARAMS[sub]) | set(_COMMON)
    for k in raw:
        if k not in known:
            raise ConfigError(k, f"unknown setting for {sub}")
    v = {**_COMMON, **PARAMS[sub], **{k: x for k, x in raw.items() if x is not None}}
    fmt_options = {"text"} if sub == "golden-check" else {"csv", "json"}
    out_format = _choice("format", v.pop("format"), fmt_options)
    if sub in JSON_ONLY and out_format != "json":
        raise ConfigError("format", f"{sub} writes JSON only")
    output = v.pop("output")
    seed = _int("seed", v.pop("seed"), lo=0)
    p = {}
    if "profile" in v:
        p["profile"] = _profile(v["profile"])
    if sub == "disk-spectrum":
        p["boundary"] = _choice("boundary", v["boundary"], {"dirichlet", "neumann"})
        p["count"] = _int("count", v["count"], 1, 500)
        p["parity"] = _choice("parity", v["parity"], {"all", "odd", "even"})
    elif sub == "ball-spectrum":
        p["count"] = _int("count", v["count"], 1, 500)
    elif sub == "zeros":
        p["orders"] = parse_ints("orders", v["orders"])
        p["count"] = _int("count", v["count"], 1, 200)
        p["half_integer"] = _bool("half_integer", v["half_integer"])
    elif sub == "bourget":
        orders = parse_ints("orders", v["orders"])
        if orders != list(range(orders[0], orders[-1] + 1)) or orders[0] != 0:
            raise ConfigError("orders", "must be a range starting at 0, e.g. 0..10")
        p["max_order"] = _int("orders", orders[-1], 0, 30)
        p["zeros"] = _int("zeros", v["zeros"], 1, 50)
        p["half_integer"] = _bool("half_integer", v["half_integer"])
        p["tolerance"] = _float("tolerance", v["tolerance"])
        p["lommel_trials"] = _int("lommel_trials", v["lommel_trials"], 0, 1000)
    elif sub == "schrodinger":
        pot = str(v["potential"]).lower()
        if pot not in ("harmonic", "quartic"):
            base, _, arg = pot.partition(":")
            if base != "power" or _int("potential", arg or "x", 2) % 2:
                raise ConfigError("potential", f"{v['potential']!r}: use harmonic, quartic or "
                                  "power:p with even p >= 2")
        p["potential"] = pot
        p["h"] = parse_floats("h", v["h"])
        p["window"] = parse_window("window", v["window"])
        p["points_per_wavelength"] = _int("points_per_wavelength", v["points_per_wavelength"], 8)
        p["kinetic_form"] = (None if v["kinetic_form"] is None
                             else _float("kinetic_form", v["kinetic_form"], positive=False))
        p["modes"] = _int("modes", v["modes"], 0)
        if p["kinetic_form"] is not None and out_format != "json":
            raise ConfigError("format", "kinetic-form output is JSON only")
    elif sub == "sturm":
        p["k"] = parse_ints("k", v["k"], lo=1)
        p["h"] = parse_floats("h", v["h"])
        p["p"] = _int("p", v["p"], 1, 2)
        p["count"] = _int("count", v["count"], 1)
        p["window"] = parse_window("window", v["window"])
        p["cells"] = _int("cells", v["cells"], 72, 20000)
    elif sub == "oval":
        p["boundary"] = _choice("boundary", v["boundary"], {
            "dirichlet", "neumann", "dirichlet-curved", "dirichlet-straight",
            "double-dirichlet", "double-neumann"})
        p["h"] = parse_floats("h", v["h"])
        p["K"] = _int("K", v["K"], 2, 128)
        p["cells"] = _int("cells", v["cells"], 72, 20000)
        p["count"] = _int("count", v["count"], 1)
        p["window"] = parse_window("window", v["window"])
        p["backend"] = _choice("backend", v["backend"], {"galerkin", "fd"})
        p["spacing"] = _float("spacing", v["spacing"])
        if p["backend"] == "fd":
            if p["profile"] != "circle" or p["boundary"] != "double-dirichlet":
                raise ConfigError("backend", "the fd backend covers the circle profile with "
                                  "boundary double-dirichlet only")
            if any(not 0.2 <= h <= 1.0 for h in p["h"]):
                raise ConfigError("h", "the fd backend supports h in [0.2, 1]")
            if p["spacing"] > 0.02:
                raise ConfigError("spacing", "must be <= 0.02")
            if p["window"] is not None:
                raise ConfigError("window", "the fd backend takes count, not a window")
    elif sub == "branches":
        p["boundary"] = _choice("boundary", v["boundary"], {"dirichlet", "neumann"})
        h_from = _float("h_from", v["h_from"])
        h_to = _float("h_to", v["h_to"])
        n = _int("h_points", v["h_points"], 3, 2000)
        if not h_from > h_to:
            raise ConfigError("h_from", f"h range must decrease: h_from={h_from} <= h_to={h_to}")
        if (h_to / h_from) ** (1.0 / (n - 1)) < 0.7:
            raise ConfigError("h_points", "grid too coarse: neighbouring h ratio below 0.7")
        p.update(h_from=h_from, h_to=h_to, h_points=n)
        p["count"] = _int("count", v["count"], 1, 40)
        p["K"] = _int("K", v["K"], 2, 128)
        p["cells"] = _int("cells", v["cells"], 72, 20000)
    elif sub == "crossing":
        p["boundary"] = _choice("boundary", v["boundary"], {"dirichlet", "neumann"})
        w = parse_window("window", v["window"])
        if w[0] <= 0:
            raise ConfigError("window", "h window must be positive")
        p["window"] = w
        p["odd_index"] = _int("odd_index", v["odd_index"], 0)
        p["even_index"] = None if v["even_index"] is None else _int("even_index", v["even_index"], 0)
        p["K"] = _int("K", v["K"], 2, 128)
        p["cells"] = _int("cells", v["cells"], 72, 20000)
        p["tol"] = _float("tol", v["tol"])
    elif sub == "ellipsoid":
        p["m"] = parse_ints("m", v["m"])
        p["h"] = parse_floats("h", v["h"])
        p["count"] = _int("count", v["count"], 1)
        p["K"] = _int("K", v["K"], 2, 64)
        p["cells"] = _int("cells", v["cells"], 72, 20000)
        p["limits"] = _bool("limits", v["limits"])
    elif sub == "scan":
        p["boundary"] = _choice("boundary", v["boundary"], {"dirichlet", "neumann"})
        p["samples"] = _int("samples", v["samples"], 0, 1000)
        r = parse_window("range", v["range"])
        if r[0] <= 0:
            raise ConfigError("range", "h range must be positive")
        p["range"] = r
        p["h"] = [] if v["h"] is None else parse_floats("h", v["h"])
        p["count"] = _int("count", v["count"], 2)
        p["tol"] = _float("tol", v["tol"])
        p["K"] = _int("K", v["K"], 2, 128)
        p["cells"] = _int("cells", v["cells"], 72, 20000)
        if p["samples"] == 0 and not p["h"]:
            raise ConfigError("samples", "nothing to scan: give samples > 0 or explicit h values")
    elif sub == "golden-check":
        if v["results"] is None:
            raise ConfigError("results", "a results directory is required")
        p["results"] = str(v["results"])
        p["run"] = _bool("run", v["run"])
        p["golden"] = str(v["golden"] or GOLDEN_DIR)
    return RunConfig(sub, p, output, out_format, seed)


# --- runners --------------------------------------------------------------------------

@dataclass
class Output:
    columns: list | None = None
    rows: list | None = None
    data: object = None
    status: int = EXIT_OK
    message: str = ""


def _workers() -> int:
    from .branches import workers_from_env
    return workers_from_env()


def _pool_map(fn, items):
    """Ordered map over independent jobs; ELLIPSPEC_WORKERS threads."""
    items = list(items)
    n = min(_workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _mesh(cells):
    from .fem import graded_mesh
    return graded_mesh(cells)


def _run_disk(p, seed):
    from .specfun import disk_spectrum
    modes = disk_spectrum(p["boundary"], p["parity"], 2 * p["count"] + 2)
    levels = []
    for d in modes:
        if levels and abs(d.lam - levels[-1][0]) <= 1e-10 * max(1.0, d.lam):
            levels[-1][2].append(d)
        else:
            levels.append([d.lam, d, [d]])
    rows = []
    for i, (lam, first, group) in enumerate(levels[:p["count"]]):
        rows.append((i, lam, len(group), first.m, first.n))
    return Output(["index", "eigenvalue", "multiplicity", "m", "n"], rows)


def _run_ball(p, seed):
    from .specfun import ball_spectrum
    rows = [(i, b.lam, b.multiplicity, b.ell, b.n) for i, b in enumerate(ball_spectrum(p["count"]))]
    return Output(["index", "eigenvalue", "multiplicity", "ell", "n"], rows)


def _run_zeros(p, seed):
    from .specfun import bessel_derivative_zeros, bessel_zeros
    rows = []
    for m in p["orders"]:
        nu = m + 0.5 if p["half_integer"] else float(m)
        z = bessel_zeros(nu, p["count"]).zeros
        dz = bessel_derivative_zeros(nu, p["count"]).derivative_zeros
        rows.extend((nu, n + 1, float(z[n]), float(dz[n])) for n in range(p["count"]))
    return Output(["order", "index", "zero", "zero_of_derivative"], rows)


def lommel_draws(trials: int, seed: int):
    """(k, m, z) with k, m in 1..5 and z uniform in [k + m, 30]."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(trials):
        k, m = (int(x) for x in rng.integers(1, 6, size=2))
        out.append((k, m, float(rng.uniform(k + m, 30.0))))
    return out


def _run_bourget(p, seed):
    from .specfun import bourget_check, lommel_identity_residual
    rep = bourget_check(p["max_order"], p["zeros"], p["half_integer"], p["tolerance"])
    trials = []
    for k, m, z in lommel_draws(p["lommel_trials"], seed):
        trials.append({"k": k, "m": m, "z": z, "residual": lommel_identity_residual(k, m, z)})
    worst = max((t["residual"] for t in trials), default=0.0)
    data = {"bourget": rep.as_dict(), "lommel": {"trials": trials, "max_residual": worst,
                                                  "tolerance": 1e-9, "passed": worst < 1e-9}}
    ok = rep.passed and worst < 1e-9
    msg = "" if ok else (f"Bourget separation {rep.min_distance:.3e} <= {rep.tolerance:g}"
                         if not rep.passed else f"Lommel residual {worst:.3e} >= 1e-9")
    return Output(data=data, status=EXIT_OK if ok else EXIT_NUMERIC, message=msg)


def _potential(name):
    from . import schrodinger1d as s1
    if name == "harmonic":
        return s1.harmonic()
    if name == "quartic":
        return s1.quartic()
    return s1.power_potential(int(name.partition(":")[2]))


def _run_schrodinger(p, seed):
    from . import schrodinger1d as s1
    V = _potential(p["potential"])
    a, b = p["window"]

    def job(h):
        disc = s1.default_discretization(V, h, b, p["points_per_wavelength"])
        op = s1.assemble_ph(V, disc, h, window_top=b)
        return s1.window_spectrum(op, (a, b))

    spectra = _pool_map(job, p["h"])
    rows = [r for s in spectra for r in s1.spectrum_rows(s)]
    out = Output(["h", "index", "eigenvalue"], rows)
    if p["kinetic_form"] is not None:
        E0 = p["kinetic_form"]
        forms = []
        for s in spectra:
            B = s1.b_matrix(s, E0, p["modes"])
            forms.append({"h": s.h, "E0": E0, "beta": s1.liouville_beta(V, E0),
                          "diagonal": B.diagonal, "max_offdiag": B.max_offdiag,
                          "eigenvalues": B.eigenvalues})
        out.data = {"records": [dict(zip(out.columns, r)) for r in rows], "kinetic_form": forms}
    return out


def _run_sturm(p, seed):
    from . import sturm1d
    from .profiles import get_profile
    prof = get_profile(p["profile"])
    mesh = _mesh(p["cells"])
    jobs = [(k, h) for k in p["k"] for h in p["h"]]

    def job(kh):
        k, h = kh
        op = sturm1d.assemble_akh(prof, k, h, p["p"], mesh)
        if p["window"] is not None:
            return sturm1d.mode_spectrum(op, p["window"])
        return sturm1d.lowest(op, p["count"])

    rows = [r for s in _pool_map(job, jobs) for r in s.rows()]
    return Output(["k", "h", "index", "eigenvalue", "threshold", "gap"], rows)


REC_COLUMNS = ["h", "boundary", "parity", "index", "eigenvalue", "residual"]


def _run_oval(p, seed):
    from . import oval2d
    from .profiles import get_profile
    if p["backend"] == "fd":
        res = _pool_map(lambda h: oval2d.fd_oracle_ellipse(h, p["spacing"], p["count"]), p["h"])
        rows = []
        for r in res:
            for i in range(r.extrapolated.size):
                rows.append((r.h, "double-dirichlet", None, i, r.extrapolated[i], None))
        return Output(REC_COLUMNS, rows)
    prof = get_profile(p["profile"])
    mesh = _mesh(p["cells"])
    h0 = p["h"][0]
    bc = p["boundary"]
    if bc.startswith("double-"):
        base = oval2d.double_oval(prof, bc.split("-", 1)[1], h0, p["K"], mesh)
        at = lambda h: {k: s.with_h(h) for k, s in base.items()}
    else:
        base = oval2d.assemble_qh(prof, bc, h0, p["K"], mesh)
        at = base.with_h
    if p["window"] is not None:
        job = lambda h: oval2d.solve_smallest(at(h), window=tuple(p["window"]))
    else:
        job = lambda h: oval2d.solve_smallest(at(h), count=p["count"])
    rows = []
    for res in _pool_map(job, p["h"]):
        rows.extend(tuple(r[c] for c in REC_COLUMNS) for r in res.records())
    return Output(REC_COLUMNS, rows)


def _run_branches(p, seed):
    from . import branches
    from .profiles import get_profile
    hs = _geometric_grid(p["h_from"], p["h_to"], p["h_points"])
    bs = branches.track(get_profile(p["profile"]), p["boundary"], hs, p["count"], p["K"],
                        _mesh(p["cells"]))
    rows = [r for b in bs for r in b.rows()]
    out = Output(list(branches.BRANCH_COLUMNS), rows)
    limits = []
    for b in bs:
        lim = b.limit
        limits.append({"parity": b.parity, "branch_id": b.branch_id,
                       "limit": lim.limit, "alpha": lim.alpha, "threshold": lim.threshold,
                       "mismatch": lim.mismatch, "matched": lim.matched,
                       "cross_parity": lim.cross_parity,
                       "fh_consistent": bool(np.all(b.fh_consistent())),
                       "monotone": b.is_monotone(), "flags": list(b.flags)})
    out.data = {"branches": [dict(zip(out.columns, r)) for r in rows], "limits": limits}
    return out


def _run_crossing(p, seed):
    from . import branches
    from .profiles import get_profile
    cert = branches.find_crossing(get_profile(p["profile"]), p["boundary"], tuple(p["window"]),
                                  p["odd_index"], p["even_index"], p["K"], _mesh(p["cells"]),
                                  tol=p["tol"])
    data = json.loads(cert.to_json())
    if not cert.found:
        return Output(data=data, status=EXIT_NUMERIC,
                      message=f"no sign change of the branch gap in h window {p['window']}")
    return Output(data=data)


def _run_ellipsoid(p, seed):
    from . import ellipsoid3d
    from .profiles import get_profile
    prof = get_profile(p["profile"])
    mesh = _mesh(p["cells"])

    def job(m):
        s = ellipsoid3d.assemble_sector(m, p["h"][0], prof, p["K"], mesh)
        res = [ellipsoid3d.sector_solve_2d(m, h, p["count"], system=s) for h in p["h"]]
        lim = ellipsoid3d.sector_branch_limit(m, profile=prof, K=min(p["K"], 8), mesh=mesh) \
            if p["limits"] else None
        return res, lim

    rows, limits = [], []
    for res, lim in _pool_map(job, p["m"]):
        for r in res:
            T = float(r.thresholds[0])
            for rec in r.records():
                rows.append((rec["m"], rec["h"], rec["index"], rec["eigenvalue"], T,
                             (rec["eigenvalue"] - T) / T))
        if lim is not None:
            limits.append({"m": lim.m, "limit": lim.limit, "threshold": lim.threshold,
                           "mismatch": lim.mismatch, "alpha": lim.alpha})
    cols = ["m", "h", "index", "eigenvalue", "threshold", "limit_mismatch"]
    out = Output(cols, rows)
    if p["limits"]:
        out.data = {"records": [dict(zip(cols, r)) for r in rows], "limits": limits,
                    "cross_sector_gap": ellipsoid3d.cross_sector_gap(max(5, max(p["m"])))}
    return out


def scan_points(samples: int, lo: float, hi: float, seed: int, extra=()):
    rng = np.random.default_rng(seed)
    return sorted(set([float(x) for x in rng.uniform(lo, hi, samples)] + [float(h) for h in extra]))


def _run_scan(p, seed):
    from . import branches
    from .profiles import get_profile
    hs = scan_points(p["samples"], *p["range"], seed, p["h"])
    pts = branches.simplicity_scan(get_profile(p["profile"]), p["boundary"], hs, p["count"],
                                   p["tol"], p["K"], _mesh(p["cells"]))
    data = []
    for pt in pts:
        flagged = []
        for f in pt.flagged:
            c = f["certificate"]
            flagged.append({"i": f["i"], "j": f["j"], "gap": f["gap"], "parities": list(f["parities"]),
                            "certificate": None if c is None else json.loads(c.to_json())})
        data.append({"h": pt.h, "eigenvalues": pt.eigenvalues, "parities": list(pt.parities),
                     "min_gap": pt.min_gap, "flagged": flagged})
    return Output(data={"points": data})


# name -> argv of the committed golden tables
GOLDEN_SUITE = {
    "disk_dirichlet.csv": ["disk-spectrum", "--bc", "dirichlet", "--count", "8"],
    "disk_neumann.csv": ["disk-spectrum", "--bc", "neumann", "--count", "8"],
    "ball.csv": ["ball-spectrum", "--count", "8"],
    "zeros.csv": ["zeros", "--orders", "0..3", "--count", "3"],
    "bourget.json": ["bourget", "--orders", "0..10", "--zeros", "20"],
    "harmonic.csv": ["schrodinger", "--potential", "harmonic", "--h", "0.1", "--window", "0,2"],
    "sturm.csv": ["sturm", "--k", "1..3", "--h", "0.2,0.1"],
    "oval.json": ["oval", "--bc", "double-dirichlet", "--h", "1.0,0.5", "--count", "4",
                  "--cells", "200", "--K", "8"],
    "ellipsoid.json": ["ellipsoid", "--m", "0..1", "--h", "1.0", "--count", "2", "--K", "6",
                       "--cells", "200"],
}


def _run_golden(p, seed):
    results = Path(p["results"])
    golden = Path(p["golden"])
    tol_file = golden / "tolerances.json"
    if not tol_file.exists():
        raise ConfigError("golden", f"no tolerances.json in {golden}")
    tolerances = json.loads(tol_file.read_text())
    if p["run"]:
        for name, argv in GOLDEN_SUITE.items():
            code = main(argv + ["--output", str(results / name)])
            if code != EXIT_OK:
                return Output(status=code, message=f"producing {name} failed with exit {code}")
    rep = eio.golden_diff(results, golden, tolerances)
    return Output(data=rep.text(), status=EXIT_OK if rep.passed else EXIT_NUMERIC,
                  message="" if rep.passed else "golden tables differ")


RUNNERS = {
    "disk-spectrum": _run_disk, "ball-spectrum": _run_ball, "zeros": _run_zeros,
    "bourget": _run_bourget, "schrodinger": _run_schrodinger, "sturm": _run_sturm,
    "oval": _run_oval, "branches": _run_branches, "crossing": _run_crossing,
    "ellipsoid": _run_ellipsoid, "scan": _run_scan, "golden-check": _run_golden,
}


def render(config: RunConfig, out: Output) -> str:
    if config.subcommand == "golden-check":
        return out.data
    prov = eio.provenance(config.subcommand, config.hashed(), config.seed)
    if config.format == "csv":
        return eio.render_csv(out.columns, out.rows, prov)
    data = out.data
    if data is None:
        data = {"records": [dict(zip(out.columns, r)) for r in out.rows]}
    return eio.render_json(data, prov)


def _module_context(exc) -> str:
    mod = "ellipspec"
    for frame, _ in traceback.walk_tb(exc.__traceback__):
        name = frame.f_globals.get("__name__", "")
        if name.startswith("ellipspec.") and name != __name__:
            mod = name
    return mod


def run(config: RunConfig, stdout=None) -> int:
    """Execute a validated config; write its artifact; return the exit status."""
    stdout = stdout or sys.stdout
    try:
        out = RUNNERS[config.subcommand](config.params, config.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # solver failures carry the module that raised them
        print(f"{_module_context(exc)}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if out.status == EXIT_CONFIG:
        return out.status
    text = render(config, out) if (out.rows is not None or out.data is not None) else ""
    if config.output and config.subcommand != "golden-check":
        eio.write_text(config.output, text)
    elif text:
        stdout.write(text)
    if out.message:
        print(f"{config.subcommand}: {out.message}", file=sys.stderr)
    return out.status


# --- argument parsing -------------------------------------------------------------------

def load_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError("config", f"file not found: {path}")
    text = path.read_text()
    try:
        if path.suffix.lower() == ".toml":
            data = tomllib.loads(text)
        else:
            data = json.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError("config", f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a table of settings")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


_FLAG_HELP = {
    "boundary": "boundary condition", "count": "number of eigenvalues / levels",
    "profile": "profile id: circle, bulged or bulged:a", "h": "comma-separated h values",
    "window": "a,b", "K": "transversal modes", "cells": "mesh cells",
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ellipspec", description=__doc__.splitlines()[0],
                                 allow_abbrev=False)
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name, params in PARAMS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON or TOML file; its settings override flags")
        sp.add_argument("--output", "-o", help="output file (default: stdout)")
        sp.add_argument("--seed", help="seed for randomised draws (default 0)")
        if name != "golden-check":
            sp.add_argument("--format", choices=("csv", "json"))
        for key, default in params.items():
            if key == "format":
                continue
            flag = "--" + key.replace("_", "-")
            names = [flag, "--bc"] if key == "boundary" else [flag]
            if isinstance(default, bool):
                sp.add_argument(*names, dest=key, action="store_const", const=True,
                                help=_FLAG_HELP.get(key))
            else:
                sp.add_argument(*names, dest=key, help=_FLAG_HELP.get(key, f"default {default}"))
        if name == "golden-check":
            sp.add_argument("results_pos", nargs="?", metavar="RESULTS")
    return ap


def config_from_args(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    raw = {k: v for k, v in vars(args).items() if v is not None}
    sub = raw.pop("subcommand")
    cfg_path = raw.pop("config", None)
    if "results_pos" in raw:
        raw.setdefault("results", raw.pop("results_pos"))
    if cfg_path is not None:
        file_cfg = load_config_file(cfg_path)
        declared = file_cfg.pop("subcommand", sub)
        if declared != sub:
            raise ConfigError("subcommand", f"config file is for {declared!r}, not {sub!r}")
        raw.update(file_cfg)
    return validate(sub, raw)


def main(argv=None) -> int:
    try:
        config = config_from_args(sys.argv[1:] if argv is None else list(argv))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # argparse usage errors
        return EXIT_CONFIG if exc.code else EXIT_OK
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
