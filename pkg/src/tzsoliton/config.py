"""Strict run-configuration parsing for the batch front-end.

The config is one JSON document with sections background / solitons / grid
/ verify / velocities / scan / output.  Validation is strict: unknown keys
are rejected, every complex number must be a [re, im] pair, and physical
parameters have no defaults (the single exception is the vacuum constant
c = 1).  Errors name the offending key so scripts can react to them.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .background import BackgroundData
from .dressing import SolitonConfig
from .exceptions import ConfigError
from .grid import GridSpec
from .spectral_curve import SpectralPoint, VacuumBackground
from .theta import PeriodMatrix

_TOP_KEYS = {"background", "solitons", "grid", "verify", "velocities", "scan", "output"}
_BG_KEYS = {"genus", "c", "U", "V", "zD", "prym"}
_SOL_KEYS = {"placement", "lambdas", "points", "C"}
_GRID_KEYS = {"x0", "x1", "t0", "t1", "nx", "nt", "frame"}
_VERIFY_KEYS = {
    "mode", "tol_lightcone", "tol_lab", "tol_lax", "tol_residue", "tol_route",
    "goursat", "field_csv",
}
_GOURSAT_KEYS = {"x0", "x1", "t0", "t1", "nx", "nt", "refinements"}
_VEL_KEYS = {"epsilons"}
_SCAN_KEYS = {"threshold_rel"}
_OUT_KEYS = {"path"}


def _reject_unknown(section: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _complex(value, where: str) -> complex:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(p, (int, float)) and not isinstance(p, bool) for p in value)
    ):
        raise ConfigError(f"{where} must be a complex [re, im] pair")
    return complex(float(value[0]), float(value[1]))


def _real(value, where: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{where} must be a real number")
    return float(value)


def _int(value, where: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{where} must be an integer")
    return value


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing key '{key}' in {where}")
    return section[key]


@dataclass(frozen=True)
class VerifyOptions:
    mode: str = "auto"
    tol_lightcone: float | None = None   # None: mode-dependent default
    tol_lab: float | None = None
    tol_lax: float = 1e-12
    tol_residue: float = 1e-8
    tol_route: float = 1e-9
    goursat: GridSpec = GridSpec(0.0, 2.0, 0.0, 2.0, 33, 33)
    goursat_refinements: int = 3
    field_csv: str | None = None


@dataclass(frozen=True)
class RunConfig:
    background: BackgroundData
    solitons: SolitonConfig | None = None
    grid: GridSpec | None = None
    frame: str = "lightcone"
    verify: VerifyOptions = field(default_factory=VerifyOptions)
    epsilons: tuple = (0.0,)
    scan_threshold_rel: float = 1e-12
    output_path: str | None = None

    def provider(self) -> VacuumBackground:
        """Background provider required by the dressing; vacuum only."""
        if not self.background.is_vacuum:
            raise ConfigError(
                "soliton dressing requires the vacuum background (genus 0, c = 1)"
            )
        return VacuumBackground()


def _parse_background(raw) -> BackgroundData:
    if raw == "vacuum":
        return BackgroundData()
    if not isinstance(raw, dict):
        raise ConfigError("background must be \"vacuum\" or an object")
    _reject_unknown(raw, _BG_KEYS, "background")
    g = _int(_require(raw, "genus", "background"), "background.genus")
    c = _complex(raw["c"], "background.c") if "c" in raw else complex(1.0)
    if g == 0:
        extra = sorted(set(raw) & {"U", "V", "zD", "prym"})
        if extra:
            raise ConfigError(
                f"genus-0 background takes no key(s): {', '.join(extra)}"
            )
        return BackgroundData(genus=0, c=c)
    vecs = {}
    for name in ("U", "V", "zD"):
        rawv = _require(raw, name, "background")
        if not isinstance(rawv, list):
            raise ConfigError(f"background.{name} must be a list of [re, im] pairs")
        vecs[name] = tuple(
            _complex(v, f"background.{name}[{i}]") for i, v in enumerate(rawv)
        )
    rawm = _require(raw, "prym", "background")
    if not isinstance(rawm, list) or not all(isinstance(r, list) for r in rawm):
        raise ConfigError("background.prym must be a matrix of [re, im] pairs")
    B = [
        [_complex(v, f"background.prym[{i}][{j}]") for j, v in enumerate(row)]
        for i, row in enumerate(rawm)
    ]
    return BackgroundData(genus=g, c=c, U=vecs["U"], V=vecs["V"], zD=vecs["zD"],
                          prym=PeriodMatrix(B))


def _parse_solitons(raw) -> SolitonConfig:
    if not isinstance(raw, dict):
        raise ConfigError("solitons must be an object")
    _reject_unknown(raw, _SOL_KEYS, "solitons")
    placement = _require(raw, "placement", "solitons")
    if placement not in ("canonical", "explicit"):
        raise ConfigError("solitons.placement must be 'canonical' or 'explicit'")
    rawC = _require(raw, "C", "solitons")
    if not isinstance(rawC, list) or not rawC:
        raise ConfigError("solitons.C must be a nonempty list of [re, im] pairs")
    C = tuple(_complex(c, f"solitons.C[{i}]") for i, c in enumerate(rawC))
    if placement == "canonical":
        rawl = _require(raw, "lambdas", "solitons")
        if "points" in raw:
            raise ConfigError("solitons.points is only valid with explicit placement")
        if not isinstance(rawl, list) or not rawl:
            raise ConfigError("solitons.lambdas must be a nonempty list of [re, im] pairs")
        lams = tuple(_complex(l, f"solitons.lambdas[{i}]") for i, l in enumerate(rawl))
        return SolitonConfig.canonical(lams, C)
    rawp = _require(raw, "points", "solitons")
    if "lambdas" in raw:
        raise ConfigError("solitons.lambdas is only valid with canonical placement")
    if not isinstance(rawp, list) or not rawp:
        raise ConfigError("solitons.points must be a nonempty list of point pairs")
    pts = []
    for i, pair in enumerate(rawp):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigError(f"solitons.points[{i}] must be a [Lambda, Lambda*] pair")
        pts.append(
            (
                SpectralPoint(_complex(pair[0], f"solitons.points[{i}][0]")),
                SpectralPoint(_complex(pair[1], f"solitons.points[{i}][1]")),
            )
        )
    return SolitonConfig.explicit(tuple(pts), C)


def _parse_grid(raw) -> tuple[GridSpec, str]:
    if not isinstance(raw, dict):
        raise ConfigError("grid must be an object")
    _reject_unknown(raw, _GRID_KEYS, "grid")
    vals = {k: _real(_require(raw, k, "grid"), f"grid.{k}") for k in ("x0", "x1", "t0", "t1")}
    nx = _int(_require(raw, "nx", "grid"), "grid.nx")
    nt = _int(_require(raw, "nt", "grid"), "grid.nt")
    frame = raw.get("frame", "lightcone")
    if frame not in ("lightcone", "lab"):
        raise ConfigError("grid.frame must be 'lightcone' or 'lab'")
    try:
        spec = GridSpec(vals["x0"], vals["x1"], vals["t0"], vals["t1"], nx, nt)
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc
    return spec, frame


def _parse_verify(raw) -> VerifyOptions:
    if not isinstance(raw, dict):
        raise ConfigError("verify must be an object")
    _reject_unknown(raw, _VERIFY_KEYS, "verify")
    kwargs = {}
    if "mode" in raw:
        if raw["mode"] not in ("auto", "analytic", "stencil"):
            raise ConfigError("verify.mode must be 'auto', 'analytic' or 'stencil'")
        kwargs["mode"] = raw["mode"]
    for key in ("tol_lightcone", "tol_lab", "tol_lax", "tol_residue", "tol_route"):
        if key in raw:
            kwargs[key] = _real(raw[key], f"verify.{key}")
    if "goursat" in raw:
        g = raw["goursat"]
        if not isinstance(g, dict):
            raise ConfigError("verify.goursat must be an object")
        _reject_unknown(g, _GOURSAT_KEYS, "verify.goursat")
        bounds = {k: _real(_require(g, k, "verify.goursat"), f"verify.goursat.{k}")
                  for k in ("x0", "x1", "t0", "t1")}
        nx = _int(_require(g, "nx", "verify.goursat"), "verify.goursat.nx")
        nt = _int(_require(g, "nt", "verify.goursat"), "verify.goursat.nt")
        try:
            kwargs["goursat"] = GridSpec(bounds["x0"], bounds["x1"], bounds["t0"],
                                         bounds["t1"], nx, nt)
        except ValueError as exc:
            raise ConfigError(f"verify.goursat: {exc}") from exc
        if "refinements" in g:
            kwargs["goursat_refinements"] = _int(g["refinements"],
                                                 "verify.goursat.refinements")
    if "field_csv" in raw:
        if not isinstance(raw["field_csv"], str):
            raise ConfigError("verify.field_csv must be a path string")
        kwargs["field_csv"] = raw["field_csv"]
    return VerifyOptions(**kwargs)


def parse_config(doc: dict) -> RunConfig:
    """Validate a parsed JSON document into a RunConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    _reject_unknown(doc, _TOP_KEYS, "config")
    background = _parse_background(_require(doc, "background", "config"))
    solitons = _parse_solitons(doc["solitons"]) if "solitons" in doc else None
    grid, frame = (None, "lightcone")
    if "grid" in doc:
        grid, frame = _parse_grid(doc["grid"])
    verify = _parse_verify(doc["verify"]) if "verify" in doc else VerifyOptions()
    epsilons = (0.0,)
    if "velocities" in doc:
        v = doc["velocities"]
        if not isinstance(v, dict):
            raise ConfigError("velocities must be an object")
        _reject_unknown(v, _VEL_KEYS, "velocities")
        raweps = _require(v, "epsilons", "velocities")
        if not isinstance(raweps, list) or not raweps:
            raise ConfigError("velocities.epsilons must be a nonempty list of reals")
        epsilons = tuple(_real(e, f"velocities.epsilons[{i}]") for i, e in enumerate(raweps))
    scan_threshold = 1e-12
    if "scan" in doc:
        s = doc["scan"]
        if not isinstance(s, dict):
            raise ConfigError("scan must be an object")
        _reject_unknown(s, _SCAN_KEYS, "scan")
        if "threshold_rel" in s:
            scan_threshold = _real(s["threshold_rel"], "scan.threshold_rel")
    output_path = None
    if "output" in doc:
        o = doc["output"]
        if not isinstance(o, dict):
            raise ConfigError("output must be an object")
        _reject_unknown(o, _OUT_KEYS, "output")
        if "path" in o:
            if not isinstance(o["path"], str):
                raise ConfigError("output.path must be a string")
            output_path = o["path"]
    if solitons is not None and not background.is_vacuum:
        raise ConfigError(
            "soliton dressing requires the vacuum background (genus 0, c = 1)"
        )
    return RunConfig(
        background=background,
        solitons=solitons,
        grid=grid,
        frame=frame,
        verify=verify,
        epsilons=epsilons,
        scan_threshold_rel=scan_threshold,
        output_path=output_path,
    )


def load_config(path: str) -> RunConfig:
    """Read and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)
