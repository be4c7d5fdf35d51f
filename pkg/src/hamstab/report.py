"""End-to-end pipeline and deterministic report serialization.

Reports keep the analytic verdict and the simulation evidence in separate
sections and print every setting that influenced them.  Nothing time- or
host-dependent is written, so equal inputs give byte-identical output.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from fractions import Fraction

from .classifier import (
    ChetaevCertificate,
    Verdict,
    chetaev_certificate,
    classify,
    prescreen,
    twist_check,
)
from .errors import HamstabError, PipelineError
from .hamiltonian import DegeneratePair, HalfPowerSeries
from .normalform import (
    Frequency,
    NormalFormReport,
    Nonresonant,
    TimePeriodicSeries,
    autonomize,
    nf_residual,
    resonance_module,
    structure,
)
from .simulator import StepControl, escape_experiment
from .trigpoly import RootTolerances

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Settings:
    tol_mult: float = 1e-7
    grid: tuple[int, int] = (256, 64)
    a: float = 0.1
    twist_h0: float = 1e-4
    twist_nodes: int = 256
    simulate: bool = False
    horizon: float = 1e4
    epsilon: float = 0.1
    rtol: float = 1e-10

    @property
    def tolerances(self) -> RootTolerances:
        return RootTolerances(mult=self.tol_mult)

    def as_dict(self) -> dict:
        out = asdict(self)
        out["grid"] = f"{self.grid[0]}x{self.grid[1]}"
        return out


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except HamstabError as exc:
        raise PipelineError(name, exc) from exc


def pair_dict(pair: DegeneratePair) -> dict:
    return {
        "psi0": repr(pair.psi0),
        "psi1": repr(pair.psi1),
        "alpha": str(pair.alpha),
        "gamma": None if pair.gamma is None else str(pair.gamma),
    }


def normal_form_report(tps: TimePeriodicSeries, omega: Frequency | Nonresonant) -> NormalFormReport:
    """Residual and, for a rational frequency in normal form, the resonant structure."""
    res = nf_residual(tps, omega)
    order = resonance_module(omega).order
    report = NormalFormReport(res, order)
    if order is not None and res <= 1e-10:
        report.structure = structure(autonomize(tps, omega), order)
    return report


def _certificate_section(pair: DegeneratePair, s: Settings) -> dict:
    try:
        cert: ChetaevCertificate = chetaev_certificate(pair, s.a, s.grid, tol=s.tolerances)
    except HamstabError as exc:
        out = {"status": type(exc).__name__, "message": str(exc)}
        witness = getattr(exc, "witness", None)
        if witness:
            out["witness"] = witness
        return out
    return {"status": "passed", **cert.as_dict()}


def _twist_section(pair: DegeneratePair, s: Settings) -> dict:
    try:
        rep = twist_check(pair.truncated(), s.twist_h0, s.twist_nodes)
    except HamstabError as exc:
        return {"status": type(exc).__name__, "message": str(exc)}
    return {"status": "computed", **rep.as_dict()}


def analyze(
    H: HalfPowerSeries,
    omega: Frequency | Nonresonant | None = None,
    settings: Settings = Settings(),
    tps: TimePeriodicSeries | None = None,
    source: dict | None = None,
) -> dict:
    """Run normal form, prescreen, classification, certificates and (optionally) simulation."""
    s = settings
    doc: dict = {
        "format_version": FORMAT_VERSION,
        "settings": s.as_dict(),
        "input": dict(source or {}),
    }
    doc["input"]["omega"] = None if omega is None else str(omega)
    if tps is not None and omega is not None:
        nf = _stage("normalform", normal_form_report, tps, omega)
        doc["normal_form"] = nf.as_dict()
        H = _stage("autonomize", autonomize, tps, omega)
    else:
        doc["normal_form"] = None
    doc["input"]["series"] = H.to_text().splitlines()

    analytic: dict = {}
    k = resonance_module(omega).order if isinstance(omega, Frequency) else None
    result: Verdict | DegeneratePair
    if k is not None and k >= 3:
        struct = _stage("structure", structure, H, k)
        result = _stage("prescreen", prescreen, struct, k, tol=s.tolerances)
        analytic["prescreen"] = "verdict" if isinstance(result, Verdict) else "pair"
    else:
        result = _stage("leading_pair", H.leading_pair)
        analytic["prescreen"] = "skipped"
    if isinstance(result, DegeneratePair):
        pair = result
        analytic["pair"] = pair_dict(pair)
        verdict = _stage("classify", classify, pair, s.tolerances)
    else:
        pair = None
        verdict = result
    analytic["verdict"] = verdict.as_dict()
    if pair is not None and verdict.criterion == "Even-B":
        analytic["certificate"] = _certificate_section(pair, s)
    if pair is not None and verdict.criterion == "Even-A":
        analytic["twist"] = _twist_section(pair, s)
    doc["analytic"] = analytic

    if s.simulate:
        target = pair.truncated() if pair is not None else H
        summary = _stage(
            "simulate",
            escape_experiment,
            target,
            s.epsilon,
            None,
            s.horizon,
            StepControl(rtol=s.rtol),
        )
        doc["empirical"] = {"system": "truncated leading pair" if pair is not None else "input series", **summary.as_dict()}
    else:
        doc["empirical"] = None
    return doc


def _default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, default=_default) + "\n"


def _flatten(prefix: str, value, out: list[str]) -> None:
    if isinstance(value, dict):
        for key, v in value.items():
            _flatten(f"{prefix}.{key}" if prefix else str(key), v, out)
    elif isinstance(value, (list, tuple)) and value and isinstance(value[0], (dict, list)):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append(f"{prefix}: {json.dumps(value, default=_default)}")


def to_text(doc: dict) -> str:
    lines: list[str] = []
    _flatten("", doc, lines)
    return "\n".join(lines) + "\n"


def render(doc: dict, fmt: str = "json") -> str:
    if fmt == "json":
        return to_json(doc)
    if fmt == "text":
        return to_text(doc)
    raise ValueError(f"unknown format {fmt!r}")
