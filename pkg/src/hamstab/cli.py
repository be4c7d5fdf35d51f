"""Command-line front end.

Exit status signals tool errors only: 0 on success (whatever the verdict),
1 when a pipeline stage fails, 2 for unreadable input or bad arguments.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .classifier import twist_check
from .errors import HamstabError, ParseError, PipelineError
from .families import FAMILIES
from .hamiltonian import AngleActionState, HalfPowerSeries
from .normalform import Frequency, TimePeriodicSeries, deautonomize
from .report import Settings, analyze, normal_form_report, render
from .simulator import StepControl, integrate


def _grid(text: str) -> tuple[int, int]:
    try:
        a, r = text.lower().split("x")
        out = int(a), int(r)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 256x64, got {text!r}") from None
    if min(out) < 1:
        raise argparse.ArgumentTypeError("grid resolutions must be positive")
    return out


def _positive(text: str) -> float:
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _omega(text: str):
    try:
        return Frequency.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "text"), default="json")


def _analysis_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol-mult", type=_positive, default=1e-7, help="relative multiplicity cutoff")
    p.add_argument("--grid", type=_grid, default=(256, 64), help="Chetaev grid, angles x radii")
    p.add_argument("--region", type=_positive, default=0.1, help="Chetaev region radius a")
    p.add_argument("--h0", type=_positive, default=1e-4, help="energy level for the twist integral")
    p.add_argument("--simulate", action="store_true", help="add an escape experiment")
    p.add_argument("--horizon", type=_positive, default=1e4)
    p.add_argument("--epsilon", type=_positive, default=0.1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hamstab", description="Stability of r = 0 for resonant one-degree-of-freedom Hamiltonians.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="classify a half-power series (or a time-periodic series with --omega)")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--omega", type=_omega, help="p/k; the input is then a 'mu nu l re im' series")
    _analysis_flags(p)
    _common(p)

    p = sub.add_parser("normalform", help="normal-form residual and resonant structure")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--omega", type=_omega, required=True)
    _common(p)

    p = sub.add_parser("simulate", help="integrate one trajectory and write CSV t,r,phi,H")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--r0", type=_positive, required=True)
    p.add_argument("--phi0", type=float, default=0.0)
    p.add_argument("--horizon", type=_positive, default=1e4)
    p.add_argument("--epsilon", type=_positive, help="stop once r exceeds this")
    p.add_argument("--rtol", type=_positive, default=1e-10)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("twist", help="twist integral of a positive-definite series on a level")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--h0", type=_positive, default=1e-4)
    p.add_argument("--nodes", type=int, default=256)
    _common(p)

    p = sub.add_parser("examples", help="run the pipeline on a built-in family")
    p.add_argument("name", choices=sorted(FAMILIES))
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--q", type=int, default=4)
    p.add_argument("--a", dest="a_coef", type=float, default=1.0, help="intro example r**3 coefficient")
    p.add_argument("--B", type=float, default=1.0)
    p.add_argument("--k", type=int, default=1)
    _analysis_flags(p)
    _common(p)
    return ap


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _settings(args) -> Settings:
    return Settings(
        tol_mult=args.tol_mult,
        grid=args.grid,
        a=args.region,
        twist_h0=args.h0,
        simulate=args.simulate,
        horizon=args.horizon,
        epsilon=args.epsilon,
    )


def _family_args(args) -> dict:
    name = args.name
    if name == "markeyev":
        return {"s": args.s, "kappa": args.kappa}
    if name == "mansilla-vidal":
        return {"q": args.q, "s": args.s, "kappa": args.kappa}
    if name == "intro-example":
        return {"a": args.a_coef}
    return {"k": args.k, "B": args.B, "s": args.s}


def run(args) -> int:
    cmd = args.command
    if cmd == "classify":
        text = args.input.read_text()
        source = {"path": args.input.name}
        if args.omega is not None:
            tps = TimePeriodicSeries.parse(text)
            doc = analyze(HalfPowerSeries({}), args.omega, _settings(args), tps, source)
        else:
            doc = analyze(HalfPowerSeries.parse(text), None, _settings(args), None, source)
        _emit(render(doc, args.format), args.out)
    elif cmd == "normalform":
        tps = TimePeriodicSeries.parse(args.input.read_text())
        rep = normal_form_report(tps, args.omega)
        doc = {"omega": str(args.omega), "reality_defect": tps.reality_defect(), **rep.as_dict()}
        _emit(render(doc, args.format), args.out)
    elif cmd == "simulate":
        H = HalfPowerSeries.parse(args.input.read_text())
        tr = integrate(H, AngleActionState(args.r0, args.phi0), args.horizon, StepControl(rtol=args.rtol), args.epsilon)
        _emit(tr.to_csv(), args.out)
    elif cmd == "twist":
        H = HalfPowerSeries.parse(args.input.read_text())
        rep = twist_check(H, args.h0, args.nodes)
        _emit(render({"twist": rep.as_dict()}, args.format), args.out)
    elif cmd == "examples":
        params = _family_args(args)
        ex = FAMILIES[args.name](**params)
        tps = deautonomize(ex.H, ex.omega) if ex.omega is not None else None
        doc = analyze(ex.H, ex.omega, _settings(args), tps, {"example": ex.name, **ex.params})
        _emit(render(doc, args.format), args.out)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ParseError as exc:
        print(f"hamstab: parse error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"hamstab: cannot read input: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"hamstab: {exc}", file=sys.stderr)
        return 1
    except HamstabError as exc:
        print(f"hamstab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
