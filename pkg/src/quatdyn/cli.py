"""Command-line front end.

Exit codes: 0 success, 2 configuration or regime error, 3 integration
failure, 4 identity or acceptance failure, 5 search failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    ConfigError,
    DomainError,
    IntegrationError,
    NoBracket,
    QuadratureFailure,
    SingularLocus,
    WrongFamily,
    WrongRegime,
)
from .fields import REGIME_EPS, Family, FieldSpec, eval_field
from .integrator import DEFAULT_ATOL, DEFAULT_RTOL, EventSpec, integrate
from .invariants import (
    applicable_descriptors,
    cofactor_residual,
    get_descriptor,
    hamiltonian_residual,
    identity_d3,
    identity_e416,
    identity_plane_on_L,
    lie_derivative,
    poisson_bracket,
)
from .quaternion import Quaternion, as_quaternion
from .report import dumps, envelope

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATION, EXIT_IDENTITY, EXIT_SEARCH = 0, 2, 3, 4, 5

IDENTITY_TOL = 1e-9
COFACTOR_TOL = 1e-10

DEFAULT_SPEC = {"family": "Bernoulli", "a": [0, 1, 0, 0], "c": [1, 0, 0, 0], "n": 3}


class CLIError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


# -- parsing helpers -------------------------------------------------------------


def parse_quaternion(text: str) -> Quaternion:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse quaternion {text!r}; expected q0,q1,q2,q3") from None
    if len(vals) != 4:
        raise ConfigError(f"quaternion {text!r} needs 4 components")
    return Quaternion(*vals)


def parse_span(text: str) -> tuple[float, float]:
    try:
        a, b = (float(v) for v in text.split(":"))
    except ValueError:
        raise ConfigError(f"cannot parse time span {text!r}; expected A:B") from None
    if a == b:
        raise ConfigError("time span must be non-degenerate")
    return a, b


def parse_target(text: str) -> Fraction | float:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot parse target {text!r}; expected P/Q or a decimal") from None


def load_spec(text: str | None, default: dict | None = None) -> FieldSpec:
    """Spec from a JSON file path or an inline JSON object."""
    if text is None:
        if default is None:
            raise ConfigError("--spec is required")
        return FieldSpec.from_dict(default)
    stripped = text.strip()
    if stripped.startswith("{"):
        return FieldSpec.from_json(stripped)
    path = Path(text)
    if not path.is_file():
        raise ConfigError(f"spec file not found: {text}")
    return FieldSpec.from_json(path.read_text())


def _write_or_print(out: str | None, name: str, text: str):
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    (d / name).write_text(text if text.endswith("\n") else text + "\n")


def _config(args) -> dict:
    skip = {"func", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, command: str, payload: dict, name: str = "report.json"):
    spec = payload.pop("_spec", None)
    body = envelope(command, _config(args), getattr(args, "seed", None), payload)
    if spec is not None:
        body["spec"] = spec.to_dict()
    _write_or_print(args.out, name, dumps(body))


# -- simulate --------------------------------------------------------------------


def _event_specs(items: list[str], spec: FieldSpec) -> list[EventSpec]:
    out = []
    for item in items:
        name, _, level = item.partition("=")
        d = get_descriptor(name.strip(), spec)
        lvl = float(level) if level else 0.0

        def g(q, d=d, lvl=lvl):
            try:
                return d(q) - lvl
            except SingularLocus:
                return math.nan

        out.append(EventSpec(item, g, direction=0, terminal=False))
    return out


def cmd_simulate(args) -> int:
    spec = load_spec(args.spec)
    q0 = parse_quaternion(args.q0)
    span = parse_span(args.t)
    names = [s.strip() for s in args.integrals.split(",") if s.strip()] if args.integrals else []
    integrals = [get_descriptor(n, spec) for n in names]
    events = _event_specs(args.event or [], spec)
    tr = integrate(spec, q0, span, rtol=args.rtol, atol=args.atol, events=events)
    _write_or_print(args.out, "trajectory.csv", tr.to_csv(integrals=integrals))
    if args.out is not None:
        _write_or_print(args.out, "events.csv", tr.events_to_csv())
        _emit(args, "simulate", {"_spec": spec, "status": tr.status, "stats": tr.stats,
                                 "n_events": len(tr.events), "t_final": tr.t_final})
    else:
        sys.stderr.write(f"status {tr.status.value}; {len(tr)} samples; "
                         f"{len(tr.events)} events\n")
    return EXIT_OK


# -- verify ----------------------------------------------------------------------


def _cloud(rng, k, scale=1.0):
    return rng.normal(scale=scale, size=(k, 4))


def _lie_check(d, spec, pts):
    worst, used = 0.0, 0
    for q in pts:
        if not d.is_regular(q, 1e-6):
            continue
        try:
            qq = as_quaternion(q)
            lie = lie_derivative(d, spec, qq)
            ref = d.closed_form(qq)
            scale = max(1.0, float(np.linalg.norm(d.gradient(q)))
                        * float(np.linalg.norm(np.array(eval_field(spec, q)))))
        except SingularLocus:
            continue
        worst = max(worst, abs(lie - ref) / scale)
        used += 1
    return worst, used


def verify_report(spec: FieldSpec, n_points: int = 200, seed: int = 0,
                  identities: list[str] | None = None) -> dict:
    """Randomized residuals of every identity applicable to ``spec``."""
    rng = np.random.default_rng(seed)
    norm = spec.normalized()
    pts = _cloud(rng, n_points)
    checks = {}

    descs = applicable_descriptors(spec)
    extra = []
    c_real = spec.c is not None and norm.c.is_real(REGIME_EPS)
    if spec.family is Family.BERNOULLI and c_real:
        if norm.a.is_real(REGIME_EPS):
            extra.append("cofactor")
        if abs(norm.a.q0) <= REGIME_EPS and abs(norm.c.q0) > 0:
            extra.append("poisson")
        if abs(norm.c.q0) > 0:
            extra.append("d3")
    if spec.family is Family.CUBIC:
        extra.append("e4.16")
    if "L_plane" in descs:
        extra.append("plane_on_L")
    if spec.family is Family.LINEAR_LL:
        extra.append("energy")

    available = list(descs) + extra
    wanted = identities or available
    missing = [w for w in wanted if w not in available]
    if missing:
        raise WrongRegime(f"identities {missing} do not apply to this spec; "
                          f"available: {available}")
    if not wanted:
        raise WrongRegime("no identities apply to this spec")

    for name in wanted:
        if name in descs:
            worst, used = _lie_check(descs[name], spec, pts)
            checks[name] = {"kind": descs[name].kind.value, "max_residual": worst,
                            "points": used, "threshold": IDENTITY_TOL}
        elif name == "cofactor":
            worst = 0.0
            for q in pts:
                scale = max(1.0, float(np.linalg.norm(np.array(eval_field(spec, q)))))
                for poly in ("q1", "q2", "q3"):
                    worst = max(worst, abs(cofactor_residual(poly, spec, q)) / scale)
            checks[name] = {"kind": "COFACTOR", "max_residual": worst, "points": len(pts),
                            "threshold": COFACTOR_TOL}
        elif name == "poisson":
            h, f = descs["Hn"], descs["F_cyl"]
            worst = ham = 0.0
            used = 0
            for q in pts:
                if not h.is_regular(q, 1e-3):
                    continue
                worst = max(worst, abs(poisson_bracket(h, f, q)))
                if abs(norm.a.q1 - 1.0) <= REGIME_EPS and abs(norm.a.q2) + abs(norm.a.q3) == 0:
                    ham = max(ham, hamiltonian_residual(norm, q))
                used += 1
            checks[name] = {"kind": "POISSON", "max_residual": max(worst, ham),
                            "bracket_Hn_F": worst, "hamiltonian": ham, "points": used,
                            "threshold": IDENTITY_TOL}
        elif name == "d3":
            from .structure.reduction import _p_points
            S = get_descriptor("S", spec)
            worst = 0.0
            pp = _p_points(spec, min(n_points, 100), rng)
            for q in pp:
                ref = identity_d3(spec, q)
                worst = max(worst, abs(lie_derivative(S, spec, q) - ref) / max(1.0, abs(ref)))
            checks[name] = {"kind": "IDENTITY", "max_residual": worst, "points": len(pp),
                            "threshold": IDENTITY_TOL}
        elif name == "energy":
            from .structure.spectrum import esu1_energy_residual
            checks[name] = {"kind": "IDENTITY",
                            "max_residual": esu1_energy_residual(spec, n_points, seed),
                            "points": n_points, "threshold": IDENTITY_TOL}
        elif name in ("e4.16", "plane_on_L"):
            worst = 0.0
            if name == "e4.16":
                L = get_descriptor("L_hyp", spec)
                c0 = spec.c0
                surf = []
                for v in _cloud(rng, n_points)[:, 1:]:
                    q0 = math.sqrt(float(v @ v) + c0 * c0 / 2.0) * rng.choice([-1.0, 1.0])
                    surf.append(np.concatenate(([q0], v)))
                fn = identity_e416
            else:
                L = get_descriptor("L_plane", spec)
                cv = np.array(spec.c, dtype=float)
                K0 = float(cv @ cv)
                surf = [x + (K0 / 2.0 - float(cv @ x)) * cv / K0 for x in _cloud(rng, n_points)]
                fn = identity_plane_on_L
            for q in surf:
                ref = fn(spec, q)
                worst = max(worst, abs(lie_derivative(L, spec, q) - ref) / max(1.0, abs(ref)))
            checks[name] = {"kind": "IDENTITY", "max_residual": worst, "points": len(surf),
                            "threshold": IDENTITY_TOL}
    for c in checks.values():
        c["pass"] = bool(c["max_residual"] < c["threshold"])
    return {"family": spec.family.value, "regime": spec.regime, "checks": checks,
            "all_pass": all(c["pass"] for c in checks.values())}


def cmd_verify(args) -> int:
    spec = load_spec(args.spec)
    idents = [s.strip() for s in args.identities.split(",")] if args.identities else None
    rep = verify_report(spec, args.points, args.seed, idents)
    _emit(args, "verify", {"_spec": spec, **rep})
    return EXIT_OK if rep["all_pass"] else EXIT_IDENTITY


# -- classify --------------------------------------------------------------------


def classify_report(spec: FieldSpec, seed: int = 0) -> dict:
    """Dispatch to the phase-portrait analysis matching the regime of ``spec``."""
    from .structure import reduction, sphere, spectrum

    fam = spec.family
    norm = spec.normalized()
    if fam.is_linear:
        return {"analysis": "linear_spectrum", **spectrum.linear_spectrum(spec).to_dict()}
    if fam.is_affine:
        return {"analysis": "affine_check", **spectrum.affine_check(spec)}
    if fam is Family.CUBIC:
        if abs(norm.a.q0) > REGIME_EPS:
            return {"analysis": "hyperplane_heteroclinic_report",
                    **reduction.hyperplane_heteroclinic_report(spec, seed=seed)}
        raise WrongRegime("cubic flow with a + conj(a) = 0 is integrable; use the rotation command")
    if fam is not Family.BERNOULLI:
        raise WrongFamily(f"no phase-portrait analysis for {fam.value}")
    a0_zero = abs(norm.a.q0) <= REGIME_EPS
    a_real = norm.a.is_real(REGIME_EPS)
    if norm.c.is_real(REGIME_EPS):
        if a_real:
            return {"analysis": "classify_case_a", **reduction.classify_case_a(spec, seed=seed)}
        if a0_zero:
            return {"analysis": "isochronous_centers", **reduction.isochronous_centers(spec)}
        return {"analysis": "case_b_region_report",
                **reduction.case_b_region_report(spec, seed=seed)}
    if spec.n == 2 and a_real:
        if abs(norm.c.q0) <= REGIME_EPS:
            return {"analysis": "sphere_and_annuli_report",
                    **sphere.sphere_and_annuli_report(spec, seed=seed)}
        return {"analysis": "hyperplane_heteroclinic_report",
                **reduction.hyperplane_heteroclinic_report(spec, seed=seed)}
    raise WrongRegime("no analysis for this combination of a, c and n")


def cmd_classify(args) -> int:
    spec = load_spec(args.spec)
    _emit(args, "classify", {"_spec": spec, **classify_report(spec, args.seed)})
    return EXIT_OK


# -- rotation / search ---------------------------------------------------------------


def _torus_family(spec: FieldSpec) -> tuple[str, float]:
    norm = spec.normalized()
    if abs(norm.a.q0) > REGIME_EPS:
        raise WrongRegime("tori exist only for a + conj(a) = 0")
    if spec.family is Family.CUBIC:
        return "cubic", spec.c0
    if spec.family is Family.BERNOULLI and spec.n == 3 and norm.c.is_real(REGIME_EPS):
        return "bernoulli", norm.c.q0
    raise WrongRegime("tori are analysed for the Bernoulli n = 3 (c real) and cubic flows")


def _torus_spec_args(args):
    default = dict(DEFAULT_SPEC)
    if args.spec is None and args.c0 is not None:
        default["c"] = [args.c0, 0, 0, 0]
    spec = load_spec(args.spec, default)
    family, c0 = _torus_family(spec)
    return spec, family, c0


def cmd_rotation(args) -> int:
    from .structure.torus import TorusSpec, cubic_torus_analysis, rotation_number

    spec, family, c0 = _torus_spec_args(args)
    if args.f is None or args.h is None:
        raise ConfigError("rotation needs --f and --h")
    ts = TorusSpec(family, args.h, args.f, c0)
    if family == "cubic":
        res = cubic_torus_analysis(ts, cross_check=not args.no_cross_check, q_max=args.q_max)
    else:
        res = rotation_number(ts, cross_check=not args.no_cross_check, q_max=args.q_max,
                              oracle_simpson=args.simpson)
    _emit(args, "rotation", {"_spec": spec, **res.to_dict()})
    return EXIT_OK


def cmd_search(args) -> int:
    from .structure.torus import periodic_torus_search

    spec, family, c0 = _torus_spec_args(args)
    if args.f is None or args.target is None:
        raise ConfigError("search needs --f and --target")
    target = parse_target(args.target)
    res = periodic_torus_search(args.f, c0, target, family=family, branch=args.branch,
                                grid=args.grid, cross_check=not args.no_cross_check)
    _emit(args, "search", {"_spec": spec, "target_fraction": target, **res.to_dict()})
    return EXIT_OK


# -- spectrum ------------------------------------------------------------------------


def cmd_spectrum(args) -> int:
    from .structure.spectrum import affine_check, linear_spectrum

    if args.spec is not None:
        spec = load_spec(args.spec)
    else:
        if args.family is None or args.a is None or args.b is None:
            raise ConfigError("spectrum needs --spec or --family, --a and --b")
        spec = FieldSpec(Family.parse(args.family), parse_quaternion(args.a),
                         b=parse_quaternion(args.b))
    if spec.family.is_affine:
        payload = affine_check(spec)
    else:
        payload = linear_spectrum(spec).to_dict()
    _emit(args, "spectrum", {"_spec": spec, **payload})
    return EXIT_OK


# -- repro ---------------------------------------------------------------------------


def cmd_repro(args) -> int:
    from .acceptance import format_line, run_criterion

    numbers = [int(k) for k in args.only.split(",")] if args.only else list(range(1, 10))
    results = []
    for k in numbers:
        r = run_criterion(k)
        results.append(r)
        print(format_line(r), flush=True)
    table = ["| # | criterion | result | seconds |", "|---|---|---|---|"]
    for r in results:
        table.append(f"| {r.number} | {r.title} | {'PASS' if r.passed else 'FAIL'} | "
                     f"{r.seconds:.1f} |")
    if args.out is not None:
        _write_or_print(args.out, "summary.md", "\n".join(table))
        _emit(args, "repro", {"criteria": [r.to_dict() for r in results]}, "repro.json")
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return EXIT_OK if passed == len(results) else EXIT_IDENTITY


# -- parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quatdyn", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, spec_required=False):
        sp.add_argument("--spec", required=spec_required,
                        help="JSON file path or inline JSON object")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="output directory (default: stdout)")

    s = sub.add_parser("simulate", help="integrate a trajectory and write CSV")
    common(s, True)
    s.add_argument("--q0", required=True, help="initial state q0,q1,q2,q3")
    s.add_argument("--t", default="0:10", help="time span A:B")
    s.add_argument("--rtol", type=float, default=DEFAULT_RTOL)
    s.add_argument("--atol", type=float, default=DEFAULT_ATOL)
    s.add_argument("--integrals", default="", help="comma list of integral columns")
    s.add_argument("--event", action="append", help="NAME[=LEVEL] crossing to record")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify", help="randomized identity residuals")
    common(s, True)
    s.add_argument("--points", type=int, default=200)
    s.add_argument("--identities", default=None, help="comma list (default: all applicable)")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("classify", help="phase-portrait report for the regime")
    common(s, True)
    s.set_defaults(func=cmd_classify)

    for name, fn, helptext in (("rotation", cmd_rotation, "rotation number of a torus"),
                               ("search", cmd_search, "find a torus with a given I(h)")):
        s = sub.add_parser(name, help=helptext)
        common(s)
        s.add_argument("--c0", type=float, default=None, help="c0 when --spec is omitted")
        s.add_argument("--f", type=float, default=None)
        s.add_argument("--q-max", type=int, default=64)
        s.add_argument("--no-cross-check", action="store_true")
        if name == "rotation":
            s.add_argument("--h", type=float, default=None)
            s.add_argument("--simpson", action="store_true",
                           help="also evaluate the composite-Simpson oracle")
        else:
            s.add_argument("--target", default=None, help="P/Q or decimal")
            s.add_argument("--grid", type=int, default=100)
            s.add_argument("--branch", choices=("inner", "outer"), default="inner")
        s.set_defaults(func=fn)

    s = sub.add_parser("spectrum", help="linear eigenvalue formulas vs numerics")
    common(s)
    s.add_argument("--family", default=None)
    s.add_argument("--a", default=None)
    s.add_argument("--b", default=None)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("repro", help="run the acceptance suite")
    s.add_argument("--out", default=None)
    s.add_argument("--only", default=None, help="comma list of criterion numbers")
    s.set_defaults(func=cmd_repro)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    threads = os.environ.get("QUATDYN_THREADS")
    if threads is not None and not threads.isdigit():
        sys.stderr.write(f"error: QUATDYN_THREADS must be a positive integer, got {threads!r}\n")
        return EXIT_CONFIG
    try:
        return args.func(args)
    except NoBracket as exc:
        sys.stderr.write(f"search failed: {exc}\n")
        return EXIT_SEARCH
    except (IntegrationError, QuadratureFailure) as exc:
        sys.stderr.write(f"integration failed: {exc}\n")
        return EXIT_INTEGRATION
    except (ConfigError, WrongFamily, WrongRegime, DomainError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
