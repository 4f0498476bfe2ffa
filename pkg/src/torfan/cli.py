"""Command-line front end: every stage as a subcommand printing one JSON document."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

from . import catalog
from .conic import CertificationError, lefschetz_defect, main_theorem_report, search_conic_bundles
from .contraction import (ContractionError, blow_down, blowdown_class_for_ray, classify_wall,
                          contract_fiber_type, extremal_rays, fiber_class_for_pair, blowdown_shape,
                          fiber_pair)
from .fan import Fan, FanFormatError, load_fan, star_subdivide, validate
from .fano import PolytopeError, anticanonical_degree_top, anticanonical_polytope, is_fano
from .intersection import picard_rank, walls

log = logging.getLogger("torfan")

OK, VALIDATION_FAILURE, USAGE_ERROR = "ok", "validation-failure", "usage-error"
EXIT_CODES = {OK: 0, VALIDATION_FAILURE: 1, USAGE_ERROR: 2}


@dataclass
class CommandResult:
    status: str
    payload: dict

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    def render(self, pretty: bool = False) -> str:
        if pretty:
            return json.dumps(self.payload, sort_keys=True, indent=2)
        return json.dumps(self.payload, sort_keys=True, separators=(",", ":"))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


class _Invalid(Exception):
    def __init__(self, payload: dict):
        super().__init__(payload.get("error", "invalid input"))
        self.payload = payload


def _pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated ray indices, got {text!r}")
    return a, b


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="torfan", description="Toric fans, contractions, conic bundles and Lefschetz defect.")
    p.add_argument("--pretty", action="store_true", help="indent the JSON output")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    fan_help = "fan JSON file, or @name for a builtin catalog entry"
    for name, text in [("validate", "check smoothness, completeness and proper intersections"),
                       ("walls", "list walls with their relations"),
                       ("contractions", "extremal classes and their contraction types"),
                       ("fano", "Fano test"),
                       ("degree", "anticanonical degree (-K)^n"),
                       ("delta", "Lefschetz defect certificate"),
                       ("theorem-check", "drop-3 conic bundles against the Lefschetz defect")]:
        sp = sub.add_parser(name, help=text)
        sp.add_argument("fan", help=fan_help)
    sp = sub.add_parser("blowup", help="star subdivision along a 2-cone")
    sp.add_argument("fan", help=fan_help)
    sp.add_argument("--center", type=_pair, required=True, metavar="I,J")
    sp = sub.add_parser("blowdown", help="contract a smooth exceptional divisor")
    sp.add_argument("fan", help=fan_help)
    sp.add_argument("--ray", type=int, required=True, metavar="K")
    sp.add_argument("--center", type=_pair, metavar="I,J", help="pick the contraction onto this cone")
    sp = sub.add_parser("quotient", help="elementary P^1-bundle quotient along a ray pair")
    sp.add_argument("fan", help=fan_help)
    sp.add_argument("--pair", type=_pair, required=True, metavar="I,J")
    sp = sub.add_parser("conic", help="search conic-bundle factorizations")
    sp.add_argument("fan", help=fan_help)
    sp.add_argument("--drop", type=int, required=True, metavar="R")
    sp = sub.add_parser("identify", help="match against the builtin catalog or a database")
    sp.add_argument("fan", help=fan_help)
    sp.add_argument("--db", metavar="PATH")
    sp = sub.add_parser("catalog", help="builtin corpus")
    csub = sp.add_subparsers(dest="action", parser_class=_Parser)
    csub.required = True
    csub.add_parser("dump")
    g = csub.add_parser("get")
    g.add_argument("name")
    return p


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("TORFAN_THREADS", "1")))
    except ValueError:
        return 1


def _load(spec: str) -> Fan:
    if spec.startswith("@"):
        try:
            return catalog.builtin(spec[1:]).fan
        except catalog.CatalogError as exc:
            raise UsageError(str(exc))
    try:
        return load_fan(spec)
    except FanFormatError as exc:
        raise _Invalid({"error": str(exc)})
    except OSError as exc:
        raise _Invalid({"error": f"{spec}: cannot read fan: {exc.strerror or exc}"})


def _valid(spec: str) -> Fan:
    f = _load(spec)
    report = validate(f)
    if not report.ok:
        raise _Invalid({"error": "fan is not smooth and complete", "validation": report.to_json()})
    return f


def _names(f: Fan) -> list[str]:
    return [m.name for m in catalog.identify(f, workers=_threads())]


def _cmd_validate(a) -> CommandResult:
    report = validate(_load(a.fan))
    return CommandResult(OK if report.ok else VALIDATION_FAILURE, report.to_json())


def _cmd_walls(a) -> CommandResult:
    f = _valid(a.fan)
    out = []
    for w in walls(f):
        doc = w.to_json()
        doc.update(classify_wall(f, w).to_json())
        out.append(doc)
    return CommandResult(OK, {"picard_rank": picard_rank(f), "walls": out})


def _cmd_contractions(a) -> CommandResult:
    f = _valid(a.fan)
    out = []
    for cls in extremal_rays(f):
        doc = cls.to_json()
        shape, pair = blowdown_shape(cls), fiber_pair(cls)
        if shape is not None:
            doc["executable"] = {"operation": "blowdown", "ray": shape[0], "center": list(shape[1:])}
        elif pair is not None and cls.classification.type_pair == (f.dim, f.dim - 1):
            doc["executable"] = {"operation": "quotient", "pair": list(pair)}
        else:
            doc["executable"] = None
        out.append(doc)
    return CommandResult(OK, {"classes": out, "is_fano": is_fano(f).is_fano})


def _cmd_blowup(a) -> CommandResult:
    f = _valid(a.fan)
    try:
        g, new = star_subdivide(f, a.center)
    except ValueError as exc:
        raise _Invalid({"error": str(exc)})
    return CommandResult(OK, {"fan": g.to_json(), "exceptional_ray": new})


def _cmd_blowdown(a) -> CommandResult:
    f = _valid(a.fan)
    try:
        target, center, mor = blow_down(f, blowdown_class_for_ray(f, a.ray, a.center))
    except (ContractionError, IndexError) as exc:
        raise _Invalid({"error": str(exc)})
    doc = mor.to_json()
    doc["center_cone"] = list(center)
    return CommandResult(OK, doc)


def _cmd_quotient(a) -> CommandResult:
    f = _valid(a.fan)
    try:
        mor = contract_fiber_type(f, fiber_class_for_pair(f, *a.pair))
    except ContractionError as exc:
        raise _Invalid({"error": str(exc)})
    return CommandResult(OK, mor.to_json())


def _cmd_fano(a) -> CommandResult:
    f = _valid(a.fan)
    return CommandResult(OK, is_fano(f).to_json())


def _cmd_degree(a) -> CommandResult:
    f = _valid(a.fan)
    try:
        poly = anticanonical_polytope(f)
        deg = anticanonical_degree_top(f)
    except PolytopeError as exc:
        raise _Invalid({"error": str(exc)})
    return CommandResult(OK, {"dim": f.dim, "anticanonical_degree": int(deg), "polytope": poly.to_json()})


def _cmd_conic(a) -> CommandResult:
    if a.drop < 1:
        raise UsageError("--drop must be a positive integer")
    f = _valid(a.fan)
    out = []
    for cb in search_conic_bundles(f, a.drop):
        doc = cb.to_json()
        doc["target_names"] = _names(cb.target)
        out.append(doc)
    return CommandResult(OK, {"drop": a.drop, "factorizations": out})


def _cmd_delta(a) -> CommandResult:
    f = _valid(a.fan)
    try:
        cert = lefschetz_defect(f)
    except CertificationError as exc:
        raise _Invalid({"error": str(exc), "certificate": exc.certificate.to_json()})
    return CommandResult(OK, cert.to_json())


def _cmd_theorem(a) -> CommandResult:
    f = _valid(a.fan)
    try:
        report = main_theorem_report(f)
    except CertificationError as exc:
        raise _Invalid({"error": str(exc), "certificate": exc.certificate.to_json()})
    return CommandResult(OK, report.to_json())


def _cmd_identify(a) -> CommandResult:
    f = _valid(a.fan)
    db = None
    if a.db:
        try:
            db = catalog.load_database(a.db)
        except catalog.DatabaseError as exc:
            raise _Invalid({"error": str(exc)})
    matches = catalog.identify(f, db, workers=_threads())
    return CommandResult(OK, {"matches": [m.to_json() for m in matches]})


def _cmd_catalog(a) -> CommandResult:
    if a.action == "dump":
        return CommandResult(OK, catalog.dump(catalog.builtin_entries()))
    try:
        entry = catalog.builtin(a.name)
    except catalog.CatalogError as exc:
        raise UsageError(str(exc))
    doc = entry.to_json()
    doc.update({"provenance": entry.provenance, "description": entry.description,
                "invariants": entry.invariants})
    return CommandResult(OK, doc)


COMMANDS = {
    "validate": _cmd_validate, "walls": _cmd_walls, "contractions": _cmd_contractions,
    "blowup": _cmd_blowup, "blowdown": _cmd_blowdown, "quotient": _cmd_quotient,
    "fano": _cmd_fano, "degree": _cmd_degree, "conic": _cmd_conic, "delta": _cmd_delta,
    "theorem-check": _cmd_theorem, "identify": _cmd_identify, "catalog": _cmd_catalog,
}


def run(argv: Sequence[str]) -> CommandResult:
    parser = build_parser()
    # --pretty only affects rendering, so it may appear anywhere
    argv = [x for x in argv if x != "--pretty"]
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return CommandResult(USAGE_ERROR, {"error": str(exc).strip(), "usage": parser.format_help()})
    except _Invalid as exc:
        return CommandResult(VALIDATION_FAILURE, exc.payload)


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    argv = sys.argv[1:] if argv is None else argv
    result = run(argv)
    pretty = "--pretty" in argv
    if result.status != OK and "error" in result.payload:
        print(result.payload["error"].splitlines()[0], file=sys.stderr)
    print(result.render(pretty))
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
