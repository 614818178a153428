"""Command-line entry point.

Usage::

    liouvillebary COMMAND --config run.json [--out DIR] [--seed N] [--lambda-grid 32,64,...] [--strict]

Exit status: 0 when every asserted verdict passes, 1 on a failed verdict or
internal error, 2 when a precondition refuses the run, 64 for an unknown
command and 65 for a malformed config.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import re
import sys
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ._validation import InvalidInputError, PreconditionError
from .experiments import (
    DEFAULT_LAMBDAS,
    ScanReport,
    check_lambda_grid,
    coercive_solve,
    concentration_scan,
    energy_scan,
    improved_probe,
    mt_probe,
    random_configs,
    sweep,
)
from .field import TorusGrid
from .measures import Atom, BarycenterConfig, bl_distance, check_eps_interior, distance_to_stratum
from .strata import (
    SingularConfig,
    classify_graph_case,
    conjecture_literal,
    enumerate_strata,
    graph_theorem_verdict,
    is_pj_stable,
    minimal_strata,
    not_p1_stable,
    singular_values,
)

COMMANDS = ("strata", "stability", "graph", "sweep", "energy-scan", "concentration", "mt-probe",
            "improved-probe", "solve", "distance")

EXIT_OK, EXIT_FAIL, EXIT_REFUSED, EXIT_USAGE, EXIT_CONFIG = 0, 1, 2, 64, 65

_PI_FORM = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*\*\s*pi\s*$")


class ConfigError(ValueError):
    """Malformed config; carries one message per offending field."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


def parse_real(value, name: str) -> float:
    """Accept a number or the string form ``"k*pi"``."""
    if isinstance(value, str):
        m = _PI_FORM.match(value)
        if m:
            return float(m.group(1)) * math.pi
        if value.strip() == "pi":
            return math.pi
        raise InvalidInputError(f"{name}: expected a number or 'k*pi', got {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidInputError(f"{name}: expected a number, got {value!r}")
    return float(value)


@dataclass
class RunConfig:
    """Resolved run configuration."""

    singular: SingularConfig
    N: int = 256
    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    seed: int = 0
    out: str = "."
    sections: dict = field(default_factory=dict)

    @property
    def delta(self) -> float:
        return self.singular.delta

    @classmethod
    def from_dict(cls, data: Any) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError(["<root>: config must be a JSON object"])
        problems: list[str] = []

        def grab(name, conv, default=None):
            if name not in data:
                return default
            try:
                return conv(data[name])
            except (InvalidInputError, TypeError, ValueError) as exc:
                msg = str(exc)
                problems.append(msg if msg.startswith(name) else f"{name}: {msg}")
                return default

        known = {"alphas", "rho", "positions", "tol", "delta", "N", "lambdas", "seed", "out",
                 "sigma", "sigma2", "stratum", "eps", "probe", "sweep", "solve", "concentration"}
        for k in data:
            if k not in known:
                problems.append(f"{k}: unknown field")
        if "rho" not in data:
            problems.append("rho: required")
        alphas = grab("alphas", lambda v: tuple(parse_real(a, "alphas[]") for a in v), ())
        rho = grab("rho", lambda v: parse_real(v, "rho"), 1.0)
        positions = grab("positions", lambda v: tuple(tuple(float(c) for c in p) for p in v), None)
        tol = grab("tol", lambda v: parse_real(v, "tol"), 1e-9)
        delta = grab("delta", lambda v: parse_real(v, "delta"), 0.05)
        N = grab("N", _int, 256)
        lambdas = grab("lambdas", lambda v: tuple(float(x) for x in check_lambda_grid(
            [parse_real(x, "lambdas[]") for x in v])), DEFAULT_LAMBDAS)
        seed = grab("seed", _int, 0)
        out = grab("out", str, ".")
        singular = None
        if not problems:
            try:
                singular = SingularConfig(alphas, rho, positions, tol, delta)
            except InvalidInputError as exc:
                problems.append(f"singular config: {exc}")
        if not problems:
            try:
                TorusGrid(N)
            except InvalidInputError as exc:
                problems.append(f"N: {exc}")
        sections = {}
        for key in ("sigma", "sigma2"):
            if key in data and singular is not None:
                try:
                    BarycenterConfig.from_json(data[key], singular, check_admissible=False)
                    sections[key] = data[key]
                except (InvalidInputError, TypeError, AttributeError) as exc:
                    problems.append(f"{key}: {exc}")
        for key in ("stratum", "eps", "probe", "sweep", "solve", "concentration"):
            if key in data:
                sections[key] = data[key]
        if "stratum" in data:
            st = data["stratum"]
            if not (isinstance(st, dict) and isinstance(st.get("k"), int) and isinstance(st.get("iota", []), list)):
                problems.append("stratum: expected {\"k\": int, \"iota\": [int, ...]}")
        if problems:
            raise ConfigError(problems)
        return cls(singular, N, lambdas, seed, out, sections)

    def resolved(self) -> dict:
        d = self.singular.to_dict()
        d.update({"N": self.N, "lambdas": list(self.lambdas), "seed": self.seed})
        d.update(self.sections)
        return d

    def digest(self) -> str:
        text = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:8]

    def section(self, key: str) -> dict:
        v = self.sections.get(key, {})
        return v if isinstance(v, dict) else {}

    def sigma(self, key: str = "sigma", **kw) -> BarycenterConfig | None:
        if key not in self.sections:
            return None
        return BarycenterConfig.from_json(self.sections[key], self.singular, **kw)


def _int(v) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise InvalidInputError(f"expected an integer, got {v!r}")
    return v


@dataclass
class Outcome:
    payload: dict
    rows: list[dict]
    verdicts: dict
    summary: str
    warnings: list[str] = field(default_factory=list)


def _strata_rows(strata):
    return [s.to_dict() for s in strata]


def run_strata(cfg: RunConfig) -> Outcome:
    c = cfg.singular
    strata = enumerate_strata(c)
    payload = {"strata": _strata_rows(strata),
               "minimal": _strata_rows(minimal_strata(c)),
               "singular_values": [{"value": v.value, "n": v.n, "I": list(v.I)}
                                   for v in singular_values(c, c.rho)]}
    return Outcome(payload, _strata_rows(strata), {}, f"strata: {len(strata)} admissible")


def run_stability(cfg: RunConfig) -> Outcome:
    c = cfg.singular
    enumerate_strata(c)
    rows = [{"j": j, "stable": is_pj_stable(c, j)} for j in range(1, c.m + 1)]
    payload = {"pj_stable": rows, "not_p1_stable": not_p1_stable(c),
               "conjecture_literal": conjecture_literal(c), "conjecture_with_n": conjecture_literal(c, with_n=True)}
    return Outcome(payload, rows, {}, f"stability: not_p1_stable={payload['not_p1_stable']}")


def run_graph(cfg: RunConfig) -> Outcome:
    c = cfg.singular
    strata = enumerate_strata(c)
    verdict = classify_graph_case(c).value
    theorem = graph_theorem_verdict(c).value
    nodes = [s.iota[0] for s in strata if s.k == 0 and s.l == 1]
    edges = [list(s.iota) for s in strata if s.k == 0 and s.l == 2]
    warnings = []
    if verdict != "not_applicable" and verdict != theorem:
        warnings.append(f"graph theorem inequalities give {theorem}, graph structure gives {verdict}")
    payload = {"verdict": verdict, "theorem_verdict": theorem, "nodes": nodes, "edges": edges}
    rows = [{"kind": "node", "a": n, "b": ""} for n in nodes] + [{"kind": "edge", "a": a, "b": b} for a, b in edges]
    return Outcome(payload, rows, {}, f'graph: "{verdict}"', warnings)


def run_sweep(cfg: RunConfig) -> Outcome:
    sec = cfg.section("sweep")
    n = int(sec.get("configs", 10000))
    m_max = int(sec.get("m_max", 6))
    rho_max = parse_real(sec.get("rho_max", "20*pi"), "sweep.rho_max")
    rep = sweep(random_configs(n, cfg.seed, m_max, rho_max))
    warnings = []
    if rep.fits["graph_theorem_mismatch"]:
        warnings.append(f"{rep.fits['graph_theorem_mismatch']} configs where the graph theorem inequalities "
                        f"disagree with the graph structure")
    return _from_report(rep, warnings)


def _from_report(rep: ScanReport, warnings=()) -> Outcome:
    return Outcome(rep.to_dict(), rep.rows, rep.verdicts, rep.summary(), list(warnings))


def _default_sigma(cfg: RunConfig) -> BarycenterConfig:
    from .experiments import _far_point

    return BarycenterConfig((Atom(1.0, _far_point(cfg.singular)),), cfg.singular)


def run_energy_scan(cfg: RunConfig) -> Outcome:
    sigma = cfg.sigma() or _default_sigma(cfg)
    return _from_report(energy_scan(sigma, cfg.lambdas))


def run_concentration(cfg: RunConfig) -> Outcome:
    sec = cfg.section("concentration")
    sigma = cfg.sigma() or _default_sigma(cfg)
    rep = concentration_scan(sigma, float(sec.get("lambda", 1e3)), tuple(sec.get("radii", (0.05,))))
    return _from_report(rep)


def run_mt_probe(cfg: RunConfig) -> Outcome:
    sec = cfg.section("probe")
    return _from_report(mt_probe(cfg.singular, singular=sec.get("singular"), lambdas=cfg.lambdas))


def run_improved_probe(cfg: RunConfig) -> Outcome:
    sec = cfg.section("probe")
    rep = improved_probe(int(sec.get("n", 2)), tuple(sec.get("I", ())), cfg.singular,
                         r=float(sec.get("r", 0.05)), delta0=float(sec.get("delta0", 0.02)),
                         lambdas=cfg.lambdas)
    return _from_report(rep)


def run_solve(cfg: RunConfig) -> Outcome:
    sec = cfg.section("solve")
    _, rep = coercive_solve(cfg.singular, max_iters=int(sec.get("max_iter", 500)), N=cfg.N,
                            tol=float(sec.get("tol", 1e-6)))
    warnings = [] if rep.fits["status"] == "converged" else [f"solver status {rep.fits['status']}"]
    return _from_report(rep, warnings)


def run_distance(cfg: RunConfig) -> Outcome:
    sigma = cfg.sigma(check_admissible=False)
    if sigma is None:
        raise PreconditionError("distance needs a 'sigma' measure in the config")
    payload: dict = {}
    rows = []
    if "sigma2" in cfg.sections:
        d = bl_distance(sigma, cfg.sigma("sigma2", check_admissible=False))
        payload["bl_distance"] = d
        rows.append({"quantity": "bl_distance", "value": d})
    if "stratum" in cfg.sections:
        st = cfg.sections["stratum"]
        s = cfg.singular.stratum(st["k"], st.get("iota", []))
        d = distance_to_stratum(sigma, s)
        payload["distance_to_stratum"] = {"stratum": s.to_dict(), "upper_bound": d}
        rows.append({"quantity": "distance_to_stratum", "value": d})
    if "eps" in cfg.sections:
        chk = check_eps_interior(sigma, parse_real(cfg.sections["eps"], "eps"))
        payload["eps_interior"] = {"interior": chk.interior, "reason": chk.reason,
                                   "witness": chk.witness.to_json() if chk.witness else None,
                                   "bound": chk.bound}
        if chk.witness is not None:
            d = bl_distance(sigma, chk.witness)
            payload["eps_interior"]["witness_distance"] = d
            rows.append({"quantity": "witness_distance", "value": d})
    if not payload:
        raise PreconditionError("distance needs 'sigma2', 'stratum' or 'eps' in the config")
    verdicts = {}
    if "witness_distance" in payload.get("eps_interior", {}):
        e = payload["eps_interior"]
        verdicts["witness_bound"] = e["witness_distance"] <= e["bound"] + 1e-9
    return Outcome(payload, rows, verdicts, "distance: " + ", ".join(f"{r['quantity']}={r['value']:.6g}" for r in rows))


RUNNERS = {
    "strata": run_strata,
    "stability": run_stability,
    "graph": run_graph,
    "sweep": run_sweep,
    "energy-scan": run_energy_scan,
    "concentration": run_concentration,
    "mt-probe": run_mt_probe,
    "improved-probe": run_improved_probe,
    "solve": run_solve,
    "distance": run_distance,
}


def _rows_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        keys: list[str] = []
        for r in rows:
            for k in r:
                if k not in keys:
                    keys.append(k)
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(r.get(k, "")) for k in keys})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    if isinstance(v, dict):
        return json.dumps(v, sort_keys=True)
    return v


def write_artifacts(command: str, cfg: RunConfig, outcome: Outcome, out_dir: Path) -> tuple[Path, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{command}-{cfg.digest()}"
    doc = {"command": command, "config": cfg.resolved(), "verdicts": outcome.verdicts,
           "warnings": outcome.warnings, "result": outcome.payload}
    jpath = out_dir / f"{stem}.json"
    cpath = out_dir / f"{stem}.csv"
    jpath.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    header = "# config: " + json.dumps(cfg.resolved(), sort_keys=True, separators=(",", ":")) + "\n"
    cpath.write_text(header + _rows_csv(outcome.rows))
    return jpath, cpath


def dispatch(command: str, cfg: RunConfig, out_dir: Path | None = None, strict: bool = False) -> int:
    """Run ``command`` and persist its artifacts; return the exit status."""
    if command not in RUNNERS:
        return EXIT_USAGE
    try:
        outcome = RUNNERS[command](cfg)
    except PreconditionError as exc:
        print(f"{command}: refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except InvalidInputError as exc:
        print(f"{command}: refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    write_artifacts(command, cfg, outcome, Path(out_dir if out_dir is not None else cfg.out))
    for w in outcome.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(outcome.summary)
    failed = not all(outcome.verdicts.values()) or (strict and outcome.warnings)
    return EXIT_FAIL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="liouvillebary", description="Weighted barycenter and bubble experiments.")
    p.add_argument("command", help="one of: " + ", ".join(COMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=None, help="output directory (default: config 'out' or '.')")
    p.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
    p.add_argument("--lambda-grid", default=None, help="comma-separated lambda values")
    p.add_argument("--strict", action="store_true", help="treat warnings as failures")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command not in COMMANDS:
        parser.print_usage(sys.stderr)
        print(f"unknown command {args.command!r}; expected one of: {', '.join(COMMANDS)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        data = json.loads(Path(args.config).read_text())
    except OSError as exc:
        print(f"config: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        print(f"config: invalid JSON at line {exc.lineno}: {exc.msg}", file=sys.stderr)
        return EXIT_CONFIG
    if isinstance(data, dict):
        if args.seed is not None:
            data["seed"] = args.seed
        if args.lambda_grid is not None:
            try:
                data["lambdas"] = [parse_real(v, "lambda-grid") for v in args.lambda_grid.split(",")]
            except InvalidInputError as exc:
                print(f"config: {exc}", file=sys.stderr)
                return EXIT_CONFIG
    try:
        cfg = RunConfig.from_dict(data)
    except ConfigError as exc:
        for msg in exc.problems:
            print(f"config: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return dispatch(args.command, cfg, Path(args.out) if args.out else None, args.strict)
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
