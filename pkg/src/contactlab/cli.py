"""Command-line experiment runner.

Every run reads a YAML/JSON config, validates it, applies flag overrides and
writes into an output directory:

* ``config.resolved.yaml``: the full config with defaults filled in;
* ``report.json``: deterministic results (byte-identical across reruns);
* ``meta.json``: timestamp, versions and worker count;
* CSV files with spectra, traces, branch diagrams or check matrices.

Exit codes: 0 success, 1 config error, 2 numeric warnings, 3 ambiguity,
4 invariant failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import datetime as _dt
import io
import json
import math
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import capacity, flows, geom, product, profiles, selector, spectra
from .errors import (
    AmbiguousCrossing,
    ConfigError,
    ConstraintViolation,
    ContactLabError,
    InfeasibleProfile,
    OutOfChart,
    ResolutionTooCoarse,
    SupportOverflow,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_AMBIGUOUS, EXIT_INVARIANT = 0, 1, 2, 3, 4
COMMANDS = ("spectrum", "selector", "capacity", "nonsqueeze", "verify")

# errors that mean the config describes an experiment that cannot be set up
_SETUP_ERRORS = (InfeasibleProfile, ConstraintViolation, OutOfChart, SupportOverflow, ResolutionTooCoarse)

# --------------------------------------------------------------------------
# Schema
# --------------------------------------------------------------------------

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_POS_INT = {"type": "integer", "minimum": 1}


def _obj(props: dict) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False}


PARAM_SCHEMAS = {
    "spectrum": _obj({
        "family": {"enum": ["radial", "reeb", "identity"]},
        "r": _POS, "eps": _POS, "s": _NUM,
        "T": {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 1}]},
        "method": {"enum": ["numeric", "analytic"]},
        "window": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
        "n_points": _POS_INT, "n_times": _POS_INT, "steps": {"type": ["integer", "null"], "minimum": 1},
    }),
    "selector": _obj({
        "family": {"enum": ["radial", "reeb"]},
        "r": _POS, "eps": _POS,
        "T_max": _POS, "T_points": {"type": "integer", "minimum": 2},
        "hint": {"enum": ["nonnegative", "nonpositive", "none"]},
        "tie_break": {"enum": ["error", "max"]},
    }),
    "capacity": _obj({
        "r": {"oneOf": [_POS, {"type": "array", "items": _POS, "minItems": 1}]},
        "eps_grid": {"type": "array", "items": _POS, "minItems": 1},
        "lam_R": _POS,
        "samples": {"type": "integer", "minimum": 1},
        "steps": _POS_INT,
        "displacer": _obj({
            "kind": {"enum": ["translation", "declared", "none"]},
            "margin": _POS, "transition": _POS,
            "energy": _POS, "support_radius": _POS, "file": {"type": "string"},
        }),
    }),
    "nonsqueeze": _obj({
        "a1": _POS, "a2": _POS,
        "experiment": {"type": "boolean"},
        "eps_grid": {"type": "array", "items": _POS, "minItems": 1},
    }),
    "verify": _obj({
        "suites": {"type": "array", "items": {"enum": ["geometry", "flows", "spectra", "graph",
                                                          "nonsqueeze", "axioms"]}},
        "samples": {"type": "integer", "minimum": 10},
        "steps": _POS_INT,
        "axioms": {"type": "object"},
    }),
}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["command"],
    "additionalProperties": False,
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "workspace": _obj({"n": {"type": "integer", "minimum": 1, "maximum": 4},
                           "k": {"type": "integer", "minimum": 1}}),
        "seed": {"type": "integer", "minimum": 0},
        "workers": _POS_INT,
        "tolerance_scale": _POS,
        "out_dir": {"type": "string"},
        "params": {"type": "object"},
    },
}

DEFAULTS = {
    "spectrum": {"family": "radial", "r": 1.0, "eps": 0.1, "s": 1.0, "T": 1.0, "method": "numeric",
                 "window": [0.0, float(spectra.TWO_PI)], "n_points": 2000, "n_times": 400, "steps": None},
    "selector": {"family": "radial", "r": 1.0, "eps": 0.1, "T_max": 1.0, "T_points": 100,
                 "hint": "nonnegative", "tie_break": "error"},
    "capacity": {"r": 1.0, "eps_grid": [0.1, 0.01, 0.001], "lam_R": float(geom.SQRT2), "samples": 2000, "steps": 800,
                 "displacer": {"kind": "translation", "margin": 0.1}},
    "nonsqueeze": {"a1": 1.4142, "a2": 0.9, "experiment": False, "eps_grid": [0.01, 0.001]},
    "verify": {"suites": ["geometry", "flows", "spectra", "graph", "nonsqueeze", "axioms"],
               "samples": 200, "steps": 2000, "axioms": {}},
}


# --------------------------------------------------------------------------
# Loading
# --------------------------------------------------------------------------

def _node_at(node, path):
    """Deepest YAML node reachable along ``path`` (for error positions)."""
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = next((v for k, v in node.value if k.value == key), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            nxt = node.value[key]
        else:
            nxt = None
        if nxt is None:
            break
        node = nxt
    return node


def _key_node(node, key):
    if isinstance(node, yaml.MappingNode):
        return next((k for k, _ in node.value if k.value == key), None)
    return None


def _where(source: str, root, path, extra_key=None) -> str:
    node = _node_at(root, path) if root is not None else None
    if extra_key is not None:
        node = _key_node(node, extra_key) or node
        path = [*path, extra_key]
    line = f"line {node.start_mark.line + 1}" if node is not None else "line ?"
    dotted = ".".join(str(p) for p in path) or "<root>"
    return f"{source}: {line}: {dotted}"


def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse and validate a config; raises ConfigError with a line-precise message."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        line = f"line {mark.line + 1}" if mark is not None else "line ?"
        raise ConfigError(f"{source}: {line}: {getattr(err, 'problem', None) or err}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: line 1: config must be a mapping")
    _validate(data, root, source)
    return data


def _extra_key(err):
    if err.validator != "additionalProperties" or not isinstance(err.instance, dict):
        return None
    allowed = set(err.schema.get("properties", {}))
    extra = sorted(k for k in err.instance if k not in allowed)
    return extra[0] if extra else None


def _validate(data: dict, root, source: str) -> None:
    errors = [([], e) for e in jsonschema.Draft7Validator(CONFIG_SCHEMA).iter_errors(data)]
    if not errors:
        schema = PARAM_SCHEMAS[data["command"]]
        errors = [(["params"], e) for e in jsonschema.Draft7Validator(schema).iter_errors(data.get("params") or {})]
    if errors:
        prefix, err = min(errors, key=lambda pe: [str(p) for p in pe[0] + list(pe[1].path)])
        path = prefix + list(err.path)
        raise ConfigError(f"{_where(source, root, path, _extra_key(err))}: {err.message}")


def resolve(config: dict, overrides: dict | None = None) -> dict:
    """Fill defaults and apply flag overrides; the result is the provenance record."""
    cfg = copy.deepcopy(config)
    cmd = cfg["command"]
    ws = {"n": 1, "k": 2}
    ws.update(cfg.get("workspace") or {})
    params = copy.deepcopy(DEFAULTS[cmd])
    given = cfg.get("params") or {}
    if cmd == "capacity" and "displacer" in given:
        params["displacer"] = {}
    params.update(given)
    out = {
        "command": cmd,
        "workspace": ws,
        "seed": cfg.get("seed", 0),
        "workers": cfg.get("workers", 1),
        "tolerance_scale": cfg.get("tolerance_scale", 1.0),
        "out_dir": cfg.get("out_dir", "runs/" + cmd),
        "params": params,
    }
    for key, val in (overrides or {}).items():
        if val is not None:
            out[key] = val
    jsonschema.Draft7Validator(CONFIG_SCHEMA).validate(out)
    return out


def serialize_config(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=True, default_flow_style=False)


# --------------------------------------------------------------------------
# Jobs (module level so worker processes can pickle them)
# --------------------------------------------------------------------------

def _spectrum_job(args):
    ws, p, seed, T = args
    n = ws["n"]
    window = tuple(p["window"])
    analytic = None
    if p["family"] == "radial":
        f = profiles.make_profile(p["r"], p["eps"])
        analytic = spectra.spectrum_radial(f, T) if 0 <= T <= 1 else None
        if p["method"] == "numeric":
            phi = spectra.IdentityMap(n) if T == 0 else spectra.FlowMap(flows.radial_lift(f, n), T, p["steps"])
    elif p["family"] == "reeb":
        analytic = spectra.spectrum_branches([1.0], p["s"] * T, window)
        phi = spectra.ReebMap(n, p["s"] * T)
    else:
        analytic = spectra.spectrum_branches([0.0], T, window)
        phi = spectra.IdentityMap(n)
    if p["method"] == "analytic":
        if analytic is None:
            raise ConstraintViolation("no closed form for this family and T")
        return {"T": T, "values": analytic.all_values(window).tolist(), "residuals": None,
                "no_convergence": 0, "failures": [], "analytic": None}
    spec = spectra.spectrum_numeric(phi, window=window, n_points=p["n_points"], n_times=p["n_times"], seed=seed)
    out = spec.to_dict()
    out.update({"T": T, "no_convergence": len(spec.no_convergence)})
    out["analytic"] = None if analytic is None else analytic.all_values(window).tolist()
    return out


def _capacity_job(args):
    ws, p, seed, r = args
    try:
        D = _displacer(p["displacer"], r)
        rep = capacity.capacity_report(ws["k"], r, p["eps_grid"], D=D, lam_R=p["lam_R"], n=ws["n"],
                                       samples=p["samples"], allow_declared=True, seed=seed)
    except ContactLabError as err:
        code = EXIT_CONFIG if isinstance(err, _SETUP_ERRORS) else EXIT_INVARIANT
        return {"report": {"r": r, "error": f"{type(err).__name__}: {err}"}, "problems": [], "csv": None,
                "code": code}
    return {"report": rep.to_dict(), "problems": rep.check(), "csv": rep.csv_row(), "code": EXIT_OK}


def _displacer(spec: dict, r: float):
    kind = spec.get("kind", "translation")
    if kind == "none":
        return None
    if kind == "translation":
        return profiles.make_translation_displacer(r, spec.get("margin", 0.1), spec.get("transition"))
    if "file" in spec:
        return profiles.displacer_from_json(Path(spec["file"]).read_text())
    if "energy" not in spec:
        raise ConstraintViolation("a declared displacer needs 'energy' (or 'file')")
    return profiles.make_declared_displacer(r, spec["energy"], spec.get("support_radius", r))


def _map_jobs(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


# --------------------------------------------------------------------------
# Commands: each returns (report, {filename: text}, exit code)
# --------------------------------------------------------------------------

def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def cmd_spectrum(cfg: dict):
    p = cfg["params"]
    Ts = p["T"] if isinstance(p["T"], list) else [p["T"]]
    results = _map_jobs(_spectrum_job, [(cfg["workspace"], p, cfg["seed"], float(T)) for T in Ts], cfg["workers"])
    tol = 1e-5 * cfg["tolerance_scale"]
    rows, warnings = [], []
    for res in results:
        res["matches_analytic"] = None
        if res["analytic"] is not None:
            ok, gap = spectra.spectra_agree(res["values"], res["analytic"], tol)
            res["matches_analytic"], res["analytic_gap"] = ok, gap
        resid = res["residuals"] or [None] * len(res["values"])
        rows += [(res["T"], v, "" if e is None else e) for v, e in zip(res["values"], resid)]
        if res["no_convergence"]:
            warnings.append(f"T={res['T']}: {res['no_convergence']} candidates without convergence")
    report = {"command": "spectrum", "results": results, "warnings": warnings}
    files = {"spectrum.csv": _csv(["T", "value", "residual"], rows)}
    return report, files, EXIT_NUMERIC if warnings else EXIT_OK


def cmd_selector(cfg: dict):
    p = cfg["params"]
    T = np.linspace(0.0, p["T_max"], p["T_points"])
    if p["family"] == "radial":
        f = profiles.make_profile(p["r"], p["eps"])
        slopes = [f.height, 0.0]
    else:
        slopes = [1.0]
    hint = p["hint"]
    family = lambda t: spectra.spectrum_branches(slopes, t)  # noqa: E731
    code, crossing, message = EXIT_OK, None, None
    try:
        trace = selector.track_selector(family, T, nonnegative=hint == "nonnegative",
                                        nonpositive=hint == "nonpositive", tie_break=p["tie_break"])
    except AmbiguousCrossing as err:
        trace, crossing, message, code = err.trace, err.location, str(err), EXIT_AMBIGUOUS
    diagram = selector.branch_diagram(slopes, T)
    report = {
        "command": "selector",
        "slopes": slopes,
        "trace": None if trace is None else trace.to_dict(),
        "ambiguous_crossing": crossing,
        "warning": message,
    }
    files = {"branches.csv": _csv(["T", *diagram], zip(T, *diagram.values()))}
    if trace is not None:
        files["trace.csv"] = trace.to_columns()
    return report, files, code


def cmd_capacity(cfg: dict):
    p = cfg["params"]
    radii = p["r"] if isinstance(p["r"], list) else [p["r"]]
    jobs = [(cfg["workspace"], p, cfg["seed"], float(r)) for r in radii]
    results = _map_jobs(_capacity_job, jobs, cfg["workers"])
    problems = [f"r={r}: {msg}" for r, res in zip(radii, results) for msg in res["problems"]]
    errors = [res["report"]["error"] for res in results if "error" in res["report"]]
    report = {"command": "capacity", "reports": [res["report"] for res in results], "problems": problems,
              "warnings": errors}
    header = "k,r,lower_bound,ceil_lower,upper_bound,analytic_limit\n"
    files = {"capacity.csv": header + "".join(res["csv"] + "\n" for res in results if res["csv"])}
    code = max([res["code"] for res in results] + [EXIT_INVARIANT if problems else EXIT_OK])
    return report, files, code


def cmd_nonsqueeze(cfg: dict):
    p, ws = cfg["params"], cfg["workspace"]
    decision = capacity.nonsqueeze_decide(ws["k"], p["a1"], p["a2"])
    report = {"command": "nonsqueeze", "decision": decision.to_dict()}
    if p["experiment"]:
        exp = capacity.full_nonsqueezing_experiment(ws["k"], p["a1"], p["a2"], eps_grid=p["eps_grid"], n=ws["n"])
        report["experiment"] = exp.to_dict()
    row = (ws["k"], p["a1"], p["a2"], "" if decision.witness_j is None else decision.witness_j, decision.verdict)
    return report, {"decision.csv": _csv(["k", "a1", "a2", "witness_j", "verdict"], [row])}, EXIT_OK


def _check(name, instance, value, tol, detail=""):
    return {"axiom": name, "instance": instance, "passed": bool(value <= tol), "margin": float(tol - value),
            "detail": detail}


def verify_suite(cfg: dict) -> list[dict]:
    """Invariant checks at the configured tolerance scale, followed by the selector-axiom harness."""
    p, ws, s = cfg["params"], cfg["workspace"], cfg["tolerance_scale"]
    n, k, N, steps = ws["n"], ws["k"], p["samples"], p["steps"]
    rng = np.random.default_rng(cfg["seed"])
    out = []
    suites = set(p["suites"])
    f = profiles.make_profile(1.0, 0.1)
    h = flows.radial_lift(f, n)
    if "geometry" in suites:
        x = geom.random_sphere(n, N, rng)
        R = geom.reeb_field(x)
        v = geom.random_tangent(x, rng)
        out.append(_check("reeb_normalization", f"n={n}", float(np.max(np.abs(geom.alpha1(x, R) - 1))), 1e-12 * s))
        out.append(_check("reeb_kernel", f"n={n}", float(np.max(np.abs(geom.dalpha1(R, v)))), 1e-12 * s))
        y = np.exp(2j * np.pi / k) * x
        gap = max(geom.lens_distance(a, b, k) for a, b in zip(x, y))
        out.append(_check("lens_quotient", f"k={k}", gap, 1e-12 * s))
    if "flows" in suites:
        z = geom.chart_coords(geom.sample_lifted_ball(n, 1.2, N, rng))
        res = flows.lift_identity_residual(flows.radial_chart_hamiltonian(f, n), z, steps=steps,
                                           exact_flow=lambda z, t: flows.radial_flow_r2n(f, z, t))
        out.append(_check("lift_identity", f"n={n}", res, 1e-6 * s))
        x = geom.random_sphere(n, N, rng)
        out.append(_check("equivariance", f"n={n}", flows.equivariance_residual(h, x, steps=steps), 1e-6 * s))
        smp = flows.integrate_contact_flow(h, x, 1.0, steps)
        out.append(_check("strictness", f"n={n}", float(np.max(np.abs(smp.g))), 1e-7 * s))
        gen = _generic_hamiltonian(n)
        gs = product.graph_sample(gen, geom.random_sphere(n, max(10, N // 10), rng), 1.0, steps, rng,
                                  record_every=steps // 20)
        out.append(_check("pullback", gen.name, product.GraphIsotopy(gs).legendrian_residual(), 1e-6 * s))
    if "spectra" in suites:
        spec = spectra.spectrum_numeric(spectra.FlowMap(h, 1.0), n_points=1000, seed=cfg["seed"])
        _, gap = spectra.spectra_agree(spec.values, spectra.spectrum_radial(f, 1.0).all_values(), 1e-5 * s)
        out.append(_check("spectrum_formula", f"n={n},r=1,eps=0.1", gap, 1e-5 * s))
    if "graph" in suites:
        x = geom.random_sphere(n, max(10, N // 10), rng)
        smp = flows.integrate_contact_flow(h, x, 1.0, steps)
        out.append(_check("ham_graph", f"n={n}", product.check_ham_graph(smp, h), 1e-6 * s))
        gspec = product.spectrum_via_graph(product.GraphIsotopy(smp, spectra.FlowMap(h, 1.0)), n_points=1000,
                                           seed=cfg["seed"])
        _, gap = spectra.spectra_agree(gspec.values, spectra.spectrum_radial(f, 1.0).all_values(), 1e-5 * s)
        out.append(_check("graph_spectrum", f"n={n}", gap, 1e-5 * s))
    if "nonsqueeze" in suites:
        d = capacity.nonsqueeze_decide(2, geom.SQRT2, 0.9)
        out.append(_check("nonsqueeze_k2", "a1=sqrt2,a2=0.9", 0.0 if d.witness_j == 1 else 1.0, 0.0))
        d = capacity.nonsqueeze_decide(1, geom.SQRT2, 0.5)
        out.append(_check("nonsqueeze_k1", "a1=sqrt2,a2=0.5", 0.0 if d.witness_j is None else 1.0, 0.0))
    if "axioms" in suites:
        axiom_cfg = {"seed": cfg["seed"], **p["axioms"]}
        out.extend(selector.check_selector_axioms(axiom_cfg))
    return out


def _generic_hamiltonian(n: int) -> flows.ContactHamiltonian:
    """A time-dependent Hamiltonian with no circle symmetry, for pullback tests."""
    def func(t, x):
        return np.real(x[..., 0] ** 2 * np.conj(x[..., -1])) + 0.3 * np.cos(t) * np.real(x[..., 0]) \
            + 0.2 * np.abs(x[..., -1]) ** 2
    return flows.ContactHamiltonian(n, func, name="generic")


def cmd_verify(cfg: dict):
    entries = verify_suite(cfg)
    failed = [e for e in entries if not e["passed"]]
    report = {"command": "verify", "entries": entries, "failed": len(failed)}
    rows = [(e["axiom"], e["instance"], e["passed"], e["margin"], e["detail"]) for e in entries]
    files = {"matrix.csv": _csv(["check", "instance", "passed", "margin", "detail"], rows)}
    return report, files, EXIT_INVARIANT if failed else EXIT_OK


RUNNERS = {"spectrum": cmd_spectrum, "selector": cmd_selector, "capacity": cmd_capacity,
           "nonsqueeze": cmd_nonsqueeze, "verify": cmd_verify}


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------

def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _clean(o):
    """Replace non-finite floats by strings so reports stay strict JSON."""
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, (float, np.floating)) and not math.isfinite(o):
        return repr(float(o))
    return o


def dumps_report(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True, default=_json_default) + "\n"


def run(cfg: dict, out_dir: Path | None = None) -> int:
    """Run a resolved config and write its outputs; returns the exit code."""
    out = Path(out_dir or cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved.yaml").write_text(serialize_config(cfg))
    try:
        report, files, code = RUNNERS[cfg["command"]](cfg)
    except _SETUP_ERRORS as err:
        report, files, code = {"command": cfg["command"], "error": f"{type(err).__name__}: {err}"}, {}, EXIT_CONFIG
    except ContactLabError as err:
        report, files, code = {"command": cfg["command"], "error": f"{type(err).__name__}: {err}"}, {}, \
            EXIT_INVARIANT
    report["exit_code"] = code
    (out / "report.json").write_text(dumps_report(report))
    for name, text in files.items():
        (out / name).write_text(text)
    meta = {
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "contactlab": _version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "workers": cfg["workers"],
        "argv": sys.argv[1:],
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if "error" in report:
        print(report["error"], file=sys.stderr)
    for w in report.get("warnings", []) + ([report["warning"]] if report.get("warning") else []):
        print(f"warning: {w}", file=sys.stderr)
    return code


def _version() -> str:
    from . import __version__
    return __version__


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contactlab", description="Contact-geometry experiment runner.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} pipeline")
        sp.add_argument("--config", type=Path, help="YAML or JSON config file")
        sp.add_argument("--workers", type=int, help="parallel jobs (results do not depend on it)")
        sp.add_argument("--out-dir", type=str, help="output directory")
        sp.add_argument("--seed", type=int, help="random seed")
        sp.add_argument("--tolerance-scale", type=float, help="multiply every check tolerance")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is not None:
            text = args.config.read_text()
            data = parse_config(text, str(args.config))
        else:
            data = {"command": args.command}
        if data["command"] != args.command:
            raise ConfigError(f"config is for '{data['command']}', not '{args.command}'")
        overrides = {"workers": args.workers, "out_dir": args.out_dir, "seed": args.seed,
                     "tolerance_scale": args.tolerance_scale}
        try:
            cfg = resolve(data, overrides)
        except jsonschema.ValidationError as err:
            raise ConfigError(f"flag override: {'.'.join(map(str, err.path))}: {err.message}") from None
    except (ConfigError, OSError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
