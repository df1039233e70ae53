"""Pipeline driver and command-line entry point.

Reads a nested key-value config, runs kernel validation, assembly, the
eigenpair, the embedding estimate, the hypothesis checks and (unless in
checks-only mode) the constrained solve, then writes report.json,
solution.csv and plot.dat into the output directory.

Exit codes: 0 success, 1 configuration error, 2 hypothesis failure,
3 numeric failure.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__, hypotheses
from .assembly import HField, assemble_stiffness
from .embedding import critical_exponent, estimate_c_q
from .errors import (
    ConfigurationError,
    FraclapError,
    HypothesisError,
)
from .kernel import FRACTIONAL, TABULATED, Kernel, validate_conditions
from .mesh import build_interval_mesh, build_rectangle_mesh
from .solver import (
    BallConstraint,
    solve_in_ball,
)
from .spectral import first_eigenpair

MODES = ("theorem_3_2", "theorem_4_3", "theorem_1_1", "example_4_4", "checks_only")

_DEFAULTS = {
    "quadrature_order": 6,
    "eig_tol": 1e-10,
    "cq_restarts": 32,
    "cq_inflation": 1.10,
    "seed": 0,
    "a": 0.0,
    "b": None,  # +inf
}


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigurationError(f"missing required config key: {key!r}")
    return cfg[key]


def load_config(path) -> dict:
    """Parse and validate the run configuration file."""
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config file is not valid: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigurationError("config root must be a mapping")

    mode = _require(cfg, "mode")
    if mode not in MODES:
        raise ConfigurationError(f"unknown mode {mode!r}; expected one of {MODES}")
    _require(cfg, "domain")
    _require(cfg, "s")
    for key, val in _DEFAULTS.items():
        cfg.setdefault(key, val)
    cfg.setdefault("solver", {})
    solver = cfg["solver"]
    if not isinstance(solver, dict):
        raise ConfigurationError("config key 'solver' must be a mapping")
    solver.setdefault("max_iters", 100_000)
    solver.setdefault("grad_tol", 1e-9)
    solver.setdefault("starts", 8)
    solver.setdefault("seed", cfg["seed"])
    cfg.setdefault("kernel", {"type": "fractional"})
    cfg.setdefault("h", {"constant": 1.0})
    cfg.setdefault("output", ".")
    return cfg


def _build_mesh(cfg: dict):
    dom = cfg["domain"]
    if not isinstance(dom, dict):
        raise ConfigurationError("config key 'domain' must be a mapping")
    if "interval" in dom:
        a, b = dom["interval"]
        cells = int(_require(dom, "cells"))
        return build_interval_mesh(float(a), float(b), cells)
    if "rectangle" in dom:
        (x0, x1), (y0, y1) = dom["rectangle"]
        cells = _require(dom, "cells")
        try:
            nx, ny = (int(c) for c in cells)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(
                "rectangle domains need 'cells: [nx, ny]'"
            ) from exc
        return build_rectangle_mesh((float(x0), float(x1)), (float(y0), float(y1)), nx, ny)
    raise ConfigurationError("config key 'domain' needs 'interval' or 'rectangle'")


def _build_kernel(cfg: dict, n: int) -> Kernel:
    spec = cfg["kernel"]
    s = float(cfg["s"])
    ktype = spec.get("type", "fractional")
    beta = float(spec.get("beta", 1.0))
    if ktype == "fractional":
        return Kernel(n=n, s=s, variant=FRACTIONAL, beta=beta)
    if ktype == "tabulated":
        path = _require(spec, "table_path")
        try:
            table = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigurationError(
                f"config key 'kernel.table_path': cannot load {path}: {exc}"
            ) from exc
        if table.shape[1] != 2:
            raise ConfigurationError("kernel table must have two columns (radius, value)")
        return Kernel(
            n=n, s=s, variant=TABULATED, beta=beta,
            table_r=table[:, 0], table_v=table[:, 1],
        )
    raise ConfigurationError(f"config key 'kernel.type': unknown value {ktype!r}")


def _build_h(cfg: dict, mesh) -> HField:
    spec = cfg["h"]
    if not isinstance(spec, dict):
        raise ConfigurationError("config key 'h' must be a mapping")
    if "constant" in spec:
        return HField.constant(mesh, float(spec["constant"]))
    if "piecewise" in spec:
        path = spec["piecewise"]
        try:
            with open(path) as fh:
                pairs = [row for row in csv.reader(fh) if row]
        except OSError as exc:
            raise ConfigurationError(
                f"config key 'h.piecewise': cannot read {path}: {exc}"
            ) from exc
        return HField.piecewise(mesh, [(int(r[0]), float(r[1])) for r in pairs])
    raise ConfigurationError("config key 'h' needs 'constant' or 'piecewise'")


def _build_nonlinearity(cfg: dict, alpha_scale: float | None = None):
    spec = cfg.get("f")
    if spec is None:
        raise ConfigurationError("missing required config key: 'f'")
    if "builtin" in spec:
        name = spec["builtin"]
        if name == "saturating":
            return hypotheses.saturating(float(spec.get("alpha", alpha_scale or 1.0)))
        if name == "power":
            return hypotheses.power(float(_require(spec, "p")))
        if name == "linear":
            return hypotheses.linear(float(spec.get("c", 1.0)))
        raise ConfigurationError(f"config key 'f.builtin': unknown value {name!r}")
    if "expr" in spec:
        return hypotheses.custom(spec["expr"], gamma=float(spec.get("gamma", 2.0)))
    raise ConfigurationError("config key 'f' needs 'builtin' or 'expr'")


def _build_psi(cfg: dict, q: float):
    spec = cfg.get("psi", {"default_q": True})
    if spec.get("default_q"):
        return hypotheses.AuxFunction.default(q)
    if "expr" in spec:
        return hypotheses.AuxFunction.from_expression(spec["expr"], q)
    raise ConfigurationError("config key 'psi' needs 'default_q: true' or 'expr'")


def _entry(value, provenance, tolerance=None):
    """Report entry: a value with its provenance and tolerance."""
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        value = repr(value)
    out = {"value": value, "provenance": provenance}
    if tolerance is not None:
        out["tolerance"] = tolerance
    return out


def _verdict_entry(verdict):
    details = {}
    for k, v in verdict.details.items():
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        if isinstance(v, float) and not np.isfinite(v):
            v = repr(v)
        if isinstance(v, (list, tuple, np.ndarray)):
            v = [float(x) for x in np.asarray(v).ravel()]
        details[str(k)] = v
    return {"passed": bool(verdict.passed), "details": details}


def run_pipeline(cfg: dict):
    """Run the configured pipeline; returns (exit_code, report dict)."""
    report = {"config_echo": {
        "mode": cfg["mode"], "s": float(cfg["s"]), "seed": int(cfg["seed"]),
    }}
    mode = cfg["mode"]
    mesh = _build_mesh(cfg)
    kernel = _build_kernel(cfg, mesh.n)
    # n > 2s is the dimensional regime of the continuum theory; n <= 2s
    # only makes the critical exponent infinite, so it is reported in the
    # kernel certificate instead of rejected here
    kcert = validate_conditions(kernel)
    report["kernel"] = {
        k: bool(v) if isinstance(v, (bool, np.bool_)) else v for k, v in kcert.items()
    }
    verdicts = {"k1": kcert["k1"], "k2": kcert["k2"], "k3": kcert["k3"]}

    h_field = _build_h(cfg, mesh)
    system = assemble_stiffness(mesh, kernel, quadrature_order=int(cfg["quadrature_order"]))
    eig = first_eigenpair(system, tol=float(cfg["eig_tol"]))
    report["lambda1"] = _entry(eig.lambda1, "measured", float(cfg["eig_tol"]))
    report["eigen_iterations"] = _entry(eig.iterations, "measured")
    report["eigen_residual"] = _entry(eig.residual_norm, "measured")

    # mode conveniences: the single-parameter path fixes psi = t^2, q = 2
    # and carries the whole nonlinearity scale through h
    single_parameter = mode in ("theorem_1_1", "example_4_4")
    if single_parameter:
        alpha = cfg.get("alpha")
        if alpha is None:
            alpha = float(cfg.get("alpha_over_lambda1", 2.0)) * eig.lambda1
        alpha = float(alpha)
        h_field = HField.constant(mesh, alpha)
        q = 2.0
        report["alpha"] = _entry(alpha, "config")
    else:
        q = float(_require(cfg, "q"))

    two_star = critical_exponent(mesh.n, kernel.s)
    if not 1.0 <= q < two_star:
        raise ConfigurationError(
            f"config key 'q': must satisfy 1 <= q < 2* = {two_star:g}, got {q}"
        )

    emb = estimate_c_q(
        system, mesh, q,
        restarts=int(cfg["cq_restarts"]),
        tol=1e-10,
        seed=int(cfg["seed"]),
        e1=eig.e1,
    )
    inflation = float(cfg["cq_inflation"])
    c_q = emb.c_q_lower * inflation
    report["c_q"] = {
        "raw_lower_bound": _entry(emb.c_q_lower, "measured"),
        "inflated": _entry(c_q, "derived"),
        "inflation_factor": _entry(inflation, "config"),
        "q": _entry(q, "config"),
        "two_star": _entry(emb.two_star, "derived"),
    }

    nl = hypotheses.saturating(1.0) if single_parameter else _build_nonlinearity(cfg)
    solving = mode != "checks_only"
    if mode in ("theorem_4_3", "theorem_1_1", "example_4_4") or cfg.get("truncate"):
        nl = hypotheses.truncate_nonlinearity(nl)
    aux = hypotheses.AuxFunction.default(q) if single_parameter else _build_psi(cfg, q)

    hstats = hypotheses.HStats(
        esssup=h_field.esssup, essinf=h_field.essinf, l1=h_field.l1(mesh)
    )
    report["h"] = {
        "esssup": _entry(hstats.esssup, "config"),
        "essinf": _entry(hstats.essinf, "config"),
        "l1": _entry(hstats.l1, "derived"),
    }

    verdicts["class_a"] = hypotheses.check_class_a(nl)
    verdicts["psi_family"] = hypotheses.check_aux_conditions(aux)
    verdicts["h1"] = hypotheses.check_h1(nl, q)
    lim = hypotheses.liminf_F_over_xi2_at_zero(nl)
    try:
        threshold = hypotheses.alpha_threshold(eig.lambda1, lim)
    except HypothesisError:
        threshold = float("inf")
    report["alpha_threshold"] = _entry(threshold, "derived")
    verdicts["h2"] = hypotheses.check_h2(nl, eig.lambda1, hstats.essinf)
    verdicts["h3"] = hypotheses.check_h3(nl, q, c_q, hstats)

    a = float(cfg["a"])
    b = float("inf") if cfg["b"] in (None, "inf") else float(cfg["b"])
    analysis = hypotheses.analyze_g_lambda(nl, aux, a=a, b=b)
    report["alpha_val"] = _entry(analysis.alpha_val, "measured")
    report["beta_val"] = _entry(analysis.beta_val, "measured")
    verdicts["alpha_lt_beta"] = hypotheses.Verdict(
        passed=analysis.alpha_val < analysis.beta_val,
        label="alpha_lt_beta",
        details={"alpha": analysis.alpha_val, "beta": analysis.beta_val},
    )

    required = ["k1", "k2", "k3", "class_a", "psi_family",
                "alpha_lt_beta", "condition_F"]
    if mode in ("theorem_4_3", "theorem_1_1", "example_4_4", "checks_only"):
        required += ["h1", "h2", "h3"]
    failed_so_far = [
        k for k in required
        if k != "condition_F" and not (
            verdicts[k] if isinstance(verdicts[k], bool) else verdicts[k].passed
        )
    ]

    r_spec = cfg.get("r", {"search": True})
    level = None
    if failed_so_far:
        r = float("nan")
        verdicts["condition_F"] = hypotheses.Verdict(
            passed=False, label="condition_F",
            details={"reason": "skipped: earlier checks failed"},
        )
    elif verdicts["alpha_lt_beta"].passed:
        if "value" in r_spec:
            r = float(r_spec["value"])
            level = hypotheses.find_level_parameter(nl, aux, r, analysis)
            verdicts["condition_F"] = hypotheses.check_condition_F(
                nl, aux, r, c_q, hstats, level
            )
        else:
            r, level, vF, passing = hypotheses.find_admissible_r(
                nl, aux, analysis, c_q, hstats
            )
            verdicts["condition_F"] = vF
            report["admissible_r_count"] = _entry(len(passing), "measured")
    else:
        r = float("nan")
        verdicts["condition_F"] = hypotheses.Verdict(
            passed=False, label="condition_F",
            details={"reason": "empty admissible interval"},
        )

    report["verdicts"] = {
        k: _verdict_entry(v) if not isinstance(v, bool) else {"passed": v, "details": {}}
        for k, v in verdicts.items()
    }
    failing = [k for k in required if not (
        verdicts[k] if isinstance(verdicts[k], bool) else verdicts[k].passed
    )]
    report["required_checks"] = sorted(required)
    report["failing_checks"] = sorted(failing)

    if level is not None:
        report["r"] = _entry(r, "config" if "value" in r_spec else "derived")
        report["lambda_r"] = _entry(level.lambda_r, "measured", 1e-8)
        report["xi_star"] = _entry(level.xi_star, "measured")
        cf = verdicts["condition_F"].details
        report["condition_F_lhs"] = _entry(cf.get("lhs"), "measured")
        report["condition_F_rhs"] = _entry(cf.get("rhs"), "derived")

    if failing or not solving:
        code = 0 if (not failing and not solving) else 2
        return code, report, mesh, None

    constraint = BallConstraint.from_level(
        r, q, c_q, aux.gamma_psi, hstats.esssup, hstats.l1
    )
    report["sigma"] = _entry(constraint.sigma, "derived", 1e-12)
    report["gamma_psi"] = _entry(aux.gamma_psi, "derived")

    solver = cfg["solver"]
    sol = solve_in_ball(
        system, mesh, h_field, nl, constraint,
        starts=int(solver["starts"]),
        seed=int(solver["seed"]),
        grad_tol=float(solver["grad_tol"]),
        max_iters=int(solver["max_iters"]),
        e1=eig.e1,
        lambda1=eig.lambda1,
    )
    report["solution"] = {
        "energy": _entry(sol.energy, "measured"),
        "x0_norm_sq": _entry(sol.x0_norm_sq, "measured"),
        "sigma": _entry(sol.sigma, "derived"),
        "nonnegative": bool(sol.nonnegative),
        "nontrivial": bool(sol.nontrivial),
        "witness_eta": _entry(sol.witness_eta, "measured") if sol.witness_eta else None,
        "bound_F2": bool(sol.bound_F2),
        "interior": bool(sol.interior),
        "residual_inf": _entry(sol.residual_inf, "measured", float(solver["grad_tol"])),
        "iterations": _entry(sol.iterations, "measured"),
    }
    solved = sol.nontrivial and sol.bound_F2 and sol.nonnegative
    return (0 if solved else 2), report, mesh, sol


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def emit_report(report: dict, out_dir: Path) -> None:
    """Serialize the report with deterministic key order."""
    text = json.dumps(_jsonify(report), sort_keys=True, indent=2) + "\n"
    (out_dir / "report.json").write_text(text)


def emit_solution(mesh, sol, out_dir: Path) -> None:
    full = mesh.full_vector(sol.u)
    coords = np.atleast_2d(mesh.nodes.T).T
    header = "x,u" if mesh.n == 1 else "x,y,u"
    rows = np.column_stack([coords.reshape(len(full), -1), full])
    with open(out_dir / "solution.csv", "w", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    with open(out_dir / "plot.dat", "w") as fh:
        for row in rows:
            fh.write(" ".join(f"{float(v):.17g}" for v in row) + "\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fraclap",
        description="Variational solver for kernel-driven nonlocal Dirichlet problems",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the full pipeline and write artifacts")
    p_run.add_argument("config")
    p_checks = sub.add_parser("checks", help="run hypothesis checks only")
    p_checks.add_argument("config")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.command == "checks":
            cfg["mode"] = "checks_only"
        out_dir = Path(cfg["output"])
        out_dir.mkdir(parents=True, exist_ok=True)
        code, report, mesh, sol = run_pipeline(cfg)
        emit_report(report, out_dir)
        if sol is not None:
            emit_solution(mesh, sol, out_dir)
        if code == 2:
            failing = report.get("failing_checks", [])
            msg = ", ".join(failing) if failing else "solution certificates"
            print(f"hypothesis failure: {msg}", file=sys.stderr)
        return code
    except (ConfigurationError, HypothesisError) as exc:
        kind = 1 if isinstance(exc, ConfigurationError) else 2
        print(f"error: {exc}", file=sys.stderr)
        return kind
    except FraclapError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
