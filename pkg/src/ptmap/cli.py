"""Command-line driver: every experiment is written as a CSV table.

Each subcommand takes flags or a JSON config (``--config``); flags win over
the file. Grids are written ``name:start:stop:step`` and numbers may use
``pi`` (``pi/2-1``). Tables start with ``#`` comment lines that echo the
version and the resolved config, followed by a header row.
"""

from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import operator
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np

from . import __version__
from .circuits import export_qasm, magic_decompose, to_circuit
from .dilation import d2, n0_min_stage1
from .errors import PTMapError, ValidationError
from .golden import run_all
from .grover_metrology import maximize_r, minimize_t, pt_boost, success_probability, t_of_k
from .ptcore import alpha_critical, hermitian_cos2, loads_matrix, probe_state
from .simulator import (
    estimate_cos2,
    estimate_d,
    point_seed,
    run_exact,
    sample_shots,
    stage1_circuit,
    stage2_circuit,
)
from .threestate import chi_states, cos2_pt_at_half_period, qfi_numeric, qfi_pt, stage1_theory
from .trine import LABELS, shot_sigmas, shots_within_band, trine_attack, trine_shots

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_GOLDEN = 3

# --------------------------------------------------------------------------
# value parsing

_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}


def parse_number(text) -> float:
    """Evaluate a numeric literal or a small arithmetic expression in ``pi``."""
    if isinstance(text, (int, float)):
        return float(text)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return float(np.pi)
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValidationError(f"not a number: {text!r}")

    try:
        return ev(ast.parse(str(text).strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ValidationError(f"not a number: {text!r}") from exc


def parse_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [parse_number(t) for t in text]
    return [parse_number(t) for t in str(text).split(",") if t.strip()]


def parse_grid(spec: str, expected: str | None = None) -> np.ndarray:
    """Inclusive grid from ``name:start:stop:step``."""
    parts = str(spec).split(":")
    if len(parts) != 4:
        raise ValidationError(f"grid must be name:start:stop:step, got {spec!r}")
    name, start, stop, step = parts[0], *(parse_number(p) for p in parts[1:])
    if expected is not None and name != expected:
        raise ValidationError(f"grid variable must be {expected!r}, got {name!r}")
    if not step > 0:
        raise ValidationError("grid step must be positive")
    if stop < start:
        raise ValidationError("grid is empty")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


# --------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render_csv(columns: list[str], rows: list, config: dict) -> str:
    """CSV text; the worker count is omitted from the echo since it never changes the table."""
    echo = {k: v for k, v in config.items() if k != "jobs"}
    buf = io.StringIO()
    buf.write(f"# ptmap {__version__}\n")
    buf.write("# config " + json.dumps(echo, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_svg(path: str, columns: list[str], rows: list) -> None:
    """Line chart of every numeric column against the first one."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = np.array([[float(v) for v in r] for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    for j in range(1, data.shape[1]):
        ax.plot(data[:, 0], data[:, j], label=columns[j])
    ax.set_xlabel(columns[0])
    ax.legend(fontsize="small")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _emit(args, config, columns, rows) -> None:
    text = render_csv(columns, rows, config)
    if args.out and args.out != "-":
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if getattr(args, "plot", None):
        try:
            write_svg(args.plot, columns, rows)
        except Exception as exc:  # plotting is best effort
            print(f"warning: plot not written ({exc})", file=sys.stderr)


def _map(fn, items, jobs: int) -> list:
    """Apply ``fn`` over ``items``; results come back in input order."""
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# grid-point workers (module level so they can be pickled)


def _stage1_point(item, sigma, alpha, n0, sign, mode, shots, seed):
    idx, m = item
    cos2_t, d_t = stage1_theory(sigma, alpha, n0, m)
    dist = run_exact(stage1_circuit(sigma, alpha, n0, sign), probe_state(m))
    obs = sample_shots(dist, shots, point_seed(seed, idx)) if mode == "shots" else dist
    return [m, cos2_t, d_t, estimate_cos2(obs), estimate_d(obs)]


def _stage2_point(item, n0, sign, mode, shots, seed):
    idx, (alpha, rho) = item
    rep = cos2_pt_at_half_period(alpha, rho)
    dist = run_exact(stage2_circuit(alpha, n0, sign), chi_states(rho)[2])
    obs = sample_shots(dist, shots, point_seed(seed, idx)) if mode == "shots" else dist
    return [alpha, rho, rep.cos2_k13, rep.cos2_k23, d2(alpha, rho), estimate_cos2(obs), estimate_d(obs)]


def _qfi_point(pair):
    alpha, rho = pair
    f = qfi_pt(alpha, rho)
    d = d2(alpha, rho)
    return [alpha, rho, f, qfi_numeric(alpha, rho), d, f * d]


def _cos4_point(pair):
    alpha, rho = pair
    herm = hermitian_cos2(chi_states(rho)[0], chi_states(rho)[2])
    pt = cos2_pt_at_half_period(alpha, rho).cos2_k13
    d = d2(alpha, rho)
    return [alpha, rho, herm, pt, d, pt**2 * d, pt**2 * d / herm**2 if herm > 0 else float("nan")]


# --------------------------------------------------------------------------
# subcommands


def cmd_stage1(args, config):
    sigma = parse_number(config["sigma"])
    alpha = alpha_critical(sigma) if config.get("alpha") is None else parse_number(config["alpha"])
    n0 = n0_min_stage1(sigma) if config.get("n0") is None else parse_number(config["n0"])
    grid = parse_grid(config["grid"], "m")
    fn = partial(
        _stage1_point, sigma=sigma, alpha=alpha, n0=n0, sign=int(config["ancilla_sign"]),
        mode=config["mode"], shots=int(config["shots"]), seed=int(config["seed"]),
    )
    rows = _map(fn, enumerate(grid), int(config["jobs"]))
    _emit(args, config, ["m", "cos2_theory", "d_theory", "cos2_sim", "d_sim"], rows)
    return EXIT_OK


def cmd_stage2(args, config):
    alphas = parse_list(config["alphas"])
    if not alphas:
        raise ValidationError("alpha list is empty")
    grid = parse_grid(config["grid"], "rho")
    n0 = None if config.get("n0") is None else parse_number(config["n0"])
    points = [(a, r) for a in alphas for r in grid]
    fn = partial(
        _stage2_point, n0=n0, sign=int(config["ancilla_sign"]),
        mode=config["mode"], shots=int(config["shots"]), seed=int(config["seed"]),
    )
    rows = _map(fn, enumerate(points), int(config["jobs"]))
    _emit(args, config, ["alpha", "rho", "cos2_k13", "cos2_k23", "d2", "cos2_sim", "d_sim"], rows)
    return EXIT_OK


def cmd_trine(args, config):
    if config["mode"] == "exact":
        rep = trine_attack(parse_number(config["alpha2"]))
        rows = [["inconclusive", 1 / 3, rep.inconclusive]]
        rows += [[f"posterior_{k}", e, rep.posteriors[k]] for k, e in zip(LABELS, (0.5, 0.25, 0.25))]
        rows += [[f"d_{k}", e, rep.decisiveness[k]] for k, e in zip(LABELS, (1.0, 0.5, 0.5))]
        for name in ("fail", "chi1", "chi2"):
            rows.append([f"equiprobability_{name}", 0.0, rep.residuals[name]["equiprobability"]])
        rows.append(["fail_ratio_residual", 0.0, rep.residuals["fail_ratio"]])
        _emit(args, config, ["quantity", "expected", "observed"], rows)
        print("same error rate as a single-stage measurement: "
              f"fail branch residual {rep.residuals['fail_ratio']:.3g}", file=sys.stderr)
        return EXIT_OK
    shots, repeats = int(config["shots"]), int(config["repeats"])
    if shots < 1 or repeats < 1:
        raise ValidationError("shots and repeats must be positive")
    seeds = [point_seed(int(config["seed"]), i) for i in range(repeats)]
    results = _map(partial(trine_shots, n=shots), seeds, int(config["jobs"]))
    rows = [[r.seed, r.inconclusive, *(r.posteriors[k] for k in LABELS), shots_within_band(r)] for r in results]
    _emit(args, config, ["seed", "inconclusive", "posterior_A", "posterior_B", "posterior_C", "within_3sigma"], rows)
    sd = shot_sigmas(shots)
    inside = sum(r[-1] for r in rows)
    print(f"{inside}/{repeats} seeds within 3 sigma (sigma = {', '.join(f'{s:.3g}' for s in sd)})", file=sys.stderr)
    return EXIT_OK


def _alpha_rho_points(config):
    alphas = parse_grid(config["alpha_grid"], "alpha")
    rhos = parse_grid(config["rho_grid"], "rho")
    return [(a, r) for a in alphas for r in rhos]


def cmd_qfi(args, config):
    rows = _map(_qfi_point, _alpha_rho_points(config), int(config["jobs"]))
    _emit(args, config, ["alpha", "rho", "f_closed", "f_numeric", "d2", "f_times_d"], rows)
    return EXIT_OK


def cmd_cos4(args, config):
    rows = _map(_cos4_point, _alpha_rho_points(config), int(config["jobs"]))
    _emit(args, config, ["alpha", "rho", "cos2_herm", "cos2_pt", "d2", "cos4_pt_times_d", "metric_ratio"], rows)
    return EXIT_OK


def cmd_grover(args, config):
    exps = [int(e) for e in parse_list(config["log2_m"])]
    if not exps:
        raise ValidationError("database size list is empty")
    if config.get("boost_alphas"):
        frac = parse_number(config["k_init"])
        rows = []
        for e in exps:
            M = 2**e
            for a in parse_list(config["boost_alphas"]):
                b = pt_boost(frac * np.sqrt(M), a, M)
                rows.append([e, a, frac * np.sqrt(M), b.k_eff, b.k_eff / np.sqrt(M), b.d, b.p_init, b.p_eff])
        _emit(args, config, ["log2_m", "alpha", "k_init", "k_eff", "k_eff_over_sqrt_m", "d", "p_init", "p_eff"], rows)
        return EXIT_OK
    rows = []
    for e in exps:
        M = 2**e
        t, r = minimize_t(M), maximize_r(M)
        ratio = t_of_k(t.k, M) / (np.pi / 4 * np.sqrt(M))
        rows.append([e, t.k, t.k_over_sqrt_m, t.k_int, r.k_over_sqrt_m, success_probability(t.k, M), ratio])
    _emit(args, config, ["log2_m", "k_opt", "k_opt_over_sqrt_m", "k_opt_int", "k_r_over_sqrt_m", "p_success", "t_ratio"], rows)
    return EXIT_OK


def cmd_decompose(args, config):
    src = config.get("input") or "-"
    text = sys.stdin.read() if src == "-" else open(src, encoding="utf-8").read()
    try:
        u = loads_matrix(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise ValidationError(f"cannot read matrix: {exc}") from exc
    if u.shape != (4, 4):
        raise ValidationError("expected a 4x4 matrix")
    d = magic_decompose(u, canonical_phase=bool(config["canonical_phase"]))
    circ = to_circuit(d)
    payload = {
        "phi": [float(x) for x in d.phi],
        "theta": [float(x) for x in d.theta],
        "global_phase": float(d.global_phase),
        "cnot_count": circ.cnot_count,
        "source_error": float(circ.metadata["source_error"]),
    }
    for name in ("u_a", "u_b", "v_a", "v_b"):
        m = getattr(d, name)
        payload[name] = [[[float(z.real), float(z.imag)] for z in row] for row in m]
    qasm = export_qasm(circ)
    if config.get("qasm"):
        with open(config["qasm"], "w", encoding="utf-8") as fh:
            fh.write(qasm)
    else:
        sys.stdout.write(qasm)
    text = json.dumps(payload, indent=1, sort_keys=True) + "\n"
    if args.out and args.out != "-":
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_golden(args, config):
    results = run_all()
    rows = [[r.key, r.ode_error, r.reconstruct_error, r.tol, r.passed] for r in results]
    _emit(args, config, ["case", "ode_error", "reconstruct_error", "tol", "passed"], rows)
    return EXIT_OK if all(r.passed for r in results) else EXIT_GOLDEN


# --------------------------------------------------------------------------
# argument handling

DEFAULTS = {
    "stage1": {"sigma": "0.8", "alpha": None, "n0": None, "ancilla_sign": 1, "grid": "m:-3:3:0.25"},
    "stage2": {"alphas": "pi/2-1,pi/2-0.7,pi/2-0.5", "n0": None, "ancilla_sign": 1, "grid": "rho:-pi/2:pi/2:pi/16"},
    "trine": {"alpha2": "0.5", "repeats": 100},
    "qfi": {"alpha_grid": "alpha:0.1:1.5:0.1", "rho_grid": "rho:-pi/2:-pi/2:1"},
    "cos4": {"alpha_grid": "alpha:0.1:1.5:0.2", "rho_grid": "rho:-1.5:1.5:0.25"},
    "grover": {"log2_m": "10,16,20", "boost_alphas": None, "k_init": "0.5"},
    "decompose": {"input": None, "qasm": None, "canonical_phase": True},
    "golden": {},
}
COMMON = {"mode": "exact", "shots": 8192, "seed": None, "jobs": 1}
COMMANDS = {
    "stage1": cmd_stage1, "stage2": cmd_stage2, "trine": cmd_trine, "qfi": cmd_qfi,
    "cos4": cmd_cos4, "grover": cmd_grover, "decompose": cmd_decompose, "golden": cmd_golden,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptmap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ptmap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file with option values; flags take precedence")
        p.add_argument("--out", "-o", help="output path (default stdout)")
        p.add_argument("--plot", help="also write an SVG line chart here")
        p.add_argument("--mode", choices=["exact", "shots"], default=argparse.SUPPRESS)
        p.add_argument("--shots", type=int, default=argparse.SUPPRESS)
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="base seed (default $PTMAP_SEED or 0)")
        p.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker processes")
        for key in DEFAULTS[name]:
            flag = "--" + key.replace("_", "-")
            if key == "canonical_phase":
                p.add_argument(flag, action=argparse.BooleanOptionalAction, default=argparse.SUPPRESS)
            elif key in ("ancilla_sign", "repeats"):
                p.add_argument(flag, type=int, default=argparse.SUPPRESS)
            else:
                p.add_argument(flag, default=argparse.SUPPRESS)
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the JSON file, then explicit flags."""
    config = {**COMMON, **DEFAULTS[args.command]}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config: {exc}") from exc
        unknown = set(loaded) - set(config)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        config.update(loaded)
    for key in config:
        if key in vars(args):
            config[key] = getattr(args, key)
    if config["seed"] is None:
        config["seed"] = int(os.environ.get("PTMAP_SEED", "0"))
    if config["mode"] not in ("exact", "shots"):
        raise ValidationError("mode must be 'exact' or 'shots'")
    if int(config["jobs"]) < 1:
        raise ValidationError("jobs must be at least 1")
    if int(config["shots"]) < 1:
        raise ValidationError("shots must be at least 1")
    return config


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        return COMMANDS[args.command](args, config)
    except (PTMapError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
