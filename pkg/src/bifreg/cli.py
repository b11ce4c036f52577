"""Command-line entry points: simulate, fit, predict, bench.

Every command reads a JSON config (--config), applies environment
overrides (BIFREG_*) and then flag overrides, validates strictly
(unknown keys rejected), and writes its outputs into the chosen
directory. Reruns with the same config and seed produce byte-identical
files. Errors exit with code 2 (validation), 3 (data I/O), or 4
(numerical), printing a one-line JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .directions import BSplineBasis, enumerate_directions
from .errors import BifregError, DataError, GridMismatchError, ValidationError
from .fassmr import FassmrConfig, FitResult, fassmr_fit, predict_many, standard_pls_fit
from .grids import FLOAT_FORMAT, Grid, _parse_functional_csv, load_csv, save_csv
from .iassmr import IassmrConfig, iassmr_fit, write_stage_trace
from .scad import ScadConfig
from .simlab import (
    METHODS,
    DesignSpec,
    default_basis,
    gen_design,
    monte_carlo,
)

__all__ = ["main", "build_parser"]

ENV_PREFIX = "BIFREG_"

_DESIGN_KEYS = {"kind", "n", "p", "n_test", "seed", "p_x"}
_TUNING_KEYS = {
    "w_set",
    "bandwidth_quantiles",
    "lambda_min_ratio",
    "lambda_grid_size",
    "m_knots",
    "spline_order",
    "seeds",
}
_SCHEMAS = {
    "simulate": {"design", "out"},
    "fit": {"inputs", "method", "out", "tuning", "split"},
    "predict": {"model", "inputs", "out"},
    "bench": {
        "design",
        "methods",
        "n_replicates",
        "out",
        "workers",
        "tuning",
        "split",
        "train_rows",
        "write_replicates",
    },
}


def _reject_unknown(section: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ValidationError(
            f"unknown {where} keys: {', '.join(unknown)}; "
            f"allowed: {', '.join(sorted(allowed))}"
        )


def _load_config(path: str, command: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ValidationError(f"config {path} must hold a JSON object")
    _reject_unknown(cfg, _SCHEMAS[command], "config")
    for key, allowed in (("design", _DESIGN_KEYS), ("tuning", _TUNING_KEYS)):
        if key in cfg:
            if not isinstance(cfg[key], dict):
                raise ValidationError(f"config key {key!r} must be an object")
            _reject_unknown(cfg[key], allowed, key)
    return cfg


def _parse_int_list(text: str, what: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ValidationError(f"cannot parse {what} {text!r} as integers") from exc


def _parse_float_list(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ValidationError(f"cannot parse {what} {text!r} as numbers") from exc


def _env(name: str) -> str | None:
    return os.environ.get(ENV_PREFIX + name)


def _apply_overrides(cfg: dict, args: argparse.Namespace, command: str) -> dict:
    """Config < environment < flags; overrides a command cannot use are ignored."""
    schema = _SCHEMAS[command]

    def pick(env_name: str, attr: str, conv):
        flag = getattr(args, attr, None)
        raw = flag if flag is not None else _env(env_name)
        if raw is None:
            return None
        if isinstance(raw, str):
            try:
                return conv(raw)
            except ValueError as exc:
                raise ValidationError(
                    f"cannot parse override {env_name.lower()}={raw!r}"
                ) from exc
        return raw

    out = pick("OUT", "out", str)
    if out is not None:
        cfg["out"] = out
    seed = pick("SEED", "seed", int)
    if seed is not None and "design" in schema:
        cfg.setdefault("design", {})["seed"] = seed
    workers = pick("WORKERS", "workers", int)
    if workers is not None and "workers" in schema:
        cfg["workers"] = workers
    method = pick("METHOD", "method", str)
    if method is not None:
        if command == "bench":
            cfg["methods"] = [method]
        elif "method" in schema:
            cfg["method"] = method
    tuning_overrides = (
        ("W_SET", "w_set", lambda s: _parse_int_list(s, "w set")),
        ("LAMBDA_MIN_RATIO", "lambda_min_ratio", float),
        (
            "BANDWIDTH_QUANTILES",
            "bandwidth_quantiles",
            lambda s: _parse_float_list(s, "bandwidth quantiles"),
        ),
        ("M_KNOTS", "m_knots", int),
    )
    for env_name, key, conv in tuning_overrides:
        value = pick(env_name, key, conv)
        if value is not None and "tuning" in schema:
            cfg.setdefault("tuning", {})[key] = value
    return cfg


def _require(cfg: dict, key: str, command: str):
    if key not in cfg:
        raise ValidationError(f"{command} config needs the {key!r} key")
    return cfg[key]


def _out_dir(cfg: dict, command: str) -> str:
    out = _require(cfg, "out", command)
    if not isinstance(out, str) or not out:
        raise ValidationError("'out' must be a nonempty directory path")
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _design_spec(cfg: dict, command: str) -> DesignSpec:
    d = dict(_require(cfg, "design", command))
    if "kind" not in d:
        raise ValidationError("design needs 'kind' (A, B, or C)")
    for key in ("n", "p"):
        if key not in d:
            raise ValidationError(f"design needs {key!r}")
    try:
        return DesignSpec(
            kind=str(d["kind"]),
            n=int(d["n"]),
            p=int(d["p"]),
            n_test=int(d.get("n_test", 100)),
            seed=int(d.get("seed", 0)),
            p_x=int(d.get("p_x", 100)),
        )
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad design values: {exc}") from exc


def _scad_from_tuning(tuning: dict) -> ScadConfig:
    kwargs = {}
    if "lambda_min_ratio" in tuning:
        kwargs["lambda_min_ratio"] = float(tuning["lambda_min_ratio"])
    if "lambda_grid_size" in tuning:
        kwargs["lambda_grid_size"] = int(tuning["lambda_grid_size"])
    return ScadConfig(**kwargs)


def _directions_from_tuning(tuning: dict, x_grid: Grid):
    basis = default_basis()
    order = int(tuning.get("spline_order", basis.order))
    m_knots = int(tuning.get("m_knots", basis.interior_knots))
    basis = BSplineBasis(order=order, interior_knots=m_knots, domain=(0.0, 1.0))
    seeds = tuple(float(s) for s in tuning.get("seeds", (-1.0, 0.0, 1.0)))
    return enumerate_directions(basis, seeds, quad_grid=x_grid)


def _fassmr_config(tuning: dict, x_grid: Grid) -> FassmrConfig:
    kwargs = {"direction_set": _directions_from_tuning(tuning, x_grid)}
    if "w_set" in tuning:
        kwargs["w_candidates"] = tuple(int(w) for w in tuning["w_set"])
    if "bandwidth_quantiles" in tuning:
        kwargs["bandwidth_quantiles"] = tuple(
            float(q) for q in tuning["bandwidth_quantiles"]
        )
    kwargs["scad"] = _scad_from_tuning(tuning)
    return FassmrConfig(**kwargs)


def _split(cfg: dict) -> tuple[int, int] | None:
    if "split" not in cfg:
        return None
    raw = cfg["split"]
    if (
        not isinstance(raw, (list, tuple))
        or len(raw) != 2
        or not all(isinstance(v, int) for v in raw)
    ):
        raise ValidationError("'split' must be a two-integer list [n1, n2]")
    return int(raw[0]), int(raw[1])


def cmd_simulate(cfg: dict) -> int:
    out = _out_dir(cfg, "simulate")
    spec = _design_spec(cfg, "simulate")
    train, test, truth = gen_design(spec)
    save_csv(
        train,
        os.path.join(out, "train_zeta.csv"),
        os.path.join(out, "train_x.csv"),
        os.path.join(out, "train_y.csv"),
    )
    save_csv(
        test,
        os.path.join(out, "test_zeta.csv"),
        os.path.join(out, "test_x.csv"),
        os.path.join(out, "test_y.csv"),
    )
    doc = truth.to_json_dict()
    doc["design"] = spec.to_dict()
    with open(os.path.join(out, "truth.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _load_inputs(cfg: dict, command: str, need_y: bool):
    inputs = _require(cfg, "inputs", command)
    if not isinstance(inputs, dict):
        raise ValidationError("'inputs' must be an object of file paths")
    needed = {"zeta", "x", "y"} if need_y else {"zeta", "x"}
    _reject_unknown(inputs, needed, "inputs")
    missing = sorted(needed - set(inputs))
    if missing:
        raise ValidationError(f"inputs missing keys: {', '.join(missing)}")
    return inputs


def _write_link_csv(fit: FitResult, path: str) -> None:
    """Projected index and partialled residual per training row."""
    link = fit.link_state
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("i,projected_index,residual\n")
        for i, (u, r) in enumerate(zip(link.train_proj, link.residuals)):
            fh.write("%d,%s,%s\n" % (i, FLOAT_FORMAT % u, FLOAT_FORMAT % r))


def cmd_fit(cfg: dict) -> int:
    out = _out_dir(cfg, "fit")
    method = str(_require(cfg, "method", "fit"))
    if method not in METHODS:
        raise ValidationError(
            f"unknown method {method!r}; choose from {', '.join(METHODS)}"
        )
    inputs = _load_inputs(cfg, "fit", need_y=True)
    data = load_csv(inputs["zeta"], inputs["x"], inputs["y"])
    tuning = cfg.get("tuning", {})
    fcfg = _fassmr_config(tuning, data.x_grid)
    split = _split(cfg)
    if method == "fassmr":
        fit = fassmr_fit(data, fcfg)
    elif method == "pls":
        fit = standard_pls_fit(data, fcfg)
    else:
        fit = iassmr_fit(data, IassmrConfig(stage1=fcfg, split=split))
    fit.to_json(os.path.join(out, "fit.json"))
    fit.coefficients_csv(os.path.join(out, "coefficients.csv"))
    _write_link_csv(fit, os.path.join(out, "link.csv"))
    if method == "iassmr":
        write_stage_trace(fit, os.path.join(out, "stage_trace.json"))
    return 0


def cmd_predict(cfg: dict) -> int:
    out = _out_dir(cfg, "predict")
    model_path = _require(cfg, "model", "predict")
    try:
        fit = FitResult.load_json(model_path)
    except OSError as exc:
        raise DataError(f"cannot read model {model_path}: {exc}") from exc
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise DataError(f"model {model_path} is not a fit export: {exc}") from exc
    inputs = _load_inputs(cfg, "predict", need_y=False)
    zeta_grid, zeta = _parse_functional_csv(inputs["zeta"], "zeta")
    x_grid, x = _parse_functional_csv(inputs["x"], "x")
    if zeta.shape[0] != x.shape[0]:
        raise DataError(
            f"zeta has {zeta.shape[0]} rows but x has {x.shape[0]}"
        )
    if zeta_grid != fit.zeta_grid:
        raise GridMismatchError("zeta grid does not match the fitted model")
    if x_grid != fit.x_grid:
        raise GridMismatchError("x grid does not match the fitted model")
    preds, extrapolated = predict_many(fit, zeta, x)
    with open(os.path.join(out, "predictions.csv"), "w", encoding="utf-8") as fh:
        fh.write("i,prediction,extrapolated\n")
        for i, (v, e) in enumerate(zip(preds, extrapolated)):
            fh.write("%d,%s,%d\n" % (i, FLOAT_FORMAT % v, int(e)))
    return 0


def cmd_bench(cfg: dict) -> int:
    out = _out_dir(cfg, "bench")
    spec = _design_spec(cfg, "bench")
    methods = _require(cfg, "methods", "bench")
    if not isinstance(methods, list) or not methods:
        raise ValidationError("'methods' must be a nonempty list")
    methods = [str(m) for m in methods]
    n_replicates = int(_require(cfg, "n_replicates", "bench"))
    workers = int(cfg.get("workers", 1))
    tuning = cfg.get("tuning", {})
    x_grid = Grid.uniform(spec.p_x, 0.0, 1.0)
    fcfg = _fassmr_config(tuning, x_grid)
    split = _split(cfg)
    configs = {}
    for m in methods:
        if m == "iassmr":
            configs[m] = IassmrConfig(stage1=fcfg, split=split)
        elif m in METHODS:
            configs[m] = fcfg
    train_rows = cfg.get("train_rows")
    if train_rows is not None:
        if not isinstance(train_rows, dict):
            raise ValidationError("'train_rows' must map method -> row count")
        train_rows = {str(m): int(v) for m, v in train_rows.items()}
    summary = monte_carlo(
        spec,
        methods,
        n_replicates,
        workers=workers,
        configs=configs,
        train_rows=train_rows,
    )
    summary.to_csv(os.path.join(out, "summary.csv"))
    doc = summary.to_json_dict()
    base = summary.stats[methods[0]]["mean_seconds"]
    doc["timing_ratios"] = {
        m: (summary.stats[m]["mean_seconds"] / base) if base > 0 else float("nan")
        for m in methods
    }
    with open(os.path.join(out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if bool(cfg.get("write_replicates", True)):
        summary.replicates_csv(os.path.join(out, "replicates.csv"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bifreg",
        description=(
            "Sparse semiparametric regression with two functional covariates: "
            "simulate data, fit by fast or two-stage selection, predict, and "
            "benchmark."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, *, tuned: bool, seeded: bool):
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", help="output directory (overrides config)")
        if seeded:
            p.add_argument("--seed", type=int, help="master seed override")
        if tuned:
            p.add_argument("--method", help="method override")
            p.add_argument("--w-set", dest="w_set", help="comma list, e.g. 10,15,20")
            p.add_argument(
                "--lambda-min-ratio",
                dest="lambda_min_ratio",
                type=float,
                help="smallest path lambda as a fraction of lambda_max",
            )
            p.add_argument(
                "--bandwidth-quantiles",
                dest="bandwidth_quantiles",
                help="comma list of quantile levels in (0, 1]",
            )
            p.add_argument(
                "--m-knots",
                dest="m_knots",
                type=int,
                help="interior knots of the direction spline basis",
            )

    add_common(sub.add_parser("simulate", help="generate a design"), tuned=False, seeded=True)
    add_common(sub.add_parser("fit", help="fit one model"), tuned=True, seeded=False)
    add_common(sub.add_parser("predict", help="predict from a fit"), tuned=False, seeded=False)
    bench = sub.add_parser("bench", help="Monte Carlo benchmark")
    add_common(bench, tuned=True, seeded=True)
    bench.add_argument("--workers", type=int, help="parallel worker count")
    return parser


_COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config, args.command)
        cfg = _apply_overrides(cfg, args, args.command)
        return _COMMANDS[args.command](cfg)
    except BifregError as exc:
        print(
            json.dumps(
                {
                    "error": type(exc).__name__,
                    "message": str(exc),
                    "code": exc.exit_code,
                }
            ),
            file=sys.stderr,
        )
        return exc.exit_code
    except OSError as exc:
        print(
            json.dumps({"error": "OSError", "message": str(exc), "code": 3}),
            file=sys.stderr,
        )
        return 3
    except Exception as exc:  # noqa: BLE001 - last-resort numerical guard
        print(
            json.dumps(
                {"error": type(exc).__name__, "message": str(exc), "code": 4}
            ),
            file=sys.stderr,
        )
        return 4


if __name__ == "__main__":
    sys.exit(main())
