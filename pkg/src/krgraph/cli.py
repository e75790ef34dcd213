"""Config-driven command-line front end.

Every command reads one JSON config document (--config), writes into
--out-dir, and is deterministic given the config: all seeds are config
fields and outputs carry no timestamps. Errors are emitted as a JSON
object on stderr with a nonzero exit code.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np
import jsonschema

from . import evaluation, graphlearn, graphs, solver, synthdata
from .errors import ConfigError, DataFormatError, KrgraphError
from .kernels import KernelSpec, gram_matrix, kernel_cross_matrix

log = logging.getLogger("krgraph")


# ---------------------------------------------------------------------------
# Config schemas (unknown keys rejected everywhere)

_KERNEL_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["linear", "rbf", "precomputed"]},
        "sigma_sq": {"type": "number", "exclusiveMinimum": 0},
        "matrix_csv": {"type": "string"},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_GRID_SCHEMA = {
    "type": "object",
    "properties": {
        "alphas": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "betas": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "sigma_sqs": {"type": "array", "items": {"type": "number"}},
        "nus": {"type": "array", "items": {"type": "number"}},
        "folds": {"type": "integer", "minimum": 2},
    },
    "required": ["alphas", "betas"],
    "additionalProperties": False,
}

SCHEMAS = {
    "synth": {
        "type": "object",
        "properties": {
            "num_nodes": {"type": "integer", "minimum": 2},
            "num_samples": {"type": "integer", "minimum": 2, "multipleOf": 2},
            "graph_model": {"enum": ["erdos_renyi", "barabasi_albert"]},
            "graph_param": {"type": "number"},
            "snr_db": {"type": "number"},
            "seed": {"type": "integer"},
            "wishart_dof_offset": {"type": "integer", "minimum": 1},
        },
        "required": ["num_nodes", "num_samples", "graph_model", "graph_param",
                     "snr_db", "seed"],
        "additionalProperties": False,
    },
    "ingest": {
        "type": "object",
        "properties": {
            "inputs_csv": {"type": "string"},
            "targets_csv": {"type": "string"},
            "distances_csv": {"type": "string"},
        },
        "required": ["inputs_csv", "targets_csv"],
        "additionalProperties": False,
    },
    "fit": {
        "type": "object",
        "properties": {
            "x_csv": {"type": "string"},
            "t_csv": {"type": "string"},
            "graph_json": {"type": "string"},
            "laplacian_csv": {"type": "string"},
            "kernel": _KERNEL_SCHEMA,
            "alpha": {"type": "number", "minimum": 0},
            "beta": {"type": "number", "minimum": 0},
        },
        "required": ["x_csv", "t_csv", "kernel", "alpha", "beta"],
        "additionalProperties": False,
    },
    "predict": {
        "type": "object",
        "properties": {
            "model_json": {"type": "string"},
            "x_csv": {"type": "string"},
        },
        "required": ["model_json", "x_csv"],
        "additionalProperties": False,
    },
    "learn-graph": {
        "type": "object",
        "properties": {
            "x_csv": {"type": "string"},
            "t_csv": {"type": "string"},
            "kernel": _KERNEL_SCHEMA,
            "alpha": {"type": "number", "exclusiveMinimum": 0},
            "beta": {"type": "number", "minimum": 0},
            "nu": {"type": "number", "minimum": 0},
            "max_outer_iters": {"type": "integer", "minimum": 1},
            "tol": {"type": "number", "exclusiveMinimum": 0},
            "trace_budget": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["x_csv", "t_csv", "kernel", "alpha", "beta", "nu"],
        "additionalProperties": False,
    },
    "cv": {
        "type": "object",
        "properties": {
            "x_csv": {"type": "string"},
            "t_csv": {"type": "string"},
            "t0_csv": {"type": "string"},
            "graph_json": {"type": "string"},
            "method": {"enum": ["LR", "LRG", "KR", "KRG"]},
            "kernel": _KERNEL_SCHEMA,
            "grid": _GRID_SCHEMA,
            "seed": {"type": "integer"},
        },
        "required": ["x_csv", "t_csv", "method", "grid", "seed"],
        "additionalProperties": False,
    },
    "bench": {
        "type": "object",
        "properties": {
            "methods": {"type": "array",
                        "items": {"enum": ["LR", "LRG", "KR", "KRG"]},
                        "minItems": 1},
            "n_train": {"type": "array", "items": {"type": "integer"},
                        "minItems": 1},
            "snr_db": {"type": "array", "items": {"type": "number"},
                       "minItems": 1},
            "realizations": {"type": "integer", "minimum": 1},
            "num_nodes": {"type": "integer", "minimum": 2},
            "num_samples": {"type": "integer", "minimum": 2, "multipleOf": 2},
            "graph_model": {"enum": ["erdos_renyi", "barabasi_albert"]},
            "graph_param": {"type": "number"},
            "grid": _GRID_SCHEMA,
            "master_seed": {"type": "integer"},
        },
        "required": ["methods", "n_train", "snr_db", "realizations",
                     "num_nodes", "num_samples", "graph_model", "graph_param",
                     "grid", "master_seed"],
        "additionalProperties": False,
    },
    "krr": {
        "type": "object",
        "properties": {
            "kernel_csv": {"type": "string"},
            "graph_json": {"type": "string"},
            "tau": {"type": "number", "exclusiveMinimum": 0},
            "observed_idx": {"type": "array", "items": {"type": "integer"},
                             "minItems": 1},
            "x": {"type": "array", "items": {"type": "number"}, "minItems": 1},
            "mu": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["observed_idx", "x", "mu"],
        "additionalProperties": False,
    },
}


def load_config(path, command):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    try:
        jsonschema.validate(cfg, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config invalid for {command!r}: {exc.message}")
    return cfg


def _kernel_spec(doc):
    if doc["kind"] == "precomputed":
        if "matrix_csv" not in doc:
            raise ConfigError("precomputed kernel needs matrix_csv")
        return KernelSpec(kind="precomputed",
                          precomputed=graphs.load_matrix_csv(doc["matrix_csv"]))
    return KernelSpec(kind=doc["kind"], sigma_sq=doc.get("sigma_sq"))


def _load_laplacian(cfg):
    if "graph_json" in cfg:
        return graphs.build_laplacian(graphs.load_graph_json(cfg["graph_json"]))
    if "laplacian_csv" in cfg:
        return graphs.Laplacian(graphs.load_matrix_csv(cfg["laplacian_csv"]))
    return None


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Commands

def cmd_synth(cfg, out_dir):
    scfg = synthdata.SynthConfig(
        num_nodes=cfg["num_nodes"], num_samples=cfg["num_samples"],
        graph_model=cfg["graph_model"], graph_param=cfg["graph_param"],
        snr_db=cfg["snr_db"], seed=cfg["seed"],
        wishart_dof_offset=cfg.get("wishart_dof_offset", 2),
    )
    train, test, graph, C_S = synthdata.make_synthetic_dataset(scfg)
    synthdata.save_dataset(out_dir, train, test, graph, manifest={"config": cfg})
    graphs.save_matrix_csv(Path(out_dir) / "kernel_full.csv", C_S)
    log.info("wrote synthetic dataset to %s", out_dir)


def _read_table_csv(path, expect_header):
    """Read a numeric CSV; reject ragged rows and missing values by line."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1 and expect_header:
                continue
            if not row:
                continue
            if any(cell.strip() == "" for cell in row):
                raise DataFormatError(f"{path}: missing value on line {lineno}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise DataFormatError(f"{path}: non-numeric value on line {lineno}")
            if len(rows) > 1 and len(rows[-1]) != len(rows[0]):
                raise DataFormatError(f"{path}: ragged row on line {lineno}")
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return np.array(rows)


def cmd_ingest(cfg, out_dir):
    X = _read_table_csv(cfg["inputs_csv"], expect_header=True)
    T = _read_table_csv(cfg["targets_csv"], expect_header=False)
    if X.shape[0] != T.shape[0]:
        raise DataFormatError(
            f"row count mismatch: {X.shape[0]} inputs vs {T.shape[0]} targets"
        )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    graphs.save_matrix_csv(out / "X.csv", X)
    graphs.save_matrix_csv(out / "T.csv", T)
    manifest = {"config": cfg, "n": int(X.shape[0]),
                "input_dim": int(X.shape[1]), "num_nodes": int(T.shape[1])}
    if "distances_csv" in cfg:
        D = graphs.load_matrix_csv(cfg["distances_csv"])
        g = graphs.geodesic_adjacency(D)
        graphs.save_graph_json(out / "graph.json", g)
        manifest["graph"] = "graph.json"
    _write_json(out / "manifest.json", manifest)
    log.info("ingested %d rows", X.shape[0])


def cmd_fit(cfg, out_dir):
    X = graphs.load_matrix_csv(cfg["x_csv"])
    T = graphs.load_matrix_csv(cfg["t_csv"])
    L = _load_laplacian(cfg)
    if L is None:
        if cfg["beta"] > 0:
            raise ConfigError("beta > 0 requires graph_json or laplacian_csv")
        L = graphs.Laplacian(np.zeros((T.shape[1], T.shape[1])))
    spec = _kernel_spec(cfg["kernel"])
    hyper = solver.Hyperparams(alpha=cfg["alpha"], beta=cfg["beta"])
    gram = gram_matrix(X, spec)
    model = solver.fit_krg(gram, T, L, hyper, x_train=X, spec=spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    solver.save_model(out / "model.json", model)
    K = gram.matrix
    residual = (K + hyper.alpha * np.eye(gram.n)) @ model.psi \
        + hyper.beta * K @ model.psi @ L.matrix - T
    Y = K @ model.psi
    _write_json(out / "fit_report.json", {
        "residual_norm": float(np.linalg.norm(residual, "fro")),
        "target_norm": float(np.linalg.norm(T, "fro")),
        "data_cost": float(np.sum((T - Y) ** 2)),
        "coefficient_cost": float(hyper.alpha * np.trace(model.psi.T @ K @ model.psi)),
        "roughness_cost": float(hyper.beta * np.trace(Y @ L.matrix @ Y.T)),
    })
    log.info("fitted model on %d samples", gram.n)


def cmd_predict(cfg, out_dir):
    model = solver.load_model(cfg["model_json"])
    X = graphs.load_matrix_csv(cfg["x_csv"])
    K_cross = kernel_cross_matrix(model.x_train, X, model.spec, model.gram)
    Y = K_cross @ model.psi
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    graphs.save_matrix_csv(out / "predictions.csv", Y)
    log.info("predicted %d rows", Y.shape[0])


def cmd_learn_graph(cfg, out_dir):
    X = graphs.load_matrix_csv(cfg["x_csv"])
    T = graphs.load_matrix_csv(cfg["t_csv"])
    spec = _kernel_spec(cfg["kernel"])
    gram = gram_matrix(X, spec)
    gl_cfg = graphlearn.GraphLearnConfig(
        nu=cfg["nu"], beta=cfg["beta"],
        max_outer_iters=cfg.get("max_outer_iters", 20),
        tol=cfg.get("tol", 1e-4),
        trace_budget=cfg.get("trace_budget"),
    )
    hyper = solver.Hyperparams(alpha=cfg["alpha"], beta=cfg["beta"])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model, L, cost_trace, _ = graphlearn.alternating_fit(
        gram, T, hyper, gl_cfg, log_path=out / "iterations.jsonl")
    model = solver.KrgModel(psi=model.psi, x_train=X, spec=spec,
                            gram=gram, laplacian=model.laplacian, hyper=hyper)
    solver.save_model(out / "model.json", model)
    graphs.save_matrix_csv(out / "laplacian.csv", L.matrix)
    _write_json(out / "cost_trace.json", {"cost_trace": cost_trace.tolist()})
    log.info("graph learning finished after %d iterations", len(cost_trace))


def cmd_cv(cfg, out_dir):
    X = graphs.load_matrix_csv(cfg["x_csv"])
    T = graphs.load_matrix_csv(cfg["t_csv"])
    T0 = graphs.load_matrix_csv(cfg["t0_csv"]) if "t0_csv" in cfg else None
    L = _load_laplacian(cfg)
    if L is None:
        L = graphs.Laplacian(np.zeros((T.shape[1], T.shape[1])))
    train = synthdata.Dataset(X=X, T=T, T0=T0)
    grid_cfg = cfg["grid"]
    grid = evaluation.CvGrid(
        alphas=tuple(grid_cfg["alphas"]), betas=tuple(grid_cfg["betas"]),
        sigma_sqs=tuple(grid_cfg.get("sigma_sqs", ())),
        nus=tuple(grid_cfg.get("nus", ())),
        folds=grid_cfg.get("folds", 5),
    )
    spec = _kernel_spec(cfg["kernel"]) if "kernel" in cfg else None
    if spec is not None and spec.kind == "rbf":
        spec = None  # sigma comes from the grid
    best, table = evaluation.cross_validate(
        train, L, grid, cfg["method"], seed=cfg["seed"], kernel_spec=spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "cv_results.json", {"best_params": best, "table": table})
    log.info("cross-validation selected %s", best)


def cmd_bench(cfg, out_dir):
    grid_cfg = cfg["grid"]
    scenario = evaluation.BenchScenario(
        methods=tuple(cfg["methods"]), n_train=tuple(cfg["n_train"]),
        snr_db=tuple(cfg["snr_db"]), realizations=cfg["realizations"],
        num_nodes=cfg["num_nodes"], num_samples=cfg["num_samples"],
        graph_model=cfg["graph_model"], graph_param=cfg["graph_param"],
        grid=evaluation.CvGrid(
            alphas=tuple(grid_cfg["alphas"]), betas=tuple(grid_cfg["betas"]),
            sigma_sqs=tuple(grid_cfg.get("sigma_sqs", ())),
            folds=grid_cfg.get("folds", 5),
        ),
        master_seed=cfg["master_seed"],
    )
    results, failures = evaluation.run_benchmark(scenario)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    evaluation.save_results_csv(out / "results.csv", results)
    evaluation.save_results_json(out / "results.json", results, failures)
    _write_plot_data(out, results, scenario)
    if failures:
        log.error("%d benchmark cells failed", len(failures))
        raise KrgraphError(f"{len(failures)} benchmark cells failed; "
                           f"see results.json")
    log.info("benchmark finished: %d result rows", len(results))


def _write_plot_data(out, results, scenario):
    """Per-curve files: NMSE (test) against SNR and against n_train."""
    test = [r for r in results if r.split == "test"]

    def table(path, xs, x_name, key):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([x_name] + list(scenario.methods))
            for x in xs:
                row = [repr(float(x))]
                for m in scenario.methods:
                    vals = [r.nmse_db for r in test
                            if r.method == m and key(r) == x]
                    row.append(repr(float(vals[0])) if vals else "")
                writer.writerow(row)

    if len(scenario.snr_db) > 1:
        for n in scenario.n_train:
            sub = [r for r in test if r.n_train == n]
            table(out / f"plot_nmse_vs_snr_n{n}.csv", scenario.snr_db,
                  "snr_db", lambda r: r.snr_db)
            del sub
    if len(scenario.n_train) > 1:
        for snr in scenario.snr_db:
            table(out / f"plot_nmse_vs_n_snr{snr:g}.csv", scenario.n_train,
                  "n_train", lambda r: r.n_train)


def cmd_krr(cfg, out_dir):
    if "kernel_csv" in cfg:
        K_bar = graphs.load_matrix_csv(cfg["kernel_csv"])
    elif "graph_json" in cfg and "tau" in cfg:
        L = graphs.build_laplacian(graphs.load_graph_json(cfg["graph_json"]))
        K_bar = evaluation.heat_kernel(L, cfg["tau"])
    else:
        raise ConfigError("krr needs kernel_csv, or graph_json with tau")
    est = evaluation.krr_baseline(K_bar, cfg["observed_idx"],
                                  np.array(cfg["x"], dtype=float), cfg["mu"])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    graphs.save_matrix_csv(out / "estimate.csv", est[:, None])
    log.info("krr estimate written for %d nodes", len(est))


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "learn-graph": cmd_learn_graph,
    "cv": cmd_cv,
    "bench": cmd_bench,
    "krr": cmd_krr,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="krgraph",
        description="Graph-regularized kernel regression toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out-dir", required=True)
        p.add_argument("--log-level", default="INFO")
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.command)
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, args.out_dir)
    except KrgraphError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr)
        sys.stderr.write("\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
