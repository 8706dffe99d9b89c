"""Command-line interface.

Exit codes: 0 ok, 2 parse error, 3 numerical error, 4 contract error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cox import objective
from .data import FeatureMeta, SurvivalDataset, load_dataset, load_meta, standardize, write_dataset
from .errors import ContractError, NumericalError, ParseError
from .evaluation import DEFAULT_HORIZON_DAYS, HorizonLabeling, auc, risk_scores
from .graph import DEFAULT_PREFIX_LEN, build_graph, edge_rows, laplacian
from .optimizer import CoxModel, FitOptions, fit
from .stability import bootstrap_importances, importance, scale_importance, stability_curve, stability_report
from .stability import subsets_from_importances
from .synth import SynthConfig, generate

log = logging.getLogger("coxstab")

EXIT_OK, EXIT_PARSE, EXIT_NUMERICAL, EXIT_CONTRACT = 0, 2, 3, 4
SEED_ENV = "COXSTAB_SEED"
TOP_TABLE = 20


# ---------------------------------------------------------------------------
# output helpers


def provenance(cfg: dict) -> dict:
    return {"tool": "coxstab", "version": __version__, "run_config": cfg}


def write_json(path: Path, doc: dict, cfg: dict) -> None:
    out = {**provenance(cfg), **doc, "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat()}
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_csv(path: Path, header, rows, cfg: dict) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(provenance(cfg), sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def run_config(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "verbose")}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(cfg.items())}


def fit_options(args) -> FitOptions:
    return FitOptions(tol=args.tol, max_iter=args.max_iter, step_init=args.step_init, step_shrink=args.step_shrink)


def _prepare(args, features=None, meta=None) -> SurvivalDataset:
    ds = load_dataset(features or args.features, meta or args.meta)
    return ds if args.no_standardize else standardize(ds)


def _graph(args, ds: SurvivalDataset):
    return laplacian(build_graph(ds.meta, args.prefix_len))


def _align(ds: SurvivalDataset, model: CoxModel) -> np.ndarray:
    """Columns of ``ds`` in the model's feature order."""
    if not model.feature_names or ds.names == model.feature_names:
        if ds.p != model.p:
            raise ContractError(f"data has {ds.p} features, model has {model.p}")
        return ds.X
    pos = {nm: i for i, nm in enumerate(ds.names)}
    missing = [nm for nm in model.feature_names if nm not in pos]
    if missing:
        raise ContractError(f"evaluation data lacks model features {missing[:5]}")
    return ds.X[:, [pos[nm] for nm in model.feature_names]]


def importance_table(model: CoxModel, ds: SurvivalDataset, top: int = TOP_TABLE) -> list[dict]:
    raw = importance(model, ds)
    scaled = scale_importance(raw)
    order = np.argsort(-raw, kind="stable")
    rows = []
    for i in order[:top]:
        if raw[i] <= 0:
            break
        rows.append(
            {"feature": ds.names[i], "code": ds.meta[i].code, "weight": float(model.weights[i]),
             "importance": round(float(scaled[i]), 1)}
        )
    return rows


def evaluate_model(model: CoxModel, ds_raw: SurvivalDataset, horizon: float, seed: int) -> dict:
    X = model.standardize_rows(_align(ds_raw, model))
    labels = HorizonLabeling.from_survival(ds_raw.times, ds_raw.events, horizon)
    return auc(risk_scores(model, X), labels, seed=seed).to_dict()


def train_report(model: CoxModel, ds: SurvivalDataset, L) -> dict:
    parts = objective(model.weights, ds, L, model.alpha, model.beta)
    trace = model.objective_trace
    return {
        "alpha": model.alpha,
        "beta": model.beta,
        "n": ds.n,
        "p": ds.p,
        "events": ds.q,
        "nonzero": model.nonzero,
        "optimization": {
            "n_iter": model.n_iter,
            "converged": model.converged,
            "objective_initial": trace[0],
            "objective_final": trace[-1],
            "trace_length": len(trace),
        },
        "objective_parts": {"loglik": parts.loglik, "l1": parts.l1, "graph": parts.graph, "total": parts.total},
        "top_features": importance_table(model, ds),
    }


# ---------------------------------------------------------------------------
# commands


def cmd_train(args) -> None:
    cfg = run_config(args)
    ds = _prepare(args)
    L = _graph(args, ds)
    model = fit(ds, L, args.alpha, args.beta, fit_options(args), allow_unstandardized=args.no_standardize)
    out = args.out_dir
    model.save(out / "model.json", extra=provenance(cfg))
    write_json(out / "train_report.json", train_report(model, ds, L), cfg)
    log.info("fitted %d nonzero weights in %d iterations", model.nonzero, model.n_iter)


def cmd_evaluate(args) -> None:
    cfg = run_config(args)
    model = CoxModel.load(args.model)
    ds_raw = load_dataset(args.features, args.meta)
    write_json(args.out_dir / "evaluation.json", evaluate_model(model, ds_raw, args.horizon_days, args.seed), cfg)


def _curve_rows(reports):
    return [[r.k, repr(r.mean_jaccard), repr(r.mean_consistency)] for r in reports]


def cmd_stability(args) -> None:
    cfg = run_config(args)
    ds = _prepare(args)
    L = _graph(args, ds)
    imps = bootstrap_importances(
        ds, L, args.alpha, args.beta, args.bootstraps, args.seed, fit_options(args),
        jobs=args.jobs, do_standardize=not args.no_standardize,
    )
    report = stability_report(subsets_from_importances(imps, args.top_k))
    write_json(args.out_dir / "stability.json", report.to_dict(), cfg)
    if args.k_list:
        curve = stability_curve(imps, args.k_list)
        write_csv(args.out_dir / "stability_curve.csv", ["k", "mean_jaccard", "mean_consistency"],
                  _curve_rows(curve), cfg)


def _split_rows(ds_raw: SurvivalDataset, fraction: float, seed: int):
    if not 0 < fraction < 1:
        raise ContractError(f"--val-fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2**31,)))
    perm = rng.permutation(ds_raw.n)
    n_val = max(1, int(round(fraction * ds_raw.n)))
    return ds_raw.subset(np.sort(perm[n_val:])), ds_raw.subset(np.sort(perm[:n_val]))


def grid_cell(train_raw, eval_raw, alpha, beta, args) -> dict:
    ds = train_raw if args.no_standardize else standardize(train_raw)
    L = _graph(args, ds)
    opts = fit_options(args)
    model = fit(ds, L, alpha, beta, opts, allow_unstandardized=args.no_standardize)
    ev = evaluate_model(model, eval_raw, args.horizon_days, args.seed)
    imps = bootstrap_importances(ds, L, alpha, beta, args.bootstraps, args.seed, opts,
                                 jobs=args.jobs, do_standardize=not args.no_standardize)
    st = stability_report(subsets_from_importances(imps, args.top_k))
    return {
        "alpha": alpha,
        "beta": beta,
        "auc": ev["auc"],
        "nonzeros": model.nonzero,
        "mean_consistency": st.mean_consistency,
        "mean_jaccard": st.mean_jaccard,
    }


def cmd_grid(args) -> None:
    cfg = run_config(args)
    if not args.alphas or not args.betas:
        raise ContractError("grid needs at least one alpha and one beta")
    train_raw = load_dataset(args.features, args.meta)
    if args.eval_features:
        eval_raw = load_dataset(args.eval_features, args.eval_meta or args.meta)
    elif args.val_fraction:
        train_raw, eval_raw = _split_rows(train_raw, args.val_fraction, args.seed)
    else:
        raise ContractError("grid needs --eval-features or --val-fraction")
    cells = [grid_cell(train_raw, eval_raw, a, b, args) for a in args.alphas for b in args.betas]
    cols = ["alpha", "beta", "auc", "nonzeros", "mean_consistency", "mean_jaccard"]
    write_csv(args.out_dir / "grid.csv", cols, [[repr(c[k]) for k in cols] for c in cells], cfg)
    write_json(args.out_dir / "grid.json", {"cells": cells}, cfg)


def cmd_synth(args) -> None:
    cfg = run_config(args)
    weights = {}
    for g, v in enumerate(args.group_weights or []):
        for i in range(g * args.group_size, (g + 1) * args.group_size):
            weights[i] = v
    sc = SynthConfig(
        n=args.n, n_groups=args.groups, group_size=args.group_size, within_corr=args.rho, n_noise=args.noise,
        true_weights=weights, baseline_rate=args.baseline_rate, censor_rate=args.censor_rate, seed=args.seed,
    )
    ds, truth = generate(sc)
    out = args.out_dir
    write_dataset(ds, out / "features.csv", out / "meta.csv")
    write_json(out / "truth.json", {"config": sc.to_dict(), "truth": truth.to_dict(),
                                    "realized_censored_fraction": 1 - ds.q / ds.n}, cfg)


def cmd_graph_export(args) -> None:
    cfg = run_config(args)
    meta = [FeatureMeta(i, code=c, window_id=w, event_key=k, name=nm)
            for i, (nm, (c, w, k)) in enumerate(load_meta(args.meta).items())]
    g = build_graph(meta, args.prefix_len)
    write_csv(args.out_dir / "edges.csv", ["i", "j", "tag"], edge_rows(g), cfg)
    tags = {}
    for t in g.provenance.values():
        key = "+".join(sorted(t))
        tags[key] = tags.get(key, 0) + 1
    write_json(args.out_dir / "graph.json", {"p": g.p, "n_edges": g.n_edges, "edges_by_tag": tags}, cfg)


# ---------------------------------------------------------------------------
# argument parsing


def _floats(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v.strip()]


def _ints(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v.strip()]


def _default_seed() -> int:
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ContractError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def build_parser() -> argparse.ArgumentParser:
    seed = _default_seed()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", type=Path, default=Path("."))
    common.add_argument("--seed", type=int, default=seed, help=f"default: ${SEED_ENV} or 0")
    common.add_argument("-v", "--verbose", action="store_true")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--features", type=Path, required=True)
    data.add_argument("--meta", type=Path, required=True)

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--alpha", type=float, default=0.004)
    model.add_argument("--beta", type=float, default=0.03)
    model.add_argument("--prefix-len", type=int, default=DEFAULT_PREFIX_LEN)
    model.add_argument("--no-standardize", action="store_true")
    model.add_argument("--tol", type=float, default=FitOptions.tol)
    model.add_argument("--max-iter", type=int, default=FitOptions.max_iter)
    model.add_argument("--step-init", type=float, default=FitOptions.step_init)
    model.add_argument("--step-shrink", type=float, default=FitOptions.step_shrink)

    boot = argparse.ArgumentParser(add_help=False)
    boot.add_argument("--bootstraps", type=int, default=100)
    boot.add_argument("--top-k", type=int, default=10)
    boot.add_argument("--jobs", type=int, default=1)

    horizon = argparse.ArgumentParser(add_help=False)
    horizon.add_argument("--horizon-days", type=float, default=DEFAULT_HORIZON_DAYS)

    parser = argparse.ArgumentParser(prog="coxstab", description="Graph-regularized sparse Cox regression.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common, data, model], help="fit one model")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common, data, horizon], help="AUC of a saved model")
    p.add_argument("--model", type=Path, required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stability", parents=[common, data, model, boot], help="bootstrap feature stability")
    p.add_argument("--k-list", type=_ints, default=None, help="comma-separated subset sizes for curve CSV")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("grid", parents=[common, data, model, boot, horizon], help="alpha x beta sweep")
    p.add_argument("--alphas", type=_floats, required=True)
    p.add_argument("--betas", type=_floats, required=True)
    p.add_argument("--eval-features", type=Path)
    p.add_argument("--eval-meta", type=Path)
    p.add_argument("--val-fraction", type=float)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic dataset")
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--groups", type=int, default=6)
    p.add_argument("--group-size", type=int, default=5)
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--noise", type=int, default=30)
    p.add_argument("--group-weights", type=_floats, default=None,
                   help="comma-separated coefficient for every member of group 0, 1, ...")
    p.add_argument("--baseline-rate", type=float, default=1.0)
    p.add_argument("--censor-rate", type=float, default=0.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("graph-export", parents=[common], help="write the feature graph edge list")
    p.add_argument("--meta", type=Path, required=True)
    p.add_argument("--prefix-len", type=int, default=DEFAULT_PREFIX_LEN)
    p.set_defaults(func=cmd_graph_export)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        args.out_dir.mkdir(parents=True, exist_ok=True)
        args.func(args)
    except ParseError as exc:
        print(f"coxstab: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NumericalError as exc:
        print(f"coxstab: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ContractError as exc:
        print(f"coxstab: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
