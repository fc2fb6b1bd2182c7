"""Command line entry point: ``fmqubo <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from . import data as data_mod
from .evaluation import (
    BenchInstance,
    benchmark,
    extrapolation_table,
    fit_complexity,
    mean_overlap,
    median_times,
    run_overlap_experiment,
    sample_users,
    synthetic_instance,
    write_bench_csv,
    write_overlap_csv,
    write_rows_csv,
)
from .fm import rmse
from .io import load_model, save_model, write_manifest
from .qubo import qubo_to_ising, write_ising, write_qubo
from .recommender import BACKENDS, FMQuboRecommender
from .solvers import AnnealConfig, sample_sa

log = logging.getLogger("fmqubo")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _raw_id(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def _add_training_flags(p):
    p.add_argument("--k", type=int, default=200, help="latent dimension (default 200)")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.01, help="SGD learning rate")
    p.add_argument("--reg-w0", type=float, default=0.0)
    p.add_argument("--reg-w", type=float, default=1e-4)
    p.add_argument("--reg-v", type=float, default=1e-4)
    p.add_argument("--init-std", type=float, default=0.01)


def _add_anneal_flags(p):
    p.add_argument("--sweeps", type=int, default=1000, help="Metropolis sweeps per shot")
    p.add_argument("--beta-initial", type=float, default=0.1)
    p.add_argument("--beta-final", type=float, default=10.0)
    p.add_argument("--programming-thermalization", type=int, default=1000,
                   help="microseconds; recorded only")
    p.add_argument("--readout-thermalization", type=int, default=0, help="microseconds; recorded only")


def _anneal_config(args, shots: int) -> AnnealConfig:
    return AnnealConfig(shots=shots, sweeps=args.sweeps, beta_initial=args.beta_initial,
                        beta_final=args.beta_final,
                        programming_thermalization_us=args.programming_thermalization,
                        readout_thermalization_us=args.readout_thermalization, seed=args.seed)


def _recommender_from_args(args) -> FMQuboRecommender:
    return FMQuboRecommender(k=args.k, learning_rate=args.lr, epochs=args.epochs, reg_w0=args.reg_w0,
                             reg_w=args.reg_w, reg_v=args.reg_v, init_std=args.init_std,
                             random_state=args.seed)


def _ingest(args):
    return data_mod.ingest(args.ratings, max_rows=args.max_rows, fraction=args.fraction, seed=args.seed)


def cmd_make_synthetic(args) -> int:
    rows = data_mod.make_synthetic_ratings(args.users, args.items, args.n_ratings, seed=args.seed)
    data_mod.write_ratings_csv(rows, args.out)
    write_manifest(args.out, "make-synthetic", vars(args) | {"out": str(args.out)})
    print(f"wrote {len(rows)} ratings to {args.out}")
    return 0


def cmd_train(args) -> int:
    dataset = _ingest(args)
    train, test = dataset, None
    if args.holdout:
        train, test = data_mod.split(dataset, args.holdout, seed=args.seed)
    rec = _recommender_from_args(args).fit_dataset(train)
    save_model(args.out, rec.model_, rec.user_codebook_, rec.item_codebook_)
    summary = {
        "n_data": dataset.n_data, "n_users": dataset.n_users, "n_items": dataset.n_items,
        "n_u": rec.model_.n_u, "n_m": rec.model_.n_m,
        "train_rmse_initial": rec.train_rmse_[0], "train_rmse_final": rec.train_rmse_[-1],
    }
    if test is not None:
        summary["test_rmse"] = rmse(rec.model_, test, rec.user_codebook_, rec.item_codebook_)
    write_manifest(args.out, "train", vars(args) | {"summary": summary}, inputs=[args.ratings])
    for key, value in summary.items():
        print(f"{key}: {value}")
    return 0


def cmd_recommend(args) -> int:
    model, ucb, icb = load_model(args.model)
    rec = FMQuboRecommender.from_model(model, ucb, icb, random_state=args.seed)
    config = _anneal_config(args, args.shots)
    if args.backend == "sa" and args.samples_out:
        samples = sample_sa(qubo_to_ising(rec.reduce(args.user)), config)
        samples.to_csv(args.samples_out)
    recs = rec.recommend(args.user, top=args.top, backend=args.backend, anneal_config=config)
    for rank, r in enumerate(recs, start=1):
        print(f"{rank},{r.item_id},{r.rating:.6f}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("rank", "item_id", "item_index", "predicted_rating", "hits"))
            for rank, r in enumerate(recs, start=1):
                writer.writerow((rank, r.item_id, r.item_index, repr(r.rating), r.hits))
        write_manifest(args.out, "recommend", vars(args) | {"anneal": asdict(config)},
                       inputs=[args.model])
    return 0


def cmd_evaluate_overlap(args) -> int:
    model, ucb, icb = load_model(args.model)
    users = sample_users(ucb, args.users, seed=args.seed)
    reports = []
    shots_list = args.shots if args.backend == "sa" else [2**model.n_m]
    for shots in shots_list:
        reports += run_overlap_experiment(model, ucb, icb, users, args.ks,
                                          _anneal_config(args, shots), backend=args.backend)
    write_overlap_csv(reports, args.out)
    write_manifest(args.out, "evaluate-overlap", vars(args), inputs=[args.model])
    for (backend, shots, k_s), mean in mean_overlap(reports).items():
        print(f"{backend} shots={shots} k_s={k_s}: mean overlap {mean:.2f}%")
    return 0


def cmd_benchmark(args) -> int:
    instances = []
    inputs = []
    if args.synthetic_items:
        for n_items in args.synthetic_items:
            instances.append(synthetic_instance(n_items, k=args.k, seed=args.seed + n_items))
    else:
        if not args.ratings or not args.rows:
            raise ValueError("benchmark needs --synthetic-items or both --ratings and --rows")
        inputs.append(args.ratings)
        for n_rows in args.rows:
            dataset = data_mod.ingest(args.ratings, max_rows=n_rows, seed=args.seed)
            rec = _recommender_from_args(args).fit_dataset(dataset)
            log.info("trained on %d rows: N_m=%d", dataset.n_data, dataset.n_items)
            instances.append(BenchInstance(rec.model_, rec.user_codebook_, rec.item_codebook_,
                                           dataset.n_data))
    records = benchmark(instances, backends=args.backends.split(","), n_users=args.users,
                        reps=args.reps, config=_anneal_config(args, args.shots), seed=args.seed)
    write_bench_csv(records, args.out)
    medians = median_times(records)
    for (backend, n_items), seconds in medians.items():
        print(f"{backend} N_m={n_items}: median {seconds:.6f} s")
    outputs = []
    if args.fit_out:
        fits = []
        for backend, family in (("direct", "direct"), ("sa", "qa")):
            pts = [(n, s) for (b, n), s in medians.items() if b == backend]
            if len(pts) >= 3:
                n_items, seconds = zip(*pts)
                fits.append(fit_complexity(n_items, seconds, family))
        if fits:
            write_rows_csv(extrapolation_table(fits), args.fit_out)
            outputs.append(args.fit_out)
            for fit in fits:
                print(f"fit {fit.family}: scale={fit.scale!r} shift={fit.shift!r}")
    write_manifest(args.out, "benchmark", vars(args), inputs=inputs, outputs=outputs)
    return 0


def cmd_export_qubo(args) -> int:
    model, ucb, icb = load_model(args.model)
    rec = FMQuboRecommender.from_model(model, ucb, icb)
    qubo = rec.reduce(args.user)
    if args.ising:
        write_ising(qubo_to_ising(qubo), args.out)
    else:
        write_qubo(qubo, args.out)
    write_manifest(args.out, "export-qubo", vars(args), inputs=[args.model])
    print(f"wrote {'Ising' if args.ising else 'QUBO'} problem with {qubo.n} variables to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fmqubo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-synthetic", help="write a MovieLens-layout synthetic ratings CSV")
    p.add_argument("--users", type=int, default=40)
    p.add_argument("--items", type=int, default=2090)
    p.add_argument("--n-ratings", type=int, default=5000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_make_synthetic)

    p = sub.add_parser("train", help="train an FM on a ratings CSV")
    p.add_argument("--ratings", type=Path, required=True)
    sel = p.add_mutually_exclusive_group()
    sel.add_argument("--max-rows", type=int, help="use the first N rows")
    sel.add_argument("--fraction", type=float, help="seeded uniform sample of this share of rows")
    p.add_argument("--holdout", type=float, default=0.0, help="test fraction for RMSE reporting")
    p.add_argument("--seed", type=int, default=42)
    _add_training_flags(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("recommend", help="top-N suggestions for one user")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--user", type=_raw_id, required=True, help="raw user id")
    p.add_argument("--backend", choices=BACKENDS, default="direct")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--shots", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    _add_anneal_flags(p)
    p.add_argument("--out", type=Path, help="also write a CSV")
    p.add_argument("--samples-out", type=Path, help="write the raw sample set (sa backend)")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("evaluate-overlap", help="overlap of sampled vs direct top-k lists")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--users", type=int, default=100, help="number of randomly picked users")
    p.add_argument("--shots", type=_int_list, default=[4000], help="comma list, e.g. 100,4000")
    p.add_argument("--ks", type=_int_list, default=[10, 30, 50])
    p.add_argument("--backend", choices=("sa", "exhaustive"), default="sa")
    p.add_argument("--seed", type=int, default=42)
    _add_anneal_flags(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_evaluate_overlap)

    p = sub.add_parser("benchmark", help="suggestion-time scaling across catalogue sizes")
    p.add_argument("--ratings", type=Path)
    p.add_argument("--rows", type=_int_list, help="dataset sizes (first-N rows), e.g. 5000,100000")
    p.add_argument("--synthetic-items", type=_int_list, help="random models with these N_m instead")
    p.add_argument("--backends", default="direct,sa")
    p.add_argument("--users", type=int, default=5)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--shots", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    _add_training_flags(p)
    _add_anneal_flags(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--fit-out", type=Path, help="write fitted curves extrapolated to N_m = 1e49")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("export-qubo", help="write one user's reduced QUBO (or Ising) problem")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--user", type=_raw_id, required=True)
    p.add_argument("--ising", action="store_true", help="export the Ising form instead")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_export_qubo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"fmqubo {args.command}: error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
