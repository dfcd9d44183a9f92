"""Command-line interface.

Every command takes its randomness from ``--seed`` (default: the
``SIGFACTOR_SEED`` environment variable, else 0) and writes its files only
after all computation has finished.
"""
from __future__ import annotations

import functools
import itertools
import json
import logging
from pathlib import Path
from typing import Iterable, List, Tuple

import click
import numpy as np
import pandas as pd

from . import __version__
from .core import FitConfig, Method, NonNegScheme, SigFactorError
from .evaluate import consistency_report, error_summary, split_evaluation
from .fit import fit_model
from .io import (FEATURES_BY_SAMPLES, ORIENTATIONS, RunManifest, format_number, load_catalog,
                 load_cosmic, load_run, load_sim_spec, read_matrix, save_run,
                 signature_names, write_catalog, write_table)
from .metrics import exposure_distance, match_signatures, pam_consensus
from .select import ALL_METHODS, bootstrap_test_errors, choose_k_all
from .sim import two_signature_spec, simulate_poisson

logger: logging.Logger = logging.getLogger(__name__)

METHOD_CHOICE = click.Choice([m.value for m in Method])
SCHEME_CHOICE = click.Choice([s.value for s in NonNegScheme])


def _reports_errors(func):
    """Turn library errors into a one-line diagnostic and exit code 1."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (SigFactorError, OSError) as e:
            raise click.ClickException(str(e)) from e
    return wrapper


def _seed_option(func):
    return click.option("--seed", type=int, default=0, envvar="SIGFACTOR_SEED", show_default=True,
                        help="Master seed. Defaults to $SIGFACTOR_SEED when set.")(func)


def _fit_options(func):
    options = [
        click.option("--max-iters", type=click.IntRange(min=1), default=500_000, show_default=True,
                     help="Iteration cap per fit."),
        click.option("--rel-tol", type=float, default=1e-10, show_default=True,
                     help="Stop when the relative loss change falls below this."),
        click.option("--lr", "learning_rate", type=float, default=1e-4, show_default=True,
                     help="Adam learning rate (AE-NMF only)."),
        click.option("--scheme", type=SCHEME_CHOICE, default=NonNegScheme.FP_ABS.value, show_default=True,
                     help="Non-negativity scheme (AE-NMF only)."),
        click.option("--orientation", type=click.Choice(ORIENTATIONS), default=FEATURES_BY_SAMPLES,
                     show_default=True, help="Layout of the input catalog."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _methods(value: str) -> Tuple[Method, ...]:
    try:
        return tuple(Method(m.strip()) for m in value.split(",") if m.strip())
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--methods") from e


def _run_dirs(runs: Iterable[str], more: Iterable[str]) -> List[Path]:
    dirs = [Path(p) for p in itertools.chain(runs, more)]
    if not dirs:
        raise click.UsageError("no run directories given")
    return dirs


@click.group()
@click.option("--log-level", type=click.Choice(["warning", "info", "debug"]), default="warning",
              show_default=True, help="Logging verbosity.")
@click.version_option(version=__version__, prog_name="sigfactor")
def cli(log_level: str) -> None:
    """Extract and compare mutational signatures with NMF, convex NMF and AE-NMF."""
    logging.basicConfig(level=getattr(logging, log_level.upper()),
                        format="%(levelname)s %(name)s: %(message)s")


@cli.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON simulation spec.")
@click.option("--example", is_flag=True, help="Two-signature, six-channel, 30-sample example.")
@click.option("--paper-example", "example_alias", is_flag=True, hidden=True)
@_seed_option
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Catalog TSV to write.")
@_reports_errors
def simulate(spec_path: str, example: bool, example_alias: bool, seed: int, out: str) -> None:
    """Draw a Poisson catalog."""
    example = example or example_alias
    if bool(spec_path) == example:
        raise click.UsageError("give exactly one of --spec or --example")
    if example:
        catalog = simulate_poisson(two_signature_spec(seed))
    else:
        spec, labels = load_sim_spec(spec_path, seed)
        catalog = simulate_poisson(spec, feature_labels=labels)
    write_catalog(catalog, out)
    click.echo(f"wrote {catalog.shape[0]}x{catalog.shape[1]} catalog to {out}")


@cli.command()
@click.option("--method", required=True, type=METHOD_CHOICE)
@click.option("--k", required=True, type=int, help="Number of signatures.")
@_seed_option
@click.option("--in", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@_fit_options
@click.option("--raw", is_flag=True, help="Write unnormalised factors.")
@_reports_errors
def fit(method: str, k: int, seed: int, input_path: str, out_dir: str, max_iters: int,
        rel_tol: float, learning_rate: float, scheme: str, orientation: str, raw: bool) -> None:
    """Fit one model and write signatures, exposures, loss trace and manifest."""
    catalog = load_catalog(input_path, orientation)
    config = FitConfig(k=k, max_iters=max_iters, rel_tol=rel_tol, seed=seed,
                       learning_rate=learning_rate, nonneg_scheme=NonNegScheme(scheme))
    model = fit_model(Method(method), catalog.matrix, config)
    manifest = RunManifest.for_inputs("fit", config.to_dict() | {"orientation": orientation, "raw": raw},
                                      seed, [input_path])
    save_run(out_dir, model, catalog, manifest, raw=raw)
    status = "converged" if model.converged else "did not converge"
    click.echo(f"{method} k={k}: loss {model.final_loss:.6g} after {model.iters_run} iterations ({status})")


@cli.command("select-k")
@click.option("--in", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--k-max", required=True, type=click.IntRange(min=2))
@click.option("--nsims", type=click.IntRange(min=5), default=10, show_default=True)
@_seed_option
@click.option("--p-val", type=float, default=0.05, show_default=True)
@click.option("--methods", default=",".join(m.value for m in ALL_METHODS), show_default=True)
@_fit_options
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default=".", show_default=True)
@click.option("--progress/--no-progress", default=False)
@_reports_errors
def select_k(input_path: str, k_max: int, nsims: int, seed: int, p_val: float, methods: str,
             max_iters: int, rel_tol: float, learning_rate: float, scheme: str, orientation: str,
             threads: int, out_dir: str, progress: bool) -> None:
    """Bootstrap test errors and choose the number of signatures."""
    catalog = load_catalog(input_path, orientation)
    config = FitConfig(k=2, max_iters=max_iters, rel_tol=rel_tol, seed=seed,
                       learning_rate=learning_rate, nonneg_scheme=NonNegScheme(scheme))
    errors = bootstrap_test_errors(catalog, k_max, nsims, config, seed, models=_methods(methods),
                                   threads=threads, progress=progress)
    chosen = choose_k_all(errors, p_val)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frame = errors.to_frame()
    frame["test_error"] = frame["test_error"].map(format_number)
    frame.to_csv(out / "boot_errors.csv", index=False, lineterminator="\n")
    (out / "chosen_k.json").write_text(json.dumps(chosen, indent=2, sort_keys=True) + "\n")
    manifest = RunManifest.for_inputs(
        "select-k",
        {k: v for k, v in config.to_dict().items() if k != "k"}
        | {"k_max": k_max, "nsims": nsims, "p_val": p_val, "methods": methods, "orientation": orientation},
        seed, [input_path])
    manifest.outputs = ["boot_errors.csv", "chosen_k.json", "manifest.json"]
    manifest.write(out / "manifest.json")
    click.echo(" ".join(f"{m}={k}" for m, k in chosen.items()))


@cli.command()
@click.option("--runs", multiple=True, type=click.Path(exists=True, file_okay=False),
              help="Run directories (further ones may follow as arguments).")
@click.argument("more_runs", nargs=-1, type=click.Path(exists=True, file_okay=False))
@click.option("--out-dir", type=click.Path(file_okay=False), default=".", show_default=True)
@_reports_errors
def compare(runs: Tuple[str, ...], more_runs: Tuple[str, ...], out_dir: str) -> None:
    """Pairwise signature matching, ACS and exposure distance between runs."""
    records = [load_run(p) for p in _run_dirs(runs, more_runs)]
    rows = []
    for a, b in itertools.combinations(records, 2):
        first, second = (a, b) if a.signatures.shape[1] <= b.signatures.shape[1] else (b, a)
        match = match_signatures(first.signatures.to_numpy(), second.signatures.to_numpy())
        same_samples = list(first.exposures.columns) == list(second.exposures.columns)
        distance = (exposure_distance(first.exposures.to_numpy(), second.exposures.to_numpy(), match)
                    if same_samples else np.nan)
        rows.append({"run_a": str(first.path), "run_b": str(second.path),
                     "method_a": first.method, "method_b": second.method,
                     "k_a": first.signatures.shape[1], "k_b": second.signatures.shape[1],
                     "acs": format_number(match.acs),
                     "exposure_distance": "" if np.isnan(distance) else format_number(distance)})

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pd.DataFrame.from_records(rows, columns=["run_a", "run_b", "method_a", "method_b", "k_a", "k_b",
                                             "acs", "exposure_distance"]) \
        .to_csv(out / "comparison.csv", index=False, lineterminator="\n")

    by_method = {}
    for record in records:
        by_method.setdefault(record.method, []).append(record.signatures.to_numpy())
    report = consistency_report(by_method)
    (out / "consistency.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    click.echo(f"compared {len(rows)} run pair(s); wrote {out / 'comparison.csv'}")


@cli.command()
@click.option("--runs", multiple=True, type=click.Path(exists=True, file_okay=False),
              help="Run directories (further ones may follow as arguments).")
@click.argument("more_runs", nargs=-1, type=click.Path(exists=True, file_okay=False))
@click.option("--k", required=True, type=click.IntRange(min=1))
@_seed_option
@click.option("--out", type=click.Path(dir_okay=False), default="consensus_signatures.tsv", show_default=True)
@_reports_errors
def consensus(runs: Tuple[str, ...], more_runs: Tuple[str, ...], k: int, seed: int, out: str) -> None:
    """Cluster the signatures of several runs with PAM and write the medoids."""
    records = [load_run(p) for p in _run_dirs(runs, more_runs)]
    labels = list(records[0].signatures.index)
    for record in records[1:]:
        if list(record.signatures.index) != labels:
            raise SigFactorError(f"{record.path}: feature labels differ from {records[0].path}")

    pooled = pd.concat(
        [r.signatures.set_axis([f"{r.path.name}:{c}" for c in r.signatures.columns], axis=1)
         for r in records], axis=1)
    result = pam_consensus(pooled.to_numpy().T, k, seed=seed)
    medoids = pooled.iloc[:, result.medoids]
    write_table(medoids.set_axis(signature_names(k), axis=1), out, index_label="Type")

    members = pd.DataFrame({"member": pooled.columns,
                            "cluster": [signature_names(k)[c] for c in result.labels]})
    members.to_csv(Path(out).with_name(Path(out).stem + "_members.tsv"), sep="\t", index=False,
                   lineterminator="\n")
    click.echo(f"{pooled.shape[1]} signatures -> {k} medoids (cost {result.cost:.4g}); wrote {out}")


@cli.command("cosmic-match")
@click.option("--signatures", "signatures_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--cosmic", "cosmic_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default="cosmic_match.tsv", show_default=True)
@_reports_errors
def cosmic_match(signatures_path: str, cosmic_path: str, out: str) -> None:
    """Match extracted signatures to reference signatures."""
    signatures = read_matrix(signatures_path)
    cosmic = load_cosmic(cosmic_path).to_frame()
    if list(signatures.index) != list(cosmic.index):
        if set(signatures.index) != set(cosmic.index):
            raise SigFactorError(f"{signatures_path}: feature labels do not match {cosmic_path}")
        signatures = signatures.loc[cosmic.index]
    match = match_signatures(signatures.to_numpy(), cosmic.to_numpy())
    table = pd.DataFrame({
        "signature": [signatures.columns[a] for a, _ in match.pairs],
        "cosmic_signature": [cosmic.columns[b] for _, b in match.pairs],
        "cosine": [format_number(c) for c in match.per_pair_cosine],
    })
    table.to_csv(out, sep="\t", index=False, lineterminator="\n")
    click.echo(f"ACS {match.acs:.4f}; wrote {out}")


@cli.command()
@click.option("--in", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--k", required=True, type=int)
@click.option("--nsplits", type=click.IntRange(min=1), default=30, show_default=True)
@click.option("--test-fraction", type=click.FloatRange(0, 1, min_open=True, max_open=True),
              default=0.2, show_default=True)
@click.option("--methods", default="nmf,aenmf", show_default=True)
@_seed_option
@_fit_options
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--progress/--no-progress", default=False)
@_reports_errors
def evaluate(input_path: str, k: int, nsplits: int, test_fraction: float, methods: str, seed: int,
             max_iters: int, rel_tol: float, learning_rate: float, scheme: str, orientation: str,
             threads: int, out_dir: str, progress: bool) -> None:
    """Train/test errors and signature consistency over repeated random splits."""
    catalog = load_catalog(input_path, orientation)
    config = FitConfig(k=k, max_iters=max_iters, rel_tol=rel_tol, seed=seed,
                       learning_rate=learning_rate, nonneg_scheme=NonNegScheme(scheme))
    result = split_evaluation(catalog, config, _methods(methods), nsplits, test_fraction, seed,
                              threads=threads, progress=progress)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = result.table.copy()
    for col in ("train_error", "test_error"):
        table[col] = table[col].map(format_number)
    table.to_csv(out / "split_errors.csv", index=False, lineterminator="\n")
    error_summary(result.table).map(format_number).to_csv(out / "error_summary.csv", lineterminator="\n")
    report = consistency_report(result.signatures_by_method())
    (out / "consistency.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")

    for (split, method), model in sorted(result.models.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        train, _ = result.splits[split]
        manifest = RunManifest.for_inputs(
            "evaluate", config.to_dict() | {"split": split + 1, "test_fraction": test_fraction,
                                            "orientation": orientation},
            seed, [input_path])
        save_run(out / f"split{split + 1:03d}_{method.value}", model, catalog.subset(train), manifest)

    click.echo(error_summary(result.table).to_string())


def main() -> None:
    cli(prog_name="sigfactor")


if __name__ == "__main__":
    main()
