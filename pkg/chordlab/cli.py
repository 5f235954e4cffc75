"""Command-line interface for chordlab"""

import json
import logging
from typing import Dict, Optional

import click
import numpy as np
import pandas as pd
from rich.console import Console
from rich.logging import RichHandler

from . import __version__
from .alphabets import AlphabetId, class_of, enumerate_classes
from .analyzer import ACEAnalyzer, classify_pairs
from .chord_syntax import format_chord, parse_chord, strip_to_core
from .dataset import (
    load_dataset,
    save_dataset,
    split_dataset,
    synth_dataset,
)
from .distances import DistanceConfig, DistanceKind, distance, distance_frame
from .evaluation import (
    DEFAULT_HOP,
    ChordEvaluator,
    EvalVocabulary,
    class_accuracy,
)
from .exceptions import ChordLabError
from .experiments import run_grid, summarize_grid, vocabularies_for
from .learner import (
    TrainConfig,
    accuracy,
    build_cnn_model,
    build_dense_model,
    save_model,
    train,
)
from .similarity import DEFAULT_K, similarity_for, similarity_frame

console = Console(stderr=True)

ALPHABETS = click.Choice([a.value for a in AlphabetId])
DISTANCES = click.Choice([d.value for d in DistanceKind])
VOCABULARIES = click.Choice([v.value for v in EvalVocabulary] + ["all"])


class ChordLabGroup(click.Group):
    """Turns data errors into a one-line message and exit status 1."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except ChordLabError as e:
            raise click.ClickException(str(e)) from e


def _configure_logging(verbose: int):
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logger = logging.getLogger("chordlab")
    logger.handlers[:] = [
        RichHandler(console=console, show_time=False, show_path=False)
    ]
    logger.setLevel(level)


def _number(value: float) -> str:
    return f"{value:.12g}"


def _metadata(obj: Dict, config: Optional[Dict] = None) -> Dict:
    return {
        "tool": "chordlab",
        "version": __version__,
        "seed": obj["seed"],
        "config": config or {},
    }


def _emit_json(payload: Dict, out: Optional[str]):
    text = json.dumps(payload, indent=2, sort_keys=True, default=str)
    if out:
        with open(out, "w") as f:
            f.write(text + "\n")
        console.print(f"[green]Report saved to {out}[/green]")
    else:
        click.echo(text)


def _emit_frame(df: pd.DataFrame, out: Optional[str], index: bool = False):
    if out:
        df.to_csv(out, index=index)
        console.print(f"[green]Results saved to {out}[/green]")
    else:
        click.echo(df.to_csv(index=index), nl=False)


@click.group(cls=ChordLabGroup)
@click.version_option(__version__, prog_name="chordlab")
@click.option(
    "--seed",
    type=int,
    default=0,
    help="Random seed for synthesis, splits and training (default: 0)",
)
@click.option(
    "--format",
    "output_format",
    type=click.Choice(["json", "csv"]),
    default="json",
    help="Machine output format (default: json)",
)
@click.option(
    "-v",
    "--verbose",
    count=True,
    help="Log progress (-v) or debug details (-vv) to stderr",
)
@click.pass_context
def main(ctx, seed, output_format, verbose):
    """Chord label algebra, distances and error analysis"""
    _configure_logging(verbose)
    ctx.obj = {"seed": seed, "format": output_format}


@main.command()
@click.argument("label")
@click.option(
    "--resolve-aliases",
    is_flag=True,
    help="Map shorthands such as 9 or min9 onto the 14 qualities",
)
@click.pass_obj
def parse(obj, label, resolve_aliases):
    """Parse a Harte chord label"""
    chord = parse_chord(label, resolve_aliases=resolve_aliases)
    _emit_json(
        {
            "metadata": _metadata(
                obj, {"resolve_aliases": resolve_aliases}
            ),
            "input": label,
            "no_chord": chord.is_no_chord,
            "root": chord.root,
            "quality": chord.quality.value if chord.quality else None,
            "extensions": list(chord.extensions),
            "bass": chord.bass,
            "canonical": format_chord(chord),
            "core": format_chord(strip_to_core(chord)),
        },
        None,
    )


@main.command()
@click.argument("label")
@click.option("--alphabet", type=ALPHABETS, default="A0", show_default=True)
def reduce(label, alphabet):
    """Reduce a chord label to its class in an alphabet"""
    click.echo(str(class_of(label, alphabet)))


@main.command()
@click.option("--alphabet", type=ALPHABETS, default="A0", show_default=True)
@click.option("--out", type=click.Path(), help="Output file")
@click.pass_obj
def classes(obj, alphabet, out):
    """List the classes of an alphabet in index order"""
    df = pd.DataFrame(
        [(c.index, str(c)) for c in enumerate_classes(alphabet)],
        columns=["index", "label"],
    )
    if obj["format"] == "csv":
        _emit_frame(df, out)
    else:
        _emit_json(
            {
                "metadata": _metadata(obj, {"alphabet": alphabet}),
                "classes": df["label"].tolist(),
            },
            out,
        )


@main.command(name="distance")
@click.argument("kind", type=DISTANCES)
@click.argument("first")
@click.argument("second")
@click.option("--alphabet", type=ALPHABETS, default="A0", show_default=True)
@click.option(
    "--reduction-cost",
    type=float,
    default=1.0,
    show_default=True,
    help="D1 surcharge for chords reduced to a triad",
)
@click.option(
    "--per-pair",
    is_flag=True,
    help="Pay the D1 surcharge at most once per pair",
)
def distance_command(
    kind, first, second, alphabet, reduction_cost, per_pair
):
    """Distance between two chords after reduction to an alphabet"""
    config = DistanceConfig(reduction_cost, not per_pair)
    value = distance(
        kind, class_of(first, alphabet), class_of(second, alphabet), config
    )
    click.echo(_number(value))


@main.command()
@click.option("--alphabet", type=ALPHABETS, default="A0", show_default=True)
@click.option("--distance", "kind", type=DISTANCES, default="D1")
@click.option("--K", "K", type=float, default=DEFAULT_K, show_default=True)
@click.option(
    "--renorm-targets",
    is_flag=True,
    help="Scale the --row target to sum to 1",
)
@click.option("--row", help="Only print the soft target of this chord")
@click.option(
    "--show-distance",
    is_flag=True,
    help="Print the distance matrix instead of the similarity matrix",
)
@click.option("--out", type=click.Path(), help="Output file")
@click.pass_obj
def simmatrix(
    obj, alphabet, kind, K, renorm_targets, row, show_distance, out
):
    """Export the similarity (or distance) matrix of an alphabet as CSV"""
    if renorm_targets and row is None:
        raise click.UsageError("--renorm-targets needs --row")
    if show_distance:
        _emit_frame(distance_frame(kind, alphabet), out, index=True)
        return
    matrix = similarity_for(kind, alphabet, K)
    frame = similarity_frame(matrix)
    if row is None:
        _emit_frame(frame, out, index=True)
        return
    weights = frame.loc[str(class_of(row, alphabet))]
    if renorm_targets:
        weights = weights / weights.sum()
    _emit_json(
        {
            "metadata": _metadata(
                obj,
                {
                    "alphabet": alphabet,
                    "distance": kind,
                    "K": K,
                    "renormalize": renorm_targets,
                },
            ),
            "row": str(class_of(row, alphabet)),
            "weights": {k: float(v) for k, v in weights.items()},
        },
        out,
    )


@main.command()
@click.option("--alphabet", type=ALPHABETS, default="A0", show_default=True)
@click.option("--frames-per-class", type=int, default=10, show_default=True)
@click.option("--noise", type=float, default=0.0, show_default=True)
@click.option(
    "--out",
    type=click.Path(),
    required=True,
    help="Dataset CSV (a .json sidecar is written next to it)",
)
@click.pass_obj
def synth(obj, alphabet, frames_per_class, noise, out):
    """Write a synthetic chroma dataset"""
    dataset = synth_dataset(alphabet, frames_per_class, noise, obj["seed"])
    save_dataset(dataset, out)
    console.print(f"[green]{len(dataset)} frames saved to {out}[/green]")


@main.command(name="train")
@click.option(
    "--data",
    type=click.Path(exists=True),
    help="Dataset CSV from `synth` (default: synthesize one)",
)
@click.option("--alphabet", type=ALPHABETS, default="A0", show_default=True)
@click.option("--frames-per-class", type=int, default=10, show_default=True)
@click.option("--noise", type=float, default=0.0, show_default=True)
@click.option("--distance", "kind", type=DISTANCES, default="D0")
@click.option("--K", "K", type=float, default=DEFAULT_K, show_default=True)
@click.option(
    "--model",
    "architecture",
    type=click.Choice(["dense", "cnn"]),
    default="dense",
    show_default=True,
)
@click.option("--hidden", type=int, default=64, show_default=True)
@click.option(
    "--preset",
    type=click.Choice(["desk", "full"]),
    default="desk",
    show_default=True,
    help="desk: lr 1e-2, 200 epochs; full: lr 2e-5, 1000 epochs",
)
@click.option("--epochs", type=int, help="Override max epochs")
@click.option("--learning-rate", type=float, help="Override learning rate")
@click.option("--batch-size", type=int, help="Override batch size")
@click.option("--optimizer", type=click.Choice(["adam", "sgd"]))
@click.option("--input-noise", type=float, help="Gaussian input noise std")
@click.option("--dropout", type=float, help="Dropout rate (cnn)")
@click.option("--renorm-targets", is_flag=True)
@click.option(
    "--split",
    is_flag=True,
    help="Hold out 20%% validation and 20%% test frames",
)
@click.option("--model-out", type=click.Path(), help="Model JSON bundle")
@click.option("--history", type=click.Path(), help="Training history CSV")
@click.option("--out", type=click.Path(), help="Report file")
@click.pass_obj
def train_command(
    obj,
    data,
    alphabet,
    frames_per_class,
    noise,
    kind,
    K,
    architecture,
    hidden,
    preset,
    epochs,
    learning_rate,
    batch_size,
    optimizer,
    input_noise,
    dropout,
    renorm_targets,
    split,
    model_out,
    history,
    out,
):
    """Train a chord classifier with the similarity-weighted loss"""
    if dropout is not None and architecture != "cnn":
        raise click.UsageError("--dropout only applies to --model cnn")
    base = TrainConfig.desk() if preset == "desk" else TrainConfig()
    overrides = {
        "max_epochs": epochs,
        "learning_rate": learning_rate,
        "batch_size": batch_size,
        "optimizer": optimizer,
        "input_noise_std": input_noise,
        "dropout_rate": dropout,
    }
    values = base.to_dict()
    values.update({k: v for k, v in overrides.items() if v is not None})
    values.update(seed=obj["seed"], renormalize_targets=renorm_targets)
    config = TrainConfig(**values)

    if data:
        dataset = load_dataset(data)
    else:
        dataset = synth_dataset(
            alphabet, frames_per_class, noise, obj["seed"]
        )
    alphabet = dataset.alphabet
    train_set, val_set, test_set = (
        split_dataset(dataset, seed=obj["seed"])
        if split
        else (dataset, None, None)
    )

    if architecture == "cnn":
        model = build_cnn_model(
            alphabet,
            frame_shape=(1, int(np.prod(dataset.frame_shape))),
            hidden=hidden,
            input_mean=train_set.features.mean(axis=0),
            input_std=train_set.features.std(axis=0),
            seed=obj["seed"],
        )
    else:
        model = build_dense_model(
            alphabet,
            int(np.prod(dataset.frame_shape)),
            (hidden,),
            seed=obj["seed"],
        )
    similarity = (
        None if kind == "D0" else similarity_for(kind, alphabet, K)
    )
    state = train(model, train_set, similarity, config, val_set)

    if model_out:
        save_model(model, model_out)
        console.print(f"[green]Model saved to {model_out}[/green]")
    if history:
        state.history.to_csv(history, index=False)
        console.print(f"[green]History saved to {history}[/green]")

    report = {
        "metadata": _metadata(
            obj,
            {
                **config.to_dict(),
                "alphabet": alphabet.value,
                "distance": kind,
                "K": K,
                "model": architecture,
                "hidden": hidden,
            },
        ),
        "frames": len(dataset),
        "epochs_run": state.epochs_run,
        "best_epoch": state.best_epoch,
        "best_val_accuracy": state.best_val_accuracy,
        "train_accuracy": accuracy(model, train_set),
    }
    if test_set is not None and len(test_set):
        predictions = model.predict(test_set.features)
        report["test_accuracy"] = {
            vocab.value: class_accuracy(
                test_set.labels, predictions, alphabet, vocab
            )
            for vocab in vocabularies_for(alphabet)
        }
    _emit_json(report, out)


@main.command()
@click.option("--ref", type=click.Path(exists=True), required=True)
@click.option("--est", type=click.Path(exists=True), required=True)
@click.option("--vocab", type=VOCABULARIES, default="all", show_default=True)
@click.option(
    "--skip-bad-lines",
    is_flag=True,
    help="Log and skip unreadable .lab lines instead of failing",
)
@click.option("--csv", "csv_out", type=click.Path(), help="Per-song CSV")
@click.option("--out", type=click.Path(), help="Report file")
@click.pass_obj
def evaluate(obj, ref, est, vocab, skip_bad_lines, csv_out, out):
    """Score estimated .lab files against references, paired by name"""
    vocabularies = list(EvalVocabulary) if vocab == "all" else [vocab]
    evaluator = ChordEvaluator(
        vocabularies, on_error="skip" if skip_bad_lines else "raise"
    )
    results_df = evaluator.evaluate_directories(ref, est)
    if csv_out:
        results_df.to_csv(csv_out, index=False)
        console.print(f"[green]Results saved to {csv_out}[/green]")

    if obj["format"] == "csv":
        _emit_frame(results_df, out)
        return
    _emit_json(
        {
            "metadata": _metadata(
                obj, {"vocabularies": [str(v) for v in vocabularies]}
            ),
            "summary": evaluator.summarize(results_df),
            "songs": results_df.to_dict(orient="records"),
        },
        out,
    )
    if out:
        evaluator.print_summary_table(results_df)


@main.command()
@click.option("--ref", type=click.Path(exists=True), required=True)
@click.option("--est", type=click.Path(exists=True), required=True)
@click.option("--keys", type=click.Path(exists=True), help="Key .lab dir")
@click.option("--alphabet", type=ALPHABETS, default="A2", show_default=True)
@click.option(
    "--count-frames",
    is_flag=True,
    help="Weight errors by frame count instead of duration",
)
@click.option(
    "--hop",
    type=click.FloatRange(0, min_open=True),
    default=DEFAULT_HOP,
    show_default=True,
    help="Frame hop in seconds for --count-frames",
)
@click.option("--min-fraction", type=float, default=0.0, show_default=True)
@click.option("--pairs-csv", type=click.Path(), help="Classified pairs CSV")
@click.option("--out", type=click.Path(), help="Report file")
@click.pass_obj
def analyze(
    obj,
    ref,
    est,
    keys,
    alphabet,
    count_frames,
    hop,
    min_fraction,
    pairs_csv,
    out,
):
    """Classify recognition errors by substitution rule and degree"""
    analyzer = ACEAnalyzer(
        alphabet,
        weighting="count" if count_frames else "duration",
        hop=hop if count_frames else None,
        min_fraction=min_fraction,
    )
    errors = analyzer.collect_errors(ref, est, keys)
    report = analyzer.analyze(errors)
    if pairs_csv:
        classify_pairs(errors).to_csv(pairs_csv, index=False)
        console.print(f"[green]Pairs saved to {pairs_csv}[/green]")

    _emit_json(
        {
            "metadata": _metadata(
                obj,
                {
                    "alphabet": alphabet,
                    "weighting": report.weighting,
                    "hop": hop if count_frames else None,
                    "min_fraction": min_fraction,
                    "notes": {
                        "tonic_subs_2": (
                            "major target X -> minor X+4, or minor "
                            "target X -> major X+8"
                        ),
                        "subs_dominant": (
                            "predicted dominant seventh a fifth above "
                            "the target root"
                        ),
                        "minor_keys": "natural minor degrees",
                    },
                },
            ),
            **report.to_dict(),
        },
        out,
    )
    if out:
        analyzer.print_report(report)


@main.command()
@click.option(
    "--alphabet",
    "alphabets",
    type=ALPHABETS,
    multiple=True,
    help="Alphabets to compare (default: all)",
)
@click.option(
    "--distance",
    "distances",
    type=DISTANCES,
    multiple=True,
    help="Distances to compare (default: all)",
)
@click.option("--frames-per-class", type=int, default=10, show_default=True)
@click.option("--noise", type=float, default=0.1, show_default=True)
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--epochs", type=int, default=200, show_default=True)
@click.option("--K", "K", type=float, default=DEFAULT_K, show_default=True)
@click.option("--out", type=click.Path(), help="Output file")
@click.pass_obj
def grid(
    obj, alphabets, distances, frames_per_class, noise, folds, epochs, K, out
):
    """Compare alphabets and distances over repeated random splits"""
    config = TrainConfig.desk(max_epochs=epochs, seed=obj["seed"])
    results_df = run_grid(
        alphabets or tuple(AlphabetId),
        distances or tuple(DistanceKind),
        frames_per_class,
        noise,
        config,
        folds,
        K,
    )
    if obj["format"] == "csv":
        _emit_frame(results_df, out)
        return
    _emit_json(
        {
            "metadata": _metadata(
                obj,
                {
                    **config.to_dict(),
                    "frames_per_class": frames_per_class,
                    "noise": noise,
                    "folds": folds,
                    "K": K,
                },
            ),
            "summary": summarize_grid(results_df).to_dict(orient="records"),
            "runs": results_df.to_dict(orient="records"),
        },
        out,
    )


if __name__ == "__main__":
    main()
