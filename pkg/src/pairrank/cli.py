"""Command-line entry point wiring the library together.

Subcommands: sample-pairs, simulate, train, eval, rank, synth-pairs, serve.
Every command is deterministic under its flags and --seed (serve excepted);
flags mirror config-file keys and override them.
"""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from . import dataio, engine, simjudge, tournament, training
from .errors import PairRankError
from .training import Checkpoint, TrainConfig

_PAIRS_PRAGMA = "#pairrank-pairs v1"


@click.group()
def main() -> None:
    """Pairwise ordinal ranking: sampling, simulation, training, serving."""


def _fail(err: Exception) -> None:
    raise click.ClickException(str(err))


# ---------------------------------------------------------------------------
# sampling and simulation
# ---------------------------------------------------------------------------

@main.command("sample-pairs")
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def sample_pairs(items_path: str, seed: int, out_path: str) -> None:
    """Emit the opening round of swiss pairs for every query.

    Later rounds depend on judgments; they are produced by the labeling
    service (human path) or by `simulate` (oracle path).
    """
    try:
        items = dataio.read_items(items_path)
        by_query: dict[str, list[str]] = {}
        for it in items:
            by_query.setdefault(it.query_id, []).append(it.item_id)
        lines = [_PAIRS_PRAGMA, "pair_id\tquery_id\tround\tleft_item\tright_item"]
        for q_index, query_id in enumerate(sorted(by_query)):
            state = tournament.TournamentState(
                query_id, sorted(by_query[query_id]),
                seed=int(np.random.default_rng((seed, q_index)).integers(2**31)),
            )
            for left, right in tournament.next_round_pairs(state):
                pid = dataio.make_pair_id(query_id, left, right)
                lines.append(f"{pid}\t{query_id}\t1\t{left}\t{right}")
        Path(out_path).write_text("\n".join(lines) + "\n")
    except PairRankError as err:
        _fail(err)
    click.echo(f"wrote {len(lines) - 2} pairs to {out_path}")


@main.command()
@click.option("--world", "world_path", required=True, type=click.Path(exists=True))
@click.option("--rounds", default=2, show_default=True)
@click.option("--judges-per-pair", default=5, show_default=True)
@click.option("--seed", default=None, type=int, help="overrides the world seed")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--items-out", default=None, type=click.Path(),
              help="also write the world's feature vectors")
@click.option("--feature-dim", default=8, show_default=True)
@click.option("--feature-noise", default=0.01, show_default=True)
def simulate(world_path, rounds, judges_per_pair, seed, out_path,
             items_out, feature_dim, feature_noise) -> None:
    """Run a synthetic-judge campaign over a planted world file."""
    try:
        world = simjudge.read_world(world_path)
        result = simjudge.generate_dataset(world, rounds, judges_per_pair, seed=seed)
        dataio.write_judgments(out_path, result.records)
        if items_out:
            dataio.write_items(items_out, world.make_features(feature_dim, feature_noise))
    except PairRankError as err:
        _fail(err)
    click.echo(f"wrote {len(result.records)} judgments to {out_path}")


@main.command("synth-pairs")
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True))
@click.option("--sample", default=None, type=int,
              help="number of left items to sample (default: all)")
@click.option("--partners", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def synth_pairs(scores_path, sample, partners, seed, out_path) -> None:
    """Synthesize binary pairs from an absolute-score table."""
    try:
        scores = dataio.read_scores(scores_path)
        records = dataio.synthesize_pairs(scores, sample, partners, seed=seed)
        dataio.write_judgments(out_path, records)
    except PairRankError as err:
        _fail(err)
    click.echo(f"wrote {len(records)} synthesized pairs to {out_path}")


# ---------------------------------------------------------------------------
# training and evaluation
# ---------------------------------------------------------------------------

def _load_dataset(items_path, judgments_path, filter_majority=True):
    items = dataio.read_items(items_path)
    records = dataio.read_judgments(judgments_path)
    return dataio.build_pair_dataset(items, records, filter_majority=filter_majority)


@main.command()
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--judgments", "judgments_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--variant", default=None, type=click.Choice(engine.VARIANTS))
@click.option("--seed", default=None, type=int)
@click.option("--epochs", default=None, type=int)
@click.option("--val-judgments", default=None, type=click.Path(exists=True),
              help="validation judgments for early stopping")
@click.option("--out", "out_path", required=True, type=click.Path())
def train(items_path, judgments_path, config_path, variant, seed, epochs,
          val_judgments, out_path) -> None:
    """Fit model parameters on a judgment dataset and write a checkpoint."""
    overrides = {"variant": variant, "seed": seed, "epochs": epochs}
    try:
        if config_path:
            config = TrainConfig.from_file(config_path, overrides)
        else:
            config = TrainConfig.from_dict(
                {k: v for k, v in overrides.items() if v is not None})
        dataset = _load_dataset(items_path, judgments_path)
        validation = None
        if val_judgments:
            validation = _load_dataset(items_path, val_judgments)
        checkpoint = training.train(dataset, config, validation)
        checkpoint.save(out_path)
    except PairRankError as err:
        _fail(err)
    click.echo(
        f"trained {config.variant} for {checkpoint.meta['epochs_run']} epochs, "
        f"loss {checkpoint.meta['loss_history'][0]:.4f} -> "
        f"{checkpoint.meta['final_loss']:.4f}, saved {out_path}")


@main.command("eval")
@click.option("--checkpoint", "checkpoint_path", required=True, type=click.Path(exists=True))
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--judgments", "judgments_path", default=None, type=click.Path(exists=True))
@click.option("--metric", required=True,
              type=click.Choice(["five-way", "binary", "binary-vote", "srcc"]))
@click.option("--scores", "scores_path", default=None, type=click.Path(exists=True),
              help="absolute truth scores (srcc)")
@click.option("--out", "out_path", default=None, type=click.Path())
def eval_cmd(checkpoint_path, items_path, judgments_path, metric,
             scores_path, out_path) -> None:
    """Evaluate a checkpoint; report goes to stdout and optionally a file."""
    try:
        checkpoint = Checkpoint.load(checkpoint_path)
        items = dataio.read_items(items_path)
        _check_dims(checkpoint, items)
        config = checkpoint.config
        truth_scores = item_mus = None
        dataset = None
        if metric == "srcc":
            if not scores_path:
                raise click.ClickException("--metric srcc needs --scores")
            truth_scores = {s.item_id: s.score for s in dataio.read_scores(scores_path)}
            item_mus = {item_id: mu for item_id, mu, _ in
                        engine.score_items(checkpoint.params, items, config.sigma_floor)}
        else:
            if not judgments_path:
                raise click.ClickException(f"--metric {metric} needs --judgments")
            dataset = _load_dataset(items_path, judgments_path)
        report = engine.evaluate_metric(
            checkpoint.params, dataset, metric, config.variant,
            config.sigma_floor, truth_scores, item_mus)
        click.echo(report.to_text(), nl=False)
        if out_path:
            report.write(out_path)
    except PairRankError as err:
        _fail(err)


def _check_dims(checkpoint: Checkpoint, items: list[dataio.ItemRecord]) -> None:
    if items and items[0].features.size != checkpoint.feature_dim:
        raise click.ClickException(
            f"items have dimension {items[0].features.size} but the checkpoint "
            f"expects {checkpoint.feature_dim}")


@main.command()
@click.option("--checkpoint", "checkpoint_path", required=True, type=click.Path(exists=True))
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", default=None, type=click.Path())
def rank(checkpoint_path, items_path, out_path) -> None:
    """Rank items by learned score, descending; ties break by item id."""
    try:
        checkpoint = Checkpoint.load(checkpoint_path)
        items = dataio.read_items(items_path)
        _check_dims(checkpoint, items)
        scored = engine.score_items(
            checkpoint.params, items, checkpoint.config.sigma_floor)
    except PairRankError as err:
        _fail(err)
    lines = [f"{i + 1}\t{item_id}\t{mu!r}\t{sigma!r}"
             for i, (item_id, mu, sigma) in enumerate(scored)]
    text = "\n".join(lines) + "\n"
    click.echo(text, nl=False)
    if out_path:
        Path(out_path).write_text(text)


# ---------------------------------------------------------------------------
# serving
# ---------------------------------------------------------------------------

@main.command()
@click.option("--manifest", "manifest_path", default=None, type=click.Path(exists=True),
              help="campaign manifest (JSON) loaded at startup")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8321, show_default=True)
@click.option("--log", "log_path", default=None, type=click.Path(),
              help="append-only judgment log, replayed at startup")
@click.option("--images", "images_dir", default=None, type=click.Path(exists=True))
@click.option("--ui", "ui_dir", default=None, type=click.Path(exists=True),
              help="directory with the compiled browser frontend")
def serve(manifest_path, host, port, log_path, images_dir, ui_dir) -> None:
    """Run the labeling service until interrupted."""
    import uvicorn

    from .service import ServiceConfig, create_app
    from .service.schemas import CampaignManifest

    manifest = None
    if manifest_path:
        try:
            manifest = CampaignManifest(**json.loads(Path(manifest_path).read_text()))
        except json.JSONDecodeError as err:
            raise click.ClickException(
                f"{manifest_path}:{err.lineno}: invalid manifest: {err.msg}")
        except Exception as err:
            raise click.ClickException(f"{manifest_path}: invalid manifest: {err}")
    config = ServiceConfig(
        log_path=Path(log_path) if log_path else None,
        images_dir=Path(images_dir) if images_dir else None,
        ui_dir=Path(ui_dir) if ui_dir else None,
    )
    try:
        app = create_app(config)
        if manifest is not None:
            registry = app.state.registry
            if manifest.campaign_id not in registry.campaigns:
                created = registry.create_campaign(manifest)
                click.echo(f"campaign {created.campaign_id} ready "
                           f"({len(created.current)} pairs in round 1)")
    except PairRankError as err:
        _fail(err)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
