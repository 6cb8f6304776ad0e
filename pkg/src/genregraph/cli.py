"""Command-line pipeline: synth, extract, train, evaluate, recommend.

Settings resolve in three layers: built-in defaults, then a JSON config
file (--config), then explicit flags. Every command is deterministic
given (inputs, config, seed). Exit codes: 0 success, 1 internal error,
2 input validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .audio import (
    WINDOW_SEED_STREAM,
    ClipTooShortError,
    WavDecodeError,
    decode_wav,
    random_window,
    resample,
)
from .dataset import DatasetManifest, ManifestError
from .graph import GENRE_NAMES, AttachmentMode, GenreLabel, build_graph
from .mfcc import MfccConfig, mfcc
from .nn import Variant
from .recommend import (
    ExperimentConfig,
    recommend,
    render_text_report,
    reports_to_json,
    run_experiment,
)
from .stores import (
    FeatureRecord,
    StoreFormatError,
    read_feature_store,
    read_model,
    write_feature_store,
    write_model,
)
from .synth import SyntheticSpec, generate_dataset
from .train import (
    TrainConfig,
    TrainingDivergedError,
    compute_embeddings,
    derive_seed,
    infer_embedding,
    split_train_test,
    train_pipeline,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2


_STREAM_QUERY_AUDIO = 6


class UsageError(ValueError):
    """Bad user input: flags, config, manifest, store, or audio files."""


_CONFIG_KEYS = {
    "seed",
    "songs_per_genre",
    "clip_seconds",
    "sample_rate",
    "genres",
    "test_fraction",
    "window_seconds",
    "workers",
    "epochs",
    "embed_lr",
    "mlp_lr",
    "sage_sample_k",
    "self_loops",
    "attachment",
    "queries_per_genre",
    "knn_k",
    "recommend_k",
    "k",
}


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    unknown = sorted(set(doc) - _CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys {unknown}; known keys: {sorted(_CONFIG_KEYS)}")
    return doc


def _setting(args: argparse.Namespace, config: dict, key: str, default):
    """Flag value if given, else config file value, else default."""
    value = getattr(args, key, None)
    if value is None:
        value = config.get(key, default)
    return value


def _genre_list(value) -> tuple[str, ...]:
    if isinstance(value, str):
        value = [g.strip() for g in value.split(",") if g.strip()]
    return tuple(value)


def _train_config(args: argparse.Namespace, config: dict, variant: Variant) -> TrainConfig:
    return TrainConfig(
        embed_lr=float(_setting(args, config, "embed_lr", 0.01)),
        mlp_lr=float(_setting(args, config, "mlp_lr", 0.001)),
        epochs=int(_setting(args, config, "epochs", 50)),
        seed=int(_setting(args, config, "seed", 0)),
        variant=variant,
        sage_sample_k=int(_setting(args, config, "sage_sample_k", 10)),
        self_loops=bool(_setting(args, config, "self_loops", False)),
    )


def _read_store_arrays(path: str):
    records = read_feature_store(path)
    ids = [rec.song_id for rec in records]
    labels = np.array([rec.genre_index for rec in records], dtype=np.int64)
    features = np.array([rec.values for rec in records], dtype=np.float64)
    return ids, labels, features


def _check_model_dim(model, feature_dim: int, path: str) -> None:
    if model.variant is Variant.PLAIN:
        expected = model.mlp[0].in_dim
        actual = feature_dim
    elif model.variant is Variant.GCN:
        expected = model.graph_layer.in_dim
        actual = feature_dim
    else:
        expected = model.graph_layer.in_dim
        actual = 2 * feature_dim
    if expected != actual:
        raise UsageError(
            f"{path}: {model.variant.value} weights expect input dim {expected}, "
            f"store provides {actual}"
        )


def cmd_synth(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    genres = _genre_list(_setting(args, config, "genres", GENRE_NAMES))
    try:
        spec = SyntheticSpec(
            songs_per_genre=int(_setting(args, config, "songs_per_genre", 50)),
            clip_seconds=float(_setting(args, config, "clip_seconds", 6.0)),
            sample_rate=int(_setting(args, config, "sample_rate", 22050)),
            seed=int(_setting(args, config, "seed", 0)),
            test_fraction=float(_setting(args, config, "test_fraction", 0.1)),
            genres=genres,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out_dir = Path(args.out)
    manifest = generate_dataset(spec, out_dir)
    print(f"wrote {len(manifest)} WAV files across {len(spec.genres)} genres to {out_dir}")
    print(f"manifest: {out_dir / 'manifest.csv'}")
    return EXIT_OK


def cmd_extract(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    manifest_path = Path(args.manifest)
    manifest = DatasetManifest.load(manifest_path)
    base = manifest_path.parent
    seed = int(_setting(args, config, "seed", 0))
    cfg = MfccConfig(
        window_seconds=float(_setting(args, config, "window_seconds", 5.0)),
        target_sample_rate=int(_setting(args, config, "sample_rate", 22050)),
    )
    workers = int(_setting(args, config, "workers", 0)) or min(8, len(manifest))

    def extract_one(item: tuple[int, object]):
        index, entry = item
        path = manifest.resolve(entry, base)
        try:
            clip = decode_wav(path.read_bytes())
            clip = resample(clip, cfg.target_sample_rate)
            window = random_window(
                clip, cfg.window_seconds, seed=derive_seed(seed, WINDOW_SEED_STREAM, index)
            )
            vec = mfcc(window, cfg, song_id=entry.path)
        except (WavDecodeError, ClipTooShortError, OSError, ValueError) as exc:
            return index, None, f"{path}: {exc}"
        record = FeatureRecord(
            song_id=entry.path,
            genre_index=GenreLabel.from_name(entry.genre).index,
            values=vec.values,
        )
        return index, record, None

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(extract_one, enumerate(manifest.entries)))

    failures = [msg for _, rec, msg in results if rec is None]
    for msg in failures:
        print(f"error: {msg}", file=sys.stderr)
    if failures:
        raise UsageError(f"{len(failures)} of {len(manifest)} files failed extraction")

    records = [rec for _, rec, _ in results]
    out_dir = Path(args.out) if args.out else base
    out_dir.mkdir(parents=True, exist_ok=True)
    store_path = out_dir / "features.grmf"
    write_feature_store(store_path, records, dimension=cfg.n_mfcc)
    print(f"extracted {len(records)} x {cfg.n_mfcc} features -> {store_path}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    variant = Variant(args.variant)
    try:
        cfg = _train_config(args, config, variant)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ids, labels, features = _read_store_arrays(args.store)
    test_fraction = float(_setting(args, config, "test_fraction", 0.1))
    train_idx, _ = split_train_test(labels, test_fraction=test_fraction, seed=cfg.seed)

    train_ids = [ids[i] for i in train_idx]
    train_labels = [GenreLabel.from_index(int(g)) for g in labels[train_idx]]
    graph = None
    if variant is not Variant.PLAIN:
        graph = build_graph(train_labels, node_ids=train_ids)
    model, curves = train_pipeline(graph, features[train_idx], labels[train_idx], cfg)

    out_dir = Path(args.out) if args.out else Path(args.store).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    weights_path = out_dir / f"{variant.value}.grmw"
    write_model(weights_path, model)
    print(f"trained {variant.value} on {len(train_idx)} songs -> {weights_path}")
    for stage, curve in curves.items():
        csv_path = out_dir / f"{variant.value}_{stage}_loss.csv"
        curve.to_csv(csv_path)
        print(
            f"{stage}: loss {curve.train_losses[0]:.6f} -> {curve.train_losses[-1]:.6f} "
            f"over {curve.epochs} epochs ({csv_path})"
        )
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    ids, labels, features = _read_store_arrays(args.store)
    dim = features.shape[1]

    pretrained = {}
    for weights_path in args.weights:
        model = read_model(weights_path)
        _check_model_dim(model, dim, weights_path)
        if model.variant.value in pretrained:
            raise UsageError(f"two weight files for variant {model.variant.value!r}")
        pretrained[model.variant.value] = model

    attachment = AttachmentMode(_setting(args, config, "attachment", "oracle"))
    cfg = ExperimentConfig(
        train=_train_config(args, config, Variant.GCN),
        queries_per_genre=int(_setting(args, config, "queries_per_genre", 10)),
        test_fraction=float(_setting(args, config, "test_fraction", 0.1)),
        attachment=attachment,
        knn_k=int(_setting(args, config, "knn_k", 10)),
        recommend_k=int(_setting(args, config, "recommend_k", 10)),
    )
    variants = [v for v in (Variant.PLAIN, Variant.SAGE, Variant.GCN) if v.value in pretrained]
    reports = run_experiment(ids, labels, features, variants, cfg, pretrained=pretrained)

    text = render_text_report(reports)
    out_dir = Path(args.out) if args.out else Path(args.store).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(reports_to_json(reports))
    (out_dir / "report.txt").write_text(text)
    print(text, end="")
    print(f"report -> {out_dir / 'report.json'}")
    return EXIT_OK


def cmd_recommend(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    ids, labels, features = _read_store_arrays(args.store)
    model = read_model(args.weights)
    _check_model_dim(model, features.shape[1], args.weights)
    try:
        cfg = _train_config(args, config, model.variant)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    genre_labels = [GenreLabel.from_index(int(g)) for g in labels]
    graph = build_graph(genre_labels, node_ids=ids)
    catalog_vectors = compute_embeddings(model, graph, features, cfg)
    catalog = {sid: catalog_vectors[i] for i, sid in enumerate(ids)}
    labels_by_id = dict(zip(ids, genre_labels))

    if (args.song_id is None) == (args.audio is None):
        raise UsageError("give exactly one of --song-id or --audio")
    if args.song_id is not None:
        if args.song_id not in catalog:
            raise UsageError(f"unknown song id {args.song_id!r}")
        query_vec = catalog[args.song_id]
        query_id = args.song_id
    else:
        mcfg = MfccConfig(
            window_seconds=float(_setting(args, config, "window_seconds", 5.0)),
            target_sample_rate=int(_setting(args, config, "sample_rate", 22050)),
        )
        clip = decode_wav(Path(args.audio).read_bytes())
        clip = resample(clip, mcfg.target_sample_rate)
        window = random_window(
            clip, mcfg.window_seconds, seed=derive_seed(cfg.seed, WINDOW_SEED_STREAM)
        )
        vec = mfcc(window, mcfg).values
        attachment = AttachmentMode(_setting(args, config, "attachment", "feature_knn"))
        true_label = None
        if attachment is AttachmentMode.ORACLE:
            if args.genre is None:
                raise UsageError("oracle attachment for an audio file needs --genre")
            true_label = GenreLabel.from_name(args.genre)
        query_vec = infer_embedding(
            model,
            graph,
            features,
            vec,
            attachment,
            true_label=true_label,
            knn_k=int(_setting(args, config, "knn_k", 10)),
            sample_k=cfg.sage_sample_k,
            self_loops=cfg.self_loops,
            seed=derive_seed(cfg.seed, _STREAM_QUERY_AUDIO),
        )
        query_id = ""

    result = recommend(
        query_vec, catalog, k=int(_setting(args, config, "k", 10)), query_id=query_id
    )
    print(f"{'rank':>4}  {'song_id':<40} {'genre':<14} distance")
    for rank, (song_id, distance) in enumerate(result.items, start=1):
        print(f"{rank:>4}  {song_id:<40} {labels_by_id[song_id].name:<14} {distance:.6f}")
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser, out_required: bool = False) -> None:
    parser.add_argument("--config", metavar="PATH", help="JSON config file")
    parser.add_argument("--seed", type=int, help="run seed (default 0)")
    parser.add_argument("--out", metavar="DIR", required=out_required, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genregraph",
        description="Graph-refined MFCC music genre recommendation pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic WAV dataset + manifest")
    _add_common(p, out_required=True)
    p.add_argument("--songs-per-genre", type=int)
    p.add_argument("--clip-seconds", type=float)
    p.add_argument("--sample-rate", type=int)
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--genres", help="comma-separated subset of the 8 genre names")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="extract one MFCC vector per manifest song")
    _add_common(p)
    p.add_argument("--manifest", required=True, metavar="CSV")
    p.add_argument("--window-seconds", type=float)
    p.add_argument("--sample-rate", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train one variant; write weights + loss CSVs")
    _add_common(p)
    p.add_argument("--store", required=True, metavar="GRMF")
    p.add_argument("--variant", required=True, choices=[v.value for v in Variant])
    p.add_argument("--epochs", type=int)
    p.add_argument("--embed-lr", type=float)
    p.add_argument("--mlp-lr", type=float)
    p.add_argument("--sage-sample-k", type=int)
    p.add_argument("--self-loops", action=argparse.BooleanOptionalAction)
    p.add_argument("--test-fraction", type=float)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="Γ report comparing trained variants")
    _add_common(p)
    p.add_argument("--store", required=True, metavar="GRMF")
    p.add_argument("--weights", required=True, nargs="+", metavar="GRMW")
    p.add_argument("--attachment", choices=[m.value for m in AttachmentMode])
    p.add_argument("--queries-per-genre", type=int)
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--knn-k", type=int)
    p.add_argument("--recommend-k", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--embed-lr", type=float)
    p.add_argument("--mlp-lr", type=float)
    p.add_argument("--sage-sample-k", type=int)
    p.add_argument("--self-loops", action=argparse.BooleanOptionalAction)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("recommend", help="top-10 most similar songs for a query")
    _add_common(p)
    p.add_argument("--store", required=True, metavar="GRMF")
    p.add_argument("--weights", required=True, metavar="GRMW")
    p.add_argument("--song-id", help="query by id of a song in the store")
    p.add_argument("--audio", metavar="WAV", help="query by audio file")
    p.add_argument("--genre", help="true genre for oracle attachment of --audio")
    p.add_argument("--attachment", choices=[m.value for m in AttachmentMode])
    p.add_argument("--k", type=int)
    p.add_argument("--window-seconds", type=float)
    p.add_argument("--sample-rate", type=int)
    p.add_argument("--sage-sample-k", type=int)
    p.add_argument("--self-loops", action=argparse.BooleanOptionalAction)
    p.set_defaults(func=cmd_recommend)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (
        UsageError,
        ManifestError,
        StoreFormatError,
        WavDecodeError,
        ClipTooShortError,
        FileNotFoundError,
        NotADirectoryError,
        PermissionError,
        ValueError,
        KeyError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
