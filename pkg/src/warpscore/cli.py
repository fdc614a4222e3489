"""Command-line pipeline: generate, validate, cluster, classify, envelope, stream.

Every command writes its artifacts into --output-dir together with a
run_manifest.json recording the command, parameters, input hashes, tool
version, seed, timings and the declared artifact list. All data artifacts
(JSON/CSV/SVG) are byte-deterministic for a fixed seed regardless of
--jobs; the run manifest itself carries wall-clock timings and is the one
file that differs between reruns.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, svg
from .classify import cross_validate
from .cluster import cvi_suite, CVI_ORIENTATION, distance_matrix, hierarchical_cluster, partitional_cluster, composition_report
from .datagen import GeneratorConfig, synth_dataset
from .distance import ConstraintBand, dtw
from .dynamic import assign_cluster, batch_score, replay
from .envelope import default_window, summative_tunnel
from .errors import WarpscoreError
from .io import (
    dendrogram_to_json,
    dump_json,
    load_dataset,
    load_envelope,
    load_prototype,
    load_recording,
    save_dataset,
    save_distance_matrix,
    save_envelope,
    save_matrix_csv,
    save_prototype,
    save_recording,
    write_events_jsonl,
)
from .prototype import PROTOTYPE_METHODS, make_prototype


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parse_band(text: str):
    if text == "none":
        return None
    if text == "itakura":
        return ConstraintBand.itakura()
    if text.startswith("itakura:"):
        return ConstraintBand.itakura(float(text.split(":", 1)[1]))
    if text.startswith("sc:"):
        return ConstraintBand.sakoe_chiba(int(text.split(":", 1)[1]))
    raise argparse.ArgumentTypeError(f"expected none, itakura[:S] or sc:R, got {text!r}")


def _parse_participants(text: str) -> dict:
    out = {}
    for part in text.split(","):
        skill, _, count = part.partition(":")
        out[skill.strip()] = int(count)
    return out


class _Run:
    """Collects declared artifacts and writes the run manifest at the end."""

    def __init__(self, args, inputs):
        self.t0 = time.perf_counter()
        self.outdir = Path(args.output_dir)
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.command = args.command
        skip = {"func", "command", "output_dir"}
        self.parameters = {
            k: (str(v) if isinstance(v, Path) else v.describe() if isinstance(v, ConstraintBand) else v)
            for k, v in vars(args).items()
            if k not in skip
        }
        self.inputs = {}
        for p in inputs:
            p = Path(p)
            if p.is_file():
                self.inputs[str(p)] = hashlib.sha256(p.read_bytes()).hexdigest()
        self.artifacts: list[str] = []

    def path(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.outdir / name

    def declare(self, name: str) -> None:
        self.artifacts.append(name)

    def finish(self) -> None:
        dump_json(
            self.outdir / "run_manifest.json",
            {
                "command": self.command,
                "parameters": self.parameters,
                "inputs": self.inputs,
                "toolVersion": __version__,
                "seed": self.parameters.get("seed"),
                "timings": {"total_s": round(time.perf_counter() - self.t0, 6)},
                "artifacts": sorted(self.artifacts),
            },
        )


def _load_model(model_dir):
    model_dir = Path(model_dir)
    doc = json.loads((model_dir / "model.json").read_text())
    prototypes = {}
    envelopes = {}
    for cid in doc["clusters"]:
        prototypes[int(cid)] = load_prototype(model_dir / f"prototype_c{cid}.csv")
        envelopes[int(cid)] = load_envelope(model_dir / f"envelope_c{cid}.csv")
    return doc, prototypes, envelopes


def _cluster_dataset(dataset, args, matrix=None):
    if matrix is None:
        matrix = distance_matrix(dataset, band=args.band, metric=args.metric, jobs=args.jobs)
    if getattr(args, "partitional", False):
        clustering = partitional_cluster(matrix, k=args.clusters, seed=args.seed)
    else:
        clustering = hierarchical_cluster(matrix, linkage=args.linkage, target_clusters=args.clusters)
    return matrix, clustering


# ---------------------------------------------------------------- commands


def cmd_synth(args):
    run = _Run(args, inputs=[])
    if args.participants:
        config = GeneratorConfig(
            seed=args.seed,
            participants_per_skill=_parse_participants(args.participants),
            series_per_participant=args.series_per_participant,
            base_length=args.length,
            separation=args.separation,
        )
    else:
        config = GeneratorConfig.epidural40(seed=args.seed, base_length=args.length, separation=args.separation)
    dataset = synth_dataset(config)
    manifest = save_dataset(run.outdir, dataset)
    run.declare(manifest.name)
    for entry in json.loads(manifest.read_text())["items"]:
        run.declare(entry["file"])
    run.finish()
    print(f"wrote {len(dataset)} series to {run.outdir}")


def cmd_ingest(args):
    dataset = load_dataset(args.input)
    run = _Run(args, inputs=[args.input])
    lengths = [it.series.n for it in dataset.items]
    skills = {}
    for it in dataset.items:
        skills[it.skill] = skills.get(it.skill, 0) + 1
    dump_json(
        run.path("validation.json"),
        {
            "name": dataset.name,
            "items": len(dataset),
            "variables": dataset.n_vars,
            "lengths": {"min": min(lengths), "max": max(lengths)},
            "skills": skills,
            "participants": len(set(dataset.participants())),
            "valid": True,
        },
    )
    run.finish()
    print(f"validated {len(dataset)} series from {args.input}")


def cmd_distmat(args):
    dataset = load_dataset(args.input)
    run = _Run(args, inputs=[args.input])
    matrix = distance_matrix(dataset, band=args.band, metric=args.metric, jobs=args.jobs)
    save_distance_matrix(run.path("distance_matrix.csv"), matrix, kind="normalized")
    save_distance_matrix(run.path("distance_matrix_raw.csv"), matrix, kind="raw")
    run.finish()
    print(f"wrote {matrix.size}x{matrix.size} matrices to {run.outdir}")


def cmd_cluster(args):
    dataset = load_dataset(args.input)
    run = _Run(args, inputs=[args.input])
    matrix, clustering = _cluster_dataset(dataset, args)
    sizes = {int(c): int((clustering.assignment == c).sum()) for c in np.unique(clustering.assignment)}
    cvis = cvi_suite(matrix, clustering) if clustering.n_clusters >= 2 else None
    doc = {
        "method": clustering.method,
        "clusters": clustering.n_clusters,
        "assignment": clustering.assignment.tolist(),
        "sizes": sizes,
        "cvi": cvis,
        "cviOrientation": CVI_ORIENTATION if cvis else None,
        "band": args.band.describe() if args.band else "none",
        "metric": args.metric,
    }
    dump_json(run.path("clustering.json"), doc)
    comp = composition_report(clustering, dataset)
    dump_json(run.path("composition.json"), comp)
    svg.stacked_bars(
        run.path("composition.svg"),
        {f"cluster {c}": comp[c]["by_participant"] for c in comp},
        title="cluster composition by participant",
    )
    if clustering.dendrogram is not None:
        dump_json(run.path("dendrogram.json"), dendrogram_to_json(clustering.dendrogram))
        svg.dendrogram_svg(
            run.path("dendrogram.svg"), clustering.dendrogram, len(dataset), title=clustering.method
        )
    run.finish()
    print(f"clustered {len(dataset)} series into {clustering.n_clusters} clusters")


def cmd_prototype(args):
    dataset = load_dataset(args.input)
    run = _Run(args, inputs=[args.input])
    series = dataset.series()
    if args.by == "skill":
        groups = {}
        for it in dataset.items:
            groups.setdefault(it.skill, []).append(it.series)
    else:
        _, clustering = _cluster_dataset(dataset, args)
        groups = {
            f"c{int(c)}": [series[i] for i in clustering.members(int(c))]
            for c in np.unique(clustering.assignment)
        }
    summary = {}
    curves = []
    for k, label in enumerate(sorted(groups)):
        proto = make_prototype(args.proto, groups[label], band=args.band, metric=args.metric, gamma=args.gamma)
        fname = f"prototype_{label}.csv"
        save_prototype(run.path(fname), proto)
        run.declare(f"prototype_{label}.json")
        summary[label] = {"file": fname, "method": proto.method, "sourceCount": proto.source_count, "length": proto.series.n}
        channel = min(3, proto.series.n_vars - 1)  # pressure when 5 channels
        curves.append((proto.series.values[:, channel], svg.PALETTE[k % len(svg.PALETTE)], 1.6, None, str(label)))
    dump_json(run.path("prototypes.json"), summary)
    svg.line_chart(run.path("prototypes.svg"), curves, title=f"{args.proto} prototypes")
    run.finish()
    print(f"wrote {len(groups)} prototypes ({args.proto})")


def cmd_classify(args, label_field: str = "skill"):
    dataset = load_dataset(args.input)
    run = _Run(args, inputs=[args.input])
    report = cross_validate(
        dataset,
        method=args.method,
        scheme=args.scheme,
        k=args.k,
        proto_method=args.proto,
        folds=args.folds,
        seed=args.seed,
        label_field=label_field,
        band=args.band,
        metric=args.metric,
        gamma=args.gamma,
        jobs=args.jobs,
    )
    dump_json(run.path("report.json"), report.to_dict())
    run.finish()
    print(f"{report.method} {report.scheme} accuracy: {report.accuracy:.4f}")


def cmd_identify(args):
    args.method = "knn"
    cmd_classify(args, label_field="participant")


def cmd_envelope(args):
    dataset = load_dataset(args.input)
    run = _Run(args, inputs=[args.input])
    series = dataset.series()
    matrix, clustering = _cluster_dataset(dataset, args)
    raw = matrix.full("raw")
    cluster_ids = sorted(int(c) for c in np.unique(clustering.assignment))
    model = {
        "clusters": cluster_ids,
        "proto": args.proto,
        "windowPct": args.window_pct,
        "band": args.band.describe() if args.band else "none",
        "metric": args.metric,
    }
    for cid in cluster_ids:
        idx = [int(i) for i in clustering.members(cid)]
        members = [series[i] for i in idx]
        proto = make_prototype(
            args.proto, members, band=args.band, metric=args.metric, gamma=args.gamma,
            distances=raw[np.ix_(idx, idx)],
        )
        window = default_window(proto.series.n, args.window_pct)
        tunnel = summative_tunnel(proto.series, members, window=window, band=args.band, metric=args.metric)
        save_prototype(run.path(f"prototype_c{cid}.csv"), proto)
        run.declare(f"prototype_c{cid}.json")
        save_envelope(run.path(f"envelope_c{cid}.csv"), tunnel.envelope)
        run.declare(f"envelope_c{cid}.json")
        dump_json(
            run.path(f"contributors_c{cid}.json"),
            {"clusterMembers": idx, "chosenMembers": [idx[i] for i in tunnel.member_indices]},
        )
        for k, contrib in enumerate(tunnel.contributors):
            save_recording(run.path(f"contributor_c{cid}_{k}.csv"), contrib)
        channel = min(3, dataset.n_vars - 1)
        curves = [
            (tunnel.envelope.upper[:, channel], "#1f77b4", 2.0, None, "upper"),
            (tunnel.envelope.lower[:, channel], "#17becf", 2.0, None, "lower"),
            (proto.series.values[:, channel], "#000000", 1.6, None, "prototype"),
        ]
        for contrib in tunnel.contributors[1:]:
            curves.append((contrib.values[:, channel], "#999999", 0.8, "4,3", None))
        svg.line_chart(run.path(f"envelope_c{cid}.svg"), curves, title=f"cluster {cid} tunnel")
    dump_json(run.path("model.json"), model)
    run.finish()
    print(f"wrote tunnels for {len(cluster_ids)} clusters")


def cmd_score(args):
    if args.model:
        if not args.recording:
            raise _UsageError("score with --model requires --recording")
        recording = load_recording(args.recording)
        run = _Run(args, inputs=[args.recording, Path(args.model) / "model.json"])
        _, prototypes, envelopes = _load_model(args.model)
        cid = args.cluster if args.cluster is not None else assign_cluster(
            recording, prototypes, args.band, args.metric, 500
        )
        score, trace = batch_score(recording, envelopes[cid])
        dump_json(
            run.path("score.json"),
            {
                "recording": str(args.recording),
                "cluster": int(cid),
                "score": score,
                "proportionOutside": float((trace > 0).mean()),
                "band": args.band.describe() if args.band else "none",
                "metric": args.metric,
            },
        )
        run.finish()
        print(f"cluster {cid} score: {score:.6g}")
        return

    dataset = load_dataset(args.input)
    run = _Run(args, inputs=[args.input])
    series = dataset.series()
    matrix, clustering = _cluster_dataset(dataset, args)
    cid = args.cluster if args.cluster is not None else 1
    idx = [int(i) for i in clustering.members(cid)]
    if not idx:
        raise WarpscoreError(f"cluster {cid} is empty")
    raw = matrix.full("raw")
    proto = make_prototype(
        args.proto, [series[i] for i in idx], band=args.band, metric=args.metric, gamma=args.gamma,
        distances=raw[np.ix_(idx, idx)],
    )
    ranked = sorted(
        ((float(dtw(proto.series, series[i], band=args.band, metric=args.metric).distance), i) for i in idx),
    )
    best_i, worst_i = ranked[0][1], ranked[-1][1]
    results = {}
    for tag, i in (("best", best_i), ("worst", worst_i)):
        res = dtw(proto.series, series[i], band=args.band, metric=args.metric)
        save_matrix_csv(run.path(f"ccm_{tag}.csv"), res.ccm)
        svg.heatmap(run.path(f"ccm_{tag}.svg"), res.ccm, title=f"cumulative cost: {tag} (item {i})")
        results[tag] = {"index": i, "distance": res.distance, "cumulativeCost": res.distance}
    dump_json(
        run.path("score.json"),
        {
            "cluster": int(cid),
            "prototype": args.proto,
            "ranking": [{"index": i, "distance": d} for d, i in ranked],
            "best": results["best"],
            "worst": results["worst"],
            "costRatio": results["worst"]["distance"] / results["best"]["distance"]
            if results["best"]["distance"] > 0
            else float("inf"),
            "band": args.band.describe() if args.band else "none",
            "metric": args.metric,
        },
    )
    run.finish()
    print(f"cluster {cid}: best item {best_i}, worst item {worst_i}")


def cmd_stream(args):
    recording = load_recording(args.input)
    run = _Run(args, inputs=[args.input, Path(args.model) / "model.json"])
    _, prototypes, envelopes = _load_model(args.model)
    state = replay(
        recording,
        prototypes,
        envelopes,
        cadence=args.cadence,
        alarm_threshold=args.alarm_threshold,
        cluster=args.cluster,
        band=args.band,
        metric=args.metric,
    )
    write_events_jsonl(run.path("stream_events.jsonl"), state.events)
    dump_json(
        run.path("stream_summary.json"),
        {
            "recording": str(args.input),
            "cluster": int(state.cluster),
            "finalScore": state.score,
            "proportionOutside": state.proportion_outside,
            "alarms": [
                {"index": a.index, "onset": a.onset, "detectedAt": a.detected_at, "magnitude": a.magnitude}
                for a in state.alarms
            ],
            "events": len(state.events),
            "cadence": args.cadence,
            "alarmThreshold": args.alarm_threshold,
            "band": args.band.describe() if args.band else "none",
            "metric": args.metric,
        },
    )
    run.finish()
    print(f"final score {state.score:.6g}, {len(state.alarms)} alarms")


# ---------------------------------------------------------------- parser


def _add_common(p, output=True):
    if output:
        p.add_argument("--output-dir", required=True, help="directory for artifacts and the run manifest")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker threads for pairwise evaluation")
    p.add_argument("--band", type=_parse_band, default=None, help="none | itakura[:S] | sc:R")
    p.add_argument("--metric", default="euclidean", choices=["euclidean", "sqeuclidean", "manhattan"])


def _add_cluster_opts(p):
    p.add_argument("--clusters", type=int, default=3)
    p.add_argument("--linkage", default="average", choices=["single", "complete", "average"])
    p.add_argument("--partitional", action="store_true", help="k-medoids instead of hierarchical")


def build_parser() -> _Parser:
    parser = _Parser(prog="warpscore", description=__doc__)
    parser.add_argument("--version", action="version", version=f"warpscore {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    _add_common(p)
    p.add_argument("--length", type=int, default=500)
    p.add_argument("--separation", type=float, default=1.0)
    p.add_argument("--participants", default=None, help='e.g. "N:4,I:2,E:2" (default: the 8x5 benchmark layout)')
    p.add_argument("--series-per-participant", type=int, default=5)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="validate a dataset manifest")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("distmat", help="pairwise DTW distance matrix")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_distmat)

    p = sub.add_parser("cluster", help="cluster a dataset and report validity indices")
    _add_common(p)
    p.add_argument("--input", required=True)
    _add_cluster_opts(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("prototype", help="build prototypes per skill class or per cluster")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--proto", default="dtwmp-d", choices=list(PROTOTYPE_METHODS))
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--by", default="skill", choices=["skill", "cluster"])
    _add_cluster_opts(p)
    p.set_defaults(func=cmd_prototype)

    p = sub.add_parser("classify", help="skill classification with cross-validation")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--method", default="knn", choices=["knn", "centroid"])
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--proto", default="pam", choices=list(PROTOTYPE_METHODS))
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--scheme", default="loocv", choices=["loocv", "kfold"])
    p.add_argument("--folds", type=int, default=5)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("identify", help="participant identification (leave-one-out kNN)")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--proto", default="pam")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--scheme", default="loocv", choices=["loocv", "kfold"])
    p.add_argument("--folds", type=int, default=5)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("envelope", help="summative tunnels per cluster (the streaming model)")
    _add_common(p)
    p.add_argument("--input", required=True)
    _add_cluster_opts(p)
    p.add_argument("--proto", default="dtwmp-d", choices=list(PROTOTYPE_METHODS))
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--window-pct", type=float, default=0.05)
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("score", help="best/worst ranking in a cluster, or score one recording")
    _add_common(p)
    p.add_argument("--input", default=None, help="dataset manifest (ranking mode)")
    p.add_argument("--model", default=None, help="model directory from the envelope command (recording mode)")
    p.add_argument("--recording", default=None, help="recording CSV to score against the model")
    p.add_argument("--cluster", type=int, default=None)
    _add_cluster_opts(p)
    p.add_argument("--proto", default="dtwmp-d", choices=list(PROTOTYPE_METHODS))
    p.add_argument("--gamma", type=float, default=1.0)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("stream", help="replay a recording through the streaming assessor")
    _add_common(p)
    p.add_argument("--input", required=True, help="recording CSV to replay")
    p.add_argument("--model", required=True, help="model directory from the envelope command")
    p.add_argument("--cluster", type=int, default=None)
    p.add_argument("--cadence", type=int, default=25)
    p.add_argument("--alarm-threshold", type=float, default=0.0)
    p.set_defaults(func=cmd_stream)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.print_help(sys.stderr)
            return 1
        if args.command == "score" and not args.model and not args.input:
            raise _UsageError("score requires --input (ranking mode) or --model --recording")
        args.func(args)
        return 0
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except WarpscoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
