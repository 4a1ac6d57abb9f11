"""Command-line entry point for every pipeline stage and the platform service."""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any, Sequence

from .errors import ConfigNotFound, MalformedDocument, VforgeError

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE = 2


def _read_samples(path: str) -> list[dict[str, Any]]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [line for line in fh.read().splitlines() if line.strip()]
    except OSError as exc:
        raise ConfigNotFound(f"cannot read samples file {path!r}: {exc}") from exc
    samples = []
    for i, line in enumerate(lines):
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"samples line {i + 1} is not valid JSON") from exc
        samples.append(doc)
    return samples


def _read_json(path: str, what: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigNotFound(f"cannot read {what} {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"{what} {path!r} is not valid JSON") from exc


def _write_json(path: str, doc: Any) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def _load_target(path: str):
    from .ontology import load_ontology_file

    return load_ontology_file(path)


def _load_disjoint(path: str | None) -> list[tuple[str, str]]:
    if not path:
        return []
    from .ontology import load_disjoint_file

    return load_disjoint_file(path)


def _pipeline_options(args: argparse.Namespace, auto_approve: bool, out_dir: str | None):
    from .infusion.matching import DEFAULT_THRESHOLD
    from .pipeline.orchestrate import PipelineOptions

    return PipelineOptions(
        auto_approve=auto_approve,
        out_dir=out_dir,
        root_name=args.root,
        threshold=getattr(args, "threshold", None) or DEFAULT_THRESHOLD,
        geo_enabled=not getattr(args, "no_geo", False),
        disjoint=_load_disjoint(getattr(args, "disjoint", None)),
        epoch=getattr(args, "epoch", None),
    )


# --- subcommands ---------------------------------------------------------------

def _cmd_extract_schema(args: argparse.Namespace) -> int:
    from .schema_infer import infer_from_samples

    samples = _read_samples(args.infile)
    schema = infer_from_samples(samples, args.root, geo_enabled=not args.no_geo)
    _write_json(args.out, schema.to_dict())
    print(f"schema with {len(schema.concepts)} concept(s) -> {args.out}")
    return EXIT_OK


def _run_gated(args: argparse.Namespace):
    from .pipeline.orchestrate import run_pipeline

    samples = _read_samples(args.infile)
    target = _load_target(args.target)
    opts = _pipeline_options(args, auto_approve=False, out_dir=args.out)
    return run_pipeline(samples, target, opts)


def _cmd_match(args: argparse.Namespace) -> int:
    result = _run_gated(args)
    match_doc = _read_json(os.path.join(args.out, "match.json"), "match result")
    for row in match_doc["matches"]:
        print(f"{row['pairId']}\t{row['score']:.4f}")
    print(f"{len(match_doc['matches'])} match(es); session {result.session_id} -> {args.out}")
    return EXIT_OK


def _cmd_annotate(args: argparse.Namespace) -> int:
    result = _run_gated(args)
    count = sum(len(s.annotations) for s in result.session.annotations)
    print(f"{count} annotation(s) across {len(result.session.annotations)} sample(s) -> {args.out}")
    return EXIT_OK


def _cmd_review(args: argparse.Namespace) -> int:
    import uvicorn

    from .pipeline.rest import SessionContext, SessionStore, create_review_app
    from .pipeline.session import session_from_dict, session_to_dict
    from .schema_infer import SourceSchema

    session_path = os.path.join(args.artifacts, "session.json")

    def persist(context: SessionContext) -> None:
        _write_json(session_path, session_to_dict(context.session))

    store = SessionStore(on_change=persist)
    session = session_from_dict(_read_json(session_path, "session"))
    schema = SourceSchema.from_dict(
        _read_json(os.path.join(args.artifacts, "schema.json"), "schema")
    )
    provenance: dict[str, Any] = {}
    for key, name in (("labelModelHash", "label_model.json"), ("classifierHash", "classifier.json")):
        doc_path = os.path.join(args.artifacts, name)
        if os.path.exists(doc_path):
            from .pipeline.orchestrate import _digest

            provenance[key] = _digest(_read_json(doc_path, name))
    context = SessionContext(
        session=session,
        schema=schema,
        target_ont=_load_target(args.target),
        provenance=provenance,
    )
    store.add(context)
    app = create_review_app(store)

    assets = args.assets
    if assets and os.path.isdir(assets):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=assets, html=True), name="ui")
    host, _, port = args.serve.rpartition(":")
    print(f"review session {session.session_id} at http://{args.serve}/")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    return EXIT_OK


def _cmd_compile(args: argparse.Namespace) -> int:
    from .ontology import load_ontology
    from .pipeline.orchestrate import build_provenance
    from .pipeline.session import session_from_dict
    from .pipeline.translation import compile_config
    from .schema_infer import SourceSchema, schema_to_ontology

    session = session_from_dict(
        _read_json(os.path.join(args.artifacts, "session.json"), "session")
    )
    schema = SourceSchema.from_dict(
        _read_json(os.path.join(args.artifacts, "schema.json"), "schema")
    )
    target = _load_target(args.target)
    source_ont = schema_to_ontology(schema)
    label_model_doc: dict[str, Any] = {}
    classifier_doc: dict[str, Any] = {}
    lm_path = os.path.join(args.artifacts, "label_model.json")
    clf_path = os.path.join(args.artifacts, "classifier.json")
    if os.path.exists(lm_path):
        label_model_doc = _read_json(lm_path, "label model")
    if os.path.exists(clf_path):
        classifier_doc = _read_json(clf_path, "classifier")
    provenance = build_provenance(
        session, source_ont, target, label_model_doc, classifier_doc, epoch=args.epoch
    )
    config = compile_config(session, schema, target, provenance=provenance)
    _write_json(args.out, config.to_dict())
    print(f"{len(config.rules)} rule(s) -> {args.out}")
    return EXIT_OK


def _cmd_translate(args: argparse.Namespace) -> int:
    from .ngsi import serialize_entity
    from .pipeline.translation import load_config, translate

    config = load_config(args.config)
    samples = _read_samples(args.infile)
    parent = os.path.dirname(args.out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    count = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        for sample in samples:
            for entity in translate(config, sample):
                fh.write(serialize_entity(entity) + "\n")
                count += 1
    print(f"{count} entity update(s) -> {args.out}")
    return EXIT_OK


def _cmd_platform(args: argparse.Namespace) -> int:
    import uvicorn

    from .bus import MqttBridge
    from .platform import Platform
    from .platform_api import create_app

    platform = Platform()
    bridge = MqttBridge(platform.bus)
    if bridge.configured:
        started = bridge.start()
        print(f"mqtt bridge {'connected' if started else 'unavailable'}: {bridge.uri}")
    app = create_app(platform)
    host, _, port = args.listen.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    return EXIT_OK


def _cmd_demo(args: argparse.Namespace) -> int:
    from .fixtures import BACKBONE_PATH, DISJOINT_PATH, WEATHER_SAMPLES_PATH
    from .ngsi import serialize_entity
    from .pipeline.orchestrate import PipelineOptions, run_pipeline
    from .pipeline.translation import translate
    from .platform import Flavour, Platform, SourceKind, ThingVisorDescriptor

    samples = _read_samples(WEATHER_SAMPLES_PATH)
    target = _load_target(BACKBONE_PATH)
    pipeline_dir = os.path.join(args.out, "pipeline")
    config = run_pipeline(
        samples,
        target,
        PipelineOptions(
            auto_approve=True,
            out_dir=pipeline_dir,
            root_name="weather_reading",
            disjoint=_load_disjoint(DISJOINT_PATH),
            epoch=args.epoch,
        ),
    )
    config_path = os.path.join(pipeline_dir, "translation_config.json")

    entities_path = os.path.join(args.out, "entities.jsonl")
    with open(entities_path, "w", encoding="utf-8") as fh:
        for sample in samples:
            for entity in translate(config, sample):
                fh.write(serialize_entity(entity) + "\n")

    platform = Platform()
    try:
        platform.register_thingvisor(
            ThingVisorDescriptor(
                id="weather-tv",
                source_kind=SourceKind.FILE_REPLAY,
                source_config={"path": WEATHER_SAMPLES_PATH, "type": "WeatherObserved"},
                translation_config_ref=config_path,
                vthings=["weather"],
            )
        )
        silo_dumps: dict[str, Any] = {}
        for flavour in Flavour:
            silo = platform.create_vsilo(f"tenant-{flavour.value}", flavour.value)
            platform.add_vthing_to_silo(silo.silo_id, "weather-tv/weather")
            silo_dumps[flavour.value] = silo
        processed = platform.trigger_replay("weather-tv")
        platform.drain()
        for name, silo in silo_dumps.items():
            _write_json(
                os.path.join(args.out, "silos", f"{name}.json"),
                {"silo": silo.to_dict(), "store": silo.store.to_dict()},
            )
    finally:
        platform.close()

    print(f"pipeline artifacts -> {pipeline_dir}")
    print(f"replayed {processed} record(s) into {len(silo_dumps)} silo(s) -> {args.out}")
    return EXIT_OK


# --- argument wiring ------------------------------------------------------------

def _add_epoch(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--epoch",
        type=int,
        default=None,
        help="provenance clock override in unix seconds; 0 drops timestamps",
    )


def _add_match_inputs(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--in", dest="infile", required=True, help="JSONL samples file")
    parser.add_argument("--root", required=True, help="name for the root source concept")
    parser.add_argument("--target", required=True, help="target ontology JSON file")
    parser.add_argument("--disjoint", default=None, help="TSV of known non-matches")
    parser.add_argument("--threshold", type=float, default=None, help="match threshold")
    parser.add_argument("--no-geo", action="store_true", help="disable geo shape detection")
    parser.add_argument("--out", required=True, help="artifact output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vforge",
        description="Schema extraction, ontology matching, and IoT data translation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-schema", help="infer a source schema from sample data")
    p.add_argument("--in", dest="infile", required=True, help="JSONL samples file")
    p.add_argument("--root", required=True, help="name for the root source concept")
    p.add_argument("--no-geo", action="store_true", help="disable geo shape detection")
    p.add_argument("--out", required=True, help="schema output file")
    p.set_defaults(func=_cmd_extract_schema)

    p = sub.add_parser("match", help="score and select concept correspondences")
    _add_match_inputs(p)
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("annotate", help="annotate samples with candidate concepts")
    _add_match_inputs(p)
    p.set_defaults(func=_cmd_annotate)

    p = sub.add_parser("review", help="serve the interactive mapping review")
    p.add_argument("--serve", required=True, metavar="HOST:PORT")
    p.add_argument("--artifacts", required=True, help="pipeline artifact directory")
    p.add_argument("--target", required=True, help="target ontology JSON file")
    p.add_argument("--assets", default=None, help="static UI bundle directory")
    p.set_defaults(func=_cmd_review)

    p = sub.add_parser("compile", help="compile an approved session into a config")
    p.add_argument("--artifacts", required=True, help="pipeline artifact directory")
    p.add_argument("--target", required=True, help="target ontology JSON file")
    p.add_argument("--out", required=True, help="translation config output file")
    _add_epoch(p)
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("translate", help="apply a translation config to samples")
    p.add_argument("--config", required=True, help="translation config file")
    p.add_argument("--in", dest="infile", required=True, help="JSONL samples file")
    p.add_argument("--out", required=True, help="entity JSONL output file")
    p.set_defaults(func=_cmd_translate)

    p = sub.add_parser("platform", help="serve the virtualization platform API")
    p.add_argument("--listen", required=True, metavar="HOST:PORT")
    p.set_defaults(func=_cmd_platform)

    p = sub.add_parser("demo", help="run the bundled fixture end to end")
    p.add_argument("--out", required=True, help="output directory")
    _add_epoch(p)
    p.set_defaults(func=_cmd_demo)

    return parser


def dispatch(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VforgeError as exc:
        print(f"ERROR {exc.code}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN_ERROR


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
