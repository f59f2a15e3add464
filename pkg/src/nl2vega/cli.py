"""Command-line entry points tying the pipeline together.

Subcommands: import (corpus conversion), train, eval, predict, serve and
compile. Every run leaves a manifest recording what was executed against
which inputs. Exit codes: 0 success, 1 internal/runtime failure, 2 bad
usage or invalid input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path
from typing import Optional

from .dataset import (
    augment_corpus,
    build_vocabulary,
    bundled_corpus_path,
    corpus_schema,
    encode_corpus,
    load_corpus,
)
from .errors import (
    BridgeError,
    CheckpointError,
    ConfigError,
    CorpusError,
    EncoderError,
    EncodingError,
    Nl2VegaError,
    ParseError,
    TrainingDivergedError,
)
from .evaluation import evaluate
from .model import (
    BridgeClient,
    ModelConfig,
    build_network,
    load,
    make_bridge_provider,
    save,
    train,
    write_history_csv,
)
from .nvbench import import_nvbench
from .service import PredictService, RequestError, make_server
from .vega_zero import compile_to_vegalite, parse, serialize, validate, validate_vegalite

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

# user-input problems; everything else Nl2Vega-flavored is a runtime failure
_USAGE_ERRORS = (ConfigError, CorpusError, CheckpointError, ParseError,
                 EncodingError, RequestError)


class _Manifest:
    """Run record written at start and finalized at exit."""

    def __init__(self, path: Optional[Path], command: str, **fields):
        self.path = path
        self.data = {
            "command": command,
            "started_at": _now(),
            "finished_at": None,
            "status": "running",
            **fields,
        }

    def __enter__(self):
        self._write()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.data["finished_at"] = _now()
        self.data["status"] = "ok" if exc is None else "error"
        if exc is not None:
            self.data["error"] = str(exc)
        self._write()
        return False

    def update(self, **fields):
        self.data.update(fields)

    def _write(self):
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(json.dumps(self.data, indent=2) + "\n", encoding="utf-8")


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def _file_hash(path: Path) -> str:
    return "sha256:" + hashlib.sha256(path.read_bytes()).hexdigest()


def _load_config(args) -> dict:
    base = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(base, dict):
            raise ConfigError("config file must hold a JSON object")
    if getattr(args, "seed", None) is not None:
        base["seed"] = args.seed
    if getattr(args, "variant", None):
        base["encoder_variant"] = args.variant
    return base  # completed by the caller once external_dim is known


def _open_bridge(args, config_dict: dict):
    """Attach a bridge provider when the encoder variant needs one."""
    variant = config_dict.get("encoder_variant", "native")
    if variant == "native":
        return None, None
    if not args.bridge:
        raise ConfigError(f"encoder variant {variant!r} needs --bridge ADDRESS")
    client = BridgeClient(args.bridge)
    dim, _name = client.hello()
    config_dict.setdefault("external_dim", dim)
    if config_dict["external_dim"] != dim:
        raise ConfigError(
            f"config external_dim {config_dict['external_dim']} != bridge dim {dim}")
    return client, make_bridge_provider(client, variant)


def _corpus_pairs(path: Path, split: Optional[str]):
    result = load_corpus(path)
    pairs = result.split(split) if split else result.pairs
    if not pairs:
        raise CorpusError(f"corpus {path} has no pairs" + (f" in split {split!r}" if split else ""))
    return pairs


def _service_from_args(args):
    ckpt = load(args.checkpoint)
    net = build_network(ckpt)
    corpus = Path(args.corpus) if args.corpus else bundled_corpus_path()
    schema = corpus_schema(_corpus_pairs(corpus, None))
    config_dict = ckpt.config.to_dict()
    client, provider = _open_bridge(args, config_dict)
    return PredictService(net, ckpt.vocab, schema, external=provider), ckpt, corpus, client


# ------------------------------------------------------------------ commands

def cmd_import(args) -> int:
    src = Path(args.src)
    out = Path(args.out)
    manifest_path = Path(args.manifest) if args.manifest else out / "manifest.json"
    with _Manifest(manifest_path, "import", source=str(src), output=str(out)) as m:
        out.mkdir(parents=True, exist_ok=True)
        if src.is_dir():
            report = import_nvbench(src, out)
            m.update(report=report.to_dict())
            print(report.summary_line())
        else:
            result = load_corpus(src)
            m.update(corpus_hash=_file_hash(src), pairs=len(result.pairs),
                     rejects=len(result.rejects))
            target = out / "corpus.jsonl"
            with open(target, "w", encoding="utf-8") as fh:
                for p in result.pairs:
                    table = p.schema.table(p.table)
                    fh.write(json.dumps({
                        "nl": p.nl_query,
                        "label": serialize(p.label),
                        "table": p.table,
                        "schema": {"columns": [{"name": c.name, "kind": c.kind}
                                               for c in table.columns]},
                        "values": list(table.sample_values),
                        "hardness": p.hardness,
                        "split": p.split,
                    }) + "\n")
            result.write_rejects(out / "rejects.jsonl")
            print(f"{len(result.pairs)} pairs -> {target} ({len(result.rejects)} rejects)")
    return EXIT_OK


def cmd_train(args) -> int:
    corpus = Path(args.corpus) if args.corpus else bundled_corpus_path()
    out = Path(args.out)
    manifest_path = Path(args.manifest) if args.manifest else Path(str(out) + ".manifest.json")
    config_dict = _load_config(args)
    with _Manifest(manifest_path, "train", corpus=str(corpus),
                   corpus_hash=_file_hash(corpus), checkpoint=str(out),
                   seed=config_dict.get("seed")) as m:
        result = load_corpus(corpus)
        train_pairs = result.split("train") or result.pairs
        val_pairs = result.split("dev") or train_pairs
        client, provider = _open_bridge(args, config_dict)
        try:
            config = ModelConfig.from_dict(config_dict)
            m.update(config=config.to_dict())
            vocab = build_vocabulary(augment_corpus(result.pairs))
            train_items = encode_corpus(augment_corpus(train_pairs), vocab)
            val_items = encode_corpus(augment_corpus(val_pairs), vocab)

            out.parent.mkdir(parents=True, exist_ok=True)
            lock = Path(str(out) + ".lock")
            try:
                fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            except FileExistsError:
                raise FileExistsError(
                    f"checkpoint {out} is locked by another run ({lock})") from None
            try:
                os.write(fd, str(os.getpid()).encode())
                os.close(fd)

                def progress(epoch, train_loss, val_loss):
                    print(f"epoch {epoch:3d}  train {train_loss:.4f}  val {val_loss:.4f}")

                started = time.time()
                ckpt = train(train_items, val_items, config, vocab,
                             external=provider, progress=progress)
                save(ckpt, out)
                history_csv = Path(str(out) + ".history.csv")
                write_history_csv(ckpt.history, history_csv)
                m.update(selected_epoch=ckpt.selected_epoch,
                         best_val_loss=ckpt.history[ckpt.selected_epoch][1],
                         history_csv=str(history_csv),
                         seconds=round(time.time() - started, 3))
                print(f"saved {out} (best epoch {ckpt.selected_epoch}, "
                      f"val loss {ckpt.history[ckpt.selected_epoch][1]:.4f})")
            finally:
                lock.unlink(missing_ok=True)
        finally:
            if client is not None:
                client.close()
    return EXIT_OK


def cmd_eval(args) -> int:
    corpus = Path(args.corpus) if args.corpus else bundled_corpus_path()
    report_dir = Path(args.report)
    manifest_path = Path(args.manifest) if args.manifest else report_dir / "manifest.json"
    with _Manifest(manifest_path, "eval", checkpoint=str(args.checkpoint),
                   corpus=str(corpus), corpus_hash=_file_hash(corpus),
                   split=args.split) as m:
        ckpt = load(args.checkpoint)
        net = build_network(ckpt)
        pairs = _corpus_pairs(corpus, args.split)
        items = augment_corpus(pairs)
        config_dict = ckpt.config.to_dict()
        client, provider = _open_bridge(args, config_dict)
        try:
            report = evaluate(net, ckpt.vocab, items, external=provider)
        finally:
            if client is not None:
                client.close()
        report_dir.mkdir(parents=True, exist_ok=True)
        (report_dir / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
        (report_dir / "report.txt").write_text(report.text_tables() + "\n", encoding="utf-8")
        report.write_item_dump(report_dir / "items.jsonl")
        m.update(n_items=report.n_items,
                 token_accuracy=report.token_accuracy["overall"],
                 guided_exact_match=report.guided_exact_match["overall"])
        print(report.text_tables())
    return EXIT_OK


def cmd_predict(args) -> int:
    manifest_path = Path(args.manifest) if args.manifest \
        else Path(str(args.checkpoint) + ".predict.manifest.json")
    with _Manifest(manifest_path, "predict", checkpoint=str(args.checkpoint),
                   table=args.table, chart=args.chart):
        service, _ckpt, _corpus, client = _service_from_args(args)
        try:
            out = service.predict(args.nl, args.table, args.chart)
        finally:
            if client is not None:
                client.close()
        if not args.vegalite:
            out.pop("vega_lite")
        print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_serve(args) -> int:
    manifest_path = Path(args.manifest) if args.manifest \
        else Path(str(args.checkpoint) + ".serve.manifest.json")
    with _Manifest(manifest_path, "serve", checkpoint=str(args.checkpoint),
                   host=args.host, port=args.port) as m:
        service, _ckpt, _corpus, client = _service_from_args(args)
        server = make_server(service, args.host, args.port)
        host, port = server.server_address[:2]
        m.update(port=port)
        # flush so the address shows up even when stdout is a pipe
        print(f"serving on http://{host}:{port} (POST /predict, GET /schema)",
              flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.server_close()
            if client is not None:
                client.close()
    return EXIT_OK


def cmd_compile(args) -> int:
    out_path = Path(args.out) if args.out else None
    manifest_path = Path(args.manifest) if args.manifest \
        else Path(str(out_path) + ".manifest.json") if out_path else None
    with _Manifest(manifest_path, "compile", query=args.query):
        ast = parse(args.query)
        if args.corpus or not args.no_validate:
            corpus = Path(args.corpus) if args.corpus else bundled_corpus_path()
            schema = corpus_schema(_corpus_pairs(corpus, None))
            if schema.table(ast.data) is not None:
                report = validate(ast, schema)
                if not report.ok:
                    issues = "; ".join(i.message for i in report.issues)
                    raise ParseError(f"query does not fit the corpus schema: {issues}")
        doc = compile_to_vegalite(ast, {"name": ast.data})
        violations = validate_vegalite(doc)
        if violations:
            print("schema violations: " + "; ".join(violations), file=sys.stderr)
            return EXIT_RUNTIME
        text = json.dumps(doc, indent=2)
        if out_path:
            out_path.write_text(text + "\n", encoding="utf-8")
            print(f"wrote {out_path}")
        else:
            print(text)
    return EXIT_OK


# -------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nl2vega",
        description="Natural language to vega-zero queries and Vega-Lite charts.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import", help="convert a corpus into the package's JSONL layout")
    p.add_argument("src", help="corpus JSONL file or a directory of split CSVs")
    p.add_argument("out", help="output directory")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    p.add_argument("--corpus", help="corpus JSONL (default: bundled mini-corpus)")
    p.add_argument("--out", required=True, help="checkpoint file to write")
    p.add_argument("--config", help="JSON file of model configuration fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--variant", choices=("native", "external", "external_cnn", "combined"))
    p.add_argument("--bridge", help="embedding bridge address (tcp:HOST:PORT or a command)")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint and write report files")
    p.add_argument("checkpoint")
    p.add_argument("--corpus")
    p.add_argument("--split", help="restrict to one corpus split")
    p.add_argument("--report", required=True, help="directory for report files")
    p.add_argument("--bridge")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="decode one natural-language question")
    p.add_argument("checkpoint")
    p.add_argument("--nl", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--chart", choices=("arc", "bar", "line", "point"))
    p.add_argument("--vegalite", action="store_true", help="include the compiled document")
    p.add_argument("--corpus", help="corpus supplying table schemas")
    p.add_argument("--bridge")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="HTTP prediction service over one checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--corpus")
    p.add_argument("--bridge")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("compile", help="compile a vega-zero query to Vega-Lite JSON")
    p.add_argument("query")
    p.add_argument("--out")
    p.add_argument("--corpus", help="validate against this corpus's schemas")
    p.add_argument("--no-validate", action="store_true")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_compile)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingDivergedError, BridgeError, EncoderError, Nl2VegaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
