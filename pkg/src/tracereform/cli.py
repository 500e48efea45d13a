"""Command-line entry point.

Subcommands:

* ``corpus validate <path>``              schema/uniqueness check
* ``corpus segment <path> --granularity`` emit segments as JSONL
* ``rewrite run <corpus> --out <path>``   reformulation pipeline (or
  ``--baseline-summary`` for the summary baseline)
* ``eval lexical <orig> <reform>``        match-ratio threshold curves (CSV)
* ``eval semantic <orig> <part> <summary>`` retrieval evaluation (JSON)
* ``detect score <corpus>``               per-record term frequencies (JSONL)
* ``detect eval <scored-file>``           threshold-classifier metrics (JSON)
* ``probe grad``                          gradient self-test / prob-log report

Every report written to ``--out`` goes through an atomic temp-file rename and
is accompanied by ``<out>.manifest.json`` (config echo, input hashes,
version). With mock providers the whole pipeline is deterministic: identical
inputs produce byte-identical reports, manifest timestamp aside.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

from . import __version__
from . import corpus as corpus_mod
from . import tokenprob
from .errors import TraceReformError
from .fileio import atomic_write_text, sha256_file
from .lexmatch import DEFAULT_THRESHOLDS, EvalConfig, match_curve
from .providers import make_embedding_client, make_generation_client
from .rewriter import RewriteConfig, reformulate_trace, summarize_trace
from .selftalk import (
    ORIGINAL_LIKE,
    REFORMULATED_LIKE,
    SelfTalkLexicon,
    classifier_metrics,
    term_frequency,
)
from .semantic import EmbeddingVector, embed_corpus, retrieval_eval

_CONFIG_SECTIONS = ("generation", "embedding", "rewrite", "eval", "detect")

logger = logging.getLogger("tracereform.cli")


def load_config(path: str | None) -> dict[str, dict[str, str]]:
    """Parse the INI-style config file into per-module sections."""
    sections: dict[str, dict[str, str]] = {name: {} for name in _CONFIG_SECTIONS}
    if path is None:
        return sections
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise TraceReformError(f"config file not found: {path}")
    for name in parser.sections():
        if name not in sections:
            raise TraceReformError(f"unknown config section [{name}]")
        sections[name] = dict(parser.items(name))
    return sections


def _parse_thresholds(grid: str) -> tuple[float, ...]:
    """Parse a start:stop:step grid like ``0.5:1.0:0.05`` (stop inclusive)."""
    try:
        start_s, stop_s, step_s = grid.split(":")
        start, stop, step = float(start_s), float(stop_s), float(step_s)
    except ValueError:
        raise TraceReformError(f"bad threshold grid '{grid}', expected start:stop:step") from None
    if step <= 0 or stop < start:
        raise TraceReformError(f"bad threshold grid '{grid}'")
    values = []
    i = 0
    while True:
        value = round(start + i * step, 10)
        if value > stop + 1e-9:
            break
        values.append(min(value, 1.0))
        i += 1
    return tuple(values)


def _manifest(
    command: str,
    args: Mapping[str, object],
    config: Mapping[str, Mapping[str, str]],
    inputs: Sequence[str | Path],
) -> dict:
    return {
        "version": __version__,
        "command": command,
        "args": {k: str(v) for k, v in sorted(args.items()) if k != "handler"},
        "config": {k: dict(v) for k, v in config.items() if v},
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }


def _emit(
    text: str,
    out: str | None,
    *,
    command: str,
    args: Mapping[str, object],
    config: Mapping[str, Mapping[str, str]],
    inputs: Sequence[str | Path],
) -> None:
    """Write a report atomically with its manifest, or print to stdout."""
    if out is None:
        sys.stdout.write(text)
        return
    for path in inputs:
        if Path(out).resolve() == Path(path).resolve():
            raise TraceReformError(f"output path {out} collides with an input path")
    atomic_write_text(out, text)
    manifest = _manifest(command, args, config, inputs)
    atomic_write_text(str(out) + ".manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _json_report(payload: object) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _load_lexicon(path: str | None) -> SelfTalkLexicon:
    return SelfTalkLexicon.from_file(path) if path else SelfTalkLexicon.default()


# ----------------------------------------------------------------------------
# subcommand handlers
# ----------------------------------------------------------------------------


def _cmd_corpus_validate(args, config) -> int:
    records = corpus_mod.load_corpus(args.path)
    empty_reasoning = sum(1 for r in records if not r.reasoning.strip())
    report = {
        "path": str(args.path),
        "records": len(records),
        "with_reformulated": sum(1 for r in records if r.reformulated is not None),
        "empty_reasoning": empty_reasoning,
        "ok": True,
    }
    _emit(_json_report(report), args.out, command="corpus validate",
          args=vars(args), config=config, inputs=[args.path])
    return 0


def _cmd_corpus_segment(args, config) -> int:
    records = corpus_mod.load_corpus(args.path)
    lines = []
    for record in records:
        for index, seg in enumerate(corpus_mod.segment(record.reasoning, args.granularity)):
            lines.append(json.dumps(
                {"id": record.id, "index": index, "start": seg.start,
                 "end": seg.end, "text": seg.text},
                ensure_ascii=False, sort_keys=True))
    text = "".join(line + "\n" for line in lines)
    _emit(text, args.out, command="corpus segment",
          args=vars(args), config=config, inputs=[args.path])
    return 0


def _cmd_rewrite_run(args, config) -> int:
    records = corpus_mod.load_corpus(args.corpus)
    client = make_generation_client(config["generation"])
    rewrite_section = config["rewrite"]
    cfg = RewriteConfig(
        segment_budget=int(rewrite_section.get("segment_budget", "2500")),
        max_retries=int(rewrite_section.get("max_retries", "3")),
        concurrency_limit=int(rewrite_section.get("concurrency_limit", "4")),
    )
    pipeline = summarize_trace if args.baseline_summary else reformulate_trace
    logger.info("rewriting %d records (%s)", len(records),
                "summary baseline" if args.baseline_summary else "removal+reorder")
    rewritten = [pipeline(record, cfg, client) for record in records]
    _emit(corpus_mod.dumps_corpus(rewritten), args.out, command="rewrite run",
          args=vars(args), config=config, inputs=[args.corpus])
    return 0


def _pair_by_id(
    originals: list[corpus_mod.TraceRecord], reformulated: list[corpus_mod.TraceRecord]
) -> dict[str, list[tuple[str, str]]]:
    """Group (original reasoning, reformulated text) pairs by method label."""
    by_id = {r.id: r for r in originals}
    groups: dict[str, list[tuple[str, str]]] = {}
    for record in reformulated:
        if record.reformulated is None:
            raise TraceReformError(f"record '{record.id}' has no reformulated trace")
        original = by_id.get(record.id)
        if original is None:
            raise TraceReformError(f"record '{record.id}' missing from the original corpus")
        method = record.method or "unknown"
        groups.setdefault(method, []).append((original.reasoning, record.reformulated))
    return groups


def _cmd_eval_lexical(args, config) -> int:
    originals = corpus_mod.load_corpus(args.original)
    reformulated = corpus_mod.load_corpus(args.reformulated)
    eval_section = config["eval"]
    thresholds = _parse_thresholds(args.thresholds) if args.thresholds else (
        _parse_thresholds(eval_section["thresholds"]) if "thresholds" in eval_section
        else DEFAULT_THRESHOLDS)
    granularity = args.granularity or eval_section.get("granularity", "sentence")
    cfg = EvalConfig(thresholds=thresholds, granularity=granularity,
                     tau=float(eval_section.get("tau", "0.7")))

    groups = _pair_by_id(originals, reformulated)
    all_pairs = [pair for pairs in groups.values() for pair in pairs]
    curves = {method: match_curve(pairs, cfg) for method, pairs in sorted(groups.items())}
    if len(groups) > 1:
        curves["all"] = match_curve(all_pairs, cfg)
    for method, curve in curves.items():
        at_tau = {t: r for t, r in curve.points}.get(cfg.tau)
        if at_tau is not None:
            logger.info("method=%s match_ratio=%.4f at tau=%g", method, at_tau, cfg.tau)

    def n_segments(pairs: list[tuple[str, str]]) -> int:
        return sum(len(corpus_mod.segment(orig, cfg.granularity)) for orig, _ in pairs)

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["threshold", "method", "match_ratio", "n_segments"])
    for method, curve in curves.items():
        count = n_segments(all_pairs if method == "all" else groups[method])
        for threshold, ratio in curve.points:
            writer.writerow([f"{threshold:g}", method, f"{ratio:.6f}", count])
    _emit(buffer.getvalue(), args.out, command="eval lexical",
          args=vars(args), config=config, inputs=[args.original, args.reformulated])
    return 0


def _embedding_vectors(
    records: list[corpus_mod.TraceRecord], family: str, client
) -> list[EmbeddingVector]:
    if family == "original":
        texts = [r.reasoning for r in records]
    else:
        missing = [r.id for r in records if r.reformulated is None]
        if missing:
            raise TraceReformError(f"records without reformulated traces: {missing[:5]}")
        texts = [r.reformulated for r in records]
    return embed_corpus(texts, client, ids=[r.id for r in records], family=family)


def _cmd_eval_semantic(args, config) -> int:
    client = make_embedding_client(config["embedding"])
    queries = _embedding_vectors(corpus_mod.load_corpus(args.original), "original", client)
    candidates = _embedding_vectors(corpus_mod.load_corpus(args.part), "part", client)
    candidates += _embedding_vectors(corpus_mod.load_corpus(args.summary), "summary", client)
    outcome = retrieval_eval(queries, candidates)
    report = {
        "n_queries": outcome.n_queries,
        "self_match_ratio": outcome.self_match_ratio,
        "family_match_ratio": outcome.family_match_ratio,
        "avg_cos": outcome.avg_cos,
        "tie_count": outcome.tie_count,
    }
    _emit(_json_report(report), args.out, command="eval semantic",
          args=vars(args), config=config,
          inputs=[args.original, args.part, args.summary])
    return 0


def _cmd_detect_score(args, config) -> int:
    lexicon = _load_lexicon(args.lexicon)
    records = corpus_mod.load_corpus(args.corpus)
    lines = []
    for record in records:
        sources = [("reasoning", record.reasoning)]
        if record.reformulated is not None:
            sources.append(("reformulated", record.reformulated))
        for source, text in sources:
            tf = term_frequency(text, lexicon)
            lines.append(json.dumps(
                {"id": record.id, "source": source, "frequency": tf.frequency,
                 "hit_count": tf.hit_count, "word_count": tf.word_count},
                ensure_ascii=False, sort_keys=True))
    _emit("".join(line + "\n" for line in lines), args.out, command="detect score",
          args=vars(args), config=config, inputs=[args.corpus])
    return 0


def _cmd_detect_eval(args, config) -> int:
    fpr_budget = args.fpr if args.fpr is not None else float(
        config["detect"].get("fpr_budget", "0.01"))
    scores: list[tuple[float, str]] = []
    with open(args.scored, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceReformError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            if "label" in obj:
                label = obj["label"]
            elif "source" in obj:
                label = ORIGINAL_LIKE if obj["source"] == "reasoning" else REFORMULATED_LIKE
            else:
                raise TraceReformError(f"line {lineno}: needs 'label' or 'source'")
            scores.append((float(obj["frequency"]), label))
    report = classifier_metrics(scores, fpr_budget)
    payload = {
        "f1": report.f1,
        "tpr_at_fpr": report.tpr_at_fpr,
        "fpr_budget": report.fpr_budget,
        "threshold_used": report.threshold_used,
        "n_scored": len(scores),
        "roc": [[fpr, tpr] for fpr, tpr in report.roc],
    }
    _emit(_json_report(payload), args.out, command="detect eval",
          args=vars(args), config=config, inputs=[args.scored])
    return 0


def _cmd_probe_grad(args, config) -> int:
    if args.self_test:
        results = tokenprob.self_test()
        ok = True
        for name, passed, detail in results:
            ok = ok and passed
            print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        return 0 if ok else 1
    if args.problog is None:
        raise TraceReformError("probe grad needs a prob-log file or --self-test")
    lexicon = _load_lexicon(args.lexicon)
    logs = tokenprob.load_prob_logs(args.problog)
    gaps = tokenprob.selftalk_prob_gap(logs, lexicon)
    stages = {}
    for log in logs:
        stage = log.stage if log.stage is not None else "default"
        gap = gaps[stage]
        try:
            loss = tokenprob.sft_loss(log)
        except TraceReformError:
            loss = None
        stages[stage] = {
            "n_rows": gap.n_rows,
            "sft_loss": loss,
            "avg_all": gap.avg_all,
            "avg_selftalk": gap.avg_selftalk,
            "gap": gap.gap,
            "n_selftalk": gap.n_selftalk,
        }
    _emit(_json_report({"stages": stages}), args.out, command="probe grad",
          args=vars(args), config=config, inputs=[args.problog])
    return 0


# ----------------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tracereform",
        description="Reformulate reasoning traces and evaluate the reformulations.",
    )
    parser.add_argument("--config", help="INI config file with per-module sections")
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    corpus_p = sub.add_parser("corpus", help="corpus utilities")
    corpus_sub = corpus_p.add_subparsers(dest="subcommand", required=True)
    validate_p = corpus_sub.add_parser("validate", help="check schema and id uniqueness")
    validate_p.add_argument("path")
    validate_p.add_argument("--out")
    validate_p.set_defaults(handler=_cmd_corpus_validate)
    segment_p = corpus_sub.add_parser("segment", help="emit segments as JSONL")
    segment_p.add_argument("path")
    segment_p.add_argument("--granularity", choices=["sentence", "step"], default="sentence")
    segment_p.add_argument("--out")
    segment_p.set_defaults(handler=_cmd_corpus_segment)

    rewrite_p = sub.add_parser("rewrite", help="run the reformulation pipeline")
    rewrite_sub = rewrite_p.add_subparsers(dest="subcommand", required=True)
    run_p = rewrite_sub.add_parser("run", help="reformulate a corpus")
    run_p.add_argument("corpus")
    run_p.add_argument("--out", required=True)
    run_p.add_argument("--baseline-summary", action="store_true",
                       help="produce the summary baseline instead")
    run_p.set_defaults(handler=_cmd_rewrite_run)

    eval_p = sub.add_parser("eval", help="similarity evaluations")
    eval_sub = eval_p.add_subparsers(dest="subcommand", required=True)
    lexical_p = eval_sub.add_parser("lexical", help="match-ratio threshold curves (CSV)")
    lexical_p.add_argument("original")
    lexical_p.add_argument("reformulated")
    lexical_p.add_argument("--granularity", choices=["sentence", "step"])
    lexical_p.add_argument("--thresholds", help="grid as start:stop:step, e.g. 0.5:1.0:0.05")
    lexical_p.add_argument("--out")
    lexical_p.set_defaults(handler=_cmd_eval_lexical)
    semantic_p = eval_sub.add_parser("semantic", help="embedding retrieval evaluation (JSON)")
    semantic_p.add_argument("original")
    semantic_p.add_argument("part")
    semantic_p.add_argument("summary")
    semantic_p.add_argument("--out")
    semantic_p.set_defaults(handler=_cmd_eval_semantic)

    detect_p = sub.add_parser("detect", help="term-frequency detectability")
    detect_sub = detect_p.add_subparsers(dest="subcommand", required=True)
    score_p = detect_sub.add_parser("score", help="per-record term frequencies (JSONL)")
    score_p.add_argument("corpus")
    score_p.add_argument("--lexicon", help="keyword file, one word per line")
    score_p.add_argument("--out")
    score_p.set_defaults(handler=_cmd_detect_score)
    deval_p = detect_sub.add_parser("eval", help="classifier metrics from a scored file (JSON)")
    deval_p.add_argument("scored")
    deval_p.add_argument("--fpr", type=float, help="false-positive-rate budget (default 0.01)")
    deval_p.add_argument("--out")
    deval_p.set_defaults(handler=_cmd_detect_eval)

    probe_p = sub.add_parser("probe", help="numerical probes")
    probe_sub = probe_p.add_subparsers(dest="subcommand", required=True)
    grad_p = probe_sub.add_parser("grad", help="gradient identities and prob-log reports")
    grad_p.add_argument("problog", nargs="?")
    grad_p.add_argument("--self-test", action="store_true",
                        help="run the gradient identity and finite-difference suites")
    grad_p.add_argument("--lexicon")
    grad_p.add_argument("--out")
    grad_p.set_defaults(handler=_cmd_probe_grad)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """Parse argv and dispatch; exit code 0 on success, 1 on runtime error,
    2 on usage error."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = load_config(args.config)
        return args.handler(args, config)
    except (TraceReformError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
