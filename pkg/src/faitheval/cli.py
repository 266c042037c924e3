"""Command-line entry point.

One subcommand per analysis stage plus `report`, which wires the stages
together and emits a TSV bundle with an aligned plain-text rendering.
Exit codes: 0 ok, 1 configuration problem, 2 data problem, 3 scorer backend.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .agreement import kappa_report
from .corpus import (
    escape_field,
    export_annotations,
    ingest_annotations,
    ingest_documents,
    ingest_summaries,
)
from .correlation import metric_correlations
from .entailment import (
    class_distribution,
    crossval_eval,
    export_finetune,
    fold_assignment,
    select_all,
    selection_eval,
)
from .errors import ConfigError, DataError, FaithEvalError, ParseError, ScorerError
from .gateway import FileScorer, gateway_from_env, load_scores
from .hallucination import (
    factual_breakdown,
    factual_labels,
    faithful_labels,
    rep_incoh_table,
    span_stats,
    system_table,
)
from .qa import qa_accuracy, run_roundtrip
from .rouge import corpus_rouge
from .service import AnnotationService, AnnotationStore


# -- tables -------------------------------------------------------------------


def tsv_table(header: list[str], rows: list[list[str]]) -> str:
    lines = ["\t".join(header)]
    lines.extend("\t".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def aligned_table(header: list[str], rows: list[list[str]]) -> str:
    """Space-padded rendering for the human-readable report."""
    table = [header] + rows
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    out = []
    for row in table:
        out.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(out) + "\n"


def pct(value) -> str:
    return "" if value is None else f"{value:.1f}"


# -- input plumbing -----------------------------------------------------------


def _need(args, *names):
    for name in names:
        value = getattr(args, name, None)
        if value is None:
            flag = "--" + name.replace("_", "-")
            raise ConfigError(f"{flag} is required (flag or config file)")
        if name != "out" and not Path(value).exists():
            raise ConfigError(f"{name} path does not exist: {value}")


def load_config(path: str) -> dict[str, str]:
    """key=value lines; # starts a comment; blank lines ignored."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _load_annots(args, summaries):
    return ingest_annotations(args.annotations, summaries)


def _load_references(path):
    return {d.doc_id: d.text for d in ingest_documents(path)}


def _systems(args) -> list[str]:
    return [s for s in args.systems.split(",") if s]


def _qa_scorer(args):
    if args.live:
        return gateway_from_env()
    _need(args, "qg_file", "rc_file")
    return FileScorer(
        qa_pairs=load_scores(args.qg_file, "qa_pairs"),
        rc_answers=load_scores(args.rc_file, "rc_answers"),
    )


# -- table builders (shared by the subcommands and `report`) -------------------


def rouge_rows(summaries, references, systems):
    by_system: dict[str, dict[str, str]] = {}
    for s in summaries:
        by_system.setdefault(s.system_id, {})[s.doc_id] = s.text
    wanted = systems or sorted(by_system)
    rows = []
    for system_id in wanted:
        candidates = by_system.get(system_id, {})
        refs = {d: references[d] for d in candidates if d in references}
        triple = corpus_rouge(candidates, refs)
        rows.append(
            [system_id, f"{triple.r1.f1 * 100:.2f}", f"{triple.r2.f1 * 100:.2f}",
             f"{triple.rl.f1 * 100:.2f}"]
        )
    return ["system_id", "r1", "r2", "rl"], rows


def agreement_rows(annotations, summaries):
    report = kappa_report(annotations, summaries)
    rows = [
        [system_id, task, f"{kappa:.2f}"]
        for (system_id, task), kappa in sorted(report.items())
    ]
    return ["system_id", "task", "kappa"], rows


def hallu_rows(annotations, summaries, union_mode):
    rows = [
        [r.system_id, pct(r.pct_intrinsic), pct(r.pct_extrinsic), pct(r.pct_union),
         pct(r.pct_faithful), pct(r.pct_faithful_or_factual), str(r.pairs)]
        for r in system_table(annotations, summaries, union_mode=union_mode)
    ]
    return (
        ["system_id", "pct_intrinsic", "pct_extrinsic", "pct_union",
         "pct_faithful", "pct_faithful_or_factual", "pairs"],
        rows,
    )


def factual_rows(annotations, summaries):
    rows = [
        [r.system_id, pct(r.pct_faithful), pct(r.pct_intrinsic),
         pct(r.pct_intrinsic_factual), pct(r.pct_extrinsic),
         pct(r.pct_extrinsic_factual), pct(r.pct_union), pct(r.pct_union_factual),
         pct(r.pct_factual_total)]
        for r in factual_breakdown(annotations, summaries)
    ]
    return (
        ["system_id", "pct_faithful", "pct_intrinsic", "pct_intrinsic_factual",
         "pct_extrinsic", "pct_extrinsic_factual", "pct_union",
         "pct_union_factual", "pct_factual_total"],
        rows,
    )


def span_rows(annotations, summaries, corpus_size=None):
    rows = [
        [r.system_id, str(r.total_intrinsic), f"{r.avg_intrinsic:.2f}",
         str(r.total_extrinsic), f"{r.avg_extrinsic:.2f}",
         f"{r.avg_span_length:.2f}"]
        for r in span_stats(annotations, summaries, corpus_size=corpus_size)
    ]
    return (
        ["system_id", "total_intrinsic", "avg_intrinsic", "total_extrinsic",
         "avg_extrinsic", "avg_span_length"],
        rows,
    )


def linguistic_rows(annotations, summaries):
    rows = [
        [r.system_id, pct(r.pct_repetition), pct(r.pct_incoherence)]
        for r in rep_incoh_table(annotations, summaries)
    ]
    return ["system_id", "pct_repetition", "pct_incoherence"], rows


def load_metric_scores(path) -> dict[str, dict[tuple[str, str], float]]:
    """TSV with header doc_id, system_id, then one column per metric."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError(1, "metric score file is empty")
    header = lines[0].split("\t")
    if header[:2] != ["doc_id", "system_id"] or len(header) < 3:
        raise ParseError(1, "expected header: doc_id, system_id, <metric>...")
    metrics: dict[str, dict[tuple[str, str], float]] = {m: {} for m in header[2:]}
    for line_no, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split("\t")
        if len(cells) != len(header):
            raise ParseError(line_no, f"expected {len(header)} columns")
        pair = (cells[0], cells[1])
        for metric, cell in zip(header[2:], cells[2:]):
            try:
                metrics[metric][pair] = float(cell)
            except ValueError:
                raise ParseError(line_no, f"bad number {cell!r}") from None
    return metrics


def correlation_rows(metric_scores, annotations, summaries, label):
    labels = (
        faithful_labels(annotations, summaries)
        if label == "faithful"
        else factual_labels(annotations, summaries)
    )
    rows = []
    for metric in metric_scores:  # file column order
        value = metric_correlations(metric_scores[metric], labels, label=label)
        rows.append([metric, label, f"{value:.3f}"])
    return ["metric", "label", "abs_spearman"], rows


def entail_class_rows(scores, summaries, systems):
    pairs_by_system: dict[str, list[tuple[str, str]]] = {}
    for s in summaries:
        pairs_by_system.setdefault(s.system_id, []).append((s.doc_id, s.system_id))
    wanted = systems or sorted(pairs_by_system)
    rows = []
    for system_id in wanted:
        pairs = [p for p in pairs_by_system.get(system_id, []) if p in scores]
        dist = class_distribution(system_id, scores, pairs)
        rows.append(
            [system_id, pct(dist.pct_entail), pct(dist.pct_neutral),
             pct(dist.pct_contradict), str(dist.pairs)]
        )
    return ["system_id", "pct_entail", "pct_neutral", "pct_contradict", "pairs"], rows


def selection_rows(result, name):
    row = [
        name, f"{result.rouge.r1.f1 * 100:.2f}", f"{result.rouge.r2.f1 * 100:.2f}",
        f"{result.rouge.rl.f1 * 100:.2f}", pct(result.pct_faithful),
        pct(result.pct_faithful_or_factual), str(result.docs),
    ]
    return (
        ["selector", "r1", "r2", "rl", "pct_faithful",
         "pct_faithful_or_factual", "docs"],
        [row],
    )


def per_doc_selection_rows(selections):
    rows = [
        [sel.doc_id, sel.chosen_system, f"{sel.chosen_score:.6f}"]
        for sel in selections
    ]
    return ["doc_id", "chosen_system", "chosen_score"], rows


def qa_rows(verdicts, systems):
    table = qa_accuracy(verdicts, systems or None)
    rows = [
        [acc.system_id, str(acc.questions), pct(acc.accuracy)]
        for acc in table.values()
    ]
    return ["system_id", "n_questions", "accuracy"], rows


def qa_verdict_rows(verdicts):
    rows = [
        [v.doc_id, v.system_id, str(v.q_index), escape_field(v.expected_answer),
         escape_field(v.rc_answer), "true" if v.matched else "false"]
        for v in verdicts
    ]
    return (
        ["doc_id", "system_id", "q_index", "expected_answer", "rc_answer",
         "matched"],
        rows,
    )


# -- subcommand handlers --------------------------------------------------------


def cmd_ingest(args) -> str:
    _need(args, "documents", "summaries")
    documents = ingest_documents(args.documents)
    summaries = ingest_summaries(args.summaries, documents=documents)
    lines = [f"documents\t{len(documents)}", f"summaries\t{len(summaries)}"]
    if args.annotations:
        _need(args, "annotations")
        annotations = _load_annots(args, summaries)
        lines += [
            f"spans\t{len(annotations.spans)}",
            f"judgments\t{len(annotations.judgments)}",
            f"participations\t{len(annotations.participations)}",
        ]
        if args.canonical_out:
            export_annotations(annotations, args.canonical_out)
            lines.append(f"wrote\t{args.canonical_out}")
    return "\n".join(lines) + "\n"


def cmd_rouge(args) -> str:
    _need(args, "summaries", "references")
    summaries = ingest_summaries(args.summaries)
    references = _load_references(args.references)
    systems = _systems(args) if args.systems else [args.system] if args.system else []
    header, rows = rouge_rows(summaries, references, systems)
    return tsv_table(header, rows)


def cmd_agreement(args) -> str:
    _need(args, "annotations", "summaries")
    summaries = ingest_summaries(args.summaries)
    header, rows = agreement_rows(_load_annots(args, summaries), summaries)
    return tsv_table(header, rows)


def cmd_hallu_stats(args) -> str:
    _need(args, "annotations", "summaries")
    summaries = ingest_summaries(args.summaries)
    annotations = _load_annots(args, summaries)
    if args.span_stats:
        header, rows = span_rows(annotations, summaries, args.corpus_size)
    elif args.linguistic:
        header, rows = linguistic_rows(annotations, summaries)
    elif args.factual:
        header, rows = factual_rows(annotations, summaries)
    else:
        header, rows = hallu_rows(annotations, summaries, args.union_mode)
    return tsv_table(header, rows)


def cmd_correlate(args) -> str:
    _need(args, "scores", "annotations", "summaries")
    summaries = ingest_summaries(args.summaries)
    annotations = _load_annots(args, summaries)
    metric_scores = load_metric_scores(args.scores)
    header, rows = correlation_rows(metric_scores, annotations, summaries, args.label)
    return tsv_table(header, rows)


def cmd_entail_eval(args) -> str:
    _need(args, "scores", "summaries")
    summaries = ingest_summaries(args.summaries)
    scores = load_scores(args.scores, "entailment")
    if args.annotations:
        _need(args, "annotations")
        annotations = _load_annots(args, summaries)
        annotated = {(d, s) for d, s, _, _ in annotations.participations}
        summaries = [s for s in summaries if (s.doc_id, s.system_id) in annotated]
    header, rows = entail_class_rows(scores, summaries, _systems(args))
    return tsv_table(header, rows)


def cmd_select(args) -> str:
    _need(args, "scores", "summaries", "references", "annotations")
    if not args.systems:
        raise ConfigError("--systems is required")
    summaries = ingest_summaries(args.summaries)
    references = _load_references(args.references)
    annotations = _load_annots(args, summaries)
    scores = load_scores(args.scores, "entailment")
    systems = _systems(args)
    doc_ids = sorted(
        {s.doc_id for s in summaries if s.system_id in systems}
    )
    selections = select_all(scores, doc_ids, systems)
    result = selection_eval(selections, references, summaries, annotations)
    out = tsv_table(*selection_rows(result, "entail"))
    if args.selections_out:
        header, rows = per_doc_selection_rows(selections)
        Path(args.selections_out).write_text(
            tsv_table(header, rows), encoding="utf-8"
        )
        out += f"wrote\t{args.selections_out}\n"
    return out


def cmd_export_finetune(args) -> str:
    _need(args, "annotations", "summaries", "documents", "out")
    documents = ingest_documents(args.documents)
    summaries = ingest_summaries(args.summaries, documents=documents)
    annotations = _load_annots(args, summaries)
    pairs = export_finetune(annotations, summaries, k=args.k, seed=args.seed)
    doc_text = {d.doc_id: d.text for d in documents}
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = "doc_id\tsystem_id\tdocument_text\tsummary_text\tlabel\n"
    written = []
    for fold in range(args.k):
        for split, keep in (("train", lambda p: p.fold != fold),
                            ("eval", lambda p: p.fold == fold)):
            path = out_dir / f"fold{fold}.{split}.tsv"
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(header)
                for p in pairs:
                    if keep(p):
                        handle.write(
                            "\t".join(
                                [p.doc_id, p.system_id,
                                 escape_field(doc_text[p.doc_id]),
                                 escape_field(p.summary_text), p.label]
                            ) + "\n"
                        )
            written.append(str(path))
    return "".join(f"wrote\t{p}\n" for p in written)


def cmd_crossval_eval(args) -> str:
    _need(args, "scores_dir", "summaries", "references", "annotations")
    if not args.systems:
        raise ConfigError("--systems is required")
    summaries = ingest_summaries(args.summaries)
    references = _load_references(args.references)
    annotations = _load_annots(args, summaries)
    fold_scores = {}
    for fold in range(args.k):
        path = Path(args.scores_dir) / f"fold{fold}.tsv"
        if path.exists():
            fold_scores[fold] = load_scores(path, "entailment")
    result = crossval_eval(
        fold_scores, annotations, summaries, references,
        _systems(args), k=args.k, seed=args.seed,
    )
    return tsv_table(*selection_rows(result, "entail_crossval"))


def cmd_qa_eval(args) -> str:
    _need(args, "summaries", "documents")
    documents = ingest_documents(args.documents)
    summaries = ingest_summaries(args.summaries, documents=documents)
    scorer = _qa_scorer(args)
    verdicts = run_roundtrip(
        summaries, documents, scorer, mode=args.match, f1_threshold=args.f1_threshold
    )
    out = tsv_table(*qa_rows(verdicts, _systems(args)))
    if args.verdicts_out:
        Path(args.verdicts_out).write_text(
            tsv_table(*qa_verdict_rows(verdicts)), encoding="utf-8"
        )
        out += f"wrote\t{args.verdicts_out}\n"
    return out


def cmd_serve(args) -> str:
    _need(args, "documents", "summaries")
    documents = ingest_documents(args.documents)
    summaries = ingest_summaries(args.summaries, documents=documents)
    store = AnnotationStore(summaries, documents, data_dir=args.data_dir)
    static = Path(args.static_dir) if args.static_dir else None
    service = AnnotationService(
        store, host=args.host, port=args.port, static_dir=static
    ).start()
    print(service.base_url, flush=True)
    try:
        service.join()
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
    return ""


def cmd_report(args) -> str:
    _need(args, "documents", "summaries", "out")
    documents = ingest_documents(args.documents)
    summaries = ingest_summaries(args.summaries, documents=documents)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    systems = _systems(args) if args.systems else []

    sections: list[tuple[str, str, list[str], list[list[str]]]] = []
    errors: list[tuple[str, FaithEvalError]] = []

    def stage(name, filename, builder):
        try:
            header, rows = builder()
        except FaithEvalError as exc:
            errors.append((name, exc))
            return
        sections.append((name, filename, header, rows))

    references = _load_references(args.references) if args.references else None
    annotations = _load_annots(args, summaries) if args.annotations else None

    if references is not None:
        stage("rouge", "rouge.tsv", lambda: rouge_rows(summaries, references, systems))
    if annotations is not None:
        stage("hallucination", "hallucination.tsv",
              lambda: hallu_rows(annotations, summaries, args.union_mode))
        stage("factuality", "factual.tsv",
              lambda: factual_rows(annotations, summaries))
        stage("span-stats", "span_stats.tsv",
              lambda: span_rows(annotations, summaries, args.corpus_size))
        stage("linguistic", "linguistic.tsv",
              lambda: linguistic_rows(annotations, summaries))
        stage("agreement", "agreement.tsv",
              lambda: agreement_rows(annotations, summaries))
    if args.metric_scores and annotations is not None:
        metric_scores = load_metric_scores(args.metric_scores)
        for label in ("faithful", "factual"):
            stage(f"correlation-{label}", f"correlation_{label}.tsv",
                  lambda label=label: correlation_rows(
                      metric_scores, annotations, summaries, label))
    if args.entail_scores:
        entail_scores = load_scores(args.entail_scores, "entailment")
        stage("entail-classes", "entail_classes.tsv",
              lambda: entail_class_rows(entail_scores, summaries, systems))
        if references is not None and annotations is not None and systems:
            def build_selection():
                doc_ids = sorted(
                    {s.doc_id for s in summaries if s.system_id in systems}
                )
                selections = select_all(entail_scores, doc_ids, systems)
                result = selection_eval(
                    selections, references, summaries, annotations
                )
                return selection_rows(result, "entail")

            stage("selection", "selection.tsv", build_selection)
    if args.qg_file and args.rc_file:
        def build_qa():
            scorer = _qa_scorer(args)
            verdicts = run_roundtrip(
                summaries, documents, scorer,
                mode=args.match, f1_threshold=args.f1_threshold,
            )
            return qa_rows(verdicts, systems)

        stage("qa", "qa.tsv", build_qa)

    manifest = []
    text_report = []
    for name, filename, header, rows in sections:
        (out_dir / filename).write_text(tsv_table(header, rows), encoding="utf-8")
        manifest.append(f"wrote\t{out_dir / filename}")
        text_report.append(f"== {name}\n{aligned_table(header, rows)}")
    (out_dir / "report.txt").write_text("\n".join(text_report), encoding="utf-8")
    manifest.append(f"wrote\t{out_dir / 'report.txt'}")

    for name, exc in errors:
        print(f"report stage {name} failed: {exc}", file=sys.stderr)
    if errors:
        raise errors[0][1]
    return "\n".join(manifest) + "\n"


# -- parser -------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits 2; config problems are exit 1
        raise ConfigError(message)


_SUBPARSERS: dict[str, argparse.ArgumentParser] = {}


def _add(subparsers, name, handler, **kwargs):
    sub = subparsers.add_parser(name, **kwargs)
    sub.set_defaults(handler=handler, command=name)
    sub.add_argument("--config", help="key=value config file; flags override it")
    _SUBPARSERS[name] = sub
    return sub


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="faitheval", description=__doc__)
    subparsers = parser.add_subparsers(dest="command")

    sub = _add(subparsers, "ingest", cmd_ingest,
               help="validate corpus files and print counts")
    sub.add_argument("--documents")
    sub.add_argument("--summaries")
    sub.add_argument("--annotations")
    sub.add_argument("--canonical-out", help="write canonical annotation export")

    sub = _add(subparsers, "rouge", cmd_rouge, help="reference overlap per system")
    sub.add_argument("--system", help="restrict to one system")
    sub.add_argument("--systems", help="comma-separated system list")
    sub.add_argument("--summaries")
    sub.add_argument("--references")

    sub = _add(subparsers, "agreement", cmd_agreement,
               help="inter-annotator kappa per system and task")
    sub.add_argument("--annotations")
    sub.add_argument("--summaries")

    sub = _add(subparsers, "hallu-stats", cmd_hallu_stats,
               help="hallucination rates, span stats, linguistic issues")
    sub.add_argument("--annotations")
    sub.add_argument("--summaries")
    sub.add_argument("--span-stats", action="store_true")
    sub.add_argument("--linguistic", action="store_true")
    sub.add_argument("--factual", action="store_true")
    sub.add_argument("--union-mode", choices=["doc_or", "word_any"],
                     default="doc_or")
    sub.add_argument("--corpus-size", type=int)

    sub = _add(subparsers, "correlate", cmd_correlate,
               help="rank correlation of metric scores with human labels")
    sub.add_argument("--scores", help="TSV: doc_id, system_id, <metric>...")
    sub.add_argument("--annotations")
    sub.add_argument("--summaries")
    sub.add_argument("--label", choices=["faithful", "factual"],
                     default="faithful")

    sub = _add(subparsers, "entail-eval", cmd_entail_eval,
               help="entailment class distribution per system")
    sub.add_argument("--scores")
    sub.add_argument("--summaries")
    sub.add_argument("--annotations", help="restrict to annotated pairs")
    sub.add_argument("--systems")

    sub = _add(subparsers, "select", cmd_select,
               help="entailment-argmax summary selection")
    sub.add_argument("--scores")
    sub.add_argument("--summaries")
    sub.add_argument("--references")
    sub.add_argument("--annotations")
    sub.add_argument("--systems")
    sub.add_argument("--selections-out", help="per-doc selections TSV")

    sub = _add(subparsers, "export-finetune", cmd_export_finetune,
               help="faithful/hallucinated pairs as entailment folds")
    sub.add_argument("--annotations")
    sub.add_argument("--summaries")
    sub.add_argument("--documents")
    sub.add_argument("--k", type=int, default=5)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out")

    sub = _add(subparsers, "crossval-eval", cmd_crossval_eval,
               help="selection over per-fold held-out score files")
    sub.add_argument("--scores-dir", help="directory of fold<i>.tsv files")
    sub.add_argument("--summaries")
    sub.add_argument("--references")
    sub.add_argument("--annotations")
    sub.add_argument("--systems")
    sub.add_argument("--k", type=int, default=5)
    sub.add_argument("--seed", type=int, default=0)

    sub = _add(subparsers, "qa-eval", cmd_qa_eval,
               help="question round-trip accuracy per system")
    sub.add_argument("--summaries")
    sub.add_argument("--documents")
    sub.add_argument("--qg-file")
    sub.add_argument("--rc-file")
    sub.add_argument("--live", action="store_true",
                     help="use endpoints from the environment")
    sub.add_argument("--systems")
    sub.add_argument("--match", choices=["exact", "token_f1"], default="exact")
    sub.add_argument("--f1-threshold", type=float, default=0.5)
    sub.add_argument("--verdicts-out")

    sub = _add(subparsers, "serve", cmd_serve, help="run the annotation service")
    sub.add_argument("--documents")
    sub.add_argument("--summaries")
    sub.add_argument("--data-dir")
    sub.add_argument("--static-dir")
    sub.add_argument("--host", default="127.0.0.1")
    sub.add_argument("--port", type=int, default=8041)

    sub = _add(subparsers, "report", cmd_report,
               help="emit every table the inputs allow, plus report.txt")
    sub.add_argument("--documents")
    sub.add_argument("--summaries")
    sub.add_argument("--references")
    sub.add_argument("--annotations")
    sub.add_argument("--metric-scores")
    sub.add_argument("--entail-scores")
    sub.add_argument("--qg-file")
    sub.add_argument("--rc-file")
    sub.add_argument("--live", action="store_true")
    sub.add_argument("--systems")
    sub.add_argument("--union-mode", choices=["doc_or", "word_any"],
                     default="doc_or")
    sub.add_argument("--corpus-size", type=int)
    sub.add_argument("--match", choices=["exact", "token_f1"], default="exact")
    sub.add_argument("--f1-threshold", type=float, default=0.5)
    sub.add_argument("--out")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--k", type=int, default=5)

    return parser


def _config_defaults(command: str, values: dict[str, str]) -> dict:
    """Convert config-file strings using each flag's argparse type."""
    sub = _SUBPARSERS[command]
    known = {action.dest: action for action in sub._actions}
    defaults = {}
    for key, raw in values.items():
        action = known.get(key)
        if action is None:
            raise ConfigError(f"unknown config key {key!r} for {command}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes")
        elif action.type is not None:
            try:
                defaults[key] = action.type(raw)
            except ValueError:
                raise ConfigError(
                    f"bad value for config key {key!r}: {raw!r}"
                ) from None
        else:
            defaults[key] = raw
    return defaults


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "command", None) is None:
            parser.print_help()
            return 1
        if getattr(args, "config", None):
            defaults = _config_defaults(args.command, load_config(args.config))
            _SUBPARSERS[args.command].set_defaults(**defaults)
            args = parser.parse_args(argv)
        output = args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ScorerError as exc:
        print(f"scorer error: {exc}", file=sys.stderr)
        return 3
    except FaithEvalError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    if output:
        sys.stdout.write(output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
