"""Command-line pipeline: extract -> weight -> train -> eval, plus run-all.

Every flag has a config-file equivalent (a flat "key=value" file whose keys
are the config field names); flags override the file, which overrides the
defaults.  Diagnostics go to stderr, data to files in the output directory.
Defaults match the reference settings of the method; small corpora need
--min-pair-sent lowered explicitly.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from dataclasses import dataclass
from typing import Callable

from . import analogy, corpus, figures, training, weighting
from .graph import ParseError, PatternKind, load_graph, read_pattern_file, save_graph, write_pattern_file

log = logging.getLogger("relgraph")

COUNTS_FILE = "counts.tsv"
PATTERNS_FILE = "patterns.tsv"
GRAPH_EDGES_FILE = "graph-edges.tsv"
GRAPH_PATTERNS_FILE = "graph-patterns.tsv"
EMBEDDINGS_FILE = "embeddings.txt"
MATRICES_FILE = "matrices.txt"
CHECKPOINT_FILE = "checkpoint.txt"
LOSS_LOG_FILE = "loss.tsv"
LOSS_FIGURE_FILE = "loss.png"
REPORT_TSV_FILE = "report.tsv"
REPORT_TEXT_FILE = "report.txt"
REPORT_FIGURE_FILE = "report.png"


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    corpus: str | None = None
    conll: str | None = None
    kind: str = "lex"
    min_pair_sentences: int = 100
    max_affix: int = 3
    min_pattern_pairs: int = 2
    measure: str = "raw"
    dim: int = 200
    epochs: int = 100
    eta0: float = 0.0001
    delta: float = 0.001
    seed: int = 1
    shuffle: bool = True
    max_sentence_len: int = 128
    lowercase: bool = False
    questions: str | None = None
    out: str = "relgraph-out"
    category_prefix: str = ""
    threads: int = 1
    force: bool = False

    def validate(self) -> "PipelineConfig":
        try:
            PatternKind.from_name(self.kind)
            weighting.WeightMeasure.from_name(self.measure)
            training.HyperParams(
                dim=self.dim, epochs=self.epochs, eta0=self.eta0,
                delta=self.delta, seed=self.seed, shuffle=self.shuffle,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.min_pair_sentences < 1:
            raise ConfigError(f"min_pair_sentences must be >= 1, got {self.min_pair_sentences}")
        if self.max_affix < 0:
            raise ConfigError(f"max_affix must be >= 0, got {self.max_affix}")
        if self.min_pattern_pairs < 1:
            raise ConfigError(f"min_pattern_pairs must be >= 1, got {self.min_pattern_pairs}")
        if self.max_sentence_len < 1:
            raise ConfigError(f"max_sentence_len must be >= 1, got {self.max_sentence_len}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        return self

    def hyper_params(self) -> training.HyperParams:
        return training.HyperParams(
            dim=self.dim, epochs=self.epochs, eta0=self.eta0,
            delta=self.delta, seed=self.seed, shuffle=self.shuffle,
        )

    def path(self, filename: str) -> str:
        return os.path.join(self.out, filename)


_BOOL_VALUES = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def parse_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as handle:
            for lineno, raw in enumerate(handle, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, value = line.split("=", 1)
                values[key.strip()] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    return values


def build_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig()
    fields = {f.name: f for f in dataclasses.fields(PipelineConfig)}
    if args.config:
        for key, text in parse_config_file(args.config).items():
            if key not in fields:
                raise ConfigError(f"unknown config key {key!r}")
            kind = fields[key].type
            try:
                if kind == "bool":
                    if text.lower() not in _BOOL_VALUES:
                        raise ValueError(f"expected a boolean, got {text!r}")
                    value = _BOOL_VALUES[text.lower()]
                elif kind == "int":
                    value = int(text)
                elif kind == "float":
                    value = float(text)
                else:
                    value = text
            except ValueError as exc:
                raise ConfigError(f"config key {key}: {exc}") from None
            setattr(config, key, value)
    overrides = {
        "corpus": args.corpus,
        "conll": args.conll,
        "kind": args.kind,
        "min_pair_sentences": args.min_pair_sent,
        "max_affix": args.max_affix,
        "min_pattern_pairs": args.min_pattern_pairs,
        "measure": args.measure,
        "dim": args.dim,
        "epochs": args.epochs,
        "eta0": args.eta0,
        "delta": args.delta,
        "seed": args.seed,
        "max_sentence_len": args.max_sentence_len,
        "questions": args.questions,
        "out": args.out,
        "category_prefix": args.category_prefix,
        "threads": args.threads,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, value)
    if args.no_shuffle:
        config.shuffle = False
    if args.lowercase:
        config.lowercase = True
    if args.force:
        config.force = True
    return config.validate()


def _log_effective_config(config: PipelineConfig) -> None:
    pairs = " ".join(
        f"{f.name}={getattr(config, f.name)}" for f in dataclasses.fields(PipelineConfig)
    )
    log.info("config: %s", pairs)


def _corpus_reader(config: PipelineConfig) -> tuple[str, Callable]:
    """Pick the input file and reader for the configured pattern kind."""
    kind = PatternKind.from_name(config.kind)
    if kind is PatternKind.DEP:
        if not config.conll:
            raise ConfigError("dependency input required: kind=dep needs --conll")
        return config.conll, corpus.read_conll_corpus
    if config.corpus:
        return config.corpus, corpus.read_vertical_corpus
    if config.conll:
        return config.conll, corpus.read_conll_corpus
    raise ConfigError("no corpus given: provide --corpus or --conll")


def _outputs_fresh(config: PipelineConfig, inputs: list[str], outputs: list[str]) -> bool:
    if config.force:
        return False
    if not all(os.path.exists(p) for p in outputs):
        return False
    newest_input = max(os.path.getmtime(p) for p in inputs)
    oldest_output = min(os.path.getmtime(p) for p in outputs)
    return oldest_output >= newest_input


def cmd_extract(config: PipelineConfig) -> None:
    """Read the corpus twice (pair pass, then counting pass) and write counts."""
    path, reader = _corpus_reader(config)
    kind = PatternKind.from_name(config.kind)
    with open(path, encoding="utf-8") as stream:
        pairs = corpus.generate_pairs(
            reader(stream, lowercase=config.lowercase), config.min_pair_sentences
        )
    log.info("extract: %d ordered pairs admitted (threshold > %d sentences)",
             len(pairs), config.min_pair_sentences)
    sentences = 0

    def counted(stream):
        nonlocal sentences
        for sentence in reader(stream, lowercase=config.lowercase):
            sentences += 1
            yield sentence

    with open(path, encoding="utf-8") as stream:
        counts = corpus.accumulate_counts(
            counted(stream), pairs, kind,
            max_affix=config.max_affix, max_sentence_len=config.max_sentence_len,
        )
    filtered = corpus.filter_patterns(counts, config.min_pattern_pairs)
    patterns_before = len(counts.patterns)
    patterns_after = len({label for (_, _, label) in filtered.counts})
    os.makedirs(config.out, exist_ok=True)
    with open(config.path(COUNTS_FILE), "w", encoding="utf-8") as out:
        corpus.save_counts(filtered, out)
    with open(config.path(PATTERNS_FILE), "w", encoding="utf-8") as out:
        write_pattern_file(filtered.patterns, out)
    log.info(
        "extract: %d sentences read, %d triples kept; patterns %d before filter, %d after",
        sentences, len(filtered), patterns_before, patterns_after,
    )


def cmd_weight(config: PipelineConfig) -> None:
    measure = weighting.WeightMeasure.from_name(config.measure)
    with open(config.path(PATTERNS_FILE), encoding="utf-8") as stream:
        patterns = read_pattern_file(stream)
    with open(config.path(COUNTS_FILE), encoding="utf-8") as stream:
        counts = corpus.load_counts(stream, patterns)
    graph = weighting.build_graph(counts, measure)
    dropped = len(counts) - graph.num_edges
    os.makedirs(config.out, exist_ok=True)
    with open(config.path(GRAPH_EDGES_FILE), "w", encoding="utf-8") as edges_out, open(
        config.path(GRAPH_PATTERNS_FILE), "w", encoding="utf-8"
    ) as patterns_out:
        save_graph(graph, edges_out, patterns_out)
    log.info(
        "weight: measure=%s, %d edges written, %d non-positive triples dropped",
        measure.value, graph.num_edges, dropped,
    )
    if graph.num_edges == 0:
        log.warning("weight: the graph is empty under measure %s", measure.value)


def cmd_train(config: PipelineConfig) -> None:
    with open(config.path(GRAPH_EDGES_FILE), encoding="utf-8") as edges_in, open(
        config.path(GRAPH_PATTERNS_FILE), encoding="utf-8"
    ) as patterns_in:
        graph = load_graph(edges_in, patterns_in)
    if len(graph.vocab) == 0:
        raise ConfigError("the graph is empty; nothing to train on")
    params = config.hyper_params()
    os.makedirs(config.out, exist_ok=True)
    with open(config.path(LOSS_LOG_FILE), "w", encoding="utf-8") as loss_log:
        loss_log.write("epoch\tloss\tseconds\n")

        def progress(epoch: int, loss: float, seconds: float) -> None:
            loss_log.write(f"{epoch}\t{loss!r}\t{seconds:.3f}\n")
            loss_log.flush()
            if epoch and (epoch % 10 == 0 or epoch == params.epochs):
                log.info("train: epoch %d loss %.6g (%.2fs)", epoch, loss, seconds)

        model, report = training.train(graph, params, progress=progress)
    with open(config.path(EMBEDDINGS_FILE), "w", encoding="utf-8") as out:
        training.export_embeddings(model, graph.vocab, out)
    with open(config.path(MATRICES_FILE), "w", encoding="utf-8") as out:
        training.export_pattern_matrices(model, out)
    with open(config.path(CHECKPOINT_FILE), "w", encoding="utf-8") as out:
        training.save_checkpoint(model, graph.vocab, out)
    figures.save_loss_curve(report.initial_loss, report.epoch_losses, config.path(LOSS_FIGURE_FILE))
    log.info(
        "train: %d epochs, loss %.6g -> %.6g", params.epochs, report.initial_loss, report.final_loss
    )


def cmd_eval(config: PipelineConfig) -> None:
    if not config.questions:
        raise ConfigError("no question file given: provide --questions")
    with open(config.path(EMBEDDINGS_FILE), encoding="utf-8") as stream:
        embeddings = analogy.EmbeddingSet.load(stream)
    with open(config.questions, encoding="utf-8") as stream:
        questions = analogy.load_questions(stream)
    if config.category_prefix:
        questions = [q for q in questions if q.category.startswith(config.category_prefix)]
    report = analogy.evaluate(questions, embeddings, threads=config.threads)
    os.makedirs(config.out, exist_ok=True)
    with open(config.path(REPORT_TSV_FILE), "w", encoding="utf-8") as out:
        analogy.write_report_tsv(report, out)
    with open(config.path(REPORT_TEXT_FILE), "w", encoding="utf-8") as out:
        out.write(analogy.format_report_text(report))
    figures.save_accuracy_chart(report, config.path(REPORT_FIGURE_FILE))
    if report.no_valid_questions:
        log.warning("eval: no valid questions (all words out of vocabulary?)")
    log.info(
        "eval: %d attempted, %d correct, accuracy %.4f, %d skipped",
        report.attempted, report.correct, report.accuracy, report.skipped,
    )


def cmd_run_all(config: PipelineConfig) -> None:
    corpus_path, _ = _corpus_reader(config)
    stages = [
        ("extract", cmd_extract, [corpus_path],
         [config.path(COUNTS_FILE), config.path(PATTERNS_FILE)]),
        ("weight", cmd_weight,
         [config.path(COUNTS_FILE), config.path(PATTERNS_FILE)],
         [config.path(GRAPH_EDGES_FILE), config.path(GRAPH_PATTERNS_FILE)]),
        ("train", cmd_train,
         [config.path(GRAPH_EDGES_FILE), config.path(GRAPH_PATTERNS_FILE)],
         [config.path(EMBEDDINGS_FILE), config.path(MATRICES_FILE),
          config.path(CHECKPOINT_FILE)]),
    ]
    if config.questions:
        stages.append(
            ("eval", cmd_eval,
             [config.path(EMBEDDINGS_FILE), config.questions],
             [config.path(REPORT_TSV_FILE), config.path(REPORT_TEXT_FILE)]),
        )
    else:
        raise ConfigError("run-all needs --questions for the evaluation stage")
    for name, stage, inputs, outputs in stages:
        if _outputs_fresh(config, inputs, outputs):
            log.info("%s: outputs up to date, skipping (use --force to rerun)", name)
            continue
        stage(config)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relgraph",
        description="Build relational graphs from annotated corpora, train word "
        "embeddings on them, and evaluate on word analogies.",
    )
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--corpus", help="vertical corpus file (surface<TAB>lemma<TAB>pos)")
    shared.add_argument("--conll", help="CoNLL-style dependency-parsed corpus file")
    shared.add_argument("--kind", choices=["lex", "pos", "dep"], help="pattern kind (default lex)")
    shared.add_argument("--min-pair-sent", type=int, metavar="N",
                        help="admit pairs co-occurring in more than N sentences (default 100)")
    shared.add_argument("--max-affix", type=int, metavar="N",
                        help="max prefix/midfix/suffix length in tokens (default 3)")
    shared.add_argument("--min-pattern-pairs", type=int, metavar="N",
                        help="keep patterns seen with at least N distinct pairs (default 2)")
    shared.add_argument("--measure", choices=[m.value for m in weighting.WeightMeasure],
                        help="edge weighting measure (default raw)")
    shared.add_argument("--dim", type=int, metavar="N", help="embedding dimensionality (default 200)")
    shared.add_argument("--epochs", type=int, metavar="N", help="training epochs (default 100)")
    shared.add_argument("--eta0", type=float, metavar="F", help="initial learning rate (default 0.0001)")
    shared.add_argument("--delta", type=float, metavar="F",
                        help="diagonal shift added to each pattern matrix after updates (default 0.001)")
    shared.add_argument("--seed", type=int, metavar="N", help="random seed (default 1)")
    shared.add_argument("--no-shuffle", action="store_true",
                        help="visit edges in insertion order instead of shuffling per epoch")
    shared.add_argument("--max-sentence-len", type=int, metavar="N",
                        help="skip sentences longer than N tokens during extraction (default 128)")
    shared.add_argument("--questions", metavar="PATH", help="analogy question file")
    shared.add_argument("--out", metavar="DIR", help="output directory (default relgraph-out)")
    shared.add_argument("--config", metavar="PATH", help="flat key=value config file")
    shared.add_argument("--category-prefix", metavar="STR",
                        help="evaluate only categories starting with this prefix")
    shared.add_argument("--threads", type=int, metavar="N",
                        help="worker threads for evaluation (default 1)")
    shared.add_argument("--lowercase", action="store_true", help="lowercase the corpus while reading")
    shared.add_argument("--force", action="store_true", help="rerun stages even if outputs are fresh")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("extract", parents=[shared], help="generate pairs, extract patterns, write counts")
    commands.add_parser("weight", parents=[shared], help="turn counts into a weighted graph")
    commands.add_parser("train", parents=[shared], help="learn word vectors and pattern matrices")
    commands.add_parser("eval", parents=[shared], help="answer analogy questions and write reports")
    commands.add_parser("run-all", parents=[shared], help="extract, weight, train, and eval in sequence")
    return parser


_COMMANDS = {
    "extract": cmd_extract,
    "weight": cmd_weight,
    "train": cmd_train,
    "eval": cmd_eval,
    "run-all": cmd_run_all,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = build_config(args)
    except ConfigError as exc:
        print(f"relgraph: config error: {exc}", file=sys.stderr)
        return 2
    _log_effective_config(config)
    try:
        _COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"relgraph: config error: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"relgraph: parse error: {exc}", file=sys.stderr)
        return 1
    except training.TrainingDivergedError as exc:
        print(f"relgraph: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"relgraph: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
