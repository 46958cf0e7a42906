"""The forge command line.

Subcommands compose through files only: synth writes a corpus plus gold
alignments, preprocess normalizes and filters it, align trains/extracts/
scores the content aligner, gen trains and decodes generators, and eval
scores outputs with BLEU-4. Every run derives all randomness from one seed
and writes a manifest tying configuration, input hashes, outputs, and
metrics together.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import aligner as al
from . import checkpoint as ckpt
from . import config as cfgmod
from . import corpus as cps
from . import evaluation as ev
from . import generator as gen
from . import multitask as mtl
from . import reinforce as rl
from . import report as rep
from . import templates as tpl
from .autodiff import NumericError

log = logging.getLogger("forge")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


def _hash_files(paths) -> dict[str, str]:
    out = {}
    for p in paths:
        if p and Path(p).exists():
            out[str(p)] = cps.content_hash(p)
    return out


def _manifest(primary_output: str, payload: dict) -> None:
    rep.write_manifest(str(primary_output) + ".manifest.json", payload)


def _seed_from(args, cfg: dict, default: int = 1) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    return int(cfg.get("seed", default))


# --- synth ----------------------------------------------------------------


def cmd_synth(args) -> int:
    cfg = cfgmod.load_config(args.config)
    seed = _seed_from(args, cfg, default=7)
    synth_cfg = cfg.get("synth", {})
    distractor = args.distractor_rate
    if distractor is None:
        distractor = float(synth_cfg.get("distractor_rate", 0.3))
    dropout = args.dropout_rate
    if dropout is None:
        dropout = float(synth_cfg.get("dropout_rate", 0.25))
    spec = cps.default_spec(distractor_rate=distractor, dropout_rate=dropout)
    triples = cps.generate_synthetic_corpus(seed, args.n, spec)
    cps.write_corpus(args.out_corpus, [(p, d) for p, d, _ in triples])
    cps.write_alignments(args.out_gold, [a for _, _, a in triples])
    stats = cps.corpus_stats([(p, d) for p, d, _ in triples])
    log.info("synthetic corpus: %d entities -> %s", args.n, args.out_corpus)
    _manifest(
        args.out_corpus,
        {
            "command": "synth",
            "seed": seed,
            "config": {
                "n": args.n,
                "distractor_rate": distractor,
                "dropout_rate": dropout,
            },
            "inputs": {},
            "outputs": _hash_files([args.out_corpus, args.out_gold]),
            "metrics": dict(stats.rows()),
        },
    )
    return EXIT_OK


# --- preprocess -------------------------------------------------------------


def cmd_preprocess(args) -> int:
    cfg = cfgmod.load_config(args.filter_config)
    limits = cfgmod.build_filter_limits(cfg, kind=args.kind)
    records = cps.read_corpus(args.infile)
    if not records:
        raise cps.CorpusError(f"{args.infile}: empty corpus")
    processed = cps.preprocess_corpus(records, limits)
    cps.write_corpus(args.out, processed)
    stats = cps.corpus_stats(processed)
    log.info(
        "preprocess: %d -> %d records; %s", len(records), len(processed), args.out
    )
    if args.stats:
        for key, value in stats.rows():
            print(f"{key}\t{value}")
    _manifest(
        args.out,
        {
            "command": "preprocess",
            "seed": None,
            "config": {"kind": args.kind, "filters": vars(limits)},
            "inputs": _hash_files([args.infile]),
            "outputs": _hash_files([args.out]),
            "metrics": dict(stats.rows()),
        },
    )
    return EXIT_OK


# --- align ------------------------------------------------------------------


def _prepare_aligner_corpus(path: str, cfg: dict):
    records = cps.read_corpus(path)
    if not records:
        raise cps.CorpusError(f"{path}: empty corpus")
    caps = cfgmod.build_vocab_caps(cfg, kind="aligner")
    vocabs = cps.build_vocabularies(records, caps)
    limits = cfgmod.build_filter_limits(cfg, kind="aligner")
    records = cps.filter_corpus(records, limits, vocabs[0], vocabs[1])
    return records, vocabs


def cmd_align_train(args) -> int:
    cfg = cfgmod.load_config(args.config)
    seed = _seed_from(args, cfg)
    acfg = cfgmod.build_aligner_config(cfg, seed=seed)
    records, vocabs = _prepare_aligner_corpus(args.corpus, cfg)
    rng = np.random.default_rng(acfg.seed)
    model = al.ContentAligner(vocabs[0], vocabs[1], acfg, rng)
    train, dev = al.split_dev(records, acfg.dev_frac, acfg.seed)
    history = al.train_aligner(model, train, rng)

    dev_scores = al.collect_dev_scores(model, dev)
    gold = cps.read_alignments(args.gold) if args.gold else None
    metrics: dict[str, float] = {"final_margin_loss": history[-1]}
    if acfg.abs_threshold is not None:
        model.threshold = acfg.abs_threshold
        model.threshold_coef_used = None
    elif gold:
        coef, threshold, dev_f = al.tune_threshold_coef(model, dev, gold)
        model.threshold = threshold
        model.threshold_coef_used = coef
        metrics["dev_macro_f"] = dev_f
        metrics["threshold_coef"] = coef
    else:
        model.threshold = al.calibrate_threshold(dev_scores, acfg.threshold_coef)
        model.threshold_coef_used = acfg.threshold_coef
    metrics["threshold"] = model.threshold

    if gold:
        pairs = []
        for pset, doc in dev:
            pred = al.extract_alignments(model, pset, doc, model.threshold)
            pairs.append((pred, gold.get(pset.entity_id, cps.AlignmentSet(pset.entity_id))))
        p, r, f = al.alignment_fscore(pairs)
        metrics.update({"dev_precision": p, "dev_recall": r, "dev_f": f})
        all_sents = [s for _, doc in records for s in doc.sentences]
        eval_pairs = [
            (pset, doc.sentences[si])
            for pset, doc in dev
            for si in sorted({s for (s, _, _) in gold.get(pset.entity_id, cps.AlignmentSet(pset.entity_id)).links})
        ]
        if len(all_sents) >= 15 and eval_pairs:
            metrics["dev_rank_at_15"] = al.mean_rank_at_15(
                model, eval_pairs, all_sents, np.random.default_rng(acfg.seed + 1)
            )

    ckpt.save_aligner(args.out_checkpoint, model)
    log.info("aligner checkpoint -> %s", args.out_checkpoint)
    outputs = [args.out_checkpoint]
    if args.report:
        report_dir = Path(args.report)
        report_dir.mkdir(parents=True, exist_ok=True)
        rep.write_tsv(
            report_dir / "align_train_loss.tsv",
            ["epoch", "margin_loss"],
            [[i + 1, f"{v:.6f}"] for i, v in enumerate(history)],
        )
        rep.save_loss_curves({"margin loss": history}, report_dir / "align_train_loss.png")
        rep.save_similarity_histogram(
            dev_scores, model.threshold, report_dir / "align_dev_similarities.png"
        )
        rep.write_tsv(
            report_dir / "align_train_metrics.tsv",
            ["metric", "value"],
            [[k, v] for k, v in sorted(metrics.items())],
        )
        outputs += [
            str(report_dir / "align_train_loss.tsv"),
            str(report_dir / "align_train_loss.png"),
            str(report_dir / "align_dev_similarities.png"),
            str(report_dir / "align_train_metrics.tsv"),
        ]
    _manifest(
        args.out_checkpoint,
        {
            "command": "align train",
            "seed": acfg.seed,
            "config": {"aligner": vars(acfg) | {"tune_coef_grid": list(acfg.tune_coef_grid)}},
            "inputs": _hash_files([args.corpus, args.gold, args.config]),
            "outputs": _hash_files(outputs),
            "metrics": metrics,
        },
    )
    return EXIT_OK


def cmd_align_extract(args) -> int:
    model = ckpt.load_aligner(args.checkpoint)
    threshold = args.threshold if args.threshold is not None else model.threshold
    if threshold is None:
        raise cps.CorpusError(
            "checkpoint has no calibrated threshold; pass --threshold"
        )
    records = cps.read_corpus(args.corpus)
    alignment_sets = [
        al.extract_alignments(model, pset, doc, threshold) for pset, doc in records
    ]
    cps.write_alignments(args.out, alignment_sets)
    n_links = sum(len(a) for a in alignment_sets)
    log.info("extracted %d links over %d records -> %s", n_links, len(records), args.out)
    _manifest(
        args.out,
        {
            "command": "align extract",
            "seed": None,
            "config": {"threshold": threshold},
            "inputs": _hash_files([args.checkpoint, args.corpus]),
            "outputs": _hash_files([args.out]),
            "metrics": {"links": n_links, "records": len(records)},
        },
    )
    return EXIT_OK


def cmd_align_score(args) -> int:
    gold = cps.read_alignments(args.gold)
    records = cps.read_corpus(args.corpus)
    if args.pred:
        pred = cps.read_alignments(args.pred)
        source = args.pred
    elif args.checkpoint:
        model = ckpt.load_aligner(args.checkpoint)
        threshold = args.threshold if args.threshold is not None else model.threshold
        if threshold is None:
            raise cps.CorpusError("checkpoint has no threshold; pass --threshold")
        pred = {
            pset.entity_id: al.extract_alignments(model, pset, doc, threshold)
            for pset, doc in records
        }
        source = args.checkpoint
    else:
        raise cps.CorpusError("align score needs --pred or --checkpoint")
    pairs = []
    for pset, _ in records:
        eid = pset.entity_id
        pairs.append(
            (
                pred.get(eid, cps.AlignmentSet(eid)),
                gold.get(eid, cps.AlignmentSet(eid)),
            )
        )
    p, r, f = al.alignment_fscore(pairs)
    metrics = {"precision": p, "recall": r, "macro_f": f}
    print(f"precision\t{p:.4f}")
    print(f"recall\t{r:.4f}")
    print(f"macro_f\t{f:.4f}")
    outputs = []
    if args.report:
        report_dir = Path(args.report)
        report_dir.mkdir(parents=True, exist_ok=True)
        rep.write_tsv(
            report_dir / "align_score.tsv",
            ["metric", "value"],
            [[k, f"{v:.6f}"] for k, v in metrics.items()],
        )
        rep.save_metric_bars(metrics, report_dir / "align_score.png", ylabel="score")
        outputs = [str(report_dir / "align_score.tsv"), str(report_dir / "align_score.png")]
        _manifest(
            str(report_dir / "align_score.tsv"),
            {
                "command": "align score",
                "seed": None,
                "config": {},
                "inputs": _hash_files([args.corpus, args.gold, source]),
                "outputs": _hash_files(outputs),
                "metrics": metrics,
            },
        )
    return EXIT_OK


# --- gen ---------------------------------------------------------------------


def _prepare_generator_corpus(path: str, cfg: dict):
    records = cps.read_corpus(path)
    if not records:
        raise cps.CorpusError(f"{path}: empty corpus")
    caps = cfgmod.build_vocab_caps(cfg, kind="generator")
    vocabs = cps.build_vocabularies(records, caps)
    limits = cfgmod.build_filter_limits(cfg, kind="generator")
    records = cps.filter_corpus(records, limits, vocabs[0], vocabs[1])
    return records, vocabs


def _generator_examples(model, records, alignments=None):
    examples = []
    for ridx, (pset, doc) in enumerate(records):
        pv_ids = model.property_input_ids(pset)
        target = model.target_ids(pset, doc)
        labels = None
        if alignments is not None:
            aset = alignments.get(pset.entity_id, cps.AlignmentSet(pset.entity_id))
            labels = mtl.derive_labels(doc, aset)
        examples.append((ridx, pv_ids, target, labels))
    return examples


def cmd_gen_train(args) -> int:
    cfg = cfgmod.load_config(args.config)
    seed = _seed_from(args, cfg)
    records, vocabs = _prepare_generator_corpus(args.corpus, cfg)
    alignments = cps.read_alignments(args.alignments) if args.alignments else None
    if args.mode == "mtl" and alignments is None:
        raise cps.CorpusError("gen train --mode mtl requires --alignments")
    if args.mode == "rl" and not args.init_checkpoint:
        raise cps.CorpusError("gen train --mode rl requires --init-checkpoint")
    if args.mode == "rl" and alignments is None:
        raise cps.CorpusError("gen train --mode rl requires --alignments")

    gcfg = cfgmod.build_generator_config(cfg, mode=args.mode, seed=seed)
    rng = np.random.default_rng(gcfg.seed)

    metrics: dict[str, float] = {}
    curves: dict[str, list[float]] = {}
    if args.mode in ("base", "mtl"):
        model = gen.Seq2SeqGenerator(vocabs[0], vocabs[1], gcfg, rng)
        examples = _generator_examples(
            model, records, alignments if args.mode == "mtl" else None
        )
        lam_fn = None
        if args.mode == "mtl":
            lam_fn = lambda epoch: mtl.lambda_for_epoch(gcfg.lambda_schedule, epoch)
        history = gen.train_generator(model, examples, rng, lam_fn)
        for key in history[-1]:
            curves[key] = [h[key] for h in history]
            metrics[f"final_{key}"] = history[-1][key]
        ckpt.save_generator(args.out_checkpoint, model, {"mode": args.mode})
    else:
        model = ckpt.load_generator(args.init_checkpoint)
        rlcfg = cfgmod.build_rl_config(cfg, seed=seed)
        model.config.block_size = rlcfg.block_size
        examples = []
        for ridx, (pset, doc) in enumerate(records):
            aset = alignments.get(pset.entity_id)
            if aset is None:
                continue
            for sent_idx, word_idx, prop_idx in aset.links:
                if sent_idx < len(doc.sentences) and word_idx < len(doc.sentences[sent_idx]):
                    aset.word_surfaces[(sent_idx, word_idx)] = doc.sentences[sent_idx][word_idx]
            examples.append(
                (
                    ridx,
                    model.property_input_ids(pset),
                    model.target_ids(pset, doc),
                    aset.aligned_words(),
                )
            )
        if not examples:
            raise cps.CorpusError("no records with alignments for rl training")
        history = rl.train_rl(model, examples, rlcfg, rng)
        curves["reward"] = [h["reward"] for h in history]
        curves["prefix_nll"] = [h["prefix_nll"] for h in history]
        metrics["final_reward"] = history[-1]["reward"]
        ckpt.save_generator(args.out_checkpoint, model, {"mode": "rl"})

    log.info("generator checkpoint -> %s", args.out_checkpoint)
    outputs = [args.out_checkpoint]
    if args.report:
        report_dir = Path(args.report)
        report_dir.mkdir(parents=True, exist_ok=True)
        prefix = f"gen_train_{args.mode}"
        rep.write_tsv(
            report_dir / f"{prefix}_curves.tsv",
            ["epoch"] + list(curves),
            [
                [i + 1] + [f"{curves[k][i]:.6f}" for k in curves]
                for i in range(len(next(iter(curves.values()))))
            ],
        )
        rep.save_loss_curves(curves, report_dir / f"{prefix}_curves.png", ylabel="value")
        outputs += [
            str(report_dir / f"{prefix}_curves.tsv"),
            str(report_dir / f"{prefix}_curves.png"),
        ]
    _manifest(
        args.out_checkpoint,
        {
            "command": f"gen train --mode {args.mode}",
            "seed": seed,
            "config": {"generator": vars(gcfg) | {"lambda_schedule": [list(x) for x in gcfg.lambda_schedule]}},
            "inputs": _hash_files(
                [args.corpus, args.alignments, args.init_checkpoint, args.config]
            ),
            "outputs": _hash_files(outputs),
            "metrics": metrics,
        },
    )
    return EXIT_OK


def cmd_gen_decode(args) -> int:
    model = ckpt.load_generator(args.checkpoint)
    records = cps.read_corpus(args.infile)
    rng = np.random.default_rng(args.seed if args.seed is not None else 1)
    texts = []
    unmapped_total = 0
    for pset, doc in records:
        ids = gen.generate(
            model,
            model.property_input_ids(pset),
            rng=rng,
            max_len=args.max_len,
            mode=args.mode,
        )
        tokens = model.output_vocab.decode(ids)
        tokens, unmapped = cps.relexicalise(tokens, doc.delex_map)
        unmapped_total += unmapped
        texts.append((pset.entity_id, tokens))
    cps.write_texts(args.out, texts)
    log.info(
        "decoded %d records (%d unmapped slot tokens) -> %s",
        len(texts),
        unmapped_total,
        args.out,
    )
    _manifest(
        args.out,
        {
            "command": "gen decode",
            "seed": args.seed,
            "config": {"mode": args.mode, "max_len": args.max_len},
            "inputs": _hash_files([args.checkpoint, args.infile]),
            "outputs": _hash_files([args.out]),
            "metrics": {"records": len(texts), "unmapped_slots": unmapped_total},
        },
    )
    return EXIT_OK


# --- template ------------------------------------------------------------------


def cmd_template(args) -> int:
    records = cps.read_corpus(args.corpus)
    if args.rules:
        rules = tpl.load_rules(args.rules)
    else:
        alignments = cps.read_alignments(args.alignments) if args.alignments else None
        rules = tpl.derive_rules(records, alignments, top_k=args.top_k)
        if args.out_rules:
            tpl.save_rules(args.out_rules, rules)
    texts = []
    skipped_total = 0
    for pset, _ in records:
        text, skipped = tpl.realise_template(pset, rules)
        skipped_total += skipped
        texts.append((pset.entity_id, text.split()))
    cps.write_texts(args.out, texts)
    log.info("template baseline: %d records -> %s", len(texts), args.out)
    _manifest(
        args.out,
        {
            "command": "template",
            "seed": None,
            "config": {"top_k": args.top_k},
            "inputs": _hash_files([args.corpus, args.rules, args.alignments]),
            "outputs": _hash_files([args.out] + ([args.out_rules] if args.out_rules else [])),
            "metrics": {"records": len(texts), "unruled_values": skipped_total},
        },
    )
    return EXIT_OK


# --- eval ------------------------------------------------------------------


def cmd_eval_bleu(args) -> int:
    cand = cps.read_texts(args.cand)
    ref_files = args.refs.split(",")
    ref_maps = []
    for rf in ref_files:
        ref_maps.append(dict(cps.read_texts(rf)))
    candidates, references = [], []
    for entity_id, tokens in cand:
        refs = [m[entity_id] for m in ref_maps if entity_id in m]
        if not refs:
            continue
        if args.first_sentence:
            tokens = ev.first_sentence(tokens) if tokens else tokens
            refs = [ev.first_sentence(r) if r else r for r in refs]
        candidates.append(tokens)
        references.append(refs)
    if not candidates:
        raise cps.CorpusError("no candidate/reference pairs share entity ids")
    report = ev.bleu4(candidates, references, smooth=args.smooth)
    for key, value in report.rows():
        print(f"{key}\t{value}")
    outputs = []
    if args.report:
        report_dir = Path(args.report)
        report_dir.mkdir(parents=True, exist_ok=True)
        rep.write_tsv(report_dir / "bleu.tsv", ["metric", "value"], report.rows())
        outputs = [str(report_dir / "bleu.tsv")]
        _manifest(
            str(report_dir / "bleu.tsv"),
            {
                "command": "eval bleu",
                "seed": None,
                "config": {
                    "first_sentence": args.first_sentence,
                    "smooth": args.smooth,
                },
                "inputs": _hash_files([args.cand] + ref_files),
                "outputs": _hash_files(outputs),
                "metrics": dict(report.rows()),
            },
        )
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forge",
        description="Bootstrap data-to-text generators from loosely aligned "
        "property-set/text pairs.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus with gold alignments")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out-corpus", required=True)
    p.add_argument("--out-gold", required=True)
    p.add_argument("--distractor-rate", type=float, default=None)
    p.add_argument("--dropout-rate", type=float, default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="normalize, delexicalise, and filter a corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--filter-config", default=None)
    p.add_argument("--kind", choices=["aligner", "generator"], default="aligner")
    p.add_argument("--stats", action="store_true")
    p.set_defaults(func=cmd_preprocess)

    pa = sub.add_parser("align", help="content aligner commands")
    asub = pa.add_subparsers(dest="subcommand", required=True)

    p = asub.add_parser("train")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-checkpoint", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--gold", default=None, help="gold alignments for threshold tuning")
    p.add_argument("--report", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_align_train)

    p = asub.add_parser("extract")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=None)
    p.set_defaults(func=cmd_align_extract)

    p = asub.add_parser("score")
    p.add_argument("--corpus", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", default=None)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_align_score)

    pg = sub.add_parser("gen", help="generator commands")
    gsub = pg.add_subparsers(dest="subcommand", required=True)

    p = gsub.add_parser("train")
    p.add_argument("--mode", choices=["base", "mtl", "rl"], default="base")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-checkpoint", required=True)
    p.add_argument("--alignments", default=None)
    p.add_argument("--init-checkpoint", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--report", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_gen_train)

    p = gsub.add_parser("decode")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=["greedy", "sample"], default=None)
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_gen_decode)

    p = sub.add_parser("template", help="rule-based baseline realisation")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rules", default=None)
    p.add_argument("--alignments", default=None, help="mention-order source for derived rules")
    p.add_argument("--out-rules", default=None)
    p.add_argument("--top-k", type=int, default=50)
    p.set_defaults(func=cmd_template)

    pe = sub.add_parser("eval", help="automatic evaluation")
    esub = pe.add_subparsers(dest="subcommand", required=True)
    p = esub.add_parser("bleu")
    p.add_argument("--cand", required=True)
    p.add_argument("--refs", required=True, help="comma-separated reference files")
    p.add_argument("--first-sentence", action="store_true")
    p.add_argument("--smooth", action="store_true")
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_eval_bleu)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    try:
        return args.func(args)
    except NumericError as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except (cps.CorpusError, cfgmod.ConfigError, ckpt.CheckpointError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
