"""Command-line front door: ingestion, training, evaluation, simulation.

Subcommands
-----------
build       lexicon + embeddings -> form matrix, semantic matrix, inventory
train       fit a mapping under one of the regimes el|fil|ddl|eddl|fiddl
eval        correlation-accuracy report for a trained model
simulate    static/dynamic per-participant lexical-decision simulation
measures    per-word lexical-similarity table
compare     OLS + AIC comparison of two simulation traces
neighbours  top-k semantic neighbour dump for inspection

Every subcommand exits 0 on success and nonzero with a single
``error: <message>`` line on stderr otherwise. All outputs land under
``--out``. All randomness flows from ``--seed``. ``--threads`` is accepted
for interface stability; execution is single-threaded either way, so
``--threads 1`` behaviour is what every invocation gets.

A ``--config <path>`` file may hold ``key=value`` lines (long option names,
``-`` or ``_`` separated); explicit command-line flags win.
"""

import argparse
import os
import sys

import numpy as np

from . import deep_map, evaluate, linear_map, measures, simulate, stats
from .exceptions import FileFormatError, InputError
from .lexicon import (CueInventory, build_form_matrix, load_embeddings,
                      load_lexicon, frequency_rank_split, save_lexicon)

REGIMES = ("el", "fil", "ddl", "eddl", "fiddl")
DIRECTIONS = ("comprehension", "production")

# Per-regime default epoch budgets: ddl early-stops within 500 epochs, eddl
# runs a fixed long schedule, fiddl defaults to one pass over the tokens.
DEFAULT_EPOCHS = {"ddl": 500, "eddl": 2000, "fiddl": 1}


def _add_common(parser, out_required=True):
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for every stochastic step (default 0)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker count; 1 is the deterministic test mode")
    parser.add_argument("--config", metavar="PATH",
                        help="key=value file supplying flag defaults")
    parser.add_argument("--out", required=out_required,
                        help="output directory (created if missing)")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="lexlearn",
        description="Linear and deep discriminative form/meaning mappings")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build form/semantic matrices")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--n", type=int, default=3, help="n-gram order")
    p.add_argument("--boundary", default="#")
    _add_common(p)

    p = sub.add_parser("train", help="train a mapping")
    p.add_argument("--data", required=True, help="directory made by build")
    p.add_argument("--regime", required=True, choices=REGIMES)
    p.add_argument("--direction", choices=DIRECTIONS, default="comprehension")
    p.add_argument("--ridge", type=float, default=None,
                   help="ridge penalty for linear regimes (default: tiny "
                        "trace-scaled jitter)")
    p.add_argument("--hidden", default="500",
                   help="comma-separated hidden widths; empty for none")
    p.add_argument("--batch-size", type=int, default=512)
    p.add_argument("--max-epochs", type=int, default=None,
                   help=f"epoch budget (defaults: {DEFAULT_EPOCHS})")
    p.add_argument("--patience", type=int, default=20)
    p.add_argument("--learning-rate", type=float, default=0.001)
    p.add_argument("--holdout-fraction", type=float, default=0.9,
                   help="ddl regime: frequency-rank training fraction")
    _add_common(p)

    p = sub.add_parser("eval", help="correlation-accuracy report")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, default=10)
    _add_common(p)

    p = sub.add_parser("simulate", help="lexical-decision simulation")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--trials", required=True)
    p.add_argument("--mode", required=True, choices=("static", "dynamic"))
    p.add_argument("--rate", type=float, default=linear_map.DEFAULT_ETA,
                   help="dynamic learning rate (delta rule or backprop step)")
    p.add_argument("--update-nonwords", action="store_true")
    _add_common(p)

    p = sub.add_parser("measures", help="per-word similarity measures")
    p.add_argument("--data", required=True)
    _add_common(p)

    p = sub.add_parser("compare", help="AIC comparison of two traces")
    p.add_argument("--trace-a", required=True)
    p.add_argument("--trace-b", required=True)
    _add_common(p)

    p = sub.add_parser("neighbours", help="top-k semantic neighbour dump")
    p.add_argument("--data", required=True)
    p.add_argument("--model", default=None,
                   help="optional model; neighbours of predicted vectors "
                        "instead of gold vectors")
    p.add_argument("--words", default=None,
                   help="comma-separated forms (default: all)")
    p.add_argument("--k", type=int, default=10)
    _add_common(p)

    return parser


def _apply_config(argv):
    """Expand --config key=value files into flags ahead of explicit ones."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise InputError("--config needs a path")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2:]
    flags = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FileFormatError("expected key=value", line=lineno)
            key, value = line.split("=", 1)
            flag = "--" + key.strip().replace("_", "-")
            value = value.strip()
            if value.lower() in ("true", "false"):
                if value.lower() == "true":
                    flags.append(flag)
            else:
                flags.extend([flag, value])
    if not rest:
        return flags
    # Keep the subcommand first; config flags precede explicit ones so the
    # command line wins (argparse keeps the last occurrence).
    return rest[:1] + flags + rest[1:]


def _out_dir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _load_data(data_dir):
    entries = load_lexicon(os.path.join(data_dir, "entries.tsv"))
    with open(os.path.join(data_dir, "inventory.txt"),
              encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if len(lines) < 2:
        raise FileFormatError("inventory.txt needs n, boundary, cues")
    n = int(lines[0])
    boundary = lines[1]
    cues = tuple(lines[2:])
    inventory = CueInventory(n=n, boundary=boundary, cues=cues,
                             index={cue: i for i, cue in enumerate(cues)})
    c = np.load(os.path.join(data_dir, "C.npy"))
    s = np.load(os.path.join(data_dir, "S.npy"))
    return entries, inventory, c, s


def _load_model(path):
    with open(path, "rb") as handle:
        magic = handle.read(4)
    if magic == b"LXLM":
        return linear_map.load_mapping(path)
    if magic == b"LXDN":
        return deep_map.load_network(path)
    raise FileFormatError(f"unrecognised model file magic {magic!r}")


def _model_direction(model):
    if isinstance(model, linear_map.LinearMapping):
        return model.direction
    return model.task


def cmd_build(args):
    entries = load_lexicon(args.lexicon)
    inventory = CueInventory.from_entries(entries, n=args.n,
                                          boundary=args.boundary)
    c = build_form_matrix(entries, inventory)
    s = load_embeddings(args.embeddings, entries)
    out = _out_dir(args)
    save_lexicon(os.path.join(out, "entries.tsv"), entries)
    with open(os.path.join(out, "inventory.txt"), "w", encoding="utf-8",
              newline="\n") as handle:
        handle.write(f"{inventory.n}\n{inventory.boundary}\n")
        for cue in inventory.cues:
            handle.write(cue + "\n")
    np.save(os.path.join(out, "C.npy"), c)
    np.save(os.path.join(out, "S.npy"), s)
    print(f"entries: {len(entries)}")
    print(f"cues: {len(inventory)}")
    print(f"embedding_dim: {s.shape[1]}")
    return 0


def _history_rows(history):
    rows = []
    for i, loss in enumerate(history.train_loss):
        acc = (history.val_accuracy[i]
               if i < len(history.val_accuracy) else float("nan"))
        rows.append([i + 1, float(loss), float(acc)])
    return rows


def cmd_train(args):
    entries, _, c, s = _load_data(args.data)
    if args.direction == "comprehension":
        inputs, targets = c, s
    else:
        inputs, targets = s, c
    freqs = np.array([e.frequency for e in entries], dtype=np.float64)
    out = _out_dir(args)
    model_path = os.path.join(out, "model.bin")
    epochs = args.max_epochs or DEFAULT_EPOCHS.get(args.regime, 500)
    loss = "mse" if args.direction == "comprehension" else "bce"
    hidden = tuple(int(t) for t in args.hidden.split(",") if t.strip())
    history = deep_map.TrainHistory()

    if args.regime == "el":
        model = linear_map.estimate_endstate(inputs, targets,
                                             ridge=args.ridge,
                                             direction=args.direction)
        train_rows = np.arange(len(entries))
    elif args.regime == "fil":
        model = linear_map.estimate_frequency_informed(
            inputs, targets, freqs, ridge=args.ridge,
            direction=args.direction)
        train_rows = np.arange(len(entries))
    else:
        net = deep_map.build_network(inputs.shape[1], targets.shape[1],
                                     task=args.direction, hidden=hidden,
                                     seed=args.seed)
        if args.regime == "ddl":
            train_idx, holdout_idx = frequency_rank_split(
                entries, fraction=args.holdout_fraction)
            cfg = deep_map.TrainConfig(
                batch_size=args.batch_size, max_epochs=epochs,
                patience=min(args.patience, epochs), learning_rate=args.learning_rate,
                loss=loss, epoch_cap_mode="early_stop", seed=args.seed)
            train_rows = np.array(train_idx)
            holdout = np.array(holdout_idx)
            model, history = deep_map.train(
                net, inputs[train_rows], targets[train_rows],
                inputs[holdout], targets[holdout], cfg)
        elif args.regime == "eddl":
            cfg = deep_map.TrainConfig(
                batch_size=args.batch_size, max_epochs=epochs, patience=0,
                learning_rate=args.learning_rate, loss=loss,
                epoch_cap_mode="fixed", seed=args.seed)
            train_rows = np.arange(len(entries))
            model, history = deep_map.train(net, inputs, targets, cfg=cfg)
        else:  # fiddl
            cfg = deep_map.TrainConfig(
                batch_size=args.batch_size, max_epochs=max(epochs, 1),
                patience=0, learning_rate=args.learning_rate, loss=loss,
                epoch_cap_mode="fixed", regime="token_level", seed=args.seed)
            train_rows = np.arange(len(entries))
            model, history = deep_map.train_token_distribution(
                net, inputs, targets, freqs, cfg, epochs=epochs)

    if isinstance(model, linear_map.LinearMapping):
        linear_map.save_mapping(model_path, model)
        train_preds = linear_map.predict(model, inputs[train_rows])
    else:
        deep_map.save_network(model_path, model)
        train_preds = deep_map.forward(model, inputs[train_rows])
    report = evaluate.correlation_accuracy(train_preds, targets[train_rows])
    simulate.write_table(os.path.join(out, "history.tsv"),
                         ["epoch", "train_loss", "val_accuracy"],
                         _history_rows(history))
    simulate.write_table(
        os.path.join(out, "summary.tsv"),
        ["regime", "direction", "n_train", "train_accuracy"],
        [[args.regime, args.direction, len(train_rows), report.accuracy]])
    print(f"regime: {args.regime}")
    print(f"train_accuracy: {format(report.accuracy, '.12g')}")
    return 0


def cmd_eval(args):
    entries, _, c, s = _load_data(args.data)
    model = _load_model(args.model)
    if _model_direction(model) == "comprehension":
        inputs, targets = c, s
    else:
        inputs, targets = s, c
    if isinstance(model, linear_map.LinearMapping):
        preds = linear_map.predict(model, inputs)
    else:
        preds = deep_map.forward(model, inputs)
    report = evaluate.correlation_accuracy(preds, targets, k=args.k)
    freqs = np.array([e.frequency for e in entries], dtype=np.float64)
    if freqs.sum() > 0:
        evaluate.token_weighted_accuracy(report, freqs)
    out = _out_dir(args)
    evaluate.write_report(os.path.join(out, "report.tsv"), report,
                          [e.form for e in entries])
    token_acc = (float("nan") if report.token_weighted_accuracy is None
                 else report.token_weighted_accuracy)
    simulate.write_table(
        os.path.join(out, "summary.tsv"),
        ["n_items", "accuracy", f"accuracy_at_{args.k}",
         "token_weighted_accuracy"],
        [[report.n_items, report.accuracy, report.accuracy_at_k, token_acc]])
    print(f"accuracy: {format(report.accuracy, '.12g')}")
    print(f"accuracy_at_{args.k}: {format(report.accuracy_at_k, '.12g')}")
    return 0


def cmd_simulate(args):
    entries, inventory, _, s = _load_data(args.data)
    model = _load_model(args.model)
    trials = simulate.load_trials(args.trials)
    out = _out_dir(args)
    for participant, rows in simulate.group_by_participant(trials).items():
        engine = simulate.clone_engine(model)
        if args.mode == "static":
            trace = simulate.run_static(rows, engine, entries, inventory, s)
        else:
            trace = simulate.run_dynamic(rows, engine, entries, inventory, s,
                                         rate=args.rate,
                                         update_nonwords=args.update_nonwords)
        simulate.write_trace(
            os.path.join(out, f"trace_{participant}.tsv"), trace)
        print(f"participant {participant}: {len(trace.records)} trials")
    return 0


def cmd_measures(args):
    entries, _, c, s = _load_data(args.data)
    table = measures.compute_measures(entries, c, s)
    out = _out_dir(args)
    measures.write_measures(os.path.join(out, "measures.tsv"), table)
    print(f"measures: {len(table)} words")
    return 0


def _trace_fit(rows, is_word):
    subset = [r for r in rows if r["is_word"] == is_word]
    if len(subset) < 4:
        return None
    x = np.array([[r["correlation"]] for r in subset])
    y = np.array([r["rt_inv"] for r in subset])
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return None
    return stats.ols_fit(x, y)


def cmd_compare(args):
    rows_a = simulate.read_trace(args.trace_a)
    rows_b = simulate.read_trace(args.trace_b)
    out = _out_dir(args)
    table = []
    for label, is_word in (("words", True), ("nonwords", False)):
        fit_a = _trace_fit(rows_a, is_word)
        fit_b = _trace_fit(rows_b, is_word)
        if fit_a is None or fit_b is None:
            continue
        diff = stats.compare_aic(fit_a, fit_b)
        table.append([label, fit_a.n, fit_b.n, fit_a.aic, fit_b.aic, diff])
        print(f"{label}: aic_a={format(fit_a.aic, '.12g')} "
              f"aic_b={format(fit_b.aic, '.12g')} "
              f"diff={format(diff, '.12g')}")
    if not table:
        raise InputError("neither words nor nonwords had enough usable rows")
    simulate.write_table(os.path.join(out, "compare.tsv"),
                         ["subset", "n_a", "n_b", "aic_a", "aic_b",
                          "aic_diff"], table)
    return 0


def cmd_neighbours(args):
    entries, _, c, s = _load_data(args.data)
    forms = [e.form for e in entries]
    if args.words:
        wanted = args.words.split(",")
        missing = [w for w in wanted if w not in forms]
        if missing:
            raise InputError(f"not in lexicon: {', '.join(missing)}")
        rows_idx = [forms.index(w) for w in wanted]
    else:
        rows_idx = list(range(len(entries)))
    if args.model:
        model = _load_model(args.model)
        if _model_direction(model) != "comprehension":
            raise InputError("neighbours needs a comprehension model")
        if isinstance(model, linear_map.LinearMapping):
            vectors = linear_map.predict(model, c)
        else:
            vectors = deep_map.forward(model, c)
    else:
        vectors = s
    from .linalg import pearson_rows
    table = []
    for i in rows_idx:
        corr = pearson_rows(vectors[i][None, :], s)[0]
        # Stable: sort by descending correlation, then lexicon order.
        top = sorted(range(len(forms)), key=lambda j: (-corr[j], j))[:args.k]
        for rank, j in enumerate(top, start=1):
            table.append([forms[i], rank, forms[j], float(corr[j])])
    out = _out_dir(args)
    simulate.write_table(os.path.join(out, "neighbours.tsv"),
                         ["form", "rank", "neighbour", "correlation"], table)
    print(f"neighbours: {len(rows_idx)} words x top {args.k}")
    return 0


_COMMANDS = {
    "build": cmd_build,
    "train": cmd_train,
    "eval": cmd_eval,
    "simulate": cmd_simulate,
    "measures": cmd_measures,
    "compare": cmd_compare,
    "neighbours": cmd_neighbours,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _apply_config(argv)
        args = _build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except (ValueError, RuntimeError, OSError) as exc:
        message = " ".join(str(exc).split())
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
