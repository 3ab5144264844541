"""``fvkit`` command line: fault-tree quantification, ISM, datasets, models, structure learning."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from fvkit import datagen, ism, neural, quant, structlearn
from fvkit.errors import FvkitError, InputError
from fvkit.ftree import load_fault_tree


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument errors exit with status 1 instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def fmt(x: float) -> str:
    """Six significant digits, exponent form below 1e-3."""
    x = float(x)
    if x != x:
        return "nan"
    if x == 0.0:
        return "0"
    if abs(x) < 1e-3:
        return f"{x:.5e}"
    return f"{x:.6g}"


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _write(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror or exc}") from None


def _load_model(path):
    try:
        d = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not a model file ({exc.msg})") from None
    return neural.model_from_dict(d)


def _load_data(path) -> datagen.Dataset:
    return datagen.Dataset.from_jsonl(_read(path))


def _load_q(args) -> dict[str, float]:
    """Probabilities from ``--q`` (CSV event,q) or else from ``--tree``."""
    if getattr(args, "q", None):
        out = {}
        for row in csv.reader(io.StringIO(_read(args.q))):
            if not row or row[0].startswith("#") or row[:2] == ["event", "q"]:
                continue
            if len(row) != 2:
                raise InputError(f"{args.q}: expected rows 'event,q'")
            try:
                out[row[0].strip()] = float(row[1])
            except ValueError:
                raise InputError(f"{args.q}: bad probability {row[1]!r}") from None
        return out
    if getattr(args, "tree", None):
        return load_fault_tree(args.tree).unavailabilities()
    raise UsageError("one of --q or --tree is required")


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


# commands

def cmd_parse(args):
    tree = load_fault_tree(args.tree)
    print(f"OK {len(tree.events)} {len(tree.gates)}")


def cmd_cutsets(args):
    tree = load_fault_tree(args.tree)
    cuts = quant.minimal_cut_sets(tree, max_order=args.max_order)
    sys.stdout.write("".join(" ".join(cs) + "\n" for cs in cuts))


def cmd_fv(args):
    tree = load_fault_tree(args.tree)
    q = tree.unavailabilities()
    if args.q:
        q.update(_load_q(args))
    res = quant.fv_importance(tree, q, args.method)
    rows = [("event", "probability", "fv_cutset", "fv_exact")]
    rows += [(e, fmt(res.probability[e]), fmt(res.fv_cutset[e]), fmt(res.fv_exact[e]))
             for e in res.ranking()]
    sys.stdout.write(_csv(rows))


def cmd_ism(args):
    ssim = ism.load_ssim(_read(args.ssim))
    reach = ism.reachability(ssim)
    lp = ism.level_partition(reach, args.orientation)
    sys.stdout.write(ism.format_table(lp, ssim.names))
    if args.dot:
        _write(args.dot, ism.export_dot(ism.skeleton(reach)))


def cmd_gen(args):
    tree = load_fault_tree(args.tree)
    edges: list = []
    if args.edges:
        edges = structlearn.load_edges(_read(args.edges))
    elif args.ssim:
        edges = list(ism.skeleton(ism.reachability(ism.load_ssim(_read(args.ssim)))).edges)
    spec = datagen.spec_for_tree(tree, args.n, args.seed, law=args.law, error_factor=args.error_factor)
    _write(args.out, datagen.generate(tree, spec, args.method, edges).to_jsonl())


def _metrics_csv(m) -> str:
    return _csv([("MSE", "RMSE", "MAE", "R2"), (fmt(m.mse), fmt(m.rmse), fmt(m.mae), fmt(m.r2))])


def cmd_train(args):
    data = _load_data(args.data)
    edges = structlearn.load_edges(_read(args.edges)) if args.edges else None
    cfg = neural.TrainConfig(learning_rate=args.lr, epochs=args.epochs, seed=args.seed,
                             optimizer=args.optimizer, patience=args.patience,
                             self_loops=not args.no_self_loops, aggregation=args.aggregation)
    model, trace = neural.train(args.model, data, cfg, edges)
    _write(args.out, json.dumps(model.to_dict()) + "\n")
    if trace:
        print(f"final train loss {fmt(trace[-1])} after {len(trace)} epochs", file=sys.stderr)
    sys.stdout.write(_metrics_csv(neural.heldout_metrics(model, data)))


def cmd_eval(args):
    model = _load_model(args.model)
    sys.stdout.write(_metrics_csv(neural.heldout_metrics(model, _load_data(args.data))))


def cmd_predict(args):
    model = _load_model(args.model)
    q = _load_q(args)
    fv, _ = neural.predict(model, q)
    rows = [("event", "q", "fv_pred")] + [(e, fmt(q[e]), fmt(fv[e])) for e in model.node_order]
    sys.stdout.write(_csv(rows))


def cmd_rank(args):
    model = _load_model(args.model)
    q = _load_q(args)
    fv, order = neural.predict(model, q)
    rows = [("rank", "event", "q", "fv_pred")]
    rows += [(k, e, fmt(q[e]), fmt(fv[e])) for k, e in enumerate(order, 1)]
    sys.stdout.write(_csv(rows))


def cmd_structlearn(args):
    data = structlearn.discretize(_load_data(args.data))
    res = structlearn.hill_climb(data, ess=args.ess, max_in_degree=args.max_in_degree,
                                 seed=args.seed, restarts=args.restarts)
    _write(args.out, structlearn.edges_csv(res.dag))
    print(f"score {res.score:.6f}", file=sys.stderr)


def _timings(fn, n: int) -> list[float]:
    out = []
    for _ in range(n):
        t0 = time.perf_counter()
        fn()
        out.append((time.perf_counter() - t0) * 1e3)
    return out


def cmd_bench(args):
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    tree = load_fault_tree(args.tree)
    model = _load_model(args.model)
    q = tree.unavailabilities()

    def analytic():
        quant.fv_importance(tree, q, args.method, cuts=quant.minimal_cut_sets(tree))

    rows = [("target", "n", "mean_ms", "median_ms", "p99_ms")]
    for name, fn in (("analytic", analytic), ("model", lambda: neural.predict(model, q))):
        fn()  # warm-up
        t = np.array(_timings(fn, args.n))
        rows.append((name, args.n, fmt(t.mean()), fmt(np.median(t)), fmt(np.percentile(t, 99))))
    sys.stdout.write(_csv(rows))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fvkit", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, fn, help):
        sp = sub.add_parser(name, help=help, description=help)
        sp.set_defaults(func=fn)
        return sp

    methods = [m.value for m in quant.Method]

    sp = add("parse", cmd_parse, "validate a fault-tree file")
    sp.add_argument("--tree", required=True)

    sp = add("cutsets", cmd_cutsets, "list minimal cut sets")
    sp.add_argument("--tree", required=True)
    sp.add_argument("--max-order", type=int)

    sp = add("fv", cmd_fv, "Fussell-Vesely importance of every basic event")
    sp.add_argument("--tree", required=True)
    sp.add_argument("--method", choices=methods, default="mcub")
    sp.add_argument("--q", help="CSV event,q overriding the tree's probabilities")

    sp = add("ism", cmd_ism, "reachability table and levels of an SSIM")
    sp.add_argument("--ssim", required=True)
    sp.add_argument("--orientation", choices=["top", "driver"], default="driver")
    sp.add_argument("--dot", help="write the skeleton DAG in DOT format")

    sp = add("gen", cmd_gen, "generate a labelled dataset")
    sp.add_argument("--tree", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out")
    sp.add_argument("--method", choices=methods, default="mcub")
    sp.add_argument("--ssim", help="attach the ISM skeleton of this SSIM as edges")
    sp.add_argument("--edges", help="attach edges from a from,to CSV")
    sp.add_argument("--law", choices=["loguniform", "lognormal"], default="loguniform")
    sp.add_argument("--error-factor", type=float, default=3.0)

    sp = add("train", cmd_train, "train a GCN or MLP on a dataset")
    sp.add_argument("--data", required=True)
    sp.add_argument("--model", choices=["gcn", "mlp"], required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--edges", help="from,to CSV replacing the dataset's edges")
    sp.add_argument("--epochs", type=int, default=2000)
    sp.add_argument("--lr", type=float, default=0.001)
    sp.add_argument("--optimizer", choices=["adam", "sgd"], default="adam")
    sp.add_argument("--patience", type=int)
    sp.add_argument("--aggregation", choices=["out", "in", "both"], default="out")
    sp.add_argument("--no-self-loops", action="store_true")

    sp = add("eval", cmd_eval, "held-out metrics of a trained model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)

    for name, fn, help in (("predict", cmd_predict, "predict FV for one probability vector"),
                           ("rank", cmd_rank, "rank events by predicted FV")):
        sp = add(name, fn, help)
        sp.add_argument("--model", required=True)
        sp.add_argument("--q", help="CSV event,q")
        sp.add_argument("--tree", help="take probabilities from this fault tree")

    sp = add("structlearn", cmd_structlearn, "BDeu hill-climb over the binarized dataset")
    sp.add_argument("--data", required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out")
    sp.add_argument("--ess", type=float, default=structlearn.DEFAULT_ESS)
    sp.add_argument("--max-in-degree", type=int, default=structlearn.DEFAULT_MAX_IN_DEGREE)
    sp.add_argument("--restarts", type=int, default=0)

    sp = add("bench", cmd_bench, "time analytic FV against model inference")
    sp.add_argument("--tree", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--method", choices=methods, default="mcub")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fvkit: error: {exc}", file=sys.stderr)
        return 1
    except FvkitError as exc:
        print(f"fvkit: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"fvkit: error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"fvkit: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to the runtime code
        print(f"fvkit: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
