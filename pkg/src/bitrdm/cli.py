"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data or contract error,
3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import bitvec, data, featsel, net, pipeline, rdm, spectral, svm
from .errors import BitRdmError, ConvergenceError


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; this tool reserves 2
    # for data errors and uses 1 for usage problems
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _parse_blobs(text: str) -> pipeline.BlobSpec:
    fields = text.split(",")
    if len(fields) < 3 or len(fields) > 5:
        raise argparse.ArgumentTypeError(
            "blob spec is N,DIM,CLASSES[,DISTANCE[,STD]]"
        )
    try:
        n, dim, classes = int(fields[0]), int(fields[1]), int(fields[2])
        distance = float(fields[3]) if len(fields) > 3 else 4.0
        std = float(fields[4]) if len(fields) > 4 else 1.0
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    return pipeline.BlobSpec(n, dim, classes, distance, std)


def _attack_config(args, x: np.ndarray) -> net.AttackConfig:
    clip_min = args.clip_min if args.clip_min is not None else float(x.min())
    clip_max = args.clip_max if args.clip_max is not None else float(x.max())
    step = args.pgd_step_size
    if step is None:
        step = args.epsilon / 5.0
    return net.AttackConfig(
        kind=args.attack,
        epsilon=args.epsilon,
        clip_min=clip_min,
        clip_max=clip_max,
        pgd_steps=args.pgd_steps,
        pgd_step_size=step,
    )


def _print_report(report: dict) -> None:
    for key, value in report.items():
        print(f"{key}: {pipeline._format_value(value)}")


def _add_attack_flags(p) -> None:
    p.add_argument("--attack", choices=("fgsm", "pgd"), required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--pgd-steps", type=int, default=10)
    p.add_argument("--pgd-step-size", type=float, default=None,
                   help="default: epsilon / 5")
    p.add_argument("--clip-min", type=float, default=None,
                   help="default: dataset minimum")
    p.add_argument("--clip-max", type=float, default=None,
                   help="default: dataset maximum")


def _cmd_train(args) -> int:
    cfg = pipeline.ExperimentConfig(
        out_dir=Path(args.out),
        seed=args.seed,
        blobs=args.blobs if args.data is None else None,
        data_path=args.data,
        layer_dims=args.layer_dims,
        epochs=args.epochs,
        lr=args.lr,
        batch_size=args.batch_size,
        eval_fraction=args.eval_fraction,
    )
    _print_report(pipeline.cmd_train(cfg))
    return 0


def _cmd_extract_bits(args) -> int:
    layer = args.layer if args.layer in ("all", "last") else int(args.layer)
    written = pipeline.cmd_extract_bits(
        args.weights, args.data, layer, args.out, with_latent=args.latent
    )
    for path in written:
        print(path)
    return 0


def _cmd_attack(args) -> int:
    model = net.load_mlp1(args.weights)
    x, y = data.load_dataset_csv(args.data)
    cfg = _attack_config(args, x)
    x_adv = net.attack_batch(model, x, y, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data.save_dataset_csv(x_adv, y, out / "adversarial.csv")
    print(out / "adversarial.csv")
    return 0


def _cmd_rdm(args) -> int:
    if args.metric == "hamming":
        if args.bits is None:
            raise BitRdmError("--metric hamming requires --bits")
        bits = bitvec.load_bvm1(args.bits)
        if args.select_indices is not None:
            bits = bitvec.select_columns(bits, featsel.load_index_list(args.select_indices))
        dissim = rdm.rdm_hamming(bits)
    else:
        if args.embeddings is None:
            raise BitRdmError("--metric cosine requires --embeddings")
        dissim = rdm.rdm_cosine(rdm.load_dmx1(args.embeddings))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rdm.save_dmx1(dissim.values, out / "rdm.dmx1")
    rdm.save_matrix_csv(dissim.values, out / "rdm.csv")
    rdm.save_matrix_pgm(dissim.values, out / "rdm.pgm")
    print(out / "rdm.dmx1")
    return 0


def _cmd_fiedler(args) -> int:
    values = rdm.load_dmx1(args.rdm)
    dissim = rdm.DissimMatrix(values, "normalized-hamming")
    lap = rdm.laplacian(rdm.adjacency_from_dissim(dissim))
    if args.levels == 1:
        part = spectral.fiedler_partition(lap)
    else:
        part = spectral.sign_pattern_partition(lap, args.levels)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pipeline._save_partition_csv(part, out / "partition.csv")
    report = {
        "n": lap.n,
        "n_clusters": part.n_clusters,
        "lambda2": part.lambda2,
        "empty_clusters": len(part.empty_clusters),
    }
    if args.labels is not None:
        labels = data.load_labels(args.labels)
        overall, per_class, _ = spectral.partition_accuracy(part, labels)
        report["accuracy"] = overall
        for cls, acc in zip(np.unique(labels).tolist(), per_class):
            report[f"accuracy_class_{cls}"] = acc
    if args.dump_eigen:
        res = spectral.eig_symmetric(lap.values)
        rdm.save_dmx1(res.eigenvalues[None, :], out / "eigenvalues.dmx1")
        rdm.save_dmx1(res.eigenvectors, out / "eigenvectors.dmx1")
    pipeline.write_report(report, out / "report.txt")
    _print_report(report)
    return 0


def _cmd_select_features(args) -> int:
    bits = bitvec.load_bvm1(args.bits)
    labels = data.load_labels(args.labels)
    scores = featsel.select_k_best(bits, labels, args.k)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    featsel.save_scores_csv(scores, out / "feature_scores.csv")
    featsel.save_index_list(scores.selected, out / "selected_indices.txt")
    print(out / "selected_indices.txt")
    return 0


def _load_pm1_dataset(path) -> tuple[np.ndarray, np.ndarray]:
    x, y = data.load_dataset_csv(path)
    y = np.where(y <= 0, -1, 1).astype(np.int64)
    return x, y


def _cmd_svm_train(args) -> int:
    x, y = _load_pm1_dataset(args.data)
    model = svm.svm_train(x, y, C=args.C, tol=args.tol, max_iter=args.max_iter,
                          seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    svm.save_svm1(model, out / "model.svm1")
    pred = svm.svm_predict(model, x)
    report = {
        "n": x.shape[0],
        "epochs_run": model.meta.epochs_run,
        "duality_gap": model.meta.duality_gap,
        "train_accuracy": svm.accuracy(pred, y),
    }
    pipeline.write_report(report, out / "report.txt")
    _print_report(report)
    return 0


def _cmd_svm_eval(args) -> int:
    model = svm.load_svm1(args.model)
    x, y = _load_pm1_dataset(args.data)
    scores = svm.svm_scores(model, x)
    report = {
        "n": x.shape[0],
        "accuracy": svm.accuracy(svm.labels_from_scores(scores), y),
        "auroc": svm.auroc(scores, y),
    }
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        pipeline.write_report(report, out / "report.txt")
    _print_report(report)
    return 0


def _cmd_pipeline_fiedler(args) -> int:
    layer = args.layer if args.layer == "last" else int(args.layer)
    report = pipeline.run_fiedler_from_files(
        args.weights, args.train_data, args.eval_data, layer, args.k, args.out
    )
    _print_report(report)
    return 0


def _cmd_pipeline_adv(args) -> int:
    x, _ = data.load_dataset_csv(args.data)
    cfg = _attack_config(args, x)
    layer = args.layer if args.layer == "last" else int(args.layer)
    report = pipeline.run_adversarial_from_files(
        args.weights,
        args.data,
        cfg,
        layer,
        args.k,
        seed=args.seed,
        out_dir=args.out,
        with_latent=args.with_latent,
        selection=args.selection,
    )
    _print_report(report)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="bitrdm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train the MLP on blobs or a CSV dataset")
    p.add_argument("--blobs", type=_parse_blobs, default=pipeline.BlobSpec(),
                   help="N,DIM,CLASSES[,DISTANCE[,STD]] (default 500,16,2,4,1)")
    p.add_argument("--data", default=None, help="CSV dataset instead of blobs")
    p.add_argument("--layer-dims", type=_parse_int_list,
                   default=pipeline.DEFAULT_LAYER_DIMS)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--eval-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("extract-bits", help="bit vectors per hidden ReLU layer")
    p.add_argument("--weights", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--layer", default="all", help="1-based index, 'last', or 'all'")
    p.add_argument("--latent", action="store_true",
                   help="also write last-hidden-layer values as latent.dmx1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_extract_bits)

    p = sub.add_parser("attack", help="write adversarial counterparts of a dataset")
    p.add_argument("--weights", required=True)
    p.add_argument("--data", required=True)
    _add_attack_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("rdm", help="dissimilarity matrix from bits or embeddings")
    p.add_argument("--metric", choices=("hamming", "cosine"), required=True)
    p.add_argument("--bits", default=None, help="BVM1 file (hamming)")
    p.add_argument("--select-indices", default=None,
                   help="index list file to select bit columns first")
    p.add_argument("--embeddings", default=None, help="DMX1 file (cosine)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_rdm)

    p = sub.add_parser("fiedler", help="spectral partition of an RDM")
    p.add_argument("--rdm", required=True, help="DMX1 normalized dissimilarity matrix")
    p.add_argument("--levels", type=int, default=1,
                   help="partition into 2^levels clusters")
    p.add_argument("--labels", default=None, help="CSV labels for accuracy")
    p.add_argument("--dump-eigen", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fiedler)

    p = sub.add_parser("select-features", help="chi-square top-k bit selection")
    p.add_argument("--bits", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_select_features)

    p = sub.add_parser("svm-train", help="train the linear detector")
    p.add_argument("--data", required=True,
                   help="CSV of features with 0/1 or -1/+1 label in last column")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_svm_train)

    p = sub.add_parser("svm-eval", help="accuracy and AUROC of a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_svm_eval)

    p = sub.add_parser("pipeline-fiedler",
                       help="select bits, build RDMs, partition train and eval")
    p.add_argument("--weights", required=True)
    p.add_argument("--train-data", required=True)
    p.add_argument("--eval-data", required=True)
    p.add_argument("--layer", default="last")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pipeline_fiedler)

    p = sub.add_parser("pipeline-adv",
                       help="adversarial detection with a linear SVM on bits")
    p.add_argument("--weights", required=True)
    p.add_argument("--data", required=True)
    _add_attack_flags(p)
    p.add_argument("--layer", default="last")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--selection", choices=("per-set", "global"), default="per-set")
    p.add_argument("--with-latent", action="store_true",
                   help="also compare against latent-layer embeddings")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pipeline_adv)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"bitrdm: convergence error: {exc}", file=sys.stderr)
        return 3
    except (BitRdmError, OSError) as exc:
        print(f"bitrdm: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
