"""End-to-end experiment orchestration behind the command-line interface.

Every stage is seeded and writes artifacts with fully deterministic
bytes, so reruns with the same configuration reproduce files exactly.
Feature selection is always fit on training rows only and then applied
unchanged to evaluation rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bitvec, data, featsel, net, rdm, spectral, svm
from .errors import DataError, ParameterError

DEFAULT_LAYER_DIMS = (16, 64, 64, 32, 2)


@dataclass(frozen=True)
class BlobSpec:
    """Synthetic Gaussian-blob dataset parameters."""

    n_samples: int = 500
    n_features: int = 16
    n_classes: int = 2
    center_distance: float = 4.0
    std: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a training run needs to be reproducible from the seed."""

    out_dir: Path
    seed: int = 0
    blobs: BlobSpec | None = BlobSpec()
    data_path: str | None = None
    layer_dims: tuple[int, ...] = DEFAULT_LAYER_DIMS
    epochs: int = 50
    lr: float = 0.05
    batch_size: int = 32
    eval_fraction: float = 0.2


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def write_report(report: dict, path) -> None:
    """Plain-text report, one "key: value" line per entry."""
    with open(path, "w") as fh:
        for key, value in report.items():
            fh.write(f"{key}: {_format_value(value)}\n")


def read_report(path) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for line in fh:
            if ":" in line:
                key, value = line.split(":", 1)
                out[key.strip()] = value.strip()
    return out


def _resolve_dataset(cfg: ExperimentConfig) -> tuple[np.ndarray, np.ndarray]:
    if cfg.data_path is not None:
        return data.load_dataset_csv(cfg.data_path)
    if cfg.blobs is None:
        raise ParameterError("no dataset configured: give a CSV path or blob spec")
    b = cfg.blobs
    return data.gaussian_blobs(
        b.n_samples, b.n_features, b.n_classes, cfg.seed, b.center_distance, b.std
    )


def cmd_train(cfg: ExperimentConfig) -> dict:
    """Train the network and write model, datasets, and training log."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    x, y = _resolve_dataset(cfg)
    x_tr, y_tr, x_ev, y_ev = data.split_train_eval(x, y, cfg.eval_fraction, cfg.seed)

    history: list = []
    model = net.train_sgd(
        x_tr,
        y_tr,
        cfg.layer_dims,
        seed=cfg.seed,
        epochs=cfg.epochs,
        lr=cfg.lr,
        batch_size=cfg.batch_size,
        history=history,
    )
    net.save_mlp1(model, out / "model.mlp1")
    data.save_dataset_csv(x, y, out / "dataset.csv")
    data.save_dataset_csv(x_tr, y_tr, out / "train.csv")
    data.save_dataset_csv(x_ev, y_ev, out / "eval.csv")
    with open(out / "training_log.csv", "w") as fh:
        fh.write("epoch,mean_loss\n")
        for epoch, loss in history:
            fh.write("%d,%.17g\n" % (epoch, loss))

    _, logits = net.forward_batch(model, x_tr)
    train_acc = float(np.mean(logits.argmax(axis=1) == y_tr))
    report = {
        "seed": cfg.seed,
        "n_train": x_tr.shape[0],
        "n_eval": x_ev.shape[0],
        "epochs": cfg.epochs,
        "train_accuracy": train_acc,
    }
    if history:
        report["final_mean_loss"] = history[-1][1]
    write_report(report, out / "report.txt")
    return report


def _parse_layers(net_model: net.MlpNetwork, layer) -> list[int]:
    n_hidden = net_model.n_hidden_layers
    if layer == "all":
        return list(range(1, n_hidden + 1))
    if layer == "last":
        return [n_hidden]
    idx = int(layer)
    if not 1 <= idx <= n_hidden:
        raise ParameterError(f"layer must be in [1, {n_hidden}] or 'all', got {layer}")
    return [idx]


def cmd_extract_bits(
    weights_path, data_path, layer, out_dir, with_latent: bool = False
) -> list[Path]:
    """One BVM1 file per requested hidden layer, rows in dataset order."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = net.load_mlp1(weights_path)
    x, _ = data.load_dataset_csv(data_path)
    written = []
    for idx in _parse_layers(model, layer):
        values = net.hidden_layer_values(model, x, idx)
        bits = bitvec.binarize_matrix(values)
        path = out / f"bits_layer{idx}.bvm1"
        bitvec.save_bvm1(bits, path)
        written.append(path)
    if with_latent:
        latent = net.hidden_layer_values(model, x, model.n_hidden_layers)
        rdm.save_dmx1(latent, out / "latent.dmx1")
        written.append(out / "latent.dmx1")
    return written


def _bits_rows(bits: bitvec.BitMatrix, idx: np.ndarray) -> bitvec.BitMatrix:
    return bitvec.BitMatrix(bits.words[idx], bits.n_bits)


def _effective_k(k: int, n_bits: int) -> int:
    # a request larger than the layer's bit count falls back to all bits
    return min(k, n_bits)


def fiedler_pipeline(
    bits_train: bitvec.BitMatrix,
    labels_train,
    bits_eval: bitvec.BitMatrix,
    labels_eval,
    k: int,
    out_dir=None,
) -> dict:
    """Chi-square selection, Hamming RDM, and Fiedler split per data split.

    Selection is fit on the training rows, applied to both splits, and
    the two splits are partitioned independently.  Returns the report
    dict; with ``out_dir`` also writes RDMs (DMX1 + PGM), partition CSVs,
    selection files, and the report.
    """
    y_tr = np.asarray(labels_train)
    y_ev = np.asarray(labels_eval)
    if bits_train.n_bits != bits_eval.n_bits:
        raise DataError("train and eval bit matrices disagree on bit count")
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    k_eff = _effective_k(k, bits_train.n_bits)
    scores = featsel.select_k_best(bits_train, y_tr, k_eff)

    report = {"k_requested": k, "k_effective": k_eff}
    artifacts = {}
    for split, bits, labels in (("train", bits_train, y_tr), ("eval", bits_eval, y_ev)):
        selected = bitvec.select_columns(bits, scores.selected)
        dissim = rdm.rdm_hamming(selected)
        lap = rdm.laplacian(rdm.adjacency_from_dissim(dissim))
        part = spectral.fiedler_partition(lap)
        overall, per_class, mapping = spectral.partition_accuracy(part, labels)
        report[f"{split}_n"] = bits.n_rows
        report[f"{split}_lambda2"] = part.lambda2
        report[f"{split}_accuracy"] = overall
        for cls, acc in zip(np.unique(labels).tolist(), per_class):
            report[f"{split}_accuracy_class_{cls}"] = acc
        artifacts[split] = (dissim, part, mapping)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        featsel.save_scores_csv(scores, out / "feature_scores.csv")
        featsel.save_index_list(scores.selected, out / "selected_indices.txt")
        for split, (dissim, part, _) in artifacts.items():
            rdm.save_dmx1(dissim.values, out / f"rdm_{split}.dmx1")
            rdm.save_matrix_pgm(dissim.values, out / f"rdm_{split}.pgm")
            _save_partition_csv(part, out / f"partition_{split}.csv")
        write_report(report, out / "report.txt")
    return report


def _save_partition_csv(part: spectral.Partition, path) -> None:
    with open(path, "w") as fh:
        fh.write("vertex_index,cluster_id\n")
        for i, c in enumerate(part.assignment.tolist()):
            fh.write("%d,%d\n" % (i, c))


def run_fiedler_from_files(
    weights_path, train_csv, eval_csv, layer, k: int, out_dir
) -> dict:
    """File-level wrapper: extract bits for one layer, then partition."""
    model = net.load_mlp1(weights_path)
    x_tr, y_tr = data.load_dataset_csv(train_csv)
    x_ev, y_ev = data.load_dataset_csv(eval_csv)
    (idx,) = _parse_layers(model, layer if layer != "all" else "last")
    bits_tr = bitvec.binarize_matrix(net.hidden_layer_values(model, x_tr, idx))
    bits_ev = bitvec.binarize_matrix(net.hidden_layer_values(model, x_ev, idx))
    report = fiedler_pipeline(bits_tr, y_tr, bits_ev, y_ev, k, out_dir)
    report["layer"] = idx
    if out_dir is not None:
        write_report(report, Path(out_dir) / "report.txt")
    return report


def adversarial_pipeline(
    model: net.MlpNetwork,
    x: np.ndarray,
    y: np.ndarray,
    attack_cfg: net.AttackConfig,
    layer,
    k: int,
    seed: int = 0,
    out_dir=None,
    with_latent: bool = False,
    selection: str = "per-set",
    test_fraction: float = 0.2,
) -> dict:
    """Adversarial-detection experiment on final-layer (or chosen) bits.

    Generates an adversarial counterpart for every sample, splits
    original and adversarial sets with the same shuffled indices, selects
    k bits per set on the training rows (chi-square against class
    labels), concatenates the two selections as column blocks, trains a
    linear SVM on original-vs-adversarial labels, and reports test
    accuracy and AUROC.  With ``with_latent`` it also builds the bit RDM
    and the latent cosine RDM on the test rows, reports their Pearson
    correlation, and trains a second SVM on the latent values.
    """
    if selection not in ("per-set", "global"):
        raise ParameterError(f"selection must be 'per-set' or 'global', got {selection}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    (layer_idx,) = _parse_layers(model, layer)

    x_adv = net.attack_batch(model, x, y, attack_cfg)
    bits_org = bitvec.binarize_matrix(net.hidden_layer_values(model, x, layer_idx))
    bits_adv = bitvec.binarize_matrix(net.hidden_layer_values(model, x_adv, layer_idx))

    n = x.shape[0]
    n_test = int(round(n * test_fraction))
    if n_test == 0 or n_test == n:
        raise DataError(f"cannot split {n} samples at test fraction {test_fraction}")
    perm = np.random.default_rng(seed).permutation(n)
    test_idx, train_idx = perm[:n_test], perm[n_test:]

    k_eff = _effective_k(k, bits_org.n_bits)
    dense_org = bits_org.to_dense().astype(np.float64)
    dense_adv = bits_adv.to_dense().astype(np.float64)
    if selection == "per-set":
        sel_org = featsel.select_k_best(_bits_rows(bits_org, train_idx), y[train_idx], k_eff)
        sel_adv = featsel.select_k_best(_bits_rows(bits_adv, train_idx), y[train_idx], k_eff)
        columns = np.concatenate([sel_org.selected, sel_adv.selected])
        selections = {"org": sel_org.selected, "adv": sel_adv.selected}
    else:
        combined = bitvec.BitMatrix(
            np.vstack([bits_org.words[train_idx], bits_adv.words[train_idx]]),
            bits_org.n_bits,
        )
        binary = np.concatenate([np.zeros(len(train_idx)), np.ones(len(train_idx))])
        sel = featsel.select_k_best(combined, binary, k_eff)
        columns = sel.selected
        selections = {"global": sel.selected}

    feats_org = dense_org[:, columns]
    feats_adv = dense_adv[:, columns]
    x_train = np.vstack([feats_org[train_idx], feats_adv[train_idx]])
    x_test = np.vstack([feats_org[test_idx], feats_adv[test_idx]])
    y_train = np.concatenate([-np.ones(len(train_idx)), np.ones(len(train_idx))])
    y_test = np.concatenate([-np.ones(n_test), np.ones(n_test)]).astype(np.int64)

    detector = svm.svm_train(x_train, y_train, seed=seed)
    scores = svm.svm_scores(detector, x_test)
    test_acc = svm.accuracy(svm.labels_from_scores(scores), y_test)
    test_auc = svm.auroc(scores, y_test)
    train_scores = svm.svm_scores(detector, x_train)
    train_acc = svm.accuracy(svm.labels_from_scores(train_scores), y_train.astype(np.int64))

    report = {
        "attack": attack_cfg.kind,
        "epsilon": attack_cfg.epsilon,
        "layer": layer_idx,
        "selection": selection,
        "k_requested": k,
        "k_effective": k_eff,
        "n_train": x_train.shape[0],
        "n_test": x_test.shape[0],
        "train_accuracy": train_acc,
        "test_accuracy": test_acc,
        "test_auroc": test_auc,
    }

    rdm_bits_matrix = rdm_latent_matrix = None
    if with_latent:
        bits_test = bitvec.BitMatrix.from_dense(x_test.astype(np.uint8))
        rdm_bits_matrix = rdm.rdm_hamming(bits_test, layer_tag=layer_idx)
        latent_org = net.hidden_layer_values(model, x, model.n_hidden_layers)
        latent_adv = net.hidden_layer_values(model, x_adv, model.n_hidden_layers)
        latent_test = np.vstack([latent_org[test_idx], latent_adv[test_idx]])
        rdm_latent_matrix = rdm.rdm_cosine(latent_test, layer_tag=model.n_hidden_layers)
        report["pearson_bits_latent"] = rdm.pearson_rdm(rdm_bits_matrix, rdm_latent_matrix)

        latent_train = np.vstack([latent_org[train_idx], latent_adv[train_idx]])
        latent_model = svm.svm_train(latent_train, y_train, seed=seed)
        latent_scores = svm.svm_scores(latent_model, latent_test)
        report["latent_test_accuracy"] = svm.accuracy(
            svm.labels_from_scores(latent_scores), y_test
        )
        report["latent_test_auroc"] = svm.auroc(latent_scores, y_test)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        data.save_dataset_csv(x_adv, y, out / "adversarial.csv")
        svm.save_svm1(detector, out / "detector.svm1")
        for name, idx in selections.items():
            featsel.save_index_list(idx, out / f"selected_indices_{name}.txt")
        if with_latent:
            rdm.save_dmx1(rdm_bits_matrix.values, out / "rdm_bits.dmx1")
            rdm.save_matrix_pgm(rdm_bits_matrix.values, out / "rdm_bits.pgm")
            rdm.save_dmx1(rdm_latent_matrix.values, out / "rdm_latent.dmx1")
            rdm.save_matrix_pgm(rdm_latent_matrix.values, out / "rdm_latent.pgm")
        write_report(report, out / "report.txt")
    return report


def run_adversarial_from_files(
    weights_path,
    data_csv,
    attack_cfg: net.AttackConfig,
    layer,
    k: int,
    seed: int,
    out_dir,
    with_latent: bool = False,
    selection: str = "per-set",
) -> dict:
    model = net.load_mlp1(weights_path)
    x, y = data.load_dataset_csv(data_csv)
    return adversarial_pipeline(
        model,
        x,
        y,
        attack_cfg,
        layer,
        k,
        seed=seed,
        out_dir=out_dir,
        with_latent=with_latent,
        selection=selection,
    )
