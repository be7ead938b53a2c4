"""Recognition-rate reports: Top-N accuracy tables and confusion matrices.

All rates are percentages. The headline figure `t_m` is the mean of the
per-class Top-1 rates, weighting every class equally regardless of how
many test samples it has.
"""

from dataclasses import dataclass, field

import numpy as np

TOP_N = 4


@dataclass(frozen=True)
class EvaluationReport:
    """Per-class Top-N rates, a confusion matrix and the mean Top-1 rate.

    `per_class_topn[c]` holds the class's Top-1 through Top-4 rates in
    percent. `confusion[i][j]` is the percentage of class i's samples
    whose top-ranked prediction was class j; each row sums to 100.
    """

    classes: tuple[int, ...]
    counts: tuple[int, ...]
    per_class_topn: tuple[tuple[float, ...], ...]
    confusion: tuple[tuple[float, ...], ...]
    t_m: float
    overall_topn: tuple[float, ...] = field(default=())

    def top1(self, class_id: int) -> float:
        return self.per_class_topn[self.classes.index(class_id)][0]


def _rank_classes(scores: np.ndarray, classes: np.ndarray) -> np.ndarray:
    """Class ids ordered by descending score, ties to the lower class id.

    `np.argsort` is stable on the negated scores, so equal scores keep
    their original order, which is ascending class id.
    """
    order = np.argsort(-scores, axis=1, kind="stable")
    return classes[order]


def compute_report(truth, score_vectors, classes) -> EvaluationReport:
    """Score ranked predictions against true labels.

    `score_vectors[i][k]` is sample i's score for `classes[k]`; larger
    means more likely. Rates use the Top-1 through Top-4 ranks.
    """
    classes = np.asarray(classes, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    scores = np.asarray(score_vectors, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] != truth.shape[0]:
        raise ValueError("one score vector per true label required")
    if scores.shape[1] != classes.shape[0]:
        raise ValueError(
            f"score vectors have {scores.shape[1]} entries for {classes.shape[0]} classes"
        )
    unknown = np.setdiff1d(truth, classes)
    if unknown.size:
        raise ValueError(f"true label {unknown[0]} is not among the classes")

    ranked = _rank_classes(scores, classes)
    n_classes = classes.shape[0]
    depth = min(TOP_N, n_classes)
    class_pos = {int(c): i for i, c in enumerate(classes)}

    counts = np.zeros(n_classes, dtype=np.int64)
    topn_hits = np.zeros((n_classes, depth), dtype=np.int64)
    confusion_counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    for i in range(truth.shape[0]):
        ci = class_pos[int(truth[i])]
        counts[ci] += 1
        confusion_counts[ci, class_pos[int(ranked[i, 0])]] += 1
        hits = np.nonzero(ranked[i, :depth] == truth[i])[0]
        if hits.size:
            topn_hits[ci, hits[0] :] += 1

    if np.any(counts == 0):
        missing = int(classes[np.argmin(counts)])
        raise ValueError(f"class {missing} has no evaluation samples")

    per_class = 100.0 * topn_hits / counts[:, None]
    if depth < TOP_N:
        pad = np.repeat(per_class[:, -1:], TOP_N - depth, axis=1)
        per_class = np.hstack([per_class, pad])
    confusion = 100.0 * confusion_counts / counts[:, None]
    overall = 100.0 * topn_hits.sum(axis=0) / counts.sum()
    if depth < TOP_N:
        overall = np.concatenate([overall, np.repeat(overall[-1:], TOP_N - depth)])

    return EvaluationReport(
        classes=tuple(int(c) for c in classes),
        counts=tuple(int(c) for c in counts),
        per_class_topn=tuple(tuple(float(v) for v in row) for row in per_class),
        confusion=tuple(tuple(float(v) for v in row) for row in confusion),
        t_m=float(per_class[:, 0].mean()),
        overall_topn=tuple(float(v) for v in overall),
    )


def format_report_human(report: EvaluationReport) -> str:
    """Fixed-width tables for the terminal; deterministic output."""
    lines = ["Recognition report", "==================", ""]
    lines.append("class  count   top-1   top-2   top-3   top-4")
    for c, n, row in zip(report.classes, report.counts, report.per_class_topn):
        cells = "  ".join(f"{v:6.2f}" for v in row)
        lines.append(f"{c:5d}  {n:5d}  {cells}")
    overall = "  ".join(f"{v:6.2f}" for v in report.overall_topn)
    lines.append(f"{'all':>5}  {sum(report.counts):5d}  {overall}")
    lines.append("")
    lines.append(f"mean per-class top-1: {report.t_m:.2f}")
    lines.append("")
    lines.append("confusion (% of row class, columns in class order)")
    header = "       " + " ".join(f"{c:6d}" for c in report.classes)
    lines.append(header)
    for c, row in zip(report.classes, report.confusion):
        cells = " ".join(f"{v:6.2f}" for v in row)
        lines.append(f"{c:5d}  {cells}")
    return "\n".join(lines) + "\n"


def format_report_machine(report: EvaluationReport) -> str:
    """Line-oriented `key<TAB>values` form for downstream tooling."""
    lines = [f"t_m\t{report.t_m!r}"]
    lines.append("classes\t" + ",".join(str(c) for c in report.classes))
    lines.append("counts\t" + ",".join(str(n) for n in report.counts))
    lines.append("overall_topn\t" + ",".join(repr(v) for v in report.overall_topn))
    for c, row in zip(report.classes, report.per_class_topn):
        lines.append(f"topn\t{c}\t" + ",".join(repr(v) for v in row))
    for c, row in zip(report.classes, report.confusion):
        lines.append(f"confusion\t{c}\t" + ",".join(repr(v) for v in row))
    return "\n".join(lines) + "\n"


def parse_report_machine(text: str) -> EvaluationReport:
    """Rebuild a report from its machine-readable form, bit-exactly."""
    t_m = None
    classes: tuple[int, ...] = ()
    counts: tuple[int, ...] = ()
    overall: tuple[float, ...] = ()
    topn: dict[int, tuple[float, ...]] = {}
    confusion: dict[int, tuple[float, ...]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line:
            continue
        parts = line.split("\t")
        key = parts[0]
        if key == "t_m":
            t_m = float(parts[1])
        elif key == "classes":
            classes = tuple(int(v) for v in parts[1].split(","))
        elif key == "counts":
            counts = tuple(int(v) for v in parts[1].split(","))
        elif key == "overall_topn":
            overall = tuple(float(v) for v in parts[1].split(","))
        elif key == "topn":
            topn[int(parts[1])] = tuple(float(v) for v in parts[2].split(","))
        elif key == "confusion":
            confusion[int(parts[1])] = tuple(float(v) for v in parts[2].split(","))
        else:
            raise ValueError(f"line {lineno}: unknown report key {key!r}")
    if t_m is None or not classes:
        raise ValueError("report document is missing its header lines")
    missing = [c for c in classes if c not in topn or c not in confusion]
    if missing:
        raise ValueError(f"report document has no rows for class {missing[0]}")
    return EvaluationReport(
        classes=classes,
        counts=counts,
        per_class_topn=tuple(topn[c] for c in classes),
        confusion=tuple(confusion[c] for c in classes),
        t_m=t_m,
        overall_topn=overall,
    )
