"""Loss-log records, JSONL serialization, and validation against a dataset.

A loss log carries one record per question with the natural-log probability
the model assigned to the complete answer (summed over its answer tokens by
the producer). Records join back to the dataset through qids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .worldgen import DatasetIOError, HOLDOUT_KINDS, load_manifest


@dataclass(frozen=True)
class LossRecord:
    qid: str
    split: str
    kind: str
    logprob_nats: float


def write_loss_log(records, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(
                json.dumps(
                    {
                        "qid": rec.qid,
                        "split": rec.split,
                        "kind": rec.kind,
                        "logprob_nats": rec.logprob_nats,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def read_loss_log(path: Path) -> list[LossRecord]:
    records = []
    try:
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                if not line.strip():
                    continue
                try:
                    d = json.loads(line)
                    records.append(
                        LossRecord(d["qid"], d["split"], d["kind"], float(d["logprob_nats"]))
                    )
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise DatasetIOError(f"{path}:{lineno}: malformed record: {exc}") from exc
    except OSError as exc:
        raise DatasetIOError(f"cannot read loss log: {exc}") from exc
    return records


@dataclass
class LogDiagnostics:
    """Validation findings for a loss log against its dataset."""

    n_records: int
    unknown_qids: list[str] = field(default_factory=list)
    duplicate_qids: list[str] = field(default_factory=list)
    positive_logprobs: list[tuple[int, str]] = field(default_factory=list)
    missing_splits: list[str] = field(default_factory=list)
    coverage: dict[str, float] = field(default_factory=dict)

    @property
    def has_violations(self) -> bool:
        return bool(self.unknown_qids or self.duplicate_qids or self.positive_logprobs)

    def to_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "unknown_qids": self.unknown_qids,
            "duplicate_qids": self.duplicate_qids,
            "positive_logprobs": [
                {"line": line, "qid": qid} for line, qid in self.positive_logprobs
            ],
            "missing_splits": self.missing_splits,
            "coverage": self.coverage,
            "has_violations": self.has_violations,
        }


def dataset_qids_by_split(dataset_dir: Path) -> dict[str, set[str]]:
    """Qid sets per split, read straight from qa.jsonl."""
    qids: dict[str, set[str]] = {}
    try:
        with open(Path(dataset_dir) / "qa.jsonl", encoding="utf-8") as f:
            for line in f:
                d = json.loads(line)
                qids.setdefault(d["split"], set()).add(d["qid"])
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise DatasetIOError(f"cannot read qa.jsonl: {exc}") from exc
    return qids


def validate_loss_log(log_path: Path, dataset_dir: Path) -> LogDiagnostics:
    """Report unknown/duplicate qids, positive logprobs, and per-split coverage."""
    load_manifest(dataset_dir)  # fail early on a missing/corrupt dataset
    by_split = dataset_qids_by_split(dataset_dir)
    qid_to_split = {qid: split for split, qids in by_split.items() for qid in qids}

    diag = LogDiagnostics(n_records=0)
    seen: set[str] = set()
    covered: dict[str, set[str]] = {split: set() for split in by_split}
    with open(log_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                qid = d["qid"]
                logprob = float(d["logprob_nats"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DatasetIOError(f"{log_path}:{lineno}: malformed record: {exc}") from exc
            diag.n_records += 1
            if qid in seen:
                diag.duplicate_qids.append(qid)
            seen.add(qid)
            if logprob > 0:
                diag.positive_logprobs.append((lineno, qid))
            split = qid_to_split.get(qid)
            if split is None:
                diag.unknown_qids.append(qid)
            else:
                covered[split].add(qid)

    for split in ["train"] + [k for k in HOLDOUT_KINDS if k in by_split]:
        if split not in by_split:
            continue
        total = len(by_split[split])
        frac = len(covered[split]) / total if total else 1.0
        diag.coverage[split] = frac
        if total and frac == 0.0:
            diag.missing_splits.append(split)
    return diag
