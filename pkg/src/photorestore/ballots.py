"""Human-preference ballot ingestion and aggregation.

Ballot files are UTF-8 CSV with a header row:

    participant,question_type,question_id,choice

question_type is `quality` or `identity`, choice is one of the compared
methods (A, B, C). Each (participant, question) pair may vote once per
question type. Aggregation reports each method's support as a percentage
rounded to two decimals.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BallotValidationError

QUESTION_TYPES = ("quality", "identity")
METHODS = ("A", "B", "C")


@dataclass
class BallotSet:
    question_type: str
    ballots: list[tuple[str, str, str]] = field(default_factory=list)  # (participant, question, choice)

    def add(self, participant: str, question: str, choice: str) -> None:
        if choice not in METHODS:
            raise BallotValidationError(
                f"choice must be one of {METHODS}, got {choice!r}")
        self.ballots.append((participant, question, choice))

    def validate(self) -> None:
        if self.question_type not in QUESTION_TYPES:
            raise BallotValidationError(
                f"question_type must be one of {QUESTION_TYPES}, got {self.question_type!r}")
        seen = set()
        for participant, question, _ in self.ballots:
            key = (participant, question)
            if key in seen:
                raise BallotValidationError(
                    f"duplicate ballot for participant {participant!r}, question {question!r}")
            seen.add(key)


def aggregate_ballots(ballot_set: BallotSet) -> dict[str, float]:
    """Per-method support fractions as percentages, rounded to 2 decimals."""
    ballot_set.validate()
    if not ballot_set.ballots:
        raise BallotValidationError("ballot set is empty")
    counts = Counter(choice for _, _, choice in ballot_set.ballots)
    total = len(ballot_set.ballots)
    return {method: round(100.0 * counts.get(method, 0) / total, 2)
            for method in METHODS}


def load_ballots(path: str | Path) -> dict[str, BallotSet]:
    """Read a ballot CSV and split it into one BallotSet per question type."""
    sets: dict[str, BallotSet] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"participant", "question_type", "question_id", "choice"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise BallotValidationError(
                f"ballot file must have header columns {sorted(required)}, "
                f"got {reader.fieldnames}")
        for row in reader:
            qtype = row["question_type"].strip()
            sets.setdefault(qtype, BallotSet(question_type=qtype)).add(
                row["participant"].strip(), row["question_id"].strip(),
                row["choice"].strip())
    for ballot_set in sets.values():
        ballot_set.validate()
    return sets


def format_report(results: dict[str, dict[str, float]]) -> str:
    """Stable text report: one line per question type, methods in order."""
    lines = []
    for qtype in sorted(results):
        fractions = results[qtype]
        parts = "  ".join(f"{m}: {fractions[m]:.2f}%" for m in METHODS)
        lines.append(f"{qtype}: {parts}")
    return "\n".join(lines) + "\n"


def aggregate_file(path: str | Path) -> dict[str, dict[str, float]]:
    sets = load_ballots(path)
    return {qtype: aggregate_ballots(bs) for qtype, bs in sets.items()}
