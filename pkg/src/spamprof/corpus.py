"""Corpus ingestion, chronological splits, and synthetic corpus generation.

Corpora are described by a plain-text index: one ``label path`` line per
email, in corpus order, with paths resolved under a caller-supplied root.
Training always uses the first N entries and testing the rest; there is no
shuffling anywhere.

The synthetic generator draws each email from a hierarchical model: a
class from the mixture, a header line count, a body length, and then the
body bytes from a per-class distribution over all 256 byte values. It
exists to exercise the pipeline end to end with controllable signal, not
to imitate real mail statistics.
"""

from __future__ import annotations

import os.path
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .email_model import RawEmail, Scope
from .profiles import (
    DEFAULT_MAX_LINES,
    LINE_FEED,
    ProfileKind,
    profile_email,
    read_profile_csv,
    write_profile_csv,
)

INDEX_FILENAME = "index"


class IndexFormatError(ValueError):
    """An index file line could not be parsed."""


@dataclass(frozen=True)
class CorpusIndex:
    """Ordered (label, relative path) entries, exactly as listed on disk."""

    entries: tuple[tuple[str, str], ...]

    def __len__(self) -> int:
        return len(self.entries)

    def class_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for label, _ in self.entries:
            counts[label] = counts.get(label, 0) + 1
        return counts


def parse_index(text: str) -> CorpusIndex:
    """Parse ``label path`` lines; empty lines are skipped.

    The first whitespace run separates label from path, so paths may
    contain further whitespace. A line without any separator is rejected
    with its line number.
    """
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise IndexFormatError(f"line {lineno}: expected 'label path', got {line!r}")
        entries.append((parts[0], parts[1]))
    return CorpusIndex(entries=tuple(entries))


def read_index(path: str | Path) -> CorpusIndex:
    return parse_index(Path(path).read_text(encoding="utf-8"))


def iter_emails(index: CorpusIndex, root: str | Path) -> Iterator[RawEmail]:
    """Yield raw emails in index order; unreadable files are silently absent.

    Use :func:`load` when a skip report is needed.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus root {root} is not a directory")
    for label, rel in index.entries:
        path = _resolve(root, rel)
        try:
            data = path.read_bytes()
        except OSError:
            continue
        yield RawEmail(data=data, label=label, path=str(path))


def _resolve(root: Path, rel: str) -> Path:
    # index paths may climb with "../" the way TREC-style indexes do
    return Path(os.path.normpath(str(root / rel)))


@dataclass
class Dataset:
    """Profile matrix with aligned labels and source ids.

    ``skipped`` lists index paths that could not be read; they are absent
    from the matrix but never silently dropped.
    """

    features: np.ndarray
    labels: list[str]
    ids: list[str]
    skipped: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not (len(self.features) == len(self.labels) == len(self.ids)):
            raise ValueError(
                f"row/label/id counts differ: {len(self.features)}, "
                f"{len(self.labels)}, {len(self.ids)}"
            )

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def m(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for label in self.labels:
            counts[label] = counts.get(label, 0) + 1
        return counts

    def to_csv(self, path: str | Path) -> None:
        write_profile_csv(path, self.features, self.labels)

    @classmethod
    def from_csv(cls, path: str | Path) -> "Dataset":
        features, labels = read_profile_csv(path)
        ids = [f"row{i}" for i in range(len(labels))]
        return cls(features=features, labels=labels, ids=ids)


def load(index: CorpusIndex, root: str | Path, kind: ProfileKind,
         scope: Scope = Scope.FULL, k: int = DEFAULT_MAX_LINES) -> Dataset:
    """Profile every email in the index, preserving corpus order.

    Unreadable files are skipped and recorded in ``Dataset.skipped``; a
    missing root directory is an error.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus root {root} is not a directory")
    rows = []
    labels = []
    ids = []
    skipped = []
    for label, rel in index.entries:
        path = _resolve(root, rel)
        try:
            data = path.read_bytes()
        except OSError:
            skipped.append(str(path))
            continue
        email = RawEmail(data=data, label=label, path=str(path))
        rows.append(profile_email(email, kind, scope, k).values)
        labels.append(label)
        ids.append(str(path))
    m = 256 if kind is ProfileKind.CP else k
    features = np.vstack(rows) if rows else np.zeros((0, m), dtype=np.int64)
    return Dataset(features=features, labels=labels, ids=ids, skipped=skipped)


def chronological_split(dataset: Dataset, n_train: int) -> tuple[Dataset, Dataset]:
    """First n_train rows in corpus order train; the rest test. No shuffling."""
    n = len(dataset)
    if not 0 < n_train < n:
        raise ValueError(f"n_train must be in 1..{n - 1}, got {n_train}")
    train = Dataset(
        features=dataset.features[:n_train],
        labels=dataset.labels[:n_train],
        ids=dataset.ids[:n_train],
    )
    test = Dataset(
        features=dataset.features[n_train:],
        labels=dataset.labels[n_train:],
        ids=dataset.ids[n_train:],
    )
    return train, test


# ---------------------------------------------------------------------------
# synthetic corpora


@dataclass(frozen=True)
class ClassSpec:
    """Generative knobs for one class.

    ``header_lines`` is an inclusive integer range; ``header_line_len``
    bounds the visible length of each header line. ``body_length`` holds
    negative-binomial parameters (r successes, success probability p) for
    the body byte count, and ``byte_weights`` the 256-way categorical the
    body bytes are drawn from.
    """

    name: str
    weight: float
    header_lines: tuple[int, int]
    header_line_len: tuple[int, int] = (8, 40)
    body_length: tuple[float, float] = (6.0, 0.01)
    byte_weights: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.name or any(ch.isspace() for ch in self.name):
            raise ValueError(f"class name {self.name!r} must be non-empty without whitespace")
        if self.weight <= 0:
            raise ValueError(f"class weight must be positive, got {self.weight}")
        lo, hi = self.header_lines
        if not 0 <= lo <= hi:
            raise ValueError(f"bad header line range {self.header_lines}")
        r, p = self.body_length
        if r <= 0 or not 0 < p < 1:
            raise ValueError(f"bad body length parameters {self.body_length}")
        if len(self.byte_weights) != 256:
            raise ValueError("byte_weights must have exactly 256 entries")
        w = np.asarray(self.byte_weights, dtype=np.float64)
        if (w < 0).any() or w.sum() <= 0:
            raise ValueError("byte_weights must be non-negative and not all zero")


@dataclass(frozen=True)
class SyntheticSpec:
    """Class mixture plus the seed that fully determines every byte."""

    classes: tuple[ClassSpec, ...]
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.classes) < 1:
            raise ValueError("need at least one class")
        total = sum(c.weight for c in self.classes)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"class weights must sum to 1, got {total}")


_HEADER_BYTES = np.arange(33, 127, dtype=np.uint8)  # printable, no spaces/CR/LF


def _render_email(cls: ClassSpec, rng: np.random.Generator) -> bytes:
    chunks = []
    n_header = int(rng.integers(cls.header_lines[0], cls.header_lines[1] + 1))
    lo, hi = cls.header_line_len
    for _ in range(n_header):
        length = int(rng.integers(lo, hi + 1))
        line = rng.choice(_HEADER_BYTES, size=length)
        chunks.append(line.tobytes() + b"\n")
    chunks.append(b"\n")
    r, p = cls.body_length
    n_body = int(rng.negative_binomial(r, p))
    weights = np.asarray(cls.byte_weights, dtype=np.float64)
    weights = weights / weights.sum()
    body = rng.choice(256, size=n_body, p=weights).astype(np.uint8)
    chunks.append(body.tobytes())
    return b"".join(chunks)


def generate_synthetic(spec: SyntheticSpec, n_emails: int, out_dir: str | Path) -> CorpusIndex:
    """Write ``n_emails`` generated emails plus an index under ``out_dir``.

    Files land in ``out_dir/emails/`` and the index at
    ``out_dir/index``. Everything is a pure function of (spec, n_emails):
    the same seed regenerates every byte identically.
    """
    if n_emails < 1:
        raise ValueError(f"n_emails must be positive, got {n_emails}")
    out = Path(out_dir)
    mail_dir = out / "emails"
    mail_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed)))
    weights = np.array([c.weight for c in spec.classes])
    weights = weights / weights.sum()
    entries = []
    for i in range(n_emails):
        cls = spec.classes[int(rng.choice(len(spec.classes), p=weights))]
        data = _render_email(cls, rng)
        rel = f"emails/{i:06d}.eml"
        (out / rel).write_bytes(data)
        entries.append((cls.name, rel))
    index = CorpusIndex(entries=tuple(entries))
    with open(out / INDEX_FILENAME, "w", encoding="ascii", newline="") as fh:
        for label, rel in entries:
            fh.write(f"{label} {rel}\n")
    return index


def _weights(byte_values, lf_weight: float = 0.0) -> tuple[float, ...]:
    """Uniform categorical over the given byte values, plus LF mass."""
    w = np.zeros(256)
    values = np.asarray(list(byte_values), dtype=int)
    w[values] = (1.0 - lf_weight) / len(values)
    w[LINE_FEED] += lf_weight
    return tuple(w)


def preset_spec(name: str, seed: int = 0) -> SyntheticSpec:
    """Named corpus recipes used by the CLI and the test suite.

    ``separable-cp``: disjoint byte palettes per class, so byte histograms
    separate almost perfectly. ``header-leak``: bodies drawn from one
    shared distribution while header line counts differ by class, so only
    header-derived features carry signal. ``lp-signal``: shared palette but
    class-specific line lengths, putting the signal in line profiles across
    many line positions. ``four-class``: distinct palettes and line lengths
    for four categories.
    """
    lowercase = range(97, 123)
    uppercase = range(65, 91)
    printable = range(32, 127)
    if name == "separable-cp":
        classes = (
            ClassSpec("ham", 0.5, (4, 8), byte_weights=_weights(lowercase, 1 / 40)),
            ClassSpec("spam", 0.5, (4, 8), byte_weights=_weights(uppercase, 1 / 40)),
        )
    elif name == "header-leak":
        shared = _weights(printable, 1 / 40)
        classes = (
            ClassSpec("ham", 0.5, (3, 6), byte_weights=shared),
            ClassSpec("spam", 0.5, (12, 18), byte_weights=shared),
        )
    elif name == "lp-signal":
        # long many-line hams vs short few-line spams: every line position
        # in the gap zone separates, so the signal spans dozens of features
        classes = (
            ClassSpec("ham", 0.5, (4, 8), body_length=(30.0, 30.0 / 3630.0),
                      byte_weights=_weights(printable, 1 / 18)),
            ClassSpec("spam", 0.5, (4, 8), body_length=(30.0, 30.0 / 730.0),
                      byte_weights=_weights(printable, 1 / 45)),
        )
    elif name == "four-class":
        classes = (
            ClassSpec("advert", 0.15, (3, 7), byte_weights=_weights(uppercase, 1 / 20)),
            ClassSpec("notify", 0.20, (5, 9), byte_weights=_weights(range(48, 58), 1 / 35)),
            ClassSpec("s.ham", 0.45, (4, 8), byte_weights=_weights(lowercase, 1 / 30)),
            ClassSpec("spam", 0.20, (6, 12), byte_weights=_weights(printable, 1 / 70)),
        )
    else:
        raise ValueError(f"unknown preset {name!r} (have {sorted(PRESETS)})")
    return SyntheticSpec(classes=classes, seed=seed)


PRESETS = ("separable-cp", "header-leak", "lp-signal", "four-class")
