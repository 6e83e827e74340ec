"""Fixed-dimension numeric profiles of raw byte streams.

Two profile families represent an email as a vector of non-negative
integers whose dimension is fixed up front:

* the character profile, a 256-bin histogram of byte values, and
* the binary profile, the gap lengths between successive occurrences of a
  designated separator byte. With the line feed as separator this is the
  line profile: entry ``j`` is the byte length of line ``j``, truncated or
  zero-filled to the configured number of lines.

Counts are exact integers; conversion to floating point happens only at
the classifier boundary, so extraction is bit-reproducible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .email_model import Scope, scoped_bytes, _as_bytes

CHARACTER_PROFILE_DIM = 256
DEFAULT_MAX_LINES = 100
LINE_FEED = 0x0A


class ProfileKind(enum.Enum):
    CP = "cp"
    LP = "lp"


@dataclass(frozen=True)
class BinaryProfileConfig:
    """Separator byte and maximum number of gaps kept.

    Occurrences of the separator beyond ``k`` are ignored; missing gaps are
    zero-filled so every profile has exactly ``k`` entries.
    """

    special: int = LINE_FEED
    k: int = DEFAULT_MAX_LINES

    def __post_init__(self) -> None:
        if not 0 <= self.special <= 255:
            raise ValueError(f"special byte must be in 0..255, got {self.special}")
        if self.k < 1:
            raise ValueError(f"k must be positive, got {self.k}")


@dataclass(frozen=True)
class Profile:
    """A fixed-length vector of non-negative counts describing one email."""

    values: np.ndarray
    kind: ProfileKind
    scope: Scope = Scope.FULL

    @property
    def m(self) -> int:
        return len(self.values)


def _freeze(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


def character_profile(segment, scope: Scope = Scope.FULL) -> Profile:
    """256-bin histogram of byte values; entry j counts occurrences of byte j."""
    data = _as_bytes(segment)
    arr = np.frombuffer(data, dtype=np.uint8)
    values = np.bincount(arr, minlength=CHARACTER_PROFILE_DIM).astype(np.int64)
    return Profile(_freeze(values), ProfileKind.CP, scope)


def binary_profile(segment, config: BinaryProfileConfig, scope: Scope = Scope.FULL) -> Profile:
    """Gap lengths between occurrences of the separator byte.

    With T0 = 0 and Tj the 1-based position of the j-th separator, entry j
    is ``Tj - T(j-1) - 1`` for j up to the number of separators; remaining
    entries are zero and separators past ``config.k`` are ignored.
    """
    data = _as_bytes(segment)
    arr = np.frombuffer(data, dtype=np.uint8)
    positions = np.flatnonzero(arr == config.special)[: config.k] + 1
    gaps = np.diff(positions, prepend=0) - 1
    values = np.zeros(config.k, dtype=np.int64)
    values[: len(gaps)] = gaps
    return Profile(_freeze(values), ProfileKind.LP, scope)


def line_profile(segment, k: int = DEFAULT_MAX_LINES, scope: Scope = Scope.FULL) -> Profile:
    """Binary profile with the line feed as separator: per-line byte lengths.

    The stream is unpreprocessed, so a CR before the LF counts as a line
    byte like any other.
    """
    return binary_profile(segment, BinaryProfileConfig(LINE_FEED, k), scope)


def profile_email(email, kind: ProfileKind, scope: Scope = Scope.FULL,
                  k: int = DEFAULT_MAX_LINES) -> Profile:
    """Profile the selected part of an email.

    The six combinations of kind and scope cover the whole-email profiles
    as well as their header-only and body-only variants.
    """
    data = scoped_bytes(email, scope)
    if kind is ProfileKind.CP:
        return character_profile(data, scope)
    return line_profile(data, k, scope)


def write_profile_csv(path: str | Path, features: np.ndarray, labels) -> None:
    """Write profiles as CSV: header ``label,f0,...``, one row per email.

    Values are decimal integers and lines end with a bare LF regardless of
    platform, so repeated extraction is byte-identical.
    """
    features = np.asarray(features)
    labels = list(labels)
    if features.ndim != 2:
        raise ValueError("features must be a 2-d matrix")
    if len(labels) != features.shape[0]:
        raise ValueError(
            f"{len(labels)} labels for {features.shape[0]} profile rows"
        )
    m = features.shape[1]
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("label," + ",".join(f"f{j}" for j in range(m)) + "\n")
        for label, row in zip(labels, features):
            fh.write(str(label) + "," + ",".join(str(int(v)) for v in row) + "\n")


def read_profile_csv(path: str | Path) -> tuple[np.ndarray, list[str]]:
    """Read a profile CSV back into an integer matrix and its labels."""
    with open(path, "r", encoding="ascii", newline="") as fh:
        header = fh.readline().rstrip("\n")
        fields = header.split(",")
        if not fields or fields[0] != "label":
            raise ValueError(f"{path}: not a profile CSV (bad header {header!r})")
        m = len(fields) - 1
        labels: list[str] = []
        rows: list[list[int]] = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != m + 1:
                raise ValueError(
                    f"{path}: line {lineno}: expected {m + 1} fields, got {len(parts)}"
                )
            labels.append(parts[0])
            rows.append([int(v) for v in parts[1:]])
    features = np.array(rows, dtype=np.int64).reshape(len(rows), m)
    return features, labels
