"""Raw email representation and header/body scoping.

An email is the exact byte stream found on disk. Nothing is decoded,
transcoded, or normalized: character sets, MIME structure, and line-ending
conventions are all deliberately ignored. The only structural operation is
splitting at the first empty line, which separates the header block from
the body.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

LF = 0x0A
CR = 0x0D


class Scope(enum.Enum):
    """Which part of an email an operation applies to."""

    FULL = "full"
    HEADER = "header"
    BODY = "body"


@dataclass(frozen=True)
class RawEmail:
    """An immutable byte sequence plus its source label and path.

    ``data`` is byte-for-byte what was read from disk; ``n`` is its exact
    length. ``label`` and ``path`` are optional corpus bookkeeping.
    """

    data: bytes
    label: str | None = None
    path: str | None = None

    @property
    def n(self) -> int:
        return len(self.data)

    @classmethod
    def from_file(cls, path: str | Path, label: str | None = None) -> "RawEmail":
        p = Path(path)
        return cls(data=p.read_bytes(), label=label, path=str(p))


def _as_bytes(email) -> bytes:
    if isinstance(email, RawEmail):
        return email.data
    return bytes(email)


def _find_empty_line(data: bytes) -> tuple[int, int] | None:
    """Locate the first empty line; return (start offset, length) or None.

    An empty line is an LF or CRLF immediately at the start of the stream,
    or an LF LF / CRLF CRLF pair further in. When several candidates exist
    the one starting at the smallest byte offset wins. Candidates can never
    tie: the separator's first byte disambiguates them.
    """
    candidates = []
    if data.startswith(b"\n"):
        candidates.append((0, 1))
    if data.startswith(b"\r\n"):
        candidates.append((0, 2))
    i = data.find(b"\n\n")
    if i != -1:
        candidates.append((i + 1, 1))
    j = data.find(b"\r\n\r\n")
    if j != -1:
        candidates.append((j + 2, 2))
    if not candidates:
        return None
    return min(candidates)


def split_header_body(email) -> tuple[bytes, bytes]:
    """Split an email at the first empty line.

    Returns ``(header, body)`` where the header is everything strictly
    before the empty line (including the final line terminator) and the
    body is everything strictly after it. Without an empty line the whole
    stream is header and the body is empty. Total function: any byte
    sequence is accepted, and ``header + separator + body`` always
    reconstructs the original stream.
    """
    data = _as_bytes(email)
    found = _find_empty_line(data)
    if found is None:
        return data, b""
    start, length = found
    return data[:start], data[start + length:]


def scoped_bytes(email, scope: Scope) -> bytes:
    """Return the full email, its header, or its body as raw bytes."""
    data = _as_bytes(email)
    if scope is Scope.FULL:
        return data
    header, body = split_header_body(data)
    return header if scope is Scope.HEADER else body


def count_header_lines(email) -> int:
    """Number of lines in the header block.

    Counts LF bytes in the header segment; a trailing non-empty line
    without a terminator still counts as one line.
    """
    header, _ = split_header_body(email)
    lines = header.count(b"\n")
    if header and not header.endswith(b"\n"):
        lines += 1
    return lines
