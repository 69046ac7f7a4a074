"""Normalized analogy corpus: ingest SCAR- and ParallelPARC-shaped JSON.

Both datasets reduce to one record shape: a target system (the unfamiliar
concept), a source system (the familiar one), optional background text per
side, and a list of aligned sub-concept pairs. SCAR rows carry explicit
mapping pairs plus per-mapping gold explanations; ParallelPARC rows carry
relation strings of the form ``(entity, verb, entity) like (entity, verb,
entity)`` that are flattened into sub-concept phrases.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import RelationParseError, SchemaError

logger = logging.getLogger(__name__)


class DatasetTag(str, Enum):
    SCAR = "SCAR"
    PARALLELPARC = "PARALLELPARC"
    CUSTOM = "CUSTOM"


@dataclass(frozen=True)
class SubConceptPair:
    """One aligned sub-concept pair; target side first."""

    target_sub: str
    source_sub: str

    def __post_init__(self):
        if not self.target_sub.strip() or not self.source_sub.strip():
            raise ValueError("sub-concept pair fields must be non-empty")


@dataclass(frozen=True)
class RelationTriplet:
    subject: str
    verb: str
    object: str

    def __post_init__(self):
        if not (self.subject and self.verb and self.object):
            raise ValueError("relation triplet fields must be non-empty")

    def phrase(self) -> str:
        """Flatten to a single space-joined phrase."""
        return f"{self.subject} {self.verb} {self.object}"


@dataclass(frozen=True)
class AnalogyRecord:
    """One target/source analogy with its sub-concept structure."""

    id: str
    dataset_tag: DatasetTag
    target_name: str
    source_name: str
    target_background: str | None = None
    source_background: str | None = None
    mappings: tuple[SubConceptPair, ...] = ()
    gold_explanations: tuple[str, ...] = ()
    target_domain: str | None = None
    source_domain: str | None = None

    def __post_init__(self):
        if not self.target_name or not self.source_name:
            raise ValueError(f"record {self.id!r}: target and source names must be non-empty")
        if not self.mappings and self.dataset_tag is not DatasetTag.CUSTOM:
            raise ValueError(
                f"record {self.id!r}: mappings may be empty only for CUSTOM records"
            )

    @property
    def target_subs(self) -> list[str]:
        return [p.target_sub for p in self.mappings]

    @property
    def source_subs(self) -> list[str]:
        return [p.source_sub for p in self.mappings]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "dataset_tag": self.dataset_tag.value,
            "target_name": self.target_name,
            "source_name": self.source_name,
            "target_background": self.target_background,
            "source_background": self.source_background,
            "mappings": [[p.target_sub, p.source_sub] for p in self.mappings],
            "gold_explanations": list(self.gold_explanations),
            "target_domain": self.target_domain,
            "source_domain": self.source_domain,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnalogyRecord":
        return cls(
            id=d["id"],
            dataset_tag=DatasetTag(d["dataset_tag"]),
            target_name=d["target_name"],
            source_name=d["source_name"],
            target_background=d.get("target_background"),
            source_background=d.get("source_background"),
            mappings=tuple(SubConceptPair(t, s) for t, s in d.get("mappings", [])),
            gold_explanations=tuple(d.get("gold_explanations", [])),
            target_domain=d.get("target_domain"),
            source_domain=d.get("source_domain"),
        )


# Relation strings use "like" in the dataset files and "mapped to" in prose;
# both separators are accepted.
_RELATION_RE = re.compile(
    r"^\s*\(([^()]*)\)\s*(?:like|mapped\s+to)\s*\(([^()]*)\)\s*$", re.IGNORECASE
)


def parse_relation(s: str) -> tuple[RelationTriplet, RelationTriplet]:
    """Parse ``(a, b, c) like (d, e, f)`` into two triplets, in string order."""
    m = _RELATION_RE.match(s)
    if not m:
        raise RelationParseError(f"relation does not match triplet grammar: {s!r}")
    triplets = []
    for group in m.groups():
        parts = [p.strip() for p in group.split(",")]
        if len(parts) != 3:
            raise RelationParseError(
                f"expected 3 comma-separated fields, got {len(parts)}: {group!r}"
            )
        triplets.append(RelationTriplet(*parts))
    return triplets[0], triplets[1]


def _require(row: dict, key: str, index: int):
    if key not in row:
        raise SchemaError(f"row {index} is missing required field {key!r}", field=key, row=index)
    return row[key]


def _load_json_array(path: str | Path) -> list:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON at line {exc.lineno}") from exc
    if not isinstance(data, list):
        raise SchemaError(f"{path}: expected a top-level JSON array")
    return data


def load_scar(path: str | Path) -> list[AnalogyRecord]:
    """Load SCAR rows; system_a becomes the target, system_b the source."""
    records = []
    for i, row in enumerate(_load_json_array(path)):
        if not isinstance(row, dict):
            raise SchemaError(f"row {i} is not an object", row=i)
        rid = str(_require(row, "id", i))
        raw_mappings = _require(row, "mappings", i)
        mappings = []
        for pair in raw_mappings:
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise SchemaError(
                    f"row {i}: mapping entries must be [target, source] pairs",
                    field="mappings",
                    row=i,
                )
            mappings.append(SubConceptPair(str(pair[0]), str(pair[1])))
        explanations = tuple(str(e) for e in row.get("Explanation", []))
        if explanations and len(explanations) != len(mappings):
            raise SchemaError(
                f"row {i}: {len(explanations)} explanations do not align with "
                f"{len(mappings)} mappings",
                field="Explanation",
                row=i,
            )
        records.append(
            AnalogyRecord(
                id=rid,
                dataset_tag=DatasetTag.SCAR,
                target_name=str(_require(row, "system_a", i)),
                source_name=str(_require(row, "system_b", i)),
                target_background=row.get("system_a_background"),
                source_background=row.get("system_b_background"),
                mappings=tuple(mappings),
                gold_explanations=explanations,
                target_domain=row.get("system_a_domain"),
                source_domain=row.get("system_b_domain"),
            )
        )
    _check_unique_ids(records)
    return records


def load_parallelparc(path: str | Path) -> list[AnalogyRecord]:
    """Load ParallelPARC rows, flattening relation triplets to sub-concept phrases.

    Relation strings put the source-side triplet first, so ``(magma, heats,
    underground water) like (steam, heats, liquid)`` pairs target phrase
    "steam heats liquid" with source phrase "magma heats underground water".
    Unparseable relations are skipped with a warning; the record is kept.
    """
    records = []
    total_skips = 0
    for i, row in enumerate(_load_json_array(path)):
        if not isinstance(row, dict):
            raise SchemaError(f"row {i} is not an object", row=i)
        rid = str(_require(row, "sample_id", i))
        mappings = []
        for rel in _require(row, "relations", i):
            try:
                source_triplet, target_triplet = parse_relation(str(rel))
            except RelationParseError as exc:
                total_skips += 1
                logger.warning("record %s: skipping relation (%s)", rid, exc)
                continue
            mappings.append(
                SubConceptPair(
                    target_sub=target_triplet.phrase(),
                    source_sub=source_triplet.phrase(),
                )
            )
        records.append(
            AnalogyRecord(
                id=rid,
                dataset_tag=DatasetTag.PARALLELPARC,
                target_name=str(_require(row, "target_subject", i)),
                source_name=str(_require(row, "source_subject", i)),
                target_background=row.get("target_paragraph"),
                source_background=row.get("source_paragraph"),
                mappings=tuple(mappings),
                target_domain=row.get("target_domain"),
                source_domain=row.get("source_domain"),
            )
        )
    if total_skips:
        logger.warning("skipped %d unparseable relations in %s", total_skips, path)
    _check_unique_ids(records)
    return records


def _check_unique_ids(records: list[AnalogyRecord]):
    seen = set()
    for r in records:
        if r.id in seen:
            raise SchemaError(f"duplicate record id {r.id!r}", field="id")
        seen.add(r.id)


def save_records(records: list[AnalogyRecord], path: str | Path):
    """Write records in the normalized JSON form (stable key order)."""
    payload = [r.to_dict() for r in records]
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def load_records(path: str | Path) -> list[AnalogyRecord]:
    """Reload records written by :func:`save_records`."""
    records = [AnalogyRecord.from_dict(d) for d in _load_json_array(path)]
    _check_unique_ids(records)
    return records
