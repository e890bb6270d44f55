"""Corpus manifests (JSON lines) and the two data-selection strategies:
style-tag exclusion and score-threshold filtering."""

from __future__ import annotations

import csv
import json
import os
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

from .errors import DataError, ValidationError

SPLITS = ("train", "dev", "test")

# Canonical key order for saved manifest rows; round-trips byte-identically.
_FIELD_ORDER = ("id", "audio_path", "style_tag", "duration", "transcript", "split")


@dataclass(frozen=True)
class UtteranceEntry:
    id: str
    audio_path: str
    style_tag: str
    duration: float
    transcript: Optional[str] = None
    split: str = "train"

    def __post_init__(self):
        if not self.id:
            raise ValidationError("utterance id must be non-empty")
        if not self.duration > 0:
            raise ValidationError(f"{self.id}: duration must be > 0, got {self.duration}")
        if self.split not in SPLITS:
            raise ValidationError(f"{self.id}: split must be one of {SPLITS}, got {self.split!r}")


@dataclass(frozen=True)
class CorpusManifest:
    entries: Tuple[UtteranceEntry, ...]
    source_name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        seen = set()
        for entry in self.entries:
            if entry.id in seen:
                raise ValidationError(f"duplicate utterance id {entry.id!r}")
            seen.add(entry.id)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ids(self) -> List[str]:
        return [e.id for e in self.entries]

    def style_tags(self) -> Set[str]:
        return {e.style_tag for e in self.entries}


def load_manifest(path, source_name: Optional[str] = None,
                  check_audio: bool = True) -> CorpusManifest:
    """Read a JSON-lines manifest; rows that fail to parse name their line.

    Audio paths are resolved relative to the manifest's directory when
    checking existence; missing files produce warnings, not errors.
    """
    entries = []
    base = os.path.dirname(os.path.abspath(path))
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                entry = UtteranceEntry(
                    id=row["id"], audio_path=row["audio_path"],
                    style_tag=row["style_tag"], duration=row["duration"],
                    transcript=row.get("transcript"), split=row["split"])
            except (KeyError, TypeError, ValueError, ValidationError) as exc:
                raise DataError(f"{path}: bad manifest row on line {line_no}: {exc}")
            entries.append(entry)
    if source_name is None:
        source_name = os.path.splitext(os.path.basename(path))[0]
    manifest = CorpusManifest(entries=tuple(entries), source_name=source_name)
    if check_audio:
        for missing in missing_audio(manifest, base):
            warnings.warn(f"{path}: audio file not found: {missing}", stacklevel=2)
    return manifest


def missing_audio(manifest: CorpusManifest, base_dir: str = ".") -> List[str]:
    """Audio paths (as written in the manifest) that do not exist on disk."""
    out = []
    for entry in manifest.entries:
        resolved = os.path.join(base_dir, entry.audio_path)
        if not os.path.exists(resolved):
            out.append(entry.audio_path)
    return out


def save_manifest(manifest: CorpusManifest, path) -> None:
    """Write one canonical JSON object per entry, keys in fixed order."""
    with open(path, "w") as fh:
        for entry in manifest.entries:
            row = {name: getattr(entry, name) for name in _FIELD_ORDER}
            fh.write(json.dumps(row) + "\n")


def filter_styles(manifest: CorpusManifest,
                  excluded: Set[str]) -> Tuple[CorpusManifest, Dict[str, int]]:
    """Drop entries whose style tag is excluded; report removals per tag.

    Tags are matched exactly (case-sensitive); the counts dict has a key
    for every excluded tag, zero when the tag never occurred.
    """
    removed = {tag: 0 for tag in sorted(excluded)}
    kept = []
    for entry in manifest.entries:
        if entry.style_tag in excluded:
            removed[entry.style_tag] += 1
        else:
            kept.append(entry)
    return replace(manifest, entries=tuple(kept)), removed


def filter_by_score(manifest: CorpusManifest,
                    scorer: Callable[[UtteranceEntry], float],
                    threshold: float) -> Tuple[CorpusManifest, List[Tuple[UtteranceEntry, float]]]:
    """Keep entries scoring >= threshold; return all computed (entry, score).

    The scorer is any callable on an entry; entries whose scorer raises
    DataError or OSError are dropped with a warning and appear in neither
    the output manifest nor the score list.
    """
    kept = []
    scored = []
    for entry in manifest.entries:
        try:
            score = float(scorer(entry))
        except (DataError, OSError) as exc:
            warnings.warn(f"{entry.id}: dropped, scorer failed: {exc}", stacklevel=2)
            continue
        scored.append((entry, score))
        if score >= threshold:
            kept.append(entry)
    return replace(manifest, entries=tuple(kept)), scored


def write_style_scores(scored: Sequence[Tuple[UtteranceEntry, float]], path) -> None:
    """CSV of (style_tag, score) rows, one per scored utterance, for
    external distribution plotting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["style_tag", "score"])
        for entry, score in scored:
            writer.writerow([entry.style_tag, repr(score)])
