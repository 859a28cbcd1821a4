"""Labeling pipelines and the label/clustering join.

Three independent routes produce truth data: matching authority-profile
work titles to corpus titles, matching grant PI names onto funded
papers, and pairing byline instances across citation edges. Labels are
assigned only when a name's blocking key matches; any ambiguity (one
instance drawing two labels, or one profile matching two positions on
the same paper) drops the affected candidates and logs a conflict
rather than guessing.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import NamedTuple

from ._tsv import open_text_write, read_rows, write_rows
from .corpus import (
    AuthorityProfile,
    Annotation,
    CitationEdge,
    Clustering,
    Corpus,
    GrantRecord,
    InstanceID,
    format_instance_id,
    parse_instance_id,
)
from .errors import EvaluationError, IngestError, ParseError
from .normalize import (
    BlockKey,
    PersonName,
    fini_key,
    is_keyed,
    normalize_title,
    parse_name,
)

SOURCE_AUTHORITY = "authority"
SOURCE_GRANT = "grant"
SOURCES = (SOURCE_AUTHORITY, SOURCE_GRANT)

DUP_TITLE_POLICIES = ("drop-all", "keep-first")

LABELS_COLUMNS = ("instance_id", "label_id", "source")
PAIRS_COLUMNS = ("instance_a", "instance_b")
EVAL_COLUMNS = (
    "instance_id",
    "truth_label",
    "predicted_cluster_id",
    "year",
    "ethnicity",
    "gender",
)


class LabeledInstance(NamedTuple):
    """A truth label for one instance from one labeling route."""

    instance: InstanceID
    label_id: str
    source: str
    name: PersonName | None = None


class ConflictRecord(NamedTuple):
    """One dropped candidate label with its reason code."""

    reason: str
    instance: InstanceID
    detail: str


class LinkResult(NamedTuple):
    labels: tuple[LabeledInstance, ...]
    conflicts: tuple[ConflictRecord, ...]
    stats: dict[str, int]


class PairSet:
    """Unordered positive instance pairs spanning distinct papers."""

    def __init__(self, pairs: Iterable[tuple[InstanceID, InstanceID]]):
        canonical: set[tuple[InstanceID, InstanceID]] = set()
        for a, b in pairs:
            if a == b:
                raise ValueError(f"pair of identical instances {format_instance_id(a)}")
            if a.pmid == b.pmid:
                raise ValueError(
                    f"pair within one paper: {format_instance_id(a)}, "
                    f"{format_instance_id(b)}"
                )
            canonical.add((a, b) if a <= b else (b, a))
        self._pairs = frozenset(canonical)

    @property
    def pairs(self) -> frozenset[tuple[InstanceID, InstanceID]]:
        return self._pairs

    def __iter__(self):
        return iter(sorted(self._pairs))

    def __len__(self) -> int:
        return len(self._pairs)

    def __contains__(self, pair: tuple[InstanceID, InstanceID]) -> bool:
        a, b = pair
        return ((a, b) if a <= b else (b, a)) in self._pairs

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PairSet):
            return NotImplemented
        return self._pairs == other._pairs

    def __repr__(self) -> str:
        return f"PairSet({len(self._pairs)} pairs)"


def _parse_keyed(raw: str) -> PersonName | None:
    """Parse a name for matching; unparseable and mononym names yield None."""
    try:
        name = parse_name(raw)
    except ParseError:
        return None
    return name if is_keyed(name) else None


def _keyed_byline(paper) -> list[tuple[int, PersonName, BlockKey]]:
    keyed = []
    for position, raw in enumerate(paper.authors, start=1):
        name = _parse_keyed(raw)
        if name is not None:
            keyed.append((position, name, fini_key(name)))
    return keyed


def _resolve_candidates(
    candidates: set[tuple[InstanceID, str]],
    names: Mapping[InstanceID, PersonName],
    source: str,
) -> tuple[tuple[LabeledInstance, ...], tuple[ConflictRecord, ...]]:
    """Apply both ambiguity rules to the full candidate set at once."""
    by_instance: dict[InstanceID, set[str]] = {}
    by_paper_label: dict[tuple[int, str], set[InstanceID]] = {}
    for instance, label_id in candidates:
        by_instance.setdefault(instance, set()).add(label_id)
        by_paper_label.setdefault((instance.pmid, label_id), set()).add(instance)

    dropped: set[tuple[InstanceID, str]] = set()
    conflicts: list[ConflictRecord] = []
    for instance in sorted(by_instance):
        label_ids = by_instance[instance]
        if len(label_ids) > 1:
            dropped.update((instance, label_id) for label_id in label_ids)
            conflicts.append(
                ConflictRecord(
                    "instance_multilabel",
                    instance,
                    f"{source}:{','.join(sorted(label_ids))}",
                )
            )
    for pmid, label_id in sorted(by_paper_label):
        instances = by_paper_label[(pmid, label_id)]
        if len(instances) > 1:
            listed = ",".join(format_instance_id(i) for i in sorted(instances))
            for instance in sorted(instances):
                dropped.add((instance, label_id))
                conflicts.append(
                    ConflictRecord(
                        "paper_multimatch",
                        instance,
                        f"{source}:{label_id} instances:{listed}",
                    )
                )
    labels = tuple(
        LabeledInstance(instance, label_id, source, names.get(instance))
        for instance, label_id in sorted(candidates)
        if (instance, label_id) not in dropped
    )
    return labels, tuple(sorted(conflicts))


def link_authority(
    corpus: Corpus,
    registry: Mapping[str, AuthorityProfile],
    *,
    dup_title_policy: str = "drop-all",
    nonalpha: str = "delete",
) -> LinkResult:
    """Label byline instances via profile work-title + blocking-key match.

    Corpus titles too short to normalize are unusable. A normalized
    title appearing on more than one paper is removed entirely under
    "drop-all" (the default; no survivor is elected) or mapped to its
    lowest PMID under "keep-first".
    """
    if dup_title_policy not in DUP_TITLE_POLICIES:
        raise ValueError(
            f"dup_title_policy must be one of {DUP_TITLE_POLICIES}, got {dup_title_policy!r}"
        )
    pmids_by_title: dict[str, list[int]] = {}
    for paper in corpus:
        norm = normalize_title(paper.raw_title, nonalpha=nonalpha)
        if norm is not None:
            pmids_by_title.setdefault(norm.text, []).append(paper.pmid)
    title_to_pmid: dict[str, int] = {}
    duplicate_copies = 0
    for text, pmids in pmids_by_title.items():
        if len(pmids) == 1:
            title_to_pmid[text] = pmids[0]
        elif dup_title_policy == "keep-first":
            title_to_pmid[text] = min(pmids)
            duplicate_copies += len(pmids) - 1
        else:
            duplicate_copies += len(pmids)

    candidates: set[tuple[InstanceID, str]] = set()
    names: dict[InstanceID, PersonName] = {}
    unusable_profiles = 0
    for authority_id in sorted(registry):
        profile = registry[authority_id]
        profile_name = _parse_keyed(profile.person_name)
        if profile_name is None:
            unusable_profiles += 1
            continue
        profile_key = fini_key(profile_name)
        matched_pmids = set()
        for raw_title in profile.work_titles:
            norm = normalize_title(raw_title, nonalpha=nonalpha)
            if norm is None:
                continue
            pmid = title_to_pmid.get(norm.text)
            if pmid is not None:
                matched_pmids.add(pmid)
        for pmid in matched_pmids:
            for position, name, key in _keyed_byline(corpus.get(pmid)):
                if key == profile_key:
                    instance = InstanceID(pmid, position)
                    candidates.add((instance, authority_id))
                    names[instance] = name

    labels, conflicts = _resolve_candidates(candidates, names, SOURCE_AUTHORITY)
    stats = {
        "papers": len(corpus),
        "titles_usable": len(title_to_pmid),
        "duplicate_title_copies_dropped": duplicate_copies,
        "profiles": len(registry),
        "profiles_unusable_name": unusable_profiles,
        "candidates": len(candidates),
        "labels": len(labels),
        "conflict_drops": len(candidates) - len(labels),
    }
    return LinkResult(labels, conflicts, stats)


def link_grants(corpus: Corpus, grants: Mapping[str, GrantRecord]) -> LinkResult:
    """Label byline instances of funded papers by PI blocking-key match."""
    candidates: set[tuple[InstanceID, str]] = set()
    names: dict[InstanceID, PersonName] = {}
    unusable_pis = 0
    funded = set()
    funded_in_corpus = set()
    for pi_id in sorted(grants):
        record = grants[pi_id]
        funded.update(record.funded_pmids)
        pi_name = _parse_keyed(record.pi_name)
        if pi_name is None:
            unusable_pis += 1
            continue
        pi_key = fini_key(pi_name)
        for pmid in sorted(record.funded_pmids):
            paper = corpus.get(pmid)
            if paper is None:
                continue
            funded_in_corpus.add(pmid)
            for position, name, key in _keyed_byline(paper):
                if key == pi_key:
                    instance = InstanceID(pmid, position)
                    candidates.add((instance, pi_id))
                    names[instance] = name

    labels, conflicts = _resolve_candidates(candidates, names, SOURCE_GRANT)
    stats = {
        "grants": len(grants),
        "pis_unusable_name": unusable_pis,
        "funded_pmids": len(funded),
        "funded_pmids_in_corpus": len(funded_in_corpus),
        "candidates": len(candidates),
        "labels": len(labels),
        "conflict_drops": len(candidates) - len(labels),
    }
    return LinkResult(labels, conflicts, stats)


def extract_selfcitation_pairs(
    corpus: Corpus, citations: Iterable[CitationEdge]
) -> PairSet:
    """Pair same-key instances across each in-corpus citation edge."""
    byline_cache: dict[int, list[tuple[int, PersonName, BlockKey]]] = {}

    def keyed(pmid: int):
        cached = byline_cache.get(pmid)
        if cached is None:
            cached = byline_cache[pmid] = _keyed_byline(corpus.get(pmid))
        return cached

    pairs: set[tuple[InstanceID, InstanceID]] = set()
    for edge in citations:
        if edge.citing_pmid not in corpus or edge.cited_pmid not in corpus:
            continue
        if edge.citing_pmid == edge.cited_pmid:
            continue
        for pos_citing, _, key_citing in keyed(edge.citing_pmid):
            for pos_cited, _, key_cited in keyed(edge.cited_pmid):
                if key_citing == key_cited:
                    pairs.add(
                        (
                            InstanceID(edge.citing_pmid, pos_citing),
                            InstanceID(edge.cited_pmid, pos_cited),
                        )
                    )
    return PairSet(pairs)


class EvalRow(NamedTuple):
    instance: InstanceID
    truth_label: str
    predicted_cluster_id: str
    year: int
    ethnicity: str | None
    gender: str | None


class EvalDataset:
    """Joined rows carrying a truth label and a predicted cluster id."""

    def __init__(
        self,
        rows: Iterable[EvalRow],
        *,
        dropped_unclustered: int = 0,
        dropped_missing_paper: int = 0,
    ):
        self.rows = tuple(sorted(rows))
        self.dropped_unclustered = dropped_unclustered
        self.dropped_missing_paper = dropped_missing_paper

    def __iter__(self):
        return iter(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EvalDataset):
            return NotImplemented
        return self.rows == other.rows

    def __repr__(self) -> str:
        return f"EvalDataset({len(self.rows)} rows)"

    def truth_clustering(self) -> Clustering:
        return Clustering.from_assignment(
            {row.instance: row.truth_label for row in self.rows}
        )

    def predicted_clustering(self) -> Clustering:
        return Clustering.from_assignment(
            {row.instance: row.predicted_cluster_id for row in self.rows}
        )


def join_labels(
    labels: Iterable[LabeledInstance],
    clustering: Clustering,
    corpus: Corpus,
    annotations: Mapping[InstanceID, Annotation] | None = None,
    *,
    strict: bool = False,
) -> EvalDataset:
    """Inner-join labels with predicted clusters; attach year and tags.

    Labeled instances without a predicted cluster are dropped and
    counted. Instances missing from the corpus (no year available) are
    an error in strict mode, otherwise dropped and counted.
    """
    annotations = annotations or {}
    by_instance: dict[InstanceID, LabeledInstance] = {}
    for label in labels:
        existing = by_instance.get(label.instance)
        if existing is not None and (existing.label_id, existing.source) != (
            label.label_id,
            label.source,
        ):
            raise ValueError(
                f"instance {format_instance_id(label.instance)} carries two labels "
                f"({existing.source}:{existing.label_id}, {label.source}:{label.label_id}); "
                "join one labeling source at a time"
            )
        by_instance[label.instance] = label

    assignment = clustering.assignment
    rows = []
    dropped_unclustered = 0
    dropped_missing_paper = 0
    for instance in sorted(by_instance):
        label = by_instance[instance]
        cluster_id = assignment.get(instance)
        if cluster_id is None:
            dropped_unclustered += 1
            continue
        if not corpus.has_instance(instance):
            if strict:
                raise EvaluationError(
                    f"labeled instance {format_instance_id(instance)} is not in the corpus"
                )
            dropped_missing_paper += 1
            continue
        annotation = annotations.get(instance)
        rows.append(
            EvalRow(
                instance=instance,
                truth_label=label.label_id,
                predicted_cluster_id=cluster_id,
                year=corpus.get(instance.pmid).year,
                ethnicity=annotation.ethnicity if annotation else None,
                gender=annotation.gender if annotation else None,
            )
        )
    return EvalDataset(
        rows,
        dropped_unclustered=dropped_unclustered,
        dropped_missing_paper=dropped_missing_paper,
    )


class AgreementReport(NamedTuple):
    overlap_count: int
    agree_count: int
    disagreements: tuple[tuple[InstanceID, str, str], ...]


def label_agreement(a: EvalDataset, b: EvalDataset) -> AgreementReport:
    """Compare two labelings on their shared instances.

    Label namespaces differ, so clusters are aligned by greedy largest-
    overlap matching (ties broken lexicographically); an instance whose
    label pair is not part of the alignment is a disagreement.
    """
    labels_a = {row.instance: row.truth_label for row in a}
    labels_b = {row.instance: row.truth_label for row in b}
    overlap = sorted(set(labels_a) & set(labels_b))
    if not overlap:
        return AgreementReport(0, 0, ())
    cell_counts = Counter((labels_a[i], labels_b[i]) for i in overlap)
    used_a: set[str] = set()
    used_b: set[str] = set()
    accepted: set[tuple[str, str]] = set()
    for (label_a, label_b), _ in sorted(
        cell_counts.items(), key=lambda item: (-item[1], item[0])
    ):
        if label_a in used_a or label_b in used_b:
            continue
        used_a.add(label_a)
        used_b.add(label_b)
        accepted.add((label_a, label_b))
    disagreements = tuple(
        (instance, labels_a[instance], labels_b[instance])
        for instance in overlap
        if (labels_a[instance], labels_b[instance]) not in accepted
    )
    return AgreementReport(
        overlap_count=len(overlap),
        agree_count=len(overlap) - len(disagreements),
        disagreements=disagreements,
    )


def write_labels(path: str | Path, labels: Iterable[LabeledInstance]) -> None:
    rows = [
        (format_instance_id(label.instance), label.label_id, label.source)
        for label in sorted(labels, key=lambda l: (l.instance, l.source, l.label_id))
    ]
    write_rows(path, LABELS_COLUMNS, rows)


def read_labels(path: str | Path) -> tuple[LabeledInstance, ...]:
    labels = []
    seen: set[tuple[InstanceID, str]] = set()
    for row_no, (instance_s, label_id, source) in read_rows(path, LABELS_COLUMNS):
        try:
            instance = parse_instance_id(instance_s)
        except ParseError as exc:
            raise IngestError(str(exc), row=row_no, path=str(path)) from None
        if source not in SOURCES:
            raise IngestError(
                f"unknown source {source!r}", row=row_no, path=str(path)
            )
        if not label_id:
            raise IngestError("empty label_id", row=row_no, path=str(path))
        if (instance, source) in seen:
            raise IngestError(
                f"duplicate label for instance {instance_s} from {source}",
                row=row_no,
                path=str(path),
            )
        seen.add((instance, source))
        labels.append(LabeledInstance(instance, label_id, source))
    return tuple(labels)


def write_pairs(path: str | Path, pairs: PairSet) -> None:
    rows = [
        (format_instance_id(a), format_instance_id(b)) for a, b in sorted(pairs)
    ]
    write_rows(path, PAIRS_COLUMNS, rows)


def read_pairs(path: str | Path) -> PairSet:
    pairs = []
    for row_no, (a_s, b_s) in read_rows(path, PAIRS_COLUMNS):
        try:
            a = parse_instance_id(a_s)
            b = parse_instance_id(b_s)
        except ParseError as exc:
            raise IngestError(str(exc), row=row_no, path=str(path)) from None
        if a == b or a.pmid == b.pmid:
            raise IngestError(
                f"invalid pair ({a_s}, {b_s}): members must come from distinct papers",
                row=row_no,
                path=str(path),
            )
        pairs.append((a, b))
    return PairSet(pairs)


def write_eval_dataset(path: str | Path, dataset: EvalDataset) -> None:
    rows = [
        (
            format_instance_id(row.instance),
            row.truth_label,
            row.predicted_cluster_id,
            str(row.year),
            row.ethnicity if row.ethnicity is not None else "",
            row.gender if row.gender is not None else "",
        )
        for row in dataset
    ]
    write_rows(path, EVAL_COLUMNS, rows)


def read_eval_dataset(path: str | Path) -> EvalDataset:
    rows = []
    seen: set[InstanceID] = set()
    for row_no, fields in read_rows(path, EVAL_COLUMNS):
        instance_s, truth_label, predicted_id, year_s, ethnicity, gender = fields
        try:
            instance = parse_instance_id(instance_s)
        except ParseError as exc:
            raise IngestError(str(exc), row=row_no, path=str(path)) from None
        if instance in seen:
            raise IngestError(
                f"duplicate row for instance {instance_s}", row=row_no, path=str(path)
            )
        seen.add(instance)
        if not truth_label or not predicted_id:
            raise IngestError(
                "truth_label and predicted_cluster_id are required",
                row=row_no,
                path=str(path),
            )
        try:
            year = int(year_s)
        except ValueError:
            raise IngestError(
                f"year must be an integer, got {year_s!r}", row=row_no, path=str(path)
            ) from None
        rows.append(
            EvalRow(
                instance=instance,
                truth_label=truth_label,
                predicted_cluster_id=predicted_id,
                year=year,
                ethnicity=ethnicity or None,
                gender=gender or None,
            )
        )
    return EvalDataset(rows)


def write_conflicts(path: str | Path, conflicts: Iterable[ConflictRecord]) -> None:
    """Reason-coded drop records, one tab-separated line each (no header)."""
    with open_text_write(path) as fh:
        for record in sorted(conflicts):
            fh.write(
                f"{record.reason}\t{format_instance_id(record.instance)}\t{record.detail}\n"
            )
