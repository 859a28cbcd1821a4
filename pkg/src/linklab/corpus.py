"""Core data model and file ingestion.

A corpus is a set of papers keyed by PMID; every author mention is an
instance addressed as "<pmid>_<position>" with 1-based byline positions.
Alongside the corpus live four auxiliary tables used to build labeled
evaluation data: authority profiles (person + work titles), grant PI
records, citation edges, and per-instance demographic annotations.

All tables are TSV with one header row; see the ingest_* functions for
the exact columns. Ingestion is streaming, validates per row, and
reports errors with 1-based data row numbers.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

from ._tsv import read_rows, write_rows
from .errors import IngestError, ParseError

PAPERS_COLUMNS = ("pmid", "year", "title", "authors")
CLUSTERING_COLUMNS = ("cluster_id", "instance_id")
AUTHORITY_COLUMNS = ("authority_id", "name", "title")
GRANTS_COLUMNS = ("pi_id", "pi_name", "pmid")
CITATIONS_COLUMNS = ("citing_pmid", "cited_pmid")
ANNOTATIONS_COLUMNS = ("instance_id", "ethnicity", "gender")


class InstanceID(NamedTuple):
    """One author mention: paper identifier plus 1-based byline position."""

    pmid: int
    position: int

    def __str__(self) -> str:
        return f"{self.pmid}_{self.position}"


def parse_instance_id(s: str) -> InstanceID:
    """Parse the canonical "<pmid>_<position>" form of an instance ID."""
    pmid_s, sep, pos_s = s.partition("_")
    if not sep or not (pmid_s.isascii() and pmid_s.isdigit()) or not (
        pos_s.isascii() and pos_s.isdigit()
    ):
        raise ParseError(f"instance id {s!r} is not of the form <pmid>_<position>")
    pmid = int(pmid_s)
    position = int(pos_s)
    if pmid < 1:
        raise ParseError(f"instance id {s!r}: pmid must be >= 1")
    if position < 1:
        raise ParseError(f"instance id {s!r}: position must be >= 1")
    return InstanceID(pmid, position)


def format_instance_id(instance: InstanceID) -> str:
    return f"{instance.pmid}_{instance.position}"


@dataclass(frozen=True)
class PaperRecord:
    """A paper with its raw title and byline names in order."""

    pmid: int
    year: int
    raw_title: str
    authors: tuple[str, ...]

    def instances(self) -> Iterator[InstanceID]:
        for position in range(1, len(self.authors) + 1):
            yield InstanceID(self.pmid, position)


@dataclass(frozen=True)
class AuthorityProfile:
    """A curated person profile: one name plus the titles of their works."""

    authority_id: str
    person_name: str
    work_titles: frozenset[str]


@dataclass(frozen=True)
class GrantRecord:
    """A grant principal investigator and the papers their grants funded."""

    pi_id: str
    pi_name: str
    funded_pmids: frozenset[int]


class CitationEdge(NamedTuple):
    citing_pmid: int
    cited_pmid: int


@dataclass(frozen=True)
class Annotation:
    """Verbatim demographic tags for one instance; no recoding at ingest."""

    instance: InstanceID
    ethnicity: str
    gender: str


class Corpus:
    """An immutable collection of papers keyed by PMID."""

    def __init__(self, papers: Mapping[int, PaperRecord]):
        self._papers = dict(papers)

    @property
    def papers(self) -> Mapping[int, PaperRecord]:
        return self._papers

    def __len__(self) -> int:
        return len(self._papers)

    def __contains__(self, pmid: int) -> bool:
        return pmid in self._papers

    def __iter__(self) -> Iterator[PaperRecord]:
        for pmid in sorted(self._papers):
            yield self._papers[pmid]

    def get(self, pmid: int) -> PaperRecord | None:
        return self._papers.get(pmid)

    def instances(self) -> Iterator[InstanceID]:
        for paper in self:
            yield from paper.instances()

    def has_instance(self, instance: InstanceID) -> bool:
        paper = self._papers.get(instance.pmid)
        return paper is not None and 1 <= instance.position <= len(paper.authors)

    def byline_name(self, instance: InstanceID) -> str:
        """Raw byline name at the instance's position; KeyError if dangling."""
        paper = self._papers.get(instance.pmid)
        if paper is None or not 1 <= instance.position <= len(paper.authors):
            raise KeyError(f"no such instance {format_instance_id(instance)}")
        return paper.authors[instance.position - 1]


class Clustering:
    """A partition of instances into named, non-empty, disjoint clusters."""

    def __init__(self, clusters: Mapping[str, Iterable[InstanceID]]):
        built: dict[str, frozenset[InstanceID]] = {}
        assignment: dict[InstanceID, str] = {}
        for cluster_id, members in clusters.items():
            if not cluster_id:
                raise ValueError("empty cluster_id")
            member_set = frozenset(members)
            if not member_set:
                raise ValueError(f"cluster {cluster_id!r} has no members")
            built[cluster_id] = member_set
        for cluster_id in sorted(built):
            for instance in built[cluster_id]:
                other = assignment.get(instance)
                if other is not None:
                    raise ValueError(
                        f"instance {format_instance_id(instance)} is in both "
                        f"clusters {other!r} and {cluster_id!r}"
                    )
                assignment[instance] = cluster_id
        self._clusters = built
        self._assignment = assignment

    @classmethod
    def from_assignment(cls, assignment: Mapping[InstanceID, str]) -> "Clustering":
        clusters: dict[str, set[InstanceID]] = {}
        for instance, cluster_id in assignment.items():
            clusters.setdefault(cluster_id, set()).add(instance)
        return cls(clusters)

    @property
    def clusters(self) -> Mapping[str, frozenset[InstanceID]]:
        return self._clusters

    @property
    def assignment(self) -> Mapping[InstanceID, str]:
        """Instance-to-cluster-id map. Treat as read-only."""
        return self._assignment

    @property
    def n_clusters(self) -> int:
        return len(self._clusters)

    @property
    def n_instances(self) -> int:
        return len(self._assignment)

    def instances(self) -> Iterable[InstanceID]:
        return self._assignment.keys()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Clustering):
            return NotImplemented
        return self._clusters == other._clusters

    def __repr__(self) -> str:
        return f"Clustering({self.n_clusters} clusters, {self.n_instances} instances)"

    def restrict(self, instances: Iterable[InstanceID]) -> "Clustering":
        """Drop members outside `instances`; drop clusters left empty."""
        keep = set(instances)
        clusters = {
            cluster_id: kept
            for cluster_id, members in self._clusters.items()
            if (kept := members & keep)
        }
        return Clustering(clusters)


def _parse_positive_int(text: str, field: str, row_no: int, path: str | Path) -> int:
    if not (text.isascii() and text.isdigit()) or int(text) < 1:
        raise IngestError(
            f"{field} must be a positive integer, got {text!r}",
            row=row_no,
            path=str(path),
        )
    return int(text)


def ingest_corpus(path: str | Path) -> Corpus:
    """Read papers.tsv (pmid, year, title, authors; byline joined by "|")."""
    papers: dict[int, PaperRecord] = {}
    for row_no, (pmid_s, year_s, title, authors_s) in read_rows(path, PAPERS_COLUMNS):
        pmid = _parse_positive_int(pmid_s, "pmid", row_no, path)
        try:
            year = int(year_s)
        except ValueError:
            raise IngestError(
                f"year must be an integer, got {year_s!r}", row=row_no, path=str(path)
            ) from None
        if not title:
            raise IngestError("missing title", row=row_no, path=str(path))
        authors = tuple(authors_s.split("|"))
        if not authors_s or any(name == "" for name in authors):
            raise IngestError(
                "empty author name in byline", row=row_no, path=str(path)
            )
        if pmid in papers:
            raise IngestError(f"duplicate pmid {pmid}", row=row_no, path=str(path))
        papers[pmid] = PaperRecord(pmid=pmid, year=year, raw_title=title, authors=authors)
    return Corpus(papers)


def ingest_clustering(path: str | Path) -> Clustering:
    """Read clustering.tsv (cluster_id, instance_id); enforce the partition."""
    clusters: dict[str, set[InstanceID]] = {}
    seen: dict[InstanceID, str] = {}
    for row_no, (cluster_id, instance_s) in read_rows(path, CLUSTERING_COLUMNS):
        if not cluster_id:
            raise IngestError("empty cluster_id", row=row_no, path=str(path))
        try:
            instance = parse_instance_id(instance_s)
        except ParseError as exc:
            raise IngestError(str(exc), row=row_no, path=str(path)) from None
        if instance in seen:
            raise IngestError(
                f"instance {instance_s} already assigned to cluster {seen[instance]!r}",
                row=row_no,
                path=str(path),
            )
        seen[instance] = cluster_id
        clusters.setdefault(cluster_id, set()).add(instance)
    return Clustering(clusters)


def ingest_authority(path: str | Path) -> dict[str, AuthorityProfile]:
    """Read authority.tsv (authority_id, name, title; one row per work)."""
    names: dict[str, str] = {}
    titles: dict[str, set[str]] = {}
    for row_no, (authority_id, name, title) in read_rows(path, AUTHORITY_COLUMNS):
        if not authority_id or not name or not title:
            raise IngestError("empty field", row=row_no, path=str(path))
        known = names.get(authority_id)
        if known is None:
            names[authority_id] = name
            titles[authority_id] = set()
        elif known != name:
            raise IngestError(
                f"authority {authority_id!r} has conflicting names "
                f"{known!r} and {name!r}",
                row=row_no,
                path=str(path),
            )
        titles[authority_id].add(title)
    return {
        authority_id: AuthorityProfile(
            authority_id=authority_id,
            person_name=names[authority_id],
            work_titles=frozenset(titles[authority_id]),
        )
        for authority_id in names
    }


def ingest_grants(path: str | Path) -> dict[str, GrantRecord]:
    """Read grants.tsv (pi_id, pi_name, pmid; one row per funded paper)."""
    names: dict[str, str] = {}
    pmids: dict[str, set[int]] = {}
    for row_no, (pi_id, pi_name, pmid_s) in read_rows(path, GRANTS_COLUMNS):
        if not pi_id or not pi_name:
            raise IngestError("empty field", row=row_no, path=str(path))
        pmid = _parse_positive_int(pmid_s, "pmid", row_no, path)
        known = names.get(pi_id)
        if known is None:
            names[pi_id] = pi_name
            pmids[pi_id] = set()
        elif known != pi_name:
            raise IngestError(
                f"PI {pi_id!r} has conflicting names {known!r} and {pi_name!r}",
                row=row_no,
                path=str(path),
            )
        pmids[pi_id].add(pmid)
    return {
        pi_id: GrantRecord(
            pi_id=pi_id, pi_name=names[pi_id], funded_pmids=frozenset(pmids[pi_id])
        )
        for pi_id in names
    }


def ingest_citations(path: str | Path) -> tuple[CitationEdge, ...]:
    """Read citations.tsv (citing_pmid, cited_pmid); dedupe, reject self-loops."""
    edges: set[CitationEdge] = set()
    for row_no, (citing_s, cited_s) in read_rows(path, CITATIONS_COLUMNS):
        citing = _parse_positive_int(citing_s, "citing_pmid", row_no, path)
        cited = _parse_positive_int(cited_s, "cited_pmid", row_no, path)
        if citing == cited:
            raise IngestError(
                f"self-loop: paper {citing} cites itself", row=row_no, path=str(path)
            )
        edges.add(CitationEdge(citing, cited))
    return tuple(sorted(edges))


def ingest_annotations(path: str | Path) -> dict[InstanceID, Annotation]:
    """Read annotations.tsv (instance_id, ethnicity, gender); tags kept verbatim."""
    annotations: dict[InstanceID, Annotation] = {}
    for row_no, (instance_s, ethnicity, gender) in read_rows(path, ANNOTATIONS_COLUMNS):
        try:
            instance = parse_instance_id(instance_s)
        except ParseError as exc:
            raise IngestError(str(exc), row=row_no, path=str(path)) from None
        if instance in annotations:
            raise IngestError(
                f"duplicate annotation for instance {instance_s}",
                row=row_no,
                path=str(path),
            )
        annotations[instance] = Annotation(
            instance=instance, ethnicity=ethnicity, gender=gender
        )
    return annotations


def write_corpus(path: str | Path, corpus: Corpus) -> None:
    rows = []
    for paper in corpus:
        for name in paper.authors:
            if "|" in name:
                raise ValueError(f"author name {name!r} contains '|'")
        rows.append(
            (str(paper.pmid), str(paper.year), paper.raw_title, "|".join(paper.authors))
        )
    write_rows(path, PAPERS_COLUMNS, rows)


def write_clustering(path: str | Path, clustering: Clustering) -> None:
    rows = [
        (cluster_id, format_instance_id(instance))
        for cluster_id in sorted(clustering.clusters)
        for instance in sorted(clustering.clusters[cluster_id])
    ]
    write_rows(path, CLUSTERING_COLUMNS, rows)


def write_authority(path: str | Path, registry: Mapping[str, AuthorityProfile]) -> None:
    rows = [
        (profile.authority_id, profile.person_name, title)
        for _, profile in sorted(registry.items())
        for title in sorted(profile.work_titles)
    ]
    write_rows(path, AUTHORITY_COLUMNS, rows)


def write_grants(path: str | Path, grants: Mapping[str, GrantRecord]) -> None:
    rows = [
        (record.pi_id, record.pi_name, str(pmid))
        for _, record in sorted(grants.items())
        for pmid in sorted(record.funded_pmids)
    ]
    write_rows(path, GRANTS_COLUMNS, rows)


def write_citations(path: str | Path, edges: Iterable[CitationEdge]) -> None:
    rows = [(str(e.citing_pmid), str(e.cited_pmid)) for e in sorted(set(edges))]
    write_rows(path, CITATIONS_COLUMNS, rows)


def write_annotations(path: str | Path, annotations: Mapping[InstanceID, Annotation]) -> None:
    rows = [
        (format_instance_id(instance), ann.ethnicity, ann.gender)
        for instance, ann in sorted(annotations.items())
    ]
    write_rows(path, ANNOTATIONS_COLUMNS, rows)
