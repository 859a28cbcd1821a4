"""Heuristic disambiguators used as performance floors.

Both baselines group instances by a deterministic name key: the
blocking key (surname + first initial) or the refined key (surname +
all initials). The refined grouping always splits blocks, never merges
across them, so it refines the blocking partition.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator

from .corpus import Clustering, Corpus, InstanceID, format_instance_id
from .errors import ParseError
from .normalize import BlockKey, NameKey, PersonName, aini_key, fini_key, parse_name

UNPARSEABLE_PREFIX = "?unparseable:"


def corpus_names(corpus: Corpus) -> Iterator[tuple[InstanceID, PersonName | None]]:
    """Parse every byline name; None marks an unparseable one."""
    for paper in corpus:
        for position, raw in enumerate(paper.authors, start=1):
            instance = InstanceID(paper.pmid, position)
            try:
                yield instance, parse_name(raw)
            except ParseError:
                yield instance, None


def _sentinel_id(instance: InstanceID) -> str:
    return UNPARSEABLE_PREFIX + format_instance_id(instance)


def fini_cluster_id(key: BlockKey) -> str:
    return f"{key.surname}|{key.first_initial}"


def aini_cluster_id(key: NameKey) -> str:
    return f"{key.surname}|{key.all_initials}"


def cluster_fini(
    instances: Iterable[tuple[InstanceID, PersonName | None]]
) -> Clustering:
    """Group by blocking key; unparseable names become singletons."""
    clusters: dict[str, set[InstanceID]] = {}
    for instance, name in instances:
        cluster_id = (
            _sentinel_id(instance) if name is None else fini_cluster_id(fini_key(name))
        )
        clusters.setdefault(cluster_id, set()).add(instance)
    return Clustering(clusters)


def cluster_aini(
    instances: Iterable[tuple[InstanceID, PersonName | None]]
) -> Clustering:
    """Group by refined key; unparseable names become singletons."""
    clusters: dict[str, set[InstanceID]] = {}
    for instance, name in instances:
        cluster_id = (
            _sentinel_id(instance) if name is None else aini_cluster_id(aini_key(name))
        )
        clusters.setdefault(cluster_id, set()).add(instance)
    return Clustering(clusters)


def build_blocks(
    instances: Iterable[tuple[InstanceID, PersonName | None]]
) -> dict[BlockKey, set[InstanceID]]:
    """Blocking-key map inducing the same partition as cluster_fini.

    Unparseable names get a per-instance sentinel key so blocks stay a
    partition of the full input.
    """
    blocks: dict[BlockKey, set[InstanceID]] = {}
    for instance, name in instances:
        key = (
            BlockKey(_sentinel_id(instance), "")
            if name is None
            else fini_key(name)
        )
        blocks.setdefault(key, set()).add(instance)
    return blocks


def unparseable_count(clustering: Clustering) -> int:
    return sum(
        1 for cluster_id in clustering.clusters if cluster_id.startswith(UNPARSEABLE_PREFIX)
    )
