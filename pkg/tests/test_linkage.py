"""Labeling pipelines, label joins, and agreement."""

import itertools
import random

import pytest

from linklab.corpus import (
    Annotation,
    AuthorityProfile,
    CitationEdge,
    Clustering,
    Corpus,
    GrantRecord,
    InstanceID,
    PaperRecord,
)
from linklab.baseline import cluster_aini, cluster_fini, corpus_names
from linklab.errors import EvaluationError, IngestError
from linklab.linkage import (
    EvalDataset,
    EvalRow,
    LabeledInstance,
    PairSet,
    extract_selfcitation_pairs,
    join_labels,
    label_agreement,
    link_authority,
    link_grants,
    read_eval_dataset,
    read_labels,
    read_pairs,
    write_conflicts,
    write_eval_dataset,
    write_labels,
    write_pairs,
)
from linklab.metrics import pair_accuracy
from linklab.normalize import fini_key, parse_name


def make_corpus(*papers):
    return Corpus(
        {
            pmid: PaperRecord(pmid, year, title, tuple(authors))
            for pmid, year, title, authors in papers
        }
    )


def profile(authority_id, name, *titles):
    return AuthorityProfile(authority_id, name, frozenset(titles))


TITLE_1 = "Alpha beta gamma delta epsilon one"
TITLE_2 = "Alpha beta gamma delta epsilon two"
TITLE_DUP = "Same shared title words here"


@pytest.fixture
def corpus():
    return make_corpus(
        (1, 1999, TITLE_1, ["Hertzog, P J"]),
        (2, 2001, TITLE_2, ["Hertzog, P J", "Smith, John"]),
        (3, 2002, "Tiny title", ["Lee, Ann"]),
        (4, 2003, TITLE_DUP, ["Park, Quin"]),
        (5, 2004, TITLE_DUP, ["Park, Quin"]),
    )


def test_link_authority_empty_registry(corpus):
    result = link_authority(corpus, {})
    assert result.labels == ()
    assert result.conflicts == ()


def test_link_authority_matches_title_and_name(corpus):
    registry = {
        "orc-1": profile("orc-1", "Hertzog, Paul J", TITLE_1, TITLE_2),
        "orc-2": profile("orc-2", "Smith, J", TITLE_2),
    }
    result = link_authority(corpus, registry)
    assert [(str(l.instance), l.label_id) for l in result.labels] == [
        ("1_1", "orc-1"),
        ("2_1", "orc-1"),
        ("2_2", "orc-2"),
    ]
    assert all(l.source == "authority" for l in result.labels)
    assert result.labels[0].name.surname == "hertzog"
    assert result.conflicts == ()
    assert result.stats["labels"] == 3


def test_link_authority_ignores_short_and_duplicate_titles(corpus):
    registry = {
        "orc-3": profile("orc-3", "Lee, Ann", "Tiny title"),
        "orc-4": profile("orc-4", "Park, Quin", TITLE_DUP),
    }
    result = link_authority(corpus, registry)
    assert result.labels == ()
    assert result.stats["duplicate_title_copies_dropped"] == 2


def test_link_authority_keep_first_elects_lowest_pmid(corpus):
    registry = {"orc-4": profile("orc-4", "Park, Quin", TITLE_DUP)}
    result = link_authority(corpus, registry, dup_title_policy="keep-first")
    assert [(str(l.instance), l.label_id) for l in result.labels] == [("4_1", "orc-4")]
    assert result.stats["duplicate_title_copies_dropped"] == 1
    with pytest.raises(ValueError, match="dup_title_policy"):
        link_authority(corpus, registry, dup_title_policy="maybe")


def test_link_authority_title_match_alone_is_not_enough(corpus):
    registry = {"orc-5": profile("orc-5", "Different, Name", TITLE_1)}
    assert link_authority(corpus, registry).labels == ()


def test_link_authority_normalizes_before_matching():
    corpus = make_corpus((9, 2000, "The Rôle of  P53 in Cancer-Risk!", ["Kim, Jinseok"]))
    registry = {
        "orc-9": profile("orc-9", "Kim, J", "the role of P53 in cancer-risk?")
    }
    result = link_authority(corpus, registry)
    assert [str(l.instance) for l in result.labels] == ["9_1"]


def test_link_authority_ambiguous_profiles_conflict():
    corpus = make_corpus((7, 2005, TITLE_1, ["Kim, Jinseok"]))
    registry = {
        "orc-a": profile("orc-a", "Kim, J", TITLE_1),
        "orc-b": profile("orc-b", "Kim, Jin", TITLE_1),
    }
    result = link_authority(corpus, registry)
    assert result.labels == ()
    assert len(result.conflicts) == 1
    conflict = result.conflicts[0]
    assert conflict.reason == "instance_multilabel"
    assert conflict.instance == InstanceID(7, 1)
    assert "orc-a" in conflict.detail and "orc-b" in conflict.detail


def test_link_authority_two_positions_one_profile_conflict():
    corpus = make_corpus((8, 2005, TITLE_1, ["Smith, J", "Smith, Jane"]))
    registry = {"orc-s": profile("orc-s", "Smith, John", TITLE_1)}
    result = link_authority(corpus, registry)
    assert result.labels == ()
    assert {c.reason for c in result.conflicts} == {"paper_multimatch"}
    assert {c.instance for c in result.conflicts} == {
        InstanceID(8, 1),
        InstanceID(8, 2),
    }


def test_link_authority_mononym_never_matches():
    corpus = make_corpus((6, 2000, TITLE_1, ["Hertzog"]))
    registry = {"orc-m": profile("orc-m", "Hertzog", TITLE_1)}
    assert link_authority(corpus, registry).labels == ()


def test_link_grants_labels_funded_papers(corpus):
    grants = {
        "nih-1": GrantRecord("nih-1", "Hertzog, Paul", frozenset({1, 2, 77})),
    }
    result = link_grants(corpus, grants)
    assert [(str(l.instance), l.label_id) for l in result.labels] == [
        ("1_1", "nih-1"),
        ("2_1", "nih-1"),
    ]
    assert all(l.source == "grant" for l in result.labels)
    assert result.stats["funded_pmids"] == 3
    assert result.stats["funded_pmids_in_corpus"] == 2


def test_link_grants_conflicting_pis(corpus):
    grants = {
        "nih-1": GrantRecord("nih-1", "Hertzog, Paul", frozenset({1})),
        "nih-2": GrantRecord("nih-2", "Hertzog, Peter", frozenset({1})),
    }
    result = link_grants(corpus, grants)
    assert result.labels == ()
    assert [c.reason for c in result.conflicts] == ["instance_multilabel"]


def test_selfcitation_pairs_empty_and_single():
    corpus = make_corpus(
        (1, 1999, TITLE_1, ["Hertzog, P J"]),
        (2, 2001, TITLE_2, ["Hertzog, P J"]),
    )
    assert len(extract_selfcitation_pairs(corpus, [])) == 0
    pairs = extract_selfcitation_pairs(corpus, [CitationEdge(2, 1)])
    assert list(pairs) == [(InstanceID(1, 1), InstanceID(2, 1))]
    assert (InstanceID(2, 1), InstanceID(1, 1)) in pairs


def test_selfcitation_pairs_skip_out_of_corpus_edges():
    corpus = make_corpus((1, 1999, TITLE_1, ["Hertzog, P J"]))
    assert len(extract_selfcitation_pairs(corpus, [CitationEdge(2, 1)])) == 0


def test_selfcitation_pairs_match_brute_force():
    rng = random.Random(31)
    surnames = ["kim", "lee", "park"]
    forenames = ["J", "Jin", "M", "Min Ho"]
    papers = []
    for pmid in range(1, 40):
        authors = [
            f"{rng.choice(surnames)}, {rng.choice(forenames)}"
            for _ in range(rng.randint(1, 4))
        ]
        papers.append((pmid, 2000, TITLE_1 + f" {pmid}", authors))
    corpus = make_corpus(*papers)
    edges = {
        CitationEdge(*sorted(rng.sample(range(1, 40), 2), reverse=True))
        for _ in range(60)
    }

    expected = set()
    for edge in edges:
        citing = corpus.get(edge.citing_pmid)
        cited = corpus.get(edge.cited_pmid)
        for (pos_a, raw_a), (pos_b, raw_b) in itertools.product(
            enumerate(citing.authors, 1), enumerate(cited.authors, 1)
        ):
            if fini_key(parse_name(raw_a)) == fini_key(parse_name(raw_b)):
                a = InstanceID(edge.citing_pmid, pos_a)
                b = InstanceID(edge.cited_pmid, pos_b)
                expected.add((a, b) if a <= b else (b, a))

    pairs = extract_selfcitation_pairs(corpus, edges)
    assert pairs.pairs == frozenset(expected)

    names = list(corpus_names(corpus))
    assert pair_accuracy(pairs, cluster_fini(names)) == 1.0
    assert pair_accuracy(pairs, cluster_aini(names)) <= 1.0


def test_pairset_validation():
    a, b = InstanceID(1, 1), InstanceID(1, 2)
    with pytest.raises(ValueError, match="identical"):
        PairSet([(a, a)])
    with pytest.raises(ValueError, match="one paper"):
        PairSet([(a, b)])
    c = InstanceID(2, 1)
    assert PairSet([(a, c), (c, a)]).pairs == frozenset({(a, c)})


def test_join_labels_inner_join(corpus):
    labels = [
        LabeledInstance(InstanceID(1, 1), "orc-1", "authority"),
        LabeledInstance(InstanceID(2, 1), "orc-1", "authority"),
        LabeledInstance(InstanceID(2, 2), "orc-2", "authority"),
    ]
    clustering = Clustering(
        {"c1": {InstanceID(1, 1), InstanceID(2, 1)}, "c2": {InstanceID(3, 1)}}
    )
    annotations = {
        InstanceID(1, 1): Annotation(InstanceID(1, 1), "English", "Male"),
    }
    dataset = join_labels(labels, clustering, corpus, annotations)
    assert len(dataset) == 2
    assert dataset.dropped_unclustered == 1
    first, second = dataset.rows
    assert first == EvalRow(InstanceID(1, 1), "orc-1", "c1", 1999, "English", "Male")
    assert second.year == 2001
    assert second.ethnicity is None


def test_join_labels_disjoint_is_empty(corpus):
    labels = [LabeledInstance(InstanceID(1, 1), "orc-1", "authority")]
    clustering = Clustering({"c9": {InstanceID(5, 1)}})
    dataset = join_labels(labels, clustering, corpus)
    assert len(dataset) == 0
    assert dataset.dropped_unclustered == 1


def test_join_labels_missing_paper(corpus):
    labels = [LabeledInstance(InstanceID(99, 1), "orc-1", "authority")]
    clustering = Clustering({"c1": {InstanceID(99, 1)}})
    dataset = join_labels(labels, clustering, corpus)
    assert len(dataset) == 0
    assert dataset.dropped_missing_paper == 1
    with pytest.raises(EvaluationError, match="not in the corpus"):
        join_labels(labels, clustering, corpus, strict=True)


def test_join_labels_rejects_mixed_sources(corpus):
    labels = [
        LabeledInstance(InstanceID(1, 1), "orc-1", "authority"),
        LabeledInstance(InstanceID(1, 1), "nih-1", "grant"),
    ]
    clustering = Clustering({"c1": {InstanceID(1, 1)}})
    with pytest.raises(ValueError, match="one labeling source"):
        join_labels(labels, clustering, corpus)


def rows_from(assignments):
    return [
        EvalRow(InstanceID(i, 1), truth, pred, 2000, None, None)
        for i, (truth, pred) in enumerate(assignments, start=1)
    ]


def test_label_agreement_identical():
    a = EvalDataset(rows_from([("x", "p"), ("x", "p"), ("y", "q")]))
    report = label_agreement(a, a)
    assert report.overlap_count == 3
    assert report.agree_count == 3
    assert report.disagreements == ()


def test_label_agreement_is_namespace_invariant():
    a = EvalDataset(rows_from([("x", "p"), ("x", "p"), ("y", "q")]))
    b = EvalDataset(rows_from([("u9", "p"), ("u9", "p"), ("v7", "q")]))
    report = label_agreement(a, b)
    assert report.agree_count == 3
    assert report.disagreements == ()


def test_label_agreement_planted_move():
    a = EvalDataset(
        rows_from([("x", "p")] * 3 + [("y", "q")] * 2)
    )
    moved = rows_from([("x", "p")] * 3 + [("y", "q")] * 2)
    moved[2] = moved[2]._replace(truth_label="z")
    b_rows = [
        EvalRow(r.instance, {"x": "A", "y": "B", "z": "B"}[r.truth_label], r.predicted_cluster_id, r.year, None, None)
        for r in moved
    ]
    report = label_agreement(a, EvalDataset(b_rows))
    assert report.overlap_count == 5
    assert report.agree_count == 4
    assert report.disagreements == ((InstanceID(3, 1), "x", "B"),)


def test_label_agreement_no_overlap():
    a = EvalDataset(rows_from([("x", "p")]))
    b = EvalDataset(
        [EvalRow(InstanceID(9, 1), "x", "p", 2000, None, None)]
    )
    assert label_agreement(a, b) == (0, 0, ())


def test_labels_round_trip(tmp_path):
    labels = (
        LabeledInstance(InstanceID(1, 1), "orc-1", "authority"),
        LabeledInstance(InstanceID(2, 1), "nih-1", "grant"),
    )
    path = tmp_path / "labels.tsv"
    write_labels(path, labels)
    assert read_labels(path) == labels
    text = path.read_text(encoding="utf-8").splitlines()
    assert text[0] == "instance_id\tlabel_id\tsource"
    assert text[1] == "1_1\torc-1\tauthority"


def test_read_labels_rejects_bad_rows(tmp_path):
    path = tmp_path / "labels.tsv"
    path.write_text(
        "instance_id\tlabel_id\tsource\n1_1\torc-1\tguesswork\n", encoding="utf-8"
    )
    with pytest.raises(IngestError, match="unknown source"):
        read_labels(path)
    path.write_text(
        "instance_id\tlabel_id\tsource\n"
        "1_1\torc-1\tauthority\n1_1\torc-2\tauthority\n",
        encoding="utf-8",
    )
    with pytest.raises(IngestError, match="duplicate label"):
        read_labels(path)


def test_pairs_round_trip(tmp_path):
    pairs = PairSet([(InstanceID(2, 1), InstanceID(1, 1))])
    path = tmp_path / "pairs.tsv"
    write_pairs(path, pairs)
    assert read_pairs(path) == pairs
    path.write_text("instance_a\tinstance_b\n1_1\t1_2\n", encoding="utf-8")
    with pytest.raises(IngestError, match="distinct papers"):
        read_pairs(path)


def test_eval_dataset_round_trip(tmp_path):
    dataset = EvalDataset(
        [
            EvalRow(InstanceID(1, 1), "orc-1", "c1", 1999, "English", "Male"),
            EvalRow(InstanceID(2, 1), "orc-2", "c2", 2001, None, None),
        ]
    )
    path = tmp_path / "eval_dataset.tsv"
    write_eval_dataset(path, dataset)
    again = read_eval_dataset(path)
    assert again == dataset
    assert again.rows[1].ethnicity is None


def test_write_conflicts(tmp_path, corpus):
    registry = {
        "orc-a": profile("orc-a", "Kim, J", TITLE_1),
        "orc-b": profile("orc-b", "Kim, Jin", TITLE_1),
    }
    bad_corpus = make_corpus((7, 2005, TITLE_1, ["Kim, Jinseok"]))
    result = link_authority(bad_corpus, registry)
    path = tmp_path / "conflicts.log"
    write_conflicts(path, result.conflicts)
    assert path.read_text(encoding="utf-8") == (
        "instance_multilabel\t7_1\tauthority:orc-a,orc-b\n"
    )


def test_linking_is_input_order_insensitive(corpus):
    registry_a = {
        "orc-1": profile("orc-1", "Hertzog, Paul J", TITLE_1, TITLE_2),
        "orc-2": profile("orc-2", "Smith, J", TITLE_2),
    }
    registry_b = dict(reversed(list(registry_a.items())))
    assert link_authority(corpus, registry_a).labels == link_authority(
        corpus, registry_b
    ).labels
