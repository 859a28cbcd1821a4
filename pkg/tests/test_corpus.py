"""Data model and TSV ingestion."""

import gzip

import pytest

from linklab.corpus import (
    Clustering,
    InstanceID,
    format_instance_id,
    ingest_annotations,
    ingest_authority,
    ingest_citations,
    ingest_clustering,
    ingest_corpus,
    ingest_grants,
    parse_instance_id,
    write_annotations,
    write_authority,
    write_citations,
    write_clustering,
    write_corpus,
    write_grants,
)
from linklab.errors import IngestError, ParseError


def write_tsv(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_parse_instance_id():
    assert parse_instance_id("1234567_2") == InstanceID(pmid=1234567, position=2)
    assert parse_instance_id("1701372_1") == InstanceID(pmid=1701372, position=1)


def test_instance_id_round_trip():
    for text in ("1_1", "1234567_2", "999999999_40"):
        assert format_instance_id(parse_instance_id(text)) == text


@pytest.mark.parametrize(
    "bad", ["", "12", "_1", "12_", "12_0", "0_1", "-3_1", "12_1_1", "a_1", "12_b", "1.0_2"]
)
def test_parse_instance_id_rejects(bad):
    with pytest.raises(ParseError):
        parse_instance_id(bad)


def test_ingest_corpus(tmp_path):
    path = write_tsv(
        tmp_path / "papers.tsv",
        "pmid\tyear\ttitle\tauthors\n"
        "3\t1999\tThird paper\tSmith, John|Lee, Ann\n"
        "1\t2001\tFirst paper\tSolo, Han\n"
        "2\t2005\tSecond paper\tOne, A|Two, B|Three, C\n",
    )
    corpus = ingest_corpus(path)
    assert len(corpus) == 3
    assert corpus.papers[3].authors == ("Smith, John", "Lee, Ann")
    assert corpus.papers[1].year == 2001
    assert [p.pmid for p in corpus] == [1, 2, 3]
    assert list(corpus.instances()) == [
        InstanceID(1, 1),
        InstanceID(2, 1),
        InstanceID(2, 2),
        InstanceID(2, 3),
        InstanceID(3, 1),
        InstanceID(3, 2),
    ]
    assert corpus.byline_name(InstanceID(3, 2)) == "Lee, Ann"
    assert corpus.has_instance(InstanceID(2, 3))
    assert not corpus.has_instance(InstanceID(2, 4))
    assert not corpus.has_instance(InstanceID(9, 1))


def test_ingest_corpus_duplicate_pmid_errors_at_second_row(tmp_path):
    path = write_tsv(
        tmp_path / "papers.tsv",
        "pmid\tyear\ttitle\tauthors\n"
        "7\t1999\tOne\tA, B\n"
        "8\t1999\tTwo\tA, B\n"
        "7\t2000\tThree\tA, B\n",
    )
    with pytest.raises(IngestError, match="duplicate pmid 7") as err:
        ingest_corpus(path)
    assert err.value.row == 3


@pytest.mark.parametrize(
    "row,message",
    [
        ("7\t\tTitle here\tA, B", "year"),
        ("7\t1999\t\tA, B", "title"),
        ("7\t1999\tTitle here\t", "author"),
        ("7\t1999\tTitle here\tA, B||C, D", "author"),
        ("0\t1999\tTitle here\tA, B", "pmid"),
        ("7\t1999\tTitle here", "columns"),
    ],
)
def test_ingest_corpus_bad_rows(tmp_path, row, message):
    path = write_tsv(tmp_path / "papers.tsv", f"pmid\tyear\ttitle\tauthors\n{row}\n")
    with pytest.raises(IngestError, match=message) as err:
        ingest_corpus(path)
    assert err.value.row == 1


def test_ingest_corpus_bad_header(tmp_path):
    path = write_tsv(tmp_path / "papers.tsv", "pmid\tyear\ttitle\n1\t1999\tT\n")
    with pytest.raises(IngestError, match="header"):
        ingest_corpus(path)


def test_ingest_corpus_gzip(tmp_path):
    path = tmp_path / "papers.tsv.gz"
    with gzip.open(path, "wt", encoding="utf-8") as fh:
        fh.write("pmid\tyear\ttitle\tauthors\n1\t1999\tOnly one\tSolo, Han\n")
    corpus = ingest_corpus(path)
    assert corpus.papers[1].raw_title == "Only one"


def test_ingest_clustering(tmp_path):
    path = write_tsv(
        tmp_path / "clustering.tsv",
        "cluster_id\tinstance_id\nA\t1_1\nA\t2_1\nB\t3_1\n",
    )
    clustering = ingest_clustering(path)
    assert clustering.n_clusters == 2
    assert sorted(len(m) for m in clustering.clusters.values()) == [1, 2]
    assert clustering.assignment[InstanceID(2, 1)] == "A"


def test_ingest_clustering_rejects_double_assignment(tmp_path):
    path = write_tsv(
        tmp_path / "clustering.tsv",
        "cluster_id\tinstance_id\nA\t1_1\nB\t1_1\n",
    )
    with pytest.raises(IngestError, match="already assigned") as err:
        ingest_clustering(path)
    assert err.value.row == 2


def test_clustering_partition_validation():
    a, b = InstanceID(1, 1), InstanceID(2, 1)
    with pytest.raises(ValueError, match="in both"):
        Clustering({"A": {a, b}, "B": {b}})
    with pytest.raises(ValueError, match="no members"):
        Clustering({"A": {a}, "B": set()})
    with pytest.raises(ValueError, match="cluster_id"):
        Clustering({"": {a}})


def test_clustering_restrict():
    a, b, c = InstanceID(1, 1), InstanceID(2, 1), InstanceID(3, 1)
    clustering = Clustering({"A": {a, b}, "B": {c}})
    kept = clustering.restrict({a, b})
    assert kept.clusters == {"A": frozenset({a, b})}


def test_clustering_round_trip(tmp_path):
    clustering = Clustering(
        {
            "x9": {InstanceID(5, 2), InstanceID(1, 1)},
            "x10": {InstanceID(2, 1)},
        }
    )
    path = tmp_path / "clustering.tsv"
    write_clustering(path, clustering)
    assert ingest_clustering(path) == clustering
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines == ["cluster_id\tinstance_id", "x10\t2_1", "x9\t1_1", "x9\t5_2"]


def test_ingest_authority_groups_rows(tmp_path):
    path = write_tsv(
        tmp_path / "authority.tsv",
        "authority_id\tname\ttitle\n"
        "orc-1\tSmith, John\tPaper one\n"
        "orc-1\tSmith, John\tPaper two\n"
        "orc-2\tLee, Ann\tPaper one\n",
    )
    registry = ingest_authority(path)
    assert set(registry) == {"orc-1", "orc-2"}
    assert registry["orc-1"].work_titles == frozenset({"Paper one", "Paper two"})
    assert registry["orc-2"].person_name == "Lee, Ann"


def test_ingest_authority_conflicting_name(tmp_path):
    path = write_tsv(
        tmp_path / "authority.tsv",
        "authority_id\tname\ttitle\n"
        "orc-1\tSmith, John\tPaper one\n"
        "orc-1\tSmith, Jane\tPaper two\n",
    )
    with pytest.raises(IngestError, match="conflicting names") as err:
        ingest_authority(path)
    assert err.value.row == 2


def test_ingest_grants_groups_rows(tmp_path):
    path = write_tsv(
        tmp_path / "grants.tsv",
        "pi_id\tpi_name\tpmid\nnih-1\tSmith, John\t10\nnih-1\tSmith, John\t11\n",
    )
    grants = ingest_grants(path)
    assert grants["nih-1"].funded_pmids == frozenset({10, 11})


def test_ingest_citations_dedupes_and_sorts(tmp_path):
    path = write_tsv(
        tmp_path / "citations.tsv",
        "citing_pmid\tcited_pmid\n5\t3\n2\t9\n5\t3\n",
    )
    edges = ingest_citations(path)
    assert edges == ((2, 9), (5, 3))


def test_ingest_citations_rejects_self_loop(tmp_path):
    path = write_tsv(
        tmp_path / "citations.tsv", "citing_pmid\tcited_pmid\n5\t5\n"
    )
    with pytest.raises(IngestError, match="self-loop") as err:
        ingest_citations(path)
    assert err.value.row == 1


def test_ingest_annotations(tmp_path):
    path = write_tsv(
        tmp_path / "annotations.tsv",
        "instance_id\tethnicity\tgender\n1_1\tKorean-English\tFemale\n2_1\t\tNULL\n",
    )
    annotations = ingest_annotations(path)
    assert annotations[InstanceID(1, 1)].ethnicity == "Korean-English"
    assert annotations[InstanceID(2, 1)].ethnicity == ""
    assert annotations[InstanceID(2, 1)].gender == "NULL"


def test_ingest_annotations_duplicate_instance(tmp_path):
    path = write_tsv(
        tmp_path / "annotations.tsv",
        "instance_id\tethnicity\tgender\n1_1\tEnglish\tMale\n1_1\tEnglish\tMale\n",
    )
    with pytest.raises(IngestError, match="duplicate annotation") as err:
        ingest_annotations(path)
    assert err.value.row == 2


def test_ingest_is_order_insensitive(tmp_path):
    header = "authority_id\tname\ttitle\n"
    rows = ["orc-1\tSmith, John\tPaper one\n", "orc-2\tLee, Ann\tPaper two\n"]
    a = write_tsv(tmp_path / "a.tsv", header + "".join(rows))
    b = write_tsv(tmp_path / "b.tsv", header + "".join(reversed(rows)))
    assert ingest_authority(a) == ingest_authority(b)


def test_write_round_trips(tmp_path):
    corpus_path = write_tsv(
        tmp_path / "papers.tsv",
        "pmid\tyear\ttitle\tauthors\n2\t2005\tSecond\tOne, A|Two, B\n1\t2001\tFirst\tSolo, Han\n",
    )
    corpus = ingest_corpus(corpus_path)
    out = tmp_path / "papers_out.tsv"
    write_corpus(out, corpus)
    assert ingest_corpus(out).papers == corpus.papers

    registry = ingest_authority(
        write_tsv(
            tmp_path / "authority.tsv",
            "authority_id\tname\ttitle\norc-1\tSmith, John\tPaper one\n",
        )
    )
    write_authority(tmp_path / "authority_out.tsv", registry)
    assert ingest_authority(tmp_path / "authority_out.tsv") == registry

    grants = ingest_grants(
        write_tsv(
            tmp_path / "grants.tsv", "pi_id\tpi_name\tpmid\nnih-1\tSmith, John\t10\n"
        )
    )
    write_grants(tmp_path / "grants_out.tsv", grants)
    assert ingest_grants(tmp_path / "grants_out.tsv") == grants

    edges = ingest_citations(
        write_tsv(tmp_path / "citations.tsv", "citing_pmid\tcited_pmid\n5\t3\n")
    )
    write_citations(tmp_path / "citations_out.tsv", edges)
    assert ingest_citations(tmp_path / "citations_out.tsv") == edges

    annotations = ingest_annotations(
        write_tsv(
            tmp_path / "annotations.tsv",
            "instance_id\tethnicity\tgender\n1_1\tEnglish\tMale\n",
        )
    )
    write_annotations(tmp_path / "annotations_out.tsv", annotations)
    assert ingest_annotations(tmp_path / "annotations_out.tsv") == annotations


def test_gzip_write_is_deterministic(tmp_path):
    clustering = Clustering({"A": {InstanceID(1, 1)}})
    first = tmp_path / "first.tsv.gz"
    second = tmp_path / "second.tsv.gz"
    write_clustering(first, clustering)
    write_clustering(second, clustering)
    assert first.read_bytes() == second.read_bytes()
    assert ingest_clustering(first) == clustering
