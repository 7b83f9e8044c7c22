from pathlib import Path

import numpy as np
import pytest

from hatenet.corpus import (
    ClassLabel,
    LabeledCorpus,
    SplitSpec,
    combine,
    load_hon,
    load_labeled_lines,
    load_olid,
    load_unlabeled,
    split,
)
from hatenet.errors import CorpusTooSmall, MissingColumn
from hatenet.text import RawPost

FIXTURES = Path(__file__).parent / "fixtures"


def make_corpus(counts, provenance="fix"):
    posts = []
    for label, n in zip(ClassLabel, counts):
        posts.extend(
            RawPost(f"post {label.name} {i}", label=int(label), source_id=f"{label.name}{i}")
            for i in range(n)
        )
    return LabeledCorpus(posts, provenance=provenance)


class TestLoadHon:
    def test_three_row_fixture(self, tmp_path):
        p = tmp_path / "h.csv"
        p.write_text('id,class,tweet\n1,0,"a b"\n2,1,c d\n3,2,e f\n')
        corpus = load_hon(str(p))
        assert corpus.class_counts == (1, 1, 1)
        assert corpus.posts[0].text == "a b"
        assert corpus.provenance == "hon"

    def test_bad_class_code_skipped(self, tmp_path):
        p = tmp_path / "h.csv"
        p.write_text("class,tweet\n7,bad row\n0,fine\n")
        corpus = load_hon(str(p))
        assert len(corpus) == 1
        assert corpus.skipped == 1

    def test_missing_column(self, tmp_path):
        p = tmp_path / "h.csv"
        p.write_text("klass,tweet\n0,x\n")
        with pytest.raises(MissingColumn):
            load_hon(str(p))
        p.write_text("")
        with pytest.raises(MissingColumn):
            load_hon(str(p))

    def test_text_not_mutated(self, tmp_path):
        import csv

        p = tmp_path / "h.csv"
        raw = '@User SHOUTING http://x.y #tag, "quoted" bit'
        with open(p, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["class", "tweet"])
            writer.writerow(["0", raw])
        corpus = load_hon(str(p))
        assert corpus.posts[0].text == raw

    def test_sample_fixture(self):
        corpus = load_hon(str(FIXTURES / "hon_sample.csv"))
        assert corpus.class_counts == (8, 30, 22)
        assert corpus.skipped == 0


class TestLoadOlid:
    def test_mapping_rules(self, tmp_path):
        p = tmp_path / "o.tsv"
        rows = [
            "id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c",
            "1\tgroup targeted\tOFF\tTIN\tGRP",
            "2\tclean\tNOT\tNULL\tNULL",
            "3\tindividual\tOFF\tTIN\tIND",
            "4\tuntargeted\tOFF\tUNT\tNULL",
            "5\tother target\tOFF\tTIN\tOTH",
        ]
        p.write_text("\n".join(rows) + "\n")
        corpus = load_olid(str(p))
        labels = [post.label for post in corpus.posts]
        assert labels == [int(ClassLabel.H), int(ClassLabel.N), int(ClassLabel.O),
                          int(ClassLabel.O), int(ClassLabel.O)]

    def test_mapping_total_over_fixture(self):
        corpus = load_olid(str(FIXTURES / "olid_sample.tsv"))
        assert corpus.skipped == 0
        assert len(corpus) == 10
        assert corpus.class_counts == (3, 3, 4)

    def test_bad_subtask_a_skipped(self, tmp_path):
        p = tmp_path / "o.tsv"
        p.write_text("id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c\n"
                     "1\tx\tMAYBE\tNULL\tNULL\n2\ty\tNOT\tNULL\tNULL\n")
        corpus = load_olid(str(p))
        assert len(corpus) == 1
        assert corpus.skipped == 1

    def test_missing_column(self, tmp_path):
        p = tmp_path / "o.tsv"
        p.write_text("id\ttweet\tsubtask_a\tsubtask_b\n1\tx\tNOT\tNULL\n")
        with pytest.raises(MissingColumn):
            load_olid(str(p))


class TestCombineAndLines:
    def test_identity_with_single(self):
        a = make_corpus((2, 3, 4))
        out = combine([a])
        assert out.class_counts == (2, 3, 4)
        assert [p.source_id for p in out.posts] == [p.source_id for p in a.posts]

    def test_counts_additive(self):
        a = make_corpus((2, 3, 4), "a")
        b = make_corpus((1, 1, 1), "b")
        out = combine([a, b])
        assert out.class_counts == (3, 4, 5)
        assert out.provenance == "a+b"
        assert len(out) == len(a) + len(b)

    def test_labeled_lines(self, tmp_path):
        p = tmp_path / "lines.txt"
        p.write_text("0\thate text\n1\toffensive text\n\n2\tneither text\nx\tbad\n")
        corpus = load_labeled_lines(str(p))
        assert corpus.class_counts == (1, 1, 1)
        assert corpus.skipped == 1

    def test_load_unlabeled(self, tmp_path):
        p = tmp_path / "u.txt"
        p.write_text("")
        assert load_unlabeled(str(p)) == []
        p.write_text("one\ntwo\nthree\n")
        assert len(load_unlabeled(str(p))) == 3
        p.write_text("one\n\n  \ntwo\n")
        posts = load_unlabeled(str(p))
        assert [x.text for x in posts] == ["one", "two"]
        assert all(x.label is None for x in posts)


class TestSplit:
    def test_exact_sizes_on_multiples_of_ten(self):
        corpus = make_corpus((40, 30, 30))
        train, valid, test = split(corpus, SplitSpec(seed=1))
        assert (len(train), len(valid), len(test)) == (80, 10, 10)

    def test_deterministic_under_seed(self):
        corpus = make_corpus((40, 30, 30))
        a = split(corpus, SplitSpec(seed=7))
        b = split(corpus, SplitSpec(seed=7))
        for part_a, part_b in zip(a, b):
            assert [p.source_id for p in part_a.posts] == [p.source_id for p in part_b.posts]
        c = split(corpus, SplitSpec(seed=8))
        assert any(
            [p.source_id for p in x.posts] != [p.source_id for p in y.posts]
            for x, y in zip(a, c)
        )

    def test_disjoint_exhaustive(self):
        corpus = make_corpus((13, 17, 23))
        parts = split(corpus, SplitSpec(seed=3))
        ids = [frozenset(p.source_id for p in part.posts) for part in parts]
        assert not (ids[0] & ids[1] or ids[0] & ids[2] or ids[1] & ids[2])
        assert ids[0] | ids[1] | ids[2] == {p.source_id for p in corpus.posts}

    def test_stratified_proportions(self):
        corpus = make_corpus((100, 500, 400))
        train, valid, test = split(corpus, SplitSpec(seed=5))
        for part, frac in ((train, 0.8), (valid, 0.1), (test, 0.1)):
            for cls, total in zip(ClassLabel, (100, 500, 400)):
                got = part.class_counts[cls]
                assert abs(got - frac * total) <= 1.0

    def test_too_small_class_rejected(self):
        corpus = make_corpus((2, 5, 5))
        with pytest.raises(CorpusTooSmall):
            split(corpus, SplitSpec(seed=0))

    def test_unstratified_allows_small_classes(self):
        corpus = make_corpus((2, 5, 5))
        parts = split(corpus, SplitSpec(seed=0, stratified=False))
        assert sum(len(p) for p in parts) == 12

    def test_fraction_validation(self):
        with pytest.raises(ValueError):
            split(make_corpus((5, 5, 5)), SplitSpec(fractions=(0.5, 0.2, 0.2)))
