import pytest

from lptriage.errors import DuplicateEntryConflict, MissingCategory, ZeroCorpus
from lptriage.lexicon import POS, frequency_filter, load_lexicon

TABLE_COUNTS = {
    "CBG": 10, "CME": 6, "CTR": 29, "POP": 43, "PSY": 34,
    "AOT": 23, "SYB": 26, "API": 32, "EXC": 11, "NEG": 21,
}


def test_shipped_lexicon_totals(lexicon):
    assert {a: len(c.entries) for a, c in lexicon.categories.items()} == TABLE_COUNTS
    assert lexicon.warnings == []


def test_expected_count_mismatch_warns_not_errors(tmp_path, lexicon):
    text = ["version: 1"]
    for abbr, cat in lexicon.categories.items():
        pos = ",".join(sorted(p.value for p in cat.pos_constraint))
        text.append(f"[{abbr}] pos={pos} expected={cat.expected_count + 1}")
        text.extend(sorted(cat.entries))
    path = tmp_path / "lex.txt"
    path.write_text("\n".join(text))
    lex = load_lexicon(path)
    assert len(lex.warnings) == 10


def test_missing_category(tmp_path):
    path = tmp_path / "lex.txt"
    path.write_text("[CBG] pos=NOUN\ndeadlock\n")
    with pytest.raises(MissingCategory) as err:
        load_lexicon(path)
    assert "NEG" in str(err.value)


def test_duplicate_entry_in_category(tmp_path, lexicon):
    lines = []
    for abbr, cat in lexicon.categories.items():
        pos = ",".join(sorted(p.value for p in cat.pos_constraint))
        lines.append(f"[{abbr}] pos={pos}")
        lines.extend(sorted(cat.entries))
        if abbr == "CME":
            lines.append("lock")  # listed twice
    path = tmp_path / "lex.txt"
    path.write_text("\n".join(lines))
    with pytest.raises(DuplicateEntryConflict):
        load_lexicon(path)


def test_cross_category_pos_overlap_rejected(tmp_path, lexicon):
    lines = []
    for abbr, cat in lexicon.categories.items():
        pos = ",".join(sorted(p.value for p in cat.pos_constraint))
        lines.append(f"[{abbr}] pos={pos}")
        lines.extend(sorted(cat.entries))
        if abbr == "CBG":
            lines.append("lock")  # conflicts with CME (both NOUN)
    path = tmp_path / "lex.txt"
    path.write_text("\n".join(lines))
    with pytest.raises(DuplicateEntryConflict):
        load_lexicon(path)


def test_categorize_basics(lexicon):
    assert lexicon.categorize("deadlock", POS.NOUN) == {"CBG"}
    assert lexicon.categorize("lock", POS.VERB) == {"POP"}
    assert lexicon.categorize("lock", POS.NOUN) == {"CME"}
    assert lexicon.categorize("banana", POS.NOUN) == frozenset()
    assert lexicon.categorize("deadlock", POS.VERB) == {"PSY"}


def test_categorize_is_pure_lookup(lexicon):
    before = lexicon.categorize("hang", POS.VERB)
    lexicon.categorize("lock", POS.NOUN)
    assert lexicon.categorize("hang", POS.VERB) == before == {"PSY"}


def test_phrase_spans(lexicon):
    spans = lexicon.phrase_spans(["a", "race", "condition", "in", "code"])
    assert (1, 3, "race condition", "CBG") in spans


def test_frequency_filter_paper_arithmetic():
    # 130 occurrences over 1,734 sentences is above the 5% threshold
    retained = frequency_filter([("lock", 130)], 1734, 0.05)
    assert retained == [("lock", 130)]
    dropped = frequency_filter([("lock", 86)], 1734, 0.05)  # 0.0496 < 0.05
    assert dropped == []


def test_frequency_filter_threshold_zero_keeps_all():
    entries = [("a", 0), ("b", 3)]
    assert frequency_filter(entries, 10, 0.0) == entries


def test_frequency_filter_zero_corpus():
    with pytest.raises(ZeroCorpus):
        frequency_filter([("a", 1)], 0, 0.05)


def test_frequency_filter_antimonotone_in_threshold():
    entries = [(f"w{i}", i) for i in range(20)]
    prev = None
    for t in (0.0, 0.1, 0.3, 0.7, 1.0):
        kept = {w for w, _c in frequency_filter(entries, 20, t)}
        if prev is not None:
            assert kept <= prev
        prev = kept
