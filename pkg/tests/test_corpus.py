import numpy as np
import pytest

from factforge import corpus as C


def pv(p, v, c=()):
    return C.PropertyValue(tuple(p.split()), tuple(v.split()), tuple(c))


def make_record(n_pairs=6, n_sentences=3, tokens_per_sentence=10):
    pairs = [pv(f"prop{i}", f"value{i}") for i in range(n_pairs)]
    sents = [[f"w{s}_{t}" for t in range(tokens_per_sentence)] for s in range(n_sentences)]
    return C.PropertySet("e1", pairs), C.Document(sents)


# --- tokenization -----------------------------------------------------------


def test_tokenize_lowercases_and_splits_punctuation():
    assert C.tokenize("Robert Flaherty, (1884)") == [
        "robert", "flaherty", ",", "(", "1884", ")",
    ]


def test_tokenize_keeps_decimals_intact():
    assert C.tokenize("height 1.83 m.") == ["height", "1.83", "m", "."]


def test_split_sentences_on_terminal_plus_uppercase():
    parts = C.split_sentences("He directed films. Frances worked too. done")
    assert parts == ["He directed films.", "Frances worked too. done"]


def test_normalize_dates_iso_and_slash():
    assert C.normalize_dates("born 1884-02-16") == "born february 16 , 1884"
    assert C.normalize_dates("born 7/23/1951 x") == "born july 23 , 1951 x"
    assert C.normalize_dates("born 16.02.1884") == "born 16.02.1884"  # passthrough


def test_expand_date_tokens():
    assert C.expand_date_tokens(["1884-02-16"]) == ["february", "16", ",", "1884"]
    assert C.expand_date_tokens(["1884-13-16"]) == ["1884-13-16"]  # invalid month


# --- delexicalisation --------------------------------------------------------


def flaherty_pair():
    pset = C.PropertySet(
        "flaherty",
        [
            pv("birth date", "february 16 , 1884"),
            pv("death date", "july 23 , 1951"),
        ],
    )
    doc = C.Document(
        [["(", "february", "16", ",", "1884", "-", "july", "23", ",", "1951", ")"]]
    )
    return pset, doc


def test_delexicalise_positions_are_one_based_over_value():
    _, doc2 = C.delexicalise(*flaherty_pair())
    assert doc2.sentences[0] == [
        "(", "february", "DLX_birth_date_2", ",", "DLX_birth_date_4",
        "-", "july", "DLX_death_date_2", ",", "DLX_death_date_4", ")",
    ]
    assert doc2.delex_map.get("DLX_birth_date_2") == "16"
    assert doc2.delex_map.get("DLX_birth_date_4") == "1884"


def test_delexicalise_year_and_numeric_fallbacks():
    pset, _ = flaherty_pair()
    doc = C.Document([["in", "1879", "he", "made", "42", "films"]])
    _, doc2 = C.delexicalise(pset, doc)
    assert doc2.sentences[0] == ["in", "YEAR", "he", "made", "NUMERIC", "films"]


def test_delexicalise_without_numerals_is_identity():
    pset, _ = flaherty_pair()
    doc = C.Document([["no", "numbers", "here"]])
    _, doc2 = C.delexicalise(pset, doc)
    assert doc2.sentences == [["no", "numbers", "here"]]
    assert len(doc2.delex_map) == 0


def test_delex_map_collision_raises():
    m = C.DelexMap()
    m.add("DLX_x_1", "5")
    with pytest.raises(C.CorpusError, match="collision"):
        m.add("DLX_x_1", "7")
    m.add("DLX_x_1", "5")  # same surface is fine


def test_relexicalise_examples():
    m = C.DelexMap({"DLX_birth_date_2": "16"})
    assert C.relexicalise(["DLX_birth_date_2"], m) == (["16"], 0)
    assert C.relexicalise(["plain", "words"], m) == (["plain", "words"], 0)
    toks, unmapped = C.relexicalise(["DLX_spouse_1"], C.DelexMap())
    assert toks == ["DLX_spouse_1"] and unmapped == 1


def test_delex_relex_round_trip_for_covered_numerals():
    pset, doc = flaherty_pair()
    _, doc2 = C.delexicalise(pset, doc)
    restored, unmapped = C.relexicalise(doc2.sentences[0], doc2.delex_map)
    assert restored == doc.sentences[0]
    assert unmapped == 0


# --- filtering ----------------------------------------------------------------


def test_filter_removes_small_property_sets():
    keep = make_record(n_pairs=6)
    drop = make_record(n_pairs=5)
    out = C.filter_corpus([keep, drop], C.FilterLimits())
    assert out == [keep]


def test_filter_removes_single_sentence_docs():
    keep = make_record(n_sentences=2, tokens_per_sentence=12)
    drop = make_record(n_sentences=1, tokens_per_sentence=30)
    out = C.filter_corpus([keep, drop], C.FilterLimits())
    assert out == [keep]


def test_filter_keeps_valid_examples_unchanged():
    record = make_record()
    out = C.filter_corpus([record], C.FilterLimits())
    assert out[0] is record


def test_filter_is_idempotent():
    records = [make_record(n_pairs=k) for k in (5, 6, 7, 9)]
    once = C.filter_corpus(records, C.FilterLimits())
    twice = C.filter_corpus(once, C.FilterLimits())
    assert once == twice


def test_filter_exhausted_corpus_raises():
    with pytest.raises(C.CorpusError, match="exhausted"):
        C.filter_corpus([make_record(n_pairs=2)], C.FilterLimits())


def test_filter_unk_caps():
    pset, doc = make_record()
    vocab_in = C.Vocabulary.build(
        "input",
        {t: 1 for pair in pset.pairs for t in pair.input_tokens()},
        cap=1000,
    )
    # Output vocabulary that knows none of the document tokens: all UNKs.
    vocab_out = C.Vocabulary.build("output", {"irrelevant": 1}, cap=1000)
    with pytest.raises(C.CorpusError, match="exhausted"):
        C.filter_corpus([(pset, doc)], C.FilterLimits(max_text_unks=3), vocab_in, vocab_out)
    vocab_out2 = C.Vocabulary.build(
        "output", {t: 1 for s in doc.sentences for t in s}, cap=1000
    )
    assert C.filter_corpus(
        [(pset, doc)], C.FilterLimits(max_text_unks=3), vocab_in, vocab_out2
    )


# --- vocabulary ----------------------------------------------------------------


def test_vocab_caps_enforced():
    counts = {f"t{i}": i + 1 for i in range(100)}
    v = C.Vocabulary.build("output", counts, cap=20)
    assert len(v) == 20


def test_vocab_frequency_then_lexicographic_order():
    v = C.Vocabulary.build("output", {"a": 2, "b": 1}, cap=10)
    reserved = len(C.RESERVED_TOKENS)
    assert v.tokens[reserved:] == ["a", "b"]
    tie = C.Vocabulary.build("output", {"z": 3, "m": 3, "a": 3}, cap=10)
    assert tie.tokens[reserved:] == ["a", "m", "z"]


def test_vocab_cap_equal_reserved_is_reserved_only():
    v = C.Vocabulary.build("output", {"a": 5}, cap=len(C.RESERVED_TOKENS))
    assert v.tokens == list(C.RESERVED_TOKENS)


def test_vocab_cap_below_reserved_raises():
    with pytest.raises(C.CorpusError, match="reserved"):
        C.Vocabulary.build("output", {"a": 1}, cap=3)


def test_vocab_index_bijection():
    rng = np.random.default_rng(0)
    for _ in range(20):
        tokens = {f"tok{i}": int(rng.integers(1, 50)) for i in range(rng.integers(1, 60))}
        v = C.Vocabulary.build("output", tokens, cap=40)
        for t in v.tokens:
            assert v.token_of(v.index[t]) == t
        assert len(set(v.index.values())) == len(v.tokens)


def test_oov_words_rescued_via_property_slots():
    pset = C.PropertySet("e", [pv(f"p{i}", f"v{i}") for i in range(5)] + [pv("spouse", "frances hubbard")])
    # 'hubbard' loses the last vocabulary slot to 'aaa' on the frequency tie,
    # so it is delexicalised; its slot token DLX_spouse_2 then outranks 'aaa'
    # at the same count and takes the slot.
    doc = C.Document(
        [["married", "to", "filler"] * 10 + ["aaa"] * 5 + ["hubbard"] * 5]
    )
    corpus = [(pset, doc)]
    caps = C.VocabCaps(input_cap=1000, output_cap=len(C.RESERVED_TOKENS) + 4)
    vin, vout = C.build_vocabularies(corpus, caps)
    assert "hubbard" not in vout
    assert "DLX_spouse_2" in vout
    ids = C.encode_output_tokens(["married", "hubbard", "zzz"], pset, vout)
    assert ids[1] == vout.index["DLX_spouse_2"]
    assert ids[2] == vout.unk_id


# --- statistics -----------------------------------------------------------------


def test_stats_single_example():
    pset, doc = make_record(n_sentences=3)
    stats = C.corpus_stats([(pset, doc)])
    assert stats.size == 1
    assert stats.sentences == (3.0, 0.0)


def test_stats_population_sd():
    a = make_record(n_sentences=2, tokens_per_sentence=12)
    b = make_record(n_sentences=4, tokens_per_sentence=12)
    stats = C.corpus_stats([a, b])
    assert stats.sentences == (3.0, 1.0)


def test_stats_empty_corpus_raises():
    with pytest.raises(C.CorpusError):
        C.corpus_stats([])


# --- io ---------------------------------------------------------------------------


def test_corpus_roundtrip(tmp_path):
    pset, doc = flaherty_pair()
    pset = pset.with_empty_relation()
    path = tmp_path / "c.jsonl"
    C.write_corpus(path, [(pset, doc)])
    [(pset2, doc2)] = C.read_corpus(path)
    assert pset2.entity_id == pset.entity_id
    assert pset2.pairs == pset.pairs
    assert doc2.sentences == doc.sentences


def test_alignment_roundtrip(tmp_path):
    aset = C.AlignmentSet("e1", {(0, 1, 2), (1, 0, 3)})
    path = tmp_path / "a.tsv"
    C.write_alignments(path, [aset])
    loaded = C.read_alignments(path)
    assert loaded["e1"].links == aset.links


def test_texts_roundtrip(tmp_path):
    path = tmp_path / "t.txt"
    C.write_texts(path, [("e1", ["hello", "world"]), ("e2", ["bye"])])
    assert C.read_texts(path) == [("e1", ["hello", "world"]), ("e2", ["bye"])]


def test_malformed_corpus_line_raises(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text("{not json}\n")
    with pytest.raises(C.CorpusError, match="invalid JSON"):
        C.read_corpus(path)


# --- preprocessing pipeline -------------------------------------------------------


def test_preprocess_adds_exactly_one_empty_relation():
    pset, doc = make_record()
    out = C.preprocess_corpus([(pset, doc)])
    processed = out[0][0]
    assert sum(1 for p in processed.pairs if p.is_empty_relation) == 1
    again = C.preprocess_corpus(out)[0][0]
    assert sum(1 for p in again.pairs if p.is_empty_relation) == 1
    assert again.pairs[-1].is_empty_relation
