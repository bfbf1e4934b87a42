import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from semrel.corpus import TokenAnnotation
from semrel.errors import ConfigError, DataError, NumericalError
from semrel.textstats import ContentFilter, tokenize
from semrel.wordvec import (
    cosine,
    dependency_depths,
    load_vectors,
    mean_embedding,
    select_annotation_indices,
)

from helpers import write_vector_table


def _ann(idx, surface, upos, head, pair_id="p1", side="A"):
    return TokenAnnotation(pair_id, side, idx, surface, upos, head)


# --- load_vectors ---


def test_load_two_rows(tmp_path):
    table = load_vectors(write_vector_table(tmp_path / "v.txt", {
        "cat": [1, 0, 0], "dog": [0, 1, 0],
    }))
    assert table.dim == 3
    assert len(table) == 2
    assert np.array_equal(table.lookup("cat"), [1.0, 0.0, 0.0])


def test_dimension_mismatch_names_line(tmp_path):
    path = tmp_path / "v.txt"
    path.write_text("cat 1 0 0\ndog 0 1\n", encoding="utf-8")
    with pytest.raises(DataError, match="line 2"):
        load_vectors(path)


def test_non_numeric_value(tmp_path):
    path = tmp_path / "v.txt"
    path.write_text("cat 1 x 0\n", encoding="utf-8")
    with pytest.raises(DataError, match="line 1"):
        load_vectors(path)


def test_fixture_row_returned_exactly(tmp_path):
    rng = np.random.default_rng(3)
    entries = {f"tok{i}": rng.normal(size=4) for i in range(50)}
    entries["cat"] = np.array([0.125, -2.5, 0.75, 3.0])
    table = load_vectors(write_vector_table(tmp_path / "v.txt", entries))
    assert np.array_equal(table.lookup("cat"), [0.125, -2.5, 0.75, 3.0])


def test_duplicate_token_last_wins_and_counted(tmp_path):
    path = tmp_path / "v.txt"
    path.write_text("cat 1 1\nCAT 2 2\n", encoding="utf-8")
    table = load_vectors(path)
    assert table.duplicate_count == 1
    assert np.array_equal(table.lookup("cat"), [2.0, 2.0])


def test_lookup_is_case_folded(tmp_path):
    table = load_vectors(write_vector_table(tmp_path / "v.txt", {"Köln": [1, 2]}))
    assert table.lookup("köln") is not None
    assert table.lookup("KÖLN") is not None


# --- mean_embedding ---


@pytest.fixture
def table(tmp_path):
    return load_vectors(write_vector_table(tmp_path / "v.txt", {
        "cat": [1, 0], "dog": [0, 1], "sun": [1, 1], "runs": [3, 5],
    }))


def test_mean_of_single_token(table):
    emb = mean_embedding(tokenize("cat"), table)
    assert np.array_equal(emb.vector, [1.0, 0.0])
    assert emb.valid
    assert (emb.covered_tokens, emb.total_tokens) == (1, 1)


def test_mean_of_two_tokens(table):
    emb = mean_embedding(tokenize("cat dog"), table)
    assert np.array_equal(emb.vector, [0.5, 0.5])


def test_oov_skipped_and_counted(table):
    emb = mean_embedding(tokenize("cat zebra"), table)
    assert np.array_equal(emb.vector, [1.0, 0.0])
    assert (emb.covered_tokens, emb.total_tokens) == (1, 2)


def test_zero_coverage_flagged_invalid(table):
    emb = mean_embedding(tokenize("zebra yak"), table)
    assert not emb.valid
    assert np.array_equal(emb.vector, [0.0, 0.0])


def test_mean_over_copies_equals_token_vector(table):
    emb = mean_embedding(tokenize("cat cat cat cat"), table)
    assert np.array_equal(emb.vector, [1.0, 0.0])


def test_source_records_table_and_selection(table):
    assert mean_embedding(tokenize("cat"), table).source == "v:all"


# --- selections ---


CHAIN = [
    _ann(0, "root", "VERB", -1),
    _ann(1, "one", "NOUN", 0),
    _ann(2, "two", "ADJ", 1),
    _ann(3, "three", "NOUN", 2),
    _ann(4, "four", "ADV", 3),
]


def test_chain_depths():
    assert dependency_depths(CHAIN) == {0: 0, 1: 1, 2: 2, 3: 3, 4: 4}


def test_tree_top3_keeps_first_three_levels():
    assert select_annotation_indices(CHAIN, "tree_top3") == [0, 1, 2]


def test_tree_top3_includes_root(table):
    anns = [_ann(0, "cat", "NOUN", -1), _ann(1, "runs", "VERB", 0)]
    idx = select_annotation_indices(anns, "tree_top3")
    assert 0 in idx


def test_noun_selection():
    anns = [
        _ann(0, "runs", "VERB", -1),
        _ann(1, "cat", "NOUN", 0),
        _ann(2, "berlin", "PROPN", 0),
        _ann(3, "quick", "ADJ", 1),
    ]
    assert select_annotation_indices(anns, "noun") == [1, 2]


def test_content_selection_open_class_with_filter_refinement():
    anns = [
        _ann(0, "runs", "VERB", -1),
        _ann(1, "the", "DET", 0),
        _ann(2, "cat", "NOUN", 0),
    ]
    assert select_annotation_indices(anns, "content") == [0, 2]
    # A filter can drop open-class tokens it still considers functional.
    filt = ContentFilter(["runs"])
    assert select_annotation_indices(anns, "content", filt) == [2]


def test_punctuation_surfaces_never_selected():
    anns = [_ann(0, "cat", "NOUN", -1), _ann(1, ".", "PUNCT", 0)]
    assert select_annotation_indices(anns, "all") == [0]


def test_selection_requirements(table):
    with pytest.raises(ConfigError, match="annotations"):
        mean_embedding(tokenize("cat"), table, selection="noun")
    with pytest.raises(ConfigError, match="annotations"):
        mean_embedding(tokenize("cat"), table, selection="tree_top3")
    with pytest.raises(ConfigError):
        mean_embedding(tokenize("cat"), table, selection="content")
    with pytest.raises(ConfigError, match="selection"):
        mean_embedding(tokenize("cat"), table, selection="verbs_only")


def test_content_selection_via_filter_without_annotations(table):
    filt = ContentFilter(["the"])
    emb = mean_embedding(tokenize("the cat"), table, selection="content",
                         content_filter=filt)
    assert np.array_equal(emb.vector, [1.0, 0.0])


def test_tree_selection_feeds_mean(table):
    anns = [
        _ann(0, "runs", "VERB", -1),
        _ann(1, "cat", "NOUN", 0),
        _ann(2, "dog", "NOUN", 1),
        _ann(3, "sun", "NOUN", 2),
        _ann(4, "cat", "NOUN", 3),
    ]
    emb = mean_embedding(tokenize("runs cat dog sun cat"), table,
                         selection="tree_top3", annotations=anns)
    expected = (np.array([3, 5]) + np.array([1, 0]) + np.array([0, 1])) / 3
    assert np.allclose(emb.vector, expected)


def test_cycle_tokens_treated_as_deep():
    anns = [
        _ann(0, "root", "VERB", -1),
        _ann(1, "a", "NOUN", 2),
        _ann(2, "b", "NOUN", 1),
    ]
    depths = dependency_depths(anns)
    assert depths == {0: 0}
    assert select_annotation_indices(anns, "tree_top3") == [0]


# --- cosine ---


def test_cosine_fixtures():
    assert cosine(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == pytest.approx(1.0)
    assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(0.0)
    expected = 32 / (math.sqrt(14) * math.sqrt(77))
    assert cosine(np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0, 6.0])) == pytest.approx(
        expected, abs=1e-12
    )


def test_cosine_zero_norm_is_error():
    with pytest.raises(NumericalError, match="degenerate"):
        cosine(np.zeros(3), np.ones(3))


def test_cosine_shape_mismatch():
    with pytest.raises(ConfigError):
        cosine(np.ones(3), np.ones(4))


vec_strategy = st.lists(
    st.floats(min_value=-100, max_value=100, allow_nan=False),
    min_size=2,
    max_size=8,
).filter(lambda v: any(abs(x) > 1e-6 for x in v))


@given(vec_strategy)
def test_cosine_self_is_one(v):
    assert cosine(np.array(v), np.array(v)) == pytest.approx(1.0, abs=1e-12)


@given(vec_strategy,
       st.floats(min_value=0.1, max_value=10),
       st.floats(min_value=0.1, max_value=10),
       st.booleans())
def test_cosine_scaling_gives_signed_one(v, a, b, flip):
    v = np.array(v)
    b = -b if flip else b
    assert cosine(a * v, b * v) == pytest.approx(math.copysign(1.0, a * b), abs=1e-9)


@given(vec_strategy, vec_strategy.filter(lambda v: True))
def test_cosine_bounded(v1, v2):
    if len(v1) != len(v2):
        v1, v2 = v1[: min(len(v1), len(v2))], v2[: min(len(v1), len(v2))]
    v1, v2 = np.array(v1), np.array(v2)
    if np.linalg.norm(v1) == 0 or np.linalg.norm(v2) == 0 or len(v1) < 2:
        return
    assert abs(cosine(v1, v2)) <= 1 + 1e-12
