import io

import pytest

from topicsim.taxonomy import (
    TAXONOMY_HEADER,
    TaxonomyError,
    UNKNOWN_TOPIC_ID,
    load_taxonomy,
    parent_of,
)

# Root category -> subtree size (root included) for the bundled v1-style file.
ROOT_SUBTREE_SIZES = {
    "/Arts & Entertainment": 56,
    "/Autos & Vehicles": 29,
    "/Beauty & Fitness": 14,
    "/Books & Literature": 3,
    "/Business & Industrial": 23,
    "/Computers & Electronics": 23,
    "/Finance": 23,
    "/Food & Drink": 8,
    "/Games": 16,
    "/Hobbies & Leisure": 11,
    "/Home & Garden": 8,
    "/Internet & Telecom": 11,
    "/Jobs & Education": 13,
    "/Law & Government": 4,
    "/News": 7,
    "/Online Communities": 4,
    "/People & Society": 9,
    "/Pets & Animals": 9,
    "/Real Estate": 3,
    "/Reference": 4,
    "/Science": 10,
    "/Shopping": 10,
    "/Sports": 33,
    "/Travel & Transportation": 18,
}


def test_bundled_omega(taxonomy):
    assert taxonomy.omega == 349


def test_bundled_has_24_roots(taxonomy):
    assert len(taxonomy.roots()) == 24


def test_bundled_root_subtree_sizes(taxonomy):
    sizes = {r.name: taxonomy.subtree_size(r) for r in taxonomy.roots()}
    assert sizes == ROOT_SUBTREE_SIZES


def test_root_subtrees_partition_taxonomy(taxonomy):
    assert sum(taxonomy.subtree_size(r) for r in taxonomy.roots()) == taxonomy.omega


def test_ids_are_contiguous_from_one(taxonomy):
    assert taxonomy.ids() == tuple(range(1, 350))


def test_parent_chain_example(taxonomy):
    sales = taxonomy.by_name("/Business & Industrial/Advertising & Marketing/Sales")
    parent = parent_of(taxonomy, sales)
    assert parent.name == "/Business & Industrial/Advertising & Marketing"
    grandparent = parent_of(taxonomy, parent)
    assert grandparent.name == "/Business & Industrial"
    assert parent_of(taxonomy, grandparent) is None


def test_root_has_no_parent(taxonomy):
    assert parent_of(taxonomy, taxonomy.by_name("/News")) is None


def test_unknown_sentinel(taxonomy):
    assert parent_of(taxonomy, UNKNOWN_TOPIC_ID) is None
    assert taxonomy.get(UNKNOWN_TOPIC_ID).name == "Unknown"
    assert UNKNOWN_TOPIC_ID in taxonomy
    # The sentinel is never one of the omega real topics.
    assert all(t.id != UNKNOWN_TOPIC_ID for t in taxonomy.topics)


def test_parent_name_is_proper_prefix(taxonomy):
    for topic in taxonomy.topics:
        parent = parent_of(taxonomy, topic)
        if parent is not None:
            assert topic.name.startswith(parent.name + "/")
            assert len(parent.name) < len(topic.name)


def test_unknown_topic_lookup_fails(taxonomy):
    with pytest.raises(TaxonomyError):
        taxonomy.get(999)


def test_empty_file_rejected():
    with pytest.raises(TaxonomyError, match="no topics"):
        load_taxonomy(io.StringIO(TAXONOMY_HEADER + "\n"))


def test_duplicate_id_rejected():
    body = f"{TAXONOMY_HEADER}\n1\t/A\n1\t/B\n"
    with pytest.raises(TaxonomyError, match="duplicate id"):
        load_taxonomy(io.StringIO(body))


def test_dangling_parent_rejected():
    body = f"{TAXONOMY_HEADER}\n1\t/A/B\n"
    with pytest.raises(TaxonomyError, match="dangling parent"):
        load_taxonomy(io.StringIO(body))


def test_non_ascending_ids_rejected():
    body = f"{TAXONOMY_HEADER}\n2\t/A\n1\t/B\n"
    with pytest.raises(TaxonomyError, match="ascending"):
        load_taxonomy(io.StringIO(body))


def test_malformed_row_names_line():
    body = f"{TAXONOMY_HEADER}\n1\t/A\nnot a row\n"
    with pytest.raises(TaxonomyError, match="row 3"):
        load_taxonomy(io.StringIO(body))


def test_id_zero_reserved():
    body = f"{TAXONOMY_HEADER}\n0\t/A\n"
    with pytest.raises(TaxonomyError, match="sentinel"):
        load_taxonomy(io.StringIO(body))
