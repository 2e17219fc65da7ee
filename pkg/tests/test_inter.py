import random
import re

import pytest

from lakecat import ingest, inter, semantic
from lakecat.errors import CycleDetected, NotComparable, NotFound, TooFewParents


def make_text_object(catalog, make_text_file, content, title=None):
    path = make_text_file(content, name=title)
    return ingest.ingest_file(catalog, path, origin="test")


def make_binary_object(catalog, tmp_path, name="clip.mp4"):
    path = tmp_path / name
    path.write_bytes(bytes(range(256)) * 4)
    return ingest.ingest_file(catalog, path, origin="test")


def brute_jaccard(text_a, text_b):
    split = re.compile(r"[^0-9a-z]+")
    a = {t for t in split.split(text_a.lower()) if t}
    b = {t for t in split.split(text_b.lower()) if t}
    if not (a | b):
        return 1.0
    return len(a & b) / len(a | b)


class TestComputeSimilarity:
    def test_token_jaccard_hand_value(self, catalog, make_text_file):
        a = make_text_object(catalog, make_text_file, "the cat sat")
        b = make_text_object(catalog, make_text_file, "the dog sat")
        link = inter.compute_similarity(catalog, a, b)
        # oracle: |{the, sat}| / |{the, cat, sat, dog}|
        assert link.value == pytest.approx(0.5, abs=1e-12)

    def test_identical_documents(self, catalog, make_text_file):
        a = make_text_object(catalog, make_text_file, "same words here")
        b = make_text_object(catalog, make_text_file, "same words here")
        assert inter.compute_similarity(catalog, a, b).value == 1.0

    def test_symmetry(self, catalog, make_text_file):
        a = make_text_object(catalog, make_text_file, "alpha beta gamma")
        b = make_text_object(catalog, make_text_file, "beta gamma delta")
        v1 = inter.compute_similarity(catalog, a, b).value
        v2 = inter.compute_similarity(catalog, b, a).value
        assert v1 == v2
        # both directions land on the same stored link
        assert len(catalog.similarity_links()) == 1

    def test_not_comparable(self, catalog, tmp_path):
        video = make_binary_object(catalog, tmp_path)
        other = make_binary_object(catalog, tmp_path, "other.bin")
        with pytest.raises(NotComparable):
            inter.compute_similarity(catalog, video, other)

    def test_self_link_rejected(self, catalog, make_text_file):
        a = make_text_object(catalog, make_text_file, "solo")
        with pytest.raises(NotComparable):
            inter.compute_similarity(catalog, a, a)

    def test_recompute_replaces(self, catalog, make_text_file):
        a = make_text_object(catalog, make_text_file, "one two")
        b = make_text_object(catalog, make_text_file, "one three")
        inter.compute_similarity(catalog, a, b)
        inter.compute_similarity(catalog, a, b)
        assert len(catalog.similarity_links()) == 1

    def test_random_pairs_match_oracle(self, catalog, make_text_file):
        rng = random.Random(31)
        vocab = [f"w{i}" for i in range(12)]
        ids, texts = [], {}
        for _ in range(8):
            text = " ".join(rng.choices(vocab, k=rng.randrange(1, 15)))
            oid = make_text_object(catalog, make_text_file, text)
            ids.append(oid)
            texts[oid] = text
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                link = inter.compute_similarity(catalog, a, b)
                assert abs(link.value - brute_jaccard(texts[a], texts[b])) < 1e-12

    def test_schema_overlap(self, catalog, tmp_path):
        pa = tmp_path / "a.csv"
        pa.write_text("x,y\n1,2\n")
        pb = tmp_path / "b.csv"
        pb.write_text("y,z\n3,4\n")
        a = ingest.ingest_file(catalog, pa, origin="test")
        b = ingest.ingest_file(catalog, pb, origin="test")
        link = inter.compute_similarity(catalog, a, b, metric="schema-overlap")
        assert link.value == pytest.approx(1 / 3)


class TestLinkAllAndClusters:
    def test_threshold_zero_complete_graph(self, catalog, make_text_file):
        k = 4
        for i in range(k):
            make_text_object(catalog, make_text_file, f"doc number {i} common")
        count = inter.link_all(catalog, threshold=0.0)
        assert count == k * (k - 1) // 2

    def test_threshold_one_only_duplicates(self, catalog, make_text_file):
        a = make_text_object(catalog, make_text_file, "identical text")
        b = make_text_object(catalog, make_text_file, "identical text")
        c = make_text_object(catalog, make_text_file, "entirely different")
        inter.link_all(catalog, threshold=1.0)
        pairs = {l.endpoints for l in catalog.similarity_links()}
        assert pairs == {tuple(sorted((a, b)))}

    def test_empty_catalog(self, catalog):
        assert inter.link_all(catalog) == 0
        assert inter.clusters(catalog, 0.5) == []

    def test_chain_clusters(self, catalog, make_text_file):
        a = make_text_object(catalog, make_text_file, "red green")
        b = make_text_object(catalog, make_text_file, "green blue")
        c = make_text_object(catalog, make_text_file, "blue yellow")
        inter.link_all(catalog, threshold=0.0)
        ab = next(l for l in catalog.similarity_links()
                  if set(l.endpoints) == {a, b}).value
        assert ab > 0
        low = inter.clusters(catalog, ab - 1e-9)
        assert {frozenset(g) for g in low if len(g) > 1}
        high = inter.clusters(catalog, 1.1 if ab >= 1 else ab + 0.5)
        assert all(len(g) == 1 for g in high)

    def test_clusters_match_brute_force(self, catalog, make_text_file):
        rng = random.Random(41)
        vocab = [f"t{i}" for i in range(6)]
        ids = [
            make_text_object(catalog, make_text_file,
                             " ".join(rng.choices(vocab, k=rng.randrange(1, 8))))
            for _ in range(12)
        ]
        inter.link_all(catalog, threshold=0.0)
        for threshold in [rng.random() for _ in range(10)]:
            got = {frozenset(g) for g in inter.clusters(catalog, threshold)}
            # brute force: grow components by repeated sweeps
            comp = {oid: {oid} for oid in ids}
            changed = True
            while changed:
                changed = False
                for link in catalog.similarity_links():
                    if link.value < threshold:
                        continue
                    a, b = link.endpoints
                    if comp[a] is not comp[b]:
                        merged = comp[a] | comp[b]
                        for member in merged:
                            comp[member] = merged
                        changed = True
            expected = {frozenset(s) for s in comp.values()}
            assert got == expected

    def test_threshold_monotone_refinement(self, catalog, make_text_file):
        rng = random.Random(43)
        vocab = [f"m{i}" for i in range(5)]
        for _ in range(10):
            make_text_object(catalog, make_text_file,
                             " ".join(rng.choices(vocab, k=rng.randrange(1, 7))))
        inter.link_all(catalog, threshold=0.0)
        t1, t2 = sorted(rng.random() for _ in range(2))
        coarse = inter.clusters(catalog, t1)
        fine = inter.clusters(catalog, t2)
        for part in fine:
            assert any(part <= whole for whole in coarse)


class TestGroupBy:
    def test_group_by_origin(self, catalog, tmp_path, make_text_file):
        xml = tmp_path / "products.xml"
        xml.write_text("<products><p><name>A</name></p></products>")
        xml_id = ingest.ingest_file(catalog, xml, origin="internal source")
        tweets = tmp_path / "tweets.json"
        tweets.write_text('[{"text": "hi"}]')
        tweets_id = ingest.ingest_file(catalog, tweets, origin="external source")
        video = tmp_path / "ad.mp4"
        video.write_bytes(b"\x00\x01\xff" * 50)
        video_id = ingest.ingest_file(catalog, video, origin="internal source")

        g = inter.group_by(catalog, "origin")
        assert g.collections == {
            "external source": {tweets_id},
            "internal source": {xml_id, video_id},
        }
        g2 = inter.group_by(catalog, "format_class")
        assert g2.collections == {
            "unstructured": {video_id},
            "semi-structured": {xml_id, tweets_id},
        }

    def test_absent_attribute(self, catalog, make_text_file):
        make_text_object(catalog, make_text_file, "something")
        g = inter.group_by(catalog, "no-such-attribute")
        assert g.collections == {}

    def test_grouping_persisted(self, catalog, make_text_file):
        make_text_object(catalog, make_text_file, "something")
        inter.group_by(catalog, "origin")
        stored = catalog.load_grouping("origin")
        assert set(stored.collections) == {"test"}


def seed_objects(catalog, make_text_file, n):
    return [make_text_object(catalog, make_text_file, f"doc {i}") for i in range(n)]


class TestParenthood:
    def test_single_hop_lineage(self, catalog, make_text_file):
        a, b, c = seed_objects(catalog, make_text_file, 3)
        inter.add_parenthood(catalog, {a, b}, c)
        assert inter.lineage(catalog, c, "ancestors") == {a, b}

    def test_cycle_detected(self, catalog, make_text_file):
        a, b, c, d = seed_objects(catalog, make_text_file, 4)
        inter.add_parenthood(catalog, {a, b}, c)
        with pytest.raises(CycleDetected):
            inter.add_parenthood(catalog, {c, d}, a)

    def test_too_few_parents(self, catalog, make_text_file):
        a, b = seed_objects(catalog, make_text_file, 2)
        with pytest.raises(TooFewParents):
            inter.add_parenthood(catalog, {a}, b)

    def test_unknown_object(self, catalog, make_text_file):
        a, b = seed_objects(catalog, make_text_file, 2)
        with pytest.raises(NotFound):
            inter.add_parenthood(catalog, {a, "obj_ghost"}, b)

    def test_transitive_lineage_bfs(self, catalog, make_text_file):
        a, b, c, d, e = seed_objects(catalog, make_text_file, 5)
        inter.add_parenthood(catalog, {a, b}, c)
        inter.add_parenthood(catalog, {c, d}, e)
        assert inter.lineage(catalog, e, "ancestors") == {c, d, a, b}
        assert inter.lineage(catalog, a, "descendants") == {c, e}

    def test_directions_are_converses(self, catalog, make_text_file):
        rng = random.Random(53)
        ids = seed_objects(catalog, make_text_file, 8)
        for _ in range(5):
            child = rng.choice(ids)
            parents = set(rng.sample([x for x in ids if x != child], 2))
            try:
                inter.add_parenthood(catalog, parents, child)
            except CycleDetected:
                pass
        for a in ids:
            for b in ids:
                assert (b in inter.lineage(catalog, a, "ancestors")) == (
                    a in inter.lineage(catalog, b, "descendants")
                )

    def test_co_parents(self, catalog, make_text_file):
        a, b, c, d, e = seed_objects(catalog, make_text_file, 5)
        inter.add_parenthood(catalog, {a, b}, c)
        inter.add_parenthood(catalog, {a, d}, e)
        assert inter.co_parents(catalog, a) == {b, d}
        assert inter.co_parents(catalog, b) == {a}
        assert inter.co_parents(catalog, c) == set()


class TestRecommend:
    def test_no_links_empty(self, catalog, make_text_file):
        (a,) = seed_objects(catalog, make_text_file, 1)
        assert inter.recommend(catalog, a) == []

    def test_ranking(self, catalog, make_text_file):
        a = seed_objects(catalog, make_text_file, 1)[0]
        b = seed_objects(catalog, make_text_file, 1)[0]  # distinct files
        c = seed_objects(catalog, make_text_file, 1)[0]
        catalog.add_similarity_link(_mklink(a, b, 0.9))
        catalog.add_similarity_link(_mklink(a, c, 0.4))
        assert inter.recommend(catalog, a, k=1) == [(b, 0.9)]

    def test_tag_tiebreak(self, catalog, make_text_file):
        a, b, c = seed_objects(catalog, make_text_file, 3)
        catalog.add_similarity_link(_mklink(a, b, 0.5))
        catalog.add_similarity_link(_mklink(a, c, 0.5))
        semantic.tag_object(catalog, a, {"sales", "products"})
        semantic.tag_object(catalog, b, {"sales", "products"})
        got = inter.recommend(catalog, a, k=2)
        assert got[0][0] == b and got[1][0] == c


def _mklink(a, b, value):
    from lakecat.model import SimilarityLink, new_link_id, now_utc

    return SimilarityLink(id=new_link_id(), endpoints=(a, b),
                          metric_name="token-jaccard", value=value,
                          computed_at=now_utc(), compared_nodes=("na", "nb"))
