import itertools
import random
from collections import Counter

import pytest

from dptraj.utility import (
    PresenceIndex,
    SeqPattern,
    eval_count_query,
    evaluate_workload,
    fsp_metrics,
    generate_workload,
    mine_top_k,
    relative_error,
)

from conftest import make_db, make_universe


def brute_force_top_k(db, k, max_len=3):
    """Enumerate every subsequence pattern up to max_len by direct scans."""
    support = Counter()
    for t in db:
        seen = set()
        for length in range(1, max_len + 1):
            for combo in itertools.combinations(range(len(t)), length):
                seen.add(tuple(t[i] for i in combo))
        support.update(seen)
    ordered = sorted(support.items(), key=lambda kv: (-kv[1], len(kv[0]), kv[0]))
    return [SeqPattern(locations=p, support=s) for p, s in ordered[:k]]


class TestCountQuery:
    def test_sample_pair_query(self, sample_db):
        db, universe = sample_db
        q = frozenset({universe.id_of("L1"), universe.id_of("L2")})
        assert eval_count_query(db, q) == 6

    def test_sample_singleton_query(self, sample_db):
        db, universe = sample_db
        assert eval_count_query(db, frozenset({universe.id_of("L4")})) == 2

    def test_query_matching_nothing(self, sample_db):
        db, universe = sample_db
        q = frozenset(range(4))  # no record holds all four locations
        assert eval_count_query(db, q) == 0

    def test_empty_query_rejected(self, sample_db):
        db, _ = sample_db
        with pytest.raises(ValueError):
            eval_count_query(db, frozenset())

    def test_order_and_multiplicity_ignored(self):
        db = make_db([(1, 0, 1, 1), (0, 1), (1, 0)])
        q = frozenset({0, 1})
        assert eval_count_query(db, q) == 3

    def test_index_agrees_with_scan(self):
        rnd = random.Random(11)
        for _ in range(10):
            size = rnd.randint(2, 15)
            rows = [
                tuple(rnd.randrange(size) for _ in range(rnd.randint(1, 8)))
                for _ in range(rnd.randint(1, 300))
            ]
            db = make_db(rows)
            index = PresenceIndex(db, size)
            for _ in range(30):
                q = frozenset(
                    rnd.sample(range(size), rnd.randint(1, min(4, size)))
                )
                assert index.count(q) == eval_count_query(db, q)


class TestRelativeError:
    def test_plain_arithmetic(self):
        assert relative_error(6, 5, 0.008) == pytest.approx(1 / 6)

    def test_exact_answer(self):
        assert relative_error(17, 17, 1.0) == 0.0

    def test_sanity_bound_branch(self):
        assert relative_error(0, 3, 10.0) == pytest.approx(0.3)

    def test_nonpositive_sanity_rejected(self):
        with pytest.raises(ValueError):
            relative_error(1, 2, 0.0)


class TestWorkload:
    def test_subset_max_lengths(self):
        universe = make_universe(50)
        workload = generate_workload(universe, height=12, per_subset=5, seed=0)
        assert workload.max_lengths == (3, 6, 9, 12)

    def test_counts_and_lengths(self):
        universe = make_universe(40)
        workload = generate_workload(universe, height=12, per_subset=100, seed=1)
        assert sum(len(s) for s in workload.subsets) == 400
        for max_len, queries in zip(workload.max_lengths, workload.subsets):
            for q in queries:
                assert 1 <= len(q) <= max_len

    def test_deterministic(self):
        universe = make_universe(30)
        a = generate_workload(universe, 12, 50, seed=9)
        b = generate_workload(universe, 12, 50, seed=9)
        assert a == b

    def test_too_small_height_rejected(self):
        with pytest.raises(ValueError):
            generate_workload(make_universe(10), height=3, per_subset=5, seed=0)

    def test_lengths_capped_by_universe(self):
        universe = make_universe(4)
        workload = generate_workload(universe, height=20, per_subset=20, seed=2)
        for queries in workload.subsets:
            for q in queries:
                assert len(q) <= 4

    def test_identity_evaluation_is_zero(self, sample_db):
        db, universe = sample_db
        workload = generate_workload(universe, height=4, per_subset=25, seed=3)
        averages = evaluate_workload(db, db, workload, len(universe))
        assert averages == [0.0, 0.0, 0.0, 0.0]


class TestMineTopK:
    def test_sample_pair_supports(self, sample_db):
        db, universe = sample_db
        patterns = {p.locations: p.support for p in mine_top_k(db, 40)}
        l1, l2 = universe.id_of("L1"), universe.id_of("L2")
        assert patterns[(l1, l2)] == 5
        assert patterns[(l2, l1)] == 2

    def test_top_one_breaks_tie_lexicographically(self, sample_db):
        db, universe = sample_db
        top = mine_top_k(db, 1)
        assert top[0].locations == (universe.id_of("L1"),)
        assert top[0].support == 7

    def test_matches_brute_force(self):
        rnd = random.Random(21)
        for _ in range(8):
            size = rnd.randint(3, 8)
            rows = [
                tuple(rnd.randrange(size) for _ in range(rnd.randint(1, 6)))
                for _ in range(rnd.randint(5, 200))
            ]
            db = make_db(rows)
            for k in (1, 5, 20):
                assert mine_top_k(db, k, max_len=3) == brute_force_top_k(db, k)

    def test_duplicate_records_count_individually(self):
        db = make_db([(0, 1)] * 4 + [(1, 0)])
        top = mine_top_k(db, 3)
        supports = {p.locations: p.support for p in top}
        assert supports[(0,)] == 5
        assert supports[(1,)] == 5
        assert supports[(0, 1)] == 4

    def test_short_result_flagged(self, caplog):
        db = make_db([(0,), (0,)])
        with caplog.at_level("WARNING"):
            patterns = mine_top_k(db, 10)
        assert len(patterns) == 1
        assert "10" in caplog.text

    def test_max_len_respected(self):
        db = make_db([(0, 1, 2, 3)] * 5)
        patterns = mine_top_k(db, 50, max_len=2)
        assert max(len(p.locations) for p in patterns) == 2

    def test_invalid_k(self, sample_db):
        db, _ = sample_db
        with pytest.raises(ValueError):
            mine_top_k(db, 0)

    def test_deterministic_order(self, sample_db):
        db, _ = sample_db
        assert mine_top_k(db, 15) == mine_top_k(db, 15)


class TestFspMetrics:
    @staticmethod
    def _patterns(*locs):
        return [SeqPattern(locations=tuple(l), support=1) for l in locs]

    def test_identical_sets(self):
        patterns = self._patterns((0,), (1,), (2,))
        assert fsp_metrics(patterns, patterns, 3) == (3, 0, 0)

    def test_one_swap(self):
        true = self._patterns((0,), (1,), (2,))
        sanitized = self._patterns((0,), (1,), (3,))
        assert fsp_metrics(true, sanitized, 3) == (2, 1, 1)

    def test_disjoint_sets(self):
        true = self._patterns((0,), (1,))
        sanitized = self._patterns((2,), (3,))
        assert fsp_metrics(true, sanitized, 2) == (0, 2, 2)

    def test_false_positive_equals_false_drop_for_equal_sizes(self):
        rnd = random.Random(2)
        for _ in range(30):
            size = rnd.randint(1, 12)
            universe = list(range(30))
            true = self._patterns(*[(x,) for x in rnd.sample(universe, size)])
            sanitized = self._patterns(*[(x,) for x in rnd.sample(universe, size)])
            tp, fp, fd = fsp_metrics(true, sanitized, size)
            assert fp == fd == size - tp
