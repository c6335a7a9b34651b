import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpft.errors import DimensionError, NumericError
from mpft.pareto_core import (
    CSVFormatError,
    ParetoArchive,
    TrackedPolicy,
    archive_from_csv,
    archive_to_csv,
    brute_force_nondominated,
    dominates,
    union_plus,
)


def pol(obj, ep=0, tag="t", params=(0.0,)):
    return TrackedPolicy(np.array(params, float), np.array(obj, float), tag, ep)


def objs(archive):
    return sorted(tuple(p.objectives) for p in archive)


def naive_front(points):
    """Non-dominated, duplicate-free set by pairwise scan."""
    keep = []
    for i, p in enumerate(points):
        if any(dominates(q, p) for j, q in enumerate(points) if j != i):
            continue
        if any(np.array_equal(p, q) for q in keep):
            continue
        keep.append(p)
    return sorted(tuple(p) for p in keep)


class TestDominates:
    def test_strict_somewhere(self):
        assert dominates([2, 1], [1, 1])
        assert not dominates([1, 1], [1, 1])
        assert not dominates([2, 0], [1, 1])

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            dominates([1, 2], [1, 2, 3])


class TestUnionPlus:
    def test_dominated_incoming_dropped(self):
        arch = ParetoArchive((pol([1, 3]), pol([3, 1])))
        out = union_plus(arch, [pol([1, 1])])
        assert objs(out) == [(1.0, 3.0), (3.0, 1.0)]

    def test_dominating_incoming_evicts(self):
        arch = ParetoArchive((pol([1, 3]), pol([3, 1])))
        out = union_plus(arch, [pol([3, 3])])
        assert objs(out) == [(3.0, 3.0)]

    def test_duplicate_keeps_earliest(self):
        arch = ParetoArchive((pol([2, 2], ep=5, tag="late"),))
        out = union_plus(arch, [pol([2, 2], ep=1, tag="early")])
        assert len(out) == 1
        assert out.members[0].provenance == "early"

    def test_near_duplicates_within_tol(self):
        out = ParetoArchive((pol([1.0, 2.0], ep=0), pol([1.0 + 5e-13, 2.0 - 5e-13], ep=1)))
        assert len(out) == 1
        assert out.members[0].episode_index == 0

    def test_dominance_is_exact(self):
        # A strict improvement below the duplicate tolerance still dominates.
        out = ParetoArchive((pol([1.0, 2.0], ep=0), pol([1.0 + 5e-13, 2.0], ep=1)))
        assert [p.episode_index for p in out] == [1]

    def test_empty_incoming(self):
        arch = ParetoArchive((pol([1, 2]),))
        assert union_plus(arch, []) == arch

    def test_mixed_m_rejected(self):
        with pytest.raises(DimensionError):
            ParetoArchive((pol([1, 2]), pol([1, 2, 3])))

    def test_nonfinite_rejected(self):
        with pytest.raises((NumericError, ValueError)):
            pol([np.nan, 1.0])

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(
            st.tuples(st.integers(0, 6), st.integers(0, 6), st.integers(0, 6)),
            min_size=1,
            max_size=25,
        )
    )
    def test_matches_pairwise_scan(self, pts):
        points = [np.array(p, float) for p in pts]
        arch = ParetoArchive(tuple(pol(p, ep=i) for i, p in enumerate(points)))
        assert objs(arch) == naive_front(points)

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=15),
        st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=15),
        st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=15),
    )
    def test_order_independent(self, a, b, c):
        A = [pol(p, ep=i, tag="a") for i, p in enumerate(a)]
        B = [pol(p, ep=i, tag="b") for i, p in enumerate(b)]
        C = [pol(p, ep=i, tag="c") for i, p in enumerate(c)]
        left = union_plus(union_plus(ParetoArchive(tuple(A)), B), C)
        right = union_plus(ParetoArchive(tuple(C)), union_plus(ParetoArchive(tuple(B)), A))
        assert left == right
        assert archive_to_csv(left) == archive_to_csv(right)

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        arch = ParetoArchive(tuple(pol(p, ep=i) for i, p in enumerate(rng.random((40, 3)))))
        assert union_plus(arch, arch.members) == arch


def test_brute_force_helper():
    pts = np.array([[1, 3], [2, 2], [1, 1], [3, 1]], float)
    assert sorted(brute_force_nondominated(pts)) == [0, 1, 3]


class TestCSV:
    def test_round_trip_bit_exact(self):
        rng = np.random.default_rng(0)
        members = tuple(
            TrackedPolicy(rng.normal(size=3), v, f"edge-{i % 2 + 1}", i)
            for i, v in enumerate(rng.random((20, 2)))
        )
        arch = ParetoArchive(members)
        back = archive_from_csv(archive_to_csv(arch))
        assert back == arch
        for p, q in zip(arch.sorted_members(), back.sorted_members()):
            assert np.array_equal(p.objectives, q.objectives)
            assert np.array_equal(p.params, q.params)
            assert p.provenance == q.provenance and p.episode_index == q.episode_index

    def test_header(self):
        text = archive_to_csv(ParetoArchive((pol([1, 2], params=(0.5, 0.25)),)))
        assert text.splitlines()[0] == "track,episode,obj_1,obj_2,theta_1,theta_2"

    @pytest.mark.parametrize(
        "text,row",
        [
            ("", 1),
            ("a,b,obj_1,obj_2,theta_1\n", 1),
            ("track,episode,obj_1,obj_2,theta_1\nx,0,1,2\n", 2),
            ("track,episode,obj_1,obj_2,theta_1\nx,0,1,2,3\ny,zz,1,2,3\n", 3),
        ],
    )
    def test_malformed_reports_row(self, text, row):
        with pytest.raises(CSVFormatError) as exc:
            archive_from_csv(text)
        assert exc.value.row == row
