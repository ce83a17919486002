import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conelab.corpus import K_set, Omega_set
from conelab.errors import CertificationError, DimensionError, EmptySetError
from conelab.geometry import (
    FiniteCloud,
    SampledCurve,
    SequenceSet,
    UnionSet,
    UnitBall,
    cloud_from_csv,
    cloud_from_json,
    cloud_to_csv,
    cloud_to_json,
    distance,
    hausdorff_deviation,
    hausdorff_distance,
    inclusion_with_radius,
    interval_sample,
    load_cloud,
    save_cloud,
)
from oracles import brute_deviation, brute_distance, k_points, omega_points

K_PTS = k_points()
coord = st.floats(-5, 5, allow_nan=False)
cloud = st.lists(st.tuples(coord, coord), min_size=1, max_size=8)


# -- FiniteCloud ------------------------------------------------------------------

def test_cloud_distance_and_nearest():
    C = FiniteCloud([[0, 0], [3, 4]])
    assert C.distance((3, 0)) == 3.0
    p, d = C.nearest((3, 5))
    assert p.tolist() == [3, 4] and d == 1.0


def test_cloud_tie_goes_to_first_point():
    C = FiniteCloud([[1, 0], [-1, 0]])
    assert C.nearest((0, 0))[0].tolist() == [1, 0]


def test_cloud_rejects_bad_input():
    with pytest.raises(EmptySetError):
        FiniteCloud(np.empty((0, 2)))
    with pytest.raises(ValueError):
        FiniteCloud([[0, math.nan]])
    with pytest.raises(DimensionError):
        FiniteCloud([[0, 0]]).distance((1, 2, 3))


def test_cloud_points_are_read_only():
    C = FiniteCloud([[0.0, 1.0]])
    with pytest.raises(ValueError):
        C.points[0, 0] = 5.0


def test_vectorised_distances_match_scalar():
    rng = np.random.default_rng(3)
    C = FiniteCloud(rng.normal(size=(50, 3)))
    Y = rng.normal(size=(20, 3))
    assert np.allclose(C.distances(Y), [C.distance(y) for y in Y], rtol=0, atol=1e-15)


def test_translated():
    C = FiniteCloud([[1.0], [2.0]]).translated([10.0], 0.5)
    assert C.points.ravel().tolist() == [10.5, 11.0]


def test_one_dimensional_input_is_a_list_of_points():
    assert FiniteCloud([1.0, 2.0, 3.0]).dim == 1


# -- SequenceSet ---------------------------------------------------------------------------

def test_frozen_distance_oracle():
    # brute force over n <= 10^4: nearest member is (1/3, 1/3)
    assert K_set().distance((0.3, 0.3)) == pytest.approx(0.04714045207910316, abs=1e-16)
    assert K_set().nearest_index((0.3, 0.3)) == 3


def test_sequence_set_matches_brute_force_on_K():
    K = K_set()
    rng = np.random.default_rng(0)
    for _ in range(2000):
        y = rng.uniform(-0.2, 1.2, 2) * rng.choice([1.0, 0.1, 1e-3])
        got, ref = K.distance(y), brute_distance(y, K_PTS)
        assert got <= ref + 1e-15
        # the finite prefix is exact once the query projects beyond its last terms
        if (y[0] + y[1]) / 2 > 1e-3:
            assert got == pytest.approx(ref, abs=1e-15)


def test_sequence_set_matches_brute_force_on_omega():
    O = Omega_set()
    pts = omega_points()
    rng = np.random.default_rng(1)
    for _ in range(2000):
        y = rng.uniform(-0.1, 0.6, 2) * rng.choice([1.0, 1e-3, 1e-6, 1e-12])
        assert O.distance(y) == pytest.approx(brute_distance(y, pts), abs=1e-15)


def test_sequence_set_tie_prefers_smaller_index():
    assert K_set().nearest_index((0.75, 0.75)) == 1


def test_sequence_set_limit_nearest():
    K = K_set()
    assert K.nearest_index((-1, -1)) is None
    assert K.distance((-1, -1)) == pytest.approx(math.sqrt(2))
    assert K.distance((0, 0)) == 0.0


def test_sequence_set_without_ray_matches_ray_version():
    K = K_set()
    plain = SequenceSet(term=K.term, limit=(0, 0), tail_bound=K.tail_bound)
    rng = np.random.default_rng(2)
    for _ in range(500):
        y = rng.uniform(0.05, 1.2, 2)
        assert plain.distance(y) == pytest.approx(K.distance(y), abs=1e-15)
        assert plain.nearest_index(y) == K.nearest_index(y)


def test_sequence_set_without_ray_reports_exhausted_budget():
    K = K_set()
    plain = SequenceSet(term=K.term, limit=(0, 0), tail_bound=K.tail_bound, max_evaluations=100)
    with pytest.raises(CertificationError):
        plain.distance((-0.2, 0.1))


def test_sequence_set_point_and_prefix():
    O = Omega_set()
    assert O.point(1).tolist() == [0.5, 0.5]
    with pytest.raises(IndexError):
        O.point(9)
    assert len(O.prefix_cloud(100)) == 9


def test_sequence_set_rejects_zero_ray():
    with pytest.raises(ValueError):
        SequenceSet(term=lambda n: (1 / n,), limit=(0,), tail_bound=lambda N: 1, ray=(0,))


# -- curves and unions ----------------------------------------------------------------

def test_sampled_curve_circle():
    circle = SampledCurve((0.0, 2 * math.pi), lambda t: np.stack([np.cos(t), np.sin(t)], 1), 2)
    for y in [(2, 0), (0.3, 0.4), (-3, -4)]:
        assert circle.distance(y) == pytest.approx(abs(np.hypot(*y) - 1), abs=1e-12)


def test_sampled_curve_parabola_refines_beyond_grid():
    par = SampledCurve((-2.0, 2.0), lambda t: np.stack([t, t * t], 1), 2)
    q = (0.123456, 1.7)
    assert par.distance(q) <= brute_distance(q, par.sample_cloud().points)
    t = np.linspace(-2, 2, 4_000_001)
    assert par.distance(q) == pytest.approx(np.min(np.hypot(t - q[0], t * t - q[1])), abs=1e-12)


def test_union_set():
    U = UnionSet((FiniteCloud([[0.0]]), FiniteCloud([[10.0]])))
    assert U.distance([7.0]) == 3.0
    with pytest.raises(DimensionError):
        UnionSet((FiniteCloud([[0.0]]), FiniteCloud([[0.0, 0.0]])))


def test_unit_ball():
    B = UnitBall(2, 0.5)
    assert B.contains((0.3, 0.4)) and not B.contains((0.4, 0.4))


# -- Hausdorff -----------------------------------------------------------------------

def test_hausdorff_hand_values():
    E = FiniteCloud([[0.0], [1.0]])
    D = FiniteCloud([[0.0]])
    assert hausdorff_deviation(E, D) == 1.0
    assert hausdorff_deviation(D, E) == 0.0
    assert hausdorff_distance(E, D) == 1.0


def test_deviation_needs_finite_sample():
    with pytest.raises(TypeError):
        hausdorff_deviation(K_set(), FiniteCloud([[0.0, 0.0]]))


def test_inclusion_with_radius_is_deviation_threshold():
    E = interval_sample(-1, 1, 5)
    D = FiniteCloud([[0.0]])
    assert inclusion_with_radius(E, D, 1.0)
    assert not inclusion_with_radius(E, D, 0.999)


def test_interval_sample():
    assert interval_sample(-1, 1, 41).points.ravel()[20] == 0.0
    assert len(interval_sample(0, 0, 1)) == 1


@settings(max_examples=200, deadline=None)
@given(cloud, cloud)
def test_deviation_matches_brute_force(E, D):
    assert hausdorff_deviation(np.array(E), FiniteCloud(D)) == pytest.approx(
        brute_deviation(E, D), abs=1e-12
    )


@settings(max_examples=200, deadline=None)
@given(cloud, st.tuples(coord, coord), st.tuples(coord, coord))
def test_distance_is_one_lipschitz(C, y, z):
    K = FiniteCloud(C)
    assert abs(distance(y, K) - distance(z, K)) <= math.dist(y, z) + 1e-12


# -- I/O -------------------------------------------------------------------------------

def test_cloud_csv_json_roundtrip(tmp_path):
    C = FiniteCloud([[0.1, 1 / 3], [-2.5e-300, 7.0]])
    assert np.array_equal(cloud_from_csv(cloud_to_csv(C)).points, C.points)
    assert np.array_equal(cloud_from_json(cloud_to_json(C)).points, C.points)
    for name in ("c.csv", "c.json"):
        save_cloud(C, tmp_path / name)
        assert np.array_equal(load_cloud(tmp_path / name).points, C.points)


@pytest.mark.parametrize("S", [K_set(), Omega_set()], ids=["K", "Omega"])
def test_members_are_at_distance_zero(S):
    top = S.max_index or 5000
    for n in list(range(1, min(top, 200) + 1)) + [top]:
        assert S.distance(S.point(n)) == 0.0
    assert S.distance(S.limit) == 0.0
