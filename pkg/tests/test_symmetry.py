import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from billiard_orbits.symmetry import dedup, dihedral_images, same_orbit, signature
from billiard_orbits.varsolve import SolverConfig, make_candidate, multistart_search


def _labels(images, names):
    lookup = {tuple(v): n for v, n in zip(np.eye(len(names)), names)}
    return ["".join(lookup[tuple(row)] for row in img) for img in images]


def test_images_p3():
    imgs = dihedral_images(np.eye(3))
    assert len(imgs) == 6
    assert sorted(_labels(imgs, "ABC")) == sorted(["ABC", "BCA", "CAB", "CBA", "ACB", "BAC"])


def test_images_p2():
    labels = _labels(dihedral_images(np.eye(2)), "AB")
    assert sorted(labels) == ["AB", "AB", "BA", "BA"]


def test_images_preserve_candidate_type(bumped):
    X = np.array([[1.0, 0, 0], [0, 1.25, 0], [0, 0, 1.6]])
    c = make_candidate(bumped, X)
    imgs = dihedral_images(c)
    assert all(type(i) is type(c) for i in imgs)
    assert all(abs(i.perimeter - c.perimeter) < 1e-12 for i in imgs)


def test_same_orbit_examples():
    X = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]])
    assert same_orbit(X, np.roll(X, 1, axis=0))
    assert same_orbit(X, X[::-1])
    a = np.array([[1.0, 0, 0], [-1.0, 0, 0]])
    b = np.array([[0, 1.3, 0], [0, -1.3, 0]])
    assert not same_orbit(a, b, diam=3.4)
    assert not same_orbit(X, X[:2])


@pytest.fixture(scope="module")
def kuiper_cands(generic_ellipsoid):
    return multistart_search(generic_ellipsoid, 2, SolverConfig(n_starts=300, rng_seed=1))


def test_dedup_axis_two_gons(generic_ellipsoid, kuiper_cands):
    classes = dedup(kuiper_cands, 1e-6, generic_ellipsoid.diam)
    assert [round(c.perimeter, 10) for c in classes] == [4.0, 5.2, 6.8]
    assert sum(c.members for c in classes) == len(kuiper_cands)


def test_dedup_skips_continuum(sphere3):
    cands = multistart_search(sphere3, 3, SolverConfig(n_starts=50, rng_seed=2))
    assert cands and all(c.continuum_suspect for c in cands)
    assert dedup(cands) == []


def test_noisy_copies_collapse(bumped):
    rng = np.random.default_rng(5)
    base = make_candidate(bumped, np.array([[1.0, 0, 0], [0, 1.25, 0], [0, 0, 1.6]]))
    imgs = dihedral_images(base)
    copies = [
        make_candidate(bumped, imgs[rng.integers(len(imgs))].vertices + 1e-9 * rng.standard_normal((3, 3)))
        for _ in range(40)
    ]
    classes = dedup(copies, 1e-6, bumped.diam)
    assert len(classes) == 1 and classes[0].members == 40


@pytest.fixture(scope="module")
def bumped_cands(bumped):
    return multistart_search(bumped, 3, SolverConfig(n_starts=400, rng_seed=4))


def _summary(classes):
    return [(c.perimeter, c.signature, c.members, c.representative.vertices.tobytes()) for c in classes]


def test_dedup_idempotent(bumped, bumped_cands):
    first = dedup(bumped_cands, 1e-6, bumped.diam)
    second = dedup([c.representative for c in first], 1e-6, bumped.diam)
    assert [c.signature for c in first] == [c.signature for c in second]
    assert [c.perimeter for c in first] == [c.perimeter for c in second]


def test_dedup_order_independent(bumped, bumped_cands):
    ref = _summary(dedup(bumped_cands, 1e-6, bumped.diam))
    rnd = random.Random(0)
    for _ in range(20):
        shuffled = list(bumped_cands)
        rnd.shuffle(shuffled)
        assert _summary(dedup(shuffled, 1e-6, bumped.diam)) == ref


def test_perimeter_gap_separates_classes(bumped):
    X = np.array([[1.0, 0, 0], [0, 1.25, 0], [0, 0, 1.6]])
    a = make_candidate(bumped, X)
    # same shape scaled: perimeters differ by far more than the window
    b = make_candidate(bumped, X * (1 + 1e-5))
    assert abs(a.perimeter - b.perimeter) > 2 * 1e-6 * bumped.diam
    assert len(dedup([a, b], 1e-6, bumped.diam)) == 2


def test_signature_is_dihedral_invariant(bumped_cands):
    c = bumped_cands[0]
    assert {signature(i) for i in dihedral_images(c)} == {signature(c)}


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    p=st.integers(2, 7),
    shift=st.integers(0, 6),
    flip=st.booleans(),
)
def test_same_orbit_under_random_dihedral_element(seed, p, shift, flip):
    X = np.random.default_rng(seed).standard_normal((p, 3))
    Y = np.roll(X[::-1] if flip else X, shift % p, axis=0)
    assert same_orbit(X, Y)
    assert same_orbit(Y, X)
