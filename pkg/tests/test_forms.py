from math import gcd

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcftorsion.forms import (
    IDENTITY,
    CubicForm,
    DegenerateFormError,
    Flavor,
    UnimodularMatrix,
    act,
    act_quadratic,
    checked,
    classical_disc,
    disc,
    hessian,
    is_projective,
    is_reducible,
    rational_root,
    rational_roots,
    reduced_disc,
)
from bcftorsion.reduction import S, T, mirror

coef = st.integers(-40, 40)
forms = st.builds(CubicForm, coef, coef, coef, coef).filter(lambda f: reduced_disc(f) != 0)


@st.composite
def sl2(draw, steps=6):
    g = IDENTITY
    for _ in range(draw(st.integers(0, steps))):
        step = S if draw(st.booleans()) else T(draw(st.integers(-3, 3)))
        g = step @ g
    return g


@st.composite
def gl2(draw):
    g = draw(sl2())
    if draw(st.booleans()):
        g = UnimodularMatrix(1, 0, 0, -1) @ g
    return g


def test_reduced_disc_examples():
    assert reduced_disc(CubicForm(1, 0, 0, 1)) == 1
    assert reduced_disc(CubicForm(0, 1, -1, 0)) == -3
    assert reduced_disc(CubicForm(0, 2, -1, -1)) == -44
    # 6x^2y - 3xy^2 - y^3 classically
    assert classical_disc(CubicForm(0, 6, -3, -1, Flavor.CLASSICAL)) == -27 * -44


def test_hessian_examples():
    assert hessian(CubicForm(1, 0, 0, 1)).as_tuple() == (0, 1, 0)
    assert hessian(CubicForm(0, 2, -1, -1)).as_tuple() == (4, 2, 3)
    b, c, d = 5, -2, 7
    assert hessian(CubicForm(0, b, c, d)).as_tuple() == (b * b, -b * c, c * c - b * d)


def test_projectivity_examples():
    assert is_projective(CubicForm(0, 1, -1, 0))
    assert not is_projective(CubicForm(0, 2, 2, 0))
    assert is_projective(CubicForm(0, 2, -1, -1))
    with pytest.raises(DegenerateFormError):
        is_projective(CubicForm(0, 0, 0, 1))


def test_rational_root_examples():
    assert rational_root(CubicForm(0, 2, -1, -1)) == (1, 0)
    # x^3 + y^3 vanishes on x = -y; the canonical pair has y0 > 0
    assert rational_root(CubicForm(1, 0, 0, 1)) == (-1, 1)
    assert set(rational_roots(CubicForm(0, 1, -1, 0))) == {(1, 0), (0, 1), (1, 1)}
    assert is_reducible(CubicForm(0, 1, -1, 0))
    assert not is_reducible(CubicForm(1, 0, 0, 2))


def test_act_identity_and_minus_identity():
    f = CubicForm(3, -1, 4, 2)
    assert act(IDENTITY, f) == f
    assert act(UnimodularMatrix(-1, 0, 0, -1), f) == -f


def test_checked_overflow():
    with pytest.raises(OverflowError):
        checked(1 << 130)
    big = 1 << 40
    with pytest.raises(OverflowError):
        reduced_disc(CubicForm(big, 0, 0, big))


@settings(max_examples=150, deadline=None)
@given(gl2(), forms)
def test_disc_invariant(g, f):
    assert reduced_disc(act(g, f)) == reduced_disc(f)


@settings(max_examples=100, deadline=None)
@given(sl2(), sl2(), forms)
def test_action_law(g1, g2, f):
    assert act(g1, act(g2, f)) == act(g1 @ g2, f)


@settings(max_examples=100, deadline=None)
@given(sl2(), forms)
def test_projective_and_root_invariance(g, f):
    h = act(g, f)
    assert is_projective(h) == is_projective(f)
    assert is_reducible(h) == is_reducible(f)


@settings(max_examples=100, deadline=None)
@given(sl2(), forms)
def test_hessian_covariance(g, f):
    # the Hessian moves by the mirror image (p, -q, -r, s) of g
    assert hessian(act(g, f)) == act_quadratic(mirror(g), hessian(f))


@settings(max_examples=100, deadline=None)
@given(forms)
def test_hessian_disc_and_flavors(f):
    H = hessian(f)
    assert H.disc == reduced_disc(f) == disc(f)
    assert classical_disc(f) == -27 * reduced_disc(f)


@settings(max_examples=100, deadline=None)
@given(forms)
def test_roots_are_roots(f):
    for x, y in rational_roots(f):
        assert gcd(x, y) == 1 and f(x, y) == 0
        assert y > 0 or (y == 0 and x > 0)
