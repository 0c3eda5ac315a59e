import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmptol.torsor import (SURFACE_CLASSES, DefectParameter, LinExpr, ParameterRegistry, RegistryError, Torsor,
                           add, change_basis, displacement_at, evaluate, negate, new_surface_torsor,
                           parameter_name, parse_name, transport)

NAMES = st.sampled_from(["a", "b", "c", "d"])
COEF = st.floats(-1e3, 1e3, allow_nan=False)
EXPR = st.builds(lambda t, c: LinExpr(t, c), st.dictionaries(NAMES, COEF, max_size=4), COEF)
POINT = st.tuples(*[st.floats(-100, 100, allow_nan=False)] * 3)


def random_torsor(rng, frame="global"):
    reg = ParameterRegistry()
    rot = tuple(LinExpr({f"r{i}": float(rng.normal())}) for i in range(3))
    tr = tuple(LinExpr({f"t{i}": float(rng.normal()), "s": float(rng.normal())}) for i in range(3))
    return Torsor(rot, tr, tuple(rng.normal(size=3) * 50), frame), reg


def numeric(t, assignment):
    return evaluate(t, assignment, default=0.0)


class TestLinExpr:
    def test_zero_coefficients_are_pruned(self):
        e = LinExpr({"a": 1.0, "b": 0.0})
        assert e.params() == {"a"}
        assert (e - LinExpr.var("a")).is_zero()

    def test_arithmetic(self):
        e = 2 * LinExpr.var("a") + 3.0 - LinExpr.var("b")
        assert e.coeff("a") == 2.0 and e.coeff("b") == -1.0 and e.constant == 3.0
        assert e.evaluate({"a": 1.0, "b": 4.0}) == 1.0

    def test_missing_parameter_raises_without_default(self):
        with pytest.raises(KeyError):
            LinExpr.var("a").evaluate({})

    @given(EXPR, EXPR, EXPR)
    def test_addition_is_associative_and_commutative(self, a, b, c):
        assert a + b == b + a
        lhs, rhs = (a + b) + c, a + (b + c)
        for k in lhs.params() | rhs.params():
            assert lhs.coeff(k) == pytest.approx(rhs.coeff(k), abs=1e-9)

    @given(EXPR)
    def test_negation_cancels_exactly(self, a):
        assert (a + (-a)).is_zero()

    def test_substitute(self):
        e = LinExpr({"a": 2.0, "b": 1.0}, 1.0)
        out = e.substitute({"a": LinExpr({"c": 3.0}, 0.5)})
        assert out == LinExpr({"c": 6.0, "b": 1.0}, 2.0)


class TestRegistry:
    def test_duplicate_rejected(self):
        reg = ParameterRegistry([DefectParameter("tz_1", "tz", 1, None, "DM")])
        with pytest.raises(RegistryError):
            reg.register(DefectParameter("tz_1", "tz", 1, None, "DM"))

    def test_bounds_order_checked(self):
        with pytest.raises(ValueError):
            DefectParameter("tz_1", "tz", 1, None, "DM", (1.0, -1.0))

    def test_gauge_links_carry_no_bounds(self):
        with pytest.raises(ValueError):
            DefectParameter("gtz_F", "tz", "F", None, "LGP", (-1.0, 1.0))

    def test_merge_conflict(self):
        a = ParameterRegistry([DefectParameter("tz_1", "tz", 1, None, "DM", (0, 1))])
        b = ParameterRegistry([DefectParameter("tz_1", "tz", 1, None, "DM", (0, 2))])
        with pytest.raises(RegistryError):
            a.merge(b)


@pytest.mark.parametrize("kind,surface,setup,cat,name", [
    ("rx", 6, None, "DM", "rx_6"),
    ("ry", 3, 3, "DH", "ry_3S3"),
    ("tz", 3, 2, "LHP", "ltz_3S2"),
    ("tx", "F", None, "LGP", "gtx_F"),
    ("ty", "S3x6", None, "LMGP", "mty_S3x6"),
])
def test_canonical_names_round_trip(kind, surface, setup, cat, name):
    assert parameter_name(kind, surface, setup, cat) == name
    info = parse_name(name)
    assert info["kind"] == kind and info["surface"] == surface and info["setup"] == setup


def test_parse_name_rejects_garbage():
    with pytest.raises(ValueError):
        parse_name("foo")


class TestTransport:
    @given(POINT, POINT)
    @settings(max_examples=200)
    def test_round_trip_is_bit_exact(self, p, q):
        rng = np.random.default_rng(0)
        t, _ = random_torsor(rng)
        back = transport(transport(t, p), t.point)
        assert back.same_as(t)

    def test_matches_rigid_field(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            t, _ = random_torsor(rng)
            a = {k: float(v) for k, v in zip(["r0", "r1", "r2", "t0", "t1", "t2", "s"], rng.normal(size=7))}
            q = rng.normal(size=3) * 30
            v = numeric(t, a)
            expect = v[3:] + np.cross(v[:3], q - np.array(t.point))
            got = np.array([e.evaluate(a, 0.0) for e in displacement_at(t, q)])
            assert np.allclose(got, expect, atol=1e-10)

    def test_add_negate_identities(self):
        rng = np.random.default_rng(2)
        t, _ = random_torsor(rng)
        z = add(t, negate(t))
        assert all(e.is_zero() for e in z.components())
        assert add(t, Torsor.zero(t.point)).same_as(t)
        u, _ = random_torsor(rng)
        a = {k: 1.0 for k in ["r0", "r1", "r2", "t0", "t1", "t2", "s"]}
        assert np.allclose(numeric(add(t, u), a), numeric(transport(add(u, t), t.point), a))

    def test_add_requires_same_frame(self):
        with pytest.raises(ValueError):
            add(Torsor.zero(frame="a"), Torsor.zero(frame="b"))

    def test_change_basis_preserves_field(self):
        rng = np.random.default_rng(3)
        t, _ = random_torsor(rng, frame="local")
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        if np.linalg.det(q) < 0:
            q[:, 0] *= -1
        o = rng.normal(size=3)
        g = change_basis(t, q, o, "global")
        a = {k: float(v) for k, v in zip(["r0", "r1", "r2", "t0", "t1", "t2", "s"], rng.normal(size=7))}
        vl, vg = numeric(t, a), numeric(g, a)
        assert np.allclose(vg[:3], q @ vl[:3])
        assert np.allclose(vg[3:], q @ vl[3:])
        assert np.allclose(g.point, o + q @ np.array(t.point))


@pytest.mark.parametrize("cls", sorted(SURFACE_CLASSES))
def test_surface_template_null_components(cls):
    reg = ParameterRegistry()
    t = new_surface_torsor(cls, 6, None, "DM", reg)
    free = SURFACE_CLASSES[cls]
    rng = np.random.default_rng(4)
    for _ in range(1000):
        a = {p: float(v) for p, v in zip(reg.ids(), rng.normal(size=len(reg)))}
        v = numeric(t, a)
        for i, kind in enumerate(("rx", "ry", "rz", "tx", "ty", "tz")):
            if kind not in free:
                assert v[i] == 0.0
    assert ("ra" in free) == bool(t.radius.params())


def test_surface_template_bounds_registered():
    reg = ParameterRegistry()
    new_surface_torsor("plane", 6, None, "DM", reg, {"tz": (-0.02, 0.02)})
    assert reg["tz_6"].bounds == (-0.02, 0.02)
    assert reg["rx_6"].bounds is None
