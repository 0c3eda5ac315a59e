import numpy as np
import pytest

from mmptol.gauge import GaugeError, VirtualGauge, assemble_gauge, gap_expressions
from mmptol.mmp import build_mmp
from mmptol.part import sample_points
from mmptol.torsor import displacement_at


def rand_assignment(reg, rng, scale=1e-3):
    return {p: float(v) * scale for p, v in zip(reg.ids(), rng.normal(size=len(reg)))}


class TestValidation:
    def test_bad_width(self):
        with pytest.raises(GaugeError):
            VirtualGauge("F", 2, (1,), width=0.0)

    def test_self_datum(self):
        with pytest.raises(GaugeError):
            VirtualGauge("F", 2, (2, 1))

    def test_unknown_type(self):
        with pytest.raises(GaugeError):
            VirtualGauge("F", 2, (1,), spec_type="flatness")

    def test_half_width(self):
        assert VirtualGauge("F", 2, (1,), width=0.3).half_width == pytest.approx(0.15)


def test_plane_gaps_match_point_distances(two_planes):
    """Gap = t/2 -+ normal distance between toleranced and datum fields."""
    m = build_mmp(two_planes.plan)
    g = two_planes.functional_gauge
    ag = assemble_gauge(g, m)
    gs = gap_expressions(ag)
    part = two_planes.plan.part
    n = part[2].normal
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rand_assignment(ag.registry, rng)
        got = np.array([e.evaluate(a, 0.0) for e in gs.gaps])
        want = []
        for p in sample_points(part[2]):
            u2 = np.array([e.evaluate(a, 0.0) for e in displacement_at(m.global_torsor(2), p)])
            u1 = np.array([e.evaluate(a, 0.0) for e in displacement_at(m.global_torsor(1), p)])
            dn = n @ (u2 - u1)
            want += [g.half_width - dn, g.half_width + dn]
        assert np.allclose(got, want, atol=1e-12)


def test_fixed_association_links_are_completion_only(two_planes):
    ag = assemble_gauge(two_planes.functional_gauge, build_mmp(two_planes.plan))
    # a single plane datum leaves rz, tx, ty free
    assert sorted(ag.links) == ["grz_F", "gtx_F", "gty_F"]
    gs = gap_expressions(ag)
    assert not any(set(ag.links) & e.params() for e in gs.gaps)


def test_contact_association(two_planes):
    g = VirtualGauge("C", 2, (1,), 0.1, association="contact")
    ag = assemble_gauge(g, build_mmp(two_planes.plan))
    assert {"grx_C.1", "gry_C.1", "gtz_C.1"} <= set(ag.links)
    assert ag.constraints and all(c.family == "CGP" for c in ag.constraints)


def test_orientation_zone_floats(two_planes):
    g = VirtualGauge("O", 2, (1,), 0.1, spec_type="orientation")
    ag = assemble_gauge(g, build_mmp(two_planes.plan))
    assert "gtz_Oz" in ag.links
    gs = gap_expressions(ag)
    assert all(e.coeff("gtz_Oz") != 0 for e in gs.gaps)


def test_cylinder_zone_sampling(four_setups):
    g = VirtualGauge("H", 4, (3,), 0.05)
    ag = assemble_gauge(g, build_mmp(four_setups.plan))
    gs = gap_expressions(ag)
    assert len(gs) == 16
    assert all(lab.startswith("z") for lab in gs.labels)


def test_manufacturing_gauge_naming(four_setups):
    m = build_mmp(four_setups.plan).truncate(3)
    g = VirtualGauge("S3x6", 6, (3, 4, 5), 0.05, kind="manufacturing", setup=3)
    ag = assemble_gauge(g, m)
    assert ag.links == [] or all(p.startswith("m") for p in ag.links)
    gs = gap_expressions(ag)
    cons = gs.as_constraints()
    assert cons and all(c.family == "CMGP" for c in cons)


def test_surface_missing_at_setup(four_setups):
    m = build_mmp(four_setups.plan).truncate(2)
    g = VirtualGauge("S2x6", 6, (3,), 0.05, kind="manufacturing", setup=2)
    with pytest.raises(GaugeError, match="surface 6 does not exist on the part at the end of set-up 2"):
        assemble_gauge(g, m)


def test_functional_gauge_on_fixture_needs_no_links(four_setups):
    ag = assemble_gauge(four_setups.functional_gauge, build_mmp(four_setups.plan))
    # 3-2-1 datum system fixes all six mobilities
    assert ag.links == []
