import json

import numpy as np
import pytest

from mmptol.mmp import build_mmp
from mmptol.part import Frame, NominalPart, Surface, circle_directions, sample_points, validate_part
from mmptol.planfile import fixture_path, load_plan_text
from mmptol.process import (ElementaryConnection, LinearConstraint, MachiningOperation, ProcessPlan,
                            RankSelector, SetUp, contact_geometry, contact_row, declare, validate_plan)
from mmptol.torsor import LinExpr


def block():
    """30 x 20 x 10 block: bottom 1, top 2, sides 3 (x=0) and 4 (y=0)."""
    p = NominalPart()
    p.add(Surface.plane(1, Frame.from_axes((15, 10, 0), (0, 0, -1), (1, 0, 0)),
                        [(-15, 10), (15, 10), (15, -10), (-15, -10)]))
    p.add(Surface.plane(2, Frame.from_axes((15, 10, 10), (0, 0, 1), (1, 0, 0)),
                        [(-15, -10), (15, -10), (15, 10), (-15, 10)]))
    p.add(Surface.plane(3, Frame.from_axes((0, 10, 5), (-1, 0, 0), (0, 1, 0)),
                        [(-10, -5), (10, -5), (10, 5), (-10, 5)]))
    p.add(Surface.plane(4, Frame.from_axes((15, 0, 5), (0, -1, 0), (0, 0, 1)),
                        [(-5, -15), (5, -15), (5, 15), (-5, 15)]))
    return p


PLANE = {"rx": (-1e-4, 1e-4), "ry": (-1e-4, 1e-4), "tz": (-0.1, 0.1)}


def plan_321(part=None, conns=None):
    part = part or block()
    conns = conns or [ElementaryConnection(s, r, bounds=PLANE) for r, s in enumerate((1, 3, 4), start=1)]
    su = SetUp(1, conns, [MachiningOperation(2, PLANE)])
    return ProcessPlan(part, [su], {1: PLANE, 3: PLANE, 4: PLANE})


class TestFrame:
    def test_from_axes_is_right_handed(self):
        f = Frame.from_axes((1, 2, 3), (0.5, 0.8660254037844386, 0), (-0.8660254037844386, 0.5, 0))
        assert f.is_valid()
        assert np.allclose(f.axis(1), [0, 0, 1])

    def test_round_trip(self):
        f = Frame.from_axes((1, 2, 3), (1, 1, 1))
        p = np.array([[4.0, -2.0, 7.0]])
        assert np.allclose(f.to_global(f.to_local(p)), p)

    def test_parallel_x_rejected(self):
        with pytest.raises(ValueError):
            Frame.from_axes((0, 0, 0), (0, 0, 1), (0, 0, 2))


class TestPart:
    def test_block_valid(self):
        assert validate_part(block()) == []

    def test_off_plane_vertex_reported(self):
        p = NominalPart()
        p.add(Surface(1, "plane", Frame(), [(0, 0, 0), (1, 0, 0), (0, 1, 0.5)]))
        v = validate_part(p)
        assert len(v) == 1 and "vertex 2" in str(v[0])

    def test_skewed_frame_reported(self):
        p = NominalPart()
        p.add(Surface.plane(1, Frame((0, 0, 0), [[1, 0.1, 0], [0, 1, 0], [0, 0, 1]]), [(0, 0), (1, 0), (0, 1)]))
        assert any("orthonormal" in str(v) for v in validate_part(p))

    def test_cylinder_samples_on_radius(self):
        s = Surface.cylinder(4, Frame.from_axes((1, 2, 0), (0, 0, 1)), 5.0, 40.0)
        pts = sample_points(s)
        r = np.hypot(pts[:, 0] - 1, pts[:, 1] - 2)
        assert np.allclose(r, 5.0)
        assert set(np.round(pts[:, 2], 9)) == {0.0, 40.0}

    def test_circle_directions_unit(self):
        d = circle_directions(8)
        assert np.allclose(np.linalg.norm(d, axis=1), 1.0)

    def test_duplicate_surface(self):
        p = block()
        with pytest.raises(ValueError):
            p.add(p[1])


class TestContacts:
    def test_plane_offers_rotations_first(self):
        geo = contact_geometry(block()[1], ElementaryConnection(1, 1))
        assert geo.kinds == ("rx", "ry", "tz")

    def test_cylinder_on_plane_needs_normal(self):
        s = Surface.cylinder(4, Frame(), 5.0, 10.0)
        with pytest.raises(ValueError):
            contact_geometry(s, ElementaryConnection(4, 1, holder="plane"))

    def test_rank_selector_321(self):
        part = block()
        sel = RankSelector()
        gained = []
        for sid in (1, 3, 4):
            geo = contact_geometry(part[sid], ElementaryConnection(sid, 1))
            gained.append(sum(sel.offer(contact_row(geo.frame, k)) for k in geo.kinds))
        assert gained == [3, 2, 1] and sel.rank == 6

    def test_parallel_plane_adds_nothing_new(self):
        part = block()
        sel = RankSelector()
        for sid in (1, 2):
            geo = contact_geometry(part[sid], ElementaryConnection(sid, 1))
            for k in geo.kinds:
                sel.offer(contact_row(geo.frame, k))
        assert sel.rank == 3


class TestPlan:
    def test_valid_plan(self):
        assert validate_plan(plan_321()) == []

    def test_missing_dof(self):
        plan = plan_321(conns=[ElementaryConnection(1, 1, bounds=PLANE), ElementaryConnection(3, 2, bounds=PLANE)])
        assert any(i.code == "dof" and "5 of 6" in i.message for i in validate_plan(plan))

    def test_rank_gap(self):
        plan = plan_321(conns=[ElementaryConnection(s, r, bounds=PLANE) for s, r in ((1, 1), (3, 2), (4, 5))])
        assert any(i.code == "hierarchy" for i in validate_plan(plan))

    def test_positioning_on_unproduced_surface(self):
        plan = plan_321()
        plan.raw.pop(4)
        issues = validate_plan(plan)
        assert any(i.code == "precedence" and "surface 4" in i.message for i in issues)

    def test_declare_counts(self):
        d = declare(plan_321())
        cats = {}
        for p in d.registry:
            cats[p.category] = cats.get(p.category, 0) + 1
        # 3 raw planes, 3 holder planes, 1 machined plane; 3 parameters each
        assert cats == {"DM": 12, "DH": 9}
        assert len([c for c in d.constraints if c.family == "CM"]) == 24

    def test_constraint_needs_parameters(self):
        with pytest.raises(ValueError):
            LinearConstraint(LinExpr.const(1.0), "<=", 2.0)

    def test_constraint_slack(self):
        c = LinearConstraint(LinExpr({"a": 2.0}, 1.0), ">=", 3.0)
        assert c.slack({"a": 2.0}) == pytest.approx(2.0)


@pytest.mark.parametrize("tertiary", [5, 6])
def test_last_setup_accepts_either_tertiary_surface(tertiary):
    doc = json.loads(fixture_path().read_text())
    doc["setups"][3]["connections"][2]["surface"] = tertiary
    plan = load_plan_text(json.dumps(doc)).plan
    assert validate_plan(plan) == []
    assert f"ry_{tertiary}S4" in build_mmp(plan).registry.ids()
