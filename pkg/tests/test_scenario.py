import importlib.resources as resources

import numpy as np
import pytest

from agribot.geometry import WorldPoint, camera_to_pixel, world_to_camera
from agribot.scenario import ScenarioParseError, load_scenario


def demo_text():
    return (resources.files("agribot") / "data" / "demo.scn").read_text()


MINIMAL = """
[camera]
fx = 500
fy = 500
cx = 320
cy = 240
position = 0 0 1
look_at = 0 0 0
up = 1 0 0

[arm]
links = 0.1 0.2 0.2

[scene]
object = apple 0.1 0.1 0.03
drop_zone = bin -0.1 -0.1 0.03
"""


class TestLoadScenario:
    def test_demo_parses(self):
        s = load_scenario(demo_text())
        assert len(s.scene.objects) == 4
        assert s.seed == 42
        assert s.commands == ("pick the orange",)
        assert s.control.grasp_tolerance == 0.005

    def test_minimal_defaults(self):
        s = load_scenario(MINIMAL)
        assert s.control.dt == 0.01
        assert s.noise.pixel_sigma == 0
        assert s.max_duration == 60

    def test_look_at_conversion(self):
        s = load_scenario(MINIMAL)
        e = s.camera.extrinsics
        # rotation is orthonormal by construction; the look-at point must
        # land on the optical axis (the principal point)
        px = camera_to_pixel(s.camera.intrinsics, world_to_camera(e, WorldPoint(0, 0, 0)))
        assert px.u == pytest.approx(320)
        assert px.v == pytest.approx(240)
        assert np.allclose(e.camera_center(), [0, 0, 1])

    def test_rotation_translation_form(self):
        text = MINIMAL.replace(
            "position = 0 0 1\nlook_at = 0 0 0\nup = 1 0 0",
            "rotation = 1 0 0 0 -1 0 0 0 -1\ntranslation = 0 0 1",
        )
        s = load_scenario(text)
        c = world_to_camera(s.camera.extrinsics, WorldPoint(0, 0, 0))
        assert c.zc == pytest.approx(1)

    def test_unknown_class(self):
        with pytest.raises(ScenarioParseError):
            load_scenario(MINIMAL.replace("object = apple", "object = durian"))

    def test_missing_section(self):
        with pytest.raises(ScenarioParseError):
            load_scenario("[camera]\nfx = 1\nfy = 1\ncx = 0\ncy = 0\n")

    def test_malformed_line_reports_location(self):
        bad = MINIMAL.replace("links = 0.1 0.2 0.2", "links = 0.1 0.2")
        with pytest.raises(ScenarioParseError, match="links"):
            load_scenario(bad)

    def test_object_outside_workbench(self):
        bad = MINIMAL + "workbench = -0.05 -0.05 0.05 0.05\n"
        with pytest.raises(ScenarioParseError, match="extent"):
            load_scenario(bad)

    def test_invalid_rotation_rejected(self):
        text = MINIMAL.replace(
            "position = 0 0 1\nlook_at = 0 0 0\nup = 1 0 0",
            "rotation = 2 0 0 0 2 0 0 0 2\ntranslation = 0 0 1",
        )
        with pytest.raises(ScenarioParseError):
            load_scenario(text)
