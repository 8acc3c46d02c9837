import math

import pytest

from simsync.math3d import Vector3
from simsync.modelxml import (
    BoxGeometry,
    CylinderGeometry,
    ModelXmlError,
    SphereGeometry,
    document_to_xml,
    load_model_xml,
    parse_model_xml,
)

MINIMAL = (
    '<model name="crate"><link name="body"><visual name="v">'
    '<geometry><box size="1 2 3"/></geometry></visual></link></model>'
)

FULL = """\
<model name="rig">
  <link name="base">
    <pose>0.5 0.0 0.25 0.0 0.0 1.5707963267948966</pose>
    <visual name="plate">
      <pose>0.0 0.0 0.1 0.1 -0.2 0.3</pose>
      <geometry><cylinder radius="0.4" length="0.05"/></geometry>
      <material>
        <ambient>0.2 0.2 0.2 1.0</ambient>
        <diffuse>0.9 0.4 0.1 1.0</diffuse>
      </material>
    </visual>
    <visual name="bump">
      <geometry><sphere radius="0.1"/></geometry>
    </visual>
  </link>
  <link name="arm">
    <visual name="beam">
      <geometry><box size="0.05 0.05 1.0"/></geometry>
    </visual>
  </link>
</model>
"""


class TestParse:
    def test_minimal(self):
        doc = parse_model_xml(MINIMAL)
        assert doc.name == "crate"
        assert len(doc.links) == 1 and len(doc.links[0].visuals) == 1
        geometry = doc.links[0].visuals[0].geometry
        assert geometry == BoxGeometry(Vector3(1, 2, 3))

    def test_full(self):
        doc = parse_model_xml(FULL)
        assert [link.name for link in doc.links] == ["base", "arm"]
        base = doc.links[0]
        assert base.pose.position == Vector3(0.5, 0.0, 0.25)
        plate = base.visuals[0]
        assert isinstance(plate.geometry, CylinderGeometry)
        assert plate.material is not None
        assert plate.material.diffuse.r == 0.9
        assert isinstance(base.visuals[1].geometry, SphereGeometry)
        # yaw pi/2 becomes a rotation on the link pose
        assert abs(base.pose.orientation.z - math.sin(math.pi / 4)) < 1e-12

    def test_load_from_path(self, tmp_path):
        path = tmp_path / "crate.model.xml"
        path.write_text(MINIMAL)
        assert load_model_xml(path) == parse_model_xml(MINIMAL)

    def test_load_from_text(self):
        assert load_model_xml(MINIMAL).name == "crate"


class TestErrors:
    def test_malformed_has_line_column(self):
        with pytest.raises(ModelXmlError) as err:
            parse_model_xml("<model name='a'><link></model>")
        assert err.value.line is not None

    def test_missing_model_name(self):
        with pytest.raises(ModelXmlError) as err:
            parse_model_xml("<model><link name='l'/></model>")
        assert "name" in str(err.value)

    def test_missing_link_name(self):
        with pytest.raises(ModelXmlError):
            parse_model_xml('<model name="m"><link/></model>')

    def test_unsupported_element(self):
        with pytest.raises(ModelXmlError) as err:
            parse_model_xml('<model name="m"><sensor/></model>')
        assert "sensor" in str(err.value)

    def test_unsupported_geometry(self):
        with pytest.raises(ModelXmlError):
            parse_model_xml('<model name="m"><link name="l"><visual name="v">'
                            '<geometry><mesh uri="x"/></geometry></visual></link></model>')

    def test_duplicate_link_names(self):
        with pytest.raises(ModelXmlError) as err:
            parse_model_xml('<model name="m"><link name="l"/><link name="l"/></model>')
        assert "duplicate" in str(err.value)

    def test_duplicate_visual_names(self):
        xml = ('<model name="m"><link name="l">'
               '<visual name="v"><geometry><sphere radius="1"/></geometry></visual>'
               '<visual name="v"><geometry><sphere radius="1"/></geometry></visual>'
               '</link></model>')
        with pytest.raises(ModelXmlError):
            parse_model_xml(xml)

    def test_visual_requires_geometry(self):
        with pytest.raises(ModelXmlError):
            parse_model_xml('<model name="m"><link name="l"><visual name="v"/></link></model>')

    def test_bad_pose_arity(self):
        with pytest.raises(ModelXmlError):
            parse_model_xml('<model name="m"><link name="l"><pose>1 2 3</pose></link></model>')

    def test_nonpositive_dimensions(self):
        with pytest.raises(ModelXmlError):
            parse_model_xml('<model name="m"><link name="l"><visual name="v">'
                            '<geometry><sphere radius="0"/></geometry></visual></link></model>')

    def test_root_must_be_model(self):
        with pytest.raises(ModelXmlError):
            parse_model_xml("<robot name='r'/>")


class TestRoundTrip:
    @pytest.mark.parametrize("xml", [MINIMAL, FULL])
    def test_serialize_reparse_equal(self, xml):
        doc = parse_model_xml(xml)
        assert parse_model_xml(document_to_xml(doc)) == doc

    def test_double_round_trip_stable(self):
        doc = parse_model_xml(FULL)
        once = document_to_xml(doc)
        assert document_to_xml(parse_model_xml(once)) == once
