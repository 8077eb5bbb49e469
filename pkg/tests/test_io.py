import json
import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cweig.errors import ShapeFileError
from cweig.geometry import SupportShape
from cweig.io import (
    RunManifest,
    boundary_svg,
    format_shape,
    parse_shape,
    read_shape,
    write_csv,
    write_shape,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(st.dictionaries(st.sampled_from(list(range(3, 42, 2))), st.tuples(finite, finite), max_size=10),
       st.floats(0.1, 10.0))
def test_round_trip_exact(coeffs, width):
    shape = SupportShape.from_dict(coeffs, width)
    back = parse_shape(format_shape(shape))
    assert back.width == shape.width
    assert back.coeffs() == shape.coeffs()


def test_file_round_trip(tmp_path):
    shape = SupportShape.from_dict({3: (0.1 / 3, -1e-17), 7: (np.pi / 1e4, 0.0)})
    path = write_shape(shape, tmp_path / "s.txt")
    assert read_shape(path).coeffs() == shape.coeffs()


def test_parse_comments_and_blank_lines():
    text = "# a body\nwidth 2.0  # constant width\n\n3 0.01 0.0\n5 0 -0.002\n"
    s = parse_shape(text)
    assert s.coeffs() == {3: (0.01, 0.0), 5: (0.0, -0.002)}


@pytest.mark.parametrize("text", [
    "",
    "3 0.1 0.0\n",
    "width two\n",
    "width -1\n",
    "width 2\n4 0.1 0.0\n",
    "width 2\n1 0.1 0.0\n",
    "width 2\n3 0.1\n",
    "width 2\n3 0.1 0.0\n3 0.2 0.0\n",
    "width 2\n3 nan 0.0\n",
    "width 2\n3 x 0.0\n",
])
def test_parse_rejects(text):
    with pytest.raises(ShapeFileError):
        parse_shape(text)


def test_read_missing_file(tmp_path):
    with pytest.raises(ShapeFileError):
        read_shape(tmp_path / "nope.txt")


def test_csv_has_header(tmp_path):
    p = write_csv(tmp_path / "t.csv", ["a", "b"], [[1, 2], [3, 4]])
    assert p.read_text().splitlines() == ["a,b", "1,2", "3,4"]


def test_svg_polyline():
    svg = boundary_svg(SupportShape.from_dict({3: (0.05, 0.0)}))
    pts = re.search(r'points="([^"]+)"', svg).group(1).split()
    assert len(pts) == 720
    assert svg.startswith("<svg") and "<polygon" in svg


def test_manifest_lists_outputs(tmp_path):
    m = RunManifest("solve", {"h": 3}, seed=7)
    m.add(write_csv(tmp_path / "x.csv", ["h"], [[1]]))
    path = m.write(tmp_path)
    data = json.loads(path.read_text())
    assert data["outputs"] == [str(tmp_path / "x.csv")]
    assert data["seed"] == 7 and data["command"] == "solve"
    assert set(data["versions"]) >= {"python", "numpy", "scipy", "cweig"}
    assert data["wall_time_s"] >= 0
