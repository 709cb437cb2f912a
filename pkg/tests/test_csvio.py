"""Deterministic delimited output: block format, cell encoding, manifests."""
import json

import numpy as np
import pytest

from fdtlab import FdtlabError
from fdtlab import csvio


def test_format_cell_encodings():
    assert csvio.format_cell("label") == "label"
    assert csvio.format_cell(True) == "1"
    assert csvio.format_cell(False) == "0"
    assert csvio.format_cell(7) == "7"
    # shortest repr that round-trips
    assert float(csvio.format_cell(0.1)) == 0.1
    assert float(csvio.format_cell(1.0 / 3.0)) == 1.0 / 3.0
    assert csvio.format_cell(float("nan")) == "nan"
    with pytest.raises(FdtlabError):
        csvio.format_cell(1.0 + 2.0j)


def test_blocks_roundtrip(tmp_path):
    path = str(tmp_path / "out.csv")
    blocks = [
        ("alpha", {"t": np.array([0.1, 0.2, 0.3]), "v": np.array([1.0, -2.5, 1e-17])}),
        ("beta tau=0.5", {"name": ["x", "y"], "val": np.array([3.0, 4.0])}),
    ]
    csvio.write_blocks(path, blocks, preamble=("units: hbar = gamma = 1",))
    preamble, parsed = csvio.read_blocks(path)
    assert any("hbar" in line for line in preamble)
    assert set(parsed) == {"alpha", "beta tau=0.5"}
    assert np.array_equal(parsed["alpha"]["t"], [0.1, 0.2, 0.3])
    assert np.array_equal(parsed["alpha"]["v"], [1.0, -2.5, 1e-17])
    assert parsed["beta tau=0.5"]["name"] == ["x", "y"]


def test_blocks_are_blank_line_separated(tmp_path):
    # two empty lines close each block so plotting tools can index them
    path = str(tmp_path / "out.csv")
    csvio.write_blocks(path, [("a", {"x": [1.0]}), ("b", {"x": [2.0]})])
    text = open(path).read()
    assert "\n\n\n# block: b" in text
    assert text.endswith("\n") and not text.endswith("\n\n")


def test_read_rejects_ragged_rows(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# block: a\nx,y\n1.0,2.0\n3.0\n")
    with pytest.raises(FdtlabError):
        csvio.read_blocks(str(path))


def test_read_rejects_data_before_marker(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n1.0,2.0\n")
    with pytest.raises(FdtlabError):
        csvio.read_blocks(str(path))


def test_read_rejects_missing_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# block: a\n")
    with pytest.raises(FdtlabError):
        csvio.read_blocks(str(path))


def test_write_is_deterministic(tmp_path):
    a = str(tmp_path / "a.csv")
    b = str(tmp_path / "b.csv")
    blocks = [("data", {"x": np.linspace(0, 1, 50), "y": np.sin(np.linspace(0, 1, 50))})]
    csvio.write_blocks(a, blocks)
    csvio.write_blocks(b, blocks)
    assert open(a, "rb").read() == open(b, "rb").read()


def test_manifest_contents(tmp_path):
    path = str(tmp_path / "manifest.json")
    csvio.write_manifest(path, {"subcommand": "stats", "seed": 7})
    doc = json.load(open(path))
    assert doc["subcommand"] == "stats"
    assert doc["seed"] == 7
    assert "tool" in doc and "units" in doc and "generated_at" in doc
