import io
import json

import numpy as np
import pytest

from borromean.errors import ProvenanceError
from borromean.output import (
    CONFIG_PREFIX,
    HASH_COLUMN,
    config_hash,
    format_float,
    read_grid_dump,
    read_report,
    read_table,
    write_grid_dump,
    write_report,
    write_table,
)
from borromean.wavefunction import Space, WaveFieldGrid

CONFIG = {"v0": 0.32, "alpha": 0.0, "mass_ratio": 22.2, "command": "spectrum"}
ROWS = [{"n": 0, "energy": -0.140879, "flag": True}, {"n": 1, "energy": None, "flag": False}]


def table(fmt, config=CONFIG):
    buf = io.StringIO()
    write_table(ROWS, ["n", "energy", "flag"], config, fmt, buf)
    return buf.getvalue()


class TestHash:
    def test_key_order_irrelevant(self):
        assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})

    def test_value_sensitive(self):
        assert config_hash({"a": 1}) != config_hash({"a": 2})

    def test_float_format(self):
        assert format_float(0.1) == "1.00000000000000e-01"
        assert format_float(None) == "" and format_float(True) == "true" and format_float(3) == "3"
        assert float(format_float(np.pi)) == pytest.approx(np.pi, rel=1e-14)


class TestTables:
    def test_csv_round_trip(self):
        text = table("csv")
        assert text.startswith(CONFIG_PREFIX)
        config, rows = read_table(io.StringIO(text))
        assert config == CONFIG
        assert float(rows[0]["energy"]) == -0.140879 and rows[1]["energy"] == ""
        assert all(r[HASH_COLUMN] == config_hash(CONFIG) for r in rows)

    def test_json_round_trip(self):
        config, rows = read_table(io.StringIO(table("json")))
        assert config == CONFIG and rows == ROWS

    def test_deterministic(self):
        assert table("csv") == table("csv") and table("json") == table("json")

    def test_missing_config_block(self):
        text = table("csv").split("\n", 1)[1]
        with pytest.raises(ProvenanceError):
            read_table(io.StringIO(text))

    def test_edited_config_detected(self):
        text = table("csv").replace('"alpha":0.0', '"alpha":1.0')
        with pytest.raises(ProvenanceError):
            read_table(io.StringIO(text))

    def test_json_hash_mismatch(self):
        payload = json.loads(table("json"))
        payload["config"]["v0"] = 0.3
        with pytest.raises(ProvenanceError):
            read_table(io.StringIO(json.dumps(payload)))

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            table("xml")


class TestReports:
    def test_round_trip(self):
        buf = io.StringIO()
        write_report({"energy": -0.1, "flags": []}, CONFIG, buf)
        config, report = read_report(io.StringIO(buf.getvalue()))
        assert config == CONFIG and report == {"energy": -0.1, "flags": []}

    def test_missing_config(self):
        with pytest.raises(ProvenanceError):
            read_report(io.StringIO(json.dumps({"report": {}})))


class TestGridDump:
    @pytest.fixture
    def field(self, rng):
        x = np.linspace(-2, 2, 9)
        y = np.linspace(-1, 1, 6)
        vals = rng.normal(size=(9, 6)) + 1j * rng.normal(size=(9, 6))
        return WaveFieldGrid((x, y), vals, Space.POSITION, -0.1, {"frame_fraction": 1e-5}).normalized()

    def test_round_trip(self, field, tmp_path):
        path, sidecar = write_grid_dump(field, CONFIG, tmp_path / "psi.csv")
        assert sidecar.name == "psi.csv.json"
        back = read_grid_dump(path)
        assert back.space is Space.POSITION and back.energy == -0.1
        np.testing.assert_allclose(back.values, field.values, rtol=1e-13)
        for a, b in zip(back.axes, field.axes):
            np.testing.assert_allclose(a, b, atol=1e-14)
        assert abs(back.norm - field.norm) < 1e-12
        assert back.metadata["frame_fraction"] == 1e-5

    def test_missing_sidecar(self, field, tmp_path):
        path, sidecar = write_grid_dump(field, CONFIG, tmp_path / "psi.csv")
        sidecar.unlink()
        with pytest.raises(ProvenanceError):
            read_grid_dump(path)

    def test_mismatched_sidecar(self, field, tmp_path):
        path, _ = write_grid_dump(field, CONFIG, tmp_path / "a.csv")
        _, other = write_grid_dump(field, dict(CONFIG, alpha=1.0), tmp_path / "b.csv")
        (tmp_path / "a.csv.json").write_text(other.read_text())
        with pytest.raises(ProvenanceError):
            read_grid_dump(path)

    def test_deterministic_bytes(self, field, tmp_path):
        a, _ = write_grid_dump(field, CONFIG, tmp_path / "a.csv")
        b, _ = write_grid_dump(field, CONFIG, tmp_path / "b.csv")
        assert a.read_bytes() == b.read_bytes()
