import pandas as pd
import pytest

from aided_nav.errors import NavDataError
from aided_nav.eval_runner import BASELINE, SCENARIO_COLUMNS, summarize
from report_extraction import (extract_report, improvement_table, load_scenarios, read_artifact_header,
                               read_table, write_table)

HEADER = "config_hash=0123abcd,seed=7"


@pytest.fixture
def scenarios():
    rows = []
    for mission in ("M12", "M13"):
        for duration in (30.0, 50.0):
            for start, scale in ((70.0, 1.0), (110.0, 2.0)):
                rows.append([mission, duration, start, BASELINE, 0.4 * scale, duration * scale, 0.6 * duration])
                rows.append([mission, duration, start, "st_aided", 0.1 * scale, 0.5 * duration * scale,
                             0.2 * duration])
    return pd.DataFrame(rows, columns=SCENARIO_COLUMNS)


@pytest.fixture
def scenarios_csv(scenarios, tmp_path):
    return write_table(scenarios, str(tmp_path / "report" / "scenarios.csv"), HEADER)


def test_write_table_header(scenarios_csv):
    with open(scenarios_csv) as f:
        assert f.readline() == f"# {HEADER}\n"
        assert f.readline().strip() == ",".join(SCENARIO_COLUMNS)


def test_read_artifact_header(scenarios_csv, tmp_path):
    assert read_artifact_header(scenarios_csv) == {"config_hash": "0123abcd", "seed": "7"}
    plain = write_table(pd.DataFrame({"a": [1]}), str(tmp_path / "plain.csv"))
    assert read_artifact_header(plain) == {}
    with pytest.raises(NavDataError):
        read_artifact_header(str(tmp_path / "missing.csv"))


def test_values_survive_exactly(scenarios, scenarios_csv):
    loaded, header = load_scenarios(scenarios_csv)
    pd.testing.assert_frame_equal(loaded, scenarios)
    assert header["seed"] == "7"


def test_missing_column(scenarios, tmp_path):
    path = write_table(scenarios.drop(columns=["afpe"]), str(tmp_path / "s.csv"))
    with pytest.raises(NavDataError, match="missing column 'afpe'"):
        load_scenarios(path)


def test_needs_baseline_rows(scenarios, tmp_path):
    path = write_table(scenarios[scenarios["method"] != BASELINE], str(tmp_path / "s.csv"))
    with pytest.raises(NavDataError, match=BASELINE):
        load_scenarios(path)


def test_extract_report_matches_summarize(scenarios, scenarios_csv, tmp_path):
    out_dir = str(tmp_path / "rebuilt")
    paths = extract_report(scenarios_csv, out_dir)
    assert read_artifact_header(paths["summary"])["config_hash"] == "0123abcd"
    rebuilt = read_table(paths["summary"])
    expected = summarize(scenarios, "st_aided")
    assert len(rebuilt) == 4
    pd.testing.assert_frame_equal(rebuilt, expected)
    assert rebuilt["vel_rmse_improvement_pct"].tolist() == pytest.approx([75.0] * 4)
    assert rebuilt["pos_rmse_improvement_pct"].tolist() == pytest.approx([50.0] * 4)


def test_falls_back_to_other_aided_method(scenarios, tmp_path):
    renamed = scenarios.replace({"method": {"st_aided": "oracle"}})
    path = write_table(renamed, str(tmp_path / "s.csv"))
    paths = extract_report(path, str(tmp_path / "out"))
    summary = read_table(paths["summary"])
    assert "vel_rmse_oracle" in summary.columns


def test_improvement_table(scenarios):
    table = improvement_table(summarize(scenarios, "st_aided"))
    assert list(table.columns) == ["mission", "duration", "metric", "improvement_pct"]
    assert len(table) == 4 * 3
    afpe = table[table["metric"] == "afpe"]["improvement_pct"]
    assert afpe.tolist() == pytest.approx([100 * (0.6 - 0.2) / 0.6] * 4)


def test_svg_output_is_reproducible(scenarios_csv, tmp_path):
    first = extract_report(scenarios_csv, str(tmp_path / "a"), svg=True)
    second = extract_report(scenarios_csv, str(tmp_path / "b"), svg=True)
    for name in ("improvement_vel_rmse", "improvement_pos_rmse", "improvement_afpe"):
        with open(first[name], "rb") as fa, open(second[name], "rb") as fb:
            assert fa.read() == fb.read()


def test_whole_number_floats_keep_their_dtype(tmp_path):
    table = pd.DataFrame({"mission": ["7"], "duration": [30.0], "n_starts": [5], "afpe_improvement_pct": [50.0]})
    path = write_table(table, str(tmp_path / "t.csv"))
    with open(path) as f:
        assert f.read().splitlines()[1] == "7,30,5,50"
    pd.testing.assert_frame_equal(read_table(path), table)


def test_read_table_non_numeric(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("mission,duration\nM1,long\n")
    with pytest.raises(NavDataError, match="duration"):
        read_table(str(path))
