import csv
import json
import math

import pytest

from weakprobe import __version__
from weakprobe.cli import FIG3_COLUMNS, TRAJ_COLUMNS, main
from weakprobe.config import build_config, parse_angle, parse_state, read_config_file, split_list
from weakprobe.errors import ConfigError
from weakprobe.experiments import SCATTER_COLUMNS


@pytest.mark.parametrize("text, value", [("0.25", 0.25), ("pi/4", math.pi / 4), ("0.5*pi", math.pi / 2),
                                         ("-pi", -math.pi), ("2pi/8", math.pi / 4), ("pi", math.pi)])
def test_parse_angle(text, value):
    assert parse_angle(text) == pytest.approx(value)


def test_parse_angle_rejects():
    with pytest.raises(ConfigError):
        parse_angle("tau/2")


def test_lists_and_states():
    assert split_list("L, (1, pi/2, 0),+x") == ["L", "(1, pi/2, 0)", "+x"]
    assert parse_state("(0.5, pi/2, 0)") == (0.5, math.pi / 2, 0.0)
    with pytest.raises(ConfigError):
        parse_state("(2, 0, 0)")
    with pytest.raises(ConfigError):
        parse_state("sideways")


def test_precedence(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("# comment\nn_runs = 30\ng: 0.2, 1  # inline\nbeta = pi/8\n")
    values = read_config_file(path)
    cfg = build_config("fig2", values, {"n_runs": "7", "beta": None})
    assert cfg.n_runs == 7 and cfg.g == (0.2, 1.0) and cfg.beta == (math.pi / 8,)
    assert cfg.init == ("L", "ground")


@pytest.mark.parametrize("bad", [{"g": "-1"}, {"beta": "2"}, {"n_runs": "0"}, {"n_runs": "many"},
                                 {"delta_t": "0"}, {"workers": "0"}])
def test_invalid_values(bad):
    with pytest.raises(ConfigError):
        build_config("fig2", {}, bad)


def test_unknown_file_key(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("colour = blue\n")
    with pytest.raises(ConfigError):
        read_config_file(path)


def test_fig3_duration_grid():
    cfg = build_config("fig3")
    d = cfg.durations()
    assert len(d) == 20 and d[0] == 0.5 and d[-1] == pytest.approx(20.0)


def read_csv(path):
    lines = path.read_text().splitlines()
    header = [l for l in lines if l.startswith("#")]
    rows = list(csv.reader(l for l in lines if not l.startswith("#")))
    return header, rows


def test_cli_fig2(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["fig2", "--g", "5", "--init", "L", "--n-runs", "6", "--duration", "1", "--output", str(out)])
    assert code == 0
    files = sorted(out.iterdir())
    assert [f.name for f in files] == ["fig2_g5_beta0.7854_L.csv"]
    header, rows = read_csv(files[0])
    assert header[0] == f"# weakprobe {__version__}"
    assert any(h.startswith("# master_seed:") for h in header)
    assert tuple(rows[0]) == SCATTER_COLUMNS and len(rows) == 7
    assert str(files[0]) in capsys.readouterr().out


def test_cli_fig3(tmp_path):
    out = tmp_path / "o"
    assert main(["fig3", "--beta", "0", "--n-runs", "4", "--duration-max", "2", "--n-durations", "3",
                 "--output", str(out)]) == 0
    _, rows = read_csv(out / "fig3.csv")
    assert tuple(rows[0]) == FIG3_COLUMNS and len(rows) == 4
    assert [float(r[3]) for r in rows[1:]] == pytest.approx([0.5, 1.25, 2.0])


def test_cli_tomo(tmp_path):
    out = tmp_path / "o"
    assert main(["tomo", "--init", "ground,+x", "--n-runs", "20", "--duration", "1", "--output", str(out)]) == 0
    report = json.loads((out / "tomo.json").read_text())
    assert report["meta"]["version"] == __version__
    assert [r["init"] for r in report["results"]] == ["ground", "+x"]
    assert {"bloch_error", "moment_condition", "excluded", "estimate"} <= set(report["results"][0])


def test_cli_traj(tmp_path):
    out = tmp_path / "o"
    assert main(["traj", "--beta", "0", "--duration", "0.2", "--output", str(out)]) == 0
    _, rows = read_csv(out / "traj.csv")
    assert tuple(rows[0]) == TRAJ_COLUMNS
    steps = rows[1:]
    assert len(steps) == round(0.2 * 2 * math.pi * 5 / 0.01)
    # beta = 0 and init L: the conditioned state never moves
    assert {r[4] for r in steps} == {steps[0][4]} and float(steps[0][3]) == pytest.approx(1.0)


def test_cli_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"n_runs = 3\nduration = 0.5\ninit = ground\noutput = {tmp_path / 'o'}\n")
    assert main(["fig2", "--config", str(cfg), "--g", "0.2"]) == 0
    assert (tmp_path / "o" / "fig2_g0.2_beta0.7854_ground.csv").exists()


def test_exit_codes(tmp_path, capsys):
    assert main(["fig2", "--g", "-3", "--output", str(tmp_path)]) == 2
    assert main(["fig2", "--config", str(tmp_path / "missing.cfg")]) == 1
    assert main(["traj", "--delta-t", "0.5", "--output", str(tmp_path)]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["traj", "--duration", "0.1", "--output", str(blocker / "sub")]) == 1
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["nonsense"])


def test_runtime_keys_stay_out_of_headers(tmp_path):
    main(["traj", "--duration", "0.1", "--workers", "2", "--output", str(tmp_path)])
    header, _ = read_csv(tmp_path / "traj.csv")
    assert not any(h.startswith(("# workers", "# output")) for h in header)
