import csv
import io
import json

import numpy as np
import pytest
from scipy.stats import unitary_group

from ptmap import __version__
from ptmap.circuits import parse_qasm, equal_up_to_phase
from ptmap.cli import main, parse_grid, parse_number, render_csv
from ptmap.errors import ValidationError
from ptmap.ptcore import dumps_matrix


def _table(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(io.StringIO("\n".join(lines))))

    def cell(x):
        try:
            return float(x)
        except ValueError:
            return x

    return rows[0], [[cell(x) for x in r] for r in rows[1:]]


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_number_and_grid():
    assert parse_number("pi/2-1") == np.pi / 2 - 1
    assert parse_number("-2*pi") == -2 * np.pi
    with pytest.raises(ValidationError):
        parse_number("__import__('os')")
    assert np.allclose(parse_grid("m:0:1:0.25", "m"), [0, 0.25, 0.5, 0.75, 1.0])
    for bad in ("m:0:1:0", "m:1:0:0.1", "m:0:1", "x:0:1:0.5"):
        with pytest.raises(ValidationError):
            parse_grid(bad, "m")


def test_csv_header_and_config_echo():
    text = render_csv(["a", "b"], [[1.0, 2]], {"seed": 3})
    lines = text.splitlines()
    assert lines[0] == f"# ptmap {__version__}"
    assert json.loads(lines[1][len("# config "):]) == {"seed": 3}
    assert lines[2] == "a,b"
    assert lines[3] == "1.0,2"


def test_stage1_exact(capsys):
    code, out, _ = _run(capsys, ["stage1", "--sigma", "0.8", "--alpha", "pi/2-1", "--n0", "3", "--grid", "m:-2:2:0.5"])
    assert code == 0
    header, rows = _table(out)
    assert header == ["m", "cos2_theory", "d_theory", "cos2_sim", "d_sim"]
    assert len(rows) == 9
    for r in rows:
        assert abs(r[1] - r[3]) <= 1e-9 and abs(r[2] - r[4]) <= 1e-9


def test_stage1_trine_curve_is_conclusive_at_zero(capsys):
    code, out, _ = _run(capsys, ["stage1", "--sigma", "2*pi/3", "--grid", "m:0:0:1"])
    assert code == 0
    _, rows = _table(out)
    assert abs(rows[0][2] - 1.0) < 1e-12


def test_stage2_flat_at_alpha_zero(capsys):
    code, out, _ = _run(capsys, ["stage2", "--alphas", "0", "--grid", "rho:-1:1:0.5"])
    assert code == 0
    _, rows = _table(out)
    assert all(abs(r[4] - 1.0) < 1e-12 for r in rows)


def test_stage2_shots_and_jobs_are_ordered_and_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["stage2", "--alphas", "pi/2-1", "--grid", "rho:-1.5:1.5:0.5", "--mode", "shots", "--seed", "9"]
    assert main(base + ["--out", str(a)]) == 0
    assert main(base + ["--out", str(b), "--jobs", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    _, rows = _table(a.read_text())
    assert [r[1] for r in rows] == sorted(r[1] for r in rows)


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("PTMAP_SEED", "17")
    out = tmp_path / "t.csv"
    assert main(["trine", "--mode", "shots", "--repeats", "2", "--out", str(out)]) == 0
    assert '"seed": 17' in out.read_text()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"sigma": "1.2", "grid": "m:0:1:0.5"}))
    out = tmp_path / "o.csv"
    assert main(["stage1", "--config", str(cfg), "--grid", "m:0:0:1", "--out", str(out)]) == 0
    text = out.read_text()
    assert '"sigma": "1.2"' in text and '"grid": "m:0:0:1"' in text
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nonsense": 1}))
    assert main(["stage1", "--config", str(bad)]) == 2


def test_validation_exit_code(capsys):
    code, _, err = _run(capsys, ["stage1", "--grid", "m:1:0:0.1"])
    assert code == 2 and "empty" in err
    code, _, _ = _run(capsys, ["qfi", "--jobs", "0"])
    assert code == 2


def test_trine_exact(capsys):
    code, out, err = _run(capsys, ["trine"])
    assert code == 0
    _, rows = _table(out)
    for name, expected, observed in rows:
        assert abs(expected - observed) < 1e-12, name
    assert "same error rate" in err


def test_qfi_product_is_one(capsys):
    code, out, _ = _run(capsys, ["qfi", "--alpha-grid", "alpha:0.1:1.5:0.2", "--rho-grid", "rho:-pi/2:-pi/2:1"])
    assert code == 0
    _, rows = _table(out)
    assert all(abs(r[5] - 1.0) < 1e-9 for r in rows)


def test_cos4(capsys):
    code, out, _ = _run(capsys, ["cos4", "--alpha-grid", "alpha:0:0:1", "--rho-grid", "rho:-1:1:1"])
    assert code == 0
    _, rows = _table(out)
    assert all(abs(r[6] - 1.0) < 1e-12 for r in rows)


def test_grover(capsys):
    code, out, _ = _run(capsys, ["grover", "--log2-m", "20"])
    assert code == 0
    _, rows = _table(out)
    assert abs(rows[0][2] - 0.5828) < 5e-4


def test_grover_boost(capsys):
    code, out, _ = _run(capsys, ["grover", "--log2-m", "16", "--boost-alphas", "0,1.2", "--k-init", "0.5"])
    assert code == 0
    header, rows = _table(out)
    assert header[3] == "k_eff"
    assert abs(rows[0][3] - rows[0][2]) < 1e-9 and rows[1][3] > rows[1][2]


def test_decompose(tmp_path, capsys):
    u = unitary_group.rvs(4, random_state=3)
    src = tmp_path / "u.json"
    src.write_text(dumps_matrix(u))
    qasm, js = tmp_path / "c.qasm", tmp_path / "d.json"
    assert main(["decompose", "--input", str(src), "--qasm", str(qasm), "--out", str(js)]) == 0
    assert equal_up_to_phase(parse_qasm(qasm.read_text()), u, 1e-8)
    payload = json.loads(js.read_text())
    assert payload["cnot_count"] == 3
    assert main(["decompose", "--input", str(src), "--no-canonical-phase", "--qasm", str(qasm), "--out", str(js)]) == 0
    src.write_text("[1, 2]")
    assert main(["decompose", "--input", str(src)]) == 2


def test_golden_passes(capsys):
    code, out, _ = _run(capsys, ["golden"])
    assert code == 0
    _, rows = _table(out)
    assert len(rows) == 6 and all(r[-1] == "true" for r in rows)


def test_golden_failure_exit_code(monkeypatch, capsys):
    import ptmap.cli as cli
    from ptmap.golden import GoldenResult

    monkeypatch.setattr(cli, "run_all", lambda: [GoldenResult("X", "x", 1.0, 0.0)])
    code, _, _ = _run(capsys, ["golden"])
    assert code == 3


def test_plot_failure_never_fails_run(tmp_path, monkeypatch, capsys):
    import ptmap.cli as cli

    def boom(*a, **k):
        raise RuntimeError("no backend")

    monkeypatch.setattr(cli, "write_svg", boom)
    code, _, err = _run(capsys, ["qfi", "--plot", str(tmp_path / "p.svg")])
    assert code == 0 and "warning" in err


def test_plot_written_when_available(tmp_path, capsys):
    pytest.importorskip("matplotlib")
    svg = tmp_path / "p.svg"
    assert main(["qfi", "--plot", str(svg), "--out", str(tmp_path / "q.csv")]) == 0
    assert svg.read_text().lstrip().startswith("<?xml")
