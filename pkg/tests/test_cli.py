import csv
import io
import subprocess
import sys

import pytest

from coherent_repeater import __version__
from coherent_repeater.cli import FIG2_COLUMNS, run_command


def _run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = run_command([*argv, "-o", str(out)])
    text = out.read_text() if out.exists() else ""
    return code, text


def _rows(text):
    lines = text.splitlines()
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_provenance_line(tmp_path):
    code, text = _run(tmp_path, "fig2", "--alpha-sq", "1", "--ell", "0,10")
    assert code == 0
    first = text.splitlines()[0]
    assert first.startswith(f"# coherent_repeater {__version__} command=fig2 config=")
    assert first.endswith("seed=1")
    assert text.splitlines()[1] == ",".join(FIG2_COLUMNS)


def test_fig2_ordering(tmp_path):
    code, text = _run(tmp_path, "fig2", "--alpha-sq", "1,3", "--ell", "0:100:10")
    rows = _rows(text)
    assert code == 0 and len(rows) == 22
    for r in rows:
        f, F1, F2, F4, FS = (float(r[k]) for k in ("f", "F1", "F2", "F4", "F_S"))
        assert F4 >= F2 >= F1 >= f >= 0.5 and FS <= F4


def test_worker_count_does_not_change_output(tmp_path):
    _, a = _run(tmp_path, "fig2", "--ell", "0:50:5", "--workers", "1", name="a.csv")
    _, b = _run(tmp_path, "fig2", "--ell", "0:50:5", "--workers", "3", name="b.csv")
    assert a == b


def test_montecarlo_byte_stable(tmp_path):
    args = ("montecarlo", "--segments", "2,3", "--p-cycle", "0.3", "--trials", "2000", "--seed", "5")
    c1, a = _run(tmp_path, *args, "--workers", "1", name="a.csv")
    c2, b = _run(tmp_path, *args, "--workers", "2", name="b.csv")
    assert c1 == c2 == 0 and a == b
    assert all(abs(float(r["z_score"])) < 4 for r in _rows(a))


def test_fig4_length_falls_with_segments(tmp_path):
    code, text = _run(tmp_path, "fig4", "--alpha-sq", "1", "--f-final", "0.9", "--segments", "1:9:2")
    ells = [float(r["ell_km"]) for r in _rows(text)]
    assert code == 0
    assert all(a >= b for a, b in zip(ells, ells[1:]))


def test_fig4_infeasible_exit(tmp_path):
    code, text = _run(tmp_path, "fig4", "--alpha-sq", "1", "--f-final", "0.9,1", "--segments", "1")
    assert code == 2
    assert len(_rows(text)) == 1


@pytest.mark.parametrize("cmd", ["distribute", "purify", "swap", "selftest"])
def test_commands_succeed(tmp_path, cmd):
    extra = {"distribute": ["--alpha-sq", "1", "--ell", "5"], "purify": ["--f-grid", "0.6,0.9"]}.get(cmd, [])
    code, text = _run(tmp_path, cmd, *extra)
    assert code == 0
    assert _rows(text)


def test_swap_columns(tmp_path):
    _, text = _run(tmp_path, "swap", "--fidelity", "0.8")
    rows = _rows(text)
    assert len(rows) == 16
    assert {r["matches_table"] for r in rows} == {"false"}


def test_invalid_config_exit(tmp_path):
    assert run_command(["fig2", "--set", "bogus=1"]) == 1
    assert run_command(["fig2", "--rounds", "two"]) == 1
    assert run_command(["nosuch"]) == 1
    assert run_command(["swap", "--fidelity", "0.2"]) == 1
    assert run_command(["distribute", "--detector-efficiency", "0.8"]) == 1


def test_config_file_and_set(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("alpha_sq = 2\nell_km = 10\n")
    code, text = _run(tmp_path, "fig2", "--config", str(cfg), "--set", "ell_km=20")
    rows = _rows(text)
    assert code == 0 and len(rows) == 1
    assert float(rows[0]["ell_km"]) == 20.0 and float(rows[0]["alpha_sq"]) == 2.0


def test_verify_hamiltonians_reports_failing_literal_model(tmp_path):
    code, text = _run(tmp_path, "verify-hamiltonians", "--ratios", "10,20")
    assert code == 3
    models = {r["model"] for r in _rows(text)}
    assert models == {"stated", "restored", "second_order"}


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "coherent_repeater", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout
