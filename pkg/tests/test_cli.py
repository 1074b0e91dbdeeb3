import json
import subprocess
import sys

import pytest

from conftest import DATA
from freetorus.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_classify_text(capsys):
    code, out, _ = run(capsys, "classify", DATA / "linear.aut")
    assert code == 0
    assert "verdict: not relatively hyperbolic" in out


def test_report_writes_json(capsys, tmp_path):
    target = tmp_path / "swap.json"
    code, out, _ = run(capsys, "report", DATA / "swap.aut", "--out", target)
    assert code == 0 and out == ""
    rep = json.loads(target.read_text())
    assert rep["growth"]["label"] == "finite_order(2)"


def test_classify_with_components(capsys):
    code, out, _ = run(capsys, "classify", DATA / "two_level.aut",
                       "--graph-map", DATA / "two_level.json",
                       "--config", DATA / "two_level_config.json", "--format", "json")
    assert code == 0
    rep = json.loads(out)
    assert rep["verdict"]["verdict"] == "relatively hyperbolic w.r.t. {⟨c, d, a'b'ab⟩ ⋊ Z}"


def test_nas_command(capsys):
    code, out, _ = run(capsys, "nas", DATA / "e1.json", "--stratum", "2")
    assert code == 0
    data = json.loads(out)
    assert data["Z"] == ["c"] and data["malnormal"] is True


def test_electric_dist(capsys, tmp_path):
    periph = tmp_path / "periph.txt"
    periph.write_text("c\n")
    code, out, _ = run(capsys, "electric-dist", "a c c b c", "--peripherals", periph)
    assert code == 0
    assert json.loads(out)["electric_length"] == 4


def test_strict_flare(capsys):
    code, out, _ = run(capsys, "flare", "strict", "--auto", DATA / "fibonacci.aut",
                       "--corpus", "random:seed=3,count=10,min=1,max=6", "--bound", "10")
    assert code == 0
    assert json.loads(out)["M_found"] is not None


def test_three_of_four_needs_maps(capsys):
    code, _, err = run(capsys, "flare", "three-of-four", "--auto", DATA / "plastic.aut",
                       "--corpus", "random:seed=1,count=3")
    assert code == 2 and "precondition" in err


@pytest.mark.parametrize("text, code", [
    ("a -> a a ; b -> b", 2),
    ("a -> b ; b -> a ; ", 0),
    ("a -> d ; b -> a", 3),
    ("a => b", 3),
])
def test_exit_codes(capsys, tmp_path, text, code):
    f = tmp_path / "x.aut"
    f.write_text(text)
    assert run(capsys, "classify", f)[0] == code


def test_missing_file(capsys, tmp_path):
    assert run(capsys, "classify", tmp_path / "absent.aut")[0] == 3


def test_bad_config_json(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{ nope")
    assert run(capsys, "classify", DATA / "swap.aut", "--config", cfg)[0] == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "freetorus", "classify", str(DATA / "swap.aut")],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert "finite order" in proc.stdout
