import csv
import json

import numpy as np
import pytest

from parabolic_commutator.cli import CSV_SCHEMAS, emit_plot, main, run, symbol_identity_error
from parabolic_commutator.config import DEFAULT_CONFIG, SUBCOMMANDS, load_config, parse_config
from parabolic_commutator.grid import Field2D, TorusGrid

FAST = ["multiplier-decay", "shift-bound", "t1-osc", "symbol-check"]


def read_header(path):
    with open(path, newline="") as fh:
        return tuple(next(csv.reader(fh)))


def test_every_subcommand_has_a_schema():
    assert set(SUBCOMMANDS) <= set(CSV_SCHEMAS)


@pytest.mark.parametrize("sub", FAST)
def test_csv_header_and_manifest(sub, tmp_path):
    rc = run(sub, out=tmp_path, quick=True)
    assert rc in (0, 1)
    assert read_header(tmp_path / f"{sub}.csv") == CSV_SCHEMAS[sub]
    man = json.loads((tmp_path / f"{sub}.manifest.json").read_text())
    assert set(man) == {"subcommand", "config_sha256", "seed", "quick", "passed", "timestamp",
                        "git_describe"}
    assert man["passed"] == (rc == 0)
    assert man["config_sha256"] == load_config().digest


@pytest.mark.parametrize("sub", ["multiplier-decay", "shift-bound"])
def test_csv_deterministic(sub, tmp_path):
    run(sub, out=tmp_path / "a", quick=True, seed=3)
    run(sub, out=tmp_path / "b", quick=True, seed=3)
    assert (tmp_path / "a" / f"{sub}.csv").read_bytes() == (tmp_path / "b" / f"{sub}.csv").read_bytes()


def test_plot_deterministic(tmp_path):
    series = {"a": ([1, 2, 4, 8], [1.0, 0.5, 0.25, 0.0]), "b": ([1, 2], [3.0, 2.0])}
    p1 = emit_plot(series, tmp_path / "p1.svg", title="t")
    p2 = emit_plot(series, tmp_path / "p2.svg", title="t")
    assert p1.read_bytes() == p2.read_bytes()
    with pytest.raises(ValueError):
        emit_plot({"c": ([1], [1.0])}, tmp_path / "p3.svg")


def test_plot_flag_writes_svg(tmp_path):
    run("multiplier-decay", out=tmp_path, quick=True, plot=True)
    assert list(tmp_path.glob("*.svg"))


def test_zero_symbol_check_passes(tmp_path, capsys):
    cfg = tmp_path / "zero.ini"
    cfg.write_text("[symbol]\nname = zero\n")
    assert run("symbol-check", config=cfg, out=tmp_path, quick=True) == 0
    assert capsys.readouterr().out.startswith("PASS symbol-check")


def test_unknown_subcommand_exits_2(capsys):
    assert main(["no-such-thing"]) == 2


def test_bad_config_exits_2(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[grid]\nN = 48\n")
    assert run("multiplier-decay", config=cfg, out=tmp_path) == 2
    assert run("multiplier-decay", config=tmp_path / "missing.ini", out=tmp_path) == 2


def test_config_overlay_and_numbers():
    cfg = parse_config("[kernel-reg]\nlambdas = 2**-10, 1e-4\n")
    assert cfg.numbers("kernel-reg", "lambdas") == [2.0**-10, 1e-4]
    assert cfg.pairs("multiplier-decay", "rays")[3] == (1.0, -1.0)
    assert cfg.N == 64 and cfg.digest != load_config().digest
    assert parse_config(DEFAULT_CONFIG).digest == load_config().digest


def test_identity_error_on_x1_only_field():
    # a field with no x2 dependence has both sides of the identity equal to zero
    g = TorusGrid.square(32)
    b = Field2D.from_function(g, lambda x1, x2: np.sin(x1) + 0 * x2)
    assert symbol_identity_error(b) == 0.0
