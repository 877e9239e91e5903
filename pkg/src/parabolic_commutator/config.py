"""Run configuration: flat INI text with [section] headers, parsed by configparser.

Every threshold that decides a PASS/FAIL line lives in [thresholds]; the
defaults below are the acceptance values.
"""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field

DEFAULT_CONFIG = """\
[grid]
L = 3.141592653589793
N = 64

[symbol]
name = sine_x1
seed = 7
symbols = sine_x1, mixed, random_bandlimited

[run]
seed = 0
plot = false

[multiplier-decay]
rays = 1 0; 0 1; 1 1; 1 -1
k_max = 14

[qs-decay]
j = 0
s_list = 0.5, 0.25, 0.125, 0.0625, 0.03125

[kernel-reg]
lambdas = 2**-10, 2**-11, 2**-12, 2**-13, 2**-14, 2**-15, 2**-16, 2**-17, 2**-18
x = 0.3, -0.2
n_quad = 64

[shift-bound]
lambdas = 1e-3, 1e-4, 1e-5
n_samples = 100000

[f-lambda]
lambdas = 1e-3, 1e-4, 1e-5
n_mc = 1000000

[wbp]
r_list = 0.25, 0.5, 1, 2, 4
center = 0.3, 0.1

[t1-osc]
n_cubes = 20
t_max = 3.141592653589793

[sigma-sweep]
n_sigma = 32

[rotations-compare]
n_sigma = 64
inner_cut = 0.5
outer_cut = 2.0
n_quad = 16

[symbol-check]
n_samples = 20000
depth = 2

[thresholds]
decay_log_slope = 0.05
qs_min_exponent = 0.05
qs_min_r2 = 0.9
reg_max_ratio_spread = 5
reg_max_refine_change = 0.02
f_lambda_factor = 100
f_lambda_max_rel_se = 0.05
wbp_max_spread = 50
t1_max_over_median = 10
sigma_max_over_median = 2
rotations_max_error = 0.01
rotations_min_refine_gain = 2
symbol_identity_tol = 1e-10
"""

SUBCOMMANDS = ("multiplier-decay", "qs-decay", "kernel-reg", "shift-bound", "f-lambda", "wbp",
               "t1-osc", "sigma-sweep", "rotations-compare", "symbol-check")


def _numbers(text: str) -> list[float]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok.startswith("2**"):
            out.append(2.0 ** float(tok[3:]))
        else:
            out.append(float(tok))
    return out


def _pairs(text: str) -> list[tuple[float, float]]:
    return [tuple(float(v) for v in chunk.split()) for chunk in text.split(";") if chunk.strip()]


@dataclass
class RunConfig:
    L: float
    N: int
    symbol: str
    symbol_seed: int
    symbols: list[str]
    seed: int
    plot: bool
    sections: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    text: str = ""

    def __post_init__(self):
        if self.N <= 0 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two, got {self.N}")
        if not self.symbols:
            raise ValueError("symbols list is empty")

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    def get(self, section: str, key: str) -> str:
        return self.sections[section][key]

    def numbers(self, section: str, key: str) -> list[float]:
        vals = _numbers(self.get(section, key))
        if not vals:
            raise ValueError(f"[{section}] {key} is empty")
        return vals

    def pairs(self, section: str, key: str) -> list[tuple[float, float]]:
        vals = _pairs(self.get(section, key))
        if not vals or any(len(v) != 2 for v in vals):
            raise ValueError(f"[{section}] {key} must be a ';'-separated list of pairs")
        return vals

    def integer(self, section: str, key: str) -> int:
        return int(self.get(section, key))

    def real(self, section: str, key: str) -> float:
        return _numbers(self.get(section, key))[0]


def parse_config(text: str) -> RunConfig:
    """Overlay ``text`` on the defaults and build a RunConfig."""
    cp = configparser.ConfigParser()
    cp.read_string(DEFAULT_CONFIG)
    cp.read_string(text)
    sections = {s: dict(cp[s]) for s in cp.sections()}
    merged = "\n".join(f"[{s}]\n" + "\n".join(f"{k} = {v}" for k, v in sorted(d.items()))
                       for s, d in sorted(sections.items()))
    return RunConfig(
        L=cp.getfloat("grid", "L"),
        N=cp.getint("grid", "N"),
        symbol=cp.get("symbol", "name"),
        symbol_seed=cp.getint("symbol", "seed"),
        symbols=[s.strip() for s in cp.get("symbol", "symbols").split(",") if s.strip()],
        seed=cp.getint("run", "seed"),
        plot=cp.getboolean("run", "plot"),
        sections=sections,
        thresholds={k: float(v) for k, v in cp["thresholds"].items()},
        text=merged,
    )


def load_config(path=None) -> RunConfig:
    if path is None:
        return parse_config("")
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
