"""Run configuration: a flat INI-style key-value format.

Example:

    [model]
    preset = beta-decay
    masses = 1 0.8 0.2 0.5
    c_v = 1.0
    c_a = -1.255

    [grid]
    n = 56
    h = 0.25

    [integrator]
    dt = 0.001
    t_end = 1.0
    stride = 10
    include_cons = true

    [initial]
    variant = benchmark

    [output]
    directory = out

    [run]
    threads = 2
    engine = auto

Without a preset the model section takes explicit matrices: either the four
couplings `vab`, `vcd`, `vad`, `vcb` (each 4 or 8 whitespace-separated reals,
row-major, the 8-number form interleaving re im), or a direct 16/32-number
`vop`.  An optional [gauge] section attaches per-species frame rotations
(keys a..d, same number format) used by the classifier and the conserved
functionals.
"""

import configparser
import io
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .grid import EnergyGrid
from .initial import StateSpec
from .integrator import StepConfig
from .model import DEFAULT_MASSES, GaugeRotation, InteractionSet, Model
from .presets import make_preset


def _parse_matrix(text, name, size=2):
    vals = [float(v) for v in text.replace(",", " ").split()]
    n2 = size * size
    if len(vals) == n2:
        m = np.array(vals, dtype=complex).reshape(size, size)
    elif len(vals) == 2 * n2:
        arr = np.array(vals).reshape(size, size, 2)
        m = arr[..., 0] + 1j * arr[..., 1]
    else:
        raise ValidationError(
            f"{name} needs {n2} reals or {2 * n2} re/im pairs, got {len(vals)} values"
        )
    return m


def _format_matrix(m):
    m = np.asarray(m, dtype=complex)
    if np.max(np.abs(m.imag)) == 0.0:
        return " ".join(format(v, ".17g") for v in m.real.ravel())
    out = []
    for v in m.ravel():
        out.append(format(v.real, ".17g"))
        out.append(format(v.imag, ".17g"))
    return " ".join(out)


@dataclass
class RunConfig:
    preset: str | None = None
    masses: tuple = DEFAULT_MASSES
    c_v: float = 1.0
    c_a: float = -1.255
    interactions: dict | None = None     # name -> 2x2 array
    vop: np.ndarray | None = None
    gauge: dict | None = None            # species tag -> 2x2 array
    force_class: str | None = None       # override the detected structure class
    grid_n: int = 56
    grid_h: float = 0.25
    dt: float = 1e-3
    t_end: float = 1.0
    stride: int = 10
    include_cons: bool = True
    initial_variant: str = "benchmark"
    initial_level: float | None = None
    initial_path: str | None = None
    initial_beta: float = 1.0
    initial_nu: tuple = (0.0, 0.0, 0.0)
    initial_shifts: tuple = ()
    output_dir: str = "out"
    threads: int | None = None
    engine: str = "auto"
    fit_refine: int = 4

    def build_model(self):
        if self.preset:
            model = make_preset(self.preset, masses=self.masses, c_v=self.c_v, c_a=self.c_a)
        elif self.interactions is not None:
            inter = InteractionSet(
                vab=self.interactions["vab"],
                vcd=self.interactions["vcd"],
                vad=self.interactions["vad"],
                vcb=self.interactions["vcb"],
            )
            inter.warn_if_complex()
            model = Model.from_interactions(inter, masses=self.masses)
        elif self.vop is not None:
            model = Model.from_vop(self.vop, masses=self.masses)
        else:
            raise ValidationError("model section needs a preset, the four couplings, or a vop")
        if self.gauge is not None:
            mats = np.broadcast_to(np.eye(2, dtype=complex), (4, 2, 2)).copy()
            for tag, mat in self.gauge.items():
                mats["abcd".index(tag)] = mat
            model = model.with_gauge(GaugeRotation(mats))
        return model

    def build_grid(self):
        return EnergyGrid(n=self.grid_n, h=self.grid_h)

    def build_state_spec(self):
        return StateSpec(
            variant=self.initial_variant,
            level=self.initial_level,
            path=self.initial_path,
        )

    def build_step_config(self):
        engine = None if self.engine == "auto" else self.engine
        return StepConfig(
            dt=self.dt,
            t_end=self.t_end,
            stride=self.stride,
            include_cons=self.include_cons,
            engine=engine,
        )


def parse_config(path_or_text, is_text=False):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        if is_text:
            cp.read_string(path_or_text)
        else:
            with open(path_or_text, "r", encoding="utf-8") as fh:
                cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ValidationError(f"cannot parse config: {exc}") from exc

    cfg = RunConfig()
    if cp.has_section("model"):
        sec = cp["model"]
        cfg.preset = sec.get("preset", fallback=None)
        if "masses" in sec:
            masses = tuple(float(v) for v in sec["masses"].split())
            if len(masses) != 4:
                raise ValidationError("masses needs exactly four values")
            cfg.masses = masses
        cfg.c_v = sec.getfloat("c_v", fallback=cfg.c_v)
        cfg.c_a = sec.getfloat("c_a", fallback=cfg.c_a)
        coupling_keys = ("vab", "vcd", "vad", "vcb")
        if any(k in sec for k in coupling_keys):
            if not all(k in sec for k in coupling_keys):
                raise ValidationError("explicit couplings need all of vab, vcd, vad, vcb")
            cfg.interactions = {k: _parse_matrix(sec[k], k) for k in coupling_keys}
        if "vop" in sec:
            cfg.vop = _parse_matrix(sec["vop"], "vop", size=4)
        cfg.force_class = sec.get("force_class", fallback=None)
    if cp.has_section("gauge"):
        cfg.gauge = {}
        for tag in "abcd":
            if tag in cp["gauge"]:
                cfg.gauge[tag] = _parse_matrix(cp["gauge"][tag], f"gauge {tag}")
        if not cfg.gauge:
            cfg.gauge = None
    if cp.has_section("grid"):
        cfg.grid_n = cp["grid"].getint("n", fallback=cfg.grid_n)
        cfg.grid_h = cp["grid"].getfloat("h", fallback=cfg.grid_h)
    if cp.has_section("integrator"):
        sec = cp["integrator"]
        cfg.dt = sec.getfloat("dt", fallback=cfg.dt)
        cfg.t_end = sec.getfloat("t_end", fallback=cfg.t_end)
        cfg.stride = sec.getint("stride", fallback=cfg.stride)
        cfg.include_cons = sec.getboolean("include_cons", fallback=cfg.include_cons)
    if cp.has_section("initial"):
        sec = cp["initial"]
        cfg.initial_variant = sec.get("variant", fallback=cfg.initial_variant)
        if "level" in sec:
            cfg.initial_level = sec.getfloat("level")
        if "path" in sec:
            cfg.initial_path = sec.get("path")
        cfg.initial_beta = sec.getfloat("beta", fallback=cfg.initial_beta)
        if "nu" in sec:
            nu = tuple(float(v) for v in sec["nu"].split())
            if len(nu) != 3:
                raise ValidationError("initial nu needs the three free potentials (a b c)")
            cfg.initial_nu = nu
        if "shifts" in sec:
            cfg.initial_shifts = tuple(float(v) for v in sec["shifts"].split())
    if cp.has_section("output"):
        cfg.output_dir = cp["output"].get("directory", fallback=cfg.output_dir)
    if cp.has_section("run"):
        sec = cp["run"]
        if "threads" in sec:
            cfg.threads = sec.getint("threads")
        cfg.engine = sec.get("engine", fallback=cfg.engine)
        cfg.fit_refine = sec.getint("fit_refine", fallback=cfg.fit_refine)
    return cfg


def serialize_config(cfg):
    cp = configparser.ConfigParser()
    cp["model"] = {}
    if cfg.preset:
        cp["model"]["preset"] = cfg.preset
    cp["model"]["masses"] = " ".join(format(m, ".17g") for m in cfg.masses)
    cp["model"]["c_v"] = format(cfg.c_v, ".17g")
    cp["model"]["c_a"] = format(cfg.c_a, ".17g")
    if cfg.interactions is not None:
        for k, m in cfg.interactions.items():
            cp["model"][k] = _format_matrix(m)
    if cfg.vop is not None:
        cp["model"]["vop"] = _format_matrix(cfg.vop)
    if cfg.force_class is not None:
        cp["model"]["force_class"] = cfg.force_class
    if cfg.gauge is not None:
        cp["gauge"] = {tag: _format_matrix(m) for tag, m in cfg.gauge.items()}
    cp["grid"] = {"n": str(cfg.grid_n), "h": format(cfg.grid_h, ".17g")}
    cp["integrator"] = {
        "dt": format(cfg.dt, ".17g"),
        "t_end": format(cfg.t_end, ".17g"),
        "stride": str(cfg.stride),
        "include_cons": str(cfg.include_cons).lower(),
    }
    cp["initial"] = {"variant": cfg.initial_variant}
    if cfg.initial_level is not None:
        cp["initial"]["level"] = format(cfg.initial_level, ".17g")
    if cfg.initial_path is not None:
        cp["initial"]["path"] = cfg.initial_path
    if cfg.initial_variant == "fermi-dirac":
        cp["initial"]["beta"] = format(cfg.initial_beta, ".17g")
        cp["initial"]["nu"] = " ".join(format(v, ".17g") for v in cfg.initial_nu)
        if cfg.initial_shifts:
            cp["initial"]["shifts"] = " ".join(format(v, ".17g") for v in cfg.initial_shifts)
    cp["output"] = {"directory": cfg.output_dir}
    cp["run"] = {"engine": cfg.engine, "fit_refine": str(cfg.fit_refine)}
    if cfg.threads is not None:
        cp["run"]["threads"] = str(cfg.threads)
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
