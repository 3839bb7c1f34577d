"""Config-driven runs: validation, experiment registry, persistence and plot data.

A run config is an INI file::

    [device]        every DeviceParams field, no defaults
    [experiment]    id = t1, plus experiment options
    [axis.delay]    start / stop / count, or values = comma list
    [dynamics]      N_q, N_r, dt, seed, noise_amplitude, ...
    [pulse]         optional envelope overrides
    [readout]       optional duration / mode
    [output]        directory, formats

Output directories are resolved against $MMTRANSMON_OUTPUT when it is set.
Everything written to disk is a pure function of the config text, so two runs
of the same config give identical bytes; wall time is only reported.
"""
from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import experiments as ex
from ._version import __version__
from .device import DeviceParams, DomainError
from .fitting import FitError, fit_damped_cosine, fit_exponential, power_broadening_fit
from .pulses import PulseEnvelope

OUTPUT_ENV = "MMTRANSMON_OUTPUT"
RECORD_NAME = "record.json"
FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Schema violation; the message starts with the offending field path."""


# --- config ------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    experiment: str
    device: DeviceParams
    axes: dict
    options: dict
    settings: ex.SimulationSettings
    pulse: dict
    readout: dict
    output_dir: str
    formats: tuple
    fit: bool
    config_hash: str
    canonical: dict


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    return cp


def canonical_sections(cp: configparser.ConfigParser) -> dict:
    return {s: {k: " ".join(v.split()) for k, v in sorted(cp[s].items())}
            for s in sorted(cp.sections())}


def config_hash(canonical: dict) -> str:
    text = "".join(f"[{s}]\n" + "".join(f"{k}={v}\n" for k, v in kv.items())
                   for s, kv in canonical.items())
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _number(section, key, raw, kind=float):
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "yes", "true", "on"):
                return True
            if low in ("0", "no", "false", "off"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} as {kind.__name__}") from None


def _axis(name, sec) -> np.ndarray:
    path = f"axis.{name}"
    keys = set(sec)
    if "values" in keys:
        if keys - {"values"}:
            raise ConfigError(f"{path}: give either values or start/stop/count")
        vals = [_number(path, "values", v) for v in sec["values"].split(",") if v.strip()]
        if not vals:
            raise ConfigError(f"{path}.values: empty axis")
        return np.array(vals)
    for k in ("start", "stop", "count"):
        if k not in keys:
            raise ConfigError(f"{path}.{k}: missing")
    if keys - {"start", "stop", "count"}:
        raise ConfigError(f"{path}.{sorted(keys - {'start', 'stop', 'count'})[0]}: unknown key")
    start = _number(path, "start", sec["start"])
    stop = _number(path, "stop", sec["stop"])
    count = _number(path, "count", sec["count"], int)
    if not start < stop:
        raise ConfigError(f"{path}: stop ({stop}) must exceed start ({start})")
    if count < 1:
        raise ConfigError(f"{path}.count: must be >= 1")
    return np.linspace(start, stop, count) if count > 1 else np.array([start])


_DYNAMICS_KEYS = {"N_q": int, "N_r": int, "dt": float, "qubit_offset": float,
                  "decoherence": bool, "thermal": bool, "noise_amplitude": float,
                  "noise_relative": bool, "seed": int}
_PULSE_KEYS = ("tau", "sigma", "omega0", "detuning", "phase")
_READOUT_KEYS = {"duration": float, "mode": str}
_DEVICE_KEYS = [f.name for f in dataclasses.fields(DeviceParams)]
_KNOWN = {"device", "experiment", "dynamics", "pulse", "readout", "output"}


def load_config(path) -> RunConfig:
    path = Path(path)
    cp = _parser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from None
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None
    return parse_config(cp)


def parse_config(cp: configparser.ConfigParser) -> RunConfig:
    for s in cp.sections():
        if s not in _KNOWN and not s.startswith("axis."):
            raise ConfigError(f"{s}: unknown section")
    canonical = canonical_sections(cp)

    if "experiment" not in cp or "id" not in cp["experiment"]:
        raise ConfigError("experiment.id: missing")
    exp_id = cp["experiment"]["id"].strip()
    if exp_id not in REGISTRY:
        raise ConfigError(f"experiment.id: unknown experiment {exp_id!r} "
                          f"(known: {', '.join(REGISTRY)})")
    spec = REGISTRY[exp_id]

    if "device" not in cp:
        raise ConfigError("device: section missing")
    dsec = cp["device"]
    for k in dsec:
        if k not in _DEVICE_KEYS:
            raise ConfigError(f"device.{k}: unknown parameter")
    for k in _DEVICE_KEYS:
        if k not in dsec:
            raise ConfigError(f"device.{k}: required parameter missing")
    try:
        device = DeviceParams(**{k: _number("device", k, dsec[k]) for k in _DEVICE_KEYS})
    except DomainError as e:
        raise ConfigError(f"device: {e}") from None

    axes = {s[5:]: _axis(s[5:], cp[s]) for s in cp.sections() if s.startswith("axis.")}
    names = set(axes)
    layout = next((a for a in spec.axes if set(a) == names), None)
    if layout is None:
        want = " or ".join("(" + ", ".join(a) + ")" for a in spec.axes)
        extra = sorted(names - set().union(*map(set, spec.axes)))
        where = f"axis.{extra[0]}" if extra else "axis"
        raise ConfigError(f"{where}: {exp_id} needs axes {want}, got ({', '.join(sorted(names))})")
    axes = {k: axes[k] for k in layout}

    opts = {}
    for k, raw in cp["experiment"].items():
        if k in ("id", "fit"):
            continue
        if k not in spec.options:
            raise ConfigError(f"experiment.{k}: unknown option for {exp_id}")
        opts[k] = _number("experiment", k, raw, spec.options[k])
    fit = _number("experiment", "fit", cp["experiment"].get("fit", "yes"), bool)

    dyn = {}
    if "dynamics" in cp:
        for k, raw in cp["dynamics"].items():
            if k not in _DYNAMICS_KEYS:
                raise ConfigError(f"dynamics.{k}: unknown key")
            dyn[k] = _number("dynamics", k, raw, _DYNAMICS_KEYS[k])
    if dyn.get("dt", 1.0) <= 0:
        raise ConfigError("dynamics.dt: must be positive")
    if dyn.get("N_q", 2) < 2 or dyn.get("N_r", 1) < 1:
        raise ConfigError("dynamics.N_q: need N_q >= 2 and N_r >= 1")
    if dyn.get("noise_amplitude", 0.0) < 0:
        raise ConfigError("dynamics.noise_amplitude: must be non-negative")
    settings = ex.SimulationSettings(**dyn)

    pulse = {}
    if "pulse" in cp:
        for k, raw in cp["pulse"].items():
            if k not in _PULSE_KEYS:
                raise ConfigError(f"pulse.{k}: unknown key")
            pulse[k] = _number("pulse", k, raw)
        if pulse.get("sigma", 1.0) <= 0 or pulse.get("tau", 0.0) < 0:
            raise ConfigError("pulse.sigma: need sigma > 0 and tau >= 0")
    readout = {}
    if "readout" in cp:
        for k, raw in cp["readout"].items():
            if k not in _READOUT_KEYS:
                raise ConfigError(f"readout.{k}: unknown key")
            readout[k] = _number("readout", k, raw, _READOUT_KEYS[k])
        if readout.get("duration", 1.0) <= 0:
            raise ConfigError("readout.duration: must be positive")

    out = cp["output"] if "output" in cp else {}
    for k in out:
        if k not in ("directory", "formats"):
            raise ConfigError(f"output.{k}: unknown key")
    formats = tuple(f.strip() for f in out.get("formats", "csv").split(",") if f.strip())
    for f in formats:
        if f not in FORMATS:
            raise ConfigError(f"output.formats: unknown format {f!r}")

    return RunConfig(exp_id, device, axes, opts, settings, pulse, readout,
                     out.get("directory", exp_id).strip(), formats, fit,
                     config_hash(canonical), canonical)


# --- registry ----------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentSpec:
    id: str
    axes: tuple          # allowed axis layouts, each in result order
    figure: str
    runner: Callable
    options: dict = field(default_factory=dict)
    fit: Callable | None = None


def _readout(cfg: RunConfig):
    return ex.ReadoutModel(chi=cfg.device.chi, **cfg.readout)


def _run_punchout(cfg):
    model = ex.PunchoutModel(**cfg.options)
    return ex.run_punchout(cfg.device, cfg.axes["frequency"], cfg.axes["power"], model,
                           cfg.settings)


def _run_two_tone(cfg):
    opts = dict(cfg.options)
    mode = opts.pop("mode", "analytic")
    return ex.run_two_tone(cfg.device, cfg.axes["frequency"], cfg.axes["power"], mode,
                           ex.TwoToneModel(**opts), cfg.settings)


def _run_rabi(cfg):
    pulse = ex.RABI_TEMPLATE.replace(**cfg.pulse)
    return ex.run_rabi_time(cfg.device, pulse, cfg.axes["tau"], cfg.axes["frequency"],
                            cfg.settings, _readout(cfg), **cfg.options)


CHEVRON_TEMPLATE = PulseEnvelope(tau=4.0, sigma=2.0)


def _run_chevron(cfg):
    pulse = CHEVRON_TEMPLATE.replace(**cfg.pulse)
    return ex.run_chevron(cfg.device, pulse, cfg.axes["amplitude"], cfg.axes.get("tau"),
                          cfg.axes.get("frequency"), cfg.settings, _readout(cfg),
                          **cfg.options)


def _template_pulse(cfg, area):
    if not cfg.pulse:
        return None
    return ex.pi_pulse(cfg.device, PulseEnvelope(**cfg.pulse), area)


def _run_t1(cfg):
    return ex.run_t1(cfg.device, cfg.axes["delay"], cfg.settings, _template_pulse(cfg, math.pi),
                     _readout(cfg), **cfg.options)


def _run_ramsey(cfg):
    return ex.run_ramsey(cfg.device, cfg.axes["delay"], settings=cfg.settings,
                         pulse=_template_pulse(cfg, math.pi / 2), readout=_readout(cfg),
                         **cfg.options)


def _run_purcell(cfg):
    return ex.run_purcell_sweep(cfg.device, cfg.axes["area_ratio"], cfg.settings)


def _fit_t1(cfg, res):
    fit = fit_exponential(res.axes["delay"], res.values)
    return {"model": "a exp(-t/T1) + c", **_rename(fit.summary(), {"T": "T1"})}


def _fit_ramsey(cfg, res):
    guess = cfg.options.get("phase_advance", 0.320) - cfg.options.get("detuning", 0.0)
    fit = fit_damped_cosine(res.axes["delay"], res.values, freq_guess=abs(guess) or None)
    return {"model": "a exp(-t/T2*) cos(2 pi f t + phi) + c", **fit.summary()}


def _fit_two_tone(cfg, res):
    widths = ex.two_tone_linewidths(res, cfg.device)
    fit = power_broadening_fit(res.series["n_s"], widths, cfg.device.g)
    return {"model": "(2 pi sigma)^2 = 1/T2^2 + n_s (2 pi g)^2 T1/T2",
            "sigma01": widths.tolist(), **fit.summary()}


def _rename(d, names):
    out = {}
    for k, v in d.items():
        base = k[:-4] if k.endswith("_err") else k
        out[names.get(base, base) + k[len(base):]] = v
    return out


REGISTRY: dict[str, ExperimentSpec] = {s.id: s for s in [
    ExperimentSpec("punchout", (("power", "frequency"),), "Fig 2a", _run_punchout,
                   {"photons_at_0dB": float, "steepness": float, "depth": float}),
    ExperimentSpec("two-tone", (("power", "frequency"),), "Fig 2b-c, Fig S7", _run_two_tone,
                   {"mode": str, "T1": float, "T2": float, "photons_at_0dB": float,
                    "temperature": float}, _fit_two_tone),
    ExperimentSpec("rabi-time", (("frequency", "tau"),), "Fig 3b", _run_rabi,
                   {"subtract_baseline": bool}),
    ExperimentSpec("chevron", (("tau", "amplitude"), ("frequency", "amplitude")),
                   "Fig 3c, Fig S8", _run_chevron, {"record": str}),
    ExperimentSpec("t1", (("delay",),), "Fig 4a", _run_t1, {"normalize": bool}, _fit_t1),
    ExperimentSpec("ramsey", (("delay",),), "Fig 4b", _run_ramsey,
                   {"phase_advance": float, "detuning": float, "normalize": bool}, _fit_ramsey),
    ExperimentSpec("purcell-sweep", (("area_ratio",),), "Fig S9", _run_purcell),
]}


def list_experiments() -> list[str]:
    lines = []
    for s in REGISTRY.values():
        layouts = " | ".join(", ".join(a) for a in s.axes)
        lines.append(f"{s.id} → {s.figure}  (axes: {layouts})")
    return lines


# --- run and persist -----------------------------------------------------------

@dataclass
class RunRecord:
    config_hash: str
    code_version: str
    wall_time: float
    result: ex.SweepResult
    fits: dict
    experiment: str
    output_dir: Path | None = None
    files: list = field(default_factory=list)

    def payload(self) -> dict:
        r = self.result
        return {"experiment": self.experiment,
                "figure": REGISTRY[self.experiment].figure,
                "config_hash": self.config_hash,
                "code_version": self.code_version,
                "axes": {k: v for k, v in r.axes.items()},
                "units": r.units,
                "values": r.values,
                "series": r.series,
                "metadata": r.metadata,
                "fits": self.fits}


def _plain(o):
    if isinstance(o, dict):
        return {str(k): _plain(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_plain(v) for v in o]
    if isinstance(o, np.ndarray):
        return _plain(o.tolist())
    if isinstance(o, np.generic):
        return o.item()
    if dataclasses.is_dataclass(o):
        return _plain(dataclasses.asdict(o))
    if isinstance(o, complex):
        return [o.real, o.imag]
    return o


def _dumps(obj) -> str:
    # insertion order is kept so axes stay in sweep order
    return json.dumps(_plain(obj), indent=1) + "\n"


def resolve_output(directory: str, root=None) -> Path:
    root = root if root is not None else os.environ.get(OUTPUT_ENV)
    p = Path(directory)
    return p if p.is_absolute() or not root else Path(root) / p


def execute(cfg: RunConfig) -> RunRecord:
    spec = REGISTRY[cfg.experiment]
    t0 = time.perf_counter()
    result = spec.runner(cfg)
    fits = {}
    if cfg.fit and spec.fit is not None:
        try:
            fits = spec.fit(cfg, result)
        except FitError as e:
            fits = {"error": f"{type(e).__name__}: {e}"}
    return RunRecord(cfg.config_hash, __version__, time.perf_counter() - t0, result, fits,
                     cfg.experiment)


def run(config_path, output_root=None) -> RunRecord:
    """Load, execute, persist ``record.json`` and emit the configured formats."""
    cfg = load_config(config_path)
    rec = execute(cfg)
    out = resolve_output(cfg.output_dir, output_root)
    out.mkdir(parents=True, exist_ok=True)
    path = out / RECORD_NAME
    path.write_text(_dumps(rec.payload()), encoding="utf-8")
    rec.output_dir = out
    rec.files = [path]
    for fmt in cfg.formats:
        rec.files += [p for p in emit_plotdata(path, fmt) if p not in rec.files]
    return rec


def load_record(path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / RECORD_NAME
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _num(x) -> str:
    return repr(float(x))


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


_FIT_BOOKKEEPING = {"iterations", "residual_norm", "converged"}


def emit_plotdata(record, fmt: str = "csv", out_dir=None) -> list[Path]:
    """Write plot-ready files for a persisted record; returns the paths.

    csv: a 1-D sweep gives ``<id>.csv`` with (axis, value) columns; a 2-D
    sweep gives ``<id>_grid.csv`` (header row holds the last axis) and the
    long-form ``<id>_long.csv``. Fits go to ``<id>_fit.csv``. Both formats
    write the ``<id>.meta.json`` sidecar.
    """
    if fmt not in FORMATS:
        raise ConfigError(f"format: unknown format {fmt!r} (choose from {', '.join(FORMATS)})")
    src = Path(record)
    rec = load_record(src)
    out = Path(out_dir) if out_dir is not None else (src if src.is_dir() else src.parent)
    out.mkdir(parents=True, exist_ok=True)
    name = rec["experiment"]
    axes = list(rec["axes"].items())
    units = rec["units"]
    label = [k if units.get(k, "1") == "1" else f"{k}_{units[k]}" for k, _ in axes]
    files: list[tuple[str, str]] = []

    if fmt == "json":
        files.append((f"{name}.json", _dumps({k: rec[k] for k in
                                               ("axes", "units", "values", "series")})))
    elif len(axes) == 1:
        (_, x), = axes
        rows = [[label[0], "value"]] + [[_num(a), _num(v)] for a, v in zip(x, rec["values"])]
        files.append((f"{name}.csv", _csv_text(rows)))
    else:
        (_, y), (_, x) = axes
        rows = [[f"{label[0]}\\{label[1]}"] + [_num(a) for a in x]]
        rows += [[_num(b)] + [_num(v) for v in row] for b, row in zip(y, rec["values"])]
        files.append((f"{name}_grid.csv", _csv_text(rows)))
        rows = [label + ["value"]]
        rows += [[_num(b), _num(a), _num(v)]
                 for b, row in zip(y, rec["values"]) for a, v in zip(x, row)]
        files.append((f"{name}_long.csv", _csv_text(rows)))
    if fmt == "csv":
        first_len = len(axes[0][1])
        series = {k: v for k, v in rec["series"].items()
                  if isinstance(v, list) and len(v) == first_len}
        if series:
            rows = [[label[0]] + list(series)]
            rows += [[_num(a)] + [_num(series[k][i]) for k in series]
                     for i, a in enumerate(axes[0][1])]
            files.append((f"{name}_series.csv", _csv_text(rows)))
        scalars = {k: v for k, v in rec["fits"].items()
                   if isinstance(v, (int, float)) and not isinstance(v, bool)
                   and not k.endswith("_err") and k not in _FIT_BOOKKEEPING}
        if scalars:
            rows = [["parameter", "value", "error"]]
            rows += [[k, _num(v), _num(rec["fits"].get(f"{k}_err", float("nan")))]
                     for k, v in scalars.items()]
            files.append((f"{name}_fit.csv", _csv_text(rows)))
    meta = {"experiment": name, "figure": rec["figure"], "config_hash": rec["config_hash"],
            "code_version": rec["code_version"], "units": units,
            "axes": {k: {"unit": units.get(k, ""), "count": len(v), "min": min(v), "max": max(v)}
                     for k, v in axes},
            "dt": rec["metadata"].get("dt"), "seed": rec["metadata"].get("seed"),
            "metadata": rec["metadata"], "fits": rec["fits"]}
    files.append((f"{name}.meta.json", _dumps(meta)))

    paths = []
    for fname, text in files:
        p = out / fname
        p.write_text(text, encoding="utf-8")
        paths.append(p)
    return paths
