"""Batch experiments: config parsing, sweeps, sampled readout, replay.

Config grammar (JSON; every key optional, unknown keys are rejected)::

    {
      "scheme": "single" | "dual",
      "convention": "ideal" | "su2",
      "n": 1,                              # (2n-1)pi and 2n*pi pulses
      "arm_phases": [0, 0, 0, 0],
      "couple_target": true,
      "input": "basis4" | "bell"
               | {"preset": "random", "seed": 0, "count": 10}
               | {"control": [a, b], "target": [g, d]},   # amplitude: x or [re, im]
      "noise": {"p_dephase": 0, "epsilon": 0 | {"kind": "fixed"|"uniform", "value": e},
                "eta": 0, "kappa": 0, "return_loss": true},
      "cavity": null | {"r": 0.99, "phi": 0, "state_shift": 3.14159...},
      "sweep": [{"param": "p_dephase", "from": 0, "to": 1, "steps": 11}],   # <= 2 axes
      "shots": 0,
      "seed": 0,
      "readout": "routed" | "interacted",
      "output": {"format": "csv" | "json" | "both", "path": null}
    }

Sweepable parameters: p_dephase, epsilon, epsilon_max, eta, kappa, r, phi,
state_shift.  When a cavity is given, eta is derived from it.
"""
from __future__ import annotations

import copy
import csv
import io
import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np

from .cavity import CavityParams, routing_error
from .gate import LABELS, GateInput, Scheme, label_weights, run_gate
from .noise import EpsilonDist, NoiseModel

SCHEMA_VERSION = 1
PRESETS = ("basis4", "bell", "random")
SWEEP_PARAMS = ("p_dephase", "epsilon", "epsilon_max", "eta", "kappa", "r", "phi", "state_shift")
READOUT_STAGES = ("routed", "interacted")
FORMATS = ("csv", "json", "both")

RUN_COLUMNS = ["point", "input", "avg_gate_fidelity", "postselected_fidelity", "output_fidelity",
               "concurrence", "success_prob", "pulse_purity", "eta", "eps_pi", "eps_2pi"]
TRUTH_COLUMNS = ["point", "control_in", "target_in", "control_out", "target_out", "probability"]
# detector columns name the arm holding the pi pulse
SAMPLE_COLUMNS = ["point", "input", "shots", "count_arm1", "count_arm2", "count_arm3", "count_lost",
                  "p_arm1", "p_arm2", "p_arm3", "p_lost"]


class ConfigError(ValueError):
    pass


class ReplayError(ValueError):
    pass


@dataclass(frozen=True)
class SweepAxis:
    param: str
    start: float
    stop: float
    steps: int

    def values(self) -> list[float]:
        return [float(x) for x in np.linspace(self.start, self.stop, self.steps)]


@dataclass
class ExperimentConfig:
    scheme: Scheme = field(default_factory=Scheme)
    inputs: Any = "basis4"
    noise: NoiseModel = field(default_factory=NoiseModel)
    cavity: Optional[CavityParams] = None
    sweep: list[SweepAxis] = field(default_factory=list)
    shots: int = 0
    seed: int = 0
    readout: str = "routed"
    out_format: str = "both"
    out_path: Optional[str] = None

    def grid(self) -> list[dict[str, float]]:
        """Sweep points in row-major order of the axes."""
        if not self.sweep:
            return [{}]
        names = [a.param for a in self.sweep]
        return [dict(zip(names, vals)) for vals in itertools.product(*(a.values() for a in self.sweep))]

    def gate_inputs(self) -> list[tuple[str, GateInput]]:
        sel = self.inputs
        if sel == "basis4":
            return [(f"{c}{'+-'[t]}", GateInput.basis(c, t)) for c in range(2) for t in range(2)]
        if sel == "bell":
            return [("bell", GateInput.bell())]
        if sel.get("preset") == "random":
            rng = np.random.default_rng(sel["seed"])
            return [(f"random{i}", GateInput.random(rng)) for i in range(sel["count"])]
        return [("custom", GateInput(tuple(sel["control"]), tuple(sel["target"])))]

    def to_dict(self) -> dict:
        inputs = self.inputs
        if isinstance(inputs, dict) and "control" in inputs:
            inputs = {k: [[complex(z).real, complex(z).imag] for z in inputs[k]] for k in ("control", "target")}
        return {
            "scheme": self.scheme.variant.value,
            "convention": self.scheme.conv.value,
            "n": self.scheme.n,
            "arm_phases": list(self.scheme.arm_phases),
            "couple_target": self.scheme.couple_target,
            "input": inputs,
            "noise": self.noise.to_dict(),
            "cavity": None if self.cavity is None else
            {"r": self.cavity.r, "phi": self.cavity.phi, "state_shift": self.cavity.state_shift},
            "sweep": [{"param": a.param, "from": a.start, "to": a.stop, "steps": a.steps} for a in self.sweep],
            "shots": self.shots,
            "seed": self.seed,
            "readout": self.readout,
            "output": {"format": self.out_format, "path": self.out_path},
        }


def _keys(d: dict, allowed, where: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")


def _num(value, name: str, lo=None, hi=None, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ConfigError(f"{name}: must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        raise ConfigError(f"{name}: must be <= {hi}, got {value}")
    return int(value) if integer else float(value)


def _amp(value, name: str) -> complex:
    if isinstance(value, list) and len(value) == 2:
        return complex(_num(value[0], name), _num(value[1], name))
    return complex(_num(value, name))


def _epsilon(value) -> EpsilonDist:
    if isinstance(value, dict):
        _keys(value, ("kind", "value"), "noise.epsilon")
        kind = value.get("kind", "fixed")
        if kind not in ("none", "fixed", "uniform"):
            raise ConfigError(f"noise.epsilon.kind: unknown distribution {kind!r}")
        v = _num(value.get("value", 0.0), "noise.epsilon.value", 0.0, 0.4999999999)
        return EpsilonDist(kind, 0.0 if kind == "none" else v)
    v = _num(value, "noise.epsilon", 0.0, 0.4999999999)
    return EpsilonDist.fixed(v) if v > 0 else EpsilonDist()


def config_from_dict(d: dict) -> ExperimentConfig:
    _keys(d, ("scheme", "convention", "n", "arm_phases", "couple_target", "input", "noise", "cavity",
              "sweep", "shots", "seed", "readout", "output"), "config")
    variant = d.get("scheme", "single")
    if variant not in ("single", "dual"):
        raise ConfigError(f"scheme: expected 'single' or 'dual', got {variant!r}")
    conv = d.get("convention", "ideal")
    if conv not in ("ideal", "su2"):
        raise ConfigError(f"convention: expected 'ideal' or 'su2', got {conv!r}")
    phases = d.get("arm_phases", [0, 0, 0, 0])
    if not isinstance(phases, list) or len(phases) != 4:
        raise ConfigError("arm_phases: expected a list of 4 numbers")
    couple = d.get("couple_target", True)
    if not isinstance(couple, bool):
        raise ConfigError("couple_target: expected true or false")
    scheme = Scheme(variant, conv, tuple(_num(p, "arm_phases") for p in phases),
                    _num(d.get("n", 1), "n", 1, integer=True), couple)

    inputs = d.get("input", "basis4")
    if isinstance(inputs, str):
        if inputs not in ("basis4", "bell"):
            raise ConfigError(f"input: unknown preset {inputs!r}")
    elif isinstance(inputs, dict) and "preset" in inputs:
        _keys(inputs, ("preset", "seed", "count"), "input")
        if inputs["preset"] != "random":
            raise ConfigError(f"input.preset: unknown preset {inputs['preset']!r}")
        inputs = {"preset": "random", "seed": _num(inputs.get("seed", 0), "input.seed", 0, integer=True),
                  "count": _num(inputs.get("count", 10), "input.count", 1, integer=True)}
    elif isinstance(inputs, dict):
        _keys(inputs, ("control", "target"), "input")
        try:
            ctrl = [_amp(x, "input.control") for x in inputs["control"]]
            targ = [_amp(x, "input.target") for x in inputs["target"]]
        except (KeyError, TypeError):
            raise ConfigError("input: needs 'control' and 'target' amplitude pairs") from None
        try:
            GateInput(tuple(ctrl), tuple(targ))
        except ValueError as e:
            raise ConfigError(f"input: {e}") from None
        inputs = {"control": ctrl, "target": targ}
    else:
        raise ConfigError("input: expected a preset name or an object")

    nd = d.get("noise", {})
    _keys(nd, ("p_dephase", "epsilon", "eta", "kappa", "return_loss"), "noise")
    ret = nd.get("return_loss", True)
    if not isinstance(ret, bool):
        raise ConfigError("noise.return_loss: expected true or false")
    noise = NoiseModel(
        p_dephase=_num(nd.get("p_dephase", 0.0), "noise.p_dephase", 0.0, 1.0),
        epsilon=_epsilon(nd.get("epsilon", 0.0)),
        eta=_num(nd.get("eta", 0.0), "noise.eta", 0.0, 0.9999999999),
        kappa=_num(nd.get("kappa", 0.0), "noise.kappa", 0.0, 1.0),
        return_loss=ret,
    )

    cavity = None
    if d.get("cavity") is not None:
        cd = d["cavity"]
        _keys(cd, ("r", "phi", "state_shift"), "cavity")
        if "r" not in cd:
            raise ConfigError("cavity.r: required")
        cavity = CavityParams(_num(cd["r"], "cavity.r", 0.0, 0.9999999999),
                              _num(cd.get("phi", 0.0), "cavity.phi"),
                              _num(cd.get("state_shift", np.pi), "cavity.state_shift"))
        if noise.eta != 0:
            raise ConfigError("noise.eta: cannot be set together with cavity (eta is derived)")

    sweep = d.get("sweep", [])
    if not isinstance(sweep, list):
        raise ConfigError("sweep: expected a list of axes")
    if len(sweep) > 2:
        raise ConfigError(f"sweep: at most 2 axes, got {len(sweep)}")
    axes = []
    for i, ax in enumerate(sweep):
        where = f"sweep[{i}]"
        _keys(ax, ("param", "from", "to", "steps"), where)
        if ax.get("param") not in SWEEP_PARAMS:
            raise ConfigError(f"{where}.param: unknown sweep parameter {ax.get('param')!r}")
        if ax["param"] in ("r", "phi", "state_shift") and cavity is None:
            raise ConfigError(f"{where}.param: sweeping {ax['param']!r} needs a cavity")
        for key in ("from", "to", "steps"):
            if key not in ax:
                raise ConfigError(f"{where}.{key}: required")
        axes.append(SweepAxis(ax["param"], _num(ax["from"], f"{where}.from"), _num(ax["to"], f"{where}.to"),
                              _num(ax["steps"], f"{where}.steps", 1, integer=True)))
    if len({a.param for a in axes}) != len(axes):
        raise ConfigError("sweep: duplicate axis parameter")

    readout = d.get("readout", "routed")
    if readout not in READOUT_STAGES:
        raise ConfigError(f"readout: expected one of {', '.join(READOUT_STAGES)}, got {readout!r}")
    od = d.get("output", {})
    _keys(od, ("format", "path"), "output")
    fmt = od.get("format", "both")
    if fmt not in FORMATS:
        raise ConfigError(f"output.format: expected one of {', '.join(FORMATS)}, got {fmt!r}")
    path = od.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigError("output.path: expected a string")

    cfg = ExperimentConfig(
        scheme=scheme, inputs=inputs, noise=noise, cavity=cavity, sweep=axes,
        shots=_num(d.get("shots", 0), "shots", 0, integer=True),
        seed=_num(d.get("seed", 0), "seed", 0, integer=True),
        readout=readout, out_format=fmt, out_path=path,
    )
    for point in cfg.grid():
        try:
            point_model(cfg, point)
        except ValueError as e:
            raise ConfigError(f"sweep: {e}") from None
    return cfg


def parse_config(text: str) -> ExperimentConfig:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"syntax error at line {e.lineno}, column {e.colno}: {e.msg}") from None
    return config_from_dict(d)


def point_model(cfg: ExperimentConfig, point: dict[str, float]) -> tuple[Scheme, NoiseModel]:
    """Scheme and noise model at one sweep point."""
    noise, cavity = cfg.noise, cfg.cavity
    for name, value in point.items():
        if name in ("r", "phi", "state_shift"):
            cavity = replace(cavity, **{name: value})
        elif name == "epsilon":
            noise = replace(noise, epsilon=EpsilonDist.fixed(value) if value > 0 else EpsilonDist())
        elif name == "epsilon_max":
            noise = replace(noise, epsilon=EpsilonDist.uniform(value) if value > 0 else EpsilonDist())
        else:
            noise = replace(noise, **{name: value})
    if cavity is not None:
        noise = replace(noise, eta=routing_error(cavity))
    return cfg.scheme, noise


def _born_counts(report, stage: str, shots: int, rng: np.random.Generator) -> tuple[list[int], list[float]]:
    state = dict(report.snapshots)[stage]
    p = np.clip(label_weights(state), 0, None)
    p = p / p.sum()
    return [int(c) for c in rng.multinomial(shots, p)], [float(x) for x in p]


@dataclass
class ExperimentResult:
    command: str
    config: ExperimentConfig
    points: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        doc = {"schema": SCHEMA_VERSION, "command": self.command,
               "config": self.config.to_dict(), "points": self.points}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        axes = [a.param for a in self.config.sweep]
        buf.write(f"# ifmcnot {self.command} schema={SCHEMA_VERSION}\n")
        w = csv.writer(buf, lineterminator="\n")
        if self.command == "truth-table":
            cols = TRUTH_COLUMNS
        elif self.command == "sample":
            cols = SAMPLE_COLUMNS
        else:
            cols = RUN_COLUMNS
        w.writerow(cols[:1] + axes + cols[1:])
        for pt in self.points:
            params = [repr(pt["params"][a]) for a in axes]
            if self.command == "truth-table":
                for row in pt["truth_table"]:
                    w.writerow([pt["index"]] + params + row[:4] + [repr(row[4])])
                continue
            for res in pt["results"]:
                if self.command == "sample":
                    vals = [res["input"], res["shots"]] + res["counts"] + [repr(x) for x in res["probabilities"]]
                else:
                    s = res["summary"]
                    log = res["noise_log"]
                    vals = [res["input"]] + [repr(s[k]) for k in RUN_COLUMNS[2:8]] + [
                        repr(pt["eta"]), repr(log.get("eps_pi", 0.0)), repr(log.get("eps_2pi", 0.0))]
                w.writerow([pt["index"]] + params + vals)
        return buf.getvalue()


def _point_rng(seed: int, index: int, item: int) -> np.random.Generator:
    return np.random.default_rng([seed, index, item])


def run_experiment(cfg: ExperimentConfig, command: str = "run") -> ExperimentResult:
    """Execute every grid point and input.  Output is deterministic given the config."""
    if command not in ("run", "sweep", "truth-table", "sample"):
        raise ValueError(f"unknown command {command!r}")
    if command == "sample" and cfg.shots <= 0:
        raise ConfigError("shots: sampling needs shots > 0")
    result = ExperimentResult(command, cfg)
    inputs = cfg.gate_inputs()
    for index, point in enumerate(cfg.grid()):
        scheme, noise = point_model(cfg, point)
        entry = {"index": index, "params": point, "eta": noise.eta}
        if command == "truth-table":
            from .metrics import truth_table
            rows = truth_table(scheme, noise, seed=_point_rng(cfg.seed, index, 0))
            entry["truth_table"] = [list(r.as_tuple()) + [r.probability] for r in rows]
            result.points.append(entry)
            continue
        results = []
        for item, (name, inp) in enumerate(inputs):
            rng = _point_rng(cfg.seed, index, item)
            rep = run_gate(scheme, inp, noise, rng)
            log = {k: v for k, v in rep.noise_log.items() if k != "seed"}
            res = {"input": name, "gate_input": inp.to_dict(), "noise_log": log}
            if command == "sample":
                counts, probs = _born_counts(rep, cfg.readout, cfg.shots, rng)
                res.update(shots=cfg.shots, counts=counts, probabilities=probs,
                           labels=list(LABELS[scheme.variant]))
            else:
                res["summary"] = rep.summary()
                res["truth_table"] = [list(r.as_tuple()) + [r.probability] for r in rep.truth_table]
                res["state_fidelities"] = rep.state_fidelities
            results.append(res)
        entry["results"] = results
        result.points.append(entry)
    return result


def load_result(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ReplayError(f"result file is not JSON (line {e.lineno}): {e.msg}") from None
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA_VERSION:
        raise ReplayError(f"schema version mismatch: expected {SCHEMA_VERSION}, got {doc.get('schema') if isinstance(doc, dict) else None}")
    for key in ("command", "config", "points"):
        if key not in doc:
            raise ReplayError(f"result file lacks {key!r}")
    return doc


def replay(text: str) -> ExperimentResult:
    """Re-run the experiment recorded in a result JSON document."""
    doc = load_result(text)
    cfg = config_from_dict(copy.deepcopy(doc["config"]))
    return run_experiment(cfg, doc["command"])


def is_identical_replay(text: str) -> bool:
    return replay(text).to_json() == text
