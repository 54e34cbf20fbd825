"""Command-line entry point: ``ifmcnot {truth-table,run,sweep,sample,replay}``.

Exit codes: 0 success, 2 config error, 3 model error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiment import ConfigError, ReplayError, config_from_dict, replay, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_MODEL, EXIT_IO = 0, 2, 3, 4


def _amp_pair(text: str) -> list:
    try:
        vals = [complex(x.strip().replace(" ", "")) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad amplitude pair {text!r}") from None
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated amplitudes")
    return [[v.real, v.imag] for v in vals]


def _axis(text: str) -> dict:
    parts = text.split(":")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("sweep axis must be param:from:to:steps")
    try:
        return {"param": parts[0], "from": float(parts[1]), "to": float(parts[2]), "steps": int(parts[3])}
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sweep axis {text!r}") from None


def _phases(text: str) -> list:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad arm phases {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("experiment")
    g.add_argument("--config", type=Path, help="JSON config file; its values override flags")
    g.add_argument("--scheme", choices=["single", "dual"])
    g.add_argument("--convention", choices=["ideal", "su2"])
    g.add_argument("--n", type=int, help="pulse order: (2n-1)pi and 2n*pi pulses")
    g.add_argument("--arm-phases", type=_phases, help="four mirror phases, comma separated")
    g.add_argument("--no-target-coupling", action="store_true", default=None)
    g.add_argument("--input", choices=["basis4", "bell", "random"])
    g.add_argument("--input-seed", type=int)
    g.add_argument("--input-count", type=int)
    g.add_argument("--control", type=_amp_pair, help="alpha,beta (complex literals allowed)")
    g.add_argument("--target", type=_amp_pair, help="gamma,delta in the (|+>,|->) basis")
    g.add_argument("--p-dephase", type=float)
    g.add_argument("--epsilon", type=float, help="fixed pulse-area deficit")
    g.add_argument("--epsilon-max", type=float, help="uniform(0, max) pulse-area deficit")
    g.add_argument("--eta", type=float, help="routing loss 1-R")
    g.add_argument("--kappa", type=float, help="pulse distinguishability (dual scheme)")
    g.add_argument("--single-pass-loss", action="store_true", default=None)
    g.add_argument("--mirror-r", type=float, help="cavity mirror amplitude reflectivity")
    g.add_argument("--cavity-phi", type=float)
    g.add_argument("--state-shift", type=float)
    g.add_argument("--sweep", type=_axis, action="append", help="param:from:to:steps (repeat for 2 axes)")
    g.add_argument("--shots", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--readout", choices=["routed", "interacted"])
    g.add_argument("--out", type=Path, help="output path (stem when format is 'both')")
    g.add_argument("--format", choices=["csv", "json", "both"])

    parser = argparse.ArgumentParser(prog="ifmcnot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("truth-table", parents=[common], help="CNOT truth table")
    sub.add_parser("run", parents=[common], help="gate metrics for the configured inputs")
    sub.add_parser("sweep", parents=[common], help="metrics over a 1-2 axis parameter grid")
    sub.add_parser("sample", parents=[common], help="sampled detector clicks")
    rp = sub.add_parser("replay", help="re-run a result JSON and check it is identical")
    rp.add_argument("result", type=Path)
    rp.add_argument("--out", type=Path)
    rp.add_argument("--format", choices=["csv", "json", "both"])
    return parser


def _flags_to_dict(a: argparse.Namespace) -> dict:
    d: dict = {}
    for key, attr in (("scheme", "scheme"), ("convention", "convention"), ("n", "n"),
                      ("arm_phases", "arm_phases"), ("shots", "shots"), ("seed", "seed"),
                      ("readout", "readout")):
        if getattr(a, attr) is not None:
            d[key] = getattr(a, attr)
    if a.no_target_coupling:
        d["couple_target"] = False
    if a.control is not None or a.target is not None:
        d["input"] = {"control": a.control or [1, 0], "target": a.target or [1, 0]}
    elif a.input == "random":
        d["input"] = {"preset": "random"}
        if a.input_seed is not None:
            d["input"]["seed"] = a.input_seed
        if a.input_count is not None:
            d["input"]["count"] = a.input_count
    elif a.input is not None:
        d["input"] = a.input
    noise = {}
    for key in ("p_dephase", "eta", "kappa"):
        if getattr(a, key) is not None:
            noise[key] = getattr(a, key)
    if a.epsilon is not None:
        noise["epsilon"] = {"kind": "fixed", "value": a.epsilon}
    if a.epsilon_max is not None:
        noise["epsilon"] = {"kind": "uniform", "value": a.epsilon_max}
    if a.single_pass_loss:
        noise["return_loss"] = False
    if noise:
        d["noise"] = noise
    if a.mirror_r is not None:
        cav = {"r": a.mirror_r}
        if a.cavity_phi is not None:
            cav["phi"] = a.cavity_phi
        if a.state_shift is not None:
            cav["state_shift"] = a.state_shift
        d["cavity"] = cav
    if a.sweep:
        d["sweep"] = a.sweep
    return d


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _write(result, out, fmt) -> None:
    if out is None:
        sys.stdout.write(result.to_json() if fmt == "json" else result.to_csv())
        return
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if fmt in ("csv", "both"):
        p = out if fmt == "csv" else out.with_suffix(".csv")
        p.write_text(result.to_csv())
    if fmt in ("json", "both"):
        p = out if fmt == "json" else out.with_suffix(".json")
        p.write_text(result.to_json())


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            text = args.result.read_text()
            result = replay(text)
            identical = result.to_json() == text
            fmt = args.format or "json"
            if args.out is not None:
                _write(result, args.out, fmt)
            print("replay identical" if identical else "replay DIFFERS", file=sys.stderr)
            return EXIT_OK if identical else EXIT_MODEL

        d = _flags_to_dict(args)
        if args.config is not None:
            d = _merge(d, json.loads(args.config.read_text()))
        if args.out is not None:
            d.setdefault("output", {})
            d["output"] = {**d["output"], "path": str(args.out)}
        if args.format is not None:
            d["output"] = {**d.get("output", {}), "format": args.format}
        cfg = config_from_dict(d)
        if args.command == "sweep" and not cfg.sweep:
            raise ConfigError("sweep: the sweep command needs at least one axis")
        result = run_experiment(cfg, args.command)
        fmt = cfg.out_format if (cfg.out_path or args.format) else "csv"
        _write(result, cfg.out_path, fmt)
        return EXIT_OK
    except json.JSONDecodeError as e:
        print(f"config error: syntax error at line {e.lineno}, column {e.colno}: {e.msg}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, ReplayError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"model error: {e}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
