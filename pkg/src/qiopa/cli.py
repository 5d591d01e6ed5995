"""Command-line runner: one subcommand per sweep, CSV or JSON out, provenance header on every file.

Options come from three layers, later ones winning: built-in defaults, a JSON
``--config-file`` and explicit flags.  Exit codes: 0 success, 2 invalid input,
3 numerical guard violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericalGuardError, ValidationError

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_GUARD = 3

NAMED_FRAMES = {"H": (0.0, 0.0), "D": (math.pi / 2, 0.0), "R": (math.pi / 2, math.pi / 2)}

DEFAULTS = {
    "common": {"seed": 0, "epsilon_trunc": 1e-8, "out": None},
    "fringe": {"config": "collinear", "g": 1.0, "points": 72, "method": "factorized"},
    "bures": {"kinds": "pc,universal,coherent", "nbar": 12.5, "x_max": 5.0, "x_step": 0.1},
    "wigner": {
        "g": 1.0, "input": 1, "reflectivity": 0.0, "resolution": 241, "re_min": None, "re_max": None,
        "im_min": None, "im_max": None, "epsilon_grid": 1e-3, "check_tail": True, "header_out": None,
    },
    "werner": {"g": 1.0, "eta": 0.5, "method": "closed_form"},
    "witness": {"config": "collinear", "g": "0.5,1.0", "eta": "1.0", "k": "0", "micro": "singlet"},
    "nosignal": {"config": "collinear", "g": 1.0, "alice": "H,D", "bob_frame": "D", "k": 0, "eta": 1.0,
                 "samples": 0},
    "clone-tables": {"flavor": "universal", "n": 1, "m_max": 10},
}


def _floats(value) -> list:
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    if isinstance(value, (int, float)):
        return [float(value)]
    return [float(v) for v in str(value).split(",") if v.strip()]


def _ints(value) -> list:
    vals = _floats(value)
    if any(v != int(v) for v in vals):
        raise ValidationError(f"expected integers, got {value!r}")
    return [int(v) for v in vals]


def _frame(spec):
    """'H', 'D', 'R' or 'theta:phi' in radians."""
    from .fock import PolarizationFrame

    text = str(spec).strip()
    if text.upper() in NAMED_FRAMES:
        return PolarizationFrame(*NAMED_FRAMES[text.upper()])
    if ":" in text:
        theta, phi = text.split(":", 1)
        return PolarizationFrame(float(theta), float(phi))
    raise ValidationError(f"frame must be H, D, R or theta:phi, got {spec!r}")


def _meta(command: str, cfg: dict) -> dict:
    meta = {k: v for k, v in cfg.items() if k not in ("out", "header_out", "config_file")}
    meta["command"] = command
    return meta


# ---------------------------------------------------------------------------
# commands (each returns a dict of output suffix -> text)
# ---------------------------------------------------------------------------


def run_fringe(cfg: dict) -> dict:
    from .amplifier import AmplifierParams, fringe_scan

    points = int(cfg["points"])
    if points < 3:
        raise ValidationError("points must be >= 3")
    phases = np.linspace(0.0, 2.0 * math.pi, points, endpoint=False)
    pattern = fringe_scan(cfg["config"], AmplifierParams(float(cfg["g"])), phases, method=cfg["method"],
                          epsilon_trunc=float(cfg["epsilon_trunc"]))
    return {"": pattern.to_csv(_meta("fringe", cfg))}


def run_bures(cfg: dict) -> dict:
    from .channels import bures_curves_csv, mqs_bures_curve

    step, top = float(cfg["x_step"]), float(cfg["x_max"])
    if step <= 0 or top < 0:
        raise ValidationError("x_step must be positive and x_max non-negative")
    x = np.round(np.arange(0.0, top + 0.5 * step, step), 12)
    kinds = [k.strip() for k in str(cfg["kinds"]).split(",") if k.strip()]
    curves = [mqs_bures_curve(k, x, nbar=float(cfg["nbar"])) for k in kinds]
    return {"": bures_curves_csv(curves, _meta("bures", cfg))}


def run_wigner(cfg: dict) -> dict:
    from .wigner import degenerate_opa_state, fock_input, negativity_report, wigner_grid

    n_in = int(cfg["input"])
    if n_in < 0:
        raise ValidationError("input photon number must be >= 0")
    out = degenerate_opa_state(float(cfg["g"]), fock_input(n_in), epsilon_trunc=float(cfg["epsilon_trunc"]))
    bounds = [cfg[k] for k in ("re_min", "re_max", "im_min", "im_max")]
    re_range = None if bounds[0] is None or bounds[1] is None else (float(bounds[0]), float(bounds[1]))
    im_range = None if bounds[2] is None or bounds[3] is None else (float(bounds[2]), float(bounds[3]))
    grid = wigner_grid(out.state, re_range, im_range, int(cfg["resolution"]),
                       reflectivity=float(cfg["reflectivity"]), epsilon_grid=float(cfg["epsilon_grid"]),
                       check_tail=bool(cfg["check_tail"]))
    meta = _meta("wigner", cfg)
    header = {"grid": grid.header(), "negativity": negativity_report(grid).to_dict(), "opa_cutoff": out.cutoff}
    from ._io import json_text

    return {"": grid.to_csv(meta), ".json": json_text(header, meta)}


def run_werner(cfg: dict) -> dict:
    from .amplifier import AmplifierParams
    from .measurement import ppt_entangled, werner_extract, werner_extract_bruteforce

    params = AmplifierParams(float(cfg["g"]))
    eta = float(cfg["eta"])
    if cfg["method"] == "closed_form":
        result = werner_extract(params, eta)
    elif cfg["method"] == "bruteforce":
        result = werner_extract_bruteforce(params, eta, epsilon_trunc=min(float(cfg["epsilon_trunc"]), 1e-10))
    else:
        raise ValidationError("method must be closed_form or bruteforce")
    entangled, min_eig = ppt_entangled(result.matrix)
    from ._io import json_text

    payload = {"werner": result.to_dict(), "ppt": {"entangled": bool(entangled), "min_eigenvalue": min_eig}}
    return {"": json_text(payload, _meta("werner", cfg))}


def run_witness(cfg: dict) -> dict:
    from .amplifier import AmplifierParams
    from .errors import DegenerateOutcomeError
    from .measurement import OFilterSpec, SingletSource, WitnessReport, pseudo_spin_witness, witness_sweep_csv

    if cfg["micro"] != "singlet":
        raise ValidationError("only the singlet micro-macro source is available from the command line")
    rows = []
    for g in _floats(cfg["g"]):
        source = SingletSource(AmplifierParams(g), cfg["config"], epsilon_trunc=float(cfg["epsilon_trunc"]))
        for eta in _floats(cfg["eta"]):
            for k in _ints(cfg["k"]):
                spec = OFilterSpec(k, efficiency=eta)
                try:
                    report = pseudo_spin_witness(source, spec)
                except DegenerateOutcomeError:
                    nan = float("nan")
                    report = WitnessReport((nan, nan, nan), nan, 0.0, (0.0, 0.0, 0.0), k, eta)
                rows.append((g, eta, k, report))
    return {"": witness_sweep_csv(rows, _meta("witness", cfg))}


def run_nosignal(cfg: dict) -> dict:
    from .amplifier import AmplifierParams
    from .fock import FockState
    from .measurement import OFilterSpec, micro_macro_state, nosignaling_check, nosignaling_monte_carlo

    alice = [_frame(s) for s in str(cfg["alice"]).split(",")]
    if len(alice) != 2:
        raise ValidationError("alice must name two frames")
    spec = OFilterSpec(int(cfg["k"]), _frame(cfg["bob_frame"]), float(cfg["eta"]))
    state = micro_macro_state(AmplifierParams(float(cfg["g"])), cfg["config"], epsilon_trunc=float(cfg["epsilon_trunc"]))
    exact = nosignaling_check(state, alice, spec)
    payload = {"exact": exact.to_dict()}
    samples = int(cfg["samples"])
    if samples > 0:
        if not isinstance(state, FockState):
            raise ValidationError("sampling needs the collinear (pure) micro-macro state")
        mc = nosignaling_monte_carlo(state, alice, spec, samples, int(cfg["seed"]))
        payload["monte_carlo"] = {"max_abs_z": mc.max_abs_z, "max_deviation": mc.max_deviation,
                                  "samples": mc.samples, "seed": mc.seed, "consistent_3sigma": mc.consistent()}
    from ._io import json_text

    return {"": json_text(payload, _meta("nosignal", cfg))}


def run_clone_tables(cfg: dict) -> dict:
    from .cloning import clone_table, clone_table_csv

    rows = clone_table(cfg["flavor"], int(cfg["n"]), int(cfg["m_max"]))
    return {"": clone_table_csv(rows, _meta("clone-tables", cfg))}


COMMANDS = {
    "fringe": run_fringe,
    "bures": run_bures,
    "wigner": run_wigner,
    "werner": run_werner,
    "witness": run_witness,
    "nosignal": run_nosignal,
    "clone-tables": run_clone_tables,
}


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qiopa", description="Quantum-injected amplifier simulations.")
    parser.add_argument("--version", action="version", version=f"qiopa {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, argument_default=argparse.SUPPRESS)
        p.add_argument("--out", help="output path (stdout when omitted)")
        p.add_argument("--seed", type=int, help="64-bit seed for sampled paths")
        p.add_argument("--epsilon-trunc", dest="epsilon_trunc", type=float, help="truncation budget")
        p.add_argument("--config-file", dest="config_file", help="JSON file of options; flags override it")
        for key, default in DEFAULTS[name].items():
            if isinstance(default, bool):
                p.add_argument("--no-" + key.replace("_", "-"), dest=key, action="store_const", const=False)
            elif isinstance(default, int):
                p.add_argument(_flag(key), dest=key, type=int)
            elif isinstance(default, float) or default is None and key != "header_out":
                p.add_argument(_flag(key), dest=key, type=float)
            else:
                p.add_argument(_flag(key), dest=key, type=str)
    return parser


def resolve_config(command: str, flags: dict) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(DEFAULTS["common"])
    cfg.update(DEFAULTS[command])
    path = flags.pop("config_file", None)
    if path is not None:
        try:
            loaded = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ValidationError(f"cannot read config file {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ValidationError("config file must hold a JSON object")
        loaded = {k.replace("-", "_"): v for k, v in loaded.items()}
        loaded.pop("command", None)
        unknown = sorted(set(loaded) - set(cfg))
        if unknown:
            raise ValidationError(f"unknown config keys for {command}: {', '.join(unknown)}")
        cfg.update(loaded)
    cfg.update(flags)
    return cfg


def _write(outputs: dict, cfg: dict) -> None:
    out = cfg.get("out")
    for suffix, text in outputs.items():
        if out is None:
            (sys.stdout if suffix == "" else sys.stderr).write(text)
            continue
        target = Path(out) if suffix == "" else Path(cfg.get("header_out") or Path(out).with_suffix(suffix))
        target.write_text(text, encoding="utf-8", newline="\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    try:
        cfg = resolve_config(command, args)
        _write(COMMANDS[command](cfg), cfg)
    except NumericalGuardError as exc:
        print(f"qiopa {command}: numerical guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ValueError, TypeError, OSError) as exc:
        print(f"qiopa {command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
