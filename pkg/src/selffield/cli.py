"""Command-line front door: energy budgets, minimization, sweeps, atoms,
grid evolution, and the self-validation suite.

Exit codes: 0 success, 2 configuration/schema error, 3 numeric failure
(bracket failure, no minimum, ...), 4 I/O error.  Outputs are deterministic:
identical configs produce byte-identical CSV/JSON, all numerics are written
with 12 significant digits, and each output file gets a .meta.json sidecar
recording the constants version, mode, and tool version.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .errors import ConfigError, SelfFieldError
from .scales import (CONSTANTS_VERSION, EV, PARTICLE_PRESETS, ParticleSpec)
from .wavepacket import GaussianPacket
from .energy_budget import BudgetMode, assemble_budget
from .localization import SWEEP_FIELDS, minimize_radius, sweep
from .atom import ATOM_PRESETS, NeutralAtom, atom_electrostatic_energy, atom_minimize
from .validate import parse_report, report_to_json, run_validation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _fmt(x) -> str:
    """12-significant-digit rendering for CSV cells."""
    if isinstance(x, float):
        return f"{x:.11e}"
    return "" if x is None else str(x)


def _round12(obj):
    """Recursively round floats to 12 significant digits for JSON output."""
    if isinstance(obj, float):
        return float(f"{obj:.11e}")
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    return obj


def parse_beta_grid(text: str) -> list[float]:
    """Parse 'start:stop:step' (inclusive endpoints, tolerance step/2) or a
    comma-separated list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("beta_grid", f"expected start:stop:step, got {text!r}")
        start, stop, step_v = (float(p) for p in parts)
        if step_v <= 0.0:
            raise ConfigError("beta_grid", "step must be positive")
        grid = []
        value = start
        while value <= stop + 0.5 * step_v:
            grid.append(round(value, 12))
            value += step_v
        return grid
    return [float(p) for p in text.split(",") if p.strip()]


def _parse_particle(args) -> ParticleSpec:
    if args.particle is not None:
        preset = PARTICLE_PRESETS.get(args.particle)
        if preset is None:
            raise ConfigError("particle", f"unknown preset {args.particle!r} "
                              f"(available: {', '.join(sorted(PARTICLE_PRESETS))})")
        return preset
    if args.z is None or args.mass_kg is None:
        raise ConfigError("particle", "need --particle or both --z and --mass-kg")
    return ParticleSpec(z=args.z, mass=args.mass_kg, label=f"z={args.z}")


def _parse_atom(args) -> NeutralAtom:
    if args.atom is not None:
        factory = ATOM_PRESETS.get(args.atom)
        if factory is None:
            raise ConfigError("atom", f"unknown preset {args.atom!r} "
                              f"(available: {', '.join(sorted(ATOM_PRESETS))})")
        return factory()
    if args.z_nucleus is None or args.mass_total_kg is None or args.gamma_m is None:
        raise ConfigError("atom", "need --atom or all of --z-nucleus, "
                          "--mass-total-kg, --gamma-m")
    return NeutralAtom(z_nucleus=args.z_nucleus, mass_total=args.mass_total_kg,
                       gamma=args.gamma_m)


def _write_output(path: str | None, text: str, meta: dict):
    if path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    with open(path, "w") as fh:
        fh.write(text)
        if not text.endswith("\n"):
            fh.write("\n")
    sidecar = {"constants_version": CONSTANTS_VERSION,
               "tool_version": __version__}
    sidecar.update(meta)
    with open(path + ".meta.json", "w") as fh:
        json.dump(_round12(sidecar), fh, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_energy(args) -> int:
    particle = _parse_particle(args)
    mode = BudgetMode.parse(args.mode)
    packet = GaussianPacket(b=args.b, particle=particle, beta=args.beta)
    budget = assemble_budget(packet, mode)
    payload = _round12(budget.to_dict())
    if args.format == "json":
        text = json.dumps(payload, sort_keys=True)
    else:
        text = (",".join(budget.CSV_FIELDS) + "\n"
                + ",".join(_fmt(payload[f]) for f in budget.CSV_FIELDS))
    _write_output(args.output, text, {"mode": mode.value, "command": "energy"})
    return EXIT_OK


def cmd_minimize(args) -> int:
    particle = _parse_particle(args)
    mode = BudgetMode.parse(args.mode)
    res = minimize_radius(particle, args.beta, mode)
    payload = _round12(res.to_dict())
    text = json.dumps(payload, sort_keys=True)
    _write_output(args.output, text, {"mode": mode.value, "command": "minimize"})
    return EXIT_OK


def cmd_sweep(args) -> int:
    particle = _parse_particle(args)
    mode = BudgetMode.parse(args.mode)
    grid = parse_beta_grid(args.beta)
    workers = _pool_size()
    rows = sweep(particle, grid, mode, max_workers=workers)
    if args.format == "json":
        text = json.dumps([_round12(r.to_dict()) for r in rows], sort_keys=True)
    else:
        lines = [",".join(SWEEP_FIELDS)]
        for row in rows:
            d = _round12(row.to_dict())
            lines.append(",".join(_fmt(d[f]) for f in SWEEP_FIELDS))
        text = "\n".join(lines)
    _write_output(args.output, text, {"mode": mode.value, "command": "sweep"})
    return EXIT_OK


def cmd_atom(args) -> int:
    atom = _parse_atom(args)
    if args.b is not None:
        energy_ev = atom_electrostatic_energy(atom, args.b) / EV
        payload = _round12({"z_nucleus": atom.z_nucleus, "gamma_m": atom.gamma,
                            "b_m": args.b, "electrostatic_eV": energy_ev})
    else:
        res = atom_minimize(atom, args.beta)
        payload = _round12(res.to_dict())
        payload["gamma_m"] = _round12(atom.gamma)
    text = json.dumps(payload, sort_keys=True)
    _write_output(args.output, text, {"command": "atom"})
    return EXIT_OK


def cmd_evolve(args) -> int:
    import numpy as np

    from .dynamics import (GridSpec, Trajectory, evolve, init_grid,
                           load_snapshot, save_snapshot)

    if args.snapshot_in is not None:
        state, spec = load_snapshot(args.snapshot_in)
    else:
        for name in ("b", "box", "dt"):
            if getattr(args, name) is None:
                raise ConfigError(name, "required unless --snapshot-in is given")
        particle = _parse_particle(args)
        spec = GridSpec(n=args.n, box=args.box, dt=args.dt, particle=particle,
                        coupling=not args.coupling_off,
                        include_diagonal_na=args.include_diagonal_na)
        packet = GaussianPacket(b=args.b, particle=particle, beta=args.beta)
        state = init_grid(spec, packet)
    traj = evolve(state, spec, args.steps, record_stride=args.stride)
    text = "\n".join(traj.to_csv_rows())
    _write_output(args.output, text, {"command": "evolve"})
    if args.snapshot_out is not None:
        save_snapshot(traj.final_state, spec, args.snapshot_out)
    return EXIT_OK


def cmd_validate(args) -> int:
    report = run_validation(include_dynamics=not args.skip_dynamics)
    text = report_to_json(_round12(report))
    parse_report(text)   # report must round-trip through its own parser
    _write_output(args.output, text, {"command": "validate"})
    return EXIT_OK if report["all_passed"] else 1


def _pool_size() -> int:
    env = os.environ.get("SELFFIELD_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return min(os.cpu_count() or 1, 8)


# ---------------------------------------------------------------------------
# argument schema
# ---------------------------------------------------------------------------

def _add_particle_args(sub):
    sub.add_argument("--particle", choices=sorted(PARTICLE_PRESETS),
                     help="particle preset")
    sub.add_argument("--z", type=int, help="signed charge multiple")
    sub.add_argument("--mass-kg", type=float, help="particle mass in kg")


def _add_output_args(sub, formats=("json", "csv")):
    sub.add_argument("--output", help="output file path (default: stdout)")
    if formats:
        sub.add_argument("--format", choices=formats, default=formats[0])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selffield",
        description="Coherent self-field localization energetics and dynamics")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="JSON run configuration file")
    subs = parser.add_subparsers(dest="command")

    p_energy = subs.add_parser("energy", help="evaluate the energy budget at fixed width")
    _add_particle_args(p_energy)
    p_energy.add_argument("--beta", type=float, required=True)
    p_energy.add_argument("--b", type=float, required=True, help="packet width in m")
    p_energy.add_argument("--mode", default="PaperQuoted")
    _add_output_args(p_energy)
    p_energy.set_defaults(fn=cmd_energy)

    p_min = subs.add_parser("minimize", help="find the localization radius and binding energy")
    _add_particle_args(p_min)
    p_min.add_argument("--beta", type=float, required=True)
    p_min.add_argument("--mode", default="PaperQuoted")
    _add_output_args(p_min, formats=())
    p_min.set_defaults(fn=cmd_minimize)

    p_sweep = subs.add_parser("sweep", help="minimize over a beta grid")
    _add_particle_args(p_sweep)
    p_sweep.add_argument("--beta", required=True,
                         help="grid: start:stop:step or comma list")
    p_sweep.add_argument("--mode", default="PaperQuoted")
    _add_output_args(p_sweep, formats=("csv", "json"))
    p_sweep.set_defaults(fn=cmd_sweep)

    p_atom = subs.add_parser("atom", help="neutral-atom energy or localization")
    p_atom.add_argument("--atom", help="preset name (H, He)")
    p_atom.add_argument("--z-nucleus", type=int)
    p_atom.add_argument("--mass-total-kg", type=float)
    p_atom.add_argument("--gamma-m", type=float, help="electron-cloud radius in m")
    p_atom.add_argument("--beta", type=float, default=0.1)
    p_atom.add_argument("--b", type=float,
                        help="evaluate the screened energy at this width instead of minimizing")
    _add_output_args(p_atom, formats=())
    p_atom.set_defaults(fn=cmd_atom)

    p_evo = subs.add_parser("evolve", help="co-evolve the packet and its field on a grid")
    _add_particle_args(p_evo)
    p_evo.add_argument("--beta", type=float, default=0.1)
    p_evo.add_argument("--b", type=float, help="packet width in m")
    p_evo.add_argument("--n", type=int, default=64, help="grid points per axis")
    p_evo.add_argument("--box", type=float, help="box edge in m")
    p_evo.add_argument("--dt", type=float, help="time step in s")
    p_evo.add_argument("--steps", type=int, required=True)
    p_evo.add_argument("--stride", type=int, default=1, help="record stride")
    p_evo.add_argument("--coupling-off", action="store_true")
    p_evo.add_argument("--include-diagonal-na", action="store_true")
    p_evo.add_argument("--snapshot-in", help="resume from a snapshot file")
    p_evo.add_argument("--snapshot-out", help="write the final state here")
    _add_output_args(p_evo, formats=())
    p_evo.set_defaults(fn=cmd_evolve)

    p_val = subs.add_parser("validate", help="run the self-validation suite")
    p_val.add_argument("--skip-dynamics", action="store_true",
                       help="omit the grid smoke checks")
    _add_output_args(p_val, formats=())
    p_val.set_defaults(fn=cmd_validate)

    return parser


# strict schema for --config files: exactly the flags of each subcommand
CONFIG_KEYS = {
    "energy": {"particle", "z", "mass_kg", "beta", "b", "mode", "output", "format"},
    "minimize": {"particle", "z", "mass_kg", "beta", "mode", "output"},
    "sweep": {"particle", "z", "mass_kg", "beta", "mode", "output", "format"},
    "atom": {"atom", "z_nucleus", "mass_total_kg", "gamma_m", "beta", "b", "output"},
    "evolve": {"particle", "z", "mass_kg", "beta", "b", "n", "box", "dt",
               "steps", "stride", "coupling_off", "include_diagonal_na",
               "snapshot_in", "snapshot_out", "output"},
    "validate": {"skip_dynamics", "output"},
}


def config_to_argv(config: dict) -> list[str]:
    """Translate a JSON config into an argv list, rejecting unknown keys."""
    if "command" not in config:
        raise ConfigError("command", "missing")
    command = config["command"]
    if command not in CONFIG_KEYS:
        raise ConfigError("command", f"unknown command {command!r}")
    allowed = CONFIG_KEYS[command]
    argv = [command]
    for key, value in config.items():
        if key == "command":
            continue
        if key not in allowed:
            raise ConfigError(f"{command}.{key}",
                              f"unknown or irrelevant key for command {command!r}")
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        else:
            argv.extend([flag, str(value)])
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if "--config" in argv:
            idx = argv.index("--config")
            if idx + 1 >= len(argv):
                raise ConfigError("config", "missing path after --config")
            path = argv[idx + 1]
            extra = argv[:idx] + argv[idx + 2:]
            if extra:
                raise ConfigError("config", "a config file replaces all other arguments")
            try:
                with open(path) as fh:
                    config = json.load(fh)
            except OSError as exc:
                sys.stderr.write(f"selffield: cannot read config: {exc}\n")
                return EXIT_IO
            except json.JSONDecodeError as exc:
                raise ConfigError("config", f"invalid JSON: {exc}") from exc
            argv = config_to_argv(config)
        args = parser.parse_args(argv)
        if getattr(args, "command", None) is None:
            parser.print_usage(sys.stderr)
            return EXIT_CONFIG
        return args.fn(args)
    except ConfigError as exc:
        sys.stderr.write(f"selffield: config error: {exc}\n")
        return EXIT_CONFIG
    except SelfFieldError as exc:
        sys.stderr.write(f"selffield: {exc}\n")
        return EXIT_NUMERIC
    except OSError as exc:
        sys.stderr.write(f"selffield: I/O error: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
