"""Command-line runner.

The CLI is a thin client: it assembles a request from a config file and
flags, posts it to the run service, and prints the result.  By default
the service is instantiated in-process (no network); ``--server-url``
points it at a remote instance instead.

Config files are INI documents with sections [model], [sim], [clock],
[run], [sweep] whose keys mirror the flag names (underscores instead of
dashes).  Flags override file values; the SPINCLOCK_OUTPUT_DIR
environment variable overrides the configured output directory but not
an explicit --output-dir flag.

Grids accept either a comma list ("0.1,0.2,0.5") or an inclusive range
"start:stop:step" ("0:3:0.05").
"""

from __future__ import annotations

import argparse
import asyncio
import configparser
import logging
import os
import sys
from pathlib import Path
from typing import Any, Optional

import httpx
from pydantic import ValidationError

from . import __version__
from .service import models as m
from .service.app import create_app

logger = logging.getLogger(__name__)

COMMANDS = ("steady-state", "semiclassical", "trajectory", "ensemble",
            "precision-sweep", "kur", "thermo")


def parse_grid(text: str) -> list[float]:
    """Parse "start:stop:step" (inclusive) or a comma list of floats."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {text!r}: expected start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError(f"grid {text!r}: step must be positive")
        n = int(round((stop - start) / step))
        values = [start + i * step for i in range(n + 1)]
        return [v for v in values if v <= stop + 1e-9 * max(1.0, abs(stop))]
    values = [float(p) for p in text.split(",") if p.strip()]
    if not values:
        raise ValueError(f"grid {text!r} is empty")
    return values


def parse_int_list(text: str) -> list[int]:
    return [int(p) for p in text.split(",") if p.strip()]


def parse_vector(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p.strip()]


# Per-section coercers for config-file values; keys not listed pass as strings.
_SECTION_TYPES: dict[str, dict[str, Any]] = {
    "model": {"n_atoms": int, "j": float, "omega": float, "gamma": float,
              "phi": float, "omega_a": float},
    "sim": {"dt": float, "t_final": float, "record_stride": int, "engine": str},
    "clock": {"hysteresis": float, "discard_transient": int},
    "run": {"n_traj": int, "master_seed": int, "workers": int,
            "output_dir": str, "server_url": str, "format": str,
            "traj_index": int, "overlay": bool, "correction": bool},
    "sweep": {"beta_grid": parse_grid, "omega_grid": parse_grid,
              "ratio_grid": parse_grid, "n_list": parse_int_list,
              "x0": parse_vector},
}


def load_config(path: str) -> dict[str, dict[str, Any]]:
    """Read an INI config file into typed per-section dicts."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValueError(f"config file {path!r} not found")
    out: dict[str, dict[str, Any]] = {}
    for section in parser.sections():
        if section not in _SECTION_TYPES:
            raise ValueError(f"unknown config section [{section}]")
        types = _SECTION_TYPES[section]
        values: dict[str, Any] = {}
        for key, raw in parser.items(section):
            if key not in types:
                raise ValueError(f"unknown key {key!r} in section [{section}]")
            caster = types[key]
            if caster is bool:
                values[key] = parser.getboolean(section, key)
            else:
                values[key] = caster(raw)
        out[section] = values
    return out


class Settings:
    """Layered lookup: flag value, then config file, then default."""

    def __init__(self, args: argparse.Namespace, cfg: dict[str, dict[str, Any]]):
        self.args = args
        self.cfg = cfg

    def get(self, section: str, key: str, default: Any = None,
            flag: Optional[str] = None) -> Any:
        flag_value = getattr(self.args, flag or key, None)
        if flag_value is not None:
            return flag_value
        file_value = self.cfg.get(section, {}).get(key)
        if file_value is not None:
            return file_value
        return default

    def require(self, section: str, key: str, flag: Optional[str] = None) -> Any:
        value = self.get(section, key, flag=flag)
        if value is None:
            name = (flag or key).replace("_", "-")
            raise ValueError(f"missing required setting: --{name} (or [{section}] {key})")
        return value


def _model_spec(s: Settings, need_omega: bool = True) -> m.ModelSpec:
    fields: dict[str, Any] = {
        "n_atoms": s.get("model", "n_atoms", flag="n"),
        "j": s.get("model", "j"),
        "gamma": s.require("model", "gamma"),
        "phi": s.get("model", "phi", 0.0),
        "omega_a": s.get("model", "omega_a", 1.0),
    }
    fields["omega"] = s.require("model", "omega") if need_omega else s.get("model", "omega", 0.0)
    return m.ModelSpec(**fields)


def _sim_spec(s: Settings) -> m.SimSpec:
    return m.SimSpec(
        dt=s.get("sim", "dt", 1e-3),
        t_final=s.require("sim", "t_final"),
        record_stride=s.get("sim", "record_stride", 1),
        engine=s.get("sim", "engine", "pure"),
    )


def _clock_spec(s: Settings) -> m.ClockSpec:
    return m.ClockSpec(
        hysteresis=s.get("clock", "hysteresis", 0.25),
        discard_transient=s.get("clock", "discard_transient", 2),
    )


def _run_common(s: Settings) -> dict[str, Any]:
    return {
        "n_traj": s.require("run", "n_traj"),
        "master_seed": s.get("run", "master_seed", 0, flag="seed"),
        "workers": s.get("run", "workers", os.cpu_count() or 1, flag="threads"),
    }


def build_request(command: str, s: Settings):
    if command == "steady-state":
        spec = _model_spec(s, need_omega=False)
        return m.SteadyStateRequest(
            n_atoms=spec.n_atoms,
            gamma=spec.gamma,
            beta_grid=s.require("sweep", "beta_grid"),
        )
    if command == "semiclassical":
        return m.SemiclassicalRequest(
            model=_model_spec(s),
            t_final=s.require("sim", "t_final"),
            dt=s.get("sim", "dt", 1e-3),
            x0=s.get("sweep", "x0"),
            include_correction=bool(s.get("run", "correction", False)),
        )
    if command == "trajectory":
        return m.TrajectoryRequest(
            model=_model_spec(s),
            sim=_sim_spec(s),
            master_seed=s.get("run", "master_seed", 0, flag="seed"),
            traj_index=s.get("run", "traj_index", 0),
            overlay_semiclassical=bool(s.get("run", "overlay", False)),
        )
    if command == "ensemble":
        return m.EnsembleRequest(
            model=_model_spec(s), sim=_sim_spec(s), clock=_clock_spec(s),
            **_run_common(s),
        )
    if command == "precision-sweep":
        return m.PrecisionSweepRequest(
            n_list=s.require("sweep", "n_list"),
            ratio_grid=s.require("sweep", "ratio_grid"),
            omega=s.require("model", "omega"),
            sim=_sim_spec(s), clock=_clock_spec(s), **_run_common(s),
        )
    if command == "kur":
        spec = _model_spec(s, need_omega=False)
        return m.KurRequest(
            n_atoms=spec.n_atoms,
            gamma=spec.gamma,
            omega_grid=s.require("sweep", "omega_grid"),
            sim=_sim_spec(s), clock=_clock_spec(s), **_run_common(s),
        )
    if command == "thermo":
        return m.ThermoRequest(
            model=_model_spec(s), sim=_sim_spec(s), clock=_clock_spec(s),
            **_run_common(s),
        )
    raise ValueError(f"unknown command {command!r}")


def resolve_output_dir(s: Settings, command: str) -> str:
    flag_value = getattr(s.args, "output_dir", None)
    if flag_value is not None:
        return flag_value
    env_value = os.environ.get("SPINCLOCK_OUTPUT_DIR")
    if env_value:
        return env_value
    file_value = s.cfg.get("run", {}).get("output_dir")
    if file_value is not None:
        return file_value
    return str(Path("runs") / command)


def call_service(command: str, request, output_dir: str, table_format: str,
                 server_url: Optional[str]) -> httpx.Response:
    params = {"output_dir": output_dir, "table_format": table_format}
    payload = request.model_dump(mode="json")
    if server_url:
        with httpx.Client(base_url=server_url, timeout=None) as client:
            return client.post(f"/run/{command}", json=payload, params=params)

    # No server given: mount the ASGI app in-process.  The transport is
    # async-only, so drive one request through a private event loop.
    async def _post() -> httpx.Response:
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport, timeout=None,
                                     base_url="http://spinclock.local") as client:
            return await client.post(f"/run/{command}", json=payload, params=params)

    return asyncio.run(_post())


def _print_result(body: dict) -> None:
    print(f"command: {body['command']}")
    print(f"version: {body['version']}")
    print(f"output_dir: {body['output_dir']}")
    print("files:")
    for name, digest in body["files"].items():
        print(f"  {name}  sha256={digest}")
    print("summary:")
    for key in sorted(body["summary"]):
        print(f"  {key}: {body['summary'][key]}")
    print(f"wall_time_s: {body['wall_time_s']:.3f}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file; flags override its values")
    common.add_argument("--output-dir", dest="output_dir")
    common.add_argument("--server-url", dest="server_url",
                        help="base URL of a running service; default is in-process")
    common.add_argument("--format", dest="format", choices=["csv", "json"],
                        help="tabular output format (default csv)")
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--threads", type=int, help="worker threads for ensembles")
    common.add_argument("-v", "--verbose", action="store_true")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--n", type=int, help="number of atoms")
    model.add_argument("--j", type=float, help="collective spin (n/2); alternative to --n")
    model.add_argument("--omega", type=float, help="drive amplitude")
    model.add_argument("--gamma", type=float, help="collective decay rate")
    model.add_argument("--phi", type=float, help="local-oscillator phase")
    model.add_argument("--omega-a", dest="omega_a", type=float, help="energy unit")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--dt", type=float, help="integration step")
    sim.add_argument("--t-final", dest="t_final", type=float, help="simulated duration")
    sim.add_argument("--record-stride", dest="record_stride", type=int)
    sim.add_argument("--engine", choices=["pure", "density"])

    clock = argparse.ArgumentParser(add_help=False)
    clock.add_argument("--hysteresis", type=float, help="threshold half-width in units of j")
    clock.add_argument("--discard-transient", dest="discard_transient", type=int)

    traj_count = argparse.ArgumentParser(add_help=False)
    traj_count.add_argument("--n-traj", dest="n_traj", type=int, help="ensemble size")

    parser = argparse.ArgumentParser(
        prog="spinclock",
        description="Collective-spin clock simulator and analysis runner.",
    )
    parser.add_argument("--version", action="version", version=f"spinclock {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("steady-state", parents=[common, model],
                       help="exact steady-state sweep over beta = omega/omega0")
    p.add_argument("--beta-grid", dest="beta_grid", type=parse_grid)

    p = sub.add_parser("semiclassical", parents=[common, model],
                       help="mean-field Bloch trajectory")
    p.add_argument("--t-final", dest="t_final", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--x0", type=parse_vector, help="initial x,y,z (comma separated)")
    p.add_argument("--correction", action="store_const", const=True, default=None,
                   help="include the finite-N drift correction")

    p = sub.add_parser("trajectory", parents=[common, model, sim],
                       help="single conditioned trajectory")
    p.add_argument("--traj-index", dest="traj_index", type=int)
    p.add_argument("--overlay", action="store_const", const=True, default=None,
                   help="add semiclassical overlay columns")

    sub.add_parser("ensemble", parents=[common, model, sim, clock, traj_count],
                   help="trajectory ensemble with moment curves and period statistics")

    p = sub.add_parser("precision-sweep", parents=[common, model, sim, clock, traj_count],
                       help="clock precision versus omega0/omega")
    p.add_argument("--n-list", dest="n_list", type=parse_int_list)
    p.add_argument("--ratio-grid", dest="ratio_grid", type=parse_grid)

    p = sub.add_parser("kur", parents=[common, model, sim, clock, traj_count],
                       help="kinetic bounds and simulated clock ratios over an omega grid")
    p.add_argument("--omega-grid", dest="omega_grid", type=parse_grid)

    sub.add_parser("thermo", parents=[common, model, sim, clock, traj_count],
                   help="per-cycle dissipation versus period")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config) if args.config else {}
        settings = Settings(args, cfg)
        request = build_request(args.command, settings)
    except ValidationError as exc:
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "request"
            print(f"error: {loc}: {err['msg']}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    output_dir = resolve_output_dir(settings, args.command)
    table_format = settings.get("run", "format", "csv", flag="format")
    server_url = settings.get("run", "server_url")
    try:
        response = call_service(args.command, request, output_dir,
                                table_format, server_url)
    except httpx.HTTPError as exc:
        print(f"error: service unreachable: {exc}", file=sys.stderr)
        return 1
    if response.status_code == 422:
        for err in response.json().get("detail", []):
            loc = ".".join(str(p) for p in err.get("loc", [])) or "request"
            print(f"error: {loc}: {err.get('msg', 'invalid')}", file=sys.stderr)
        return 2
    if response.status_code != 200:
        detail = response.json().get("detail", response.text)
        print(f"error: {detail}", file=sys.stderr)
        return 1
    _print_result(response.json())
    return 0


if __name__ == "__main__":
    sys.exit(main())
