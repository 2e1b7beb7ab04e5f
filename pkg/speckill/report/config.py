"""
config.py

Parses JSON run configurations into a RunConfig. Decimal literals are read as
exact Fractions, and every problem found is reported at once with its field
path.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from speckill.certify.certifier import replay_certificate
from speckill.certify.utils.certificate_infra import CertificationInput, SpectralCertificate
from speckill.cover.bumps import BUMPS
from speckill.cover.utils.cover_infra import BallCover, grid_cover
from speckill.cover.utils.nu import DEFAULT_EXACT_CAP, DEFAULT_GRID_SLACK
from speckill.cover.utils.partition import DEFAULT_CUTOFF, DEFAULT_GRID
from speckill.errors import ConfigError, SpeckillError
from speckill.floer.utils.orbit_infra import DEFAULT_CHERN_GEN, ManifoldModel, Mode
from speckill.radial.utils.pi_rational import PiRational, to_fraction

logger = logging.getLogger(__name__)

COMMANDS = ("killer-certify", "killer-probe", "cover-analyze", "cover-pb", "bound-propagate")

# Which parameter block each command reads
COMMAND_BLOCKS = {
    "killer-certify": "killer",
    "killer-probe": "killer",
    "cover-analyze": "cover",
    "cover-pb": "cover",
    "bound-propagate": "bound",
}

FORMATS = ("json", "csv", "md")
DEFAULT_FORMATS = ("json", "md")
DEFAULT_OUT_DIR = "speckill_out"

_TOP_LEVEL = {"command", "killer", "probe", "cover", "bound", "output", "seed"}
_KILLER_FIELDS = {
    "n", "lambda", "chern_gen", "mode", "r", "epsilon", "E", "tau", "h_max", "m",
    "plateau", "l_window",
}
_COVER_FIELDS = {
    "domain", "balls", "grid_cover", "cutoff", "grid", "support_factor",
    "exact_l_cap", "grid_slack", "energy_asserted", "scaling",
}
_BOUND_FIELDS = {"model", "balls", "eps_fraction", "pb", "certificates"}
_OUTPUT_FIELDS = {"dir", "formats"}

_MISSING = object()


@dataclass
class OutputSpec:
    directory: str = DEFAULT_OUT_DIR
    formats: Tuple[str, ...] = DEFAULT_FORMATS


@dataclass
class CoverSpec:
    """
    Parameters of the cover commands.
    """

    cover: BallCover
    cutoff: str = DEFAULT_CUTOFF
    grid: int = DEFAULT_GRID
    support_factor: float = 1.0
    exact_cap: int = DEFAULT_EXACT_CAP
    grid_slack: float = DEFAULT_GRID_SLACK
    energy_asserted: bool = False
    scaling: bool = False


@dataclass
class BoundSpec:
    """
    Parameters of bound-propagate: balls (r_i, E_i) for the theorem bound
    and/or (d, r) for the Poisson bracket bound. Certificates are keyed by
    0-based ball index and have already been replayed.
    """

    model: Optional[ManifoldModel] = None
    balls: List[Tuple[Fraction, Any]] = field(default_factory=list)
    eps_fraction: Fraction = Fraction(1, 8)
    pb_d: Optional[int] = None
    pb_r: Optional[Fraction] = None
    certificates: Dict[int, SpectralCertificate] = field(default_factory=dict)


@dataclass
class RunConfig:
    """
    A validated run configuration. Exactly one of killer, cover and bound is
    set, matching the command.
    """

    command: str
    killer: Optional[CertificationInput] = None
    probe_a: Optional[PiRational] = None
    cover: Optional[CoverSpec] = None
    bound: Optional[BoundSpec] = None
    output: OutputSpec = field(default_factory=OutputSpec)
    seed: int = 0


class _Reader:
    """
    Reads typed fields out of nested mappings and collects errors with
    field paths instead of raising at the first one.
    """

    def __init__(self, base_dir: str = ""):
        self.errors: List[str] = []
        self.base_dir = base_dir

    def error(self, path: str, message: str) -> None:
        self.errors.append(f"{path}: {message}")

    @staticmethod
    def join(path: str, key: str) -> str:
        return f"{path}.{key}" if path else key

    def block(self, data: Any, path: str, allowed: set) -> Optional[Dict[str, Any]]:
        if not isinstance(data, dict):
            self.error(path, "expected an object")
            return None
        for key in sorted(set(data) - allowed):
            self.error(self.join(path, key), "unexpected field")
        return data

    def get(self, data: Dict[str, Any], path: str, key: str, default: Any = _MISSING) -> Any:
        if key in data and data[key] is not None:
            return data[key]
        if default is _MISSING:
            self.error(self.join(path, key), "missing required field")
            return None
        return default

    def fraction(self, data, path, key, default=_MISSING) -> Optional[Fraction]:
        value = self.get(data, path, key, default)
        if value is None or isinstance(value, Fraction):
            return value
        try:
            return to_fraction(value)
        except (TypeError, ValueError, ZeroDivisionError):
            self.error(self.join(path, key), f"expected an exact number, got {value!r}")
            return None

    def pi_number(self, data, path, key, default=_MISSING) -> Optional[PiRational]:
        value = self.get(data, path, key, default)
        if value is None:
            return None
        try:
            return PiRational.of(value)
        except (TypeError, ValueError, ZeroDivisionError):
            self.error(
                self.join(path, key), f"expected a number or {{rat, pi}} pair, got {value!r}"
            )
            return None

    def integer(self, data, path, key, default=_MISSING) -> Optional[int]:
        value = self.get(data, path, key, default)
        if value is None or (isinstance(value, int) and not isinstance(value, bool)):
            return value
        self.error(self.join(path, key), f"expected an integer, got {value!r}")
        return None

    def real(self, data, path, key, default=_MISSING) -> Optional[float]:
        value = self.get(data, path, key, default)
        if value is None:
            return None
        try:
            return float(to_fraction(value))
        except (TypeError, ValueError, ZeroDivisionError):
            self.error(self.join(path, key), f"expected a number, got {value!r}")
            return None

    def boolean(self, data, path, key, default=_MISSING) -> Optional[bool]:
        value = self.get(data, path, key, default)
        if value is None or isinstance(value, bool):
            return value
        self.error(self.join(path, key), f"expected true or false, got {value!r}")
        return None


def _read_model(reader: _Reader, data: Dict[str, Any], path: str) -> Optional[ManifoldModel]:
    mode = reader.get(data, path, "mode", Mode.MONOTONE.value)
    if mode not in {m.value for m in Mode}:
        reader.error(f"{path}.mode", f"expected one of {', '.join(m.value for m in Mode)}")
        return None
    n = reader.integer(data, path, "n", 1)
    # lambda only matters for monotone models
    lam = reader.fraction(data, path, "lambda", 0 if mode == Mode.ASPHERICAL.value else _MISSING)
    chern_gen = reader.integer(data, path, "chern_gen", DEFAULT_CHERN_GEN)
    if None in (n, lam, chern_gen):
        return None
    try:
        return ManifoldModel(n=n, lam=lam, chern_gen=chern_gen, mode=Mode(mode))
    except SpeckillError as e:
        reader.error(path, e.message)
        return None


def _read_killer(reader: _Reader, data: Any) -> Optional[CertificationInput]:
    data = reader.block(data, "killer", _KILLER_FIELDS)
    if data is None:
        return None
    model = _read_model(reader, data, "killer")
    r = reader.fraction(data, "killer", "r")
    eps = reader.fraction(data, "killer", "epsilon")
    energy = reader.pi_number(data, "killer", "E")
    tau = reader.pi_number(data, "killer", "tau", None)
    h_max = reader.pi_number(data, "killer", "h_max", PiRational())
    m = reader.pi_number(data, "killer", "m", None)
    plateau = reader.pi_number(data, "killer", "plateau", None)
    l_window = reader.integer(data, "killer", "l_window", None)

    if r is not None and r <= 0:
        reader.error("killer.r", "must be positive")
    if eps is not None and eps <= 0:
        reader.error("killer.epsilon", "must be positive")
    if r is not None and eps is not None and r > 0 and eps >= r / 4:
        reader.error("killer.epsilon", f"must be < r/4 = {r / 4}")
    if energy is not None and not energy.sign() > 0:
        reader.error("killer.E", "must be positive")
    if l_window is not None and l_window < 1:
        reader.error("killer.l_window", "must be >= 1")

    if model is None or None in (r, eps, energy) or reader.errors:
        return None
    return CertificationInput(
        model=model,
        r=r,
        eps=eps,
        energy=energy,
        tau=tau,
        h_max=h_max,
        m=m,
        plateau=plateau,
        l_window=l_window,
    )


def _read_cover(reader: _Reader, data: Any) -> Optional[CoverSpec]:
    data = reader.block(data, "cover", _COVER_FIELDS)
    if data is None:
        return None

    cover = None
    if "grid_cover" in data:
        fields = {"nx", "ny", "overlap", "side"}
        spec = reader.block(data["grid_cover"], "cover.grid_cover", fields)
        if spec is not None:
            nx_cells = reader.integer(spec, "cover.grid_cover", "nx")
            ny_cells = reader.integer(spec, "cover.grid_cover", "ny")
            overlap = reader.real(spec, "cover.grid_cover", "overlap", 0.2)
            side = reader.real(spec, "cover.grid_cover", "side", 1.0)
            if None not in (nx_cells, ny_cells, overlap, side):
                try:
                    cover = grid_cover(nx_cells, ny_cells, overlap=overlap, side=side)
                except SpeckillError as e:
                    reader.error("cover.grid_cover", e.message)
    elif "domain" in data or "balls" in data:
        try:
            cover = BallCover.from_json(_plain(data))
        except (SpeckillError, KeyError, TypeError, ValueError) as e:
            message = e.message if isinstance(e, SpeckillError) else f"malformed cover ({e})"
            reader.error("cover", message)
    else:
        reader.error("cover", "needs either domain and balls, or grid_cover")

    cutoff = reader.get(data, "cover", "cutoff", DEFAULT_CUTOFF)
    if cutoff not in BUMPS:
        reader.error("cover.cutoff", f"expected one of {', '.join(sorted(BUMPS))}")
    grid = reader.integer(data, "cover", "grid", DEFAULT_GRID)
    if grid is not None and grid < 1:
        reader.error("cover.grid", "must be >= 1")
    support_factor = reader.real(data, "cover", "support_factor", 1.0)
    if support_factor is not None and support_factor <= 0:
        reader.error("cover.support_factor", "must be positive")
    exact_cap = reader.integer(data, "cover", "exact_l_cap", DEFAULT_EXACT_CAP)
    grid_slack = reader.real(data, "cover", "grid_slack", DEFAULT_GRID_SLACK)
    if grid_slack is not None and not 0 <= grid_slack < 1:
        reader.error("cover.grid_slack", "must be in [0, 1)")
    energy_asserted = reader.boolean(data, "cover", "energy_asserted", False)
    scaling = reader.boolean(data, "cover", "scaling", False)

    if cover is None or reader.errors:
        return None
    return CoverSpec(
        cover=cover,
        cutoff=cutoff,
        grid=grid,
        support_factor=support_factor,
        exact_cap=exact_cap,
        grid_slack=grid_slack,
        energy_asserted=energy_asserted,
        scaling=scaling,
    )


def _read_certificates(reader: _Reader, data: Any, count: int) -> Dict[int, SpectralCertificate]:
    # Each entry names a 1-based ball and a certificate file, relative to the config
    if not isinstance(data, list):
        reader.error("bound.certificates", "expected a list")
        return {}
    certificates: Dict[int, SpectralCertificate] = {}
    for k, entry in enumerate(data):
        path = f"bound.certificates[{k}]"
        entry = reader.block(entry, path, {"ball", "path"})
        if entry is None:
            continue
        ball = reader.integer(entry, path, "ball")
        location = reader.get(entry, path, "path")
        if ball is None or location is None:
            continue
        if not 1 <= ball <= count:
            reader.error(f"{path}.ball", f"must name one of the {count} balls (1-based)")
            continue
        if ball - 1 in certificates:
            reader.error(f"{path}.ball", f"ball {ball} already has a certificate")
            continue

        location = os.path.join(reader.base_dir, str(location))
        try:
            with open(location, "r") as f:
                certificate = replay_certificate(json.load(f))
        except (OSError, json.JSONDecodeError) as e:
            reader.error(f"{path}.path", f"cannot read {location} ({e})")
            continue
        except SpeckillError as e:
            reader.error(f"{path}.path", e.message)
            continue
        if not certificate.ok:
            reader.error(f"{path}.path", f"certificate is {certificate.status.value}")
            continue
        certificates[ball - 1] = certificate
    return certificates


def _check_certified_balls(reader: _Reader, spec: BoundSpec) -> None:
    for index, certificate in sorted(spec.certificates.items()):
        r, energy = spec.balls[index]
        cert_r = to_fraction(certificate.parameters["r"])
        cert_energy = PiRational.of(certificate.parameters["E"])
        if cert_r != r or cert_energy != energy:
            reader.error(
                f"bound.balls[{index}]",
                f"r and E must match its certificate (r = {cert_r}, E = {cert_energy})",
            )


def _read_bound(reader: _Reader, data: Any) -> Optional[BoundSpec]:
    data = reader.block(data, "bound", _BOUND_FIELDS)
    if data is None:
        return None
    spec = BoundSpec()

    if "balls" in data:
        model_data = reader.block(
            reader.get(data, "bound", "model", {}),
            "bound.model",
            {"n", "lambda", "chern_gen", "mode"},
        )
        if model_data is not None:
            spec.model = _read_model(reader, model_data, "bound.model")
        balls = data["balls"]
        if not isinstance(balls, list) or not balls:
            reader.error("bound.balls", "expected a nonempty list")
            balls = []
        for k, ball in enumerate(balls):
            path = f"bound.balls[{k}]"
            ball = reader.block(ball, path, {"r", "E"})
            if ball is None:
                continue
            r = reader.fraction(ball, path, "r")
            energy = reader.pi_number(ball, path, "E")
            if r is not None and r <= 0:
                reader.error(f"{path}.r", "must be positive")
            if r is not None and energy is not None:
                spec.balls.append((r, energy))
        eps_fraction = reader.fraction(data, "bound", "eps_fraction", Fraction(1, 8))
        if eps_fraction is not None and not 0 < eps_fraction < Fraction(1, 4):
            reader.error("bound.eps_fraction", "must be in (0, 1/4)")
        spec.eps_fraction = eps_fraction
        if "certificates" in data:
            spec.certificates = _read_certificates(reader, data["certificates"], len(balls))
            if len(spec.balls) == len(balls):
                _check_certified_balls(reader, spec)

    if "pb" in data:
        pb = reader.block(data["pb"], "bound.pb", {"d", "r"})
        if pb is not None:
            spec.pb_d = reader.integer(pb, "bound.pb", "d")
            spec.pb_r = reader.fraction(pb, "bound.pb", "r")
            if spec.pb_d is not None and spec.pb_d < 1:
                reader.error("bound.pb.d", "must be >= 1")
            if spec.pb_r is not None and spec.pb_r <= 0:
                reader.error("bound.pb.r", "must be positive")

    if "certificates" in data and "balls" not in data:
        reader.error("bound.certificates", "needs balls")
    if "balls" not in data and "pb" not in data:
        reader.error("bound", "needs balls and/or pb")
    return spec


def _read_output(reader: _Reader, data: Any) -> OutputSpec:
    data = reader.block(data, "output", _OUTPUT_FIELDS)
    if data is None:
        return OutputSpec()
    formats = reader.get(data, "output", "formats", list(DEFAULT_FORMATS))
    if isinstance(formats, str):
        formats = [f.strip() for f in formats.split(",") if f.strip()]
    unknown = [f for f in formats if f not in FORMATS]
    if unknown:
        reader.error("output.formats", f"unknown formats {unknown}; expected {', '.join(FORMATS)}")
    return OutputSpec(
        directory=str(reader.get(data, "output", "dir", DEFAULT_OUT_DIR)),
        formats=tuple(f for f in formats if f in FORMATS),
    )


def _plain(value: Any) -> Any:
    """Fractions back to floats, for consumers that work in floating point."""
    if isinstance(value, Fraction):
        return float(value)
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_plain(v) for v in value]
    return value


def config_from_dict(
    data: Any, command: Optional[str] = None, base_dir: str = ""
) -> RunConfig:
    """
    Validates a configuration mapping.

    Args:
        data (Any): The decoded JSON document.
        command (Optional[str]): Command given on the command line; it takes
            precedence over the "command" field.
        base_dir (str): Directory that relative certificate paths are read from.

    Returns:
        RunConfig: The validated configuration.

    Raises:
        ConfigError: With every problem found.
    """
    reader = _Reader(base_dir)
    data = reader.block(data, "", _TOP_LEVEL)
    if data is None:
        raise ConfigError(reader.errors)

    command = command or data.get("command")
    if command not in COMMANDS:
        reader.errors.append(
            f"command: unknown command {command!r}; valid commands: {', '.join(COMMANDS)}"
        )
        raise ConfigError(reader.errors)

    wanted = COMMAND_BLOCKS[command]
    present = [name for name in ("killer", "cover", "bound") if name in data]
    if present != [wanted]:
        found = ", ".join(present) or "none"
        reader.error(wanted, f"command {command} needs exactly the '{wanted}' block, found {found}")

    config = RunConfig(command=command)
    if wanted == "killer" and "killer" in data:
        config.killer = _read_killer(reader, data["killer"])
    elif wanted == "cover" and "cover" in data:
        config.cover = _read_cover(reader, data["cover"])
    elif wanted == "bound" and "bound" in data:
        config.bound = _read_bound(reader, data["bound"])

    if "probe" in data:
        probe = reader.block(data["probe"], "probe", {"a"})
        if probe is not None:
            config.probe_a = reader.pi_number(probe, "probe", "a")

    if "output" in data:
        config.output = _read_output(reader, data["output"])
    seed = reader.integer(data, "", "seed", 0)
    if seed is not None and seed < 0:
        reader.error("seed", "must be a nonnegative integer")
    config.seed = seed or 0

    if reader.errors:
        raise ConfigError(reader.errors)
    logger.debug("Parsed %s configuration", command)
    return config


def parse_config(path: str, command: Optional[str] = None) -> RunConfig:
    """
    Loads and validates a JSON run configuration.

    Args:
        path (str): Path to the JSON file.
        command (Optional[str]): Command override from the command line.

    Returns:
        RunConfig: The validated configuration.

    Raises:
        FileNotFoundError: If the file does not exist.
        ConfigError: If the file is not valid JSON or fails validation.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Config file does not exist: {path}")
    with open(path, "r") as f:
        try:
            data = json.load(f, parse_float=Fraction)
        except json.JSONDecodeError as e:
            raise ConfigError([f"config: invalid JSON ({e.msg} at line {e.lineno})"])
    return config_from_dict(data, command, base_dir=os.path.dirname(os.path.abspath(path)))
