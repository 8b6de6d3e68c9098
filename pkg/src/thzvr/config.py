"""Network configuration: one flat record with every model parameter.

Configurations are read from INI files with four sections, ``[channel]``,
``[blockage]``, ``[queues]`` and ``[sim]``. Every key has a default; unknown
keys are errors.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import logging
import math
import re
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

from .blockage import BlockageParams, p_los_exponent
from .channel import ChannelParams, link_budget
from .delay import QueueParams, tx_delay_moments
from .errors import ConfigError, InstabilityError, ParseError
from .geometry import equivalent_ppp_intensity

log = logging.getLogger(__name__)

SECTIONS = ("channel", "blockage", "queues", "sim")
INTERFERENCE_MODES = ("per_service", "per_session", "geometric")
ORIENTATION_MODES = ("uniform", "fixed")


def _meta(section: str, unit: str = "", doc: str = ""):
    return {"section": section, "unit": unit, "doc": doc}


@dataclass(frozen=True)
class NetworkConfig:
    # channel
    frequency: float = field(default=1e12, metadata=_meta("channel", "Hz", "carrier frequency"))
    absorption: float = field(default=0.0016, metadata=_meta("channel", "1/m", "molecular absorption coefficient"))
    bandwidth: float = field(default=10e9, metadata=_meta("channel", "Hz", "channel bandwidth"))
    p_tx: float = field(default=1.0, metadata=_meta("channel", "W", "serving station transmit power"))
    p_interferer: float = field(default=1.0, metadata=_meta("channel", "W", "interferer transmit power"))
    temperature: float = field(default=300.0, metadata=_meta("channel", "K", "system temperature"))
    link_distance: float = field(default=1.0, metadata=_meta("channel", "m", "user to serving station distance"))
    interference_radius: float = field(default=6.5, metadata=_meta("channel", "m", "radius of non-negligible interference"))
    hard_core: float = field(default=1.0, metadata=_meta("channel", "m", "minimum station separation"))
    sbs_density: float = field(default=0.25, metadata=_meta("channel", "1/m^2", "station intensity"))
    # blockage
    enabled: bool = field(default=True, metadata=_meta("blockage", "", "false means a LoS link is always available"))
    self_block_angle: float = field(default=math.pi, metadata=_meta("blockage", "rad", "body blockage sector"))
    orientation: str = field(default="uniform", metadata=_meta("blockage", "", "uniform: sector redrawn per epoch; fixed: always self_block_angle"))
    blocker_density: float = field(default=0.125, metadata=_meta("blockage", "1/m^2", "dynamic blocker intensity"))
    blocker_speed: float = field(default=1.5, metadata=_meta("blockage", "m/s", "dynamic blocker speed"))
    departure_rate: float = field(default=2.0, metadata=_meta("blockage", "1/s", "rate at which a blockage clears"))
    h_blocker: float = field(default=1.8, metadata=_meta("blockage", "m", "blocker height"))
    h_receiver: float = field(default=1.4, metadata=_meta("blockage", "m", "headset height"))
    h_sbs: float = field(default=3.0, metadata=_meta("blockage", "m", "station height"))
    mobility_period: float = field(default=0.05, metadata=_meta("blockage", "s", "interval between redraws of the user's surroundings"))
    # queues
    arrival_rate: float = field(default=0.1, metadata=_meta("queues", "1/s", "VR content request rate"))
    service_rate: float = field(default=700.0, metadata=_meta("queues", "1/s", "edge queue service rate"))
    content_bits: float = field(default=10e6, metadata=_meta("queues", "bit", "content size"))
    q2_arrival_rate: float | None = field(default=None, metadata=_meta("queues", "1/s", "base-station queue arrival rate; auto = edge output rate"))
    beam_tracking_delay: float = field(default=0.0, metadata=_meta("queues", "s", "constant added delay"))
    # sim
    session_length: float = field(default=600.0, metadata=_meta("sim", "s", "VR session duration"))
    runs: int = field(default=2500, metadata=_meta("sim", "", "Monte Carlo sessions"))
    seed: int = field(default=1, metadata=_meta("sim", "", "base seed"))
    region_side: float = field(default=20.0, metadata=_meta("sim", "m", "side of the square room"))
    interference_mode: str = field(default="per_service", metadata=_meta("sim", "", "per_service | per_session | geometric"))
    requests_per_session: int | None = field(default=None, metadata=_meta("sim", "", "block size of the tail model; auto = round(session_length * arrival_rate)"))
    grid_points: int = field(default=2**14, metadata=_meta("sim", "", "points of the delay grid"))
    span_factor: float = field(default=20.0, metadata=_meta("sim", "", "grid end as a multiple of the mean delay"))
    series_tol: float = field(default=1e-8, metadata=_meta("sim", "", "truncation tolerance of the waiting-time series"))

    # -- derived parameter groups ------------------------------------------

    def channel_params(self) -> ChannelParams:
        return ChannelParams(
            frequency=self.frequency, absorption=self.absorption, bandwidth=self.bandwidth,
            p_tx=self.p_tx, p_interferer=self.p_interferer, temperature=self.temperature,
            link_distance=self.link_distance, interference_radius=self.interference_radius,
            hard_core=self.hard_core, sbs_density=self.sbs_density,
        )

    def blockage_params(self) -> BlockageParams:
        return BlockageParams(
            self_block_angle=self.self_block_angle, blocker_density=self.blocker_density,
            blocker_speed=self.blocker_speed, departure_rate=self.departure_rate,
            h_blocker=self.h_blocker, h_receiver=self.h_receiver, h_sbs=self.h_sbs,
            interference_radius=self.interference_radius,
            sbs_density=equivalent_ppp_intensity(self.sbs_density, self.hard_core),
        )

    def queue_params(self) -> QueueParams:
        return QueueParams(
            arrival_rate=self.arrival_rate, service_rate=self.service_rate,
            content_bits=self.content_bits, q2_arrival_rate=self.q2_arrival_rate,
            beam_tracking_delay=self.beam_tracking_delay,
        )

    @property
    def block_size(self) -> int:
        if self.requests_per_session is not None:
            return int(self.requests_per_session)
        return max(3, int(round(self.session_length * self.arrival_rate)))

    def with_(self, **changes) -> "NetworkConfig":
        return replace(self, **changes)

    # -- validation --------------------------------------------------------

    def validate(self) -> "NetworkConfig":
        positive = ["frequency", "bandwidth", "p_tx", "p_interferer", "temperature", "link_distance",
                    "interference_radius", "hard_core", "departure_rate", "arrival_rate", "service_rate",
                    "content_bits", "session_length", "region_side", "mobility_period", "span_factor",
                    "series_tol", "h_blocker", "h_receiver", "h_sbs"]
        for name in positive:
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive finite number, got {v!r}")
        for name in ("absorption", "sbs_density", "blocker_density", "blocker_speed", "beam_tracking_delay"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be nonnegative, got {v!r}")
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if self.grid_points < 16:
            raise ConfigError("grid_points must be at least 16")
        if self.interference_mode not in INTERFERENCE_MODES:
            raise ConfigError(f"interference_mode must be one of {INTERFERENCE_MODES}")
        if self.orientation not in ORIENTATION_MODES:
            raise ConfigError(f"orientation must be one of {ORIENTATION_MODES}")
        if self.requests_per_session is not None and self.requests_per_session < 3:
            raise ConfigError("requests_per_session must be at least 3")
        if not self.service_rate > self.arrival_rate:
            raise ConfigError(
                f"stability requires mu1 > lambda1 (service_rate {self.service_rate} must exceed "
                f"arrival_rate {self.arrival_rate})"
            )
        if self.sbs_density * math.pi * self.hard_core**2 >= 1:
            raise ConfigError("hard-core deployment infeasible: sbs_density * pi * hard_core^2 must be < 1")
        self.channel_params().validate()
        self.blockage_params().validate()
        if p_los_exponent(self.blockage_params()) > 0:
            raise ConfigError("LoS-probability exponent must be nonpositive")
        link = link_budget(self.channel_params())
        q = self.queue_params().validate()
        e_alpha = tx_delay_moments(link, q, None)[0]
        rho2 = q.lambda2 * e_alpha
        if rho2 >= 1:
            raise ConfigError(f"stability requires rho2 < 1, got rho2 = {rho2:.4g}")
        return self

    # -- identity ----------------------------------------------------------

    def to_ini(self) -> str:
        lines = []
        for section in SECTIONS:
            lines.append(f"[{section}]")
            for f in fields(self):
                if f.metadata["section"] == section:
                    lines.append(f"{f.name} = {_format_value(getattr(self, f.name))}")
            lines.append("")
        return "\n".join(lines)

    def params_hash(self) -> str:
        return hashlib.sha256(self.to_ini().encode()).hexdigest()[:12]


def _format_value(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

FIELDS = {f.name: f for f in fields(NetworkConfig)}


def _key_line(text: str, section: str, key: str) -> int | None:
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"^\[(.+)\]$", s)
        if m:
            current = m.group(1).strip()
            continue
        if current == section and re.match(rf"^{re.escape(key)}\s*[=:]", s):
            return i
    return None


def convert_value(name: str, raw: str):
    f = FIELDS[name]
    t = str(f.type)
    raw = raw.strip()
    if "bool" in t:
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if "None" in t and raw.lower() == "auto":
        return None
    if "int" in t and "float" not in t:
        v = float(raw)
        if v != int(v):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(v)
    if "float" in t:
        return float(raw)
    return raw


def parse_config_text(text: str, source: str = "<string>") -> NetworkConfig:
    """Parse INI text into a validated :class:`NetworkConfig`."""
    if not text.strip():
        raise ParseError(f"{source}: configuration is empty")
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ParseError(f"{source}: {exc}") from exc
    if not cp.sections():
        raise ParseError(f"{source}: no sections found")
    values = {}
    for section in cp.sections():
        if section not in SECTIONS:
            raise ParseError(f"{source}: line {_key_line_section(text, section)}: unknown section [{section}]")
        for key, raw in cp.items(section):
            line = _key_line(text, section, key)
            f = FIELDS.get(key)
            if f is None or f.metadata["section"] != section:
                raise ParseError(f"{source}: line {line}: unknown key {key!r} in [{section}]")
            try:
                values[key] = convert_value(key, raw)
            except ValueError as exc:
                raise ParseError(f"{source}: line {line}: {key}: {exc}") from exc
    cfg = NetworkConfig(**values)
    defaults = sorted(set(FIELDS) - set(values))
    if defaults:
        log.info("%s: defaults used for %s", source, ", ".join(defaults))
    return cfg.validate()


def _key_line_section(text: str, section: str) -> int | None:
    for i, line in enumerate(text.splitlines(), 1):
        if line.strip() == f"[{section}]":
            return i
    return None


def parse_config(path) -> NetworkConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {p}: {exc}") from exc
    return parse_config_text(text, source=str(p))


PRESETS = ("table2_1thz", "table2_0p2thz")


def load_preset(name: str) -> NetworkConfig:
    if name not in PRESETS:
        raise ParseError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files("thzvr").joinpath("presets", f"{name}.ini").read_text(encoding="utf-8")
    return parse_config_text(text, source=f"preset:{name}")


def resolve_config(source: str) -> NetworkConfig:
    """A preset name or a path to an INI file."""
    if source in PRESETS:
        return load_preset(source)
    return parse_config(source)


def describe_fields() -> list[tuple[str, str, str, str, str]]:
    """(section, key, default, unit, description) for documentation."""
    out = []
    for f in fields(NetworkConfig):
        out.append((f.metadata["section"], f.name, _format_value(f.default), f.metadata["unit"], f.metadata["doc"]))
    return out
