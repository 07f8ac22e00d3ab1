"""World configuration: INI loading, defaults, unit normalisation and validation.

Files use ``[section]`` headers with ``key = value`` lines.  Powers are given
in dBm and converted to watts once here; every other quantity is SI.  RIS
element spacings are given in wavelengths.
"""
import configparser
import dataclasses
import math
from dataclasses import dataclass

from .channel import dbm_to_watts
from .errors import ConfigError


def _bits(v):
    s = str(v).strip().lower()
    if s in ("continuous", "none", "inf", "0"):
        return None
    return int(s)


def _bool(v):
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


# (section, key, default, parser)
FIELDS = [
    ("world", "width", 400.0, float),
    ("world", "height", 400.0, float),
    ("world", "pairs", 4, int),
    ("world", "relays", 120, int),
    ("world", "panels", 16, int),
    ("world", "coverage", 60.0, float),
    ("world", "pair_max_distance", 200.0, float),
    ("world", "p_los", 0.6, float),
    ("radio", "tx_power_dbm", 30.0, float),
    ("radio", "proc_power_dbm", 10.0, float),
    ("radio", "phase_power_dbm", 5.0, float),
    ("radio", "noise_dbm", -90.0, float),
    ("radio", "rician_k_db", 10.0, float),
    ("radio", "rho_l", 10 ** -3.53, float),
    ("radio", "alpha_direct", 4.2, float),
    ("radio", "alpha_ris", 2.0, float),
    ("radio", "wavelength", 0.1, float),
    ("radio", "coherence_slots", 100, int),
    ("radio", "phase_loss", "projection", str),
    ("ris", "elements", 400, int),
    ("ris", "group_size", 25, int),
    ("ris", "phase_bits", 2, _bits),
    ("ris", "spacing_x", 1 / 16, float),
    ("ris", "spacing_y", 1 / 16, float),
    ("traffic", "mean_off", 1.0, float),
    ("traffic", "mean_on", 0.1, float),
    ("traffic", "idle_confidence", 0.1, float),
    ("traffic", "wait_threshold", 0.1, float),
    ("traffic", "eta_form", "literal", str),
    ("request", "packets", 1_000_000, int),
    ("request", "bits_per_packet", 1, int),
    ("request", "delay_budget", 0.05, float),
    ("request", "delay_spread", 0.5, float),
    ("request", "target_ber", 1e-6, float),
    ("scheduler", "beta_weight", 0.5, float),
    ("sim", "slot", 1e-4, float),
    ("sim", "max_slots", 10_000_000, int),
    ("sim", "v_max", 0.0, float),
    ("sim", "retry_slots", 2000, int),
    ("sim", "hop_limit_factor", 4, int),
    ("sim", "throughput_basis", "constellation", str),
    ("sim", "admission_lookahead", True, _bool),
]
_BY_KEY = {f"{s}.{k}": (s, k, d, p) for s, k, d, p in FIELDS}


@dataclass(frozen=True)
class WorldConfig:
    width: float
    height: float
    pairs: int
    relays: int
    panels: int
    coverage: float
    pair_max_distance: float
    p_los: float
    tx_power_dbm: float
    proc_power_dbm: float
    phase_power_dbm: float
    noise_dbm: float
    rician_k_db: float
    rho_l: float
    alpha_direct: float
    alpha_ris: float
    wavelength: float
    coherence_slots: int
    phase_loss: str
    elements: int
    group_size: int
    phase_bits: int | None
    spacing_x: float
    spacing_y: float
    mean_off: float
    mean_on: float
    idle_confidence: float
    wait_threshold: float
    eta_form: str
    packets: int
    bits_per_packet: int
    delay_budget: float
    delay_spread: float
    target_ber: float
    beta_weight: float
    slot: float
    max_slots: int
    v_max: float
    retry_slots: int
    hop_limit_factor: int
    throughput_basis: str
    admission_lookahead: bool

    # linear-unit views
    @property
    def tx_power(self):
        return dbm_to_watts(self.tx_power_dbm)

    @property
    def proc_power(self):
        return dbm_to_watts(self.proc_power_dbm)

    @property
    def phase_power(self):
        return dbm_to_watts(self.phase_power_dbm)

    @property
    def noise(self):
        return dbm_to_watts(self.noise_dbm)

    @property
    def rician_k(self):
        return 10.0 ** (self.rician_k_db / 10.0)

    @property
    def groups(self):
        return self.elements // self.group_size

    @property
    def batch_bits(self):
        return self.packets * self.bits_per_packet

    def replace(self, **kw):
        cfg = dataclasses.replace(self, **kw)
        validate(cfg)
        return cfg

    def as_sections(self):
        out = {}
        for s, k, _, _ in FIELDS:
            v = getattr(self, k)
            out.setdefault(s, {})[k] = "continuous" if (k == "phase_bits" and v is None) else v
        return out


def defaults():
    return WorldConfig(**{k: d for _, k, d, _ in FIELDS})


def _check(cfg):
    errs = []

    def need(ok, key, msg):
        if not ok:
            errs.append(f"{key}: {msg}")

    for key in ("width", "height", "coverage", "pair_max_distance", "wavelength", "rho_l",
                "alpha_direct", "alpha_ris", "mean_off", "mean_on", "delay_budget", "slot"):
        need(getattr(cfg, key) > 0, _path(key), "must be positive")
    for key in ("pairs", "relays", "packets", "bits_per_packet", "elements", "group_size",
                "retry_slots", "hop_limit_factor", "max_slots"):
        need(getattr(cfg, key) >= 1, _path(key), "must be at least 1")
    need(cfg.panels >= 0, "world.panels", "cannot be negative")
    need(0.0 <= cfg.p_los <= 1.0, "world.p_los", "must lie in [0, 1]")
    need(0.0 <= cfg.beta_weight <= 1.0, "scheduler.beta_weight",
         f"beta weight c={cfg.beta_weight} must lie in [0, 1]")
    need(0.0 < cfg.idle_confidence < 1.0, "traffic.idle_confidence", "must lie in (0, 1)")
    need(0.0 < cfg.wait_threshold < 1.0, "traffic.wait_threshold", "must lie in (0, 1)")
    need(0.0 < cfg.target_ber < 1.0, "request.target_ber", "must lie in (0, 1)")
    need(0.0 <= cfg.delay_spread < 2.0, "request.delay_spread", "must lie in [0, 2)")
    need(cfg.v_max >= 0, "sim.v_max", "cannot be negative")
    need(cfg.spacing_x > 0 and cfg.spacing_y > 0, "ris.spacing_x/ris.spacing_y", "must be positive")
    need(cfg.coherence_slots > 2, "radio.coherence_slots", "must exceed 2")
    need(cfg.phase_bits is None or cfg.phase_bits >= 1, "ris.phase_bits", "must be >= 1 or 'continuous'")
    need(cfg.phase_loss in ("projection", "literal"), "radio.phase_loss", "use 'projection' or 'literal'")
    need(cfg.eta_form in ("literal", "corrected"), "traffic.eta_form", "use 'literal' or 'corrected'")
    need(cfg.throughput_basis in ("constellation", "bits"), "sim.throughput_basis",
         "use 'constellation' or 'bits'")
    if cfg.group_size >= 1 and cfg.elements >= 1 and cfg.elements % cfg.group_size:
        errs.append(f"ris.group_size / ris.elements: group size {cfg.group_size} "
                    f"does not divide {cfg.elements} elements")
    if cfg.slot > 0 and min(cfg.mean_off, cfg.mean_on) > 0:
        need(cfg.slot <= min(cfg.mean_off, cfg.mean_on) / 10.0, "sim.slot / traffic.mean_on",
             "slot must be at most a tenth of the shorter mean sojourn")
    if cfg.coverage > 0:
        need(cfg.pair_max_distance > cfg.coverage, "world.pair_max_distance",
             "must exceed world.coverage so pairs can be farther apart than one hop")
        need(cfg.coverage < math.hypot(cfg.width, cfg.height), "world.coverage",
             "exceeds the area diagonal, so no pair can be out of range")
    return errs


def _path(key):
    for s, k, _, _ in FIELDS:
        if k == key:
            return f"{s}.{k}"
    return key


def validate(cfg):
    errs = _check(cfg)
    if errs:
        raise ConfigError(errs)
    return cfg


def _resolve(key):
    if key in _BY_KEY:
        return _BY_KEY[key]
    hits = [v for name, v in _BY_KEY.items() if name.split(".", 1)[1] == key]
    if len(hits) == 1:
        return hits[0]
    return None


def apply_values(cfg, pairs):
    """Apply ``{key: text}`` updates; keys are ``section.key`` or a unique bare key."""
    updates, errs = {}, []
    for key, text in pairs.items():
        field_def = _resolve(key.strip())
        if field_def is None:
            errs.append(f"{key}: unknown key")
            continue
        s, k, _, parse = field_def
        try:
            updates[k] = parse(text) if isinstance(text, str) else text
        except (TypeError, ValueError) as exc:
            errs.append(f"{s}.{k}: cannot parse {text!r} ({exc})")
    if errs:
        raise ConfigError(errs)
    cfg = dataclasses.replace(cfg, **updates)
    return validate(cfg)


def parse_overrides(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError([f"{item}: override must look like key=value"])
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_text(text, base=None):
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from exc
    pairs = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            pairs[f"{section}.{key}"] = value
    return apply_values(base or defaults(), pairs)


def load_file(path, base=None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([f"{path}: {exc.strerror}"]) from exc
    return load_text(text, base)


def to_text(cfg):
    lines = []
    for section, items in cfg.as_sections().items():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}" for k, v in items.items())
        lines.append("")
    return "\n".join(lines)
