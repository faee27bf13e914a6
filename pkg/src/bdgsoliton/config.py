"""Run configuration: YAML document with complex numbers written as [re, im] pairs."""
from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigParseError
from .scattering_data import Background, Soliton, Symmetry, ValidatedSpec, apply_symmetry, validate

DEFAULT_TOLERANCES = {
    "orthonormality": 1e-8,
    "gap_residual": 1e-10,
    "reflection": 1e-6,
    "identities": 1e-8,
    "hermiticity": 1e-12,
    "recurrence": 1e-10,
    "asymptote_plus": 1e-8,
    "window": 1e-6,
    "class_symmetry": 1e-11,
    "zs_ratio_low": 3.5,
    "zs_ratio_high": 4.5,
}
# window errors are only gated once the solitons are this far apart (in decay lengths)
WINDOW_SEPARATION = 20.0


@dataclass
class GridConfig:
    x_min: float = -10.0
    x_max: float = 10.0
    n_points: int = 1001

    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)


@dataclass
class ScanConfig:
    s_min: float = 0.2
    s_max: float = 5.0
    count: int = 41
    guard_band: float = 1e-3


@dataclass
class RunConfig:
    m: float
    delta_minus: np.ndarray
    symmetry: Symmetry
    solitons: list
    grid: GridConfig = field(default_factory=GridConfig)
    s_scan: ScanConfig = field(default_factory=ScanConfig)
    times: list = field(default_factory=list)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    nu: list | None = None
    split: list | None = None
    complete_pairs: bool = False
    seed: int = 0

    def spec(self) -> ValidatedSpec:
        bg = Background(self.m, self.delta_minus, self.symmetry)
        if self.complete_pairs and self.symmetry is Symmetry.ANTISYMMETRIC:
            return apply_symmetry(bg, self.solitons, complete=True)
        return validate(bg, self.solitons)

    def tolerance(self, key: str, scale: float = 1.0) -> float:
        val = self.tolerances[key]
        return val if key.startswith("zs_ratio") else val * scale

    def to_dict(self) -> dict:
        """Fully resolved configuration, in the same layout the parser reads."""
        return {
            "background": {
                "m": self.m,
                "delta_minus": _matrix_out(self.delta_minus),
                "symmetry": self.symmetry.value,
            },
            "solitons": [
                {"theta": float(s.theta), "p": _vector_out(s.p_hat), "x": float(s.x)} for s in self.solitons
            ],
            "grid": asdict(self.grid),
            "s_scan": asdict(self.s_scan),
            "times": [float(t) for t in self.times],
            "tolerances": dict(self.tolerances),
            "filling": {"nu": self.nu, "split": self.split},
            "complete_pairs": self.complete_pairs,
            "seed": self.seed,
        }


def _complex(v, where: str) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(c, (int, float)) for c in v):
        return complex(v[0], v[1])
    raise ConfigParseError(f"{where}: expected a number or an [re, im] pair, got {v!r}")


def _vector(v, where: str) -> np.ndarray:
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigParseError(f"{where}: expected a list of entries")
    return np.array([_complex(c, f"{where}[{i}]") for i, c in enumerate(v)])


def _matrix(v, where: str) -> np.ndarray:
    if isinstance(v, (int, float)) or (isinstance(v, list) and len(v) == 2 and all(isinstance(c, (int, float)) for c in v)):
        return np.array([[_complex(v, where)]])
    if not isinstance(v, list) or not all(isinstance(r, list) for r in v):
        raise ConfigParseError(f"{where}: expected a list of rows")
    rows = [_vector(r, f"{where}[{i}]") for i, r in enumerate(v)]
    if len({r.size for r in rows}) != 1 or rows[0].size != len(rows):
        raise ConfigParseError(f"{where}: matrix must be square")
    return np.vstack(rows)


def _vector_out(v) -> list:
    return [[float(c.real), float(c.imag)] for c in np.asarray(v, dtype=complex)]


def _matrix_out(a) -> list:
    return [_vector_out(row) for row in np.asarray(a, dtype=complex)]


def _section(raw: dict, key: str, cls):
    data = raw.get(key) or {}
    if not isinstance(data, dict):
        raise ConfigParseError(f"{key}: expected a mapping")
    known = set(cls.__dataclass_fields__)
    extra = set(data) - known
    if extra:
        raise ConfigParseError(f"{key}: unknown keys {sorted(extra)}")
    try:
        return cls(**{k: type(getattr(cls(), k))(v) for k, v in data.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigParseError(f"{key}: {exc}") from exc


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigParseError("config must be a mapping")
    bg = raw.get("background")
    if not isinstance(bg, dict) or "m" not in bg:
        raise ConfigParseError("background.m is required")
    try:
        m = float(bg["m"])
        symmetry = Symmetry.parse(bg.get("symmetry", "nonsymmetric"))
    except (TypeError, ValueError) as exc:
        raise ConfigParseError(f"background: {exc}") from exc
    dm = _matrix(bg.get("delta_minus", 1.0), "background.delta_minus")
    solitons = []
    for i, s in enumerate(raw.get("solitons") or []):
        if not isinstance(s, dict) or not {"theta", "p", "x"} <= set(s):
            raise ConfigParseError(f"solitons[{i}]: needs theta, p and x")
        try:
            theta, x = float(s["theta"]), float(s["x"])
        except (TypeError, ValueError) as exc:
            raise ConfigParseError(f"solitons[{i}]: {exc}") from exc
        solitons.append(Soliton(theta, _vector(s["p"], f"solitons[{i}].p"), x))
    grid = _section(raw, "grid", GridConfig)
    scan = _section(raw, "s_scan", ScanConfig)
    if grid.n_points < 11:
        raise ConfigParseError("grid.n_points must be at least 11")
    if grid.x_max <= grid.x_min:
        raise ConfigParseError("grid.x_max must exceed grid.x_min")
    if scan.count < 5:
        raise ConfigParseError("s_scan.count must be at least 5")
    tol = dict(DEFAULT_TOLERANCES)
    user_tol = raw.get("tolerances") or {}
    unknown = set(user_tol) - set(tol)
    if unknown:
        raise ConfigParseError(f"tolerances: unknown keys {sorted(unknown)}")
    filling = raw.get("filling") or {}
    nu = filling.get("nu")
    split = filling.get("split")
    try:
        tol.update({k: float(v) for k, v in user_tol.items()})
        times = [float(t) for t in raw.get("times") or []]
        nu = None if nu is None else [float(v) for v in nu]
        split = None if split is None else [float(v) for v in split]
        seed = int(raw.get("seed", 0))
    except (TypeError, ValueError) as exc:
        raise ConfigParseError(str(exc)) from exc
    return RunConfig(
        m=m,
        delta_minus=dm,
        symmetry=symmetry,
        solitons=solitons,
        grid=grid,
        s_scan=scan,
        times=times,
        tolerances=tol,
        nu=nu,
        split=split,
        complete_pairs=bool(raw.get("complete_pairs", False)),
        seed=seed,
    )


def load_config(path) -> RunConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigParseError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigParseError(f"malformed config: {exc}") from exc
    return parse_config(copy.deepcopy(raw))
