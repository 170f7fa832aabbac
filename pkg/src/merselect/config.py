"""Run configuration: INI file sections merged under command-line flags.

Schema (every key optional; unknown sections or keys are rejected)::

    [run]       seed, folds, estimator, target, step, ratio, jobs
    [svr]       C, epsilon, kernel, gamma, tol, max_passes
    [forest]    n_trees, criterion, max_depth, min_samples_split, features_per_split, bootstrap
    [adapter]   delimiter, extension, time_column, annotation_delimiter, id_column, sample_pattern,
                sample_time_scale, t_start, t_end, mismatch_tolerance, feature_names, target_range
    [synthetic] n_samples, n_informative, n_noise, coefficient_range, noise_sigma
    [dataset]   source_range
    [hevner]    labels, mode, region.<label> = v_min, v_max, a_min, a_max

Lists and intervals are comma separated; ``none`` means "unset".
"""
from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .dataset import AdapterConfig, SyntheticSpec
from .emotion import HevnerLayout, RectRegion
from .forest import ForestParams
from .svr import SvrParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunSettings:
    seed: Optional[int] = None
    folds: int = 10
    estimator: str = "forest"
    target: str = "valence"
    step: int = 1
    ratio: float = 0.7
    jobs: int = 1


@dataclass(frozen=True)
class RunConfig:
    run: RunSettings = RunSettings()
    svr: SvrParams = SvrParams()
    forest: ForestParams = ForestParams()
    adapter: AdapterConfig = AdapterConfig()
    synthetic: SyntheticSpec = SyntheticSpec()
    source_range: tuple = (1.0, 9.0)
    hevner: HevnerLayout = field(default_factory=HevnerLayout)

    def with_run(self, **overrides) -> "RunConfig":
        """Apply flag values; ``None`` means the flag was not given."""
        given = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, run=replace(self.run, **given))

    def to_dict(self) -> dict:
        return {
            # the worker count cannot change results; it is recorded with the run metadata instead
            "run": {k: v for k, v in asdict(self.run).items() if k != "jobs"},
            "svr": asdict(self.svr),
            "forest": asdict(self.forest),
            "adapter": _jsonable(asdict(self.adapter)),
            "synthetic": _jsonable(asdict(self.synthetic)),
            "dataset": {"source_range": list(self.source_range)},
            "hevner": {
                "labels": list(self.hevner.labels),
                "mode": self.hevner.mode,
                "regions": [asdict(r) for r in self.hevner.regions],
            },
        }


def _jsonable(d: dict) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def _parse_value(raw: str, default, section: str, key: str):
    text = raw.strip()
    where = f"[{section}] {key}"
    if text.lower() == "none":
        return None
    try:
        if isinstance(default, bool):
            if text.lower() in ("true", "yes", "1", "on"):
                return True
            if text.lower() in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            parts = [p.strip() for p in text.split(",")]
            if default and all(isinstance(v, float) for v in default):
                return tuple(float(p) for p in parts)
            return tuple(parts)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r}") from None
    return text


# keys whose defaults are None or mixed-type, so the default cannot tell the type
_SPECIAL = {
    ("run", "seed"): int,
    ("svr", "gamma"): lambda s: s if s == "auto" else float(s),
    ("svr", "max_passes"): int,
    ("forest", "max_depth"): int,
    ("forest", "features_per_split"): lambda s: s if s == "all" else int(s),
    ("adapter", "feature_names"): lambda s: tuple(p.strip() for p in s.split(",")),
    ("adapter", "target_range"): lambda s: tuple(float(p) for p in s.split(",")),
}


def _section_values(parser, section: str, cls):
    defaults = {f.name: f.default for f in fields(cls)}
    out = {}
    for key, raw in parser.items(section):
        if key not in defaults:
            raise ConfigError(f"[{section}]: unknown key {key!r}")
        special = _SPECIAL.get((section, key))
        if special is not None and raw.strip().lower() != "none":
            try:
                out[key] = special(raw.strip())
            except ValueError:
                raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None
        else:
            out[key] = _parse_value(raw, defaults[key], section, key)
    return out


def _build(section, cls, values):
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc


def _hevner(parser) -> HevnerLayout:
    kwargs, regions = {}, []
    for key, raw in parser.items("hevner"):
        if key == "labels":
            kwargs["labels"] = tuple(p.strip() for p in raw.split(","))
        elif key == "mode":
            kwargs["mode"] = raw.strip()
        elif key.startswith("region."):
            try:
                bounds = [float(p) for p in raw.split(",")]
                regions.append(RectRegion(key[len("region."):], *bounds))
            except (TypeError, ValueError):
                raise ConfigError(f"[hevner] {key}: expected v_min, v_max, a_min, a_max") from None
        else:
            raise ConfigError(f"[hevner]: unknown key {key!r}")
    kwargs["regions"] = tuple(regions)
    return _build("hevner", HevnerLayout, kwargs)


SECTIONS = {"run": RunSettings, "svr": SvrParams, "forest": ForestParams, "adapter": AdapterConfig,
            "synthetic": SyntheticSpec}


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    parts = {}
    for section in parser.sections():
        if section in SECTIONS:
            parts[section] = _build(section, SECTIONS[section], _section_values(parser, section, SECTIONS[section]))
        elif section == "dataset":
            for key, raw in parser.items(section):
                if key != "source_range":
                    raise ConfigError(f"[dataset]: unknown key {key!r}")
                parts["source_range"] = _SPECIAL[("adapter", "target_range")](raw)
        elif section == "hevner":
            parts["hevner"] = _hevner(parser)
        else:
            raise ConfigError(f"unknown section [{section}]")
    return RunConfig(**parts)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    return parse_config(path.read_text(encoding="utf-8"))
