"""Experiment configuration: JSON loading, validation, canonical hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .distance import DtwParams
from .errors import ConfigError
from .forecast import (FORECASTER_KINDS, RECONCILIATIONS, ForecasterSpec,
                       MintConfig, method_label)
from .hts import HtsDataset, load_dataset
from .transforms import (DEFAULT_BASE_SIGMA, DEFAULT_KNOTS, DEFAULT_NUM_SAMPLES,
                         DEFAULT_NUM_VERSIONS, KINDS, ordered_kinds)


@dataclass(frozen=True)
class DatasetConfig:
    name: str
    data_path: Path
    schema_path: Path
    seasonal_period: int = 1
    horizon: int = 1

    def load(self) -> HtsDataset:
        return load_dataset(self.data_path, self.schema_path, name=self.name,
                            seasonal_period=self.seasonal_period)


@dataclass(frozen=True)
class MethodConfig:
    forecaster: ForecasterSpec
    reconciliation: str

    @property
    def label(self) -> str:
        return method_label(self.forecaster, self.reconciliation)


@dataclass(eq=False)
class ExperimentConfig:
    datasets: list[DatasetConfig]
    methods: list[MethodConfig]
    kinds: tuple[str, ...] = KINDS
    base_sigma: float = DEFAULT_BASE_SIGMA
    knots: int = DEFAULT_KNOTS
    num_versions: int = DEFAULT_NUM_VERSIONS
    num_samples: int = DEFAULT_NUM_SAMPLES
    dtw: DtwParams = DtwParams()
    dtw_normalize: bool = True
    dtw_all_samples: bool = False
    mint: MintConfig = MintConfig()
    master_seed: int = 0
    output_dir: Path = Path("out")
    dump_forecasts: bool = False

    def __post_init__(self):
        if not self.datasets:
            raise ConfigError("config needs at least one dataset")
        if not self.methods:
            raise ConfigError("config needs at least one method")
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"duplicate method labels: {sorted(labels)}")
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate dataset names: {sorted(names)}")
        if self.num_versions < 1 or self.num_samples < 1:
            raise ConfigError("num_versions and num_samples must be >= 1")
        if self.base_sigma <= 0:
            raise ConfigError("base_sigma must be > 0")

    def canonical(self) -> dict:
        """Semantically meaningful fields in a stable nested form.

        The output directory is a destination, not an input, so it is
        excluded and two configs differing only there share a hash.
        """
        return {
            "datasets": [
                {"name": d.name, "data": str(d.data_path), "schema": str(d.schema_path),
                 "seasonal_period": d.seasonal_period, "horizon": d.horizon}
                for d in self.datasets
            ],
            "methods": [
                {"kind": m.forecaster.kind, "order": m.forecaster.order,
                 "reconciliation": m.reconciliation}
                for m in self.methods
            ],
            "transforms": {
                "kinds": list(self.kinds), "base_sigma": self.base_sigma,
                "knots": self.knots, "num_versions": self.num_versions,
                "num_samples": self.num_samples,
            },
            "dtw": {"q": self.dtw.q, "window": self.dtw.window,
                    "normalize": self.dtw_normalize,
                    "all_samples": self.dtw_all_samples},
            "mint": {"covariance": self.mint.covariance,
                     "shrinkage_intensity": self.mint.shrinkage_intensity},
            "master_seed": self.master_seed,
            "dump_forecasts": self.dump_forecasts,
        }

    def hash(self) -> str:
        canonical = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def run_dir(self) -> Path:
        return Path(self.output_dir) / self.hash()

    def method_labels(self) -> list[str]:
        return [m.label for m in self.methods]


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"{context}: missing required key {key!r}")
    return mapping[key]


def _resolve(base_dir: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base_dir / path


def config_from_mapping(raw: dict, base_dir: Path = Path(".")) -> ExperimentConfig:
    """Build a validated config from parsed JSON; paths resolve against

    ``base_dir`` (normally the config file's directory).
    """
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    try:
        datasets = []
        for entry in _require(raw, "datasets", "config"):
            datasets.append(DatasetConfig(
                name=str(_require(entry, "name", "dataset")),
                data_path=_resolve(base_dir, _require(entry, "data", "dataset")),
                schema_path=_resolve(base_dir, _require(entry, "schema", "dataset")),
                seasonal_period=int(entry.get("seasonal_period", 1)),
                horizon=int(_require(entry, "horizon", "dataset")),
            ))
        methods = []
        for entry in _require(raw, "methods", "config"):
            kind = str(_require(entry, "kind", "method"))
            if kind not in FORECASTER_KINDS:
                raise ConfigError(f"unknown forecaster kind {kind!r}")
            reconciliation = str(entry.get("reconciliation", "bottom_up"))
            if reconciliation not in RECONCILIATIONS:
                raise ConfigError(f"unknown reconciliation {reconciliation!r}")
            order = entry.get("order")
            spec = ForecasterSpec(kind=kind, order=None if order is None else int(order))
            methods.append(MethodConfig(forecaster=spec, reconciliation=reconciliation))

        transforms = raw.get("transforms", {})
        kinds = ordered_kinds(transforms.get("kinds", KINDS))
        dtw_raw = raw.get("dtw", {})
        window = dtw_raw.get("window")
        mint_raw = raw.get("mint", {})
        config = ExperimentConfig(
            datasets=datasets,
            methods=methods,
            kinds=kinds,
            base_sigma=float(transforms.get("base_sigma", DEFAULT_BASE_SIGMA)),
            knots=int(transforms.get("knots", DEFAULT_KNOTS)),
            num_versions=int(transforms.get("num_versions", DEFAULT_NUM_VERSIONS)),
            num_samples=int(transforms.get("num_samples", DEFAULT_NUM_SAMPLES)),
            dtw=DtwParams(q=float(dtw_raw.get("q", 2.0)),
                          window=None if window is None else int(window)),
            dtw_normalize=bool(dtw_raw.get("normalize", True)),
            dtw_all_samples=bool(dtw_raw.get("all_samples", False)),
            mint=MintConfig(
                covariance=str(mint_raw.get("covariance", "shrinkage")),
                shrinkage_intensity=mint_raw.get("shrinkage_intensity"),
            ),
            master_seed=int(raw.get("master_seed", 0)),
            output_dir=_resolve(base_dir, str(raw.get("output_dir", "out"))),
            dump_forecasts=bool(raw.get("dump_forecasts", False)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc
    return config


def load_config(path, seed_override: int | None = None) -> ExperimentConfig:
    """Read a JSON config file; ``seed_override`` replaces the master seed

    before hashing, so an overridden run gets its own output directory.
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if seed_override is not None:
        raw["master_seed"] = int(seed_override)
    return config_from_mapping(raw, base_dir=path.parent)


def validate_datasets(config: ExperimentConfig) -> dict[str, HtsDataset]:
    """Load every dataset and check experiment-wide preconditions."""
    loaded: dict[str, HtsDataset] = {}
    for entry in config.datasets:
        try:
            dataset = entry.load()
        except Exception as exc:
            raise ConfigError(f"dataset {entry.name!r}: {exc}") from exc
        if entry.horizon >= dataset.length:
            raise ConfigError(
                f"dataset {entry.name!r}: horizon {entry.horizon} must be "
                f"smaller than series length {dataset.length}"
            )
        if entry.horizon < 1:
            raise ConfigError(f"dataset {entry.name!r}: horizon must be >= 1")
        loaded[entry.name] = dataset
    return loaded
