import os
import logging
from typing import Dict, List, Optional

import yaml

from .core import DeviceSpec, Precision
from .errors import CatalogError, MissingInput, UnknownDevice

logger = logging.getLogger(__name__)

CATALOG_ENV_VAR = "FFT_ENERGY_CATALOG"
BUNDLED_CATALOG = os.path.join(os.path.dirname(__file__), "data", "devices.yaml")
SCHEMA_VERSION = 1


def resolve_catalog_path(path: Optional[str] = None) -> str:
    """
    Decide which catalog file to read.

    Args:
        path: Explicit path (e.g. from --catalog), wins when given

    Returns:
        str: The explicit path, else $FFT_ENERGY_CATALOG, else the bundled file
    """
    if path:
        return path
    env_path = os.environ.get(CATALOG_ENV_VAR)
    if env_path:
        return env_path
    return BUNDLED_CATALOG


class DeviceCatalog:
    """
    Device records loaded from a YAML catalog file.

    Each record becomes a DeviceSpec; the measured mean optimal frequencies
    per precision are kept alongside.
    """

    def __init__(self, devices: Dict[str, DeviceSpec], mean_optimal=None, source: str = "<memory>"):
        self.devices = dict(devices)
        self.source = source
        self._mean_optimal = mean_optimal or {}
        self._by_key = {name.lower(): name for name in self.devices}

    @classmethod
    def from_dict(cls, document, source: str = "<memory>") -> "DeviceCatalog":
        if not isinstance(document, dict) or "devices" not in document:
            raise CatalogError(f"{source}: catalog needs a top-level 'devices' mapping")
        version = document.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise CatalogError(f"{source}: unsupported schema_version {version}")

        devices = {}
        mean_optimal = {}
        for name, record in (document["devices"] or {}).items():
            if not isinstance(record, dict):
                raise CatalogError(f"{source}: device {name!r} must be a mapping")
            try:
                frequencies = record.get("frequencies")
                devices[name] = DeviceSpec(
                    name=name,
                    f_max=float(record["f_max"]),
                    f_min=float(record["f_min"]),
                    step_pattern=tuple(record.get("step_pattern") or ()),
                    boost_clock=_optional_float(record.get("boost_clock")),
                    base_clock=_optional_float(record.get("base_clock")),
                    mem_size=int(record.get("mem_size", 0)),
                    tdp=_optional_float(record.get("tdp")),
                    frequencies=tuple(frequencies) if frequencies else None,
                    high_error=bool(record.get("high_error", False)),
                )
            except KeyError as e:
                raise CatalogError(f"{source}: device {name!r} is missing {e.args[0]!r}") from None
            except (TypeError, ValueError) as e:
                raise CatalogError(f"{source}: device {name!r}: {e}") from None

            optima = {}
            for precision, value in (record.get("mean_optimal") or {}).items():
                optima[Precision.parse(precision)] = _optional_float(value)
            mean_optimal[name] = optima

        logger.debug("Loaded %d devices from %s", len(devices), source)
        return cls(devices, mean_optimal=mean_optimal, source=source)

    def names(self) -> List[str]:
        return sorted(self.devices)

    def get(self, name: str) -> DeviceSpec:
        """Look a device up by name, ignoring case."""
        key = self._by_key.get(str(name).strip().lower())
        if key is None:
            raise UnknownDevice(f"Device {name!r} not in catalog {self.source} (known: {', '.join(self.names())})")
        return self.devices[key]

    def __contains__(self, name) -> bool:
        return str(name).strip().lower() in self._by_key

    def mean_optimal(self, name: str, precision) -> Optional[float]:
        """Catalogued mean optimal frequency, None when unknown or unsupported."""
        spec = self.get(name)
        return self._mean_optimal.get(spec.name, {}).get(Precision.parse(precision))

    def is_high_error(self, name: str) -> bool:
        return self.get(name).high_error


def load_catalog(path: Optional[str] = None) -> DeviceCatalog:
    """
    Load the device catalog.

    Args:
        path: Optional catalog path; see resolve_catalog_path for the fallbacks

    Returns:
        DeviceCatalog: The parsed catalog
    """
    path = resolve_catalog_path(path)
    if not os.path.exists(path):
        raise MissingInput(f"Catalog file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            document = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise CatalogError(f"{path}: invalid YAML: {e}") from None
    return DeviceCatalog.from_dict(document, source=path)


def _optional_float(value) -> Optional[float]:
    return None if value is None else float(value)
