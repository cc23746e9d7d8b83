"""Benchmark generators (Mars, air refueling, delivery) and toy instances."""
from __future__ import annotations

import json
from pathlib import Path

from .air import AirConfigError, gen_air
from .delivery import DeliveryConfigError, gen_delivery
from .mars import MarsConfigError, gen_mars, walking_bound

CONFIG_DIR = Path(__file__).parent / "configs"

FAMILIES = ("mars", "air", "delivery")


def shipped_configs() -> dict[str, Path]:
    return {p.stem: p for p in sorted(CONFIG_DIR.glob("*.json"))}


def load_config(name_or_path) -> dict:
    p = Path(name_or_path)
    if not p.exists():
        p = CONFIG_DIR / f"{name_or_path}.json"
    return json.loads(p.read_text(encoding="utf-8"))


def family_of(config_name: str) -> str:
    fam = config_name.split("_")[0]
    if fam not in FAMILIES:
        raise ValueError(f"cannot tell the family of config {config_name!r}")
    return fam


def generate(family: str, cfg: dict | None = None) -> tuple[dict, dict | None]:
    """(automaton document, QSP document or None) for a benchmark family."""
    if family == "mars":
        return gen_mars(cfg), None
    if family == "air":
        return gen_air(cfg), None
    if family == "delivery":
        return gen_delivery(cfg)
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


__all__ = [
    "AirConfigError", "DeliveryConfigError", "MarsConfigError", "CONFIG_DIR", "FAMILIES",
    "gen_air", "gen_delivery", "gen_mars", "generate", "load_config", "shipped_configs", "family_of", "walking_bound",
]
