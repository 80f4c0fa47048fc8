"""Service configuration from environment variables and flag overrides.

Precedence is flags over environment over defaults. The recognized
environment variables are INTERFACE (accepted for compatibility, unused:
ingestion is file replay only), IDS_LOG_DIS (log directory; historical
spelling) and ELASTICSEARCH_USERNAME_PASSWORD ("user:password" for HTTP
basic auth).
"""

from __future__ import annotations

import ipaddress
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .anomaly import AnomalyConfig
from .flows import parse_networks

DEFAULT_LOG_DIR = "./eds-logs"
DEFAULT_STORE_DIR = "./eds-store"
DEFAULT_HOME_NETS = ("10.0.0.0/8", "192.168.0.0/16", "172.16.0.0/12")
DEFAULT_HTTP_PORT = 8440


class BadCidr(ValueError):
    pass


class UnwritableLogDir(OSError):
    pass


@dataclass(frozen=True)
class EdsConfig:
    interface: str | None = None
    log_dir: Path = Path(DEFAULT_LOG_DIR)
    store_dir: Path = Path(DEFAULT_STORE_DIR)
    home_nets: tuple[ipaddress.IPv4Network, ...] = ()
    ruleset_path: Path | None = None
    anomaly: AnomalyConfig = field(default_factory=AnomalyConfig)
    credentials: str | None = None
    http_port: int = DEFAULT_HTTP_PORT

    def __post_init__(self) -> None:
        if not self.home_nets:
            raise ValueError("home_nets must be non-empty")
        if self.credentials is not None and ":" not in self.credentials:
            raise ValueError('credentials must look like "user:password"')
        if not 1 <= self.http_port <= 65535:
            raise ValueError("http_port out of range")


def _parse_nets(specs) -> tuple[ipaddress.IPv4Network, ...]:
    try:
        return tuple(parse_networks(specs))
    except ValueError as err:
        raise BadCidr(str(err)) from None


def _ensure_writable(log_dir: Path) -> Path:
    try:
        log_dir.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise UnwritableLogDir(f"{log_dir}: {err}") from None
    if not os.access(log_dir, os.W_OK):
        raise UnwritableLogDir(str(log_dir))
    return log_dir


def load_config(
    env: Mapping[str, str] | None = None,
    *,
    interface: str | None = None,
    log_dir: str | Path | None = None,
    store_dir: str | Path | None = None,
    home_nets: list[str] | None = None,
    ruleset_path: str | Path | None = None,
    anomaly: AnomalyConfig | None = None,
    credentials: str | None = None,
    http_port: int | None = None,
    check_log_dir: bool = True,
) -> EdsConfig:
    """Build an EdsConfig; keyword overrides win over ``env`` variables."""
    if env is None:
        env = os.environ
    cfg = EdsConfig(
        interface=interface if interface is not None else env.get("INTERFACE"),
        log_dir=Path(log_dir if log_dir is not None else env.get("IDS_LOG_DIS", DEFAULT_LOG_DIR)),
        store_dir=Path(store_dir if store_dir is not None else DEFAULT_STORE_DIR),
        home_nets=_parse_nets(home_nets if home_nets is not None else DEFAULT_HOME_NETS),
        ruleset_path=Path(ruleset_path) if ruleset_path is not None else None,
        anomaly=anomaly if anomaly is not None else AnomalyConfig(),
        credentials=credentials if credentials is not None else env.get("ELASTICSEARCH_USERNAME_PASSWORD"),
        http_port=http_port if http_port is not None else DEFAULT_HTTP_PORT,
    )
    if check_log_dir:
        _ensure_writable(cfg.log_dir)
    return cfg
