"""Configuration management for greyharvest."""

import json
import logging
import os
import threading
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import __version__

logger = logging.getLogger(__name__)

USER_AGENT = f"greyharvest/{__version__} (+https://github.com/greyharvest/greyharvest)"


@dataclass
class FetchConfig:
    """Outbound fetch limits and politeness."""

    timeout: float = 30.0
    max_redirects: int = 10
    max_body_bytes: int = 8 * 1024 * 1024
    per_host_delay: float = 0.5
    # robots.txt is only consulted for background fetches
    respect_robots: bool = True
    user_agent: str = USER_AGENT


@dataclass
class ResolverConfig:
    """Extraction and merge settings."""

    rules_dir: str | None = None
    score_table: str | None = None
    generic_author_names: list[str] = field(default_factory=lambda: ["author"])
    generic_date_names: list[str] = field(default_factory=lambda: ["date"])


@dataclass
class StoreConfig:
    """Store settings."""

    data_dir: str = str(Path.home() / ".local" / "share" / "greyharvest")


@dataclass
class ServiceConfig:
    """REST service settings."""

    host: str = "127.0.0.1"
    port: int = 8192
    refresh_hours: float = 24.0
    resolve_timeout: float = 45.0
    log_level: str = "INFO"


@dataclass
class ArchiveServiceConfig:
    """One web archive: availability lookup and optional on-demand submission."""

    service: str
    domains: list[str]
    availability_url: str | None = None
    snapshot_path: str = "archived_snapshots.closest.url"
    timestamp_path: str = "archived_snapshots.closest.timestamp"
    submit_url: str | None = None


def _default_archives() -> list[ArchiveServiceConfig]:
    return [
        ArchiveServiceConfig(
            service="internet_archive",
            domains=["web.archive.org", "archive.org"],
            availability_url="https://archive.org/wayback/available?url={uri}",
        ),
        ArchiveServiceConfig(
            service="uk_web_archive",
            domains=["www.webarchive.org.uk", "webarchive.org.uk"],
            availability_url="https://www.webarchive.org.uk/wayback/archive/available?url={uri}",
        ),
        ArchiveServiceConfig(
            service="webcite",
            domains=["www.webcitation.org", "webcitation.org"],
            submit_url="https://www.webcitation.org/archive?url={uri}",
        ),
    ]


@dataclass
class ContinuityConfig:
    """Archive checking, submission and PURL settings."""

    recheck_days: float = 7.0
    pass_interval_minutes: float = 60.0
    backoff_base_hours: float = 1.0
    backoff_cap_hours: float = 24.0
    archives: list[ArchiveServiceConfig] = field(default_factory=_default_archives)


@dataclass
class Config:
    """Main configuration."""

    fetch: FetchConfig = field(default_factory=FetchConfig)
    resolver: ResolverConfig = field(default_factory=ResolverConfig)
    store: StoreConfig = field(default_factory=StoreConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)
    continuity: ContinuityConfig = field(default_factory=ContinuityConfig)


def load_config(path: Path | None = None) -> Config:
    """
    Load configuration from multiple sources (in priority order):
    1. Environment variables (highest priority)
    2. Explicit config file (--config)
    3. Local config file (./greyharvest.json)
    4. User config file (~/.config/greyharvest/config.json)
    5. Default values (lowest priority)
    """
    config = Config()

    config_paths = [
        Path.home() / ".config" / "greyharvest" / "config.json",
        Path("./greyharvest.json"),
    ]
    if path is not None:
        config_paths.append(Path(path))

    for config_path in config_paths:  # Lower priority first
        if config_path.exists():
            try:
                with open(config_path) as f:
                    _apply_config_dict(config, json.load(f))
            except json.JSONDecodeError as e:
                logger.warning(f"Failed to parse config file {config_path}: {e}")
            except IOError as e:
                logger.warning(f"Failed to read config file {config_path}: {e}")

    _apply_env_vars(config)

    return config


def _apply_section(target: object, data: dict) -> None:
    known = {f.name for f in fields(target)}
    for key, value in data.items():
        if key in known:
            setattr(target, key, value)
        else:
            logger.warning(f"unknown config key: {key}")


def _apply_config_dict(config: Config, data: dict) -> None:
    """Apply configuration from a dictionary."""
    for section in ("fetch", "resolver", "store", "service"):
        if section in data:
            _apply_section(getattr(config, section), data[section])

    if "continuity" in data:
        continuity_data = dict(data["continuity"])
        archives = continuity_data.pop("archives", None)
        _apply_section(config.continuity, continuity_data)
        if archives is not None:
            config.continuity.archives = [ArchiveServiceConfig(**a) for a in archives]


def _apply_env_vars(config: Config) -> None:
    """Apply environment variables to config."""
    if data_dir := os.getenv("GREYHARVEST_DATA"):
        config.store.data_dir = data_dir

    if log_level := os.getenv("GREYHARVEST_LOG_LEVEL"):
        config.service.log_level = log_level

    if port := os.getenv("GREYHARVEST_PORT"):
        try:
            config.service.port = int(port)
        except ValueError:
            logger.warning(f"ignoring non-integer GREYHARVEST_PORT: {port}")

    if rules_dir := os.getenv("GREYHARVEST_RULES"):
        config.resolver.rules_dir = rules_dir

    if score_table := os.getenv("GREYHARVEST_SCORES"):
        config.resolver.score_table = score_table


def create_default_config_file(path: Path | None = None) -> Path:
    """Create a default configuration file."""
    if path is None:
        path = Path.home() / ".config" / "greyharvest" / "config.json"

    path.parent.mkdir(parents=True, exist_ok=True)

    default_config = {
        "fetch": {"timeout": 30.0, "max_redirects": 10, "per_host_delay": 0.5},
        "service": {"port": 8192, "refresh_hours": 24.0, "log_level": "INFO"},
        "continuity": {"recheck_days": 7.0},
    }

    with open(path, "w") as f:
        json.dump(default_config, f, indent=2)

    return path


# Thread-safe global config instance
_config: Config | None = None
_config_lock = threading.Lock()


def get_config() -> Config:
    """Get the global configuration instance (thread-safe)."""
    global _config
    if _config is None:
        with _config_lock:
            # Double-check locking pattern
            if _config is None:
                _config = load_config()
    return _config


def reload_config(path: Path | None = None) -> Config:
    """Reload configuration from sources (thread-safe)."""
    global _config
    with _config_lock:
        _config = load_config(path)
        return _config
