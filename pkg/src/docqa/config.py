"""Deployment configuration: TOML or JSON file plus DOCQA_* env overrides."""

from __future__ import annotations

import hashlib
import json
import os
import sys
from dataclasses import dataclass, field, asdict
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ENV_PREFIX = "DOCQA_"


@dataclass
class AppConfig:
    corpus_root: str = "docs"
    guard_policy_path: str | None = None
    classify_rules_path: str | None = None
    rewrite_rules_path: str | None = None
    faq_registry_path: str | None = None
    eval_data_dir: str | None = None
    log_path: str | None = None
    webhook_url: str | None = None
    admin_token: str = ""
    topic_url_base: str = "/topics/"
    faq_threshold: float = 0.85
    max_hits: int = 5
    min_score: float = 0.0
    context_budget: int = 4096
    generation_deadline_s: float = 8.0
    total_deadline_s: float = 10.0
    max_input_len: int = 1000
    translator_dictionary_path: str | None = None
    generative_endpoints: list[dict] = field(default_factory=list)
    search_endpoint: str | None = None
    ui_dir: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def snapshot_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


_FLOAT_FIELDS = {"faq_threshold", "min_score", "generation_deadline_s", "total_deadline_s"}
_INT_FIELDS = {"max_hits", "context_budget", "max_input_len"}


def load_config(path: str | Path | None = None, env: dict[str, str] | None = None) -> AppConfig:
    """Read the config file (by extension) and apply env var overrides."""
    data: dict = {}
    if path is not None:
        path = Path(path)
        if path.suffix == ".toml":
            data = tomllib.loads(path.read_text(encoding="utf-8"))
        elif path.suffix == ".json":
            data = json.loads(path.read_text(encoding="utf-8"))
        else:
            raise ValueError(f"config must be .toml or .json, got {path.name}")
    env = env if env is not None else dict(os.environ)
    for key, value in env.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name in _FLOAT_FIELDS:
            data[name] = float(value)
        elif name in _INT_FIELDS:
            data[name] = int(value)
        else:
            data[name] = value
    known = {f for f in AppConfig.__dataclass_fields__}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return AppConfig(**data)
