"""Service configuration: a flat key=value file with ALOHA_* environment
overrides.  Defaults pin the tuned constants the pipeline is built around
(candidate k=50, lexical top 10, similarity cutoff 0.1).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Union


@dataclass
class Config:
    pivot_lang: str = "zh"
    k: int = 50
    k_vote: int = 5
    intent_gate: float = 0.35
    top_n: int = 10
    threshold: float = 0.1
    threshold_on: str = "rerank"  # "rerank" | "embed"
    embedding_dim: int = 512

    embed_endpoint: Optional[str] = None
    translate_endpoint: Optional[str] = None
    generate_endpoint: Optional[str] = None
    classify_endpoint: Optional[str] = None
    rerank_endpoint: Optional[str] = None
    parse_endpoint: Optional[str] = None
    plan_endpoint: Optional[str] = None
    provider_timeout: float = 10.0

    store_path: Optional[str] = None
    tool_registry_path: Optional[str] = None
    intent_train_path: Optional[str] = None
    lexicon_path: Optional[str] = None
    gazetteer_path: Optional[str] = None
    phrase_table_path: Optional[str] = None

    trace_retention: int = 1024
    admin_token: Optional[str] = None

    def provider_endpoints(self) -> dict[str, Optional[str]]:
        return {
            "embed": self.embed_endpoint,
            "translate": self.translate_endpoint,
            "generate": self.generate_endpoint,
            "classify": self.classify_endpoint,
            "rerank": self.rerank_endpoint,
            "parse": self.parse_endpoint,
            "plan": self.plan_endpoint,
        }


def _coerce(raw: str, kind: str) -> object:
    text = raw.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1]
    if kind == "str":
        return text
    if kind == "optstr":
        return text if text and text.lower() not in ("none", "null") else None
    if text.lower() in ("none", "null", ""):
        return None
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    return text


_FIELD_TYPES = {
    "pivot_lang": "str", "threshold_on": "str",
    "k": "int", "k_vote": "int", "top_n": "int", "trace_retention": "int", "embedding_dim": "int",
    "intent_gate": "float", "threshold": "float", "provider_timeout": "float",
}


def parse_config_text(text: str, base: Optional[Config] = None) -> Config:
    """Parse `key = value` lines; '#' starts a comment; unknown keys fail."""
    config = base or Config()
    known = {f.name for f in fields(Config)}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"config line {line_no}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in known:
            raise ValueError(f"config line {line_no}: unknown key {key!r}")
        setattr(config, key, _coerce(value, _FIELD_TYPES.get(key, "optstr")))
    return config


def load_config(path: Optional[Union[str, Path]] = None, env: Optional[dict] = None) -> Config:
    """File values (when given) overridden by ALOHA_<KEY> environment variables."""
    config = Config()
    if path is not None:
        config = parse_config_text(Path(path).read_text(encoding="utf-8"), base=config)
    env = env if env is not None else dict(os.environ)
    for field_def in fields(Config):
        env_key = f"ALOHA_{field_def.name.upper()}"
        if env_key in env:
            setattr(config, field_def.name, _coerce(env[env_key], _FIELD_TYPES.get(field_def.name, "optstr")))
    return config
