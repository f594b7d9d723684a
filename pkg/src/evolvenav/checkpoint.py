"""Parameter archives: ``.npz`` with canonical dotted tensor names plus a JSON header.

Tensor names are the module's ``state_dict`` keys (e.g.
``encoder.f_pim.layer0.weight``). The ``__meta__`` entry stores the format
version, the model kind and its config so an archive can be rebuilt without
side information.
"""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np
import torch

FORMAT_VERSION = 1
META_KEY = "__meta__"


class VersionError(RuntimeError):
    """Archive format or model kind does not match what the caller expects."""


def save_checkpoint(path: str | Path, module: torch.nn.Module, kind: str, config=None,
                    extra: dict | None = None) -> Path:
    path = Path(path)
    arrays = {k: v.detach().cpu().numpy() for k, v in module.state_dict().items()}
    if META_KEY in arrays:
        raise ValueError(f"parameter name {META_KEY!r} is reserved")
    cfg = dataclasses.asdict(config) if dataclasses.is_dataclass(config) else config
    meta = {"format_version": FORMAT_VERSION, "kind": kind, "config": cfg, "extra": extra or {}}
    arrays[META_KEY] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def read_checkpoint(path: str | Path, kind: str | None = None) -> tuple[dict, dict[str, torch.Tensor]]:
    """-> (meta, state_dict). Raises VersionError on a format or kind mismatch."""
    with np.load(Path(path), allow_pickle=False) as data:
        if META_KEY not in data:
            raise VersionError(f"{path}: missing {META_KEY} header")
        meta = json.loads(bytes(data[META_KEY]).decode())
        state = {k: torch.from_numpy(data[k].copy()) for k in data.files if k != META_KEY}
    if meta.get("format_version") != FORMAT_VERSION:
        raise VersionError(f"{path}: format version {meta.get('format_version')} != {FORMAT_VERSION}")
    if kind is not None and meta.get("kind") != kind:
        raise VersionError(f"{path}: archive holds a {meta.get('kind')!r}, expected {kind!r}")
    return meta, state


def load_into(module: torch.nn.Module, state: dict[str, torch.Tensor]) -> None:
    own = module.state_dict()
    missing = sorted(set(own) - set(state))
    unexpected = sorted(set(state) - set(own))
    bad = [k for k in own if k in state and own[k].shape != state[k].shape]
    if missing or unexpected or bad:
        raise VersionError(f"checkpoint does not match model: missing={missing[:5]} "
                           f"unexpected={unexpected[:5]} shape_mismatch={bad[:5]}")
    module.load_state_dict(state)


def save_predictor(path, model) -> Path:
    return save_checkpoint(path, model, "predictor", model.cfg)


def load_predictor(path):
    from .prediction.model import PredictorConfig, RelationalPredictor
    meta, state = read_checkpoint(path, "predictor")
    model = RelationalPredictor(PredictorConfig(**meta["config"]))
    load_into(model, state)
    model.eval()
    return model


def save_policy(path, policy) -> Path:
    return save_checkpoint(path, policy, "policy", policy.cfg)


def load_policy(path):
    from .policy.network import NavPolicy, PolicyConfig
    meta, state = read_checkpoint(path, "policy")
    policy = NavPolicy(PolicyConfig(**meta["config"]))
    load_into(policy, state)
    policy.eval()
    return policy
