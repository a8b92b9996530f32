"""Strategies for joining textual and financial feature groups."""

from __future__ import annotations

import numpy as np

from ..narrative import LlmAnalysis, build_integration_prompt

COMBINE_MODES = ("concat", "darnn-exogenous", "prompt")


def combine_features(mode: str, t_features, f_features, target: str = "", horizon: int = 1):
    """Join a textual block with a financial block for one model family.

    concat           [T-block || F-block] along the feature axis
    darnn-exogenous  (drivers, target history) pair for the attention RNN
    prompt           rendered integration prompt (t_features: LlmAnalysis,
                     f_features: recent direction sequence)
    """
    if mode not in COMBINE_MODES:
        raise ValueError(f"unknown combine mode {mode!r}")

    if mode == "prompt":
        if not isinstance(t_features, LlmAnalysis):
            raise ValueError("prompt mode expects an LlmAnalysis as the textual input")
        return build_integration_prompt(t_features, f_features, target=target, horizon=horizon)

    t_arr = np.asarray(t_features, dtype=float)
    f_arr = np.asarray(f_features, dtype=float)

    if mode == "concat":
        if t_arr.ndim != f_arr.ndim or t_arr.ndim not in (1, 2):
            raise ValueError(f"cannot concatenate shapes {t_arr.shape} and {f_arr.shape}")
        if t_arr.ndim == 2 and t_arr.shape[0] != f_arr.shape[0]:
            raise ValueError(f"row counts differ: {t_arr.shape[0]} vs {f_arr.shape[0]}")
        return np.concatenate([t_arr, f_arr], axis=-1)

    # darnn-exogenous: text vectors become the per-step drivers, the
    # financial window the target history
    if t_arr.ndim == 2:
        t_arr = t_arr[None, :, :]
        f_arr = f_arr[None, :]
    if t_arr.ndim != 3 or f_arr.ndim != 2:
        raise ValueError(f"expected drivers (B, T, n) and history (B, T), got {t_arr.shape} / {f_arr.shape}")
    if t_arr.shape[:2] != f_arr.shape:
        raise ValueError(f"driver window {t_arr.shape[:2]} does not match history {f_arr.shape}")
    return t_arr, f_arr
