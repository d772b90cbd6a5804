"""
CSV emission and re-parsing.

Every frame is written with 17 significant digits so that reading a file
back with round-trip float parsing and writing it again reproduces it byte
for byte.
"""
import io
from pathlib import Path
from typing import Iterable, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .config import ResetConfig
from .decomposition import Decomposition
from .hosidf import ValidationReport
from .simulator import SimTrace

PathLike = Union[str, Path]


def write_csv(frame: pd.DataFrame, path: Optional[PathLike] = None, config: ResetConfig = None) -> str:
    """Serialize frame; also writes it to path when given"""
    config = config or ResetConfig()
    text = frame.to_csv(index=False, float_format=config.CSV_FLOAT_FORMAT, lineterminator="\n")
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv(source: Union[PathLike, io.StringIO]) -> pd.DataFrame:
    return pd.read_csv(source, float_precision="round_trip")


def _columns(prefix: str, values: np.ndarray) -> dict:
    return {f"{prefix}_{i + 1}": values[:, i] + 0.0 for i in range(values.shape[1])}


def trace_frame(trace: SimTrace) -> pd.DataFrame:
    """Columns t, u, y, x_1..x_m, is_post_reset"""
    data = {"t": trace.t + 0.0, "u": trace.u + 0.0, "y": trace.y + 0.0}
    data.update(_columns("x", trace.x))
    data["is_post_reset"] = trace.post_reset.astype(int)
    return pd.DataFrame(data)


def write_trace_csv(trace: SimTrace, window: SimTrace, path: Optional[PathLike] = None,
                    config: ResetConfig = None) -> str:
    """Full trace, then the marker row, then the steady-state window with its own header"""
    config = config or ResetConfig()
    text = (write_csv(trace_frame(trace), config=config)
            + config.TRACE_SECTION_MARKER + "\n"
            + write_csv(trace_frame(window), config=config))
    if path is not None:
        Path(path).write_text(text)
    return text


def split_trace_csv(text: str, config: ResetConfig = None) -> Tuple[pd.DataFrame, pd.DataFrame]:
    config = config or ResetConfig()
    marker = config.TRACE_SECTION_MARKER + "\n"
    if marker not in text:
        raise ValueError(f"trace CSV has no '{config.TRACE_SECTION_MARKER}' section")
    full, window = text.split(marker, 1)
    return read_csv(io.StringIO(full)), read_csv(io.StringIO(window))


def read_trace_csv(path: PathLike, config: ResetConfig = None) -> Tuple[pd.DataFrame, pd.DataFrame]:
    return split_trace_csv(Path(path).read_text(), config)


def join_trace_frames(full: pd.DataFrame, window: pd.DataFrame, config: ResetConfig = None) -> str:
    """Inverse of split_trace_csv"""
    config = config or ResetConfig()
    return write_csv(full, config=config) + config.TRACE_SECTION_MARKER + "\n" + write_csv(window, config=config)


def decomposition_frame(dec: Decomposition, x_sim: Optional[np.ndarray] = None) -> pd.DataFrame:
    """Columns t, x_bls_*, q_*, x_recon_*, x_sim_*, err (sup over states of |x_recon - x_sim|)"""
    data = {"t": dec.t + 0.0}
    data.update(_columns("x_bls", dec.x_bls))
    data.update(_columns("q", dec.q))
    data.update(_columns("x_recon", dec.x_recon))
    if x_sim is not None:
        x_sim = np.asarray(x_sim, dtype=float).reshape(dec.x_recon.shape)
        data.update(_columns("x_sim", x_sim))
        data["err"] = np.max(np.abs(dec.x_recon - x_sim), axis=1) + 0.0
    return pd.DataFrame(data)


def validation_frame(reports: Iterable[ValidationReport]) -> pd.DataFrame:
    rows = []
    for report in reports:
        for k, closed, sim, err in zip(report.orders, report.closed_form, report.simulated, report.rel_error):
            rows.append({
                "omega_rad_s": report.omega,
                "k": int(k),
                "closed_re": closed.real + 0.0,
                "closed_im": closed.imag + 0.0,
                "sim_re": sim.real + 0.0,
                "sim_im": sim.imag + 0.0,
                "rel_error": float(err),
            })
    return pd.DataFrame(rows, columns=["omega_rad_s", "k", "closed_re", "closed_im", "sim_re", "sim_im", "rel_error"])
