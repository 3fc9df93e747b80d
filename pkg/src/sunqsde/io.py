"""JSON and CSV formats.

Model::

    {"n": int, "nw": int, "A0": [s], "A": [s][s], "B1": [nw][s][s],
     "B2": [nw][s][s], "C1": [nw][s], "C2": [nw][s]}

SLH::

    {"alpha": [s], "Lambda": [nw][s] of [re, im]}

Complex numbers are always written as ``[re, im]`` pairs. Floats use Python's
shortest round-trip repr, so dumping and re-loading is lossless.
"""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from .errors import ModelValidationError
from .model import SLHParams, StateSpaceModel

MODEL_FIELDS = ("n", "nw", "A0", "A", "B1", "B2", "C1", "C2")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def complex_to_pairs(a):
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def pairs_to_complex(data, name="value"):
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise ModelValidationError(f"{name} must be encoded as [re, im] pairs", field=name)
    return arr[..., 0] + 1j * arr[..., 1]


def model_to_dict(m: StateSpaceModel) -> dict:
    return {
        "n": m.n,
        "nw": m.nw,
        "A0": m.A0.tolist(),
        "A": m.A.tolist(),
        "B1": m.B1.tolist(),
        "B2": m.B2.tolist(),
        "C1": m.C1.tolist(),
        "C2": m.C2.tolist(),
    }


def _leaf(name, v):
    if isinstance(v, (list, tuple)):
        if len(v) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            return complex(v[0], v[1])
        raise ModelValidationError(f"{name} has an entry that is neither a number nor [re, im]", field=name)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ModelValidationError(f"{name} has a non-numeric entry {v!r}", field=name)
    return v


def _nested(name, value, shape, depth=0):
    if depth == len(shape):
        return _leaf(name, value)
    if not isinstance(value, (list, tuple)) or len(value) != shape[depth]:
        got = len(value) if isinstance(value, (list, tuple)) else "scalar"
        dims = " x ".join(str(d) for d in shape)
        raise ModelValidationError(
            f"{name} has length {got} along axis {depth}, expected {dims}", field=name)
    return [_nested(name, v, shape, depth + 1) for v in value]


def _numeric(name, value, shape):
    """Array of the given shape; leaves may be numbers or ``[re, im]`` pairs."""
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        # ragged: some leaves are [re, im] pairs
        return np.asarray(_nested(name, value, shape))
    if arr.shape == shape:
        return arr
    if arr.shape == shape + (2,):
        return arr[..., 0] + 1j * arr[..., 1]
    dims = " x ".join(str(d) for d in shape) or "scalar"
    raise ModelValidationError(
        f"{name} has shape {' x '.join(map(str, arr.shape))}, expected {dims}", field=name)


def model_from_dict(d: dict) -> StateSpaceModel:
    """Parse and validate a model dict.

    Raises
    ------
    ModelValidationError
        Missing fields, wrong shapes (the message names the field and the
        expected shape) or complex entries.
    """
    if not isinstance(d, dict):
        raise ModelValidationError("model must be a JSON object")
    for key in MODEL_FIELDS:
        if key not in d:
            raise ModelValidationError(f"missing field {key!r}", field=key)
    n, nw = d["n"], d["nw"]
    for key, val in (("n", n), ("nw", nw)):
        if isinstance(val, bool) or not isinstance(val, int):
            raise ModelValidationError(f"{key} must be an integer", field=key)
    if n < 2:
        raise ModelValidationError("n must be >= 2", field="n")
    if nw < 0:
        raise ModelValidationError("nw must be >= 0", field="nw")
    s = n * n - 1
    shapes = {"A0": (s,), "A": (s, s), "B1": (nw, s, s), "B2": (nw, s, s), "C1": (nw, s), "C2": (nw, s)}
    arrays = {k: _numeric(k, d[k], shp) for k, shp in shapes.items()}
    for k, arr in arrays.items():
        if np.iscomplexobj(arr) and np.any(arr.imag != 0):
            idx = tuple(int(i) for i in np.argwhere(arr.imag != 0)[0])
            raise ModelValidationError(f"{k}{list(idx)} is complex; model matrices must be real", field=k)
    return StateSpaceModel(n=n, nw=nw, **arrays)


def slh_to_dict(p: SLHParams) -> dict:
    return {"alpha": p.alpha.tolist(), "Lambda": complex_to_pairs(p.Lambda)}


def slh_from_dict(d: dict) -> SLHParams:
    if not isinstance(d, dict):
        raise ModelValidationError("SLH description must be a JSON object")
    for key in ("alpha", "Lambda"):
        if key not in d:
            raise ModelValidationError(f"missing field {key!r}", field=key)
    alpha = np.asarray(d["alpha"], dtype=float)
    lam_raw = np.asarray(d["Lambda"], dtype=float)
    if lam_raw.size == 0:
        lam = np.zeros((0, alpha.size), dtype=complex)
    else:
        lam = pairs_to_complex(lam_raw, "Lambda")
    return SLHParams(alpha=alpha, Lambda=lam)


def density_from_json(data, n: int | None = None) -> np.ndarray:
    """Density matrix from an ``n x n`` grid of ``[re, im]`` pairs (or plain reals).

    ``{"rho": grid}`` is accepted too.
    """
    if isinstance(data, dict):
        data = data.get("rho")
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        rho = arr[..., 0] + 1j * arr[..., 1]
    elif arr.ndim == 2:
        rho = arr.astype(complex)
    else:
        raise ModelValidationError(f"density matrix grid has shape {arr.shape}", field="rho")
    if n is not None and rho.shape != (n, n):
        raise ModelValidationError(f"density matrix must be {n} x {n}, got {rho.shape}", field="rho")
    return rho


def density_to_json(rho) -> list:
    return complex_to_pairs(rho)


def trajectory_rows(traj, with_mean: bool = False):
    s = traj[0].m.size if traj else 0
    header = ["t", "r_ccr", "r_accr"]
    if with_mean:
        for i in range(s):
            header += [f"m{i + 1}_re", f"m{i + 1}_im"]
    rows = []
    for st in traj:
        row = [st.t, st.r_ccr, st.r_accr]
        if with_mean:
            for v in st.m:
                row += [float(v.real), float(v.imag)]
        rows.append(row)
    return header, rows


def trajectory_to_csv(traj, with_mean: bool = False) -> str:
    header, rows = trajectory_rows(traj, with_mean)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def trajectory_to_dict(traj, with_mean: bool = False) -> dict:
    header, rows = trajectory_rows(traj, with_mean)
    cols = list(zip(*rows)) if rows else [[] for _ in header]
    return {name: [float(v) for v in col] for name, col in zip(header, cols)}
