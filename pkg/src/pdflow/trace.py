"""Trajectories, error norms, geometric-rate fits and CSV/JSON export."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import lyapunov_values

BASE_COLUMNS = ("iter", "t", "residual", "err_euclid", "err_r", "lyapunov")
ERR_FLOOR = 1e-12
MIN_FIT_SAMPLES = 10


def fmt(v):
    """Canonical 17-significant-digit float text (integers stay integers)."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


@dataclass(eq=False)
class Trajectory:
    """Columnar record of a run; row ``i`` is one sample."""

    iters: np.ndarray
    t: np.ndarray
    residual: np.ndarray
    err_euclid: np.ndarray
    err_r: np.ndarray
    lyapunov: np.ndarray
    states: np.ndarray | None = None
    n: int = 0
    m: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in BASE_COLUMNS[1:]:
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        self.iters = np.asarray(self.iters, dtype=np.int64)
        if self.states is not None:
            st = np.asarray(self.states, dtype=float)
            if st.ndim == 1:
                st = st.reshape(len(self.iters), -1)
            if st.shape[0] != len(self.iters):
                raise ValueError("states must have one row per sample")
            self.states = st
        if self.iters.size > 1 and np.any(np.diff(self.iters) <= 0):
            raise ValueError("iteration numbers must be strictly increasing")

    def __len__(self):
        return int(self.iters.size)

    def primal_error(self, x_star):
        return np.linalg.norm(self.states[:, : self.n] - np.asarray(x_star), axis=1)

    def dual_error(self, lambda_star):
        return np.linalg.norm(self.states[:, self.n:] - np.asarray(lambda_star), axis=1)

    @classmethod
    def empty(cls, n=0, m=0, metadata=None):
        z = np.zeros(0)
        return cls(np.zeros(0, dtype=np.int64), z, z, z, z, z,
                   states=np.zeros((0, n + m)), n=n, m=m, metadata=metadata or {})


def build_trajectory(program, result, z_star, spec=None, metadata=None):
    """Error norms and Lyapunov values for every recorded state of ``result``.

    ``err_r`` uses the metric of ``spec`` when given and equals
    ``err_euclid`` otherwise. ``lyapunov`` is ``V`` (Euclidean) or ``V_1``
    (r-norm quadratic term), matching the mode of the run.
    """
    hist = result.history
    states = hist["states"]
    zs = np.asarray(z_star, dtype=float)
    D = states - zs
    err_e = np.linalg.norm(D, axis=1)
    use_r = spec is not None and result.params.mode.value == "metric"
    if use_r:
        W = spec.whiten(D.T)
        err_r = np.sqrt(np.einsum("ij,ij->j", W, W))
    else:
        err_r = err_e.copy()
    lyap = lyapunov_values(program, states, zs, spec if use_r else None)
    meta = {
        "provenance": dict(program.provenance),
        "params": {
            "alpha": result.params.alpha, "beta": result.params.beta,
            "step": result.params.step, "mode": result.params.mode.value,
            "stop_tol": result.params.stop_tol, "max_iters": int(result.params.max_iters),
            "metric_projection": result.params.metric_projection,
        },
        "status": result.status,
        "iterations": result.iterations,
    }
    if spec is not None:
        meta["k"] = spec.k
    if metadata:
        meta.update(metadata)
    return Trajectory(
        iters=hist["iters"], t=hist["iters"] * result.params.step,
        residual=hist["residuals"], err_euclid=err_e, err_r=err_r, lyapunov=lyap,
        states=states, n=program.n, m=program.m, metadata=meta,
    )


@dataclass(frozen=True)
class RateFit:
    rate: float
    intercept: float
    r_squared: float
    window: tuple
    truncated: bool = False

    def to_dict(self):
        return {"rate": self.rate, "intercept": self.intercept, "r_squared": self.r_squared,
                "window": list(self.window), "truncated": self.truncated}


def default_window(traj):
    """Drop the first 10% of iterations and everything after ``err_r`` hits the floor."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    last = int(traj.iters[-1])
    start = int(math.ceil(0.1 * last))
    below = np.flatnonzero(traj.err_r < ERR_FLOOR)
    end = int(traj.iters[below[0]]) - 1 if below.size else last
    return start, end


def fit_geometric_rate(traj, window=None):
    """Least-squares line through ``(t, ln err_r)``; ``rate`` is minus the slope.

    Samples with ``err_r <= 1e-14`` are excluded; if that shortens the
    requested window the fit is flagged ``truncated``.
    """
    if window is None:
        window = default_window(traj)
    lo, hi = window
    sel = (traj.iters >= lo) & (traj.iters <= hi)
    pos = sel & (traj.err_r > 1e-14)
    truncated = bool(np.count_nonzero(pos) < np.count_nonzero(sel))
    if np.count_nonzero(pos) < MIN_FIT_SAMPLES:
        raise ValueError(f"need at least {MIN_FIT_SAMPLES} positive-error samples in {window}")
    t = traj.t[pos]
    y = np.log(traj.err_r[pos])
    tm, ym = t.mean(), y.mean()
    stt = float(np.sum((t - tm) ** 2))
    if stt == 0:
        raise ValueError("window spans a single time value")
    slope = float(np.sum((t - tm) * (y - ym))) / stt
    intercept = float(ym - slope * tm)
    ss_res = float(np.sum((y - (intercept + slope * t)) ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if ss_tot <= 1e-30 * max(1.0, float(np.sum(y * y))) else max(0.0, 1.0 - ss_res / ss_tot)
    return RateFit(rate=-slope, intercept=intercept, r_squared=min(r2, 1.0),
                   window=(int(lo), int(hi)), truncated=truncated)


@dataclass(frozen=True)
class EnvelopeReport:
    passed: bool
    worst_ratio: float
    violations: int
    samples: int


def envelope_check(traj, bound_rate, slack=0.05):
    """Does ``err_r(t) <= err_r(0) exp(-bound_rate t) (1 + slack)`` hold at every sample?"""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    e0 = traj.err_r[0]
    env = e0 * np.exp(-bound_rate * (traj.t - traj.t[0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(env > 0, traj.err_r / env, np.where(traj.err_r > 0, np.inf, 0.0))
    viol = int(np.count_nonzero(ratio > 1.0 + slack))
    return EnvelopeReport(passed=viol == 0, worst_ratio=float(np.max(ratio)),
                          violations=viol, samples=len(traj))


def csv_header(traj, full_state=False):
    cols = list(BASE_COLUMNS)
    if full_state:
        cols += [f"x_{i}" for i in range(traj.n)] + [f"lambda_{j}" for j in range(traj.m)]
    return cols


def to_csv(traj, full_state=False):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(traj, full_state))
    for i in range(len(traj)):
        row = [fmt(traj.iters[i])] + [fmt(getattr(traj, col)[i]) for col in BASE_COLUMNS[1:]]
        if full_state:
            row += [fmt(v) for v in traj.states[i]]
        w.writerow(row)
    return buf.getvalue()


def from_csv(text, metadata=None):
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    if tuple(header[:6]) != BASE_COLUMNS:
        raise ValueError(f"unexpected CSV header {header[:6]}")
    n = sum(1 for h in header if h.startswith("x_"))
    m = sum(1 for h in header if h.startswith("lambda_"))
    data = np.array([[float(v) for v in r[1:]] for r in body]).reshape(len(body), len(header) - 1)
    iters = np.array([int(r[0]) for r in body], dtype=np.int64)
    states = data[:, 5:] if n + m else None
    return Trajectory(iters, data[:, 0], data[:, 1], data[:, 2], data[:, 3], data[:, 4],
                      states=states, n=n, m=m, metadata=metadata or {})


def _jsonable(v):
    v = float(v)
    return v if math.isfinite(v) else None


def to_json_dict(traj):
    samples = []
    for i in range(len(traj)):
        s = {"iter": int(traj.iters[i])}
        for col in BASE_COLUMNS[1:]:
            s[col] = _jsonable(getattr(traj, col)[i])
        if traj.states is not None:
            s["x"] = [_jsonable(v) for v in traj.states[i, : traj.n]]
            s["lambda"] = [_jsonable(v) for v in traj.states[i, traj.n:]]
        samples.append(s)
    return {"metadata": traj.metadata, "n": traj.n, "m": traj.m, "samples": samples}


def from_json_dict(d):
    def col(name):
        return np.array([math.nan if s[name] is None else s[name] for s in d["samples"]], dtype=float)

    samples = d["samples"]
    n, m = d.get("n", 0), d.get("m", 0)
    if not samples:
        states = np.zeros((0, n + m))
    elif "x" in samples[0]:
        states = np.array([[math.nan if v is None else v for v in s["x"] + s["lambda"]] for s in samples])
    else:
        states = None
    return Trajectory(np.array([s["iter"] for s in samples], dtype=np.int64), col("t"), col("residual"),
                      col("err_euclid"), col("err_r"), col("lyapunov"),
                      states=states, n=n, m=m, metadata=d.get("metadata", {}))


def export(traj, path, format="csv", full_state=False):
    """Write ``traj`` as CSV (fixed column order) or JSON to ``path``."""
    path = Path(path)
    if format == "csv":
        path.write_text(to_csv(traj, full_state))
    elif format == "json":
        path.write_text(json.dumps(to_json_dict(traj), indent=1))
    else:
        raise ValueError(f"unknown format {format!r}")
    return path


def load(path):
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        return from_json_dict(json.loads(text))
    return from_csv(text)


def trace_filename(experiment, seed, mode, k_multiplier, suffix=".csv"):
    """``{experiment}_{seed}_{mode}_{k}``; a string ``k_multiplier`` is used verbatim."""
    if k_multiplier is None:
        km = "none"
    elif isinstance(k_multiplier, str):
        km = k_multiplier
    else:
        km = format(float(k_multiplier), "g")
    return f"{experiment}_{seed}_{mode}_{km}{suffix}"
