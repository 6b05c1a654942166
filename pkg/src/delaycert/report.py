"""Delimited output, certificate documents and figures."""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

__all__ = [
    "fmt",
    "trajectory_header",
    "trajectory_rows",
    "write_trajectory_csv",
    "certificate_record",
    "corollary_record",
    "SWEEP_COLUMNS",
    "write_table",
    "plot_trajectory",
    "plot_sweep",
]

PLOT_PARAMS = {
    "axes.labelsize": 10,
    "font.size": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "lines.linewidth": 1.2,
    "figure.figsize": [6.4, 4.8],
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def fmt(value):
    """17 significant digits, enough to round-trip an IEEE double."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    return "%.17g" % float(value)


def _json_number(value):
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def trajectory_header(n, r):
    return (["t"] + [f"x_{i + 1}" for i in range(n)] + [f"u_{i + 1}" for i in range(r)]
            + [f"y_{i + 1}" for i in range(n)] + ["v", "bound_v"])


def trajectory_rows(traj):
    """Rows as float arrays; ``v`` and ``bound_v`` are NaN without a certificate."""
    m = len(traj)
    v = traj.v_samples if traj.v_samples is not None else np.full(m, np.nan)
    bound = traj.bound_v if traj.bound_v is not None else np.full(m, np.nan)
    return np.column_stack([traj.times, traj.x_samples, traj.u_samples, traj.y_samples,
                            v, bound])


def write_trajectory_csv(traj, stream):
    n, r = traj.x_samples.shape[1], traj.u_samples.shape[1]
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(trajectory_header(n, r))
    for row in trajectory_rows(traj):
        w.writerow([fmt(x) for x in row])


def certificate_record(cert, version, dq_sq_bound=None):
    """Flat key/value view of a certificate; matrices become nested lists."""
    rec = {
        "tool": "delaycert",
        "version": version,
        "grid_points": cert.grid_points,
        "norm": cert.norm,
        "horizon": cert.horizon,
        "certified": cert.certified,
        "sigma": cert.sigma,
        "sigma_hat": cert.sigma_hat,
        "delta_q_norm": cert.delta_q_norm,
        "delta_q_norm_sq": cert.delta_q_norm ** 2,
        "threshold_sq": cert.threshold_sq,
        "upper_m": cert.upper_m,
        "m_u": cert.m_u,
        "m_x": cert.m_x,
        "k1": cert.k1,
        "k2": cert.k2,
        "k3": cert.k3,
        "envelope_x": cert.envelope_x,
        "envelope_u": cert.envelope_u,
        "closed_loop_abscissa": cert.closed_loop_abscissa,
        "v_matrix": cert.v_matrix.tolist(),
        "gram": cert.gram.tolist(),
        "w_prime": cert.w_prime.tolist(),
        "w_dprime": cert.w_dprime.tolist(),
    }
    if dq_sq_bound is not None:
        rec["delta_q_norm_sq_bound"] = dq_sq_bound
    return _clean(rec)


def corollary_record(bound, version, norm):
    rec = {"tool": "delaycert", "version": version, "norm": norm}
    rec.update({k: getattr(bound, k) for k in (
        "certified", "sigma", "k1", "k2", "k3", "threshold_sq", "delay_bound",
        "delay_mismatch", "horizon")})
    return _clean(rec)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return _json_number(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps_record(rec):
    return json.dumps(rec, indent=2) + "\n"


SWEEP_COLUMNS = ["delta_hat", "delta_q_norm_sq", "delta_q_norm_sq_bound", "threshold_sq",
                 "certified", "sigma_hat", "corollary_bound", "corollary_certified"]
SWEEP_SIM_COLUMNS = ["ratio_v", "ratio_x", "ratio_u"]


def write_table(columns, rows, stream):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])


def table_text(columns, rows):
    buf = io.StringIO()
    write_table(columns, rows, buf)
    return buf.getvalue()


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_trajectory(traj, path, title=None):
    """State, input and (when certified) functional with its decay bound."""
    plt = _pyplot()
    with plt.rc_context(PLOT_PARAMS):
        has_v = traj.v_samples is not None
        fig, axes = plt.subplots(3 if has_v else 2, 1, sharex=True)
        t = traj.times
        for i in range(traj.x_samples.shape[1]):
            axes[0].plot(t, traj.x_samples[:, i], label=f"$x_{i + 1}$")
        axes[0].set_ylabel("state")
        axes[0].legend(loc="upper right")
        for i in range(traj.u_samples.shape[1]):
            axes[1].plot(t, traj.u_samples[:, i], label=f"$u_{i + 1}$")
        axes[1].set_ylabel("input")
        axes[1].legend(loc="upper right")
        if has_v:
            v = np.maximum(traj.v_samples, np.finfo(float).tiny)
            axes[2].semilogy(t, v, label="$v(t)$")
            axes[2].semilogy(t, np.maximum(traj.bound_v, np.finfo(float).tiny), "--",
                             label=r"$v(0)e^{-\hat\sigma t}$")
            axes[2].set_ylabel("functional")
            axes[2].legend(loc="upper right")
        axes[-1].set_xlabel("t")
        if title:
            axes[0].set_title(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_sweep(rows, path, delta=None):
    """Mismatch norm against the threshold across a delay sweep."""
    plt = _pyplot()
    with plt.rc_context(PLOT_PARAMS):
        fig, (ax0, ax1) = plt.subplots(2, 1, sharex=True)
        d = np.array([r["delta_hat"] for r in rows], dtype=float)
        dq = np.array([r["delta_q_norm_sq"] for r in rows], dtype=float)
        thr = np.array([r["threshold_sq"] for r in rows], dtype=float)
        ok = np.array([bool(r["certified"]) for r in rows])
        ax0.plot(d, dq, "o-", ms=3, label=r"$\|\Delta Q\|^2$")
        ax0.plot(d, thr, "--", label="threshold")
        ax0.plot(d[ok], dq[ok], "s", ms=5, mfc="none", label="certified")
        ax0.set_ylabel("squared mismatch")
        ax0.legend(loc="upper center")
        ax1.plot(d, [r["sigma_hat"] for r in rows], "o-", ms=3)
        ax1.axhline(0.0, color="k", lw=0.8)
        ax1.set_ylabel(r"$\hat\sigma$")
        ax1.set_xlabel(r"model delay $\hat\delta$")
        if delta is not None:
            for ax in (ax0, ax1):
                ax.axvline(delta, color="grey", ls=":", lw=0.8)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
