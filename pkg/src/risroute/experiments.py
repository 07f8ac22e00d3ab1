"""Experiment sweeps behind the preset figures.

Two families exist.  The *surface* sweeps draw element channels for one
reflected link and report achievable rates as the grouping, spacing or group
size changes.  The *network* sweeps run full replications for every strategy
on shared worlds and summarise route metrics per seed.
"""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import RicianParams, correlation_profile, panel_group_channels, sample_rician_element
from .ris import group_snrs, ris_hop_rate, snr_scale
from .sim.engine import run_replication
from .sim.metrics import mean_se, replication_means
from .streams import EXPERIMENT, stream

# geometry of the reflected link used by surface sweeps
LINK_IN = 30.0
LINK_OUT = 30.0


def divisors(n):
    return [d for d in range(1, n + 1) if n % d == 0]


def _link_zeta(cfg, d_in=LINK_IN, d_out=LINK_OUT):
    return snr_scale(cfg.tx_power, cfg.rho_l, d_in, d_out, cfg.alpha_ris, cfg.noise)


def _elements(cfg, seed, n, leg):
    return sample_rician_element(RicianParams.from_db(cfg.rician_k_db), stream(seed, EXPERIMENT, leg), n)


def panel_rate(cfg, seed, group_size, dx, dy, k_b="config", applied_random=False):
    """Sum of the group rates of one panel whose groups each serve their own link.

    ``dx`` and ``dy`` are element spacings in wavelengths.
    """
    k_b = cfg.phase_bits if k_b == "config" else k_b
    wl = cfg.wavelength
    prof = correlation_profile(group_size, dx * wl, dy * wl, wl)
    h = panel_group_channels(_elements(cfg, seed, cfg.elements, 1), prof)
    g = panel_group_channels(_elements(cfg, seed, cfg.elements, 2), prof)
    applied = None
    if applied_random:
        applied = stream(seed, EXPERIMENT, 3).uniform(0.0, 2 * np.pi, len(h))
    snr = group_snrs(h, g, _link_zeta(cfg), k_b, applied, cfg.phase_loss)
    return float(np.sum(ris_hop_rate(snr, cfg.coherence_slots)))


def group_rate(cfg, seed, group_size, k_b, random_phase=False, dx=None, dy=None):
    """Rate of a single group of ``group_size`` elements."""
    dx = cfg.spacing_x if dx is None else dx
    dy = cfg.spacing_y if dy is None else dy
    wl = cfg.wavelength
    prof = correlation_profile(group_size, dx * wl, dy * wl, wl)
    h = panel_group_channels(_elements(cfg, seed, group_size, 1), prof)
    g = panel_group_channels(_elements(cfg, seed, group_size, 2), prof)
    applied = stream(seed, EXPERIMENT, 3).uniform(0.0, 2 * np.pi, 1) if random_phase else None
    snr = group_snrs(h, g, _link_zeta(cfg), k_b, applied, cfg.phase_loss)
    return float(ris_hop_rate(snr[0], cfg.coherence_slots))


def groups_raw(cfg, seeds, group_counts=None, correlated=1 / 8, independent=1 / 2):
    """Per-seed panel rates for closely spaced and half-wavelength spaced elements."""
    group_counts = group_counts or divisors(cfg.elements)
    rows = []
    for b in group_counts:
        if cfg.elements % b:
            raise ValueError(f"{b} groups do not divide {cfg.elements} elements")
        k_g = cfg.elements // b
        for s in seeds:
            rows.append({"groups": b, "seed": int(s),
                         "correlated_rate": panel_rate(cfg, s, k_g, correlated, correlated),
                         "independent_rate": panel_rate(cfg, s, k_g, independent, independent)})
    return rows


def spacing_raw(cfg, seeds, dy_values=(1 / 12, 1 / 10, 1 / 8), dx=1 / 12, group_size=16):
    return [{"dy_wavelengths": dy, "seed": int(s), "dx_wavelengths": dx,
             "rate": panel_rate(cfg, s, group_size, dx, dy)}
            for dy in dy_values for s in seeds]


def patches_raw(cfg, seeds, sizes=(4, 9, 16, 25, 36, 49, 64, 100)):
    return [{"patches": k, "seed": int(s),
             "optimal": group_rate(cfg, s, k, None),
             "bits2": group_rate(cfg, s, k, 2),
             "bits4": group_rate(cfg, s, k, 4),
             "random": group_rate(cfg, s, k, None, random_phase=True)}
            for k in sizes for s in seeds]


def column_means(raw_rows, key, columns):
    """Average every column over seeds, one row per value of ``key``."""
    out = []
    for v in dict.fromkeys(r[key] for r in raw_rows):
        sel = [r for r in raw_rows if r[key] == v]
        row = {key: v}
        for c in columns:
            row[c] = float(np.mean([r[c] for r in sel]))
        out.append(row)
    return out


def column_summary(raw_rows, key, columns):
    out = []
    for v in dict.fromkeys(r[key] for r in raw_rows):
        sel = [r for r in raw_rows if r[key] == v]
        for c in columns:
            m, se, n = mean_se([r[c] for r in sel])
            out.append({key: v, "column": c, "mean": m, "se": se, "n": n})
    return out


def rate_vs_groups(cfg, seeds, group_counts=None, correlated=1 / 8, independent=1 / 2):
    """Rows ``(groups, correlated_rate, independent_rate)`` of seed-averaged panel rates."""
    raw = groups_raw(cfg, seeds, group_counts, correlated, independent)
    return column_means(raw, "groups", ("correlated_rate", "independent_rate"))


def rate_vs_spacing(cfg, seeds, dy_values=(1 / 12, 1 / 10, 1 / 8), dx=1 / 12, group_size=16):
    raw = spacing_raw(cfg, seeds, dy_values, dx, group_size)
    rows = column_means(raw, "dy_wavelengths", ("rate",))
    for r in rows:
        r["dx_wavelengths"] = dx
    return rows


def rate_vs_patches(cfg, seeds, sizes=(4, 9, 16, 25, 36, 49, 64, 100)):
    return column_means(patches_raw(cfg, seeds, sizes), "patches", ("optimal", "bits2", "bits4", "random"))


@dataclass(frozen=True)
class _Job:
    cfg: object
    seed: int
    strategies: tuple
    value: object
    trace: bool = False


def _trace_row(job, name, rid, tr):
    return {"value": job.value, "seed": job.seed, "strategy": name, "rid": rid,
            "source": tr.source, "dest": tr.dest, "delivered": tr.delivered, "failure": tr.failure,
            "total_slots": tr.total_slots,
            "hops": [{"kind": h.kind, "from": h.source, "to": h.target, "rate": h.rate, "m": h.m,
                      "slots": h.slots, "wait": h.wait, "panel": h.panel, "group": h.group}
                     for h in tr.hops],
            "aborted": [{"kind": h.kind, "from": h.source, "to": h.target, "slots": h.slots,
                         "sent": h.sent} for h in tr.aborted]}


def _run_job(job):
    out = run_replication(job.cfg, job.seed, job.strategies, log_queue=job.trace)
    rows, traces, qlog = [], [], []
    for name, rep in out.items():
        d_t, e_c, e_eff = replication_means(rep.records)
        rows.append({"value": job.value, "seed": job.seed, "strategy": name, "d_t": d_t,
                     "e_c": e_c, "e_eff": e_eff, "delivered": sum(r.delivered for r in rep.records),
                     "requests": len(rep.records), "partial": int(rep.partial)})
        if job.trace:
            traces.extend(_trace_row(job, name, i, t) for i, t in enumerate(rep.traces))
            qlog.extend({"value": job.value, "seed": job.seed, "strategy": name, **ev}
                        for ev in rep.queue_log)
    return rows, traces, qlog


def network_sweep(cfg, seeds, param, values, strategies, workers=1, trace=False):
    """Per-seed replication means for every (value, seed, strategy).

    With ``trace`` set, returns ``(rows, route_traces, queue_events)`` instead.
    """
    jobs = [_Job(cfg.replace(**{param: v}), int(s), tuple(strategies), v, trace)
            for v in values for s in seeds]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_job, jobs, chunksize=1))
    else:
        parts = [_run_job(j) for j in jobs]
    rows = [row for p in parts for row in p[0]]
    if not trace:
        return rows
    return rows, [t for p in parts for t in p[1]], [q for p in parts for q in p[2]]


def summarize(raw_rows, strategies):
    """Mean and standard error over seeds for every swept value and strategy."""
    values = []
    for r in raw_rows:
        if r["value"] not in values:
            values.append(r["value"])
    out = []
    for v in values:
        for s in strategies:
            sel = [r for r in raw_rows if r["value"] == v and r["strategy"] == s]
            row = {"value": v, "strategy": s, "reps": len(sel)}
            for metric in ("d_t", "e_c", "e_eff"):
                m, se, n = mean_se([r[metric] for r in sel])
                row[f"{metric}_mean"] = m
                row[f"{metric}_se"] = se
                row[f"{metric}_n"] = n
            out.append(row)
    return out


def figure_rows(summary, strategies, metric, value_name):
    """Pivot a summary into one row per swept value with a column per strategy."""
    rows = []
    for v in dict.fromkeys(r["value"] for r in summary):
        row = {value_name: v}
        for s in strategies:
            hit = [r for r in summary if r["value"] == v and r["strategy"] == s]
            row[s] = hit[0][f"{metric}_mean"] if hit else math.nan
        rows.append(row)
    return rows
