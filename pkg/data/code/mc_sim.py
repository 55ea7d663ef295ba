"""
Monte Carlo Trading Simulator
Independent check of every closed-form trading statistic

Key Concepts:
1. Log prices advance by exact Gaussian increments on a grid of step dt
2. Threshold sales: first step landing beyond theta or Theta, plus (bridge
   mode) a Brownian-bridge test for crossings between two grid points
3. Poisson sales: probability 1 - exp(-rho dt) per step, independent of the price
4. Every block of episodes or accounts draws from its own substream keyed by
   (seed, stream kind, block index), so results do not depend on scheduling
5. Accounts: on each sale, the sold stock is a realized gain/loss and every
   other position in the account a paper gain/loss
"""

from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from aggregation import HoldingGroup, InvestorType
from episode_stats import PoissonRule, rule_stats, _check_thresholds
from model_params import ModelError
from statistical_testing import (
    ConcordanceTester,
    binomial_standard_error,
    mean_standard_error,
    ratio_estimate,
)

logger = logging.getLogger(__name__)

STREAM_THRESHOLD = 1
STREAM_POISSON = 2
STREAM_ACCOUNTS = 3

BURN_IN_DURATIONS = 5.0
MIN_SALES = 100


@dataclass(frozen=True)
class SimConfig:
    """
    Simulation controls. bridge=False detects threshold sales on the grid
    only, which overshoots the thresholds by about 0.58 sigma sqrt(dt).
    """

    seed: int = 1
    dt: float = 1.0 / 2500.0
    n_episodes: int = 100_000
    horizon_years: float | None = None
    n_accounts: int = 1000
    antithetic: bool = False
    bridge: bool = True
    batches: int = 100
    block_size: int = 2000
    chunk_steps: int = 1024
    workers: int = 1
    keep_ledger: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ModelError("DEGENERATE", f"time step must be positive, got {self.dt}")
        if self.n_episodes < 1 or self.n_accounts < 1:
            raise ModelError("DEGENERATE", "need at least one episode and one account")
        if self.batches < 2 or self.block_size < 2 or self.chunk_steps < 1 or self.workers < 1:
            raise ModelError("DEGENERATE", "batches and block_size must be >= 2, chunk_steps and workers >= 1")
        if self.horizon_years is not None and not self.horizon_years > 0:
            raise ModelError("DEGENERATE", f"horizon must be positive, got {self.horizon_years}")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class EmpiricalStats:
    estimates: dict
    standard_errors: dict
    count: int
    ledger: pd.DataFrame | None = field(default=None, compare=False)

    def as_dict(self):
        return {
            "estimates": dict(self.estimates),
            "standard_errors": dict(self.standard_errors),
            "count": self.count,
        }


def _stream(seed, kind, *index):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(kind, *index)))


def _map_blocks(func, jobs, workers):
    """Apply func to every job; the output order always follows the job order."""
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, jobs))
    return [func(job) for job in jobs]


def _block_sizes(total, block_size):
    count = math.ceil(total / block_size)
    return [min(block_size, total - i * block_size) for i in range(count)]


def _normals(rng, shape, antithetic):
    """Standard normals; antithetic pairs row i with row i + rows/2 along the first axis."""
    if not antithetic:
        return rng.standard_normal(shape)
    rows = shape[0]
    half = rng.standard_normal(((rows + 1) // 2,) + tuple(shape[1:]))
    return np.concatenate([half, -half])[:rows]


def _batch_sums(values, batches):
    return np.array([part.sum() for part in np.array_split(np.asarray(values, dtype=float), batches)])


def _crossings(path, prev, lo, hi, uniforms, var_step, bridge):
    """
    Sale flags and sale levels (log units) for each step of a path.

    A step sells when it lands beyond a threshold or, in bridge mode, when the
    Brownian bridge from prev to path crosses one in between; the sale level
    is then the threshold itself.
    """
    grid = (path >= hi) | (path <= lo)
    if not bridge:
        return grid, path
    with np.errstate(invalid="ignore", over="ignore"):
        p_up = np.exp(-2.0 * (hi - prev) * (hi - path) / var_step)
        p_down = np.exp(-2.0 * (prev - lo) * (path - lo) / var_step)
    p_up = np.where(grid | ~np.isfinite(p_up), 0.0, p_up)
    p_down = np.where(grid | ~np.isfinite(p_down), 0.0, p_down)
    up = uniforms < p_up
    down = ~up & (uniforms < p_up + p_down)
    level = np.where(up, hi, np.where(down, lo, path))
    return grid | up | down, level


@dataclass
class _MonitorState:
    steps: np.ndarray
    gain_steps: np.ndarray
    exit_log: np.ndarray
    last: np.ndarray
    done: np.ndarray

    @classmethod
    def empty(cls, n):
        return cls(
            steps=np.zeros(n, dtype=np.int64),
            gain_steps=np.zeros(n, dtype=np.int64),
            exit_log=np.full(n, np.nan),
            last=np.zeros(n),
            done=np.zeros(n, dtype=bool),
        )


def _threshold_block(job, lo, hi, asset, cfg, monitors):
    """
    One block of episodes watched by one monitor per entry of `monitors`
    (check every k-th step). All monitors see the same paths; a path keeps
    running until every monitor has seen its sale.
    """
    index, n = job
    rng = _stream(cfg.seed, STREAM_THRESHOLD, index)
    drift = asset.log_drift * cfg.dt
    vol = asset.sigma * math.sqrt(cfg.dt)
    var_step = asset.variance * cfg.dt
    c = cfg.chunk_steps

    states = [_MonitorState.empty(n) for _ in monitors]
    logx = np.zeros(n)
    active = np.arange(n)
    done_steps = 0

    while active.size:
        # full-size draws keep antithetic pairs aligned as paths finish
        z = _normals(rng, (n, c), cfg.antithetic)[active]
        uniforms = rng.random((n, c))[active]
        paths = logx[active, None] + np.cumsum(drift + vol * z, axis=1)
        in_gain = np.cumsum(paths > 0, axis=1)
        running = np.zeros(active.size, dtype=bool)

        for every, st in zip(monitors, states):
            rows = np.flatnonzero(~st.done[active])
            if not rows.size:
                continue
            ids = active[rows]
            cols = np.flatnonzero((done_steps + np.arange(1, c + 1)) % every == 0)
            ended = np.zeros(rows.size, dtype=bool)
            exit_col = np.full(rows.size, c - 1)
            if cols.size:
                sub = paths[rows][:, cols]
                prev = np.concatenate([st.last[ids][:, None], sub[:, :-1]], axis=1)
                hit, level = _crossings(sub, prev, lo, hi, uniforms[rows][:, cols], var_step * every, cfg.bridge)
                ended = hit.any(axis=1)
                first = np.argmax(hit, axis=1)
                exit_col = np.where(ended, cols[first], c - 1)
                st.exit_log[ids[ended]] = level[np.flatnonzero(ended), first[ended]]
                st.last[ids] = sub[:, -1]
            own_sign = np.where(ended, paths[rows, exit_col] > 0, 0)
            st.gain_steps[ids] += in_gain[rows, exit_col] - own_sign
            st.steps[ids] += exit_col + 1
            st.done[ids[ended]] = True
            running[rows[~ended]] = True

        logx[active] = paths[:, -1]
        active = active[running]
        done_steps += c

    return [(st.exit_log, st.steps * cfg.dt, st.gain_steps * cfg.dt) for st in states]


def _threshold_limits(theta, theta_big, asset):
    if theta == 0:
        if not theta_big > 1:
            raise ModelError("DEGENERATE", f"need Theta > 1, got {theta_big}")
        if not asset.log_drift > 0:
            raise ModelError("DEGENERATE", "gains-only episodes need mu > sigma^2/2 to end")
        return -np.inf, math.log(theta_big)
    _check_thresholds(theta, theta_big)
    return math.log(theta), math.log(theta_big)


def _episode_ledger(blocks):
    frames = []
    for stream, (exit_log, tau, _) in enumerate(blocks):
        t_end = np.cumsum(tau)
        x_exit = np.exp(exit_log)
        frames.append(pd.DataFrame({
            "stream": stream, "t_start": t_end - tau, "t_end": t_end,
            "x_exit": x_exit, "is_gain": x_exit > 1.0,
        }))
    return pd.concat(frames, ignore_index=True)


def _episode_summary(blocks, cfg, label):
    exit_log = np.concatenate([b[0] for b in blocks])
    tau = np.concatenate([b[1] for b in blocks])
    gain_time = np.concatenate([b[2] for b in blocks])
    n = exit_log.size

    q_gain = float(np.mean(exit_log > 0))
    phi_gain, phi_se = ratio_estimate(_batch_sums(gain_time, cfg.batches), _batch_sums(tau, cfg.batches))
    estimates = {"q_gain": q_gain, "phi_gain": phi_gain, "mean_duration": float(tau.mean())}
    errors = {
        "q_gain": binomial_standard_error(q_gain, n),
        "phi_gain": phi_se,
        "mean_duration": mean_standard_error(tau),
    }
    logger.info("%s: %d simulated, Q_G=%.4f", label, n, q_gain)
    ledger = _episode_ledger(blocks) if cfg.keep_ledger else None
    return EmpiricalStats(estimates, errors, n, ledger)


def _simulate_thresholds(theta, theta_big, asset, cfg, monitors):
    lo, hi = _threshold_limits(theta, theta_big, asset)
    jobs = list(enumerate(_block_sizes(cfg.n_episodes, cfg.block_size)))
    blocks = _map_blocks(lambda job: _threshold_block(job, lo, hi, asset, cfg, monitors), jobs, cfg.workers)
    return [
        _episode_summary([b[k] for b in blocks], cfg, f"threshold episodes (every {every} steps)")
        for k, every in enumerate(monitors)
    ]


def simulate_threshold_episodes(theta, theta_big, asset, cfg, monitor_every=1):
    """
    Episodes sold when x reaches Theta or theta.

    theta = 0 simulates a gains-only rule. monitor_every > 1 checks the
    thresholds only every few steps.
    """
    return _simulate_thresholds(theta, theta_big, asset, cfg, (monitor_every,))[0]


def _poisson_block(job, rho, asset, cfg):
    index, n = job
    rng = _stream(cfg.seed, STREAM_POISSON, index)
    tau = rng.exponential(1.0 / rho, size=n)
    z = _normals(rng, (n,), cfg.antithetic)
    log_exit = asset.log_drift * tau + asset.sigma * np.sqrt(tau) * z
    # position at a uniform time inside the episode, bridged to the exit value
    frac = rng.random(n)
    bridge = rng.standard_normal(n)
    log_mid = frac * log_exit + asset.sigma * np.sqrt(tau * frac * (1.0 - frac)) * bridge
    return log_exit, tau, tau * (log_mid > 0)


def simulate_poisson_episodes(rho, asset, cfg):
    """Episodes ending after an exponential(rho) holding time, independent of the price."""
    if not rho > 0:
        raise ModelError("DEGENERATE", f"Poisson intensity must be positive, got {rho}")
    jobs = list(enumerate(_block_sizes(cfg.n_episodes, cfg.block_size)))
    blocks = _map_blocks(lambda job: _poisson_block(job, rho, asset, cfg), jobs, cfg.workers)
    summary = _episode_summary(blocks, cfg, "Poisson episodes")

    x = np.exp(np.concatenate([b[0] for b in blocks]))
    gains, losses = x[x > 1.0], x[x < 1.0]
    estimates = dict(summary.estimates)
    errors = dict(summary.standard_errors)
    estimates["gain_level"] = float(gains.mean()) if gains.size else float("nan")
    estimates["loss_level"] = float(losses.mean()) if losses.size else float("nan")
    errors["gain_level"] = mean_standard_error(gains)
    errors["loss_level"] = mean_standard_error(losses)
    return EmpiricalStats(estimates, errors, summary.count, summary.ledger)


@dataclass(frozen=True)
class _AccountClass:
    n_accounts: int
    rules: tuple
    assets: tuple


def _account_classes(population, n_accounts):
    if not population:
        raise ModelError("INVALID_MIX", "population is empty")
    for member in population:
        if member.rule is None or member.asset is None:
            raise ModelError("INVALID_MIX", "simulation needs explicit rules and assets, not precomputed stats")
    if all(isinstance(m, InvestorType) for m in population):
        classes = []
        for member in population:
            count = int(round(member.pi * n_accounts))
            if count > 0:
                classes.append(_AccountClass(count, (member.rule,) * member.n, (member.asset,) * member.n))
        return classes
    if all(isinstance(m, HoldingGroup) for m in population):
        rules, assets = [], []
        for member in population:
            rules += [member.rule] * member.n
            assets += [member.asset] * member.n
        return [_AccountClass(n_accounts, tuple(rules), tuple(assets))]
    raise ModelError("INVALID_MIX", "population must be all investor types or all holding groups")


def _stock_limits(rule):
    if isinstance(rule, PoissonRule):
        return -np.inf, np.inf
    lo = -np.inf if rule.theta == 0 else math.log(rule.theta)
    return lo, math.log(rule.theta_big)


def _account_block(job, cls, cfg, total_steps, burn_steps):
    """
    Sale counts per account: realized gains, realized losses, paper gains and
    paper losses (positions held on days the account sold something).
    """
    class_index, block_index, n_acc = job
    rng = _stream(cfg.seed, STREAM_ACCOUNTS, class_index, block_index)
    S = len(cls.rules)
    dt = cfg.dt
    drift = np.array([a.log_drift * dt for a in cls.assets])[None, :, None]
    vol = np.array([a.sigma * math.sqrt(dt) for a in cls.assets])[None, :, None]
    var_step = np.array([a.variance * dt for a in cls.assets])[None, :, None]
    limits = np.array([_stock_limits(r) for r in cls.rules])
    lo, hi = limits[:, 0][None, :, None], limits[:, 1][None, :, None]
    poisson_cols = np.flatnonzero([isinstance(r, PoissonRule) for r in cls.rules])
    p_sale = np.array([-math.expm1(-cls.rules[j].rho * dt) for j in poisson_cols])[None, :, None]

    logx = np.zeros((n_acc, S))
    realized_gain = np.zeros(n_acc)
    realized_loss = np.zeros(n_acc)
    paper_gain = np.zeros(n_acc)
    paper_loss = np.zeros(n_acc)
    steps_idx = np.arange(cfg.chunk_steps)
    step0 = 0

    while step0 < total_steps:
        c = min(cfg.chunk_steps, total_steps - step0)
        k_idx = steps_idx[:c]
        z = rng.standard_normal((n_acc, S, c))
        uniforms = rng.random((n_acc, S, c))
        paths = logx[..., None] + np.cumsum(drift + vol * z, axis=2)
        poisson_hit = np.zeros((n_acc, S, c), dtype=bool)
        if poisson_cols.size:
            poisson_hit[:, poisson_cols, :] = rng.random((n_acc, poisson_cols.size, c)) < p_sale

        prev = np.concatenate([logx[..., None], paths[..., :-1]], axis=2)
        trigger, level = _crossings(paths, prev, lo, hi, uniforms, var_step, cfg.bridge)
        trigger |= poisson_hit
        start = np.zeros((n_acc, S), dtype=np.int64)
        ev_a, ev_s, ev_k, ev_level = [], [], [], []

        while True:
            valid = trigger & (k_idx[None, None, :] >= start[..., None])
            pending = valid.any(axis=2)
            if not pending.any():
                break
            a_idx, s_idx = np.nonzero(pending)
            k = np.argmax(valid[a_idx, s_idx], axis=1)
            sold = level[a_idx, s_idx, k]
            # sold and bought back: from step k on the new position is measured from the sale level
            paths[a_idx, s_idx] -= np.where(k_idx[None, :] >= k[:, None], sold[:, None], 0.0)
            row_prev = np.concatenate([logx[a_idx, s_idx][:, None], paths[a_idx, s_idx, :-1]], axis=1)
            hit, lev = _crossings(paths[a_idx, s_idx], row_prev, lo[0, s_idx], hi[0, s_idx],
                                  uniforms[a_idx, s_idx], var_step[0, s_idx], cfg.bridge)
            trigger[a_idx, s_idx] = hit | poisson_hit[a_idx, s_idx]
            level[a_idx, s_idx] = lev
            start[a_idx, s_idx] = k + 1
            ev_a.append(a_idx)
            ev_s.append(s_idx)
            ev_k.append(k)
            ev_level.append(sold)

        if ev_a:
            a_all, s_all, k_all = np.concatenate(ev_a), np.concatenate(ev_s), np.concatenate(ev_k)
            sold_level = np.concatenate(ev_level)
            keep = step0 + k_all >= burn_steps
            a_all, s_all, k_all, sold_level = a_all[keep], s_all[keep], k_all[keep], sold_level[keep]
            np.add.at(realized_gain, a_all[sold_level > 0], 1.0)
            np.add.at(realized_loss, a_all[sold_level < 0], 1.0)

            sold_now = np.zeros((n_acc, S, c), dtype=bool)
            sold_now[a_all, s_all, k_all] = True
            days = np.unique(a_all * c + k_all)
            ua, uk = days // c, days % c
            held = ~sold_now[ua, :, uk]
            levels = paths[ua, :, uk]
            np.add.at(paper_gain, ua, ((levels > 0) & held).sum(axis=1))
            np.add.at(paper_loss, ua, ((levels < 0) & held).sum(axis=1))

        logx = paths[..., -1].copy()
        step0 += c

    return realized_gain, realized_loss, paper_gain, paper_loss


def simulate_accounts(population, horizon_years, cfg):
    """
    Pooled PGR, PLR and O from simulated multi-stock accounts.

    Sales during a burn-in of five of the longest mean holding periods are not
    counted. Standard errors come from batches of accounts.
    """
    horizon = horizon_years if horizon_years is not None else (cfg.horizon_years or 20.0)
    classes = _account_classes(population, cfg.n_accounts)
    longest = max(rule_stats(r, a).mean_duration for cls in classes for r, a in zip(cls.rules, cls.assets))
    burn = BURN_IN_DURATIONS * longest
    total_steps = int(math.ceil((burn + horizon) / cfg.dt))
    burn_steps = int(math.ceil(burn / cfg.dt))
    logger.info("accounts: burn-in %.2f years, %d steps", burn, total_steps)

    jobs = []
    for ci, cls in enumerate(classes):
        per_block = max(1, cfg.block_size // len(cls.rules))
        for bi, n_acc in enumerate(_block_sizes(cls.n_accounts, per_block)):
            jobs.append((ci, bi, n_acc))
    blocks = _map_blocks(lambda job: _account_block(job, classes[job[0]], cfg, total_steps, burn_steps),
                         jobs, cfg.workers)
    rg, rl, pg, pl = (np.concatenate([b[i] for b in blocks]) for i in range(4))

    sales = int(rg.sum() + rl.sum())
    if sales < MIN_SALES:
        raise ModelError("HORIZON_TOO_SHORT", f"only {sales} sales after burn-in; lengthen the horizon")

    batches = min(cfg.batches, rg.size)

    def pooled(num, other):
        return ratio_estimate(_batch_sums(num, batches), _batch_sums(num + other, batches))

    pgr, pgr_se = pooled(rg, pg)
    plr, plr_se = pooled(rl, pl)
    phi_gain, phi_se = pooled(pg, pl)
    q_gain, q_se = pooled(rg, rl)
    if plr > 0:
        o = pgr / plr
        o_se = o * math.sqrt((pgr_se / pgr) ** 2 + (plr_se / plr) ** 2) if pgr > 0 else float("nan")
    else:
        o, o_se = math.inf, float("nan")

    estimates = {"pgr": pgr, "plr": plr, "o": o, "phi_gain": phi_gain, "q_gain": q_gain}
    errors = {"pgr": pgr_se, "plr": plr_se, "o": o_se, "phi_gain": phi_se, "q_gain": q_se}
    logger.info("accounts: %d sales, PGR=%.4f PLR=%.4f", sales, pgr, plr)
    return EmpiricalStats(estimates, errors, sales)


def dt_refinement_check(theta, theta_big, asset, cfg, factor=4):
    """
    Discretization drift of the threshold statistics.

    The same fine paths (step dt/factor) are checked at every step and at
    every factor-th step, so the two runs share all their randomness.
    """
    fine_cfg = cfg.replace(dt=cfg.dt / factor)
    fine, coarse = _simulate_thresholds(theta, theta_big, asset, fine_cfg, (1, factor))
    rows = []
    for name in fine.estimates:
        diff = fine.estimates[name] - coarse.estimates[name]
        se = fine.standard_errors[name]
        rows.append({
            "statistic": name, "coarse": coarse.estimates[name], "fine": fine.estimates[name],
            "difference": diff, "se": se, "within_se": bool(abs(diff) <= se),
        })
    return pd.DataFrame(rows)


def compare_to_closed_form(empirical, closed_forms, z_limit=3.0):
    """Estimate / closed form / SE / z table for the statistics both sides report."""
    tester = ConcordanceTester(z_limit=z_limit)
    report = tester.compare_many(empirical.estimates, closed_forms, empirical.standard_errors)
    tester.log_summary(report)
    return report
