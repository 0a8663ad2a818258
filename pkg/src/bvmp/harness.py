"""Monte-Carlo BER/complexity campaigns over an SNR grid.

Per-frame randomness comes from a counter-based Philox stream keyed by
(master seed, SNR index, frame index), so results are bit-identical
regardless of worker count or scheduling.  Stop rules are evaluated at
deterministic round boundaries only.
"""

from __future__ import annotations

import json
import multiprocessing as mp
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from .channel import ChannelParams, channel_llr, design_rate, transmit
from .code import LdpcCode, LdpcEncoder
from .decoder import DecoderConfig, decode, STOP_STALL

FIRST_ROUND_FRAMES = 256
MAX_ROUND_FRAMES = 8192

CSV_COLUMNS = ("snr_db", "ber", "fer", "mean_sub_iterations", "frames")


@dataclass
class CampaignConfig:
    """Declarative description of one simulation campaign."""

    snr_db_grid: list
    mode: str
    code_n: int = 1000
    code_dv: int = 3
    code_dc: int = 6
    code_seed: int = 1
    code_alist: str | None = None
    q: int = 10
    bins: int = 20
    max_iterations: int = 100
    stall_window: int = 10
    stall_enabled: bool | None = None
    max_frames: int = 1_000_000
    min_frame_errors: int = 100
    master_seed: int = 0
    codeword_mode: str = "zero"  # "zero" or "random"
    workers: int = 0  # 0 = all available
    tables_path: str | None = None
    schedule_path: str | None = None
    out_prefix: str | None = None

    def __post_init__(self):
        self.snr_db_grid = [float(s) for s in self.snr_db_grid]
        if not self.snr_db_grid:
            raise ValueError("snr grid must be non-empty")
        if self.min_frame_errors < 1:
            raise ValueError("min_frame_errors must be >= 1")
        if self.codeword_mode not in ("zero", "random"):
            raise ValueError("codeword_mode must be 'zero' or 'random'")

    @classmethod
    def from_json_dict(cls, d: dict) -> "CampaignConfig":
        return cls(**d)


@dataclass
class PointResult:
    """Aggregated statistics for one SNR grid point."""

    snr_db: float
    frames: int = 0
    bit_errors: int = 0
    frame_errors: int = 0
    success_count: int = 0
    stall_stops: int = 0
    sub_iterations_sum: int = 0
    iterations_sum: int = 0
    bit_errors_sq_sum: int = 0
    sub_iterations_sq_sum: int = 0

    def merge(self, other: "PointResult"):
        assert self.snr_db == other.snr_db
        for name in (
            "frames",
            "bit_errors",
            "frame_errors",
            "success_count",
            "stall_stops",
            "sub_iterations_sum",
            "iterations_sum",
            "bit_errors_sq_sum",
            "sub_iterations_sq_sum",
        ):
            setattr(self, name, getattr(self, name) + getattr(other, name))

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self._n) if self.frames else 0.0

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0

    @property
    def mean_sub_iterations(self) -> float:
        return self.sub_iterations_sum / self.frames if self.frames else 0.0

    @property
    def mean_iterations(self) -> float:
        return self.iterations_sum / self.frames if self.frames else 0.0

    _n: int = 1  # code length, set by the campaign for BER computation

    def stderr_ber(self) -> float:
        """Standard error of the BER from per-frame bit-error variance."""
        if self.frames < 2:
            return float("inf")
        mean = self.bit_errors / self.frames
        var = max(self.bit_errors_sq_sum / self.frames - mean**2, 0.0)
        return float(np.sqrt(var / self.frames) / self._n)

    def stderr_sub_iterations(self) -> float:
        if self.frames < 2:
            return float("inf")
        mean = self.sub_iterations_sum / self.frames
        var = max(self.sub_iterations_sq_sum / self.frames - mean**2, 0.0)
        return float(np.sqrt(var / self.frames))

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d.pop("_n")
        d.update(
            ber=self.ber,
            fer=self.fer,
            mean_sub_iterations=self.mean_sub_iterations,
            mean_iterations=self.mean_iterations,
            stderr_ber=self.stderr_ber(),
            stderr_sub_iterations=self.stderr_sub_iterations(),
        )
        return d


@dataclass
class CampaignResult:
    points: list
    config_echo: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "config": self.config_echo,
            "points": [p.to_json_dict() for p in self.points],
        }

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for p in self.points:
            lines.append(
                f"{p.snr_db!r},{p.ber!r},{p.fer!r},{p.mean_sub_iterations!r},{p.frames}"
            )
        return "\n".join(lines) + "\n"

    def save(self, prefix: str):
        with open(prefix + ".json", "w") as f:
            json.dump(self.to_json_dict(), f, sort_keys=True, indent=1)
        with open(prefix + ".csv", "w") as f:
            f.write(self.to_csv())


def frame_rng(master_seed: int, snr_index: int, frame_index: int) -> np.random.Generator:
    """Independent Philox stream for one frame; streams never overlap."""
    counter = (snr_index << 128) | (frame_index << 64)
    return np.random.Generator(np.random.Philox(key=master_seed, counter=counter))


# Worker-process state, installed once per pool by _init_worker.
_CTX: dict = {}


def _init_worker(code, decoder_config, master_seed, codeword_mode):
    _CTX["code"] = code
    _CTX["decoder_config"] = decoder_config
    _CTX["master_seed"] = master_seed
    _CTX["codeword_mode"] = codeword_mode
    _CTX["encoder"] = LdpcEncoder(code) if codeword_mode == "random" else None


def _run_frames(args) -> PointResult:
    snr_index, snr_db, start, count = args
    code = _CTX["code"]
    config = _CTX["decoder_config"]
    params = ChannelParams(snr_db, design_rate(code.dv, code.dc))
    out = PointResult(snr_db=snr_db)
    out._n = code.n
    for frame in range(start, start + count):
        rng = frame_rng(_CTX["master_seed"], snr_index, frame)
        if _CTX["codeword_mode"] == "zero":
            tx = np.zeros(code.n, dtype=np.uint8)
        else:
            enc = _CTX["encoder"]
            tx = enc.encode(rng.integers(0, 2, enc.dimension, dtype=np.uint8))
        y = transmit(tx, params, rng)
        result = decode(code, channel_llr(y, params), config, rng)
        errors = int(np.count_nonzero(result.bits != tx))
        out.frames += 1
        out.bit_errors += errors
        out.bit_errors_sq_sum += errors * errors
        out.frame_errors += errors > 0
        out.success_count += result.success
        out.stall_stops += result.stop_reason == STOP_STALL
        out.sub_iterations_sum += result.sub_iterations
        out.sub_iterations_sq_sum += result.sub_iterations**2
        out.iterations_sum += result.iterations
    return out


def run_point(
    code: LdpcCode,
    snr_db: float,
    snr_index: int,
    decoder_config: DecoderConfig,
    master_seed: int = 0,
    max_frames: int = 1_000_000,
    min_frame_errors: int = 100,
    codeword_mode: str = "zero",
    workers: int = 0,
) -> PointResult:
    """Simulate one SNR point until the stop rule is met.

    Frames are processed in rounds of deterministic size (growing from
    FIRST_ROUND_FRAMES up to MAX_ROUND_FRAMES); the stop rule is evaluated
    only at round boundaries, so the set of simulated frames is independent
    of the worker count.
    """
    workers = workers or (os.cpu_count() or 1)
    total = PointResult(snr_db=snr_db)
    total._n = code.n
    pool = None
    try:
        if workers > 1:
            pool = mp.get_context("fork").Pool(
                workers,
                initializer=_init_worker,
                initargs=(code, decoder_config, master_seed, codeword_mode),
            )
        else:
            _init_worker(code, decoder_config, master_seed, codeword_mode)
        next_frame = 0
        round_frames = FIRST_ROUND_FRAMES
        while total.frames < max_frames and total.frame_errors < min_frame_errors:
            count = min(round_frames, max_frames - total.frames)
            tasks = []
            chunk = max(1, -(-count // workers))  # ceil division
            start = next_frame
            while start < next_frame + count:
                size = min(chunk, next_frame + count - start)
                tasks.append((snr_index, snr_db, start, size))
                start += size
            if pool is not None:
                parts = pool.map(_run_frames, tasks)
            else:
                parts = [_run_frames(t) for t in tasks]
            for part in parts:
                total.merge(part)
            next_frame += count
            round_frames = min(round_frames * 2, MAX_ROUND_FRAMES)
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return total


def resolve_code(config: CampaignConfig) -> LdpcCode:
    from .code import from_alist, generate_regular

    if config.code_alist:
        with open(config.code_alist) as f:
            return from_alist(f.read())
    return generate_regular(config.code_n, config.code_dv, config.code_dc, config.code_seed)


def build_decoder_config(config: CampaignConfig, tables, schedule=None) -> DecoderConfig:
    from .decoder import MODE_STATE_ADAPTIVE

    adaptive = config.mode == MODE_STATE_ADAPTIVE
    return DecoderConfig(
        mode=config.mode,
        tables=tables,
        q_fixed=None if adaptive else config.q,
        schedule=schedule if adaptive else None,
        max_iterations=config.max_iterations,
        stall_window=config.stall_window,
        state_bins=config.bins,
        stall_enabled=config.stall_enabled,
    )


def run_campaign(config: CampaignConfig, code=None, tables=None, schedule=None) -> CampaignResult:
    """Run the full SNR grid and optionally write CSV/JSON result files.

    Artifacts (code, tables, schedule) may be passed in memory; otherwise
    they are loaded from the paths in the config.
    """
    from .messages import W2LTable
    from .schedule import LengthSchedule

    if code is None:
        code = resolve_code(config)
    if tables is None:
        if not config.tables_path:
            raise ValueError("no tables given and no tables_path configured")
        tables = W2LTable.load(config.tables_path)
        tables.validate()
    if schedule is None and config.schedule_path:
        schedule = LengthSchedule.load(config.schedule_path)
    decoder_config = build_decoder_config(config, tables, schedule)
    points = []
    for snr_index, snr_db in enumerate(config.snr_db_grid):
        points.append(
            run_point(
                code,
                snr_db,
                snr_index,
                decoder_config,
                master_seed=config.master_seed,
                max_frames=config.max_frames,
                min_frame_errors=config.min_frame_errors,
                codeword_mode=config.codeword_mode,
                workers=config.workers,
            )
        )
    result = CampaignResult(points=points, config_echo=asdict(config))
    if config.out_prefix:
        result.save(config.out_prefix)
    return result
