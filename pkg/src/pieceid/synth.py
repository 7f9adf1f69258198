"""Synthetic paired score/audio corpora with known ground truth.

Every piece follows a smooth latent track on the unit sphere (a random walk
with a bounded step angle). The score view is the track plus angular noise.
The audio view is the track resampled by a per-piece tempo factor, optionally
with a repeated section, plus its own angular noise. A small fraction of
pieces are degenerate: both views are unrelated white noise.

Each piece draws from its own stream ``default_rng([seed, index])`` in a fixed
order, so changing one knob (say ``attention_mode``) leaves all other draws
unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Optional

import numpy as np

from .embedding import Corpus, Piece, SnippetSequence
from .errors import FragmentTooLong, InvalidConfig, NonPositive

SNIPPET_SECONDS = 2.0
HOP_SECONDS = 0.5
SYSTEMS_PER_PIECE = 30


@dataclass(frozen=True)
class SynthConfig:
    n_pieces: int = 321
    dim: int = 32
    mean_score_len: int = 422
    mean_audio_len: int = 523
    pair_noise_sigma: float = 3.8  # RMS tangent step between a view and its track
    tempo_warp_range: tuple = (0.7, 1.4)
    repeat_fraction: float = 0.26
    degenerate_fraction: float = 0.02
    attention_mode: bool = False
    seed: int = 0
    max_step_deg: float = 15.0
    length_sd: float = 0.25  # log-normal spread of track lengths
    min_len: int = 240
    tempo_sd: float = 0.15  # log-normal spread of tempo factors
    repeat_span: tuple = (0.2, 0.4)
    id_prefix: str = "p"

    def __post_init__(self):
        object.__setattr__(self, "tempo_warp_range", tuple(float(x) for x in self.tempo_warp_range))
        object.__setattr__(self, "repeat_span", tuple(float(x) for x in self.repeat_span))
        self.validate()

    def validate(self):
        if self.n_pieces < 0:
            raise InvalidConfig("n_pieces must be >= 0")
        for name in ("dim", "mean_score_len", "mean_audio_len", "min_len"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be >= 1")
        for name in ("repeat_fraction", "degenerate_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidConfig(f"{name} must lie in [0, 1], got {v}")
        if not self.pair_noise_sigma >= 0:
            raise InvalidConfig("pair_noise_sigma must be >= 0")
        lo, hi = self.tempo_warp_range
        if not (0 < lo <= 1.0 <= hi):
            raise InvalidConfig(f"tempo_warp_range {self.tempo_warp_range} must be positive and contain 1.0")
        a, b = self.repeat_span
        if not 0 < a <= b <= 1:
            raise InvalidConfig("repeat_span must satisfy 0 < low <= high <= 1")
        if not 0 < self.max_step_deg <= 180:
            raise InvalidConfig("max_step_deg must lie in (0, 180]")
        if self.length_sd < 0 or self.tempo_sd < 0:
            raise InvalidConfig("spreads must be >= 0")

    @property
    def effective_sigma(self) -> float:
        return self.pair_noise_sigma / 2 if self.attention_mode else self.pair_noise_sigma

    @property
    def snippets_per_system(self) -> int:
        return max(1, round(self.mean_score_len / SYSTEMS_PER_PIECE))


@dataclass(frozen=True)
class PiecePlan:
    """Everything about one piece that is decided before any vectors are drawn."""

    index: int
    piece_id: str
    track_len: int
    tempo: float
    audio_len: int  # before the repeat is inserted
    repeat: Optional[tuple]  # (start, length) in audio positions
    degenerate: bool

    @property
    def tags(self) -> frozenset:
        tags = set()
        if self.repeat is not None:
            tags.add("has_repeats")
        if self.degenerate:
            tags.add("degenerate")
        return frozenset(tags)


def piece_id(cfg: SynthConfig, i: int) -> str:
    width = max(4, len(str(max(cfg.n_pieces - 1, 0))))
    return f"{cfg.id_prefix}{i:0{width}d}"


def _draw_tempo(cfg: SynthConfig, u: float) -> float:
    lo, hi = cfg.tempo_warp_range
    if lo == hi:
        return lo
    center = math.log(cfg.mean_audio_len / cfg.mean_score_len)
    if cfg.tempo_sd == 0:
        return min(max(math.exp(center), lo), hi)
    dist = NormalDist(center, cfg.tempo_sd)
    a, b = dist.cdf(math.log(lo)), dist.cdf(math.log(hi))
    p = min(max(a + u * (b - a), 1e-12), 1 - 1e-12)
    return min(max(math.exp(dist.inv_cdf(p)), lo), hi)


def _plan(cfg: SynthConfig, i: int, rng: np.random.Generator) -> PiecePlan:
    z_len, u_tempo, u_rep, u_span, u_start, u_deg = rng.random(6)
    mu = math.log(cfg.mean_score_len) - cfg.length_sd ** 2 / 2
    z = NormalDist().inv_cdf(min(max(z_len, 1e-12), 1 - 1e-12))
    track_len = max(cfg.min_len, round(math.exp(mu + cfg.length_sd * z)))
    tempo = _draw_tempo(cfg, u_tempo)
    audio_len = max(1, round(tempo * track_len))
    repeat = None
    if u_rep < cfg.repeat_fraction:
        lo, hi = cfg.repeat_span
        length = max(1, round((lo + u_span * (hi - lo)) * audio_len))
        start = min(int(u_start * (audio_len - length + 1)), audio_len - length)
        repeat = (start, length)
    return PiecePlan(i, piece_id(cfg, i), track_len, tempo, audio_len, repeat,
                     u_deg < cfg.degenerate_fraction)


def plan_piece(cfg: SynthConfig, i: int) -> PiecePlan:
    return _plan(cfg, i, np.random.default_rng([cfg.seed, i]))


def _tangent(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Component of each row of g orthogonal to the matching row of x."""
    return g - np.sum(g * x, axis=-1, keepdims=True) * x


def latent_track(n: int, dim: int, max_step_deg: float, rng: np.random.Generator) -> np.ndarray:
    """Spherical random walk: each step turns by a uniform angle up to ``max_step_deg``."""
    start = rng.standard_normal(dim)
    dirs = rng.standard_normal((n - 1, dim))
    angles = rng.random(n - 1) * math.radians(max_step_deg)
    out = np.empty((n, dim))
    out[0] = start / np.linalg.norm(start)
    for t in range(1, n):
        x = out[t - 1]
        u = dirs[t - 1] - dirs[t - 1].dot(x) * x
        u /= np.linalg.norm(u)
        y = math.cos(angles[t - 1]) * x + math.sin(angles[t - 1]) * u
        out[t] = y / np.linalg.norm(y)
    return out


def add_angular_noise(x: np.ndarray, sigma: float, g: np.ndarray) -> np.ndarray:
    """Tilt unit rows by a random tangent step of RMS length ``sigma``, then renormalize.

    A row moves by the angle ``arctan(|step|)``, always below 90 degrees, so
    views drift steadily away from the clean track as sigma grows. ``g``
    carries the standard normal draws so callers can share them across noise
    levels.
    """
    if sigma == 0:
        return x
    scale = sigma / math.sqrt(x.shape[1] - 1) if x.shape[1] > 1 else sigma
    y = x + _tangent(x, g) * scale
    return y / np.linalg.norm(y, axis=1, keepdims=True)


def resample(track: np.ndarray, length: int) -> np.ndarray:
    """Stretch a track to ``length`` positions by linear interpolation on the sphere."""
    n = len(track)
    if length == n:
        return track.copy()
    if length == 1 or n == 1:
        return track[np.zeros(length, dtype=int)].copy()
    pos = np.arange(length) * ((n - 1) / (length - 1))
    lo = np.minimum(np.floor(pos).astype(int), n - 2)
    w = (pos - lo)[:, None]
    out = (1 - w) * track[lo] + w * track[lo + 1]
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def insert_repeat(x: np.ndarray, start: int, length: int) -> np.ndarray:
    """Play ``x[start:start+length]`` twice in a row."""
    return np.concatenate([x[:start + length], x[start:start + length], x[start + length:]])


def _white(n, dim, rng):
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def generate_piece(cfg: SynthConfig, i: int) -> Piece:
    rng = np.random.default_rng([cfg.seed, i])
    plan = _plan(cfg, i, rng)
    track = latent_track(plan.track_len, cfg.dim, cfg.max_step_deg, rng)
    audio = resample(track, plan.audio_len)
    if plan.repeat is not None:
        audio = insert_repeat(audio, *plan.repeat)
    g_score = rng.standard_normal(track.shape)
    g_audio = rng.standard_normal(audio.shape)
    sigma = cfg.effective_sigma
    score = add_angular_noise(track, sigma, g_score)
    audio = add_angular_noise(audio, sigma, g_audio)
    if plan.degenerate:
        score = _white(len(score), cfg.dim, rng)
        audio = _white(len(audio), cfg.dim, rng)
    pid = plan.piece_id
    return Piece(pid, SnippetSequence.from_raw(score, "score", pid),
                 SnippetSequence.from_raw(audio, "audio", pid), plan.tags)


def generate_corpus(cfg: SynthConfig) -> Corpus:
    """Deterministic corpus of ``cfg.n_pieces`` paired pieces."""
    cfg.validate()
    return Corpus([generate_piece(cfg, i) for i in range(cfg.n_pieces)], cfg.dim)


def sample_fragment(seq: SnippetSequence, length: int, rng) -> SnippetSequence:
    """Contiguous ``length``-snippet slice at a uniformly random start."""
    length = int(length)
    if length < 1:
        raise NonPositive("fragment length must be >= 1")
    if length > len(seq):
        raise FragmentTooLong(f"fragment of {length} snippets exceeds {seq.piece_id!r} "
                              f"({len(seq)} snippets)")
    start = int(rng.integers(0, len(seq) - length + 1))
    return seq.slice(start, length)


def seconds_to_snippets(seconds: float) -> int:
    """Number of 2 s windows at a 0.5 s hop that fit in ``seconds`` of audio."""
    if not seconds > 0:
        raise NonPositive(f"duration must be positive, got {seconds}")
    if seconds < SNIPPET_SECONDS:
        raise NonPositive(f"{seconds} s is shorter than one {SNIPPET_SECONDS} s snippet")
    return math.floor((seconds - SNIPPET_SECONDS) / HOP_SECONDS + 1e-9) + 1


def systems_to_snippets(systems: int, per_system: Optional[int] = None) -> int:
    """Score snippets covered by ``systems`` staff systems."""
    if not systems > 0:
        raise NonPositive(f"system count must be positive, got {systems}")
    if per_system is None:
        per_system = SynthConfig().snippets_per_system
    return int(systems) * int(per_system)


def mean_pair_distance(piece: Piece, plan: PiecePlan) -> float:
    """Mean cosine distance between score snippets and the audio snippets at the same track position."""
    n = plan.track_len
    pos = np.round(np.arange(n) * (plan.audio_len - 1) / max(n - 1, 1)).astype(int)
    if plan.repeat is not None:
        s, r = plan.repeat
        pos = np.where(pos >= s + r, pos + r, pos)
    a, b = piece.score.values, piece.audio.values[pos]
    return float(np.mean(1.0 - np.sum(a * b, axis=1).clip(-1, 1)))
