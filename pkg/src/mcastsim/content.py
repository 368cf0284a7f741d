"""Short-video catalog: encoding ladders and segment structure."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from mcastsim.errors import ConfigError, StateError


class Tier(NamedTuple):
    bitrate_bps: float
    quality: float


@dataclass(frozen=True)
class BitrateLadder:
    tiers: tuple[Tier, ...]

    def __len__(self) -> int:
        return len(self.tiers)

    @property
    def top(self) -> int:
        return len(self.tiers) - 1

    def _check(self, tier: int) -> None:
        if not 0 <= tier < len(self.tiers):
            raise StateError(f"tier {tier} out of range for a {len(self.tiers)}-tier ladder")

    def bitrate(self, tier: int) -> float:
        self._check(tier)
        return self.tiers[tier].bitrate_bps

    def quality(self, tier: int) -> float:
        self._check(tier)
        return self.tiers[tier].quality

    def truncated(self, top: int) -> BitrateLadder:
        """Ladder restricted to tiers ``0..top``."""
        self._check(top)
        return BitrateLadder(self.tiers[: top + 1])


def validate_ladder(tiers) -> BitrateLadder:
    """Build a ladder from ``(bitrate_bps, quality)`` pairs, both strictly increasing."""
    tiers = tuple(Tier(float(b), float(q)) for b, q in tiers)
    if not tiers:
        raise ConfigError("bitrate ladder is empty")
    for b, q in tiers:
        if not b > 0:
            raise ConfigError(f"tier bitrate must be > 0, got {b}")
        if not 0.0 <= q <= 1.0:
            raise ConfigError(f"tier quality must lie in [0, 1], got {q}")
    for lo, hi in zip(tiers, tiers[1:]):
        if not hi.bitrate_bps > lo.bitrate_bps:
            raise ConfigError(f"ladder bitrates not strictly increasing: {lo.bitrate_bps} then {hi.bitrate_bps}")
        if not hi.quality > lo.quality:
            raise ConfigError(f"ladder qualities not strictly increasing: {lo.quality} then {hi.quality}")
    return BitrateLadder(tiers)


@dataclass(frozen=True)
class VideoAsset:
    id: str
    duration_s: float
    segment_s: float
    ladder: BitrateLadder

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ConfigError(f"asset {self.id}: duration_s must be > 0")
        if not self.segment_s > 0:
            raise ConfigError(f"asset {self.id}: segment_s must be > 0")

    @property
    def n_segments(self) -> int:
        # tolerate float noise such as 15 / 0.1
        return max(1, math.ceil(self.duration_s / self.segment_s - 1e-9))

    def segment_length(self, index: int) -> float:
        if not 0 <= index < self.n_segments:
            raise StateError(f"asset {self.id}: segment {index} out of range")
        return min(self.segment_s, self.duration_s - index * self.segment_s)


def segment_bits(asset: VideoAsset, tier: int, segment: int = 0) -> float:
    """Bits in one segment at ``tier``; the final partial segment is prorated."""
    return asset.ladder.bitrate(tier) * asset.segment_length(segment)
