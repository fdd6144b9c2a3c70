"""Finite-state fading wiretap channel: rates, simulation, key protocol.

The channel takes one of L gain values per slot on each leg, with a joint
probability table. A layer allocation assigns power p[l] to layer l, giving
the successive-decoding layer rates

    r[l] = log(1 + h[l] p[l] / (1 + h[l] sum_{i>l} p[i])).

A receiver in state l decodes layers 1..l (idealized decoding; no codeword
error events). The per-slot reward when the legitimate state l1 beats the
eavesdropper state l2 is

    sum_{l=l2+1}^{l1} [ r[l] - log(1 + h[l2] p[l] / (1 + h[l2] sum_{i>l} p[i])) ],

and the expected reward over the joint table is the achievable key rate of
the finite-state scheme. run_protocol plays the whole loop at message
granularity: random per-layer messages, feedback of the top decoded layer,
key extraction from the concatenated decoded messages by modular binning.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import channels as ch
from .errors import DimensionMismatch, DomainError, InstanceTooLarge
from .power_allocation import PowerProfile

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class LStateChannel:
    """Ascending gain support plus an L x L joint table for (h1, h2)."""

    gains: tuple
    joint: tuple

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        j = np.asarray(self.joint, dtype=float)
        if g.ndim != 1 or g.size < 1:
            raise DomainError("gains must be a nonempty 1-d sequence")
        if np.any(g < 0) or np.any(np.diff(g) <= 0):
            raise DomainError("gains must be strictly ascending and nonnegative")
        if j.shape != (g.size, g.size):
            raise DimensionMismatch(f"joint table must be {g.size}x{g.size}")
        if np.any(j < 0) or abs(j.sum() - 1.0) > 1e-12:
            raise DomainError("joint entries must be nonnegative and sum to 1")
        object.__setattr__(self, "gains", tuple(float(v) for v in g))
        object.__setattr__(self, "joint", tuple(tuple(float(v) for v in row) for row in j))

    @property
    def L(self) -> int:
        return len(self.gains)

    def joint_array(self) -> np.ndarray:
        return np.asarray(self.joint, dtype=float)

    def bob_marginal(self) -> np.ndarray:
        return self.joint_array().sum(axis=1)

    def to_json(self) -> str:
        return json.dumps({"gains": list(self.gains),
                           "joint": [list(r) for r in self.joint]})

    @classmethod
    def from_json(cls, text: str) -> "LStateChannel":
        data = json.loads(text)
        return cls(tuple(data["gains"]), tuple(tuple(r) for r in data["joint"]))


def load_channel_json(path: str | Path) -> tuple[LStateChannel, Optional[np.ndarray]]:
    """Read a channel file; an optional "powers" array rides along for CLIs."""
    data = json.loads(Path(path).read_text())
    channel = LStateChannel(tuple(data["gains"]), tuple(tuple(r) for r in data["joint"]))
    powers = np.asarray(data["powers"], dtype=float) if "powers" in data else None
    return channel, powers


def layer_rates(gains, powers) -> np.ndarray:
    """Successive-decoding rate of each layer for the given power split."""
    g = np.asarray(gains, dtype=float)
    p = np.asarray(powers, dtype=float)
    if g.shape != p.shape or g.ndim != 1:
        raise DimensionMismatch("gains and powers must be matching 1-d arrays")
    if np.any(np.diff(g) <= 0):
        raise DomainError("gains must be strictly ascending")
    if np.any(p < 0):
        raise DomainError("powers must be nonnegative")
    above = _power_above(p)
    return np.log1p(g * p / (1.0 + g * above))


def _power_above(powers: np.ndarray) -> np.ndarray:
    # sum_{i>l} p[i] for each l
    return np.concatenate([np.cumsum(powers[::-1])[::-1][1:], [0.0]])


@dataclass(frozen=True)
class LayerAllocation:
    """Per-layer powers and the rates they induce on a gain support."""

    powers: tuple
    rates: tuple

    @classmethod
    def from_powers(cls, gains, powers) -> "LayerAllocation":
        r = layer_rates(gains, powers)
        return cls(tuple(float(v) for v in np.asarray(powers, dtype=float)),
                   tuple(float(v) for v in r))

    @property
    def total_power(self) -> float:
        return float(sum(self.powers))

    def powers_array(self) -> np.ndarray:
        return np.asarray(self.powers, dtype=float)

    def rates_array(self) -> np.ndarray:
        return np.asarray(self.rates, dtype=float)


def _check_consistent(channel: LStateChannel, alloc: LayerAllocation) -> None:
    if len(alloc.powers) != channel.L:
        raise DimensionMismatch(
            f"allocation has {len(alloc.powers)} layers for an L={channel.L} channel")
    expect = layer_rates(channel.gains, alloc.powers_array())
    if np.max(np.abs(expect - alloc.rates_array())) > 1e-12 * max(1.0, np.max(np.abs(expect))):
        raise DomainError("allocation rates are stale for this gain support")


def reward_table(channel: LStateChannel, alloc: LayerAllocation) -> np.ndarray:
    """W[l1, l2]: per-slot reward when states are (l1, l2); zero on/below the diagonal."""
    _check_consistent(channel, alloc)
    g = np.asarray(channel.gains)
    p = alloc.powers_array()
    r = alloc.rates_array()
    above = _power_above(p)
    # eve_rate[l2, l] = log(1 + h[l2] p[l] / (1 + h[l2] * above[l]))
    eve_rate = np.log1p(g[:, None] * p[None, :] / (1.0 + g[:, None] * above[None, :]))
    diff = r[None, :] - eve_rate                      # [l2, l]
    csum = np.cumsum(diff, axis=1)                    # prefix over l
    L = channel.L
    W = np.zeros((L, L))
    for l2 in range(L):
        for l1 in range(l2 + 1, L):
            W[l1, l2] = csum[l2, l1] - csum[l2, l2]
    return W


def finite_state_key_rate(channel: LStateChannel, alloc: LayerAllocation) -> float:
    """Expected per-slot reward: the achievable key rate of the L-state scheme."""
    W = reward_table(channel, alloc)
    return float(np.sum(channel.joint_array() * W))


def average_decodable_rate(channel: LStateChannel, alloc: LayerAllocation) -> float:
    """Mean total rate the legitimate receiver decodes per slot."""
    _check_consistent(channel, alloc)
    cum = np.cumsum(alloc.rates_array())
    return float(np.sum(channel.bob_marginal() * cum))


def discretize_profile(profile: PowerProfile, pair: ch.ChannelPair, L: int,
                       span: float = 1.0) -> tuple[LStateChannel, LayerAllocation]:
    """Quantize a continuous profile back to an L-state channel.

    Gain cells are quantile-spaced in the legitimate law over
    [x0 (1 - span), x1 (1 + span)]; cell tails absorb the leftover mass so
    the representative gains cover essentially the whole gain range (cells
    below x0 simply get zero power). Layer powers integrate the density over
    each cell, the joint table is the product of the binned marginals.
    """
    if L < 2:
        raise DomainError("need at least two states")
    if isinstance(pair.bob, ch.Constant) or isinstance(pair.eve, ch.Constant):
        raise DomainError("discretization needs continuous gain laws on both legs")
    lo = max(profile.x0 * (1.0 - span), 0.0)
    hi = profile.x1 * (1.0 + span)
    q_lo, q_hi = ch.eval_cdf(pair.bob, lo), ch.eval_cdf(pair.bob, hi)
    if not q_hi < 1.0:
        q_hi = 1.0 - 1e-12
    edges_q = np.linspace(q_lo, q_hi, L + 1)
    edges = np.array([ch.inverse_cdf(pair.bob, q) for q in edges_q])
    gains = np.array([ch.inverse_cdf(pair.bob, q)
                      for q in 0.5 * (edges_q[:-1] + edges_q[1:])])
    if np.any(np.diff(gains) <= 0):
        raise DomainError("quantile grid collapsed; law too concentrated for this L")
    powers = np.maximum(profile.interference(edges[:-1]) - profile.interference(edges[1:]), 0.0)

    def binned(dist):
        inner = np.array([ch.eval_cdf(dist, e) for e in edges[1:-1]])
        return np.diff(np.concatenate([[0.0], inner, [1.0]]))

    joint = np.outer(binned(pair.bob), binned(pair.eve))
    channel = LStateChannel(tuple(gains), tuple(tuple(row) for row in joint))
    alloc = LayerAllocation.from_powers(gains, powers)
    return channel, alloc


@dataclass
class ProtocolOutcome:
    """Record of a simulated run: states, rewards, and (optionally) keys."""

    slots: int
    feedback_indices: np.ndarray          # 1-based top decoded layer per slot
    eve_indices: np.ndarray               # 1-based eavesdropper state per slot
    rewards: np.ndarray
    accumulated_rate_nats: float
    key_bits: int = 0
    alice_key: Optional[int] = None
    bob_key: Optional[int] = None

    @property
    def keys_match(self) -> bool:
        return self.alice_key == self.bob_key

    def reward_samples(self, gains) -> list:
        from .key_rate import RewardSample

        g = np.asarray(gains, dtype=float)
        return [RewardSample(float(g[b - 1]), float(g[e - 1]), float(w))
                for b, e, w in zip(self.feedback_indices, self.eve_indices, self.rewards)]

    def to_json(self) -> str:
        return json.dumps({
            "slots": self.slots,
            "feedback_indices": self.feedback_indices.tolist(),
            "eve_indices": self.eve_indices.tolist(),
            "accumulated_rate_nats": self.accumulated_rate_nats,
            "key_bits": self.key_bits,
            "keys_match": self.keys_match,
        })


def _draw_states(channel: LStateChannel, slots: int,
                 rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    L = channel.L
    flat = rng.choice(L * L, size=slots, p=channel.joint_array().ravel())
    return flat // L, flat % L        # 0-based (bob, eve)


def simulate_rewards(channel: LStateChannel, alloc: LayerAllocation, slots: int,
                     seed: int) -> tuple[float, float, ProtocolOutcome]:
    """Draw (l1, l2) per slot and average the realized rewards.

    Slots are sharded deterministically on (seed, shard index), so the
    result does not depend on how shards would be scheduled.
    """
    if slots < 1:
        raise DomainError("slots must be >= 1")
    W = reward_table(channel, alloc)
    shard = 1 << 17
    bob = np.empty(slots, dtype=np.int64)
    eve = np.empty(slots, dtype=np.int64)
    done, k = 0, 0
    while done < slots:
        m = min(shard, slots - done)
        rng = np.random.default_rng([seed, k])
        b, e = _draw_states(channel, m, rng)
        bob[done:done + m] = b
        eve[done:done + m] = e
        done += m
        k += 1
    rewards = W[bob, eve]
    mean = float(rewards.mean())
    std_err = float(rewards.std(ddof=1) / math.sqrt(slots)) if slots > 1 else 0.0
    outcome = ProtocolOutcome(
        slots=slots, feedback_indices=bob + 1, eve_indices=eve + 1,
        rewards=rewards, accumulated_rate_nats=float(rewards.sum()))
    return mean, std_err, outcome


def _message_bits(alloc: LayerAllocation, scale: int) -> np.ndarray:
    return np.array([int(round(scale * r / _LN2)) for r in alloc.rates], dtype=np.int64)


def _draw_messages(n_bits: np.ndarray, slots: int, rng: np.random.Generator) -> list:
    """msgs[m][l]: uniformly random integer of n_bits[l] bits."""
    msgs = []
    for _ in range(slots):
        row = []
        for b in n_bits:
            if b == 0:
                row.append(0)
                continue
            raw = int.from_bytes(rng.bytes((int(b) + 7) // 8), "big")
            row.append(raw & ((1 << int(b)) - 1))
        msgs.append(row)
    return msgs


def _concat_decoded(msgs, n_bits, top_layer) -> int:
    """One-to-one map from decoded messages to an integer.

    Slots in order, layers ascending within a slot; each message is shifted
    below everything appended before it, so the last slot's top layer lands
    at the lowest bits.
    """
    v = 0
    for m, top in enumerate(top_layer):
        for l in range(int(top)):
            if n_bits[l] == 0:
                continue
            v = (v << int(n_bits[l])) | msgs[m][l]
    return v


def run_protocol(channel: LStateChannel, alloc: LayerAllocation, M: int,
                 scale: int, seed: int,
                 key_bits: Optional[int] = None) -> ProtocolOutcome:
    """Play the key-generation loop end to end at message granularity.

    Per slot: states are drawn, every layer carries a fresh random message of
    round(scale * r[l] / log 2) bits, the legitimate side decodes layers up
    to its state and feeds that index back. Both parties then map their
    decoded messages through the same concatenation and reduce modulo
    2^key_bits; the default key length spends the realized reward budget,
    floor(sum_m reward_m * scale / log 2). Agreement is checked, never
    assumed.
    """
    if M < 1:
        raise DomainError("M must be >= 1")
    if scale < 1:
        raise DomainError("scale must be >= 1")
    W = reward_table(channel, alloc)
    n_bits = _message_bits(alloc, scale)
    rng = np.random.default_rng([seed, 0])
    bob_state, eve_state = _draw_states(channel, M, rng)
    msgs = _draw_messages(n_bits, M, rng)
    rewards = W[bob_state, eve_state]
    if key_bits is None:
        key_bits = int(math.floor(rewards.sum() * scale / _LN2))
    # alice works from the feedback indices, bob from his own decoding record;
    # identical by construction, computed twice on purpose
    feedback = bob_state + 1
    alice_v = _concat_decoded(msgs, n_bits, feedback)
    bob_v = _concat_decoded(msgs, n_bits, bob_state + 1)
    modulus = 1 << key_bits
    outcome = ProtocolOutcome(
        slots=M, feedback_indices=feedback, eve_indices=eve_state + 1,
        rewards=rewards, accumulated_rate_nats=float(rewards.sum()),
        key_bits=key_bits, alice_key=alice_v % modulus, bob_key=bob_v % modulus)
    if not outcome.keys_match:
        raise AssertionError("key disagreement: the decoded-message map is broken")
    return outcome


def genie_share_bits(channel: LStateChannel, alloc: LayerAllocation, l1: int, l2: int,
                     scale: int) -> np.ndarray:
    """Bits of each layer's message revealed to the eavesdropper by the genie.

    Layers the legitimate side decodes (l <= l1) are never shared; an
    undecodable layer l > l1 reveals the excess of its rate over what the
    eavesdropper's channel could carry for it,
    max(0, r[l] - log(1 + h[l2] p[l] / (1 + h[l2] sum_{i>l} p[i]))).
    """
    g = np.asarray(channel.gains)
    p = alloc.powers_array()
    r = alloc.rates_array()
    above = _power_above(p)
    eve_rate = np.log1p(g[l2 - 1] * p / (1.0 + g[l2 - 1] * above))
    share = np.maximum(r - np.minimum(r, eve_rate), 0.0)
    share[: l1] = 0.0
    return np.array([int(round(scale * s / _LN2)) for s in share], dtype=np.int64)


def toy_equivocation(channel: LStateChannel, alloc: LayerAllocation, M: int,
                     scale: int, seed: int,
                     key_bits: Optional[int] = None) -> tuple[float, float]:
    """Exact conditional key entropy at the eavesdropper, by enumeration.

    The eavesdropper's knowledge model: in each slot she knows the messages
    of layers up to her own state in full, plus the genie share of layers the
    legitimate side could not decode. Those shared layers never enter the
    key (only decoded messages do) and all messages are independent, so they
    marginalize out exactly; what remains unknown are the messages of layers
    between the two states. The key posterior is enumerated over all
    assignments of those unknown bits.

    Returns (conditional key entropy, log of the key count), both in nats.
    """
    if M < 1 or M > 6:
        raise DomainError("the exhaustive check is limited to 1..6 slots")
    if scale < 1:
        raise DomainError("scale must be >= 1")
    W = reward_table(channel, alloc)
    n_bits = _message_bits(alloc, scale)
    rng = np.random.default_rng([seed, 0])
    bob_state, eve_state = _draw_states(channel, M, rng)
    msgs = _draw_messages(n_bits, M, rng)
    rewards = W[bob_state, eve_state]
    if key_bits is None:
        key_bits = int(math.floor(rewards.sum() * scale / _LN2))
    if key_bits > 30:
        raise InstanceTooLarge(f"{key_bits} key bits cannot be histogrammed exactly")
    modulus = 1 << key_bits
    mask = modulus - 1

    # walk the concatenation once, recording offset/size/value/knowledge per chunk
    order = [(m, l) for m in range(M) for l in range(int(bob_state[m]) + 1)
             if n_bits[l] > 0]
    total_bits = int(sum(n_bits[l] for _, l in order))
    chunks = []  # (offset, bits, value, known); last appended chunk sits at offset 0
    pos = total_bits
    for m, l in order:
        pos -= int(n_bits[l])
        chunks.append((pos, int(n_bits[l]), msgs[m][l], l <= int(eve_state[m])))

    known_base = 0
    unknown = []
    for off, b, val, known in chunks:
        if known:
            known_base = (known_base + ((val << off) & mask)) & mask
        elif off < key_bits:
            # only the bits inside the key window matter; truncating the
            # enumeration to them keeps the distribution exact (each reduced
            # value appears with equal multiplicity)
            unknown.append((off, min(b, key_bits - off)))
    total_unknown = sum(b for _, b in unknown)
    if total_unknown > 22 or key_bits > 22:
        raise InstanceTooLarge(
            f"2^{total_unknown} assignments x 2^{key_bits} keys exceeds the desk-scale budget")

    keys = np.array([known_base], dtype=np.int64)
    for off, b in unknown:
        contrib = (np.arange(1 << b, dtype=np.int64) << off) & mask
        keys = (keys[:, None] + contrib[None, :]).ravel() & mask
    counts = np.bincount(keys, minlength=modulus)
    probs = counts[counts > 0] / keys.size
    entropy = float(-np.sum(probs * np.log(probs))) + 0.0  # normalize -0.0
    return entropy, key_bits * _LN2
