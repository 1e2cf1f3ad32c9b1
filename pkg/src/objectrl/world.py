"""Deterministic 2D top-down pusher world with a software renderer.

The arena is the unit square with y growing downward (matching image row
order). An end-effector disc is driven by delta-position actions and pushes
a single movable object disc by penetration resolution. The rendered arm is
the end-effector disc plus a vertical shaft reaching down from the image top
edge (the arm link seen from above): pushing the object toward the top of
the image therefore occludes it, pushing it downward does not.

Everything here is a pure function of (config, state, rng): identical inputs
give bit-identical outputs. Pixels are quantized to k/255 so frames can be
stored as uint8 and reconstructed exactly.

Ground truth (positions, masks) lives on a side channel that the learning
code never reads; see ``tests/test_firewall.py``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

VARIANTS = ("open", "hurdle_bottom", "hurdle_top")

WALL_T = 0.04          # border wall thickness
MID_X0, MID_X1 = 0.47, 0.53       # middle wall x-extent (hurdle variants)
TOP_WALL_Y1 = 0.55     # hurdle_top: middle wall spans y in [WALL_T, 0.55]
BOT_WALL_Y0 = 0.45     # hurdle_bottom: middle wall spans y in [0.45, 1-WALL_T]
SHAFT_SCALE = 1.3      # shaft half-width = SHAFT_SCALE * arm_radius

WALL_COLOR = (0.22, 0.22, 0.26)
DEFAULT_OBJECT_COLOR = (0.85, 0.16, 0.12)
DEFAULT_ARM_COLOR = (0.20, 0.45, 0.85)


class ConfigError(ValueError):
    """Raised for invalid world configurations."""


@dataclass(frozen=True)
class WorldConfig:
    variant: str = "open"
    object_radius: float = 0.06
    arm_radius: float = 0.05
    action_scale: float = 0.04
    image_size: int = 48
    episode_length: int = 50
    seed: int = 0
    object_color: tuple = DEFAULT_OBJECT_COLOR
    arm_color: tuple = DEFAULT_ARM_COLOR

    def validate(self) -> "WorldConfig":
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if not (0 < self.object_radius < 0.2 and 0 < self.arm_radius < 0.2):
            raise ConfigError("body radii must be in (0, 0.2)")
        if self.action_scale <= 0:
            raise ConfigError("action_scale must be positive")
        if self.image_size < 16:
            raise ConfigError("image_size must be >= 16")
        if self.episode_length < 1:
            raise ConfigError("episode_length must be >= 1")
        # every goal must be reachable: corridors wider than body + wall
        corridor = MID_X0 - WALL_T
        if self.object_radius + WALL_T >= corridor:
            raise ConfigError("object does not fit the corridors")
        return self

    def key(self) -> str:
        """Stable text key of all fields (used for hashing and manifests)."""
        parts = [
            f"variant={self.variant}",
            f"object_radius={self.object_radius!r}",
            f"arm_radius={self.arm_radius!r}",
            f"action_scale={self.action_scale!r}",
            f"image_size={self.image_size}",
            f"episode_length={self.episode_length}",
            f"seed={self.seed}",
            f"object_color={tuple(float(c) for c in self.object_color)!r}",
            f"arm_color={tuple(float(c) for c in self.arm_color)!r}",
        ]
        return ";".join(parts)

    def config_hash(self) -> str:
        return hashlib.sha256(self.key().encode()).hexdigest()[:16]


@dataclass
class WorldState:
    arm_xy: np.ndarray
    object_xy: Optional[np.ndarray]   # None = object-free world (background fitting)
    step_count: int = 0


@dataclass
class Frame:
    pixels: np.ndarray                       # (H, W, 3) float32 in [0, 1]
    gt_masks: Optional[tuple] = None         # (object_mask, arm_mask) bool (H, W)


@dataclass
class GoalSpec:
    goal_frame: Frame
    true_object_xy: np.ndarray               # evaluation side channel


# ---------------------------------------------------------------------------
# geometry

def interior_walls(config: WorldConfig):
    """Interior wall rectangles (x0, y0, x1, y1) for the variant."""
    if config.variant == "hurdle_top":
        return [(MID_X0, WALL_T, MID_X1, TOP_WALL_Y1)]
    if config.variant == "hurdle_bottom":
        return [(MID_X0, BOT_WALL_Y0, MID_X1, 1.0 - WALL_T)]
    return []


def _boxes(config: WorldConfig):
    """Per-variant (arm_start, object_start_or_box, object_goal_box, hand_goal_box).

    Boxes are (xmin, ymin, xmax, ymax). Starts keep the source task topology:
    the object starts in the right corridor and goals lie in the left corridor
    for the hurdle variants.
    """
    if config.variant == "open":
        return ((0.43, 0.15), (0.50, 0.50), (0.15, 0.20, 0.85, 0.90), (0.30, 0.10, 0.70, 0.50))
    if config.variant == "hurdle_bottom":
        return ((0.75, 0.12), (0.75, 0.25), (0.20, 0.45, 0.32, 0.80), (0.62, 0.40, 0.86, 0.70))
    # hurdle_top: object start is a box (uniformly sampled)
    return ((0.75, 0.12), (0.68, 0.28, 0.80, 0.45), (0.20, 0.25, 0.32, 0.42), (0.62, 0.20, 0.86, 0.45))


def object_start_box(config: WorldConfig):
    """Start region for the object; degenerate (point) box for fixed starts."""
    _, start, _, _ = _boxes(config)
    if len(start) == 2:
        x, y = start
        return (x, y, x, y)
    return start


def object_goal_box(config: WorldConfig):
    return _boxes(config)[2]


def hand_goal_box(config: WorldConfig):
    return _boxes(config)[3]


def _clamp_border(p, r):
    lo, hi = WALL_T + r, 1.0 - WALL_T - r
    return np.clip(p, lo, hi)


def _push_out_of_rect(p, r, rect):
    x0, y0, x1, y1 = rect
    cx = min(max(p[0], x0), x1)
    cy = min(max(p[1], y0), y1)
    dx, dy = p[0] - cx, p[1] - cy
    d2 = dx * dx + dy * dy
    if d2 >= r * r:
        return p
    if d2 > 1e-12:
        d = np.sqrt(d2)
        return np.array([cx + dx / d * r, cy + dy / d * r])
    # center inside the rectangle: exit through the nearest face
    exits = [
        (p[0] - x0, np.array([x0 - r, p[1]])),
        (x1 - p[0], np.array([x1 + r, p[1]])),
        (p[1] - y0, np.array([p[0], y0 - r])),
        (y1 - p[1], np.array([p[0], y1 + r])),
    ]
    return min(exits, key=lambda e: e[0])[1]


def clip_body(p, r, config: WorldConfig):
    """Project a disc center into free space (border box and interior walls)."""
    p = np.asarray(p, dtype=np.float64).copy()
    walls = interior_walls(config)
    for _ in range(4):
        p = _clamp_border(p, r)
        for rect in walls:
            p = _push_out_of_rect(p, r, rect)
    return _clamp_border(p, r)


def _in_free_space(p, r, config: WorldConfig) -> bool:
    if not (WALL_T + r <= p[0] <= 1 - WALL_T - r and WALL_T + r <= p[1] <= 1 - WALL_T - r):
        return False
    for x0, y0, x1, y1 in interior_walls(config):
        cx = min(max(p[0], x0), x1)
        cy = min(max(p[1], y0), y1)
        if (p[0] - cx) ** 2 + (p[1] - cy) ** 2 < r * r:
            return False
    return True


def sample_free_position(config: WorldConfig, radius: float, rng: np.random.Generator):
    """Uniform sample over the reachable positions of a disc of given radius."""
    lo, hi = WALL_T + radius, 1.0 - WALL_T - radius
    while True:
        p = rng.uniform(lo, hi, size=2)
        if _in_free_space(p, radius, config):
            return p


# ---------------------------------------------------------------------------
# dynamics

def reset(config: WorldConfig, seed: int) -> WorldState:
    """Initial state: fixed arm start; object fixed or sampled per variant."""
    config.validate()
    arm_start, start, _, _ = _boxes(config)
    arm = np.array(arm_start, dtype=np.float64)
    if len(start) == 2:
        obj = np.array(start, dtype=np.float64)
    else:
        rng = np.random.default_rng(seed)
        x0, y0, x1, y1 = start
        obj = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1)])
    return WorldState(arm_xy=arm, object_xy=obj, step_count=0)


def reset_object_free(config: WorldConfig) -> WorldState:
    """Object-free start (used when fitting the background model)."""
    config.validate()
    arm_start = _boxes(config)[0]
    return WorldState(arm_xy=np.array(arm_start, dtype=np.float64), object_xy=None, step_count=0)


def step(state: WorldState, action, config: WorldConfig) -> WorldState:
    """Advance one step: move the arm, resolve the push, clip against walls."""
    a = np.clip(np.asarray(action, dtype=np.float64), -1.0, 1.0)
    arm = clip_body(state.arm_xy + config.action_scale * a, config.arm_radius, config)
    obj = state.object_xy
    if obj is not None:
        obj = obj.copy()
        d = obj - arm
        dist = float(np.hypot(d[0], d[1]))
        rmin = config.arm_radius + config.object_radius
        if dist < rmin:
            n = d / dist if dist > 1e-9 else np.array([1.0, 0.0])
            obj = clip_body(arm + n * rmin, config.object_radius, config)
    return WorldState(arm_xy=arm, object_xy=obj, step_count=state.step_count + 1)


def object_distance(state: WorldState, goal: GoalSpec) -> float:
    """Euclidean object-to-goal distance. Evaluation only, never a reward."""
    d = state.object_xy - goal.true_object_xy
    return float(np.hypot(d[0], d[1]))


# ---------------------------------------------------------------------------
# rendering

_BACKGROUND_CACHE: dict = {}


def _texture_seed(config: WorldConfig) -> int:
    key = f"texture;{config.variant};{config.image_size}"
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "little")


def background_u8(config: WorldConfig) -> np.ndarray:
    """Static background (texture + walls) as a (H, W, 3) uint8 image.

    The texture depends only on variant and image size, never on the episode
    seed, so all frames of a fixed config share an identical background.
    """
    cache_key = (config.variant, config.image_size)
    cached = _BACKGROUND_CACHE.get(cache_key)
    if cached is not None:
        return cached
    n = config.image_size
    rng = np.random.default_rng(_texture_seed(config))
    # two-octave value noise: smooth coarse field + faint per-pixel grain
    coarse = rng.uniform(-1.0, 1.0, size=(n // 8 + 2, n // 8 + 2))
    yi = np.linspace(0, coarse.shape[0] - 1.001, n)
    xi = np.linspace(0, coarse.shape[1] - 1.001, n)
    y0 = yi.astype(int)
    x0 = xi.astype(int)
    fy = (yi - y0)[:, None]
    fx = (xi - x0)[None, :]
    c00 = coarse[y0][:, x0]
    c01 = coarse[y0][:, x0 + 1]
    c10 = coarse[y0 + 1][:, x0]
    c11 = coarse[y0 + 1][:, x0 + 1]
    smooth = (1 - fy) * ((1 - fx) * c00 + fx * c01) + fy * ((1 - fx) * c10 + fx * c11)
    grain = rng.uniform(-1.0, 1.0, size=(n, n))
    lum = 0.44 + 0.06 * smooth + 0.02 * grain
    base = np.array([1.02, 0.98, 0.92])
    img = np.clip(lum[:, :, None] * base[None, None, :], 0.0, 1.0)
    # walls: border strips plus the variant's interior rectangles
    wall = np.zeros((n, n), dtype=bool)
    t = int(round(WALL_T * n))
    wall[:t, :] = wall[-t:, :] = True
    wall[:, :t] = wall[:, -t:] = True
    for x0r, y0r, x1r, y1r in interior_walls(config):
        i0, i1 = int(round(y0r * n)), int(round(y1r * n))
        j0, j1 = int(round(x0r * n)), int(round(x1r * n))
        wall[i0:i1, j0:j1] = True
    img[wall] = WALL_COLOR
    out = np.round(img * 255.0).astype(np.uint8)
    out.setflags(write=False)
    _BACKGROUND_CACHE[cache_key] = out
    return out


_SUB = (np.arange(4) + 0.5) / 4.0   # 4x4 subpixel grid offsets


def _pixel_grid(n, i0, i1, j0, j1):
    ys = ((np.arange(i0, i1)[:, None] + _SUB[None, :]) / n).reshape(-1)
    xs = ((np.arange(j0, j1)[:, None] + _SUB[None, :]) / n).reshape(-1)
    return ys, xs


def _cov_to_mask(inside, nb, mb):
    cov = inside.reshape(nb, 4, mb, 4).mean(axis=(1, 3))
    return cov >= 0.5


def _disc_mask(n, center, radius):
    """Pixels whose subsampled disc coverage is >= 0.5, as a full (n, n) bool."""
    cx, cy = float(center[0]), float(center[1])
    i0 = max(int((cy - radius) * n) - 1, 0)
    i1 = min(int((cy + radius) * n) + 2, n)
    j0 = max(int((cx - radius) * n) - 1, 0)
    j1 = min(int((cx + radius) * n) + 2, n)
    mask = np.zeros((n, n), dtype=bool)
    if i0 >= i1 or j0 >= j1:
        return mask
    ys, xs = _pixel_grid(n, i0, i1, j0, j1)
    inside = (ys[:, None] - cy) ** 2 + (xs[None, :] - cx) ** 2 <= radius * radius
    mask[i0:i1, j0:j1] = _cov_to_mask(inside, i1 - i0, j1 - j0)
    return mask


def _arm_mask(n, arm_xy, arm_radius):
    """Arm footprint: end-effector disc plus the vertical shaft capsule."""
    cx, cy = float(arm_xy[0]), float(arm_xy[1])
    w = SHAFT_SCALE * arm_radius
    j0 = max(int((cx - w) * n) - 1, 0)
    j1 = min(int((cx + w) * n) + 2, n)
    i0 = 0
    i1 = min(int((cy + w) * n) + 2, n)
    mask = np.zeros((n, n), dtype=bool)
    if j0 >= j1 or i1 <= 0:
        return mask
    ys, xs = _pixel_grid(n, i0, i1, j0, j1)
    dy = np.maximum(ys - cy, 0.0)                      # distance below the EE
    capsule = dy[:, None] ** 2 + (xs[None, :] - cx) ** 2 <= w * w
    mask[i0:i1, j0:j1] = _cov_to_mask(capsule, i1 - i0, j1 - j0)
    return mask | _disc_mask(n, arm_xy, arm_radius)


def _color_u8(color):
    return np.round(np.asarray(color, dtype=np.float64) * 255.0).astype(np.uint8)


def render_u8(state: WorldState, config: WorldConfig, with_masks: bool = False,
              omit: tuple = ()):
    """Render to uint8 pixels; background, then object, then arm on top.

    Returns (pixels_u8, masks) where masks is None or (object_mask, arm_mask).
    The object mask contains only visible object pixels (the arm wins overlaps).
    """
    n = config.image_size
    img = background_u8(config).copy()
    obj_mask = np.zeros((n, n), dtype=bool)
    if state.object_xy is not None and "object" not in omit:
        obj_mask = _disc_mask(n, state.object_xy, config.object_radius)
        img[obj_mask] = _color_u8(config.object_color)
    arm_mask = np.zeros((n, n), dtype=bool)
    if "arm" not in omit:
        arm_mask = _arm_mask(n, state.arm_xy, config.arm_radius)
        img[arm_mask] = _color_u8(config.arm_color)
    obj_mask &= ~arm_mask
    if with_masks:
        return img, (obj_mask, arm_mask)
    return img, None


def render(state: WorldState, config: WorldConfig, with_masks: bool = False,
           omit: tuple = ()) -> Frame:
    pixels_u8, masks = render_u8(state, config, with_masks=with_masks, omit=omit)
    return Frame(pixels=pixels_u8.astype(np.float32) / 255.0, gt_masks=masks)


def frame_from_u8(pixels_u8: np.ndarray) -> np.ndarray:
    """Exact float32 reconstruction of stored uint8 pixels."""
    return pixels_u8.astype(np.float32) / 255.0


# ---------------------------------------------------------------------------
# goals and datasets

def sample_goal(config: WorldConfig, rng: np.random.Generator) -> GoalSpec:
    """Goal state: object uniform in the goal box, arm in the hand-goal box."""
    gx0, gy0, gx1, gy1 = object_goal_box(config)
    hx0, hy0, hx1, hy1 = hand_goal_box(config)
    obj = np.array([rng.uniform(gx0, gx1), rng.uniform(gy0, gy1)])
    arm = np.array([rng.uniform(hx0, hx1), rng.uniform(hy0, hy1)])
    state = WorldState(arm_xy=arm, object_xy=obj, step_count=0)
    return GoalSpec(goal_frame=render(state, config), true_object_xy=obj)


@dataclass
class PlacementSet:
    """Randomly placed object/arm stills with evaluation-only ground truth."""
    pixels_u8: np.ndarray          # (n, H, W, 3) uint8
    object_masks: np.ndarray       # (n, H, W) bool, visible object pixels
    arm_masks: np.ndarray          # (n, H, W) bool
    object_xy: np.ndarray          # (n, 2) side channel
    arm_xy: np.ndarray             # (n, 2) side channel

    def frames(self) -> np.ndarray:
        return self.pixels_u8.astype(np.float32) / 255.0

    def gt_segmented(self) -> np.ndarray:
        """Object-only float frames under the ground-truth visible mask."""
        return self.frames() * self.object_masks[:, :, :, None]


def scripted_object_placements(config: WorldConfig, n: int, rng: np.random.Generator) -> PlacementSet:
    """n stills with the object uniform over reachable space, arm random."""
    if n < 1:
        raise ValueError("n must be >= 1")
    size = config.image_size
    pixels = np.empty((n, size, size, 3), dtype=np.uint8)
    omask = np.empty((n, size, size), dtype=bool)
    amask = np.empty((n, size, size), dtype=bool)
    oxy = np.empty((n, 2))
    axy = np.empty((n, 2))
    for i in range(n):
        obj = sample_free_position(config, config.object_radius, rng)
        arm = sample_free_position(config, config.arm_radius, rng)
        state = WorldState(arm_xy=arm, object_xy=obj, step_count=0)
        img, masks = render_u8(state, config, with_masks=True)
        pixels[i] = img
        omask[i], amask[i] = masks
        oxy[i] = obj
        axy[i] = arm
    return PlacementSet(pixels, omask, amask, oxy, axy)


@dataclass
class EpisodeRecord:
    """One rolled-out episode; frames as uint8 plus the ground-truth track."""
    pixels_u8: np.ndarray          # (T+1, H, W, 3)
    actions: np.ndarray            # (T, 2) float32
    object_xy: np.ndarray          # (T+1, 2) side channel
    arm_xy: np.ndarray             # (T+1, 2)

    def frames(self) -> np.ndarray:
        return self.pixels_u8.astype(np.float32) / 255.0

    def __len__(self) -> int:
        return self.actions.shape[0]


def rollout(config: WorldConfig, policy, seed: int, n_steps: Optional[int] = None,
            object_free: bool = False) -> EpisodeRecord:
    """Roll an episode under ``policy(state, t, rng) -> action``.

    The policy here is a plain callable used for data collection (random or
    scripted); learned policies roll out through the training pipeline.
    """
    T = config.episode_length if n_steps is None else n_steps
    rng = np.random.default_rng(seed)
    state = reset_object_free(config) if object_free else reset(config, seed)
    size = config.image_size
    pixels = np.empty((T + 1, size, size, 3), dtype=np.uint8)
    actions = np.empty((T, 2), dtype=np.float32)
    oxy = np.zeros((T + 1, 2))
    axy = np.empty((T + 1, 2))
    pixels[0], _ = render_u8(state, config)
    axy[0] = state.arm_xy
    if state.object_xy is not None:
        oxy[0] = state.object_xy
    for t in range(T):
        a = np.asarray(policy(state, t, rng), dtype=np.float32)
        actions[t] = a
        state = step(state, a, config)
        pixels[t + 1], _ = render_u8(state, config)
        axy[t + 1] = state.arm_xy
        if state.object_xy is not None:
            oxy[t + 1] = state.object_xy
    return EpisodeRecord(pixels, actions, oxy, axy)


def random_policy(state, t, rng):
    return rng.uniform(-1.0, 1.0, size=2)


class ScriptedPusher:
    """Waypoint-chasing push controller used for data collection.

    Picks a random reachable waypoint for the object every ``hold`` steps,
    positions the arm behind the object relative to the waypoint and pushes.
    Produces diverse object motion, including occluding upward pushes.
    """

    def __init__(self, config: WorldConfig, hold: int = 12):
        self.config = config
        self.hold = hold
        self.waypoint = None

    def __call__(self, state: WorldState, t: int, rng: np.random.Generator):
        cfg = self.config
        if t % self.hold == 0 or self.waypoint is None:
            self.waypoint = sample_free_position(cfg, cfg.object_radius, rng)
        obj, arm = state.object_xy, state.arm_xy
        to_goal = self.waypoint - obj
        dist = np.hypot(*to_goal)
        if dist < 1e-6:
            return np.zeros(2)
        push_dir = to_goal / dist
        behind = obj - push_dir * (cfg.arm_radius + cfg.object_radius) * 1.05
        to_behind = behind - arm
        if np.hypot(*to_behind) > 0.5 * cfg.action_scale:
            # step toward the pushing pose, skirting the object
            d = to_behind / max(np.hypot(*to_behind), 1e-9)
            away = arm - obj
            away_n = away / max(np.hypot(*away), 1e-9)
            a = d + 0.6 * away_n * max(0.0, 1.0 - np.hypot(*away) / 0.2)
        else:
            a = push_dir
        m = np.abs(a).max()
        return a / m if m > 1.0 else a


def generate_push_trajectories(config: WorldConfig, n: int, rng: np.random.Generator,
                               n_steps: Optional[int] = None) -> list:
    """n scripted episodes with the object actually moving around."""
    out = []
    for _ in range(n):
        seed = int(rng.integers(0, 2**63 - 1))
        out.append(rollout(config, ScriptedPusher(config), seed, n_steps=n_steps))
    return out
