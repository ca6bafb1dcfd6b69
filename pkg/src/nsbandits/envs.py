"""Benchmark environments for non-stationary bandit experiments.

Every environment exposes the same interface: ``reset`` emits the initial
reward (always zero) and observation, ``step`` consumes an arm index and
emits the next reward and observation, and ``expected_reward`` reports the
exact mean reward an arm would earn on the upcoming step, which the harness
uses as the regret oracle. Arms are indexed from zero.

Nine problems are provided: flipping Gaussian, flipping Bernoulli, sinusoidal
Bernoulli, circular Markov chain, stationary Bernoulli, flipping digits,
wall following, flipping vector, and rotating vector. The last two expose a
per-arm unit vector block as the observation.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np


class EnvError(Exception):
    """Invalid environment configuration or interaction."""


@dataclass(frozen=True)
class EnvSpec:
    name: str
    params: dict = field(default_factory=dict)


@dataclass
class StepOutcome:
    reward: float
    observation: np.ndarray


_NO_OBS = np.zeros(0)


class Environment:
    """Base interaction contract; subclasses fill in the dynamics.

    ``self.t`` is the time step of the most recent outcome; after ``reset``
    it is 1 and each ``step`` advances it. ``expected_reward`` always refers
    to step ``t + 1`` given the current hidden state.
    """

    num_arms: int
    obs_dim: int
    arm_dim: int = 0  # >0 when observations are per-arm vector blocks

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.t = 0

    def reset(self) -> StepOutcome:
        self.t = 1
        self._init_state()
        return StepOutcome(reward=0.0, observation=self._observe())

    def step(self, arm: int) -> StepOutcome:
        if not 0 <= arm < self.num_arms:
            raise EnvError(f"arm {arm} out of range [0, {self.num_arms})")
        if self.t < 1:
            raise EnvError("step before reset")
        self.t += 1
        reward = self._draw_reward(arm)
        self._advance(arm)
        return StepOutcome(reward=reward, observation=self._observe())

    def expected_reward(self, arm: int) -> float:
        """Exact mean reward of ``arm`` on the next step; side-effect free."""
        if not 0 <= arm < self.num_arms:
            raise EnvError(f"arm {arm} out of range [0, {self.num_arms})")
        return self._expected(arm, self.t + 1)

    # Subclass hooks.
    def _init_state(self):
        pass

    def _observe(self) -> np.ndarray:
        return _NO_OBS

    def _expected(self, arm: int, t: int) -> float:
        raise NotImplementedError

    def _draw_reward(self, arm: int) -> float:
        raise NotImplementedError

    def _advance(self, arm: int):
        pass


def _flip_parity(t: int, period) -> int:
    """0 during the first block of action steps (t = 2 .. period+1), then
    alternating; ``period=None`` never flips."""
    if period is None:
        return 0
    return ((t - 2) // period) % 2


_DEFAULT_MEANS = tuple(m / 10 for m in (1, 2, 3, 4, 6, 7, 8, 9))


class FlippingGaussian(Environment):
    """Gaussian arms whose means all negate every ``flip_period`` steps."""

    obs_dim = 0

    def __init__(self, rng, num_arms=8, flip_period=10, noise_var=0.01, means=None):
        super().__init__(rng)
        self.num_arms = num_arms
        self.flip_period = flip_period
        self.noise_sd = float(np.sqrt(noise_var))
        self.base_means = np.asarray(means if means is not None else _DEFAULT_MEANS, dtype=float)
        if len(self.base_means) != num_arms:
            raise EnvError("means length must equal num_arms")

    def _init_state(self):
        # The mean set is fixed; its assignment to arms is seed-determined.
        self.means = self.rng.permutation(self.base_means)

    def _expected(self, arm, t):
        sign = -1.0 if _flip_parity(t, self.flip_period) else 1.0
        return sign * self.means[arm]

    def _draw_reward(self, arm):
        return float(self._expected(arm, self.t) + self.noise_sd * self.rng.standard_normal())


class FlippingBernoulli(Environment):
    """Bernoulli arms whose success probabilities complement every
    ``flip_period`` steps; ``flip_period=None`` gives the stationary variant."""

    obs_dim = 0

    def __init__(self, rng, num_arms=8, flip_period=10, means=None):
        super().__init__(rng)
        self.num_arms = num_arms
        self.flip_period = flip_period
        self.base_means = np.asarray(means if means is not None else _DEFAULT_MEANS, dtype=float)
        if len(self.base_means) != num_arms:
            raise EnvError("means length must equal num_arms")

    def _init_state(self):
        self.means = self.rng.permutation(self.base_means)

    def _expected(self, arm, t):
        p = self.means[arm]
        return 1.0 - p if _flip_parity(t, self.flip_period) else float(p)

    def _draw_reward(self, arm):
        return float(self.rng.random() < self._expected(arm, self.t))


class StationaryBernoulli(FlippingBernoulli):
    def __init__(self, rng, num_arms=8, means=None):
        super().__init__(rng, num_arms=num_arms, flip_period=None, means=means)


class SinusoidalBernoulli(Environment):
    """Bernoulli arms with phase-shifted sinusoidal success probabilities."""

    obs_dim = 0

    def __init__(self, rng, num_arms=5, frequency=1 / 32):
        super().__init__(rng)
        self.num_arms = num_arms
        self.frequency = frequency

    def _expected(self, arm, t):
        return 0.5 + 0.5 * np.sin(2 * np.pi * self.frequency * t + 2 * np.pi * arm / self.num_arms)

    def _draw_reward(self, arm):
        return float(self.rng.random() < self._expected(arm, self.t))


class CircularMarkovChain(Environment):
    """One arm pays ``best_mean``; choosing it hands the bonus to the next
    arm in a fixed cycle, so actions shape future rewards."""

    obs_dim = 0

    def __init__(self, rng, num_arms=8, common_mean=0.0, best_mean=1.0, noise_var=0.0025):
        super().__init__(rng)
        self.num_arms = num_arms
        self.common_mean = common_mean
        self.best_mean = best_mean
        self.noise_sd = float(np.sqrt(noise_var))

    def _init_state(self):
        self.best_arm = int(self.rng.integers(self.num_arms))

    def _expected(self, arm, t):
        return self.best_mean if arm == self.best_arm else self.common_mean

    def _draw_reward(self, arm):
        return float(self._expected(arm, self.t) + self.noise_sd * self.rng.standard_normal())

    def _advance(self, arm):
        if arm == self.best_arm:
            self.best_arm = (self.best_arm + 1) % self.num_arms


class FlippingDigits(Environment):
    """Digit-image contexts; the arm labeled with the shown digit pays
    ``best_mean``, and labels flip to their complement every
    ``flip_period`` steps."""

    num_arms = 10

    def __init__(self, rng, images=None, labels=None, image_path=None, label_path=None,
                 flip_period=64, common_mean=0.0, best_mean=1.0, noise_var=0.0025,
                 subset_size=5000):
        super().__init__(rng)
        if images is None or labels is None:
            if image_path is None or label_path is None:
                raise EnvError("flipping_digits requires a digit dataset "
                               "(images/labels arrays or image_path/label_path)")
            images, labels = load_digits(image_path, label_path, limit=subset_size)
        self.images = np.asarray(images, dtype=float)
        self.labels = np.asarray(labels, dtype=int)
        if len(self.images) != len(self.labels):
            raise EnvError("image/label count mismatch")
        if len(self.images) == 0:
            raise EnvError("empty digit dataset")
        self.obs_dim = self.images.shape[1]
        self.flip_period = flip_period
        self.common_mean = common_mean
        self.best_mean = best_mean
        self.noise_sd = float(np.sqrt(noise_var))

    def _init_state(self):
        self._draw_image()

    def _draw_image(self):
        idx = int(self.rng.integers(len(self.images)))
        self.cur_image = self.images[idx]
        self.cur_digit = int(self.labels[idx])

    def _observe(self):
        return self.cur_image

    def _best_arm(self, t):
        # After a flip the arm labeled with digit d is arm 9 - d.
        return self.cur_digit if _flip_parity(t, self.flip_period) == 0 else 9 - self.cur_digit

    def _expected(self, arm, t):
        return self.best_mean if arm == self._best_arm(t) else self.common_mean

    def _draw_reward(self, arm):
        return float(self._expected(arm, self.t) + self.noise_sd * self.rng.standard_normal())

    def _advance(self, arm):
        self._draw_image()


class WallFollowing(Environment):
    """Robot sensor traces; the arm matching the row's movement pattern pays
    ``best_mean``. Rows are consumed in file order until exhausted."""

    num_arms = 4

    def __init__(self, rng, sensors=None, arms=None, path=None,
                 common_mean=0.0, best_mean=1.0, noise_var=0.0025):
        super().__init__(rng)
        if sensors is None or arms is None:
            if path is None:
                raise EnvError("wall_following requires a dataset (sensors/arms arrays or path)")
            sensors, arms = load_wall_following(path)
        self.sensors = np.asarray(sensors, dtype=float)
        self.arms = np.asarray(arms, dtype=int)
        if len(self.sensors) == 0:
            raise EnvError("empty wall-following dataset")
        self.obs_dim = self.sensors.shape[1]
        self.common_mean = common_mean
        self.best_mean = best_mean
        self.noise_sd = float(np.sqrt(noise_var))

    def _init_state(self):
        self.cursor = 0

    def _observe(self):
        return self.sensors[self.cursor]

    def _expected(self, arm, t):
        return self.best_mean if arm == self.arms[self.cursor] else self.common_mean

    def _draw_reward(self, arm):
        return float(self._expected(arm, self.t) + self.noise_sd * self.rng.standard_normal())

    def _advance(self, arm):
        self.cursor += 1
        if self.cursor >= len(self.sensors):
            raise EnvError("wall-following dataset exhausted")


class _ArmVectorEnv(Environment):
    """Shared machinery for the contextual linear problems: a fixed per-trial
    set of unit vectors is re-dealt to arms by a fresh permutation each step,
    and the reward measures alignment with a drifting parameter vector."""

    def __init__(self, rng, num_arms, dim, noise_var):
        super().__init__(rng)
        self.num_arms = num_arms
        self.arm_dim = dim
        self.obs_dim = num_arms * dim
        self.noise_sd = float(np.sqrt(noise_var))

    def _init_state(self):
        vecs = self.rng.standard_normal((self.num_arms, self.arm_dim))
        self.vector_set = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
        self._deal()

    def _deal(self):
        self.assignment = self.vector_set[self.rng.permutation(self.num_arms)]

    def _observe(self):
        return self.assignment.reshape(-1)

    def _weight(self, t) -> np.ndarray:
        raise NotImplementedError

    def _expected(self, arm, t):
        return float(self._weight(t) @ self.assignment[arm])

    def _draw_reward(self, arm):
        return float(self._expected(arm, self.t) + self.noise_sd * self.rng.standard_normal())

    def _advance(self, arm):
        self._deal()


class FlippingVector(_ArmVectorEnv):
    """A random unit parameter vector that negates every ``flip_period``
    steps; arms offer unit vectors in the same space."""

    def __init__(self, rng, num_arms=25, flip_period=64, dim=50, noise_var=0.0025):
        super().__init__(rng, num_arms, dim, noise_var)
        self.flip_period = flip_period

    def _init_state(self):
        super()._init_state()
        w = self.rng.standard_normal(self.arm_dim)
        self.base_weight = w / np.linalg.norm(w)

    def _weight(self, t):
        sign = -1.0 if _flip_parity(t, self.flip_period) else 1.0
        return sign * self.base_weight


class RotatingVector(_ArmVectorEnv):
    """A planar parameter vector rotating about the origin at ``frequency``
    revolutions per step."""

    def __init__(self, rng, num_arms=25, frequency=1 / 32, noise_var=0.0025):
        super().__init__(rng, num_arms, 2, noise_var)
        self.frequency = frequency

    def _weight(self, t):
        angle = 2 * np.pi * self.frequency * t
        return np.array([np.cos(angle), np.sin(angle)])


ENV_REGISTRY = {
    "flipping_gaussian": FlippingGaussian,
    "flipping_bernoulli": FlippingBernoulli,
    "stationary_bernoulli": StationaryBernoulli,
    "sinusoidal_bernoulli": SinusoidalBernoulli,
    "circular_markov_chain": CircularMarkovChain,
    "flipping_digits": FlippingDigits,
    "wall_following": WallFollowing,
    "flipping_vector": FlippingVector,
    "rotating_vector": RotatingVector,
}


def make_env(spec: EnvSpec, rng: np.random.Generator) -> Environment:
    if spec.name not in ENV_REGISTRY:
        raise EnvError(f"unknown environment: {spec.name!r}")
    try:
        return ENV_REGISTRY[spec.name](rng, **spec.params)
    except TypeError as exc:
        raise EnvError(f"bad parameters for {spec.name!r}: {exc}") from exc


# Dataset ingestion -----------------------------------------------------------

_IDX_IMAGE_MAGIC = 2051
_IDX_LABEL_MAGIC = 2049


def _read_exact(f, n, path):
    buf = f.read(n)
    if len(buf) != n:
        raise EnvError(f"truncated IDX file: {path}")
    return buf


def load_digits(image_path, label_path, limit=None):
    """Read big-endian IDX image/label files; pixels rescaled to [0, 1].

    Returns (images, labels) with images flattened to rows. ``limit`` keeps
    only the first entries in file order.
    """
    with open(image_path, "rb") as f:
        magic, n, rows, cols = struct.unpack(">IIII", _read_exact(f, 16, image_path))
        if magic != _IDX_IMAGE_MAGIC:
            raise EnvError(f"bad image magic {magic} in {image_path} "
                           f"(expected {_IDX_IMAGE_MAGIC})")
        raw = _read_exact(f, n * rows * cols, image_path)
    images = np.frombuffer(raw, dtype=np.uint8).reshape(n, rows * cols) / 255.0
    with open(label_path, "rb") as f:
        magic, n_lab = struct.unpack(">II", _read_exact(f, 8, label_path))
        if magic != _IDX_LABEL_MAGIC:
            raise EnvError(f"bad label magic {magic} in {label_path} "
                           f"(expected {_IDX_LABEL_MAGIC})")
        labels = np.frombuffer(_read_exact(f, n_lab, label_path), dtype=np.uint8).astype(int)
    if n != n_lab:
        raise EnvError(f"image/label count mismatch: {n} images vs {n_lab} labels")
    if limit is not None:
        images, labels = images[:limit], labels[:limit]
    return images, labels


def load_wall_following(path, n_sensors=24, n_classes=4):
    """Parse a comma-separated sensor trace: ``n_sensors`` numeric fields plus
    one class label per row, kept in file order. Labels map to arm indices by
    first appearance."""
    sensors = []
    arms = []
    label_map: dict[str, int] = {}
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != n_sensors + 1:
                raise EnvError(f"{path}:{lineno}: expected {n_sensors + 1} fields, "
                               f"got {len(fields)}")
            try:
                sensors.append([float(x) for x in fields[:-1]])
            except ValueError as exc:
                raise EnvError(f"{path}:{lineno}: non-numeric sensor field") from exc
            label = fields[-1]
            if label not in label_map:
                if len(label_map) >= n_classes:
                    raise EnvError(f"{path}:{lineno}: more than {n_classes} "
                                   f"distinct labels (unexpected {label!r})")
                label_map[label] = len(label_map)
            arms.append(label_map[label])
    return np.asarray(sensors, dtype=float), np.asarray(arms, dtype=int)
