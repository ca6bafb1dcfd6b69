"""Decision policies: random, feedforward and recurrent neural-linear
posterior sampling, and the discounted / sliding-window UCB baselines in both
their classic and linear forms.

Every policy follows the same protocol: ``start`` ingests the initial reward
and observation, then ``choose`` and ``observe`` alternate strictly. Arm
indices are zero-based and argmax ties always break toward the lowest index.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import blr, nnet


class PolicyError(Exception):
    """Invalid policy configuration or protocol violation."""


@dataclass(frozen=True)
class PolicySpec:
    name: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EnvInfo:
    """What a policy needs to know about its environment. ``arm_dim > 0``
    marks the contextual linear problems, whose observations are per-arm
    vector blocks of shape (num_arms, arm_dim)."""

    num_arms: int
    obs_dim: int
    arm_dim: int = 0


class HistoryBuffer:
    """Ordered rewards r_1..r_t, observations x_1..x_t, actions a_2..a_t."""

    def __init__(self):
        self.rewards: list[float] = []
        self.observations: list[np.ndarray] = []
        self.actions: list[int] = []

    @property
    def t(self) -> int:
        return len(self.rewards)

    def append_initial(self, reward, observation):
        self.rewards.append(float(reward))
        self.observations.append(np.asarray(observation, dtype=float))

    def append(self, action, reward, observation):
        self.actions.append(int(action))
        self.rewards.append(float(reward))
        self.observations.append(np.asarray(observation, dtype=float))


class Policy:
    """Base protocol with strict start / choose / observe alternation."""

    def __init__(self, info: EnvInfo, rng: np.random.Generator):
        self.info = info
        self.rng = rng
        self.history = HistoryBuffer()
        self._started = False
        self._awaiting_observe = False
        self._last_action: int | None = None

    def start(self, reward, observation):
        if self._started:
            raise PolicyError("start called twice")
        self._started = True
        self.history.append_initial(reward, observation)
        self._on_start()

    def choose(self) -> int:
        if not self._started:
            raise PolicyError("choose before start")
        if self._awaiting_observe:
            raise PolicyError("choose called twice without observe")
        action = int(self._choose())
        self._last_action = action
        self._awaiting_observe = True
        return action

    def observe(self, reward, observation):
        if not self._awaiting_observe:
            raise PolicyError("observe without a preceding choose")
        self._awaiting_observe = False
        self.history.append(self._last_action, reward, observation)
        self._on_observe(self._last_action, float(reward))

    # Subclass hooks.
    def _on_start(self):
        pass

    def _choose(self) -> int:
        raise NotImplementedError

    def _on_observe(self, action: int, reward: float):
        pass


class RandomPolicy(Policy):
    def _choose(self):
        return self.rng.integers(self.info.num_arms)


# Neural-linear posterior sampling --------------------------------------------


@dataclass(frozen=True)
class NeuralLinearConfig:
    learning_rate: float = 0.01
    train_epochs: int = 16  # updates per training step
    train_interval: int = 32  # time steps between training steps
    noise_var: float = 0.1  # assumed reward noise for the linear model
    prior_var: float = 0.5
    hidden_sizes: tuple[int, int, int] = (32, 32, 32)
    order: int = 1  # feedforward only: history triplets in the feature map
    sinusoidal_units: int = 1  # feedforward only
    reg_weight: float = 0.001


def _one_hot(arm: int, num_arms: int) -> np.ndarray:
    v = np.zeros(num_arms)
    v[arm] = 1.0
    return v


def _arm_block(observation: np.ndarray, info: EnvInfo) -> np.ndarray:
    return observation.reshape(info.num_arms, info.arm_dim)


def psi_dim(info: EnvInfo, order: int) -> int:
    if info.arm_dim > 0:
        return info.arm_dim + order * (info.arm_dim + 1)
    return info.obs_dim + info.num_arms + order * (info.obs_dim + info.num_arms + 1)


def build_psi(history: HistoryBuffer, arm: int, order: int, t: int, info: EnvInfo) -> np.ndarray:
    """Handcrafted feature input for deciding step ``t``: the last observation
    and candidate action plus the ``order`` most recent (observation, action,
    reward) triplets, zero-padded where history runs short.

    For the per-arm-vector problems the candidate's own vector replaces the
    observation/one-hot pair, and past triplets use the vector that was
    actually chosen.
    """
    if t < 2:
        raise PolicyError("feature map defined for t >= 2")
    linear = info.arm_dim > 0
    last_obs = history.observations[t - 2]
    if linear:
        parts = [_arm_block(last_obs, info)[arm]]
        block = info.arm_dim + 1
    else:
        parts = [last_obs, _one_hot(arm, info.num_arms)]
        block = info.obs_dim + info.num_arms + 1
    for k in range(1, order + 1):
        if t - k >= 2:
            obs_k = history.observations[t - k - 2]
            act_k = history.actions[t - k - 2]
            r_k = history.rewards[t - k - 1]
            if linear:
                parts.append(np.append(_arm_block(obs_k, info)[act_k], r_k))
            else:
                parts.append(np.concatenate([obs_k, _one_hot(act_k, info.num_arms), [r_k]]))
        else:
            parts.append(np.zeros(block))
    return np.concatenate(parts)


class _NeuralLinearPolicy(Policy):
    """Shared machinery: a reward-prediction network retrained every
    ``train_interval`` steps, penultimate-layer features refreshed to match
    the current parameters, and a Bayesian linear posterior refit from the
    entire feature history after every observation."""

    def __init__(self, info, rng, config: NeuralLinearConfig):
        super().__init__(info, rng)
        self.config = config
        self.params = nnet.init_params(self._arch_spec(), int(rng.integers(2**63)))
        self.prior = blr.PriorSpec(
            feature_dim=config.hidden_sizes[2],
            tau2=config.prior_var,
            sigma2=config.noise_var,
        )
        self.posterior = blr.posterior_fit(
            self.prior, np.zeros((0, config.hidden_sizes[2])), np.zeros(0)
        )
        self.targets: list[float] = []
        self.features: list[np.ndarray] = []

    def _arch_spec(self) -> nnet.ArchitectureSpec:
        raise NotImplementedError

    def _choose(self):
        w = blr.posterior_sample(self.posterior, self.rng)
        feats = self._candidate_features()
        scores = feats @ w
        return int(np.argmax(scores))

    def _refit(self):
        self.posterior = blr.posterior_fit(
            self.prior, np.asarray(self.features), np.asarray(self.targets)
        )

    def _should_train(self) -> bool:
        cfg = self.config
        return cfg.train_epochs > 0 and self.history.t % cfg.train_interval == 0


class FeedforwardNeuralLinear(_NeuralLinearPolicy):
    """Posterior sampling over penultimate features of a feedforward network
    fed by the handcrafted history encoding of :func:`build_psi`."""

    def __init__(self, info, rng, config: NeuralLinearConfig):
        self._psi_dim = psi_dim(info, config.order)
        super().__init__(info, rng, config)
        self.psi_inputs: list[np.ndarray] = []
        self.psi_times: list[float] = []
        self._candidates: np.ndarray | None = None

    def _arch_spec(self):
        return nnet.ArchitectureSpec(
            kind="feedforward",
            input_dim=self._psi_dim,
            hidden_sizes=self.config.hidden_sizes,
            sinusoidal_units=self.config.sinusoidal_units,
        )

    def _candidate_features(self):
        t = self.history.t + 1
        self._candidates = np.stack(
            [build_psi(self.history, k, self.config.order, t, self.info)
             for k in range(self.info.num_arms)]
        )
        _, feats, _ = nnet.ff_forward_batch(
            self.params, np.full(self.info.num_arms, float(t)), self._candidates
        )
        return feats

    def _on_observe(self, action, reward):
        t = self.history.t
        self.psi_inputs.append(self._candidates[action])
        self.psi_times.append(float(t))
        self.targets.append(reward)
        if self._should_train():
            data = nnet.FeedforwardData(
                inputs=np.asarray(self.psi_inputs),
                times=np.asarray(self.psi_times),
                targets=np.asarray(self.targets),
            )
            self.params = nnet.train(
                self.params, data, self.config.reg_weight,
                self.config.learning_rate, self.config.train_epochs,
            )
            _, feats, _ = nnet.ff_forward_batch(
                self.params, np.asarray(self.psi_times), np.asarray(self.psi_inputs)
            )
            self.features = list(feats)
        else:
            _, z, _ = nnet.ff_forward_batch(
                self.params, np.asarray(self.psi_times[-1:]),
                self.psi_inputs[-1][None, :],
            )
            self.features.append(z[0])
        self._refit()


class RecurrentNeuralLinear(_NeuralLinearPolicy):
    """Posterior sampling over penultimate features of an LSTM network fed
    the raw interaction stream (previous reward, previous observation, and
    the candidate action)."""

    def __init__(self, info, rng, config: NeuralLinearConfig):
        super().__init__(info, rng, config)
        self.seq_inputs: list[np.ndarray] = []
        self.state = nnet.RnnState.zeros(self.params.spec)
        self._candidates: list[tuple] | None = None

    def _arch_spec(self):
        if self.info.arm_dim > 0:
            input_dim = 1 + self.info.arm_dim
        else:
            input_dim = 1 + self.info.obs_dim + self.info.num_arms
        return nnet.ArchitectureSpec(
            kind="recurrent", input_dim=input_dim, hidden_sizes=self.config.hidden_sizes
        )

    def _step_input(self, arm: int) -> np.ndarray:
        last_r = self.history.rewards[-1]
        last_obs = self.history.observations[-1]
        if self.info.arm_dim > 0:
            return np.concatenate([[last_r], _arm_block(last_obs, self.info)[arm]])
        return np.concatenate([[last_r], last_obs, _one_hot(arm, self.info.num_arms)])

    def _candidate_features(self):
        # One recurrent step per arm from the cached state; the cache itself
        # is only advanced in observe, with the arm actually chosen.
        self._candidates = []
        feats = np.empty((self.info.num_arms, self.config.hidden_sizes[2]))
        for k in range(self.info.num_arms):
            inp = self._step_input(k)
            state, _, u = nnet.rnn_step(self.params, self.state, inp)
            self._candidates.append((inp, state, u))
            feats[k] = u
        return feats

    def _on_observe(self, action, reward):
        inp, state, u = self._candidates[action]
        self.seq_inputs.append(inp)
        self.targets.append(reward)
        if self._should_train():
            data = nnet.SequenceData(
                inputs=np.asarray(self.seq_inputs), targets=np.asarray(self.targets)
            )
            self.params = nnet.train(
                self.params, data, self.config.reg_weight,
                self.config.learning_rate, self.config.train_epochs,
            )
            _, feats, final_state = nnet.rnn_forward_sequence(
                self.params, np.asarray(self.seq_inputs)
            )
            self.features = list(feats)
            self.state = final_state
        else:
            # Parameters unchanged, so the candidate step for the chosen arm
            # is bitwise identical to re-running the whole sequence.
            self.features.append(u)
            self.state = state
        self._refit()


# Discounted and sliding-window UCB -------------------------------------------


def ducb_scores(disc_counts, disc_sums, xi, reward_bound):
    """Discounted-UCB scores from discounted play counts and reward sums;
    arms with no weight score +inf (forced exploration)."""
    scores = np.full(len(disc_counts), np.inf)
    played = disc_counts > 0
    n_t = disc_counts.sum()
    if np.any(played):
        means = disc_sums[played] / disc_counts[played]
        pad = 2 * reward_bound * np.sqrt(xi * np.log(n_t) / disc_counts[played])
        scores[played] = means + pad
    return scores


def swucb_scores(counts, sums, t, window, xi, reward_bound):
    """Sliding-window UCB scores from in-window play counts and reward sums."""
    scores = np.full(len(counts), np.inf)
    played = counts > 0
    if np.any(played):
        means = sums[played] / counts[played]
        pad = reward_bound * np.sqrt(xi * np.log(min(t, window)) / counts[played])
        scores[played] = means + pad
    return scores


class DiscountedUCB(Policy):
    def __init__(self, info, rng, discount, xi=0.5, reward_bound=1.0):
        super().__init__(info, rng)
        if not 0 < discount <= 1:
            raise PolicyError("discount must be in (0, 1]")
        self.discount = discount
        self.xi = xi
        self.reward_bound = reward_bound
        self.disc_counts = np.zeros(info.num_arms)
        self.disc_sums = np.zeros(info.num_arms)

    def _choose(self):
        return np.argmax(ducb_scores(self.disc_counts, self.disc_sums,
                                     self.xi, self.reward_bound))

    def _on_observe(self, action, reward):
        self.disc_counts *= self.discount
        self.disc_sums *= self.discount
        self.disc_counts[action] += 1.0
        self.disc_sums[action] += reward


class SlidingWindowUCB(Policy):
    def __init__(self, info, rng, window, xi=0.5, reward_bound=1.0):
        super().__init__(info, rng)
        if window < 1:
            raise PolicyError("window must be at least 1")
        self.window = window
        self.xi = xi
        self.reward_bound = reward_bound
        self.recent = deque(maxlen=window)
        self.steps = 0

    def _choose(self):
        counts = np.zeros(self.info.num_arms)
        sums = np.zeros(self.info.num_arms)
        for arm, reward in self.recent:
            counts[arm] += 1.0
            sums[arm] += reward
        return np.argmax(swucb_scores(counts, sums, max(self.steps, 1),
                                      self.window, self.xi, self.reward_bound))

    def _on_observe(self, action, reward):
        self.recent.append((action, reward))
        self.steps += 1


# Linear UCB variants for the per-arm-vector problems -------------------------


class DiscountedLinUCB(Policy):
    """Weighted ridge regression over chosen arm vectors with geometric
    discounting; the exploration width uses the doubly-discounted design
    matrix."""

    def __init__(self, info, rng, discount, ridge=1.0, width=1.0):
        super().__init__(info, rng)
        if info.arm_dim <= 0:
            raise PolicyError("linear UCB needs per-arm vector observations")
        if not 0 < discount <= 1:
            raise PolicyError("discount must be in (0, 1]")
        self.discount = discount
        self.ridge = ridge
        self.width = width
        d = info.arm_dim
        self.design = np.zeros((d, d))  # sum of gamma^(t-s) x x^T
        self.design2 = np.zeros((d, d))  # sum of gamma^(2(t-s)) x x^T
        self.bvec = np.zeros(d)

    def scores(self, arms):
        d = self.info.arm_dim
        v = self.design + self.ridge * np.eye(d)
        v2 = self.design2 + self.ridge * np.eye(d)
        theta = np.linalg.solve(v, self.bvec)
        y = np.linalg.solve(v, arms.T)  # (d, K)
        widths = np.sqrt(np.einsum("dk,dj,jk->k", y, v2, y))
        return arms @ theta + self.width * widths

    def _choose(self):
        arms = _arm_block(self.history.observations[-1], self.info)
        return np.argmax(self.scores(arms))

    def _on_observe(self, action, reward):
        # history already extended: observations[-2] is the block acted on.
        x = _arm_block(self.history.observations[-2], self.info)[action]
        g = self.discount
        self.design = g * self.design + np.outer(x, x)
        self.design2 = g * g * self.design2 + np.outer(x, x)
        self.bvec = g * self.bvec + reward * x


class SlidingWindowLinUCB(Policy):
    """Ridge regression over only the last ``window`` chosen arm vectors."""

    def __init__(self, info, rng, window, ridge=1.0, width=1.0):
        super().__init__(info, rng)
        if info.arm_dim <= 0:
            raise PolicyError("linear UCB needs per-arm vector observations")
        if window < 1:
            raise PolicyError("window must be at least 1")
        self.window = window
        self.ridge = ridge
        self.width = width
        self.recent = deque(maxlen=window)

    def scores(self, arms):
        d = self.info.arm_dim
        v = self.ridge * np.eye(d)
        b = np.zeros(d)
        for x, r in self.recent:
            v += np.outer(x, x)
            b += r * x
        theta = np.linalg.solve(v, b)
        y = np.linalg.solve(v, arms.T)
        widths = np.sqrt(np.einsum("dk,dk->k", arms.T, y))
        return arms @ theta + self.width * widths

    def _choose(self):
        arms = _arm_block(self.history.observations[-1], self.info)
        return np.argmax(self.scores(arms))

    def _on_observe(self, action, reward):
        x = _arm_block(self.history.observations[-2], self.info)[action]
        self.recent.append((x, reward))


# Tuning helpers for the linear baselines -------------------------------------


def flipping_variation(horizon: int, flip_period: int) -> float:
    """Total parameter drift of the flipping-vector problem over a trial:
    each sign flip moves the unit weight vector by 2."""
    return 2.0 * ((horizon - 1) // flip_period)


def rotating_variation(horizon: int, frequency: float) -> float:
    """Total parameter drift of the rotating-vector problem: the unit weight
    advances by angle 2*pi*f per step, a chord of length 2|sin(pi f)|."""
    return (horizon - 1) * 2.0 * abs(np.sin(np.pi * frequency))


def tuned_discount(dim: int, horizon: int, variation: float) -> float:
    """Discount factor matched to the variation budget."""
    return float(np.clip(1.0 - (variation / (dim * horizon)) ** (2 / 3), 0.0, 1.0))


def tuned_window(dim: int, horizon: int, variation: float) -> int:
    """Sliding-window length matched to the variation budget."""
    if variation <= 0:
        return horizon
    return int(min(horizon, np.ceil((dim * horizon / variation) ** (2 / 3))))


def default_width(dim: int, horizon: int, noise_sd: float, ridge: float = 1.0,
                  delta: float = 0.01) -> float:
    """Standard confidence width for ridge-based UCB with unit-norm arms and
    a unit-norm weight vector."""
    return float(
        noise_sd * np.sqrt(dim * np.log((1 + horizon / (ridge * dim)) / delta))
        + np.sqrt(ridge)
    )


# Registry --------------------------------------------------------------------


def _make_neural(cls):
    def build(info, rng, **params):
        if "hidden_sizes" in params:
            params = {**params, "hidden_sizes": tuple(params["hidden_sizes"])}
        return cls(info, rng, NeuralLinearConfig(**params))
    return build


POLICY_REGISTRY = {
    "random": RandomPolicy,
    "fnl_ps": _make_neural(FeedforwardNeuralLinear),
    "rnl_ps": _make_neural(RecurrentNeuralLinear),
    "ducb": DiscountedUCB,
    "swucb": SlidingWindowUCB,
    "dlinucb": DiscountedLinUCB,
    "swlinucb": SlidingWindowLinUCB,
}


def make_policy(spec: PolicySpec, info: EnvInfo, rng: np.random.Generator) -> Policy:
    if spec.name not in POLICY_REGISTRY:
        raise PolicyError(f"unknown policy: {spec.name!r}")
    try:
        return POLICY_REGISTRY[spec.name](info, rng, **spec.params)
    except TypeError as exc:
        raise PolicyError(f"bad parameters for {spec.name!r}: {exc}") from exc
