"""Independent reference computations used by the test-suite."""

import math

import numpy as np

# generator formulas written out separately from the package
_FORMULAS = {
    "kl": (lambda x: x * np.log(x), 0.0),
    "neg-log": (lambda x: -np.log(x), math.inf),
    "tv": (lambda x: 0.5 * np.abs(x - 1.0), 0.5),
    "pearson": (lambda x: (x - 1.0) ** 2, 1.0),
    "js": (lambda x: -(x + 1.0) * np.log((x + 1.0) / 2.0) + x * np.log(x), math.log(2.0)),
    "hellinger2": (lambda x: (np.sqrt(x) - 1.0) ** 2, 1.0),
    "neyman": (lambda x: 1.0 / x - 1.0, math.inf),
}

GRID_STEP = 1e-6
GRID = np.linspace(0.0, 1.0, 1_000_001)


def f_eval(name, x):
    func, at_zero = _FORMULAS[name]
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = func(np.where(x > 0, x, 1.0))
    return np.where(x > 0, out, at_zero)


def bernoulli_div(name, p, q):
    """D_f(Bern(p) || Bern(q)) for q strictly inside (0, 1)."""
    p = np.asarray(p, dtype=float)
    return q * f_eval(name, p / q) + (1.0 - q) * f_eval(name, (1.0 - p) / (1.0 - q))


def grid_left_inverse(name, q, c):
    d = bernoulli_div(name, GRID, q)
    return float(GRID[d <= c].max())


def grid_right_inverse_kl(mean, c):
    p = GRID[1:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(mean > 0, mean * np.log(mean / p), 0.0)
        b = np.where(mean < 1, (1 - mean) * np.log((1 - mean) / (1 - p)), 0.0)
    return float(p[a + b <= c].max())


def lava_mutual_information(p_correct, belief):
    """Double-sum I(o; s) for the five-state lava sensor."""
    n = 5
    sensor = np.full((n, n), (1.0 - p_correct) / (n - 1))
    np.fill_diagonal(sensor, p_correct)
    marg = belief @ sensor
    total = 0.0
    for s in range(n):
        for o in range(n):
            w = belief[s] * sensor[s, o]
            if w > 0:
                total += w * math.log(sensor[s, o] / marg[o])
    return total


class ScalarGaussianChannel:
    """s ~ N(0, signal_var), o = s + N(0, noise_var); MI is 0.5 ln(1 + SNR)."""

    horizon = 1
    actions = (0,)
    n_actions = 1

    def __init__(self, signal_var=1.0, noise_var=1.0):
        self.signal_var = signal_var
        self.noise_var = noise_var

    @property
    def mutual_information(self):
        return 0.5 * math.log1p(self.signal_var / self.noise_var)

    def sample_states(self, prefix_actions, n, rng):
        return rng.normal(0.0, math.sqrt(self.signal_var), size=(n, 1))

    def sample_observations(self, states, rng):
        return states + rng.normal(0.0, math.sqrt(self.noise_var), size=states.shape)

    def log_density_pairwise(self, obs, states):
        d = obs[:, 0][:, None] - states[:, 0][None, :]
        return -0.5 * d**2 / self.noise_var - 0.5 * math.log(2 * math.pi * self.noise_var)

    def rewards(self, states):
        return (states > 0).astype(float)


class ConstantSensor(ScalarGaussianChannel):
    """Observation independent of the state."""

    def sample_observations(self, states, rng):
        return rng.normal(size=states.shape)

    def log_density_pairwise(self, obs, states):
        return np.broadcast_to(-0.5 * obs[:, 0][:, None] ** 2, (len(obs), len(states))).copy()
