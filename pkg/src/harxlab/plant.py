"""Hammerstein ARX plant simulation.

A Hammerstein ARX (H-ARX) plant pushes the input through a static
nonlinearity expanded in a scalar basis and then through a linear FIR block
with ``m`` taps.  The regressor is stacked delay by delay: block ``i`` holds
every basis function evaluated on the single delayed sample ``r(t-i)``, so
the noise-free output is a plain inner product between the regressor and the
Kronecker interleaving of the linear taps ``q`` and the nonlinearity
coefficients ``c``.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BadLength, DimensionMismatch, InsufficientHistory, ScenarioError

INPUT_KINDS = ("white_gaussian", "uniform", "custom")


def _cell(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class BasisSet:
    """Ordered family of scalar maps applied to delayed input samples."""

    functions: tuple[Callable[[float], float], ...]
    kind: str = "custom"

    def __post_init__(self):
        if len(self.functions) < 1:
            raise ValueError("a basis needs at least one function")
        if self.kind not in ("polynomial", "custom"):
            raise ValueError(f"unknown basis kind {self.kind!r}")

    @property
    def l(self) -> int:
        return len(self.functions)

    def evaluate(self, r: float) -> np.ndarray:
        """Evaluate every basis function at one sample; returns length l."""
        if self.kind == "polynomial":
            return np.power(float(r), np.arange(1, self.l + 1, dtype=np.float64))
        return np.array([float(f(r)) for f in self.functions])

    def evaluate_many(self, r: np.ndarray) -> np.ndarray:
        """Evaluate the basis on a sample vector; returns shape (len(r), l)."""
        r = np.asarray(r, dtype=np.float64)
        if self.kind == "polynomial":
            return np.power(r[:, None], np.arange(1, self.l + 1, dtype=np.float64)[None, :])
        return np.column_stack([[float(f(x)) for x in r] for f in self.functions])


def polynomial_basis(l: int) -> BasisSet:
    """Monomial basis r, r**2, ..., r**l."""
    if l < 1:
        raise ValueError("polynomial basis order must be >= 1")
    return BasisSet(
        functions=tuple((lambda r, k=k: r**k) for k in range(1, l + 1)),
        kind="polynomial",
    )


@dataclass(frozen=True)
class HarxPlant:
    """Ground-truth H-ARX system.

    ``q`` are the linear FIR taps over ``m`` delays, ``c`` the nonlinearity
    coefficients (one per basis function), ``noise_std`` the additive white
    Gaussian output noise.  Instances are immutable; the tap arrays are
    frozen, so a plant can be shared across concurrent generation runs.
    """

    m: int
    basis: BasisSet
    q: np.ndarray
    c: np.ndarray
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        q = np.array(self.q, dtype=np.float64)
        c = np.array(self.c, dtype=np.float64)
        q.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "c", c)
        if self.m < 1:
            raise ValueError("linear memory order m must be >= 1")
        if q.shape != (self.m,):
            raise ValueError(f"q must have length m={self.m}, got {q.shape[0] if q.ndim == 1 else q.shape}")
        if c.shape != (self.basis.l,):
            raise ValueError(f"c must have length l={self.basis.l}, got {c.shape[0] if c.ndim == 1 else c.shape}")
        if not self.noise_std >= 0.0:
            raise ValueError("noise_std must be >= 0")

    @property
    def n(self) -> int:
        """Length of the stacked regressor / true weight vector (m * l)."""
        return self.m * self.basis.l


@dataclass(frozen=True)
class Regressor:
    """Stacked nonlinear regressor at one time step.

    Layout: blocks i = 1..m, block i = [f_1(r(t-i)), ..., f_l(r(t-i))], so
    element (i-1)*l + (k-1) is f_k(r(t-i)).
    """

    values: np.ndarray
    time_index: int


@dataclass(frozen=True)
class Dataset:
    """Aligned identification data from one simulated run.

    ``outputs[k]`` is the (noisy) plant response to ``regressors[k]``; both
    correspond to time m + k.  ``plant_truth`` is the Kronecker weight vector
    the regressors pair with.
    """

    inputs: np.ndarray
    regressors: list[Regressor]
    outputs: np.ndarray
    plant_truth: np.ndarray

    def __len__(self) -> int:
        return len(self.regressors)

    def regressor_matrix(self) -> np.ndarray:
        """All regressors stacked row-wise, shape (len(self), n)."""
        return np.stack([r.values for r in self.regressors])


def true_weight_vector(plant: HarxPlant) -> np.ndarray:
    """Kronecker interleaving of taps and coefficients.

    Element (i-1)*l + (k-1) equals q_i * c_k, matching the block-by-delay
    regressor layout.
    """
    return np.kron(plant.q, plant.c)


def build_regressor(history: Sequence[float], t: int, basis: BasisSet, m: int) -> Regressor:
    """Stack basis evaluations of r(t-1), ..., r(t-m) taken from ``history``.

    ``history[j]`` is the input sample r(j), so the regressor at time ``t``
    needs ``m <= t <= len(history)``.
    """
    history = np.asarray(history, dtype=np.float64)
    if t < m or t > len(history):
        raise InsufficientHistory(
            f"regressor at t={t} needs samples r(t-1)..r(t-{m}), "
            f"but history covers r(0)..r({len(history) - 1})"
        )
    values = np.concatenate([basis.evaluate(history[t - i]) for i in range(1, m + 1)])
    values.setflags(write=False)
    return Regressor(values=values, time_index=t)


def plant_output(plant: HarxPlant, reg: Regressor | np.ndarray, rng: np.random.Generator | None = None) -> float:
    """Plant response to one regressor: reg . w_true + N(0, noise_std**2).

    With ``noise_std == 0`` the return is exact and ``rng`` is never touched.
    """
    values = reg.values if isinstance(reg, Regressor) else np.asarray(reg, dtype=np.float64)
    if values.shape != (plant.n,):
        raise DimensionMismatch(
            f"regressor length {values.shape[0] if values.ndim == 1 else values.shape} != m*l = {plant.n}"
        )
    clean = float(values @ true_weight_vector(plant))
    if plant.noise_std == 0.0:
        return clean
    if rng is None:
        rng = np.random.default_rng(plant.seed)
    return clean + plant.noise_std * float(rng.standard_normal())


def generate_sequence(
    plant: HarxPlant,
    input_kind: str = "white_gaussian",
    T: int | None = None,
    samples: Sequence[float] | None = None,
    rng: np.random.Generator | None = None,
) -> Dataset:
    """Simulate a length-``T`` run and return the T - m aligned pairs.

    The random stream draws the T input samples first and the T - m output
    noise samples second, so a fixed seed reproduces the dataset bit for bit.
    ``input_kind`` is ``white_gaussian`` (standard normal), ``uniform`` (on
    [-1, 1)), or ``custom`` with explicit ``samples``.
    """
    if input_kind not in INPUT_KINDS:
        raise ValueError(f"input_kind must be one of {INPUT_KINDS}, got {input_kind!r}")
    if input_kind == "custom":
        if samples is None:
            raise ValueError("input_kind 'custom' needs explicit samples")
        inputs = np.asarray(samples, dtype=np.float64)
        T = len(inputs)
    elif T is None:
        raise ValueError("T is required unless custom samples are given")
    if T <= plant.m:
        raise BadLength(f"T must exceed the plant memory m={plant.m}; got T={T}")
    if rng is None:
        rng = np.random.default_rng(plant.seed)
    if input_kind == "white_gaussian":
        inputs = rng.standard_normal(T)
    elif input_kind == "uniform":
        inputs = rng.uniform(-1.0, 1.0, T)

    F = plant.basis.evaluate_many(inputs)
    # row k of X is the regressor at t = m + k; block i is F[t - i]
    X = np.concatenate([F[plant.m - i : T - i] for i in range(1, plant.m + 1)], axis=1)
    w = true_weight_vector(plant)
    outputs = X @ w
    if plant.noise_std > 0.0:
        outputs = outputs + plant.noise_std * rng.standard_normal(T - plant.m)
    X.setflags(write=False)
    inputs.setflags(write=False)
    outputs.setflags(write=False)
    regressors = [Regressor(values=X[k], time_index=plant.m + k) for k in range(T - plant.m)]
    return Dataset(inputs=inputs, regressors=regressors, outputs=outputs, plant_truth=w)


# ---------------------------------------------------------------------------
# Scenario files: flat "key = value" text with keys
# m, l, basis, q, c, noise_std, seed.

_REQUIRED_KEYS = ("m", "l", "basis", "q", "c")
_ALL_KEYS = _REQUIRED_KEYS + ("noise_std", "seed")


def parse_scenario(text: str, path: str | None = None) -> HarxPlant:
    """Parse scenario text into a plant; errors carry the offending line."""
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ScenarioError("expected 'key = value'", path, lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _ALL_KEYS:
            raise ScenarioError(f"unknown key {key!r}", path, lineno)
        if key in entries:
            raise ScenarioError(f"duplicate key {key!r}", path, lineno)
        entries[key] = (value, lineno)

    for key in _REQUIRED_KEYS:
        if key not in entries:
            raise ScenarioError(f"missing required key {key!r}", path)

    def take_int(key: str, default: int | None = None) -> int:
        if key not in entries:
            return default
        value, lineno = entries[key]
        try:
            return int(value)
        except ValueError:
            raise ScenarioError(f"{key} must be an integer, got {value!r}", path, lineno) from None

    def take_float(key: str, default: float) -> float:
        if key not in entries:
            return default
        value, lineno = entries[key]
        try:
            return float(value)
        except ValueError:
            raise ScenarioError(f"{key} must be a number, got {value!r}", path, lineno) from None

    def take_floats(key: str) -> np.ndarray:
        value, lineno = entries[key]
        try:
            return np.array([float(x) for x in value.split(",")])
        except ValueError:
            raise ScenarioError(f"{key} must be comma-separated numbers, got {value!r}", path, lineno) from None

    basis_name, basis_line = entries["basis"]
    if basis_name != "polynomial":
        raise ScenarioError(
            f"basis must be 'polynomial' (custom bases are code-only), got {basis_name!r}", path, basis_line
        )
    l = take_int("l")
    m = take_int("m")
    try:
        return HarxPlant(
            m=m,
            basis=polynomial_basis(l),
            q=take_floats("q"),
            c=take_floats("c"),
            noise_std=take_float("noise_std", 0.0),
            seed=take_int("seed", 0),
        )
    except ValueError as exc:
        raise ScenarioError(str(exc), path) from None


def load_scenario(path) -> HarxPlant:
    """Read and parse a scenario file."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read(), path=str(path))


def muscle_preset() -> HarxPlant:
    """The shipped stimulated-muscle stand-in scenario (m=3, cubic basis).

    The tap values are synthetic: the structure is the modeled part, the
    numbers are a reproducible placeholder.
    """
    text = importlib.resources.files("harxlab").joinpath("scenarios/muscle.scenario").read_text("utf-8")
    return parse_scenario(text, path="builtin:muscle")


def dataset_to_csv(dataset: Dataset) -> str:
    """CSV with header ``t,input,output`` (%.17g cells, LF line endings).

    The first m rows predate the first regressor, so their output cell is
    empty.
    """
    m = len(dataset.inputs) - len(dataset.outputs)
    lines = ["t,input,output"]
    for t, u in enumerate(dataset.inputs):
        out = _cell(dataset.outputs[t - m]) if t >= m else ""
        lines.append(f"{t},{_cell(u)},{out}")
    return "\n".join(lines) + "\n"
