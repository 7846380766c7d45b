"""Finite-size instances of the common and individual support model.

An instance of dimension N draws disjoint index sets I(0), ..., I(K) of
sizes round(pi0*N), round(pi[k]*N), standard Gaussian coefficients on each
set, Gaussian designs with i.i.d. variance-1/N entries, and responses

    y_k = A_k[:, I(0)] x*_0 + A_k[:, I(k)] x*_k + noise_k.

All randomness flows from a counter-based RNG (Philox) keyed by
``(seed, stream id)`` so that supports, coefficients, designs, noise and
test draws come from independent, replayable streams.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import Estimate, Hyperparams, ProblemGeometry

__all__ = [
    "Instance",
    "OrderParamEstimates",
    "support_sizes",
    "generate_instance",
    "empirical_test_error",
    "empirical_order_params",
    "save_instance",
    "load_instance",
]

# Stream ids for the per-instance Philox keys.
_STREAM_SUPPORTS = 0
_STREAM_COEFFS = 1
_STREAM_DESIGN = 2  # + class index
_STREAM_NOISE = 100  # + class index
_STREAM_TEST = 1000


def _rng(seed: int, *stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(stream))
    return np.random.Generator(np.random.Philox(ss))


def support_sizes(geometry: ProblemGeometry, n_features: int) -> list[int]:
    """Sizes [N_0, N_1, ..., N_K]; rounding slack goes to the negative set."""
    sizes = [round(geometry.pi0 * n_features)]
    sizes += [round(p * n_features) for p in geometry.pi]
    if sum(sizes) > n_features:
        raise ValueError(
            f"support sizes {sizes} exceed N={n_features}; geometry infeasible"
        )
    return sizes


@dataclass(frozen=True)
class Instance:
    geometry: ProblemGeometry
    n_features: int
    seed: int
    supports: list[np.ndarray]  # I(0), I(1), ..., I(K)
    coeffs: list[np.ndarray]  # x*_0, x*_1, ..., x*_K
    designs: list[np.ndarray]  # A_1, ..., A_K
    responses: list[np.ndarray]  # y_1, ..., y_K

    @property
    def num_classes(self) -> int:
        return self.geometry.num_classes

    def truth_vector(self, k: int) -> np.ndarray:
        """Full-length true coefficient vector r_k of class k (1-based)."""
        if not 1 <= k <= self.num_classes:
            raise ValueError(f"class index {k} out of range")
        r = np.zeros(self.n_features)
        r[self.supports[0]] = self.coeffs[0]
        r[self.supports[k]] = self.coeffs[k]
        return r

    def truth_vectors(self) -> list[np.ndarray]:
        return [self.truth_vector(k) for k in range(1, self.num_classes + 1)]

    def datasets(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return list(zip(self.designs, self.responses))


def generate_instance(geometry: ProblemGeometry, n_features: int, seed: int) -> Instance:
    """Draw one instance, deterministic in (geometry, n_features, seed)."""
    sizes = support_sizes(geometry, n_features)
    k_classes = geometry.num_classes

    perm = _rng(seed, _STREAM_SUPPORTS).permutation(n_features)
    supports, start = [], 0
    for size in sizes:
        supports.append(np.sort(perm[start : start + size]))
        start += size

    rng_coef = _rng(seed, _STREAM_COEFFS)
    coeffs = [rng_coef.standard_normal(size) for size in sizes]

    designs, responses = [], []
    scale = 1.0 / np.sqrt(n_features)
    for k in range(1, k_classes + 1):
        m_k = round(geometry.alpha[k - 1] * n_features)
        A = _rng(seed, _STREAM_DESIGN, k).normal(0.0, scale, size=(m_k, n_features))
        y = A[:, supports[0]] @ coeffs[0] + A[:, supports[k]] @ coeffs[k]
        sig = geometry.sigma[k - 1]
        if sig > 0:
            y = y + _rng(seed, _STREAM_NOISE, k).normal(0.0, sig, size=m_k)
        designs.append(A)
        responses.append(y)

    return Instance(
        geometry=geometry,
        n_features=n_features,
        seed=int(seed),
        supports=supports,
        coeffs=coeffs,
        designs=designs,
        responses=responses,
    )


def empirical_test_error(
    instance: Instance,
    first_stage: Estimate,
    second_stage: Estimate | None,
    hyper: Hyperparams,
    n_test_sets: int,
    seed: int,
) -> dict:
    """Monte Carlo test error over fresh draws of test data.

    Each draw resamples the test design and noise; the first-stage error
    sums the per-class mean squared prediction errors (scaled by 1/N), the
    second-stage error evaluates the combined predictor
    ``kappa * x1 + x2`` against fresh target data.  Returns per-stage mean
    and standard error over the draws.
    """
    if n_test_sets < 2:
        raise ValueError("need at least 2 test sets for a standard error")
    geom = instance.geometry
    n = instance.n_features
    scale = 1.0 / np.sqrt(n)
    truths = instance.truth_vectors()
    x1 = first_stage.coefficients
    combo = None
    if second_stage is not None:
        combo = hyper.kappa * x1 + second_stage.coefficients

    err1 = np.zeros(n_test_sets)
    err2 = np.zeros(n_test_sets) if combo is not None else None
    for t in range(n_test_sets):
        rng = _rng(seed, _STREAM_TEST, t)
        for k in range(1, geom.num_classes + 1):
            m_k = round(geom.alpha[k - 1] * n)
            A = rng.normal(0.0, scale, size=(m_k, n))
            y = A @ truths[k - 1]
            sig = geom.sigma[k - 1]
            if sig > 0:
                y = y + rng.normal(0.0, sig, size=m_k)
            res = y - A @ x1
            err1[t] += float(res @ res) / n
            if k == 1 and combo is not None:
                res2 = y - A @ combo
                err2[t] = float(res2 @ res2) / n

    def _mean_se(v):
        return float(v.mean()), float(v.std(ddof=1) / np.sqrt(len(v)))

    out = {"eps1": _mean_se(err1)}
    if err2 is not None:
        out["eps2"] = _mean_se(err2)
    return out


@dataclass(frozen=True)
class OrderParamEstimates:
    """Finite-N analogues of the asymptotic order parameters."""

    q1: float
    q2: float | None
    qr: float | None
    m1: list[float]  # overlaps of x1 with x*_k on I(k), k = 0..K
    m2: list[float] | None

    def to_dict(self) -> dict:
        return {
            "q1": self.q1,
            "q2": self.q2,
            "qr": self.qr,
            "m1": list(self.m1),
            "m2": None if self.m2 is None else list(self.m2),
        }


def empirical_order_params(
    instance: Instance,
    first_stage: Estimate,
    second_stage: Estimate | None = None,
) -> OrderParamEstimates:
    n = instance.n_features
    x1 = first_stage.coefficients
    q1 = float(x1 @ x1) / n
    m1 = [
        float(x1[instance.supports[k]] @ instance.coeffs[k]) / n
        for k in range(instance.num_classes + 1)
    ]
    if second_stage is None:
        return OrderParamEstimates(q1=q1, q2=None, qr=None, m1=m1, m2=None)
    x2 = second_stage.coefficients
    q2 = float(x2 @ x2) / n
    qr = float(x1 @ x2) / n
    m2 = [
        float(x2[instance.supports[k]] @ instance.coeffs[k]) / n
        for k in range(instance.num_classes + 1)
    ]
    return OrderParamEstimates(q1=q1, q2=q2, qr=qr, m1=m1, m2=m2)


def save_instance(instance: Instance, path) -> None:
    """Persist to .npz with seed and geometry metadata for replay."""
    meta = {
        "seed": instance.seed,
        "n_features": instance.n_features,
        "geometry": instance.geometry.to_dict(),
    }
    arrays = {"meta": np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)}
    for i, (s, c) in enumerate(zip(instance.supports, instance.coeffs)):
        arrays[f"support_{i}"] = s
        arrays[f"coeffs_{i}"] = c
    for i, (a, y) in enumerate(zip(instance.designs, instance.responses)):
        arrays[f"design_{i}"] = a
        arrays[f"response_{i}"] = y
    np.savez_compressed(path, **arrays)


def load_instance(path) -> Instance:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        geometry = ProblemGeometry.from_dict(meta["geometry"])
        k = geometry.num_classes
        supports = [data[f"support_{i}"] for i in range(k + 1)]
        coeffs = [data[f"coeffs_{i}"] for i in range(k + 1)]
        designs = [data[f"design_{i}"] for i in range(k)]
        responses = [data[f"response_{i}"] for i in range(k)]
    return Instance(
        geometry=geometry,
        n_features=int(meta["n_features"]),
        seed=int(meta["seed"]),
        supports=supports,
        coeffs=coeffs,
        designs=designs,
        responses=responses,
    )
