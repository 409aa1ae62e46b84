import numpy as np
import pytest
import torch

from latentdg.config import DatasetSpec, HyperParams, StyleParams
from latentdg.model import ArchitectureConfig, build_model
from latentdg.synth import generate_dataset


def tiny_spec(seed: int = 7, samples_per_domain: int = 24) -> DatasetSpec:
    return DatasetSpec(
        num_latent_domains=3,
        samples_per_domain=samples_per_domain,
        style_params=(
            StyleParams(0.00, 0.85, "low", noise_sigma=0.02, cue_frequency=13.0),
            StyleParams(0.35, 1.15, "mid", noise_sigma=0.02, cue_frequency=12.0),
            StyleParams(0.70, 1.00, "high", noise_sigma=0.02, cue_frequency=11.0),
        ),
        held_out_domain_styles=(
            StyleParams(0.50, 0.60, "high", noise_sigma=0.04, cue_frequency=12.0),
        ),
        held_out_samples_per_domain=12,
        seed=seed,
    )


@pytest.fixture(scope="session")
def small_dataset():
    return generate_dataset(tiny_spec())


@pytest.fixture()
def f64_model():
    return build_model(ArchitectureConfig(), seed=3, dtype=torch.float64)


@pytest.fixture()
def fast_hyper():
    return HyperParams(epochs=2, batch_size=8, visits_per_epoch=1, seed=5)


def random_images(n: int, rng: np.random.Generator, hw: int = 32) -> np.ndarray:
    return rng.random((n, hw, hw, 6)).astype(np.float32)
