"""latentdg: discover latent domains in a mixed-source live/spoof dataset by
clustering channel-statistics domain features, then train a generalizable
classifier with episodic meta-learning regularized toward a prior
distribution and by depth supervision.
"""

__version__ = "0.1.0"

from .config import (  # noqa: F401
    AblationConfig,
    DatasetSpec,
    HyperParams,
    StyleParams,
    default_dataset_spec,
)
from .dataset import Dataset, Sample, load_dataset, save_dataset  # noqa: F401
from .synth import generate_dataset, generate_heldout  # noqa: F401
