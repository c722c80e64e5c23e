"""Detecting coordination in a network of sensing agents from probe/response data."""

from .core import (CoordError, DatasetError, DimensionMismatch, EmptyDataset, InteractionDataset,
                   NegativeEntry, NoiseModel, NoisyDataset, SimplexWeights, load_dataset,
                   rng_stream, save_dataset, validate_dataset)

__version__ = "0.1.0"
