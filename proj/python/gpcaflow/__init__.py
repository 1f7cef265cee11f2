"""Generative modeling of discrete categorical data via geometric latent
subspaces: natural-parameter charts on product simplices, GPCA
dimensionality reduction, latent conditional flow matching, and ODE
sampling back to discrete data.
"""

from ._core import (
    DataError,
    FitReport,
    FlowModel,
    GpcaConfig,
    LatentModel,
    NumericError,
    OneHotDataset,
    cfm_loss,
    decode,
    e_distance,
    e_geodesic,
    e_norm,
    encode,
    encode_with_fixed_basis,
    fit,
    generate,
    geodesic_velocity,
    hamming_curve,
    integrate,
    interpolant,
    joint_histogram,
    load_flow_model,
    load_idx_images,
    load_sequences,
    load_text,
    make_flow_model,
    make_toy,
    nearest_training,
    push_tangent_to_theta,
    push_theta_to_tangent,
    reconstruct,
    reconstruction_error,
    save_sequences,
    save_text,
    smooth_dataset,
    subspace_error_budget,
    train,
    tv_distance,
)

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "FitReport",
    "FlowModel",
    "GpcaConfig",
    "LatentModel",
    "NumericError",
    "OneHotDataset",
    "cfm_loss",
    "decode",
    "e_distance",
    "e_geodesic",
    "e_norm",
    "encode",
    "encode_with_fixed_basis",
    "fit",
    "generate",
    "geodesic_velocity",
    "hamming_curve",
    "integrate",
    "interpolant",
    "joint_histogram",
    "load_flow_model",
    "load_idx_images",
    "load_sequences",
    "load_text",
    "make_flow_model",
    "make_toy",
    "nearest_training",
    "push_tangent_to_theta",
    "push_theta_to_tangent",
    "reconstruct",
    "reconstruction_error",
    "save_sequences",
    "save_text",
    "smooth_dataset",
    "subspace_error_budget",
    "train",
    "tv_distance",
]
