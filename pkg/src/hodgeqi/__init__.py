"""Quasi-interpolation of Helmholtz-Hodge projections with polyharmonic matrix kernels."""

from .bounded_scheme import BoundedConfig, build_leray_qi, leray_decompose, select_H
from .hodge_oracle import dense_convolution, fft_project
from .lattice_qi import GridField, Truncation, project_curl, project_div, read_field_csv, write_field_csv
from .matrix_kernel import KernelSpec, build_kernel, check_strang_fix, kernel_hat, psi_hat

__version__ = "0.1.0"

__all__ = [
    "BoundedConfig", "GridField", "KernelSpec", "Truncation", "build_kernel", "build_leray_qi",
    "check_strang_fix", "dense_convolution", "fft_project", "kernel_hat", "leray_decompose",
    "project_curl", "project_div", "psi_hat", "read_field_csv", "select_H", "write_field_csv",
]
